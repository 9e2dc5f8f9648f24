//! Bright limit: mode 1 in a coherent state `|α⟩`, mode 2 arbitrary.
//!
//! With quadratures `X = (a₂† + a₂)/2`, `Y = i(a₂† − a₂)/2` the covariance
//! matrix is exactly `M = α²M₂ + αM₁ + M₀` for real `α`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::fock::{apply_ladder, Ladder};
use crate::multiport::{propagate_tilde_statistics, MomentTable, TildeStatistics, TwelvePortConfig};
use crate::spin::{CovarianceMatrix, StateLike};
use crate::{CVector, Error, Result, C64};

/// Single-mode normal-ordered moments `⟨a†ᵖ a^q⟩` for `p, q ≤ 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalMoments {
    m: [[C64; 3]; 3],
}

impl NormalMoments {
    /// `table[p][q] = ⟨a†ᵖ a^q⟩`; must satisfy `table[q][p] = table[p][q]*`.
    pub fn new(table: [[C64; 3]; 3]) -> Result<Self> {
        for p in 0..3 {
            for q in 0..3 {
                if (table[p][q] - table[q][p].conj()).norm() > 1e-10 {
                    return Err(Error::InvalidParameter(format!(
                        "moments ⟨a†^{p}a^{q}⟩ and ⟨a†^{q}a^{p}⟩ are not conjugate"
                    )));
                }
            }
        }
        if (table[0][0] - C64::new(1.0, 0.0)).norm() > 1e-8 {
            return Err(Error::InvalidParameter(format!("normalization {} ≠ 1", table[0][0])));
        }
        Ok(NormalMoments { m: table })
    }

    pub fn coherent(beta: C64) -> Self {
        let mut m = [[C64::new(0.0, 0.0); 3]; 3];
        for (p, row) in m.iter_mut().enumerate() {
            for (q, v) in row.iter_mut().enumerate() {
                *v = beta.conj().powu(p as u32) * beta.powu(q as u32);
            }
        }
        NormalMoments { m }
    }

    /// From a one-mode state. Only lowering operators act on the state, so
    /// the moments carry no cutoff error beyond the state's own truncation.
    pub fn from_state<S: StateLike + ?Sized>(state: &S) -> Result<Self> {
        let basis = state
            .fock_basis()
            .ok_or_else(|| Error::InvalidParameter("single-mode moments need a Fock-space state".into()))?;
        if basis.mode_count() != 1 {
            return Err(Error::WrongModeCount {
                expected: 1,
                got: basis.mode_count(),
            });
        }
        let mut m = [[C64::new(0.0, 0.0); 3]; 3];
        for (w, psi) in state.weighted_amplitudes() {
            let mut lowered: Vec<CVector> = vec![psi.clone()];
            for k in 1..3 {
                let next = apply_ladder(basis, Ladder::lower(0), &lowered[k - 1])?;
                lowered.push(next);
            }
            for p in 0..3 {
                for q in 0..3 {
                    m[p][q] += lowered[p].dotc(&lowered[q]) * w;
                }
            }
        }
        Ok(NormalMoments { m })
    }

    pub fn get(&self, p: usize, q: usize) -> C64 {
        self.m[p][q]
    }

    /// Moments after `a → e^{iφ} a`.
    pub fn rotated(&self, phi: f64) -> Self {
        let mut m = self.m;
        for (p, row) in m.iter_mut().enumerate() {
            for (q, v) in row.iter_mut().enumerate() {
                *v *= C64::from_polar(1.0, phi * (q as f64 - p as f64));
            }
        }
        NormalMoments { m }
    }
}

/// Quadrature and number moments of mode 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureMoments {
    pub mean_x: f64,
    pub mean_y: f64,
    pub mean_n: f64,
    pub var_x: f64,
    pub var_y: f64,
    /// `½⟨XY + YX⟩ − ⟨X⟩⟨Y⟩`.
    pub cov_xy: f64,
    pub var_n: f64,
    /// `f(A) = ⟨A⟩ + 2⟨n⟩⟨A⟩ − ⟨An + nA⟩`.
    pub f_x: f64,
    pub f_y: f64,
}

pub fn quadrature_moments(m: &NormalMoments) -> QuadratureMoments {
    let a = m.get(0, 1);
    let a2 = m.get(0, 2);
    let n = m.get(1, 1).re;
    let naa = m.get(1, 2);
    let (mean_x, mean_y) = (a.re, a.im);
    QuadratureMoments {
        mean_x,
        mean_y,
        mean_n: n,
        var_x: 0.25 * (2.0 * a2.re + 2.0 * n + 1.0) - mean_x * mean_x,
        var_y: 0.25 * (-2.0 * a2.re + 2.0 * n + 1.0) - mean_y * mean_y,
        cov_xy: 0.5 * a2.im - mean_x * mean_y,
        var_n: m.get(2, 2).re + n - n * n,
        f_x: 2.0 * n * mean_x - 2.0 * naa.re,
        f_y: 2.0 * n * mean_y - 2.0 * naa.im,
    }
}

/// `M₂`, `M₁`, `M₀` together with the moments they were built from.
#[derive(Debug, Clone, PartialEq)]
pub struct BrightDecomposition {
    pub m2: Matrix3<f64>,
    pub m1: Matrix3<f64>,
    pub m0: Matrix3<f64>,
    pub moments: QuadratureMoments,
}

pub fn bright_decomposition(q: &QuadratureMoments) -> BrightDecomposition {
    #[rustfmt::skip]
    let m2 = Matrix3::new(
        q.var_x, q.cov_xy, 0.0,
        q.cov_xy, q.var_y, 0.0,
        0.0, 0.0, 0.25,
    );
    #[rustfmt::skip]
    let m1 = Matrix3::new(
        0.0, 0.0, q.f_x,
        0.0, 0.0, q.f_y,
        q.f_x, q.f_y, 0.0,
    ) * 0.25;
    let m0 = Matrix3::from_diagonal(&Vector3::new(q.mean_n, q.mean_n, q.var_n)) * 0.25;
    BrightDecomposition {
        m2,
        m1,
        m0,
        moments: *q,
    }
}

/// `α²M₂ + αM₁ + M₀`.
pub fn series_covariance(alpha: f64, d: &BrightDecomposition) -> CovarianceMatrix {
    CovarianceMatrix::new(d.m2 * (alpha * alpha) + d.m1 * alpha + d.m0).expect("symmetric by construction")
}

/// `(α⟨X⟩, α⟨Y⟩, (α² − ⟨n⟩)/2)`.
pub fn mean_relations(alpha: f64, q: &QuadratureMoments) -> Vector3<f64> {
    Vector3::new(alpha * q.mean_x, alpha * q.mean_y, 0.5 * (alpha * alpha - q.mean_n))
}

/// Decomposition for complex `α`: a common phase on both modes makes the
/// oscillator real without changing any `jₖ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedBright {
    pub alpha: f64,
    /// Phase `φ` removed from both modes, `α = |α|e^{iφ}`.
    pub phase: f64,
    pub decomposition: BrightDecomposition,
}

pub fn bright_decomposition_complex(alpha: C64, m: &NormalMoments) -> RotatedBright {
    let phase = alpha.arg();
    let rotated = m.rotated(-phase);
    RotatedBright {
        alpha: alpha.norm(),
        phase,
        decomposition: bright_decomposition(&quadrature_moments(&rotated)),
    }
}

/// Leading-order twelve-port statistics as `α → ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomodyneAsymptotics {
    pub var_j1: f64,
    pub var_j2: f64,
    /// `⟨j̃₁j̃₂⟩ = (α²/2)⟨XY + YX⟩`.
    pub product_j1_j2: f64,
}

pub fn homodyne_asymptotics(alpha: f64, config: &TwelvePortConfig, q: &QuadratureMoments) -> HomodyneAsymptotics {
    let (t2, r2) = (config.t() * config.t(), config.r() * config.r());
    let noise = (1.0 + r2) / (4.0 * t2);
    let a2 = alpha * alpha;
    HomodyneAsymptotics {
        var_j1: a2 * (q.var_x + noise),
        var_j2: a2 * (q.var_y + noise),
        product_j1_j2: a2 * (q.cov_xy + q.mean_x * q.mean_y),
    }
}

/// Exact tilde statistics for `|α⟩ ⊗ ρ₂` from factorized moments.
pub fn exact_bright_tilde(alpha: f64, config: &TwelvePortConfig, m: &NormalMoments) -> TildeStatistics {
    propagate_tilde_statistics(config, &MomentTable::product_coherent(C64::new(alpha, 0.0), m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub alpha: f64,
    pub asymptotic: HomodyneAsymptotics,
    pub exact: HomodyneAsymptotics,
    /// `|exact − asymptotic| / |asymptotic|` for the two variances.
    pub relative_deviation: [f64; 2],
    /// `|exact − asymptotic|` for `⟨j̃₁j̃₂⟩`.
    pub product_deviation: f64,
}

pub fn convergence_report(alphas: &[f64], m: &NormalMoments, config: &TwelvePortConfig) -> Vec<ConvergenceRow> {
    let q = quadrature_moments(m);
    alphas
        .iter()
        .map(|&alpha| {
            let asymptotic = homodyne_asymptotics(alpha, config, &q);
            let st = exact_bright_tilde(alpha, config, m);
            let exact = HomodyneAsymptotics {
                var_j1: st.covariance[(0, 0)],
                var_j2: st.covariance[(1, 1)],
                product_j1_j2: st.second_moments[(0, 1)],
            };
            let rel = |e: f64, a: f64| (e - a).abs() / a.abs();
            ConvergenceRow {
                alpha,
                asymptotic,
                exact,
                relative_deviation: [
                    rel(exact.var_j1, asymptotic.var_j1),
                    rel(exact.var_j2, asymptotic.var_j2),
                ],
                product_deviation: (exact.product_j1_j2 - asymptotic.product_j1_j2).abs(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{basis_build, coherent_state, number_state, vacuum, StateVector};
    use crate::spin::{covariance_matrix, mean_vector, schwinger_set};

    fn one_mode(n: usize) -> NormalMoments {
        let b = basis_build(1, 6).unwrap();
        NormalMoments::from_state(&number_state(&b, &[n]).unwrap()).unwrap()
    }

    #[test]
    fn quadrature_examples() {
        let v = quadrature_moments(&one_mode(0));
        assert_eq!((v.var_x, v.var_y, v.mean_n, v.f_x), (0.25, 0.25, 0.0, 0.0));
        let one = quadrature_moments(&one_mode(1));
        assert_eq!((one.var_x, one.var_y, one.mean_n, one.var_n), (0.75, 0.75, 1.0, 0.0));
        assert_eq!((one.f_x, one.f_y), (0.0, 0.0));
        let c = quadrature_moments(&NormalMoments::coherent(C64::new(0.3, 0.0)));
        assert!((c.mean_x - 0.3).abs() < 1e-15 && c.mean_y == 0.0);
        assert!((c.var_x - 0.25).abs() < 1e-15 && (c.var_y - 0.25).abs() < 1e-15);
    }

    #[test]
    fn decomposition_examples() {
        let d = bright_decomposition(&quadrature_moments(&one_mode(0)));
        assert_eq!(d.m2, Matrix3::identity() * 0.25);
        assert_eq!(d.m1, Matrix3::zeros());
        assert_eq!(d.m0, Matrix3::zeros());
        let d = bright_decomposition(&quadrature_moments(&one_mode(1)));
        assert_eq!(d.m2, Matrix3::from_diagonal(&Vector3::new(0.75, 0.75, 0.25)));
        assert_eq!(d.m0, Matrix3::from_diagonal(&Vector3::new(0.25, 0.25, 0.0)));
        for n in 0..3 {
            assert_eq!(bright_decomposition(&quadrature_moments(&one_mode(n))).m1, Matrix3::zeros());
        }
        let s = series_covariance(1.5, &bright_decomposition(&quadrature_moments(&one_mode(0))));
        assert!((s.matrix() - Matrix3::identity() * 0.5625).amax() < 1e-15);
    }

    #[test]
    fn series_matches_two_mode_covariance() {
        let b2 = basis_build(2, 32).unwrap();
        let b1 = basis_build(1, 32).unwrap();
        let set = schwinger_set(&b2).unwrap();
        let beta = C64::new(0.3, 0.0);
        for alpha in [0.0, 0.5, 1.0, 2.0] {
            let states: Vec<(StateVector, StateVector)> = vec![
                (
                    coherent_state(&b2, &[C64::new(alpha, 0.0), C64::new(0.0, 0.0)]).unwrap(),
                    vacuum(&b1),
                ),
                (
                    coherent_state(&b2, &[C64::new(alpha, 0.0), beta]).unwrap(),
                    coherent_state(&b1, &[beta]).unwrap(),
                ),
                (
                    StateVector::from_fn_truncated(b2.clone(), |occ| {
                        if occ[1] != 1 {
                            return C64::new(0.0, 0.0);
                        }
                        let n = occ[0] as i32;
                        let fact: f64 = (1..=n).map(f64::from).product();
                        C64::new((-alpha * alpha / 2.0).exp() * alpha.powi(n) / fact.sqrt(), 0.0)
                    })
                    .unwrap(),
                    number_state(&b1, &[1]).unwrap(),
                ),
            ];
            for (joint, single) in states {
                let d = bright_decomposition(&quadrature_moments(&NormalMoments::from_state(&single).unwrap()));
                let direct = covariance_matrix(&set, &joint).unwrap();
                let tol = 10.0 * joint.truncation_weight() + 1e-10;
                let diff = series_covariance(alpha, &d).max_abs_diff(&direct);
                assert!(diff < tol, "α = {alpha}: {diff:e}");
                let mean = mean_vector(&set, &joint).unwrap();
                assert!((mean_relations(alpha, &d.moments) - mean).amax() < tol);
            }
        }
    }

    #[test]
    fn mean_relation_examples() {
        let v = quadrature_moments(&one_mode(0));
        assert_eq!(mean_relations(2.0, &v), Vector3::new(0.0, 0.0, 2.0));
        let c = quadrature_moments(&NormalMoments::coherent(C64::new(0.3, 0.0)));
        let m = mean_relations(1.0, &c);
        assert!((m - Vector3::new(0.3, 0.0, 0.455)).amax() < 1e-15);
    }

    #[test]
    fn complex_alpha_rotates_real() {
        let beta = C64::new(0.2, -0.5);
        let alpha = C64::from_polar(1.3, 0.7);
        let r = bright_decomposition_complex(alpha, &NormalMoments::coherent(beta));
        let rotated = beta * C64::from_polar(1.0, -0.7);
        assert!((r.decomposition.moments.mean_x - rotated.re).abs() < 1e-14);
        assert!((r.decomposition.moments.mean_y - rotated.im).abs() < 1e-14);
        assert!((r.alpha - 1.3).abs() < 1e-15);
    }

    #[test]
    fn asymptotics_and_convergence() {
        let cfg = TwelvePortConfig::balanced();
        let v = quadrature_moments(&one_mode(0));
        assert!((homodyne_asymptotics(1.0, &cfg, &v).var_j1 - 0.75).abs() < 1e-15);
        let rows = convergence_report(&[1.0, 2.0, 4.0, 8.0], &one_mode(1), &cfg);
        for w in rows.windows(2) {
            for k in 0..2 {
                assert!(w[1].relative_deviation[k] < w[0].relative_deviation[k]);
            }
        }
        let b = basis_build(1, 30).unwrap();
        let squeezedish = StateVector::from_amplitudes(
            b.clone(),
            CVector::from_fn(b.dimension(), |i, _| match i {
                0 => C64::new(0.8, 0.0),
                2 => C64::new(0.0, 0.6),
                _ => C64::new(0.0, 0.0),
            }),
        )
        .unwrap();
        let m = NormalMoments::from_state(&squeezedish).unwrap();
        for row in convergence_report(&[0.5, 3.0, 10.0], &m, &cfg) {
            assert!(row.product_deviation < 1e-10 * (1.0 + row.alpha * row.alpha));
        }
    }
}
