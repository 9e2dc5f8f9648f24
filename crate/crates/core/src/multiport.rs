//! Linear multiport networks: the twelve-port simultaneous measurement of
//! `(j₁, j₂, j₃)`, its classical and quantum statistics, full-state
//! simulation through a two-mode factorization, and the three-copy
//! polarimetric network.
//!
//! Twelve-port input order is `(a₁, a₂, a₁₀, a₂₀, a′₁₀, a′₂₀)` (two signal
//! modes then four vacuum ancillas) and output order is `(a₃, …, a₈)`:
//!
//! ```text
//! a₃ = ½( t a₁ −  t a₂ +  a₁₀ − a₂₀ +  r a′₁₀ + r a′₂₀)
//! a₄ = ½( t a₁ +  t a₂ +  a₁₀ + a₂₀ +  r a′₁₀ − r a′₂₀)
//! a₅ = ½(−it a₁ + t a₂ + i a₁₀ − a₂₀ − ir a′₁₀ − r a′₂₀)
//! a₆ = ½(−it a₁ − t a₂ + i a₁₀ + a₂₀ − ir a′₁₀ + r a′₂₀)
//! a₇ = r a₂ + t a′₂₀
//! a₈ = −r a₁ + t a′₁₀
//! ```
//!
//! with measured observables `j̃₁ = (n₄ − n₃)/t²`, `j̃₂ = (n₆ − n₅)/t²`,
//! `j̃₃ = (n₈ − n₇)/(2r²)`.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{Matrix2, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::bright::NormalMoments;
use crate::fock::{apply_ladder, basis_build, FockBasis, Ladder, LinearOperator, StateVector};
use crate::measure::{LinearCombination, OutcomeDistribution, SchemeMetadata};
use crate::protocol::detector_transform;
use crate::spin::{CovarianceMatrix, StateLike};
use crate::su2::{self, ModeUnitary2, Sign};
use crate::{linalg, CMatrix, CVector, Error, Result, C64};

const NETWORK_UNITARY_TOL: f64 = 1e-12;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `N×N` unitary mapping input to output mode amplitudes, `b = S a`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkUnitary {
    matrix: CMatrix,
    signal_modes: Vec<usize>,
}

impl NetworkUnitary {
    pub fn new(matrix: CMatrix, signal_modes: Vec<usize>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::LengthMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let res = linalg::unitarity_residual(&matrix);
        if !(res < NETWORK_UNITARY_TOL) {
            return Err(Error::NotUnitary(res));
        }
        if let Some(&m) = signal_modes.iter().find(|&&m| m >= matrix.nrows()) {
            return Err(Error::InvalidMode {
                mode: m,
                mode_count: matrix.nrows(),
            });
        }
        Ok(NetworkUnitary { matrix, signal_modes })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn mode_count(&self) -> usize {
        self.matrix.nrows()
    }

    /// Inputs carrying the signal; all others are vacuum.
    pub fn signal_modes(&self) -> &[usize] {
        &self.signal_modes
    }

    pub fn row_major(&self) -> Vec<C64> {
        let n = self.mode_count();
        (0..n * n).map(|i| self.matrix[(i / n, i % n)]).collect()
    }

    pub fn unitarity_residual(&self) -> f64 {
        linalg::unitarity_residual(&self.matrix)
    }
}

/// Transmission and reflection of the two unbalanced beam splitters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwelvePortConfig {
    t: f64,
    r: f64,
}

impl TwelvePortConfig {
    pub fn new(t: f64, r: f64) -> Result<Self> {
        let bad = |why: &str| Err(Error::InvalidParameter(format!("t = {t}, r = {r}: {why}")));
        if !(t > 0.0 && t < 1.0 && r > 0.0 && r < 1.0) {
            return bad("t and r must lie in (0, 1)");
        }
        if (t * t + r * r - 1.0).abs() >= 1e-12 {
            return bad("t² + r² must equal 1");
        }
        if (t - r).abs() <= 1e-9 {
            return bad("t must differ from r");
        }
        Ok(TwelvePortConfig { t, r })
    }

    /// From the intensity transmission `t²`.
    pub fn from_t2(t2: f64) -> Result<Self> {
        if !(t2 > 0.0 && t2 < 1.0) {
            return Err(Error::InvalidParameter(format!("t² = {t2} outside (0, 1)")));
        }
        Self::new(t2.sqrt(), (1.0 - t2).sqrt())
    }

    /// `t² = 2/3`, where all three noise offsets equal `⟨j₀⟩`.
    pub fn balanced() -> Self {
        Self::from_t2(2.0 / 3.0).expect("valid")
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// `[(1+r²)/(2t²), (1+r²)/(2t²), t²/(2r²)]`.
    pub fn noise_coefficients(&self) -> [f64; 3] {
        let (t2, r2) = (self.t * self.t, self.r * self.r);
        let a = (1.0 + r2) / (2.0 * t2);
        [a, a, t2 / (2.0 * r2)]
    }

    /// `j̃₁, j̃₂, j̃₃` over output detectors `(a₃, …, a₈)`.
    pub fn observables(&self) -> [LinearCombination; 3] {
        let (t2, r2) = (self.t * self.t, self.r * self.r);
        [
            LinearCombination::difference("j1", 1, 0, 1.0 / t2),
            LinearCombination::difference("j2", 3, 2, 1.0 / t2),
            LinearCombination::difference("j3", 5, 4, 1.0 / (2.0 * r2)),
        ]
    }

    pub fn scheme_metadata(&self) -> SchemeMetadata {
        SchemeMetadata {
            scheme: "twelve-port".into(),
            detectors: (3..=8).map(|i| format!("n{i}")).collect(),
            observables: self.observables().to_vec(),
            total_number: Some(LinearCombination::total("j0", 6, 0.5)),
            noise_coefficients: Some(self.noise_coefficients().to_vec()),
            t2: Some(self.t * self.t),
            ..Default::default()
        }
    }
}

pub fn twelve_port_matrix(config: &TwelvePortConfig) -> NetworkUnitary {
    let (t, r) = (config.t, config.r);
    let h = 0.5;
    let z = c(0., 0.);
    #[rustfmt::skip]
    let rows = [
        [c(h * t, 0.), c(-h * t, 0.), c(h, 0.), c(-h, 0.), c(h * r, 0.), c(h * r, 0.)],
        [c(h * t, 0.), c(h * t, 0.), c(h, 0.), c(h, 0.), c(h * r, 0.), c(-h * r, 0.)],
        [c(0., -h * t), c(h * t, 0.), c(0., h), c(-h, 0.), c(0., -h * r), c(-h * r, 0.)],
        [c(0., -h * t), c(-h * t, 0.), c(0., h), c(h, 0.), c(0., -h * r), c(h * r, 0.)],
        [z, c(r, 0.), z, z, z, c(t, 0.)],
        [c(-r, 0.), z, z, z, c(t, 0.), z],
    ];
    let m = CMatrix::from_fn(6, 6, |i, j| rows[i][j]);
    NetworkUnitary::new(m, vec![0, 1]).expect("twelve-port matrix is unitary")
}

/// Output intensities `I₃ … I₈` for classical amplitudes with vacuum ancillas.
pub fn classical_outputs(config: &TwelvePortConfig, a1: C64, a2: C64) -> [f64; 6] {
    let s = twelve_port_matrix(config);
    let mut out = [0.0; 6];
    for (j, o) in out.iter_mut().enumerate() {
        *o = (s.matrix[(j, 0)] * a1 + s.matrix[(j, 1)] * a2).norm_sqr();
    }
    out
}

/// `(j₀, j₁, j₂, j₃)` from the six output intensities.
pub fn classical_stokes(intensities: &[f64; 6], config: &TwelvePortConfig) -> [f64; 4] {
    let i = intensities;
    let (t2, r2) = (config.t * config.t, config.r * config.r);
    [
        0.5 * i.iter().sum::<f64>(),
        (i[1] - i[0]) / t2,
        (i[3] - i[2]) / t2,
        (i[5] - i[4]) / (2.0 * r2),
    ]
}

/// Normal-ordered moments of two signal modes: `⟨aₖ†aₗ⟩` and
/// `⟨aₖ†aₚ†aₗa_q⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub second: Matrix2<C64>,
    /// Indexed `[k][p][l][q]`.
    pub fourth: [[[[C64; 2]; 2]; 2]; 2],
}

impl MomentTable {
    pub fn zeros() -> Self {
        MomentTable {
            second: Matrix2::zeros(),
            fourth: [[[[c(0., 0.); 2]; 2]; 2]; 2],
        }
    }

    /// Moments of a two-mode state (pure or ensemble). Every moment is
    /// evaluated as an overlap of lowered vectors, so truncation adds no error.
    pub fn from_state<S: StateLike + ?Sized>(state: &S) -> Result<Self> {
        let basis = state
            .fock_basis()
            .ok_or_else(|| Error::InvalidParameter("moment table needs a Fock-space state".into()))?;
        if basis.mode_count() != 2 {
            return Err(Error::WrongModeCount {
                expected: 2,
                got: basis.mode_count(),
            });
        }
        let mut t = MomentTable::zeros();
        for (w, psi) in state.weighted_amplitudes() {
            let once: Vec<CVector> = (0..2)
                .map(|k| apply_ladder(basis, Ladder::lower(k), psi))
                .collect::<Result<_>>()?;
            // twice[l][q] = a_l a_q ψ
            let mut twice = vec![vec![CVector::zeros(0); 2]; 2];
            for l in 0..2 {
                for q in 0..2 {
                    twice[l][q] = apply_ladder(basis, Ladder::lower(l), &once[q])?;
                }
            }
            for k in 0..2 {
                for l in 0..2 {
                    t.second[(k, l)] += once[k].dotc(&once[l]) * w;
                }
            }
            for k in 0..2 {
                for p in 0..2 {
                    for l in 0..2 {
                        for q in 0..2 {
                            // ⟨a_k† a_p† a_l a_q⟩ = (a_p a_k ψ)† (a_l a_q ψ)
                            t.fourth[k][p][l][q] += twice[p][k].dotc(&twice[l][q]) * w;
                        }
                    }
                }
            }
        }
        Ok(t)
    }

    /// Mode 1 in the coherent state `α`, mode 2 independent with the given
    /// single-mode normal-ordered moments.
    pub fn product_coherent(alpha: C64, mode2: &NormalMoments) -> Self {
        let factor = |daggers: &[usize], lowers: &[usize]| {
            let d1 = daggers.iter().filter(|&&m| m == 0).count();
            let u1 = lowers.iter().filter(|&&m| m == 0).count();
            let d2 = daggers.len() - d1;
            let u2 = lowers.len() - u1;
            alpha.conj().powu(d1 as u32) * alpha.powu(u1 as u32) * mode2.get(d2, u2)
        };
        let mut t = MomentTable::zeros();
        for k in 0..2 {
            for l in 0..2 {
                t.second[(k, l)] = factor(&[k], &[l]);
                for p in 0..2 {
                    for q in 0..2 {
                        t.fourth[k][p][l][q] = factor(&[k, p], &[l, q]);
                    }
                }
            }
        }
        t
    }

    /// Largest violation of Hermiticity, positivity and exchange symmetry.
    pub fn symmetry_residual(&self) -> f64 {
        let mut worst = (self.second - self.second.adjoint()).iter().fold(0.0_f64, |a, z| a.max(z.norm()));
        let eig = self.second.symmetric_eigenvalues();
        worst = worst.max((-eig.min()).max(0.0) - 1e-10).max(0.0).max(worst);
        let f = &self.fourth;
        for k in 0..2 {
            for p in 0..2 {
                for l in 0..2 {
                    for q in 0..2 {
                        let v = f[k][p][l][q];
                        worst = worst
                            .max((v - f[p][k][l][q]).norm())
                            .max((v - f[k][p][q][l]).norm())
                            .max((v - f[q][l][p][k].conj()).norm());
                    }
                }
            }
        }
        worst
    }

    /// `⟨j₀⟩ = (⟨n₁⟩ + ⟨n₂⟩)/2`.
    pub fn j0(&self) -> f64 {
        0.5 * (self.second[(0, 0)].re + self.second[(1, 1)].re)
    }
}

/// First and second photon-number moments at every output.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputMoments {
    /// `⟨nⱼ⟩`.
    pub means: Vec<f64>,
    /// `⟨nⱼ nₘ⟩`.
    pub products: nalgebra::DMatrix<f64>,
}

/// Output moments from signal-mode moments, ancillas in vacuum:
/// `⟨bⱼ†bₘ⟩ = Σ S*ⱼₖ Sₘₗ ⟨aₖ†aₗ⟩`, the fourth-order analogue, and
/// `⟨nⱼnₘ⟩ = ⟨bⱼ†bₘ†bₘbⱼ⟩ + δⱼₘ⟨nⱼ⟩`.
pub fn propagate_output_moments(network: &NetworkUnitary, table: &MomentTable) -> Result<OutputMoments> {
    let sig = network.signal_modes();
    if sig.len() != 2 {
        return Err(Error::WrongModeCount {
            expected: 2,
            got: sig.len(),
        });
    }
    let n = network.mode_count();
    // amplitude of signal input k in output j
    let s = |j: usize, k: usize| network.matrix[(j, sig[k])];
    let means: Vec<f64> = (0..n)
        .map(|j| {
            let mut acc = c(0., 0.);
            for k in 0..2 {
                for l in 0..2 {
                    acc += s(j, k).conj() * s(j, l) * table.second[(k, l)];
                }
            }
            acc.re
        })
        .collect();
    let mut products = nalgebra::DMatrix::zeros(n, n);
    for j in 0..n {
        for m in j..n {
            let mut acc = c(0., 0.);
            for k in 0..2 {
                for p in 0..2 {
                    let left = s(j, k).conj() * s(m, p).conj();
                    for l in 0..2 {
                        for q in 0..2 {
                            acc += left * s(m, l) * s(j, q) * table.fourth[k][p][l][q];
                        }
                    }
                }
            }
            let mut v = acc.re;
            if j == m {
                v += means[j];
            }
            products[(j, m)] = v;
            products[(m, j)] = v;
        }
    }
    Ok(OutputMoments { means, products })
}

/// Statistics of the measured `j̃` observables.
#[derive(Debug, Clone, PartialEq)]
pub struct TildeStatistics {
    pub config: TwelvePortConfig,
    pub means: Vector3<f64>,
    /// `⟨j̃ₖ j̃ₗ⟩`.
    pub second_moments: Matrix3<f64>,
    /// `M̃`, the covariance of `j̃`.
    pub covariance: Matrix3<f64>,
    pub j0: f64,
    /// `⟨nⱼ⟩` at the six outputs.
    pub output_means: Vec<f64>,
}

fn tilde_from_outputs(config: &TwelvePortConfig, out: &OutputMoments, j0: f64) -> TildeStatistics {
    let obs = config.observables();
    let mut means = Vector3::zeros();
    let mut second = Matrix3::zeros();
    for a in 0..3 {
        means[a] = obs[a].terms.iter().map(|&(j, w)| w * out.means[j]).sum();
        for b in 0..3 {
            let mut acc = 0.0;
            for &(j, wj) in &obs[a].terms {
                for &(m, wm) in &obs[b].terms {
                    acc += wj * wm * out.products[(j, m)];
                }
            }
            second[(a, b)] = acc;
        }
    }
    let covariance = second - means * means.transpose();
    TildeStatistics {
        config: *config,
        means,
        second_moments: second,
        covariance: (covariance + covariance.transpose()) * 0.5,
        j0,
        output_means: out.means.clone(),
    }
}

/// Tilde statistics by moment propagation through the network.
pub fn propagate_tilde_statistics(config: &TwelvePortConfig, table: &MomentTable) -> TildeStatistics {
    let out = propagate_output_moments(&twelve_port_matrix(config), table).expect("two signal modes");
    tilde_from_outputs(config, &out, table.j0())
}

/// `M = M̃ − diag(cₖ)⟨j₀⟩` with the twelve-port noise coefficients.
pub fn corrected_covariance(stats: &TildeStatistics) -> CovarianceMatrix {
    let coeff = stats.config.noise_coefficients();
    let mut m = stats.covariance;
    for k in 0..3 {
        m[(k, k)] -= coeff[k] * stats.j0;
    }
    CovarianceMatrix::new(m).expect("symmetric")
}

/// One factor of a factorized network.
#[derive(Debug, Clone, PartialEq)]
pub enum NetworkFactor {
    /// 2×2 unitary on amplitudes of modes `(p, q)`.
    Pair { modes: (usize, usize), unitary: ModeUnitary2 },
    /// `aₖ → e^{iφₖ} aₖ`.
    Phases(Vec<f64>),
}

/// `S` as a product of factors, written left to right.
#[derive(Debug, Clone, PartialEq)]
pub struct ReckDecomposition {
    pub mode_count: usize,
    pub factors: Vec<NetworkFactor>,
}

impl ReckDecomposition {
    /// Multiply the factors back into an `N×N` matrix.
    pub fn product(&self) -> CMatrix {
        let n = self.mode_count;
        let mut acc = CMatrix::identity(n, n);
        for f in &self.factors {
            acc *= embed_factor(f, n);
        }
        acc
    }
}

fn embed_factor(f: &NetworkFactor, n: usize) -> CMatrix {
    let mut m = CMatrix::identity(n, n);
    match f {
        NetworkFactor::Pair { modes: (p, q), unitary } => {
            let u = unitary.matrix();
            m[(*p, *p)] = u[(0, 0)];
            m[(*p, *q)] = u[(0, 1)];
            m[(*q, *p)] = u[(1, 0)];
            m[(*q, *q)] = u[(1, 1)];
        }
        NetworkFactor::Phases(phi) => {
            for (k, p) in phi.iter().enumerate() {
                m[(k, k)] = C64::from_polar(1.0, *p);
            }
        }
    }
    m
}

/// Givens elimination on adjacent rows: `G_K ⋯ G₁ S = D`, hence
/// `S = G₁† ⋯ G_K† D`.
pub fn reck_decompose(s: &CMatrix) -> Result<ReckDecomposition> {
    let n = s.nrows();
    let res = linalg::unitarity_residual(s);
    if s.ncols() != n || !(res < 1e-10) {
        return Err(Error::NotUnitary(res));
    }
    let mut a = s.clone();
    let mut factors = Vec::new();
    for col in 0..n.saturating_sub(1) {
        for row in (col + 1..n).rev() {
            let (x, y) = (a[(row - 1, col)], a[(row, col)]);
            let rho = (x.norm_sqr() + y.norm_sqr()).sqrt();
            if y.norm() == 0.0 || rho == 0.0 {
                continue;
            }
            let g = Matrix2::new(x.conj() / rho, y.conj() / rho, -y / rho, x / rho);
            for k in 0..n {
                let (u, v) = (a[(row - 1, k)], a[(row, k)]);
                a[(row - 1, k)] = g[(0, 0)] * u + g[(0, 1)] * v;
                a[(row, k)] = g[(1, 0)] * u + g[(1, 1)] * v;
            }
            factors.push(NetworkFactor::Pair {
                modes: (row - 1, row),
                unitary: ModeUnitary2::new(g.adjoint())?,
            });
        }
    }
    factors.push(NetworkFactor::Phases((0..n).map(|k| a[(k, k)].arg()).collect()));
    let out = ReckDecomposition { mode_count: n, factors };
    let err = linalg::max_abs(&(out.product() - s));
    if err > 1e-10 {
        return Err(Error::Invariant(format!("network factorization residual {err:e}")));
    }
    Ok(out)
}

/// Two-mode lift blocks reused across every mode pair of a larger basis.
struct PairLift {
    basis2: Arc<FockBasis>,
    lift: CMatrix,
}

impl PairLift {
    fn new(unitary: &ModeUnitary2, n_max: usize) -> Result<Self> {
        let basis2 = basis_build(2, n_max)?;
        let lift = su2::fock_lift(unitary, &basis2, (0, 1))?.into_matrix();
        Ok(PairLift { basis2, lift })
    }

    fn apply(&self, basis: &FockBasis, (p, q): (usize, usize), amps: &CVector) -> CVector {
        let mut out = CVector::zeros(amps.len());
        let mut occ = Vec::with_capacity(basis.mode_count());
        for (i, a) in amps.iter().enumerate() {
            if *a == c(0., 0.) {
                continue;
            }
            let src = basis.occupations(i);
            let total = src[p] + src[q];
            let col = self.basis2.index_of(&[src[p], src[q]]).expect("within cutoff");
            occ.clear();
            occ.extend_from_slice(src);
            for m in 0..=total {
                occ[p] = total - m;
                occ[q] = m;
                let row = self.basis2.index_of(&[total - m, m]).expect("within cutoff");
                let coeff = self.lift[(row, col)];
                if coeff != c(0., 0.) {
                    out[basis.index_of(&occ).expect("same total")] += coeff * a;
                }
            }
        }
        out
    }
}

fn phase_factor(basis: &FockBasis, phases: &[f64], i: usize) -> C64 {
    let arg: f64 = basis
        .occupations(i)
        .iter()
        .zip(phases)
        .map(|(&n, p)| f64::from(n) * p)
        .sum();
    C64::from_polar(1.0, arg)
}

/// Apply the Fock-space unitary `Û` with `Û†aÛ = S a` to amplitudes,
/// one factor at a time.
pub fn apply_network(decomp: &ReckDecomposition, basis: &FockBasis, amps: &CVector) -> Result<CVector> {
    if basis.mode_count() != decomp.mode_count {
        return Err(Error::WrongModeCount {
            expected: decomp.mode_count,
            got: basis.mode_count(),
        });
    }
    let mut v = amps.clone();
    let mut cache: HashMap<usize, PairLift> = HashMap::new();
    // the rightmost factor acts first
    for (idx, f) in decomp.factors.iter().enumerate().rev() {
        match f {
            NetworkFactor::Phases(phi) => {
                for (i, a) in v.iter_mut().enumerate() {
                    *a *= phase_factor(basis, phi, i);
                }
            }
            NetworkFactor::Pair { modes, unitary } => {
                let lift = match cache.entry(idx) {
                    std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                    std::collections::hash_map::Entry::Vacant(e) => e.insert(PairLift::new(unitary, basis.n_max())?),
                };
                v = lift.apply(basis, *modes, &v);
            }
        }
    }
    Ok(v)
}

/// Dense Fock-space operator `Û` with `Û† aₖ Û = Σ Sₖₗ aₗ`.
pub fn fock_lift_network(s: &NetworkUnitary, n_max: usize) -> Result<LinearOperator> {
    let basis = basis_build(s.mode_count(), n_max)?;
    basis.check_operator_size()?;
    let decomp = reck_decompose(s.matrix())?;
    let mut acc = CMatrix::identity(basis.dimension(), basis.dimension());
    for f in &decomp.factors {
        let m = match f {
            NetworkFactor::Phases(phi) => CMatrix::from_diagonal(&CVector::from_iterator(
                basis.dimension(),
                (0..basis.dimension()).map(|i| phase_factor(&basis, phi, i)),
            )),
            NetworkFactor::Pair { modes, unitary } => su2::fock_lift(unitary, &basis, *modes)?.into_matrix(),
        };
        acc *= m;
    }
    LinearOperator::new(basis, acc)
}

/// Output state(s) of the network: signal-mode input embedded with vacuum
/// ancillas on an `N`-mode basis at the input cutoff, then transformed.
pub fn network_output_states<S: StateLike + ?Sized>(
    network: &NetworkUnitary,
    state: &S,
) -> Result<Vec<(f64, StateVector)>> {
    let basis_in = state
        .fock_basis()
        .ok_or_else(|| Error::InvalidParameter("network input must be a Fock-space state".into()))?;
    if basis_in.mode_count() != 2 || network.signal_modes() != [0, 1] {
        return Err(Error::WrongModeCount {
            expected: 2,
            got: basis_in.mode_count(),
        });
    }
    let basis = basis_build(network.mode_count(), basis_in.n_max())?;
    let decomp = reck_decompose(network.matrix())?;
    state
        .weighted_amplitudes()
        .into_iter()
        .map(|(w, psi)| {
            let input = StateVector::new(basis_in.clone(), psi.clone(), state.truncation_weight())?.embed(basis.clone())?;
            let out = apply_network(&decomp, &basis, input.amplitudes())?;
            Ok((w, StateVector::new(basis.clone(), out, state.truncation_weight())?))
        })
        .collect()
}

/// Joint photon-count distribution at the network outputs.
pub fn network_output_distribution<S: StateLike + ?Sized>(
    network: &NetworkUnitary,
    state: &S,
) -> Result<OutcomeDistribution> {
    let outs = network_output_states(network, state)?;
    let basis = outs[0].1.basis().clone();
    let mut probs = vec![0.0; basis.dimension()];
    for (w, s) in &outs {
        for (p, a) in probs.iter_mut().zip(s.amplitudes().iter()) {
            *p += w * a.norm_sqr();
        }
    }
    OutcomeDistribution::from_probabilities(basis, probs)
}

/// Output number moments computed from the output distribution.
pub fn output_moments_from_distribution(dist: &OutcomeDistribution) -> OutputMoments {
    let basis = dist.basis();
    let n = basis.mode_count();
    let mut means = vec![0.0; n];
    let mut products = nalgebra::DMatrix::zeros(n, n);
    for (i, p) in dist.probabilities().iter().enumerate() {
        if *p == 0.0 {
            continue;
        }
        let occ = basis.occupations(i);
        for j in 0..n {
            let nj = f64::from(occ[j]);
            means[j] += p * nj;
            for m in 0..n {
                products[(j, m)] += p * nj * f64::from(occ[m]);
            }
        }
    }
    OutputMoments { means, products }
}

/// Tilde statistics from the full six-mode output state.
pub fn full_state_tilde_statistics<S: StateLike + ?Sized>(config: &TwelvePortConfig, state: &S) -> Result<TildeStatistics> {
    let dist = network_output_distribution(&twelve_port_matrix(config), state)?;
    let out = output_moments_from_distribution(&dist);
    let j0 = 0.5 * out.means.iter().sum::<f64>();
    Ok(tilde_from_outputs(config, &out, j0))
}

/// Detector pair of one copy in the three-copy network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorPair {
    /// Which input component the normalized difference estimates.
    pub estimates: usize,
    pub plus: usize,
    pub minus: usize,
    /// `estimate = scale · (n_plus − n_minus)`.
    pub scale: f64,
}

impl DetectorPair {
    pub fn observable(&self) -> LinearCombination {
        LinearCombination::difference(format!("j{}", self.estimates), self.plus, self.minus, self.scale)
    }
}

/// Three attenuated copies of the signal, each read out by a `j₁`
/// polarimeter (the second and third behind `U_{2,2}` and `U_{3,2}`).
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeCopyNetwork {
    pub network: NetworkUnitary,
    pub splittings: (f64, f64),
    pub detectors: Vec<DetectorPair>,
}

impl ThreeCopyNetwork {
    pub fn scheme_metadata(&self) -> SchemeMetadata {
        SchemeMetadata {
            scheme: "three-copy".into(),
            detectors: ["A+", "A-", "B+", "B-", "C+", "C-"].map(String::from).to_vec(),
            observables: self.detectors.iter().map(DetectorPair::observable).collect(),
            total_number: Some(LinearCombination::total("j0", 6, 0.5)),
            ..Default::default()
        }
    }
}

/// Default splittings giving three equal copies.
pub const THREE_COPY_DEFAULT_SPLITTINGS: (f64, f64) = (1.0 / 3.0, 0.5);

/// Inputs `(a₁, a₂, v₁, v₂, w₁, w₂)`, outputs `(A₊, A₋, B₊, B₋, C₊, C₋)`.
/// The first splitter keeps intensity fraction `s₁` in copy A, the second
/// keeps fraction `s₂` of the rest in copy B.
pub fn three_copy_network(s1: f64, s2: f64) -> Result<ThreeCopyNetwork> {
    for s in [s1, s2] {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidParameter(format!("splitting ratio {s} outside (0, 1)")));
        }
    }
    // polarization-independent splitters: [[√s, √(1−s)], [√(1−s), −√s]]
    let splitter = |s: f64| (s.sqrt(), (1.0 - s).sqrt());
    let (a1, b1) = splitter(s1);
    let (a2, b2) = splitter(s2);
    let mut bs1 = CMatrix::zeros(6, 6);
    let mut bs2 = CMatrix::zeros(6, 6);
    for pol in 0..2 {
        // bs1 mixes signal (pol) with v (2 + pol): outputs copy A (pol), rest (2 + pol)
        bs1[(pol, pol)] = c(a1, 0.);
        bs1[(pol, 2 + pol)] = c(b1, 0.);
        bs1[(2 + pol, pol)] = c(b1, 0.);
        bs1[(2 + pol, 2 + pol)] = c(-a1, 0.);
        bs1[(4 + pol, 4 + pol)] = c(1., 0.);
        // bs2 mixes rest (2 + pol) with w (4 + pol): outputs copy B, copy C
        bs2[(pol, pol)] = c(1., 0.);
        bs2[(2 + pol, 2 + pol)] = c(a2, 0.);
        bs2[(2 + pol, 4 + pol)] = c(b2, 0.);
        bs2[(4 + pol, 2 + pol)] = c(b2, 0.);
        bs2[(4 + pol, 4 + pol)] = c(-a2, 0.);
    }
    let detector = detector_transform(1)?;
    let elements = [
        ModeUnitary2::identity(),
        su2::standard_element(2, Sign::Plus, 2)?.into(),
        su2::standard_element(3, Sign::Plus, 2)?.into(),
    ];
    let mut local = CMatrix::zeros(6, 6);
    let mut detectors = Vec::new();
    let weights = [s1, (1.0 - s1) * s2, (1.0 - s1) * (1.0 - s2)];
    for (copy, e) in elements.iter().enumerate() {
        let w = detector.compose(e);
        for r in 0..2 {
            for col in 0..2 {
                local[(2 * copy + r, 2 * copy + col)] = w.matrix()[(r, col)];
            }
        }
        // (n₊ − n₋)/2 on the copy reads out row 1 of R_e applied to the copy's j
        let row = su2::rotation_of(e).matrix().row(0).into_owned();
        let k = row.transpose().iamax();
        let sign = row[k].signum();
        detectors.push(DetectorPair {
            estimates: k + 1,
            plus: 2 * copy,
            minus: 2 * copy + 1,
            scale: sign / (2.0 * weights[copy]),
        });
    }
    let network = NetworkUnitary::new(local * bs2 * bs1, vec![0, 1])?;
    Ok(ThreeCopyNetwork {
        network,
        splittings: (s1, s2),
        detectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, number_state, random_state, vacuum};
    use crate::spin::{covariance_matrix, mean_vector, schwinger_set};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn twelve_port_rows() {
        let cfg = TwelvePortConfig::from_t2(2.0 / 3.0).unwrap();
        let s = twelve_port_matrix(&cfg);
        assert!(s.unitarity_residual() < 1e-15);
        for j in 0..6 {
            let norm: f64 = s.matrix().row(j).iter().map(|z| z.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-15);
        }
        let row7: Vec<C64> = s.matrix().row(4).iter().copied().collect();
        let expect = [0.0, (1.0f64 / 3.0).sqrt(), 0.0, 0.0, 0.0, (2.0f64 / 3.0).sqrt()];
        for (a, b) in row7.iter().zip(expect) {
            assert!((a - c(b, 0.)).norm() < 1e-15);
        }
        assert!(TwelvePortConfig::new(1.0, 0.0).is_err());
        assert!(TwelvePortConfig::from_t2(0.5).is_err());
        assert!(TwelvePortConfig::new(0.8, 0.5).is_err());
    }

    #[test]
    fn balanced_offsets_coincide() {
        let cfg = TwelvePortConfig::balanced();
        for v in cfg.noise_coefficients() {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn classical_path() {
        let cfg = TwelvePortConfig::from_t2(0.3).unwrap();
        let st = classical_stokes(&classical_outputs(&cfg, c(1., 0.), c(0., 0.)), &cfg);
        let expect = [0.5, 0.0, 0.0, 0.5];
        for (a, b) in st.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let zero = classical_stokes(&classical_outputs(&cfg, c(0., 0.), c(0., 0.)), &cfg);
        assert_eq!(zero, [0.0; 4]);
        let (a1, a2) = (c(0.3, -0.8), c(1.1, 0.4));
        let st = classical_stokes(&classical_outputs(&cfg, a1, a2), &cfg);
        let j1 = (a1.conj() * a2).re;
        let j2 = (a1.conj() * a2).im;
        let j3 = 0.5 * (a1.norm_sqr() - a2.norm_sqr());
        let j0 = 0.5 * (a1.norm_sqr() + a2.norm_sqr());
        for (a, b) in st.iter().zip([j0, j1, j2, j3]) {
            assert!((a - b).abs() < 1e-14, "{st:?}");
        }
    }

    #[test]
    fn moment_table_examples() {
        let b = basis_build(2, 6).unwrap();
        let t = MomentTable::from_state(&vacuum(&b)).unwrap();
        assert_eq!(t, MomentTable::zeros());
        let t = MomentTable::from_state(&number_state(&b, &[1, 0]).unwrap()).unwrap();
        assert_eq!(t.second[(0, 0)], c(1., 0.));
        assert!(t.fourth.iter().flatten().flatten().flatten().all(|z| *z == c(0., 0.)));
        let b = basis_build(2, 30).unwrap();
        let alpha = 1.2;
        let s = coherent_state(&b, &[c(alpha, 0.), c(0., 0.)]).unwrap();
        let t = MomentTable::from_state(&s).unwrap();
        assert!((t.fourth[0][0][0][0].re - alpha.powi(4)).abs() < 1e-10);
        assert!(t.symmetry_residual() < 1e-12);
    }

    #[test]
    fn product_coherent_table_matches_state() {
        let b = basis_build(2, 30).unwrap();
        let (alpha, beta) = (c(0.9, -0.4), c(0.3, 0.2));
        let s = coherent_state(&b, &[alpha, beta]).unwrap();
        let t = MomentTable::from_state(&s).unwrap();
        let f = MomentTable::product_coherent(alpha, &NormalMoments::coherent(beta));
        assert!((t.second - f.second).iter().all(|z| z.norm() < 1e-10));
        for (x, y) in t.fourth.iter().flatten().flatten().flatten().zip(f.fourth.iter().flatten().flatten().flatten()) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn moments_match_direct_covariance() {
        let b = basis_build(2, 5).unwrap();
        let set = schwinger_set(&b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for t2 in [2.0 / 3.0, 0.3, 0.85] {
            let cfg = TwelvePortConfig::from_t2(t2).unwrap();
            let s = random_state(&b, &mut rng);
            let stats = propagate_tilde_statistics(&cfg, &MomentTable::from_state(&s).unwrap());
            let mean = mean_vector(&set, &s).unwrap();
            assert!((stats.means - mean).amax() < 1e-10);
            let m = covariance_matrix(&set, &s).unwrap();
            assert!(corrected_covariance(&stats).max_abs_diff(&m) < 1e-10);
            let coeff = cfg.noise_coefficients();
            for k in 0..3 {
                let excess = stats.covariance[(k, k)] - m.matrix()[(k, k)];
                assert!((excess - coeff[k] * stats.j0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn coherent_tilde_diagonal() {
        let b = basis_build(2, 40).unwrap();
        let alpha: f64 = 1.5;
        let s = coherent_state(&b, &[c(alpha, 0.), c(0., 0.)]).unwrap();
        let cfg = TwelvePortConfig::balanced();
        let stats = propagate_tilde_statistics(&cfg, &MomentTable::from_state(&s).unwrap());
        let a2 = alpha * alpha;
        for k in 0..3 {
            assert!((stats.covariance[(k, k)] - (a2 / 4.0 + a2 / 2.0)).abs() < 1e-9);
        }
        let m = corrected_covariance(&stats);
        assert!((m.matrix() - Matrix3::identity() * (a2 / 4.0)).amax() < 1e-9);
    }

    #[test]
    fn reck_reconstructs_and_lifts() {
        let id = reck_decompose(&CMatrix::identity(4, 4)).unwrap();
        assert!(linalg::max_abs(&(id.product() - CMatrix::identity(4, 4))) < 1e-15);

        let sbs = su2::sbs();
        let m2 = CMatrix::from_fn(2, 2, |i, j| sbs.matrix()[(i, j)]);
        let net = NetworkUnitary::new(m2, vec![0, 1]).unwrap();
        let lifted = fock_lift_network(&net, 4).unwrap();
        let direct = su2::fock_lift(&sbs, lifted.basis(), (0, 1)).unwrap();
        assert!(linalg::phase_aligned_distance(lifted.matrix(), direct.matrix()) < 1e-12);

        let s = twelve_port_matrix(&TwelvePortConfig::from_t2(0.4).unwrap());
        let d = reck_decompose(s.matrix()).unwrap();
        assert!(linalg::max_abs(&(d.product() - s.matrix())) < 1e-12);
        assert!(reck_decompose(&(CMatrix::identity(3, 3) * c(2., 0.))).is_err());
    }

    #[test]
    fn sector_application_matches_dense_lift() {
        let s = twelve_port_matrix(&TwelvePortConfig::from_t2(0.6).unwrap());
        let u = fock_lift_network(&s, 3).unwrap();
        let basis = u.basis().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = CVector::from_fn(basis.dimension(), |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let d = reck_decompose(s.matrix()).unwrap();
        let fast = apply_network(&d, &basis, &v).unwrap();
        assert!((fast - u.matrix() * &v).camax() < 1e-12);
    }

    #[test]
    fn full_state_conserves_photons() {
        let b = basis_build(2, 4).unwrap();
        let cfg = TwelvePortConfig::from_t2(0.7).unwrap();
        let st = full_state_tilde_statistics(&cfg, &vacuum(&b)).unwrap();
        assert_eq!(st.means, Vector3::zeros());
        assert_eq!(st.covariance, Matrix3::zeros());
        let s = number_state(&b, &[2, 1]).unwrap();
        let st = full_state_tilde_statistics(&cfg, &s).unwrap();
        assert!((st.output_means.iter().sum::<f64>() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn three_copies_read_out_components() {
        let f = three_copy_network(THREE_COPY_DEFAULT_SPLITTINGS.0, THREE_COPY_DEFAULT_SPLITTINGS.1).unwrap();
        assert!(f.network.unitarity_residual() < 1e-12);
        let order: Vec<usize> = f.detectors.iter().map(|d| d.estimates).collect();
        assert_eq!(order, vec![1, 3, 2]);
        assert!(f.detectors[1].scale < 0.0);

        // classical: a single amplitude pair
        let (a1, a2) = (c(0.7, 0.2), c(-0.1, 0.9));
        let out: Vec<f64> = (0..6)
            .map(|j| (f.network.matrix()[(j, 0)] * a1 + f.network.matrix()[(j, 1)] * a2).norm_sqr())
            .collect();
        let j = [(a1.conj() * a2).re, (a1.conj() * a2).im, 0.5 * (a1.norm_sqr() - a2.norm_sqr())];
        for d in &f.detectors {
            let est = d.scale * (out[d.plus] - out[d.minus]);
            assert!((est - j[d.estimates - 1]).abs() < 1e-14);
        }

        let b = basis_build(2, 4).unwrap();
        let set = schwinger_set(&b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..3 {
            let s = random_state(&b, &mut rng);
            let out = propagate_output_moments(&f.network, &MomentTable::from_state(&s).unwrap()).unwrap();
            let mean = mean_vector(&set, &s).unwrap();
            for d in &f.detectors {
                let est = d.scale * (out.means[d.plus] - out.means[d.minus]);
                assert!((est - mean[d.estimates - 1]).abs() < 1e-10);
            }
        }
        assert!(three_copy_network(0.0, 0.5).is_err());
    }
}
