//! Two-level atoms driven by a classical field in the rotating-wave
//! approximation, and Ramsey sequences realizing `exp(iθ jₖ)`.
//!
//! The collective Hamiltonian is `H = ω₀j₃ − Ω[j₁cos ωt + j₂sin ωt]`; in the
//! frame rotating at `ω` it becomes `(ω₀ − ω)j₃ − Ωj₁`, so
//! `U(t, 0) = exp(−iωt j₃)·exp{−i[(ω₀ − ω)j₃ − Ωj₁]t}`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::spin::AngularMomentumSet;
use crate::su2::Sign;
use crate::{linalg, CMatrix, Error, Result};

/// Distance below which a compiled sequence counts as verified.
pub const VERIFY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParameters {
    pub omega0: f64,
    pub omega: f64,
    pub rabi: f64,
}

impl DriveParameters {
    pub fn new(omega0: f64, omega: f64, rabi: f64) -> Result<Self> {
        if ![omega0, omega, rabi].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("drive parameters must be finite".into()));
        }
        Ok(DriveParameters { omega0, omega, rabi })
    }

    pub fn resonant(omega0: f64, rabi: f64) -> Result<Self> {
        Self::new(omega0, omega0, rabi)
    }

    /// Lab-frame Hamiltonian at time `t`.
    pub fn hamiltonian(&self, set: &AngularMomentumSet, t: f64) -> CMatrix {
        let (c, s) = ((self.omega * t).cos(), (self.omega * t).sin());
        set.component(3) * crate::C64::from(self.omega0)
            - (set.component(1) * crate::C64::from(c) + set.component(2) * crate::C64::from(s))
                * crate::C64::from(self.rabi)
    }
}

fn check_duration(t: f64) -> Result<()> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::NegativeDuration(t));
    }
    Ok(())
}

/// `U(t, 0)` for constant drive parameters.
pub fn evolution_operator(p: &DriveParameters, duration: f64, set: &AngularMomentumSet) -> Result<CMatrix> {
    evolution_between(p, 0.0, duration, set)
}

/// `U(t₂, t₁) = exp(−iωt₂j₃)·exp(−iH̃(t₂ − t₁))·exp(iωt₁j₃)` with the
/// rotating-frame generator `H̃ = (ω₀ − ω)j₃ − Ωj₁`.
pub fn evolution_between(p: &DriveParameters, t1: f64, t2: f64, set: &AngularMomentumSet) -> Result<CMatrix> {
    check_duration(t2 - t1)?;
    let j3 = set.component(3);
    let rotating = j3 * crate::C64::from(p.omega0 - p.omega) - set.component(1) * crate::C64::from(p.rabi);
    let mut u = set.exp_i(j3, -p.omega * t2) * set.exp_i(&rotating, -(t2 - t1));
    if t1 != 0.0 {
        u *= set.exp_i(j3, p.omega * t1);
    }
    Ok(u)
}

/// `exp(−iω₀t j₃)`.
pub fn free_evolution(omega0: f64, duration: f64, set: &AngularMomentumSet) -> Result<CMatrix> {
    check_duration(duration)?;
    Ok(set.exp_i(set.component(3), -omega0 * duration))
}

/// `exp(−iω₀t j₃)·exp(iΩt j₁)`.
pub fn resonant_evolution(omega0: f64, rabi: f64, duration: f64, set: &AngularMomentumSet) -> Result<CMatrix> {
    check_duration(duration)?;
    Ok(set.exp_i(set.component(3), -omega0 * duration) * set.exp_i(set.component(1), rabi * duration))
}

/// `exp(−i(π/2)j₃)·exp(iφj₁)·exp(i(π/2)j₃)` compared with `exp(iφj₂)`.
pub fn j2_from_j1_residual(set: &AngularMomentumSet, phi: f64) -> f64 {
    let j3 = set.component(3);
    let lhs = set.exp_i(set.component(2), phi);
    let rhs = set.exp_i(j3, -FRAC_PI_2) * set.exp_i(set.component(1), phi) * set.exp_i(j3, FRAC_PI_2);
    linalg::max_abs(&(lhs - rhs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Segment {
    Free { duration: f64 },
    Resonant { duration: f64 },
}

impl Segment {
    pub fn duration(&self) -> f64 {
        match *self {
            Segment::Free { duration } | Segment::Resonant { duration } => duration,
        }
    }
}

/// Which `exp(iθ_{±m} jₖ)` a sequence realizes, `θ_{±m} = ±π/m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamseyTarget {
    pub k: usize,
    pub sign: Sign,
    pub m: u32,
}

impl RamseyTarget {
    pub fn angle(&self) -> f64 {
        self.sign.value() * PI / f64::from(self.m)
    }

    pub fn label(&self) -> String {
        format!("U{},{}{}", self.k, self.sign.symbol(), self.m)
    }
}

/// Segments in temporal order under a resonant drive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub omega0: f64,
    pub rabi: f64,
    pub segments: Vec<Segment>,
    pub target: Option<RamseyTarget>,
}

impl PulseSequence {
    pub fn new(omega0: f64, rabi: f64, segments: Vec<Segment>, target: Option<RamseyTarget>) -> Result<Self> {
        for s in &segments {
            check_duration(s.duration())?;
        }
        Ok(PulseSequence {
            omega0,
            rabi,
            segments,
            target,
        })
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(Segment::duration).sum()
    }

    /// Product of segment propagators, latest segment leftmost. Each
    /// resonant pulse starts its own field phase reference at zero.
    pub fn unitary(&self, set: &AngularMomentumSet) -> Result<CMatrix> {
        let n = set.dimension();
        let mut u = CMatrix::identity(n, n);
        for s in &self.segments {
            let step = match *s {
                Segment::Free { duration } => free_evolution(self.omega0, duration, set)?,
                Segment::Resonant { duration } => resonant_evolution(self.omega0, self.rabi, duration, set)?,
            };
            u = step * u;
        }
        Ok(u)
    }
}

/// Smallest period count `n ≥ n_min` with `(phase + 2πn)/ω₀ ≥ t_min` and
/// `n ≡ parity (mod 2)`.
fn aligned_periods(omega0: f64, phase: f64, t_min: f64, n_min: u64, parity: u64) -> u64 {
    let needed = ((omega0 * t_min - phase) / TAU - 1e-12).ceil().max(0.0) as u64;
    let n = needed.max(n_min);
    if n % 2 == parity % 2 {
        n
    } else {
        n + 1
    }
}

fn aligned_time(omega0: f64, phase: f64, periods: u64) -> f64 {
    (phase + TAU * periods as f64) / omega0
}

/// Compile `exp(iθ_{±m} jₖ)` into free and resonant segments.
///
/// * `k = 2`: free `t_{−π/2}`, resonant `t_{±m}`, free `t_{π/2} − t_{±m}`.
/// * `k = 1`: resonant `t_{±m}`, free `t_{2π} − t_{±m}`.
/// * `k = 3`: a single free segment.
///
/// with `Ωt_m = π/m`, `Ωt_{−m} = (2m − 1)π/m`, `ω₀t_{±π/2} ≡ ±π/2` and
/// `ω₀t_{2π} ≡ 0 (mod 2π)`, each free time the shortest non-negative choice
/// for which the total number of full `2π` turns (pulse included) is even.
/// A full turn is `(−1)^{2j}`, so an odd count would flip the relative sign of
/// integer and half-integer sectors in a reducible set.
pub fn ramsey_sequence(k: usize, sign: Sign, m: u32, omega0: f64, rabi: f64) -> Result<PulseSequence> {
    if m != 2 && m != 4 {
        return Err(Error::InvalidParameter(format!("m = {m} not in {{2, 4}}")));
    }
    if !(omega0 > 0.0 && omega0.is_finite()) || !(rabi > 0.0 && rabi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "ω₀ = {omega0} and Ω = {rabi} must be positive"
        )));
    }
    let target = RamseyTarget { k, sign, m };
    let mf = f64::from(m);
    let t_pulse = match sign {
        Sign::Plus => PI / (mf * rabi),
        Sign::Minus => (2.0 * mf - 1.0) * PI / (mf * rabi),
    };
    let pulse_turns = u64::from(sign == Sign::Minus);
    let segments = match k {
        1 => {
            let n = aligned_periods(omega0, 0.0, t_pulse, 1, pulse_turns);
            vec![
                Segment::Resonant { duration: t_pulse },
                Segment::Free {
                    duration: (aligned_time(omega0, 0.0, n) - t_pulse).max(0.0),
                },
            ]
        }
        2 => {
            let before = 1;
            let after = aligned_periods(omega0, FRAC_PI_2, t_pulse, 0, before + pulse_turns);
            vec![
                Segment::Free {
                    duration: aligned_time(omega0, -FRAC_PI_2, before),
                },
                Segment::Resonant { duration: t_pulse },
                Segment::Free {
                    duration: (aligned_time(omega0, FRAC_PI_2, after) - t_pulse).max(0.0),
                },
            ]
        }
        3 => {
            // exp(−iω₀t j₃) = exp(iθ j₃) on every sector needs ω₀t ≡ −θ (mod 4π)
            let t = (-target.angle()).rem_euclid(2.0 * TAU) / omega0;
            vec![Segment::Free { duration: t }]
        }
        _ => return Err(Error::InvalidParameter(format!("axis index {k} not in 1..=3"))),
    };
    PulseSequence::new(omega0, rabi, segments, Some(target))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub target: String,
    /// Phase-aligned Frobenius distance to `exp(iθ jₖ)`.
    pub distance: f64,
    pub verified: bool,
}

/// Unitary of the sequence and its distance to the target rotation.
pub fn compile_and_verify(seq: &PulseSequence, set: &AngularMomentumSet) -> Result<(CMatrix, Verification)> {
    let u = seq.unitary(set)?;
    let target = seq
        .target
        .ok_or_else(|| Error::InvalidParameter("sequence carries no target".into()))?;
    let want = set.exp_i(set.component(target.k), target.angle());
    let distance = linalg::phase_aligned_distance(&u, &want);
    Ok((
        u,
        Verification {
            target: target.label(),
            distance,
            verified: distance < VERIFY_TOLERANCE,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::basis_build;
    use crate::spin::{schwinger_set, spin_j_set};

    fn identity_distance(u: &CMatrix) -> f64 {
        linalg::max_abs(&(u - CMatrix::identity(u.nrows(), u.ncols())))
    }

    #[test]
    fn evolution_special_cases() {
        let set = spin_j_set(1.5).unwrap();
        let p = DriveParameters::new(1.3, 0.9, 0.4).unwrap();
        assert!(identity_distance(&evolution_operator(&p, 0.0, &set).unwrap()) < 1e-15);
        assert!(evolution_operator(&p, -1.0, &set).is_err());

        let off = DriveParameters::new(1.3, 0.9, 0.0).unwrap();
        let u = evolution_operator(&off, 2.1, &set).unwrap();
        assert!(linalg::max_abs(&(u - free_evolution(1.3, 2.1, &set).unwrap())) < 1e-13);

        let res = DriveParameters::resonant(1.3, 0.4).unwrap();
        let u = evolution_operator(&res, 2.1, &set).unwrap();
        assert!(linalg::max_abs(&(u - resonant_evolution(1.3, 0.4, 2.1, &set).unwrap())) < 1e-13);
    }

    #[test]
    fn full_period_free_evolution() {
        for (j, sign) in [(1.0, 1.0), (2.0, 1.0), (0.5, -1.0), (1.5, -1.0)] {
            let set = spin_j_set(j).unwrap();
            let u = free_evolution(2.0, PI, &set).unwrap();
            let n = u.nrows();
            assert!(linalg::max_abs(&(u - CMatrix::identity(n, n) * crate::C64::from(sign))) < 1e-13);
        }
    }

    #[test]
    fn j1_to_j2_conjugation() {
        let b = basis_build(2, 6).unwrap();
        let sets = [
            spin_j_set(0.5).unwrap(),
            spin_j_set(1.0).unwrap(),
            spin_j_set(1.5).unwrap(),
            spin_j_set(5.0).unwrap(),
            schwinger_set(&b).unwrap(),
        ];
        for set in &sets {
            for phi in [0.3, PI / 4.0, -2.0] {
                assert!(j2_from_j1_residual(set, phi) < 1e-12);
            }
        }
    }

    #[test]
    fn sequence_shapes() {
        let s = ramsey_sequence(2, Sign::Plus, 4, 1.0, 0.01).unwrap();
        assert!(matches!(
            s.segments[..],
            [Segment::Free { .. }, Segment::Resonant { .. }, Segment::Free { .. }]
        ));
        assert!((s.segments[1].duration() * 0.01 - PI / 4.0).abs() < 1e-12);
        let s = ramsey_sequence(1, Sign::Minus, 4, 1.0, 0.01).unwrap();
        assert!(matches!(s.segments[..], [Segment::Resonant { .. }, Segment::Free { .. }]));
        assert!((s.segments[0].duration() * 0.01 - 7.0 * PI / 4.0).abs() < 1e-12);
        assert!(ramsey_sequence(3, Sign::Minus, 2, 1.0, 0.01).unwrap().segments.len() == 1);
        assert!(ramsey_sequence(2, Sign::Plus, 3, 1.0, 0.01).is_err());
        assert!(ramsey_sequence(2, Sign::Plus, 2, 0.0, 0.01).is_err());
        assert!(PulseSequence::new(1.0, 1.0, vec![Segment::Free { duration: -1.0 }], None).is_err());
    }

    #[test]
    fn compiled_sequences_verify() {
        let b = basis_build(2, 6).unwrap();
        let sets = [
            spin_j_set(0.5).unwrap(),
            spin_j_set(1.0).unwrap(),
            spin_j_set(1.5).unwrap(),
            spin_j_set(5.0).unwrap(),
            schwinger_set(&b).unwrap(),
        ];
        for (omega0, rabi) in [(1.0, 0.01), (1.0, 0.7), (3.0, 5.0)] {
            for k in 1..=3 {
                for sign in [Sign::Plus, Sign::Minus] {
                    for m in [2, 4] {
                        let seq = ramsey_sequence(k, sign, m, omega0, rabi).unwrap();
                        assert!(seq.segments.iter().all(|s| s.duration() >= 0.0));
                        for set in &sets {
                            let (_, v) = compile_and_verify(&seq, set).unwrap();
                            assert!(v.verified, "{} at ω₀ = {omega0}, Ω = {rabi}: {:e}", v.target, v.distance);
                        }
                    }
                }
            }
        }
    }
}
