//! Reconstruction of the covariance matrix from six variances of the
//! combined components `j_{k±ℓ} = (jₖ ± jₗ)/√2`, and executable
//! measurement plans that realise each combination as a rotated single
//! component.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::sync::OnceLock;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fock::basis_build;
use crate::measure::{self, LinearCombination, MeanVariance, MeasurementRecordSet, SchemeMetadata};
use crate::spin::{expectation, schwinger_set, AngularMomentumSet, CovarianceMatrix, StateLike};
use crate::su2::{circular_from_linear, lift_on_set, standard_element, ModeUnitary2, Sign};
use crate::{linalg, CMatrix, CVector, Error, Result, C64};

/// `(k, ±, ℓ)` with `k < ℓ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ComboLabel {
    pub k: usize,
    pub l: usize,
    pub sign: Sign,
}

impl ComboLabel {
    /// `j_{1±2}, j_{1±3}, j_{2±3}` in that order.
    pub const ALL: [ComboLabel; 6] = [
        ComboLabel { k: 1, l: 2, sign: Sign::Plus },
        ComboLabel { k: 1, l: 2, sign: Sign::Minus },
        ComboLabel { k: 1, l: 3, sign: Sign::Plus },
        ComboLabel { k: 1, l: 3, sign: Sign::Minus },
        ComboLabel { k: 2, l: 3, sign: Sign::Plus },
        ComboLabel { k: 2, l: 3, sign: Sign::Minus },
    ];

    pub fn new(k: usize, sign: Sign, l: usize) -> Result<Self> {
        if !(1..=3).contains(&k) || !(1..=3).contains(&l) || k >= l {
            return Err(Error::InvalidParameter(format!("combination indices ({k}, {l})")));
        }
        Ok(ComboLabel { k, l, sign })
    }

    pub fn index(&self) -> usize {
        let pair = match (self.k, self.l) {
            (1, 2) => 0,
            (1, 3) => 1,
            _ => 2,
        };
        2 * pair + usize::from(self.sign == Sign::Minus)
    }

    /// `(eₖ ± eₗ)/√2`.
    pub fn direction(&self) -> Vector3<f64> {
        let mut v = Vector3::zeros();
        v[self.k - 1] = FRAC_1_SQRT_2;
        v[self.l - 1] = self.sign.value() * FRAC_1_SQRT_2;
        v
    }
}

impl fmt::Display for ComboLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "j{}{}{}", self.k, self.sign.symbol(), self.l)
    }
}

/// `j_{k±ℓ}` as a matrix on the set's space.
#[derive(Debug, Clone)]
pub struct ComboComponent {
    pub label: ComboLabel,
    pub operator: CMatrix,
}

pub fn combo_components(set: &AngularMomentumSet) -> Vec<ComboComponent> {
    ComboLabel::ALL
        .iter()
        .map(|&label| ComboComponent {
            label,
            operator: set.along(&label.direction()),
        })
        .collect()
}

/// Variances of the six combined components, indexed by [`ComboLabel::index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceSet6([f64; 6]);

/// Most negative variance accepted at ingestion.
pub const VARIANCE_FLOOR: f64 = -1e-10;

impl VarianceSet6 {
    pub fn new(values: [f64; 6]) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(**v >= VARIANCE_FLOOR)) {
            return Err(Error::InvalidParameter(format!("variance {v} below {VARIANCE_FLOOR}")));
        }
        Ok(VarianceSet6(values))
    }

    pub fn get(&self, label: ComboLabel) -> f64 {
        self.0[label.index()]
    }

    pub fn values(&self) -> [f64; 6] {
        self.0
    }
}

/// Off-diagonals `M_{kℓ} = ½[Δ²j_{k+ℓ} − Δ²j_{k−ℓ}]`; each diagonal entry is
/// half the sum of the four variances involving it minus the two that do not.
pub fn assemble_covariance(v: &VarianceSet6) -> CovarianceMatrix {
    let g = |k, l, s| v.get(ComboLabel { k, l, sign: s });
    let pair = |k, l| g(k, l, Sign::Plus) + g(k, l, Sign::Minus);
    let off = |k, l| 0.5 * (g(k, l, Sign::Plus) - g(k, l, Sign::Minus));
    let mut m = Matrix3::zeros();
    m[(0, 0)] = 0.5 * (pair(1, 2) + pair(1, 3) - pair(2, 3));
    m[(1, 1)] = 0.5 * (pair(1, 2) + pair(2, 3) - pair(1, 3));
    m[(2, 2)] = 0.5 * (pair(1, 3) + pair(2, 3) - pair(1, 2));
    for (k, l) in [(1, 2), (1, 3), (2, 3)] {
        m[(k - 1, l - 1)] = off(k, l);
        m[(l - 1, k - 1)] = off(k, l);
    }
    CovarianceMatrix::new(m).expect("symmetric by construction")
}

/// Four-variance shortcut when `e₃` is known to be a principal axis.
pub fn assemble_with_known_principal(var1: f64, var2: f64, var3: f64, var_1p2: f64) -> CovarianceMatrix {
    let m12 = var_1p2 - 0.5 * (var1 + var2);
    let m = Matrix3::new(var1, m12, 0.0, m12, var2, 0.0, 0.0, 0.0, var3);
    CovarianceMatrix::new(m).expect("symmetric by construction")
}

/// Warning text when the four-variance shortcut disagrees with the full
/// reconstruction by more than `tol`.
pub fn principal_assumption_warning(full: &CovarianceMatrix, shortcut: &CovarianceMatrix, tol: f64) -> Option<String> {
    let diff = full.max_abs_diff(shortcut);
    (diff > tol).then(|| {
        format!("e3 is not a principal axis: four-variance result differs from six-variance result by {diff:.3e}")
    })
}

/// `U_{k,±m}` as stored in a plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanElement {
    pub k: usize,
    pub sign: Sign,
    pub m: u32,
}

impl PlanElement {
    pub fn unitary(&self) -> ModeUnitary2 {
        standard_element(self.k, self.sign, self.m)
            .expect("plan elements are validated")
            .into()
    }
}

/// One measurement setting: apply `elements` in order, then measure
/// `j_measured`, which then equals `orientation · j_{label}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    pub label: ComboLabel,
    pub orientation: f64,
    pub elements: Vec<PlanElement>,
}

impl PlanStep {
    /// Product of the step's elements; the first element acts first.
    pub fn unitary(&self) -> ModeUnitary2 {
        self.elements
            .iter()
            .fold(ModeUnitary2::identity(), |acc, e| e.unitary().compose(&acc))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolPlan {
    pub name: String,
    /// Index `k` of the component read out by the detectors.
    pub measured: usize,
    pub steps: Vec<PlanStep>,
}

/// Reference basis for plan checks.
const REFERENCE_NMAX: usize = 6;
/// Largest accepted `‖U† j_meas U − orientation · j_label‖_max`.
pub const PLAN_TOLERANCE: f64 = 1e-11;

fn reference_set() -> &'static AngularMomentumSet {
    static SET: OnceLock<AngularMomentumSet> = OnceLock::new();
    SET.get_or_init(|| {
        let basis = basis_build(2, REFERENCE_NMAX).expect("small basis");
        schwinger_set(&basis).expect("two modes")
    })
}

impl ProtocolPlan {
    /// Largest residual of `U† j_meas U − orientation · j_label` over all steps
    /// on a Schwinger basis with `n_max = 6`.
    pub fn invariant_residual(&self) -> f64 {
        let set = reference_set();
        let measured = set.component(self.measured);
        self.steps
            .iter()
            .map(|step| {
                let u = lift_on_set(&step.unitary(), set).expect("unitary step");
                let conj = u.adjoint() * measured * &u;
                let target = set.along(&step.label.direction()) * C64::from(step.orientation);
                linalg::max_abs(&(conj - target))
            })
            .fold(0.0_f64, f64::max)
    }

    /// Checks that every step realises its label and that all six labels
    /// are covered.
    pub fn validate(&self) -> Result<()> {
        let mut seen = [false; 6];
        for s in &self.steps {
            for e in &s.elements {
                standard_element(e.k, e.sign, e.m)?;
            }
            seen[s.label.index()] = true;
        }
        if !(1..=3).contains(&self.measured) || seen.iter().any(|s| !s) {
            return Err(Error::Invariant(format!("plan `{}` does not cover all six combinations", self.name)));
        }
        let r = self.invariant_residual();
        if r > PLAN_TOLERANCE {
            return Err(Error::Invariant(format!("plan `{}` step residual {r:e}", self.name)));
        }
        Ok(())
    }
}

fn el(k: usize, sign: Sign, m: u32) -> PlanElement {
    PlanElement { k, sign, m }
}

/// Phase plates and Faraday rotators in front of a polarizing beam
/// splitter that reads out `j₁`.
pub fn polarimetric_plan() -> ProtocolPlan {
    use Sign::{Minus, Plus};
    let step = |k, s, l, elements| PlanStep {
        label: ComboLabel { k, l, sign: s },
        orientation: 1.0,
        elements,
    };
    let plan = ProtocolPlan {
        name: "polarimetric".into(),
        measured: 1,
        steps: vec![
            step(1, Plus, 2, vec![el(3, Plus, 4)]),
            step(1, Minus, 2, vec![el(3, Minus, 4)]),
            step(1, Plus, 3, vec![el(2, Minus, 4)]),
            step(1, Minus, 3, vec![el(2, Plus, 4)]),
            step(2, Plus, 3, vec![el(2, Minus, 2), el(3, Plus, 4)]),
            step(2, Minus, 3, vec![el(2, Plus, 2), el(3, Plus, 4)]),
        ],
    };
    plan.validate().expect("polarimetric plan");
    plan
}

/// Beam splitters and phase shifts in front of two detectors reading out
/// `j₃`: the polarimetric plan with indices relabelled `1→3, 2→1, 3→2`.
pub fn interferometric_plan() -> ProtocolPlan {
    let map = |k: usize| [3, 1, 2][k - 1];
    let base = polarimetric_plan();
    let steps = base
        .steps
        .iter()
        .map(|s| {
            let (k, l) = (map(s.label.k), map(s.label.l));
            // j_{k±ℓ} with k > ℓ is ±j_{ℓ±k}
            let (label, orientation) = if k < l {
                (ComboLabel { k, l, sign: s.label.sign }, s.orientation)
            } else {
                (ComboLabel { k: l, l: k, sign: s.label.sign }, s.orientation * s.label.sign.value())
            };
            PlanStep {
                label,
                orientation,
                elements: s.elements.iter().map(|e| el(map(e.k), e.sign, e.m)).collect(),
            }
        })
        .collect();
    let plan = ProtocolPlan {
        name: "interferometric".into(),
        measured: map(base.measured),
        steps,
    };
    plan.validate().expect("interferometric plan");
    plan
}

/// Mode transformation placed before two photodetectors so that
/// `(n₁ − n₂)/2` reads out `jₖ`.
pub fn detector_transform(k: usize) -> Result<ModeUnitary2> {
    match k {
        1 => Ok(circular_from_linear().inverse()),
        2 => Ok(standard_element(1, Sign::Minus, 2)?.into()),
        3 => Ok(ModeUnitary2::identity()),
        _ => Err(Error::InvalidParameter(format!("component {k} not in 1..=3"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExecutionMode {
    Exact,
    Sampled { shots: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExecuteOptions {
    /// Largest acceptable truncation weight of the input state.
    pub truncation_threshold: Option<f64>,
    /// Fail instead of warning when the threshold is exceeded.
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub label: ComboLabel,
    pub mean: f64,
    pub variance: f64,
    pub se_mean: Option<f64>,
    pub se_variance: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PlanResult {
    pub variances: VarianceSet6,
    pub steps: Vec<StepOutcome>,
    pub truncation_weight: f64,
    pub warnings: Vec<String>,
    /// Raw counts per step in sampled mode.
    pub records: Vec<MeasurementRecordSet>,
}

/// Run every step on `state`. Exact mode evaluates the variance of the
/// measured component on the transformed state; sampled mode draws photon
/// counts (shot stream keyed by `(seed, step index)`) behind the detector
/// transform and uses the unbiased sample variance of `(n₁ − n₂)/2`.
pub fn execute_plan<S: StateLike + Sync + ?Sized>(
    plan: &ProtocolPlan,
    set: &AngularMomentumSet,
    state: &S,
    mode: ExecutionMode,
    options: &ExecuteOptions,
) -> Result<PlanResult> {
    if state.dimension() != set.dimension() {
        return Err(Error::BasisMismatch);
    }
    let mut warnings = Vec::new();
    let tw = state.truncation_weight();
    if let Some(threshold) = options.truncation_threshold {
        if tw > threshold {
            if options.strict {
                return Err(Error::TruncationThreshold { weight: tw, threshold });
            }
            warnings.push(format!(
                "state truncation weight {tw:.3e} exceeds {threshold:.3e}; plan variances carry truncation bias"
            ));
        }
    }
    let components = state.weighted_amplitudes();
    let measured = set.component(plan.measured);
    let run = |(index, step): (usize, &PlanStep)| -> Result<(StepOutcome, Option<MeasurementRecordSet>)> {
        let u = lift_on_set(&step.unitary(), set)?;
        let evolved: Vec<(f64, CVector)> = components.iter().map(|(w, psi)| (*w, &u * *psi)).collect();
        match mode {
            ExecutionMode::Exact => {
                let mut first = 0.0;
                let mut second = 0.0;
                for (w, psi) in &evolved {
                    let jp = measured * psi;
                    first += w * psi.dotc(&jp).re;
                    second += w * jp.norm_squared();
                }
                Ok((
                    StepOutcome {
                        label: step.label,
                        mean: step.orientation * first,
                        variance: second - first * first,
                        se_mean: None,
                        se_variance: None,
                    },
                    None,
                ))
            }
            ExecutionMode::Sampled { shots, seed } => {
                let basis = state
                    .fock_basis()
                    .ok_or_else(|| Error::InvalidParameter("sampling needs a two-mode Fock state".into()))?;
                let detector = lift_on_set(&detector_transform(plan.measured)?, set)?;
                let mut probs = vec![0.0; set.dimension()];
                for (w, psi) in &evolved {
                    for (p, a) in probs.iter_mut().zip((&detector * psi).iter()) {
                        *p += w * a.norm_sqr();
                    }
                }
                let dist = measure::OutcomeDistribution::from_probabilities(basis.clone(), probs)?;
                let diff = LinearCombination::difference(format!("j{}", plan.measured), 0, 1, 0.5);
                let meta = SchemeMetadata {
                    scheme: format!("{}:{}", plan.name, step.label),
                    detectors: vec!["n_plus".into(), "n_minus".into()],
                    observables: vec![diff.clone()],
                    ..Default::default()
                };
                let records = measure::sample(&dist, shots, seed, index as u64, meta)?;
                let mv: MeanVariance = measure::estimate_mean_variance(&records, &diff)?;
                Ok((
                    StepOutcome {
                        label: step.label,
                        mean: step.orientation * mv.mean,
                        variance: mv.variance,
                        se_mean: Some(mv.se_mean),
                        se_variance: Some(mv.se_variance),
                    },
                    Some(records),
                ))
            }
        }
    };
    let outcomes = plan
        .steps
        .par_iter()
        .enumerate()
        .map(run)
        .collect::<Result<Vec<_>>>()?;
    let mut values = [0.0; 6];
    let mut steps = Vec::with_capacity(outcomes.len());
    let mut records = Vec::new();
    for (o, r) in outcomes {
        values[o.label.index()] = o.variance;
        steps.push(o);
        records.extend(r);
    }
    Ok(PlanResult {
        variances: VarianceSet6(values),
        steps,
        truncation_weight: tw,
        warnings,
        records,
    })
}

/// Exact variances of the six combinations computed directly, without a plan.
pub fn direct_variances<S: StateLike + ?Sized>(set: &AngularMomentumSet, state: &S) -> Result<VarianceSet6> {
    if state.dimension() != set.dimension() {
        return Err(Error::BasisMismatch);
    }
    let mut values = [0.0; 6];
    for c in combo_components(set) {
        let mean = expectation(&c.operator, state).re;
        let sq = expectation(&(&c.operator * &c.operator), state).re;
        values[c.label.index()] = sq - mean * mean;
    }
    Ok(VarianceSet6(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{number_state, random_state, vacuum};
    use crate::su2;
    use crate::spin::{covariance_matrix, spin_j_set};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn spin_half_combo() {
        let set = spin_j_set(0.5).unwrap();
        let combos = combo_components(&set);
        let expect = (su2::pauli(1) + su2::pauli(2)) * C64::from(1.0 / (2.0 * 2f64.sqrt()));
        let got = &combos[0].operator;
        for r in 0..2 {
            for c in 0..2 {
                assert!((got[(r, c)] - expect[(r, c)]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn combos_are_linearly_dependent() {
        let b = basis_build(2, 6).unwrap();
        let set = schwinger_set(&b).unwrap();
        let c = combo_components(&set);
        let op = |k, s, l| &c[ComboLabel::new(k, s, l).unwrap().index()].operator;
        let lhs = op(2, Sign::Plus, 3);
        let rhs = op(1, Sign::Plus, 2) - op(1, Sign::Minus, 3);
        assert!(linalg::max_abs(&(lhs - rhs)) < 1e-13);
        let lhs = op(2, Sign::Minus, 3);
        let rhs = op(1, Sign::Plus, 2) - op(1, Sign::Plus, 3);
        assert!(linalg::max_abs(&(lhs - rhs)) < 1e-13);
        for comp in &c {
            // j_{k±ℓ}² = ½(jₖ² + jₗ² ± jₖjₗ ± jₗjₖ)
            let (jk, jl) = (set.component(comp.label.k), set.component(comp.label.l));
            let s = C64::from(comp.label.sign.value());
            let rhs = (jk * jk + jl * jl + (jk * jl + jl * jk) * s) * C64::from(0.5);
            assert!(linalg::max_abs(&(&comp.operator * &comp.operator - rhs)) < 1e-12);
            assert!(linalg::hermiticity_residual(&comp.operator) < 1e-15);
        }
        let v = direct_variances(&set, &vacuum(&b)).unwrap();
        assert_eq!(v.get(ComboLabel::ALL[0]), 0.0);
    }

    #[test]
    fn assembly_examples() {
        let id = assemble_covariance(&VarianceSet6::new([1.0; 6]).unwrap());
        assert!((id.matrix() - Matrix3::identity()).abs().max() < 1e-15);
        let m = assemble_covariance(&VarianceSet6::new([1.3, 0.7, 1.0, 1.0, 1.0, 1.0]).unwrap());
        assert!((m.get(1, 2) - 0.3).abs() < 1e-15);
        assert!(VarianceSet6::new([1.0, 1.0, 1.0, 1.0, 1.0, -1e-3]).is_err());
    }

    #[test]
    fn four_variance_shortcut() {
        let b = basis_build(2, 6).unwrap();
        let set = schwinger_set(&b).unwrap();
        for n in 0..=6 {
            let s = number_state(&b, &[n, 0]).unwrap();
            let v = direct_variances(&set, &s).unwrap();
            let m = covariance_matrix(&set, &s).unwrap();
            let short = assemble_with_known_principal(
                m.get(1, 1),
                m.get(2, 2),
                m.get(3, 3),
                v.get(ComboLabel::ALL[0]),
            );
            let q = n as f64 / 4.0;
            let expect = Matrix3::from_diagonal(&Vector3::new(q, q, 0.0));
            assert!((short.matrix() - expect).abs().max() < 1e-13);
            assert!(principal_assumption_warning(&assemble_covariance(&v), &short, 1e-10).is_none());
        }
        let iso = assemble_with_known_principal(1.0, 1.0, 1.0, 1.0);
        assert!((iso.matrix() - Matrix3::identity()).abs().max() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_state(&b, &mut rng);
        let full = covariance_matrix(&set, &s).unwrap();
        let v = direct_variances(&set, &s).unwrap();
        let short = assemble_with_known_principal(full.get(1, 1), full.get(2, 2), full.get(3, 3), v.get(ComboLabel::ALL[0]));
        assert!(principal_assumption_warning(&full, &short, 1e-10).is_some());
    }

    #[test]
    fn plans_are_valid() {
        let p = polarimetric_plan();
        assert!(p.invariant_residual() < PLAN_TOLERANCE);
        assert_eq!(p.steps[0].elements, vec![el(3, Sign::Plus, 4)]);
        assert_eq!(p.steps[5].label.to_string(), "j2-3");
        assert_eq!(p.steps[5].elements, vec![el(2, Sign::Plus, 2), el(3, Sign::Plus, 4)]);
        let q = interferometric_plan();
        assert_eq!(q.measured, 3);
        assert!(q.invariant_residual() < PLAN_TOLERANCE);
        // j_{3±1} realised by U_{2,±4}
        assert_eq!(q.steps[0].label, ComboLabel::new(1, Sign::Plus, 3).unwrap());
        assert_eq!(q.steps[0].elements, vec![el(2, Sign::Plus, 4)]);
        assert_eq!(q.steps[1].orientation, -1.0);

        let mut broken = p.clone();
        broken.steps[4].elements.reverse();
        assert!(broken.validate().is_err());
    }

    #[test]
    fn detector_transforms_read_out_components() {
        for k in 1..=3 {
            let r = su2::rotation_of(&detector_transform(k).unwrap());
            let mut e = Vector3::zeros();
            e[k - 1] = 1.0;
            assert!((r.matrix().row(2).transpose() - e).norm() < 1e-15, "k={k}");
        }
    }

    #[test]
    fn exact_round_trip() {
        let b = basis_build(2, 5).unwrap();
        let set = schwinger_set(&b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for plan in [polarimetric_plan(), interferometric_plan()] {
            for _ in 0..5 {
                let s = random_state(&b, &mut rng);
                let r = execute_plan(&plan, &set, &s, ExecutionMode::Exact, &Default::default()).unwrap();
                let m = assemble_covariance(&r.variances);
                let direct = covariance_matrix(&set, &s).unwrap();
                assert!(m.max_abs_diff(&direct) < 1e-10);
            }
        }
    }

    #[test]
    fn sampled_vacuum_and_single_photon() {
        let b = basis_build(2, 2).unwrap();
        let set = schwinger_set(&b).unwrap();
        let mode = ExecutionMode::Sampled { shots: 1000, seed: 1 };
        let r = execute_plan(&polarimetric_plan(), &set, &vacuum(&b), mode, &Default::default()).unwrap();
        assert_eq!(r.variances.values(), [0.0; 6]);

        let s = number_state(&b, &[1, 0]).unwrap();
        let mode = ExecutionMode::Sampled { shots: 100_000, seed: 42 };
        let r = execute_plan(&polarimetric_plan(), &set, &s, mode, &Default::default()).unwrap();
        // every combination has variance 1/4 on |1,0⟩ except pure j₃ directions
        let exact = direct_variances(&set, &s).unwrap();
        for o in &r.steps {
            let se = o.se_variance.unwrap();
            assert!((o.variance - exact.get(o.label)).abs() <= 5.0 * se.max(1e-12), "{} {:?} {}", o.label, o, exact.get(o.label));
        }
    }

    #[test]
    fn truncation_threshold_enforced() {
        let b = basis_build(2, 4).unwrap();
        let set = schwinger_set(&b).unwrap();
        let s = crate::fock::coherent_state(&b, &[C64::new(1.5, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let opts = ExecuteOptions { truncation_threshold: Some(1e-6), strict: false };
        let r = execute_plan(&polarimetric_plan(), &set, &s, ExecutionMode::Exact, &opts).unwrap();
        assert_eq!(r.warnings.len(), 1);
        let opts = ExecuteOptions { strict: true, ..opts };
        assert!(matches!(
            execute_plan(&polarimetric_plan(), &set, &s, ExecutionMode::Exact, &opts),
            Err(Error::TruncationThreshold { .. })
        ));
    }
}
