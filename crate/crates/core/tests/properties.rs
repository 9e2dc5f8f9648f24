use std::f64::consts::PI;

use angcov::fock::{annihilation, basis_build, number_state, random_state, StateVector};
use angcov::measure::{mean_variance, outcome_distribution, sample, SchemeMetadata};
use angcov::spin::{covariance_matrix, principal_decomposition, schwinger_set, CovarianceMatrix};
use angcov::su2::{fock_lift, lift_on_set, rotation_of, su2_from_axis_angle, SU2Element};
use angcov::{linalg, CMatrix, C64};
use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn element(theta: f64, x: f64, y: f64, z: f64) -> Option<SU2Element> {
    let v = Vector3::new(x, y, z);
    (v.norm() > 1e-3).then(|| su2_from_axis_angle(theta, v.normalize()).unwrap())
}

fn axis() -> impl Strategy<Value = (f64, f64, f64)> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn covariance_rotates_with_the_element(seed in any::<u64>(), theta in -PI..PI, (x, y, z) in axis()) {
        let Some(g) = element(theta, x, y, z) else { return Ok(()) };
        let b = basis_build(2, 5).unwrap();
        let set = schwinger_set(&b).unwrap();
        let s = random_state(&b, &mut ChaCha8Rng::seed_from_u64(seed));
        let moved = StateVector::from_amplitudes(b.clone(), lift_on_set(&g, &set).unwrap() * s.amplitudes()).unwrap();
        let m = covariance_matrix(&set, &s).unwrap();
        let expect = m.rotated(rotation_of(&g).matrix());
        prop_assert!(covariance_matrix(&set, &moved).unwrap().max_abs_diff(&expect) < 1e-10);
    }

    #[test]
    fn lift_is_a_homomorphism(t1 in -PI..PI, a1 in axis(), t2 in -PI..PI, a2 in axis()) {
        let (Some(g1), Some(g2)) = (element(t1, a1.0, a1.1, a1.2), element(t2, a2.0, a2.1, a2.2)) else {
            return Ok(());
        };
        let b = basis_build(2, 4).unwrap();
        let set = schwinger_set(&b).unwrap();
        let lhs = lift_on_set(&g1.compose(&g2), &set).unwrap();
        let rhs = lift_on_set(&g1, &set).unwrap() * lift_on_set(&g2, &set).unwrap();
        prop_assert!(linalg::phase_aligned_distance(&lhs, &rhs) < 1e-10);
        let r = rotation_of(&g1.compose(&g2)).matrix() - rotation_of(&g1).matrix() * rotation_of(&g2).matrix();
        prop_assert!(r.amax() < 1e-12);
    }

    #[test]
    fn lift_transforms_ladder_operators(theta in -PI..PI, (x, y, z) in axis()) {
        let Some(g) = element(theta, x, y, z) else { return Ok(()) };
        let b = basis_build(2, 5).unwrap();
        let u = fock_lift(&g, &b, (0, 1)).unwrap();
        let a = [annihilation(&b, 0).unwrap(), annihilation(&b, 1).unwrap()];
        for k in 0..2 {
            let lhs = u.matrix().adjoint() * a[k].matrix() * u.matrix();
            let mut rhs = CMatrix::zeros(b.dimension(), b.dimension());
            for l in 0..2 {
                rhs += a[l].matrix() * g.matrix()[(k, l)];
            }
            prop_assert!(linalg::max_abs(&(lhs - rhs)) < 1e-12);
        }
    }

    #[test]
    fn principal_decomposition_reassembles(v in prop::array::uniform6(-2.0..2.0f64)) {
        let m = Matrix3::new(v[0], v[3], v[4], v[3], v[1], v[5], v[4], v[5], v[2]);
        let cov = CovarianceMatrix::new(m).unwrap();
        let p = principal_decomposition(&cov);
        prop_assert!((p.reassemble() - m).amax() < 1e-12);
        prop_assert!(p.variances[0] >= p.variances[1] && p.variances[1] >= p.variances[2]);
        prop_assert!((p.rotation.determinant() - 1.0).abs() < 1e-12);
        prop_assert!((p.rotation * p.rotation.transpose() - Matrix3::identity()).amax() < 1e-12);
    }

    #[test]
    fn number_state_oracle(n1 in 0usize..7, n2 in 0usize..7) {
        let b = basis_build(2, 12).unwrap();
        let set = schwinger_set(&b).unwrap();
        let m = covariance_matrix(&set, &number_state(&b, &[n1, n2]).unwrap()).unwrap();
        let (n1, n2) = (n1 as f64, n2 as f64);
        let v = (n1 + n2 + 2.0 * n1 * n2) / 4.0;
        let expect = Matrix3::from_diagonal(&Vector3::new(v, v, 0.0));
        prop_assert!((m.matrix() - expect).amax() < 1e-12);
    }
}

/// `0.6|1,0⟩ + 0.8|0,1⟩` counted directly, so `(n₁ − n₂)/2 = ±1/2`.
fn coin() -> (angcov::measure::OutcomeDistribution, f64) {
    let b = basis_build(2, 1).unwrap();
    let s = StateVector::from_amplitudes(
        b.clone(),
        angcov::CVector::from_fn(b.dimension(), |i, _| {
            let occ = b.occupations(i);
            match (occ[0], occ[1]) {
                (1, 0) => C64::new(0.6, 0.0),
                (0, 1) => C64::new(0.8, 0.0),
                _ => C64::new(0.0, 0.0),
            }
        }),
    )
    .unwrap();
    // values ±1/2 with p = 0.36, 0.64
    let mean = 0.5 * 0.36 - 0.5 * 0.64;
    let var = 0.25 - mean * mean;
    (outcome_distribution(&s).unwrap(), var)
}

fn variance_estimates(shots: usize, reps: u64, seed_base: u64) -> Vec<f64> {
    let (dist, _) = coin();
    (0..reps)
        .map(|r| {
            let rec = sample(&dist, shots, seed_base, r, SchemeMetadata::default()).unwrap();
            let x: Vec<f64> = rec.iter().map(|c| 0.5 * (f64::from(c[0]) - f64::from(c[1]))).collect();
            mean_variance(&x).unwrap().variance
        })
        .collect()
}

#[test]
fn doubling_shots_shrinks_rms_error_by_root_two() {
    let (_, exact) = coin();
    let rms = |v: &[f64]| (v.iter().map(|e| (e - exact).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
    let small = rms(&variance_estimates(500, 1200, 11));
    let large = rms(&variance_estimates(1000, 1200, 12));
    let ratio = small / large;
    assert!((1.25..=1.6).contains(&ratio), "RMS ratio {ratio}");
}

#[test]
fn variance_estimator_is_unbiased() {
    let (_, exact) = coin();
    let est = variance_estimates(50, 4000, 13);
    let mv = mean_variance(&est).unwrap();
    assert!((mv.mean - exact).abs() < 4.0 * mv.se_mean, "{} vs {exact} (se {})", mv.mean, mv.se_mean);
}

#[test]
fn sampled_counts_follow_the_distribution() {
    let b = basis_build(2, 4).unwrap();
    let s = random_state(&b, &mut ChaCha8Rng::seed_from_u64(21));
    let dist = outcome_distribution(&s).unwrap();
    let shots = 200_000;
    let rec = sample(&dist, shots, 5, 0, SchemeMetadata::default()).unwrap();
    let mut observed = vec![0usize; b.dimension()];
    for c in rec.iter() {
        observed[b.index_of(c).unwrap()] += 1;
    }
    let mut chi2 = 0.0;
    let mut dof = 0usize;
    for (o, p) in observed.iter().zip(dist.probabilities()) {
        let e = p * shots as f64;
        if e >= 5.0 {
            chi2 += (*o as f64 - e).powi(2) / e;
            dof += 1;
        }
    }
    let dof = (dof - 1) as f64;
    assert!(chi2 < dof + 5.0 * (2.0 * dof).sqrt(), "χ² = {chi2} with {dof} dof");
}
