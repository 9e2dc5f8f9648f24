//! One runner per scheme. Each resolves its defaults into the config so the
//! echoed config reproduces the run.

use angcov::atoms::{compile_and_verify, ramsey_sequence};
use angcov::bright::{
    bright_decomposition_complex, convergence_report, mean_relations, series_covariance, NormalMoments,
};
use angcov::fock::{basis_build, MixedState, StateVector};
use angcov::measure::{
    estimate_corrected_covariance, estimate_covariance, sample, MeasurementRecordSet, SchemeMetadata, PRNG_VERSION,
};
use angcov::multiport::{
    corrected_covariance, full_state_tilde_statistics, network_output_distribution, propagate_tilde_statistics,
    twelve_port_matrix, MomentTable, TildeStatistics, TwelvePortConfig,
};
use angcov::protocol::{
    assemble_covariance, execute_plan, interferometric_plan, polarimetric_plan, ExecuteOptions, ExecutionMode,
    VarianceSet6,
};
use angcov::spin::{
    algebra_report, covariance_matrix, mean_j0, mean_vector, principal_decomposition, schwinger_set, spin_j_set_twice,
    AngularMomentumSet, CovarianceMatrix,
};
use angcov::su2::Sign;
use angcov::{linalg, C64};
use nalgebra::{Matrix3, Vector3};
use serde_json::{json, Value};

use crate::config::ScenarioConfig;
use crate::report::{dmat, mat3, vec3, Report};
use crate::state;
use crate::Failure;

pub const DEFAULT_NMAX: usize = 16;
pub const DEFAULT_BRIGHT_NMAX: usize = 32;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_SHOTS: usize = 100_000;
pub const DEFAULT_T2: f64 = 2.0 / 3.0;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_TRUNCATION_THRESHOLD: f64 = 1e-8;
pub const DEFAULT_OMEGA0: f64 = 10.0;
pub const DEFAULT_RABI: f64 = 1.0;
pub const DEFAULT_ALPHA: [f64; 2] = [2.0, 0.0];
pub const DEFAULT_ALPHAS: [f64; 4] = [1.0, 2.0, 4.0, 8.0];

fn get<T: Clone>(slot: &mut Option<T>, default: T) -> T {
    slot.get_or_insert(default).clone()
}

fn required(slot: &Option<String>, name: &str) -> Result<String, Failure> {
    slot.clone()
        .ok_or_else(|| Failure::Config(format!("missing `{name}` (flag or config key)")))
}

/// Shared settings plus the warnings and invariant failures of a run.
struct Run {
    tolerance: f64,
    threshold: f64,
    strict: bool,
    warnings: Vec<String>,
    failures: Vec<String>,
}

impl Run {
    fn new(cfg: &mut ScenarioConfig) -> Run {
        Run {
            tolerance: get(&mut cfg.tolerance, DEFAULT_TOLERANCE),
            threshold: get(&mut cfg.truncation_threshold, DEFAULT_TRUNCATION_THRESHOLD),
            strict: get(&mut cfg.strict, false),
            warnings: Vec::new(),
            failures: Vec::new(),
        }
    }

    fn truncation(&mut self, what: &str, weight: f64) -> Result<Value, Failure> {
        if weight > self.threshold {
            let msg = format!("{what} truncation weight {weight:.3e} exceeds {:.3e}", self.threshold);
            if self.strict {
                return Err(Failure::Invariant(msg));
            }
            self.warnings.push(msg);
        }
        Ok(json!({ "value": weight, "threshold": self.threshold }))
    }

    /// Hard invariant: `value` must not exceed `tolerance · scale`.
    fn require(&mut self, what: &str, value: f64, scale: f64) -> Value {
        let tol = self.tolerance * scale.max(1.0);
        if !(value <= tol) {
            self.failures.push(format!("{what}: residual {value:.3e} exceeds {tol:.3e}"));
        }
        json!({ "value": value, "tolerance": tol })
    }

    fn finish(self, results: Value) -> Report {
        Report {
            results,
            warnings: self.warnings,
            failures: self.failures,
        }
    }
}

fn two_mode_state(cfg: &mut ScenarioConfig, n_max: usize) -> Result<MixedState, Failure> {
    let text = required(&cfg.state, "state")?;
    let spec = state::parse(&text).map_err(|e| Failure::Config(e.to_string()))?;
    state::build(&spec, 2, n_max).map_err(Failure::Config)
}

fn principal_json(m: &CovarianceMatrix) -> Value {
    let p = principal_decomposition(m);
    json!({
        "variances": p.variances,
        "axes": p.axes.iter().map(vec3).collect::<Vec<_>>(),
        "reassembly_residual": (p.reassemble() - m.matrix()).amax(),
    })
}

fn max_abs(m: &Matrix3<f64>) -> f64 {
    m.amax()
}

fn direct(state: &MixedState) -> Result<(AngularMomentumSet, CovarianceMatrix, Vector3<f64>, f64), Failure> {
    let set = schwinger_set(state.basis())?;
    let m = covariance_matrix(&set, state)?;
    let mean = mean_vector(&set, state)?;
    let j0 = mean_j0(&set, state)?;
    Ok((set, m, mean, j0))
}

pub fn covariance(cfg: &mut ScenarioConfig) -> Result<Report, Failure> {
    let mut run = Run::new(cfg);
    let n_max = get(&mut cfg.n_max, DEFAULT_NMAX);
    let state = two_mode_state(cfg, n_max)?;
    let truncation = run.truncation("input state", state.truncation_weight())?;
    let (set, m, mean, j0) = direct(&state)?;
    let scale = (n_max * n_max) as f64;
    let algebra = run.require("angular-momentum algebra", algebra_report(&set).max_residual(), scale);
    let psd = run.require("positive semidefinite M", (-m.min_eigenvalue()).max(0.0), scale);
    let results = json!({
        "dimension": set.dimension(),
        "truncation_weight": truncation,
        "mean": vec3(&mean),
        "j0": j0,
        "covariance": mat3(m.matrix()),
        "principal": principal_json(&m),
        "residuals": { "algebra": algebra, "psd": psd },
    });
    Ok(run.finish(results))
}

/// Standard errors of the assembled entries, treating the six variance
/// estimates as independent.
fn assembled_se(se: &[f64; 6]) -> Matrix3<f64> {
    let mut var = Matrix3::zeros();
    for (i, s) in se.iter().enumerate() {
        let mut unit = [0.0; 6];
        unit[i] = 1.0;
        let coeff = *assemble_covariance(&VarianceSet6::new(unit).expect("non-negative")).matrix();
        var += coeff.component_mul(&coeff) * (s * s);
    }
    var.map(f64::sqrt)
}

fn z_scores(estimate: &Matrix3<f64>, exact: &Matrix3<f64>, se: &Matrix3<f64>) -> Matrix3<f64> {
    Matrix3::from_fn(|r, c| {
        let d = estimate[(r, c)] - exact[(r, c)];
        if se[(r, c)] > 0.0 {
            d / se[(r, c)]
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(d)
        }
    })
}

pub fn reconstruct(cfg: &mut ScenarioConfig) -> Result<Report, Failure> {
    let mut run = Run::new(cfg);
    let n_max = get(&mut cfg.n_max, DEFAULT_NMAX);
    let plan = match get(&mut cfg.plan, "polarimetric".into()).as_str() {
        "polarimetric" => polarimetric_plan(),
        "interferometric" => interferometric_plan(),
        other => return Err(Failure::Config(format!("unknown plan `{other}`"))),
    };
    let mode = match get(&mut cfg.mode, "exact".into()).as_str() {
        "exact" => ExecutionMode::Exact,
        "sampled" => ExecutionMode::Sampled {
            shots: get(&mut cfg.shots, DEFAULT_SHOTS),
            seed: get(&mut cfg.seed, DEFAULT_SEED),
        },
        other => return Err(Failure::Config(format!("unknown reconstruct mode `{other}`"))),
    };
    let state = two_mode_state(cfg, n_max)?;
    let truncation = run.truncation("input state", state.truncation_weight())?;
    let plan_residual = run.require("plan invariant", plan.invariant_residual(), 1.0);
    let (set, m, _, _) = direct(&state)?;
    let options = ExecuteOptions {
        truncation_threshold: Some(run.threshold),
        strict: run.strict,
    };
    let result = execute_plan(&plan, &set, &state, mode, &options)?;
    let assembled = assemble_covariance(&result.variances);
    let residual = max_abs(&(assembled.matrix() - m.matrix()));
    let steps: Vec<Value> = result
        .steps
        .iter()
        .map(|s| {
            json!({
                "label": s.label.to_string(),
                "mean": s.mean,
                "variance": s.variance,
                "se_mean": s.se_mean,
                "se_variance": s.se_variance,
            })
        })
        .collect();
    let mut results = json!({
        "plan": plan.name,
        "measured_component": plan.measured,
        "truncation_weight": truncation,
        "steps": steps,
        "reconstructed": mat3(assembled.matrix()),
        "direct": mat3(m.matrix()),
        "principal": principal_json(&assembled),
        "residuals": { "plan_invariant": plan_residual },
    });
    match mode {
        ExecutionMode::Exact => {
            results["residuals"]["reconstructed_vs_direct"] =
                run.require("exact reconstruction", residual, (n_max * n_max) as f64);
        }
        ExecutionMode::Sampled { shots, seed } => {
            let mut se = [0.0; 6];
            for s in &result.steps {
                se[s.label.index()] = s.se_variance.unwrap_or(0.0);
            }
            let se_m = assembled_se(&se);
            results["residuals"]["reconstructed_vs_direct"] = json!(residual);
            results["standard_errors"] = mat3(&se_m);
            results["z_scores"] = mat3(&z_scores(assembled.matrix(), m.matrix(), &se_m));
            results["prng"] = json!({ "version": PRNG_VERSION, "seed": seed, "shots_per_step": shots });
        }
    }
    run.warnings.extend(result.warnings);
    Ok(run.finish(results))
}

fn tilde_json(stats: &TildeStatistics) -> Value {
    json!({
        "means": vec3(&stats.means),
        "second_moments": mat3(&stats.second_moments),
        "covariance": mat3(&stats.covariance),
        "j0": stats.j0,
        "output_means": stats.output_means,
    })
}

pub fn twelveport(cfg: &mut ScenarioConfig) -> Result<Report, Failure> {
    let mut run = Run::new(cfg);
    let n_max = get(&mut cfg.n_max, DEFAULT_NMAX);
    let t2 = get(&mut cfg.t2, DEFAULT_T2);
    let config = TwelvePortConfig::from_t2(t2)?;
    let mode = get(&mut cfg.mode, "moments".into());
    if !["moments", "fullstate", "sampled"].contains(&mode.as_str()) {
        return Err(Failure::Config(format!("unknown twelveport mode `{mode}`")));
    }
    let (shots, seed) = if mode == "sampled" {
        (get(&mut cfg.shots, DEFAULT_SHOTS), get(&mut cfg.seed, DEFAULT_SEED))
    } else {
        (0, 0)
    };
    let state = two_mode_state(cfg, n_max)?;
    let truncation = run.truncation("input state", state.truncation_weight())?;
    let (_, m, _, _) = direct(&state)?;
    let network = twelve_port_matrix(&config);
    let unitarity = run.require("network unitarity", network.unitarity_residual(), 1.0);
    let table = MomentTable::from_state(&state)?;
    let moments = propagate_tilde_statistics(&config, &table);
    let corrected = corrected_covariance(&moments);
    let scale = (n_max * n_max) as f64;
    let moment_residual = max_abs(&(corrected.matrix() - m.matrix()));
    let mut results = json!({
        "t": config.t(),
        "r": config.r(),
        "noise_coefficients": config.noise_coefficients(),
        "truncation_weight": truncation,
        "direct": mat3(m.matrix()),
        "moments": {
            "tilde": tilde_json(&moments),
            "corrected": mat3(corrected.matrix()),
            "principal": principal_json(&corrected),
        },
        "residuals": {
            "unitarity": unitarity,
            "moments_vs_direct": run.require("moment-path correction", moment_residual, scale),
        },
    });
    match mode.as_str() {
        "fullstate" => {
            let full = full_state_tilde_statistics(&config, &state)?;
            let fc = corrected_covariance(&full);
            results["fullstate"] = json!({ "tilde": tilde_json(&full), "corrected": mat3(fc.matrix()) });
            results["residuals"]["fullstate_vs_direct"] =
                run.require("full-state correction", max_abs(&(fc.matrix() - m.matrix())), scale);
            results["residuals"]["fullstate_vs_moments"] =
                run.require("full-state tilde covariance", max_abs(&(full.covariance - moments.covariance)), scale);
        }
        "sampled" => {
            let dist = network_output_distribution(&network, &state)?;
            let records = sample(&dist, shots, seed, 0, config.scheme_metadata())?;
            if let Some(path) = &cfg.records_out {
                write_records(path, &records)?;
            }
            let est = estimate_corrected_covariance(
                &records,
                &config.observables(),
                &records.metadata.total_number.clone().expect("twelve-port metadata"),
                &config.noise_coefficients(),
            )?;
            let est_m = Matrix3::from_fn(|r, c| est.matrix[(r, c)]);
            let se = Matrix3::from_fn(|r, c| est.standard_errors[(r, c)]);
            results["sampled"] = json!({
                "corrected": mat3(&est_m),
                "standard_errors": mat3(&se),
                "means": est.means.as_slice(),
                "z_scores": mat3(&z_scores(&est_m, m.matrix(), &se)),
            });
            results["residuals"]["sampled_vs_direct"] = json!(max_abs(&(est_m - m.matrix())));
            results["prng"] = json!({ "version": PRNG_VERSION, "seed": seed, "stream": 0, "shots": shots });
        }
        _ => {}
    }
    Ok(run.finish(results))
}

fn write_records(path: &str, records: &MeasurementRecordSet) -> Result<(), Failure> {
    let mut csv = Vec::new();
    records
        .write_csv(&mut csv)
        .map_err(|e| Failure::Config(format!("{path}: {e}")))?;
    std::fs::write(path, csv).map_err(|e| Failure::Config(format!("{path}: {e}")))?;
    let meta_path = format!("{path}.meta.json");
    let meta = serde_json::to_string_pretty(&records.metadata).expect("metadata serializes");
    std::fs::write(&meta_path, meta).map_err(|e| Failure::Config(format!("{meta_path}: {e}")))
}

fn parse_spin(text: &str, n_max: usize) -> Result<AngularMomentumSet, Failure> {
    if text == "schwinger" {
        return Ok(schwinger_set(&basis_build(2, n_max)?)?);
    }
    let bad = || Failure::Config(format!("spin `{text}` is not `schwinger`, `n/2` or a half-integer"));
    let j: f64 = match text.split_once('/') {
        Some((n, "2")) => n.trim().parse::<f64>().map_err(|_| bad())? / 2.0,
        Some(_) => return Err(bad()),
        None => text.trim().parse().map_err(|_| bad())?,
    };
    let twice = 2.0 * j;
    if !(twice >= 0.0 && twice.fract() == 0.0 && twice < 1e4) {
        return Err(bad());
    }
    Ok(spin_j_set_twice(twice as u32))
}

fn parse_sign(text: &str) -> Result<Sign, Failure> {
    match text {
        "+" | "plus" => Ok(Sign::Plus),
        "-" | "minus" => Ok(Sign::Minus),
        _ => Err(Failure::Config(format!("sign `{text}` is not `+` or `-`"))),
    }
}

pub fn ramsey(cfg: &mut ScenarioConfig) -> Result<Report, Failure> {
    let mut run = Run::new(cfg);
    let omega0 = get(&mut cfg.omega0, DEFAULT_OMEGA0);
    let rabi = get(&mut cfg.rabi, DEFAULT_RABI);
    let spin = get(&mut cfg.spin, "schwinger".into());
    if spin == "schwinger" {
        get(&mut cfg.n_max, DEFAULT_NMAX);
    }
    let set = parse_spin(&spin, cfg.n_max.unwrap_or(DEFAULT_NMAX))?;
    let ks: Vec<usize> = cfg.k.map_or(vec![1, 2, 3], |k| vec![k]);
    let signs = match &cfg.sign {
        Some(s) => vec![parse_sign(s)?],
        None => vec![Sign::Plus, Sign::Minus],
    };
    let ms: Vec<u32> = cfg.m.map_or(vec![2, 4], |m| vec![m]);
    let mut rows = Vec::new();
    for &k in &ks {
        for &sign in &signs {
            for &m in &ms {
                let seq = ramsey_sequence(k, sign, m, omega0, rabi)?;
                let (u, v) = compile_and_verify(&seq, &set)?;
                let unitarity = run.require(&format!("{} unitarity", v.target), linalg::unitarity_residual(&u), 1.0);
                if !v.verified {
                    run.failures
                        .push(format!("{}: distance {:.3e} to the target rotation", v.target, v.distance));
                }
                rows.push(json!({
                    "target": v.target,
                    "angle": seq.target.map(|t| t.angle()),
                    "segments": serde_json::to_value(&seq.segments).expect("segments serialize"),
                    "total_duration": seq.total_duration(),
                    "distance": { "value": v.distance, "tolerance": angcov::atoms::VERIFY_TOLERANCE },
                    "verified": v.verified,
                    "unitarity": unitarity,
                }));
            }
        }
    }
    let results = json!({
        "dimension": set.dimension(),
        "omega0": omega0,
        "rabi": rabi,
        "sequences": rows,
    });
    Ok(run.finish(results))
}

/// `|α⟩ ⊗ ρ₂` on a two-mode basis, one pure component per component of `ρ₂`.
fn product_with_coherent(alpha: C64, mode2: &MixedState, n_max: usize) -> Result<MixedState, Failure> {
    let basis = basis_build(2, n_max)?;
    let b1 = mode2.basis().clone();
    let mut coh = vec![C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0)];
    for n in 1..=n_max {
        let prev = coh[n - 1];
        coh.push(prev * alpha / (n as f64).sqrt());
    }
    let components = mode2
        .components()
        .iter()
        .map(|(w, s)| {
            let v = StateVector::from_fn_truncated(basis.clone(), |occ| {
                b1.index_of(&occ[1..2])
                    .map_or(C64::new(0.0, 0.0), |i| coh[occ[0] as usize] * s.amplitudes()[i])
            })?;
            Ok((*w, v))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    Ok(MixedState::new(components)?)
}

pub fn bright(cfg: &mut ScenarioConfig) -> Result<Report, Failure> {
    let mut run = Run::new(cfg);
    let n_max = get(&mut cfg.n_max, DEFAULT_BRIGHT_NMAX);
    let t2 = get(&mut cfg.t2, DEFAULT_T2);
    let config = TwelvePortConfig::from_t2(t2)?;
    let [re, im] = get(&mut cfg.alpha, DEFAULT_ALPHA);
    let alpha = C64::new(re, im);
    if alpha.norm() == 0.0 {
        return Err(Failure::Config("alpha must be nonzero".into()));
    }
    let alphas = get(&mut cfg.alphas, DEFAULT_ALPHAS.to_vec());
    let text = required(&cfg.state, "state")?;
    let spec = state::parse(&text).map_err(|e| Failure::Config(e.to_string()))?;
    let mode2 = state::build(&spec, 1, n_max).map_err(Failure::Config)?;
    let mode2_truncation = run.truncation("mode-2 state", mode2.truncation_weight())?;
    let nm = NormalMoments::from_state(&mode2)?;
    let rb = bright_decomposition_complex(alpha, &nm);
    let d = &rb.decomposition;
    let series = series_covariance(rb.alpha, d);
    let product = product_with_coherent(alpha, &mode2, n_max)?;
    let product_truncation = run.truncation("product state", product.truncation_weight())?;
    let (_, m, mean, _) = direct(&product)?;
    let predicted_mean = mean_relations(rb.alpha, &d.moments);
    let rows = convergence_report(&alphas, &nm.rotated(-rb.phase), &config);
    let results = json!({
        "alpha": [re, im],
        "modulus": rb.alpha,
        "phase": rb.phase,
        "truncation_weight": { "mode2": mode2_truncation, "product": product_truncation },
        "quadratures": serde_json::to_value(d.moments).expect("moments serialize"),
        "m2": mat3(&d.m2),
        "m1": mat3(&d.m1),
        "m0": mat3(&d.m0),
        "series": mat3(series.matrix()),
        "direct": mat3(m.matrix()),
        "mean_relations": vec3(&predicted_mean),
        "direct_mean": vec3(&mean),
        "residuals": {
            "series_vs_direct": max_abs(&(series.matrix() - m.matrix())),
            "mean_vs_direct": (predicted_mean - mean).amax(),
        },
        "convergence": serde_json::to_value(&rows).expect("rows serialize"),
    });
    Ok(run.finish(results))
}

pub fn estimate(cfg: &mut ScenarioConfig) -> Result<Report, Failure> {
    let run = Run::new(cfg);
    let path = required(&cfg.records, "records")?;
    let metadata = match &cfg.metadata {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Config(format!("{p}: {e}")))?;
            serde_json::from_str::<SchemeMetadata>(&text).map_err(|e| Failure::Config(format!("{p}: {e}")))?
        }
        None => {
            let t2 = get(&mut cfg.t2, DEFAULT_T2);
            TwelvePortConfig::from_t2(t2)?.scheme_metadata()
        }
    };
    let text = std::fs::read_to_string(&path).map_err(|e| Failure::Config(format!("{path}: {e}")))?;
    let records = MeasurementRecordSet::read_csv(&text, metadata)
        .map_err(|e| Failure::Config(format!("{path}: {e}")))?;
    let meta = &records.metadata;
    if meta.observables.is_empty() {
        return Err(Failure::Config("metadata lists no observables".into()));
    }
    let labels: Vec<&str> = meta.observables.iter().map(|o| o.label.as_str()).collect();
    let mut results = json!({
        "scheme": meta.scheme,
        "detectors": meta.detectors,
        "observables": labels,
        "shots": records.shots(),
    });
    match (&meta.total_number, &meta.noise_coefficients) {
        (Some(total), Some(coeffs)) => {
            let est = estimate_corrected_covariance(&records, &meta.observables, total, coeffs)?;
            let j0 = angcov::measure::estimate_mean_variance(&records, total)?;
            results["j0"] = json!({ "mean": j0.mean, "se": j0.se_mean });
            results["means"] = json!(est.means.as_slice());
            results["corrected"] = dmat(&est.matrix);
            results["standard_errors"] = dmat(&est.standard_errors);
            if est.matrix.nrows() == 3 {
                let m = CovarianceMatrix::new(Matrix3::from_fn(|r, c| est.matrix[(r, c)]))?;
                results["principal"] = principal_json(&m);
            }
        }
        _ => {
            let est = estimate_covariance(&records, &meta.observables)?;
            results["means"] = json!(est.means.as_slice());
            results["covariance"] = dmat(&est.matrix);
            results["standard_errors"] = dmat(&est.standard_errors);
        }
    }
    Ok(run.finish(results))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assembled_errors_follow_the_linear_map() {
        let se = assembled_se(&[1.0; 6]);
        // diagonals combine all six with weight ½, off-diagonals two
        assert!((se[(0, 0)] - 0.5 * 6f64.sqrt()).abs() < 1e-15);
        assert!((se[(0, 1)] - 0.5 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn spins_parse() {
        assert_eq!(parse_spin("1/2", 4).unwrap().dimension(), 2);
        assert_eq!(parse_spin("5", 4).unwrap().dimension(), 11);
        assert_eq!(parse_spin("1.5", 4).unwrap().dimension(), 4);
        assert_eq!(parse_spin("schwinger", 2).unwrap().dimension(), 6);
        assert!(parse_spin("1/3", 4).is_err());
        assert!(parse_spin("0.3", 4).is_err());
    }

    #[test]
    fn product_state_matches_two_mode_coherent() {
        let mode2 = state::build(&state::parse("coh:0.4,0.1").unwrap(), 1, 20).unwrap();
        let p = product_with_coherent(C64::new(1.0, 0.0), &mode2, 20).unwrap();
        let direct = state::build(&state::parse("coh:1,0;0.4,0.1").unwrap(), 2, 20).unwrap();
        let d = (p.components()[0].1.amplitudes() - direct.components()[0].1.amplitudes()).camax();
        assert!(d < 1e-12, "{d:e}");
    }
}
