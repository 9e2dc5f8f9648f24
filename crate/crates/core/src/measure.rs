//! Simulated photon counting: outcome distributions, seeded sampling,
//! count records and their estimators.

use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fock::FockBasis;
use crate::spin::StateLike;
use crate::{Error, Result};

/// Identifier written into record metadata; bump when the sampling stream
/// layout changes.
pub const PRNG_VERSION: &str = "chacha8-keyed-blocks-v1";

/// Shots drawn from one keyed stream.
pub const BLOCK_SHOTS: usize = 4096;

/// Joint photon-count distribution over a Fock basis, in canonical order.
#[derive(Debug, Clone)]
pub struct OutcomeDistribution {
    basis: Arc<FockBasis>,
    probabilities: Vec<f64>,
    cumulative: Vec<f64>,
    last_support: usize,
}

impl OutcomeDistribution {
    /// Normalises the given non-negative weights.
    pub fn from_probabilities(basis: Arc<FockBasis>, mut probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.len() != basis.dimension() {
            return Err(Error::LengthMismatch {
                expected: basis.dimension(),
                got: probabilities.len(),
            });
        }
        if probabilities.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter("negative or non-finite probability".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidParameter("probabilities sum to zero".into()));
        }
        probabilities.iter_mut().for_each(|p| *p /= total);
        let mut acc = 0.0;
        let cumulative = probabilities
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let last_support = probabilities.iter().rposition(|p| *p > 0.0).unwrap_or(0);
        Ok(OutcomeDistribution {
            basis,
            probabilities,
            cumulative,
            last_support,
        })
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// `(occupations, probability)` for every outcome with non-zero weight.
    pub fn support(&self) -> Vec<(&[u32], f64)> {
        self.probabilities
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(i, p)| (self.basis.occupations(i), *p))
            .collect()
    }

    /// Distribution of the count in one mode.
    pub fn marginal(&self, mode: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.basis.n_max() + 1];
        for (i, p) in self.probabilities.iter().enumerate() {
            out[self.basis.occupations(i)[mode] as usize] += p;
        }
        out
    }

    fn draw(&self, u: f64) -> usize {
        let i = self.cumulative.partition_point(|&c| c <= u);
        i.min(self.last_support)
    }
}

/// Born-rule distribution `|ψ_n|²`, weighted over ensemble components.
pub fn outcome_distribution<S: StateLike + ?Sized>(state: &S) -> Result<OutcomeDistribution> {
    let basis = state
        .fock_basis()
        .ok_or_else(|| Error::InvalidParameter("photon counting needs a Fock-space state".into()))?
        .clone();
    let mut probs = vec![0.0; basis.dimension()];
    for (w, psi) in state.weighted_amplitudes() {
        for (p, a) in probs.iter_mut().zip(psi.iter()) {
            *p += w * a.norm_sqr();
        }
    }
    OutcomeDistribution::from_probabilities(basis, probs)
}

/// `Σ cᵢ nᵢ` over detector counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearCombination {
    pub label: String,
    pub terms: Vec<(usize, f64)>,
}

impl LinearCombination {
    /// `scale · (n_plus − n_minus)`.
    pub fn difference(label: impl Into<String>, plus: usize, minus: usize, scale: f64) -> Self {
        LinearCombination {
            label: label.into(),
            terms: vec![(plus, scale), (minus, -scale)],
        }
    }

    /// `scale · Σ nᵢ` over all `mode_count` detectors.
    pub fn total(label: impl Into<String>, mode_count: usize, scale: f64) -> Self {
        LinearCombination {
            label: label.into(),
            terms: (0..mode_count).map(|i| (i, scale)).collect(),
        }
    }

    pub fn evaluate(&self, counts: &[u32]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * f64::from(counts[i])).sum()
    }
}

/// What a record set measures and how to turn counts into estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SchemeMetadata {
    pub scheme: String,
    pub detectors: Vec<String>,
    pub observables: Vec<LinearCombination>,
    /// Estimator of `j₀` from the counts, when the scheme conserves it.
    #[serde(default)]
    pub total_number: Option<LinearCombination>,
    /// Per-observable vacuum-noise coefficients `cₖ` subtracted as `cₖ⟨j₀⟩`
    /// from the diagonal of the empirical covariance.
    #[serde(default)]
    pub noise_coefficients: Option<Vec<f64>>,
    #[serde(default)]
    pub t2: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub stream: Option<u64>,
    #[serde(default)]
    pub shots: Option<usize>,
    #[serde(default)]
    pub prng: Option<String>,
}

/// Per-shot detector counts plus scheme metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecordSet {
    mode_count: usize,
    counts: Vec<u32>,
    pub metadata: SchemeMetadata,
}

impl MeasurementRecordSet {
    pub fn new(mode_count: usize, counts: Vec<u32>, metadata: SchemeMetadata) -> Result<Self> {
        if mode_count == 0 || counts.len() % mode_count != 0 {
            return Err(Error::LengthMismatch {
                expected: mode_count,
                got: counts.len(),
            });
        }
        Ok(MeasurementRecordSet {
            mode_count,
            counts,
            metadata,
        })
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn shots(&self) -> usize {
        self.counts.len() / self.mode_count
    }

    pub fn shot(&self, i: usize) -> &[u32] {
        &self.counts[i * self.mode_count..(i + 1) * self.mode_count]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> {
        self.counts.chunks_exact(self.mode_count)
    }

    /// Per-shot values of a detector combination.
    pub fn values(&self, comb: &LinearCombination) -> Result<Vec<f64>> {
        if let Some(&(bad, _)) = comb.terms.iter().find(|(i, _)| *i >= self.mode_count) {
            return Err(Error::InvalidMode {
                mode: bad,
                mode_count: self.mode_count,
            });
        }
        Ok(self.iter().map(|s| comb.evaluate(s)).collect())
    }

    fn labels(&self) -> Vec<String> {
        if self.metadata.detectors.len() == self.mode_count {
            self.metadata.detectors.clone()
        } else {
            (1..=self.mode_count).map(|i| format!("n{i}")).collect()
        }
    }

    /// CSV with header `shot,<detector labels>`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "shot,{}", self.labels().join(","))?;
        let mut line = String::new();
        for (i, s) in self.iter().enumerate() {
            line.clear();
            line.push_str(&i.to_string());
            for n in s {
                line.push(',');
                line.push_str(&n.to_string());
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Parse CSV written by [`write_csv`](Self::write_csv). Detector labels
    /// from the header replace those in `metadata`.
    pub fn read_csv(text: &str, mut metadata: SchemeMetadata) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            column: 1,
            message: "empty record file".into(),
        })?;
        let fields: Vec<&str> = header.split(',').map(str::trim).collect();
        if fields.first() != Some(&"shot") || fields.len() < 2 {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: "header must be `shot,<detector labels>`".into(),
            });
        }
        let mode_count = fields.len() - 1;
        metadata.detectors = fields[1..].iter().map(|s| s.to_string()).collect();
        let mut counts = Vec::new();
        let mut expected_shot = 0usize;
        for (ln, line) in lines {
            let mut column = 1;
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != mode_count + 1 {
                return Err(Error::Parse {
                    line: ln + 1,
                    column: 1,
                    message: format!("expected {} fields, got {}", mode_count + 1, cells.len()),
                });
            }
            for (ci, cell) in cells.iter().enumerate() {
                let value: u64 = cell.trim().parse().map_err(|_| Error::Parse {
                    line: ln + 1,
                    column,
                    message: format!("`{}` is not a non-negative integer", cell.trim()),
                })?;
                if ci == 0 {
                    if value as usize != expected_shot {
                        return Err(Error::Parse {
                            line: ln + 1,
                            column,
                            message: format!("shot index {value}, expected {expected_shot}"),
                        });
                    }
                } else {
                    counts.push(u32::try_from(value).map_err(|_| Error::Parse {
                        line: ln + 1,
                        column,
                        message: "count out of range".into(),
                    })?);
                }
                column += cell.len() + 1;
            }
            expected_shot += 1;
        }
        if expected_shot == 0 {
            return Err(Error::Parse {
                line: 2,
                column: 1,
                message: "no shots recorded".into(),
            });
        }
        MeasurementRecordSet::new(mode_count, counts, metadata)
    }
}

fn stream_rng(seed: u64, stream: u64, block: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&stream.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(block);
    rng
}

/// Inverse-CDF sampling. Shots are split into blocks of [`BLOCK_SHOTS`];
/// block `b` draws from the ChaCha8 stream keyed by `(seed, stream)` with
/// stream id `b`, so the output does not depend on the thread count.
pub fn sample(
    dist: &OutcomeDistribution,
    shots: usize,
    seed: u64,
    stream: u64,
    mut metadata: SchemeMetadata,
) -> Result<MeasurementRecordSet> {
    if shots == 0 {
        return Err(Error::TooFewShots { needed: 1, got: 0 });
    }
    let m = dist.basis.mode_count();
    let mut counts = vec![0u32; shots * m];
    counts
        .par_chunks_mut(BLOCK_SHOTS * m)
        .enumerate()
        .for_each(|(block, chunk)| {
            let mut rng = stream_rng(seed, stream, block as u64);
            for slot in chunk.chunks_exact_mut(m) {
                let u: f64 = rng.random();
                slot.copy_from_slice(dist.basis.occupations(dist.draw(u)));
            }
        });
    metadata.seed = Some(seed);
    metadata.stream = Some(stream);
    metadata.shots = Some(shots);
    metadata.prng = Some(PRNG_VERSION.to_string());
    MeasurementRecordSet::new(m, counts, metadata)
}

/// Sample mean and unbiased variance with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanVariance {
    pub shots: usize,
    pub mean: f64,
    pub variance: f64,
    pub se_mean: f64,
    /// Standard error of `variance`: jackknife plus the second-order term
    /// `2s⁴/(n(n−1))` of the finite-sample variance of `s²`.
    pub se_variance: f64,
}

/// Leave-one-out means.
pub fn loo_means(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let sum: f64 = x.iter().sum();
    x.iter().map(|xi| (sum - xi) / (n - 1.0)).collect()
}

/// Leave-one-out unbiased covariances of paired samples.
pub fn loo_covariances(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let (mx, my) = (mean(x), mean(y));
    let c: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    x.iter()
        .zip(y)
        .map(|(a, b)| (c - n / (n - 1.0) * (a - mx) * (b - my)) / (n - 2.0))
        .collect()
}

/// `√((n−1)/n Σ (θᵢ − θ̄)²)`.
pub fn jackknife_se(loo: &[f64]) -> f64 {
    let n = loo.len() as f64;
    let m = mean(loo);
    ((n - 1.0) / n * loo.iter().map(|v| (v - m).powi(2)).sum::<f64>()).sqrt()
}

/// Jackknife error of a sample covariance combined with the second-order
/// term `(s_x² s_y² + s_xy²)/(n(n−1))` that vanishes from the first-order
/// (jackknife) part for symmetric two-point data.
fn covariance_se(loo: &[f64], var_x: f64, var_y: f64, cov: f64, n: usize) -> f64 {
    let n = n as f64;
    let second = (var_x.max(0.0) * var_y.max(0.0) + cov * cov) / (n * (n - 1.0));
    (jackknife_se(loo).powi(2) + second).sqrt()
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased (`n − 1`) sample covariance.
pub fn sample_covariance(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn mean_variance(x: &[f64]) -> Result<MeanVariance> {
    if x.len() < 3 {
        return Err(Error::TooFewShots {
            needed: 3,
            got: x.len(),
        });
    }
    let variance = sample_covariance(x, x);
    Ok(MeanVariance {
        shots: x.len(),
        mean: mean(x),
        variance,
        se_mean: (variance.max(0.0) / x.len() as f64).sqrt(),
        se_variance: covariance_se(&loo_covariances(x, x), variance, variance, variance, x.len()),
    })
}

pub fn estimate_mean_variance(records: &MeasurementRecordSet, comb: &LinearCombination) -> Result<MeanVariance> {
    mean_variance(&records.values(comb)?)
}

/// Empirical covariance of several detector combinations.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCovariance {
    pub shots: usize,
    pub means: DVector<f64>,
    pub matrix: DMatrix<f64>,
    /// Standard errors entry by entry (jackknife plus second-order term).
    pub standard_errors: DMatrix<f64>,
}

/// Unbiased empirical covariance of the given combinations.
pub fn estimate_covariance(records: &MeasurementRecordSet, combs: &[LinearCombination]) -> Result<EmpiricalCovariance> {
    let cols = combs
        .iter()
        .map(|c| records.values(c))
        .collect::<Result<Vec<_>>>()?;
    covariance_of(&cols, None)
}

/// Empirical covariance with `cₖ⟨j₀⟩` subtracted from the diagonal, `⟨j₀⟩`
/// estimated from the same shots. Standard errors are jackknifed through
/// the subtraction.
pub fn estimate_corrected_covariance(
    records: &MeasurementRecordSet,
    combs: &[LinearCombination],
    total_number: &LinearCombination,
    coefficients: &[f64],
) -> Result<EmpiricalCovariance> {
    if coefficients.len() != combs.len() {
        return Err(Error::LengthMismatch {
            expected: combs.len(),
            got: coefficients.len(),
        });
    }
    let cols = combs
        .iter()
        .map(|c| records.values(c))
        .collect::<Result<Vec<_>>>()?;
    let j0 = records.values(total_number)?;
    covariance_of(&cols, Some((&j0, coefficients)))
}

fn covariance_of(cols: &[Vec<f64>], correction: Option<(&[f64], &[f64])>) -> Result<EmpiricalCovariance> {
    let k = cols.len();
    let n = cols.first().map_or(0, Vec::len);
    if n < 3 {
        return Err(Error::TooFewShots { needed: 3, got: n });
    }
    let means = DVector::from_iterator(k, cols.iter().map(|c| mean(c)));
    let mut matrix = DMatrix::zeros(k, k);
    let mut se = DMatrix::zeros(k, k);
    let j0_loo = correction.map(|(j0, _)| (mean(j0), loo_means(j0)));
    let variances: Vec<f64> = cols.iter().map(|c| sample_covariance(c, c)).collect();
    for a in 0..k {
        for b in a..k {
            let raw = sample_covariance(&cols[a], &cols[b]);
            let mut value = raw;
            let mut loo = loo_covariances(&cols[a], &cols[b]);
            if let (true, Some((_, coeffs)), Some((j0_mean, j0_loo))) = (a == b, correction, &j0_loo) {
                value -= coeffs[a] * j0_mean;
                for (l, m) in loo.iter_mut().zip(j0_loo) {
                    *l -= coeffs[a] * m;
                }
            }
            let e = covariance_se(&loo, variances[a], variances[b], raw, n);
            matrix[(a, b)] = value;
            matrix[(b, a)] = value;
            se[(a, b)] = e;
            se[(b, a)] = e;
        }
    }
    Ok(EmpiricalCovariance {
        shots: n,
        means,
        matrix,
        standard_errors: se,
    })
}
