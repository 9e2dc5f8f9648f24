//! Multi-mode Fock space truncated by total photon number.
//!
//! Every operator built from equal numbers of creation and annihilation
//! operators maps each total-number sector into itself, so restricting to
//! `Σ nₖ ≤ n_max` keeps the angular-momentum algebra exact.

use std::collections::HashMap;
use std::sync::Arc;

use crate::{linalg, CMatrix, CVector, Error, Result, C64};

/// Largest basis `basis_build` accepts unless a different limit is passed.
pub const DEFAULT_MAX_DIMENSION: usize = 250_000;

/// Largest basis on which dense operators are materialised.
pub const MAX_OPERATOR_DIMENSION: usize = 6_000;

const NO_INDEX: u32 = u32::MAX;

/// Occupation-number basis `{(n₁,…,n_K) : Σ nₖ ≤ n_max}` in lexicographic order.
#[derive(Debug)]
pub struct FockBasis {
    mode_count: usize,
    n_max: usize,
    occupations: Vec<u32>,
    totals: Vec<usize>,
    index: HashMap<Box<[u32]>, usize>,
    // lowered[mode][i] = index of the tuple with one photon fewer in `mode`
    lowered: Vec<Vec<u32>>,
}

impl PartialEq for FockBasis {
    fn eq(&self, other: &Self) -> bool {
        self.mode_count == other.mode_count && self.n_max == other.n_max
    }
}

impl Eq for FockBasis {}

/// `C(n, k)` with overflow detection.
pub fn binomial(n: usize, k: usize) -> Option<usize> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

/// Build the basis for `mode_count` modes with total photon number ≤ `n_max`.
pub fn basis_build(mode_count: usize, n_max: usize) -> Result<Arc<FockBasis>> {
    basis_build_with_limit(mode_count, n_max, DEFAULT_MAX_DIMENSION)
}

pub fn basis_build_with_limit(
    mode_count: usize,
    n_max: usize,
    limit: usize,
) -> Result<Arc<FockBasis>> {
    if mode_count == 0 {
        return Err(Error::InvalidBasis("mode_count must be at least 1".into()));
    }
    let dimension = binomial(n_max + mode_count, mode_count).unwrap_or(usize::MAX);
    if dimension > limit {
        return Err(Error::DimensionOverflow {
            mode_count,
            n_max,
            dimension,
            limit,
        });
    }

    let mut occupations = Vec::with_capacity(dimension * mode_count);
    let mut current = vec![0_u32; mode_count];
    enumerate(0, n_max, &mut current, &mut occupations);
    debug_assert_eq!(occupations.len(), dimension * mode_count);

    let mut index = HashMap::with_capacity(dimension);
    let mut totals = Vec::with_capacity(dimension);
    for (i, tuple) in occupations.chunks(mode_count).enumerate() {
        index.insert(tuple.to_vec().into_boxed_slice(), i);
        totals.push(tuple.iter().map(|&n| n as usize).sum());
    }

    let mut lowered = vec![vec![NO_INDEX; dimension]; mode_count];
    let mut scratch = vec![0_u32; mode_count];
    for (i, tuple) in occupations.chunks(mode_count).enumerate() {
        for mode in 0..mode_count {
            if tuple[mode] > 0 {
                scratch.copy_from_slice(tuple);
                scratch[mode] -= 1;
                lowered[mode][i] = index[&scratch[..]] as u32;
            }
        }
    }

    Ok(Arc::new(FockBasis {
        mode_count,
        n_max,
        occupations,
        totals,
        index,
        lowered,
    }))
}

fn enumerate(pos: usize, remaining: usize, current: &mut [u32], out: &mut Vec<u32>) {
    if pos == current.len() {
        out.extend_from_slice(current);
        return;
    }
    for n in 0..=remaining {
        current[pos] = n as u32;
        enumerate(pos + 1, remaining - n, current, out);
    }
    current[pos] = 0;
}

impl FockBasis {
    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dimension(&self) -> usize {
        self.totals.len()
    }

    /// Occupation tuple of basis element `i`.
    pub fn occupations(&self, i: usize) -> &[u32] {
        &self.occupations[i * self.mode_count..(i + 1) * self.mode_count]
    }

    pub fn index_of(&self, occupations: &[u32]) -> Option<usize> {
        self.index.get(occupations).copied()
    }

    /// Total photon number of basis element `i`.
    pub fn total(&self, i: usize) -> usize {
        self.totals[i]
    }

    /// Total photon number of every basis element, in basis order.
    pub fn totals(&self) -> &[usize] {
        &self.totals
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> {
        self.occupations.chunks(self.mode_count)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.mode_count {
            Err(Error::InvalidMode {
                mode,
                mode_count: self.mode_count,
            })
        } else {
            Ok(())
        }
    }

    pub(crate) fn check_operator_size(&self) -> Result<()> {
        if self.dimension() > MAX_OPERATOR_DIMENSION {
            Err(Error::DimensionOverflow {
                mode_count: self.mode_count,
                n_max: self.n_max,
                dimension: self.dimension(),
                limit: MAX_OPERATOR_DIMENSION,
            })
        } else {
            Ok(())
        }
    }
}

/// One factor of an operator word: `aₖ` or `aₖ†`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ladder {
    pub mode: usize,
    pub dagger: bool,
}

impl Ladder {
    pub fn lower(mode: usize) -> Self {
        Ladder { mode, dagger: false }
    }

    pub fn raise(mode: usize) -> Self {
        Ladder { mode, dagger: true }
    }
}

/// Apply a single ladder operator to raw amplitudes. Raising beyond the
/// cutoff is projected out.
pub fn apply_ladder(basis: &FockBasis, op: Ladder, amps: &CVector) -> Result<CVector> {
    basis.check_mode(op.mode)?;
    if amps.len() != basis.dimension() {
        return Err(Error::LengthMismatch {
            expected: basis.dimension(),
            got: amps.len(),
        });
    }
    let lowered = &basis.lowered[op.mode];
    let mut out = CVector::zeros(amps.len());
    for (i, &target) in lowered.iter().enumerate() {
        if target == NO_INDEX {
            continue;
        }
        let j = target as usize;
        // i has n photons in `mode`, j has n − 1
        let n = basis.occupations(i)[op.mode] as f64;
        if op.dagger {
            out[i] += amps[j] * n.sqrt();
        } else {
            out[j] += amps[i] * n.sqrt();
        }
    }
    Ok(out)
}

/// Pure state on a truncated Fock basis.
#[derive(Debug, Clone)]
pub struct StateVector {
    basis: Arc<FockBasis>,
    amplitudes: CVector,
    truncation_weight: f64,
}

impl StateVector {
    /// Normalise `amplitudes` and wrap them. `truncation_weight` is the
    /// probability mass the caller discarded when building them.
    pub fn new(basis: Arc<FockBasis>, amplitudes: CVector, truncation_weight: f64) -> Result<Self> {
        if amplitudes.len() != basis.dimension() {
            return Err(Error::LengthMismatch {
                expected: basis.dimension(),
                got: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidParameter("state has zero or non-finite norm".into()));
        }
        if !(truncation_weight >= 0.0 && truncation_weight <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "truncation weight {truncation_weight} outside [0, 1]"
            )));
        }
        Ok(StateVector {
            basis,
            amplitudes: amplitudes / C64::from(norm),
            truncation_weight,
        })
    }

    /// Exactly representable state built from amplitudes.
    pub fn from_amplitudes(basis: Arc<FockBasis>, amplitudes: CVector) -> Result<Self> {
        Self::new(basis, amplitudes, 0.0)
    }

    /// Project a normalised infinite-space state onto the basis; the lost
    /// norm becomes the truncation weight.
    pub fn from_fn_truncated(basis: Arc<FockBasis>, f: impl Fn(&[u32]) -> C64) -> Result<Self> {
        let amplitudes = CVector::from_iterator(basis.dimension(), basis.iter().map(&f));
        let kept = amplitudes.norm_squared();
        let weight = (1.0 - kept).clamp(0.0, 1.0);
        Self::new(basis, amplitudes, weight)
    }

    /// Build from `(occupations, amplitude)` pairs; unspecified tuples are zero.
    pub fn from_triples(basis: Arc<FockBasis>, entries: &[(Vec<u32>, C64)]) -> Result<Self> {
        let mut amplitudes = CVector::zeros(basis.dimension());
        for (occ, amp) in entries {
            if occ.len() != basis.mode_count() {
                return Err(Error::LengthMismatch {
                    expected: basis.mode_count(),
                    got: occ.len(),
                });
            }
            let i = basis.index_of(occ).ok_or_else(|| Error::CutoffExceeded {
                occupations: occ.iter().map(|&n| n as usize).collect(),
                n_max: basis.n_max(),
            })?;
            amplitudes[i] += *amp;
        }
        Self::from_amplitudes(basis, amplitudes)
    }

    /// `(occupations, amplitude)` for every basis element, in canonical order.
    pub fn to_triples(&self) -> Vec<(Vec<u32>, C64)> {
        self.basis
            .iter()
            .zip(self.amplitudes.iter())
            .map(|(occ, &a)| (occ.to_vec(), a))
            .collect()
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn truncation_weight(&self) -> f64 {
        self.truncation_weight
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `U|ψ⟩` for a unitary `U`; the truncation weight is carried over.
    pub fn evolve(&self, op: &LinearOperator) -> Result<StateVector> {
        let amps = op.apply(self)?;
        Self::new(self.basis.clone(), amps, self.truncation_weight)
    }

    /// Same state on a basis with more modes, the extra modes in vacuum.
    pub fn embed(&self, target: Arc<FockBasis>) -> Result<StateVector> {
        if target.mode_count() < self.basis.mode_count() {
            return Err(Error::WrongModeCount {
                expected: self.basis.mode_count(),
                got: target.mode_count(),
            });
        }
        let mut amps = CVector::zeros(target.dimension());
        let mut occ = vec![0_u32; target.mode_count()];
        let k = self.basis.mode_count();
        for (i, src) in self.basis.iter().enumerate() {
            let a = self.amplitudes[i];
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            occ[..k].copy_from_slice(src);
            let j = target.index_of(&occ).ok_or_else(|| Error::CutoffExceeded {
                occupations: src.iter().map(|&n| n as usize).collect(),
                n_max: target.n_max(),
            })?;
            amps[j] = a;
        }
        Self::new(target, amps, self.truncation_weight)
    }

    /// `⟨ψ| W |ψ⟩` for an operator word (leftmost factor applied last),
    /// evaluated by index shifts without building matrices.
    pub fn product_expectation(&self, word: &[Ladder]) -> Result<C64> {
        let mut v = self.amplitudes.clone();
        for &op in word.iter().rev() {
            v = apply_ladder(&self.basis, op, &v)?;
        }
        Ok(self.amplitudes.dotc(&v))
    }
}

/// Number state `|n₁,…,n_K⟩`.
pub fn number_state(basis: &Arc<FockBasis>, occupations: &[usize]) -> Result<StateVector> {
    if occupations.len() != basis.mode_count() {
        return Err(Error::LengthMismatch {
            expected: basis.mode_count(),
            got: occupations.len(),
        });
    }
    let total: usize = occupations.iter().sum();
    if total > basis.n_max() {
        return Err(Error::CutoffExceeded {
            occupations: occupations.to_vec(),
            n_max: basis.n_max(),
        });
    }
    let occ: Vec<u32> = occupations.iter().map(|&n| n as u32).collect();
    let i = basis.index_of(&occ).expect("tuple within cutoff is in the basis");
    let mut amps = CVector::zeros(basis.dimension());
    amps[i] = C64::new(1.0, 0.0);
    StateVector::from_amplitudes(basis.clone(), amps)
}

/// Vacuum state.
pub fn vacuum(basis: &Arc<FockBasis>) -> StateVector {
    number_state(basis, &vec![0; basis.mode_count()]).expect("vacuum is always representable")
}

/// `P(N > n_max)` for `N ~ Poisson(mean)`, summed from the tail side.
pub fn poisson_tail(mean: f64, n_max: usize) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    let first = n_max + 1;
    let ln_fact: f64 = (1..=first).map(|k| (k as f64).ln()).sum();
    let mut term = (-mean + first as f64 * mean.ln() - ln_fact).exp();
    let mut total = 0.0;
    let mut n = first;
    loop {
        total += term;
        n += 1;
        term *= mean / n as f64;
        if (n as f64) > mean && term <= total * 1e-18 {
            break;
        }
        if term == 0.0 && (n as f64) > mean {
            break;
        }
    }
    total.min(1.0)
}

/// Product coherent state `|α₁⟩⊗…⊗|α_K⟩`, renormalised over the basis.
pub fn coherent_state(basis: &Arc<FockBasis>, alphas: &[C64]) -> Result<StateVector> {
    if alphas.len() != basis.mode_count() {
        return Err(Error::LengthMismatch {
            expected: basis.mode_count(),
            got: alphas.len(),
        });
    }
    let mean: f64 = alphas.iter().map(|a| a.norm_sqr()).sum();
    let prefactor = (-mean / 2.0).exp();
    // per-mode αⁿ/√n! tables
    let tables: Vec<Vec<C64>> = alphas
        .iter()
        .map(|&a| {
            let mut t = Vec::with_capacity(basis.n_max() + 1);
            let mut c = C64::new(1.0, 0.0);
            t.push(c);
            for n in 1..=basis.n_max() {
                c = c * a / (n as f64).sqrt();
                t.push(c);
            }
            t
        })
        .collect();
    let amplitudes = CVector::from_iterator(
        basis.dimension(),
        basis.iter().map(|occ| {
            occ.iter()
                .zip(&tables)
                .fold(C64::new(prefactor, 0.0), |acc, (&n, t)| acc * t[n as usize])
        }),
    );
    StateVector::new(basis.clone(), amplitudes, poisson_tail(mean, basis.n_max()))
}

/// Random normalised state, real and imaginary parts uniform on `[−1, 1]`.
pub fn random_state<R: rand::Rng + ?Sized>(basis: &Arc<FockBasis>, rng: &mut R) -> StateVector {
    let amplitudes = CVector::from_fn(basis.dimension(), |_, _| {
        C64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
    });
    StateVector::from_amplitudes(basis.clone(), amplitudes).expect("non-zero random amplitudes")
}

/// Weighted ensemble of pure states on a common basis.
#[derive(Debug, Clone)]
pub struct MixedState {
    components: Vec<(f64, StateVector)>,
}

impl MixedState {
    /// Weights are normalised to sum to one.
    pub fn new(components: Vec<(f64, StateVector)>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty ensemble".into()))?;
        let basis = first.1.basis().clone();
        let mut total = 0.0;
        for (w, s) in &components {
            if !(*w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidParameter(format!("ensemble weight {w}")));
            }
            if **s.basis() != *basis {
                return Err(Error::BasisMismatch);
            }
            total += w;
        }
        if total <= 0.0 {
            return Err(Error::InvalidParameter("ensemble weights sum to zero".into()));
        }
        Ok(MixedState {
            components: components.into_iter().map(|(w, s)| (w / total, s)).collect(),
        })
    }

    pub fn components(&self) -> &[(f64, StateVector)] {
        &self.components
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        self.components[0].1.basis()
    }

    /// Weighted truncation weight.
    pub fn truncation_weight(&self) -> f64 {
        self.components.iter().map(|(w, s)| w * s.truncation_weight()).sum()
    }

    pub fn evolve(&self, op: &LinearOperator) -> Result<MixedState> {
        let components = self
            .components
            .iter()
            .map(|(w, s)| Ok((*w, s.evolve(op)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(MixedState { components })
    }
}

/// Dense operator on a Fock basis.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    basis: Arc<FockBasis>,
    matrix: CMatrix,
}

impl LinearOperator {
    pub fn new(basis: Arc<FockBasis>, matrix: CMatrix) -> Result<Self> {
        let d = basis.dimension();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::LengthMismatch {
                expected: d,
                got: matrix.nrows(),
            });
        }
        Ok(LinearOperator { basis, matrix })
    }

    pub fn identity(basis: &Arc<FockBasis>) -> Result<Self> {
        basis.check_operator_size()?;
        let d = basis.dimension();
        Ok(LinearOperator {
            basis: basis.clone(),
            matrix: CMatrix::identity(d, d),
        })
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn adjoint(&self) -> LinearOperator {
        LinearOperator {
            basis: self.basis.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    /// Matrix product `self · other`.
    pub fn compose(&self, other: &LinearOperator) -> Result<LinearOperator> {
        if *self.basis != *other.basis {
            return Err(Error::BasisMismatch);
        }
        Ok(LinearOperator {
            basis: self.basis.clone(),
            matrix: &self.matrix * &other.matrix,
        })
    }

    /// `O|ψ⟩` as raw (unnormalised) amplitudes.
    pub fn apply(&self, state: &StateVector) -> Result<CVector> {
        if *self.basis != **state.basis() {
            return Err(Error::BasisMismatch);
        }
        Ok(&self.matrix * state.amplitudes())
    }

    /// `⟨ψ|O|ψ⟩`.
    pub fn expectation(&self, state: &StateVector) -> Result<C64> {
        let v = self.apply(state)?;
        Ok(state.amplitudes().dotc(&v))
    }

    pub fn unitarity_residual(&self) -> f64 {
        linalg::unitarity_residual(&self.matrix)
    }
}

/// Truncated `aₖ`: `⟨…,nₖ−1,…| aₖ |…,nₖ,…⟩ = √nₖ`.
pub fn annihilation(basis: &Arc<FockBasis>, mode: usize) -> Result<LinearOperator> {
    basis.check_mode(mode)?;
    basis.check_operator_size()?;
    let d = basis.dimension();
    let mut m = CMatrix::zeros(d, d);
    for (i, &target) in basis.lowered[mode].iter().enumerate() {
        if target != NO_INDEX {
            let n = basis.occupations(i)[mode] as f64;
            m[(target as usize, i)] = C64::new(n.sqrt(), 0.0);
        }
    }
    Ok(LinearOperator {
        basis: basis.clone(),
        matrix: m,
    })
}

/// Truncated `aₖ†`, the adjoint of [`annihilation`].
pub fn creation(basis: &Arc<FockBasis>, mode: usize) -> Result<LinearOperator> {
    Ok(annihilation(basis, mode)?.adjoint())
}

/// `aₖ†aₖ`, diagonal.
pub fn number_operator(basis: &Arc<FockBasis>, mode: usize) -> Result<LinearOperator> {
    basis.check_mode(mode)?;
    basis.check_operator_size()?;
    let d = basis.dimension();
    let diag = CVector::from_iterator(
        d,
        basis.iter().map(|occ| C64::new(occ[mode] as f64, 0.0)),
    );
    Ok(LinearOperator {
        basis: basis.clone(),
        matrix: CMatrix::from_diagonal(&diag),
    })
}
