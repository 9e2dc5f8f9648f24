//! Angular-momentum operator sets, covariance matrices and principal
//! variances.
//!
//! Two realizations are supported: the two-mode Schwinger construction
//!
//! ```text
//! j₀ = (a₁†a₁ + a₂†a₂)/2     j₁ = (a₂†a₁ + a₁†a₂)/2
//! j₂ = i(a₂†a₁ − a₁†a₂)/2    j₃ = (a₁†a₁ − a₂†a₂)/2
//! ```
//!
//! and the (2j+1)-dimensional spin-j matrices in the j₃ eigenbasis ordered
//! `m = j, j−1, …, −j`.

use std::sync::Arc;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::fock::{FockBasis, MixedState, StateVector};
use crate::{linalg, CMatrix, CVector, Error, Result, C64};

/// Which construction produced an [`AngularMomentumSet`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Realization {
    Schwinger { n_max: usize },
    /// Spin `j = twice_j / 2`.
    SpinJ { twice_j: u32 },
    /// Matrices supplied directly, no structural guarantee.
    Custom,
}

/// `j₀, j₁, j₂, j₃` as dense matrices on a common space.
#[derive(Debug, Clone)]
pub struct AngularMomentumSet {
    realization: Realization,
    basis: Option<Arc<FockBasis>>,
    j0: CMatrix,
    j: [CMatrix; 3],
    sectors: Vec<usize>,
}

/// Levi-Civita symbol on indices 0..3.
pub fn levi_civita(k: usize, l: usize, n: usize) -> f64 {
    match (k, l, n) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

impl AngularMomentumSet {
    /// Wrap arbitrary matrices, e.g. to probe [`algebra_report`] with a
    /// deliberately broken set.
    pub fn from_matrices(j0: CMatrix, j1: CMatrix, j2: CMatrix, j3: CMatrix) -> Result<Self> {
        let d = j0.nrows();
        for m in [&j0, &j1, &j2, &j3] {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::LengthMismatch {
                    expected: d,
                    got: m.nrows(),
                });
            }
        }
        Ok(AngularMomentumSet {
            realization: Realization::Custom,
            basis: None,
            j0,
            j: [j1, j2, j3],
            sectors: vec![0; d],
        })
    }

    pub fn realization(&self) -> Realization {
        self.realization
    }

    /// The Fock basis for the Schwinger realization.
    pub fn fock_basis(&self) -> Option<&Arc<FockBasis>> {
        self.basis.as_ref()
    }

    pub fn dimension(&self) -> usize {
        self.j0.nrows()
    }

    pub fn j0(&self) -> &CMatrix {
        &self.j0
    }

    /// `jₖ` for `k ∈ {1, 2, 3}`.
    pub fn component(&self, k: usize) -> &CMatrix {
        &self.j[k - 1]
    }

    /// `(j₁, j₂, j₃)`.
    pub fn vector(&self) -> &[CMatrix; 3] {
        &self.j
    }

    /// `u · j`.
    pub fn along(&self, u: &Vector3<f64>) -> CMatrix {
        &self.j[0] * C64::from(u[0]) + &self.j[1] * C64::from(u[1]) + &self.j[2] * C64::from(u[2])
    }

    /// Invariant-subspace labels (total photon number for the Schwinger
    /// realization); every `jₖ` is block diagonal with respect to them.
    pub fn sectors(&self) -> &[usize] {
        &self.sectors
    }

    /// `exp(iθ H)` for a Hermitian `H` built from this set, block by block.
    pub fn exp_i(&self, generator: &CMatrix, theta: f64) -> CMatrix {
        linalg::exp_i_hermitian_blocks(generator, theta, &self.sectors)
    }

    fn check_state<S: StateLike + ?Sized>(&self, state: &S) -> Result<()> {
        if state.dimension() != self.dimension() {
            return Err(Error::BasisMismatch);
        }
        match (&self.basis, state.fock_basis()) {
            (Some(a), Some(b)) if **a != **b => Err(Error::BasisMismatch),
            _ => Ok(()),
        }
    }
}

/// Two-mode Schwinger realization on a truncated two-mode basis.
pub fn schwinger_set(basis: &Arc<FockBasis>) -> Result<AngularMomentumSet> {
    if basis.mode_count() != 2 {
        return Err(Error::WrongModeCount {
            expected: 2,
            got: basis.mode_count(),
        });
    }
    basis.check_operator_size()?;
    let d = basis.dimension();
    let mut jp = CMatrix::zeros(d, d);
    let mut j0 = CMatrix::zeros(d, d);
    let mut j3 = CMatrix::zeros(d, d);
    for (i, occ) in basis.iter().enumerate() {
        let (n1, n2) = (occ[0], occ[1]);
        j0[(i, i)] = C64::new(0.5 * f64::from(n1 + n2), 0.0);
        j3[(i, i)] = C64::new(0.5 * (f64::from(n1) - f64::from(n2)), 0.0);
        // j₊ = a₁†a₂
        if n2 > 0 {
            let target = basis
                .index_of(&[n1 + 1, n2 - 1])
                .expect("total photon number is conserved");
            jp[(target, i)] = C64::new((f64::from(n1 + 1) * f64::from(n2)).sqrt(), 0.0);
        }
    }
    let jm = jp.adjoint();
    let j1 = (&jp + &jm) * C64::new(0.5, 0.0);
    let j2 = (&jp - &jm) * C64::new(0.0, -0.5);
    Ok(AngularMomentumSet {
        realization: Realization::Schwinger { n_max: basis.n_max() },
        basis: Some(basis.clone()),
        j0,
        j: [j1, j2, j3],
        sectors: basis.totals().to_vec(),
    })
}

/// Spin-j matrices; `j` must be a non-negative multiple of 1/2.
pub fn spin_j_set(j: f64) -> Result<AngularMomentumSet> {
    let twice = 2.0 * j;
    if !(twice >= 0.0) || (twice - twice.round()).abs() > 1e-12 || twice > 1e6 {
        return Err(Error::InvalidSpin(twice));
    }
    Ok(spin_j_set_twice(twice.round() as u32))
}

/// Spin `twice_j / 2` matrices.
pub fn spin_j_set_twice(twice_j: u32) -> AngularMomentumSet {
    let d = twice_j as usize + 1;
    let j = twice_j as f64 / 2.0;
    let m_of = |i: usize| j - i as f64;
    // j₊|m⟩ = √(j(j+1) − m(m+1)) |m+1⟩, and |m+1⟩ sits at index i − 1
    let mut jp = CMatrix::zeros(d, d);
    for i in 1..d {
        let m = m_of(i);
        jp[(i - 1, i)] = C64::new((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let jm = jp.adjoint();
    let j1 = (&jp + &jm) * C64::new(0.5, 0.0);
    let j2 = (&jp - &jm) * C64::new(0.0, -0.5);
    let j3 = CMatrix::from_diagonal(&CVector::from_iterator(
        d,
        (0..d).map(|i| C64::new(m_of(i), 0.0)),
    ));
    let j0 = CMatrix::identity(d, d) * C64::new(j, 0.0);
    AngularMomentumSet {
        realization: Realization::SpinJ { twice_j },
        basis: None,
        j0,
        j: [j1, j2, j3],
        sectors: vec![0; d],
    }
}

/// Anything that can supply weighted pure-state amplitudes.
pub trait StateLike {
    fn dimension(&self) -> usize;
    fn fock_basis(&self) -> Option<&Arc<FockBasis>>;
    /// `(weight, amplitudes)` with weights summing to one.
    fn weighted_amplitudes(&self) -> Vec<(f64, &CVector)>;
    /// Probability mass lost to truncation.
    fn truncation_weight(&self) -> f64 {
        0.0
    }
}

impl StateLike for StateVector {
    fn dimension(&self) -> usize {
        self.basis().dimension()
    }
    fn fock_basis(&self) -> Option<&Arc<FockBasis>> {
        Some(self.basis())
    }
    fn weighted_amplitudes(&self) -> Vec<(f64, &CVector)> {
        vec![(1.0, self.amplitudes())]
    }
    fn truncation_weight(&self) -> f64 {
        StateVector::truncation_weight(self)
    }
}

impl StateLike for MixedState {
    fn dimension(&self) -> usize {
        self.basis().dimension()
    }
    fn fock_basis(&self) -> Option<&Arc<FockBasis>> {
        Some(self.basis())
    }
    fn weighted_amplitudes(&self) -> Vec<(f64, &CVector)> {
        self.components()
            .iter()
            .map(|(w, s)| (*w, s.amplitudes()))
            .collect()
    }
    fn truncation_weight(&self) -> f64 {
        MixedState::truncation_weight(self)
    }
}

/// Raw normalised amplitudes, e.g. a spin-j state.
impl StateLike for CVector {
    fn dimension(&self) -> usize {
        self.len()
    }
    fn fock_basis(&self) -> Option<&Arc<FockBasis>> {
        None
    }
    fn weighted_amplitudes(&self) -> Vec<(f64, &CVector)> {
        vec![(1.0, self)]
    }
}

/// `⟨O⟩` over a (possibly mixed) state.
pub fn expectation<S: StateLike + ?Sized>(op: &CMatrix, state: &S) -> C64 {
    state
        .weighted_amplitudes()
        .into_iter()
        .map(|(w, psi)| psi.dotc(&(op * psi)) * w)
        .sum()
}

/// First and symmetrised second moments of `(j₁, j₂, j₃)`.
struct Moments {
    mean: Vector3<f64>,
    // ⟨jₖ jₗ⟩, complex
    second: Matrix3<C64>,
    imag_residue: f64,
}

fn moments<S: StateLike + ?Sized>(set: &AngularMomentumSet, state: &S) -> Moments {
    let mut mean_c = Vector3::<C64>::zeros();
    let mut second = Matrix3::<C64>::zeros();
    for (w, psi) in state.weighted_amplitudes() {
        let images: Vec<CVector> = set.j.iter().map(|jk| jk * psi).collect();
        for k in 0..3 {
            mean_c[k] += psi.dotc(&images[k]) * w;
            for l in 0..3 {
                // ⟨ψ|jₖ jₗ|ψ⟩ = (jₖψ)†(jₗψ) for Hermitian jₖ
                second[(k, l)] += images[k].dotc(&images[l]) * w;
            }
        }
    }
    let imag_residue = mean_c.iter().fold(0.0_f64, |a, z| a.max(z.im.abs()));
    Moments {
        mean: mean_c.map(|z| z.re),
        second,
        imag_residue,
    }
}

/// `(⟨j₁⟩, ⟨j₂⟩, ⟨j₃⟩)`.
pub fn mean_vector<S: StateLike + ?Sized>(set: &AngularMomentumSet, state: &S) -> Result<Vector3<f64>> {
    set.check_state(state)?;
    let m = moments(set, state);
    debug_assert!(m.imag_residue < 1e-12 * (1.0 + m.mean.norm()));
    Ok(m.mean)
}

/// `⟨j₀⟩`.
pub fn mean_j0<S: StateLike + ?Sized>(set: &AngularMomentumSet, state: &S) -> Result<f64> {
    set.check_state(state)?;
    Ok(expectation(&set.j0, state).re)
}

/// `M_{kℓ} = ½⟨jₖjₗ + jₗjₖ⟩ − ⟨jₖ⟩⟨jₗ⟩`.
pub fn covariance_matrix<S: StateLike + ?Sized>(set: &AngularMomentumSet, state: &S) -> Result<CovarianceMatrix> {
    set.check_state(state)?;
    let m = moments(set, state);
    let mut cov = Matrix3::zeros();
    for k in 0..3 {
        for l in 0..3 {
            let sym = 0.5 * (m.second[(k, l)] + m.second[(l, k)]).re;
            cov[(k, l)] = sym - m.mean[k] * m.mean[l];
        }
    }
    Ok(CovarianceMatrix(cov))
}

/// The Hermitian alternative `M′_{kℓ} = ⟨jₖjₗ⟩ − ⟨jₖ⟩⟨jₗ⟩`; its real part is
/// `M` and its imaginary part is fixed by the commutators.
pub fn complex_covariance<S: StateLike + ?Sized>(set: &AngularMomentumSet, state: &S) -> Result<Matrix3<C64>> {
    set.check_state(state)?;
    let m = moments(set, state);
    Ok(Matrix3::from_fn(|k, l| {
        m.second[(k, l)] - C64::from(m.mean[k] * m.mean[l])
    }))
}

/// 3×3 real symmetric covariance matrix of `(j₁, j₂, j₃)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix(Matrix3<f64>);

/// Smallest eigenvalue tolerated before a covariance matrix counts as not PSD.
pub const PSD_TOLERANCE: f64 = -1e-10;

impl CovarianceMatrix {
    /// Accepts matrices symmetric within 1e-10 and stores the exact symmetric part.
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let asym = (m - m.transpose()).abs().max();
        if asym > 1e-10 || m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(CovarianceMatrix((m + m.transpose()) * 0.5))
    }

    pub fn from_row_major(v: [f64; 9]) -> Result<Self> {
        Self::new(Matrix3::from_row_slice(&v))
    }

    pub fn identity() -> Self {
        CovarianceMatrix(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// Entry `(k, ℓ)` with 1-based indices, matching `M_{k,ℓ}`.
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.0[(k - 1, l - 1)]
    }

    pub fn row_major(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        for r in 0..3 {
            for c in 0..3 {
                out[3 * r + c] = self.0[(r, c)];
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.0).eigenvalues.min()
    }

    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue() >= PSD_TOLERANCE
    }

    /// `R M Rᵗ`.
    pub fn rotated(&self, r: &Matrix3<f64>) -> CovarianceMatrix {
        let m = r * self.0 * r.transpose();
        CovarianceMatrix((m + m.transpose()) * 0.5)
    }

    pub fn max_abs_diff(&self, other: &CovarianceMatrix) -> f64 {
        (self.0 - other.0).abs().max()
    }
}

fn check_unit(u: &Vector3<f64>) -> Result<()> {
    let norm = u.norm();
    if (norm - 1.0).abs() > 1e-9 {
        Err(Error::NonUnitDirection { norm })
    } else {
        Ok(())
    }
}

/// `(Δj_u)² = uᵗ M u`.
pub fn variance_along(m: &CovarianceMatrix, u: &Vector3<f64>) -> Result<f64> {
    check_unit(u)?;
    Ok(u.dot(&(m.0 * u)))
}

/// Symmetric correlation of `u·j` and `v·j`: `uᵗ M v`.
pub fn correlation_along(m: &CovarianceMatrix, u: &Vector3<f64>, v: &Vector3<f64>) -> Result<f64> {
    check_unit(u)?;
    check_unit(v)?;
    Ok(u.dot(&(m.0 * v)))
}

/// Principal variances (descending) and the rotation that diagonalises `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalDecomposition {
    pub variances: [f64; 3],
    /// `R_d`, rows are the principal axes: `M = R_dᵗ diag(variances) R_d`.
    pub rotation: Matrix3<f64>,
    pub axes: [Vector3<f64>; 3],
}

impl PrincipalDecomposition {
    pub fn reassemble(&self) -> Matrix3<f64> {
        let d = Matrix3::from_diagonal(&Vector3::from(self.variances));
        self.rotation.transpose() * d * self.rotation
    }

    /// Spectral projectors, one per group of eigenvalues equal within `tol`,
    /// paired with the group's mean eigenvalue.
    pub fn eigenspace_projectors(&self, tol: f64) -> Vec<(f64, Matrix3<f64>)> {
        let mut out: Vec<(f64, Matrix3<f64>, usize)> = Vec::new();
        for k in 0..3 {
            let p = self.axes[k] * self.axes[k].transpose();
            match out.last_mut() {
                Some((value, proj, count)) if (*value - self.variances[k]).abs() <= tol => {
                    *value = (*value * *count as f64 + self.variances[k]) / (*count + 1) as f64;
                    *proj += p;
                    *count += 1;
                }
                _ => out.push((self.variances[k], p, 1)),
            }
        }
        out.into_iter().map(|(v, p, _)| (v, p)).collect()
    }
}

/// Eigen-decompose `M`: variances sorted descending (stable), each axis
/// with its first non-negligible component positive, and the last axis
/// flipped if needed so that `det R_d = +1`.
pub fn principal_decomposition(m: &CovarianceMatrix) -> PrincipalDecomposition {
    let eig = SymmetricEigen::new(m.0);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut axes = [Vector3::zeros(); 3];
    let mut variances = [0.0; 3];
    for (slot, &i) in order.iter().enumerate() {
        let mut v: Vector3<f64> = eig.eigenvectors.column(i).into_owned();
        v /= v.norm();
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                v = -v;
            }
        }
        axes[slot] = v;
        variances[slot] = eig.eigenvalues[i];
    }
    let columns = Matrix3::from_columns(&axes);
    if columns.determinant() < 0.0 {
        axes[2] = -axes[2];
    }
    let rotation = Matrix3::from_rows(&[
        axes[0].transpose(),
        axes[1].transpose(),
        axes[2].transpose(),
    ]);
    PrincipalDecomposition {
        variances,
        rotation,
        axes,
    }
}

/// Max-abs residuals of the angular-momentum algebra.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgebraReport {
    /// `max |[jₖ, jₗ] − i Σ ε_{kℓn} jₙ|`.
    pub commutators: f64,
    /// `max |[j₀, jₖ]|`.
    pub j0_commutators: f64,
    /// `max |j² − j₀(j₀ + 1)|`.
    pub casimir: f64,
    /// `max |jₖ − jₖ†|`, k = 0..3.
    pub hermiticity: f64,
}

impl AlgebraReport {
    pub fn max_residual(&self) -> f64 {
        self.commutators
            .max(self.j0_commutators)
            .max(self.casimir)
            .max(self.hermiticity)
    }
}

pub fn algebra_report(set: &AngularMomentumSet) -> AlgebraReport {
    let mut commutators = 0.0_f64;
    for k in 0..3 {
        for l in 0..3 {
            let mut expected = CMatrix::zeros(set.dimension(), set.dimension());
            for n in 0..3 {
                let e = levi_civita(k, l, n);
                if e != 0.0 {
                    expected += &set.j[n] * C64::new(0.0, e);
                }
            }
            let c = linalg::commutator(&set.j[k], &set.j[l]);
            commutators = commutators.max(linalg::max_abs(&(c - expected)));
        }
    }
    let j0_commutators = set
        .j
        .iter()
        .map(|jk| linalg::max_abs(&linalg::commutator(&set.j0, jk)))
        .fold(0.0_f64, f64::max);
    let d = set.dimension();
    let j_sq = set.j.iter().fold(CMatrix::zeros(d, d), |acc, jk| acc + jk * jk);
    let casimir_rhs = &set.j0 * (&set.j0 + CMatrix::identity(d, d));
    let casimir = linalg::max_abs(&(j_sq - casimir_rhs));
    let hermiticity = std::iter::once(&set.j0)
        .chain(set.j.iter())
        .map(linalg::hermiticity_residual)
        .fold(0.0_f64, f64::max);
    AlgebraReport {
        commutators,
        j0_commutators,
        casimir,
        hermiticity,
    }
}
