//! SU(2) and U(2) transformations of two mode amplitudes, the rotations
//! they induce on `(j₁, j₂, j₃)`, and their unitary lifts to Fock space.
//!
//! Conventions:
//!
//! ```text
//! 𝒰 = exp(iθ u·σ/2) = cos(θ/2) I + i sin(θ/2) u·σ
//! R_{kℓ} = ½ tr(σₗ 𝒰† σₖ 𝒰)
//! U = exp(iθ a†Va),  U† a U = 𝒰 a,  U† j U = R j
//! ```

use std::collections::HashMap;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::sync::Arc;

use nalgebra::{Matrix2, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::fock::{FockBasis, LinearOperator};
use crate::spin::AngularMomentumSet;
use crate::{linalg, CMatrix, Error, Result, C64};

pub type Matrix2c = Matrix2<C64>;

const UNITARY_TOL: f64 = 1e-12;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Pauli matrix `σₖ`, `k ∈ {1, 2, 3}`.
pub fn pauli(k: usize) -> Matrix2c {
    match k {
        1 => Matrix2c::new(c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)),
        2 => Matrix2c::new(c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)),
        3 => Matrix2c::new(c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)),
        _ => panic!("Pauli index must be 1, 2 or 3, got {k}"),
    }
}

fn max_abs2(m: &Matrix2c) -> f64 {
    m.iter().fold(0.0_f64, |a, z| a.max(z.norm()))
}

fn unitarity_residual2(m: &Matrix2c) -> f64 {
    max_abs2(&(m.adjoint() * m - Matrix2c::identity()))
}

/// Frobenius distance between two 2×2 matrices after the best global phase.
pub fn phase_aligned_distance2(a: &Matrix2c, b: &Matrix2c) -> f64 {
    let overlap: C64 = a.iter().zip(b.iter()).map(|(x, y)| y.conj() * x).sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        c(1., 0.)
    };
    (a - b * phase).norm()
}

/// Anything represented by a 2×2 unitary acting on a pair of mode amplitudes.
pub trait ModeMatrix {
    fn matrix2(&self) -> Matrix2c;
}

/// Element of SU(2) parametrised by angle and unit axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SU2Element {
    theta: f64,
    axis: Vector3<f64>,
    matrix: Matrix2c,
}

impl SU2Element {
    pub fn identity() -> Self {
        SU2Element {
            theta: 0.0,
            axis: Vector3::z(),
            matrix: Matrix2c::identity(),
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn axis(&self) -> Vector3<f64> {
        self.axis
    }

    pub fn matrix(&self) -> &Matrix2c {
        &self.matrix
    }

    /// Recover `(θ, u)` from a determinant-one unitary. `θ ∈ [0, 2π]`; the
    /// axis defaults to `e₃` when `θ` is 0 or 2π.
    pub fn from_matrix(s: &Matrix2c) -> Result<Self> {
        let res = unitarity_residual2(s);
        let det_res = (s.determinant() - c(1., 0.)).norm();
        if res > 1e-10 || det_res > 1e-10 {
            return Err(Error::NotUnitary(res.max(det_res)));
        }
        let cos_half = s[(0, 0)].re;
        let sv = Vector3::new(s[(0, 1)].im, s[(0, 1)].re, s[(0, 0)].im);
        let sin_half = sv.norm();
        let theta = 2.0 * sin_half.atan2(cos_half);
        let axis = if sin_half > 0.0 { sv / sin_half } else { Vector3::z() };
        Ok(SU2Element {
            theta,
            axis,
            matrix: *s,
        })
    }

    pub fn compose(&self, other: &SU2Element) -> SU2Element {
        let m = self.matrix * other.matrix;
        SU2Element::from_matrix(&m).unwrap_or(SU2Element {
            theta: self.theta,
            axis: self.axis,
            matrix: m,
        })
    }

    pub fn inverse(&self) -> SU2Element {
        SU2Element {
            theta: -self.theta,
            axis: self.axis,
            matrix: self.matrix.adjoint(),
        }
    }

    /// `θ u·j` on the given angular-momentum set.
    pub fn generator(&self, set: &AngularMomentumSet) -> CMatrix {
        set.along(&self.axis) * C64::from(self.theta)
    }
}

impl ModeMatrix for SU2Element {
    fn matrix2(&self) -> Matrix2c {
        self.matrix
    }
}

/// `𝒰 = cos(θ/2) I + i sin(θ/2) u·σ`.
pub fn su2_from_axis_angle(theta: f64, axis: Vector3<f64>) -> Result<SU2Element> {
    let norm = axis.norm();
    if !theta.is_finite() || (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NonUnitDirection { norm });
    }
    let (s, co) = (0.5 * theta).sin_cos();
    let u_sigma = pauli(1) * c(axis[0], 0.) + pauli(2) * c(axis[1], 0.) + pauli(3) * c(axis[2], 0.);
    let matrix = Matrix2c::identity() * c(co, 0.) + u_sigma * c(0., s);
    Ok(SU2Element {
        theta,
        axis,
        matrix,
    })
}

/// Arbitrary 2×2 unitary on a pair of modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeUnitary2(Matrix2c);

impl ModeUnitary2 {
    pub fn new(m: Matrix2c) -> Result<Self> {
        let res = unitarity_residual2(&m);
        if !(res <= UNITARY_TOL) {
            return Err(Error::NotUnitary(res));
        }
        Ok(ModeUnitary2(m))
    }

    /// Row-major entries `[m₁₁, m₁₂, m₂₁, m₂₂]`.
    pub fn from_row_major(e: [C64; 4]) -> Result<Self> {
        Self::new(Matrix2c::new(e[0], e[1], e[2], e[3]))
    }

    pub fn row_major(&self) -> [C64; 4] {
        [self.0[(0, 0)], self.0[(0, 1)], self.0[(1, 0)], self.0[(1, 1)]]
    }

    pub fn identity() -> Self {
        ModeUnitary2(Matrix2c::identity())
    }

    pub fn matrix(&self) -> &Matrix2c {
        &self.0
    }

    pub fn compose(&self, other: &ModeUnitary2) -> ModeUnitary2 {
        ModeUnitary2(self.0 * other.0)
    }

    pub fn inverse(&self) -> ModeUnitary2 {
        ModeUnitary2(self.0.adjoint())
    }

    /// Split into `e^{iχ} S` with `S ∈ SU(2)` and `χ = arg(det)/2`.
    pub fn split_phase(&self) -> (f64, SU2Element) {
        let chi = 0.5 * self.0.determinant().arg();
        let s = self.0 * C64::from_polar(1.0, -chi);
        let element = SU2Element::from_matrix(&s).expect("unitary with unit determinant");
        (chi, element)
    }

    pub fn unitarity_residual(&self) -> f64 {
        unitarity_residual2(&self.0)
    }
}

impl ModeMatrix for ModeUnitary2 {
    fn matrix2(&self) -> Matrix2c {
        self.0
    }
}

impl From<SU2Element> for ModeUnitary2 {
    fn from(e: SU2Element) -> Self {
        ModeUnitary2(e.matrix)
    }
}

/// Proper rotation of `(j₁, j₂, j₃)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3(Matrix3<f64>);

impl Rotation3 {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let orth = (m.transpose() * m - Matrix3::identity()).abs().max();
        let det = (m.determinant() - 1.0).abs();
        if orth > 1e-12 || det > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "not a proper rotation (orthogonality {orth:e}, det residual {det:e})"
            )));
        }
        Ok(Rotation3(m))
    }

    pub fn identity() -> Self {
        Rotation3(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn compose(&self, other: &Rotation3) -> Rotation3 {
        Rotation3(self.0 * other.0)
    }

    pub fn inverse(&self) -> Rotation3 {
        Rotation3(self.0.transpose())
    }
}

/// `R_{kℓ} = ½ tr(σₗ 𝒰† σₖ 𝒰)`; a global phase of `𝒰` cancels.
pub fn rotation_of<T: ModeMatrix + ?Sized>(element: &T) -> Rotation3 {
    let u = element.matrix2();
    let ud = u.adjoint();
    let r = Matrix3::from_fn(|k, l| 0.5 * (pauli(l + 1) * ud * pauli(k + 1) * u).trace().re);
    debug_assert!((r.transpose() * r - Matrix3::identity()).abs().max() < 1e-10);
    Rotation3(r)
}

/// Sign of a standard rotation angle `θ_{±m} = ±π/m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// `U_{k,±m} = exp(±i(π/m) jₖ)` for `k ∈ {1,2,3}`, `m ∈ {2,4}`.
pub fn standard_element(k: usize, sign: Sign, m: u32) -> Result<SU2Element> {
    if !(1..=3).contains(&k) {
        return Err(Error::InvalidParameter(format!("axis index {k} not in 1..=3")));
    }
    if m != 2 && m != 4 {
        return Err(Error::InvalidParameter(format!("m = {m} not in {{2, 4}}")));
    }
    let mut axis = Vector3::zeros();
    axis[k - 1] = 1.0;
    su2_from_axis_angle(sign.value() * PI / f64::from(m), axis)
}

/// Beam-splitter matrices `𝒰_{k,±m}` for `k ∈ {1, 2}`.
pub fn beam_splitter_matrices(k: usize, sign: Sign, m: u32) -> Result<ModeUnitary2> {
    if k != 1 && k != 2 {
        return Err(Error::InvalidParameter(format!(
            "beam-splitter axis must be 1 or 2, got {k}"
        )));
    }
    standard_element(k, sign, m).map(ModeUnitary2::from)
}

/// Symmetric beam splitter `(1/√2)[[1, i], [i, 1]]`.
pub fn sbs() -> ModeUnitary2 {
    let h = FRAC_1_SQRT_2;
    ModeUnitary2(Matrix2c::new(c(h, 0.), c(0., h), c(0., h), c(h, 0.)))
}

/// Phase-difference shift `diag(e^{iφ}, e^{−iφ})`.
pub fn pds(phi: f64) -> ModeUnitary2 {
    ModeUnitary2(Matrix2c::new(
        C64::from_polar(1.0, phi),
        c(0., 0.),
        c(0., 0.),
        C64::from_polar(1.0, -phi),
    ))
}

/// `(a_x, a_y) ↦ (a₁, a₂) = ((a_x + i a_y)/√2, (a_x − i a_y)/√2)`.
pub fn circular_from_linear() -> ModeUnitary2 {
    let h = FRAC_1_SQRT_2;
    ModeUnitary2(Matrix2c::new(c(h, 0.), c(0., h), c(h, 0.), c(0., -h)))
}

/// One optical element of a two-arm interferometer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OpticalElement {
    Sbs,
    Pds(f64),
}

impl OpticalElement {
    pub fn matrix(&self) -> ModeUnitary2 {
        match *self {
            OpticalElement::Sbs => sbs(),
            OpticalElement::Pds(phi) => pds(phi),
        }
    }
}

/// Product of elements written left to right, i.e. the rightmost element
/// acts first on the amplitudes.
pub fn product(elements: &[OpticalElement]) -> ModeUnitary2 {
    elements
        .iter()
        .fold(ModeUnitary2::identity(), |acc, e| acc.compose(&e.matrix()))
}

/// `PDS(δ)·SBS·PDS(φ)·SBS·PDS(ψ)` times `e^{iχ}` reproduces the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MziDecomposition {
    pub delta: f64,
    pub phi: f64,
    pub psi: f64,
    pub global_phase: f64,
    /// Phase-aligned Frobenius distance between the product and the target.
    pub residual: f64,
}

impl MziDecomposition {
    pub fn elements(&self) -> [OpticalElement; 5] {
        [
            OpticalElement::Pds(self.delta),
            OpticalElement::Sbs,
            OpticalElement::Pds(self.phi),
            OpticalElement::Sbs,
            OpticalElement::Pds(self.psi),
        ]
    }

    pub fn product(&self) -> ModeUnitary2 {
        product(&self.elements())
    }
}

/// Mach–Zehnder decomposition of any U(2) matrix, verified numerically.
pub fn mzi_decompose(target: &ModeUnitary2) -> MziDecomposition {
    let (chi, s) = target.split_phase();
    // PDS(δ)·SBS·PDS(φ)·SBS·PDS(ψ) = Rz(2δ) Ry(2φ) Rz(−2ψ) · iσ₁, so a ZYZ
    // split of S·(−iσ₁) yields the three phases.
    let sp = s.matrix() * (pauli(1) * c(0., -1.));
    let (alpha, beta) = (sp[(0, 0)], sp[(0, 1)]);
    let b = 2.0 * beta.norm().atan2(alpha.norm());
    let arg = |z: C64| if z.norm() > 1e-300 { z.arg() } else { 0.0 };
    let a = arg(alpha) + arg(beta);
    let cc = arg(alpha) - arg(beta);
    let mut out = MziDecomposition {
        delta: 0.5 * a,
        phi: 0.5 * b,
        psi: -0.5 * cc,
        global_phase: chi,
        residual: 0.0,
    };
    out.residual = phase_aligned_distance2(target.matrix(), out.product().matrix());
    out
}

/// Residuals of the textbook parameter choice (`δ = 0`, `φ = θ/2 − π/2`,
/// outer phase `π/2`) against `𝒰_{2}(θ)` for both placements of the two
/// outer phase shifts: `[δ on the output side, δ on the input side]`.
pub fn mzi_candidate_residuals(theta: f64) -> [f64; 2] {
    let target = ModeUnitary2::from(
        su2_from_axis_angle(theta, Vector3::y()).expect("unit axis"),
    );
    let inner = OpticalElement::Pds(0.5 * theta - FRAC_PI_2);
    let orders = [
        [
            OpticalElement::Pds(0.0),
            OpticalElement::Sbs,
            inner,
            OpticalElement::Sbs,
            OpticalElement::Pds(FRAC_PI_2),
        ],
        [
            OpticalElement::Pds(FRAC_PI_2),
            OpticalElement::Sbs,
            inner,
            OpticalElement::Sbs,
            OpticalElement::Pds(0.0),
        ],
    ];
    orders.map(|o| phase_aligned_distance2(target.matrix(), product(&o).matrix()))
}

/// Generator `G = a†Ha` restricted to modes `(p, q)` for a 2×2 Hermitian `H`.
pub fn pair_generator(basis: &FockBasis, modes: (usize, usize), h: &Matrix2c) -> Result<CMatrix> {
    check_pair(basis, modes)?;
    basis.check_operator_size()?;
    let d = basis.dimension();
    let pair = [modes.0, modes.1];
    let mut g = CMatrix::zeros(d, d);
    let mut occ = Vec::with_capacity(basis.mode_count());
    for i in 0..d {
        let src = basis.occupations(i);
        for (ki, &k) in pair.iter().enumerate() {
            for (li, &l) in pair.iter().enumerate() {
                let coeff = h[(ki, li)];
                if coeff == c(0., 0.) {
                    continue;
                }
                if k == l {
                    g[(i, i)] += coeff * f64::from(src[k]);
                } else if src[l] > 0 {
                    occ.clear();
                    occ.extend_from_slice(src);
                    let amp = (f64::from(src[l]) * f64::from(src[k] + 1)).sqrt();
                    occ[l] -= 1;
                    occ[k] += 1;
                    let target = basis.index_of(&occ).expect("number-conserving hop");
                    g[(target, i)] += coeff * amp;
                }
            }
        }
    }
    Ok(g)
}

fn check_pair(basis: &FockBasis, (p, q): (usize, usize)) -> Result<()> {
    let n = basis.mode_count();
    if p == q || p >= n || q >= n {
        return Err(Error::InvalidModePair(p, q));
    }
    Ok(())
}

/// Labels grouping basis states that a pair generator can connect: the
/// occupations of the other modes together with `n_p + n_q`.
pub fn pair_sectors(basis: &FockBasis, (p, q): (usize, usize)) -> Vec<usize> {
    let mut labels: HashMap<Vec<u32>, usize> = HashMap::new();
    basis
        .iter()
        .map(|occ| {
            let mut key = occ.to_vec();
            key[p] += key[q];
            key[q] = 0;
            let next = labels.len();
            *labels.entry(key).or_insert(next)
        })
        .collect()
}

/// Hermitian `H` with `exp(iH) = W`, built as `χI + θ u·σ/2`.
pub fn log_hermitian<T: ModeMatrix + ?Sized>(element: &T) -> Result<Matrix2c> {
    let w = ModeUnitary2::new(element.matrix2())?;
    let (chi, s) = w.split_phase();
    let u = s.axis();
    let v = (pauli(1) * c(u[0], 0.) + pauli(2) * c(u[1], 0.) + pauli(3) * c(u[2], 0.)) * c(0.5, 0.);
    Ok(Matrix2c::identity() * c(chi, 0.) + v * c(s.theta(), 0.))
}

/// Fock-space unitary `U = exp(i a†Ha)` on modes `(p, q)` with
/// `U† a U = 𝒰 a` for the pair.
pub fn fock_lift<T: ModeMatrix + ?Sized>(
    element: &T,
    basis: &Arc<FockBasis>,
    modes: (usize, usize),
) -> Result<LinearOperator> {
    check_pair(basis, modes)?;
    let h = log_hermitian(element)?;
    let g = pair_generator(basis, modes, &h)?;
    let u = linalg::exp_i_hermitian_blocks(&g, 1.0, &pair_sectors(basis, modes));
    LinearOperator::new(basis.clone(), u)
}

/// `exp(i(2χ j₀ + θ u·j))` on any angular-momentum realization.
pub fn lift_on_set<T: ModeMatrix + ?Sized>(element: &T, set: &AngularMomentumSet) -> Result<CMatrix> {
    let w = ModeUnitary2::new(element.matrix2())?;
    let (chi, s) = w.split_phase();
    let g = s.generator(set) + set.j0() * C64::from(2.0 * chi);
    Ok(set.exp_i(&g, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{basis_build, number_state};
    use crate::spin::schwinger_set;
    use std::f64::consts::FRAC_PI_4;

    fn close(a: &Matrix2c, b: &Matrix2c, tol: f64) -> bool {
        max_abs2(&(a - b)) < tol
    }

    #[test]
    fn axis_angle_examples() {
        let id = su2_from_axis_angle(0.0, Vector3::x()).unwrap();
        assert!(close(id.matrix(), &Matrix2c::identity(), 1e-15));
        let z = su2_from_axis_angle(FRAC_PI_2, Vector3::z()).unwrap();
        let expect = Matrix2c::new(
            C64::from_polar(1.0, FRAC_PI_4),
            c(0., 0.),
            c(0., 0.),
            C64::from_polar(1.0, -FRAC_PI_4),
        );
        assert!(close(z.matrix(), &expect, 1e-15));
        let x = su2_from_axis_angle(PI, Vector3::x()).unwrap();
        assert!(close(x.matrix(), &(pauli(1) * c(0., 1.)), 1e-15));
        assert!((x.matrix().determinant() - c(1., 0.)).norm() < 1e-12);
        assert!(su2_from_axis_angle(1.0, Vector3::new(1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn rotation_examples() {
        let z = su2_from_axis_angle(FRAC_PI_2, Vector3::z()).unwrap();
        let expect = Matrix3::new(0., 1., 0., -1., 0., 0., 0., 0., 1.);
        assert!((rotation_of(&z).matrix() - expect).abs().max() < 1e-15);
        assert_eq!(*rotation_of(&SU2Element::identity()).matrix(), Matrix3::identity());
        let x = su2_from_axis_angle(PI, Vector3::x()).unwrap();
        let expect = Matrix3::from_diagonal(&Vector3::new(1., -1., -1.));
        assert!((rotation_of(&x).matrix() - expect).abs().max() < 1e-15);
    }

    #[test]
    fn global_phase_leaves_rotation_unchanged() {
        let e = su2_from_axis_angle(0.7, Vector3::new(0.6, 0.0, 0.8)).unwrap();
        let w = ModeUnitary2::new(e.matrix() * C64::from_polar(1.0, 1.234)).unwrap();
        assert!((rotation_of(&w).matrix() - rotation_of(&e).matrix()).abs().max() < 1e-15);
    }

    #[test]
    fn composition_and_inverse() {
        let a = su2_from_axis_angle(1.1, Vector3::new(0.0, 0.6, 0.8)).unwrap();
        let id = a.compose(&a.inverse());
        assert!(close(id.matrix(), &Matrix2c::identity(), 1e-15));
        let q = su2_from_axis_angle(FRAC_PI_4, Vector3::z()).unwrap();
        let h = q.compose(&q);
        assert!((h.theta() - FRAC_PI_2).abs() < 1e-14);
        assert!((h.axis() - Vector3::z()).norm() < 1e-14);
    }

    #[test]
    fn standard_elements() {
        let e = standard_element(3, Sign::Plus, 4).unwrap();
        assert_eq!(e.theta(), FRAC_PI_4);
        assert_eq!(e.axis(), Vector3::z());
        let e = standard_element(2, Sign::Minus, 2).unwrap();
        assert_eq!(e.theta(), -FRAC_PI_2);
        assert!(standard_element(4, Sign::Plus, 2).is_err());
        assert!(standard_element(1, Sign::Plus, 3).is_err());
        // quarter turns permute the remaining axes up to sign
        for k in 1..=3 {
            for s in [Sign::Plus, Sign::Minus] {
                let r = rotation_of(&standard_element(k, s, 2).unwrap());
                for row in 0..3 {
                    let nonzero: Vec<f64> = r.matrix().row(row).iter().copied().filter(|x| x.abs() > 1e-12).collect();
                    assert_eq!(nonzero.len(), 1);
                    assert!((nonzero[0].abs() - 1.0).abs() < 1e-14);
                }
                assert!((r.matrix()[(k - 1, k - 1)] - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn beam_splitter_forms() {
        let u = beam_splitter_matrices(2, Sign::Plus, 2).unwrap();
        let (s, co) = FRAC_PI_4.sin_cos();
        let expect = Matrix2c::new(c(co, 0.), c(s, 0.), c(-s, 0.), c(co, 0.));
        assert!(close(u.matrix(), &expect, 1e-15));
        let u = beam_splitter_matrices(1, Sign::Plus, 4).unwrap();
        let (s, co) = (PI / 8.0).sin_cos();
        let expect = Matrix2c::new(c(co, 0.), c(0., s), c(0., s), c(co, 0.));
        assert!(close(u.matrix(), &expect, 1e-15));
        for m in [2, 4] {
            for sign in [Sign::Plus, Sign::Minus] {
                let r = rotation_of(&beam_splitter_matrices(2, sign, m).unwrap());
                let t = sign.value() * PI / f64::from(m);
                let (s, co) = t.sin_cos();
                // R from 2.11 rotates j about e₂ in the passive sense
                let expect = Matrix3::new(co, 0., -s, 0., 1., 0., s, 0., co);
                assert!((r.matrix() - expect).abs().max() < 1e-12, "m={m} {sign:?}");
            }
        }
        assert!(beam_splitter_matrices(3, Sign::Plus, 2).is_err());
    }

    #[test]
    fn optical_elements() {
        let sq = sbs().compose(&sbs());
        assert!(close(sq.matrix(), &(pauli(1) * c(0., 1.)), 1e-15));
        assert!(close(pds(0.0).matrix(), &Matrix2c::identity(), 0.0 + 1e-300));
        let expect = Matrix2c::new(c(0., 1.), c(0., 0.), c(0., 0.), c(0., -1.));
        assert!(close(pds(FRAC_PI_2).matrix(), &expect, 1e-15));
    }

    #[test]
    fn circular_basis() {
        let l = circular_from_linear();
        let h = FRAC_1_SQRT_2;
        let out = l.matrix() * nalgebra::Vector2::new(c(1., 0.), c(0., 0.));
        assert!((out[0] - c(h, 0.)).norm() < 1e-16 && (out[1] - c(h, 0.)).norm() < 1e-16);
        let out = l.matrix() * nalgebra::Vector2::new(c(h, 0.), c(0., h));
        assert!(out[0].norm() < 1e-16 && (out[1] - c(1., 0.)).norm() < 1e-15);
        assert!(l.unitarity_residual() < 1e-15);
    }

    #[test]
    fn mzi_reconstructs_targets() {
        let targets = [
            ModeUnitary2::identity(),
            beam_splitter_matrices(2, Sign::Plus, 4).unwrap(),
            beam_splitter_matrices(1, Sign::Plus, 4).unwrap(),
            circular_from_linear(),
            sbs(),
            pds(0.3),
        ];
        for t in targets {
            let d = mzi_decompose(&t);
            assert!(d.residual < 1e-10, "{t:?}: {}", d.residual);
            let exact = d.product().matrix() * C64::from_polar(1.0, d.global_phase);
            assert!(close(&exact, t.matrix(), 1e-12));
        }
    }

    #[test]
    fn textbook_mzi_parameters_fit_one_ordering() {
        for theta in [FRAC_PI_2, -FRAC_PI_2, FRAC_PI_4, -FRAC_PI_4] {
            let [output_side, input_side] = mzi_candidate_residuals(theta);
            assert!(output_side < 1e-14, "θ={theta}: {output_side}");
            assert!(input_side > 1e-3);
        }
    }

    #[test]
    fn lift_phase_on_single_photon() {
        let b = basis_build(2, 3).unwrap();
        let u = fock_lift(&standard_element(3, Sign::Plus, 4).unwrap(), &b, (0, 1)).unwrap();
        let s = number_state(&b, &[1, 0]).unwrap();
        let out = u.apply(&s).unwrap();
        let expect = s.amplitudes() * C64::from_polar(1.0, PI / 8.0);
        assert!((out - expect).norm() < 1e-14);
        let id = fock_lift(&SU2Element::identity(), &b, (0, 1)).unwrap();
        assert!(linalg::max_abs(&(id.matrix() - CMatrix::identity(10, 10))) < 1e-15);
        assert!(matches!(
            fock_lift(&SU2Element::identity(), &b, (1, 1)),
            Err(Error::InvalidModePair(1, 1))
        ));
    }

    #[test]
    fn lift_on_set_matches_fock_lift() {
        let b = basis_build(2, 5).unwrap();
        let set = schwinger_set(&b).unwrap();
        let w = circular_from_linear();
        let a = fock_lift(&w, &b, (0, 1)).unwrap();
        let s = lift_on_set(&w, &set).unwrap();
        assert!(linalg::max_abs(&(a.matrix() - s)) < 1e-12);
    }

    #[test]
    fn relation_between_j2_and_j1_rotations() {
        let phi = 0.83;
        let y = su2_from_axis_angle(phi, Vector3::y()).unwrap();
        let x = su2_from_axis_angle(phi, Vector3::x()).unwrap();
        let zm = su2_from_axis_angle(-FRAC_PI_2, Vector3::z()).unwrap();
        let zp = su2_from_axis_angle(FRAC_PI_2, Vector3::z()).unwrap();
        let rhs = zm.compose(&x).compose(&zp);
        assert!(close(y.matrix(), rhs.matrix(), 1e-12));

        let b = basis_build(2, 6).unwrap();
        let lift = |e: &SU2Element| fock_lift(e, &b, (0, 1)).unwrap();
        let rhs = lift(&zm).compose(&lift(&x)).unwrap().compose(&lift(&zp)).unwrap();
        assert!(linalg::max_abs(&(lift(&y).matrix() - rhs.matrix())) < 1e-12);
    }
}
