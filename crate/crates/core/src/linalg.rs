//! Small dense complex linear-algebra helpers shared across modules.

use nalgebra::linalg::SymmetricEigen;

use crate::{CMatrix, C64};

/// Conjugate transpose.
pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

/// `[a, b] = ab − ba`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// `max |m − m†|`.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// `max |m†m − I|`.
pub fn unitarity_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    max_abs(&(m.adjoint() * m - CMatrix::identity(n, n)))
}

/// `exp(i t H)` for Hermitian `H`, via eigendecomposition.
pub fn exp_i_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let n = h.nrows();
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    let eig = SymmetricEigen::new(h.clone());
    let phases = eig
        .eigenvalues
        .map(|lambda| C64::from_polar(1.0, t * lambda));
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    scaled * v.adjoint()
}

/// `exp(i t H)` for a Hermitian `H` that is block diagonal with respect to the
/// index partition given by `sectors` (equal labels share a block). Entries
/// coupling different sectors are ignored.
pub fn exp_i_hermitian_blocks(h: &CMatrix, t: f64, sectors: &[usize]) -> CMatrix {
    let n = h.nrows();
    assert_eq!(sectors.len(), n, "sector labels must cover every index");
    let mut out = CMatrix::zeros(n, n);
    for idx in group_by_label(sectors) {
        let k = idx.len();
        let block = CMatrix::from_fn(k, k, |r, c| h[(idx[r], idx[c])]);
        let e = exp_i_hermitian(&block, t);
        for r in 0..k {
            for c in 0..k {
                out[(idx[r], idx[c])] = e[(r, c)];
            }
        }
    }
    out
}

/// Largest entry of `h` that couples two different sectors.
pub fn sector_leakage(h: &CMatrix, sectors: &[usize]) -> f64 {
    let mut worst = 0.0_f64;
    for r in 0..h.nrows() {
        for c in 0..h.ncols() {
            if sectors[r] != sectors[c] {
                worst = worst.max(h[(r, c)].norm());
            }
        }
    }
    worst
}

fn group_by_label(labels: &[usize]) -> Vec<Vec<usize>> {
    let max = labels.iter().copied().max().unwrap_or(0);
    let mut groups = vec![Vec::new(); max + 1];
    for (i, &l) in labels.iter().enumerate() {
        groups[l].push(i);
    }
    groups.retain(|g| !g.is_empty());
    groups
}

/// Frobenius distance between `a` and `b` after the best global phase:
/// `min_χ ‖a − e^{iχ} b‖_F`.
pub fn phase_aligned_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b * best_phase(a, b)).norm()
}

/// Global phase `e^{iχ}` minimising `‖a − e^{iχ} b‖_F`.
pub fn best_phase(a: &CMatrix, b: &CMatrix) -> C64 {
    // tr(b† a) = Σ conj(b_ij) a_ij
    let overlap: C64 = a.iter().zip(b.iter()).map(|(x, y)| y.conj() * x).sum();
    if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        C64::new(1.0, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn exp_of_pauli_x_is_rotation() {
        let sx = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
        let theta = 0.37_f64;
        let u = exp_i_hermitian(&sx, theta);
        let expected = CMatrix::from_row_slice(
            2,
            2,
            &[
                c(theta.cos(), 0.),
                c(0., theta.sin()),
                c(0., theta.sin()),
                c(theta.cos(), 0.),
            ],
        );
        assert!(max_abs(&(u - expected)) < 1e-14);
    }

    #[test]
    fn block_exponential_matches_full() {
        let h = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(1., 0.),
                c(0.5, 0.2),
                c(0., 0.),
                c(0.5, -0.2),
                c(-0.3, 0.),
                c(0., 0.),
                c(0., 0.),
                c(0., 0.),
                c(2., 0.),
            ],
        );
        let full = exp_i_hermitian(&h, 1.3);
        let blocks = exp_i_hermitian_blocks(&h, 1.3, &[0, 0, 1]);
        assert!(max_abs(&(full - blocks)) < 1e-14);
    }

    #[test]
    fn phase_aligned_distance_ignores_global_phase() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 2.), c(0.5, 0.), c(0., 0.)]);
        let b = &a * C64::from_polar(1.0, 0.9);
        assert!(phase_aligned_distance(&a, &b) < 1e-15);
        assert!(phase_aligned_distance(&a, &(a.clone() * c(2., 0.))) > 0.5);
    }
}
