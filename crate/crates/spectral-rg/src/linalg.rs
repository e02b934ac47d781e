//! Thin helpers over dense complex matrices.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Eigh, EigVals, EigValsh, Inverse, SVD, UPLO};
use num_complex::Complex64 as c64;

use crate::error::{Result, SrgError};

pub type CMatrix = Array2<c64>;
pub type CVector = Array1<c64>;

pub fn c(re: f64) -> c64 {
    c64::new(re, 0.0)
}

pub fn adjoint(m: &CMatrix) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_norm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// `||M - M^*||_max <= tol * max(1, ||M||_max)`.
pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    let n = m.nrows();
    if n != m.ncols() {
        return false;
    }
    let scale = max_abs(m).max(1.0);
    for i in 0..n {
        for j in i..n {
            if (m[[i, j]] - m[[j, i]].conj()).norm() > tol * scale {
                return false;
            }
        }
    }
    true
}

pub fn diag(values: &[c64]) -> CMatrix {
    let mut m = CMatrix::zeros((values.len(), values.len()));
    for (i, v) in values.iter().enumerate() {
        m[[i, i]] = *v;
    }
    m
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::eye(n)
}

/// Singular values in descending order. Empty matrices give an empty list.
pub fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let (_, s, _) = m.svd(false, false)?;
    Ok(s.to_vec())
}

pub fn spectral_norm(m: &CMatrix) -> Result<f64> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}

/// Full SVD `M = U diag(s) V^*`.
pub fn svd_full(m: &CMatrix) -> Result<(CMatrix, Vec<f64>, CMatrix)> {
    let (u, s, vt) = m.svd(true, true)?;
    let u = u.ok_or_else(|| SrgError::Linalg("svd returned no U".into()))?;
    let vt = vt.ok_or_else(|| SrgError::Linalg("svd returned no V".into()))?;
    Ok((u, s.to_vec(), adjoint(&vt)))
}

pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    Ok(m.inv()?)
}

/// Eigen-decomposition of a Hermitian matrix, ascending eigenvalues.
pub fn eigh(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    // LAPACK sees a row-major array as its transpose, which for Hermitian
    // input is the conjugate; undo that on the eigenvectors.
    let a = m.as_standard_layout().to_owned();
    let (e, v) = a.eigh(UPLO::Upper)?;
    Ok((e.to_vec(), v.mapv(|z| z.conj())))
}

pub fn eigvalsh(m: &CMatrix) -> Result<Vec<f64>> {
    Ok(m.eigvalsh(UPLO::Upper)?.to_vec())
}

pub fn eigvals(m: &CMatrix) -> Result<Vec<c64>> {
    Ok(m.eigvals()?.to_vec())
}

pub fn eig(m: &CMatrix) -> Result<(Vec<c64>, CMatrix)> {
    let (e, v) = m.eig()?;
    Ok((e.to_vec(), v))
}

/// Orthonormal basis (as columns) of the eigenspace of a Hermitian matrix
/// with eigenvalues above `threshold`. Diagonal input is handled without
/// an eigensolver so unit vectors come out exactly.
pub fn range_basis(h: &CMatrix, threshold: f64) -> Result<CMatrix> {
    let n = h.nrows();
    let is_diag = (0..n).all(|i| (0..n).all(|j| i == j || h[[i, j]] == c64::new(0.0, 0.0)));
    if is_diag {
        let idx: Vec<usize> = (0..n).filter(|&i| h[[i, i]].re > threshold).collect();
        let mut b = CMatrix::zeros((n, idx.len()));
        for (col, &i) in idx.iter().enumerate() {
            b[[i, col]] = c(1.0);
        }
        return Ok(b);
    }
    let (e, v) = eigh(h)?;
    let idx: Vec<usize> = (0..n).filter(|&i| e[i] > threshold).collect();
    let mut b = CMatrix::zeros((n, idx.len()));
    for (col, &i) in idx.iter().enumerate() {
        b.column_mut(col).assign(&v.column(i));
    }
    Ok(b)
}

/// Sorts by real part, then imaginary part.
pub fn sort_spectrum(v: &mut [c64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms_and_hermiticity() {
        let m = CMatrix::from_shape_vec((2, 2), vec![c(1.0), c64::new(0.0, 2.0), c64::new(0.0, -2.0), c(1.0)]).unwrap();
        assert!(is_hermitian(&m, 1e-15));
        assert!((spectral_norm(&m).unwrap() - 3.0).abs() < 1e-13);
        assert!((frobenius(&m) - 10f64.sqrt()).abs() < 1e-15);
        let (e, _) = eigh(&m).unwrap();
        assert!((e[0] + 1.0).abs() < 1e-13 && (e[1] - 3.0).abs() < 1e-13);
    }

    #[test]
    fn eigh_vectors_satisfy_the_eigen_equation() {
        let m = CMatrix::from_shape_fn((5, 5), |(i, j)| {
            let a = c64::new((i * 3 + j) as f64 % 7.0, (i as f64 - j as f64) * 0.3);
            if i <= j { a } else { c64::new((j * 3 + i) as f64 % 7.0, (j as f64 - i as f64) * 0.3).conj() }
        });
        assert!(is_hermitian(&m, 1e-15));
        let (e, v) = eigh(&m).unwrap();
        let d = diag(&e.iter().map(|&x| c(x)).collect::<Vec<_>>());
        assert!(frobenius(&(m.dot(&v) - v.dot(&d))) < 1e-12);
    }

    #[test]
    fn range_basis_of_diagonal_is_exact() {
        let m = diag(&[c(0.0), c(0.5), c(1e-12), c(1.0)]);
        let b = range_basis(&m, 1e-10).unwrap();
        assert_eq!(b.ncols(), 2);
        assert_eq!(b[[1, 0]], c(1.0));
        assert_eq!(b[[3, 1]], c(1.0));
    }
}
