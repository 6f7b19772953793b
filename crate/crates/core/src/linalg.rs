//! Small dense linear-algebra helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

use crate::scalar::Real;

/// Largest eigenvalue modulus of a general square matrix.
pub fn spectral_radius<T: Real>(m: &DMatrix<T>) -> T {
    assert!(m.is_square(), "spectral radius of a non-square matrix");
    match m.nrows() {
        0 => T::zero(),
        1 => m[(0, 0)].magnitude(),
        _ => m
            .complex_eigenvalues()
            .iter()
            .map(|z| (z.re * z.re + z.im * z.im).sqrt())
            .fold(T::zero(), |acc, r| if r > acc { r } else { acc }),
    }
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues<T: Real>(m: &DMatrix<T>) -> Vec<T> {
    let mut ev: Vec<T> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

pub fn min_symmetric_eigenvalue<T: Real>(m: &DMatrix<T>) -> T {
    symmetric_eigenvalues(m)
        .first()
        .copied()
        .unwrap_or_else(T::zero)
}

/// 2-norm condition number of a symmetric positive definite matrix; infinite
/// when the smallest eigenvalue is not positive.
pub fn spd_condition<T: Real>(m: &DMatrix<T>) -> T {
    let ev = symmetric_eigenvalues(m);
    match (ev.first(), ev.last()) {
        (Some(&lo), Some(&hi)) if lo > T::zero() => hi / lo,
        _ => T::lit(f64::INFINITY),
    }
}

pub fn max_abs<T: Real>(m: &DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, &x| {
        if x.magnitude() > acc {
            x.magnitude()
        } else {
            acc
        }
    })
}

pub fn trace_of_product<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> T {
    (a * b).trace()
}

/// `vec(X)`: column-major stacking.
pub fn vec_of<T: Real>(m: &DMatrix<T>) -> DVector<T> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_of`] for an `n x n` matrix.
pub fn unvec<T: Real>(v: &DVector<T>, n: usize) -> DMatrix<T> {
    DMatrix::from_column_slice(n, n, v.as_slice())
}

/// Lower factor `F` with `F F' = S` for a symmetric positive semidefinite `S`.
///
/// Cholesky when `S` is positive definite; otherwise `V sqrt(max(Λ, 0))` from
/// the symmetric eigendecomposition.
pub fn psd_factor<T: Real>(s: &DMatrix<T>) -> DMatrix<T> {
    if let Some(chol) = s.clone().cholesky() {
        return chol.l();
    }
    let eig = s.clone().symmetric_eigen();
    let mut f = eig.eigenvectors;
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let scale = if lambda > T::zero() {
            lambda.sqrt()
        } else {
            T::zero()
        };
        f.column_mut(j).scale_mut(scale);
    }
    f
}

/// `[I; L]`, the `(n+m) x n` stacked matrix used by the Q-function identities.
pub fn stack_identity_over<T: Real>(l: &DMatrix<T>) -> DMatrix<T> {
    let (m, n) = l.shape();
    let mut out = DMatrix::zeros(n + m, n);
    out.view_mut((0, 0), (n, n)).fill_with_identity();
    out.view_mut((n, 0), (m, n)).copy_from(l);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_radius_of_rotation_is_its_scale() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -0.8, 0.8, 0.0]);
        assert!((spectral_radius(&m) - 0.8f64).abs() < 1e-12);
    }

    #[test]
    fn psd_factor_handles_singular_input() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let f = psd_factor(&s);
        assert!((&f * f.transpose() - &s).norm() < 1e-12);
        let z = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(psd_factor(&z), DMatrix::zeros(3, 3));
    }

    #[test]
    fn vec_round_trip_is_column_major() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(vec_of(&m).as_slice(), &[1.0, 3.0, 2.0, 4.0]);
        assert_eq!(unvec(&vec_of(&m), 2), m);
    }
}
