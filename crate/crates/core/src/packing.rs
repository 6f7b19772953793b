//! Half-vectorizations of symmetric matrices and the Kronecker product.
//!
//! Both packings scan the upper triangle row by row:
//! `[X11, X12, .., X1n, X22, X23, .., Xnn]`. `vecs` doubles the off-diagonal
//! entries so that `vech(z z')' vecs(S) == z' S z`. This order is also the
//! on-disk order for every emitted parameter vector.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::max_abs;
use crate::scalar::Real;

/// Relative asymmetry accepted (and removed) by [`SymMatrix::new`].
pub const ASYMMETRY_TOLERANCE: f64 = 1e-8;

/// Dense symmetric matrix. Symmetry is exact: the constructor stores
/// `(M + M') / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T: Real> {
    inner: DMatrix<T>,
}

impl<T: Real> SymMatrix<T> {
    /// Symmetrizes `m`, rejecting it when `max|M - M'|` exceeds
    /// [`ASYMMETRY_TOLERANCE`] relative to `max|M|`.
    pub fn new(m: DMatrix<T>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::dimension(
                "symmetric matrix",
                "non-empty square",
                format!("{}x{}", m.nrows(), m.ncols()),
            ));
        }
        let scale = max_abs(&m);
        let asym = max_abs(&(&m - m.transpose()));
        let tol = T::tolerance(ASYMMETRY_TOLERANCE);
        if asym > tol * scale {
            return Err(Error::Asymmetric {
                asymmetry: (asym / scale).to_f64_lossy(),
                tolerance: tol.to_f64_lossy(),
            });
        }
        let half = T::lit(0.5);
        let inner = (&m + m.transpose()) * half;
        Ok(Self { inner })
    }

    /// `(M + M') / 2` without the asymmetry check, for quantities such as
    /// residuals whose own scale is near zero.
    pub fn symmetric_part(m: &DMatrix<T>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::dimension(
                "symmetric matrix",
                "non-empty square",
                format!("{}x{}", m.nrows(), m.ncols()),
            ));
        }
        Ok(Self {
            inner: (m + m.transpose()) * T::lit(0.5),
        })
    }

    pub fn from_row_slice(n: usize, data: &[T]) -> Result<Self> {
        Self::new(DMatrix::from_row_slice(n, n, data))
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: DMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            inner: DMatrix::zeros(n, n),
        }
    }

    pub fn scaled_identity(n: usize, s: T) -> Self {
        Self {
            inner: DMatrix::identity(n, n) * s,
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.inner
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.inner
    }

    pub fn min_eigenvalue(&self) -> T {
        crate::linalg::min_symmetric_eigenvalue(&self.inner)
    }

    pub fn trace(&self) -> T {
        self.inner.trace()
    }
}

impl<T: Real> AsRef<DMatrix<T>> for SymMatrix<T> {
    fn as_ref(&self) -> &DMatrix<T> {
        &self.inner
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PackKind {
    Vech,
    Vecs,
}

/// Half-vectorized symmetric matrix of dimension `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedVec<T: Real> {
    dim: usize,
    data: DVector<T>,
    kind: PackKind,
}

impl<T: Real> PackedVec<T> {
    /// Wraps raw data, inferring `dim` from the length.
    pub fn from_vec(data: DVector<T>, kind: PackKind) -> Result<Self> {
        let dim =
            dim_from_packed_len(data.len()).ok_or(Error::MalformedPacked { len: data.len() })?;
        Ok(Self { dim, data, kind })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> PackKind {
        self.kind
    }

    pub fn data(&self) -> &DVector<T> {
        &self.data
    }

    pub fn into_data(self) -> DVector<T> {
        self.data
    }

    pub fn dot(&self, other: &PackedVec<T>) -> T {
        self.data.dot(&other.data)
    }
}

/// `n(n+1)/2`.
pub const fn packed_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Inverse of [`packed_len`], `None` when `len` is not triangular or is zero.
pub fn dim_from_packed_len(len: usize) -> Option<usize> {
    let mut n = 0;
    while packed_len(n) < len {
        n += 1;
    }
    (n > 0 && packed_len(n) == len).then_some(n)
}

fn pack<T: Real>(s: &DMatrix<T>, off_diagonal_scale: T) -> DVector<T> {
    let n = s.nrows();
    let mut out = Vec::with_capacity(packed_len(n));
    for i in 0..n {
        out.push(s[(i, i)]);
        for j in i + 1..n {
            out.push(s[(i, j)] * off_diagonal_scale);
        }
    }
    DVector::from_vec(out)
}

pub fn vech<T: Real>(s: &SymMatrix<T>) -> PackedVec<T> {
    PackedVec {
        dim: s.dim(),
        data: pack(s.matrix(), T::one()),
        kind: PackKind::Vech,
    }
}

pub fn vecs<T: Real>(s: &SymMatrix<T>) -> PackedVec<T> {
    PackedVec {
        dim: s.dim(),
        data: pack(s.matrix(), T::lit(2.0)),
        kind: PackKind::Vecs,
    }
}

/// Inverse of [`vecs`]: off-diagonal entries are halved on unpacking.
pub fn unvecs<T: Real>(v: &PackedVec<T>) -> Result<SymMatrix<T>> {
    if v.kind != PackKind::Vecs {
        return Err(Error::WrongPackKind);
    }
    unvecs_slice(v.data.as_slice())
}

/// [`unvecs`] on raw parameter data, e.g. a regression estimate.
pub fn unvecs_slice<T: Real>(data: &[T]) -> Result<SymMatrix<T>> {
    let n = dim_from_packed_len(data.len()).ok_or(Error::MalformedPacked { len: data.len() })?;
    let half = T::lit(0.5);
    let mut m = DMatrix::zeros(n, n);
    let mut it = data.iter().copied();
    for i in 0..n {
        m[(i, i)] = it.next().expect("length checked");
        for j in i + 1..n {
            let v = it.next().expect("length checked") * half;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(SymMatrix { inner: m })
}

/// Kronecker product `a ⊗ b`.
pub fn kron<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMatrix::zeros(ar * br, ac * bc);
    for j in 0..ac {
        for i in 0..ar {
            let aij = a[(i, j)];
            if aij == T::zero() {
                continue;
            }
            out.view_mut((i * br, j * bc), (br, bc))
                .zip_apply(b, |o, bv| *o = aij * bv);
        }
    }
    out
}
