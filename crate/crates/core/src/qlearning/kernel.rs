use nalgebra::{DMatrix, DMatrixView};

use crate::error::{Error, Result};
use crate::linalg::{min_symmetric_eigenvalue, spd_condition, stack_identity_over};
use crate::packing::SymMatrix;
use crate::scalar::Real;
use crate::system::ControlGain;

/// `H_uu` must have min eigenvalue above this to be used for improvement.
pub const MIN_HUU_EIGENVALUE: f64 = 1e-10;
/// Kernels whose `H_uu` condition number exceeds this are rejected.
pub const MAX_HUU_CONDITION: f64 = 1e8;

/// Kernel of the quadratic Q-function over `z = [x; u]`,
/// `H = [[H_xx, H_xu], [H_ux, H_uu]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QKernel<T: Real> {
    h: SymMatrix<T>,
    state_dim: usize,
}

impl<T: Real> QKernel<T> {
    pub fn new(h: SymMatrix<T>, state_dim: usize) -> Result<Self> {
        if state_dim == 0 || state_dim >= h.dim() {
            return Err(Error::dimension(
                "Q kernel state block",
                format!("1..{}", h.dim()),
                state_dim,
            ));
        }
        Ok(Self { h, state_dim })
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        self.h.matrix()
    }

    pub fn sym(&self) -> &SymMatrix<T> {
        &self.h
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.h.dim() - self.state_dim
    }

    pub fn h_xx(&self) -> DMatrixView<'_, T> {
        let n = self.state_dim;
        self.matrix().view((0, 0), (n, n))
    }

    pub fn h_xu(&self) -> DMatrixView<'_, T> {
        let (n, m) = (self.state_dim, self.input_dim());
        self.matrix().view((0, n), (n, m))
    }

    pub fn h_ux(&self) -> DMatrixView<'_, T> {
        let (n, m) = (self.state_dim, self.input_dim());
        self.matrix().view((n, 0), (m, n))
    }

    pub fn h_uu(&self) -> DMatrixView<'_, T> {
        let (n, m) = (self.state_dim, self.input_dim());
        self.matrix().view((n, n), (m, m))
    }

    /// `[I; L]' H [I; L]`, the value kernel of `L` when `H` is the Q kernel
    /// of `L`.
    pub fn value_kernel_for(&self, gain: &ControlGain<T>) -> Result<SymMatrix<T>> {
        gain.check_dims(self.state_dim, self.input_dim())?;
        let s = stack_identity_over(gain.matrix());
        SymMatrix::symmetric_part(&(s.transpose() * self.matrix() * &s))
    }
}

/// Greedy gain `L = -H_uu^{-1} H_ux`.
///
/// Rejects kernels whose `H_uu` is not safely positive definite
/// ([`MIN_HUU_EIGENVALUE`], [`MAX_HUU_CONDITION`]).
pub fn policy_from_h<T: Real>(h: &QKernel<T>) -> Result<ControlGain<T>> {
    let huu = h.h_uu().into_owned();
    let min_eig = min_symmetric_eigenvalue(&huu);
    let cond = spd_condition(&huu);
    if min_eig <= T::lit(MIN_HUU_EIGENVALUE) || cond > T::lit(MAX_HUU_CONDITION) {
        return Err(Error::UnreliableKernel {
            min_eigenvalue: min_eig.to_f64_lossy(),
            condition: cond.to_f64_lossy(),
        });
    }
    let chol = huu.cholesky().ok_or(Error::UnreliableKernel {
        min_eigenvalue: min_eig.to_f64_lossy(),
        condition: cond.to_f64_lossy(),
    })?;
    Ok(ControlGain(-chol.solve(&h.h_ux().into_owned())))
}
