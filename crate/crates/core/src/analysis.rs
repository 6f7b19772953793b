//! Exact model-based quantities for a fixed linear gain: the second-moment
//! operator, admissibility, the stochastic Lyapunov equation (SLE), the
//! average cost, policy improvement and the stochastic Riccati (SARE)
//! residual.
//!
//! Matrices are vectorized column-major, so `vec(A X B') = (B ⊗ A) vec(X)`.
//! All solves are dense `n² x n²` linear systems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{spectral_radius, unvec, vec_of};
use crate::packing::{kron, SymMatrix};
use crate::scalar::Real;
use crate::system::{ControlGain, CostModel, SystemModel};

/// A gain is admissible when the moment operator's spectral radius is below
/// `1 - ADMISSIBILITY_MARGIN`.
pub const ADMISSIBILITY_MARGIN: f64 = 1e-9;

/// Kernel `P` of the quadratic value function of a fixed gain.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueKernel<T: Real>(pub SymMatrix<T>);

impl<T: Real> ValueKernel<T> {
    pub fn matrix(&self) -> &DMatrix<T> {
        self.0.matrix()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

/// Closed-loop second-moment recursion
/// `vec(E x+ x+') = M vec(E x x') + vec(D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentOperator<T: Real> {
    pub matrix: DMatrix<T>,
    pub offset: DVector<T>,
}

impl<T: Real> MomentOperator<T> {
    /// One step of the recursion on a covariance matrix.
    pub fn apply(&self, x: &DMatrix<T>) -> DMatrix<T> {
        let n = x.nrows();
        unvec(&(&self.matrix * vec_of(x) + &self.offset), n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility<T> {
    pub admissible: bool,
    /// Spectral radius of the moment operator.
    pub rho: T,
}

fn check_gain<T: Real>(model: &SystemModel<T>, gain: &ControlGain<T>) -> Result<()> {
    gain.check_dims(model.state_dim(), model.input_dim())
}

fn check_kernel<T: Real>(model: &SystemModel<T>, p: &ValueKernel<T>) -> Result<()> {
    let n = model.state_dim();
    if p.dim() != n {
        return Err(Error::dimension(
            "value kernel P",
            format!("{n}x{n}"),
            format!("{0}x{0}", p.dim()),
        ));
    }
    Ok(())
}

pub fn moment_operator<T: Real>(
    model: &SystemModel<T>,
    gain: &ControlGain<T>,
) -> Result<MomentOperator<T>> {
    check_gain(model, gain)?;
    let l = gain.matrix();
    let a_cl = &model.a + &model.b * l;
    let mut matrix = kron(&a_cl, &a_cl);
    for ch in &model.state_noise {
        matrix += kron(&ch.matrix, &ch.matrix) * ch.variance;
    }
    for ch in &model.input_noise {
        let bl = &ch.matrix * l;
        matrix += kron(&bl, &bl) * ch.variance;
    }
    Ok(MomentOperator {
        matrix,
        offset: vec_of(model.d.matrix()),
    })
}

pub fn is_admissible<T: Real>(
    model: &SystemModel<T>,
    gain: &ControlGain<T>,
) -> Result<Admissibility<T>> {
    let op = moment_operator(model, gain)?;
    let rho = spectral_radius(&op.matrix);
    Ok(Admissibility {
        admissible: rho < T::one() - T::lit(ADMISSIBILITY_MARGIN),
        rho,
    })
}

fn admissible_operator<T: Real>(
    model: &SystemModel<T>,
    gain: &ControlGain<T>,
) -> Result<MomentOperator<T>> {
    let op = moment_operator(model, gain)?;
    let rho = spectral_radius(&op.matrix);
    if rho >= T::one() - T::lit(ADMISSIBILITY_MARGIN) {
        return Err(Error::NotAdmissible {
            rho: rho.to_f64_lossy(),
        });
    }
    Ok(op)
}

/// Solves `(I - K) v = rhs`.
fn solve_shifted<T: Real>(k: DMatrix<T>, rhs: DVector<T>) -> Result<DVector<T>> {
    let dim = k.nrows();
    let system = DMatrix::identity(dim, dim) - k;
    system.lu().solve(&rhs).ok_or(Error::SingularSystem)
}

/// Limit `X = lim E x_k x_k'` under `u = L x`.
pub fn stationary_covariance<T: Real>(
    model: &SystemModel<T>,
    gain: &ControlGain<T>,
) -> Result<SymMatrix<T>> {
    let op = admissible_operator(model, gain)?;
    let n = model.state_dim();
    let v = solve_shifted(op.matrix, op.offset)?;
    SymMatrix::new(unvec(&v, n))
}

/// `(A+BL)' P (A+BL) + Σ ᾱ_i A_i' P A_i + Σ β̄_j L'B_j' P B_j L`, the adjoint
/// of the moment operator applied to `P`.
pub fn dual_moment_map<T: Real>(
    model: &SystemModel<T>,
    gain: &ControlGain<T>,
    p: &DMatrix<T>,
) -> DMatrix<T> {
    let l = gain.matrix();
    let a_cl = &model.a + &model.b * l;
    let mut out = a_cl.transpose() * p * &a_cl;
    for ch in &model.state_noise {
        out += ch.matrix.transpose() * p * &ch.matrix * ch.variance;
    }
    for ch in &model.input_noise {
        let bl = &ch.matrix * l;
        out += bl.transpose() * p * &bl * ch.variance;
    }
    out
}

fn closed_loop_weight<T: Real>(cost: &CostModel<T>, gain: &ControlGain<T>) -> DMatrix<T> {
    let l = gain.matrix();
    cost.q.matrix() + l.transpose() * cost.r.matrix() * l
}

/// Value kernel of an admissible gain: the unique `P` with
/// `P = dual_moment_map(P) + Q + L'RL`.
pub fn solve_sle<T: Real>(
    model: &SystemModel<T>,
    cost: &CostModel<T>,
    gain: &ControlGain<T>,
) -> Result<ValueKernel<T>> {
    let op = admissible_operator(model, gain)?;
    let n = model.state_dim();
    let rhs = vec_of(&closed_loop_weight(cost, gain));
    let v = solve_shifted(op.matrix.transpose(), rhs)?;
    Ok(ValueKernel(SymMatrix::new(unvec(&v, n))?))
}

/// `dual_moment_map(P) + Q + L'RL - P`; zero when `P` solves the SLE.
pub fn sle_residual<T: Real>(
    model: &SystemModel<T>,
    cost: &CostModel<T>,
    gain: &ControlGain<T>,
    p: &ValueKernel<T>,
) -> DMatrix<T> {
    dual_moment_map(model, gain, p.matrix()) + closed_loop_weight(cost, gain) - p.matrix()
}

/// `tr(P D)`.
pub fn average_cost<T: Real>(p: &ValueKernel<T>, d: &SymMatrix<T>) -> Result<T> {
    if p.dim() != d.dim() {
        return Err(Error::dimension(
            "average cost tr(PD)",
            format!("{0}x{0}", p.dim()),
            format!("{0}x{0}", d.dim()),
        ));
    }
    Ok(p.matrix().dot(d.matrix()))
}

/// `R + B'PB + Σ β̄_j B_j' P B_j`
pub(crate) fn input_curvature<T: Real>(
    model: &SystemModel<T>,
    cost: &CostModel<T>,
    p: &DMatrix<T>,
) -> DMatrix<T> {
    let mut h = cost.r.matrix() + model.b.transpose() * p * &model.b;
    for ch in &model.input_noise {
        h += ch.matrix.transpose() * p * &ch.matrix * ch.variance;
    }
    h
}

/// `Q + A'PA + Σ ᾱ_i A_i' P A_i`
pub(crate) fn state_curvature<T: Real>(
    model: &SystemModel<T>,
    cost: &CostModel<T>,
    p: &DMatrix<T>,
) -> DMatrix<T> {
    let mut h = cost.q.matrix() + model.a.transpose() * p * &model.a;
    for ch in &model.state_noise {
        h += ch.matrix.transpose() * p * &ch.matrix * ch.variance;
    }
    h
}

/// `L = -(R + B'PB + Σ β̄_j B_j'PB_j)^{-1} B'PA`
pub fn policy_improvement<T: Real>(
    model: &SystemModel<T>,
    cost: &CostModel<T>,
    p: &ValueKernel<T>,
) -> Result<ControlGain<T>> {
    check_kernel(model, p)?;
    let curvature = input_curvature(model, cost, p.matrix());
    let cross = model.b.transpose() * p.matrix() * &model.a;
    let chol = curvature.cholesky().ok_or(Error::CorruptedKernel)?;
    Ok(ControlGain(-chol.solve(&cross)))
}

/// `P - [Q + A'PA + Σ ᾱ_i A_i'PA_i - A'PB (R + B'PB + Σ β̄_j B_j'PB_j)^{-1} B'PA]`
pub fn sare_residual<T: Real>(
    model: &SystemModel<T>,
    cost: &CostModel<T>,
    p: &ValueKernel<T>,
) -> Result<SymMatrix<T>> {
    check_kernel(model, p)?;
    let curvature = input_curvature(model, cost, p.matrix());
    let cross = model.b.transpose() * p.matrix() * &model.a;
    let chol = curvature.cholesky().ok_or(Error::CorruptedKernel)?;
    let riccati = state_curvature(model, cost, p.matrix()) - cross.transpose() * chol.solve(&cross);
    SymMatrix::symmetric_part(&(p.matrix() - riccati))
}
