//! Model-based policy iteration: alternate SLE policy evaluation and greedy
//! improvement from an admissible starting gain.
//!
//! The caller supplies the admissible `L⁽⁰⁾`; for an open-loop stable plant
//! in the second-moment sense, the zero gain works.

use nalgebra::DMatrix;

use crate::analysis::{
    average_cost, input_curvature, is_admissible, policy_improvement, solve_sle, state_curvature,
    ValueKernel,
};
use crate::error::{Error, Result};
use crate::linalg::min_symmetric_eigenvalue;
use crate::packing::SymMatrix;
use crate::qlearning::QKernel;
use crate::scalar::Real;
use crate::system::{ControlGain, CostModel, SystemModel};

/// Iterates of a policy-iteration run.
///
/// `kernels[τ]` solves the SLE for `gains[τ]`; `gains[τ + 1]` is improved
/// from `kernels[τ]`, so there is one more gain than kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct PiTrace<T: Real> {
    pub kernels: Vec<ValueKernel<T>>,
    pub gains: Vec<ControlGain<T>>,
    /// `λ⁽ᵗ⁾ = tr(P⁽ᵗ⁾ D)`
    pub costs: Vec<T>,
    pub converged: bool,
    pub iterations: usize,
}

impl<T: Real> PiTrace<T> {
    pub fn final_kernel(&self) -> &ValueKernel<T> {
        self.kernels.last().expect("at least one evaluation")
    }

    pub fn final_gain(&self) -> &ControlGain<T> {
        self.gains.last().expect("at least the initial gain")
    }

    pub fn final_cost(&self) -> T {
        *self.costs.last().expect("at least one evaluation")
    }

    /// `min_τ λ_min(P⁽ᵗ⁾ − P⁽ᵗ⁺¹⁾)`; non-negative when the kernels decrease
    /// in the Loewner order. `None` for a single evaluation.
    pub fn monotonicity_gap(&self) -> Option<T> {
        self.kernels
            .windows(2)
            .map(|w| min_symmetric_eigenvalue(&(w[0].matrix() - w[1].matrix())))
            .reduce(|a, b| if b < a { b } else { a })
    }
}

/// Runs policy iteration until `‖L⁽ᵗ⁺¹⁾ − L⁽ᵗ⁾‖_F < tol` or `max_iter`
/// evaluations. Running out of iterations is reported through
/// `converged = false`, not as an error.
pub fn policy_iteration<T: Real>(
    model: &SystemModel<T>,
    cost: &CostModel<T>,
    initial_gain: &ControlGain<T>,
    tol: T,
    max_iter: usize,
) -> Result<PiTrace<T>> {
    crate::system::validate(model, cost)?;
    let adm = is_admissible(model, initial_gain)?;
    if !adm.admissible {
        return Err(Error::NotAdmissible {
            rho: adm.rho.to_f64_lossy(),
        });
    }

    let mut trace = PiTrace {
        kernels: Vec::new(),
        gains: vec![initial_gain.clone()],
        costs: Vec::new(),
        converged: false,
        iterations: 0,
    };
    let mut gain = initial_gain.clone();
    for _ in 0..max_iter {
        let p = solve_sle(model, cost, &gain)?;
        let next = policy_improvement(model, cost, &p)?;
        trace.costs.push(average_cost(&p, &model.d)?);
        trace.kernels.push(p);
        trace.iterations += 1;
        let change = next.distance(&gain);
        trace.gains.push(next.clone());
        gain = next;
        if change < tol {
            trace.converged = true;
            break;
        }
    }
    Ok(trace)
}

/// Q kernel implied by a value kernel `P`:
///
/// ```text
/// H_xx = Q + A'PA + Σ ᾱ_i A_i'PA_i
/// H_xu = A'PB = H_ux'
/// H_uu = R + B'PB + Σ β̄_j B_j'PB_j
/// ```
pub fn q_kernel_from_value<T: Real>(
    model: &SystemModel<T>,
    cost: &CostModel<T>,
    p: &ValueKernel<T>,
) -> Result<QKernel<T>> {
    let (n, m) = (model.state_dim(), model.input_dim());
    if p.dim() != n {
        return Err(Error::dimension("value kernel P", n, p.dim()));
    }
    let pm = p.matrix();
    let mut h = DMatrix::zeros(n + m, n + m);
    let h_xu = model.a.transpose() * pm * &model.b;
    h.view_mut((0, 0), (n, n))
        .copy_from(&state_curvature(model, cost, pm));
    h.view_mut((0, n), (n, m)).copy_from(&h_xu);
    h.view_mut((n, 0), (m, n)).copy_from(&h_xu.transpose());
    h.view_mut((n, n), (m, m))
        .copy_from(&input_curvature(model, cost, pm));
    QKernel::new(SymMatrix::new(h)?, n)
}
