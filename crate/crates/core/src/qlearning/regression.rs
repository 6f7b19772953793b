//! Least-squares estimation of `vecs(H)` from one rollout.
//!
//! For each step the Q-Bellman equation reads
//!
//! ```text
//! φ(z_k)' θ = c_k − λ + φ(z̄_{k+1})' θ,    θ = vecs(H)
//! ```
//!
//! with `z_k = [x_k; u_k]` (applied, probed input) and
//! `z̄_{k+1} = [x_{k+1}; L x_{k+1}]`. `φ(z_k)` serves as the instrument, so both
//! estimators solve `Σ a_k g_k' θ = Σ a_k t_k` for instrument `a_k`,
//! regressor `g_k` and target `t_k`. The three [`CostMode`]s differ only in how
//! the constant `λ` enters.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::packing::{packed_len, unvecs_slice, vech, SymMatrix};
use crate::scalar::Real;
use crate::system::{ControlGain, Trajectory};

use super::features::{kappa, phi_pair_into};
use super::kernel::QKernel;
use super::rls::RlsState;

/// Singular-value ratio below which the normal matrix counts as rank
/// deficient.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// How the average-cost term `λ = tr(P D)` enters the regression.
#[derive(Debug, Clone, PartialEq)]
pub enum CostMode<T: Real> {
    /// `D` known: `λ = vech(κ)' θ` with `κ = [I; L] D [I; L]'`, folded into
    /// the regressor as `g_k = φ(z_k) − φ(z̄_{k+1}) + vech(κ)`.
    KnownD(SymMatrix<T>),
    /// `D` unknown: `λ` is an extra unknown fitted jointly with `θ` (instrument
    /// and regressor are augmented with a constant 1). The `θ` block equals
    /// the sample-mean estimator with `λ̄` replaced by the bias-corrected
    /// empirical average `(1/N) Σ (c_k − (φ(z_k) − φ(z̄_{k+1}))' θ)`.
    EmpiricalLambda,
    /// `D` unknown: targets are centred by the raw sample mean
    /// `λ̄ = (1/N) Σ c_k`. Under probing noise `λ̄` also contains the probing
    /// cost, which biases `H`; kept for comparison runs.
    SampleMeanLambda,
}

impl<T: Real> CostMode<T> {
    pub fn name(&self) -> &'static str {
        match self {
            CostMode::KnownD(_) => "known-d",
            CostMode::EmpiricalLambda => "empirical-lambda",
            CostMode::SampleMeanLambda => "sample-mean-lambda",
        }
    }
}

/// Which least-squares solver produces `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator<T> {
    /// Recursive least squares started from `ξ = ϖ I`, `ψ = 0`.
    Rls { varpi: T },
    /// Batch least squares on the accumulated normal equations.
    Batch,
}

/// A fitted Q kernel and the average-cost estimate that came with it.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelEstimate<T: Real> {
    pub kernel: QKernel<T>,
    /// `vech(κ)' vecs(H)` for [`CostMode::KnownD`], the fitted intercept for
    /// [`CostMode::EmpiricalLambda`], `λ̄` for [`CostMode::SampleMeanLambda`].
    pub lambda: T,
    /// Raw parameter vector (`vecs(H)`, then `λ` in the intercept mode).
    pub theta: DVector<T>,
    /// RLS updates dropped as ill-conditioned.
    pub skipped_updates: usize,
}

pub(crate) struct Design<T: Real> {
    state_dim: usize,
    input_dim: usize,
    packed: usize,
    vech_kappa: Option<DVector<T>>,
    intercept: bool,
    centre: T,
}

impl<T: Real> Design<T> {
    pub(crate) fn new(
        traj: &Trajectory<T>,
        gain: &ControlGain<T>,
        mode: &CostMode<T>,
    ) -> Result<Self> {
        let (m, n) = gain.matrix().shape();
        let state_ok = traj.states.iter().all(|x| x.len() == n);
        let input_ok = traj
            .inputs
            .iter()
            .chain(&traj.target_inputs)
            .all(|u| u.len() == m);
        if !state_ok || !input_ok {
            return Err(Error::dimension(
                "trajectory vs gain",
                format!("n={n}, m={m}"),
                "other",
            ));
        }
        if traj.is_empty()
            || traj.states.len() != traj.len() + 1
            || traj.target_inputs.len() != traj.len()
        {
            return Err(Error::dimension(
                "trajectory lengths",
                "N+1 states, N targets, N costs",
                traj.len(),
            ));
        }
        let packed = packed_len(n + m);
        let (vech_kappa, intercept, centre) = match mode {
            CostMode::KnownD(d) => (Some(vech(&kappa(gain, d)?).into_data()), false, T::zero()),
            CostMode::EmpiricalLambda => (None, true, T::zero()),
            CostMode::SampleMeanLambda => (None, false, traj.mean_cost()),
        };
        Ok(Self {
            state_dim: n,
            input_dim: m,
            packed,
            vech_kappa,
            intercept,
            centre,
        })
    }

    pub(crate) fn params(&self) -> usize {
        self.packed + usize::from(self.intercept)
    }

    /// Calls `f(instrument, regressor, target)` for every step.
    pub(crate) fn for_each_row(&self, traj: &Trajectory<T>, mut f: impl FnMut(&[T], &[T], T)) {
        let p = self.params();
        let d = self.packed;
        let mut instrument = vec![T::zero(); p];
        let mut regressor = vec![T::zero(); p];
        let mut next = vec![T::zero(); d];
        let mut scratch = Vec::with_capacity(self.state_dim + self.input_dim);
        for k in 0..traj.len() {
            phi_pair_into(
                traj.states[k].as_slice(),
                traj.inputs[k].as_slice(),
                &mut scratch,
                &mut instrument[..d],
            );
            phi_pair_into(
                traj.states[k + 1].as_slice(),
                traj.target_inputs[k].as_slice(),
                &mut scratch,
                &mut next,
            );
            for i in 0..d {
                regressor[i] = instrument[i] - next[i];
            }
            if let Some(vk) = &self.vech_kappa {
                for i in 0..d {
                    regressor[i] += vk[i];
                }
            }
            if self.intercept {
                instrument[d] = T::one();
                regressor[d] = T::one();
            }
            f(&instrument, &regressor, traj.costs[k] - self.centre);
        }
    }

    pub(crate) fn finish(
        &self,
        theta: DVector<T>,
        skipped_updates: usize,
    ) -> Result<KernelEstimate<T>> {
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InsufficientExcitation {
                detail: "least-squares estimate is not finite".into(),
            });
        }
        let h = unvecs_slice(&theta.as_slice()[..self.packed])?;
        let lambda = match (&self.vech_kappa, self.intercept) {
            (Some(vk), _) => vk.dot(&theta.rows(0, self.packed)),
            (None, true) => theta[self.packed],
            (None, false) => self.centre,
        };
        Ok(KernelEstimate {
            kernel: QKernel::new(h, self.state_dim)?,
            lambda,
            theta,
            skipped_updates,
        })
    }
}

/// `normal += a g'`, `rhs += a t`
fn accumulate<T: Real>(normal: &mut DMatrix<T>, rhs: &mut DVector<T>, a: &[T], g: &[T], t: T) {
    let p = a.len();
    for (j, &gj) in g.iter().enumerate() {
        if gj == T::zero() {
            continue;
        }
        let mut col = normal.column_mut(j);
        for i in 0..p {
            col[i] += a[i] * gj;
        }
    }
    for (r, &ai) in rhs.iter_mut().zip(a) {
        *r += ai * t;
    }
}

/// Batch least-squares estimate of the Q kernel of `gain` from `traj`.
pub fn bls_estimate<T: Real>(
    traj: &Trajectory<T>,
    gain: &ControlGain<T>,
    mode: &CostMode<T>,
) -> Result<KernelEstimate<T>> {
    let design = Design::new(traj, gain, mode)?;
    let p = design.params();
    if traj.len() < p {
        return Err(Error::InsufficientExcitation {
            detail: format!("{} samples for {} unknowns", traj.len(), p),
        });
    }
    let mut normal = DMatrix::<T>::zeros(p, p);
    let mut rhs = DVector::<T>::zeros(p);
    design.for_each_row(traj, |a, g, t| accumulate(&mut normal, &mut rhs, a, g, t));

    let svd = normal.svd(true, true);
    let sv = &svd.singular_values;
    let hi = sv.max();
    let lo = sv.min();
    if !(hi > T::zero()) || lo <= hi * T::lit(RANK_TOLERANCE) {
        return Err(Error::InsufficientExcitation {
            detail: format!(
                "regressor normal matrix is rank deficient (singular values {:e}..{:e})",
                lo.to_f64_lossy(),
                hi.to_f64_lossy()
            ),
        });
    }
    let theta = svd
        .solve(&rhs, T::zero())
        .map_err(|e| Error::InsufficientExcitation {
            detail: e.to_string(),
        })?;
    design.finish(theta, 0)
}

/// Rows per unknown absorbed in information form before the recursion
/// starts (see [`RlsState::from_information`]).
pub const RLS_WARM_START_ROWS_PER_UNKNOWN: usize = 10;

/// Recursive least-squares estimate `θ = ξ_N ψ_N` with `ξ_0 = ϖ I`, `ψ_0 = 0`.
///
/// The first `RLS_WARM_START_ROWS_PER_UNKNOWN` rows per unknown are absorbed
/// in information form and inverted once; the rest go through the rank-one
/// recursion. Starting the recursion directly at `ϖ I = 1e8 I` loses
/// about `1e-5` relative accuracy to cancellation on heavy-tailed data.
pub fn rls_estimate<T: Real>(
    traj: &Trajectory<T>,
    gain: &ControlGain<T>,
    mode: &CostMode<T>,
    varpi: T,
) -> Result<KernelEstimate<T>> {
    let design = Design::new(traj, gain, mode)?;
    let p = design.params();
    let warm_rows = (RLS_WARM_START_ROWS_PER_UNKNOWN * p).min(traj.len());
    let mut gram = DMatrix::<T>::zeros(p, p);
    let mut psi = DVector::<T>::zeros(p);
    let mut state: Option<RlsState<T>> = None;
    let mut failure = None;
    let mut row = 0;
    design.for_each_row(traj, |a, g, t| {
        if failure.is_some() {
            return;
        }
        if row < warm_rows {
            accumulate(&mut gram, &mut psi, a, g, t);
        } else {
            if state.is_none() {
                match RlsState::from_information(gram.clone(), psi.clone(), varpi, row) {
                    Ok(s) => state = Some(s),
                    Err(e) => {
                        failure = Some(e);
                        return;
                    }
                }
            }
            // ill-conditioned samples are dropped and counted by the state
            let _ = state.as_mut().expect("initialised above").update(a, g, t);
        }
        row += 1;
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let state = match state {
        Some(s) => s,
        None => RlsState::from_information(gram, psi, varpi, row)?,
    };
    let skipped = state.skipped();
    design.finish(state.estimate(), skipped)
}

pub fn estimate_kernel<T: Real>(
    traj: &Trajectory<T>,
    gain: &ControlGain<T>,
    mode: &CostMode<T>,
    estimator: Estimator<T>,
) -> Result<KernelEstimate<T>> {
    match estimator {
        Estimator::Rls { varpi } => rls_estimate(traj, gain, mode, varpi),
        Estimator::Batch => bls_estimate(traj, gain, mode),
    }
}
