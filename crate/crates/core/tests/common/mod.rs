//! Reference computations for the integration tests. These avoid the crate's
//! Kronecker/vectorization path so agreement with it is a real check.

#![allow(dead_code)]

use mnlqr::{ControlGain, CostModel, SystemModel};
use nalgebra::{DMatrix, DVector};

/// Closed-loop dual map `P ↦ (A+BL)'P(A+BL) + Σ ᾱ A_i'PA_i + Σ β̄ (B_jL)'P(B_jL)`.
pub fn dual_map(model: &SystemModel<f64>, gain: &DMatrix<f64>, p: &DMatrix<f64>) -> DMatrix<f64> {
    let acl = &model.a + &model.b * gain;
    let mut out = acl.transpose() * p * &acl;
    for ch in &model.state_noise {
        out += (ch.matrix.transpose() * p * &ch.matrix) * ch.variance;
    }
    for ch in &model.input_noise {
        let bl = &ch.matrix * gain;
        out += (bl.transpose() * p * &bl) * ch.variance;
    }
    out
}

/// Closed-loop second-moment map `X ↦ (A+BL)X(A+BL)' + Σ ᾱ A_iXA_i' + Σ β̄ B_jLXL'B_j'`.
pub fn primal_map(model: &SystemModel<f64>, gain: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let acl = &model.a + &model.b * gain;
    let mut out = &acl * x * acl.transpose();
    for ch in &model.state_noise {
        out += (&ch.matrix * x * ch.matrix.transpose()) * ch.variance;
    }
    for ch in &model.input_noise {
        let bl = &ch.matrix * gain;
        out += (&bl * x * bl.transpose()) * ch.variance;
    }
    out
}

fn fixed_point(
    offset: DMatrix<f64>,
    map: impl Fn(&DMatrix<f64>) -> DMatrix<f64>,
    rel_tol: f64,
    max_iter: usize,
) -> DMatrix<f64> {
    let mut p = offset.clone();
    for _ in 0..max_iter {
        let next = &offset + map(&p);
        let delta = (&next - &p).norm();
        p = next;
        if delta <= rel_tol * p.norm() {
            break;
        }
    }
    p
}

/// Value kernel by fixed-point iteration of `P = Q + L'RL + dual_map(P)`.
pub fn sle_by_iteration(
    model: &SystemModel<f64>,
    cost: &CostModel<f64>,
    gain: &ControlGain<f64>,
) -> DMatrix<f64> {
    let l = gain.matrix();
    let offset = cost.q.matrix() + l.transpose() * cost.r.matrix() * l;
    fixed_point(offset, |p| dual_map(model, l, p), 1e-15, 200_000)
}

/// Stationary covariance by fixed-point iteration of `X = D + primal_map(X)`.
pub fn covariance_by_iteration(model: &SystemModel<f64>, gain: &ControlGain<f64>) -> DMatrix<f64> {
    let l = gain.matrix();
    fixed_point(
        model.d.matrix().clone(),
        |x| primal_map(model, l, x),
        1e-15,
        200_000,
    )
}

/// Spectral radius of the moment map by power iteration on a positive
/// definite start: the mean growth rate of `‖X_k‖` over the second half of
/// `steps` iterations, which tolerates an oscillating peripheral spectrum.
pub fn moment_radius_by_power_iteration(
    model: &SystemModel<f64>,
    gain: &ControlGain<f64>,
    steps: usize,
) -> f64 {
    let n = model.state_dim();
    let mut x = DMatrix::<f64>::identity(n, n);
    let mut log_growth = 0.0;
    for k in 0..steps {
        let next = primal_map(model, gain.matrix(), &x);
        let norm = next.norm();
        if norm == 0.0 {
            return 0.0;
        }
        if k >= steps / 2 {
            log_growth += (norm / x.norm()).ln();
        }
        x = next / norm;
    }
    (log_growth / (steps - steps / 2) as f64).exp()
}

/// `z' H z` by explicit double sum.
pub fn quadratic_form(h: &DMatrix<f64>, z: &DVector<f64>) -> f64 {
    let mut acc = 0.0;
    for i in 0..z.len() {
        for j in 0..z.len() {
            acc += z[i] * h[(i, j)] * z[j];
        }
    }
    acc
}

/// `tr(H K)` by explicit double sum.
pub fn trace_product(h: &DMatrix<f64>, k: &DMatrix<f64>) -> f64 {
    let mut acc = 0.0;
    for i in 0..h.nrows() {
        for j in 0..h.ncols() {
            acc += h[(i, j)] * k[(j, i)];
        }
    }
    acc
}

/// Greedy gain for value kernel `P` via a general LU solve.
pub fn greedy_gain(
    model: &SystemModel<f64>,
    cost: &CostModel<f64>,
    p: &DMatrix<f64>,
) -> DMatrix<f64> {
    let mut huu = cost.r.matrix() + model.b.transpose() * p * &model.b;
    for ch in &model.input_noise {
        huu += (ch.matrix.transpose() * p * &ch.matrix) * ch.variance;
    }
    let rhs = model.b.transpose() * p * &model.a;
    -huu.lu().solve(&rhs).expect("H_uu invertible")
}

/// Optimal value kernel by value iteration on the Riccati map.
pub fn riccati_by_value_iteration(model: &SystemModel<f64>, cost: &CostModel<f64>) -> DMatrix<f64> {
    let n = model.state_dim();
    let mut p = DMatrix::<f64>::zeros(n, n);
    for _ in 0..100_000 {
        let l = greedy_gain(model, cost, &p);
        let next = cost.q.matrix() + l.transpose() * cost.r.matrix() * &l + dual_map(model, &l, &p);
        let delta = (&next - &p).norm();
        p = next;
        if delta <= 1e-14 * p.norm() {
            break;
        }
    }
    p
}

pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Sample covariance `(1/N) Σ x x'` of zero-mean vectors.
pub fn second_moment(xs: &[DVector<f64>]) -> DMatrix<f64> {
    let n = xs[0].len();
    let mut acc = DMatrix::<f64>::zeros(n, n);
    for x in xs {
        acc += x * x.transpose();
    }
    acc / xs.len() as f64
}
