mod common;

use mnlqr::fixtures::example_sec6;
use mnlqr::linalg::stack_identity_over;
use mnlqr::qlearning::{bls_estimate, rls_estimate, Estimator, KernelEstimate};
use mnlqr::{
    kappa, phi, policy_from_h, policy_iteration, q_kernel_from_value, run_online_learning,
    simulate_closed_loop, solve_sle, vech, vecs, ControlGain, CostMode, CostModel, Error,
    LearnerConfig, SimRng, Solver, SymMatrix, SystemModel, Trajectory,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};

fn deterministic_plant() -> (SystemModel<f64>, CostModel<f64>) {
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(2, 2, &[
        0.9, 0.2,
        -0.1, 0.7,
    ]);
    let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
    let model = SystemModel::deterministic(a, b).with_initial_covariance(SymMatrix::identity(2));
    (model, CostModel::identity(2, 1))
}

#[test]
fn noise_free_data_recover_the_exact_kernel() {
    // with D = 0 every transition satisfies the Q-Bellman equation exactly
    let (model, cost) = deterministic_plant();
    let gain = ControlGain::new(DMatrix::from_row_slice(1, 2, &[-0.1, -0.3]));
    let p = solve_sle(&model, &cost, &gain).unwrap();
    let truth = q_kernel_from_value(&model, &cost, &p).unwrap();
    let traj = simulate_closed_loop(&model, &cost, &gain, 400, 1.0, 1).unwrap();
    for mode in [CostMode::KnownD(model.d.clone()), CostMode::EmpiricalLambda] {
        let est = bls_estimate(&traj, &gain, &mode).unwrap();
        assert!(common::rel_err(est.kernel.matrix(), truth.matrix()) < 1e-8);
        assert!(est.lambda.abs() < 1e-8);
    }
    let rls = rls_estimate(&traj, &gain, &CostMode::KnownD(model.d.clone()), 1e8).unwrap();
    assert!(common::rel_err(rls.kernel.matrix(), truth.matrix()) < 1e-6);
}

/// Trajectory with arbitrary states and inputs whose costs are built to
/// satisfy the Bellman equation of `h` exactly.
fn synthetic(
    h: &SymMatrix<f64>,
    gain: &ControlGain<f64>,
    lambda: f64,
    steps: usize,
) -> Trajectory<f64> {
    let (m, n) = gain.matrix().shape();
    let mut rng = SimRng::seed_from_u64(99);
    let mut draw = |len: usize| DVector::from_fn(len, |_, _| rng.random_range(-2.0..2.0));
    let states: Vec<DVector<f64>> = (0..=steps).map(|_| draw(n)).collect();
    let mut inputs: Vec<DVector<f64>> = (0..steps).map(|_| draw(m)).collect();
    inputs.push(gain.apply(&states[steps]));
    let target_inputs: Vec<DVector<f64>> = (0..steps).map(|k| gain.apply(&states[k + 1])).collect();
    let theta = vecs(h);
    let join = |x: &DVector<f64>, u: &DVector<f64>| {
        let mut z = DVector::zeros(n + m);
        z.rows_mut(0, n).copy_from(x);
        z.rows_mut(n, m).copy_from(u);
        z
    };
    let costs = (0..steps)
        .map(|k| {
            let now = phi(&join(&states[k], &inputs[k])).dot(&theta);
            let next = phi(&join(&states[k + 1], &target_inputs[k])).dot(&theta);
            now - next + lambda
        })
        .collect();
    Trajectory {
        states,
        inputs,
        target_inputs,
        costs,
        seed: 99,
    }
}

#[test]
fn batch_estimate_inverts_synthetic_targets() {
    let (model, cost) = example_sec6::<f64>();
    let gain = ControlGain::new(DMatrix::identity(3, 3) * -0.3);
    let p = solve_sle(&model, &cost, &gain).unwrap();
    let h = q_kernel_from_value(&model, &cost, &p).unwrap();
    let lambda = vech(&kappa(&gain, &model.d).unwrap()).dot(&vecs(h.sym()));
    let traj = synthetic(h.sym(), &gain, lambda, 300);

    let known = bls_estimate(&traj, &gain, &CostMode::KnownD(model.d.clone())).unwrap();
    assert!(common::rel_err(known.kernel.matrix(), h.matrix()) < 1e-8);
    assert!((known.lambda - lambda).abs() < 1e-8 * lambda);

    let empirical = bls_estimate(&traj, &gain, &CostMode::EmpiricalLambda).unwrap();
    assert!(common::rel_err(empirical.kernel.matrix(), h.matrix()) < 1e-8);
    assert!((empirical.lambda - lambda).abs() < 1e-8 * lambda);
}

#[test]
fn single_evaluation_is_close_to_the_model_kernel() {
    let (model, cost) = example_sec6::<f64>();
    let gain = policy_iteration(&model, &cost, &ControlGain::zeros(3, 3), 1e-12, 100)
        .unwrap()
        .final_gain()
        .clone();
    let p = solve_sle(&model, &cost, &gain).unwrap();
    let truth = q_kernel_from_value(&model, &cost, &p).unwrap();
    let traj = simulate_closed_loop(&model, &cost, &gain, 42_000, 0.64, 21).unwrap();
    let est = bls_estimate(&traj, &gain, &CostMode::KnownD(model.d.clone())).unwrap();
    let err = common::rel_err(est.kernel.matrix(), truth.matrix());
    assert!(err < 0.10, "relative kernel error {err}");
}

#[test]
fn estimated_kernel_reduces_to_value_kernel() {
    let (model, cost) = example_sec6::<f64>();
    let gain = ControlGain::new(DMatrix::identity(3, 3) * -0.3);
    let p = solve_sle(&model, &cost, &gain).unwrap();
    let h = q_kernel_from_value(&model, &cost, &p).unwrap();
    let s = stack_identity_over(gain.matrix());
    let via_method = h.value_kernel_for(&gain).unwrap();
    assert!(common::rel_err(via_method.matrix(), &(s.transpose() * h.matrix() * &s)) < 1e-14);
    assert!(common::rel_err(via_method.matrix(), p.matrix()) < 1e-12);
}

#[test]
fn sample_mean_lambda_is_biased_by_the_probing_cost() {
    let (model, cost) = example_sec6::<f64>();
    let gain = policy_iteration(&model, &cost, &ControlGain::zeros(3, 3), 1e-12, 100)
        .unwrap()
        .final_gain()
        .clone();
    let traj = simulate_closed_loop(&model, &cost, &gain, 42_000, 0.64, 5).unwrap();
    let lambda = mnlqr::average_cost(&solve_sle(&model, &cost, &gain).unwrap(), &model.d).unwrap();
    let naive: KernelEstimate<f64> =
        bls_estimate(&traj, &gain, &CostMode::SampleMeanLambda).unwrap();
    let fitted = bls_estimate(&traj, &gain, &CostMode::EmpiricalLambda).unwrap();
    assert!((fitted.lambda - lambda).abs() / lambda < 0.05);
    assert!(naive.lambda > 1.5 * lambda);
}

#[test]
fn degenerate_data_are_rejected() {
    let (mut model, cost) = deterministic_plant();
    model.x0 = SymMatrix::zeros(2);
    let gain = ControlGain::zeros(1, 2);
    let traj = simulate_closed_loop(&model, &cost, &gain, 200, 0.0, 0).unwrap();
    let err = bls_estimate(&traj, &gain, &CostMode::KnownD(model.d.clone())).unwrap_err();
    assert!(matches!(err, Error::InsufficientExcitation { .. }));

    let mut config = LearnerConfig::new(gain, CostMode::EmpiricalLambda);
    config.rollout_length = 200;
    config.probe_var = 0.0;
    let err = run_online_learning(&model, &cost, &config).unwrap_err();
    assert!(
        matches!(err, Error::AtIteration { iteration: 0, .. }),
        "{err:?}"
    );
}

#[test]
fn short_rollouts_are_rejected_up_front() {
    let (model, cost) = example_sec6::<f64>();
    let mut config =
        LearnerConfig::new(ControlGain::zeros(3, 3), CostMode::KnownD(model.d.clone()));
    config.rollout_length = 20;
    assert!(matches!(
        run_online_learning(&model, &cost, &config),
        Err(Error::InvalidLearnerConfig(_))
    ));
    assert_eq!(config.unknowns(3, 3), 21);
    assert_eq!(
        LearnerConfig::new(ControlGain::zeros(3, 3), CostMode::<f64>::EmpiricalLambda)
            .unknowns(3, 3),
        22
    );
}

#[test]
fn wide_tolerance_stops_after_one_iteration() {
    let (model, cost) = example_sec6::<f64>();
    let mut config =
        LearnerConfig::new(ControlGain::zeros(3, 3), CostMode::KnownD(model.d.clone()));
    config.epsilon = 10.0;
    let res = run_online_learning(&model, &cost, &config).unwrap();
    assert_eq!(res.iterations, 1);
    assert!(res.converged);
    assert_eq!(res.gains.len(), 2);
    assert_eq!(res.kernels.len(), 1);
    assert_eq!(res.lambdas.len(), 1);
}

/// Scalar plant with a finite fourth moment at `L = 0`, so single rollouts
/// give reliable estimates.
fn light_tailed_scalar() -> (SystemModel<f64>, CostModel<f64>) {
    let one = DMatrix::from_element(1, 1, 1.0);
    let model = SystemModel::new(
        DMatrix::from_element(1, 1, 0.5),
        one.clone(),
        SymMatrix::identity(1),
        SymMatrix::identity(1),
    )
    .with_state_noise(one, 0.1);
    (model, CostModel::identity(1, 1))
}

#[test]
fn learner_reaches_the_optimum_on_a_scalar_plant() {
    let (model, cost) = light_tailed_scalar();
    let pi = policy_iteration(&model, &cost, &ControlGain::zeros(1, 1), 1e-12, 100).unwrap();
    for solver in [Solver::Rls, Solver::Batch] {
        let mut config =
            LearnerConfig::new(ControlGain::zeros(1, 1), CostMode::KnownD(model.d.clone()))
                .with_seed(4);
        config.rollout_length = 20_000;
        config.solver = solver;
        let res = run_online_learning(&model, &cost, &config).unwrap();
        assert!(res.converged);
        assert!(res.final_gain().distance(pi.final_gain()) < 0.05);
        let lambda = res.final_lambda().unwrap();
        assert!((lambda - pi.final_cost()).abs() / pi.final_cost() < 0.05);
    }
}

#[test]
fn learner_is_deterministic_per_seed() {
    let (model, cost) = light_tailed_scalar();
    let mut config =
        LearnerConfig::new(ControlGain::zeros(1, 1), CostMode::EmpiricalLambda).with_seed(9);
    config.rollout_length = 2_000;
    let a = run_online_learning(&model, &cost, &config).unwrap();
    let b = run_online_learning(&model, &cost, &config).unwrap();
    assert_eq!(a, b);
}

#[test]
fn greedy_gain_of_the_model_kernel_is_policy_improvement() {
    let (model, cost) = example_sec6::<f64>();
    let p = solve_sle(&model, &cost, &ControlGain::zeros(3, 3)).unwrap();
    let h = q_kernel_from_value(&model, &cost, &p).unwrap();
    let from_h = policy_from_h(&h).unwrap();
    let oracle = common::greedy_gain(&model, &cost, p.matrix());
    assert!(common::rel_err(from_h.matrix(), &oracle) < 1e-12);
}

#[test]
fn estimator_selection_follows_the_solver() {
    let config = LearnerConfig::new(ControlGain::zeros(1, 1), CostMode::<f64>::EmpiricalLambda);
    assert_eq!(config.estimator(), Estimator::Rls { varpi: 1e8 });
    let batch = LearnerConfig {
        solver: Solver::Batch,
        ..config
    };
    assert_eq!(batch.estimator(), Estimator::Batch);
}
