//! Random plants that admit a stabilizing linear gain, for property tests
//! and sweeps.
//!
//! `A` is drawn Gaussian and rescaled to a spectral radius in `[0.5, 0.9]`;
//! up to two state and two input noise channels get variances in
//! `[0, 0.05]`. Draws whose zero-gain moment operator is not stable are
//! rejected, so the zero gain is always admissible.

use nalgebra::DMatrix;
use rand::Rng;

use crate::analysis::is_admissible;
use crate::linalg::spectral_radius;
use crate::packing::SymMatrix;
use crate::scalar::Real;
use crate::system::{standard_normal, ControlGain, CostModel, SystemModel};

fn gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R, r: usize, c: usize, scale: f64) -> DMatrix<T> {
    DMatrix::from_fn(r, c, |_, _| standard_normal::<T, R>(rng) * T::lit(scale))
}

/// `G G' / k + floor I`
fn random_spd<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize, floor: f64) -> SymMatrix<T> {
    let g = gaussian::<T, R>(rng, n, n, 1.0);
    let s = &g * g.transpose() / T::from_usize(n).expect("small dimension")
        + DMatrix::identity(n, n) * T::lit(floor);
    SymMatrix::symmetric_part(&s).expect("square")
}

/// Draws a plant with `n` states and `m` inputs whose zero gain is admissible.
pub fn random_admissible_system<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    m: usize,
) -> (SystemModel<T>, CostModel<T>) {
    loop {
        let raw = gaussian::<T, R>(rng, n, n, 1.0);
        let rho = spectral_radius(&raw);
        if rho <= T::lit(1e-6) {
            continue;
        }
        let target = T::lit(rng.random_range(0.5..0.9));
        let a = raw * (target / rho);
        let b = gaussian::<T, R>(rng, n, m, 1.0);
        let mut model = SystemModel::new(a, b, random_spd(rng, n, 0.1), random_spd(rng, n, 0.0));
        for _ in 0..rng.random_range(0..=2) {
            let var = T::lit(rng.random_range(0.0..0.05));
            model = model.with_state_noise(gaussian(rng, n, n, 1.0 / (n as f64).sqrt()), var);
        }
        for _ in 0..rng.random_range(0..=2) {
            let var = T::lit(rng.random_range(0.0..0.05));
            model = model.with_input_noise(gaussian(rng, n, m, 1.0), var);
        }
        let cost = CostModel::new(random_spd(rng, n, 0.0), random_spd(rng, m, 0.1));
        let ok = is_admissible(&model, &ControlGain::zeros(m, n))
            .map(|a| a.admissible)
            .unwrap_or(false);
        if ok {
            return (model, cost);
        }
    }
}

/// Random admissible gain: a Gaussian draw halved until admissible, falling
/// back to zero.
pub fn random_admissible_gain<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    model: &SystemModel<T>,
) -> ControlGain<T> {
    let (n, m) = (model.state_dim(), model.input_dim());
    let mut l = gaussian::<T, R>(rng, m, n, 0.5);
    for _ in 0..30 {
        let gain = ControlGain::new(l.clone());
        if is_admissible(model, &gain)
            .map(|a| a.admissible)
            .unwrap_or(false)
        {
            return gain;
        }
        l *= T::lit(0.5);
    }
    ControlGain::zeros(m, n)
}
