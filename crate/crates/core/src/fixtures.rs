//! Shipped example plants.

use nalgebra::DMatrix;

use crate::packing::SymMatrix;
use crate::scalar::Real;
use crate::system::{CostModel, SystemModel};

fn mat<T: Real>(r: usize, c: usize, data: &[f64]) -> DMatrix<T> {
    DMatrix::from_fn(r, c, |i, j| T::lit(data[i * c + j]))
}

/// Three-state, three-input plant with two state and two input noise
/// channels (`ᾱ = β̄ = (0.05, 0.015)`), `D = 0.5 I`, `X0 = I`, `Q = R = I`.
/// Stable in the second-moment sense with zero feedback.
pub fn example_sec6<T: Real>() -> (SystemModel<T>, CostModel<T>) {
    #[rustfmt::skip]
    let a = mat(3, 3, &[
        0.8672, 0.0519, 0.1028,
        0.0519, 0.7576, 0.0475,
        0.1028, 0.0475, 0.7681,
    ]);
    let b = DMatrix::identity(3, 3);
    let a1 = mat(3, 3, &[0., -1., 0., -1., 0., 0., 0., 0., 0.]);
    let a2 = mat(3, 3, &[0., 0., -1., 0., 0., 0., -1., 0., 0.]);
    let b1 = mat(3, 3, &[1., 0., 0., 0., 0., 0., 0., 0., 0.]);
    let b2 = mat(3, 3, &[0., 0., 0., 0., 1., 0., 0., 0., 0.]);
    let model = SystemModel::new(
        a,
        b,
        SymMatrix::scaled_identity(3, T::lit(0.5)),
        SymMatrix::identity(3),
    )
    .with_state_noise(a1, T::lit(0.05))
    .with_state_noise(a2, T::lit(0.015))
    .with_input_noise(b1, T::lit(0.05))
    .with_input_noise(b2, T::lit(0.015));
    (model, CostModel::identity(3, 3))
}

/// Scalar plant `x+ = (0.9 + α) x + u + d`, `ᾱ = 0.1`, `D = X0 = Q = R = 1`.
pub fn scalar_smoke<T: Real>() -> (SystemModel<T>, CostModel<T>) {
    let one = DMatrix::from_element(1, 1, T::one());
    let model = SystemModel::new(
        DMatrix::from_element(1, 1, T::lit(0.9)),
        one.clone(),
        SymMatrix::identity(1),
        SymMatrix::identity(1),
    )
    .with_state_noise(one, T::lit(0.1));
    (model, CostModel::identity(1, 1))
}
