use std::fmt::Debug;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar the solvers are generic over: `f32` or `f64`.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    /// Converts an `f64` literal or tolerance into `Self`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `|self|` without the `Signed`/`ComplexField` method ambiguity.
    fn magnitude(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }

    /// Relative tolerance floor: `max(tol, 100 * machine epsilon)`.
    fn tolerance(tol: f64) -> Self {
        let floor = Self::default_epsilon() * Self::lit(100.0);
        let tol = Self::lit(tol);
        if tol > floor {
            tol
        } else {
            floor
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}
