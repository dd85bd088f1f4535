//! Scalar abstraction for the learning kernels.
//!
//! The policy network, GAE, and loss math are generic over [`Scalar`] so the
//! same code runs in f32 for training/checkpoints and in f64 for the
//! finite-difference and discounted-sum oracles used by the tests.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar usable by the policy/value network and PPO math.
pub trait Scalar:
    Float + NumAssign + FromPrimitive + ToPrimitive + Sum + Copy + Send + Sync + Debug + Display + Default + 'static
{
    /// Lossy conversion from f64 (used for constants and env-side values).
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to any Scalar")
    }

    /// Widening conversion to f64 for logging and cross-checks.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Soft normalization x / sqrt(1 + x^2); maps the reals into (-1, 1).
pub fn soft_normalize<S: Scalar>(x: S) -> S {
    x / (S::one() + x * x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_normalize_bounded() {
        for &x in &[-1e6_f64, -3.0, -1.0, 0.0, 0.5, 2.0, 1e6] {
            let y = soft_normalize(x);
            assert!(y > -1.0 && y < 1.0, "phi({x}) = {y} out of (-1,1)");
        }
        assert_eq!(soft_normalize(0.0_f64), 0.0);
    }

    #[test]
    fn soft_normalize_monotone() {
        let xs: Vec<f64> = (-100..100).map(|i| i as f64 * 0.37).collect();
        for w in xs.windows(2) {
            assert!(soft_normalize(w[0]) < soft_normalize(w[1]));
        }
    }
}
