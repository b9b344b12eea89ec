//! Real qubit state of a single cell.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{Precision, Real};

/// `a|alive> + b|dead>` with real, nonnegative amplitudes and `a² + b² = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellState<T = f64> {
    /// Liveness amplitude.
    pub a: T,
    /// Deadness amplitude.
    pub b: T,
}

impl<T: Real> CellState<T> {
    pub fn dead() -> Self {
        Self {
            a: T::ZERO,
            b: T::ONE,
        }
    }

    pub fn live() -> Self {
        Self {
            a: T::ONE,
            b: T::ZERO,
        }
    }

    /// The state with liveness `a`; the deadness is recovered as `√(1 − a²)`.
    #[inline]
    pub fn from_liveness(a: T) -> Self {
        Self {
            a,
            b: deadness(a),
        }
    }

    /// Probability of measuring the cell alive.
    pub fn alive_probability(&self) -> T {
        self.a * self.a
    }
}

/// `√(1 − a²)` evaluated in the precision of `T`.
#[inline]
pub fn deadness<T: Real>(a: T) -> T {
    (T::ONE - a * a).sqrt()
}

/// Scales a nonnegative raw amplitude pair to unit length.
///
/// The deadness of the result is recovered from the normalized liveness so
/// that a cell is fully determined by `a`.
pub fn normalize<T: Real>(x: T, y: T) -> Result<CellState<T>> {
    if !(x >= T::ZERO && y >= T::ZERO) {
        return Err(Error::OutOfRange {
            field: "raw amplitude".into(),
            value: if x >= T::ZERO { y.to_f64() } else { x.to_f64() },
        });
    }
    if x == T::ZERO && y == T::ZERO {
        return Err(Error::ZeroVector);
    }
    Ok(CellState::from_liveness(normalized_liveness(x, y)))
}

#[inline]
pub(crate) fn normalized_liveness<T: Real>(x: T, y: T) -> T {
    x / (x * x + y * y).sqrt()
}

/// `|a² + b² − 1|` measured in units of the precision's epsilon.
pub fn norm_error_ulps(state: CellState<f64>, precision: Precision) -> f64 {
    let n = match precision {
        Precision::Binary32 => {
            let (a, b) = (state.a as f32, state.b as f32);
            ((a * a + b * b) as f64 - 1.0).abs()
        }
        Precision::Binary64 => (state.a * state.a + state.b * state.b - 1.0).abs(),
    };
    n / precision.epsilon()
}
