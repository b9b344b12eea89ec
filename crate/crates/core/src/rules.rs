//! Birth / death / survival operator mixing keyed on neighborhood liveness.
//!
//! On a raw amplitude pair the three operators act as
//!
//! ```text
//! B: (a, b) -> (a + b, 0)      birth
//! D: (a, b) -> (0, a + b)      death
//! S: (a, b) -> (a, b)          survival
//! ```
//!
//! and the update operator is piecewise in the neighborhood liveness `A`:
//!
//! ```text
//! A <= 1        D
//! 1 < A <= 2    g(2 - A) D + (A - 1) S
//! 2 < A <= 3    g(3 - A) S + (A - 2) B
//! 3 < A <= 4    g(4 - A) B + (A - 3) D
//! A > 4         D
//! ```
//!
//! followed by normalization. At integer `A` exactly one operator carries a
//! nonzero weight, so binary grids follow Conway's rules bit for bit.

use serde::{Deserialize, Serialize};

use crate::cell::{deadness, normalized_liveness, CellState};
use crate::error::{Error, Result};
use crate::numeric::Real;

/// `1 + √2`, the default weight of the operator being phased out on a segment.
pub const DEFAULT_MIXING: f64 = 1.0 + std::f64::consts::SQRT_2;

/// Mixing coefficient and segment boundaries of the update operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    /// Weight `g` multiplying the outgoing operator on each mixed segment.
    pub g: f64,
    /// Segment boundaries on `A`; segments are closed on the right.
    pub bounds: [f64; 4],
}

impl Default for RuleSet {
    fn default() -> Self {
        Self {
            g: DEFAULT_MIXING,
            bounds: [1.0, 2.0, 3.0, 4.0],
        }
    }
}

impl RuleSet {
    pub fn with_mixing(g: f64) -> Self {
        Self {
            g,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g.is_finite() && self.g > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "rules.g must be a positive finite number, got {}",
                self.g
            )));
        }
        let b = self.bounds;
        let increasing = b.windows(2).all(|w| w[0] < w[1]);
        if !(b.iter().all(|x| x.is_finite()) && b[0] >= 0.0 && increasing) {
            return Err(Error::InvalidConfig(format!(
                "rules.bounds must be finite, nonnegative and strictly increasing, got {b:?}"
            )));
        }
        Ok(())
    }

    /// Weights `(birth, death, survival)` of the operator mixture at `A`,
    /// before normalization.
    pub fn weights(&self, liveness: f64) -> (f64, f64, f64) {
        let [b1, b2, b3, b4] = self.bounds;
        let g = self.g;
        let a = liveness;
        if a <= b1 || a > b4 {
            (0.0, 1.0, 0.0)
        } else if a <= b2 {
            (0.0, g * (b2 - a), a - b1)
        } else if a <= b3 {
            (a - b2, 0.0, g * (b3 - a))
        } else {
            (g * (b4 - a), a - b3, 0.0)
        }
    }

    pub(crate) fn kernel<T: Real>(&self) -> RuleKernel<T> {
        RuleKernel {
            g: T::from_f64(self.g),
            bounds: self.bounds.map(T::from_f64),
        }
    }
}

/// A [`RuleSet`] with its constants rounded to the kernel precision.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RuleKernel<T> {
    g: T,
    bounds: [T; 4],
}

impl<T: Real> RuleKernel<T> {
    /// Next liveness of a cell with liveness `a` and deadness `b`.
    #[inline]
    pub(crate) fn next_liveness(&self, a: T, b: T, liveness: T) -> T {
        let [b1, b2, b3, b4] = self.bounds;
        let g = self.g;
        let s = a + b;
        let (x, y) = if liveness <= b1 || liveness > b4 {
            return T::ZERO;
        } else if liveness <= b2 {
            // g(2 - A) D + (A - 1) S
            let death = g * (b2 - liveness);
            let survival = liveness - b1;
            (survival * a, death * s + survival * b)
        } else if liveness <= b3 {
            // g(3 - A) S + (A - 2) B
            let survival = g * (b3 - liveness);
            let birth = liveness - b2;
            (survival * a + birth * s, survival * b)
        } else {
            // g(4 - A) B + (A - 3) D
            let birth = g * (b4 - liveness);
            let death = liveness - b3;
            (birth * s, death * s)
        };
        normalized_liveness(x, y)
    }
}

/// Applies the update operator for neighborhood liveness `liveness` to `state`.
pub fn apply_rule<T: Real>(state: CellState<T>, liveness: T, rules: &RuleSet) -> CellState<T> {
    let a = rules.kernel::<T>().next_liveness(state.a, state.b, liveness);
    CellState { a, b: deadness(a) }
}
