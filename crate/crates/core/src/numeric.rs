//! Floating-point precision and neighbor summation order.
//!
//! Every rounding step in the update kernel is controlled from here so that a
//! `(grid, rules, policy)` triple always yields the same bits.

use std::fmt;
use std::ops::{Add, Div, Mul, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// IEEE-754 binary format used for all arithmetic of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Binary32,
    Binary64,
}

impl Precision {
    /// Rounds an `f64` to the nearest value representable in this precision.
    #[inline]
    pub fn round(self, x: f64) -> f64 {
        match self {
            Precision::Binary32 => x as f32 as f64,
            Precision::Binary64 => x,
        }
    }

    pub fn is_representable(self, x: f64) -> bool {
        self.round(x).to_bits() == x.to_bits()
    }

    /// Unit in the last place at 1.0.
    pub fn epsilon(self) -> f64 {
        match self {
            Precision::Binary32 => f32::EPSILON as f64,
            Precision::Binary64 => f64::EPSILON,
        }
    }

    /// Significant decimal digits needed for a lossless round trip.
    pub fn round_trip_digits(self) -> usize {
        match self {
            Precision::Binary32 => 9,
            Precision::Binary64 => 17,
        }
    }

    /// Formats `x` (already representable in this precision) so that parsing it
    /// back yields the same bits.
    pub fn format(self, x: f64) -> String {
        let digits = self.round_trip_digits();
        format!("{:.*e}", digits - 1, x)
    }

    /// Parses a decimal produced by [`Precision::format`] back to the same bits.
    pub fn parse(self, s: &str) -> Result<f64, std::num::ParseFloatError> {
        match self {
            Precision::Binary32 => s.parse::<f32>().map(f64::from),
            Precision::Binary64 => s.parse::<f64>(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Precision::Binary32 => "binary32",
            Precision::Binary64 => "binary64",
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "binary32" | "f32" => Ok(Precision::Binary32),
            "binary64" | "f64" => Ok(Precision::Binary64),
            other => Err(Error::InvalidConfig(format!("unknown precision `{other}`"))),
        }
    }
}

/// Neighbor offsets `(drow, dcol)` in canonical row-major order.
pub const CANONICAL_OFFSETS: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Quarter-turn of an offset, matching [`crate::grid::Grid::rotate90`]:
/// a cell displaced by `(dr, dc)` lands at `(-dc, dr)`.
#[inline]
pub const fn rotate_offset((dr, dc): (isize, isize)) -> (isize, isize) {
    (-dc, dr)
}

/// Order in which the eight neighbor amplitudes are accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SumOrder {
    /// Left fold over [`CANONICAL_OFFSETS`].
    Canonical,
    /// Left fold over the canonical offsets in reverse.
    Reversed,
    /// Left fold over the canonical offsets rotated by k quarter turns.
    Rot1,
    Rot2,
    Rot3,
    /// Balanced tree `((n0+n1)+(n2+n3))+((n4+n5)+(n6+n7))` in canonical order.
    Tree,
}

impl SumOrder {
    pub const ALL: [SumOrder; 6] = [
        SumOrder::Canonical,
        SumOrder::Reversed,
        SumOrder::Rot1,
        SumOrder::Rot2,
        SumOrder::Rot3,
        SumOrder::Tree,
    ];

    /// The sequence of offsets visited by a left fold, or `None` for the tree.
    pub fn offsets(self) -> Option<[(isize, isize); 8]> {
        let quarter_turns = match self {
            SumOrder::Canonical => 0,
            SumOrder::Rot1 => 1,
            SumOrder::Rot2 => 2,
            SumOrder::Rot3 => 3,
            SumOrder::Reversed => {
                let mut o = CANONICAL_OFFSETS;
                o.reverse();
                return Some(o);
            }
            SumOrder::Tree => return None,
        };
        let mut o = CANONICAL_OFFSETS;
        for _ in 0..quarter_turns {
            for d in o.iter_mut() {
                *d = rotate_offset(*d);
            }
        }
        Some(o)
    }

    /// Permutation of canonical neighbor indices for a left fold.
    pub(crate) fn permutation(self) -> Option<[usize; 8]> {
        let offsets = self.offsets()?;
        let mut perm = [0usize; 8];
        for (slot, d) in perm.iter_mut().zip(offsets.iter()) {
            *slot = CANONICAL_OFFSETS
                .iter()
                .position(|c| c == d)
                .expect("rotated offset is a neighbor offset");
        }
        Some(perm)
    }

    /// The order obtained by rotating this one a further quarter turn.
    pub fn rotated(self) -> SumOrder {
        match self {
            SumOrder::Canonical => SumOrder::Rot1,
            SumOrder::Rot1 => SumOrder::Rot2,
            SumOrder::Rot2 => SumOrder::Rot3,
            SumOrder::Rot3 => SumOrder::Canonical,
            other => other,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SumOrder::Canonical => "canonical",
            SumOrder::Reversed => "reversed",
            SumOrder::Rot1 => "rot1",
            SumOrder::Rot2 => "rot2",
            SumOrder::Rot3 => "rot3",
            SumOrder::Tree => "tree",
        }
    }
}

impl fmt::Display for SumOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SumOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        SumOrder::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .or(match s {
                "pairwise-tree" => Some(SumOrder::Tree),
                _ => None,
            })
            .ok_or_else(|| Error::InvalidConfig(format!("unknown summation order `{s}`")))
    }
}

/// Precision plus neighbor summation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NumericPolicy {
    pub precision: Precision,
    pub summation_order: SumOrder,
}

impl NumericPolicy {
    pub const fn new(precision: Precision, summation_order: SumOrder) -> Self {
        Self {
            precision,
            summation_order,
        }
    }

    pub const fn binary32() -> Self {
        Self::new(Precision::Binary32, SumOrder::Canonical)
    }

    pub const fn binary64() -> Self {
        Self::new(Precision::Binary64, SumOrder::Canonical)
    }

    pub fn label(&self) -> String {
        format!("{}-{}", self.precision, self.summation_order)
    }
}

impl Default for NumericPolicy {
    fn default() -> Self {
        Self::binary64()
    }
}

/// Scalar type the update kernel is instantiated with.
pub trait Real:
    Copy
    + PartialOrd
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + 'static
{
    const ZERO: Self;
    const ONE: Self;
    const PRECISION: Precision;

    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
}

impl Real for f32 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    const PRECISION: Precision = Precision::Binary32;

    #[inline]
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn sqrt(self) -> Self {
        f32::sqrt(self)
    }
}

impl Real for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    const PRECISION: Precision = Precision::Binary64;

    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotated_orders_are_permutations() {
        for order in SumOrder::ALL {
            if let Some(perm) = order.permutation() {
                let mut seen = perm;
                seen.sort_unstable();
                assert_eq!(seen, [0, 1, 2, 3, 4, 5, 6, 7], "{order}");
            }
        }
        assert_eq!(
            SumOrder::Canonical.permutation().unwrap(),
            [0, 1, 2, 3, 4, 5, 6, 7]
        );
        assert_eq!(
            SumOrder::Reversed.permutation().unwrap(),
            [7, 6, 5, 4, 3, 2, 1, 0]
        );
    }

    #[test]
    fn four_quarter_turns_is_identity() {
        let mut order = SumOrder::Canonical;
        for _ in 0..4 {
            order = order.rotated();
        }
        assert_eq!(order, SumOrder::Canonical);
        assert_eq!(SumOrder::Rot1.offsets().unwrap()[0], (1, -1));
    }

    #[test]
    fn parse_names() {
        for order in SumOrder::ALL {
            assert_eq!(order.name().parse::<SumOrder>().unwrap(), order);
        }
        assert!("sideways".parse::<SumOrder>().is_err());
        assert_eq!("binary32".parse::<Precision>().unwrap(), Precision::Binary32);
        assert!("binary16".parse::<Precision>().is_err());
    }

    #[test]
    fn format_round_trips() {
        for &x in &[0.1f64, 1.0 / 3.0, 0.57, 1e-300, 0.0] {
            let p = Precision::Binary64;
            assert_eq!(p.parse(&p.format(x)).unwrap().to_bits(), x.to_bits());
            let p = Precision::Binary32;
            let y = p.round(x);
            assert_eq!(p.parse(&p.format(y)).unwrap().to_bits(), y.to_bits());
        }
    }
}
