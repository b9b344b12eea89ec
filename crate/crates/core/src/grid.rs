//! Torus of qubit cells.
//!
//! A cell is fully determined by its liveness `a`; the deadness is always
//! `√(1 − a²)` in the grid precision. Liveness values are stored as `f64` and
//! are exactly representable in [`Grid::precision`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cell::{deadness, CellState};
use crate::error::{Error, Result};
use crate::numeric::Precision;

#[derive(Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    generation: u64,
    precision: Precision,
    cells: Vec<f64>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("generation", &self.generation)
            .field("precision", &self.precision)
            .field("live_cells", &self.count_above(0.0))
            .finish()
    }
}

/// Dihedral operation about the grid center.
///
/// The center is the cell `(height / 2, width / 2)`; indices wrap around the
/// torus, so even-sized grids rotate about that cell as well.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Symmetry {
    Rot90,
    Rot180,
    Rot270,
    MirrorH,
    MirrorV,
}

impl Symmetry {
    pub const ALL: [Symmetry; 5] = [
        Symmetry::Rot90,
        Symmetry::Rot180,
        Symmetry::Rot270,
        Symmetry::MirrorH,
        Symmetry::MirrorV,
    ];

    pub fn is_rotation(self) -> bool {
        matches!(self, Symmetry::Rot90 | Symmetry::Rot180 | Symmetry::Rot270)
    }

    /// Image of `(row, col)` under the operation on a `width x height` torus.
    pub fn map(self, row: usize, col: usize, width: usize, height: usize) -> (usize, usize) {
        let (cr, cc) = (height / 2, width / 2);
        // (2k - x) mod n
        let reflect = |x: usize, k: usize, n: usize| (2 * k + n - x) % n;
        match self {
            // A cell displaced by (dr, dc) from the center lands at (-dc, dr).
            Symmetry::Rot90 => (reflect(col, cc, width), row),
            Symmetry::Rot180 => (reflect(row, cr, height), reflect(col, cc, width)),
            Symmetry::Rot270 => (col, reflect(row, cr, height)),
            Symmetry::MirrorH => (row, reflect(col, cc, width)),
            Symmetry::MirrorV => (reflect(row, cr, height), col),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Symmetry::Rot90 => "rot90",
            Symmetry::Rot180 => "rot180",
            Symmetry::Rot270 => "rot270",
            Symmetry::MirrorH => "mirror-h",
            Symmetry::MirrorV => "mirror-v",
        }
    }
}

impl Grid {
    /// All-dead grid.
    ///
    /// # Panics
    ///
    /// If either dimension is zero.
    pub fn new(width: usize, height: usize, precision: Precision) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be positive");
        Self {
            width,
            height,
            generation: 0,
            precision,
            cells: vec![0.0; width * height],
        }
    }

    /// Builds a grid from row-major liveness values, rounding each to `precision`.
    pub fn from_liveness(
        width: usize,
        height: usize,
        precision: Precision,
        liveness: Vec<f64>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidConfig(format!(
                "grid dimensions must be positive, got {width}x{height}"
            )));
        }
        if liveness.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} cells", width * height),
                found: format!("{} cells", liveness.len()),
            });
        }
        let mut cells = liveness;
        for (i, a) in cells.iter_mut().enumerate() {
            check_amplitude(*a, || format!("cell {i}"))?;
            *a = precision.round(*a);
        }
        Ok(Self {
            width,
            height,
            generation: 0,
            precision,
            cells,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn set_generation(&mut self, generation: u64) {
        self.generation = generation;
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    /// Row-major liveness values.
    pub fn liveness(&self) -> &[f64] {
        &self.cells
    }

    pub(crate) fn liveness_mut(&mut self) -> &mut Vec<f64> {
        &mut self.cells
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    /// Wraps signed coordinates onto the torus.
    #[inline]
    pub fn wrap(&self, row: isize, col: isize) -> (usize, usize) {
        (
            row.rem_euclid(self.height as isize) as usize,
            col.rem_euclid(self.width as isize) as usize,
        )
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[self.index(row, col)]
    }

    /// Liveness at wrapped signed coordinates.
    pub fn get_wrapped(&self, row: isize, col: isize) -> f64 {
        let (r, c) = self.wrap(row, col);
        self.get(r, c)
    }

    pub fn cell(&self, row: usize, col: usize) -> CellState<f64> {
        let a = self.get(row, col);
        let b = match self.precision {
            Precision::Binary32 => deadness(a as f32) as f64,
            Precision::Binary64 => deadness(a),
        };
        CellState { a, b }
    }

    /// Sets the liveness of a cell, rounding to the grid precision.
    pub fn set(&mut self, row: usize, col: usize, a: f64) -> Result<()> {
        check_amplitude(a, || format!("cell ({row}, {col})"))?;
        let i = self.index(row, col);
        self.cells[i] = self.precision.round(a);
        Ok(())
    }

    pub fn set_wrapped(&mut self, row: isize, col: isize, a: f64) -> Result<()> {
        let (r, c) = self.wrap(row, col);
        self.set(r, c, a)
    }

    /// Copy of this grid in another precision (values rounded to nearest).
    pub fn with_precision(&self, precision: Precision) -> Grid {
        let mut g = self.clone();
        g.precision = precision;
        for a in g.cells.iter_mut() {
            *a = precision.round(*a);
        }
        g
    }

    pub fn center(&self) -> (usize, usize) {
        (self.height / 2, self.width / 2)
    }

    pub fn is_binary(&self) -> bool {
        self.cells.iter().all(|&a| a == 0.0 || a == 1.0)
    }

    pub fn max_liveness(&self) -> f64 {
        self.cells.iter().copied().fold(0.0, f64::max)
    }

    /// Number of cells with liveness strictly above `epsilon`.
    pub fn count_above(&self, epsilon: f64) -> usize {
        self.cells.iter().filter(|&&a| a > epsilon).count()
    }

    /// Largest per-cell liveness difference to a grid of the same shape.
    pub fn max_abs_diff(&self, other: &Grid) -> f64 {
        assert_eq!(
            (self.width, self.height),
            (other.width, other.height),
            "grid shapes differ"
        );
        self.cells
            .iter()
            .zip(other.cells.iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    /// Whether both grids hold the same liveness bits (generation ignored).
    pub fn same_cells(&self, other: &Grid) -> bool {
        self.width == other.width
            && self.height == other.height
            && self
                .cells
                .iter()
                .zip(other.cells.iter())
                .all(|(x, y)| x.to_bits() == y.to_bits())
    }

    /// The grid translated by `(drow, dcol)` on the torus.
    pub fn shifted(&self, drow: isize, dcol: isize) -> Grid {
        let mut out = Grid {
            cells: vec![0.0; self.cells.len()],
            ..self.clone()
        };
        for r in 0..self.height {
            for c in 0..self.width {
                let (nr, nc) = self.wrap(r as isize + drow, c as isize + dcol);
                out.cells[nr * self.width + nc] = self.get(r, c);
            }
        }
        out
    }

    /// The grid with every cell moved to its image under `op`.
    pub fn transformed(&self, op: Symmetry) -> Result<Grid> {
        if op.is_rotation() && self.width != self.height {
            return Err(Error::NonSquareGrid {
                width: self.width,
                height: self.height,
            });
        }
        let mut out = Grid {
            cells: vec![0.0; self.cells.len()],
            ..self.clone()
        };
        for r in 0..self.height {
            for c in 0..self.width {
                let (nr, nc) = op.map(r, c, self.width, self.height);
                out.cells[nr * self.width + nc] = self.get(r, c);
            }
        }
        Ok(out)
    }

    /// Quarter turn about the center; see [`Symmetry::Rot90`].
    pub fn rotate90(&self) -> Result<Grid> {
        self.transformed(Symmetry::Rot90)
    }
}

pub(crate) fn check_amplitude(a: f64, field: impl FnOnce() -> String) -> Result<()> {
    if (0.0..=1.0).contains(&a) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            field: field(),
            value: a,
        })
    }
}
