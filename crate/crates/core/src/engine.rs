//! Synchronous stepping.
//!
//! All reads come from generation `n` and all writes go to a separate buffer
//! for generation `n + 1`. Each cell's neighbor sum follows the order fixed by
//! the [`NumericPolicy`], so rows can be updated in any order or in parallel
//! without changing a single bit.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::cell::deadness;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::numeric::{NumericPolicy, Precision, Real, SumOrder};
use crate::rules::{RuleKernel, RuleSet};

#[derive(Clone, Copy)]
enum Summation {
    Fold([usize; 8]),
    Tree,
}

impl Summation {
    fn new(order: SumOrder) -> Self {
        match order.permutation() {
            Some(p) => Summation::Fold(p),
            None => Summation::Tree,
        }
    }

    #[inline(always)]
    fn sum<T: Real>(self, n: &[T; 8]) -> T {
        match self {
            Summation::Fold(p) => {
                let mut s = n[p[0]];
                for &i in &p[1..] {
                    s = s + n[i];
                }
                s
            }
            Summation::Tree => ((n[0] + n[1]) + (n[2] + n[3])) + ((n[4] + n[5]) + (n[6] + n[7])),
        }
    }
}

/// Torus-wrapped source view used by the row kernel.
#[derive(Clone, Copy)]
struct Source<'a> {
    cells: &'a [f64],
    width: usize,
    height: usize,
}

impl Source<'_> {
    /// Neighbor liveness values in canonical order.
    #[inline(always)]
    fn neighbors<T: Real>(&self, row: usize, col: usize) -> [T; 8] {
        let w = self.width;
        let up = if row == 0 { self.height - 1 } else { row - 1 } * w;
        let mid = row * w;
        let down = if row + 1 == self.height { 0 } else { row + 1 } * w;
        let left = if col == 0 { w - 1 } else { col - 1 };
        let right = if col + 1 == w { 0 } else { col + 1 };
        let c = self.cells;
        [
            T::from_f64(c[up + left]),
            T::from_f64(c[up + col]),
            T::from_f64(c[up + right]),
            T::from_f64(c[mid + left]),
            T::from_f64(c[mid + right]),
            T::from_f64(c[down + left]),
            T::from_f64(c[down + col]),
            T::from_f64(c[down + right]),
        ]
    }
}

/// Per-row by-products of an update, reduced order-independently.
#[derive(Debug, Clone, Copy, Default)]
struct RowSummary {
    max_delta: f64,
    max_liveness: f64,
    nonzero_cols: Option<(usize, usize)>,
}

impl RowSummary {
    fn merge(mut self, other: RowSummary) -> RowSummary {
        self.max_delta = self.max_delta.max(other.max_delta);
        self.max_liveness = self.max_liveness.max(other.max_liveness);
        self.nonzero_cols = match (self.nonzero_cols, other.nonzero_cols) {
            (Some((a, b)), Some((c, d))) => Some((a.min(c), b.max(d))),
            (x, None) => x,
            (None, y) => y,
        };
        self
    }
}

/// Updates columns `cols` of `row`, writing into `out` (the full output row).
#[inline]
fn update_row<T: Real>(
    src: Source<'_>,
    row: usize,
    cols: (usize, usize),
    sum: Summation,
    kernel: &RuleKernel<T>,
    out: &mut [f64],
) -> RowSummary {
    let mut summary = RowSummary::default();
    let base = row * src.width;
    for col in cols.0..=cols.1 {
        let n = src.neighbors::<T>(row, col);
        let liveness = sum.sum(&n);
        let old = src.cells[base + col];
        let a = T::from_f64(old);
        let next = kernel.next_liveness(a, deadness(a), liveness).to_f64();
        out[col] = next;
        summary.max_delta = summary.max_delta.max((next - old).abs());
        if next > 0.0 {
            summary.max_liveness = summary.max_liveness.max(next);
            summary.nonzero_cols = Some(match summary.nonzero_cols {
                None => (col, col),
                Some((lo, _)) => (lo, col),
            });
        }
    }
    summary
}

/// Updates rows `rows` (inclusive) and columns `cols` (inclusive) of `src`
/// into `dst`. Rows are distributed over the rayon pool when `parallel` is set.
fn update_window<T: Real>(
    src: Source<'_>,
    dst: &mut [f64],
    rows: (usize, usize),
    cols: (usize, usize),
    sum: Summation,
    kernel: &RuleKernel<T>,
    parallel: bool,
) -> (RowSummary, Option<(usize, usize)>) {
    let w = src.width;
    let window = &mut dst[rows.0 * w..(rows.1 + 1) * w];
    let per_row = |(i, out): (usize, &mut [f64])| {
        let row = rows.0 + i;
        (row, update_row(src, row, cols, sum, kernel, out))
    };
    let summaries: Vec<(usize, RowSummary)> = if parallel {
        par_rows(window, w, per_row)
    } else {
        window.chunks_mut(w).enumerate().map(per_row).collect()
    };
    let mut total = RowSummary::default();
    let mut nonzero_rows: Option<(usize, usize)> = None;
    for (row, s) in summaries {
        if s.nonzero_cols.is_some() {
            nonzero_rows = Some(match nonzero_rows {
                None => (row, row),
                Some((lo, _)) => (lo, row),
            });
        }
        total = total.merge(s);
    }
    (total, nonzero_rows)
}

#[cfg(feature = "parallel")]
fn par_rows<F>(window: &mut [f64], width: usize, f: F) -> Vec<(usize, RowSummary)>
where
    F: Fn((usize, &mut [f64])) -> (usize, RowSummary) + Sync + Send,
{
    window.par_chunks_mut(width).enumerate().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_rows<F>(window: &mut [f64], width: usize, f: F) -> Vec<(usize, RowSummary)>
where
    F: Fn((usize, &mut [f64])) -> (usize, RowSummary),
{
    window.chunks_mut(width).enumerate().map(f).collect()
}

/// Sum of the eight neighbor liveness values of `(row, col)` in the policy's order.
pub fn neighborhood_liveness(grid: &Grid, row: usize, col: usize, policy: &NumericPolicy) -> f64 {
    assert!(row < grid.height() && col < grid.width(), "cell out of range");
    let src = Source {
        cells: grid.liveness(),
        width: grid.width(),
        height: grid.height(),
    };
    let sum = Summation::new(policy.summation_order);
    match policy.precision {
        Precision::Binary32 => sum.sum(&src.neighbors::<f32>(row, col)) as f64,
        Precision::Binary64 => sum.sum(&src.neighbors::<f64>(row, col)),
    }
}

fn step_with(grid: &Grid, rules: &RuleSet, policy: &NumericPolicy, parallel: bool) -> Grid {
    let mut next = grid.with_precision(policy.precision);
    let src_grid = next.clone();
    let src = Source {
        cells: src_grid.liveness(),
        width: grid.width(),
        height: grid.height(),
    };
    let rows = (0, grid.height() - 1);
    let cols = (0, grid.width() - 1);
    let sum = Summation::new(policy.summation_order);
    let dst = next.liveness_mut();
    match policy.precision {
        Precision::Binary32 => {
            update_window(src, dst, rows, cols, sum, &rules.kernel::<f32>(), parallel);
        }
        Precision::Binary64 => {
            update_window(src, dst, rows, cols, sum, &rules.kernel::<f64>(), parallel);
        }
    }
    next.set_generation(grid.generation() + 1);
    next
}

/// One synchronous generation. Uses the rayon pool when the `parallel`
/// feature is enabled; the result is identical either way.
pub fn step(grid: &Grid, rules: &RuleSet, policy: &NumericPolicy) -> Grid {
    step_with(grid, rules, policy, cfg!(feature = "parallel"))
}

/// [`step`] on the calling thread only.
pub fn step_sequential(grid: &Grid, rules: &RuleSet, policy: &NumericPolicy) -> Grid {
    step_with(grid, rules, policy, false)
}

/// [`step`] with rows distributed over the rayon pool.
#[cfg(feature = "parallel")]
pub fn step_parallel(grid: &Grid, rules: &RuleSet, policy: &NumericPolicy) -> Grid {
    step_with(grid, rules, policy, true)
}

/// Conway's rules in integer arithmetic. Oracle for binary grids.
pub fn classical_step(grid: &Grid) -> Result<Grid> {
    let (w, h) = (grid.width(), grid.height());
    let mut alive = vec![0u8; w * h];
    for row in 0..h {
        for col in 0..w {
            let a = grid.get(row, col);
            if a == 1.0 {
                alive[row * w + col] = 1;
            } else if a != 0.0 {
                return Err(Error::NonBinaryInput { row, col, a });
            }
        }
    }
    let mut next = grid.clone();
    for row in 0..h {
        for col in 0..w {
            let mut n = 0u8;
            for dr in [h - 1, 0, 1] {
                for dc in [w - 1, 0, 1] {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    n += alive[((row + dr) % h) * w + (col + dc) % w];
                }
            }
            let live = alive[row * w + col] == 1;
            let next_live = matches!((live, n), (true, 2) | (true, 3) | (false, 3));
            next.set(row, col, if next_live { 1.0 } else { 0.0 })?;
        }
    }
    next.set_generation(grid.generation() + 1);
    Ok(next)
}

/// Inclusive row and column ranges containing every nonzero cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub rows: (usize, usize),
    pub cols: (usize, usize),
}

impl Window {
    fn full(grid: &Grid) -> Self {
        Window {
            rows: (0, grid.height() - 1),
            cols: (0, grid.width() - 1),
        }
    }

    /// Smallest window covering every cell with nonzero liveness.
    pub fn of(grid: &Grid) -> Option<Window> {
        let w = grid.width();
        let mut out: Option<Window> = None;
        for (i, &a) in grid.liveness().iter().enumerate() {
            if a != 0.0 {
                let (r, c) = (i / w, i % w);
                out = Some(match out {
                    None => Window {
                        rows: (r, r),
                        cols: (c, c),
                    },
                    Some(win) => Window {
                        rows: (win.rows.0.min(r), win.rows.1.max(r)),
                        cols: (win.cols.0.min(c), win.cols.1.max(c)),
                    },
                });
            }
        }
        out
    }

    /// Grows the window by one cell; a window touching the border becomes
    /// the full extent along that axis since neighbors wrap.
    fn expanded(self, width: usize, height: usize) -> Window {
        let grow = |(lo, hi): (usize, usize), n: usize| {
            if lo == 0 || hi + 1 >= n {
                (0, n - 1)
            } else {
                (lo - 1, hi + 1)
            }
        };
        Window {
            rows: grow(self.rows, height),
            cols: grow(self.cols, width),
        }
    }

    fn cover(self, other: Window) -> Window {
        Window {
            rows: (self.rows.0.min(other.rows.0), self.rows.1.max(other.rows.1)),
            cols: (self.cols.0.min(other.cols.0), self.cols.1.max(other.cols.1)),
        }
    }

    pub fn area(&self) -> usize {
        (self.rows.1 - self.rows.0 + 1) * (self.cols.1 - self.cols.0 + 1)
    }
}

/// What changed in one [`Evolution::step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Largest per-cell liveness change.
    pub max_delta: f64,
    /// Largest liveness in the new generation.
    pub max_liveness: f64,
}

/// Double-buffered trajectory that only recomputes the neighborhood of
/// nonzero cells. Produces exactly the grids [`step`] would.
#[derive(Debug, Clone)]
pub struct Evolution {
    grid: Grid,
    back: Vec<f64>,
    rules: RuleSet,
    policy: NumericPolicy,
    parallel: bool,
    /// Nonzero cells of the current generation.
    live: Option<Window>,
    /// Nonzero cells still present in the back buffer.
    stale: Option<Window>,
}

impl Evolution {
    pub fn new(grid: Grid, rules: RuleSet, policy: NumericPolicy) -> Self {
        let grid = if grid.precision() == policy.precision {
            grid
        } else {
            grid.with_precision(policy.precision)
        };
        let live = Window::of(&grid);
        Self {
            back: vec![0.0; grid.len()],
            grid,
            rules,
            policy,
            parallel: cfg!(feature = "parallel"),
            live,
            stale: None,
        }
    }

    /// Forces sequential (or, with the `parallel` feature, pooled) row updates.
    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel && cfg!(feature = "parallel");
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn into_grid(self) -> Grid {
        self.grid
    }

    pub fn generation(&self) -> u64 {
        self.grid.generation()
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    pub fn policy(&self) -> &NumericPolicy {
        &self.policy
    }

    /// Window holding every nonzero cell, `None` for an all-dead grid.
    pub fn live_window(&self) -> Option<Window> {
        self.live
    }

    pub fn step(&mut self) -> StepReport {
        let (w, h) = (self.grid.width(), self.grid.height());
        let target = match (self.live.map(|l| l.expanded(w, h)), self.stale) {
            (Some(l), Some(s)) => Some(l.cover(s)),
            (l, s) => l.or(s),
        };
        let generation = self.grid.generation() + 1;
        let Some(target) = target else {
            // Dead everywhere and nothing stale: the dead universe is absorbing.
            self.grid.set_generation(generation);
            return StepReport {
                max_delta: 0.0,
                max_liveness: 0.0,
            };
        };
        let target = if target.area() * 10 >= w * h * 9 {
            Window::full(&self.grid)
        } else {
            target
        };
        let src = Source {
            cells: self.grid.liveness(),
            width: w,
            height: h,
        };
        let sum = Summation::new(self.policy.summation_order);
        let (summary, rows) = match self.policy.precision {
            Precision::Binary32 => update_window(
                src,
                &mut self.back,
                target.rows,
                target.cols,
                sum,
                &self.rules.kernel::<f32>(),
                self.parallel,
            ),
            Precision::Binary64 => update_window(
                src,
                &mut self.back,
                target.rows,
                target.cols,
                sum,
                &self.rules.kernel::<f64>(),
                self.parallel,
            ),
        };
        std::mem::swap(self.grid.liveness_mut(), &mut self.back);
        self.grid.set_generation(generation);
        self.stale = self.live;
        self.live = rows.zip(summary.nonzero_cols).map(|(rows, cols)| Window { rows, cols });
        StepReport {
            max_delta: summary.max_delta,
            max_liveness: summary.max_liveness,
        }
    }

    /// Runs `n` generations.
    pub fn advance(&mut self, n: u64) {
        for _ in 0..n {
            self.step();
        }
    }
}
