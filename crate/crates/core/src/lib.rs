//! Semi-quantum Game of Life.
//!
//! Each cell carries a real qubit `a|alive> + b|dead>`. A generation mixes
//! birth, death and survival operators according to the summed liveness of
//! the eight neighbors, then renormalizes. Binary grids follow Conway's rules
//! exactly; part-live cells produce still lifes, seeds, oscillators and
//! space-filling liveness clouds whose statistics do not depend on the
//! starting condition.

pub mod analysis;
pub mod catalog;
pub mod chaos;
pub mod cell;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod io;
pub mod numeric;
mod par;
pub mod rules;
pub mod seed;
pub mod sweep;

pub use analysis::{classify_run, mean_liveness, ClassifyLimits, Outcome};
pub use catalog::{make_qutub, match_pattern, stamp, Pattern, QutubSpec, SpeciesIndex};
pub use cell::{normalize, CellState};
pub use engine::{classical_step, neighborhood_liveness, step, step_sequential, Evolution};
#[cfg(feature = "parallel")]
pub use engine::step_parallel;
pub use error::{Error, Result};
pub use grid::{Grid, Symmetry};
pub use numeric::{NumericPolicy, Precision, SumOrder};
pub use rules::{apply_rule, RuleSet};
pub use seed::seed_random;
pub use sweep::{run_sweep, Axis, OutcomeGrid, SweepSpec};
pub use par::with_workers;
