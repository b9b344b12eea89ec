//! Divergence of trajectories under different floating-point policies.

use serde::{Deserialize, Serialize};

use crate::engine::Evolution;
use crate::error::{Error, Result};
use crate::grid::{Grid, Symmetry};
use crate::numeric::NumericPolicy;
use crate::par::for_each_mut;
use crate::rules::RuleSet;

/// Thresholds at which first crossings are recorded.
pub const THRESHOLD_LADDER: [f64; 4] = [1e-7, 1e-5, 1e-3, 1e-1];

/// Largest `|a(cell) - a(op(cell))|` over the grid.
pub fn symmetry_deviation(grid: &Grid, op: Symmetry) -> Result<f64> {
    Ok(grid.max_abs_diff(&grid.transformed(op)?))
}

/// Per-generation difference between a variant and the reference trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub reference: String,
    pub variant: String,
    /// Indexed by generation, starting at the seed.
    pub max_abs: Vec<f64>,
    pub rms: Vec<f64>,
    /// First generation with `max_abs > threshold`, per ladder rung.
    pub first_crossing: Vec<(f64, Option<u64>)>,
}

impl DivergenceReport {
    fn new(reference: &NumericPolicy, variant: &NumericPolicy) -> Self {
        Self {
            reference: reference.label(),
            variant: variant.label(),
            max_abs: Vec::new(),
            rms: Vec::new(),
            first_crossing: THRESHOLD_LADDER.iter().map(|&t| (t, None)).collect(),
        }
    }

    fn record(&mut self, generation: u64, a: &Grid, b: &Grid) {
        let (mut max, mut ss) = (0.0f64, 0.0f64);
        for (x, y) in a.liveness().iter().zip(b.liveness()) {
            let d = (x - y).abs();
            max = max.max(d);
            ss += d * d;
        }
        self.max_abs.push(max);
        self.rms.push((ss / a.len() as f64).sqrt());
        for (t, first) in &mut self.first_crossing {
            if first.is_none() && max > *t {
                *first = Some(generation);
            }
        }
    }

    pub fn first_crossing_of(&self, threshold: f64) -> Option<u64> {
        self.first_crossing
            .iter()
            .find(|(t, _)| *t == threshold)
            .and_then(|(_, g)| *g)
    }

    /// Whether any generation differed at all.
    pub fn diverged(&self) -> bool {
        self.max_abs.iter().any(|&d| d > 0.0)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("generation,max_abs,rms\n");
        for (g, (m, r)) in self.max_abs.iter().zip(&self.rms).enumerate() {
            s += &format!("{g},{m:e},{r:e}\n");
        }
        s
    }
}

/// Evolves the seed under every policy in lockstep and compares each
/// variant with the first one for `horizon` generations.
pub fn divergence_experiment(
    seed: &Grid,
    rules: &RuleSet,
    variants: &[NumericPolicy],
    horizon: u64,
) -> Result<Vec<DivergenceReport>> {
    if variants.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "a divergence experiment needs at least two variants, got {}",
            variants.len()
        )));
    }
    rules.validate()?;
    let mut evos: Vec<Evolution> = variants
        .iter()
        .map(|p| Evolution::new(seed.clone(), *rules, *p).with_parallel(false))
        .collect();
    let mut reports: Vec<DivergenceReport> = variants[1..]
        .iter()
        .map(|v| DivergenceReport::new(&variants[0], v))
        .collect();
    for generation in 0..=horizon {
        if generation > 0 {
            for_each_mut(&mut evos, |e| {
                e.step();
            });
        }
        let (reference, rest) = evos.split_first().expect("at least two variants");
        for (report, evo) in reports.iter_mut().zip(rest) {
            report.record(generation, reference.grid(), evo.grid());
        }
    }
    Ok(reports)
}

/// First generation whose quarter-turn deviation exceeds `threshold`.
pub fn first_symmetry_break(
    seed: &Grid,
    rules: &RuleSet,
    policy: &NumericPolicy,
    threshold: f64,
    horizon: u64,
) -> Result<Option<u64>> {
    let mut evo = Evolution::new(seed.clone(), *rules, *policy);
    let deviation = symmetry_deviation(evo.grid(), Symmetry::Rot90)?;
    if deviation != 0.0 {
        return Err(Error::SeedNotSymmetric { deviation });
    }
    for _ in 0..horizon {
        evo.step();
        if symmetry_deviation(evo.grid(), Symmetry::Rot90)? > threshold {
            return Ok(Some(evo.generation()));
        }
    }
    Ok(None)
}

/// Quarter-turn deviation of every generation up to `horizon`.
pub fn symmetry_trace(
    seed: &Grid,
    rules: &RuleSet,
    policy: &NumericPolicy,
    horizon: u64,
) -> Result<Vec<f64>> {
    let mut evo = Evolution::new(seed.clone(), *rules, *policy);
    let mut out = vec![symmetry_deviation(evo.grid(), Symmetry::Rot90)?];
    for _ in 0..horizon {
        evo.step();
        out.push(symmetry_deviation(evo.grid(), Symmetry::Rot90)?);
    }
    Ok(out)
}
