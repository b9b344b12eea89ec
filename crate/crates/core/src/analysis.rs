//! Liveness statistics, equilibrium detection and run classification.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, VecDeque};
use std::hash::Hasher;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::catalog::{Inventory, SpeciesIndex};
use crate::engine::Evolution;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::numeric::{NumericPolicy, Precision};
use crate::rules::RuleSet;

/// Equilibrium mean liveness of a liveness cloud.
pub const CLOUD_MEAN: f64 = 0.3480;
/// Standard deviation of the spatial mean of a 100x100 cloud.
pub const CLOUD_SIGMA: f64 = 0.0071;
/// Cell count the reference standard deviation refers to.
pub const CLOUD_REFERENCE_CELLS: f64 = 10_000.0;

/// Expected spread of the spatial mean of a cloud covering `cells` cells.
pub fn cloud_sigma_for(cells: usize) -> f64 {
    CLOUD_SIGMA * (CLOUD_REFERENCE_CELLS / cells as f64).sqrt()
}

/// Spatial mean of `a`, summed in row-major order.
pub fn mean_liveness(grid: &Grid) -> f64 {
    grid.liveness().iter().fold(0.0, |s, &a| s + a) / grid.len() as f64
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Least-squares slope of `ys` against their index.
pub fn slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    if ys.len() < 2 {
        return 0.0;
    }
    let xm = (n - 1.0) / 2.0;
    let ym = mean(ys);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - xm;
        sxy += dx * (y - ym);
        sxx += dx * dx;
    }
    sxy / sxx
}

/// First index `g` where the series over `[g, g + window)` has
/// `|slope| <= slope_tol`.
pub fn detect_equilibrium(series: &[f64], window: usize, slope_tol: f64) -> Result<Option<usize>> {
    if window < 10 {
        return Err(Error::OutOfRange {
            field: "window".into(),
            value: window as f64,
        });
    }
    if series.len() < window {
        return Ok(None);
    }
    Ok((0..=series.len() - window).find(|&g| {
        let w = &series[g..g + window];
        slope(w).abs() <= slope_tol && sample_std(w).is_finite()
    }))
}

/// Mean, unbiased standard deviation and distance to the fitted normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub mu: f64,
    pub sigma: f64,
    /// Largest gap between the empirical CDF and the fitted normal CDF.
    pub max_cdf_deviation: f64,
}

pub const MIN_FIT_SAMPLES: usize = 30;

pub fn gaussian_fit(samples: &[f64]) -> Result<GaussianFit> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_FIT_SAMPLES,
            got: samples.len(),
        });
    }
    let mu = mean(samples);
    let sigma = sample_std(samples);
    let max_cdf_deviation = match Normal::new(mu, sigma) {
        Ok(normal) if sigma > 0.0 => {
            let mut sorted = samples.to_vec();
            sorted.sort_by(f64::total_cmp);
            let n = sorted.len() as f64;
            sorted
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let f = normal.cdf(x);
                    (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
                })
                .fold(0.0, f64::max)
        }
        _ => 0.0,
    };
    Ok(GaussianFit {
        mu,
        sigma,
        max_cdf_deviation,
    })
}

/// Equal-width histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub bin_width: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// `bins` bins spanning the sample range.
    pub fn of(samples: &[f64], bins: usize) -> Histogram {
        let bins = bins.max(1);
        let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if samples.is_empty() {
            return Histogram {
                lo: 0.0,
                bin_width: 0.0,
                counts: vec![0; bins],
            };
        }
        let bin_width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let mut counts = vec![0; bins];
        for &x in samples {
            let k = (((x - lo) / bin_width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Histogram {
            lo,
            bin_width,
            counts,
        }
    }

    pub fn center(&self, bin: usize) -> f64 {
        self.lo + (bin as f64 + 0.5) * self.bin_width
    }

    /// No interior dip deeper than counting noise: for every bin, the
    /// smaller of the maxima on either side exceeds it by at most
    /// `2·√max + 1`.
    pub fn is_unimodal(&self) -> bool {
        let c: Vec<f64> = self.counts.iter().map(|&x| x as f64).collect();
        (1..c.len().saturating_sub(1)).all(|i| {
            let left = c[..i].iter().copied().fold(0.0, f64::max);
            let right = c[i + 1..].iter().copied().fold(0.0, f64::max);
            let rim = left.min(right);
            rim - c[i] <= 2.0 * rim.sqrt() + 1.0
        })
    }
}

/// Statistics of the per-generation spatial mean over an equilibrium window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumStats {
    pub mean_liveness: f64,
    pub std_liveness: f64,
    pub n_generations: usize,
    /// Standard error of the windowed mean from non-overlapping batch means.
    pub standard_error: f64,
    pub max_cdf_deviation: f64,
    pub unimodal: bool,
    pub histogram: Histogram,
}

impl EquilibriumStats {
    pub fn from_series(window: &[f64]) -> Result<Self> {
        let fit = gaussian_fit(window)?;
        let histogram = Histogram::of(window, histogram_bins(window.len()));
        Ok(Self {
            mean_liveness: fit.mu,
            std_liveness: fit.sigma,
            n_generations: window.len(),
            standard_error: batch_standard_error(window),
            max_cdf_deviation: fit.max_cdf_deviation,
            unimodal: histogram.is_unimodal(),
            histogram,
        })
    }
}

fn histogram_bins(n: usize) -> usize {
    // Sturges, bounded.
    ((n as f64).log2().ceil() as usize + 1).clamp(5, 40)
}

fn batch_standard_error(xs: &[f64]) -> f64 {
    let batches = 20;
    let size = xs.len() / batches;
    if size == 0 {
        return sample_std(xs) / (xs.len().max(1) as f64).sqrt();
    }
    let means: Vec<f64> = xs.chunks_exact(size).take(batches).map(mean).collect();
    sample_std(&means) / (means.len() as f64).sqrt()
}

/// A long run and the statistics over its final window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRun {
    /// Spatial mean of generations `0..=generations`.
    pub series: Vec<f64>,
    pub window: usize,
    pub equilibrium_generation: Option<usize>,
    pub stats: EquilibriumStats,
}

pub const EQUILIBRIUM_SLOPE_TOL: f64 = 1e-6;

/// Evolves `initial` for `generations` and fits the last `window` spatial means.
pub fn run_statistics(
    initial: &Grid,
    rules: &RuleSet,
    policy: &NumericPolicy,
    generations: usize,
    window: usize,
) -> Result<StatsRun> {
    if window > generations + 1 {
        return Err(Error::InvalidConfig(format!(
            "statistics window {window} exceeds run length {generations}"
        )));
    }
    let mut evo = Evolution::new(initial.clone(), *rules, *policy);
    let mut series = Vec::with_capacity(generations + 1);
    series.push(mean_liveness(evo.grid()));
    for _ in 0..generations {
        evo.step();
        series.push(mean_liveness(evo.grid()));
    }
    let stats = EquilibriumStats::from_series(&series[series.len() - window..])?;
    let equilibrium_generation = detect_equilibrium(&series, window.max(10), EQUILIBRIUM_SLOPE_TOL)?;
    Ok(StatsRun {
        series,
        window,
        equilibrium_generation,
        stats,
    })
}

/// Equilibrium mean liveness as a function of the mixing coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingScanPoint {
    pub g: f64,
    pub mean_liveness: f64,
    pub std_liveness: f64,
}

/// Runs [`run_statistics`] for each mixing coefficient.
pub fn mixing_scan(
    initial: &Grid,
    gs: &[f64],
    policy: &NumericPolicy,
    generations: usize,
    window: usize,
) -> Result<Vec<MixingScanPoint>> {
    gs.iter()
        .map(|&g| {
            let rules = RuleSet::with_mixing(g);
            rules.validate()?;
            let run = run_statistics(initial, &rules, policy, generations, window)?;
            Ok(MixingScanPoint {
                g,
                mean_liveness: run.stats.mean_liveness,
                std_liveness: run.stats.std_liveness,
            })
        })
        .collect()
}

/// Hash of the amplitudes rounded to 1e-6.
pub fn quantized_digest(grid: &Grid) -> u64 {
    let mut h = DefaultHasher::new();
    h.write_usize(grid.width());
    h.write_usize(grid.height());
    for &a in grid.liveness() {
        h.write_i64((a * 1e6).round() as i64);
    }
    h.finish()
}

/// Smallest period `2 <= p <= cap` that held for the last `3p` generations.
/// A history whose last three digests repeat with period one yields `None`.
pub fn detect_period(history: &[u64], cap: usize) -> Option<usize> {
    let n = history.len();
    let holds = |p: usize| n >= 4 * p && (0..3 * p).all(|i| history[n - 1 - i] == history[n - 1 - i - p]);
    if holds(1) {
        return None;
    }
    (2..=cap).find(|&p| holds(p))
}

/// A catalog structure seen at one place for several generations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transient {
    pub species: String,
    pub center: (usize, usize),
    pub first_generation: u64,
    pub generations: u64,
}

/// Summary of a liveness cloud at detection time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudStats {
    pub support_fraction: f64,
    pub stats: EquilibriumStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag")]
pub enum Outcome {
    Dead,
    /// The seed itself is a fixed point.
    StillLife { inventory: Inventory },
    Oscillator { period: usize, inventory: Inventory },
    LivenessCloud { cloud: CloudStats },
    /// Settled to a fixed point different from the seed. A fixed point is
    /// either a per-cell change within `still_tol` or an unchanged quantized
    /// digest, held for `confirm_window` generations.
    Lifeforms { inventory: Inventory },
    TransientThen {
        transients: Vec<Transient>,
        #[serde(rename = "final")]
        outcome: Box<Outcome>,
    },
    Unresolved { reason: String },
}

impl Outcome {
    /// The outcome with any transient wrapper removed.
    pub fn terminal(&self) -> &Outcome {
        match self {
            Outcome::TransientThen { outcome, .. } => outcome.terminal(),
            o => o,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Outcome::Dead => "Dead",
            Outcome::StillLife { .. } => "StillLife",
            Outcome::Oscillator { .. } => "Oscillator",
            Outcome::LivenessCloud { .. } => "LivenessCloud",
            Outcome::Lifeforms { .. } => "Lifeforms",
            Outcome::TransientThen { .. } => "TransientThen",
            Outcome::Unresolved { .. } => "Unresolved",
        }
    }

    pub fn period(&self) -> Option<usize> {
        match self.terminal() {
            Outcome::Oscillator { period, .. } => Some(*period),
            _ => None,
        }
    }

    pub fn inventory(&self) -> Option<&Inventory> {
        match self.terminal() {
            Outcome::StillLife { inventory }
            | Outcome::Oscillator { inventory, .. }
            | Outcome::Lifeforms { inventory } => Some(inventory),
            _ => None,
        }
    }

    pub fn transients(&self) -> &[Transient] {
        match self {
            Outcome::TransientThen { transients, .. } => transients,
            _ => &[],
        }
    }
}

/// Thresholds and budgets for [`classify_run`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifyLimits {
    pub max_generations: u64,
    pub history_period_cap: usize,
    pub dead_epsilon: f64,
    pub still_tol: f64,
    pub confirm_window: u64,
    pub live_epsilon: f64,
    pub cloud_fraction: f64,
    pub cloud_window: usize,
    /// Minimum run length for a structure to count as a transient.
    pub transient_generations: u64,
    /// Transients are only tracked while at most this many cells are live.
    pub transient_scan_cells: usize,
}

impl Default for ClassifyLimits {
    fn default() -> Self {
        Self::for_precision(Precision::Binary64)
    }
}

impl ClassifyLimits {
    pub fn for_precision(precision: Precision) -> Self {
        Self {
            max_generations: 2000,
            history_period_cap: 64,
            dead_epsilon: 1e-6,
            still_tol: match precision {
                Precision::Binary32 => 1e-6,
                Precision::Binary64 => 1e-12,
            },
            confirm_window: 32,
            live_epsilon: 1e-6,
            cloud_fraction: 0.30,
            cloud_window: 100,
            transient_generations: 5,
            transient_scan_cells: 400,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, value: f64| {
            Err(Error::OutOfRange {
                field: format!("limits.{field}"),
                value,
            })
        };
        if self.max_generations < 1 {
            return bad("max_generations", 0.0);
        }
        if self.history_period_cap < 2 {
            return bad("history_period_cap", self.history_period_cap as f64);
        }
        if self.confirm_window < 1 {
            return bad("confirm_window", 0.0);
        }
        if !(self.cloud_fraction > 0.0 && self.cloud_fraction <= 1.0) {
            return bad("cloud_fraction", self.cloud_fraction);
        }
        if self.cloud_window < MIN_FIT_SAMPLES {
            return bad("cloud_window", self.cloud_window as f64);
        }
        for (name, v) in [
            ("dead_epsilon", self.dead_epsilon),
            ("still_tol", self.still_tol),
            ("live_epsilon", self.live_epsilon),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(name, v);
            }
        }
        Ok(())
    }
}

/// An outcome and the generation at which it was decided.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub outcome: Outcome,
    pub generations: u64,
}

/// Evolves `initial` until one outcome is established.
pub fn classify_run(
    initial: &Grid,
    rules: &RuleSet,
    policy: &NumericPolicy,
    limits: &ClassifyLimits,
) -> Result<Classification> {
    classify_run_with(initial, rules, policy, limits, |_| {})
}

/// [`classify_run`] calling `observe` on every generation, the seed included.
pub fn classify_run_with(
    initial: &Grid,
    rules: &RuleSet,
    policy: &NumericPolicy,
    limits: &ClassifyLimits,
    mut observe: impl FnMut(&Grid),
) -> Result<Classification> {
    limits.validate()?;
    rules.validate()?;
    let index = SpeciesIndex::default();
    let mut evo = Evolution::new(initial.clone(), *rules, *policy).with_parallel(false);
    let seed = evo.grid().clone();
    let cells = seed.len();
    let mut tracker = TransientTracker::new(limits.transient_generations);
    let history_len = 4 * limits.history_period_cap + 1;
    let mut history: VecDeque<u64> = VecDeque::with_capacity(history_len + 1);
    let mut cloud: VecDeque<f64> = VecDeque::with_capacity(limits.cloud_window + 1);
    let mut still_run = 0u64;

    observe(evo.grid());
    if evo.grid().max_liveness() <= limits.dead_epsilon {
        return Ok(Classification {
            outcome: Outcome::Dead,
            generations: 0,
        });
    }
    history.push_back(quantized_digest(evo.grid()));
    tracker.scan(&index, evo.grid());

    let finish = |outcome: Outcome, tracker: &TransientTracker, generation: u64| {
        let outcome = match outcome {
            Outcome::Dead | Outcome::LivenessCloud { .. } => {
                let transients = tracker.finished(generation);
                if transients.is_empty() {
                    outcome
                } else {
                    Outcome::TransientThen {
                        transients,
                        outcome: Box::new(outcome),
                    }
                }
            }
            o => o,
        };
        Classification {
            outcome,
            generations: generation,
        }
    };

    for _ in 0..limits.max_generations {
        let report = evo.step();
        let grid = evo.grid();
        let generation = grid.generation();
        observe(grid);

        if report.max_liveness <= limits.dead_epsilon {
            return Ok(finish(Outcome::Dead, &tracker, generation));
        }

        let digest = quantized_digest(grid);
        let unchanged = report.max_delta <= limits.still_tol || history.back() == Some(&digest);
        still_run = if unchanged { still_run + 1 } else { 0 };
        if still_run >= limits.confirm_window {
            let inventory = index.inventory(grid);
            let outcome = if grid.max_abs_diff(&seed) <= limits.still_tol {
                Outcome::StillLife { inventory }
            } else {
                Outcome::Lifeforms { inventory }
            };
            return Ok(finish(outcome, &tracker, generation));
        }

        history.push_back(digest);
        if history.len() > history_len {
            history.pop_front();
        }
        let digests = history.make_contiguous();
        if let Some(period) = detect_period(digests, limits.history_period_cap) {
            let outcome = Outcome::Oscillator {
                period,
                inventory: index.inventory(grid),
            };
            return Ok(finish(outcome, &tracker, generation));
        }

        let support = grid.count_above(limits.live_epsilon);
        if support as f64 > limits.cloud_fraction * cells as f64 {
            cloud.push_back(mean_liveness(grid));
            if cloud.len() > limits.cloud_window {
                cloud.pop_front();
            }
            if cloud.len() == limits.cloud_window {
                let window = cloud.make_contiguous();
                let band = 3.0 * cloud_sigma_for(cells);
                let m = mean(window);
                if (m - CLOUD_MEAN).abs() <= band && sample_std(window) <= band {
                    let outcome = Outcome::LivenessCloud {
                        cloud: CloudStats {
                            support_fraction: support as f64 / cells as f64,
                            stats: EquilibriumStats::from_series(window)?,
                        },
                    };
                    return Ok(finish(outcome, &tracker, generation));
                }
            }
        } else {
            cloud.clear();
        }

        if support <= limits.transient_scan_cells {
            tracker.scan(&index, grid);
        }
    }
    let generation = evo.generation();
    Ok(finish(
        Outcome::Unresolved {
            reason: format!("no outcome within {} generations", limits.max_generations),
        },
        &tracker,
        generation,
    ))
}

/// Follows catalog structures that stay at one place.
struct TransientTracker {
    min_generations: u64,
    /// (species, center) -> (first seen, last seen)
    open: BTreeMap<(String, (usize, usize)), (u64, u64)>,
    closed: Vec<Transient>,
}

impl TransientTracker {
    fn new(min_generations: u64) -> Self {
        Self {
            min_generations,
            open: BTreeMap::new(),
            closed: Vec::new(),
        }
    }

    fn scan(&mut self, index: &SpeciesIndex, grid: &Grid) {
        let generation = grid.generation();
        for found in index.locate(grid) {
            let entry = self
                .open
                .entry((found.species, found.center))
                .or_insert((generation, generation));
            entry.1 = generation;
        }
        let min = self.min_generations;
        let mut gone = Vec::new();
        self.open.retain(|(species, center), &mut (first, last)| {
            if last == generation {
                return true;
            }
            if last - first + 1 >= min {
                gone.push(Transient {
                    species: species.clone(),
                    center: *center,
                    first_generation: first,
                    generations: last - first + 1,
                });
            }
            false
        });
        self.closed.extend(gone);
    }

    /// Structures that lasted long enough and were gone before `generation`.
    fn finished(&self, generation: u64) -> Vec<Transient> {
        let mut out = self.closed.clone();
        for ((species, center), &(first, last)) in &self.open {
            if last < generation && last - first + 1 >= self.min_generations {
                out.push(Transient {
                    species: species.clone(),
                    center: *center,
                    first_generation: first,
                    generations: last - first + 1,
                });
            }
        }
        out.sort_by(|a, b| (a.first_generation, &a.species, a.center).cmp(&(b.first_generation, &b.species, b.center)));
        out
    }
}
