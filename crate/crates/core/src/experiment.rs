//! Reproducible experiments: configs, manifests and command execution.
//!
//! Every command writes its outputs plus `manifest.json` into an output
//! directory. The manifest embeds the complete command configuration, so
//! [`replay`] can regenerate every file byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{
    classify_run_with, mixing_scan, run_statistics, ClassifyLimits, Classification, EquilibriumStats,
    MixingScanPoint,
};
use crate::catalog::{
    builtin_pattern, make_qutub, probe_qutub_stability, search_still_lifes, stamp, Pattern, PatternCell,
    QutubSpec, SearchConfig, StabilityReport,
};
use crate::chaos::{divergence_experiment, first_symmetry_break, symmetry_deviation};
use crate::engine::Evolution;
use crate::error::{Error, Result};
use crate::grid::{Grid, Symmetry};
use crate::io::{save_snapshot, series_csv, write_file, SnapshotFormat};
use crate::numeric::NumericPolicy;
use crate::rules::RuleSet;
use crate::seed::{seed_random, RNG_ALGORITHM};
use crate::sweep::{run_sweep, SweepSpec};

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

/// One pattern placed on the grid. Exactly one of `qutub`, `pattern`
/// (a built-in name) or `cells` must be given.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stamp {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qutub: Option<QutubSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<PatternCell>>,
    /// Anchor cell `[row, col]`; the grid center when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<[usize; 2]>,
}

impl Stamp {
    pub fn qutub(spec: QutubSpec) -> Self {
        Self {
            qutub: Some(spec),
            ..Self::default()
        }
    }

    pub fn pattern(&self) -> Result<Pattern> {
        match (&self.qutub, &self.pattern, &self.cells) {
            (Some(q), None, None) => make_qutub(*q),
            (None, Some(name), None) => builtin_pattern(name)
                .ok_or_else(|| Error::InvalidConfig(format!("unknown built-in pattern `{name}`"))),
            (None, None, Some(cells)) => Pattern::new("inline", cells.clone()),
            _ => Err(Error::InvalidConfig(
                "a stamp needs exactly one of `qutub`, `pattern` or `cells`".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Seeding {
    /// `floor(fraction * cells)` random cells with uniform liveness.
    Random { fraction: f64, rng_seed: u64 },
    Patterns { stamps: Vec<Stamp> },
}

/// Grid size, rules, arithmetic and initial condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Universe {
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub rules: RuleSet,
    #[serde(default)]
    pub policy: NumericPolicy,
    pub seeding: Seeding,
}

impl Universe {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidConfig(format!(
                "universe.width and universe.height must be positive, got {}x{}",
                self.width, self.height
            )));
        }
        self.rules.validate()?;
        match &self.seeding {
            Seeding::Random { fraction, .. } => {
                if !(0.0..=1.0).contains(fraction) {
                    return Err(Error::InvalidConfig(format!(
                        "seeding.fraction must lie in [0, 1], got {fraction}"
                    )));
                }
            }
            Seeding::Patterns { stamps } => {
                for s in stamps {
                    s.pattern()?;
                }
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Grid> {
        self.validate()?;
        let precision = self.policy.precision;
        match &self.seeding {
            Seeding::Random { fraction, rng_seed } => {
                seed_random(self.width, self.height, *fraction, *rng_seed, precision)
            }
            Seeding::Patterns { stamps } => {
                let mut grid = Grid::new(self.width, self.height, precision);
                for s in stamps {
                    let at = s.at.map_or(grid.center(), |[r, c]| (r, c));
                    grid = stamp(&grid, &s.pattern()?, at)?;
                }
                Ok(grid)
            }
        }
    }
}

fn check_schema(version: u32) -> Result<()> {
    if version != SCHEMA_VERSION {
        return Err(Error::InvalidConfig(format!(
            "schema_version {version} is not supported (expected {SCHEMA_VERSION})"
        )));
    }
    Ok(())
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

fn default_formats() -> Vec<SnapshotFormat> {
    vec![SnapshotFormat::Text, SnapshotFormat::Pgm]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub universe: Universe,
    pub generations: u64,
    /// Generations at which snapshots are written.
    #[serde(default)]
    pub snapshots: Vec<u64>,
    #[serde(default = "default_formats")]
    pub snapshot_formats: Vec<SnapshotFormat>,
    /// Trailing generations summarized in `stats.json`; skipped if absent.
    #[serde(default)]
    pub stats_window: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub universe: Universe,
    #[serde(default)]
    pub limits: Option<ClassifyLimits>,
    #[serde(default)]
    pub snapshots: Vec<u64>,
    #[serde(default = "default_formats")]
    pub snapshot_formats: Vec<SnapshotFormat>,
}

impl ClassifyConfig {
    pub fn limits(&self) -> ClassifyLimits {
        self.limits
            .unwrap_or_else(|| ClassifyLimits::for_precision(self.universe.policy.precision))
    }
}

fn default_scale() -> u32 {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub sweep: SweepSpec,
    /// Pixels per lattice point in `outcomes.png`.
    #[serde(default = "default_scale")]
    pub image_scale: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityProbe {
    pub samples: usize,
    pub rng_seed: u64,
    pub persistence: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchCommandConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub search: SearchConfig,
    #[serde(default)]
    pub stability_probe: Option<StabilityProbe>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChaosConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    /// Seed grid; `universe.policy` only sets the seed precision.
    pub universe: Universe,
    pub variants: Vec<NumericPolicy>,
    pub horizon: u64,
    /// Quarter-turn deviation counted as a symmetry break.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub rules: RuleSet,
    #[serde(default)]
    pub policy: NumericPolicy,
    pub fractions: Vec<f64>,
    pub rng_seeds: Vec<u64>,
    pub generations: usize,
    pub window: usize,
    /// Mixing coefficients for an equilibrium-mean scan; skipped if empty.
    #[serde(default)]
    pub mixing_scan: Vec<f64>,
}

/// A command and its full configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    Run(RunConfig),
    Classify(ClassifyConfig),
    Sweep(SweepConfig),
    Search(SearchCommandConfig),
    Chaos(ChaosConfig),
    Stats(StatsConfig),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Run(_) => "run",
            Command::Classify(_) => "classify",
            Command::Sweep(_) => "sweep",
            Command::Search(_) => "search",
            Command::Chaos(_) => "chaos",
            Command::Stats(_) => "stats",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Command::Run(c) => {
                check_schema(c.schema_version)?;
                c.universe.validate()?;
                if let Some(w) = c.stats_window {
                    if w as u64 > c.generations + 1 {
                        return Err(Error::InvalidConfig(format!(
                            "stats_window {w} exceeds the {} recorded generations",
                            c.generations + 1
                        )));
                    }
                }
                Ok(())
            }
            Command::Classify(c) => {
                check_schema(c.schema_version)?;
                c.universe.validate()?;
                c.limits().validate()
            }
            Command::Sweep(c) => {
                check_schema(c.schema_version)?;
                c.sweep.validate()
            }
            Command::Search(c) => {
                check_schema(c.schema_version)?;
                c.search.validate()
            }
            Command::Chaos(c) => {
                check_schema(c.schema_version)?;
                c.universe.validate()?;
                if c.variants.len() < 2 {
                    return Err(Error::InvalidConfig("chaos needs at least two variants".into()));
                }
                if !(c.threshold > 0.0) {
                    return Err(Error::InvalidConfig("chaos.threshold must be positive".into()));
                }
                Ok(())
            }
            Command::Stats(c) => {
                check_schema(c.schema_version)?;
                c.rules.validate()?;
                if c.fractions.is_empty() || c.rng_seeds.is_empty() {
                    return Err(Error::InvalidConfig("stats needs fractions and rng_seeds".into()));
                }
                for &f in &c.fractions {
                    if !(0.0..=1.0).contains(&f) {
                        return Err(Error::InvalidConfig(format!("fraction {f} is outside [0, 1]")));
                    }
                }
                if c.window > c.generations + 1 || c.window < crate::analysis::MIN_FIT_SAMPLES {
                    return Err(Error::InvalidConfig(format!(
                        "stats window must be between {} and generations + 1",
                        crate::analysis::MIN_FIT_SAMPLES
                    )));
                }
                if c.width == 0 || c.height == 0 {
                    return Err(Error::InvalidConfig("stats grid must be nonempty".into()));
                }
                Ok(())
            }
        }
    }
}

/// Everything needed to regenerate a command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    pub rng: String,
    pub command: Command,
    pub outputs: Vec<String>,
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub out_dir: PathBuf,
    pub outputs: Vec<String>,
    /// One-line human-readable result.
    pub summary: String,
}

struct Outputs<'a> {
    dir: &'a Path,
    names: Vec<String>,
}

impl Outputs<'_> {
    fn write(&mut self, name: impl Into<String>, bytes: &[u8]) -> Result<()> {
        let name = name.into();
        write_file(&self.dir.join(&name), bytes)?;
        self.names.push(name);
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn snapshot(&mut self, grid: &Grid, formats: &[SnapshotFormat]) -> Result<()> {
        for &f in formats {
            let name = format!("snapshot-{:06}.{}", grid.generation(), f.extension());
            save_snapshot(grid, &self.dir.join(&name), f)?;
            self.names.push(name);
        }
        Ok(())
    }
}

/// Runs a command, writing its outputs and manifest into `out_dir`.
pub fn execute(command: &Command, out_dir: &Path) -> Result<Report> {
    command.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut out = Outputs {
        dir: out_dir,
        names: Vec::new(),
    };
    let summary = match command {
        Command::Run(c) => cmd_run(c, &mut out)?,
        Command::Classify(c) => cmd_classify(c, &mut out)?,
        Command::Sweep(c) => cmd_sweep(c, &mut out)?,
        Command::Search(c) => cmd_search(c, &mut out)?,
        Command::Chaos(c) => cmd_chaos(c, &mut out)?,
        Command::Stats(c) => cmd_stats(c, &mut out)?,
    };
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        tool: concat!("qgol ", env!("CARGO_PKG_VERSION")).into(),
        rng: RNG_ALGORITHM.into(),
        command: command.clone(),
        outputs: out.names.clone(),
    };
    out.json(MANIFEST_FILE, &manifest)?;
    Ok(Report {
        out_dir: out_dir.to_path_buf(),
        outputs: out.names,
        summary,
    })
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
    check_schema(manifest.schema_version)?;
    Ok(manifest)
}

/// Re-executes the command recorded in `manifest_path` into `out_dir`.
pub fn replay(manifest_path: &Path, out_dir: &Path) -> Result<Report> {
    execute(&load_manifest(manifest_path)?.command, out_dir)
}

/// Parses a command config file for `name` (e.g. `run`).
pub fn load_command(name: &str, path: &Path) -> Result<Command> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_command(name, &text).map_err(|e| match e {
        Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", path.display())),
        e => e,
    })
}

pub fn parse_command(name: &str, text: &str) -> Result<Command> {
    let invalid = |e: serde_json::Error| Error::InvalidConfig(e.to_string());
    Ok(match name {
        "run" => Command::Run(serde_json::from_str(text).map_err(invalid)?),
        "classify" => Command::Classify(serde_json::from_str(text).map_err(invalid)?),
        "sweep" => Command::Sweep(serde_json::from_str(text).map_err(invalid)?),
        "search" => Command::Search(serde_json::from_str(text).map_err(invalid)?),
        "chaos" => Command::Chaos(serde_json::from_str(text).map_err(invalid)?),
        "stats" => Command::Stats(serde_json::from_str(text).map_err(invalid)?),
        _ => return Err(Error::InvalidConfig(format!("unknown command `{name}`"))),
    })
}

fn cmd_run(c: &RunConfig, out: &mut Outputs) -> Result<String> {
    let grid = c.universe.build()?;
    let mut evo = Evolution::new(grid, c.universe.rules, c.universe.policy);
    let mut series = Vec::with_capacity(c.generations as usize + 1);
    loop {
        let g = evo.grid();
        series.push(crate::analysis::mean_liveness(g));
        if c.snapshots.contains(&g.generation()) {
            out.snapshot(g, &c.snapshot_formats)?;
        }
        if g.generation() >= c.generations {
            break;
        }
        evo.step();
    }
    out.write("series.csv", series_csv(&series, 0).as_bytes())?;
    out.write("final.txt", crate::io::snapshot_text(evo.grid()).as_bytes())?;
    let mut summary = format!(
        "{} generations, final mean liveness {:.6}",
        c.generations,
        series.last().copied().unwrap_or(0.0)
    );
    if let Some(w) = c.stats_window {
        let stats = EquilibriumStats::from_series(&series[series.len() - w..])?;
        summary = format!(
            "{} generations, mean liveness {:.5} ± {:.5} (sd {:.5}) over the last {w}",
            c.generations, stats.mean_liveness, stats.standard_error, stats.std_liveness
        );
        out.json("stats.json", &stats)?;
        out.write("histogram.csv", histogram_csv(&stats).as_bytes())?;
    }
    Ok(summary)
}

fn histogram_csv(stats: &EquilibriumStats) -> String {
    let h = &stats.histogram;
    let mut s = String::from("bin_center,count\n");
    for (k, n) in h.counts.iter().enumerate() {
        s += &format!("{},{}\n", h.center(k), n);
    }
    s
}

fn cmd_classify(c: &ClassifyConfig, out: &mut Outputs) -> Result<String> {
    let grid = c.universe.build()?;
    let mut snapshots = Vec::new();
    let classification = classify_run_with(
        &grid,
        &c.universe.rules,
        &c.universe.policy,
        &c.limits(),
        |g| {
            if c.snapshots.contains(&g.generation()) {
                snapshots.push(g.clone());
            }
        },
    )?;
    for g in &snapshots {
        out.snapshot(g, &c.snapshot_formats)?;
    }
    out.json("outcome.json", &classification)?;
    Ok(describe(&classification))
}

/// Short text form of a classification.
pub fn describe(c: &Classification) -> String {
    let o = &c.outcome;
    let mut s = o.terminal().tag().to_string();
    if let Some(p) = o.period() {
        s += &format!(" (period {p})");
    }
    if let Some(inv) = o.inventory() {
        s += &format!(": {}", inv.summary());
    }
    if !o.transients().is_empty() {
        s += &format!(" after {} transient lifeform(s)", o.transients().len());
    }
    s + &format!(" at generation {}", c.generations)
}

fn cmd_sweep(c: &SweepConfig, out: &mut Outputs) -> Result<String> {
    let grid = run_sweep(&c.sweep)?;
    out.write("outcomes.csv", grid.to_csv().as_bytes())?;
    out.write("outcomes.png", &grid.render_png(c.image_scale)?)?;
    let tally = grid.tally();
    out.json("tally.json", &tally)?;
    Ok(tally
        .iter()
        .map(|(t, n)| format!("{t} {n}"))
        .collect::<Vec<_>>()
        .join(", "))
}

fn cmd_search(c: &SearchCommandConfig, out: &mut Outputs) -> Result<String> {
    let found = search_still_lifes(&c.search)?;
    out.json("still_lifes.json", &found)?;
    let mut summary = format!("{} still lifes", found.len());
    if let Some(p) = &c.stability_probe {
        let report: StabilityReport =
            probe_qutub_stability(p.samples, p.rng_seed, p.persistence, &c.search.rules, &c.search.policy)?;
        summary += &format!(
            "; qutub stability follows {} ({:.4} vs {:.4} agreement)",
            report.winner, report.adjacent_agreement, report.opposite_agreement
        );
        out.json("stability.json", &report)?;
    }
    Ok(summary)
}

#[derive(Serialize)]
struct ChaosSummary {
    variants: Vec<String>,
    initial_rot90_deviation: f64,
    /// Per variant, the first generation past the threshold.
    first_symmetry_break: BTreeMap<String, Option<u64>>,
    /// Per compared variant, first crossings of the threshold ladder.
    first_crossing: BTreeMap<String, Vec<(f64, Option<u64>)>>,
}

fn cmd_chaos(c: &ChaosConfig, out: &mut Outputs) -> Result<String> {
    let seed = c.universe.build()?;
    let reports = divergence_experiment(&seed, &c.universe.rules, &c.variants, c.horizon)?;
    for (k, r) in reports.iter().enumerate() {
        out.write(format!("divergence-{:02}-{}.csv", k + 1, r.variant), r.to_csv().as_bytes())?;
    }
    let deviation = match symmetry_deviation(&seed, Symmetry::Rot90) {
        Ok(d) => d,
        Err(Error::NonSquareGrid { .. }) => f64::NAN,
        Err(e) => return Err(e),
    };
    let mut breaks = BTreeMap::new();
    if deviation == 0.0 {
        for v in &c.variants {
            let seed_v = seed.with_precision(v.precision);
            breaks.insert(
                v.label(),
                first_symmetry_break(&seed_v, &c.universe.rules, v, c.threshold, c.horizon)?,
            );
        }
    }
    let summary = ChaosSummary {
        variants: c.variants.iter().map(|v| v.label()).collect(),
        initial_rot90_deviation: if deviation.is_nan() { -1.0 } else { deviation },
        first_symmetry_break: breaks.clone(),
        first_crossing: reports
            .iter()
            .map(|r| (r.variant.clone(), r.first_crossing.clone()))
            .collect(),
    };
    out.json("chaos.json", &summary)?;
    let mut text: Vec<String> = reports
        .iter()
        .map(|r| {
            format!(
                "{} vs {}: first > 1e-3 at {}",
                r.variant,
                r.reference,
                r.first_crossing_of(1e-3).map_or("never".into(), |g| g.to_string())
            )
        })
        .collect();
    for (v, b) in &breaks {
        text.push(format!(
            "{v}: symmetry break at {}",
            b.map_or("never".into(), |g| g.to_string())
        ));
    }
    Ok(text.join("; "))
}

#[derive(Serialize)]
struct StatsEntry {
    fraction: f64,
    rng_seed: u64,
    equilibrium_generation: Option<usize>,
    stats: EquilibriumStats,
}

#[derive(Serialize)]
struct StatsSummary {
    runs: Vec<StatsEntry>,
    /// Largest difference between the windowed means of any two runs.
    max_pairwise_mean_difference: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    mixing_scan: Vec<MixingScanPoint>,
}

fn cmd_stats(c: &StatsConfig, out: &mut Outputs) -> Result<String> {
    let mut runs = Vec::new();
    for &fraction in &c.fractions {
        for &rng_seed in &c.rng_seeds {
            let grid = seed_random(c.width, c.height, fraction, rng_seed, c.policy.precision)?;
            let run = run_statistics(&grid, &c.rules, &c.policy, c.generations, c.window)?;
            out.write(
                format!("series-f{fraction}-s{rng_seed}.csv"),
                series_csv(&run.series, 0).as_bytes(),
            )?;
            runs.push(StatsEntry {
                fraction,
                rng_seed,
                equilibrium_generation: run.equilibrium_generation,
                stats: run.stats,
            });
        }
    }
    let means: Vec<f64> = runs.iter().map(|r| r.stats.mean_liveness).collect();
    let spread = means.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - means.iter().copied().fold(f64::INFINITY, f64::min);
    let scan = if c.mixing_scan.is_empty() {
        Vec::new()
    } else {
        let grid = seed_random(c.width, c.height, c.fractions[0], c.rng_seeds[0], c.policy.precision)?;
        mixing_scan(&grid, &c.mixing_scan, &c.policy, c.generations, c.window)?
    };
    let avg = means.iter().sum::<f64>() / means.len() as f64;
    let sd = runs.iter().map(|r| r.stats.std_liveness).sum::<f64>() / runs.len() as f64;
    out.json(
        "stats.json",
        &StatsSummary {
            runs,
            max_pairwise_mean_difference: spread,
            mixing_scan: scan,
        },
    )?;
    Ok(format!(
        "{} runs: mean liveness {avg:.5}, mean sd {sd:.5}, max pairwise difference {spread:.5}",
        means.len()
    ))
}
