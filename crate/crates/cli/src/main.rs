//! `qgol` command-line interface.
//!
//! Settings are layered: built-in defaults, then `--config FILE`, then
//! explicit flags. Exit status is 0 on success, 1 for invalid input and 2
//! for internal errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qgol::catalog::{QutubSpec, Sampler, SearchConfig};
use qgol::experiment::{
    execute, load_command, replay, ChaosConfig, ClassifyConfig, Command, RunConfig, Seeding, Stamp,
    StabilityProbe, StatsConfig, SweepConfig, SearchCommandConfig, Universe, SCHEMA_VERSION,
};
use qgol::io::SnapshotFormat;
use qgol::{Axis, ClassifyLimits, Error, NumericPolicy, Precision, Result, RuleSet, SumOrder, SweepSpec};

#[derive(Parser)]
#[command(name = "qgol", version, about = "Semi-quantum Game of Life experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evolve a grid, recording mean liveness and snapshots.
    Run(RunArgs),
    /// Evolve a seed until its outcome is known.
    Classify(ClassifyArgs),
    /// Classify a lattice of two-fold qutub seeds.
    Sweep(SweepArgs),
    /// Search small boxes for still lifes.
    Search(SearchArgs),
    /// Compare trajectories across summation orders and precisions.
    Chaos(ChaosArgs),
    /// Equilibrium statistics of random seeds.
    Stats(StatsArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct Common {
    /// JSON config file for this command.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// binary32 or binary64.
    #[arg(long)]
    precision: Option<String>,
    /// canonical, reversed, rot1, rot2, rot3 or tree.
    #[arg(long = "sum-order")]
    sum_order: Option<String>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Mixing coefficient of the update rule.
    #[arg(long)]
    g: Option<f64>,
    /// Worker threads (0 uses every core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct SeedArgs {
    /// Square grid side.
    #[arg(long)]
    grid: Option<usize>,
    /// Qutub corners: one value for all four, or a1,a2,a3,a4.
    #[arg(long, conflicts_with_all = ["pattern", "fraction"])]
    qutub: Option<String>,
    /// Built-in pattern stamped at the center.
    #[arg(long, conflicts_with = "fraction")]
    pattern: Option<String>,
    /// Random seeding density.
    #[arg(long)]
    fraction: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    seed: SeedArgs,
    #[arg(long)]
    generations: Option<u64>,
    /// Generation to snapshot (repeatable).
    #[arg(long = "snapshot")]
    snapshots: Vec<u64>,
    /// Trailing window for stats.json.
    #[arg(long)]
    stats_window: Option<usize>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    seed: SeedArgs,
    #[arg(long = "snapshot")]
    snapshots: Vec<u64>,
    #[arg(long)]
    max_generations: Option<u64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// x = a1 = a4 as start:end:step.
    #[arg(long)]
    x: Option<String>,
    /// y = a2 = a3 as start:end:step.
    #[arg(long)]
    y: Option<String>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    max_generations: Option<u64>,
    #[arg(long)]
    image_scale: Option<u32>,
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    /// Scan every assignment of these comma-separated levels.
    #[arg(long, conflicts_with = "random")]
    levels: Option<String>,
    /// Draw random candidates instead of scanning.
    #[arg(long)]
    random: bool,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    persistence: Option<u64>,
    /// Also probe qutub stability with this many random corner sets.
    #[arg(long)]
    probe: Option<usize>,
}

#[derive(Args)]
struct ChaosArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    grid: Option<usize>,
    /// Four-fold qutub seed amplitude.
    #[arg(long = "seed-qutub")]
    seed_qutub: Option<f64>,
    /// Comma-separated summation orders; combined with every --precision.
    #[arg(long)]
    variants: Option<String>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    grid: Option<usize>,
    /// Comma-separated seeding densities.
    #[arg(long)]
    fractions: Option<String>,
    /// Comma-separated RNG seeds.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    /// Comma-separated mixing coefficients to scan.
    #[arg(long)]
    mixing_scan: Option<String>,
}

#[derive(Args)]
struct ReplayArgs {
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

fn list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("`{t}` is not a valid {what}")))
        })
        .collect()
}

fn parse<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::InvalidConfig(format!("`{s}` is not a valid {what}")))
}

impl Common {
    fn load(&self, name: &str) -> Result<Option<Command>> {
        self.config.as_deref().map(|p| load_command(name, p)).transpose()
    }

    fn out_dir(&self, name: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out").join(name))
    }

    fn policy(&self, base: NumericPolicy) -> Result<NumericPolicy> {
        let mut p = base;
        if let Some(s) = &self.precision {
            p.precision = parse(s, "precision")?;
        }
        if let Some(s) = &self.sum_order {
            p.summation_order = parse(s, "summation order")?;
        }
        Ok(p)
    }

    fn rules(&self, base: RuleSet) -> RuleSet {
        match self.g {
            Some(g) => RuleSet { g, ..base },
            None => base,
        }
    }

    fn universe(&self, mut u: Universe, seed: &SeedArgs) -> Result<Universe> {
        u.policy = self.policy(u.policy)?;
        u.rules = self.rules(u.rules);
        if let Some(n) = seed.grid {
            u.width = n;
            u.height = n;
        }
        if let Some(q) = &seed.qutub {
            let v: Vec<f64> = list(q, "amplitude")?;
            let spec = match v.as_slice() {
                [a] => QutubSpec::uniform(*a),
                [a1, a2, a3, a4] => QutubSpec {
                    a1: *a1,
                    a2: *a2,
                    a3: *a3,
                    a4: *a4,
                },
                _ => return Err(Error::InvalidConfig("--qutub takes one or four amplitudes".into())),
            };
            u.seeding = Seeding::Patterns {
                stamps: vec![Stamp::qutub(spec)],
            };
        }
        if let Some(name) = &seed.pattern {
            u.seeding = Seeding::Patterns {
                stamps: vec![Stamp {
                    pattern: Some(name.clone()),
                    ..Stamp::default()
                }],
            };
        }
        if let Some(f) = seed.fraction {
            let rng_seed = match u.seeding {
                Seeding::Random { rng_seed, .. } => rng_seed,
                _ => 1,
            };
            u.seeding = Seeding::Random { fraction: f, rng_seed };
        }
        if let (Some(s), Seeding::Random { rng_seed, .. }) = (self.seed, &mut u.seeding) {
            *rng_seed = s;
        }
        Ok(u)
    }
}

fn default_universe(precision: Precision, seeding: Seeding) -> Universe {
    Universe {
        width: 100,
        height: 100,
        rules: RuleSet::default(),
        policy: NumericPolicy::new(precision, SumOrder::Canonical),
        seeding,
    }
}

fn half_qutub() -> Seeding {
    Seeding::Patterns {
        stamps: vec![Stamp::qutub(QutubSpec::uniform(0.5))],
    }
}

fn build_run(a: &RunArgs) -> Result<Command> {
    let mut c = match a.common.load("run")? {
        Some(Command::Run(c)) => c,
        Some(_) => unreachable!(),
        None => RunConfig {
            schema_version: SCHEMA_VERSION,
            universe: default_universe(
                Precision::Binary32,
                Seeding::Random {
                    fraction: 0.2,
                    rng_seed: 1,
                },
            ),
            generations: 1000,
            snapshots: Vec::new(),
            snapshot_formats: vec![SnapshotFormat::Text, SnapshotFormat::Pgm],
            stats_window: None,
        },
    };
    c.universe = a.common.universe(c.universe, &a.seed)?;
    if let Some(n) = a.generations {
        c.generations = n;
    }
    if !a.snapshots.is_empty() {
        c.snapshots = a.snapshots.clone();
    }
    if a.stats_window.is_some() {
        c.stats_window = a.stats_window;
    }
    Ok(Command::Run(c))
}

fn build_classify(a: &ClassifyArgs) -> Result<Command> {
    let mut c = match a.common.load("classify")? {
        Some(Command::Classify(c)) => c,
        Some(_) => unreachable!(),
        None => ClassifyConfig {
            schema_version: SCHEMA_VERSION,
            universe: default_universe(Precision::Binary64, half_qutub()),
            limits: None,
            snapshots: Vec::new(),
            snapshot_formats: vec![SnapshotFormat::Text, SnapshotFormat::Pgm],
        },
    };
    let precision_before = c.universe.policy.precision;
    c.universe = a.common.universe(c.universe, &a.seed)?;
    if c.universe.policy.precision != precision_before {
        if let Some(l) = &mut c.limits {
            l.still_tol = ClassifyLimits::for_precision(c.universe.policy.precision).still_tol;
        }
    }
    if let Some(n) = a.max_generations {
        let mut limits = c.limits();
        limits.max_generations = n;
        c.limits = Some(limits);
    }
    if !a.snapshots.is_empty() {
        c.snapshots = a.snapshots.clone();
    }
    Ok(Command::Classify(c))
}

fn build_sweep(a: &SweepArgs) -> Result<Command> {
    let mut c = match a.common.load("sweep")? {
        Some(Command::Sweep(c)) => c,
        Some(_) => unreachable!(),
        None => SweepConfig {
            schema_version: SCHEMA_VERSION,
            sweep: SweepSpec::new(
                "0.5:1.0:0.01".parse()?,
                "0.5:1.0:0.01".parse()?,
                NumericPolicy::binary64(),
            ),
            image_scale: 8,
        },
    };
    let s = &mut c.sweep;
    let before = s.policy.precision;
    s.policy = a.common.policy(s.policy)?;
    if s.policy.precision != before {
        s.limits.still_tol = ClassifyLimits::for_precision(s.policy.precision).still_tol;
    }
    s.rules = a.common.rules(s.rules);
    if let Some(x) = &a.x {
        s.x = x.parse::<Axis>()?;
    }
    if let Some(y) = &a.y {
        s.y = y.parse::<Axis>()?;
    }
    if let Some(n) = a.grid {
        s.grid = n;
    }
    if let Some(b) = a.budget {
        s.budget = b;
    }
    if let Some(n) = a.max_generations {
        s.limits.max_generations = n;
    }
    if let Some(k) = a.image_scale {
        c.image_scale = k;
    }
    Ok(Command::Sweep(c))
}

fn build_search(a: &SearchArgs) -> Result<Command> {
    let mut c = match a.common.load("search")? {
        Some(Command::Search(c)) => c,
        Some(_) => unreachable!(),
        None => SearchCommandConfig {
            schema_version: SCHEMA_VERSION,
            search: SearchConfig {
                rows: 3,
                cols: 3,
                sampler: Sampler::Scan {
                    levels: vec![0.0, 0.5, 1.0],
                },
                budget: 100_000,
                persistence: 16,
                tolerance: 1e-12,
                rules: RuleSet::default(),
                policy: NumericPolicy::binary64(),
            },
            stability_probe: None,
        },
    };
    let s = &mut c.search;
    s.policy = a.common.policy(s.policy)?;
    s.rules = a.common.rules(s.rules);
    if let Some(r) = a.rows {
        s.rows = r;
    }
    if let Some(k) = a.cols {
        s.cols = k;
    }
    if let Some(l) = &a.levels {
        s.sampler = Sampler::Scan {
            levels: list(l, "level")?,
        };
    }
    if a.random {
        s.sampler = Sampler::Random {
            seed: a.common.seed.unwrap_or(1),
            p_dead: 0.4,
            p_live: 0.3,
        };
    } else if let (Some(seed), Sampler::Random { seed: s0, .. }) = (a.common.seed, &mut s.sampler) {
        *s0 = seed;
    }
    if let Some(b) = a.budget {
        s.budget = b;
    }
    if let Some(p) = a.persistence {
        s.persistence = p;
    }
    if let Some(n) = a.probe {
        c.stability_probe = Some(StabilityProbe {
            samples: n,
            rng_seed: a.common.seed.unwrap_or(1),
            persistence: 16,
        });
    }
    Ok(Command::Search(c))
}

fn build_chaos(a: &ChaosArgs) -> Result<Command> {
    let mut c = match a.common.load("chaos")? {
        Some(Command::Chaos(c)) => c,
        Some(_) => unreachable!(),
        None => ChaosConfig {
            schema_version: SCHEMA_VERSION,
            universe: default_universe(
                Precision::Binary32,
                Seeding::Patterns {
                    stamps: vec![Stamp::qutub(QutubSpec::uniform(0.58))],
                },
            ),
            variants: vec![
                NumericPolicy::binary32(),
                NumericPolicy::new(Precision::Binary32, SumOrder::Reversed),
            ],
            horizon: 500,
            threshold: 1e-3,
        },
    };
    c.universe.rules = a.common.rules(c.universe.rules);
    if let Some(n) = a.grid {
        c.universe.width = n;
        c.universe.height = n;
    }
    if let Some(q) = a.seed_qutub {
        c.universe.seeding = Seeding::Patterns {
            stamps: vec![Stamp::qutub(QutubSpec::uniform(q))],
        };
    }
    if a.variants.is_some() || a.common.precision.is_some() {
        let orders: Vec<SumOrder> = match &a.variants {
            Some(v) => list(v, "summation order")?,
            None => vec![SumOrder::Canonical, SumOrder::Reversed],
        };
        let precisions: Vec<Precision> = match &a.common.precision {
            Some(p) => list(p, "precision")?,
            None => vec![c.universe.policy.precision],
        };
        c.variants = precisions
            .iter()
            .flat_map(|&p| orders.iter().map(move |&o| NumericPolicy::new(p, o)))
            .collect();
        // The seed is built in the finest requested precision.
        c.universe.policy.precision = if precisions.contains(&Precision::Binary64) {
            Precision::Binary64
        } else {
            Precision::Binary32
        };
    }
    if let Some(h) = a.horizon {
        c.horizon = h;
    }
    if let Some(t) = a.threshold {
        c.threshold = t;
    }
    Ok(Command::Chaos(c))
}

fn build_stats(a: &StatsArgs) -> Result<Command> {
    let mut c = match a.common.load("stats")? {
        Some(Command::Stats(c)) => c,
        Some(_) => unreachable!(),
        None => StatsConfig {
            schema_version: SCHEMA_VERSION,
            width: 100,
            height: 100,
            rules: RuleSet::default(),
            policy: NumericPolicy::binary32(),
            fractions: vec![0.2, 0.8],
            rng_seeds: vec![1, 2, 3],
            generations: 10_000,
            window: 5_000,
            mixing_scan: Vec::new(),
        },
    };
    c.policy = a.common.policy(c.policy)?;
    c.rules = a.common.rules(c.rules);
    if let Some(n) = a.grid {
        c.width = n;
        c.height = n;
    }
    if let Some(f) = &a.fractions {
        c.fractions = list(f, "fraction")?;
    }
    if let Some(s) = &a.seeds {
        c.rng_seeds = list(s, "seed")?;
    } else if let Some(s) = a.common.seed {
        c.rng_seeds = vec![s];
    }
    if let Some(n) = a.generations {
        c.generations = n;
    }
    if let Some(w) = a.window {
        c.window = w;
    }
    if let Some(g) = &a.mixing_scan {
        c.mixing_scan = list(g, "mixing coefficient")?;
    }
    Ok(Command::Stats(c))
}

fn run(cli: Cli) -> Result<String> {
    let (command, common) = match &cli.command {
        Cmd::Run(a) => (build_run(a)?, &a.common),
        Cmd::Classify(a) => (build_classify(a)?, &a.common),
        Cmd::Sweep(a) => (build_sweep(a)?, &a.common),
        Cmd::Search(a) => (build_search(a)?, &a.common),
        Cmd::Chaos(a) => (build_chaos(a)?, &a.common),
        Cmd::Stats(a) => (build_stats(a)?, &a.common),
        Cmd::Replay(a) => {
            let report = qgol::with_workers(a.workers, || replay(&a.manifest, &a.out))??;
            return Ok(format!("{} -> {}", report.summary, report.out_dir.display()));
        }
    };
    let out = common.out_dir(command.name());
    let report = qgol::with_workers(common.workers, || execute(&command, &out))??;
    Ok(format!("{} -> {}", report.summary, report.out_dir.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_invalid_input() { 1 } else { 2 })
        }
    }
}
