//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. A non-flag argument restricts the run to
//! criteria whose id contains it, e.g. `cargo test --test acceptance -- c7`.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use qgol::analysis::{mixing_scan, run_statistics, StatsRun};
use qgol::catalog::{centered, probe_qutub_stability};
use qgol::chaos::{divergence_experiment, first_symmetry_break};
use qgol::experiment::{
    execute, replay, ChaosConfig, ClassifyConfig, Command, RunConfig, Seeding, Stamp, StatsConfig,
    SweepConfig, Universe, MANIFEST_FILE, SCHEMA_VERSION,
};
use qgol::io::{load_snapshot, parse_snapshot_text, save_snapshot, snapshot_text, SnapshotFormat};
use qgol::{
    classical_step, classify_run, make_qutub, run_sweep, seed_random, step, with_workers, Axis, ClassifyLimits,
    Evolution, Grid, NumericPolicy, Precision, QutubSpec, RuleSet, SumOrder, SweepSpec,
};

const SIGMA: f64 = 0.0071;
const SIGMA_BAND: f64 = 0.003;
const MEAN_AGREEMENT: f64 = 0.002;
const KS_LIMIT: f64 = 0.05;
const CONSTANT: f64 = 0.3480;
const CONSTANT_BAND: f64 = 0.005;

type Criterion<'a> = (&'static str, &'static str, Box<dyn Fn() -> Verdict + 'a>);

struct Verdict {
    pass: bool,
    lines: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Self { pass: true, lines: Vec::new() }
    }

    fn check(&mut self, ok: bool, line: impl Into<String>) {
        let line = line.into();
        self.lines.push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
        self.pass &= ok;
    }

    fn note(&mut self, line: impl Into<String>) {
        self.lines.push(format!("     {}", line.into()));
    }
}

/// Conway's rules on a torus, computed by integer neighbor counts.
fn conway(g: &Grid) -> Vec<f64> {
    let (w, h) = (g.width() as isize, g.height() as isize);
    let mut out = Vec::with_capacity(g.len());
    for r in 0..h {
        for c in 0..w {
            let mut n = 0;
            for dr in -1..=1 {
                for dc in -1..=1 {
                    if (dr, dc) != (0, 0) && g.get_wrapped(r + dr, c + dc) == 1.0 {
                        n += 1;
                    }
                }
            }
            let alive = g.get(r as usize, c as usize) == 1.0;
            out.push(if n == 3 || (alive && n == 2) { 1.0 } else { 0.0 });
        }
    }
    out
}

fn c1_classical() -> Verdict {
    let mut v = Verdict::new();
    let rules = RuleSet::default();
    let mut mismatches = 0usize;
    let mut checked = 0usize;
    for k in 0..1000u64 {
        let f = 0.1 * (1 + k % 9) as f64;
        let precision = if k % 2 == 0 { Precision::Binary32 } else { Precision::Binary64 };
        let order = SumOrder::ALL[(k as usize / 2) % SumOrder::ALL.len()];
        let policy = NumericPolicy::new(precision, order);
        let mut g = seed_random(32, 32, f, 1000 + k, precision).unwrap();
        let live: Vec<f64> = g.liveness().iter().map(|&a| if a > 0.0 { 1.0 } else { 0.0 }).collect();
        g = Grid::from_liveness(32, 32, precision, live).unwrap();
        for _ in 0..50 {
            let next = step(&g, &rules, &policy);
            let oracle = conway(&g);
            let lib = classical_step(&g).unwrap();
            checked += 1;
            if next.liveness() != oracle.as_slice() || lib.liveness() != oracle.as_slice() {
                mismatches += 1;
            }
            g = next;
        }
    }
    v.check(mismatches == 0, format!("{checked} generations compared, {mismatches} mismatches"));
    v
}

fn equilibrium_runs() -> Vec<(f64, u64, StatsRun)> {
    let rules = RuleSet::default();
    let policy = NumericPolicy::binary32();
    let mut runs = Vec::new();
    for f in [0.2, 0.8] {
        for seed in [1u64, 2, 3] {
            let g = seed_random(100, 100, f, seed, Precision::Binary32).unwrap();
            runs.push((f, seed, run_statistics(&g, &rules, &policy, 10_000, 5_000).unwrap()));
        }
    }
    runs
}

fn check_cloud_bands(v: &mut Verdict, label: &str, run: &StatsRun) {
    let s = &run.stats;
    v.check(
        (s.std_liveness - SIGMA).abs() <= SIGMA_BAND,
        format!("{label}: sigma {:.5} within {SIGMA} +/- {SIGMA_BAND}", s.std_liveness),
    );
    v.check(s.unimodal, format!("{label}: histogram unimodal = {}", s.unimodal));
    v.check(
        s.max_cdf_deviation < KS_LIMIT,
        format!("{label}: max CDF deviation {:.4} < {KS_LIMIT}", s.max_cdf_deviation),
    );
}

fn c2_universality(runs: &[(f64, u64, StatsRun)]) -> Verdict {
    let mut v = Verdict::new();
    let means: Vec<f64> = runs.iter().map(|r| r.2.stats.mean_liveness).collect();
    let mut spread = 0.0f64;
    for a in &means {
        for b in &means {
            spread = spread.max((a - b).abs());
        }
    }
    v.check(
        spread <= MEAN_AGREEMENT,
        format!("max pairwise mean difference {spread:.5} <= {MEAN_AGREEMENT}"),
    );
    for (f, seed, run) in runs {
        v.note(format!("f={f} seed={seed}: mean {:.5}", run.stats.mean_liveness));
        check_cloud_bands(&mut v, &format!("f={f} seed={seed}"), run);
    }
    v
}

fn c3_constant(runs: &[(f64, u64, StatsRun)]) -> Verdict {
    let mut v = Verdict::new();
    let mean = runs.iter().map(|r| r.2.stats.mean_liveness).sum::<f64>() / runs.len() as f64;
    let ok = (mean - CONSTANT).abs() <= CONSTANT_BAND;
    v.check(ok, format!("windowed mean {mean:.5} within {CONSTANT} +/- {CONSTANT_BAND}"));
    if !ok {
        let g = seed_random(100, 100, 0.2, 1, Precision::Binary32).unwrap();
        let gs: Vec<f64> = (0..=8).map(|k| 1.5 + 0.25 * k as f64).collect();
        for p in mixing_scan(&g, &gs, &NumericPolicy::binary32(), 4000, 2000).unwrap() {
            v.note(format!("g={:.3}: mean {:.5}", p.g, p.mean_liveness));
        }
    }
    v
}

fn c4_qutub_fixed_point() -> Verdict {
    let mut v = Verdict::new();
    let q = make_qutub(QutubSpec::uniform(0.5)).unwrap();
    for precision in [Precision::Binary32, Precision::Binary64] {
        let seed = centered(&q, 256, 256, precision).unwrap();
        let policy = NumericPolicy::new(precision, SumOrder::Canonical);
        let mut evo = Evolution::new(seed.clone(), RuleSet::default(), policy);
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            evo.step();
            worst = worst.max(evo.grid().max_abs_diff(&seed));
        }
        v.check(
            worst <= 1e-6,
            format!("{precision}: max per-cell change over 1000 generations {worst:e} <= 1e-6"),
        );
    }
    v
}

fn classify_diagonal(a: f64) -> qgol::analysis::Classification {
    let g = centered(&make_qutub(QutubSpec::uniform(a)).unwrap(), 100, 100, Precision::Binary64).unwrap();
    let policy = NumericPolicy::binary64();
    classify_run(&g, &RuleSet::default(), &policy, &ClassifyLimits::for_precision(Precision::Binary64)).unwrap()
}

fn c5_trio(runs: &[(f64, u64, StatsRun)]) -> Verdict {
    let mut v = Verdict::new();
    let dead = classify_diagonal(0.57);
    v.check(
        dead.outcome.terminal().tag() == "Dead",
        format!("0.57 -> {} at generation {}", dead.outcome.tag(), dead.generations),
    );

    let cloud = classify_diagonal(0.58);
    v.check(
        cloud.outcome.terminal().tag() == "LivenessCloud",
        format!("0.58 -> {} at generation {}", cloud.outcome.tag(), cloud.generations),
    );
    let seed = centered(&make_qutub(QutubSpec::uniform(0.58)).unwrap(), 100, 100, Precision::Binary64).unwrap();
    let run = run_statistics(&seed, &RuleSet::default(), &NumericPolicy::binary64(), 10_000, 5_000).unwrap();
    let random_mean = runs.iter().map(|r| r.2.stats.mean_liveness).sum::<f64>() / runs.len() as f64;
    let d = (run.stats.mean_liveness - random_mean).abs();
    v.check(
        d <= MEAN_AGREEMENT,
        format!(
            "0.58 cloud mean {:.5} vs random-seed mean {random_mean:.5}: difference {d:.5} <= {MEAN_AGREEMENT}",
            run.stats.mean_liveness
        ),
    );
    check_cloud_bands(&mut v, "0.58 cloud", &run);

    let life = classify_diagonal(0.59);
    let inv = life.outcome.inventory();
    let exact = life.outcome.terminal().tag() == "Lifeforms"
        && inv.is_some_and(|i| i.count("tub") == 1 && i.count("qutub") == 4 && i.total() == 5 && i.unknown.is_empty());
    v.check(
        exact,
        format!(
            "0.59 -> {} [{}] at generation {}",
            life.outcome.tag(),
            inv.map(|i| i.summary()).unwrap_or_default(),
            life.generations
        ),
    );
    v
}

fn c6_stability_probe() -> Verdict {
    let mut v = Verdict::new();
    let r = probe_qutub_stability(10_000, 1, 16, &RuleSet::default(), &NumericPolicy::binary64()).unwrap();
    let best = r.adjacent_agreement.max(r.opposite_agreement);
    let worst = r.adjacent_agreement.min(r.opposite_agreement);
    v.check(
        best >= 0.99 && worst < 0.99,
        format!(
            "adjacent agreement {:.4}, opposite agreement {:.4} over {} samples ({} stable)",
            r.adjacent_agreement, r.opposite_agreement, r.samples, r.stable
        ),
    );
    v.note(format!("winning criterion: {}", r.winner));
    v
}

fn c7_sweep() -> Verdict {
    let mut v = Verdict::new();
    let axis = || Axis::new("0.50", "1.00", "0.01").unwrap();
    let spec = SweepSpec::new(axis(), axis(), NumericPolicy::binary64());
    let t = Instant::now();
    let one = with_workers(1, || run_sweep(&spec)).unwrap().unwrap();
    let first = t.elapsed().as_secs_f64();
    let two = with_workers(2, || run_sweep(&spec)).unwrap().unwrap();
    let total = t.elapsed().as_secs_f64();
    v.note(format!(
        "{} points on a {}x{} torus, {first:.0} s per sweep",
        spec.points(),
        spec.grid,
        spec.grid
    ));

    let tally = one.tally();
    v.note(format!("tally: {tally:?}"));
    let mut terminal: BTreeMap<&str, usize> = BTreeMap::new();
    let mut transients = 0usize;
    for (_, _, c) in one.iter() {
        *terminal.entry(c.outcome.terminal().tag()).or_default() += 1;
        transients += usize::from(!c.outcome.transients().is_empty());
    }
    for class in ["Dead", "LivenessCloud", "StillLife", "Lifeforms", "Oscillator"] {
        let n = terminal.get(class).copied().unwrap_or(0);
        v.check(n > 0, format!("class {class} present ({n} cells)"));
    }
    v.check(transients > 0, format!("transient lifeforms recorded in {transients} cells"));

    let oscillators: Vec<String> = one
        .iter()
        .filter(|(_, _, c)| c.outcome.terminal().tag() == "Oscillator")
        .map(|(i, j, c)| {
            format!(
                "({},{}) {}",
                spec.x.label(i),
                spec.y.label(j),
                c.outcome.inventory().map(|inv| inv.summary()).unwrap_or_default()
            )
        })
        .collect();
    let sixteen = one.iter().any(|(_, _, c)| {
        c.outcome.terminal().tag() == "Oscillator" && c.outcome.inventory().is_some_and(|i| i.total() == 16)
    });
    v.check(sixteen, "a cell whose inventory is 16 classical oscillators");
    v.note(format!("oscillator cells: {}", oscillators.join("; ")));

    let same_csv = one.to_csv() == two.to_csv();
    let same_png = one.render_png(8).unwrap() == two.render_png(8).unwrap();
    v.check(
        same_csv && same_png,
        format!("1 and 2 workers byte-identical: csv {same_csv}, png {same_png}"),
    );
    v.check(total < 600.0, format!("two sweeps in {total:.0} s (target < 600 s each)"));
    v
}

fn qutub_seed(a: f64, n: usize, precision: Precision) -> Grid {
    centered(&make_qutub(QutubSpec::uniform(a)).unwrap(), n, n, precision).unwrap()
}

fn c8_chaos() -> Verdict {
    let mut v = Verdict::new();
    let rules = RuleSet::default();
    let b32 = first_symmetry_break(
        &qutub_seed(0.58, 100, Precision::Binary32),
        &rules,
        &NumericPolicy::binary32(),
        1e-3,
        500,
    )
    .unwrap();
    v.check(b32.is_some(), format!("binary32 quarter-turn break (> 1e-3) at generation {b32:?}"));
    let b64 = first_symmetry_break(
        &qutub_seed(0.58, 100, Precision::Binary64),
        &rules,
        &NumericPolicy::binary64(),
        1e-3,
        500,
    )
    .unwrap();
    let later = match (b32, b64) {
        (Some(a), Some(b)) => b >= a,
        (Some(_), None) => true,
        _ => false,
    };
    v.check(later, format!("binary64 break {b64:?} not earlier than binary32 break {b32:?}"));

    let seed = qutub_seed(0.58, 100, Precision::Binary32);
    let p = NumericPolicy::binary32();
    let same = divergence_experiment(&seed, &rules, &[p, p], 500).unwrap();
    v.check(!same[0].diverged(), "identical variants: zero divergence over 500 generations");

    let mut diverged = 0usize;
    for k in 0..20u64 {
        let precision = if k % 2 == 0 { Precision::Binary32 } else { Precision::Binary64 };
        let g = seed_random(48, 48, 0.3, 500 + k, precision).unwrap();
        let live: Vec<f64> = g.liveness().iter().map(|&a| if a > 0.0 { 1.0 } else { 0.0 }).collect();
        let g = Grid::from_liveness(48, 48, precision, live).unwrap();
        let variants: Vec<NumericPolicy> = SumOrder::ALL.iter().map(|&o| NumericPolicy::new(precision, o)).collect();
        diverged += divergence_experiment(&g, &rules, &variants, 200)
            .unwrap()
            .iter()
            .filter(|r| r.diverged())
            .count();
    }
    v.check(diverged == 0, format!("binary seeds across all summation orders: {diverged} divergent pairs"));
    v
}

fn qutub_universe(a: f64, n: usize, precision: Precision) -> Universe {
    Universe {
        width: n,
        height: n,
        rules: RuleSet::default(),
        policy: NumericPolicy::new(precision, SumOrder::Canonical),
        seeding: Seeding::Patterns {
            stamps: vec![Stamp::qutub(QutubSpec::uniform(a))],
        },
    }
}

fn compare_dirs(a: &Path, b: &Path) -> (usize, Vec<String>) {
    let mut files = 0;
    let mut differing = Vec::new();
    for entry in std::fs::read_dir(a).unwrap() {
        let name = entry.unwrap().file_name();
        files += 1;
        let same = std::fs::read(b.join(&name)).ok() == Some(std::fs::read(a.join(&name)).unwrap());
        if !same {
            differing.push(name.to_string_lossy().into_owned());
        }
    }
    (files, differing)
}

fn c9_reproducibility() -> Verdict {
    let mut v = Verdict::new();
    let tmp = tempfile::tempdir().unwrap();
    let axis = |s: &str, e: &str| Axis::new(s, e, "0.01").unwrap();
    let mut sweep = SweepSpec::new(axis("0.56", "0.60"), axis("0.57", "0.59"), NumericPolicy::binary64());
    sweep.grid = 64;
    let commands = vec![
        Command::Run(RunConfig {
            schema_version: SCHEMA_VERSION,
            universe: Universe {
                width: 40,
                height: 40,
                rules: RuleSet::default(),
                policy: NumericPolicy::new(Precision::Binary32, SumOrder::Tree),
                seeding: Seeding::Random { fraction: 0.2, rng_seed: 7 },
            },
            generations: 300,
            snapshots: vec![0, 150, 300],
            snapshot_formats: vec![SnapshotFormat::Text, SnapshotFormat::Pgm],
            stats_window: Some(100),
        }),
        Command::Classify(ClassifyConfig {
            schema_version: SCHEMA_VERSION,
            universe: qutub_universe(0.59, 64, Precision::Binary64),
            limits: None,
            snapshots: vec![50],
            snapshot_formats: vec![SnapshotFormat::Text],
        }),
        Command::Sweep(SweepConfig {
            schema_version: SCHEMA_VERSION,
            sweep,
            image_scale: 4,
        }),
        Command::Chaos(ChaosConfig {
            schema_version: SCHEMA_VERSION,
            universe: qutub_universe(0.58, 48, Precision::Binary64),
            variants: vec![
                NumericPolicy::binary32(),
                NumericPolicy::new(Precision::Binary32, SumOrder::Reversed),
                NumericPolicy::binary64(),
            ],
            horizon: 120,
            threshold: 1e-3,
        }),
        Command::Stats(StatsConfig {
            schema_version: SCHEMA_VERSION,
            width: 32,
            height: 32,
            rules: RuleSet::default(),
            policy: NumericPolicy::binary32(),
            fractions: vec![0.2, 0.8],
            rng_seeds: vec![1, 2],
            generations: 400,
            window: 200,
            mixing_scan: vec![2.0, 2.5],
        }),
    ];
    for cmd in &commands {
        let a = tmp.path().join(format!("{}-a", cmd.name()));
        let b = tmp.path().join(format!("{}-b", cmd.name()));
        execute(cmd, &a).unwrap();
        replay(&a.join(MANIFEST_FILE), &b).unwrap();
        let (files, differing) = compare_dirs(&a, &b);
        v.check(
            differing.is_empty() && files > 1,
            format!("{} replay: {files} files, differing {differing:?}", cmd.name()),
        );
    }

    let mut exact = 0usize;
    let mut total = 0usize;
    for (k, precision) in [Precision::Binary32, Precision::Binary64].into_iter().enumerate() {
        for seed in 0..5u64 {
            let g = seed_random(30, 20, 0.5, seed + 10 * k as u64, precision).unwrap();
            let mut evo = Evolution::new(g, RuleSet::default(), NumericPolicy::new(precision, SumOrder::Canonical));
            evo.advance(25);
            let g = evo.into_grid();
            let parsed = parse_snapshot_text(&snapshot_text(&g)).unwrap();
            let path = tmp.path().join(format!("snap-{k}-{seed}.txt"));
            save_snapshot(&g, &path, SnapshotFormat::Text).unwrap();
            let loaded = load_snapshot(&path).unwrap();
            let bits = |x: &Grid| x.liveness().iter().map(|a| a.to_bits()).collect::<Vec<_>>();
            total += 1;
            if bits(&parsed) == bits(&g)
                && bits(&loaded) == bits(&g)
                && parsed.generation() == g.generation()
                && parsed.precision() == precision
            {
                exact += 1;
            }
        }
    }
    v.check(exact == total, format!("text snapshots bit-exact: {exact}/{total}"));
    v
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |id: &str| filters.is_empty() || filters.iter().any(|f| id.contains(f.as_str()));
    let needs_runs = ["c2", "c3", "c5"].iter().any(|id| wanted(id));
    let t = Instant::now();
    let runs = if needs_runs { equilibrium_runs() } else { Vec::new() };
    if needs_runs {
        println!("shared equilibrium runs: {:.1} s", t.elapsed().as_secs_f64());
    }

    let criteria: Vec<Criterion> = vec![
        ("c1", "classical oracle equivalence", Box::new(c1_classical)),
        ("c2", "equilibrium universality", Box::new(|| c2_universality(&runs))),
        ("c3", "universal constant", Box::new(|| c3_constant(&runs))),
        ("c4", "qutub fixed point", Box::new(c4_qutub_fixed_point)),
        ("c5", "qutub trio", Box::new(|| c5_trio(&runs))),
        ("c6", "stability-region probe", Box::new(c6_stability_probe)),
        ("c7", "sweep reproduction", Box::new(c7_sweep)),
        ("c8", "chaos property", Box::new(c8_chaos)),
        ("c9", "reproducibility", Box::new(c9_reproducibility)),
    ];
    let mut failed = 0;
    let mut ran = 0;
    for (id, title, run) in &criteria {
        if !wanted(id) {
            continue;
        }
        ran += 1;
        let t = Instant::now();
        let verdict = run();
        let secs = t.elapsed().as_secs_f64();
        println!(
            "{} {id} {title} ({secs:.1} s)",
            if verdict.pass { "PASS" } else { "FAIL" }
        );
        for line in &verdict.lines {
            println!("    {line}");
        }
        failed += usize::from(!verdict.pass);
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
