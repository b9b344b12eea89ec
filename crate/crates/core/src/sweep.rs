//! Qutub amplitude sweeps and outcome maps.
//!
//! A sweep stamps the two-fold qutub `a1 = a4 = x`, `a2 = a3 = y` at the
//! center of a dead grid for every lattice point and classifies the run.
//! Lattice coordinates are exact decimals: point `k` of an axis is
//! `start + k * step` evaluated in integer arithmetic and converted once.

use std::fmt;
use std::io::Cursor;
use std::str::FromStr;

use image::{ImageFormat, Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::analysis::{classify_run, ClassifyLimits, Classification, Outcome};
use crate::catalog::{centered, make_qutub, QutubSpec};
use crate::error::{Error, Result};
use crate::numeric::NumericPolicy;
use crate::par::map_indices;
use crate::rules::RuleSet;

/// Decimal `mantissa * 10^-scale`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Decimal {
    mantissa: i64,
    scale: u32,
}

impl Decimal {
    fn parse(s: &str) -> Result<Decimal> {
        let bad = || Error::InvalidConfig(format!("`{s}` is not a plain decimal number"));
        let t = s.trim();
        let (neg, digits) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t),
        };
        let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
        if int.is_empty() && frac.is_empty()
            || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())
            || frac.len() > 12
        {
            return Err(bad());
        }
        let joined = format!("{int}{frac}");
        let mantissa: i64 = joined.parse().map_err(|_| bad())?;
        Ok(Decimal {
            mantissa: if neg { -mantissa } else { mantissa },
            scale: frac.len() as u32,
        })
    }

    fn rescale(self, scale: u32) -> i64 {
        self.mantissa * 10i64.pow(scale - self.scale)
    }
}

/// Closed interval sampled at a fixed decimal step, both ends included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Axis {
    start: i64,
    step: i64,
    count: usize,
    scale: u32,
}

impl Axis {
    pub fn new(start: &str, end: &str, step: &str) -> Result<Axis> {
        let (s, e, d) = (Decimal::parse(start)?, Decimal::parse(end)?, Decimal::parse(step)?);
        let scale = s.scale.max(e.scale).max(d.scale);
        let (s, e, d) = (s.rescale(scale), e.rescale(scale), d.rescale(scale));
        if d <= 0 {
            return Err(Error::InvalidConfig(format!("axis step must be positive, got {step}")));
        }
        if e < s || (e - s) % d != 0 {
            return Err(Error::InvalidConfig(format!(
                "axis {start}:{end}:{step} must reach its end in whole steps"
            )));
        }
        Ok(Axis {
            start: s,
            step: d,
            count: ((e - s) / d) as usize + 1,
            scale,
        })
    }

    /// The single point `value`.
    pub fn point(value: &str) -> Result<Axis> {
        Axis::new(value, value, "1")
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    fn numerator(&self, k: usize) -> i64 {
        self.start + k as i64 * self.step
    }

    /// Coordinate of point `k`, correctly rounded from the exact decimal.
    pub fn value(&self, k: usize) -> f64 {
        self.numerator(k) as f64 / 10f64.powi(self.scale as i32)
    }

    /// Exact decimal text of point `k`.
    pub fn label(&self, k: usize) -> String {
        let n = self.numerator(k);
        let p = 10i64.pow(self.scale);
        let sign = if n < 0 { "-" } else { "" };
        let n = n.abs();
        if self.scale == 0 {
            format!("{sign}{n}")
        } else {
            format!("{sign}{}.{:0w$}", n / p, n % p, w = self.scale as usize)
        }
    }

    pub fn step(&self) -> f64 {
        self.step as f64 / 10f64.powi(self.scale as i32)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.value(k)).collect()
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let step = Axis {
            start: self.step,
            step: 1,
            count: 1,
            scale: self.scale,
        };
        write!(f, "{}:{}:{}", self.label(0), self.label(self.count - 1), step.label(0))
    }
}

impl FromStr for Axis {
    type Err = Error;

    /// `start:end:step` or a single value.
    fn from_str(s: &str) -> Result<Axis> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [v] => Axis::point(v),
            [a, b, c] => Axis::new(a, b, c),
            _ => Err(Error::InvalidConfig(format!("axis `{s}` must be start:end:step"))),
        }
    }
}

impl Serialize for Axis {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Axis {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Axis, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub const DEFAULT_SWEEP_BUDGET: usize = 10_000;
pub const DEFAULT_SWEEP_GRID: usize = 100;

/// A lattice of two-fold qutub seeds and how to classify them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub x: Axis,
    pub y: Axis,
    pub grid: usize,
    #[serde(default)]
    pub rules: RuleSet,
    #[serde(default)]
    pub policy: NumericPolicy,
    pub limits: ClassifyLimits,
    /// Largest lattice accepted.
    pub budget: usize,
}

impl SweepSpec {
    pub fn new(x: Axis, y: Axis, policy: NumericPolicy) -> Self {
        Self {
            x,
            y,
            grid: DEFAULT_SWEEP_GRID,
            rules: RuleSet::default(),
            policy,
            limits: ClassifyLimits::for_precision(policy.precision),
            budget: DEFAULT_SWEEP_BUDGET,
        }
    }

    pub fn points(&self) -> usize {
        self.x.len() * self.y.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.points() > self.budget {
            return Err(Error::BudgetExceeded {
                points: self.points(),
                budget: self.budget,
            });
        }
        if self.grid < 5 {
            return Err(Error::InvalidConfig(format!(
                "sweep grid must be at least 5 cells wide, got {}",
                self.grid
            )));
        }
        for axis in [&self.x, &self.y] {
            for k in [0, axis.len() - 1] {
                let v = axis.value(k);
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::OutOfRange {
                        field: "sweep amplitude".into(),
                        value: v,
                    });
                }
            }
        }
        self.rules.validate()?;
        self.limits.validate()
    }
}

/// Classification of every lattice point, stored with x varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeGrid {
    pub x: Axis,
    pub y: Axis,
    pub cells: Vec<Classification>,
}

impl OutcomeGrid {
    pub fn get(&self, i: usize, j: usize) -> &Classification {
        &self.cells[j * self.x.len() + i]
    }

    /// `(i, j, classification)` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &Classification)> {
        let nx = self.x.len();
        self.cells.iter().enumerate().map(move |(k, c)| (k % nx, k / nx, c))
    }

    /// Number of cells whose terminal outcome has each tag.
    pub fn tally(&self) -> std::collections::BTreeMap<&'static str, usize> {
        let mut out = std::collections::BTreeMap::new();
        for c in &self.cells {
            *out.entry(c.outcome.terminal().tag()).or_insert(0) += 1;
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,outcome,period,inventory,generations\n");
        for (i, j, c) in self.iter() {
            let period = c.outcome.period().map(|p| p.to_string()).unwrap_or_default();
            let inventory = c.outcome.inventory().map(|inv| inv.summary()).unwrap_or_default();
            s += &format!(
                "{},{},{},{},{},{}\n",
                self.x.label(i),
                self.y.label(j),
                csv_tag(&c.outcome),
                period,
                inventory,
                c.generations
            );
        }
        s
    }

    /// Map image: one `scale x scale` block per point, y increasing upward,
    /// with the lower half of the block painted over for points that passed
    /// through transient lifeforms.
    pub fn render_png(&self, scale: u32) -> Result<Vec<u8>> {
        let scale = scale.max(2);
        let (nx, ny) = (self.x.len() as u32, self.y.len() as u32);
        let mut img = RgbImage::new(nx * scale, ny * scale);
        for (i, j, c) in self.iter() {
            let color = tag_color(c.outcome.terminal().tag());
            let transient = !c.outcome.transients().is_empty();
            let top = (ny - 1 - j as u32) * scale;
            for dy in 0..scale {
                for dx in 0..scale {
                    let px = if transient && dy >= scale / 2 { TRANSIENT_COLOR } else { color };
                    img.put_pixel(i as u32 * scale + dx, top + dy, px);
                }
            }
        }
        let mut out = Cursor::new(Vec::new());
        img.write_to(&mut out, ImageFormat::Png)
            .map_err(|e| Error::Image(e.to_string()))?;
        Ok(out.into_inner())
    }
}

fn csv_tag(outcome: &Outcome) -> String {
    match outcome {
        Outcome::TransientThen { outcome, .. } => format!("TransientThen:{}", outcome.terminal().tag()),
        o => o.tag().to_string(),
    }
}

const TRANSIENT_COLOR: Rgb<u8> = Rgb([255, 255, 255]);

const PALETTE: [(&str, Rgb<u8>); 6] = [
    ("Dead", Rgb([40, 40, 40])),
    ("StillLife", Rgb([31, 119, 180])),
    ("Oscillator", Rgb([255, 127, 14])),
    ("LivenessCloud", Rgb([214, 39, 40])),
    ("Lifeforms", Rgb([44, 160, 44])),
    ("Unresolved", Rgb([160, 160, 160])),
];

pub fn tag_color(tag: &str) -> Rgb<u8> {
    PALETTE
        .iter()
        .find(|(t, _)| *t == tag)
        .map_or(Rgb([255, 0, 255]), |&(_, c)| c)
}

/// Reads back `(terminal tag, transient)` per point, x varying fastest.
pub fn decode_outcome_png(png: &[u8], nx: usize, ny: usize) -> Result<Vec<(String, bool)>> {
    let img = image::load_from_memory_with_format(png, ImageFormat::Png)
        .map_err(|e| Error::Image(e.to_string()))?
        .to_rgb8();
    let scale = img.width() / nx as u32;
    if scale < 2 || img.width() != nx as u32 * scale || img.height() != ny as u32 * scale {
        return Err(Error::DimensionMismatch {
            expected: format!("{nx}x{ny} blocks"),
            found: format!("{}x{} pixels", img.width(), img.height()),
        });
    }
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny as u32 {
        for i in 0..nx as u32 {
            let top = (ny as u32 - 1 - j) * scale;
            let color = *img.get_pixel(i * scale, top);
            let lower = *img.get_pixel(i * scale, top + scale - 1);
            let tag = PALETTE
                .iter()
                .find(|(_, c)| *c == color)
                .map(|(t, _)| t.to_string())
                .ok_or_else(|| Error::Image(format!("unknown color {color:?} at block ({i}, {j})")))?;
            out.push((tag, lower == TRANSIENT_COLOR && color != TRANSIENT_COLOR));
        }
    }
    Ok(out)
}

/// Reads back `(terminal tag, transient)` per row of a sweep CSV.
pub fn decode_outcome_csv(csv: &str) -> Result<Vec<(String, bool)>> {
    csv.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.is_empty())
        .map(|(n, line)| {
            let field = line
                .split(',')
                .nth(2)
                .ok_or_else(|| Error::parse(n + 1, 1, "missing outcome column"))?;
            Ok(match field.strip_prefix("TransientThen:") {
                Some(tag) => (tag.to_string(), true),
                None => (field.to_string(), false),
            })
        })
        .collect()
}

/// Qutub seed for one lattice point.
pub fn sweep_seed(spec: &SweepSpec, i: usize, j: usize) -> Result<crate::grid::Grid> {
    let x = spec.policy.precision.round(spec.x.value(i));
    let y = spec.policy.precision.round(spec.y.value(j));
    centered(&make_qutub(QutubSpec::two_fold(x, y))?, spec.grid, spec.grid, spec.policy.precision)
}

/// Classifies every lattice point; output order is independent of scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<OutcomeGrid> {
    spec.validate()?;
    let nx = spec.x.len();
    let cells = map_indices(spec.points(), |k| {
        let seed = sweep_seed(spec, k % nx, k / nx)?;
        classify_run(&seed, &spec.rules, &spec.policy, &spec.limits)
    });
    Ok(OutcomeGrid {
        x: spec.x.clone(),
        y: spec.y.clone(),
        cells: cells.into_iter().collect::<Result<_>>()?,
    })
}

/// Agreement between a coarse sweep and the majority of a finer sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleAgreement {
    pub compared: usize,
    pub agreeing: usize,
    pub fraction: f64,
}

/// For every coarse point inside the fine sweep's range, compares its
/// terminal tag with the most common terminal tag among fine points within
/// half a coarse step.
pub fn scale_agreement(coarse: &OutcomeGrid, fine: &OutcomeGrid) -> ScaleAgreement {
    let (hx, hy) = (coarse.x.step() / 2.0 + 1e-12, coarse.y.step() / 2.0 + 1e-12);
    let mut compared = 0;
    let mut agreeing = 0;
    for (ci, cj, c) in coarse.iter() {
        let (cx, cy) = (coarse.x.value(ci), coarse.y.value(cj));
        let mut votes: std::collections::BTreeMap<&str, usize> = Default::default();
        for (fi, fj, f) in fine.iter() {
            if (fine.x.value(fi) - cx).abs() <= hx && (fine.y.value(fj) - cy).abs() <= hy {
                *votes.entry(f.outcome.terminal().tag()).or_insert(0) += 1;
            }
        }
        let Some(max) = votes.values().max().copied() else {
            continue;
        };
        compared += 1;
        if votes.get(c.outcome.terminal().tag()) == Some(&max) {
            agreeing += 1;
        }
    }
    ScaleAgreement {
        compared,
        agreeing,
        fraction: if compared == 0 { 0.0 } else { agreeing as f64 / compared as f64 },
    }
}
