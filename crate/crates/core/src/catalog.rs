//! Patterns, qutubs, lifeform identification and still-life search.
//!
//! A qutub is the classical tub (four live cells around a dead center) with
//! its four corner cells part-live:
//!
//! ```text
//!   a1  1  a2
//!    1  0  1
//!   a3  1  a4
//! ```
//!
//! Each corner sees exactly two live cells, so it is left alone by the
//! survival operator. The qutub is a fixed point when every pair of corners
//! sharing a side of the 3x3 square sums to at most one (`a1 + a2`, `a1 + a3`,
//! `a2 + a4`, `a3 + a4`); with all corners dead it is the classical tub.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::engine::Evolution;
use crate::error::{Error, Result};
use crate::grid::{check_amplitude, Grid};
use crate::numeric::{NumericPolicy, Precision};
use crate::par::map_indices;
use crate::rules::RuleSet;

/// One cell of a [`Pattern`], relative to its anchor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(isize, isize, f64)", into = "(isize, isize, f64)")]
pub struct PatternCell {
    pub row: isize,
    pub col: isize,
    pub a: f64,
}

impl From<(isize, isize, f64)> for PatternCell {
    fn from((row, col, a): (isize, isize, f64)) -> Self {
        PatternCell { row, col, a }
    }
}

impl From<PatternCell> for (isize, isize, f64) {
    fn from(c: PatternCell) -> Self {
        (c.row, c.col, c.a)
    }
}

/// A finite stamp of liveness amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pattern {
    pub name: String,
    pub cells: Vec<PatternCell>,
    /// Per-cell matching tolerance; `None` selects the precision default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

/// Default matching tolerance for a precision.
pub fn default_tolerance(precision: Precision) -> f64 {
    match precision {
        Precision::Binary32 => 1e-5,
        Precision::Binary64 => 1e-10,
    }
}

impl Pattern {
    pub fn new(name: impl Into<String>, cells: Vec<PatternCell>) -> Result<Self> {
        let p = Pattern {
            name: name.into(),
            cells,
            tolerance: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Pattern whose listed cells are fully live.
    pub fn classical(name: impl Into<String>, live: &[(isize, isize)]) -> Self {
        let cells = live
            .iter()
            .map(|&(row, col)| PatternCell { row, col, a: 1.0 })
            .collect();
        Pattern::new(name, cells).expect("classical pattern is valid")
    }

    pub fn validate(&self) -> Result<()> {
        for c in &self.cells {
            check_amplitude(c.a, || format!("{} cell ({}, {})", self.name, c.row, c.col))?;
        }
        let mut offsets: Vec<_> = self.cells.iter().map(|c| (c.row, c.col)).collect();
        offsets.sort_unstable();
        if let Some(w) = offsets.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig(format!(
                "pattern `{}` lists cell {:?} twice",
                self.name, w[0]
            )));
        }
        if let Some(t) = self.tolerance {
            if !(t >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "pattern `{}` has negative tolerance",
                    self.name
                )));
            }
        }
        Ok(())
    }

    pub fn tolerance_for(&self, precision: Precision) -> f64 {
        self.tolerance.unwrap_or_else(|| default_tolerance(precision))
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// The eight dihedral images of the cell offsets, with duplicates (as
    /// translated shapes) removed. The identity comes first.
    fn orientations(&self) -> Vec<Vec<PatternCell>> {
        let mut seen: Vec<Vec<(isize, isize, u64)>> = Vec::new();
        let mut out = Vec::new();
        for t in DIHEDRAL {
            let cells: Vec<PatternCell> = self
                .cells
                .iter()
                .map(|c| {
                    let (row, col) = t(c.row, c.col);
                    PatternCell { row, col, a: c.a }
                })
                .collect();
            let key = normalized_key(&cells);
            if !seen.contains(&key) {
                seen.push(key);
                out.push(cells);
            }
        }
        out
    }
}

fn normalized_key(cells: &[PatternCell]) -> Vec<(isize, isize, u64)> {
    let r0 = cells.iter().map(|c| c.row).min().unwrap_or(0);
    let c0 = cells.iter().map(|c| c.col).min().unwrap_or(0);
    let mut key: Vec<_> = cells
        .iter()
        .map(|c| (c.row - r0, c.col - c0, c.a.to_bits()))
        .collect();
    key.sort_unstable();
    key
}

type Transform = fn(isize, isize) -> (isize, isize);

/// Identity first, then rotations, then reflections.
const DIHEDRAL: [Transform; 8] = [
    |r, c| (r, c),
    |r, c| (-c, r),
    |r, c| (-r, -c),
    |r, c| (c, -r),
    |r, c| (r, -c),
    |r, c| (-r, c),
    |r, c| (c, r),
    |r, c| (-c, -r),
];

/// Corner amplitudes of a qutub: `a1` north-west, `a2` north-east,
/// `a3` south-west, `a4` south-east. `a1`/`a4` and `a2`/`a3` are
/// diagonally opposite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QutubSpec {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

impl QutubSpec {
    pub fn uniform(a: f64) -> Self {
        Self {
            a1: a,
            a2: a,
            a3: a,
            a4: a,
        }
    }

    /// Two-fold symmetric qutub with `a1 = a4 = x` and `a2 = a3 = y`.
    pub fn two_fold(x: f64, y: f64) -> Self {
        Self {
            a1: x,
            a2: y,
            a3: y,
            a4: x,
        }
    }

    pub fn corners(&self) -> [f64; 4] {
        [self.a1, self.a2, self.a3, self.a4]
    }

    /// Every side pair of corners sums to at most one.
    pub fn adjacent_pairs_bounded(&self) -> bool {
        let [a1, a2, a3, a4] = self.corners();
        a1 + a2 <= 1.0 && a1 + a3 <= 1.0 && a2 + a4 <= 1.0 && a3 + a4 <= 1.0
    }

    /// Both diagonal pairs of corners sum to at most one.
    pub fn opposite_pairs_bounded(&self) -> bool {
        let [a1, a2, a3, a4] = self.corners();
        a1 + a4 <= 1.0 && a2 + a3 <= 1.0
    }
}

pub const TUB_OFFSETS: [(isize, isize); 4] = [(-1, 0), (0, -1), (0, 1), (1, 0)];
pub const QUTUB_CORNERS: [(isize, isize); 4] = [(-1, -1), (-1, 1), (1, -1), (1, 1)];

/// The qutub with the given corner amplitudes, anchored on its dead center.
pub fn make_qutub(spec: QutubSpec) -> Result<Pattern> {
    let mut cells: Vec<PatternCell> = TUB_OFFSETS
        .iter()
        .map(|&(row, col)| PatternCell { row, col, a: 1.0 })
        .collect();
    for (i, (&(row, col), a)) in QUTUB_CORNERS.iter().zip(spec.corners()).enumerate() {
        check_amplitude(a, || format!("a{}", i + 1))?;
        if a > 0.0 {
            cells.push(PatternCell { row, col, a });
        }
    }
    let name = if spec.corners().iter().all(|&a| a == 0.0) {
        "tub"
    } else {
        "qutub"
    };
    Pattern::new(name, cells)
}

/// Copy of `grid` with the pattern cells overwritten at `anchor` (wrapping).
pub fn stamp(grid: &Grid, pattern: &Pattern, anchor: (usize, usize)) -> Result<Grid> {
    let mut out = grid.clone();
    for c in &pattern.cells {
        out.set_wrapped(anchor.0 as isize + c.row, anchor.1 as isize + c.col, c.a)?;
    }
    Ok(out)
}

/// Dead `width x height` grid with the pattern stamped at the center.
pub fn centered(pattern: &Pattern, width: usize, height: usize, precision: Precision) -> Result<Grid> {
    let g = Grid::new(width, height, precision);
    let center = g.center();
    stamp(&g, pattern, center)
}

/// Where a pattern was found.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternMatch {
    /// Grid cell playing the role of the pattern anchor.
    pub anchor: (usize, usize),
    /// Index into the dihedral group (0 is the identity).
    pub orientation: usize,
    /// Largest absolute deviation over the pattern cells.
    pub deviation: f64,
}

/// All placements where every pattern cell matches within tolerance and the
/// surrounding ring of cells is dead within tolerance.
pub fn match_pattern(grid: &Grid, pattern: &Pattern) -> Vec<PatternMatch> {
    if pattern.is_empty() {
        return Vec::new();
    }
    let tol = pattern.tolerance_for(grid.precision());
    let variants = pattern.orientations();
    let mut out = Vec::new();
    for (orientation, cells) in variants.iter().enumerate() {
        let ring = ring_of(cells.iter().map(|c| (c.row, c.col)));
        for row in 0..grid.height() {
            for col in 0..grid.width() {
                let at = |dr: isize, dc: isize| grid.get_wrapped(row as isize + dr, col as isize + dc);
                let mut deviation = 0.0f64;
                let ok = cells.iter().all(|c| {
                    let d = (at(c.row, c.col) - c.a).abs();
                    deviation = deviation.max(d);
                    d <= tol
                }) && ring.iter().all(|&(dr, dc)| at(dr, dc) <= tol);
                if ok {
                    out.push(PatternMatch {
                        anchor: (row, col),
                        orientation,
                        deviation,
                    });
                }
            }
        }
    }
    out.sort_by_key(|m| (m.anchor, m.orientation));
    out
}

/// Moore neighbors of a cell set that are not in the set.
fn ring_of(cells: impl Iterator<Item = (isize, isize)> + Clone) -> Vec<(isize, isize)> {
    let members: Vec<_> = cells.clone().collect();
    let mut ring = Vec::new();
    for (r, c) in cells {
        for dr in -1..=1 {
            for dc in -1..=1 {
                let p = (r + dr, c + dc);
                if !members.contains(&p) && !ring.contains(&p) {
                    ring.push(p);
                }
            }
        }
    }
    ring
}

/// An 8-connected cluster of cells above the liveness threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    /// `(row, col, a)` with torus-wrapped coordinates.
    pub cells: Vec<(usize, usize, f64)>,
    /// Bounding box `(row0, col0, row1, col1)` in unwrapped coordinates
    /// relative to the first cell found; may extend past the grid edge.
    pub bbox: (isize, isize, isize, isize),
    /// Cells in unwrapped coordinates, aligned with `cells`.
    #[serde(skip)]
    unwrapped: Vec<(isize, isize)>,
}

impl Component {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Center of the bounding box, wrapped onto the grid.
    pub fn center(&self, grid: &Grid) -> (usize, usize) {
        let (r0, c0, r1, c1) = self.bbox;
        grid.wrap((r0 + r1).div_euclid(2), (c0 + c1).div_euclid(2))
    }
}

/// 8-connected components (with torus wrap) of cells with `a > live_epsilon`,
/// in row-major order of their first cell.
pub fn connected_components(grid: &Grid, live_epsilon: f64) -> Vec<Component> {
    let w = grid.width();
    let cells = grid.liveness();
    let mut seen = vec![false; cells.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..cells.len() {
        if seen[start] || cells[start] <= live_epsilon {
            continue;
        }
        seen[start] = true;
        let origin = ((start / w) as isize, (start % w) as isize);
        queue.push_back(origin);
        let mut comp = Component {
            cells: Vec::new(),
            bbox: (origin.0, origin.1, origin.0, origin.1),
            unwrapped: Vec::new(),
        };
        while let Some((r, c)) = queue.pop_front() {
            let (wr, wc) = grid.wrap(r, c);
            comp.cells.push((wr, wc, grid.get(wr, wc)));
            comp.unwrapped.push((r, c));
            let b = &mut comp.bbox;
            *b = (b.0.min(r), b.1.min(c), b.2.max(r), b.3.max(c));
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (nr, nc) = grid.wrap(r + dr, c + dc);
                    let i = nr * w + nc;
                    if !seen[i] && cells[i] > live_epsilon {
                        seen[i] = true;
                        queue.push_back((r + dr, c + dc));
                    }
                }
            }
        }
        out.push(comp);
    }
    out
}

/// Thresholds used to read a component as a lifeform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifeformThresholds {
    /// Cells above this liveness belong to a component.
    pub live_epsilon: f64,
    /// Cells at or below this liveness are traces and ignored for identity
    /// (measurement probability below 1e-4).
    pub trace: f64,
    /// Cells within this distance of 1 count as classically live.
    pub live_tolerance: f64,
}

impl Default for LifeformThresholds {
    fn default() -> Self {
        Self {
            live_epsilon: 1e-6,
            trace: 0.01,
            live_tolerance: 1e-5,
        }
    }
}

/// A lifeform species: which cells are live and which are part-live.
#[derive(Debug, Clone, PartialEq)]
pub struct Species {
    pub name: &'static str,
    pub live: Vec<(isize, isize)>,
    pub part_live: Vec<(isize, isize)>,
    pub quantum: bool,
}

/// Shape key invariant under translation and the dihedral group:
/// sorted `(row, col, is_part_live)` of the smallest image.
type ShapeKey = Vec<(isize, isize, bool)>;

fn shape_key(live: &[(isize, isize)], part: &[(isize, isize)]) -> ShapeKey {
    let tagged: Vec<(isize, isize, bool)> = live
        .iter()
        .map(|&(r, c)| (r, c, false))
        .chain(part.iter().map(|&(r, c)| (r, c, true)))
        .collect();
    DIHEDRAL
        .iter()
        .map(|t| {
            let mapped: Vec<_> = tagged
                .iter()
                .map(|&(r, c, p)| {
                    let (r, c) = t(r, c);
                    (r, c, p)
                })
                .collect();
            let r0 = mapped.iter().map(|x| x.0).min().unwrap_or(0);
            let c0 = mapped.iter().map(|x| x.1).min().unwrap_or(0);
            let mut k: Vec<_> = mapped.iter().map(|&(r, c, p)| (r - r0, c - c0, p)).collect();
            k.sort_unstable();
            k
        })
        .min()
        .unwrap_or_default()
}

type Cells = Vec<(isize, isize)>;

fn parse_rows(rows: &[&str]) -> (Cells, Cells) {
    let mut live = Vec::new();
    let mut part = Vec::new();
    for (r, line) in rows.iter().enumerate() {
        for (c, ch) in line.chars().enumerate() {
            match ch {
                'O' => live.push((r as isize, c as isize)),
                'q' => part.push((r as isize, c as isize)),
                _ => {}
            }
        }
    }
    (live, part)
}

/// Built-in species. `O` is live, `q` part-live, `.` dead.
pub fn species_catalog() -> Vec<Species> {
    let defs: &[(&str, &[&str])] = &[
        ("block", &["OO", "OO"]),
        ("beehive", &[".OO.", "O..O", ".OO."]),
        ("loaf", &[".OO.", "O..O", ".O.O", "..O."]),
        ("boat", &["OO.", "O.O", ".O."]),
        ("ship", &["OO.", "O.O", ".OO"]),
        ("tub", &[".O.", "O.O", ".O."]),
        ("long-boat", &["OO..", "O.O.", ".O.O", "..O."]),
        ("barge", &[".O..", "O.O.", ".O.O", "..O."]),
        ("pond", &[".OO.", "O..O", "O..O", ".OO."]),
        ("blinker", &["OOO"]),
        ("toad", &[".OOO", "OOO."]),
        ("toad", &["..O.", "O..O", "O..O", ".O.."]),
        ("beacon", &["OO..", "OO..", "..OO", "..OO"]),
        ("beacon", &["OO..", "O...", "...O", "..OO"]),
        ("qutub", &["qOq", "O.O", "qOq"]),
    ];
    defs.iter()
        .map(|&(name, rows)| {
            let (live, part_live) = parse_rows(rows);
            let quantum = !part_live.is_empty();
            Species {
                name,
                live,
                part_live,
                quantum,
            }
        })
        .collect()
}

/// Lookup from shape to species name.
#[derive(Debug, Clone)]
pub struct SpeciesIndex {
    by_shape: HashMap<ShapeKey, &'static str>,
    thresholds: LifeformThresholds,
}

impl Default for SpeciesIndex {
    fn default() -> Self {
        Self::new(LifeformThresholds::default())
    }
}

impl SpeciesIndex {
    pub fn new(thresholds: LifeformThresholds) -> Self {
        let by_shape = species_catalog()
            .into_iter()
            .map(|s| (shape_key(&s.live, &s.part_live), s.name))
            .collect();
        Self {
            by_shape,
            thresholds,
        }
    }

    pub fn thresholds(&self) -> &LifeformThresholds {
        &self.thresholds
    }

    /// Species name of a component, if it is in the catalog.
    pub fn identify(&self, component: &Component) -> Option<&'static str> {
        let t = &self.thresholds;
        let mut live = Vec::new();
        let mut part = Vec::new();
        for (&(_, _, a), &pos) in component.cells.iter().zip(&component.unwrapped) {
            if a >= 1.0 - t.live_tolerance {
                live.push(pos);
            } else if a > t.trace {
                part.push(pos);
            }
        }
        if live.is_empty() && part.is_empty() {
            return None;
        }
        self.by_shape.get(&shape_key(&live, &part)).copied()
    }

    /// Components of a grid, each with its species if identified. Unknown
    /// pieces within two cells of each other are joined when their union is
    /// a catalog species, which covers the split phases of toad and beacon.
    fn lifeforms(&self, grid: &Grid) -> Vec<(Option<&'static str>, Component)> {
        let mut found: Vec<(Option<&'static str>, Component)> = connected_components(grid, self.thresholds.live_epsilon)
            .into_iter()
            .map(|c| (self.identify(&c), c))
            .collect();
        let mut i = 0;
        while i < found.len() {
            if found[i].0.is_some() {
                i += 1;
                continue;
            }
            let joined = (i + 1..found.len())
                .filter(|&j| found[j].0.is_none())
                .find_map(|j| {
                    let merged = join(grid, &found[i].1, &found[j].1)?;
                    self.identify(&merged).map(|name| (j, name, merged))
                });
            match joined {
                Some((j, name, merged)) => {
                    found.remove(j);
                    found[i] = (Some(name), merged);
                }
                None => i += 1,
            }
        }
        found
    }

    /// Species counts and unidentified components of a grid.
    pub fn inventory(&self, grid: &Grid) -> Inventory {
        let mut inv = Inventory::default();
        for (name, comp) in self.lifeforms(grid) {
            match name {
                Some(name) => *inv.species.entry(name.to_string()).or_default() += 1,
                None => inv.unknown.push(UnknownComponent {
                    cells: comp.len(),
                    center: comp.center(grid),
                    total_liveness: comp.cells.iter().map(|c| c.2).sum(),
                }),
            }
        }
        inv
    }

    /// Identified lifeforms with their positions.
    pub fn locate(&self, grid: &Grid) -> Vec<Located> {
        self.lifeforms(grid)
            .into_iter()
            .filter_map(|(name, comp)| {
                name.map(|name| Located {
                    species: name.to_string(),
                    center: comp.center(grid),
                })
            })
            .collect()
    }
}

/// Union of two components whose nearest cells are at most two cells apart
/// on the torus, in the unwrapped frame of `a`.
fn join(grid: &Grid, a: &Component, b: &Component) -> Option<Component> {
    let torus = |d: isize, n: usize| {
        let n = n as isize;
        let d = d.rem_euclid(n);
        if d > n / 2 {
            d - n
        } else {
            d
        }
    };
    let mut best: Option<(isize, (isize, isize))> = None;
    for (&(ar, ac, _), &ua) in a.cells.iter().zip(&a.unwrapped) {
        for (&(br, bc, _), &ub) in b.cells.iter().zip(&b.unwrapped) {
            let dr = torus(br as isize - ar as isize, grid.height());
            let dc = torus(bc as isize - ac as isize, grid.width());
            let dist = dr.abs().max(dc.abs());
            if best.is_none_or(|(d, _)| dist < d) {
                best = Some((dist, (ua.0 + dr - ub.0, ua.1 + dc - ub.1)));
            }
        }
    }
    let (dist, (sr, sc)) = best?;
    if dist > 2 {
        return None;
    }
    let mut out = a.clone();
    for (&cell, &(r, c)) in b.cells.iter().zip(&b.unwrapped) {
        let (r, c) = (r + sr, c + sc);
        out.cells.push(cell);
        out.unwrapped.push((r, c));
        let bb = &mut out.bbox;
        *bb = (bb.0.min(r), bb.1.min(c), bb.2.max(r), bb.3.max(c));
    }
    Some(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Located {
    pub species: String,
    pub center: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnknownComponent {
    pub cells: usize,
    pub center: (usize, usize),
    pub total_liveness: f64,
}

/// What a grid contains, by species.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Inventory {
    pub species: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unknown: Vec<UnknownComponent>,
}

impl Inventory {
    pub fn count(&self, species: &str) -> usize {
        self.species.get(species).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.species.values().sum::<usize>() + self.unknown.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    /// Compact text form such as `qutub x4 + tub x1`.
    pub fn summary(&self) -> String {
        let mut parts: Vec<String> = self
            .species
            .iter()
            .map(|(name, n)| format!("{name} x{n}"))
            .collect();
        if !self.unknown.is_empty() {
            parts.push(format!("unknown x{}", self.unknown.len()));
        }
        if parts.is_empty() {
            "empty".into()
        } else {
            parts.join(" + ")
        }
    }
}

/// Built-in stamp patterns shipped under `data/patterns/`.
pub fn builtin_patterns() -> Vec<Pattern> {
    [
        include_str!("../data/patterns/tub.json"),
        include_str!("../data/patterns/block.json"),
        include_str!("../data/patterns/blinker.json"),
        include_str!("../data/patterns/qutub.json"),
    ]
    .iter()
    .map(|s| serde_json::from_str(s).expect("built-in pattern parses"))
    .collect()
}

pub fn builtin_pattern(name: &str) -> Option<Pattern> {
    builtin_patterns().into_iter().find(|p| p.name == name)
}

pub fn load_pattern(path: &std::path::Path) -> Result<Pattern> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let p: Pattern = serde_json::from_str(&text)?;
    p.validate()?;
    Ok(p)
}

/// Whether `grid` stays within `tolerance` of itself for `generations` steps.
pub fn is_fixed_point(
    grid: &Grid,
    rules: &RuleSet,
    policy: &NumericPolicy,
    generations: u64,
    tolerance: f64,
) -> bool {
    let mut evo = Evolution::new(grid.clone(), *rules, *policy).with_parallel(false);
    for _ in 0..generations {
        if evo.step().max_delta > tolerance {
            return false;
        }
    }
    evo.grid().max_abs_diff(grid) <= tolerance
}

/// How candidate amplitudes are generated for [`search_still_lifes`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Sampler {
    /// Every assignment of the listed levels to the box cells, in
    /// mixed-radix order (first cell varies fastest).
    Scan { levels: Vec<f64> },
    /// Independent draws: dead with `p_dead`, live with `p_live`, otherwise
    /// uniform on (0, 1).
    Random { seed: u64, p_dead: f64, p_live: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub rows: usize,
    pub cols: usize,
    pub sampler: Sampler,
    /// Maximum number of candidates examined.
    pub budget: usize,
    /// Generations a candidate must stay fixed.
    pub persistence: u64,
    pub tolerance: f64,
    pub rules: RuleSet,
    pub policy: NumericPolicy,
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 || self.rows > 6 || self.cols > 6 {
            return Err(Error::InvalidConfig(format!(
                "search box must be between 1x1 and 6x6, got {}x{}",
                self.rows, self.cols
            )));
        }
        match &self.sampler {
            Sampler::Scan { levels } => {
                if levels.is_empty() {
                    return Err(Error::InvalidConfig("scan sampler needs levels".into()));
                }
                for &l in levels {
                    check_amplitude(l, || "sampler level".into())?;
                }
            }
            Sampler::Random { p_dead, p_live, .. } => {
                if !(*p_dead >= 0.0 && *p_live >= 0.0 && p_dead + p_live <= 1.0) {
                    return Err(Error::InvalidConfig(
                        "random sampler probabilities must be nonnegative and sum to at most 1".into(),
                    ));
                }
            }
        }
        self.rules.validate()
    }

    fn candidate(&self, index: usize) -> Vec<f64> {
        let n = self.rows * self.cols;
        match &self.sampler {
            Sampler::Scan { levels } => {
                let mut k = index;
                (0..n)
                    .map(|_| {
                        let l = levels[k % levels.len()];
                        k /= levels.len();
                        l
                    })
                    .collect()
            }
            Sampler::Random { seed, p_dead, p_live } => {
                use rand::Rng;
                let mut rng = crate::seed::rng(seed.wrapping_add(index as u64));
                (0..n)
                    .map(|_| {
                        let u: f64 = rng.random();
                        if u < *p_dead {
                            0.0
                        } else if u < p_dead + p_live {
                            1.0
                        } else {
                            crate::seed::uniform_open(&mut rng, self.policy.precision)
                        }
                    })
                    .collect()
            }
        }
    }

    fn candidate_count(&self) -> usize {
        match &self.sampler {
            Sampler::Scan { levels } => {
                let n = (self.rows * self.cols) as u32;
                levels
                    .len()
                    .checked_pow(n)
                    .map_or(self.budget, |total| total.min(self.budget))
            }
            Sampler::Random { .. } => self.budget,
        }
    }
}

/// Sorted `(row, col, quantized a)` cells.
pub type CanonicalKey = Vec<(isize, isize, i64)>;

/// Canonical key of a pattern: amplitudes quantized to 1e-6, translated to
/// the origin, smallest over the dihedral group.
pub fn canonical_key(pattern: &Pattern) -> CanonicalKey {
    DIHEDRAL
        .iter()
        .map(|t| {
            let cells: Vec<_> = pattern
                .cells
                .iter()
                .filter(|c| c.a > 0.0)
                .map(|c| {
                    let (r, col) = t(c.row, c.col);
                    (r, col, (c.a * 1e6).round() as i64)
                })
                .collect();
            let r0 = cells.iter().map(|x| x.0).min().unwrap_or(0);
            let c0 = cells.iter().map(|x| x.1).min().unwrap_or(0);
            let mut k: Vec<_> = cells.iter().map(|&(r, c, q)| (r - r0, c - c0, q)).collect();
            k.sort_unstable();
            k
        })
        .min()
        .unwrap_or_default()
}

/// Candidate amplitude boxes that are fixed points on an otherwise dead grid,
/// deduplicated up to translation and symmetry and sorted by canonical key.
pub fn search_still_lifes(config: &SearchConfig) -> Result<Vec<Pattern>> {
    config.validate()?;
    let count = config.candidate_count();
    let examine = |i: usize| -> Option<(CanonicalKey, Pattern)> {
        let values = config.candidate(i);
        let cells: Vec<PatternCell> = values
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 0.0)
            .map(|(k, &a)| PatternCell {
                row: (k / config.cols) as isize,
                col: (k % config.cols) as isize,
                a: config.policy.precision.round(a),
            })
            .collect();
        if cells.is_empty() {
            return None;
        }
        let pattern = Pattern::new("candidate", cells).ok()?;
        let grid = Grid::new(config.cols + 6, config.rows + 6, config.policy.precision);
        let grid = stamp(&grid, &pattern, (3, 3)).ok()?;
        if !is_fixed_point(&grid, &config.rules, &config.policy, config.persistence, config.tolerance) {
            return None;
        }
        Some((canonical_key(&pattern), pattern))
    };
    let found: Vec<_> = map_indices(count, examine);
    let mut unique: BTreeMap<Vec<(isize, isize, i64)>, Pattern> = BTreeMap::new();
    for (key, pattern) in found.into_iter().flatten() {
        unique.entry(key).or_insert(pattern);
    }
    let index = SpeciesIndex::default();
    Ok(unique
        .into_values()
        .enumerate()
        .map(|(i, mut p)| {
            let g = centered(&p, config.cols + 6, config.rows + 6, config.policy.precision)
                .expect("pattern fits");
            let inv = index.inventory(&g);
            p.name = match (inv.species.iter().next(), inv.total()) {
                (Some((name, 1)), 1) => name.clone(),
                _ => format!("still-life-{i}"),
            };
            p
        })
        .collect())
}

/// Outcome of probing which analytic criterion predicts qutub stability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub samples: usize,
    pub stable: usize,
    /// Fraction of samples where "side pairs sum to at most 1" agrees with
    /// the simulation.
    pub adjacent_agreement: f64,
    /// Fraction where "diagonal pairs sum to at most 1" agrees.
    pub opposite_agreement: f64,
    pub winner: String,
}

/// Samples random corner amplitudes and checks fixed-pointness by simulation.
pub fn probe_qutub_stability(
    samples: usize,
    seed: u64,
    persistence: u64,
    rules: &RuleSet,
    policy: &NumericPolicy,
) -> Result<StabilityReport> {
    let tolerance = match policy.precision {
        Precision::Binary32 => 1e-6,
        Precision::Binary64 => 1e-12,
    };
    let specs: Vec<QutubSpec> = {
        let mut rng = crate::seed::rng(seed);
        (0..samples)
            .map(|_| {
                let mut d = || crate::seed::uniform_open(&mut rng, policy.precision);
                QutubSpec {
                    a1: d(),
                    a2: d(),
                    a3: d(),
                    a4: d(),
                }
            })
            .collect()
    };
    let verdicts: Vec<Result<(bool, bool, bool)>> = map_indices(samples, |i| {
        let spec = specs[i];
        let grid = centered(&make_qutub(spec)?, 12, 12, policy.precision)?;
        let stable = is_fixed_point(&grid, rules, policy, persistence, tolerance);
        Ok((
            stable,
            stable == spec.adjacent_pairs_bounded(),
            stable == spec.opposite_pairs_bounded(),
        ))
    });
    let mut stable = 0;
    let mut adjacent = 0;
    let mut opposite = 0;
    for v in verdicts {
        let (s, a, o) = v?;
        stable += s as usize;
        adjacent += a as usize;
        opposite += o as usize;
    }
    let n = samples.max(1) as f64;
    let (adjacent_agreement, opposite_agreement) = (adjacent as f64 / n, opposite as f64 / n);
    Ok(StabilityReport {
        samples,
        stable,
        adjacent_agreement,
        opposite_agreement,
        winner: if adjacent_agreement >= opposite_agreement {
            "adjacent-pairs".into()
        } else {
            "opposite-pairs".into()
        },
    })
}
