//! Snapshot files.
//!
//! The text format is lossless. Its first line is
//! `width height generation precision`, followed by `height` lines of
//! `width` whitespace-separated liveness values written with enough
//! significant digits to reproduce every bit (`0` and `1` are written
//! bare). PGM output is a 16-bit binary (`P5`) image with
//! `pixel = round((1 - a) * 65535)`, so dead cells are white; it is for
//! display and loses precision.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::numeric::Precision;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnapshotFormat {
    Text,
    Pgm,
}

impl SnapshotFormat {
    pub fn extension(self) -> &'static str {
        match self {
            SnapshotFormat::Text => "txt",
            SnapshotFormat::Pgm => "pgm",
        }
    }
}

impl FromStr for SnapshotFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" | "txt" => Ok(SnapshotFormat::Text),
            "pgm" => Ok(SnapshotFormat::Pgm),
            _ => Err(Error::InvalidConfig(format!("unknown snapshot format `{s}`"))),
        }
    }
}

pub fn format_cell(precision: Precision, a: f64) -> String {
    if a == 0.0 {
        "0".into()
    } else if a == 1.0 {
        "1".into()
    } else {
        precision.format(a)
    }
}

pub fn snapshot_text(grid: &Grid) -> String {
    let mut s = format!(
        "{} {} {} {}\n",
        grid.width(),
        grid.height(),
        grid.generation(),
        grid.precision()
    );
    for row in grid.liveness().chunks(grid.width()) {
        for (i, &a) in row.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            s.push_str(&format_cell(grid.precision(), a));
        }
        s.push('\n');
    }
    s
}

pub fn parse_snapshot_text(text: &str) -> Result<Grid> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, 1, "empty snapshot"))?;
    let fields = tokens(header);
    if fields.len() != 4 {
        return Err(Error::parse(1, 1, "header must be `width height generation precision`"));
    }
    let number = |k: usize| -> Result<u64> {
        let (col, tok) = fields[k];
        tok.parse()
            .map_err(|_| Error::parse(1, col, format!("`{tok}` is not a nonnegative integer")))
    };
    let width = number(0)? as usize;
    let height = number(1)? as usize;
    let generation = number(2)?;
    let (pcol, ptok) = fields[3];
    let precision: Precision = ptok
        .parse()
        .map_err(|_| Error::parse(1, pcol, format!("unknown precision `{ptok}`")))?;
    if width == 0 || height == 0 {
        return Err(Error::parse(1, 1, "grid dimensions must be positive"));
    }

    let mut cells = Vec::with_capacity(width * height);
    let mut last_line = 1;
    for r in 0..height {
        let Some((line_no, line)) = lines.next() else {
            return Err(Error::parse(
                last_line + 1,
                1,
                format!("unexpected end of file: expected {height} rows, found {r}"),
            ));
        };
        last_line = line_no;
        let values = tokens(line);
        if values.len() < width {
            return Err(Error::parse(
                line_no,
                line.len() + 1,
                format!("expected {width} values, found {}", values.len()),
            ));
        }
        if values.len() > width {
            return Err(Error::DimensionMismatch {
                expected: format!("{width} values on line {line_no}"),
                found: values.len().to_string(),
            });
        }
        for (col, tok) in values {
            let a = precision
                .parse(tok)
                .map_err(|_| Error::parse(line_no, col, format!("`{tok}` is not a number")))?;
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::parse(line_no, col, format!("liveness {tok} is outside [0, 1]")));
            }
            cells.push(a);
        }
    }
    if let Some((line_no, _)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::DimensionMismatch {
            expected: format!("{height} rows"),
            found: format!("extra data on line {line_no}"),
        });
    }
    let mut grid = Grid::from_liveness(width, height, precision, cells)?;
    grid.set_generation(generation);
    Ok(grid)
}

/// Whitespace-separated tokens with their 1-based byte columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push((s + 1, &line[s..i]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

pub const PGM_MAXVAL: u16 = 65535;

pub fn pgm_bytes(grid: &Grid) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", grid.width(), grid.height(), PGM_MAXVAL).into_bytes();
    out.reserve(grid.len() * 2);
    for &a in grid.liveness() {
        let v = ((1.0 - a) * PGM_MAXVAL as f64).round() as u16;
        out.extend_from_slice(&v.to_be_bytes());
    }
    out
}

/// Reads a 16-bit `P5` image back into a grid (`a = 1 - pixel / maxval`).
pub fn parse_pgm(bytes: &[u8], precision: Precision) -> Result<Grid> {
    let mut pos = 0;
    let mut field = |what: &str| -> Result<usize> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let tok = std::str::from_utf8(&bytes[start..pos]).unwrap_or("");
        if what == "magic" {
            return if tok == "P5" {
                Ok(0)
            } else {
                Err(Error::parse(1, 1, "not a binary PGM (P5) file"))
            };
        }
        tok.parse()
            .map_err(|_| Error::parse(1, start + 1, format!("bad PGM {what} `{tok}`")))
    };
    field("magic")?;
    let width = field("width")?;
    let height = field("height")?;
    let maxval = field("maxval")?;
    // Exactly one whitespace byte separates the header from the raster.
    let raster = pos + 1;
    if maxval != PGM_MAXVAL as usize {
        return Err(Error::parse(1, 1, format!("expected maxval {PGM_MAXVAL}, found {maxval}")));
    }
    if width == 0 || height == 0 {
        return Err(Error::parse(1, 1, "PGM dimensions must be positive"));
    }
    let data = bytes.get(raster..).unwrap_or(&[]);
    if data.len() != width * height * 2 {
        return Err(Error::DimensionMismatch {
            expected: format!("{} raster bytes", width * height * 2),
            found: data.len().to_string(),
        });
    }
    let cells = data
        .chunks_exact(2)
        .map(|b| 1.0 - u16::from_be_bytes([b[0], b[1]]) as f64 / PGM_MAXVAL as f64)
        .collect();
    Grid::from_liveness(width, height, precision, cells)
}

pub fn save_snapshot(grid: &Grid, path: &Path, format: SnapshotFormat) -> Result<()> {
    let bytes = match format {
        SnapshotFormat::Text => snapshot_text(grid).into_bytes(),
        SnapshotFormat::Pgm => pgm_bytes(grid),
    };
    write_file(path, &bytes)
}

/// Loads a text snapshot, or a PGM (as binary32) when the file starts with `P5`.
pub fn load_snapshot(path: &Path) -> Result<Grid> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"P5") {
        return parse_pgm(&bytes, Precision::Binary32);
    }
    let text = String::from_utf8(bytes).map_err(|e| {
        Error::parse(1, e.utf8_error().valid_up_to() + 1, "snapshot is not valid UTF-8")
    })?;
    parse_snapshot_text(&text)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// `generation,mean_liveness` rows.
pub fn series_csv(series: &[f64], first_generation: u64) -> String {
    let mut s = String::from("generation,mean_liveness\n");
    for (k, m) in series.iter().enumerate() {
        let _ = writeln!(s, "{},{}", first_generation + k as u64, m);
    }
    s
}
