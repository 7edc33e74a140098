//! Regular grid layout and the ASCII raster format shared by terrain
//! snapshots and sensing maps.
//!
//! Rasters use the ESRI ASCII grid layout: a six-line header
//! (`ncols`, `nrows`, `xllcorner`, `yllcorner`, `cellsize`, `NODATA_value`)
//! followed by one text line per row, northernmost row first. Cells are
//! indexed internally with row 0 at the southern edge.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Marker written for cells that carry no data.
pub const NODATA: f64 = -9999.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub cols: usize,
    pub rows: usize,
    pub cell_size: f64,
    /// Lower-left corner of the grid, m.
    pub origin: (f64, f64),
}

impl GridSpec {
    pub fn new(cols: usize, rows: usize, cell_size: f64, origin: (f64, f64)) -> Result<Self> {
        if cols == 0 || rows == 0 || !(cell_size > 0.0) {
            return Err(Error::Config(format!(
                "grid must have positive size, got {cols}x{rows} @ {cell_size}"
            )));
        }
        Ok(Self {
            cols,
            rows,
            cell_size,
            origin,
        })
    }

    /// Square grid of side `extent` centred on `center`.
    pub fn centered(center: (f64, f64), extent: f64, cell_size: f64) -> Result<Self> {
        let n = (extent / cell_size).ceil().max(1.0) as usize;
        let half = n as f64 * cell_size / 2.0;
        Self::new(n, n, cell_size, (center.0 - half, center.1 - half))
    }

    pub fn len(&self) -> usize {
        self.cols * self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_size * self.cell_size
    }

    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.cols + col
    }

    pub fn col_row(&self, idx: usize) -> (usize, usize) {
        (idx % self.cols, idx / self.cols)
    }

    pub fn cell_of(&self, x: f64, y: f64) -> Option<usize> {
        let c = ((x - self.origin.0) / self.cell_size).floor();
        let r = ((y - self.origin.1) / self.cell_size).floor();
        if c < 0.0 || r < 0.0 || c >= self.cols as f64 || r >= self.rows as f64 {
            return None;
        }
        Some(self.index(c as usize, r as usize))
    }

    pub fn center(&self, idx: usize) -> (f64, f64) {
        let (c, r) = self.col_row(idx);
        (
            self.origin.0 + (c as f64 + 0.5) * self.cell_size,
            self.origin.1 + (r as f64 + 0.5) * self.cell_size,
        )
    }

    /// Eight-neighbourhood in fixed order with centre-to-centre distance.
    pub fn neighbors(&self, idx: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        const OFFS: [(isize, isize); 8] = [
            (-1, -1),
            (0, -1),
            (1, -1),
            (-1, 0),
            (1, 0),
            (-1, 1),
            (0, 1),
            (1, 1),
        ];
        let (c, r) = self.col_row(idx);
        let cs = self.cell_size;
        OFFS.iter().filter_map(move |&(dc, dr)| {
            let nc = c as isize + dc;
            let nr = r as isize + dr;
            if nc < 0 || nr < 0 || nc >= self.cols as isize || nr >= self.rows as isize {
                return None;
            }
            let d = if dc != 0 && dr != 0 {
                cs * std::f64::consts::SQRT_2
            } else {
                cs
            };
            Some((self.index(nc as usize, nr as usize), d))
        })
    }
}

/// Format with 9 significant digits, plain notation for moderate exponents.
pub fn fmt9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.8e}", x);
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, x);
        trim_zeros(s)
    } else {
        format!("{}e{}", trim_zeros(mant.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        if t == "-0" {
            "0".into()
        } else {
            t.to_string()
        }
    } else {
        s
    }
}

/// Serialize cell values; `None` becomes [`NODATA`].
pub fn write_ascii(spec: &GridSpec, values: &[Option<f64>]) -> String {
    assert_eq!(values.len(), spec.len(), "value count must match grid");
    let mut out = String::new();
    let _ = writeln!(out, "ncols {}", spec.cols);
    let _ = writeln!(out, "nrows {}", spec.rows);
    let _ = writeln!(out, "xllcorner {}", fmt9(spec.origin.0));
    let _ = writeln!(out, "yllcorner {}", fmt9(spec.origin.1));
    let _ = writeln!(out, "cellsize {}", fmt9(spec.cell_size));
    let _ = writeln!(out, "NODATA_value {}", fmt9(NODATA));
    for r in (0..spec.rows).rev() {
        let row: Vec<String> = (0..spec.cols)
            .map(|c| fmt9(values[spec.index(c, r)].unwrap_or(NODATA)))
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Parse an ASCII raster written by [`write_ascii`] (or any ESRI grid with
/// corner registration).
pub fn read_ascii(text: &str) -> Result<(GridSpec, Vec<Option<f64>>)> {
    let mut lines = text.lines().enumerate();
    let mut header = std::collections::HashMap::new();
    for _ in 0..6 {
        let (n, line) = lines
            .next()
            .ok_or_else(|| Error::Config("raster: truncated header".into()))?;
        let mut parts = line.split_whitespace();
        let (Some(k), Some(v)) = (parts.next(), parts.next()) else {
            return Err(Error::Config(format!("raster line {}: bad header", n + 1)));
        };
        let v: f64 = v
            .parse()
            .map_err(|_| Error::Config(format!("raster line {}: bad number '{v}'", n + 1)))?;
        header.insert(k.to_ascii_lowercase(), v);
    }
    let get = |k: &str| {
        header
            .get(k)
            .copied()
            .ok_or_else(|| Error::Config(format!("raster: missing '{k}'")))
    };
    let spec = GridSpec::new(
        get("ncols")? as usize,
        get("nrows")? as usize,
        get("cellsize")?,
        (get("xllcorner")?, get("yllcorner")?),
    )?;
    let nodata = get("nodata_value").unwrap_or(NODATA);
    let mut values = vec![None; spec.len()];
    for i in 0..spec.rows {
        let (n, line) = lines
            .next()
            .ok_or_else(|| Error::Config(format!("raster: expected {} rows", spec.rows)))?;
        let r = spec.rows - 1 - i;
        let nums: Vec<&str> = line.split_whitespace().collect();
        if nums.len() != spec.cols {
            return Err(Error::Config(format!(
                "raster line {}: expected {} values, got {}",
                n + 1,
                spec.cols,
                nums.len()
            )));
        }
        for (c, s) in nums.iter().enumerate() {
            let v: f64 = s
                .parse()
                .map_err(|_| Error::Config(format!("raster line {}: bad number '{s}'", n + 1)))?;
            values[spec.index(c, r)] = (v != nodata).then_some(v);
        }
    }
    Ok((spec, values))
}
