//! Rectangular detection-plane maps and their CSV form.
//!
//! CSV layout: header `x_cm,y_cm,value`, then one row per grid point, y
//! outer and x inner (row-major), every number printed with six
//! significant digits.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("map shape mismatch: {nx} x {ny} grid with {len} values")]
    Shape { nx: usize, ny: usize, len: usize },
    #[error("map is empty")]
    Empty,
    #[error("CSV line {line}: {message}")]
    Csv { line: usize, message: String },
}

/// Values on a rectangular grid, stored row-major with y as the row index.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    xs: Vec<f64>,
    ys: Vec<f64>,
    values: Vec<f64>,
}

impl GridMap {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, values: Vec<f64>) -> Result<Self, MapError> {
        if xs.is_empty() || ys.is_empty() {
            return Err(MapError::Empty);
        }
        if xs.len() * ys.len() != values.len() {
            return Err(MapError::Shape { nx: xs.len(), ny: ys.len(), len: values.len() });
        }
        Ok(Self { xs, ys, values })
    }

    /// Samples `f(x, y)` on the grid.
    pub fn from_fn(xs: Vec<f64>, ys: Vec<f64>, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(xs.len() * ys.len());
        for &y in &ys {
            for &x in &xs {
                values.push(f(x, y));
            }
        }
        Self { xs, ys, values }
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nx(&self) -> usize {
        self.xs.len()
    }

    pub fn ny(&self) -> usize {
        self.ys.len()
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.xs.len() + ix]
    }

    /// Mean spacing along x and y.
    pub fn steps(&self) -> (f64, f64) {
        let step = |v: &[f64]| {
            if v.len() < 2 {
                0.0
            } else {
                (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64
            }
        };
        (step(&self.xs), step(&self.ys))
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Mirror image under y → −y.
    pub fn reflect_y(&self) -> Self {
        let ys: Vec<f64> = self.ys.iter().rev().map(|y| -y).collect();
        let nx = self.nx();
        let mut values = Vec::with_capacity(self.values.len());
        for iy in (0..self.ny()).rev() {
            values.extend_from_slice(&self.values[iy * nx..(iy + 1) * nx]);
        }
        Self { xs: self.xs.clone(), ys, values }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x_cm,y_cm,value\n");
        for (iy, &y) in self.ys.iter().enumerate() {
            for (ix, &x) in self.xs.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{}",
                    format_sig6(x),
                    format_sig6(y),
                    format_sig6(self.get(ix, iy))
                );
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, MapError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == "x_cm,y_cm,value" => {}
            _ => {
                return Err(MapError::Csv { line: 1, message: "expected header x_cm,y_cm,value".into() })
            }
        }
        let mut rows = Vec::new();
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(MapError::Csv { line: idx + 1, message: "expected 3 fields".into() });
            }
            let mut parsed = [0.0; 3];
            for (slot, field) in parsed.iter_mut().zip(&fields) {
                *slot = field.trim().parse().map_err(|_| MapError::Csv {
                    line: idx + 1,
                    message: format!("not a number: {field:?}"),
                })?;
            }
            rows.push(parsed);
        }
        if rows.is_empty() {
            return Err(MapError::Empty);
        }
        let ny = rows.iter().filter(|r| r[0] == rows[0][0]).count();
        let nx = rows.len() / ny.max(1);
        if nx * ny != rows.len() {
            return Err(MapError::Shape { nx, ny, len: rows.len() });
        }
        let xs: Vec<f64> = rows[..nx].iter().map(|r| r[0]).collect();
        let ys: Vec<f64> = rows.iter().step_by(nx).map(|r| r[1]).collect();
        for (k, row) in rows.iter().enumerate() {
            if row[0] != xs[k % nx] || row[1] != ys[k / nx] {
                return Err(MapError::Csv {
                    line: k + 2,
                    message: "rows are not a row-major rectangular grid".into(),
                });
            }
        }
        let values = rows.iter().map(|r| r[2]).collect();
        Self::new(xs, ys, values)
    }
}

/// Fixed-point rendering with six significant digits.
pub fn format_sig6(value: f64) -> String {
    if value == 0.0 || !value.is_finite() {
        return if value.is_finite() { "0.00000".to_string() } else { value.to_string() };
    }
    let exponent = value.abs().log10().floor() as i32;
    let decimals = (5 - exponent).max(0) as usize;
    let text = format!("{value:.decimals$}");
    if text.trim_start_matches('-').trim_start_matches(['0', '.']).is_empty() {
        "0.00000".to_string()
    } else {
        text
    }
}

/// Rounds to the value that [`format_sig6`] would print.
pub fn snap_sig6(value: f64) -> f64 {
    format_sig6(value).parse().unwrap_or(value)
}
