//! Rectangular `(t, x)` grids, sampled fields and potentials.

use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::Boundary;
use crate::error::{Error, Result};

/// Formats a number with 17 significant digits, locale-free.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

/// Uniform tensor grid over `[t_min, t_max] x [x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub nt: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    /// Original `nx` when [`GridSpec::with_odd_nx`] had to round it up.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nx_rounded_from: Option<usize>,
}

impl GridSpec {
    pub fn new(t_min: f64, t_max: f64, nt: usize, x_min: f64, x_max: f64, nx: usize) -> Result<Self> {
        if nt < 3 || nx < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 nodes per axis, got {nt}x{nx}"
            )));
        }
        if ![t_min, t_max, x_min, x_max].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite bounds".into()));
        }
        if !(t_max > t_min) || !(x_max > x_min) {
            return Err(Error::InvalidGrid(format!(
                "empty range t:[{t_min}, {t_max}] x:[{x_min}, {x_max}]"
            )));
        }
        Ok(Self {
            t_min,
            t_max,
            nt,
            x_min,
            x_max,
            nx,
            nx_rounded_from: None,
        })
    }

    /// Grid with `nx` rounded up to odd, as composite Simpson needs.
    pub fn with_odd_nx(mut self) -> Self {
        if self.nx.is_multiple_of(2) {
            self.nx_rounded_from = Some(self.nx);
            self.nx += 1;
        }
        self
    }

    /// Parses `tmin:tmax:nt,xmin:xmax:nx`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || Error::InvalidGrid(format!("expected tmin:tmax:nt,xmin:xmax:nx, got '{spec}'"));
        let compact: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
        let (tp, xp) = compact.split_once(',').ok_or_else(bad)?;
        let axis = |p: &str| -> Result<(f64, f64, usize)> {
            let parts: Vec<&str> = p.split(':').collect();
            if parts.len() != 3 {
                return Err(bad());
            }
            Ok((
                parts[0].parse().map_err(|_| bad())?,
                parts[1].parse().map_err(|_| bad())?,
                parts[2].parse().map_err(|_| bad())?,
            ))
        };
        let (t0, t1, nt) = axis(tp)?;
        let (x0, x1, nx) = axis(xp)?;
        Self::new(t0, t1, nt, x0, x1, nx)
    }

    pub fn dt(&self) -> f64 {
        (self.t_max - self.t_min) / (self.nt - 1) as f64
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        if i == self.nt - 1 {
            self.t_max
        } else {
            self.t_min + self.dt() * i as f64
        }
    }

    pub fn x(&self, j: usize) -> f64 {
        if j == self.nx - 1 {
            self.x_max
        } else {
            self.x_min + self.dx() * j as f64
        }
    }

    pub fn len(&self) -> usize {
        self.nt * self.nx
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Same nodes, ignoring the rounding record.
    pub fn same_nodes(&self, other: &GridSpec) -> bool {
        self.nt == other.nt
            && self.nx == other.nx
            && self.t_min == other.t_min
            && self.t_max == other.t_max
            && self.x_min == other.x_min
            && self.x_max == other.x_max
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{},{}:{}:{}",
            self.t_min, self.t_max, self.nt, self.x_min, self.x_max, self.nx
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Real,
    Complex,
}

/// Values sampled on a [`GridSpec`], indexed `[t_index, x_index]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    spec: GridSpec,
    values: Array2<Complex64>,
    kind: FieldKind,
}

impl GridField {
    pub fn from_values(spec: GridSpec, values: Array2<Complex64>, kind: FieldKind) -> Result<Self> {
        if values.dim() != (spec.nt, spec.nx) {
            return Err(Error::GridMismatch);
        }
        let mut values = values;
        if kind == FieldKind::Real {
            if values.iter().any(|v| v.im != 0.0) {
                return Err(Error::ComplexField);
            }
            // normalize -0.0
            values.mapv_inplace(|v| Complex64::new(v.re, 0.0));
        }
        Ok(Self { spec, values, kind })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            values: Array2::zeros((spec.nt, spec.nx)),
            kind: FieldKind::Real,
        }
    }

    /// Samples a real function in parallel.
    pub fn from_real_fn<F>(spec: GridSpec, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Result<f64> + Sync,
    {
        Self::build(spec, FieldKind::Real, |t, x| f(t, x).map(|v| Complex64::new(v, 0.0)))
    }

    /// Samples a complex function in parallel.
    pub fn from_complex_fn<F>(spec: GridSpec, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Result<Complex64> + Sync,
    {
        Self::build(spec, FieldKind::Complex, f)
    }

    fn build<F>(spec: GridSpec, kind: FieldKind, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Result<Complex64> + Sync,
    {
        let flat = (0..spec.len())
            .into_par_iter()
            .map(|k| f(spec.t(k / spec.nx), spec.x(k % spec.nx)))
            .collect::<Result<Vec<_>>>()?;
        let values = Array2::from_shape_vec((spec.nt, spec.nx), flat).expect("length matches grid");
        Ok(Self { spec, values, kind })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[[i, j]]
    }

    pub fn real_part(&self) -> GridField {
        Self {
            spec: self.spec,
            values: self.values.mapv(|v| Complex64::new(v.re, 0.0)),
            kind: FieldKind::Real,
        }
    }

    pub fn imag_part(&self) -> GridField {
        Self {
            spec: self.spec,
            values: self.values.mapv(|v| Complex64::new(v.im, 0.0)),
            kind: FieldKind::Real,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Largest `|self - other|` over the grid.
    pub fn max_abs_diff(&self, other: &GridField) -> Result<f64> {
        if !self.spec.same_nodes(&other.spec) {
            return Err(Error::GridMismatch);
        }
        Ok(Zip::from(&self.values)
            .and(&other.values)
            .fold(0.0f64, |m, a, b| m.max((a - b).norm())))
    }

    /// Writes `t,x,re,im` rows, row-major in `t`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,x,re,im")?;
        for i in 0..self.spec.nt {
            let t = format_number(self.spec.t(i));
            for j in 0..self.spec.nx {
                let v = self.values[[i, j]];
                writeln!(
                    w,
                    "{t},{},{},{}",
                    format_number(self.spec.x(j)),
                    format_number(v.re),
                    format_number(v.im)
                )?;
            }
        }
        Ok(())
    }

    /// Reads the format of [`GridField::write_csv`], checking that the nodes
    /// form a uniform grid to within `1e-12`.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Csv("empty input".into()))??;
        if header.trim() != "t,x,re,im" {
            return Err(Error::Csv(format!("unexpected header '{}'", header.trim())));
        }
        let mut rows: Vec<[f64; 4]> = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut row = [0.0; 4];
            let mut parts = line.split(',');
            for slot in row.iter_mut() {
                let p = parts
                    .next()
                    .ok_or_else(|| Error::Csv(format!("line {}: expected 4 columns", n + 2)))?;
                *slot = p
                    .trim()
                    .parse()
                    .map_err(|_| Error::Csv(format!("line {}: bad number '{p}'", n + 2)))?;
            }
            if parts.next().is_some() {
                return Err(Error::Csv(format!("line {}: expected 4 columns", n + 2)));
            }
            rows.push(row);
        }
        let first_t = rows.first().ok_or_else(|| Error::Csv("no data rows".into()))?[0];
        let nx = rows.iter().take_while(|r| r[0] == first_t).count();
        if nx == 0 || !rows.len().is_multiple_of(nx) {
            return Err(Error::Csv("rows do not form a rectangular grid".into()));
        }
        let nt = rows.len() / nx;
        let spec = GridSpec::new(first_t, rows[(nt - 1) * nx][0], nt, rows[0][1], rows[nx - 1][1], nx)
            .map_err(|e| Error::Csv(e.to_string()))?;

        let tol = 1e-12;
        let mut values = Array2::zeros((nt, nx));
        let mut complex = false;
        for (k, row) in rows.iter().enumerate() {
            let (i, j) = (k / nx, k % nx);
            let t_err = (row[0] - spec.t(i)).abs();
            let x_err = (row[1] - spec.x(j)).abs();
            if t_err > tol * (1.0 + row[0].abs()) || x_err > tol * (1.0 + row[1].abs()) {
                return Err(Error::Csv(format!(
                    "node ({}, {}) at row {} is off the uniform grid",
                    row[0],
                    row[1],
                    k + 2
                )));
            }
            complex |= row[3] != 0.0;
            values[[i, j]] = Complex64::new(row[2], row[3]);
        }
        let kind = if complex { FieldKind::Complex } else { FieldKind::Real };
        Ok(Self { spec, values, kind })
    }
}

/// Potential `V(t, x)` of a backward or adjoint equation.
#[derive(Clone)]
pub enum Potential {
    Zero,
    /// `V(t, x) = x f''(t)`.
    MovingBoundary(Boundary),
    /// Values sampled on the grid of the field being checked.
    Sampled(GridField),
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Zero => f.write_str("Zero"),
            Potential::MovingBoundary(b) => f.debug_tuple("MovingBoundary").field(b).finish(),
            Potential::Sampled(g) => f.debug_tuple("Sampled").field(g.spec()).finish(),
            Potential::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Potential {
    /// Value at grid node `(i, j)` of `spec`.
    pub fn at(&self, spec: &GridSpec, i: usize, j: usize) -> Complex64 {
        let (t, x) = (spec.t(i), spec.x(j));
        match self {
            Potential::Zero => Complex64::new(0.0, 0.0),
            Potential::MovingBoundary(b) => Complex64::new(x * b.eval_fsecond(t), 0.0),
            Potential::Sampled(g) => g.get(i, j),
            Potential::Custom(f) => Complex64::new(f(t, x), 0.0),
        }
    }

    pub fn check_grid(&self, spec: &GridSpec) -> Result<()> {
        match self {
            Potential::Sampled(g) if !g.spec().same_nodes(spec) => Err(Error::GridMismatch),
            _ => Ok(()),
        }
    }

    /// Samples the potential on `spec`.
    pub fn sample(&self, spec: GridSpec) -> Result<GridField> {
        self.check_grid(&spec)?;
        let values = Array2::from_shape_fn((spec.nt, spec.nx), |(i, j)| self.at(&spec, i, j));
        let kind = if values.iter().any(|v| v.im != 0.0) {
            FieldKind::Complex
        } else {
            FieldKind::Real
        };
        Ok(GridField { spec, values, kind })
    }
}
