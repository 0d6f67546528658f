//! The moving boundary `f`, represented through its derivative `f'` as a
//! polynomial in time.
//!
//! Every closed form in this crate only needs `f'`, `f''` and the definite
//! integrals of `f'` and `(f')^2`, so `f` itself is never stored. Keeping
//! `f'` polynomial makes all of those exact.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum polynomial degree accepted for `f'`.
pub const MAX_DEGREE: usize = 16;

/// Horner evaluation of `sum c_j t^j`.
fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

/// Coefficients of the antiderivative vanishing at 0.
fn antiderivative(coeffs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(coeffs.len() + 1);
    out.push(0.0);
    out.extend(coeffs.iter().enumerate().map(|(j, &c)| c / (j + 1) as f64));
    out
}

fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs.iter().enumerate().skip(1).map(|(j, &c)| c * j as f64).collect()
}

fn square(coeffs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; 2 * coeffs.len() - 1];
    for (i, &a) in coeffs.iter().enumerate() {
        for (j, &b) in coeffs.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct BoundaryRepr {
    s: f64,
    fprime: Vec<f64>,
}

/// Moving boundary with `f'(t) = sum_j c_j t^j` on the horizon `[0, s]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoundaryRepr", into = "BoundaryRepr")]
pub struct Boundary {
    deriv_coeffs: Vec<f64>,
    horizon_s: f64,
    second: Vec<f64>,
    anti: Vec<f64>,
    anti_sq: Vec<f64>,
}

impl TryFrom<BoundaryRepr> for Boundary {
    type Error = Error;

    fn try_from(repr: BoundaryRepr) -> Result<Self> {
        Boundary::new(repr.fprime, repr.s)
    }
}

impl From<Boundary> for BoundaryRepr {
    fn from(b: Boundary) -> Self {
        BoundaryRepr {
            s: b.horizon_s,
            fprime: b.deriv_coeffs,
        }
    }
}

impl Boundary {
    /// Builds a boundary from ascending-degree coefficients of `f'`.
    ///
    /// An empty coefficient list is read as `f' = 0`.
    pub fn new(deriv_coeffs: Vec<f64>, horizon_s: f64) -> Result<Self> {
        if !(horizon_s > 0.0) || !horizon_s.is_finite() {
            return Err(Error::NonPositiveHorizon(horizon_s));
        }
        let deriv_coeffs = if deriv_coeffs.is_empty() {
            vec![0.0]
        } else {
            deriv_coeffs
        };
        if deriv_coeffs.len() - 1 > MAX_DEGREE {
            return Err(Error::DegreeTooHigh(deriv_coeffs.len() - 1));
        }
        if let Some(c) = deriv_coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::BoundaryParse(format!("non-finite coefficient {c}")));
        }
        Ok(Self {
            second: derivative(&deriv_coeffs),
            anti: antiderivative(&deriv_coeffs),
            anti_sq: antiderivative(&square(&deriv_coeffs)),
            deriv_coeffs,
            horizon_s,
        })
    }

    /// Flat boundary, `f' = 0`.
    pub fn constant(horizon_s: f64) -> Result<Self> {
        Self::new(vec![0.0], horizon_s)
    }

    /// Parses `s=<real>; fprime=<c0>,<c1>,...` or the JSON form
    /// `{"s": real, "fprime": [reals]}`.
    pub fn parse(spec: &str) -> Result<Self> {
        let trimmed = spec.trim();
        if trimmed.starts_with('{') {
            return serde_json::from_str(trimmed).map_err(|e| match e.classify() {
                // serde_json wraps our own validation errors as `data` errors
                serde_json::error::Category::Data if e.to_string().contains("horizon") => {
                    Error::NonPositiveHorizon(extract_horizon(trimmed))
                }
                _ => Error::BoundaryParse(e.to_string()),
            });
        }

        let compact: String = trimmed.chars().filter(|c| !c.is_whitespace()).collect();
        let mut horizon = None;
        let mut coeffs = None;
        for part in compact.split(';').filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::BoundaryParse(format!("expected key=value, got '{part}'")))?;
            match key {
                "s" => {
                    let s = value
                        .parse::<f64>()
                        .map_err(|_| Error::BoundaryParse(format!("bad horizon '{value}'")))?;
                    horizon = Some(s);
                }
                "fprime" => {
                    let cs = value
                        .split(',')
                        .map(|c| {
                            c.parse::<f64>()
                                .map_err(|_| Error::BoundaryParse(format!("bad coefficient '{c}'")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    coeffs = Some(cs);
                }
                other => return Err(Error::BoundaryParse(format!("unknown key '{other}'"))),
            }
        }
        let horizon = horizon.ok_or_else(|| Error::BoundaryParse("missing 's'".into()))?;
        let coeffs = coeffs.ok_or_else(|| Error::BoundaryParse("missing 'fprime'".into()))?;
        Self::new(coeffs, horizon)
    }

    pub fn deriv_coeffs(&self) -> &[f64] {
        &self.deriv_coeffs
    }

    /// Terminal time `s`.
    pub fn horizon(&self) -> f64 {
        self.horizon_s
    }

    pub fn degree(&self) -> usize {
        self.deriv_coeffs.len() - 1
    }

    /// `f'(t)`.
    pub fn eval_fprime(&self, t: f64) -> f64 {
        horner(&self.deriv_coeffs, t)
    }

    /// `f''(t)`.
    pub fn eval_fsecond(&self, t: f64) -> f64 {
        horner(&self.second, t)
    }

    /// `int_a^c f'(u) du`.
    pub fn integral_fprime(&self, a: f64, c: f64) -> f64 {
        horner(&self.anti, c) - horner(&self.anti, a)
    }

    /// `int_a^c f'(u)^2 du`.
    pub fn integral_fprime_sq(&self, a: f64, c: f64) -> f64 {
        horner(&self.anti_sq, c) - horner(&self.anti_sq, a)
    }

    /// True when `f''` vanishes identically.
    pub fn is_linear(&self) -> bool {
        self.second.iter().all(|&c| c == 0.0)
    }

    /// Position `x0 + int_0^t f'(u) du` of a level started at `x0`.
    pub fn level(&self, x0: f64, t: f64) -> f64 {
        x0 + self.integral_fprime(0.0, t)
    }
}

fn extract_horizon(json: &str) -> f64 {
    serde_json::from_str::<serde_json::Value>(json)
        .ok()
        .and_then(|v| v.get("s").and_then(|s| s.as_f64()))
        .unwrap_or(f64::NAN)
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s={}; fprime=", self.horizon_s)?;
        for (i, c) in self.deriv_coeffs.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}
