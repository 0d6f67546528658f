//! Flat run configuration: JSON file values overridden by command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use hitting_core::{Boundary, GammaPoly, GridSpec};

use crate::error::CliError;

/// Options shared by every command. Each may also come from `--config`.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// JSON config file; flags override its values
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Boundary, `s=<real>; fprime=<c0>,<c1>,...`
    #[arg(long, global = true, allow_hyphen_values = true)]
    #[serde(deserialize_with = "boundary_text", skip_serializing_if = "Option::is_none")]
    pub boundary: Option<String>,

    /// Grid, `tmin:tmax:nt,xmin:xmax:nx`
    #[arg(long, global = true, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,

    /// Gamma coefficients `c0,c1,...` of `sum c_n (-i lambda)^n`
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,

    /// Monte Carlo path count
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,

    /// Time steps per path
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,

    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    /// Worker threads; 1 gives bit-reproducible output
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,

    /// Antithetic path pairs
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub antithetic: Option<bool>,

    /// Starting distance to the boundary for `simulate`
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,

    /// Histogram bins for `simulate`
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,

    /// Fourier parameter for `transform`
    #[arg(long, global = true, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,

    /// Kernel times, a value or `a:b:step`
    #[arg(long, global = true, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<String>,

    /// Spatial points, a value or `a:b:step`
    #[arg(long, global = true, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<String>,

    /// Kernel orders
    #[arg(long, global = true, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,

    /// Asserted residual tolerance (relative)
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,

    /// Field CSV (`t,x,re,im`) to verify instead of the closed forms
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<PathBuf>,

    /// Sampled `u` for `transform`
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<PathBuf>,

    /// Sampled `Phi` for `transform`
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<PathBuf>,

    /// Command name; must match the subcommand when present
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
}

/// Accepts the boundary either as spec text or as `{"s": .., "fprime": [..]}`.
fn boundary_text<'de, D>(de: D) -> Result<Option<String>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    let v = Option::<Value>::deserialize(de)?;
    Ok(match v {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s),
        Some(other) => Some(other.to_string()),
    })
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($field:ident),*) => {
        $( if $dst.$field.is_none() { $dst.$field = $src.$field.clone(); } )*
    };
}

impl RunConfig {
    /// Reads `--config` (if any) and lets the flags win.
    pub fn resolve(mut self, command: &str) -> Result<Self, CliError> {
        if let Some(path) = self.config.clone() {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
            let file: RunConfig = serde_json::from_str(&text)
                .map_err(|e| CliError::usage(format!("bad config {}: {e}", path.display())))?;
            overlay!(self, file; out, boundary, grid, gamma, paths, steps, seed, threads, antithetic,
                x0, bins, lambda, t, x, n, tol, field, u, phi, command);
        }
        if let Some(c) = &self.command {
            if c != command {
                return Err(CliError::usage(format!(
                    "config selects command '{c}' but '{command}' was invoked"
                )));
            }
        }
        self.command = Some(command.to_string());
        Ok(self)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn boundary(&self) -> Result<Boundary, CliError> {
        let text = self
            .boundary
            .as_deref()
            .ok_or_else(|| CliError::usage("missing boundary spec (--boundary \"s=1; fprime=0\")"))?;
        Ok(Boundary::parse(text)?)
    }

    pub fn grid_or(&self, default: impl FnOnce() -> String) -> Result<GridSpec, CliError> {
        let text = self.grid.clone().unwrap_or_else(default);
        Ok(GridSpec::parse(&text)?)
    }

    pub fn gamma(&self) -> Result<GammaPoly, CliError> {
        Ok(GammaPoly::new(self.gamma.clone().unwrap_or_else(|| vec![1.0]))?)
    }

    pub fn write_sidecar(&self, dir: &Path) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(self).expect("config serializes");
        std::fs::write(dir.join("run_config.json"), json + "\n")?;
        Ok(())
    }
}

/// Parses a single value or an inclusive `a:b:step` range.
pub fn parse_range(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::usage(format!("expected a number or a:b:step, got '{text}'"));
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    match parts.as_slice() {
        [v] => Ok(vec![v.parse().map_err(|_| bad())?]),
        [a, b, step] => {
            let (a, b, step): (f64, f64, f64) = (
                a.parse().map_err(|_| bad())?,
                b.parse().map_err(|_| bad())?,
                step.parse().map_err(|_| bad())?,
            );
            if !(step > 0.0) || b < a {
                return Err(bad());
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|k| a + k as f64 * step).collect())
        }
        _ => Err(bad()),
    }
}
