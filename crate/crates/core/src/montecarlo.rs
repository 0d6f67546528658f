//! Monte Carlo cross-checks: first-passage times of Brownian motion to the
//! moving level `x0 + int_0^t f'`, and a Feynman-Kac estimator driven by a
//! three-dimensional Bessel bridge.
//!
//! Every path draws from its own ChaCha8 stream keyed by `(seed, path)`, so
//! results do not depend on how paths are spread over threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::boundary::Boundary;
use crate::error::{Error, Result};
use crate::kernels::{derived_kernel, heat_kernel};
use crate::quadrature::simpson;

/// Exponents above this make the bridge crossing probability negligible
/// (`exp(-40) ~ 4e-18`), so no uniform is drawn.
const BRIDGE_EXPONENT_CUTOFF: f64 = 40.0;

/// Number of bins used by [`compare_density`].
pub const DEFAULT_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MCConfig {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    #[serde(default)]
    pub antithetic: bool,
}

impl MCConfig {
    pub fn new(n_paths: usize, n_steps: usize, seed: u64) -> Self {
        Self {
            n_paths,
            n_steps,
            seed,
            antithetic: false,
        }
    }

    pub fn antithetic(mut self, on: bool) -> Self {
        self.antithetic = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::InvalidConfig("n_paths must be at least 1".into()));
        }
        if self.n_steps < 2 {
            return Err(Error::InvalidConfig("n_steps must be at least 2".into()));
        }
        if self.antithetic && !self.n_paths.is_multiple_of(2) {
            return Err(Error::InvalidConfig(
                "antithetic sampling needs an even path count".into(),
            ));
        }
        Ok(())
    }

    /// `(stream index, sign)` for path `p`. Antithetic partners share a stream.
    fn stream(&self, p: usize) -> (u64, f64) {
        if self.antithetic {
            ((p / 2) as u64, if p.is_multiple_of(2) { 1.0 } else { -1.0 })
        } else {
            (p as u64, 1.0)
        }
    }
}

fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mean and standard error of a Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
}

/// Empirical first-passage masses per time bin over `[0, s]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityHistogram {
    pub bin_edges: Vec<f64>,
    pub masses: Vec<f64>,
    pub counts: Vec<u64>,
    pub n_crossed: u64,
    pub n_total: u64,
}

impl DensityHistogram {
    pub fn n_bins(&self) -> usize {
        self.masses.len()
    }

    pub fn crossed_fraction(&self) -> f64 {
        self.n_crossed as f64 / self.n_total as f64
    }
}

/// First-crossing time of one Euler path, or `None` if it stays below the
/// level over `[0, s]`.
fn first_crossing(levels: &[f64], dt: f64, cfg: &MCConfig, p: usize) -> Option<f64> {
    let (stream, sign) = cfg.stream(p);
    let mut normals = path_rng(cfg.seed, 2 * stream);
    let mut uniforms = path_rng(cfg.seed, 2 * stream + 1);
    let sqdt = dt.sqrt();
    let mut w = 0.0;
    for i in 0..levels.len() - 1 {
        let z: f64 = normals.sample(StandardNormal);
        let next = w + sign * sqdt * z;
        let below_end = levels[i + 1] - next;
        if below_end <= 0.0 {
            return Some((i as f64 + 0.5) * dt);
        }
        // Brownian bridge between the step endpoints against the linearized level
        let exponent = 2.0 * (levels[i] - w) * below_end / dt;
        if exponent < BRIDGE_EXPONENT_CUTOFF {
            let u: f64 = uniforms.random();
            if u < (-exponent).exp() {
                return Some((i as f64 + 0.5) * dt);
            }
        }
        w = next;
    }
    None
}

/// Histogram of first-passage times of standard Brownian motion started at 0
/// to the level `x0 + int_0^t f'(u) du`, with bridge crossing correction.
pub fn first_passage_histogram(b: &Boundary, x0: f64, cfg: &MCConfig, n_bins: usize) -> Result<DensityHistogram> {
    if !(x0 > 0.0) {
        return Err(Error::NonPositiveX(x0));
    }
    cfg.validate()?;
    if n_bins == 0 {
        return Err(Error::InvalidConfig("need at least one bin".into()));
    }
    let s = b.horizon();
    let dt = s / cfg.n_steps as f64;
    let levels: Vec<f64> = (0..=cfg.n_steps).map(|i| b.level(x0, i as f64 * dt)).collect();
    let bin_width = s / n_bins as f64;

    let counts = (0..cfg.n_paths)
        .into_par_iter()
        .fold(
            || vec![0u64; n_bins],
            |mut acc, p| {
                if let Some(tc) = first_crossing(&levels, dt, cfg, p) {
                    let k = ((tc / bin_width) as usize).min(n_bins - 1);
                    acc[k] += 1;
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; n_bins],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );

    let n_total = cfg.n_paths as u64;
    Ok(DensityHistogram {
        bin_edges: (0..=n_bins).map(|k| k as f64 * bin_width).collect(),
        masses: counts.iter().map(|&c| c as f64 / n_total as f64).collect(),
        n_crossed: counts.iter().sum(),
        counts,
        n_total,
    })
}

/// Exact first-passage masses of standard Brownian motion to the fixed level
/// `x0` over the given bin edges, from `P(T <= t) = erfc(x0 / sqrt(2t))`.
pub fn fixed_level_bin_masses(x0: f64, edges: &[f64]) -> Vec<f64> {
    let cdf = |t: f64| {
        if t <= 0.0 {
            0.0
        } else {
            libm::erfc(x0 / (2.0 * t).sqrt())
        }
    };
    edges.windows(2).map(|e| cdf(e[1]) - cdf(e[0])).collect()
}

/// Pearson statistic of a histogram against expected bin masses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square of bin counts against `expected` masses; the uncrossed
/// remainder is not a category, so the degrees of freedom equal the bin count.
pub fn chi_square(hist: &DensityHistogram, expected: &[f64]) -> Result<ChiSquareTest> {
    if expected.len() != hist.n_bins() {
        return Err(Error::InvalidConfig("expected masses do not match the bins".into()));
    }
    let n = hist.n_total as f64;
    let statistic = hist
        .counts
        .iter()
        .zip(expected)
        .map(|(&o, &p)| {
            let e = n * p;
            (o as f64 - e).powi(2) / e
        })
        .sum::<f64>();
    let dof = hist.n_bins();
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value: 1.0 - dist.cdf(statistic),
    })
}

/// One row of the density comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub empirical: f64,
    /// `int kappa dt` over the bin, with `kappa(t) = x0 k(t, x0 + int_0^t f')`.
    pub kappa: f64,
    /// `int h(t, x0 + int_0^t f') dt` over the bin.
    pub reference: f64,
    /// `(empirical - kappa) / se`, binomial standard error of the empirical mass.
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityComparison {
    pub rows: Vec<ComparisonRow>,
    pub histogram: DensityHistogram,
}

const BIN_QUADRATURE_INTERVALS: usize = 64;

/// Bin-level table of the empirical first-passage density against the
/// closed-form approximation `kappa` and the fixed-level kernel `h` evaluated
/// at the current level. Reported only.
pub fn compare_density(b: &Boundary, x0: f64, cfg: &MCConfig) -> Result<DensityComparison> {
    compare_density_with_bins(b, x0, cfg, DEFAULT_BINS)
}

pub fn compare_density_with_bins(b: &Boundary, x0: f64, cfg: &MCConfig, n_bins: usize) -> Result<DensityComparison> {
    let histogram = first_passage_histogram(b, x0, cfg, n_bins)?;
    let n = histogram.n_total as f64;
    let kappa_t = |t: f64| {
        if t <= 0.0 {
            0.0
        } else {
            x0 * heat_kernel(t, b.level(x0, t)).expect("t > 0")
        }
    };
    let reference_t = |t: f64| {
        if t <= 0.0 {
            0.0
        } else {
            derived_kernel(t, b.level(x0, t)).expect("t > 0")
        }
    };
    let rows = histogram
        .bin_edges
        .windows(2)
        .zip(&histogram.masses)
        .map(|(e, &empirical)| {
            let kappa = simpson(kappa_t, e[0], e[1], BIN_QUADRATURE_INTERVALS);
            let reference = simpson(reference_t, e[0], e[1], BIN_QUADRATURE_INTERVALS);
            let p = empirical.max(1.0 / n);
            let se = (p * (1.0 - p) / n).sqrt();
            ComparisonRow {
                bin_lo: e[0],
                bin_hi: e[1],
                empirical,
                kappa,
                reference,
                z: (empirical - kappa) / se,
            }
        })
        .collect();
    Ok(DensityComparison { rows, histogram })
}

/// Norms of a three-dimensional Brownian bridge from `(x, 0, 0)` at time 0
/// to the origin at `s`, on `n_steps` uniform steps. `sign` flips every
/// Gaussian draw (antithetic partner).
pub fn bessel_bridge_path<R: Rng>(x: f64, s: f64, n_steps: usize, rng: &mut R, sign: f64) -> Vec<f64> {
    let dt = s / n_steps as f64;
    let mut y = [x, 0.0, 0.0];
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(x.abs());
    for i in 0..n_steps {
        let remaining = s - i as f64 * dt;
        let (pull, sd) = if i == n_steps - 1 {
            (0.0, 0.0)
        } else {
            (1.0 - dt / remaining, (dt * (remaining - dt) / remaining).sqrt())
        };
        for c in y.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *c = *c * pull + sign * sd * z;
        }
        out.push((y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt());
    }
    out
}

/// Feynman-Kac estimate of `E[ exp(-int_0^s f''(u) X_u du) | X_0 = x ]` for
/// the three-dimensional Bessel bridge from `x` to 0 over `[0, s]`, with the
/// time integral by the trapezoid rule.
pub fn bessel_bridge_fk(b: &Boundary, x: f64, cfg: &MCConfig) -> Result<MCEstimate> {
    if !(x > 0.0) {
        return Err(Error::NonPositiveX(x));
    }
    cfg.validate()?;
    let s = b.horizon();
    let n = cfg.n_steps;
    let dt = s / n as f64;
    let potential: Vec<f64> = (0..=n).map(|i| b.eval_fsecond(i as f64 * dt)).collect();

    let path_value = |p: usize| {
        let (stream, sign) = cfg.stream(p);
        let mut rng = path_rng(cfg.seed, stream);
        let r = bessel_bridge_path(x, s, n, &mut rng, sign);
        let integral: f64 = (0..n)
            .map(|i| 0.5 * dt * (potential[i] * r[i] + potential[i + 1] * r[i + 1]))
            .sum();
        (-integral).exp()
    };

    // samples are pair means under antithetic sampling
    let samples: Vec<f64> = if cfg.antithetic {
        (0..cfg.n_paths / 2)
            .into_par_iter()
            .map(|k| 0.5 * (path_value(2 * k) + path_value(2 * k + 1)))
            .collect()
    } else {
        (0..cfg.n_paths).into_par_iter().map(path_value).collect()
    };

    let m = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / m;
    let var = if samples.len() > 1 {
        samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    Ok(MCEstimate {
        mean,
        std_error: (var / m).sqrt(),
        n_paths: cfg.n_paths,
        n_steps: n,
        seed: cfg.seed,
    })
}
