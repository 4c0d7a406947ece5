//! Composite Simpson rules, grids, and a deterministic parallel reducer.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{real, CMatrix};

/// Composite Simpson rule on `[a, b]` with an even number of intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simpson {
    pub a: f64,
    pub b: f64,
    pub intervals: usize,
}

impl Simpson {
    pub fn new(a: f64, b: f64, intervals: usize) -> Self {
        let intervals = intervals.max(2);
        Self {
            a,
            b,
            intervals: intervals + intervals % 2,
        }
    }

    /// Smallest even interval count whose step does not exceed `step`.
    pub fn with_step(a: f64, b: f64, step: f64) -> Self {
        let n = ((b - a).abs() / step).ceil() as usize;
        Self::new(a, b, n)
    }

    pub fn step(&self) -> f64 {
        (self.b - self.a) / self.intervals as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = self.step();
        let n = self.intervals;
        (0..=n).map(move |k| {
            let w = if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let x = if k == n { self.b } else { self.a + k as f64 * h };
            (x, w * h / 3.0)
        })
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes().map(|(x, w)| w * f(x)).sum()
    }
}

const CHUNK: usize = 256;

/// Sums `w * f(x)` over the nodes of all segments. Work is split into fixed
/// chunks that are reduced in order, so the result does not depend on the
/// thread count.
pub fn integrate_matrix<F>(segments: &[Simpson], rows: usize, cols: usize, f: F) -> Result<CMatrix>
where
    F: Fn(f64) -> Result<CMatrix> + Sync,
{
    let nodes: Vec<(f64, f64)> = segments.iter().flat_map(|s| s.nodes()).collect();
    let partials: Vec<Result<CMatrix>> = nodes
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = CMatrix::zeros(rows, cols);
            for &(x, w) in chunk {
                let v = f(x)?;
                acc += v * real(w);
            }
            Ok(acc)
        })
        .collect();
    let mut total = CMatrix::zeros(rows, cols);
    for p in partials {
        total += p?;
    }
    Ok(total)
}

/// Evaluates `f` on every grid point in parallel, preserving order.
pub fn par_map<T, F>(grid: &[f64], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(f64) -> Result<T> + Sync,
{
    grid.par_iter().map(|&x| f(x)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

/// A one-dimensional sampling grid description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl GridSpec {
    pub fn linear(min: f64, max: f64, count: usize) -> Self {
        Self {
            min,
            max,
            count,
            spacing: Spacing::Linear,
        }
    }

    pub fn log(min: f64, max: f64, count: usize) -> Self {
        Self {
            min,
            max,
            count,
            spacing: Spacing::Log,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::InvalidParameter("grid counts must be >= 2".into()));
        }
        if !(self.min.is_finite() && self.max.is_finite()) || self.max <= self.min {
            return Err(Error::InvalidParameter(format!(
                "grid bounds must satisfy min < max (got {}..{})",
                self.min, self.max
            )));
        }
        if self.spacing == Spacing::Log && self.min <= 0.0 {
            return Err(Error::InvalidParameter(
                "log-spaced grids need min > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        match self.spacing {
            Spacing::Linear => linspace(self.min, self.max, self.count),
            Spacing::Log => logspace(self.min, self.max, self.count),
        }
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let h = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|k| if k + 1 == n { b } else { a + k as f64 * h })
        .collect()
}

pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    linspace(la, lb, n)
        .into_iter()
        .enumerate()
        .map(|(k, x)| {
            if k == 0 {
                a
            } else if k + 1 == n {
                b
            } else {
                x.exp()
            }
        })
        .collect()
}

/// Ordinary least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}
