//! Decay estimates for the remainder `P_t` and the Laplace tail integral.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CVector;
use crate::quadrature::{ls_slope, par_map, Simpson};
use crate::resolvent::graded_norm;
use crate::spectral::SpectralDecomposition;

/// Points below this fraction of the largest remainder norm are excluded
/// from rate fits.
pub const FIT_FLOOR: f64 = 1e-11;
/// `‖P_t μ‖_A` below this multiple of `‖μ‖_A` counts as zero for kernel probes.
pub const KERNEL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayKind {
    Exponential,
    Polynomial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub kind: DecayKind,
    pub t_grid: Vec<f64>,
    pub remainder_norms: Vec<f64>,
    pub bound_values: Vec<f64>,
    /// Log-linear slope (exponential) or tail log-log slope (polynomial).
    /// `None` when every usable point fell below the fit floor.
    pub fitted_rate: Option<f64>,
    /// Whether `remainder_norms ≤ bound_values` at every grid point.
    pub bound_holds: bool,
    /// Whether the fitted rate meets the target (`≤ −ℓ` or `≤ −p`).
    pub rate_ok: bool,
    pub pass: bool,
    /// `C_june` or the fitted `C_p`.
    pub constant: f64,
    /// `‖Zμ‖_B` or `‖μ‖_{Z^q}`.
    pub probe_norm: f64,
    /// Set when `Zμ = 0`; the check is then `P_t μ = 0`.
    pub kernel_probe: bool,
    pub p: Option<u32>,
    pub q: Option<u32>,
}

fn remainder_norms(
    decomposition: &SpectralDecomposition<'_>,
    mu: &CVector,
    t_grid: &[f64],
) -> Result<Vec<f64>> {
    par_map(t_grid, |t| Ok(decomposition.apply_remainder(t, mu)?.norm()))
}

fn fit_points<'a>(t: &'a [f64], v: &'a [f64]) -> impl Iterator<Item = (f64, f64)> + 'a {
    let top = v.iter().copied().fold(0.0, f64::max);
    t.iter()
        .zip(v)
        .filter(move |(_, &x)| x > FIT_FLOOR * top && x > 0.0)
        .map(|(&t, &x)| (t, x))
}

fn check_times(t_grid: &[f64]) -> Result<()> {
    if t_grid.len() < 2 {
        return Err(Error::InvalidParameter("t_grid needs at least 2 points".into()));
    }
    if let Some(&t) = t_grid.iter().find(|t| !(**t > 0.0)) {
        return Err(Error::InvalidParameter(format!("t_grid points must be > 0, got {t}")));
    }
    Ok(())
}

/// `‖P_t μ‖_A ≤ C_june e^{−ℓt} ‖Zμ‖_B` on `t_grid`.
pub fn exponential_decay_check(
    decomposition: &SpectralDecomposition<'_>,
    c_june: f64,
    mu: &CVector,
    ell: f64,
    t_grid: &[f64],
) -> Result<DecayReport> {
    check_times(t_grid)?;
    let model = decomposition.model();
    let z_mu = model.apply(mu)?;
    let probe_norm = model.norm_pair().strong_norm(&z_mu);
    let norms = remainder_norms(decomposition, mu, t_grid)?;
    let kernel_probe = probe_norm <= 1e-14 * model.norm_pair().strong_norm(mu);

    let (bound_values, bound_holds) = if kernel_probe {
        let tol = KERNEL_TOL * mu.norm();
        (vec![tol; t_grid.len()], norms.iter().all(|&v| v <= tol))
    } else {
        let b: Vec<f64> = t_grid
            .iter()
            .map(|&t| c_june * (-ell * t).exp() * probe_norm)
            .collect();
        let ok = norms.iter().zip(&b).all(|(v, b)| v <= b);
        (b, ok)
    };

    let (ts, logs): (Vec<f64>, Vec<f64>) =
        fit_points(t_grid, &norms).map(|(t, v)| (t, v.ln())).unzip();
    let fitted_rate = if ts.len() >= 2 { ls_slope(&ts, &logs) } else { None };
    let rate_ok = kernel_probe || fitted_rate.is_none_or(|r| r <= -ell);

    Ok(DecayReport {
        kind: DecayKind::Exponential,
        t_grid: t_grid.to_vec(),
        remainder_norms: norms,
        bound_values,
        fitted_rate,
        bound_holds,
        rate_ok,
        pass: bound_holds && rate_ok,
        constant: c_june,
        probe_norm,
        kernel_probe,
        p: None,
        q: None,
    })
}

/// Smallest admissible `q` is anything above `C11 + p(C12 + 1)`.
pub fn regularity_threshold(p: u32, c11: f64, c12: f64) -> f64 {
    c11 + p as f64 * (c12 + 1.0)
}

/// Smallest integer `q` satisfying [`regularity_threshold`].
pub fn minimal_regularity(p: u32, c11: f64, c12: f64) -> u32 {
    (regularity_threshold(p, c11, c12).floor() + 1.0).max(0.0) as u32
}

/// `‖P_t μ‖_A ≤ C_p t^{−p} ‖μ‖_{Z^q}` with `C_p` fitted as
/// `max_t ‖P_t μ‖_A t^p / ‖μ‖_{Z^q}`; passes when the log-log slope over
/// the upper half of the grid (in `ln t`) is `≤ −p`.
pub fn rapid_decay_check(
    decomposition: &SpectralDecomposition<'_>,
    mu: &CVector,
    p: u32,
    q: u32,
    c11: f64,
    c12: f64,
    t_grid: &[f64],
) -> Result<DecayReport> {
    check_times(t_grid)?;
    if p == 0 {
        return Err(Error::InvalidParameter("p must be positive".into()));
    }
    let required = regularity_threshold(p, c11, c12);
    if !(q as f64 > required) {
        return Err(Error::InsufficientRegularity { q, required });
    }
    let model = decomposition.model();
    let probe_norm = graded_norm(model, mu, q)?.value;
    if probe_norm == 0.0 {
        return Err(Error::InvalidParameter("probe vector must be nonzero".into()));
    }
    let norms = remainder_norms(decomposition, mu, t_grid)?;
    let pf = p as f64;
    let constant = t_grid
        .iter()
        .zip(&norms)
        .map(|(t, v)| v * t.powf(pf) / probe_norm)
        .fold(0.0, f64::max);
    let bound_values: Vec<f64> = t_grid
        .iter()
        .map(|t| constant * t.powf(-pf) * probe_norm)
        .collect();
    let bound_holds = norms
        .iter()
        .zip(&bound_values)
        .all(|(v, b)| *v <= b * (1.0 + 1e-12));

    let t_lo = t_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let t_hi = t_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cut = (t_lo * t_hi).sqrt();
    let (lx, ly): (Vec<f64>, Vec<f64>) = fit_points(t_grid, &norms)
        .filter(|(t, _)| *t >= cut)
        .map(|(t, v)| (t.ln(), v.ln()))
        .unzip();
    let fitted_rate = if lx.len() >= 2 { ls_slope(&lx, &ly) } else { None };
    let rate_ok = fitted_rate.is_none_or(|r| r <= -pf);

    Ok(DecayReport {
        kind: DecayKind::Polynomial,
        t_grid: t_grid.to_vec(),
        remainder_norms: norms,
        bound_values,
        fitted_rate,
        bound_holds,
        rate_ok,
        pass: bound_holds && rate_ok,
        constant,
        probe_norm,
        kernel_probe: false,
        p: Some(p),
        q: Some(q),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBoundCheck {
    pub n: u32,
    pub t: f64,
    pub a: f64,
    /// `∫_0^a e^{−tx} x^n dx` by Richardson-extrapolated Simpson.
    pub integral: f64,
    /// `n!·t^{−(n+1)}`, the bound produced by iterating `I(n) ≤ (n/t) I(n−1)`
    /// from `I(0) ≤ 1/t`.
    pub chained_bound: f64,
    /// `n!·t^{−n}`.
    pub alternate_bound: f64,
    pub chained_holds: bool,
    pub alternate_holds: bool,
    pub pass: bool,
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

pub fn laplace_tail_bound_check(n: u32, t: f64, a: f64) -> Result<TailBoundCheck> {
    if !(t > 0.0 && a > 0.0) {
        return Err(Error::InvalidParameter("t and a must be > 0".into()));
    }
    let f = |x: f64| (-t * x).exp() * x.powi(n as i32);
    // resolve the e^{-tx} scale: pieces of width ≤ 1/t
    let pieces = (a * t).ceil().max(1.0) as usize;
    let width = a / pieces as f64;
    let mut coarse = 0.0;
    let mut fine = 0.0;
    for k in 0..pieces {
        let lo = k as f64 * width;
        let hi = if k + 1 == pieces { a } else { lo + width };
        coarse += Simpson::new(lo, hi, 64).integrate(f);
        fine += Simpson::new(lo, hi, 128).integrate(f);
    }
    let integral = fine + (fine - coarse) / 15.0;
    let nf = factorial(n);
    let chained_bound = nf * t.powi(-(n as i32 + 1));
    let alternate_bound = nf * t.powi(-(n as i32));
    let chained_holds = integral <= chained_bound * (1.0 + 1e-12);
    let alternate_holds = integral <= alternate_bound * (1.0 + 1e-12);
    Ok(TailBoundCheck {
        n,
        t,
        a,
        integral,
        chained_bound,
        alternate_bound,
        chained_holds,
        alternate_holds,
        pass: chained_holds,
    })
}
