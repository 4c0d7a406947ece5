//! Grid scans of the semigroup and resolvent bounds.
//!
//! Every universally quantified bound is sampled on a finite grid and
//! accepted only if its maximum moves by less than 1% between the half grid
//! and the full grid. Frequencies are evaluated at both `±b`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{matrix_power, real, spectral_norm, CMatrix, CVector, C64};
use crate::models::{GeneratorModel, NormKind, SemigroupEvaluator};
use crate::params::AssumptionParams;
use crate::quadrature::{ls_slope, par_map};
use crate::resolvent::{graded_norm, resolvent_matrix};

/// Relative change allowed between half-grid and full-grid maxima.
pub const STABILITY_TOL: f64 = 0.01;

/// Maximum over a grid and over its lower half.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMax {
    pub value: f64,
    pub argmax: f64,
    pub half_grid_value: f64,
    pub stable: bool,
}

impl GridMax {
    pub fn of(x: &[f64], v: &[f64]) -> Self {
        let x_max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut value = f64::NEG_INFINITY;
        let mut argmax = f64::NAN;
        let mut half = f64::NEG_INFINITY;
        for (&xi, &vi) in x.iter().zip(v) {
            if vi > value {
                value = vi;
                argmax = xi;
            }
            if xi <= 0.5 * x_max {
                half = half.max(vi);
            }
        }
        let stable = value.is_finite()
            && half.is_finite()
            && (value - half).abs() <= STABILITY_TOL * value.abs().max(f64::MIN_POSITIVE);
        Self {
            value,
            argmax,
            half_grid_value: half,
            stable,
        }
    }
}

fn check_grid(grid: &[f64], name: &str) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidParameter(format!("{name} needs at least 2 points")));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} has non-finite points")));
    }
    Ok(())
}

fn check_frequencies(grid: &[f64], beta: f64) -> Result<()> {
    check_grid(grid, "b_grid")?;
    if let Some(b) = grid.iter().find(|b| b.abs() < beta * (1.0 - 1e-12)) {
        return Err(Error::InvalidParameter(format!(
            "b_grid point {b} lies below beta = {beta}"
        )));
    }
    Ok(())
}

/// `‖R(z)^power‖_{from→to}`.
pub fn resolvent_power_norm(
    model: &GeneratorModel,
    z: C64,
    power: u32,
    from: NormKind,
    to: NormKind,
) -> Result<f64> {
    let norms = model.norm_pair();
    if let Some(d) = model.diagonal() {
        let nearest = model.nearest_eigenvalue(z)?;
        if nearest.1 <= crate::resolvent::POLE_GUARD * model.generator_norm().max(1.0) {
            return Err(Error::Pole {
                z,
                eigenvalue: nearest.0,
            });
        }
        let entries = d.map(|v| (C64::new(1.0, 0.0) / (z - v)).powu(power));
        if let Some(v) = norms.diagonal_op_norm(&entries, from, to) {
            return Ok(v);
        }
    }
    let r = resolvent_matrix(model, z)?;
    norms.op_norm(&matrix_power(&r, power), from, to)
}

fn symmetric_max<F>(grid: &[f64], f: F) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    par_map(grid, |b| Ok(f(b)?.max(f(-b)?)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C1Estimate {
    /// `max_t ‖T_t‖_{B→B}`.
    pub value: f64,
    pub argmax_t: f64,
    pub stable: bool,
    pub warning: Option<String>,
    pub t_grid: Vec<f64>,
    pub norms: Vec<f64>,
}

pub fn estimate_c1(model: &GeneratorModel, t_grid: &[f64]) -> Result<C1Estimate> {
    check_grid(t_grid, "t_grid")?;
    let semigroup = SemigroupEvaluator::new(model)?;
    let norms_pair = model.norm_pair();
    let norms = par_map(t_grid, |t| {
        norms_pair.op_norm(&semigroup.evaluate(t)?, NormKind::B, NormKind::B)
    })?;
    let max = GridMax::of(t_grid, &norms);
    let t_end = t_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let end = norms_pair.op_norm(&semigroup.evaluate(t_end)?, NormKind::B, NormKind::B)?;
    let mid = norms_pair.op_norm(&semigroup.evaluate(0.5 * t_end)?, NormKind::B, NormKind::B)?;
    let warning = (end > mid * (1.0 + 1e-3)).then(|| {
        format!(
            "semigroup norm still growing at t = {t_end} ({mid:.6e} -> {end:.6e}); \
             the semigroup looks unbounded, consider rescaling by e^(-gamma t)"
        )
    });
    Ok(C1Estimate {
        value: max.value,
        argmax_t: max.argmax,
        stable: max.stable && warning.is_none(),
        warning,
        t_grid: t_grid.to_vec(),
        norms,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C2Estimate {
    /// `sup_t (1/t)‖T_t − Id‖_{B→A}`, including the `t → 0` limit `‖Z‖_{B→A}`.
    pub value: f64,
    /// `None` when the supremum is the `t → 0` limit.
    pub argmax_t: Option<f64>,
    pub limit_at_zero: f64,
    /// `sup_s ‖T_s‖_{A→A}` over `[0, max t]`, an upper bound for `C2`.
    pub analytic_bound: f64,
    pub stable: bool,
    pub t_grid: Vec<f64>,
    pub ratios: Vec<f64>,
}

pub fn estimate_c2(model: &GeneratorModel, t_grid: &[f64]) -> Result<C2Estimate> {
    check_grid(t_grid, "t_grid")?;
    let semigroup = SemigroupEvaluator::new(model)?;
    let norms = model.norm_pair();
    let n = model.dim();
    let positive: Vec<f64> = t_grid.iter().copied().filter(|&t| t > 0.0).collect();
    let ratios = par_map(&positive, |t| {
        let diff = semigroup.evaluate(t)? - CMatrix::identity(n, n);
        Ok(norms.op_norm(&diff, NormKind::B, NormKind::A)? / t)
    })?;
    let limit_at_zero = norms.op_norm(model.generator(), NormKind::B, NormKind::A)?;
    let max = GridMax::of(&positive, &ratios);
    let (value, argmax_t) = if limit_at_zero >= max.value {
        (limit_at_zero, None)
    } else {
        (max.value, Some(max.argmax))
    };
    let t_end = positive.iter().copied().fold(0.0, f64::max);
    let mut samples = crate::quadrature::linspace(0.0, t_end, 201);
    samples.extend_from_slice(&positive);
    let analytic_bound = par_map(&samples, |s| Ok(spectral_norm(&semigroup.evaluate(s)?)))?
        .into_iter()
        .fold(0.0, f64::max);
    let half = max.half_grid_value.max(limit_at_zero);
    let stable = (value - half).abs() <= STABILITY_TOL * value.max(f64::MIN_POSITIVE) || value == 0.0;
    Ok(C2Estimate {
        value,
        argmax_t,
        limit_at_zero,
        analytic_bound,
        stable,
        t_grid: positive,
        ratios,
    })
}

/// `ñ(b) = ⌈γ ln|b|⌉`, floored at 0.
pub fn dolgopyat_exponent(gamma: f64, b: f64) -> u32 {
    (gamma * b.abs().ln()).ceil().max(0.0) as u32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DolgopyatScan {
    /// `max_b ‖R(α+ib)^{ñ(b)}‖_{B→B} (α+λ)^{ñ(b)}`.
    pub measured_max: f64,
    /// `max(1, measured_max)`: the `k = 0` term of the Neumann split needs
    /// `C_D ≥ 1`.
    pub c_d: f64,
    pub worst_b: f64,
    /// Maximum over the grid points doubled beyond the grid end.
    pub extended_max: f64,
    /// Refinement and extension both move the maximum by less than 1%.
    pub stable: bool,
    pub pass: bool,
    pub b_grid: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn dolgopyat_scan(
    model: &GeneratorModel,
    params: &AssumptionParams,
    b_grid: &[f64],
) -> Result<DolgopyatScan> {
    params.check_exponential()?;
    check_frequencies(b_grid, params.beta)?;
    let (alpha, lambda, gamma) = (params.alpha, params.lambda, params.gamma);
    let scaled = |b: f64| {
        let n = dolgopyat_exponent(gamma, b);
        let norm = resolvent_power_norm(model, C64::new(alpha, b), n, NormKind::B, NormKind::B)?;
        Ok(norm * (alpha + lambda).powi(n as i32))
    };
    let values = symmetric_max(b_grid, scaled)?;
    let max = GridMax::of(b_grid, &values);
    let b_end = b_grid.iter().map(|b| b.abs()).fold(0.0, f64::max);
    let extension: Vec<f64> = b_grid
        .iter()
        .map(|b| 2.0 * b.abs())
        .filter(|&b| b > b_end)
        .collect();
    let extended_max = symmetric_max(&extension, scaled)?
        .into_iter()
        .fold(0.0, f64::max);
    let stable = max.stable && extended_max <= max.value * (1.0 + STABILITY_TOL);
    Ok(DolgopyatScan {
        measured_max: max.value,
        c_d: max.value.max(1.0),
        worst_b: max.argmax,
        extended_max,
        stable,
        pass: max.value.is_finite() && stable,
        b_grid: b_grid.to_vec(),
        values,
    })
}

/// Log-log slope of the upper envelope of `v` over the upper half (in
/// `ln x`) of the grid: points are binned in `ln x`, and the per-bin maxima
/// are fitted by least squares.
pub fn upper_envelope_slope(x: &[f64], v: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(v)
        .filter(|(xi, vi)| **xi > 0.0 && **vi > 0.0 && vi.is_finite())
        .map(|(xi, vi)| (xi.ln(), vi.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let start = 0.5 * (lo + hi);
    const BINS: usize = 12;
    let width = (hi - start) / BINS as f64;
    let mut best: Vec<Option<(f64, f64)>> = vec![None; BINS];
    for &(lx, lv) in pts.iter().filter(|p| p.0 >= start) {
        let k = if width > 0.0 {
            (((lx - start) / width) as usize).min(BINS - 1)
        } else {
            0
        };
        if best[k].is_none_or(|(_, bv)| lv > bv) {
            best[k] = Some((lx, lv));
        }
    }
    let env: Vec<(f64, f64)> = best.into_iter().flatten().collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = if env.len() >= 2 {
        env.into_iter().unzip()
    } else {
        pts.into_iter().unzip()
    };
    ls_slope(&xs, &ys)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RapidScan {
    pub c10: f64,
    pub c11_fit: f64,
    pub stable: bool,
    pub pass: bool,
    /// Eigenvalue inside `{|Im| ≥ β, Re ≥ −|Im|^{−C12}}`, if any.
    pub violation: Option<C64>,
    /// Grid points skipped because the curve passes through an eigenvalue.
    pub skipped: usize,
    pub b_grid: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn rapid_region_violation(model: &GeneratorModel, beta: f64, c12: f64) -> Result<Option<C64>> {
    Ok(model
        .eigenvalues()?
        .iter()
        .copied()
        .find(|ev| ev.im.abs() >= beta && ev.re >= -ev.im.abs().powf(-c12)))
}

fn curve_point(b: f64, c12: f64) -> C64 {
    C64::new(-b.abs().powf(-c12), b)
}

pub fn rapid_scan(
    model: &GeneratorModel,
    params: &AssumptionParams,
    b_grid: &[f64],
) -> Result<RapidScan> {
    params.check_rapid()?;
    check_frequencies(b_grid, params.beta)?;
    let c12 = params.c12;
    let violation = rapid_region_violation(model, params.beta, c12)?;
    let raw = par_map(b_grid, |b| {
        let mut worst: Option<f64> = None;
        for s in [b, -b] {
            match resolvent_power_norm(model, curve_point(s, c12), 1, NormKind::B, NormKind::B) {
                Ok(v) => worst = Some(worst.map_or(v, |w| w.max(v))),
                Err(Error::Pole { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(worst)
    })?;
    let skipped = raw.iter().filter(|v| v.is_none()).count();
    let (grid, values): (Vec<f64>, Vec<f64>) = b_grid
        .iter()
        .zip(&raw)
        .filter_map(|(&b, v)| v.map(|v| (b.abs(), v)))
        .unzip();
    let c11_fit = upper_envelope_slope(&grid, &values)
        .ok_or_else(|| Error::Numerical("rapid scan has too few usable points".into()))?;
    let normalized: Vec<f64> = grid
        .iter()
        .zip(&values)
        .map(|(b, v)| v / b.powf(c11_fit))
        .collect();
    let max = GridMax::of(&grid, &normalized);
    Ok(RapidScan {
        c10: max.value,
        c11_fit,
        stable: max.stable,
        pass: violation.is_none() && max.value.is_finite(),
        violation,
        skipped,
        b_grid: grid,
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatoryCheck {
    /// `max_b |b|·‖R(α+ib)‖_{B→A}`.
    pub c4_measured: f64,
    pub c4_ledger: f64,
    pub worst_b: f64,
    pub stable: bool,
    pub pass: bool,
    pub b_grid: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn oscillatory_bound_check(
    model: &GeneratorModel,
    params: &AssumptionParams,
    c4_ledger: f64,
    b_grid: &[f64],
) -> Result<OscillatoryCheck> {
    check_frequencies(b_grid, params.beta)?;
    let alpha = params.alpha;
    let values = symmetric_max(b_grid, |b| {
        Ok(b.abs() * resolvent_power_norm(model, C64::new(alpha, b), 1, NormKind::B, NormKind::A)?)
    })?;
    let max = GridMax::of(b_grid, &values);
    Ok(OscillatoryCheck {
        c4_measured: max.value,
        c4_ledger,
        worst_b: max.argmax,
        stable: max.stable,
        pass: max.value <= c4_ledger,
        b_grid: b_grid.to_vec(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C13Check {
    pub n: u32,
    /// `max_b ‖R(z_b)μ‖_B |b|^{n−C11} / ‖μ‖_{Z^n}` on the curve
    /// `z_b = ib − |b|^{−C12}`.
    pub measured: f64,
    pub stable: bool,
    /// The same maximum for the regular part `z^{−n} R(z) Z^n μ` of the
    /// expansion `R(z)μ = Σ_{j<n} Z^jμ/z^{j+1} + z^{−n}R(z)Z^nμ`.
    pub regular_part: f64,
    pub regular_stable: bool,
    pub b_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub regular_values: Vec<f64>,
}

pub fn c13_bound_check(
    model: &GeneratorModel,
    params: &AssumptionParams,
    mu: &CVector,
    n: u32,
    b_grid: &[f64],
) -> Result<C13Check> {
    params.check_rapid()?;
    check_frequencies(b_grid, params.beta)?;
    let c11 = AssumptionParams::require(params.c11, "c11")?;
    let c12 = params.c12;
    let graded = graded_norm(model, mu, n)?.value;
    if graded == 0.0 {
        return Err(Error::InvalidParameter("probe vector must be nonzero".into()));
    }
    let norms = model.norm_pair();
    let mut zn_mu = mu.clone();
    for _ in 0..n {
        zn_mu = model.apply(&zn_mu)?;
    }
    let solve = |z: C64, v: &CVector| -> Result<CVector> {
        match model.diagonal() {
            Some(d) => Ok(v.zip_map(d, |x, e| x / (z - e))),
            None => Ok(resolvent_matrix(model, z)? * v),
        }
    };
    let pairs = par_map(b_grid, |b| {
        let mut full: f64 = 0.0;
        let mut regular: f64 = 0.0;
        for s in [b, -b] {
            let z = curve_point(s, c12);
            let weight = s.abs().powf(n as f64 - c11) / graded;
            full = full.max(norms.strong_norm(&solve(z, mu)?) * weight);
            let reg = solve(z, &zn_mu)? / z.powu(n);
            regular = regular.max(norms.strong_norm(&reg) * weight);
        }
        Ok((full, regular))
    })?;
    let (values, regular_values): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let full = GridMax::of(b_grid, &values);
    let reg = GridMax::of(b_grid, &regular_values);
    Ok(C13Check {
        n,
        measured: full.value,
        stable: full.stable,
        regular_part: reg.value,
        regular_stable: reg.stable,
        b_grid: b_grid.to_vec(),
        values,
        regular_values,
    })
}

/// `‖Σ_{n≤N} (α+ℓ)^n R(α+ib)^n‖_{B→B}` with `N` large enough that the
/// partial sums have settled to `1e−12`.
pub fn neumann_sum_norm(model: &GeneratorModel, alpha: f64, ell: f64, b: f64) -> Result<f64> {
    let r = resolvent_matrix(model, C64::new(alpha, b))? * real(alpha + ell);
    let n = model.dim();
    let mut sum = CMatrix::identity(n, n);
    let mut term = CMatrix::identity(n, n);
    for _ in 0..100_000 {
        term = &term * &r;
        sum += &term;
        if term.norm() <= 1e-14 * sum.norm() {
            return model.norm_pair().op_norm(&sum, NormKind::B, NormKind::B);
        }
    }
    Err(Error::SeriesDivergence {
        ratio: spectral_norm(&r),
    })
}

/// `‖R(−ℓ+ib)‖_{B→A}`.
pub fn shifted_weak_norm(model: &GeneratorModel, ell: f64, b: f64) -> Result<f64> {
    resolvent_power_norm(model, C64::new(-ell, b), 1, NormKind::B, NormKind::A)
}
