//! Explicit constants for the exponential decay estimate, evaluated
//! in closed form from the assumption parameters and measured constants.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::AssumptionParams;
use crate::quadrature::Simpson;

/// Simpson intervals for the central integral `C_mid`.
pub const C_MID_INTERVALS: usize = 4000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsLedger {
    pub c_john: f64,
    pub c3: f64,
    pub c_jim: f64,
    pub c5: f64,
    pub c4: f64,
    pub c_mid: f64,
    pub c_outer: f64,
    pub c_june: f64,
    /// Filled from a curve scan; not part of the exponential chain.
    pub c13: Option<f64>,
    pub provenance: BTreeMap<String, String>,
}

/// `γ ln(1 + ℓ/α)`.
pub fn c_john(gamma: f64, alpha: f64, ell: f64) -> f64 {
    gamma * (ell / alpha).ln_1p()
}

/// `C_D [1 − ((α+ℓ)/(α+λ))^{γ ln β}]^{−1}`.
pub fn c3(c_d: f64, alpha: f64, ell: f64, lambda: f64, gamma: f64, beta: f64) -> Result<f64> {
    let contraction = ((alpha + ell) / (alpha + lambda)).powf(gamma * beta.ln());
    let denominator = 1.0 - contraction;
    if !(denominator > 0.0) {
        return Err(Error::LedgerUndefined {
            formula: format!(
                "C3 = C_D/(1 - ((alpha+ell)/(alpha+lambda))^(gamma ln beta)): \
                 denominator {denominator:e} <= 0 (needs beta > 1)"
            ),
        });
    }
    Ok(c_d / denominator)
}

/// `C1 C3 α/ℓ`.
pub fn c_jim(c1: f64, c3: f64, alpha: f64, ell: f64) -> f64 {
    c1 * c3 * alpha / ell
}

/// `2π β^{−1} / (1 − e^{−2πα/β})`.
pub fn c5(alpha: f64, beta: f64) -> f64 {
    TAU / beta / -(-TAU * alpha / beta).exp_m1()
}

/// `2π C1 C5 (α + C2)`.
pub fn c4(c1: f64, c5: f64, alpha: f64, c2: f64) -> f64 {
    TAU * c1 * c5 * (alpha + c2)
}

/// `(1/2π) ∫_β^∞ b^{−(2−C_john)} db = (1/2π) β^{−(1−C_john)}/(1−C_john)`.
pub fn c_outer(beta: f64, c_john: f64) -> f64 {
    let e = 1.0 - c_john;
    beta.powf(-e) / e / TAU
}

/// `C_mid + 2 C_outer C4 C_jim`.
pub fn c_june(c_mid: f64, c_outer: f64, c4: f64, c_jim: f64) -> f64 {
    c_mid + 2.0 * c_outer * c4 * c_jim
}

/// `(1/2π) ∫_{−β}^{β} w(b)/|−ℓ+ib| db` where `w(b) = ‖R(−ℓ+ib)‖_{B→A}`.
pub fn c_mid<F>(beta: f64, ell: f64, weak_norm: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let rule = Simpson::new(-beta, beta, C_MID_INTERVALS);
    let nodes: Vec<(f64, f64)> = rule.nodes().collect();
    let xs: Vec<f64> = nodes.iter().map(|n| n.0).collect();
    let values = crate::quadrature::par_map(&xs, |b| Ok(weak_norm(b)? / ell.hypot(b)))?;
    let total: f64 = nodes.iter().zip(&values).map(|((_, w), v)| w * v).sum();
    Ok(total / (2.0 * PI))
}

/// Evaluates the whole chain. `weak_norm(b)` must return
/// `‖R(−ℓ+ib)‖_{B→A}`; `params` must carry `C1`, `C2` and `C_D`.
pub fn compute_ledger<F>(params: &AssumptionParams, weak_norm: F) -> Result<ConstantsLedger>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    params.check_exponential()?;
    let c1 = AssumptionParams::require(params.c1, "c1")?;
    let c2 = AssumptionParams::require(params.c2, "c2")?;
    let c_d = AssumptionParams::require(params.c_dolgo, "c_dolgo")?;
    let AssumptionParams {
        lambda,
        alpha,
        beta,
        gamma,
        ell,
        ..
    } = *params;

    let c_john = c_john(gamma, alpha, ell);
    let c3 = c3(c_d, alpha, ell, lambda, gamma, beta)?;
    let c_jim = c_jim(c1, c3, alpha, ell);
    let c5 = c5(alpha, beta);
    let c4 = c4(c1, c5, alpha, c2);
    let c_outer = c_outer(beta, c_john);
    let c_mid = c_mid(beta, ell, weak_norm)?;
    let c_june = c_june(c_mid, c_outer, c4, c_jim);

    let provenance = [
        ("c_john", "gamma * ln(1 + ell/alpha)"),
        ("c3", "C_D / (1 - ((alpha+ell)/(alpha+lambda))^(gamma * ln beta))"),
        ("c_jim", "C1 * C3 * alpha / ell"),
        ("c5", "(2 pi / beta) / (1 - exp(-2 pi alpha / beta))"),
        ("c4", "2 pi * C1 * C5 * (alpha + C2)"),
        ("c_outer", "(1/2pi) * beta^-(1 - C_john) / (1 - C_john)"),
        (
            "c_mid",
            "(1/2pi) * int_{-beta}^{beta} ||R(-ell+ib)||_{B->A} / |-ell+ib| db (Simpson)",
        ),
        ("c_june", "C_mid + 2 * C_outer * C4 * C_jim"),
        ("c13", "max_b ||R(ib - |b|^-C12) mu||_B |b|^(n - C11) / ||mu||_{Z^n} (measured)"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();

    Ok(ConstantsLedger {
        c_john,
        c3,
        c_jim,
        c5,
        c4,
        c_mid,
        c_outer,
        c_june,
        c13: None,
        provenance,
    })
}
