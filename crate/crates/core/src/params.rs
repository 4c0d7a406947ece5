use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the Lasota-Yorke, Dolgopyat and rapid-resolvent
/// assumptions, plus the measured constants `C1`, `C2`, `C_D`.
///
/// Measured constants are `None` until a scan fills them in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionParams {
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub ell: f64,
    #[serde(default)]
    pub c1: Option<f64>,
    #[serde(default)]
    pub c2: Option<f64>,
    #[serde(default)]
    pub c_dolgo: Option<f64>,
    #[serde(default)]
    pub c10: Option<f64>,
    #[serde(default)]
    pub c11: Option<f64>,
    #[serde(default = "default_c12")]
    pub c12: f64,
    #[serde(default)]
    pub epsilon: Option<f64>,
}

fn default_c12() -> f64 {
    1.0
}

impl AssumptionParams {
    pub fn new(lambda: f64, alpha: f64, beta: f64, gamma: f64, ell: f64) -> Self {
        Self {
            lambda,
            alpha,
            beta,
            gamma,
            ell,
            c1: None,
            c2: None,
            c_dolgo: None,
            c10: None,
            c11: None,
            c12: default_c12(),
            epsilon: None,
        }
    }

    /// Upper end of the admissible `γ` range, `1/ln(1+λ/α)`.
    pub fn gamma_limit(&self) -> f64 {
        1.0 / (1.0 + self.lambda / self.alpha).ln()
    }

    fn positive(name: &str, v: f64) -> Result<()> {
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")))
        }
    }

    fn check_common(&self) -> Result<()> {
        Self::positive("lambda", self.lambda)?;
        Self::positive("beta", self.beta)?;
        if !(self.ell > 0.0 && self.ell < self.lambda) {
            return Err(Error::InvalidParameter(format!(
                "ell must lie in (0, lambda) = (0, {}), got {}",
                self.lambda, self.ell
            )));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0 && eps < self.ell) {
                return Err(Error::InvalidParameter(format!(
                    "epsilon must lie in (0, ell) = (0, {}), got {eps}",
                    self.ell
                )));
            }
        }
        Ok(())
    }

    pub fn check_exponential(&self) -> Result<()> {
        self.check_common()?;
        Self::positive("alpha", self.alpha)?;
        let limit = self.gamma_limit();
        if !(self.gamma > 0.0 && self.gamma < limit) {
            return Err(Error::InvalidParameter(format!(
                "gamma must lie in (0, 1/ln(1+lambda/alpha)) = (0, {limit}), got {}",
                self.gamma
            )));
        }
        Ok(())
    }

    pub fn check_rapid(&self) -> Result<()> {
        self.check_common()?;
        Self::positive("c12", self.c12)
    }

    pub fn require(value: Option<f64>, name: &str) -> Result<f64> {
        value.ok_or_else(|| Error::InvalidParameter(format!("{name} has not been measured or set")))
    }
}
