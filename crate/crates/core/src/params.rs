//! Scalar constants of the metric family.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{ExponentForm, GaussianKernel};

/// How the false-positive distance term is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DeltaMode {
    /// Squared distance within a `(2 phi + 1)^2` window, infinite beyond it.
    SquaredBanded,
    /// Plain Euclidean distance to the nearest foreground pixel, unbounded.
    PlainUnbounded,
}

/// Per-pixel error norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ErrorNorm {
    /// `(yhat - y)^2`; the differentiable default.
    L2,
    /// `|yhat - y|`; the original metric definition.
    L1,
}

/// Decay constant of the false-positive weight, `ln(0.5) / 5`.
pub fn default_alpha() -> f64 {
    0.5f64.ln() / 5.0
}

/// All scalar constants of the metric family.
///
/// Defaults follow the fast-loss configuration: `beta = 1`, `theta = 9`,
/// `sigma = theta / 4`, `phi = 5`, `alpha = ln(0.5) / 5`, squared-distance
/// exponents, banded squared delta, L2 error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WfmParams {
    /// Precision/recall trade-off in the F score.
    pub beta: f64,
    /// Gaussian bandwidth of the pair weighting.
    pub sigma: f64,
    /// Decay constant of the false-positive weight; must be negative.
    pub alpha: f64,
    /// Half-width of the convolution kernel.
    pub theta: usize,
    /// Half-width of the false-positive distance window.
    pub phi: usize,
    pub exponent_form: ExponentForm,
    pub delta_mode: DeltaMode,
    pub error_norm: ErrorNorm,
}

impl Default for WfmParams {
    fn default() -> Self {
        Self {
            beta: 1.0,
            sigma: 2.25,
            alpha: default_alpha(),
            theta: 9,
            phi: 5,
            exponent_form: ExponentForm::SquaredDistance,
            delta_mode: DeltaMode::SquaredBanded,
            error_norm: ErrorNorm::L2,
        }
    }
}

impl WfmParams {
    /// Sets `theta` and rederives `sigma = theta / 4`.
    pub fn with_theta(mut self, theta: usize) -> Self {
        self.theta = theta;
        self.sigma = theta as f64 / 4.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta <= 0.0 || !self.beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {}", self.beta)));
        }
        if self.sigma <= 0.0 || !self.sigma.is_finite() {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.alpha >= 0.0 || self.alpha.is_nan() {
            return Err(Error::InvalidParameter(format!(
                "alpha must be negative so exp(alpha * delta) stays in (0, 1], got {}",
                self.alpha
            )));
        }
        if self.theta < 1 {
            return Err(Error::InvalidParameter("theta must be at least 1".into()));
        }
        if self.phi < 1 {
            return Err(Error::InvalidParameter("phi must be at least 1".into()));
        }
        Ok(())
    }

    /// Builds the convolution kernel for these parameters.
    pub fn kernel(&self) -> Result<GaussianKernel> {
        GaussianKernel::new(self.theta, self.sigma, self.exponent_form)
    }
}
