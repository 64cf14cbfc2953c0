//! Truncated Gaussian kernels for the convolutional pixel-pair weighting.

use serde::Serialize;

use crate::error::{Error, Result};

/// Which function of the Euclidean distance goes into the Gaussian exponent.
///
/// `SquaredDistance` uses `d^2 / (2 sigma^2)`, `Distance` uses `d / (2 sigma^2)`.
/// The exact pair matrix and the convolution kernel share this choice, so the
/// approximation always targets the same metric the oracle computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExponentForm {
    SquaredDistance,
    Distance,
}

/// Gaussian pair weight between pixels at squared distance `d2`.
///
/// This is the entry formula of the pair matrix; the kernel below is the same
/// function tabulated on window offsets. Not normalized to sum 1: the
/// `(2 pi sigma^2)^(-1/2)` coefficient is kept as-is.
#[inline]
pub(crate) fn gaussian_pair_weight(d2: f64, sigma: f64, form: ExponentForm) -> f64 {
    let coeff = 1.0 / (2.0 * std::f64::consts::PI * sigma * sigma).sqrt();
    let d = match form {
        ExponentForm::SquaredDistance => d2,
        ExponentForm::Distance => d2.sqrt(),
    };
    coeff * (-d / (2.0 * sigma * sigma)).exp()
}

/// A `(2 theta + 1) x (2 theta + 1)` Gaussian window, centrally symmetric,
/// with center weight `(2 pi sigma^2)^(-1/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKernel {
    theta: usize,
    sigma: f64,
    exponent_form: ExponentForm,
    weights: Vec<f64>,
}

impl GaussianKernel {
    pub fn new(theta: usize, sigma: f64, exponent_form: ExponentForm) -> Result<Self> {
        if theta < 1 {
            return Err(Error::InvalidParameter(format!(
                "kernel half-width must be at least 1, got {theta}"
            )));
        }
        if sigma <= 0.0 || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma must be a positive real, got {sigma}"
            )));
        }
        let size = 2 * theta + 1;
        let mut weights = Vec::with_capacity(size * size);
        let r = theta as isize;
        for q in -r..=r {
            for p in -r..=r {
                let d2 = (p * p + q * q) as f64;
                weights.push(gaussian_pair_weight(d2, sigma, exponent_form));
            }
        }
        Ok(Self { theta, sigma, exponent_form, weights })
    }

    #[inline]
    pub fn theta(&self) -> usize {
        self.theta
    }

    #[inline]
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    #[inline]
    pub fn exponent_form(&self) -> ExponentForm {
        self.exponent_form
    }

    /// Side length `2 theta + 1`.
    #[inline]
    pub fn size(&self) -> usize {
        2 * self.theta + 1
    }

    /// Row-major weights, rows indexed by the vertical offset `q + theta`.
    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at offset `(p, q)` with `p, q` in `[-theta, theta]`.
    #[inline]
    pub fn weight(&self, p: isize, q: isize) -> f64 {
        let r = self.theta as isize;
        debug_assert!(p.abs() <= r && q.abs() <= r);
        self.weights[((q + r) as usize) * self.size() + (p + r) as usize]
    }

    #[inline]
    pub fn center_weight(&self) -> f64 {
        self.weight(0, 0)
    }
}
