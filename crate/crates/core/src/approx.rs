//! Fast convolutional approximation of the weighted F-measure with an
//! analytic backward pass.
//!
//! Forward cost is linear in the pixel count at fixed kernel width. The
//! backward pass returns the gradient of `1 - F` with respect to the
//! prediction map; the convolution's adjoint is convolution with the same
//! kernel because the kernel is centrally symmetric.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use crate::conv::convolve_same;
use crate::error::{Error, Result};
use crate::exact::{banded_b_values, weighted_counts, PixelWeightVectorB, WeightedCounts};
use crate::grid::{Grid2D, GroundTruthMask, PredictionMap};
use crate::kernel::GaussianKernel;
use crate::params::{ErrorNorm, WfmParams};

/// Everything the backward pass needs from a forward evaluation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Per-pixel error map.
    pub e: Grid2D,
    /// `(Y ⊙ E) ∗ K`, the convolved foreground error.
    pub ye_conv: Grid2D,
    /// `Y ⊙ ye_conv + (1 - Y)`; exactly 1 on background.
    pub ea_approx: Grid2D,
    /// True where the minimum strictly selected the convolved branch.
    /// Ties fall to the error branch.
    pub ea_selected: Vec<bool>,
    /// False-positive weights (constant in the prediction).
    pub b: PixelWeightVectorB,
    pub counts: WeightedCounts,
    fingerprint: u64,
}

/// Per-pixel derivative of the scalar loss with respect to the prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct GradMap {
    grid: Grid2D,
}

impl GradMap {
    pub(crate) fn new(grid: Grid2D) -> Self {
        Self { grid }
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        self.grid.values()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.grid.get(x, y)
    }
}

fn fingerprint(y: &GroundTruthMask, yhat: &PredictionMap, params: &WfmParams) -> u64 {
    let mut h = DefaultHasher::new();
    y.width().hash(&mut h);
    y.height().hash(&mut h);
    for v in y.grid().values() {
        v.to_bits().hash(&mut h);
    }
    for v in yhat.grid().values() {
        v.to_bits().hash(&mut h);
    }
    params.beta.to_bits().hash(&mut h);
    params.sigma.to_bits().hash(&mut h);
    params.alpha.to_bits().hash(&mut h);
    params.theta.hash(&mut h);
    params.phi.hash(&mut h);
    (params.exponent_form as u8).hash(&mut h);
    (params.delta_mode as u8).hash(&mut h);
    (params.error_norm as u8).hash(&mut h);
    h.finish()
}

/// Convolutional stand-in for the exact pair sums:
/// `Y ⊙ ((Y ⊙ E) ∗ K) + (1 - Y)`. Background pixels are exactly 1.
pub fn approx_ea(y: &GroundTruthMask, e: &Grid2D, kernel: &GaussianKernel) -> Result<Grid2D> {
    y.grid().check_same_shape(e)?;
    let ye = Grid2D::new(
        y.width(),
        y.height(),
        y.grid()
            .values()
            .iter()
            .zip(e.values())
            .map(|(yv, ev)| yv * ev)
            .collect(),
    )?;
    let conv = convolve_same(&ye, kernel);
    Grid2D::new(
        y.width(),
        y.height(),
        y.grid()
            .values()
            .iter()
            .zip(conv.values())
            .map(|(yv, cv)| if *yv == 1.0 { *cv } else { 1.0 })
            .collect(),
    )
}

/// Banded false-positive weights; identical in value to the exact vector
/// built with the banded delta mode.
pub fn approx_b(y: &GroundTruthMask, params: &WfmParams) -> Result<PixelWeightVectorB> {
    params.validate()?;
    if y.foreground_count() == 0 {
        return Err(Error::AllBackground);
    }
    Ok(PixelWeightVectorB::from_values(banded_b_values(y, params.phi, params.alpha)?))
}

/// Approximate weighted F-measure. Returns the scalar score and the cache
/// consumed by [`afw_backward`].
pub fn afw_forward(
    y: &GroundTruthMask,
    yhat: &PredictionMap,
    params: &WfmParams,
) -> Result<(f64, ForwardCache)> {
    params.validate()?;
    y.grid().check_same_shape(yhat.grid())?;
    if y.foreground_count() == 0 {
        return Err(Error::AllBackground);
    }

    let e = crate::exact::error_map(y, yhat, params.error_norm)?;
    let kernel = params.kernel()?;
    let ye = Grid2D::new(
        y.width(),
        y.height(),
        y.grid()
            .values()
            .iter()
            .zip(e.values())
            .map(|(yv, ev)| yv * ev)
            .collect(),
    )?;
    let ye_conv = convolve_same(&ye, &kernel);
    let ea_values: Vec<f64> = y
        .grid()
        .values()
        .iter()
        .zip(ye_conv.values())
        .map(|(yv, cv)| if *yv == 1.0 { *cv } else { 1.0 })
        .collect();

    let b = approx_b(y, params)?;

    let mut ea_selected = vec![false; y.len()];
    let mut e_w = vec![0.0f64; y.len()];
    for i in 0..y.len() {
        let ea = ea_values[i];
        let ev = e.values()[i];
        let m = if ea < ev {
            ea_selected[i] = true;
            ea
        } else {
            ev
        };
        e_w[i] = m * b.values()[i];
    }
    let e_w = Grid2D::new(y.width(), y.height(), e_w)?;
    let counts = weighted_counts(y, &e_w, params.beta);

    let cache = ForwardCache {
        e,
        ye_conv,
        ea_approx: Grid2D::new(y.width(), y.height(), ea_values)?,
        ea_selected,
        b,
        counts,
        fingerprint: fingerprint(y, yhat, params),
    };
    Ok((cache.counts.f_w, cache))
}

/// Gradient of `1 - F` with respect to the prediction map, via the chain rule
/// through the cached forward quantities. Gradient flows through the selected
/// min branch only; at ties the error branch carries it. `B` and the kernel
/// are constants in the prediction.
pub fn afw_backward(
    cache: &ForwardCache,
    y: &GroundTruthMask,
    yhat: &PredictionMap,
    params: &WfmParams,
) -> Result<GradMap> {
    if cache.fingerprint != fingerprint(y, yhat, params) {
        return Err(Error::StaleCache);
    }
    let n = y.len();
    let c = &cache.counts;

    // Degenerate plateau: with zero weighted true positives the score is
    // pinned at 0 and the quotient derivatives blow up; return zeros.
    if c.tp_w <= 0.0 {
        return Ok(GradMap::new(Grid2D::zeros(y.width(), y.height())?));
    }

    let b2 = params.beta * params.beta;
    let den = b2 * c.p_w + c.r_w;
    let df_dp = (1.0 + b2) * c.r_w * c.r_w / (den * den);
    let df_dr = (1.0 + b2) * b2 * c.p_w * c.p_w / (den * den);
    let tp_fp = c.tp_w + c.fp_w;
    let tp_fn = c.tp_w + c.fn_w;
    let dp_dt = c.fp_w / (tp_fp * tp_fp);
    let dp_dfp = -c.tp_w / (tp_fp * tp_fp);
    let dr_dt = c.fn_w / (tp_fn * tp_fn);
    let dr_dfn = -c.tp_w / (tp_fn * tp_fn);

    // d(loss)/d(min result), folding in the count sensitivities and B
    let mask = y.grid().values();
    let mut dloss_dm = vec![0.0f64; n];
    for i in 0..n {
        let df_dew = if mask[i] == 1.0 {
            // foreground: raising Ew lowers TP and raises FN
            df_dp * (-dp_dt) + df_dr * (dr_dfn - dr_dt)
        } else {
            // background: raising Ew raises FP
            df_dp * dp_dfp
        };
        dloss_dm[i] = -df_dew * cache.b.values()[i];
    }

    // gradient reaching the convolution output (selected branch, foreground)
    let g_conv = Grid2D::new(
        y.width(),
        y.height(),
        (0..n)
            .map(|i| if cache.ea_selected[i] { dloss_dm[i] * mask[i] } else { 0.0 })
            .collect(),
    )?;
    // adjoint of the zero-padded convolution: same symmetric kernel
    let kernel = params.kernel()?;
    let g_ye = convolve_same(&g_conv, &kernel);

    let yv = yhat.grid().values();
    let grad: Vec<f64> = (0..n)
        .map(|i| {
            let direct = if cache.ea_selected[i] { 0.0 } else { dloss_dm[i] };
            let dloss_de = direct + mask[i] * g_ye.values()[i];
            let de_dyhat = match params.error_norm {
                ErrorNorm::L2 => 2.0 * (yv[i] - mask[i]),
                ErrorNorm::L1 => {
                    if yv[i] > mask[i] {
                        1.0
                    } else if yv[i] < mask[i] {
                        -1.0
                    } else {
                        0.0
                    }
                }
            };
            dloss_de * de_dyhat
        })
        .collect();

    Ok(GradMap::new(Grid2D::new(y.width(), y.height(), grad)?))
}

/// Fused forward + backward: returns `(1 - F, gradient)`.
pub fn afw_loss(
    y: &GroundTruthMask,
    yhat: &PredictionMap,
    params: &WfmParams,
) -> Result<(f64, GradMap)> {
    let (f, cache) = afw_forward(y, yhat, params)?;
    let grad = afw_backward(&cache, y, yhat, params)?;
    Ok((1.0 - f, grad))
}
