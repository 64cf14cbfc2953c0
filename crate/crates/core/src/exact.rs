//! Brute-force reference implementation of the weighted F-measure.
//!
//! Slow but definitionally direct: pair weights are summed over every
//! foreground pair with no truncation. This is the correctness oracle for the
//! convolutional approximation and a standalone evaluator for small images.

use serde::Serialize;

use crate::distance::min_squared_distance_field;
use crate::error::{Error, Result};
use crate::grid::{Grid2D, GroundTruthMask, PredictionMap};
use crate::kernel::gaussian_pair_weight;
use crate::params::{DeltaMode, ErrorNorm, WfmParams};
use crate::parallel;

/// Default cap on pixel count for the exact path; a dense pair matrix at this
/// size is about 2 GB. Callers can lift it through the `_capped` entry points.
pub const DEFAULT_SIZE_CAP: usize = 16384;

/// Dense pair-weight matrix; entry `(j, i)` weights how much of pixel `j`'s
/// error flows into pixel `i`. Identity on the background diagonal, Gaussian
/// on foreground pairs, zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelWeightMatrixA {
    n: usize,
    data: Vec<f64>,
}

impl PixelWeightMatrixA {
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry at row `j`, column `i`.
    #[inline]
    pub fn at(&self, j: usize, i: usize) -> f64 {
        self.data[j * self.n + i]
    }
}

/// Per-pixel false-positive weight: 1 on foreground, in (1, 2] on background.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelWeightVectorB {
    values: Vec<f64>,
}

impl PixelWeightVectorB {
    pub(crate) fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// The four weighted confusion quantities and the derived scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedCounts {
    pub tp_w: f64,
    pub fp_w: f64,
    pub fn_w: f64,
    pub tn_w: f64,
    pub p_w: f64,
    pub r_w: f64,
    pub f_w: f64,
}

/// Per-pixel error map: `|yhat - y|` under L1, `(yhat - y)^2` under L2.
pub fn error_map(y: &GroundTruthMask, yhat: &PredictionMap, norm: ErrorNorm) -> Result<Grid2D> {
    y.grid().check_same_shape(yhat.grid())?;
    let values = y
        .grid()
        .values()
        .iter()
        .zip(yhat.grid().values())
        .map(|(yv, pv)| match norm {
            ErrorNorm::L1 => (pv - yv).abs(),
            ErrorNorm::L2 => (pv - yv) * (pv - yv),
        })
        .collect();
    Grid2D::new(y.width(), y.height(), values)
}

fn check_cap(pixels: usize, cap: usize) -> Result<()> {
    if pixels > cap {
        Err(Error::SizeCapExceeded { pixels, cap })
    } else {
        Ok(())
    }
}

/// Materializes the dense pair matrix. Refuses images above `DEFAULT_SIZE_CAP`
/// pixels; use [`build_matrix_a_capped`] to override.
pub fn build_matrix_a(y: &GroundTruthMask, params: &WfmParams) -> Result<PixelWeightMatrixA> {
    build_matrix_a_capped(y, params, DEFAULT_SIZE_CAP)
}

pub fn build_matrix_a_capped(
    y: &GroundTruthMask,
    params: &WfmParams,
    cap: usize,
) -> Result<PixelWeightMatrixA> {
    params.validate()?;
    let n = y.len();
    check_cap(n, cap)?;
    let w = y.width();
    let mask = y.grid().values();
    let sigma = params.sigma;
    let form = params.exponent_form;

    let mut data = vec![0.0f64; n * n];
    // one matrix row per call: row j holds the weights pixel j sends out
    parallel::fill_rows(&mut data, n, |j, row| {
        if mask[j] == 1.0 {
            let (jx, jy) = ((j % w) as f64, (j / w) as f64);
            for (i, out) in row.iter_mut().enumerate() {
                if mask[i] == 1.0 {
                    let dx = (i % w) as f64 - jx;
                    let dy = (i / w) as f64 - jy;
                    *out = gaussian_pair_weight(dx * dx + dy * dy, sigma, form);
                }
            }
        } else {
            row[j] = 1.0;
        }
    });

    Ok(PixelWeightMatrixA { n, data })
}

/// Shared banded B computation: 1 on foreground, `2 - exp(alpha * delta)` on
/// background with `delta` from the windowed squared-distance field. The
/// approximation path calls this too, so the two stay elementwise identical.
pub(crate) fn banded_b_values(y: &GroundTruthMask, phi: usize, alpha: f64) -> Result<Vec<f64>> {
    let field = min_squared_distance_field(y, phi)?;
    Ok(y.grid()
        .values()
        .iter()
        .zip(field.grid().values())
        .map(|(yv, delta)| {
            if *yv == 1.0 {
                1.0
            } else {
                // exp(alpha * inf) = 0 for negative alpha, giving exactly 2
                2.0 - (alpha * delta).exp()
            }
        })
        .collect())
}

/// Builds the false-positive weight vector under `params.delta_mode`.
pub fn build_vector_b(y: &GroundTruthMask, params: &WfmParams) -> Result<PixelWeightVectorB> {
    params.validate()?;
    if y.foreground_count() == 0 {
        return Err(Error::AllBackground);
    }
    let values = match params.delta_mode {
        DeltaMode::SquaredBanded => banded_b_values(y, params.phi, params.alpha)?,
        DeltaMode::PlainUnbounded => {
            let fg = y.foreground_pixels();
            let w = y.width();
            let alpha = params.alpha;
            let mask = y.grid().values();
            let mut values = vec![0.0f64; y.len()];
            parallel::fill_rows(&mut values, w, |py, row| {
                for (px, out) in row.iter_mut().enumerate() {
                    if mask[py * w + px] == 1.0 {
                        *out = 1.0;
                    } else {
                        let mut best = f64::INFINITY;
                        for (fx, fy) in &fg {
                            let dx = *fx as f64 - px as f64;
                            let dy = *fy as f64 - py as f64;
                            let d2 = dx * dx + dy * dy;
                            if d2 < best {
                                best = d2;
                            }
                        }
                        *out = 2.0 - (alpha * best.sqrt()).exp();
                    }
                }
            });
            values
        }
    };
    Ok(PixelWeightVectorB { values })
}

/// Reweighted error through the materialized matrix:
/// `Ew_i = min((E A)_i, E_i) * B_i`.
pub fn weighted_error(
    e: &Grid2D,
    a: &PixelWeightMatrixA,
    b: &PixelWeightVectorB,
) -> Result<Grid2D> {
    let n = e.len();
    if a.n() != n || b.len() != n {
        return Err(Error::InvalidGrid(format!(
            "weight shapes ({} / {}) do not match the {n}-pixel error map",
            a.n(),
            b.len()
        )));
    }
    let ev = e.values();
    let out = parallel::map_indexed(n, |i| {
        let mut ea = 0.0;
        for (j, ej) in ev.iter().enumerate() {
            ea += ej * a.at(j, i);
        }
        ea.min(ev[i]) * b.values()[i]
    });
    Grid2D::new(e.width(), e.height(), out)
}

/// Folds a weighted error map into the four counts and the derived scores.
/// When `TP^w` is zero, precision, recall, and F are all zero by convention.
pub fn weighted_counts(y: &GroundTruthMask, e_w: &Grid2D, beta: f64) -> WeightedCounts {
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut fnw = 0.0;
    let mut tn = 0.0;
    for (yv, ew) in y.grid().values().iter().zip(e_w.values()) {
        if *yv == 1.0 {
            tp += 1.0 - ew;
            fnw += ew;
        } else {
            fp += ew;
            tn += 1.0 - ew;
        }
    }
    let (p, r, f) = if tp > 0.0 {
        let p = tp / (tp + fp);
        let r = tp / (tp + fnw);
        let b2 = beta * beta;
        (p, r, (1.0 + b2) * p * r / (b2 * p + r))
    } else {
        (0.0, 0.0, 0.0)
    };
    WeightedCounts { tp_w: tp, fp_w: fp, fn_w: fnw, tn_w: tn, p_w: p, r_w: r, f_w: f }
}

/// Exact weighted F-measure. The pair sums run over every foreground pair
/// directly, without materializing the matrix, so memory stays linear; the
/// cap guards runtime, not memory.
pub fn fw_beta_exact(
    y: &GroundTruthMask,
    yhat: &PredictionMap,
    params: &WfmParams,
) -> Result<WeightedCounts> {
    fw_beta_exact_capped(y, yhat, params, DEFAULT_SIZE_CAP)
}

pub fn fw_beta_exact_capped(
    y: &GroundTruthMask,
    yhat: &PredictionMap,
    params: &WfmParams,
    cap: usize,
) -> Result<WeightedCounts> {
    params.validate()?;
    y.grid().check_same_shape(yhat.grid())?;
    check_cap(y.len(), cap)?;
    if y.foreground_count() == 0 {
        return Err(Error::AllBackground);
    }

    let e = error_map(y, yhat, params.error_norm)?;
    let b = build_vector_b(y, params)?;

    let w = y.width();
    let mask = y.grid().values();
    let ev = e.values();
    let sigma = params.sigma;
    let form = params.exponent_form;

    // foreground pixels with their error values, in row-major order
    let fg: Vec<(f64, f64, f64)> = mask
        .iter()
        .enumerate()
        .filter(|(_, yv)| **yv == 1.0)
        .map(|(j, _)| ((j % w) as f64, (j / w) as f64, ev[j]))
        .collect();

    let mut e_w = vec![0.0f64; y.len()];
    parallel::fill_rows(&mut e_w, w, |py, row| {
        for (px, out) in row.iter_mut().enumerate() {
            let i = py * w + px;
            let ei = ev[i];
            // background rows of the pair matrix are identity, so (E A)_i = E_i
            let ea = if mask[i] == 1.0 {
                let (ix, iy) = (px as f64, py as f64);
                let mut acc = 0.0;
                for (fx, fy, fe) in &fg {
                    let dx = fx - ix;
                    let dy = fy - iy;
                    acc += fe * gaussian_pair_weight(dx * dx + dy * dy, sigma, form);
                }
                acc
            } else {
                ei
            };
            *out = ea.min(ei) * b.values()[i];
        }
    });

    let e_w = Grid2D::new(y.width(), y.height(), e_w)?;
    Ok(weighted_counts(y, &e_w, params.beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mask_from(w: usize, h: usize, fg: &[(usize, usize)]) -> GroundTruthMask {
        GroundTruthMask::from_fn(w, h, |x, y| fg.contains(&(x, y))).unwrap()
    }

    fn random_pair(size: usize, seed: u64) -> (GroundTruthMask, PredictionMap) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = GroundTruthMask::from_fn(size, size, |_, _| rng.gen_bool(0.4)).unwrap();
        let y = if y.foreground_count() == 0 { mask_from(size, size, &[(0, 0)]) } else { y };
        let p = PredictionMap::new(
            Grid2D::from_fn(size, size, |_, _| rng.gen::<f64>()).unwrap(),
        )
        .unwrap();
        (y, p)
    }

    #[test]
    fn error_map_examples() {
        let y = mask_from(2, 1, &[(0, 0)]);
        let p = PredictionMap::new(Grid2D::new(2, 1, vec![0.5, 0.3]).unwrap()).unwrap();
        let l2 = error_map(&y, &p, ErrorNorm::L2).unwrap();
        assert!((l2.get(0, 0) - 0.25).abs() < 1e-15);
        let l1 = error_map(&y, &p, ErrorNorm::L1).unwrap();
        assert!((l1.get(1, 0) - 0.3).abs() < 1e-15);
        let same = error_map(&y, &PredictionMap::from_mask(&y), ErrorNorm::L2).unwrap();
        assert!(same.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn error_map_rejects_shape_mismatch() {
        let y = mask_from(2, 2, &[(0, 0)]);
        let p = PredictionMap::constant(3, 2, 0.5).unwrap();
        assert!(matches!(error_map(&y, &p, ErrorNorm::L2), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn matrix_a_structure() {
        let y = mask_from(4, 4, &[(1, 1), (1, 2)]);
        let a = build_matrix_a(&y, &WfmParams::default()).unwrap();
        let n = 16;
        // background pixel 0: identity row and column
        assert_eq!(a.at(0, 0), 1.0);
        for k in 1..n {
            assert_eq!(a.at(0, k), 0.0);
            assert_eq!(a.at(k, 0), 0.0);
        }
        // foreground diagonal carries the Gaussian coefficient, not 1
        let i_fg = 4 + 1;
        assert!((a.at(i_fg, i_fg) - 0.17730768017841453).abs() < 1e-12);
        // symmetric on the foreground block
        let j_fg = 2 * 4 + 1;
        assert_eq!(a.at(i_fg, j_fg), a.at(j_fg, i_fg));
    }

    #[test]
    fn matrix_a_pair_entry_at_distance_three() {
        let y = mask_from(8, 8, &[(1, 1), (4, 1)]);
        let a = build_matrix_a(&y, &WfmParams::default()).unwrap();
        let i = 8 + 1;
        let j = 8 + 4;
        assert!((a.at(i, j) - 0.07289336652266383).abs() < 1e-12);
    }

    #[test]
    fn matrix_a_respects_cap() {
        let y = mask_from(5, 5, &[(2, 2)]);
        assert!(matches!(
            build_matrix_a_capped(&y, &WfmParams::default(), 24),
            Err(Error::SizeCapExceeded { pixels: 25, cap: 24 })
        ));
    }

    #[test]
    fn vector_b_examples() {
        let y = mask_from(16, 16, &[(3, 3)]);
        let b = build_vector_b(&y, &WfmParams::default()).unwrap();
        let at = |x: usize, yy: usize| b.values()[yy * 16 + x];
        assert_eq!(at(3, 3), 1.0);
        // squared distance 4 from the foreground pixel
        assert!((at(3, 5) - 1.4256508225014826).abs() < 1e-12);
        // no foreground within the window: exactly 2
        assert_eq!(at(15, 15), 2.0);
    }

    #[test]
    fn vector_b_plain_unbounded_uses_euclidean_distance() {
        let params = WfmParams { delta_mode: DeltaMode::PlainUnbounded, ..Default::default() };
        let y = mask_from(16, 16, &[(0, 0)]);
        let b = build_vector_b(&y, &params).unwrap();
        let expect = 2.0 - (params.alpha * 15.0).exp();
        assert!((b.values()[15] - expect).abs() < 1e-12);
        // strictly below 2 even far away
        assert!(b.values()[16 * 16 - 1] < 2.0);
    }

    #[test]
    fn vector_b_rejects_all_background() {
        let y = GroundTruthMask::from_fn(4, 4, |_, _| false).unwrap();
        assert!(matches!(build_vector_b(&y, &WfmParams::default()), Err(Error::AllBackground)));
    }

    #[test]
    fn weighted_error_zero_error_stays_zero() {
        let y = mask_from(6, 6, &[(2, 2), (3, 2)]);
        let params = WfmParams::default();
        let a = build_matrix_a(&y, &params).unwrap();
        let b = build_vector_b(&y, &params).unwrap();
        let e = Grid2D::zeros(6, 6).unwrap();
        let ew = weighted_error(&e, &a, &b).unwrap();
        assert!(ew.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn weighted_error_background_is_error_times_b() {
        let (y, p) = random_pair(8, 3);
        let params = WfmParams::default();
        let e = error_map(&y, &p, params.error_norm).unwrap();
        let a = build_matrix_a(&y, &params).unwrap();
        let b = build_vector_b(&y, &params).unwrap();
        let ew = weighted_error(&e, &a, &b).unwrap();
        for i in 0..y.len() {
            if y.grid().values()[i] == 0.0 {
                let expect = e.values()[i] * b.values()[i];
                assert!((ew.values()[i] - expect).abs() < 1e-12);
            }
        }
    }

    /// Independent triple-loop evaluation of the pair-matrix definitions,
    /// kept free of the production matrix/convolution code paths.
    fn triple_loop_ew(
        y: &GroundTruthMask,
        e: &Grid2D,
        params: &WfmParams,
    ) -> Vec<f64> {
        let w = y.width();
        let n = y.len();
        let mask = y.grid().values();
        let coeff = 1.0 / (2.0 * std::f64::consts::PI * params.sigma * params.sigma).sqrt();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut ea = 0.0;
            for j in 0..n {
                let a_ji = if mask[i] == 1.0 && mask[j] == 1.0 {
                    let dx = (i % w) as f64 - (j % w) as f64;
                    let dy = (i / w) as f64 - (j / w) as f64;
                    let d2 = dx * dx + dy * dy;
                    let dexp = match params.exponent_form {
                        crate::kernel::ExponentForm::SquaredDistance => d2,
                        crate::kernel::ExponentForm::Distance => d2.sqrt(),
                    };
                    coeff * (-dexp / (2.0 * params.sigma * params.sigma)).exp()
                } else if i == j && mask[i] == 0.0 {
                    1.0
                } else {
                    0.0
                };
                ea += e.values()[j] * a_ji;
            }
            let b_i = if mask[i] == 1.0 {
                1.0
            } else {
                let mut best = f64::INFINITY;
                let (ix, iy) = ((i % w) as isize, (i / w) as isize);
                for dy in -(params.phi as isize)..=(params.phi as isize) {
                    for dx in -(params.phi as isize)..=(params.phi as isize) {
                        let (qx, qy) = (ix + dx, iy + dy);
                        if qx >= 0
                            && qy >= 0
                            && (qx as usize) < w
                            && (qy as usize) < y.height()
                            && mask[qy as usize * w + qx as usize] == 1.0
                        {
                            best = best.min((dx * dx + dy * dy) as f64);
                        }
                    }
                }
                2.0 - (params.alpha * best).exp()
            };
            out[i] = ea.min(e.values()[i]) * b_i;
        }
        out
    }

    #[test]
    fn weighted_error_matches_triple_loop_on_random_instance() {
        let (y, p) = random_pair(12, 42);
        let params = WfmParams::default();
        let e = error_map(&y, &p, params.error_norm).unwrap();
        let a = build_matrix_a(&y, &params).unwrap();
        let b = build_vector_b(&y, &params).unwrap();
        let ew = weighted_error(&e, &a, &b).unwrap();
        let oracle = triple_loop_ew(&y, &e, &params);
        for (got, want) in ew.values().iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn perfect_prediction_scores_one_exactly() {
        let y = mask_from(9, 7, &[(4, 3), (5, 3), (4, 4)]);
        for beta in [0.5, 1.0, 2.0] {
            let params = WfmParams { beta, ..Default::default() };
            let c = fw_beta_exact(&y, &PredictionMap::from_mask(&y), &params).unwrap();
            assert_eq!(c.f_w, 1.0);
            assert_eq!(c.fp_w, 0.0);
            assert_eq!(c.fn_w, 0.0);
        }
    }

    #[test]
    fn streaming_matches_matrix_route_on_random_instances() {
        let params = WfmParams::default();
        for seed in 0..8u64 {
            let (y, p) = random_pair(16, 100 + seed);
            let fast = fw_beta_exact(&y, &p, &params).unwrap();
            let e = error_map(&y, &p, params.error_norm).unwrap();
            let a = build_matrix_a(&y, &params).unwrap();
            let b = build_vector_b(&y, &params).unwrap();
            let ew = weighted_error(&e, &a, &b).unwrap();
            let via_matrix = weighted_counts(&y, &ew, params.beta);
            assert!((fast.f_w - via_matrix.f_w).abs() < 1e-10);
            assert!((fast.tp_w - via_matrix.tp_w).abs() < 1e-9);
        }
    }

    #[test]
    fn inverted_prediction_still_agrees_with_matrix_route() {
        let y = mask_from(10, 10, &[(4, 4), (5, 4), (4, 5), (5, 5)]);
        let inv = PredictionMap::new(
            Grid2D::from_fn(10, 10, |x, yy| if y.is_foreground(x, yy) { 0.0 } else { 1.0 }).unwrap(),
        )
        .unwrap();
        let params = WfmParams::default();
        let fast = fw_beta_exact(&y, &inv, &params).unwrap();
        let e = error_map(&y, &inv, params.error_norm).unwrap();
        let a = build_matrix_a(&y, &params).unwrap();
        let b = build_vector_b(&y, &params).unwrap();
        let ew = weighted_error(&e, &a, &b).unwrap();
        let via_matrix = weighted_counts(&y, &ew, params.beta);
        assert!((fast.f_w - via_matrix.f_w).abs() < 1e-10);
    }

    #[test]
    fn recall_identity_holds() {
        for seed in 0..6u64 {
            let (y, p) = random_pair(14, 7000 + seed);
            let c = fw_beta_exact(&y, &p, &WfmParams::default()).unwrap();
            let nfg = y.foreground_count() as f64;
            assert!((c.tp_w + c.fn_w - nfg).abs() < 1e-9);
            assert!(c.r_w * nfg - c.tp_w < 1e-9);
        }
    }

    #[test]
    fn exact_respects_size_cap() {
        let y = mask_from(130, 130, &[(60, 60)]);
        let p = PredictionMap::constant(130, 130, 0.5).unwrap();
        assert!(matches!(
            fw_beta_exact(&y, &p, &WfmParams::default()),
            Err(Error::SizeCapExceeded { .. })
        ));
        assert!(fw_beta_exact_capped(&y, &p, &WfmParams::default(), usize::MAX).is_ok());
    }
}
