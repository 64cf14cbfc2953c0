//! Conventional foreground-map evaluation metrics and dataset aggregation.

use serde::Serialize;

use crate::approx::afw_forward;
use crate::error::{Error, Result};
use crate::grid::{GroundTruthMask, PredictionMap};
use crate::params::WfmParams;

/// Mean absolute per-pixel difference.
pub fn mae(y: &GroundTruthMask, yhat: &PredictionMap) -> Result<f64> {
    y.grid().check_same_shape(yhat.grid())?;
    let sum: f64 = y
        .grid()
        .values()
        .iter()
        .zip(yhat.grid().values())
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok(sum / y.len() as f64)
}

/// Exact rank-based AUROC: the probability that a random foreground pixel
/// outscores a random background pixel, ties counted one half. Equivalent to
/// the Mann-Whitney U statistic.
pub fn auroc(y: &GroundTruthMask, yhat: &PredictionMap) -> Result<f64> {
    y.grid().check_same_shape(yhat.grid())?;
    let n_pos = y.foreground_count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 {
        return Err(Error::AllBackground);
    }
    if n_neg == 0 {
        return Err(Error::SingleClass);
    }

    let mut scored: Vec<(f64, bool)> = y
        .grid()
        .values()
        .iter()
        .zip(yhat.grid().values())
        .map(|(yv, pv)| (*pv, *yv == 1.0))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));

    // average ranks over tie runs, summed for the positive class
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0usize;
    while i < scored.len() {
        let mut j = i;
        while j < scored.len() && scored[j].0 == scored[i].0 {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0; // mean of ranks i+1 ..= j
        for item in &scored[i..j] {
            if item.1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let n_pos_f = n_pos as f64;
    let u = rank_sum_pos - n_pos_f * (n_pos_f + 1.0) / 2.0;
    Ok(u / (n_pos_f * n_neg as f64))
}

fn fbeta_from_counts(tp: f64, fp: f64, fnc: f64, beta_sq: f64) -> f64 {
    if tp <= 0.0 {
        return 0.0;
    }
    let p = tp / (tp + fp);
    let r = tp / (tp + fnc);
    (1.0 + beta_sq) * p * r / (beta_sq * p + r)
}

/// Best F over binarization thresholds, swept over the distinct observed
/// prediction values plus 0. A pixel passes a threshold when its value is
/// strictly greater. Returns the maximum F and the smallest threshold
/// achieving it.
pub fn fbeta_max(y: &GroundTruthMask, yhat: &PredictionMap, beta_sq: f64) -> Result<(f64, f64)> {
    y.grid().check_same_shape(yhat.grid())?;
    if beta_sq <= 0.0 || beta_sq.is_nan() {
        return Err(Error::InvalidParameter(format!("beta^2 must be positive, got {beta_sq}")));
    }
    let n_pos = y.foreground_count();
    if n_pos == 0 {
        return Err(Error::AllBackground);
    }

    // sort once, descending: at threshold v the passing set is exactly the
    // prefix before v's first occurrence, so one sweep covers every distinct
    // threshold in O(n log n) total
    let mut scored: Vec<(f64, bool)> = y
        .grid()
        .values()
        .iter()
        .zip(yhat.grid().values())
        .map(|(yv, pv)| (*pv, *yv == 1.0))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut best_f = f64::NEG_INFINITY;
    let mut best_t = 0.0;
    // >= keeps the last (smallest) threshold among ties for the maximum
    let consider = |t: f64, tp: f64, fp: f64, best_f: &mut f64, best_t: &mut f64| {
        let f = fbeta_from_counts(tp, fp, n_pos as f64 - tp, beta_sq);
        if f >= *best_f {
            *best_f = f;
            *best_t = t;
        }
    };

    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut k = 0usize;
    while k < scored.len() {
        let t = scored[k].0;
        consider(t, tp, fp, &mut best_f, &mut best_t);
        while k < scored.len() && scored[k].0 == t {
            if scored[k].1 {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            k += 1;
        }
    }
    // threshold 0 when it is not among the observed values
    if scored.last().is_none_or(|s| s.0 > 0.0) {
        consider(0.0, tp, fp, &mut best_f, &mut best_t);
    }
    Ok((best_f, best_t))
}

/// Legacy fixed-grid variant: thresholds `k / (levels - 1)` for
/// `k = 0 .. levels`, matching 8-bit benchmark scripts at `levels = 256`.
pub fn fbeta_max_fixed_levels(
    y: &GroundTruthMask,
    yhat: &PredictionMap,
    beta_sq: f64,
    levels: u32,
) -> Result<(f64, f64)> {
    y.grid().check_same_shape(yhat.grid())?;
    if beta_sq <= 0.0 || beta_sq.is_nan() || levels < 2 {
        return Err(Error::InvalidParameter("need beta^2 > 0 and at least 2 levels".into()));
    }
    let n_pos = y.foreground_count();
    if n_pos == 0 {
        return Err(Error::AllBackground);
    }
    let mut best_f = f64::NEG_INFINITY;
    let mut best_t = 0.0;
    for k in 0..levels {
        let t = k as f64 / (levels - 1) as f64;
        let mut tp = 0.0;
        let mut fp = 0.0;
        for (yv, pv) in y.grid().values().iter().zip(yhat.grid().values()) {
            if *pv > t {
                if *yv == 1.0 {
                    tp += 1.0;
                } else {
                    fp += 1.0;
                }
            }
        }
        let f = fbeta_from_counts(tp, fp, n_pos as f64 - tp, beta_sq);
        if f > best_f {
            best_f = f;
            best_t = t;
        }
    }
    Ok((best_f, best_t))
}

/// Intersection-over-union of the prediction thresholded at 0.5 against the
/// foreground.
pub fn iou_at_half(y: &GroundTruthMask, yhat: &PredictionMap) -> Result<f64> {
    y.grid().check_same_shape(yhat.grid())?;
    if y.foreground_count() == 0 {
        return Err(Error::AllBackground);
    }
    let mut inter = 0usize;
    let mut union = 0usize;
    for (yv, pv) in y.grid().values().iter().zip(yhat.grid().values()) {
        let pred = *pv > 0.5;
        let gt = *yv == 1.0;
        if pred && gt {
            inter += 1;
        }
        if pred || gt {
            union += 1;
        }
    }
    Ok(inter as f64 / union as f64)
}

/// The weighted F at `beta = 1` through the fast forward path, exposed as an
/// evaluation metric.
pub fn fw1_eval(y: &GroundTruthMask, yhat: &PredictionMap, params: &WfmParams) -> Result<f64> {
    let mut p = *params;
    p.beta = 1.0;
    Ok(afw_forward(y, yhat, &p)?.0)
}

/// One evaluated image.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageMetrics {
    pub id: String,
    pub mae: f64,
    pub auroc: f64,
    pub fbeta_max: f64,
    pub best_threshold: f64,
    pub iou_at_half: f64,
    pub fw1: f64,
}

/// Column means over the evaluated images.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsAggregate {
    pub mae: f64,
    pub auroc: f64,
    pub fbeta_max: f64,
    pub best_threshold: f64,
    pub iou_at_half: f64,
    pub fw1: f64,
}

/// Dataset-level report: per-image rows, their column means, and the
/// parameter snapshot they were computed under.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub per_image: Vec<ImageMetrics>,
    pub aggregate: Option<MetricsAggregate>,
    pub params: WfmParams,
    /// F threshold-sweep beta^2 (the reported F_0.3 convention).
    pub fbeta_sq: f64,
}

/// The threshold-sweep F uses beta^2 = 0.3 by convention.
pub const DEFAULT_FBETA_SQ: f64 = 0.3;

/// Evaluates the whole metric suite on one image pair.
pub fn evaluate_image(
    id: &str,
    y: &GroundTruthMask,
    yhat: &PredictionMap,
    params: &WfmParams,
    fbeta_sq: f64,
) -> Result<ImageMetrics> {
    let (fb, t) = fbeta_max(y, yhat, fbeta_sq)?;
    Ok(ImageMetrics {
        id: id.to_string(),
        mae: mae(y, yhat)?,
        auroc: auroc(y, yhat)?,
        fbeta_max: fb,
        best_threshold: t,
        iou_at_half: iou_at_half(y, yhat)?,
        fw1: fw1_eval(y, yhat, params)?,
    })
}

/// Assembles rows into a report. Aggregation is a plain column mean in row
/// order, so it is independent of how the rows were produced.
pub fn metrics_report(
    mut per_image: Vec<ImageMetrics>,
    params: &WfmParams,
    fbeta_sq: f64,
) -> MetricsReport {
    per_image.sort_by(|a, b| a.id.cmp(&b.id));
    let aggregate = if per_image.is_empty() {
        None
    } else {
        let n = per_image.len() as f64;
        let mut sums = [0.0f64; 6];
        for row in &per_image {
            sums[0] += row.mae;
            sums[1] += row.auroc;
            sums[2] += row.fbeta_max;
            sums[3] += row.best_threshold;
            sums[4] += row.iou_at_half;
            sums[5] += row.fw1;
        }
        Some(MetricsAggregate {
            mae: sums[0] / n,
            auroc: sums[1] / n,
            fbeta_max: sums[2] / n,
            best_threshold: sums[3] / n,
            iou_at_half: sums[4] / n,
            fw1: sums[5] / n,
        })
    };
    MetricsReport { per_image, aggregate, params: *params, fbeta_sq }
}
