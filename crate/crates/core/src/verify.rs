//! Independent oracles and harnesses: finite-difference gradient checking,
//! exact-vs-approximate deviation reports, wall-clock benchmarking, and a
//! direct map-optimization demo.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::approx::{afw_backward, afw_forward, GradMap};
use crate::conv::convolve_same;
use crate::error::{Error, Result};
use crate::exact::{fw_beta_exact_capped, DEFAULT_SIZE_CAP};
use crate::grid::{Grid2D, GroundTruthMask, PredictionMap};
use crate::kernel::{ExponentForm, GaussianKernel};
use crate::params::WfmParams;
use crate::parallel;

/// Central-difference estimate of the loss gradient, one pixel at a time.
/// Perturbed values are clipped to [0, 1]; at the box boundary the difference
/// becomes one-sided automatically.
pub fn finite_diff_grad(
    y: &GroundTruthMask,
    yhat: &PredictionMap,
    params: &WfmParams,
    h: f64,
) -> Result<GradMap> {
    if h <= 0.0 || !h.is_finite() {
        return Err(Error::InvalidParameter(format!("step h must be positive, got {h}")));
    }
    // fail fast on contract violations before spawning 2n evaluations
    afw_forward(y, yhat, params)?;

    let n = y.len();
    let base = yhat.grid().values();
    let results: Vec<Result<f64>> = parallel::map_indexed(n, |i| {
        let up = (base[i] + h).min(1.0);
        let down = (base[i] - h).max(0.0);
        let mut probe = base.to_vec();
        probe[i] = up;
        let loss_up = 1.0
            - afw_forward(
                y,
                &PredictionMap::new(Grid2D::new(y.width(), y.height(), probe)?)?,
                params,
            )?
            .0;
        let mut probe = base.to_vec();
        probe[i] = down;
        let loss_down = 1.0
            - afw_forward(
                y,
                &PredictionMap::new(Grid2D::new(y.width(), y.height(), probe)?)?,
                params,
            )?
            .0;
        Ok((loss_up - loss_down) / (up - down))
    });
    let mut values = Vec::with_capacity(n);
    for r in results {
        values.push(r?);
    }
    Ok(GradMap::new(Grid2D::new(y.width(), y.height(), values)?))
}

/// One exact-vs-approximate comparison row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationInstance {
    pub width: usize,
    pub height: usize,
    pub f_exact: f64,
    pub f_approx: f64,
    pub abs_gap: f64,
}

/// Seeded sweep of exact-vs-approximate scores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    pub instances: Vec<DeviationInstance>,
    pub max_gap: f64,
    pub mean_gap: f64,
    pub params: WfmParams,
    pub seed: u64,
}

/// Runs `trials` seeded random pairs at each size and reports the score gaps.
/// Deterministic for a fixed seed: instances are generated sequentially from
/// one stream, then evaluated in index order.
pub fn compare_exact_approx(
    sizes: &[usize],
    trials: usize,
    params: &WfmParams,
    seed: u64,
) -> Result<DeviationReport> {
    params.validate()?;
    for &s in sizes {
        if s == 0 {
            return Err(Error::InvalidParameter("grid size must be positive".into()));
        }
        if s * s > DEFAULT_SIZE_CAP {
            return Err(Error::SizeCapExceeded { pixels: s * s, cap: DEFAULT_SIZE_CAP });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(sizes.len() * trials);
    for &size in sizes {
        for _ in 0..trials {
            let y = blob_mask(size, size, &mut rng)?;
            let p = random_prediction(size, size, &mut rng)?;
            cases.push((y, p));
        }
    }

    let rows: Vec<Result<DeviationInstance>> = parallel::map_indexed(cases.len(), |i| {
        let (y, p) = &cases[i];
        let exact = fw_beta_exact_capped(y, p, params, DEFAULT_SIZE_CAP)?;
        let (approx, _) = afw_forward(y, p, params)?;
        Ok(DeviationInstance {
            width: y.width(),
            height: y.height(),
            f_exact: exact.f_w,
            f_approx: approx,
            abs_gap: (exact.f_w - approx).abs(),
        })
    });
    let mut instances = Vec::with_capacity(rows.len());
    for r in rows {
        instances.push(r?);
    }

    let max_gap = instances.iter().map(|r| r.abs_gap).fold(0.0, f64::max);
    let mean_gap =
        instances.iter().map(|r| r.abs_gap).sum::<f64>() / instances.len().max(1) as f64;
    Ok(DeviationReport { instances, max_gap, mean_gap, params: *params, seed })
}

/// Wall-clock comparison of the exact and approximate paths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub width: usize,
    pub height: usize,
    /// Median seconds per exact evaluation.
    pub exact_wall_secs: f64,
    /// Median seconds per approximate evaluation.
    pub approx_wall_secs: f64,
    pub speedup: f64,
    pub approx_images_per_sec: f64,
    pub repetitions: usize,
    pub machine: String,
}

fn machine_descriptor() -> String {
    let cpus = std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1);
    format!("{}-{} ({} cpus)", std::env::consts::OS, std::env::consts::ARCH, cpus)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Deterministic benchmark instance: a centered disk covering roughly 44% of
/// the frame (radius `3 size / 8`) against a seeded uniform prediction.
fn bench_instance(size: usize) -> Result<(GroundTruthMask, PredictionMap)> {
    let y = disk_mask(size, size, (3 * size) as f64 / 8.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0xBE_EF_CA_FE);
    let p = random_prediction(size, size, &mut rng)?;
    Ok((y, p))
}

/// Times both paths on one synthetic instance, single-threaded, median of
/// `reps` repetitions after one warm-up. Sizes above the oracle cap need
/// `allow_large_oracle` (the exact path streams, so memory stays linear, but
/// runtime is quadratic in the foreground count).
pub fn bench(
    size: usize,
    reps: usize,
    params: &WfmParams,
    allow_large_oracle: bool,
) -> Result<BenchReport> {
    params.validate()?;
    if reps < 5 {
        return Err(Error::InvalidParameter(format!(
            "timing needs at least 5 repetitions after warm-up, got {reps}"
        )));
    }
    if size * size > DEFAULT_SIZE_CAP && !allow_large_oracle {
        return Err(Error::SizeCapExceeded { pixels: size * size, cap: DEFAULT_SIZE_CAP });
    }
    let (y, p) = bench_instance(size)?;

    let (exact_times, approx_times) = parallel::run_single_threaded(|| -> Result<_> {
        // warm-up
        std::hint::black_box(fw_beta_exact_capped(&y, &p, params, usize::MAX)?);
        std::hint::black_box(afw_forward(&y, &p, params)?);

        let mut exact_times = Vec::with_capacity(reps);
        for _ in 0..reps {
            let t0 = Instant::now();
            std::hint::black_box(fw_beta_exact_capped(&y, &p, params, usize::MAX)?);
            exact_times.push(t0.elapsed().as_secs_f64());
        }
        let mut approx_times = Vec::with_capacity(reps);
        for _ in 0..reps {
            let t0 = Instant::now();
            std::hint::black_box(afw_forward(&y, &p, params)?);
            approx_times.push(t0.elapsed().as_secs_f64());
        }
        Ok((exact_times, approx_times))
    })?;

    let exact_wall_secs = median(exact_times);
    let approx_wall_secs = median(approx_times);
    Ok(BenchReport {
        width: size,
        height: size,
        exact_wall_secs,
        approx_wall_secs,
        speedup: exact_wall_secs / approx_wall_secs,
        approx_images_per_sec: 1.0 / approx_wall_secs,
        repetitions: reps,
        machine: machine_descriptor(),
    })
}

/// Times only the approximate forward (single-threaded, median of `reps`
/// after one warm-up). Used for complexity-shape measurements where the exact
/// side would be prohibitive.
pub fn measure_approx_forward(size: usize, reps: usize, params: &WfmParams) -> Result<f64> {
    params.validate()?;
    if reps < 1 {
        return Err(Error::InvalidParameter("need at least one repetition".into()));
    }
    let (y, p) = bench_instance(size)?;
    let times = parallel::run_single_threaded(|| -> Result<Vec<f64>> {
        std::hint::black_box(afw_forward(&y, &p, params)?);
        let mut times = Vec::with_capacity(reps);
        for _ in 0..reps {
            let t0 = Instant::now();
            std::hint::black_box(afw_forward(&y, &p, params)?);
            times.push(t0.elapsed().as_secs_f64());
        }
        Ok(times)
    })?;
    Ok(median(times))
}

/// One recorded optimization step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimStep {
    pub step: usize,
    pub loss: f64,
    pub f_w: f64,
}

/// Trace of the direct map-optimization demo.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimTrace {
    pub steps: Vec<OptimStep>,
    pub final_map: PredictionMap,
}

/// Gradient-descent demo on a single mask. The prediction is parameterized
/// through a logistic squashing of unconstrained per-pixel variables
/// initialized to 0 (so the map starts at 0.5 everywhere and never hits the
/// box boundary). Steps move against the gradient, renormalized to
/// `step_size` in the infinity norm: raw gradients of the score scale like
/// the reciprocal foreground count, so a fixed unnormalized step either
/// crawls or blows up as the mask grows, while the normalized direction keeps
/// the per-coordinate descent property that makes the loss monotone.
///
/// `seed` is reserved for randomized initializations; the current scheme is
/// deterministic.
pub fn optimize_map(
    y: &GroundTruthMask,
    steps: usize,
    step_size: f64,
    params: &WfmParams,
    _seed: u64,
) -> Result<OptimTrace> {
    params.validate()?;
    if step_size <= 0.0 || !step_size.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "step size must be positive, got {step_size}"
        )));
    }
    if y.foreground_count() == 0 {
        return Err(Error::AllBackground);
    }

    let n = y.len();
    let mut z = vec![0.0f64; n];
    let mut trace = Vec::with_capacity(steps);
    let mut current = squash(&z, y.width(), y.height())?;
    for step in 0..steps {
        let (f, cache) = afw_forward(y, &current, params)?;
        trace.push(OptimStep { step, loss: 1.0 - f, f_w: f });
        let grad = afw_backward(&cache, y, &current, params)?;
        // chain through the logistic: d yhat / d z = yhat (1 - yhat)
        let yv = current.grid().values();
        let gz: Vec<f64> =
            grad.values().iter().zip(yv).map(|(g, v)| g * v * (1.0 - v)).collect();
        let gmax = gz.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gmax == 0.0 {
            break;
        }
        for (zi, gi) in z.iter_mut().zip(&gz) {
            *zi -= step_size * gi / gmax;
        }
        current = squash(&z, y.width(), y.height())?;
    }
    Ok(OptimTrace { steps: trace, final_map: current })
}

fn squash(z: &[f64], width: usize, height: usize) -> Result<PredictionMap> {
    let values = z.iter().map(|v| 1.0 / (1.0 + (-v).exp())).collect();
    PredictionMap::new(Grid2D::new(width, height, values)?)
}

/// Uniform i.i.d. prediction in [0, 1].
pub fn random_prediction(
    width: usize,
    height: usize,
    rng: &mut impl Rng,
) -> Result<PredictionMap> {
    PredictionMap::new(Grid2D::from_fn(width, height, |_, _| rng.gen::<f64>())?)
}

/// Random mask with contiguous blobs: thresholded smoothed noise, median
/// split, with both classes guaranteed.
pub fn blob_mask(width: usize, height: usize, rng: &mut impl Rng) -> Result<GroundTruthMask> {
    let noise = Grid2D::from_fn(width, height, |_, _| rng.gen::<f64>())?;
    let kernel = GaussianKernel::new(2, 1.0, ExponentForm::SquaredDistance)?;
    let smooth = convolve_same(&noise, &kernel);
    let mut sorted: Vec<f64> = smooth.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let thr = sorted[sorted.len() / 2];
    let mut values: Vec<f64> =
        smooth.values().iter().map(|v| if *v > thr { 1.0 } else { 0.0 }).collect();
    if !values.contains(&1.0) {
        values[0] = 1.0;
    }
    if !values.contains(&0.0) {
        values[0] = 0.0;
    }
    GroundTruthMask::new(Grid2D::new(width, height, values)?)
}

/// Centered disk of the given radius.
pub fn disk_mask(width: usize, height: usize, radius: f64) -> Result<GroundTruthMask> {
    let cx = (width as f64 - 1.0) / 2.0;
    let cy = (height as f64 - 1.0) / 2.0;
    GroundTruthMask::from_fn(width, height, |x, y| {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        dx * dx + dy * dy <= radius * radius
    })
}
