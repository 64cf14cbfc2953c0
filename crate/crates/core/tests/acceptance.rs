//! Acceptance suite: one pass/fail line per criterion.
//!
//! Run with `cargo test -p wfbeta --test acceptance -- --nocapture` to see the
//! per-criterion lines. All criteria execute inside a single test function so
//! the timing-sensitive ones are never perturbed by sibling test threads.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wfbeta::{
    afw_backward, afw_forward, auroc, bench, blob_mask, compare_exact_approx, disk_mask,
    fbeta_max, finite_diff_grad, fw_beta_exact, measure_approx_forward, optimize_map,
    random_prediction, Grid2D, GroundTruthMask, PredictionMap, WfmParams,
};

const SEED: u64 = 20_240_817;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check(results: &mut Vec<Outcome>, name: &'static str, pass: bool, detail: String) {
    println!("criterion {name}: {} — {detail}", if pass { "PASS" } else { "FAIL" });
    results.push(Outcome { name, pass, detail });
}

// 1. Oracle equivalence: >= 500 seeded pairs at 8/16/32, gap <= 1e-3 per
// instance under the matched configuration; <= 1e-9 with a covering kernel.
fn criterion_oracle_equivalence(results: &mut Vec<Outcome>) {
    let t0 = Instant::now();
    let params = WfmParams::default();
    let trials = 170usize; // 170 * 3 sizes = 510 instances
    let matched = compare_exact_approx(&[8, 16, 32], trials, &params, SEED).unwrap();

    let mut cover_max = 0.0f64;
    for size in [8usize, 16, 32] {
        // raise theta until the window spans every pixel pair; sigma stays
        // fixed so both routes still evaluate the same metric
        let cover = WfmParams { theta: size - 1, ..params };
        let report = compare_exact_approx(&[size], trials, &cover, SEED + size as u64).unwrap();
        cover_max = cover_max.max(report.max_gap);
    }
    let secs = t0.elapsed().as_secs_f64();
    let pass = matched.instances.len() >= 500
        && matched.max_gap <= 1e-3
        && cover_max <= 1e-9
        && secs < 120.0;
    check(
        results,
        "1 (oracle equivalence)",
        pass,
        format!(
            "{} instances, matched max gap {:.3e} (<= 1e-3), covering-theta max gap {:.3e} (<= 1e-9), {:.1}s",
            matched.instances.len(),
            matched.max_gap,
            cover_max,
            secs
        ),
    );
}

// 2. Gradient correctness: analytic backward vs central differences on 100
// random 16x16 instances; >= 99% of non-tied pixels within 1e-4 relative.
fn criterion_gradient_correctness(results: &mut Vec<Outcome>) {
    let t0 = Instant::now();
    let params = WfmParams::default();
    let h = 1e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0xABCD);
    let mut checked = 0usize;
    let mut within = 0usize;
    let mut nonfinite = 0usize;
    for _ in 0..100 {
        let y = blob_mask(16, 16, &mut rng).unwrap();
        let p = random_prediction(16, 16, &mut rng).unwrap();
        let (_, cache) = afw_forward(&y, &p, &params).unwrap();
        let analytic = afw_backward(&cache, &y, &p, &params).unwrap();
        let numeric = finite_diff_grad(&y, &p, &params, h).unwrap();
        for i in 0..y.len() {
            let (a, n) = (analytic.values()[i], numeric.values()[i]);
            if !a.is_finite() || !n.is_finite() {
                nonfinite += 1;
                continue;
            }
            // skip pixels whose min branch sits within 1e-6 of a tie
            if (cache.ea_approx.values()[i] - cache.e.values()[i]).abs() <= 1e-6 {
                continue;
            }
            checked += 1;
            let scale = a.abs().max(n.abs());
            let rel = if scale == 0.0 { 0.0 } else { (a - n).abs() / scale };
            if rel <= 1e-4 {
                within += 1;
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let rate = within as f64 / checked as f64;
    let pass = rate >= 0.99 && nonfinite == 0 && secs < 300.0;
    check(
        results,
        "2 (gradient correctness)",
        pass,
        format!(
            "{within}/{checked} non-tied pixels within 1e-4 relative ({:.4}%), {nonfinite} non-finite, {:.1}s",
            rate * 100.0,
            secs
        ),
    );
}

// 3. Speedup: approximate forward >= 100x faster than the exact oracle on
// 224x224 and <= 100 ms single-threaded.
fn criterion_speedup(results: &mut Vec<Outcome>) {
    let report = bench(224, 5, &WfmParams::default(), true).unwrap();
    let pass = report.speedup >= 100.0 && report.approx_wall_secs <= 0.100;
    check(
        results,
        "3 (speedup on 224x224)",
        pass,
        format!(
            "exact {:.3}s, approx {:.4}s, speedup {:.0}x (>= 100x), approx <= 100 ms: {}",
            report.exact_wall_secs,
            report.approx_wall_secs,
            report.speedup,
            report.approx_wall_secs <= 0.100
        ),
    );
}

// 4. Complexity shape: approximate forward scales linearly in pixel count
// across 64^2 .. 448^2, each point within 50% of the fitted line.
fn criterion_complexity_shape(results: &mut Vec<Outcome>) {
    let params = WfmParams::default();
    let sizes = [64usize, 128, 224, 448];
    let mut points = Vec::new();
    for &s in &sizes {
        let t = measure_approx_forward(s, 5, &params).unwrap();
        points.push(((s * s) as f64, t));
    }
    // least-squares slope through the origin
    let slope: f64 =
        points.iter().map(|(n, t)| n * t).sum::<f64>() / points.iter().map(|(n, _)| n * n).sum::<f64>();
    let mut worst = 0.0f64;
    for (n, t) in &points {
        worst = worst.max((t - slope * n).abs() / (slope * n));
    }
    let pass = worst <= 0.5;
    let detail = points
        .iter()
        .zip(&sizes)
        .map(|((_, t), s)| format!("{s}^2: {:.2}ms", t * 1e3))
        .collect::<Vec<_>>()
        .join(", ");
    check(
        results,
        "4 (linear complexity shape)",
        pass,
        format!("{detail}; worst deviation from linear fit {:.1}% (<= 50%)", worst * 100.0),
    );
}

fn erase(y: &GroundTruthMask, holes: &[(usize, usize)]) -> PredictionMap {
    PredictionMap::new(
        Grid2D::from_fn(y.width(), y.height(), |x, yy| {
            if holes.contains(&(x, yy)) {
                0.0
            } else {
                y.grid().get(x, yy)
            }
        })
        .unwrap(),
    )
    .unwrap()
}

// 5. Spatial orderings: clustered misses rank below scattered misses, and a
// boundary-adjacent false positive ranks above a distant one, on both paths.
fn criterion_spatial_orderings(results: &mut Vec<Outcome>) {
    let params = WfmParams::default();

    // (a) 24x24 frame, 18x18 foreground block; four misses either clustered
    // in a 2x2 block or scattered pairwise farther than 4 sigma apart
    let y = GroundTruthMask::from_fn(24, 24, |x, yy| (3..21).contains(&x) && (3..21).contains(&yy))
        .unwrap();
    let clustered = erase(&y, &[(4, 4), (5, 4), (4, 5), (5, 5)]);
    let scattered = erase(&y, &[(4, 4), (16, 4), (4, 16), (16, 16)]);
    let fn_exact_ok = fw_beta_exact(&y, &clustered, &params).unwrap().f_w
        < fw_beta_exact(&y, &scattered, &params).unwrap().f_w;
    let fn_approx_ok = afw_forward(&y, &clustered, &params).unwrap().0
        < afw_forward(&y, &scattered, &params).unwrap().0;

    // (b) single false positive adjacent to the block vs far from it
    let y2 = GroundTruthMask::from_fn(24, 24, |x, yy| (8..16).contains(&x) && (8..16).contains(&yy))
        .unwrap();
    let stamp = |px: usize, py: usize| {
        PredictionMap::new(
            Grid2D::from_fn(24, 24, |x, yy| {
                if (x, yy) == (px, py) {
                    1.0
                } else {
                    y2.grid().get(x, yy)
                }
            })
            .unwrap(),
        )
        .unwrap()
    };
    let near = stamp(7, 8); // touches the block boundary
    let far = stamp(1, 1); // farther than phi from any foreground
    let fp_exact_ok = fw_beta_exact(&y2, &near, &params).unwrap().f_w
        > fw_beta_exact(&y2, &far, &params).unwrap().f_w;
    let fp_approx_ok =
        afw_forward(&y2, &near, &params).unwrap().0 > afw_forward(&y2, &far, &params).unwrap().0;

    let pass = fn_exact_ok && fn_approx_ok && fp_exact_ok && fp_approx_ok;
    check(
        results,
        "5 (spatial orderings)",
        pass,
        format!(
            "clustered<scattered exact {fn_exact_ok} approx {fn_approx_ok}; near-FP>far-FP exact {fp_exact_ok} approx {fp_approx_ok}"
        ),
    );
}

// 6. Self-consistency: TP + FN equals the foreground count to 1e-9 on every
// tested instance, and a perfect prediction scores exactly 1.
fn criterion_self_consistency(results: &mut Vec<Outcome>) {
    let params = WfmParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x5151);
    let mut worst = 0.0f64;
    for _ in 0..60 {
        let y = blob_mask(20, 20, &mut rng).unwrap();
        let p = random_prediction(20, 20, &mut rng).unwrap();
        let nfg = y.foreground_count() as f64;
        let exact = fw_beta_exact(&y, &p, &params).unwrap();
        let approx = afw_forward(&y, &p, &params).unwrap().1.counts;
        worst = worst.max((exact.tp_w + exact.fn_w - nfg).abs());
        worst = worst.max((approx.tp_w + approx.fn_w - nfg).abs());
    }
    let mut perfect_ok = true;
    for r in [4.0, 7.5] {
        let y = disk_mask(20, 20, r).unwrap();
        let p = PredictionMap::from_mask(&y);
        perfect_ok &= fw_beta_exact(&y, &p, &params).unwrap().f_w == 1.0;
        perfect_ok &= afw_forward(&y, &p, &params).unwrap().0 == 1.0;
    }
    let pass = worst <= 1e-9 && perfect_ok;
    check(
        results,
        "6 (self-consistency)",
        pass,
        format!("recall-identity residual {worst:.2e} (<= 1e-9), perfect score exactly 1: {perfect_ok}"),
    );
}

// 7. Metric-suite oracles: AUROC equals O(n^2) pair counting exactly on 50
// random 8x8 instances; the 2x2 threshold-sweep F matches the hand-derived
// value at beta^2 = 0.3.
fn criterion_metric_oracles(results: &mut Vec<Outcome>) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x7070);
    let mut auroc_exact = true;
    let mut done = 0;
    while done < 50 {
        let y = blob_mask(8, 8, &mut rng).unwrap();
        // coarse quantization so rank ties actually occur
        let p = PredictionMap::new(
            Grid2D::from_fn(8, 8, |_, _| {
                use rand::Rng;
                (rng.gen_range(0..10) as f64) / 9.0
            })
            .unwrap(),
        )
        .unwrap();
        let fast = auroc(&y, &p).unwrap();
        let mut num = 0.0;
        let mut pairs = 0.0;
        for i in 0..y.len() {
            if y.grid().values()[i] != 1.0 {
                continue;
            }
            for j in 0..y.len() {
                if y.grid().values()[j] != 0.0 {
                    continue;
                }
                pairs += 1.0;
                let (pi, pj) = (p.grid().values()[i], p.grid().values()[j]);
                if pi > pj {
                    num += 1.0;
                } else if pi == pj {
                    num += 0.5;
                }
            }
        }
        auroc_exact &= fast == num / pairs;
        done += 1;
    }

    let y = GroundTruthMask::new(Grid2D::new(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap()).unwrap();
    let p = PredictionMap::new(Grid2D::new(2, 2, vec![0.4, 0.6, 0.1, 0.0]).unwrap()).unwrap();
    let (f, _) = fbeta_max(&y, &p, 0.3).unwrap();
    let fbeta_ok = (f - 0.5652173913043478).abs() <= 1e-4;

    let pass = auroc_exact && fbeta_ok;
    check(
        results,
        "7 (metric-suite oracles)",
        pass,
        format!("AUROC == pair counting on 50 instances: {auroc_exact}; 2x2 sweep F = {f:.6} (expected ~0.5652)"),
    );
}

// 8. Optimization demo: 200 normalized gradient steps from a flat 0.5 map on
// a 32x32 disk reach F >= 0.99, with the loss non-increasing over every
// 10-step window after step 20.
fn criterion_optimization_demo(results: &mut Vec<Outcome>) {
    let params = WfmParams::default();
    let y = disk_mask(32, 32, 10.0).unwrap();
    let trace = optimize_map(&y, 200, 0.5, &params, SEED).unwrap();
    let final_f = afw_forward(&y, &trace.final_map, &params).unwrap().0;
    let mut windows_ok = true;
    let losses: Vec<f64> = trace.steps.iter().map(|s| s.loss).collect();
    for k in 20..losses.len().saturating_sub(10) {
        if losses[k + 10] > losses[k] {
            windows_ok = false;
            break;
        }
    }
    let pass = final_f >= 0.99 && windows_ok;
    check(
        results,
        "8 (optimization demo)",
        pass,
        format!("final F = {final_f:.5} (>= 0.99), 10-step windows non-increasing after step 20: {windows_ok}"),
    );
}

#[test]
fn acceptance_criteria() {
    let mut results = Vec::new();
    criterion_oracle_equivalence(&mut results);
    criterion_gradient_correctness(&mut results);
    criterion_speedup(&mut results);
    criterion_complexity_shape(&mut results);
    criterion_spatial_orderings(&mut results);
    criterion_self_consistency(&mut results);
    criterion_metric_oracles(&mut results);
    criterion_optimization_demo(&mut results);
    println!(
        "criterion 9 (dataset tables): SKIP — requires training a deep network on external data; criteria 1-8 substitute"
    );

    let failures: Vec<String> = results
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{}: {}", r.name, r.detail))
        .collect();
    assert!(failures.is_empty(), "failed criteria:\n{}", failures.join("\n"));
}
