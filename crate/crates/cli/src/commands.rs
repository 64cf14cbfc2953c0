//! Subcommand implementations and report assembly.

use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use wfbeta::{
    afw_forward, afw_loss, bench, compare_exact_approx, disk_mask, evaluate_image,
    fw_beta_exact_capped, metrics_report, optimize_map, BenchReport, DeviationReport,
    GroundTruthMask, ImageMetrics, MetricsAggregate, OptimStep, PredictionMap, WfmParams,
    DEFAULT_FBETA_SQ, DEFAULT_SIZE_CAP,
};

use crate::ingest::{ingest_mask, ingest_prediction, pair_inputs, write_gradient_dump, InputPair};
use crate::report::{csv_field, csv_line, fmt_float, to_json_string};
use crate::{Cli, Command, OutputFormat};

#[derive(Debug, Clone, Serialize)]
struct ImageError {
    id: String,
    error: String,
}

#[derive(Serialize)]
struct EvalReport {
    schema_version: u32,
    command: &'static str,
    gt_threshold: u8,
    fbeta_sq: f64,
    params: WfmParams,
    per_image: Vec<ImageMetrics>,
    errors: Vec<ImageError>,
    aggregate: Option<MetricsAggregate>,
}

#[derive(Debug, Clone, Serialize)]
struct GradDumpInfo {
    png: String,
    sidecar: String,
    min: f64,
    max: f64,
}

#[derive(Debug, Clone, Serialize)]
struct LossRow {
    id: String,
    loss: f64,
    fw: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    gradient: Option<GradDumpInfo>,
}

#[derive(Serialize)]
struct LossReport {
    schema_version: u32,
    command: &'static str,
    gt_threshold: u8,
    params: WfmParams,
    per_image: Vec<LossRow>,
    errors: Vec<ImageError>,
}

#[derive(Debug, Clone, Serialize)]
struct OracleRow {
    id: String,
    f_w: f64,
    p_w: f64,
    r_w: f64,
    tp_w: f64,
    fp_w: f64,
    fn_w: f64,
    tn_w: f64,
}

#[derive(Serialize)]
struct OracleReport {
    schema_version: u32,
    command: &'static str,
    gt_threshold: u8,
    params: WfmParams,
    per_image: Vec<OracleRow>,
    errors: Vec<ImageError>,
}

#[derive(Serialize)]
struct CompareReport {
    schema_version: u32,
    command: &'static str,
    #[serde(flatten)]
    report: DeviationReport,
}

#[derive(Serialize)]
struct BenchWrapped {
    schema_version: u32,
    command: &'static str,
    #[serde(flatten)]
    report: BenchReport,
}

#[derive(Serialize)]
struct OptimizeReport {
    schema_version: u32,
    command: &'static str,
    params: WfmParams,
    steps: usize,
    step_size: f64,
    seed: u64,
    trace: Vec<OptimStep>,
    final_f: f64,
}

fn emit(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, body)
            .with_context(|| format!("cannot write report to {}", path.display()))?,
        None => print!("{body}"),
    }
    Ok(())
}

fn eval_pair(
    pair: &InputPair,
    threshold: u8,
    f: impl FnOnce(&GroundTruthMask, &PredictionMap) -> Result<()>,
) -> Result<()> {
    let y = ingest_mask(&pair.gt, threshold)?;
    let p = ingest_prediction(&pair.pred)?;
    if y.width() != p.width() || y.height() != p.height() {
        bail!(
            "dimensions differ: ground truth {}x{}, prediction {}x{}",
            y.width(),
            y.height(),
            p.width(),
            p.height()
        );
    }
    f(&y, &p)
}

/// Splits per-image outcomes into sorted successes and sorted error entries.
fn partition<T>(results: Vec<(String, Result<T>)>) -> (Vec<T>, Vec<ImageError>) {
    let mut ok = Vec::new();
    let mut errors = Vec::new();
    for (id, r) in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => errors.push(ImageError { id, error: format!("{e:#}") }),
        }
    }
    errors.sort_by(|a, b| a.id.cmp(&b.id));
    (ok, errors)
}

fn cmd_eval(cli: &Cli, pred: &Path, gt: &Path) -> Result<i32> {
    let params = cli.params();
    params.validate()?;
    let pairs = pair_inputs(pred, gt)?;
    let results: Vec<(String, Result<ImageMetrics>)> = pairs
        .par_iter()
        .map(|pair| {
            let mut row = None;
            let r = eval_pair(pair, cli.gt_threshold, |y, p| {
                row = Some(evaluate_image(&pair.id, y, p, &params, DEFAULT_FBETA_SQ)?);
                Ok(())
            });
            (pair.id.clone(), r.map(|()| row.expect("row set on success")))
        })
        .collect();
    let (rows, errors) = partition(results);
    let report = metrics_report(rows, &params, DEFAULT_FBETA_SQ);

    let body = match cli.format {
        OutputFormat::Json => to_json_string(&EvalReport {
            schema_version: 1,
            command: "eval",
            gt_threshold: cli.gt_threshold,
            fbeta_sq: DEFAULT_FBETA_SQ,
            params,
            per_image: report.per_image.clone(),
            errors: errors.clone(),
            aggregate: report.aggregate.clone(),
        })?,
        OutputFormat::Csv => {
            let mut lines =
                vec!["id,mae,auroc,fbeta_max,best_threshold,iou_at_half,fw1".to_string()];
            for r in &report.per_image {
                lines.push(csv_line(&[
                    csv_field(&r.id),
                    fmt_float(r.mae),
                    fmt_float(r.auroc),
                    fmt_float(r.fbeta_max),
                    fmt_float(r.best_threshold),
                    fmt_float(r.iou_at_half),
                    fmt_float(r.fw1),
                ]));
            }
            for e in &errors {
                lines.push(csv_line(&[csv_field(&e.id), String::new(), String::new(),
                    String::new(), String::new(), String::new(), String::new()]));
            }
            if let Some(a) = &report.aggregate {
                lines.push(csv_line(&[
                    "aggregate".to_string(),
                    fmt_float(a.mae),
                    fmt_float(a.auroc),
                    fmt_float(a.fbeta_max),
                    fmt_float(a.best_threshold),
                    fmt_float(a.iou_at_half),
                    fmt_float(a.fw1),
                ]));
            }
            lines.join("\n") + "\n"
        }
    };
    emit(cli.out.as_deref(), &body)?;
    for e in &errors {
        eprintln!("{}: {}", e.id, e.error);
    }
    Ok(if errors.is_empty() { 0 } else { 1 })
}

fn cmd_loss(cli: &Cli, pred: &Path, gt: &Path, grad_dir: Option<&Path>) -> Result<i32> {
    let params = cli.params();
    params.validate()?;
    let pairs = pair_inputs(pred, gt)?;
    let results: Vec<(String, Result<LossRow>)> = pairs
        .par_iter()
        .map(|pair| {
            let mut row = None;
            let r = eval_pair(pair, cli.gt_threshold, |y, p| {
                let (loss, grad) = afw_loss(y, p, &params)?;
                let gradient = match grad_dir {
                    Some(dir) => {
                        let (png, sidecar, meta) = write_gradient_dump(dir, &pair.id, &grad)?;
                        Some(GradDumpInfo {
                            png: png.display().to_string(),
                            sidecar: sidecar.display().to_string(),
                            min: meta.min,
                            max: meta.max,
                        })
                    }
                    None => None,
                };
                row = Some(LossRow { id: pair.id.clone(), loss, fw: 1.0 - loss, gradient });
                Ok(())
            });
            (pair.id.clone(), r.map(|()| row.expect("row set on success")))
        })
        .collect();
    let (mut rows, errors) = partition(results);
    rows.sort_by(|a, b| a.id.cmp(&b.id));

    let body = match cli.format {
        OutputFormat::Json => to_json_string(&LossReport {
            schema_version: 1,
            command: "loss",
            gt_threshold: cli.gt_threshold,
            params,
            per_image: rows,
            errors: errors.clone(),
        })?,
        OutputFormat::Csv => {
            let mut lines = vec!["id,loss,fw".to_string()];
            for r in &rows {
                lines.push(csv_line(&[csv_field(&r.id), fmt_float(r.loss), fmt_float(r.fw)]));
            }
            for e in &errors {
                lines.push(csv_line(&[csv_field(&e.id), String::new(), String::new()]));
            }
            lines.join("\n") + "\n"
        }
    };
    emit(cli.out.as_deref(), &body)?;
    for e in &errors {
        eprintln!("{}: {}", e.id, e.error);
    }
    Ok(if errors.is_empty() { 0 } else { 1 })
}

fn cmd_oracle(cli: &Cli, pred: &Path, gt: &Path) -> Result<i32> {
    let params = cli.params();
    params.validate()?;
    let pairs = pair_inputs(pred, gt)?;
    let cap = if cli.allow_large_oracle { usize::MAX } else { DEFAULT_SIZE_CAP };
    // reject oversized inputs up front: the cap is a configuration matter,
    // not a per-image failure
    for pair in &pairs {
        let (w, h) = image::image_dimensions(&pair.gt)
            .with_context(|| format!("cannot read {}", pair.gt.display()))?;
        let pixels = w as usize * h as usize;
        if pixels > cap {
            bail!(
                "{}: {pixels} pixels exceeds the exact-oracle cap of {cap}; rerun with --allow-large-oracle",
                pair.id
            );
        }
    }
    let results: Vec<(String, Result<OracleRow>)> = pairs
        .par_iter()
        .map(|pair| {
            let mut row = None;
            let r = eval_pair(pair, cli.gt_threshold, |y, p| {
                let c = fw_beta_exact_capped(y, p, &params, cap)?;
                row = Some(OracleRow {
                    id: pair.id.clone(),
                    f_w: c.f_w,
                    p_w: c.p_w,
                    r_w: c.r_w,
                    tp_w: c.tp_w,
                    fp_w: c.fp_w,
                    fn_w: c.fn_w,
                    tn_w: c.tn_w,
                });
                Ok(())
            });
            (pair.id.clone(), r.map(|()| row.expect("row set on success")))
        })
        .collect();
    let (mut rows, errors) = partition(results);
    rows.sort_by(|a, b| a.id.cmp(&b.id));

    let body = match cli.format {
        OutputFormat::Json => to_json_string(&OracleReport {
            schema_version: 1,
            command: "oracle",
            gt_threshold: cli.gt_threshold,
            params,
            per_image: rows,
            errors: errors.clone(),
        })?,
        OutputFormat::Csv => {
            let mut lines = vec!["id,f_w,p_w,r_w,tp_w,fp_w,fn_w,tn_w".to_string()];
            for r in &rows {
                lines.push(csv_line(&[
                    csv_field(&r.id),
                    fmt_float(r.f_w),
                    fmt_float(r.p_w),
                    fmt_float(r.r_w),
                    fmt_float(r.tp_w),
                    fmt_float(r.fp_w),
                    fmt_float(r.fn_w),
                    fmt_float(r.tn_w),
                ]));
            }
            for e in &errors {
                lines.push(csv_line(&[csv_field(&e.id), String::new(), String::new(),
                    String::new(), String::new(), String::new(), String::new(), String::new()]));
            }
            lines.join("\n") + "\n"
        }
    };
    emit(cli.out.as_deref(), &body)?;
    for e in &errors {
        eprintln!("{}: {}", e.id, e.error);
    }
    Ok(if errors.is_empty() { 0 } else { 1 })
}

fn cmd_compare(cli: &Cli, sizes: &[usize], trials: usize) -> Result<i32> {
    let params = cli.params();
    let report = compare_exact_approx(sizes, trials, &params, cli.seed)?;
    let body = match cli.format {
        OutputFormat::Json => to_json_string(&CompareReport {
            schema_version: 1,
            command: "compare",
            report,
        })?,
        OutputFormat::Csv => {
            let mut lines = vec!["width,height,f_exact,f_approx,abs_gap".to_string()];
            for r in &report.instances {
                lines.push(csv_line(&[
                    r.width.to_string(),
                    r.height.to_string(),
                    fmt_float(r.f_exact),
                    fmt_float(r.f_approx),
                    fmt_float(r.abs_gap),
                ]));
            }
            lines.join("\n") + "\n"
        }
    };
    emit(cli.out.as_deref(), &body)?;
    Ok(0)
}

fn cmd_bench(cli: &Cli, size: usize, reps: usize) -> Result<i32> {
    let report = bench(size, reps, &cli.params(), cli.allow_large_oracle)?;
    let body = match cli.format {
        OutputFormat::Json => {
            to_json_string(&BenchWrapped { schema_version: 1, command: "bench", report })?
        }
        OutputFormat::Csv => {
            let header = "width,height,exact_wall_secs,approx_wall_secs,speedup,approx_images_per_sec,repetitions,machine".to_string();
            let row = csv_line(&[
                report.width.to_string(),
                report.height.to_string(),
                fmt_float(report.exact_wall_secs),
                fmt_float(report.approx_wall_secs),
                fmt_float(report.speedup),
                fmt_float(report.approx_images_per_sec),
                report.repetitions.to_string(),
                csv_field(&report.machine),
            ]);
            format!("{header}\n{row}\n")
        }
    };
    emit(cli.out.as_deref(), &body)?;
    Ok(0)
}

fn cmd_optimize(
    cli: &Cli,
    gt: Option<&Path>,
    disk: Option<usize>,
    steps: usize,
    step_size: f64,
    map_out: Option<&Path>,
) -> Result<i32> {
    let params = cli.params();
    let mask = match (gt, disk) {
        (Some(path), None) => ingest_mask(path, cli.gt_threshold)?,
        (None, Some(size)) => {
            if size < 4 {
                bail!("disk frame must be at least 4 pixels, got {size}");
            }
            disk_mask(size, size, 5.0 * size as f64 / 16.0)?
        }
        _ => bail!("pass exactly one of --gt or --disk"),
    };
    let trace = optimize_map(&mask, steps, step_size, &params, cli.seed)?;
    let final_f = afw_forward(&mask, &trace.final_map, &params)?.0;

    if let Some(path) = map_out {
        let (w, h) = (trace.final_map.width(), trace.final_map.height());
        let mut img = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::new(w as u32, h as u32);
        for (i, px) in img.pixels_mut().enumerate() {
            *px = image::Luma([(trace.final_map.grid().values()[i] * 65535.0).round() as u16]);
        }
        img.save(path).with_context(|| format!("cannot write {}", path.display()))?;
    }

    let body = match cli.format {
        OutputFormat::Json => to_json_string(&OptimizeReport {
            schema_version: 1,
            command: "optimize",
            params,
            steps,
            step_size,
            seed: cli.seed,
            trace: trace.steps.clone(),
            final_f,
        })?,
        OutputFormat::Csv => {
            let mut lines = vec!["step,loss,fw".to_string()];
            for s in &trace.steps {
                lines.push(csv_line(&[
                    s.step.to_string(),
                    fmt_float(s.loss),
                    fmt_float(s.f_w),
                ]));
            }
            lines.join("\n") + "\n"
        }
    };
    emit(cli.out.as_deref(), &body)?;
    Ok(0)
}

/// Dispatches a parsed invocation; the returned code is the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    let dispatch = |cli: &Cli| -> Result<i32> {
        match &cli.command {
            Command::Eval { pred, gt } => cmd_eval(cli, pred, gt),
            Command::Loss { pred, gt, grad_dir } => {
                cmd_loss(cli, pred, gt, grad_dir.as_deref())
            }
            Command::Oracle { pred, gt } => cmd_oracle(cli, pred, gt),
            Command::Compare { sizes, trials } => cmd_compare(cli, sizes, *trials),
            Command::Bench { size, reps } => cmd_bench(cli, *size, *reps),
            Command::Optimize { gt, disk, steps, step_size, map_out } => cmd_optimize(
                cli,
                gt.as_deref(),
                *disk,
                *steps,
                *step_size,
                map_out.as_deref(),
            ),
        }
    };
    match cli.jobs {
        Some(jobs) => {
            if jobs == 0 {
                bail!("--jobs must be at least 1");
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .context("cannot build worker pool")?;
            pool.install(|| dispatch(&cli))
        }
        None => dispatch(&cli),
    }
}
