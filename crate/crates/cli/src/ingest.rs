//! Image ingestion, stem pairing, and gradient dumps.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use image::{DynamicImage, ImageBuffer, Luma};
use serde::{Deserialize, Serialize};
use wfbeta::{GradMap, Grid2D, GroundTruthMask, PredictionMap};

fn load_gray8(path: &Path) -> Result<ImageBuffer<Luma<u8>, Vec<u8>>> {
    let img = image::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    match img {
        DynamicImage::ImageLuma8(buf) => {
            if buf.width() == 0 || buf.height() == 0 {
                bail!("{} is a zero-size image", path.display());
            }
            Ok(buf)
        }
        other => bail!(
            "{} is not 8-bit grayscale (found {:?})",
            path.display(),
            other.color()
        ),
    }
}

/// Reads an 8-bit grayscale PNG or PGM and binarizes it: pixel value at or
/// above `threshold` becomes foreground.
pub fn ingest_mask(path: &Path, threshold: u8) -> Result<GroundTruthMask> {
    let buf = load_gray8(path)?;
    let (w, h) = (buf.width() as usize, buf.height() as usize);
    let values = buf
        .pixels()
        .map(|p| if p.0[0] >= threshold { 1.0 } else { 0.0 })
        .collect();
    Ok(GroundTruthMask::new(Grid2D::new(w, h, values)?)?)
}

/// Reads an 8-bit grayscale PNG or PGM as a continuous map, value / 255.
pub fn ingest_prediction(path: &Path) -> Result<PredictionMap> {
    let buf = load_gray8(path)?;
    let (w, h) = (buf.width() as usize, buf.height() as usize);
    let values = buf.pixels().map(|p| p.0[0] as f64 / 255.0).collect();
    Ok(PredictionMap::new(Grid2D::new(w, h, values)?)?)
}

/// One prediction/ground-truth pair, matched by file stem.
#[derive(Debug, Clone)]
pub struct InputPair {
    pub id: String,
    pub pred: PathBuf,
    pub gt: PathBuf,
}

fn is_supported(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()),
        Some(ref e) if e == "png" || e == "pgm"
    )
}

fn stem_index(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("cannot list {}", dir.display()))? {
        let path = entry?.path();
        if !path.is_file() || !is_supported(&path) {
            continue;
        }
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .with_context(|| format!("non-UTF-8 file name {}", path.display()))?
            .to_string();
        if let Some(dup) = out.insert(stem.clone(), path.clone()) {
            bail!(
                "duplicate stem '{stem}' in {}: {} and {}",
                dir.display(),
                dup.display(),
                path.display()
            );
        }
    }
    Ok(out)
}

/// Pairs prediction and ground-truth inputs one-to-one by stem. Both sides
/// must be files, or both directories; any unpaired stem is a hard error.
/// Pairs come back sorted by id, so downstream reports are independent of
/// directory listing order.
pub fn pair_inputs(pred: &Path, gt: &Path) -> Result<Vec<InputPair>> {
    if pred.is_file() && gt.is_file() {
        let id = pred
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("input")
            .to_string();
        return Ok(vec![InputPair { id, pred: pred.to_path_buf(), gt: gt.to_path_buf() }]);
    }
    if !(pred.is_dir() && gt.is_dir()) {
        bail!(
            "--pred and --gt must both be files or both be directories ({} / {})",
            pred.display(),
            gt.display()
        );
    }
    let preds = stem_index(pred)?;
    let gts = stem_index(gt)?;
    let missing_gt: Vec<&String> = preds.keys().filter(|k| !gts.contains_key(*k)).collect();
    let missing_pred: Vec<&String> = gts.keys().filter(|k| !preds.contains_key(*k)).collect();
    if !missing_gt.is_empty() || !missing_pred.is_empty() {
        bail!(
            "unpaired inputs: {} prediction(s) without ground truth {:?}, {} ground truth(s) without prediction {:?}",
            missing_gt.len(),
            missing_gt,
            missing_pred.len(),
            missing_pred
        );
    }
    if preds.is_empty() {
        bail!("no .png or .pgm inputs found in {}", pred.display());
    }
    Ok(preds
        .into_iter()
        .map(|(id, p)| {
            let gt_path = gts[&id].clone();
            InputPair { id, pred: p, gt: gt_path }
        })
        .collect())
}

/// Scale metadata for a 16-bit gradient dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradSidecar {
    pub schema_version: u32,
    pub id: String,
    pub width: usize,
    pub height: usize,
    pub min: f64,
    pub max: f64,
}

/// Writes a gradient map rescaled to 16-bit grayscale PNG, with the min/max
/// scale recorded in a JSON sidecar next to it.
pub fn write_gradient_dump(dir: &Path, id: &str, grad: &GradMap) -> Result<(PathBuf, PathBuf, GradSidecar)> {
    std::fs::create_dir_all(dir)?;
    let (w, h) = (grad.grid().width(), grad.grid().height());
    let min = grad.values().iter().copied().fold(f64::INFINITY, f64::min);
    let max = grad.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    let mut img = ImageBuffer::<Luma<u16>, Vec<u16>>::new(w as u32, h as u32);
    for (i, p) in img.pixels_mut().enumerate() {
        let v = if range > 0.0 {
            ((grad.values()[i] - min) / range * 65535.0).round() as u16
        } else {
            0
        };
        *p = Luma([v]);
    }
    let png_path = dir.join(format!("{id}.grad.png"));
    img.save(&png_path).with_context(|| format!("cannot write {}", png_path.display()))?;
    let sidecar = GradSidecar { schema_version: 1, id: id.to_string(), width: w, height: h, min, max };
    let sidecar_path = dir.join(format!("{id}.grad.json"));
    std::fs::write(&sidecar_path, crate::report::to_json_string(&sidecar)?)?;
    Ok((png_path, sidecar_path, sidecar))
}

/// Reads a 16-bit gradient dump back into per-pixel values.
pub fn read_gradient_dump(png: &Path, sidecar: &Path) -> Result<Vec<f64>> {
    let meta: GradSidecar = serde_json::from_str(&std::fs::read_to_string(sidecar)?)?;
    let img = image::open(png)?;
    let buf = match img {
        DynamicImage::ImageLuma16(buf) => buf,
        other => bail!("{} is not 16-bit grayscale (found {:?})", png.display(), other.color()),
    };
    if buf.width() as usize != meta.width || buf.height() as usize != meta.height {
        bail!("gradient dump dimensions do not match the sidecar");
    }
    let range = meta.max - meta.min;
    Ok(buf
        .pixels()
        .map(|p| meta.min + p.0[0] as f64 / 65535.0 * range)
        .collect())
}
