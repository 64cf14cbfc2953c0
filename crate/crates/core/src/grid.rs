//! Dense row-major 2-D grids and the two validated map types built on them.

use serde::Serialize;

use crate::error::{Error, Result};

/// A `width x height` grid of `f64` values stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid2D {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl Grid2D {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidGrid(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if values.len() != width * height {
            return Err(Error::InvalidGrid(format!(
                "expected {} values for {width}x{height}, got {}",
                width * height,
                values.len()
            )));
        }
        Ok(Self { width, height, values })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![0.0; width * height])
    }

    /// Builds a grid by evaluating `f(x, y)` at every pixel, row by row.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self::new(width, height, values)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// Total pixel count.
    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub(crate) fn idx(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[self.idx(x, y)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        let i = self.idx(x, y);
        self.values[i] = v;
    }

    pub fn same_shape(&self, other: &Grid2D) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_same_shape(&self, other: &Grid2D) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected_width: self.width,
                expected_height: self.height,
                got_width: other.width,
                got_height: other.height,
            })
        }
    }
}

/// Binary reference segmentation: every value is exactly 0 or 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruthMask {
    grid: Grid2D,
}

impl GroundTruthMask {
    pub fn new(grid: Grid2D) -> Result<Self> {
        if let Some(v) = grid.values().iter().find(|v| **v != 0.0 && **v != 1.0) {
            return Err(Error::InvalidGrid(format!(
                "ground truth values must be exactly 0 or 1, found {v}"
            )));
        }
        Ok(Self { grid })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        Self::new(Grid2D::from_fn(width, height, |x, y| {
            if f(x, y) {
                1.0
            } else {
                0.0
            }
        })?)
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.grid.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.grid.height()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    #[inline]
    pub fn is_foreground(&self, x: usize, y: usize) -> bool {
        self.grid.get(x, y) == 1.0
    }

    pub fn foreground_count(&self) -> usize {
        self.grid.values().iter().filter(|v| **v == 1.0).count()
    }

    /// Row-major list of foreground pixel coordinates.
    pub fn foreground_pixels(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for y in 0..self.height() {
            for x in 0..self.width() {
                if self.is_foreground(x, y) {
                    out.push((x, y));
                }
            }
        }
        out
    }
}

/// Continuous model output: every value lies in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionMap {
    grid: Grid2D,
}

impl PredictionMap {
    pub fn new(grid: Grid2D) -> Result<Self> {
        if let Some(v) = grid
            .values()
            .iter()
            .find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0)
        {
            return Err(Error::InvalidGrid(format!(
                "prediction values must lie in [0, 1], found {v}"
            )));
        }
        Ok(Self { grid })
    }

    pub fn constant(width: usize, height: usize, v: f64) -> Result<Self> {
        Self::new(Grid2D::new(width, height, vec![v; width * height])?)
    }

    /// A prediction that reproduces the mask exactly.
    pub fn from_mask(mask: &GroundTruthMask) -> Self {
        Self { grid: mask.grid().clone() }
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.grid.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.grid.height()
    }
}
