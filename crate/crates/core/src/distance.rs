//! Windowed nearest-foreground squared distances.

use crate::error::{Error, Result};
use crate::grid::{Grid2D, GroundTruthMask};
use crate::parallel;

/// Per-pixel minimum squared Euclidean distance to a foreground pixel within
/// a `(2 phi + 1)^2` window, `f64::INFINITY` where the window holds none.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    grid: Grid2D,
}

impl DistanceField {
    #[inline]
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn value(&self, x: usize, y: usize) -> f64 {
        self.grid.get(x, y)
    }
}

/// Masked windowed minimum: at each pixel, the smallest `p^2 + q^2` over
/// offsets `p, q` in `[-phi, phi]` that land on foreground. Offsets outside
/// the image count as background. Realized as a direct window scan instead of
/// materializing the `(2 phi + 1)^2`-channel offset tensor.
pub fn min_squared_distance_field(mask: &GroundTruthMask, phi: usize) -> Result<DistanceField> {
    if phi < 1 {
        return Err(Error::InvalidParameter(format!(
            "window half-width must be at least 1, got {phi}"
        )));
    }
    let w = mask.width();
    let h = mask.height();
    let r = phi as isize;
    let src = mask.grid().values();
    let mut out = vec![0.0f64; w * h];

    parallel::fill_rows(&mut out, w, |y0, row| {
        let y0 = y0 as isize;
        let dy_lo = (-r).max(-y0);
        let dy_hi = r.min(h as isize - 1 - y0);
        for x0 in 0..w as isize {
            if src[(y0 as usize) * w + x0 as usize] == 1.0 {
                row[x0 as usize] = 0.0;
                continue;
            }
            let dx_lo = (-r).max(-x0);
            let dx_hi = r.min(w as isize - 1 - x0);
            let mut best = f64::INFINITY;
            for dy in dy_lo..=dy_hi {
                let irow = ((y0 + dy) as usize) * w;
                for dx in dx_lo..=dx_hi {
                    if src[irow + (x0 + dx) as usize] == 1.0 {
                        let d2 = (dx * dx + dy * dy) as f64;
                        if d2 < best {
                            best = d2;
                        }
                    }
                }
            }
            row[x0 as usize] = best;
        }
    });

    Ok(DistanceField { grid: Grid2D::new(w, h, out).expect("mask shape is valid") })
}
