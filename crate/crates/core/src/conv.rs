//! Same-size 2-D convolution with zero padding.

use crate::grid::Grid2D;
use crate::kernel::GaussianKernel;
use crate::parallel;

/// Convolves `input` with `kernel`, keeping the input shape. Contributions
/// from outside the image are zero. The kernel is centrally symmetric, so
/// correlation and convolution coincide and the operator is self-adjoint.
pub fn convolve_same(input: &Grid2D, kernel: &GaussianKernel) -> Grid2D {
    convolve_same_raw(input, kernel.theta(), kernel.weights())
}

/// Shared core over raw weights of half-width `radius` (row-major,
/// `(2 radius + 1)^2` entries). Accumulation order per output pixel is fixed:
/// kernel rows top to bottom, offsets left to right.
pub(crate) fn convolve_same_raw(input: &Grid2D, radius: usize, weights: &[f64]) -> Grid2D {
    let w = input.width();
    let h = input.height();
    let r = radius as isize;
    let kw = 2 * radius + 1;
    debug_assert_eq!(weights.len(), kw * kw);
    let src = input.values();
    let mut out = vec![0.0f64; src.len()];

    parallel::fill_rows(&mut out, w, |y0, row| {
        let y0 = y0 as isize;
        let dy_lo = (-r).max(-y0);
        let dy_hi = r.min(h as isize - 1 - y0);
        for x0 in 0..w as isize {
            let dx_lo = (-r).max(-x0);
            let dx_hi = r.min(w as isize - 1 - x0);
            let mut acc = 0.0;
            for dy in dy_lo..=dy_hi {
                let krow = ((dy + r) as usize) * kw;
                let irow = ((y0 + dy) as usize) * w;
                let ks = &weights[krow + (dx_lo + r) as usize..=krow + (dx_hi + r) as usize];
                let is = &src[irow + (x0 + dx_lo) as usize..=irow + (x0 + dx_hi) as usize];
                for (kv, iv) in ks.iter().zip(is) {
                    acc += kv * iv;
                }
            }
            row[x0 as usize] = acc;
        }
    });

    Grid2D::new(w, h, out).expect("output shape equals input shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::ExponentForm;

    #[test]
    fn zero_input_stays_zero() {
        let k = GaussianKernel::new(9, 2.25, ExponentForm::SquaredDistance).unwrap();
        let input = Grid2D::zeros(13, 7).unwrap();
        let out = convolve_same(&input, &k);
        assert!(out.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn delta_image_reproduces_kernel() {
        let k = GaussianKernel::new(9, 2.25, ExponentForm::SquaredDistance).unwrap();
        let mut input = Grid2D::zeros(21, 21).unwrap();
        input.set(10, 10, 1.0);
        let out = convolve_same(&input, &k);
        for q in -9..=9isize {
            for p in -9..=9isize {
                let got = out.get((10 + p) as usize, (10 + q) as usize);
                assert!((got - k.weight(p, q)).abs() < 1e-15);
            }
        }
        // outside the stamped window everything stays zero
        assert_eq!(out.get(0, 0), 0.0);
    }

    #[test]
    fn zero_padding_counts_at_borders() {
        // all-ones 3x3 input against an all-ones 3x3 kernel: the output counts
        // how many taps fall inside the image.
        let input = Grid2D::new(3, 3, vec![1.0; 9]).unwrap();
        let out = convolve_same_raw(&input, 1, &[1.0; 9]);
        assert_eq!(out.get(1, 1), 9.0);
        assert_eq!(out.get(1, 0), 6.0);
        assert_eq!(out.get(0, 1), 6.0);
        assert_eq!(out.get(0, 0), 4.0);
        assert_eq!(out.get(2, 2), 4.0);
    }
}
