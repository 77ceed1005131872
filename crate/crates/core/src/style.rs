//! HR style image generation: down-scale the initial HR image by the
//! selected factor, then mirror-tile the result back to full size.
//!
//! Mirror tiling flips the tile horizontally in odd columns and vertically in
//! odd rows, so the two samples adjacent to every seam coincide and the tiled
//! texture is continuous without any boundary filter.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::resample::resample_bicubic;

/// Build the style image for `initial_hr` at down-scaling factor `phi_hat`.
pub fn generate_style(initial_hr: &Image, phi_hat: f64) -> Result<Image> {
    if !(phi_hat.is_finite() && 0.0 < phi_hat && phi_hat < 1.0) {
        return Err(Error::invalid(format!(
            "style scale factor must lie in (0,1), got {phi_hat}"
        )));
    }
    let (c, h, w) = (
        initial_hr.channels(),
        initial_hr.height(),
        initial_hr.width(),
    );
    let tw = ((w as f64 * phi_hat).round() as usize).max(1);
    let th = ((h as f64 * phi_hat).round() as usize).max(1);
    let tile = resample_bicubic(initial_hr, tw, th)?;

    let mut out = Image::zeros(c, h, w)?;
    for ch in 0..c {
        for y in 0..h {
            let tile_row = y / th;
            let local_y = y % th;
            let sy = if tile_row % 2 == 1 {
                th - 1 - local_y
            } else {
                local_y
            };
            for x in 0..w {
                let tile_col = x / tw;
                let local_x = x % tw;
                let sx = if tile_col % 2 == 1 {
                    tw - 1 - local_x
                } else {
                    local_x
                };
                out.set(ch, y, x, tile.get(ch, sy, sx));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_image(h: usize, w: usize, seed: u64) -> Image {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let data = (0..3 * h * w).map(|_| rng.gen::<f64>()).collect();
        Image::from_data(3, h, w, data).unwrap()
    }

    #[test]
    fn out_of_range_factor_is_rejected() {
        let img = Image::constant(3, 16, 16, 0.5).unwrap();
        for bad in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(generate_style(&img, bad).is_err());
        }
    }

    #[test]
    fn output_dims_equal_input_dims() {
        let img = random_image(50, 37, 1);
        for phi in [0.2, 0.4, 0.55, 0.9] {
            let s = generate_style(&img, phi).unwrap();
            assert_eq!((s.channels(), s.height(), s.width()), (3, 50, 37));
        }
    }

    #[test]
    fn constant_input_gives_constant_output() {
        let img = Image::constant(3, 40, 40, 0.625).unwrap();
        let s = generate_style(&img, 0.3).unwrap();
        for &v in s.data() {
            assert!((v - 0.625).abs() < 1e-12);
        }
    }

    #[test]
    fn half_factor_mirror_seam_duplicates_boundary_sample() {
        let img = random_image(256, 256, 2);
        let s = generate_style(&img, 0.5).unwrap();
        // 2x2 grid of 128x128 tiles
        assert_eq!(s.get(0, 0, 127), s.get(0, 0, 128));
        assert_eq!(s.get(1, 127, 0), s.get(1, 128, 0));
    }

    #[test]
    fn seams_are_continuous_for_published_factors() {
        let img = random_image(100, 100, 3);
        for phi in [0.4, 0.5, 0.6, 0.7] {
            let s = generate_style(&img, phi).unwrap();
            let tw = ((100.0 * phi).round() as usize).max(1);
            let th = tw;
            for c in 0..3 {
                let mut x = tw;
                while x < 100 {
                    for y in 0..100 {
                        assert_eq!(s.get(c, y, x - 1), s.get(c, y, x), "phi {phi} col seam {x}");
                    }
                    x += tw;
                }
                let mut y = th;
                while y < 100 {
                    for x in 0..100 {
                        assert_eq!(s.get(c, y - 1, x), s.get(c, y, x), "phi {phi} row seam {y}");
                    }
                    y += th;
                }
            }
        }
    }

    // Tiling only rearranges samples of the down-scaled tile.
    #[test]
    fn output_range_is_bounded_by_tile_range() {
        let img = random_image(64, 48, 4);
        let phi = 0.4f64;
        let tile = resample_bicubic(
            &img,
            (48.0 * phi).round() as usize,
            (64.0 * phi).round() as usize,
        )
        .unwrap();
        let (lo, hi) = tile
            .data()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let s = generate_style(&img, phi).unwrap();
        for &v in s.data() {
            assert!(v >= lo && v <= hi);
        }
    }

    #[test]
    fn grassplot_factor_structural_check() {
        let img = random_image(120, 80, 5);
        let s = generate_style(&img, 0.4).unwrap();
        assert_eq!((s.height(), s.width()), (120, 80));
        // tile dims are round(0.4 * dims)
        let (tw, th) = (32, 48);
        assert_eq!(s.get(0, 0, tw - 1), s.get(0, 0, tw));
        assert_eq!(s.get(0, th - 1, 0), s.get(0, th, 0));
    }
}
