//! Reference image quality metrics: PSNR and mean SSIM.

use crate::error::{Error, Result};
use crate::image::{to_luma, Image};

/// PSNR cap reported for (near-)identical images.
pub const PSNR_CAP_DB: f64 = 99.0;

fn check_dims(a: &Image, b: &Image) -> Result<()> {
    if a.channels() != b.channels() || a.height() != b.height() || a.width() != b.width() {
        return Err(Error::invalid(format!(
            "image dims mismatch: {}x{}x{} vs {}x{}x{}",
            a.channels(),
            a.height(),
            a.width(),
            b.channels(),
            b.height(),
            b.width()
        )));
    }
    Ok(())
}

/// Peak signal-to-noise ratio in dB over all channels, for samples in
/// `[0,1]`. Identical images report the cap value.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    check_dims(a, b)?;
    let mse = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.data().len() as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB))
}

/// 11x11 Gaussian window with sigma 1.5, normalized to unit sum.
fn gaussian_window() -> [f64; 121] {
    let sigma = 1.5f64;
    let mut w = [0.0f64; 121];
    let mut sum = 0.0;
    for y in 0..11 {
        for x in 0..11 {
            let dy = y as f64 - 5.0;
            let dx = x as f64 - 5.0;
            let v = (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
            w[y * 11 + x] = v;
            sum += v;
        }
    }
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Mean SSIM on luma: 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, dynamic range 1. Result lies in `[-1, 1]`.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    check_dims(a, b)?;
    let (h, w) = (a.height(), a.width());
    if h < 11 || w < 11 {
        return Err(Error::invalid("ssim needs images of at least 11x11"));
    }
    let la = to_luma(a)?;
    let lb = to_luma(b)?;
    let pa = la.plane(0);
    let pb = lb.plane(0);
    let win = gaussian_window();

    let c1 = 0.01f64 * 0.01;
    let c2 = 0.03f64 * 0.03;

    let mut total = 0.0;
    let mut count = 0usize;
    for oy in 0..=h - 11 {
        for ox in 0..=w - 11 {
            let (mut mu_a, mut mu_b) = (0.0, 0.0);
            let (mut aa, mut bb, mut ab) = (0.0, 0.0, 0.0);
            for wy in 0..11 {
                let row = (oy + wy) * w + ox;
                for wx in 0..11 {
                    let g = win[wy * 11 + wx];
                    let va = pa[row + wx];
                    let vb = pb[row + wx];
                    mu_a += g * va;
                    mu_b += g * vb;
                    aa += g * va * va;
                    bb += g * vb * vb;
                    ab += g * va * vb;
                }
            }
            let var_a = aa - mu_a * mu_a;
            let var_b = bb - mu_b * mu_b;
            let cov = ab - mu_a * mu_b;
            let s = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
                / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
            total += s;
            count += 1;
        }
    }
    Ok(total / count as f64)
}
