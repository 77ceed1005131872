//! Overlapping patch decomposition for large-image processing, with blended
//! reassembly.
//!
//! The blend weight of a patch is a separable linear ramp rising over the
//! overlap margin on sides that have a neighbor and flat elsewhere. Per-pixel
//! renormalization makes the weights a partition of unity, so
//! `merge(split(img)) == img` up to rounding.

use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone)]
pub struct Patch {
    pub origin_x: usize,
    pub origin_y: usize,
    pub image: Image,
}

#[derive(Debug, Clone)]
pub struct PatchGrid {
    pub patch_size: usize,
    pub stride: usize,
    pub grid_cols: usize,
    pub grid_rows: usize,
    pub source_channels: usize,
    pub source_height: usize,
    pub source_width: usize,
    pub patches: Vec<Patch>,
}

/// Patch origins along one axis: advance by `stride`, clamp the final origin
/// so the last patch ends exactly at the border.
fn axis_origins(dim: usize, patch: usize, stride: usize) -> Vec<usize> {
    if dim == patch {
        return vec![0];
    }
    let span = dim - patch;
    let n = span.div_ceil(stride) + 1;
    (0..n).map(|i| (i * stride).min(span)).collect()
}

/// Decompose `img` into overlapping `patch_size` squares.
pub fn split_patches(img: &Image, patch_size: usize, overlap_fraction: f64) -> Result<PatchGrid> {
    if patch_size == 0 || patch_size > img.height().min(img.width()) {
        return Err(Error::invalid(format!(
            "patch size {patch_size} does not fit a {}x{} image",
            img.width(),
            img.height()
        )));
    }
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(Error::invalid(format!(
            "overlap fraction must be in [0,1), got {overlap_fraction}"
        )));
    }
    let stride = ((patch_size as f64 * (1.0 - overlap_fraction)).round() as usize).max(1);
    let xs = axis_origins(img.width(), patch_size, stride);
    let ys = axis_origins(img.height(), patch_size, stride);

    let mut patches = Vec::with_capacity(xs.len() * ys.len());
    for &oy in &ys {
        for &ox in &xs {
            patches.push(Patch {
                origin_x: ox,
                origin_y: oy,
                image: img.crop_square(ox, oy, patch_size)?,
            });
        }
    }
    Ok(PatchGrid {
        patch_size,
        stride,
        grid_cols: xs.len(),
        grid_rows: ys.len(),
        source_channels: img.channels(),
        source_height: img.height(),
        source_width: img.width(),
        patches,
    })
}

/// 1-D blend profile: rises linearly over `margin` samples on each side that
/// has a neighbor, never reaching zero so coverage stays positive.
fn blend_profile(
    len: usize,
    margin: usize,
    neighbor_before: bool,
    neighbor_after: bool,
) -> Vec<f64> {
    let m = margin.min(len);
    (0..len)
        .map(|t| {
            let mut w: f64 = 1.0;
            if neighbor_before && t < m {
                w = w.min((t + 1) as f64 / (m + 1) as f64);
            }
            if neighbor_after && t >= len - m {
                w = w.min((len - t) as f64 / (m + 1) as f64);
            }
            w
        })
        .collect()
}

/// Reassemble the source image from a grid of patches. Patches may arrive in
/// any order; overlaps are blended with renormalized ramp weights.
pub fn merge_patches(grid: &PatchGrid) -> Result<Image> {
    let p = grid.patch_size;
    if p == 0 || grid.patches.is_empty() {
        return Err(Error::invalid("cannot merge an empty patch grid"));
    }
    let margin = p.saturating_sub(grid.stride);

    let n = grid.source_height * grid.source_width;
    let mut acc = vec![0.0f64; grid.source_channels * n];
    let mut wsum = vec![0.0f64; n];

    for patch in &grid.patches {
        let img = &patch.image;
        if img.channels() != grid.source_channels || img.height() != p || img.width() != p {
            return Err(Error::invalid(format!(
                "patch at ({}, {}) is {}x{}x{}, expected {}x{p}x{p}",
                patch.origin_x,
                patch.origin_y,
                img.channels(),
                img.height(),
                img.width(),
                grid.source_channels
            )));
        }
        if patch.origin_x + p > grid.source_width || patch.origin_y + p > grid.source_height {
            return Err(Error::invalid("patch origin outside the source image"));
        }
        let wx = blend_profile(
            p,
            margin,
            patch.origin_x > 0,
            patch.origin_x + p < grid.source_width,
        );
        let wy = blend_profile(
            p,
            margin,
            patch.origin_y > 0,
            patch.origin_y + p < grid.source_height,
        );
        for (y, &wyv) in wy.iter().enumerate() {
            let sy = patch.origin_y + y;
            for (x, &wxv) in wx.iter().enumerate() {
                let sx = patch.origin_x + x;
                let w = wyv * wxv;
                wsum[sy * grid.source_width + sx] += w;
                for c in 0..grid.source_channels {
                    acc[c * n + sy * grid.source_width + sx] += w * img.get(c, y, x);
                }
            }
        }
    }

    if wsum.iter().any(|&w| w <= 0.0) {
        return Err(Error::invalid("patch grid does not cover the source image"));
    }
    for c in 0..grid.source_channels {
        for i in 0..n {
            acc[c * n + i] /= wsum[i];
        }
    }
    Image::from_data(
        grid.source_channels,
        grid.source_height,
        grid.source_width,
        acc,
    )
}
