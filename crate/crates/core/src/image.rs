//! Planar floating-point raster, the currency every stage of the pipeline
//! trades in.
//!
//! Samples are stored channel-major (`data[c*h*w + y*w + x]`) in the nominal
//! range `[0,1]`. 8-bit I/O scales by 1/255 at the boundary (see `io`).

use crate::error::{Error, Result};

/// Planar image with 1 (gray) or 3 (RGB) channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

/// Rec.601 luma weights for RGB → gray.
const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

impl Image {
    /// Zero-filled image.
    pub fn zeros(channels: usize, height: usize, width: usize) -> Result<Self> {
        Self::validate_dims(channels, height, width)?;
        Ok(Image {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        })
    }

    /// Image filled with a single value.
    pub fn constant(channels: usize, height: usize, width: usize, value: f64) -> Result<Self> {
        let mut img = Self::zeros(channels, height, width)?;
        img.data.fill(value);
        Ok(img)
    }

    /// Wrap an existing planar buffer. The length must be
    /// `channels * height * width` and every sample must be finite.
    pub fn from_data(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        Self::validate_dims(channels, height, width)?;
        if data.len() != channels * height * width {
            return Err(Error::invalid(format!(
                "data length {} does not match {}x{}x{}",
                data.len(),
                channels,
                height,
                width
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("image contains non-finite samples"));
        }
        Ok(Image {
            channels,
            height,
            width,
            data,
        })
    }

    fn validate_dims(channels: usize, height: usize, width: usize) -> Result<()> {
        if channels != 1 && channels != 3 {
            return Err(Error::invalid(format!(
                "channel count must be 1 or 3, got {channels}"
            )));
        }
        if height == 0 || width == 0 {
            return Err(Error::invalid("image dimensions must be nonzero"));
        }
        Ok(())
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        debug_assert!(c < self.channels && y < self.height && x < self.width);
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f64) {
        debug_assert!(c < self.channels && y < self.height && x < self.width);
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    /// One channel plane as a contiguous slice.
    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    /// Clamp every sample into `[0,1]`.
    pub fn clamp_unit(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }

    /// Copy a `size`×`size` square window with its top-left corner at
    /// (`origin_x`, `origin_y`). The window must lie inside the image.
    pub fn crop_square(&self, origin_x: usize, origin_y: usize, size: usize) -> Result<Image> {
        if origin_x + size > self.width || origin_y + size > self.height {
            return Err(Error::invalid("crop window exceeds image bounds"));
        }
        let mut out = Image::zeros(self.channels, size, size)?;
        for c in 0..self.channels {
            for y in 0..size {
                let src = (c * self.height + origin_y + y) * self.width + origin_x;
                let dst = (c * size + y) * size;
                out.data[dst..dst + size].copy_from_slice(&self.data[src..src + size]);
            }
        }
        Ok(out)
    }
}

/// Collapse to a single luma plane. 3-channel input uses the Rec.601 weighted
/// sum; 1-channel input is passed through unchanged.
pub fn to_luma(img: &Image) -> Result<Image> {
    match img.channels {
        1 => Ok(img.clone()),
        3 => {
            let n = img.height * img.width;
            let (r, rest) = img.data.split_at(n);
            let (g, b) = rest.split_at(n);
            let data = (0..n)
                .map(|i| LUMA_WEIGHTS[0] * r[i] + LUMA_WEIGHTS[1] * g[i] + LUMA_WEIGHTS[2] * b[i])
                .collect();
            Image::from_data(1, img.height, img.width, data)
        }
        c => Err(Error::invalid(format!(
            "to_luma expects 1 or 3 channels, got {c}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_data_validates_length_and_finiteness() {
        assert!(Image::from_data(1, 2, 2, vec![0.0; 3]).is_err());
        assert!(Image::from_data(1, 2, 2, vec![0.0, 0.5, f64::NAN, 1.0]).is_err());
        assert!(Image::from_data(1, 2, 2, vec![0.0; 4]).is_ok());
    }

    #[test]
    fn rejects_bad_channel_counts() {
        assert!(Image::zeros(2, 4, 4).is_err());
        assert!(Image::zeros(0, 4, 4).is_err());
    }

    #[test]
    fn luma_of_gray_rgb_is_the_common_value() {
        let img = Image::constant(3, 3, 5, 0.42).unwrap();
        let luma = to_luma(&img).unwrap();
        assert_eq!(luma.channels(), 1);
        for &v in luma.data() {
            assert!((v - 0.42).abs() < 1e-12);
        }
    }

    #[test]
    fn luma_of_pure_red_is_the_red_weight() {
        let mut img = Image::zeros(3, 2, 2).unwrap();
        for y in 0..2 {
            for x in 0..2 {
                img.set(0, y, x, 1.0);
            }
        }
        let luma = to_luma(&img).unwrap();
        for &v in luma.data() {
            assert!((v - 0.299).abs() < 1e-12);
        }
    }

    #[test]
    fn luma_passthrough_is_bitwise_identical() {
        let img = Image::from_data(1, 2, 3, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
        let luma = to_luma(&img).unwrap();
        assert_eq!(img.data(), luma.data());
    }

    #[test]
    fn luma_stays_in_unit_range() {
        let img = Image::constant(3, 4, 4, 1.0).unwrap();
        let luma = to_luma(&img).unwrap();
        for &v in luma.data() {
            assert!((0.0..=1.0).contains(&v));
        }
    }
}
