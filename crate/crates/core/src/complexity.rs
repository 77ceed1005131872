//! Structural-complexity measurement and calibration of the scale-factor
//! model.
//!
//! The complexity score is the normalized total correlation of 2x2 pixel
//! neighborhoods,
//!
//! ```text
//!     mmi = (4*ME - JE) / (3 * ln Nb)
//! ```
//!
//! where `ME` is the entropy of the single-pixel marginal over the whole
//! plane, `JE` the entropy of the 4-tuple distribution over all sliding 2x2
//! windows, and `Nb` the number of equal-width histogram bins over `[0,1]`.
//! A constant plane scores 0; a spatially regular pattern with a uniform
//! marginal scores 1; i.i.d. noise scores near 0. Both entropies carry the
//! Miller-Madow small-sample correction `(m-1)/(2N)`; without it the joint
//! histogram (`Nb^4` cells against one sample per pixel) biases the score of
//! pure noise visibly above zero. The score is base-invariant since numerator
//! and denominator use the same logarithm.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::image::{to_luma, Image};
use crate::scale::ScaleModel;

#[derive(Debug, Clone)]
pub struct ComplexityConfig {
    /// Histogram bins per axis; the joint histogram has `num_bins^4` cells.
    pub num_bins: usize,
}

impl Default for ComplexityConfig {
    fn default() -> Self {
        ComplexityConfig { num_bins: 16 }
    }
}

impl ComplexityConfig {
    fn validate(&self) -> Result<()> {
        if self.num_bins < 2 {
            return Err(Error::invalid("num_bins must be at least 2"));
        }
        Ok(())
    }
}

#[inline]
fn bin_of(v: f64, nb: usize) -> u64 {
    ((v.clamp(0.0, 1.0) * nb as f64) as u64).min(nb as u64 - 1)
}

/// Plug-in Shannon entropy (nats) with Miller-Madow bias correction.
/// Zero-count cells contribute nothing (0 * ln 0 := 0).
fn entropy(counts: impl Iterator<Item = u64>, total: u64) -> f64 {
    let n = total as f64;
    let mut h = 0.0;
    let mut occupied = 0u64;
    for c in counts {
        if c > 0 {
            let p = c as f64 / n;
            h -= p * p.ln();
            occupied += 1;
        }
    }
    h + (occupied.saturating_sub(1)) as f64 / (2.0 * n)
}

/// Pre-clamp complexity score; exposed to unit tests so the clamp magnitude
/// can be checked.
fn mmi_raw(plane: &Image, cfg: &ComplexityConfig) -> Result<f64> {
    cfg.validate()?;
    if plane.channels() != 1 {
        return Err(Error::invalid("mmi expects a single-channel plane"));
    }
    let (h, w) = (plane.height(), plane.width());
    if h < 2 || w < 2 {
        return Err(Error::invalid("mmi needs a plane of at least 2x2"));
    }
    let nb = cfg.num_bins;
    let data = plane.plane(0);

    let bins: Vec<u64> = data.iter().map(|&v| bin_of(v, nb)).collect();

    let mut marginal = vec![0u64; nb];
    for &b in &bins {
        marginal[b as usize] += 1;
    }
    let me = entropy(marginal.into_iter(), (h * w) as u64);

    let nbu = nb as u64;
    let mut joint: HashMap<u64, u64> = HashMap::new();
    for y in 0..h - 1 {
        for x in 0..w - 1 {
            let key = ((bins[y * w + x] * nbu + bins[y * w + x + 1]) * nbu + bins[(y + 1) * w + x])
                * nbu
                + bins[(y + 1) * w + x + 1];
            *joint.entry(key).or_insert(0) += 1;
        }
    }
    // fixed summation order keeps the score bitwise deterministic
    let mut cells: Vec<(u64, u64)> = joint.into_iter().collect();
    cells.sort_unstable_by_key(|&(k, _)| k);
    let je = entropy(
        cells.into_iter().map(|(_, c)| c),
        ((h - 1) * (w - 1)) as u64,
    );

    Ok((4.0 * me - je) / (3.0 * (nb as f64).ln()))
}

/// Mean-mutual-information structural complexity of a single-channel plane,
/// clamped to `[0,1]`.
pub fn mmi(plane: &Image, cfg: &ComplexityConfig) -> Result<f64> {
    Ok(mmi_raw(plane, cfg)?.clamp(0.0, 1.0))
}

/// Complexity improvement from the interpolated LR image to the initial HR
/// image. Color inputs are collapsed to luma first. May be negative.
pub fn mmi_delta(interp_lr: &Image, initial_hr: &Image, cfg: &ComplexityConfig) -> Result<f64> {
    if interp_lr.height() != initial_hr.height() || interp_lr.width() != initial_hr.width() {
        return Err(Error::invalid(format!(
            "mmi_delta dimension mismatch: {}x{} vs {}x{}",
            interp_lr.width(),
            interp_lr.height(),
            initial_hr.width(),
            initial_hr.height()
        )));
    }
    Ok(mmi(&to_luma(initial_hr)?, cfg)? - mmi(&to_luma(interp_lr)?, cfg)?)
}

/// One calibration observation: complexity improvement and the scale factor
/// judged optimal for it. `mmi_gap` (original-HR vs initial-HR difference) is
/// recorded for analysis only and never used by the runtime pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSample {
    pub delta: f64,
    pub phi: f64,
    pub mmi_gap: Option<f64>,
}

impl CalibrationSample {
    pub fn new(delta: f64, phi: f64, mmi_gap: Option<f64>) -> Result<Self> {
        if !delta.is_finite() {
            return Err(Error::invalid("calibration delta must be finite"));
        }
        if !(phi.is_finite() && 0.0 < phi && phi < 1.0) {
            return Err(Error::invalid(format!(
                "calibration phi must lie in (0,1), got {phi}"
            )));
        }
        Ok(CalibrationSample {
            delta,
            phi,
            mmi_gap,
        })
    }
}

/// Ordinary least-squares line `phi = slope * delta + intercept` through the
/// calibration samples. Quantization step and clamp range keep their
/// defaults.
pub fn fit_scale_model(samples: &[CalibrationSample]) -> Result<ScaleModel> {
    if samples.len() < 2 {
        return Err(Error::DegenerateFit(
            "need at least two calibration samples".into(),
        ));
    }
    let n = samples.len() as f64;
    let mean_d = samples.iter().map(|s| s.delta).sum::<f64>() / n;
    let mean_p = samples.iter().map(|s| s.phi).sum::<f64>() / n;
    let sxx = samples
        .iter()
        .map(|s| (s.delta - mean_d) * (s.delta - mean_d))
        .sum::<f64>();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit(
            "all calibration deltas are identical".into(),
        ));
    }
    let sxy = samples
        .iter()
        .map(|s| (s.delta - mean_d) * (s.phi - mean_p))
        .sum::<f64>();
    let slope = sxy / sxx;
    let intercept = mean_p - slope * mean_d;
    Ok(ScaleModel {
        slope,
        intercept,
        ..ScaleModel::default()
    })
}

/// Read calibration samples from a CSV file with header
/// `delta,phi[,mmi_gap]`.
pub fn read_calibration_csv(path: impl AsRef<std::path::Path>) -> Result<Vec<CalibrationSample>> {
    let mut reader =
        csv::Reader::from_path(path.as_ref()).map_err(|e| Error::Csv(e.to_string()))?;
    let headers = reader.headers().map_err(|e| Error::Csv(e.to_string()))?;
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (di, pi) = match (col("delta"), col("phi")) {
        (Some(d), Some(p)) => (d, p),
        _ => {
            return Err(Error::Csv(
                "header must contain 'delta' and 'phi' columns".into(),
            ))
        }
    };
    let gi = col("mmi_gap");

    let mut samples = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        let field = |i: usize| -> Result<f64> {
            record
                .get(i)
                .ok_or_else(|| Error::Csv(format!("row {}: missing field {i}", line + 2)))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Csv(format!("row {}: {e}", line + 2)))
        };
        let gap = match gi {
            Some(i) if record.get(i).is_some_and(|s| !s.trim().is_empty()) => Some(field(i)?),
            _ => None,
        };
        samples.push(CalibrationSample::new(field(di)?, field(pi)?, gap)?);
    }
    Ok(samples)
}
