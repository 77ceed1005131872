//! End-to-end texture enhancement: complexity measurement, scale selection,
//! style generation, and the feature-space transfer, plus the overlapping
//! patch mode for large images.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::complexity::{mmi_delta, ComplexityConfig};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::lbfgs::{minimize, LbfgsOptions, OptimReport};
use crate::loss::{prepare_targets, total_loss_and_grad, TransferConfig};
use crate::net::Network;
use crate::patch::{merge_patches, split_patches};
use crate::resample::resample_bicubic;
use crate::scale::ScaleModel;
use crate::style::generate_style;

/// Overlapping-patch processing for large images.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchOptions {
    pub enabled: bool,
    pub patch_size: usize,
    pub overlap: f64,
}

impl Default for PatchOptions {
    fn default() -> Self {
        PatchOptions {
            enabled: false,
            patch_size: 240,
            overlap: 0.3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub upsample_factor: usize,
    pub scale_model: ScaleModel,
    pub transfer: TransferConfig,
    pub complexity: ComplexityConfig,
    pub patch: PatchOptions,
    /// Worker threads for patch processing and network kernels; `None` uses
    /// the global default.
    pub threads: Option<usize>,
    /// Skip scale estimation and force this down-scaling factor.
    pub phi_override: Option<f64>,
    /// Retain the generated style image in the diagnostics.
    pub keep_style: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            upsample_factor: 4,
            scale_model: ScaleModel::default(),
            transfer: TransferConfig::default(),
            complexity: ComplexityConfig::default(),
            patch: PatchOptions::default(),
            threads: None,
            phi_override: None,
            keep_style: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.upsample_factor < 2 {
            return Err(Error::invalid("upsample factor must be at least 2"));
        }
        self.scale_model.validate()?;
        self.transfer.validate()?;
        if self.complexity.num_bins < 2 {
            return Err(Error::invalid("num_bins must be at least 2"));
        }
        if let Some(phi) = self.phi_override {
            if !(phi.is_finite() && 0.0 < phi && phi < 1.0) {
                return Err(Error::invalid("phi override must lie in (0,1)"));
            }
        }
        if self.patch.patch_size == 0 || !(0.0..1.0).contains(&self.patch.overlap) {
            return Err(Error::invalid("invalid patch options"));
        }
        Ok(())
    }
}

/// Per-run measurements, always computed; callers decide what to surface.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub delta: f64,
    pub phi_raw: f64,
    pub phi_hat: f64,
    pub report: OptimReport,
    pub style: Option<Image>,
    pub elapsed: Duration,
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(f),
        _ => f(),
    }
}

/// Texture-enhance `c` given its low-detail counterpart `interp`; the core of
/// both the single-image and the patch pipelines. Dimensions are preserved.
fn enhance_core(
    interp: &Image,
    c: &Image,
    net: &Network,
    cfg: &PipelineConfig,
) -> Result<(Image, Diagnostics)> {
    let start = Instant::now();
    let delta = mmi_delta(interp, c, &cfg.complexity)?;
    let phi_raw = cfg.scale_model.estimate_phi(delta)?;
    let phi_hat = match cfg.phi_override {
        Some(phi) => phi,
        None => cfg.scale_model.quantize_phi(phi_raw)?,
    };
    let style = generate_style(c, phi_hat)?;
    let targets = prepare_targets(net, &style, c, &cfg.transfer)?;

    // surface shape/config errors before entering the optimizer
    total_loss_and_grad(net, c, &targets, &cfg.transfer)?;

    let (ch, h, w) = (c.channels(), c.height(), c.width());
    let objective = |x: &[f64]| {
        match Image::from_data(ch, h, w, x.to_vec())
            .and_then(|img| total_loss_and_grad(net, &img, &targets, &cfg.transfer))
        {
            Ok(v) => v,
            // a non-finite probe is simply a rejected line-search point
            Err(_) => (f64::INFINITY, vec![0.0; x.len()]),
        }
    };
    let opts = LbfgsOptions {
        max_iterations: cfg.transfer.iterations,
        ..LbfgsOptions::default()
    };
    // "initialize x with c"
    let (x, report) = minimize(objective, c.data(), &opts)?;

    let mut out = Image::from_data(ch, h, w, x)?;
    out.clamp_unit();
    Ok((
        out,
        Diagnostics {
            delta,
            phi_raw,
            phi_hat,
            report,
            style: cfg.keep_style.then_some(style),
            elapsed: start.elapsed(),
        },
    ))
}

/// Full single-image pipeline: bicubic interpolation to the target size, the
/// externally supplied initial HR image (bicubic fallback when absent), and
/// the style transfer from the tiled style source. The result is clamped to
/// `[0,1]`.
pub fn super_resolve(
    lr: &Image,
    initial_hr: Option<&Image>,
    net: &Network,
    cfg: &PipelineConfig,
) -> Result<(Image, Diagnostics)> {
    cfg.validate()?;
    let (hw, hh) = (
        lr.width() * cfg.upsample_factor,
        lr.height() * cfg.upsample_factor,
    );
    let interp = resample_bicubic(lr, hw, hh)?;
    let c = match initial_hr {
        Some(img) => {
            if img.channels() != lr.channels() || img.height() != hh || img.width() != hw {
                return Err(Error::invalid(format!(
                    "initial HR must be {}x{}x{}, got {}x{}x{}",
                    lr.channels(),
                    hh,
                    hw,
                    img.channels(),
                    img.height(),
                    img.width()
                )));
            }
            img.clone()
        }
        None => {
            log::warn!("no initial HR image supplied; falling back to bicubic interpolation");
            interp.clone()
        }
    };
    with_pool(cfg.threads, || enhance_core(&interp, &c, net, cfg))
}

/// Patch mode for large images: the input is enhanced at its native
/// resolution, patch by patch, each patch getting its own complexity delta
/// and scale factor. The low-detail counterpart of every patch is
/// synthesized by bicubic down-and-up at the configured factor. Patches are
/// processed in parallel and merged by grid position with blended overlaps.
pub fn super_resolve_4k(
    img: &Image,
    net: &Network,
    cfg: &PipelineConfig,
) -> Result<(Image, Vec<Diagnostics>)> {
    cfg.validate()?;
    if !cfg.patch.enabled {
        return Err(Error::invalid("patch mode is not enabled in the config"));
    }
    let down_up = |p: &Image| -> Result<Image> {
        let lw = (p.width() / cfg.upsample_factor).max(1);
        let lh = (p.height() / cfg.upsample_factor).max(1);
        resample_bicubic(&resample_bicubic(p, lw, lh)?, p.width(), p.height())
    };

    if img.height() < cfg.patch.patch_size || img.width() < cfg.patch.patch_size {
        log::warn!(
            "image smaller than the {}px patch; enhancing it whole",
            cfg.patch.patch_size
        );
        let interp = down_up(img)?;
        let (out, diag) = with_pool(cfg.threads, || enhance_core(&interp, img, net, cfg))?;
        return Ok((out, vec![diag]));
    }

    let mut grid = split_patches(img, cfg.patch.patch_size, cfg.patch.overlap)?;
    let results: Result<Vec<(Image, Diagnostics)>> = with_pool(cfg.threads, || {
        grid.patches
            .par_iter()
            .map(|p| {
                let interp = down_up(&p.image)?;
                enhance_core(&interp, &p.image, net, cfg)
            })
            .collect()
    });
    let mut diags = Vec::with_capacity(grid.patches.len());
    for (patch, (enhanced, diag)) in grid.patches.iter_mut().zip(results?) {
        patch.image = enhanced;
        diags.push(diag);
    }
    let mut out = merge_patches(&grid)?;
    out.clamp_unit();
    Ok((out, diags))
}
