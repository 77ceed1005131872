//! Texture-enhancement super-resolution via high-resolution style transfer.
//!
//! The pipeline takes a low-resolution image and an externally produced
//! initial HR image (bicubic fallback when absent), measures how much
//! structural complexity the initial enhancement recovered, picks a
//! down-scaling factor from that measurement, builds a style image by
//! down-scaling and mirror-tiling the initial HR image, and then fuses style
//! and content in CNN feature space by minimizing Gram-matrix style and
//! multi-layer content losses over the pixels with L-BFGS.
//!
//! Modules mirror the pipeline stages:
//!
//! * [`image`], [`resample`], [`patch`], [`io`] — raster plumbing;
//! * [`complexity`] — mean-mutual-information texture score and calibration;
//! * [`scale`] — complexity-to-scale-factor mapping with quantization;
//! * [`style`] — down-scale + mirror-tile style source;
//! * [`net`] — VGG-16-shaped feature extractor with forward/backward passes;
//! * [`loss`] — Gram/style/content energies and the combined objective;
//! * [`lbfgs`] — limited-memory BFGS with strong-Wolfe line search;
//! * [`metrics`] — PSNR and SSIM;
//! * [`pipeline`] — orchestration, including overlapping patch mode.

pub mod complexity;
pub mod error;
pub mod image;
pub mod io;
pub mod lbfgs;
pub mod loss;
pub mod metrics;
pub mod net;
pub mod patch;
pub mod pipeline;
pub mod resample;
pub mod scale;
pub mod style;

pub use crate::image::{to_luma, Image};
pub use complexity::{fit_scale_model, mmi, mmi_delta, CalibrationSample, ComplexityConfig};
pub use error::{Error, Result};
pub use lbfgs::{minimize, LbfgsOptions, OptimReport, TerminationReason};
pub use loss::{
    content_energy, gram, style_energy, total_loss_and_grad, GramMatrix, TransferConfig,
};
pub use metrics::{psnr, ssim};
pub use net::{vgg16_layers, FeatureMaps, LayerSpec, Network, PoolKind};
pub use patch::{merge_patches, split_patches, PatchGrid};
pub use pipeline::{super_resolve, super_resolve_4k, Diagnostics, PatchOptions, PipelineConfig};
pub use resample::resample_bicubic;
pub use scale::ScaleModel;
pub use style::generate_style;
