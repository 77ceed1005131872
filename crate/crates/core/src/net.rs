//! VGG-16-shaped convolutional feature extractor.
//!
//! The network is a plain ordered stack of 3x3 stride-1 pad-1 conv+ReLU
//! layers and 2x2 stride-2 pooling layers. It supports two passes:
//!
//! * `forward` captures post-ReLU activations at requested conv layers;
//! * `backward` pulls per-layer cotangents back to pixel space (the
//!   vector-Jacobian product), gating ReLUs by the forward sign and routing
//!   max-pool gradients to the argmax (first in scan order on ties).
//!
//! All arithmetic accumulates in f64 regardless of the f32 storage used by
//! the weight file, so gradient checks hold to tight tolerances.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::Image;

const MAGIC: &[u8; 8] = b"HRSTNET1";

/// Conv channel plan of VGG-16 (13 conv layers, pools after 2, 4, 7, 10, 13).
pub const VGG16_CHANNELS: [usize; 13] = [
    64, 64, 128, 128, 256, 256, 256, 512, 512, 512, 512, 512, 512,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    /// 3x3 convolution, stride 1, pad 1, followed by ReLU.
    Conv { out_channels: usize },
    /// 2x2 pooling with stride 2.
    Pool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PoolKind {
    #[default]
    Max,
    Average,
}

/// The standard VGG-16 feature plan.
pub fn vgg16_layers() -> Vec<LayerSpec> {
    let mut layers = Vec::new();
    for (i, &c) in VGG16_CHANNELS.iter().enumerate() {
        layers.push(LayerSpec::Conv { out_channels: c });
        // pools close each channel block
        if matches!(i + 1, 2 | 4 | 7 | 10 | 13) {
            layers.push(LayerSpec::Pool);
        }
    }
    layers
}

/// Small three-conv plan (with one pool) used as the gradient-test fixture.
pub fn tiny_test_layers() -> Vec<LayerSpec> {
    vec![
        LayerSpec::Conv { out_channels: 4 },
        LayerSpec::Conv { out_channels: 5 },
        LayerSpec::Pool,
        LayerSpec::Conv { out_channels: 3 },
    ]
}

/// Post-ReLU activations of one conv layer: a `channels x (height*width)`
/// matrix stored row-major per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMaps {
    pub layer: usize,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl FeatureMaps {
    pub fn spatial_size(&self) -> usize {
        self.height * self.width
    }
}

#[derive(Debug, Clone)]
struct ConvParams {
    out_ch: usize,
    in_ch: usize,
    /// `out_ch * in_ch * 9`, kernel row-major.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Tensor {
    c: usize,
    h: usize,
    w: usize,
    data: Vec<f64>,
}

impl Tensor {
    fn zeros(c: usize, h: usize, w: usize) -> Self {
        Tensor {
            c,
            h,
            w,
            data: vec![0.0; c * h * w],
        }
    }

    #[inline]
    fn plane(&self, c: usize) -> &[f64] {
        &self.data[c * self.h * self.w..(c + 1) * self.h * self.w]
    }
}

/// Immutable convolutional feature extractor.
#[derive(Debug, Clone)]
pub struct Network {
    layers: Vec<LayerSpec>,
    convs: Vec<ConvParams>,
    input_channels: usize,
    /// Per-channel offsets subtracted before the first layer.
    channel_means: [f64; 3],
    pool_kind: PoolKind,
    payload_checksum: Option<u64>,
}

impl Network {
    /// Deterministic random network for fixtures: He-style scale
    /// `1/sqrt(fan_in)`, zero biases, zero channel means. Weights are drawn
    /// as f32 so a save/load round trip is bitwise exact.
    pub fn random(layers: &[LayerSpec], input_channels: usize, seed: u64) -> Result<Network> {
        validate_plan(layers)?;
        if input_channels == 0 {
            return Err(Error::invalid("input channel count must be nonzero"));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut convs = Vec::new();
        let mut in_ch = input_channels;
        for spec in layers {
            if let LayerSpec::Conv { out_channels } = *spec {
                let fan_in = (in_ch * 9) as f32;
                let normal = Normal::<f32>::new(0.0, 1.0 / fan_in.sqrt())
                    .expect("std is positive and finite");
                let weights = (0..out_channels * in_ch * 9)
                    .map(|_| normal.sample(&mut rng) as f64)
                    .collect();
                convs.push(ConvParams {
                    out_ch: out_channels,
                    in_ch,
                    weights,
                    bias: vec![0.0; out_channels],
                });
                in_ch = out_channels;
            }
        }
        Ok(Network {
            layers: layers.to_vec(),
            convs,
            input_channels,
            channel_means: [0.0; 3],
            pool_kind: PoolKind::Max,
            payload_checksum: None,
        })
    }

    /// Switch pooling behavior (default max).
    pub fn with_pool_kind(mut self, kind: PoolKind) -> Network {
        self.pool_kind = kind;
        self
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn conv_count(&self) -> usize {
        self.convs.len()
    }

    pub fn input_channels(&self) -> usize {
        self.input_channels
    }

    pub fn channel_means(&self) -> [f64; 3] {
        self.channel_means
    }

    pub fn set_channel_means(&mut self, means: [f64; 3]) {
        self.channel_means = means;
    }

    /// FNV-1a checksum of the weight-file payload, recorded on load/save.
    pub fn payload_checksum(&self) -> Option<u64> {
        self.payload_checksum
    }

    /// Shape `(channels, height, width)` of the captured activations at
    /// `conv_index` for a given input size, by plan arithmetic alone.
    pub fn feature_shape(
        &self,
        conv_index: usize,
        in_h: usize,
        in_w: usize,
    ) -> Result<(usize, usize, usize)> {
        let (mut h, mut w) = (in_h, in_w);
        let mut ci = 0;
        for spec in &self.layers {
            match *spec {
                LayerSpec::Conv { out_channels } => {
                    ci += 1;
                    if ci == conv_index {
                        return Ok((out_channels, h, w));
                    }
                }
                LayerSpec::Pool => {
                    h /= 2;
                    w /= 2;
                    if h == 0 || w == 0 {
                        return Err(Error::invalid("input too small for the architecture"));
                    }
                }
            }
        }
        Err(Error::invalid(format!(
            "conv index {conv_index} not in network (has {ci} convs)"
        )))
    }

    /// Run the network and capture post-ReLU activations at the requested
    /// conv indices (1-based). An empty capture set returns an empty map.
    pub fn forward(
        &self,
        img: &Image,
        capture: &BTreeSet<usize>,
    ) -> Result<BTreeMap<usize, FeatureMaps>> {
        self.validate_capture(capture)?;
        let Some(&deepest) = capture.iter().max() else {
            return Ok(BTreeMap::new());
        };
        let (maps, _) = self.forward_internal(img, deepest, capture, false)?;
        Ok(maps)
    }

    /// Vector-Jacobian product: pull `cotangents` (one `C_l x N_l` buffer per
    /// captured conv layer) back to an image-shaped pixel gradient.
    pub fn backward(
        &self,
        img: &Image,
        cotangents: &BTreeMap<usize, Vec<f64>>,
    ) -> Result<Vec<f64>> {
        let keys: BTreeSet<usize> = cotangents.keys().copied().collect();
        self.validate_capture(&keys)?;
        let Some(&deepest) = keys.iter().max() else {
            return Ok(vec![0.0; img.channels() * img.height() * img.width()]);
        };
        let (_, records) = self.forward_internal(img, deepest, &BTreeSet::new(), true)?;

        // conv index of each layer, for cotangent injection
        let mut conv_of_layer = vec![None; records.len()];
        let mut ci = 0;
        for (li, spec) in self.layers.iter().take(records.len()).enumerate() {
            if matches!(spec, LayerSpec::Conv { .. }) {
                ci += 1;
                conv_of_layer[li] = Some(ci);
            }
        }

        let mut grad = match records.last().expect("nonempty") {
            LayerRecord::Conv { post } => Tensor::zeros(post.c, post.h, post.w),
            LayerRecord::Pool { out_shape, .. } => {
                Tensor::zeros(out_shape.0, out_shape.1, out_shape.2)
            }
        };

        // walk backwards through the recorded layers
        for li in (0..records.len()).rev() {
            match &records[li] {
                LayerRecord::Conv { post } => {
                    let conv_index = conv_of_layer[li].expect("conv layer");
                    if let Some(v) = cotangents.get(&conv_index) {
                        if v.len() != post.data.len() {
                            return Err(Error::invalid(format!(
                                "cotangent for conv{} has {} entries, expected {}",
                                conv_index,
                                v.len(),
                                post.data.len()
                            )));
                        }
                        for (g, &vi) in grad.data.iter_mut().zip(v) {
                            *g += vi;
                        }
                    }
                    // ReLU gate by forward sign
                    for (g, &a) in grad.data.iter_mut().zip(&post.data) {
                        if a <= 0.0 {
                            *g = 0.0;
                        }
                    }
                    let params = &self.convs[conv_index - 1];
                    grad = conv_backward_input(&grad, params);
                }
                LayerRecord::Pool {
                    in_shape, argmax, ..
                } => {
                    grad = self.pool_backward(&grad, *in_shape, argmax.as_deref());
                }
            }
        }
        Ok(grad.data)
    }

    fn validate_capture(&self, capture: &BTreeSet<usize>) -> Result<()> {
        for &l in capture {
            if l == 0 || l > self.convs.len() {
                return Err(Error::invalid(format!(
                    "conv index {l} outside 1..={}",
                    self.convs.len()
                )));
            }
        }
        Ok(())
    }

    fn forward_internal(
        &self,
        img: &Image,
        deepest_conv: usize,
        capture: &BTreeSet<usize>,
        record: bool,
    ) -> Result<(BTreeMap<usize, FeatureMaps>, Vec<LayerRecord>)> {
        if img.channels() != self.input_channels {
            return Err(Error::invalid(format!(
                "network expects {} input channels, image has {}",
                self.input_channels,
                img.channels()
            )));
        }
        let mut x = self.preprocess(img);
        let mut maps = BTreeMap::new();
        let mut records = Vec::new();
        let mut conv_index = 0;
        for spec in &self.layers {
            match *spec {
                LayerSpec::Conv { .. } => {
                    conv_index += 1;
                    let params = &self.convs[conv_index - 1];
                    let mut out = conv_forward(&x, params);
                    for v in &mut out.data {
                        *v = v.max(0.0);
                    }
                    if capture.contains(&conv_index) {
                        maps.insert(
                            conv_index,
                            FeatureMaps {
                                layer: conv_index,
                                channels: out.c,
                                height: out.h,
                                width: out.w,
                                data: out.data.clone(),
                            },
                        );
                    }
                    x = out;
                    if record {
                        records.push(LayerRecord::Conv { post: x.clone() });
                    }
                    if conv_index == deepest_conv {
                        break;
                    }
                }
                LayerSpec::Pool => {
                    if x.h < 2 || x.w < 2 {
                        return Err(Error::invalid(
                            "input too small for the architecture (pool on <2 pixel extent)",
                        ));
                    }
                    let in_shape = (x.c, x.h, x.w);
                    let (out, argmax) = self.pool_forward(&x, record);
                    x = out;
                    if record {
                        records.push(LayerRecord::Pool {
                            in_shape,
                            out_shape: (x.c, x.h, x.w),
                            argmax,
                        });
                    }
                }
            }
        }
        Ok((maps, records))
    }

    fn preprocess(&self, img: &Image) -> Tensor {
        let mut x = Tensor {
            c: img.channels(),
            h: img.height(),
            w: img.width(),
            data: img.data().to_vec(),
        };
        let n = x.h * x.w;
        for c in 0..x.c.min(3) {
            let m = self.channel_means[c];
            if m != 0.0 {
                for v in &mut x.data[c * n..(c + 1) * n] {
                    *v -= m;
                }
            }
        }
        x
    }

    fn pool_forward(&self, x: &Tensor, want_argmax: bool) -> (Tensor, Option<Vec<u32>>) {
        let (oh, ow) = (x.h / 2, x.w / 2);
        let mut out = Tensor::zeros(x.c, oh, ow);
        let mut argmax = if want_argmax && self.pool_kind == PoolKind::Max {
            Some(vec![0u32; x.c * oh * ow])
        } else {
            None
        };
        for c in 0..x.c {
            let plane = x.plane(c);
            for oy in 0..oh {
                for ox in 0..ow {
                    let base = (2 * oy) * x.w + 2 * ox;
                    let idx4 = [base, base + 1, base + x.w, base + x.w + 1];
                    let o = (c * oh + oy) * ow + ox;
                    match self.pool_kind {
                        PoolKind::Max => {
                            // first index wins ties
                            let mut best = idx4[0];
                            for &i in &idx4[1..] {
                                if plane[i] > plane[best] {
                                    best = i;
                                }
                            }
                            out.data[o] = plane[best];
                            if let Some(am) = argmax.as_mut() {
                                am[o] = (c * x.h * x.w + best) as u32;
                            }
                        }
                        PoolKind::Average => {
                            out.data[o] = idx4.iter().map(|&i| plane[i]).sum::<f64>() / 4.0;
                        }
                    }
                }
            }
        }
        (out, argmax)
    }

    fn pool_backward(
        &self,
        g: &Tensor,
        in_shape: (usize, usize, usize),
        argmax: Option<&[u32]>,
    ) -> Tensor {
        let (c, h, w) = in_shape;
        let mut out = Tensor::zeros(c, h, w);
        match self.pool_kind {
            PoolKind::Max => {
                let am = argmax.expect("argmax recorded for max pooling");
                for (o, &src) in am.iter().enumerate() {
                    out.data[src as usize] += g.data[o];
                }
            }
            PoolKind::Average => {
                for ch in 0..c {
                    for oy in 0..g.h {
                        for ox in 0..g.w {
                            let gv = g.data[(ch * g.h + oy) * g.w + ox] / 4.0;
                            let base = ch * h * w + (2 * oy) * w + 2 * ox;
                            out.data[base] += gv;
                            out.data[base + 1] += gv;
                            out.data[base + w] += gv;
                            out.data[base + w + 1] += gv;
                        }
                    }
                }
            }
        }
        out
    }
}

enum LayerRecord {
    Conv {
        post: Tensor,
    },
    Pool {
        in_shape: (usize, usize, usize),
        out_shape: (usize, usize, usize),
        argmax: Option<Vec<u32>>,
    },
}

fn validate_plan(layers: &[LayerSpec]) -> Result<()> {
    if !layers.iter().any(|s| matches!(s, LayerSpec::Conv { .. })) {
        return Err(Error::invalid("plan must contain at least one conv layer"));
    }
    if layers
        .iter()
        .any(|s| matches!(s, LayerSpec::Conv { out_channels: 0 }))
    {
        return Err(Error::invalid("conv layers need a nonzero channel count"));
    }
    Ok(())
}

/// 3x3 stride-1 pad-1 convolution (no activation). Parallel over output
/// channels; each output plane is accumulated sequentially so results do not
/// depend on scheduling.
fn conv_forward(input: &Tensor, p: &ConvParams) -> Tensor {
    debug_assert_eq!(input.c, p.in_ch);
    let (h, w) = (input.h, input.w);
    let mut out = Tensor::zeros(p.out_ch, h, w);
    out.data
        .par_chunks_mut(h * w)
        .enumerate()
        .for_each(|(co, plane)| {
            plane.fill(p.bias[co]);
            for ci in 0..p.in_ch {
                let src = input.plane(ci);
                for ky in 0..3usize {
                    let dy = ky as isize - 1;
                    for kx in 0..3usize {
                        let dx = kx as isize - 1;
                        let wv = p.weights[((co * p.in_ch + ci) * 3 + ky) * 3 + kx];
                        if wv == 0.0 {
                            continue;
                        }
                        let y0 = (-dy).max(0) as usize;
                        let y1 = (h as isize).min(h as isize - dy) as usize;
                        let x0 = (-dx).max(0) as usize;
                        let x1 = (w as isize).min(w as isize - dx) as usize;
                        for y in y0..y1 {
                            let iy = (y as isize + dy) as usize;
                            let srow = &src[iy * w..iy * w + w];
                            let drow = &mut plane[y * w..y * w + w];
                            for x in x0..x1 {
                                drow[x] += wv * srow[(x as isize + dx) as usize];
                            }
                        }
                    }
                }
            }
        });
    out
}

/// Adjoint of `conv_forward` with respect to its input. Parallel over input
/// channels with sequential accumulation per plane.
fn conv_backward_input(gout: &Tensor, p: &ConvParams) -> Tensor {
    debug_assert_eq!(gout.c, p.out_ch);
    let (h, w) = (gout.h, gout.w);
    let mut gin = Tensor::zeros(p.in_ch, h, w);
    gin.data
        .par_chunks_mut(h * w)
        .enumerate()
        .for_each(|(ci, plane)| {
            for co in 0..p.out_ch {
                let src = gout.plane(co);
                for ky in 0..3usize {
                    let dy = ky as isize - 1;
                    for kx in 0..3usize {
                        let dx = kx as isize - 1;
                        let wv = p.weights[((co * p.in_ch + ci) * 3 + ky) * 3 + kx];
                        if wv == 0.0 {
                            continue;
                        }
                        // forward reads in[y+dy][x+dx] into out[y][x], so the
                        // adjoint scatters out[y][x] back to in[y+dy][x+dx]:
                        // gin[iy][ix] += w * gout[iy-dy][ix-dx]
                        let iy0 = dy.max(0) as usize;
                        let iy1 = (h as isize).min(h as isize + dy) as usize;
                        let ix0 = dx.max(0) as usize;
                        let ix1 = (w as isize).min(w as isize + dx) as usize;
                        for iy in iy0..iy1 {
                            let sy = (iy as isize - dy) as usize;
                            let srow = &src[sy * w..sy * w + w];
                            let drow = &mut plane[iy * w..iy * w + w];
                            for ix in ix0..ix1 {
                                drow[ix] += wv * srow[(ix as isize - dx) as usize];
                            }
                        }
                    }
                }
            }
        });
    gin
}

// ---------------------------------------------------------------------------
// Weight file format
//
// little-endian: magic "HRSTNET1" | u32 conv count | 3 x f32 channel means |
// per conv layer: u32 out, u32 in, u32 kH, u32 kW, out*in*kH*kW f32 weights,
// out f32 biases.
//
// The file carries conv layers only. A 13-conv file must match the VGG-16
// channel plan and is given the standard pool placement; any other count is
// loaded as a plain conv chain without pools (used for small test networks).
// Converting published VGG-16 weights amounts to dumping the 13 conv kernels
// and biases in this order together with the dataset channel means.
// ---------------------------------------------------------------------------

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    layer: usize,
}

impl<'a> Cursor<'a> {
    fn fail<T>(&self, reason: impl Into<String>) -> Result<T> {
        Err(Error::WeightFormat {
            layer: self.layer,
            reason: reason.into(),
        })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return self.fail(format!(
                "truncated file: wanted {n} bytes at offset {}, have {}",
                self.pos,
                self.buf.len() - self.pos
            ));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn read_u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn read_f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn read_f32_vec(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n * 4)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect())
    }
}

impl Network {
    /// Serialize to the binary weight format. Weights are stored as f32.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut payload = Vec::new();
        payload.extend_from_slice(&(self.convs.len() as u32).to_le_bytes());
        for m in self.channel_means {
            payload.extend_from_slice(&(m as f32).to_le_bytes());
        }
        for conv in &self.convs {
            for v in [conv.out_ch, conv.in_ch, 3, 3] {
                payload.extend_from_slice(&(v as u32).to_le_bytes());
            }
            for &w in &conv.weights {
                payload.extend_from_slice(&(w as f32).to_le_bytes());
            }
            for &b in &conv.bias {
                payload.extend_from_slice(&(b as f32).to_le_bytes());
            }
        }
        let mut file = std::fs::File::create(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        file.write_all(MAGIC)
            .and_then(|_| file.write_all(&payload))
            .map_err(|e| Error::Io {
                path: path.to_path_buf(),
                source: e,
            })
    }

    /// Load a weight file, validating shapes against the channel plan.
    pub fn load(path: impl AsRef<Path>) -> Result<Network> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::Io {
                path: path.to_path_buf(),
                source: e,
            })?;
        Self::from_bytes(&bytes)
    }

    fn from_bytes(bytes: &[u8]) -> Result<Network> {
        let mut cur = Cursor {
            buf: bytes,
            pos: 0,
            layer: 0,
        };
        if cur.take(8).map(|m| m != MAGIC).unwrap_or(true) {
            return Err(Error::WeightFormat {
                layer: 0,
                reason: "bad magic (expected HRSTNET1)".into(),
            });
        }
        let count = cur.read_u32()? as usize;
        if count == 0 {
            return cur.fail("file declares zero conv layers");
        }
        let mut means = [0.0f64; 3];
        for m in &mut means {
            *m = cur.read_f32()? as f64;
        }
        let vgg = count == VGG16_CHANNELS.len();
        let mut convs = Vec::with_capacity(count);
        let mut expect_in = None;
        for i in 1..=count {
            cur.layer = i;
            let out_ch = cur.read_u32()? as usize;
            let in_ch = cur.read_u32()? as usize;
            let kh = cur.read_u32()? as usize;
            let kw = cur.read_u32()? as usize;
            if kh != 3 || kw != 3 {
                return cur.fail(format!("kernel must be 3x3, got {kh}x{kw}"));
            }
            if out_ch == 0 || in_ch == 0 {
                return cur.fail("zero channel count");
            }
            if vgg {
                if out_ch != VGG16_CHANNELS[i - 1] {
                    return cur.fail(format!(
                        "conv{i} declares {out_ch} output channels, plan requires {}",
                        VGG16_CHANNELS[i - 1]
                    ));
                }
                let want_in = if i == 1 { 3 } else { VGG16_CHANNELS[i - 2] };
                if in_ch != want_in {
                    return cur.fail(format!(
                        "conv{i} declares {in_ch} input channels, plan requires {want_in}"
                    ));
                }
            } else if let Some(prev) = expect_in {
                if in_ch != prev {
                    return cur.fail(format!(
                        "conv{i} declares {in_ch} input channels, previous layer produced {prev}"
                    ));
                }
            }
            expect_in = Some(out_ch);
            let weights = cur.read_f32_vec(out_ch * in_ch * 9)?;
            let bias = cur.read_f32_vec(out_ch)?;
            convs.push(ConvParams {
                out_ch,
                in_ch,
                weights,
                bias,
            });
        }
        if cur.pos != bytes.len() {
            cur.layer = count;
            return cur.fail(format!(
                "{} trailing bytes after last layer",
                bytes.len() - cur.pos
            ));
        }

        let layers = if vgg {
            vgg16_layers()
        } else {
            convs
                .iter()
                .map(|c| LayerSpec::Conv {
                    out_channels: c.out_ch,
                })
                .collect()
        };
        let input_channels = convs[0].in_ch;
        Ok(Network {
            layers,
            convs,
            input_channels,
            channel_means: means,
            pool_kind: PoolKind::Max,
            payload_checksum: Some(fnv1a(&bytes[8..])),
        })
    }

    #[cfg(test)]
    fn weights_of(&self, conv: usize) -> (&[f64], &[f64]) {
        (&self.convs[conv].weights, &self.convs[conv].bias)
    }
}
