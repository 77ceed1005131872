//! Style and content energies over captured feature maps, and the combined
//! transfer objective with its pixel-space gradient.
//!
//! The style term matches Gram matrices `G = F F^T` of the optimized image
//! against those of the style source, layer by layer:
//!
//! ```text
//!     E_style(l)   = 1/(4 C^2 N^2) * sum_ij (Gx_ij - Gs_ij)^2
//!     E_content(l) = 1/2 * sum_ik (Fx_ik - Fc_ik)^2
//!     total        = alpha * sum_l w_l E_style(l) + beta * sum_l w_l E_content(l)
//! ```
//!
//! Gradients with respect to the captured features are analytic; the network
//! backward pass carries them to pixel space. ReLU gating is handled there —
//! captured features are post-ReLU, so no extra positivity mask is applied
//! here.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::net::{FeatureMaps, Network};

/// Symmetric feature-correlation matrix of one layer.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub layer: usize,
    pub channels: usize,
    /// `channels x channels`, row-major.
    pub values: Vec<f64>,
}

/// `G = F F^T` without normalization; the `1/(4 C^2 N^2)` factor lives in the
/// style energy.
pub fn gram(f: &FeatureMaps) -> GramMatrix {
    let c = f.channels;
    let n = f.spatial_size();
    let mut values = vec![0.0f64; c * c];
    values.par_chunks_mut(c).enumerate().for_each(|(i, row)| {
        let fi = &f.data[i * n..(i + 1) * n];
        for (j, out) in row.iter_mut().enumerate().skip(i) {
            let fj = &f.data[j * n..(j + 1) * n];
            *out = fi.iter().zip(fj).map(|(a, b)| a * b).sum();
        }
    });
    // mirror the strict upper triangle
    for i in 0..c {
        for j in 0..i {
            values[i * c + j] = values[j * c + i];
        }
    }
    GramMatrix {
        layer: f.layer,
        channels: c,
        values,
    }
}

/// Gram-matching energy of one layer and its gradient with respect to the
/// features of the optimized image.
pub fn style_energy(f_x: &FeatureMaps, g_s: &GramMatrix) -> Result<(f64, Vec<f64>)> {
    let c = f_x.channels;
    if g_s.channels != c {
        return Err(Error::invalid(format!(
            "style target has {} channels, features have {c}",
            g_s.channels
        )));
    }
    let n = f_x.spatial_size();
    let g_x = gram(f_x);
    let diff: Vec<f64> = g_x
        .values
        .iter()
        .zip(&g_s.values)
        .map(|(a, b)| a - b)
        .collect();
    let scale = 1.0 / ((c * c) as f64 * (n * n) as f64);
    let energy = 0.25 * scale * diff.iter().map(|d| d * d).sum::<f64>();

    // dE/dF = scale * (Gx - Gs) F   (the factor 2 from squaring cancels the
    // double-counted symmetric entries down to 1/(C^2 N^2))
    let mut grad = vec![0.0f64; c * n];
    grad.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for j in 0..c {
            let d = diff[i * c + j];
            if d == 0.0 {
                continue;
            }
            let fj = &f_x.data[j * n..(j + 1) * n];
            for (r, &v) in row.iter_mut().zip(fj) {
                *r += d * v;
            }
        }
        for r in row.iter_mut() {
            *r *= scale;
        }
    });
    Ok((energy, grad))
}

/// Feature-matching energy of one layer and its gradient.
pub fn content_energy(f_x: &FeatureMaps, f_c: &FeatureMaps) -> Result<(f64, Vec<f64>)> {
    if f_x.channels != f_c.channels || f_x.spatial_size() != f_c.spatial_size() {
        return Err(Error::invalid(format!(
            "content dims mismatch: {}x{} vs {}x{}",
            f_x.channels,
            f_x.spatial_size(),
            f_c.channels,
            f_c.spatial_size()
        )));
    }
    let grad: Vec<f64> = f_x.data.iter().zip(&f_c.data).map(|(a, b)| a - b).collect();
    let energy = 0.5 * grad.iter().map(|d| d * d).sum::<f64>();
    Ok((energy, grad))
}

/// Layer selections and loss weights for the transfer.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferConfig {
    /// Conv index -> layer weight for the style term.
    pub style_layers: BTreeMap<usize, f64>,
    /// Conv index -> layer weight for the content term.
    pub content_layers: BTreeMap<usize, f64>,
    pub alpha: f64,
    pub beta: f64,
    /// Optimizer iteration budget.
    pub iterations: usize,
}

impl Default for TransferConfig {
    fn default() -> Self {
        TransferConfig {
            style_layers: [1, 3, 5, 8, 11].iter().map(|&l| (l, 1.0 / 5.0)).collect(),
            content_layers: [7, 10, 13].iter().map(|&l| (l, 1.0 / 3.0)).collect(),
            alpha: 1.0e4,
            beta: 1.0,
            iterations: 300,
        }
    }
}

impl TransferConfig {
    pub fn validate(&self) -> Result<()> {
        if self.style_layers.is_empty() || self.content_layers.is_empty() {
            return Err(Error::invalid("layer sets must be nonempty"));
        }
        if self
            .style_layers
            .values()
            .chain(self.content_layers.values())
            .any(|&w| !(w.is_finite() && w >= 0.0))
        {
            return Err(Error::invalid("layer weights must be nonnegative"));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::invalid("alpha and beta must be positive"));
        }
        Ok(())
    }

    /// All conv layers the objective needs captured.
    pub fn capture_set(&self) -> BTreeSet<usize> {
        self.style_layers
            .keys()
            .chain(self.content_layers.keys())
            .copied()
            .collect()
    }
}

/// Precomputed optimization targets: style Grams and content features never
/// change during the descent, so they are extracted once.
#[derive(Debug, Clone)]
pub struct TransferTargets {
    pub style_grams: BTreeMap<usize, GramMatrix>,
    pub content_features: BTreeMap<usize, FeatureMaps>,
}

/// Capture targets from the style and content source images.
pub fn prepare_targets(
    net: &Network,
    style_img: &Image,
    content_img: &Image,
    cfg: &TransferConfig,
) -> Result<TransferTargets> {
    cfg.validate()?;
    let style_capture: BTreeSet<usize> = cfg.style_layers.keys().copied().collect();
    let content_capture: BTreeSet<usize> = cfg.content_layers.keys().copied().collect();
    let style_maps = net.forward(style_img, &style_capture)?;
    let content_features = net.forward(content_img, &content_capture)?;
    let style_grams = style_maps.iter().map(|(&l, f)| (l, gram(f))).collect();
    Ok(TransferTargets {
        style_grams,
        content_features,
    })
}

/// Full objective: weighted style + content losses and the pixel-space
/// gradient, via one forward and one backward pass.
pub fn total_loss_and_grad(
    net: &Network,
    x: &Image,
    targets: &TransferTargets,
    cfg: &TransferConfig,
) -> Result<(f64, Vec<f64>)> {
    cfg.validate()?;
    let style_keys: BTreeSet<usize> = cfg.style_layers.keys().copied().collect();
    let content_keys: BTreeSet<usize> = cfg.content_layers.keys().copied().collect();
    if targets.style_grams.keys().copied().collect::<BTreeSet<_>>() != style_keys {
        return Err(Error::invalid(
            "style targets do not match the style layer set",
        ));
    }
    if targets
        .content_features
        .keys()
        .copied()
        .collect::<BTreeSet<_>>()
        != content_keys
    {
        return Err(Error::invalid(
            "content targets do not match the content layer set",
        ));
    }

    let maps = net.forward(x, &cfg.capture_set())?;

    let mut loss = 0.0;
    let mut cotangents: BTreeMap<usize, Vec<f64>> = BTreeMap::new();

    for (&l, &w) in &cfg.style_layers {
        let f_x = &maps[&l];
        let (e, grad) = style_energy(f_x, &targets.style_grams[&l])?;
        loss += cfg.alpha * w * e;
        let scale = cfg.alpha * w;
        let cot = cotangents
            .entry(l)
            .or_insert_with(|| vec![0.0; f_x.data.len()]);
        for (c, g) in cot.iter_mut().zip(&grad) {
            *c += scale * g;
        }
    }
    for (&l, &w) in &cfg.content_layers {
        let f_x = &maps[&l];
        let (e, grad) = content_energy(f_x, &targets.content_features[&l])?;
        loss += cfg.beta * w * e;
        let scale = cfg.beta * w;
        let cot = cotangents
            .entry(l)
            .or_insert_with(|| vec![0.0; f_x.data.len()]);
        for (c, g) in cot.iter_mut().zip(&grad) {
            *c += scale * g;
        }
    }

    let grad = net.backward(x, &cotangents)?;
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::tiny_test_layers;
    use rand::{Rng, SeedableRng};

    fn feats(layer: usize, c: usize, h: usize, w: usize, data: Vec<f64>) -> FeatureMaps {
        FeatureMaps {
            layer,
            channels: c,
            height: h,
            width: w,
            data,
        }
    }

    fn random_feats(layer: usize, c: usize, h: usize, w: usize, seed: u64) -> FeatureMaps {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        feats(
            layer,
            c,
            h,
            w,
            (0..c * h * w).map(|_| rng.gen::<f64>()).collect(),
        )
    }

    fn random_image(c: usize, h: usize, w: usize, seed: u64) -> Image {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let data = (0..c * h * w).map(|_| rng.gen::<f64>()).collect();
        Image::from_data(c, h, w, data).unwrap()
    }

    /// Layer sets that exist on the tiny three-conv fixture.
    fn tiny_cfg() -> TransferConfig {
        TransferConfig {
            style_layers: [(1, 0.5), (2, 0.5)].into(),
            content_layers: [(3, 1.0)].into(),
            alpha: 10.0,
            beta: 1.0,
            iterations: 30,
        }
    }

    #[test]
    fn gram_hand_example() {
        let f = feats(1, 2, 1, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let g = gram(&f);
        assert_eq!(g.values, vec![5.0, 11.0, 11.0, 25.0]);
    }

    #[test]
    fn gram_of_zero_is_zero() {
        let f = feats(1, 3, 2, 2, vec![0.0; 12]);
        assert!(gram(&f).values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gram_is_invariant_to_consistent_spatial_permutation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (c, n) = (4, 9);
            let f = random_feats(1, c, 3, 3, rng.gen());
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                perm.swap(i, rng.gen_range(0..=i));
            }
            let mut pdata = vec![0.0; c * n];
            for ch in 0..c {
                for k in 0..n {
                    pdata[ch * n + k] = f.data[ch * n + perm[k]];
                }
            }
            let fp = feats(1, c, 3, 3, pdata);
            let (ga, gb) = (gram(&f), gram(&fp));
            for (a, b) in ga.values.iter().zip(&gb.values) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn gram_is_symmetric_and_psd() {
        let f = random_feats(1, 6, 4, 5, 9);
        let g = gram(&f);
        let c = g.channels;
        for i in 0..c {
            for j in 0..c {
                assert!((g.values[i * c + j] - g.values[j * c + i]).abs() < 1e-9);
            }
        }
        let m = nalgebra::DMatrix::from_row_slice(c, c, &g.values);
        let eig = m.symmetric_eigen();
        for &ev in eig.eigenvalues.iter() {
            assert!(ev > -1e-6, "eigenvalue {ev}");
        }
    }

    #[test]
    fn style_energy_vanishes_on_matching_gram() {
        let f = random_feats(1, 3, 4, 4, 5);
        let g = gram(&f);
        let (e, grad) = style_energy(&f, &g).unwrap();
        assert_eq!(e, 0.0);
        assert!(grad.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn style_energy_scalar_hand_example() {
        // C = 1, N = 1, F = [2], Gs = [1]: E = (4-1)^2/4, dE/dF = 3*2
        let f = feats(1, 1, 1, 1, vec![2.0]);
        let gs = GramMatrix {
            layer: 1,
            channels: 1,
            values: vec![1.0],
        };
        let (e, grad) = style_energy(&f, &gs).unwrap();
        assert!((e - 2.25).abs() < 1e-12);
        assert!((grad[0] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn style_energy_channel_mismatch_is_rejected() {
        let f = random_feats(1, 3, 2, 2, 1);
        let gs = GramMatrix {
            layer: 1,
            channels: 2,
            values: vec![0.0; 4],
        };
        assert!(style_energy(&f, &gs).is_err());
    }

    /// Central finite differences on the raw feature matrix.
    #[test]
    fn style_gradient_matches_finite_differences() {
        let f = random_feats(1, 4, 3, 3, 7);
        let gs = gram(&random_feats(1, 4, 3, 3, 8));
        let (_, grad) = style_energy(&f, &gs).unwrap();
        let h = 1e-6;
        for k in [0usize, 5, 17, 35] {
            let mut fp = f.clone();
            fp.data[k] += h;
            let mut fm = f.clone();
            fm.data[k] -= h;
            let (ep, _) = style_energy(&fp, &gs).unwrap();
            let (em, _) = style_energy(&fm, &gs).unwrap();
            let fd = (ep - em) / (2.0 * h);
            let rel = (fd - grad[k]).abs() / grad[k].abs().max(fd.abs()).max(1e-12);
            assert!(rel < 1e-6, "coord {k}: fd {fd} vs {}", grad[k]);
        }
    }

    #[test]
    fn content_energy_identities() {
        let f = random_feats(3, 4, 3, 3, 11);
        let (e, grad) = content_energy(&f, &f).unwrap();
        assert_eq!(e, 0.0);
        assert!(grad.iter().all(|&v| v == 0.0));

        let fx = feats(3, 1, 1, 2, vec![1.0, 2.0]);
        let fc = feats(3, 1, 1, 2, vec![0.0, 0.0]);
        let (e, grad) = content_energy(&fx, &fc).unwrap();
        assert!((e - 2.5).abs() < 1e-12);
        assert_eq!(grad, vec![1.0, 2.0]);

        // symmetric energy, antisymmetric gradient
        let (e2, grad2) = content_energy(&fc, &fx).unwrap();
        assert_eq!(e, e2);
        assert_eq!(grad2, vec![-1.0, -2.0]);

        let bad = feats(3, 2, 1, 2, vec![0.0; 4]);
        assert!(content_energy(&fx, &bad).is_err());
    }

    #[test]
    fn content_gradient_matches_finite_differences() {
        let fx = random_feats(1, 4, 3, 3, 13);
        let fc = random_feats(1, 4, 3, 3, 14);
        let (_, grad) = content_energy(&fx, &fc).unwrap();
        let h = 1e-6;
        for k in [2usize, 9, 20] {
            let mut fp = fx.clone();
            fp.data[k] += h;
            let mut fm = fx.clone();
            fm.data[k] -= h;
            let fd = (content_energy(&fp, &fc).unwrap().0 - content_energy(&fm, &fc).unwrap().0)
                / (2.0 * h);
            let rel = (fd - grad[k]).abs() / grad[k].abs().max(fd.abs()).max(1e-12);
            assert!(rel < 1e-6);
        }
    }

    #[test]
    fn default_config_matches_published_settings() {
        let cfg = TransferConfig::default();
        assert_eq!(
            cfg.style_layers.keys().copied().collect::<Vec<_>>(),
            vec![1, 3, 5, 8, 11]
        );
        assert_eq!(
            cfg.content_layers.keys().copied().collect::<Vec<_>>(),
            vec![7, 10, 13]
        );
        for &w in cfg.style_layers.values() {
            assert_eq!(w, 0.2);
        }
        for &w in cfg.content_layers.values() {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(cfg.alpha / cfg.beta, 1.0e4);
        assert_eq!(cfg.iterations, 300);
    }

    #[test]
    fn loss_is_zero_at_the_content_source_with_self_style() {
        let net = Network::random(&tiny_test_layers(), 3, 31).unwrap();
        let c = random_image(3, 12, 12, 32);
        let cfg = tiny_cfg();
        let targets = prepare_targets(&net, &c, &c, &cfg).unwrap();
        let (loss, grad) = total_loss_and_grad(&net, &c, &targets, &cfg).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn loss_is_nonnegative_and_finite() {
        let net = Network::random(&tiny_test_layers(), 3, 41).unwrap();
        let cfg = tiny_cfg();
        let s = random_image(3, 10, 10, 42);
        let c = random_image(3, 10, 10, 43);
        let targets = prepare_targets(&net, &s, &c, &cfg).unwrap();
        for seed in 0..50u64 {
            let x = random_image(3, 10, 10, 100 + seed);
            let (loss, grad) = total_loss_and_grad(&net, &x, &targets, &cfg).unwrap();
            assert!(loss >= 0.0 && loss.is_finite());
            assert!(grad.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn gradient_is_additive_in_the_two_terms() {
        let net = Network::random(&tiny_test_layers(), 3, 51).unwrap();
        let cfg = tiny_cfg();
        let s = random_image(3, 10, 10, 52);
        let c = random_image(3, 10, 10, 53);
        let x = random_image(3, 10, 10, 54);
        let targets = prepare_targets(&net, &s, &c, &cfg).unwrap();

        // style-only and content-only via beta/alpha sweeps at fixed sets:
        // alpha*style + beta*content must equal the sum of the pieces.
        let (l, g) = total_loss_and_grad(&net, &x, &targets, &cfg).unwrap();
        let tiny = 1e-300; // keep alpha/beta positive while nulling a term
        let style_only = TransferConfig {
            beta: tiny,
            ..cfg.clone()
        };
        let content_only = TransferConfig {
            alpha: tiny,
            ..cfg.clone()
        };
        let (ls, gs) = total_loss_and_grad(&net, &x, &targets, &style_only).unwrap();
        let (lc, gc) = total_loss_and_grad(&net, &x, &targets, &content_only).unwrap();
        assert!((l - (ls + lc)).abs() <= 1e-9 * l.abs().max(1.0));
        for i in 0..g.len() {
            let sum = gs[i] + gc[i];
            assert!((g[i] - sum).abs() <= 1e-9 * sum.abs().max(1e-9), "at {i}");
        }
    }

    #[test]
    fn doubling_both_weights_doubles_loss_and_grad_exactly() {
        let net = Network::random(&tiny_test_layers(), 3, 61).unwrap();
        let cfg = tiny_cfg();
        let doubled = TransferConfig {
            alpha: 2.0 * cfg.alpha,
            beta: 2.0 * cfg.beta,
            ..cfg.clone()
        };
        let s = random_image(3, 10, 10, 62);
        let c = random_image(3, 10, 10, 63);
        let x = random_image(3, 10, 10, 64);
        let targets = prepare_targets(&net, &s, &c, &cfg).unwrap();
        let (l1, g1) = total_loss_and_grad(&net, &x, &targets, &cfg).unwrap();
        let (l2, g2) = total_loss_and_grad(&net, &x, &targets, &doubled).unwrap();
        assert_eq!(l2, 2.0 * l1);
        for (a, b) in g1.iter().zip(&g2) {
            assert_eq!(*b, 2.0 * a);
        }
    }

    /// Full-path central finite differences through network and losses.
    #[test]
    fn total_gradient_matches_finite_differences() {
        let net = Network::random(&tiny_test_layers(), 3, 71).unwrap();
        let cfg = tiny_cfg();
        let s = random_image(3, 16, 16, 72);
        let c = random_image(3, 16, 16, 73);
        let x = random_image(3, 16, 16, 74);
        let targets = prepare_targets(&net, &s, &c, &cfg).unwrap();
        let (_, grad) = total_loss_and_grad(&net, &x, &targets, &cfg).unwrap();

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(75);
        let h = 1e-5;
        for _ in 0..20 {
            let k = rng.gen_range(0..x.data().len());
            let mut xp = x.data().to_vec();
            xp[k] += h;
            let mut xm = x.data().to_vec();
            xm[k] -= h;
            let lp = total_loss_and_grad(
                &net,
                &Image::from_data(3, 16, 16, xp).unwrap(),
                &targets,
                &cfg,
            )
            .unwrap()
            .0;
            let lm = total_loss_and_grad(
                &net,
                &Image::from_data(3, 16, 16, xm).unwrap(),
                &targets,
                &cfg,
            )
            .unwrap()
            .0;
            let fd = (lp - lm) / (2.0 * h);
            let rel = (fd - grad[k]).abs() / grad[k].abs().max(fd.abs()).max(1e-12);
            assert!(rel < 1e-3, "coord {k}: fd {fd} vs {} (rel {rel})", grad[k]);
        }
    }

    #[test]
    fn mismatched_targets_are_rejected() {
        let net = Network::random(&tiny_test_layers(), 3, 81).unwrap();
        let cfg = tiny_cfg();
        let s = random_image(3, 10, 10, 82);
        let c = random_image(3, 10, 10, 83);
        let targets = prepare_targets(&net, &s, &c, &cfg).unwrap();
        let other = TransferConfig {
            style_layers: [(1, 1.0)].into(),
            ..cfg
        };
        assert!(total_loss_and_grad(&net, &c, &targets, &other).is_err());
    }
}
