//! Cross-module behavior of the transfer objective under the optimizer.

use std::collections::BTreeMap;

use hrst_core::image::Image;
use hrst_core::lbfgs::{minimize, LbfgsOptions};
use hrst_core::loss::{prepare_targets, total_loss_and_grad, TransferConfig};
use hrst_core::net::{tiny_test_layers, Network};
use hrst_core::pipeline::{super_resolve, PipelineConfig};
use rand::{Rng, SeedableRng};

fn random_image(c: usize, h: usize, w: usize, seed: u64) -> Image {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let data = (0..c * h * w).map(|_| rng.gen::<f64>()).collect();
    Image::from_data(c, h, w, data).unwrap()
}

fn tiny_transfer(alpha: f64, beta: f64) -> TransferConfig {
    TransferConfig {
        style_layers: BTreeMap::from([(1, 0.5), (2, 0.5)]),
        content_layers: BTreeMap::from([(3, 1.0)]),
        alpha,
        beta,
        iterations: 10,
    }
}

/// Scaling both loss weights by two (with the absolute gradient threshold
/// scaled to match) must leave the optimizer trajectory unchanged: every
/// normalization in the solver is scale-free.
#[test]
fn doubled_weights_visit_the_same_iterates() {
    let net = Network::random(&tiny_test_layers(), 3, 90).unwrap();
    let s = random_image(3, 8, 8, 91);
    let c = random_image(3, 8, 8, 92);

    let run = |alpha: f64, beta: f64, grad_tol: f64, iters: usize| -> Vec<f64> {
        let cfg = tiny_transfer(alpha, beta);
        let targets = prepare_targets(&net, &s, &c, &cfg).unwrap();
        let obj = |x: &[f64]| {
            let img = Image::from_data(3, 8, 8, x.to_vec()).unwrap();
            total_loss_and_grad(&net, &img, &targets, &cfg).unwrap()
        };
        let opts = LbfgsOptions {
            max_iterations: iters,
            grad_tolerance: grad_tol,
            rel_loss_tolerance: 1e-15,
            ..LbfgsOptions::default()
        };
        minimize(obj, c.data(), &opts).unwrap().0
    };

    for k in 1..=6 {
        let base = run(10.0, 1.0, 1e-10, k);
        let doubled = run(20.0, 2.0, 2e-10, k);
        let max_diff = base
            .iter()
            .zip(&doubled)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(max_diff <= 1e-6, "iterate {k} differs by {max_diff}");
    }
}

/// With the style weight effectively removed and the content target equal to
/// the start point, the objective is already minimal at x0 and the pipeline
/// must return the initial HR image unchanged.
#[test]
fn content_only_objective_keeps_the_start_point() {
    let net = Network::random(&tiny_test_layers(), 3, 95).unwrap();
    let mut cfg = PipelineConfig {
        transfer: tiny_transfer(1e-300, 1.0),
        ..PipelineConfig::default()
    };
    cfg.transfer.iterations = 20;
    let lr = random_image(3, 8, 8, 96);
    let initial = random_image(3, 32, 32, 97);
    let (out, diag) = super_resolve(&lr, Some(&initial), &net, &cfg).unwrap();
    assert_eq!(out.data(), initial.data());
    assert_eq!(diag.report.iterations_used, 0);
}
