mod common;

use common::Rng;
use dcar_core::dcar::*;
use dcar_core::*;

fn random_image(n: usize, seed: u64) -> ImageGrid {
    let spec = GridSpec::new(n, n, 1.0, 1.0).unwrap();
    ImageGrid::from_values(spec, Rng::new(seed).vec(spec.len(), 0.0, 0.04)).unwrap()
}

#[test]
fn gradient_matches_central_differences() {
    let h = 1e-6;
    for seed in [1, 2, 3] {
        let img = random_image(12, seed);
        let state = wtv_weights(&img, 5.0, HuScale::default()).unwrap();
        let analytic = wtv_gradient(&img, &state).unwrap();
        let mut worst = 0.0f64;
        for j in 0..img.values().len() {
            let bump = |d: f64| {
                let mut v = img.values().to_vec();
                v[j] += d;
                wtv_value(&ImageGrid::from_values(*img.spec(), v).unwrap(), &state).unwrap()
            };
            let fd = (bump(h) - bump(-h)) / (2.0 * h);
            let a = analytic.values()[j];
            worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()));
        }
        assert!(worst < 1e-4, "seed {seed}: max relative error {worst}");
    }
}

#[test]
fn step_edge_value() {
    let spec = GridSpec::new(8, 8, 1.0, 1.0).unwrap();
    let h = 0.01;
    let img = ImageGrid::from_fn(spec, |x, _| if x > 0.0 { h } else { 0.0 });
    let w0 = 3.5;
    let state = WtvState {
        weights: ImageGrid::constant(spec, w0),
        last_image: img.clone(),
    };
    let d = GRADIENT_SMOOTHING;
    let expected = w0 * (8.0 * (h * h + d * d).sqrt() + 56.0 * d);
    let got = wtv_value(&img, &state).unwrap();
    assert!(
        (got - expected).abs() <= 1e-12 * expected,
        "{got} vs {expected}"
    );
}

#[test]
fn weights_order_and_bounds() {
    let img = random_image(10, 4);
    let scale = HuScale::default();
    let eps_mu = scale.hu_delta_to_mu(5.0);
    let state = wtv_weights(&img, 5.0, scale).unwrap();
    let mag = gradient_magnitude(&img);
    let w = state.weights.values();
    assert!(w.iter().all(|&v| v > 0.0 && v <= 1.0 / eps_mu));
    for i in 0..w.len() {
        for j in 0..w.len() {
            if mag.values()[i] > mag.values()[j] {
                assert!(w[i] < w[j]);
            }
        }
    }
    let wider = wtv_weights(&img, 10.0, scale).unwrap();
    assert!(wider.weights.values().iter().zip(w).all(|(a, b)| a < b));
}

#[test]
fn descent_never_increases_the_objective() {
    for seed in 10..15 {
        let img = random_image(16, seed);
        let state = wtv_weights(&img, 5.0, HuScale::default()).unwrap();
        let (out, log) = wtv_descent(&img, &state, &LineSearch::default(), 20).unwrap();
        assert_eq!(log.values.len(), 21);
        assert_eq!(log.increases(), 0, "{:?}", log.values);
        assert!(log.values.last().unwrap() < &log.values[0]);
        assert_eq!(
            wtv_value(&out, &state).unwrap(),
            *log.values.last().unwrap()
        );
    }
}

#[test]
fn constant_image_is_stationary() {
    let img = ImageGrid::constant(GridSpec::new(9, 9, 1.0, 1.0).unwrap(), 0.02);
    let state = wtv_weights(&img, 5.0, HuScale::default()).unwrap();
    let g = wtv_gradient(&img, &state).unwrap();
    assert!(g.values().iter().all(|&v| v == 0.0));
    let (out, log) = wtv_descent(&img, &state, &LineSearch::default(), 3).unwrap();
    assert_eq!(out, img);
    assert_eq!(log.skipped, 3);
}
