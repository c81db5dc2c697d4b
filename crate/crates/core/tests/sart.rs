mod common;

use common::Rng;
use dcar_core::dcar::*;
use dcar_core::projector::forward_project;
use dcar_core::*;

fn toy(start: f64, end: f64, step: f64) -> (FanBeamGeometry, GridSpec) {
    (
        make_short_scan_geometry(100.0, 200.0, 41, 2.0, start, end, step).unwrap(),
        GridSpec::new(16, 16, 2.0, 2.0).unwrap(),
    )
}

fn random_image(spec: GridSpec, seed: u64) -> ImageGrid {
    ImageGrid::from_values(spec, Rng::new(seed).vec(spec.len(), 0.0, 0.04)).unwrap()
}

#[test]
fn single_view_update_contracts_every_residual() {
    for backprojector in [Backprojector::Matched, Backprojector::PixelDriven] {
        let (g, spec) = toy(90.0, 90.0, 1.0);
        let part = partition_angles(&g, 90.0, 90.0).unwrap();
        let truth = random_image(spec, 8);
        let p = forward_project(&truth, &g, &[0]).unwrap();
        let config = DcarConfig {
            e1: 0.0,
            enforce_nonnegativity: false,
            backprojector,
            ..Default::default()
        };
        let start = ImageGrid::zeros(spec);
        let next = sart_sweep(&start, &p, None, &g, &part, &config).unwrap();
        let before = forward_project(&start, &g, &[0]).unwrap();
        let after = forward_project(&next, &g, &[0]).unwrap();
        for k in 0..g.n_bins {
            let r0 = (p.get(0, k) - before.get(0, k)).abs();
            let r1 = (p.get(0, k) - after.get(0, k)).abs();
            if r0 > 0.0 {
                assert!(r1 < r0, "{backprojector:?} bin {k}: {r1} >= {r0}");
            }
        }
    }
}

#[test]
fn residuals_inside_the_dead_zone_leave_the_image_untouched() {
    let (g, spec) = toy(0.0, 210.0, 5.0);
    let part = partition_angles(&g, 30.0, 150.0).unwrap();
    let img = random_image(spec, 21);
    let config = DcarConfig::default();
    let mut rng = Rng::new(4);
    let mut shift = |s: Sinogram, width: f64| {
        let values = s
            .values()
            .iter()
            .map(|v| v + width * (rng.next_f64() - 0.5))
            .collect();
        Sinogram::from_values(s.n_bins, s.bin_size, s.angles_deg.clone(), values).unwrap()
    };
    let measured = shift(
        forward_project(&img, &g, &part.measured).unwrap(),
        config.e1,
    );
    let prior = shift(
        forward_project(&img, &g, &part.unmeasured).unwrap(),
        config.e2,
    );
    let out = sart_sweep(&img, &measured, Some(&prior), &g, &part, &config).unwrap();
    assert_eq!(out.values(), img.values());
}

#[test]
fn zero_relaxation_is_the_identity() {
    let (g, spec) = toy(0.0, 210.0, 15.0);
    let part = partition_angles(&g, 30.0, 150.0).unwrap();
    let img = random_image(spec, 2);
    let measured = Sinogram::zeros(&g, &part.measured);
    let config = DcarConfig {
        lambda: 0.0,
        ..Default::default()
    };
    let out = sart_sweep(&img, &measured, None, &g, &part, &config).unwrap();
    assert_eq!(out.values(), img.values());
}

#[test]
fn rejects_mismatched_inputs() {
    let (g, spec) = toy(0.0, 210.0, 15.0);
    let part = partition_angles(&g, 30.0, 150.0).unwrap();
    let img = ImageGrid::zeros(spec);
    let config = DcarConfig::default();
    let wrong = Sinogram::zeros(&g, &part.unmeasured);
    assert!(sart_sweep(&img, &wrong, None, &g, &part, &config).is_err());
    let measured = Sinogram::zeros(&g, &part.measured);
    assert!(sart_sweep(&img, &measured, Some(&measured), &g, &part, &config).is_err());
}

#[test]
fn non_finite_data_aborts() {
    let (g, spec) = toy(0.0, 30.0, 15.0);
    let part = partition_angles(&g, 0.0, 30.0).unwrap();
    // Finite but overflowing data drives the iterate to ±∞.
    let values = (0..part.measured.len() * g.n_bins)
        .map(|i| if i % 2 == 0 { f64::MAX } else { -f64::MAX })
        .collect();
    let angles = part.measured.iter().map(|&a| g.angles_deg[a]).collect();
    let measured = Sinogram::from_values(g.n_bins, g.bin_size, angles, values).unwrap();
    let config = DcarConfig {
        enforce_nonnegativity: false,
        ..Default::default()
    };
    let err = sart_sweep(&ImageGrid::zeros(spec), &measured, None, &g, &part, &config);
    assert!(matches!(err, Err(Error::NonFinite(_))), "{err:?}");
}

#[test]
fn clamp_keeps_iterates_nonnegative() {
    let (g, spec) = toy(0.0, 210.0, 5.0);
    let part = partition_angles(&g, 30.0, 150.0).unwrap();
    let measured = Sinogram::zeros(&g, &part.measured).map(|_| -0.5);
    let out = sart_sweep(
        &random_image(spec, 5),
        &measured,
        None,
        &g,
        &part,
        &DcarConfig::default(),
    )
    .unwrap();
    assert!(out.values().iter().all(|&v| v >= 0.0));
}
