use dcar_core::simulate::*;
use dcar_core::*;

/// Modified Shepp–Logan: x0, y0, a, b, angle (deg), intensity on the unit disk.
const TOFT: [[f64; 6]; 10] = [
    [0.0, 0.0, 0.69, 0.92, 0.0, 1.0],
    [0.0, -0.0184, 0.6624, 0.874, 0.0, -0.8],
    [0.22, 0.0, 0.11, 0.31, -18.0, -0.2],
    [-0.22, 0.0, 0.16, 0.41, 18.0, -0.2],
    [0.0, 0.35, 0.21, 0.25, 0.0, 0.1],
    [0.0, 0.1, 0.046, 0.046, 0.0, 0.1],
    [0.0, -0.1, 0.046, 0.046, 0.0, 0.1],
    [-0.08, -0.605, 0.046, 0.023, 0.0, 0.1],
    [0.0, -0.606, 0.023, 0.023, 0.0, 0.1],
    [0.06, -0.605, 0.023, 0.046, 0.0, 0.1],
];

fn oracle(x: f64, y: f64) -> f64 {
    TOFT.iter()
        .filter(|r| {
            let t = r[4].to_radians();
            let (dx, dy) = (x - r[0], y - r[1]);
            let u = dx * t.cos() + dy * t.sin();
            let v = -dx * t.sin() + dy * t.cos();
            (u / r[2]).powi(2) + (v / r[3]).powi(2) <= 1.0
        })
        .map(|r| r[5])
        .sum()
}

#[test]
fn shepp_logan_matches_point_in_ellipse_sums() {
    let radius = 150.0;
    let scale = 0.02;
    let grid = GridSpec::desk();
    let img = render_phantom(&shepp_logan(radius, scale), &grid).unwrap();
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let (x, y) = grid.pixel_center(ix, iy);
            let expected = scale * oracle(x / radius, y / radius);
            assert!((img.get(ix, iy) - expected).abs() < 1e-12, "({ix},{iy})");
        }
    }
    // Published interior values: brain 0.2, ventricles 0.0, top blob 0.3.
    let at = |x: f64, y: f64| oracle(x, y);
    assert!((at(0.0, 0.0) - 0.2).abs() < 1e-12);
    assert!((at(0.22, 0.0) - 0.0).abs() < 1e-12);
    assert!((at(0.0, 0.35) - 0.3).abs() < 1e-12);
}

#[test]
fn empty_and_single_disk() {
    let grid = GridSpec::new(8, 8, 1.0, 1.0).unwrap();
    assert!(render_phantom(&[], &grid)
        .unwrap()
        .values()
        .iter()
        .all(|&v| v == 0.0));
    let img = render_phantom(&[EllipseSpec::disk([0.5, 0.5], 0.6, 0.03)], &grid).unwrap();
    assert_eq!(img.get(4, 4), 0.03);
    assert_eq!(img.values().iter().filter(|&&v| v != 0.0).count(), 1);
}

#[test]
fn abdomen_phantom_is_seeded_and_bounded() {
    let grid = GridSpec::desk();
    let a = random_abdomen_phantom(3, &grid).unwrap();
    let b = random_abdomen_phantom(3, &grid).unwrap();
    assert_eq!(a.values(), b.values());
    let specs = random_abdomen_phantom_specs(3);
    assert!((6..=16).contains(&specs.len()));
    for e in &specs[1..] {
        assert!((-0.004..=0.02).contains(&e.delta));
    }
    for seed in [4u64, 17, 1000] {
        let c = random_abdomen_phantom(seed, &grid).unwrap();
        let differ = a
            .values()
            .iter()
            .zip(c.values())
            .filter(|(x, y)| x != y)
            .count();
        assert!(
            differ as f64 >= 0.01 * grid.len() as f64,
            "seed {seed}: {differ}"
        );
        assert!(c
            .values()
            .iter()
            .all(|&v| (0.0..=ABDOMEN_MAX_MU).contains(&v)));
    }
}
