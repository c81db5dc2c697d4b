#![allow(dead_code)]

use dcar_core::prior::{resolve_prior, Corruption, PriorContext, PriorSource};
use dcar_core::projector::forward_project;
use dcar_core::simulate::{random_abdomen_phantom, render_phantom, EllipseSpec};
use dcar_core::*;

pub const MU_WATER: f64 = 0.02;

/// xorshift64*; test inputs only.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed.max(1))
    }

    pub fn next_f64(&mut self) -> f64 {
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        (self.0.wrapping_mul(0x2545_f491_4f6c_dd1d) >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn vec(&mut self, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|_| lo + (hi - lo) * self.next_f64()).collect()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn short_scan() -> FanBeamGeometry {
    make_short_scan_geometry(600.0, 1200.0, 310, 2.0, 0.0, 210.0, 1.0).unwrap()
}

pub fn full_scan(step: f64) -> FanBeamGeometry {
    make_short_scan_geometry(600.0, 1200.0, 310, 2.0, 0.0, 360.0 - step, step).unwrap()
}

pub fn disk_phantom() -> ImageGrid {
    render_phantom(
        &[EllipseSpec::disk([0.0, 0.0], 50.0, MU_WATER)],
        &GridSpec::desk(),
    )
    .unwrap()
}

/// Chord of the line through `p` with unit direction `d` across the ellipse,
/// in mm.
pub fn ellipse_chord(e: &EllipseSpec, p: [f64; 2], d: [f64; 2]) -> f64 {
    let (s, c) = e.rotation_deg.to_radians().sin_cos();
    let to_local = |v: [f64; 2]| [v[0] * c + v[1] * s, -v[0] * s + v[1] * c];
    let q = to_local([p[0] - e.center[0], p[1] - e.center[1]]);
    let r = to_local(d);
    let (a, b) = (e.semi_axes[0], e.semi_axes[1]);
    let qa = (r[0] / a).powi(2) + (r[1] / b).powi(2);
    let qb = 2.0 * (q[0] * r[0] / (a * a) + q[1] * r[1] / (b * b));
    let qc = (q[0] / a).powi(2) + (q[1] / b).powi(2) - 1.0;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc <= 0.0 {
        0.0
    } else {
        disc.sqrt() / qa
    }
}

/// Abdomen phantom, its 120° measured data, and a prior with one −300 HU disk.
pub struct Scenario {
    pub truth: ImageGrid,
    pub geometry: FanBeamGeometry,
    pub partition: AngularPartition,
    pub measured: Sinogram,
    pub prior: ImageGrid,
}

pub const SCENARIO_SEED: u64 = 7;

pub fn corruption() -> Corruption {
    Corruption::disk([30.0, 20.0], 20.0, -300.0)
}

pub fn abdomen_scenario() -> Scenario {
    let grid = GridSpec::desk();
    let truth = random_abdomen_phantom(SCENARIO_SEED, &grid).unwrap();
    scenario_for(truth, corruption())
}

pub fn scenario_for(truth: ImageGrid, corruption: Corruption) -> Scenario {
    let geometry = short_scan();
    let partition = partition_angles(&geometry, 30.0, 150.0).unwrap();
    let measured = forward_project(&truth, &geometry, &partition.measured).unwrap();
    let ctx = PriorContext {
        measured: &measured,
        geometry: &geometry,
        partition: &partition,
        grid: *truth.spec(),
        ground_truth: Some(&truth),
        scale: HuScale::default(),
    };
    let source = PriorSource::OracleCorrupted {
        corruptions: vec![corruption],
    };
    let prior = resolve_prior(&source, &ctx).unwrap();
    Scenario {
        truth,
        geometry,
        partition,
        measured,
        prior,
    }
}
