//! Synthetic ground truth and the transmission noise model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::{GridSpec, ImageGrid};
use crate::projector::Sinogram;

/// An ellipse adding `delta` (mm⁻¹) to every pixel whose center it contains.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipseSpec {
    /// Center in mm.
    pub center: [f64; 2],
    /// Semi-axes in mm, before rotation.
    pub semi_axes: [f64; 2],
    /// Counterclockwise rotation in degrees.
    #[serde(default)]
    pub rotation_deg: f64,
    pub delta: f64,
}

impl EllipseSpec {
    pub fn disk(center: [f64; 2], radius: f64, delta: f64) -> Self {
        EllipseSpec {
            center,
            semi_axes: [radius, radius],
            rotation_deg: 0.0,
            delta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.semi_axes.iter().all(|&a| a > 0.0 && a.is_finite()) {
            return Err(Error::invalid(
                "semi_axes",
                format!("must be positive, got {:?}", self.semi_axes),
            ));
        }
        if !(self.delta.is_finite()
            && self.rotation_deg.is_finite()
            && self.center.iter().all(|c| c.is_finite()))
        {
            return Err(Error::invalid("ellipse", "non-finite parameter"));
        }
        Ok(())
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.rotation_deg.to_radians().sin_cos();
        let dx = x - self.center[0];
        let dy = y - self.center[1];
        let u = (dx * c + dy * s) / self.semi_axes[0];
        let v = (-dx * s + dy * c) / self.semi_axes[1];
        u * u + v * v <= 1.0
    }
}

pub fn render_phantom(specs: &[EllipseSpec], grid: &GridSpec) -> Result<ImageGrid> {
    grid.validate()?;
    for e in specs {
        e.validate()?;
    }
    Ok(ImageGrid::from_fn(*grid, |x, y| {
        specs
            .iter()
            .filter(|e| e.contains(x, y))
            .map(|e| e.delta)
            .sum()
    }))
}

/// Modified (Toft) Shepp–Logan head, scaled to `radius` mm with outer skull
/// intensity `scale`.
pub fn shepp_logan(radius: f64, scale: f64) -> Vec<EllipseSpec> {
    #[rustfmt::skip]
    const TABLE: [[f64; 6]; 10] = [
        // x0, y0, a, b, angle, intensity
        [ 0.0,   0.0,    0.69,   0.92,   0.0,  1.0],
        [ 0.0,  -0.0184, 0.6624, 0.874,  0.0, -0.8],
        [ 0.22,  0.0,    0.11,   0.31, -18.0, -0.2],
        [-0.22,  0.0,    0.16,   0.41,  18.0, -0.2],
        [ 0.0,   0.35,   0.21,   0.25,   0.0,  0.1],
        [ 0.0,   0.1,    0.046,  0.046,  0.0,  0.1],
        [ 0.0,  -0.1,    0.046,  0.046,  0.0,  0.1],
        [-0.08, -0.605,  0.046,  0.023,  0.0,  0.1],
        [ 0.0,  -0.606,  0.023,  0.023,  0.0,  0.1],
        [ 0.06, -0.605,  0.023,  0.046,  0.0,  0.1],
    ];
    TABLE
        .iter()
        .map(|r| EllipseSpec {
            center: [r[0] * radius, r[1] * radius],
            semi_axes: [r[2] * radius, r[3] * radius],
            rotation_deg: r[4],
            delta: r[5] * scale,
        })
        .collect()
}

/// Upper bound on attenuation produced by [`random_abdomen_phantom`].
pub const ABDOMEN_MAX_MU: f64 = 0.06;

/// Water-like body ellipse with 5–15 random organs, fat pockets and bone.
pub fn random_abdomen_phantom_specs(seed: u64) -> Vec<EllipseSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = rng.random_range(110.0..135.0);
    let b = rng.random_range(80.0..105.0);
    let mut specs = vec![EllipseSpec {
        center: [0.0, 0.0],
        semi_axes: [a, b],
        rotation_deg: 0.0,
        delta: 0.02,
    }];
    let n = rng.random_range(5..=15);
    for _ in 0..n {
        let r = rng.random_range(0.0..0.6f64).sqrt();
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        specs.push(EllipseSpec {
            center: [r * a * phi.cos(), r * b * phi.sin()],
            semi_axes: [
                rng.random_range(6.0..0.3 * b),
                rng.random_range(6.0..0.3 * b),
            ],
            rotation_deg: rng.random_range(0.0..180.0),
            delta: rng.random_range(-0.004..0.02),
        });
    }
    specs
}

/// Renders [`random_abdomen_phantom_specs`], clamped to `[0, ABDOMEN_MAX_MU]`.
pub fn random_abdomen_phantom(seed: u64, grid: &GridSpec) -> Result<ImageGrid> {
    let img = render_phantom(&random_abdomen_phantom_specs(seed), grid)?;
    Ok(img.map(|v| v.clamp(0.0, ABDOMEN_MAX_MU)))
}

/// Monoenergetic transmission statistics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Unattenuated photons per detector bin.
    pub i0: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        if self.i0 > 0.0 && self.i0.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid(
                "i0",
                format!("must be positive, got {}", self.i0),
            ))
        }
    }
}

/// Noisy line integral for ray `index` of a sinogram with true value `p`.
///
/// Each ray draws from its own ChaCha stream, so the result depends only on
/// `(seed, index, p)`.
pub fn noisy_line_integral(model: &NoiseModel, index: u64, p: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    rng.set_stream(index);
    let expected = model.i0 * (-p).exp();
    let counts = match Poisson::new(expected) {
        Ok(dist) => dist.sample(&mut rng),
        Err(_) => 0.0,
    };
    -(counts.max(1.0) / model.i0).ln()
}

pub fn add_poisson_noise(sino: &Sinogram, model: &NoiseModel) -> Result<Sinogram> {
    add_poisson_noise_with(Execution::default(), sino, model)
}

/// Replaces every line integral `p` by `−ln(max(N, 1) / i0)`, `N ~ Poisson(i0·e^{−p})`.
pub fn add_poisson_noise_with(
    exec: Execution,
    sino: &Sinogram,
    model: &NoiseModel,
) -> Result<Sinogram> {
    model.validate()?;
    if let Some(i) = sino.values().iter().position(|&p| !(p >= 0.0)) {
        return Err(Error::invalid(
            "sinogram",
            format!(
                "line integral {i} is {}; noise needs p >= 0",
                sino.values()[i]
            ),
        ));
    }
    let mut out = sino.clone();
    let clean = sino.values();
    exec.fill(out.values_mut(), |i| {
        noisy_line_integral(model, i as u64, clean[i])
    });
    Ok(out)
}
