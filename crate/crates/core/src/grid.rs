//! Image container with physical pixel spacing and Hounsfield conversion.
//!
//! Storage is row-major with pixel `(0, 0)` at the image corner; the
//! isocenter sits at the geometric center of the grid. Pixel `(ix, iy)` has
//! its center at
//!
//! ```text
//! x = (ix + 0.5) * dx - nx * dx / 2
//! y = (iy + 0.5) * dy - ny * dy / 2
//! ```
//!
//! Values are attenuation coefficients in mm⁻¹ unless explicitly converted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pixel counts and spacing of a 2-D image.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    /// Pixel width in mm.
    pub dx: f64,
    /// Pixel height in mm.
    pub dy: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64) -> Result<Self> {
        let spec = GridSpec { nx, ny, dx, dy };
        spec.validate()?;
        Ok(spec)
    }

    /// The default desk-scale grid: 128 × 128 pixels at 2.5 mm.
    pub fn desk() -> Self {
        GridSpec {
            nx: 128,
            ny: 128,
            dx: 2.5,
            dy: 2.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 {
            return Err(Error::invalid("nx", "must be positive"));
        }
        if self.ny == 0 {
            return Err(Error::invalid("ny", "must be positive"));
        }
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return Err(Error::invalid(
                "dx",
                format!("must be positive, got {}", self.dx),
            ));
        }
        if !(self.dy > 0.0 && self.dy.is_finite()) {
            return Err(Error::invalid(
                "dy",
                format!("must be positive, got {}", self.dy),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    /// Physical half-width and half-height in mm.
    pub fn half_extent(&self) -> (f64, f64) {
        (
            0.5 * self.nx as f64 * self.dx,
            0.5 * self.ny as f64 * self.dy,
        )
    }

    pub fn pixel_center(&self, ix: usize, iy: usize) -> (f64, f64) {
        let (hx, hy) = self.half_extent();
        (
            (ix as f64 + 0.5) * self.dx - hx,
            (iy as f64 + 0.5) * self.dy - hy,
        )
    }

    /// Iterator over the centers of all pixels in storage order.
    pub fn centers(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.ny).flat_map(move |iy| (0..self.nx).map(move |ix| self.pixel_center(ix, iy)))
    }
}

/// A 2-D image on a [`GridSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct ImageGrid {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ImageGrid {
    pub fn zeros(spec: GridSpec) -> Self {
        Self::constant(spec, 0.0)
    }

    pub fn constant(spec: GridSpec, value: f64) -> Self {
        ImageGrid {
            spec,
            values: vec![value; spec.len()],
        }
    }

    /// Wraps `values`, rejecting wrong lengths and non-finite entries.
    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                spec.nx,
                spec.ny
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "image pixel {i} is {}",
                values[i]
            )));
        }
        Ok(ImageGrid { spec, values })
    }

    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let values = spec.centers().map(|(x, y)| f(x, y)).collect();
        ImageGrid { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.spec.index(ix, iy)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ImageGrid {
        ImageGrid {
            spec: self.spec,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn same_shape(&self, other: &ImageGrid) -> bool {
        self.spec == other.spec
    }

    pub(crate) fn check_same_shape(&self, other: &ImageGrid, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{what}: {:?} vs {:?}",
                self.spec, other.spec
            )))
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Affine map between attenuation (mm⁻¹) and Hounsfield units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HuScale {
    /// Attenuation of water in mm⁻¹.
    pub mu_water: f64,
}

impl Default for HuScale {
    fn default() -> Self {
        HuScale { mu_water: 0.02 }
    }
}

impl HuScale {
    pub fn new(mu_water: f64) -> Result<Self> {
        let s = HuScale { mu_water };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu_water > 0.0 && self.mu_water.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid(
                "mu_water",
                format!("must be positive, got {}", self.mu_water),
            ))
        }
    }

    pub fn mu_to_hu(&self, mu: f64) -> f64 {
        1000.0 * (mu - self.mu_water) / self.mu_water
    }

    pub fn hu_to_mu(&self, hu: f64) -> f64 {
        self.mu_water + hu * self.mu_water / 1000.0
    }

    /// Converts an attenuation *difference* from HU to mm⁻¹.
    pub fn hu_delta_to_mu(&self, hu: f64) -> f64 {
        hu * self.mu_water / 1000.0
    }
}

pub fn mu_to_hu(image: &ImageGrid, scale: HuScale) -> ImageGrid {
    image.map(|v| scale.mu_to_hu(v))
}

pub fn hu_to_mu(image: &ImageGrid, scale: HuScale) -> ImageGrid {
    image.map(|v| scale.hu_to_mu(v))
}
