//! SART with soft-thresholded residuals.
//!
//! Views are visited in ascending angle order and each view's correction is
//! applied before the next view is projected. At view β the correction of
//! pixel j is
//!
//! ```text
//! λ · Σ_{i∈P_β} [S_τ(r_i) / Σ_k A_ik] · A'_ij  /  Σ_{i∈P_β} A'_ij
//! ```
//!
//! with `r_i = p_i − (A f)_i` and `τ = e1` on measured views, and
//! `r_i = (A f_prior)_i − (A f)_i` with `τ = e2` on unmeasured views.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{AngularPartition, FanBeamGeometry};
use crate::grid::{GridSpec, ImageGrid};
use crate::projector::{self, Sinogram};

use super::config::DcarConfig;

/// `sign(x)·max(|x| − τ, 0)`.
pub fn soft_threshold(x: f64, tau: f64) -> f64 {
    debug_assert!(tau >= 0.0);
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

/// Ray and per-view pixel normalizers for every view of a geometry.
#[derive(Clone, Debug)]
pub struct SartSystem {
    geometry: FanBeamGeometry,
    spec: GridSpec,
    ray_sums: Vec<f64>,
    pixel_sums: Vec<f64>,
    backprojector: Backprojector,
    exec: Execution,
}

/// Backprojection used for SART corrections.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backprojector {
    /// Exact transpose of the forward projector.
    #[default]
    Matched,
    /// Pixel-driven interpolation (unmatched).
    PixelDriven,
}

/// Where each view's target projections come from.
#[derive(Clone, Copy)]
enum Target {
    Measured(usize),
    Prior(usize),
    Skip,
}

impl SartSystem {
    pub fn new(
        geometry: &FanBeamGeometry,
        spec: &GridSpec,
        backprojector: Backprojector,
    ) -> Result<Self> {
        Self::with_execution(Execution::default(), geometry, spec, backprojector)
    }

    pub fn with_execution(
        exec: Execution,
        geometry: &FanBeamGeometry,
        spec: &GridSpec,
        backprojector: Backprojector,
    ) -> Result<Self> {
        geometry.validate()?;
        let all = geometry.all_angles();
        let ray_sums = projector::ray_sums(geometry, &all, spec)?.values().to_vec();
        let mut pixel_sums = Vec::with_capacity(all.len() * spec.len());
        match backprojector {
            Backprojector::PixelDriven => {
                for img in projector::pixel_sums(geometry, &all, spec)? {
                    pixel_sums.extend_from_slice(img.values());
                }
            }
            Backprojector::Matched => {
                let ones = vec![1.0; geometry.n_bins];
                let mut buf = vec![0.0; spec.len()];
                for &a in &all {
                    projector::backproject_view_matched(spec, geometry, a, &ones, &mut buf);
                    pixel_sums.extend_from_slice(&buf);
                }
            }
        }
        Ok(SartSystem {
            geometry: geometry.clone(),
            spec: *spec,
            ray_sums,
            pixel_sums,
            backprojector,
            exec,
        })
    }

    pub fn geometry(&self) -> &FanBeamGeometry {
        &self.geometry
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    fn targets(
        &self,
        measured: &Sinogram,
        prior_projections: Option<&Sinogram>,
        partition: &AngularPartition,
    ) -> Result<Vec<Target>> {
        partition.check(&self.geometry)?;
        measured.check_matches(&self.geometry, &partition.measured)?;
        if let Some(p) = prior_projections {
            p.check_matches(&self.geometry, &partition.unmeasured)?;
        }
        let mut targets = vec![Target::Skip; self.geometry.n_angles()];
        for (row, &a) in partition.measured.iter().enumerate() {
            targets[a] = Target::Measured(row);
        }
        if prior_projections.is_some() {
            for (row, &a) in partition.unmeasured.iter().enumerate() {
                targets[a] = Target::Prior(row);
            }
        }
        Ok(targets)
    }

    /// One full pass over the views; `prior_projections = None` drops the unmeasured term.
    pub fn sweep(
        &self,
        image: &ImageGrid,
        measured: &Sinogram,
        prior_projections: Option<&Sinogram>,
        partition: &AngularPartition,
        config: &DcarConfig,
    ) -> Result<ImageGrid> {
        if image.spec() != &self.spec {
            return Err(Error::ShapeMismatch(format!(
                "image {:?} vs system grid {:?}",
                image.spec(),
                self.spec
            )));
        }
        if !(config.lambda >= 0.0 && config.lambda < 2.0) {
            return Err(Error::invalid(
                "lambda",
                format!("must lie in [0, 2), got {}", config.lambda),
            ));
        }
        let targets = self.targets(measured, prior_projections, partition)?;
        let mut current = image.clone();
        if config.lambda == 0.0 {
            return Ok(current);
        }

        let nb = self.geometry.n_bins;
        let npix = self.spec.len();
        let mut projection = vec![0.0; nb];
        let mut scaled = vec![0.0; nb];
        let mut correction = vec![0.0; npix];

        for (a, target) in targets.iter().enumerate() {
            let (row, tau) = match *target {
                Target::Measured(r) => (measured.row(r), config.e1),
                Target::Prior(r) => (
                    prior_projections
                        .expect("prior target without projections")
                        .row(r),
                    config.e2,
                ),
                Target::Skip => continue,
            };
            projector::project_view(
                &self.spec,
                current.values(),
                &self.geometry,
                a,
                &mut projection,
                self.exec,
            );
            let ray_sums = &self.ray_sums[a * nb..(a + 1) * nb];
            let mut active = false;
            for k in 0..nb {
                let r = soft_threshold(row[k] - projection[k], tau);
                scaled[k] = if r != 0.0 && ray_sums[k] > 0.0 {
                    active = true;
                    r / ray_sums[k]
                } else {
                    0.0
                };
            }
            if !active {
                continue;
            }
            match self.backprojector {
                Backprojector::PixelDriven => projector::backproject_view(
                    &self.spec,
                    &self.geometry,
                    a,
                    &scaled,
                    &mut correction,
                    self.exec,
                ),
                Backprojector::Matched => projector::backproject_view_matched(
                    &self.spec,
                    &self.geometry,
                    a,
                    &scaled,
                    &mut correction,
                ),
            }
            let pixel_sums = &self.pixel_sums[a * npix..(a + 1) * npix];
            let lambda = config.lambda;
            let clamp = config.enforce_nonnegativity;
            for ((f, &c), &ps) in current
                .values_mut()
                .iter_mut()
                .zip(&correction)
                .zip(pixel_sums)
            {
                if ps > 0.0 && c != 0.0 {
                    *f += lambda * c / ps;
                }
                if clamp && *f < 0.0 {
                    *f = 0.0;
                }
            }
            if let Some(j) = current.values().iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "pixel {j} after SART update at view {a} ({}°)",
                    self.geometry.angles_deg[a]
                )));
            }
        }
        Ok(current)
    }
}

/// One SART pass; builds the normalizers on every call. Reuse a
/// [`SartSystem`] for repeated sweeps.
pub fn sart_sweep(
    image: &ImageGrid,
    measured: &Sinogram,
    prior_projections: Option<&Sinogram>,
    geometry: &FanBeamGeometry,
    partition: &AngularPartition,
    config: &DcarConfig,
) -> Result<ImageGrid> {
    SartSystem::new(geometry, image.spec(), config.backprojector)?.sweep(
        image,
        measured,
        prior_projections,
        partition,
        config,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_threshold_values() {
        assert_eq!(soft_threshold(1.5, 0.5), 1.0);
        assert_eq!(soft_threshold(-0.3, 0.5), 0.0);
        assert_eq!(soft_threshold(-1.5, 0.5), -1.0);
        for x in [-3.0, -1e-300, 0.0, 0.7, 1e9] {
            assert_eq!(soft_threshold(x, 0.0), x);
        }
    }
}
