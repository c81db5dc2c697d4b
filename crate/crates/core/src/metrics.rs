//! Image-domain and projection-domain error measures.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::FanBeamGeometry;
use crate::grid::{GridSpec, HuScale, ImageGrid};
use crate::projector::{forward_project, Sinogram};

/// Pixels included in an evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalMask {
    spec: GridSpec,
    include: Vec<bool>,
}

impl EvalMask {
    pub fn new(spec: GridSpec, include: Vec<bool>) -> Result<Self> {
        if include.len() != spec.len() {
            return Err(Error::ShapeMismatch(format!(
                "mask has {} entries for {} pixels",
                include.len(),
                spec.len()
            )));
        }
        if !include.iter().any(|&b| b) {
            return Err(Error::invalid("mask", "includes no pixel"));
        }
        Ok(EvalMask { spec, include })
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(f64, f64) -> bool) -> Result<Self> {
        let include = spec.centers().map(|(x, y)| f(x, y)).collect();
        Self::new(spec, include)
    }

    pub fn included(&self) -> usize {
        self.include.iter().filter(|&&b| b).count()
    }
}

/// Root-mean-square HU difference over the mask (whole image by default).
pub fn rmse_hu(
    image: &ImageGrid,
    reference: &ImageGrid,
    scale: HuScale,
    mask: Option<&EvalMask>,
) -> Result<f64> {
    image.check_same_shape(reference, "rmse")?;
    scale.validate()?;
    if let Some(m) = mask {
        if &m.spec != image.spec() {
            return Err(Error::ShapeMismatch(format!(
                "mask {:?} vs image {:?}",
                m.spec,
                image.spec()
            )));
        }
    }
    let to_hu = 1000.0 / scale.mu_water;
    let (sum, count) = image
        .values()
        .iter()
        .zip(reference.values())
        .enumerate()
        .filter(|(j, _)| mask.is_none_or(|m| m.include[*j]))
        .fold((0.0, 0usize), |(s, n), (_, (a, b))| {
            let d = (a - b) * to_hu;
            (s + d * d, n + 1)
        });
    Ok((sum / count as f64).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResidualStats {
    pub rms: f64,
    pub max_abs: f64,
    /// Fraction of rays with `|residual| > threshold`.
    pub fraction_exceeding: f64,
}

/// Statistics of `sino − A f` over the rays of `subset`.
pub fn residual_stats(
    image: &ImageGrid,
    sino: &Sinogram,
    geometry: &FanBeamGeometry,
    subset: &[usize],
    threshold: f64,
) -> Result<ResidualStats> {
    sino.check_matches(geometry, subset)?;
    let proj = forward_project(image, geometry, subset)?;
    Ok(stats_of(proj.values(), sino.values(), threshold))
}

pub(crate) fn stats_of(projected: &[f64], measured: &[f64], threshold: f64) -> ResidualStats {
    let n = measured.len().max(1) as f64;
    let (sq, max_abs, over) =
        projected
            .iter()
            .zip(measured)
            .fold((0.0, 0.0f64, 0usize), |(sq, mx, over), (p, m)| {
                let r = m - p;
                (
                    sq + r * r,
                    mx.max(r.abs()),
                    over + usize::from(r.abs() > threshold),
                )
            });
    ResidualStats {
        rms: (sq / n).sqrt(),
        max_abs,
        fraction_exceeding: over as f64 / n,
    }
}
