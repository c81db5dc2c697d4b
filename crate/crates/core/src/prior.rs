//! Sources for the prior image that seeds the solver and supplies the
//! unmeasured views.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbp::fbp_reconstruct;
use crate::geometry::{AngularPartition, FanBeamGeometry};
use crate::grid::{GridSpec, HuScale, ImageGrid};
use crate::io::read_image_mu;
use crate::projector::Sinogram;
use crate::simulate::EllipseSpec;

/// A region of the ground truth shifted by `offset_hu`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Corruption {
    pub center: [f64; 2],
    pub semi_axes: [f64; 2],
    #[serde(default)]
    pub rotation_deg: f64,
    pub offset_hu: f64,
}

impl Corruption {
    pub fn disk(center: [f64; 2], radius: f64, offset_hu: f64) -> Self {
        Corruption {
            center,
            semi_axes: [radius, radius],
            rotation_deg: 0.0,
            offset_hu,
        }
    }

    pub fn to_ellipse(&self, scale: HuScale) -> EllipseSpec {
        EllipseSpec {
            center: self.center,
            semi_axes: self.semi_axes,
            rotation_deg: self.rotation_deg,
            delta: scale.hu_delta_to_mu(self.offset_hu),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PriorSource {
    /// Raw image file with JSON sidecar.
    File {
        path: PathBuf,
    },
    Zero,
    /// FBP of the measured views.
    LimitedFbp,
    /// Ground truth with added ellipse perturbations; a stand-in for a
    /// learned prior with localized failures.
    OracleCorrupted {
        corruptions: Vec<Corruption>,
    },
}

/// Everything a prior source may draw on.
pub struct PriorContext<'a> {
    pub measured: &'a Sinogram,
    pub geometry: &'a FanBeamGeometry,
    pub partition: &'a AngularPartition,
    pub grid: GridSpec,
    pub ground_truth: Option<&'a ImageGrid>,
    pub scale: HuScale,
}

pub fn resolve_prior(source: &PriorSource, ctx: &PriorContext<'_>) -> Result<ImageGrid> {
    match source {
        PriorSource::File { path } => {
            let img = read_image_mu(path, ctx.scale)?;
            if img.spec() != &ctx.grid {
                return Err(Error::ShapeMismatch(format!(
                    "prior file {} is {:?}, reconstruction grid is {:?}",
                    path.display(),
                    img.spec(),
                    ctx.grid
                )));
            }
            Ok(img)
        }
        PriorSource::Zero => Ok(ImageGrid::zeros(ctx.grid)),
        PriorSource::LimitedFbp => fbp_reconstruct(
            ctx.measured,
            ctx.geometry,
            &ctx.partition.measured,
            &ctx.grid,
        ),
        PriorSource::OracleCorrupted { corruptions } => {
            let truth = ctx.ground_truth.ok_or_else(|| {
                Error::invalid("prior", "oracle-corrupted prior needs the ground truth")
            })?;
            if truth.spec() != &ctx.grid {
                return Err(Error::ShapeMismatch(
                    "ground truth does not match the grid".into(),
                ));
            }
            let ellipses: Vec<EllipseSpec> = corruptions
                .iter()
                .map(|c| c.to_ellipse(ctx.scale))
                .collect();
            for e in &ellipses {
                e.validate()?;
            }
            let mut out = truth.clone();
            let spec = ctx.grid;
            for (j, v) in out.values_mut().iter_mut().enumerate() {
                let (x, y) = spec.pixel_center(j % spec.nx, j / spec.nx);
                for e in ellipses.iter().filter(|e| e.contains(x, y)) {
                    *v += e.delta;
                }
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_short_scan_geometry, partition_angles};
    use crate::io::write_image;
    use crate::io::Unit;
    use crate::projector::forward_project;
    use crate::simulate::render_phantom;

    struct Fixture {
        geometry: FanBeamGeometry,
        partition: AngularPartition,
        grid: GridSpec,
        truth: ImageGrid,
        measured: Sinogram,
    }

    fn fixture() -> Fixture {
        let geometry = make_short_scan_geometry(300.0, 600.0, 65, 2.0, 0.0, 210.0, 5.0).unwrap();
        let partition = partition_angles(&geometry, 30.0, 150.0).unwrap();
        let grid = GridSpec::new(32, 32, 2.0, 2.0).unwrap();
        let truth = render_phantom(&[EllipseSpec::disk([0.0, 0.0], 20.0, 0.02)], &grid).unwrap();
        let measured = forward_project(&truth, &geometry, &partition.measured).unwrap();
        Fixture {
            geometry,
            partition,
            grid,
            truth,
            measured,
        }
    }

    fn ctx(f: &Fixture) -> PriorContext<'_> {
        PriorContext {
            measured: &f.measured,
            geometry: &f.geometry,
            partition: &f.partition,
            grid: f.grid,
            ground_truth: Some(&f.truth),
            scale: HuScale::default(),
        }
    }

    #[test]
    fn zero_and_fbp() {
        let f = fixture();
        let z = resolve_prior(&PriorSource::Zero, &ctx(&f)).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
        let p = resolve_prior(&PriorSource::LimitedFbp, &ctx(&f)).unwrap();
        let direct =
            fbp_reconstruct(&f.measured, &f.geometry, &f.partition.measured, &f.grid).unwrap();
        assert_eq!(p, direct);
    }

    #[test]
    fn corruption_only_inside_support() {
        let f = fixture();
        let c = Corruption::disk([5.0, -3.0], 6.0, -300.0);
        let src = PriorSource::OracleCorrupted {
            corruptions: vec![c],
        };
        let p = resolve_prior(&src, &ctx(&f)).unwrap();
        let e = c.to_ellipse(HuScale::default());
        for (j, (a, b)) in p.values().iter().zip(f.truth.values()).enumerate() {
            let (x, y) = f.grid.pixel_center(j % 32, j / 32);
            if e.contains(x, y) {
                assert!((a - b + 0.006).abs() < 1e-15);
            } else {
                assert_eq!(a, b);
            }
        }
        // Deterministic.
        assert_eq!(p, resolve_prior(&src, &ctx(&f)).unwrap());
        let mut no_truth = ctx(&f);
        no_truth.ground_truth = None;
        assert!(resolve_prior(&src, &no_truth).is_err());
    }

    #[test]
    fn file_prior_shape_checked() {
        let f = fixture();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("prior.raw");
        write_image(&path, &f.truth, Unit::Mu).unwrap();
        let src = PriorSource::File { path: path.clone() };
        let loaded = resolve_prior(&src, &ctx(&f)).unwrap();
        assert!(loaded
            .values()
            .iter()
            .zip(f.truth.values())
            .all(|(a, b)| *a == (*b as f32) as f64));

        let other = ImageGrid::zeros(GridSpec::new(16, 16, 2.0, 2.0).unwrap());
        write_image(&path, &other, Unit::Mu).unwrap();
        assert!(matches!(
            resolve_prior(&src, &ctx(&f)),
            Err(Error::ShapeMismatch(_))
        ));

        let missing = PriorSource::File {
            path: dir.path().join("nope.raw"),
        };
        assert!(matches!(
            resolve_prior(&missing, &ctx(&f)),
            Err(Error::Io { .. })
        ));
    }
}
