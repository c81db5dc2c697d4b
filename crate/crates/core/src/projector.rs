//! Discrete fan-beam projection operators.
//!
//! * Forward projection is ray-driven (Joseph's method): each ray is sampled
//!   once per pixel column (or row, whichever axis it travels along faster),
//!   interpolating linearly between the two nearest pixel centers across the
//!   other axis. The sample weight is the path length per column.
//! * Backprojection is pixel-driven: each pixel center is projected onto the
//!   detector and the sinogram row is interpolated linearly between bins.
//!   The interpolated value is scaled by the expected total ray length through
//!   the pixel, `dx·dy / spacing`, where `spacing` is the perpendicular
//!   distance between neighbouring rays at the pixel.
//!
//! The pair is not an exact transpose; the mismatch is small in practice and
//! conventional for SART.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{FanBeamGeometry, View};
use crate::grid::{GridSpec, ImageGrid};

/// Line integrals indexed by view and detector bin (row-major per view).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sinogram {
    pub n_angles: usize,
    pub n_bins: usize,
    /// Detector bin pitch in mm.
    pub bin_size: f64,
    pub angles_deg: Vec<f64>,
    values: Vec<f64>,
}

impl Sinogram {
    pub fn zeros(geometry: &FanBeamGeometry, subset: &[usize]) -> Self {
        Sinogram {
            n_angles: subset.len(),
            n_bins: geometry.n_bins,
            bin_size: geometry.bin_size,
            angles_deg: subset.iter().map(|&a| geometry.angles_deg[a]).collect(),
            values: vec![0.0; subset.len() * geometry.n_bins],
        }
    }

    pub fn from_values(
        n_bins: usize,
        bin_size: f64,
        angles_deg: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let n_angles = angles_deg.len();
        if values.len() != n_angles * n_bins {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {n_angles} angles x {n_bins} bins",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "sinogram entry {i} is {}",
                values[i]
            )));
        }
        Ok(Sinogram {
            n_angles,
            n_bins,
            bin_size,
            angles_deg,
            values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, view: usize) -> &[f64] {
        &self.values[view * self.n_bins..(view + 1) * self.n_bins]
    }

    pub fn get(&self, view: usize, bin: usize) -> f64 {
        self.values[view * self.n_bins + bin]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Sinogram {
        Sinogram {
            values: self.values.iter().map(|&v| f(v)).collect(),
            angles_deg: self.angles_deg.clone(),
            ..*self
        }
    }

    /// Checks that this sinogram holds exactly the views `subset` of `geometry`.
    pub fn check_matches(&self, geometry: &FanBeamGeometry, subset: &[usize]) -> Result<()> {
        geometry.check_subset(subset)?;
        let angles_match = self.angles_deg.len() == subset.len()
            && subset
                .iter()
                .zip(&self.angles_deg)
                .all(|(&a, &deg)| (geometry.angles_deg[a] - deg).abs() < 1e-9);
        if self.n_bins != geometry.n_bins || !angles_match {
            return Err(Error::ShapeMismatch(format!(
                "sinogram {}x{} does not match {} selected views x {} bins",
                self.n_angles,
                self.n_bins,
                subset.len(),
                geometry.n_bins
            )));
        }
        Ok(())
    }

    /// Extracts the views of `self` (which holds `from`) listed in `to`.
    pub fn select(
        &self,
        geometry: &FanBeamGeometry,
        from: &[usize],
        to: &[usize],
    ) -> Result<Sinogram> {
        self.check_matches(geometry, from)?;
        let mut out = Sinogram::zeros(geometry, to);
        for (row, a) in to.iter().enumerate() {
            let src = from
                .iter()
                .position(|f| f == a)
                .ok_or_else(|| Error::ShapeMismatch(format!("view {a} not present in sinogram")))?;
            out.values[row * self.n_bins..(row + 1) * self.n_bins].copy_from_slice(self.row(src));
        }
        Ok(out)
    }
}

/// Rejects grids that reach the source circle.
pub(crate) fn check_grid(spec: &GridSpec, geometry: &FanBeamGeometry) -> Result<()> {
    spec.validate()?;
    let (hx, hy) = spec.half_extent();
    if hx.hypot(hy) >= geometry.sid {
        return Err(Error::ShapeMismatch(format!(
            "image half-diagonal {:.1} mm reaches the source circle (sid = {} mm)",
            hx.hypot(hy),
            geometry.sid
        )));
    }
    Ok(())
}

/// Visits `(pixel, A_ij)` for every nonzero system-matrix entry of one ray
/// under Joseph interpolation.
#[inline]
fn joseph_walk(
    spec: &GridSpec,
    origin: [f64; 2],
    dir: [f64; 2],
    length: f64,
    mut visit: impl FnMut(usize, f64),
) {
    let (hx, hy) = spec.half_extent();
    // Index-space coordinates: pixel centers at integers.
    let ox = (origin[0] + hx) / spec.dx - 0.5;
    let oy = (origin[1] + hy) / spec.dy - 0.5;
    let vx = dir[0] / spec.dx;
    let vy = dir[1] / spec.dy;

    // Walk along the axis the ray crosses fastest.
    let (o_major, o_minor, v_major, v_minor, n_major, n_minor, step_len, transpose) =
        if vx.abs() >= vy.abs() {
            (
                ox,
                oy,
                vx,
                vy,
                spec.nx,
                spec.ny,
                spec.dx / dir[0].abs(),
                false,
            )
        } else {
            (
                oy,
                ox,
                vy,
                vx,
                spec.ny,
                spec.nx,
                spec.dy / dir[1].abs(),
                true,
            )
        };

    let slope = v_minor / v_major;
    for m in 0..n_major {
        let t = (m as f64 - o_major) / v_major;
        if !(0.0..=length).contains(&t) {
            continue;
        }
        let pos = o_minor + slope * (m as f64 - o_major);
        if pos <= -1.0 || pos >= n_minor as f64 {
            continue;
        }
        let lo = pos.floor();
        let w = pos - lo;
        let lo = lo as isize;
        for (idx, weight) in [(lo, 1.0 - w), (lo + 1, w)] {
            if idx >= 0 && (idx as usize) < n_minor && weight != 0.0 {
                let i = idx as usize;
                let pixel = if transpose {
                    m * spec.nx + i
                } else {
                    i * spec.nx + m
                };
                visit(pixel, weight * step_len);
            }
        }
    }
}

/// Line integral along one ray; `f` reads pixel values.
fn joseph_ray(
    spec: &GridSpec,
    origin: [f64; 2],
    dir: [f64; 2],
    length: f64,
    f: impl Fn(usize) -> f64,
) -> f64 {
    let mut sum = 0.0;
    joseph_walk(spec, origin, dir, length, |p, w| sum += w * f(p));
    sum
}

/// Adds `Σ_i A_ij row_i` over the rays of one view into `out` (exact transpose).
pub(crate) fn backproject_view_matched(
    spec: &GridSpec,
    geometry: &FanBeamGeometry,
    angle: usize,
    row: &[f64],
    out: &mut [f64],
) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (k, &value) in row.iter().enumerate() {
        if value == 0.0 {
            continue;
        }
        let r = geometry.ray(angle, k);
        joseph_walk(spec, r.origin, r.dir, r.length, |p, w| out[p] += w * value);
    }
}

/// Forward projects `values` for a single view into `out` (length `n_bins`).
pub(crate) fn project_view(
    spec: &GridSpec,
    values: &[f64],
    geometry: &FanBeamGeometry,
    angle: usize,
    out: &mut [f64],
    exec: Execution,
) {
    exec.fill(out, |k| {
        let r = geometry.ray(angle, k);
        joseph_ray(spec, r.origin, r.dir, r.length, |p| values[p])
    });
}

/// Detector coordinate of point `(x, y)` and its distance from the source.
#[inline]
pub(crate) fn detector_hit(
    geometry: &FanBeamGeometry,
    view: &View,
    x: f64,
    y: f64,
) -> (f64, f64, f64) {
    let along = geometry.sid - (x * view.cos + y * view.sin);
    let e = view.detector_axis();
    let lateral = x * e[0] + y * e[1];
    let u = geometry.sdd * lateral / along;
    (u, along, lateral)
}

/// Linear interpolation of a detector row at fractional bin `b`, zero outside.
#[inline]
pub(crate) fn interp_row(row: &[f64], b: f64) -> f64 {
    if b <= -1.0 || b >= row.len() as f64 {
        return 0.0;
    }
    let lo = b.floor();
    let w = b - lo;
    let lo = lo as isize;
    let mut v = 0.0;
    if lo >= 0 {
        v += (1.0 - w) * row[lo as usize];
    }
    if ((lo + 1) as usize) < row.len() && w != 0.0 {
        v += w * row[(lo + 1) as usize];
    }
    v
}

/// Pixel-driven backprojection weight: expected ray length through the pixel.
#[inline]
fn pixel_footprint(
    spec: &GridSpec,
    geometry: &FanBeamGeometry,
    u: f64,
    along: f64,
    lateral: f64,
) -> f64 {
    let dist = along.hypot(lateral);
    let sdd = geometry.sdd;
    // Perpendicular distance between neighbouring rays at this pixel.
    let spacing = dist * geometry.bin_size * sdd / (sdd * sdd + u * u);
    spec.dx * spec.dy / spacing
}

/// Pixel value of the single-view backprojection of `row`.
#[inline]
fn backproject_pixel(
    spec: &GridSpec,
    geometry: &FanBeamGeometry,
    view: &View,
    x: f64,
    y: f64,
    row: &[f64],
) -> f64 {
    let (u, along, lateral) = detector_hit(geometry, view, x, y);
    let v = interp_row(row, geometry.bin_position(u));
    if v == 0.0 {
        return 0.0;
    }
    v * pixel_footprint(spec, geometry, u, along, lateral)
}

/// Writes the single-view backprojection of `row` into `out`.
pub(crate) fn backproject_view(
    spec: &GridSpec,
    geometry: &FanBeamGeometry,
    angle: usize,
    row: &[f64],
    out: &mut [f64],
    exec: Execution,
) {
    let view = geometry.view(angle);
    exec.fill(out, |j| {
        let (x, y) = spec.pixel_center(j % spec.nx, j / spec.nx);
        backproject_pixel(spec, geometry, &view, x, y, row)
    });
}

pub fn forward_project(
    image: &ImageGrid,
    geometry: &FanBeamGeometry,
    subset: &[usize],
) -> Result<Sinogram> {
    forward_project_with(Execution::default(), image, geometry, subset)
}

/// `(A f)_i` for every ray of the views in `subset`.
pub fn forward_project_with(
    exec: Execution,
    image: &ImageGrid,
    geometry: &FanBeamGeometry,
    subset: &[usize],
) -> Result<Sinogram> {
    geometry.validate()?;
    geometry.check_subset(subset)?;
    let spec = image.spec();
    check_grid(spec, geometry)?;
    let mut sino = Sinogram::zeros(geometry, subset);
    let nb = geometry.n_bins;
    let values = image.values();
    exec.fill(sino.values_mut(), |i| {
        let r = geometry.ray(subset[i / nb], i % nb);
        joseph_ray(spec, r.origin, r.dir, r.length, |p| values[p])
    });
    Ok(sino)
}

pub fn back_project(
    sino: &Sinogram,
    geometry: &FanBeamGeometry,
    subset: &[usize],
    spec: &GridSpec,
) -> Result<ImageGrid> {
    back_project_with(Execution::default(), sino, geometry, subset, spec)
}

/// Pixel-driven `A' p` summed over the views in `subset`.
pub fn back_project_with(
    exec: Execution,
    sino: &Sinogram,
    geometry: &FanBeamGeometry,
    subset: &[usize],
    spec: &GridSpec,
) -> Result<ImageGrid> {
    geometry.validate()?;
    sino.check_matches(geometry, subset)?;
    check_grid(spec, geometry)?;
    let views: Vec<View> = subset.iter().map(|&a| geometry.view(a)).collect();
    let mut image = ImageGrid::zeros(*spec);
    exec.fill(image.values_mut(), |j| {
        let (x, y) = spec.pixel_center(j % spec.nx, j / spec.nx);
        views
            .iter()
            .enumerate()
            .map(|(r, view)| backproject_pixel(spec, geometry, view, x, y, sino.row(r)))
            .sum()
    });
    Ok(image)
}

/// Row sums `Σ_k A_ik`: the forward projection of an all-ones image.
pub fn ray_sums(geometry: &FanBeamGeometry, subset: &[usize], spec: &GridSpec) -> Result<Sinogram> {
    geometry.validate()?;
    geometry.check_subset(subset)?;
    check_grid(spec, geometry)?;
    let mut sino = Sinogram::zeros(geometry, subset);
    let nb = geometry.n_bins;
    Execution::default().fill(sino.values_mut(), |i| {
        let r = geometry.ray(subset[i / nb], i % nb);
        joseph_ray(spec, r.origin, r.dir, r.length, |_| 1.0)
    });
    Ok(sino)
}

/// Per-view column sums `Σ_{i∈P_β} A'_ij`, one image per view in `subset`.
pub fn pixel_sums(
    geometry: &FanBeamGeometry,
    subset: &[usize],
    spec: &GridSpec,
) -> Result<Vec<ImageGrid>> {
    geometry.validate()?;
    geometry.check_subset(subset)?;
    check_grid(spec, geometry)?;
    let ones = vec![1.0; geometry.n_bins];
    Ok(subset
        .iter()
        .map(|&a| {
            let mut img = ImageGrid::zeros(*spec);
            backproject_view(
                spec,
                geometry,
                a,
                &ones,
                img.values_mut(),
                Execution::default(),
            );
            img
        })
        .collect())
}
