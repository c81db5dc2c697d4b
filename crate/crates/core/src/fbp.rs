//! Fan-beam filtered backprojection with the Ram-Lak kernel.
//!
//! Flat-detector weighting: projections are rescaled to a virtual detector
//! through the isocenter (`u' = u · sid / sdd`), cosine weighted by
//! `sid / √(sid² + u'²)`, convolved with half the ramp kernel, and
//! backprojected with the `1 / U²` distance weight, `U = (sid − x·ŝ) / sid`.
//! The angular integral is approximated by the mean view spacing.
//!
//! No short-scan redundancy weighting is applied.

use crate::error::Result;
use crate::exec::Execution;
use crate::geometry::{FanBeamGeometry, View};
use crate::grid::{GridSpec, ImageGrid};
use crate::projector::{check_grid, detector_hit, interp_row, Sinogram};

/// Spatial-domain band-limited ramp kernel, taps for offsets `-(n-1)..=(n-1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RampFilter {
    /// Tap spacing in mm.
    pub spacing: f64,
    taps: Vec<f64>,
}

impl RampFilter {
    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Largest offset represented.
    pub fn half_width(&self) -> usize {
        self.taps.len() / 2
    }

    /// Tap at signed offset `k`; zero beyond the support.
    pub fn tap(&self, k: isize) -> f64 {
        let h = self.half_width() as isize;
        if k.abs() > h {
            0.0
        } else {
            self.taps[(k + h) as usize]
        }
    }

    /// Linear convolution of `row` with the kernel, scaled by the tap spacing.
    pub fn convolve(&self, row: &[f64], out: &mut [f64]) {
        let n = row.len() as isize;
        for (i, o) in out.iter_mut().enumerate() {
            let i = i as isize;
            let mut acc = 0.0;
            for (j, &v) in row.iter().enumerate() {
                let k = i - j as isize;
                if k.abs() < n {
                    acc += self.tap(k) * v;
                }
            }
            *o = acc * self.spacing;
        }
    }
}

/// Ram-Lak kernel long enough for linear convolution of `n_bins` samples.
///
/// Center tap `1/(4τ²)`, zero at even offsets, `−1/(πkτ)²` at odd offsets.
/// The truncated tail mass is folded into the outermost odd taps so the
/// kernel sums to zero (no DC response).
pub fn ram_lak_kernel(n_bins: usize, bin_size: f64) -> RampFilter {
    let half = n_bins.max(1) - 1;
    let tau2 = bin_size * bin_size;
    let mut taps = vec![0.0; 2 * half + 1];
    taps[half] = 1.0 / (4.0 * tau2);
    let mut last_odd = None;
    for k in (1..=half).step_by(2) {
        let v = -1.0 / (std::f64::consts::PI * k as f64).powi(2) / tau2;
        taps[half + k] = v;
        taps[half - k] = v;
        last_odd = Some(k);
    }
    if let Some(k) = last_odd {
        let dc: f64 = taps.iter().sum();
        taps[half + k] -= 0.5 * dc;
        taps[half - k] -= 0.5 * dc;
    }
    RampFilter {
        spacing: bin_size,
        taps,
    }
}

pub fn fbp_reconstruct(
    sino: &Sinogram,
    geometry: &FanBeamGeometry,
    subset: &[usize],
    spec: &GridSpec,
) -> Result<ImageGrid> {
    fbp_reconstruct_with(Execution::default(), sino, geometry, subset, spec)
}

pub fn fbp_reconstruct_with(
    exec: Execution,
    sino: &Sinogram,
    geometry: &FanBeamGeometry,
    subset: &[usize],
    spec: &GridSpec,
) -> Result<ImageGrid> {
    geometry.validate()?;
    sino.check_matches(geometry, subset)?;
    check_grid(spec, geometry)?;

    let nb = geometry.n_bins;
    let mag = geometry.sdd / geometry.sid;
    let virtual_pitch = geometry.bin_size / mag;
    let kernel = ram_lak_kernel(nb, virtual_pitch);
    let sid = geometry.sid;
    let weights: Vec<f64> = (0..nb)
        .map(|k| {
            let u = geometry.bin_center(k) / mag;
            sid / (sid * sid + u * u).sqrt()
        })
        .collect();

    let mut filtered = vec![0.0; sino.values().len()];
    exec.for_each_chunk(&mut filtered, nb, |r, out| {
        let weighted: Vec<f64> = sino
            .row(r)
            .iter()
            .zip(&weights)
            .map(|(p, w)| p * w)
            .collect();
        kernel.convolve(&weighted, out);
        // Half of the ramp: each ray is counted twice over a full rotation.
        out.iter_mut().for_each(|v| *v *= 0.5);
    });

    let views: Vec<View> = subset.iter().map(|&a| geometry.view(a)).collect();
    let d_beta = geometry.angular_step_rad();
    let mut image = ImageGrid::zeros(*spec);
    exec.fill(image.values_mut(), |j| {
        let (x, y) = spec.pixel_center(j % spec.nx, j / spec.nx);
        let sum: f64 = views
            .iter()
            .enumerate()
            .map(|(r, view)| {
                let (u, along, _) = detector_hit(geometry, view, x, y);
                let q = interp_row(&filtered[r * nb..(r + 1) * nb], geometry.bin_position(u));
                let big_u = along / sid;
                q / (big_u * big_u)
            })
            .sum();
        sum * d_beta
    });
    Ok(image)
}
