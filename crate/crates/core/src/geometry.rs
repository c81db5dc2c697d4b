//! Fan-beam acquisition geometry with a flat detector.
//!
//! The source rotates counterclockwise; at angle β (0° = source on the +x
//! axis) it sits at `sid · (cos β, sin β)`. The detector is perpendicular to
//! the source–isocenter axis at distance `sdd` from the source, with its
//! bin axis along `(-sin β, cos β)`. Bin `k` has its center at
//! `u_k = (k - (n_bins - 1) / 2) · bin_size`, so the detector is centered on
//! the central ray.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Source–detector layout and the ordered list of source angles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FanBeamGeometry {
    /// Source-to-isocenter distance in mm.
    pub sid: f64,
    /// Source-to-detector distance in mm.
    pub sdd: f64,
    pub n_bins: usize,
    /// Detector bin pitch in mm.
    pub bin_size: f64,
    /// Source rotation angles in degrees, strictly increasing within [0, 360).
    pub angles_deg: Vec<f64>,
}

/// One ray: source position and unit direction toward its detector bin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: [f64; 2],
    pub dir: [f64; 2],
    /// Distance from the source to the bin center in mm.
    pub length: f64,
}

/// Trigonometry and source position for one view.
#[derive(Clone, Copy, Debug)]
pub(crate) struct View {
    pub cos: f64,
    pub sin: f64,
}

impl View {
    pub fn source(&self, sid: f64) -> [f64; 2] {
        [sid * self.cos, sid * self.sin]
    }

    /// Unit vector along the detector bin axis.
    pub fn detector_axis(&self) -> [f64; 2] {
        [-self.sin, self.cos]
    }
}

impl FanBeamGeometry {
    pub fn new(
        sid: f64,
        sdd: f64,
        n_bins: usize,
        bin_size: f64,
        angles_deg: Vec<f64>,
    ) -> Result<Self> {
        let g = FanBeamGeometry {
            sid,
            sdd,
            n_bins,
            bin_size,
            angles_deg,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sid > 0.0 && self.sid.is_finite()) {
            return Err(Error::invalid(
                "sid",
                format!("must be positive, got {}", self.sid),
            ));
        }
        if !(self.sdd > self.sid && self.sdd.is_finite()) {
            return Err(Error::invalid(
                "sdd",
                format!("must exceed sid ({}), got {}", self.sid, self.sdd),
            ));
        }
        if self.n_bins == 0 {
            return Err(Error::invalid("n_bins", "must be positive"));
        }
        if !(self.bin_size > 0.0 && self.bin_size.is_finite()) {
            return Err(Error::invalid(
                "bin_size",
                format!("must be positive, got {}", self.bin_size),
            ));
        }
        if self.angles_deg.is_empty() {
            return Err(Error::invalid("angles", "no source angles"));
        }
        for (i, &a) in self.angles_deg.iter().enumerate() {
            if !(0.0..360.0).contains(&a) {
                return Err(Error::invalid(
                    "angles",
                    format!("angle {i} = {a}° outside [0, 360)"),
                ));
            }
        }
        if let Some(w) = self.angles_deg.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "angles",
                format!("not strictly increasing at index {}", w + 1),
            ));
        }
        Ok(())
    }

    pub fn n_angles(&self) -> usize {
        self.angles_deg.len()
    }

    pub fn all_angles(&self) -> Vec<usize> {
        (0..self.n_angles()).collect()
    }

    /// Detector coordinate of bin `k` in mm.
    pub fn bin_center(&self, k: usize) -> f64 {
        (k as f64 - 0.5 * (self.n_bins as f64 - 1.0)) * self.bin_size
    }

    /// Fractional bin index of detector coordinate `u`.
    pub fn bin_position(&self, u: f64) -> f64 {
        u / self.bin_size + 0.5 * (self.n_bins as f64 - 1.0)
    }

    /// Radius of the circle seen by every ray of every view.
    pub fn field_of_view_radius(&self) -> f64 {
        let half = 0.5 * self.n_bins as f64 * self.bin_size;
        self.sid * (half / self.sdd).atan().sin()
    }

    /// Mean angular spacing in radians; π for a single-view geometry.
    pub fn angular_step_rad(&self) -> f64 {
        let n = self.n_angles();
        if n < 2 {
            return std::f64::consts::PI;
        }
        (self.angles_deg[n - 1] - self.angles_deg[0]).to_radians() / (n - 1) as f64
    }

    pub(crate) fn view(&self, angle_index: usize) -> View {
        let b = self.angles_deg[angle_index].to_radians();
        View {
            cos: b.cos(),
            sin: b.sin(),
        }
    }

    pub fn ray(&self, angle_index: usize, bin: usize) -> Ray {
        let v = self.view(angle_index);
        let s = v.source(self.sid);
        let e = v.detector_axis();
        let back = self.sdd - self.sid;
        let u = self.bin_center(bin);
        let d = [-back * v.cos + u * e[0], -back * v.sin + u * e[1]];
        let delta = [d[0] - s[0], d[1] - s[1]];
        let length = delta[0].hypot(delta[1]);
        Ray {
            origin: s,
            dir: [delta[0] / length, delta[1] / length],
            length,
        }
    }

    pub(crate) fn check_subset(&self, subset: &[usize]) -> Result<()> {
        if let Some(&bad) = subset.iter().find(|&&a| a >= self.n_angles()) {
            return Err(Error::ShapeMismatch(format!(
                "angle index {bad} out of range for {} angles",
                self.n_angles()
            )));
        }
        Ok(())
    }
}

/// Builds a geometry with angles `start, start + step, …` up to `end` inclusive.
pub fn make_short_scan_geometry(
    sid: f64,
    sdd: f64,
    n_bins: usize,
    bin_size: f64,
    start_deg: f64,
    end_deg: f64,
    step_deg: f64,
) -> Result<FanBeamGeometry> {
    if !(step_deg > 0.0 && step_deg.is_finite()) {
        return Err(Error::invalid(
            "step",
            format!("must be positive, got {step_deg}"),
        ));
    }
    if !(end_deg >= start_deg) {
        return Err(Error::invalid(
            "end",
            format!("empty angular range [{start_deg}, {end_deg}]"),
        ));
    }
    // Tolerate accumulated rounding in (end - start) / step.
    let count = ((end_deg - start_deg) / step_deg + 1e-9).floor() as usize + 1;
    let angles = (0..count)
        .map(|i| start_deg + i as f64 * step_deg)
        .collect();
    FanBeamGeometry::new(sid, sdd, n_bins, bin_size, angles)
}

/// Split of a geometry's views into measured and unmeasured index sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AngularPartition {
    pub measured: Vec<usize>,
    pub unmeasured: Vec<usize>,
}

impl AngularPartition {
    pub fn is_measured(&self, angle_index: usize) -> bool {
        self.measured.binary_search(&angle_index).is_ok()
    }

    pub fn total(&self) -> usize {
        self.measured.len() + self.unmeasured.len()
    }

    pub(crate) fn check(&self, geometry: &FanBeamGeometry) -> Result<()> {
        let mut all: Vec<usize> = self
            .measured
            .iter()
            .chain(&self.unmeasured)
            .copied()
            .collect();
        all.sort_unstable();
        if self.measured.is_empty() || all != geometry.all_angles() {
            return Err(Error::ShapeMismatch(format!(
                "partition ({} measured + {} unmeasured) does not cover the {} geometry angles exactly",
                self.measured.len(),
                self.unmeasured.len(),
                geometry.n_angles()
            )));
        }
        Ok(())
    }
}

/// Angles within `[meas_start_deg, meas_end_deg]` are measured; the rest are not.
pub fn partition_angles(
    geometry: &FanBeamGeometry,
    meas_start_deg: f64,
    meas_end_deg: f64,
) -> Result<AngularPartition> {
    const SLACK: f64 = 1e-9;
    let (measured, unmeasured): (Vec<usize>, Vec<usize>) =
        (0..geometry.n_angles()).partition(|&i| {
            let a = geometry.angles_deg[i];
            a >= meas_start_deg - SLACK && a <= meas_end_deg + SLACK
        });
    if measured.is_empty() {
        return Err(Error::invalid(
            "measured_range",
            format!("[{meas_start_deg}°, {meas_end_deg}°] contains no geometry angle"),
        ));
    }
    Ok(AngularPartition {
        measured,
        unmeasured,
    })
}
