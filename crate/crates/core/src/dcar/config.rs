use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::HuScale;

use super::sart::Backprojector;

/// Backtracking (Armijo) line search settings for the wTV descent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LineSearch {
    /// First trial step, as a multiple of the image's dynamic range (max − min).
    /// The descent direction is the negative gradient scaled to unit max-norm,
    /// so this is the largest per-pixel change the first trial may make.
    pub initial_step: f64,
    pub shrink: f64,
    pub sufficient_decrease: f64,
    pub max_backtracks: usize,
}

impl Default for LineSearch {
    fn default() -> Self {
        LineSearch {
            initial_step: 1.0,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            max_backtracks: 20,
        }
    }
}

impl LineSearch {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_step >= 0.0 && self.initial_step.is_finite()) {
            return Err(Error::invalid(
                "initial_step",
                format!("must be >= 0, got {}", self.initial_step),
            ));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::invalid(
                "shrink",
                format!("must lie in (0, 1), got {}", self.shrink),
            ));
        }
        if !(self.sufficient_decrease > 0.0 && self.sufficient_decrease.is_finite()) {
            return Err(Error::invalid(
                "sufficient_decrease",
                format!("must be positive, got {}", self.sufficient_decrease),
            ));
        }
        Ok(())
    }
}

/// Tolerances and schedules of the SART + wTV solver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DcarConfig {
    /// Dead zone for measured-ray residuals (line-integral units).
    pub e1: f64,
    /// Dead zone for residuals against the prior's reprojection.
    pub e2: f64,
    /// SART relaxation.
    pub lambda: f64,
    /// Floor added to the gradient magnitude in the wTV weights, in HU per pixel.
    pub epsilon_hu: f64,
    pub outer_iterations: usize,
    pub tv_steps_per_outer: usize,
    pub line_search: LineSearch,
    pub enforce_nonnegativity: bool,
    pub mu_water: f64,
    pub backprojector: Backprojector,
}

impl Default for DcarConfig {
    fn default() -> Self {
        DcarConfig {
            e1: 0.001,
            e2: 0.5,
            lambda: 0.8,
            epsilon_hu: 5.0,
            outer_iterations: 50,
            tv_steps_per_outer: 5,
            line_search: LineSearch::default(),
            enforce_nonnegativity: true,
            mu_water: HuScale::default().mu_water,
            backprojector: Backprojector::default(),
        }
    }
}

impl DcarConfig {
    /// Settings for noisy measurements: wider measured-data dead zone.
    pub fn noisy() -> Self {
        DcarConfig {
            e1: 0.01,
            ..Default::default()
        }
    }

    /// Zero-initialized SART + wTV comparison run: 100 outer iterations.
    pub fn baseline() -> Self {
        DcarConfig {
            outer_iterations: 100,
            ..Default::default()
        }
    }

    pub fn hu_scale(&self) -> HuScale {
        HuScale {
            mu_water: self.mu_water,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e1 >= 0.0 && self.e1.is_finite()) {
            return Err(Error::invalid(
                "e1",
                format!("must be >= 0, got {}", self.e1),
            ));
        }
        if !(self.e2 >= 0.0 && self.e2.is_finite()) {
            return Err(Error::invalid(
                "e2",
                format!("must be >= 0, got {}", self.e2),
            ));
        }
        if !(self.lambda > 0.0 && self.lambda < 2.0) {
            return Err(Error::invalid(
                "lambda",
                format!("must lie in (0, 2), got {}", self.lambda),
            ));
        }
        if !(self.epsilon_hu > 0.0 && self.epsilon_hu.is_finite()) {
            return Err(Error::invalid(
                "epsilon_hu",
                format!("must be positive, got {}", self.epsilon_hu),
            ));
        }
        if self.tv_steps_per_outer == 0 {
            return Err(Error::invalid("tv_steps_per_outer", "must be at least 1"));
        }
        self.hu_scale().validate()?;
        self.line_search.validate()
    }
}
