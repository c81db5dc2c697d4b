//! Data-consistent artifact reduction: SART over measured data and prior
//! reprojections, interleaved with reweighted-TV descent.
//!
//! Each outer iteration runs one [`SartSystem::sweep`], recomputes the wTV
//! weights from the swept image, then takes `tv_steps_per_outer` descent
//! steps at those weights.

mod config;
mod sart;
mod wtv;

use std::fmt::Write as _;

pub use config::{DcarConfig, LineSearch};
pub use sart::{sart_sweep, soft_threshold, Backprojector, SartSystem};
pub use wtv::{
    gradient_magnitude, wtv_descent, wtv_descent_bounded, wtv_gradient, wtv_value, wtv_weights,
    DescentLog, WtvState, GRADIENT_SMOOTHING,
};

use crate::error::Result;
use crate::geometry::{AngularPartition, FanBeamGeometry};
use crate::grid::ImageGrid;
use crate::metrics::rmse_hu;
use crate::projector::{forward_project, Sinogram};

/// Diagnostics of one outer iteration (or of the initial image).
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    /// 0 for the initial image.
    pub iteration: usize,
    pub measured_residual_rms: f64,
    /// RMS of `A_u f − A_u f_prior`; zero when there is no unmeasured term.
    pub prior_residual_rms: f64,
    /// wTV value after the descent; `None` for the initial image.
    pub wtv_value: Option<f64>,
    pub rmse_hu: Option<f64>,
    pub tv: DescentLog,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconReport {
    pub initial: IterationRecord,
    pub iterations: Vec<IterationRecord>,
}

impl ReconReport {
    pub fn last(&self) -> &IterationRecord {
        self.iterations.last().unwrap_or(&self.initial)
    }

    /// Descent steps, across all iterations, after which the wTV value rose.
    pub fn tv_increases(&self) -> usize {
        self.iterations.iter().map(|r| r.tv.increases()).sum()
    }

    /// `iteration,measured_residual_rms,prior_residual_rms,wtv_value,rmse_hu`,
    /// one row per record including the initial image; absent values are empty.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("iteration,measured_residual_rms,prior_residual_rms,wtv_value,rmse_hu\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.9e}")).unwrap_or_default();
        for r in std::iter::once(&self.initial).chain(&self.iterations) {
            let _ = writeln!(
                out,
                "{},{:.9e},{:.9e},{},{}",
                r.iteration,
                r.measured_residual_rms,
                r.prior_residual_rms,
                opt(r.wtv_value),
                opt(r.rmse_hu)
            );
        }
        out
    }
}

fn rms_difference(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

struct Recorder<'a> {
    geometry: &'a FanBeamGeometry,
    partition: &'a AngularPartition,
    measured: &'a Sinogram,
    prior_projections: Option<&'a Sinogram>,
    reference: Option<&'a ImageGrid>,
    config: &'a DcarConfig,
}

impl Recorder<'_> {
    fn record(
        &self,
        iteration: usize,
        image: &ImageGrid,
        wtv: Option<f64>,
        tv: DescentLog,
    ) -> Result<IterationRecord> {
        let am = forward_project(image, self.geometry, &self.partition.measured)?;
        let measured_residual_rms = rms_difference(am.values(), self.measured.values());
        let prior_residual_rms = match self.prior_projections {
            Some(pu) if !self.partition.unmeasured.is_empty() => {
                let au = forward_project(image, self.geometry, &self.partition.unmeasured)?;
                rms_difference(au.values(), pu.values())
            }
            _ => 0.0,
        };
        let rmse_hu = self
            .reference
            .map(|r| rmse_hu(image, r, self.config.hu_scale(), None))
            .transpose()?;
        Ok(IterationRecord {
            iteration,
            measured_residual_rms,
            prior_residual_rms,
            wtv_value: wtv,
            rmse_hu,
            tv,
        })
    }
}

fn run_loop(
    system: &SartSystem,
    initial: ImageGrid,
    measured: &Sinogram,
    prior_projections: Option<&Sinogram>,
    partition: &AngularPartition,
    config: &DcarConfig,
    reference: Option<&ImageGrid>,
) -> Result<(ImageGrid, ReconReport)> {
    config.validate()?;
    let recorder = Recorder {
        geometry: system.geometry(),
        partition,
        measured,
        prior_projections,
        reference,
        config,
    };
    let mut image = initial;
    let mut report = ReconReport {
        initial: recorder.record(0, &image, None, DescentLog::default())?,
        iterations: Vec::with_capacity(config.outer_iterations),
    };
    let lower = config.enforce_nonnegativity.then_some(0.0);
    for it in 1..=config.outer_iterations {
        image = system.sweep(&image, measured, prior_projections, partition, config)?;
        let state = wtv_weights(&image, config.epsilon_hu, config.hu_scale())?;
        let (next, log) = wtv_descent_bounded(
            &image,
            &state,
            &config.line_search,
            config.tv_steps_per_outer,
            lower,
        )?;
        image = next;
        let value = log.values.last().copied();
        report
            .iterations
            .push(recorder.record(it, &image, value, log)?);
    }
    Ok((image, report))
}

/// Reconstructs from `measured` (views `partition.measured`) starting at
/// `prior`, whose reprojection supplies the unmeasured views.
pub fn dcar_reconstruct(
    measured: &Sinogram,
    prior: &ImageGrid,
    geometry: &FanBeamGeometry,
    partition: &AngularPartition,
    config: &DcarConfig,
    reference: Option<&ImageGrid>,
) -> Result<(ImageGrid, ReconReport)> {
    let system = SartSystem::new(geometry, prior.spec(), config.backprojector)?;
    dcar_reconstruct_with_system(&system, measured, prior, partition, config, reference)
}

pub fn dcar_reconstruct_with_system(
    system: &SartSystem,
    measured: &Sinogram,
    prior: &ImageGrid,
    partition: &AngularPartition,
    config: &DcarConfig,
    reference: Option<&ImageGrid>,
) -> Result<(ImageGrid, ReconReport)> {
    if let Some(r) = reference {
        prior.check_same_shape(r, "reference vs prior")?;
    }
    let prior_projections = forward_project(prior, system.geometry(), &partition.unmeasured)?;
    run_loop(
        system,
        prior.clone(),
        measured,
        Some(&prior_projections),
        partition,
        config,
        reference,
    )
}

/// SART + wTV from a zero image using the measured views only.
pub fn sart_wtv_baseline(
    measured: &Sinogram,
    geometry: &FanBeamGeometry,
    partition: &AngularPartition,
    spec: &crate::grid::GridSpec,
    config: &DcarConfig,
    reference: Option<&ImageGrid>,
) -> Result<(ImageGrid, ReconReport)> {
    let system = SartSystem::new(geometry, spec, config.backprojector)?;
    run_loop(
        &system,
        ImageGrid::zeros(*spec),
        measured,
        None,
        partition,
        config,
        reference,
    )
}
