//! phantom → project → (noise) → method → metrics, with artifacts on disk.

use std::fs;
use std::path::Path;

use dcar_core::dcar::{dcar_reconstruct, sart_wtv_baseline, ReconReport};
use dcar_core::fbp::fbp_reconstruct;
use dcar_core::io::{export_png, read_image_mu, write_image, write_sinogram, Unit, Window};
use dcar_core::metrics::{residual_stats, rmse_hu, ResidualStats};
use dcar_core::prior::{resolve_prior, PriorContext};
use dcar_core::projector::forward_project;
use dcar_core::simulate::{add_poisson_noise, random_abdomen_phantom, render_phantom, shepp_logan};
use dcar_core::{partition_angles, GridSpec, ImageGrid};
use serde::Serialize;

use crate::config::{ExperimentConfig, PhantomSource};
use crate::error::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub method: &'static str,
    pub config: ExperimentConfig,
    pub metrics: Metrics,
}

#[derive(Clone, Debug, Serialize)]
pub struct Metrics {
    pub rmse_hu: f64,
    /// RMSE of the prior image; `dcar` only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior_rmse_hu: Option<f64>,
    /// Residual against the measured data, thresholded at `solver.e1`.
    pub measured_residual: ResidualStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tv_increases: Option<usize>,
}

pub fn make_phantom(
    source: &PhantomSource,
    grid: &GridSpec,
    mu_water: f64,
) -> Result<ImageGrid, CliError> {
    let img = match source {
        PhantomSource::Specs { ellipses } => render_phantom(ellipses, grid)?,
        PhantomSource::Seed { seed } => random_abdomen_phantom(*seed, grid)?,
        PhantomSource::SheppLogan { radius, scale } => {
            render_phantom(&shepp_logan(*radius, *scale), grid)?
        }
        PhantomSource::File { path } => {
            let img = read_image_mu(path, dcar_core::HuScale { mu_water })?;
            if img.spec() != grid {
                return Err(CliError::Validation(format!(
                    "phantom: {} is {:?}, grid block is {:?}",
                    path.display(),
                    img.spec(),
                    grid
                )));
            }
            img
        }
    };
    Ok(img)
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn write_image_artifacts(
    dir: &Path,
    name: &str,
    image: &ImageGrid,
    mu_water: f64,
) -> Result<(), CliError> {
    write_image(&dir.join(format!("{name}.raw")), image, Unit::Mu)?;
    export_png(
        &dir.join(format!("{name}.png")),
        image,
        dcar_core::HuScale { mu_water },
        Window::default(),
    )?;
    Ok(())
}

fn check_finite(name: &str, image: &ImageGrid) -> Result<(), CliError> {
    match image.values().iter().position(|v| !v.is_finite()) {
        Some(j) => Err(CliError::Numeric(format!(
            "{name}: pixel {j} is {}",
            image.values()[j]
        ))),
        None => Ok(()),
    }
}

/// Runs one experiment and writes its artifacts into `config.output_dir`.
pub fn run(config: &ExperimentConfig) -> Result<Summary, CliError> {
    config.validate()?;
    let solver = config.solver();
    let scale = solver.hu_scale();
    let geometry = config.geometry.build()?;
    let grid = config.grid.build()?;
    let partition = partition_angles(
        &geometry,
        config.measured_range.start_deg,
        config.measured_range.end_deg,
    )?;

    let truth = make_phantom(&config.phantom, &grid, solver.mu_water)?;
    let clean = forward_project(&truth, &geometry, &partition.measured)?;
    let measured = match config.noise.model() {
        Some(model) => add_poisson_noise(&clean, &model)?,
        None => clean,
    };

    let mut prior_image = None;
    let mut report: Option<ReconReport> = None;
    let recon = match config.method {
        crate::config::Method::Fbp => {
            fbp_reconstruct(&measured, &geometry, &partition.measured, &grid)?
        }
        crate::config::Method::SartWtv => {
            let (img, rep) = sart_wtv_baseline(
                &measured,
                &geometry,
                &partition,
                &grid,
                &solver,
                Some(&truth),
            )?;
            report = Some(rep);
            img
        }
        crate::config::Method::Dcar => {
            let source = config.prior.as_ref().expect("validated");
            let ctx = PriorContext {
                measured: &measured,
                geometry: &geometry,
                partition: &partition,
                grid,
                ground_truth: Some(&truth),
                scale,
            };
            let prior = resolve_prior(source, &ctx)?;
            let (img, rep) = dcar_reconstruct(
                &measured,
                &prior,
                &geometry,
                &partition,
                &solver,
                Some(&truth),
            )?;
            prior_image = Some(prior);
            report = Some(rep);
            img
        }
    };
    check_finite("reconstruction", &recon)?;

    let metrics = Metrics {
        rmse_hu: rmse_hu(&recon, &truth, scale, None)?,
        prior_rmse_hu: prior_image
            .as_ref()
            .map(|p| rmse_hu(p, &truth, scale, None))
            .transpose()?,
        measured_residual: residual_stats(
            &recon,
            &measured,
            &geometry,
            &partition.measured,
            solver.e1,
        )?,
        tv_increases: report.as_ref().map(|r| r.tv_increases()),
    };
    let summary = Summary {
        method: config.method.name(),
        config: config.clone(),
        metrics,
    };

    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    write_image_artifacts(dir, "phantom", &truth, solver.mu_water)?;
    write_image_artifacts(dir, "recon", &recon, solver.mu_water)?;
    if let Some(p) = &prior_image {
        write_image_artifacts(dir, "prior", p, solver.mu_water)?;
    }
    write_sinogram(&dir.join("measured.raw"), &measured)?;
    if let Some(r) = &report {
        write_text(&dir.join("report.csv"), &r.to_csv())?;
    }
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_text(&dir.join("summary.json"), &(json + "\n"))?;
    Ok(summary)
}

pub const COMPARE_HEADER: &str =
    "method,rmse_hu,residual_rms,residual_max_abs,fraction_exceeding_e1";

pub fn compare_row(s: &Summary) -> String {
    let r = &s.metrics.measured_residual;
    format!(
        "{},{:.6},{:.9e},{:.9e},{:.6}",
        s.method, s.metrics.rmse_hu, r.rms, r.max_abs, r.fraction_exceeding
    )
}

/// Runs every config (all must share phantom, grid, geometry and measured
/// range) and returns the results table, rows in the given order.
pub fn compare(configs: &[ExperimentConfig]) -> Result<String, CliError> {
    let first = configs
        .first()
        .ok_or_else(|| CliError::Validation("compare: no configs given".into()))?;
    for (i, c) in configs.iter().enumerate().skip(1) {
        let mismatch = if c.phantom != first.phantom {
            Some("phantom")
        } else if c.geometry != first.geometry {
            Some("geometry")
        } else if c.grid != first.grid {
            Some("grid")
        } else if c.measured_range != first.measured_range {
            Some("measured_range")
        } else {
            None
        };
        if let Some(block) = mismatch {
            return Err(CliError::Validation(format!(
                "compare: config {} differs from config 1 in `{block}`",
                i + 1
            )));
        }
    }
    let mut table = format!("{COMPARE_HEADER}\n");
    for c in configs {
        table.push_str(&compare_row(&run(c)?));
        table.push('\n');
    }
    Ok(table)
}
