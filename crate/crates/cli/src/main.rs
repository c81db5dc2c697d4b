//! `dcar`: batch front-end for limited-angle reconstruction experiments.

mod config;
mod error;
mod pipeline;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dcar_core::dcar::{dcar_reconstruct, DcarConfig};
use dcar_core::fbp::fbp_reconstruct;
use dcar_core::io::{
    export_png, read_image_mu, read_sinogram, write_image, write_sinogram, Unit, Window,
};
use dcar_core::metrics::{residual_stats, rmse_hu};
use dcar_core::projector::forward_project;
use dcar_core::simulate::{add_poisson_noise, NoiseModel};
use dcar_core::{
    make_short_scan_geometry, AngularPartition, FanBeamGeometry, GridSpec, HuScale, Sinogram,
};
use serde::Serialize;

use config::{ExperimentConfig, PhantomSource};
use error::CliError;

#[derive(Parser)]
#[command(
    name = "dcar",
    version,
    about = "Limited-angle CT reconstruction experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config end to end.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Run several configs on the same phantom and print a results table.
    Compare {
        configs: Vec<PathBuf>,
        /// Also write the table here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Render a phantom to a raw image.
    Phantom(PhantomArgs),
    /// Forward project an image.
    Project(ProjectArgs),
    /// Add Poisson noise to a sinogram.
    Noise(NoiseArgs),
    /// Filtered backprojection of a sinogram.
    Fbp(FbpArgs),
    /// DCAR reconstruction from measured data and a prior image.
    Dcar(DcarArgs),
    /// RMSE against a reference and, optionally, data residuals; prints JSON.
    Metrics(MetricsArgs),
    /// Window a raw image into a 16-bit PNG.
    ExportPng(ExportArgs),
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value_t = 128)]
    nx: usize,
    #[arg(long, default_value_t = 128)]
    ny: usize,
    #[arg(long, default_value_t = 2.5)]
    dx: f64,
    #[arg(long, default_value_t = 2.5)]
    dy: f64,
}

#[derive(Args)]
struct PhantomArgs {
    /// Random abdomen phantom seed.
    #[arg(long, conflicts_with_all = ["shepp_logan", "specs"])]
    seed: Option<u64>,
    /// Modified Shepp-Logan scaled to this radius (mm).
    #[arg(long)]
    shepp_logan: Option<f64>,
    /// TOML file with an `ellipses` array.
    #[arg(long, conflicts_with = "shepp_logan")]
    specs: Option<PathBuf>,
    /// Shepp-Logan outer intensity, mm^-1.
    #[arg(long, default_value_t = 0.02)]
    scale: f64,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long, default_value_t = 600.0)]
    sid: f64,
    #[arg(long, default_value_t = 1200.0)]
    sdd: f64,
    #[arg(long, default_value_t = 310)]
    n_bins: usize,
    #[arg(long, default_value_t = 2.0)]
    bin_size: f64,
    #[arg(long, default_value_t = 0.0)]
    start_deg: f64,
    #[arg(long, default_value_t = 210.0)]
    end_deg: f64,
    #[arg(long, default_value_t = 1.0)]
    step_deg: f64,
}

impl ScanArgs {
    fn build(&self) -> Result<FanBeamGeometry, CliError> {
        Ok(make_short_scan_geometry(
            self.sid,
            self.sdd,
            self.n_bins,
            self.bin_size,
            self.start_deg,
            self.end_deg,
            self.step_deg,
        )?)
    }
}

#[derive(Args)]
struct ProjectArgs {
    #[arg(long)]
    image: PathBuf,
    #[command(flatten)]
    scan: ScanArgs,
    /// Project only views within [START, END] degrees.
    #[arg(long, num_args = 2, value_names = ["START", "END"])]
    measured: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.02)]
    mu_water: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long)]
    sino: PathBuf,
    #[arg(long, default_value_t = 1e5)]
    i0: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FbpArgs {
    #[arg(long)]
    sino: PathBuf,
    #[arg(long, default_value_t = 600.0)]
    sid: f64,
    #[arg(long, default_value_t = 1200.0)]
    sdd: f64,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DcarArgs {
    /// Measured views; their angles must belong to the scan.
    #[arg(long)]
    sino: PathBuf,
    #[arg(long)]
    prior: PathBuf,
    /// Full short scan the unmeasured views are taken from.
    #[command(flatten)]
    scan: ScanArgs,
    /// TOML file with solver settings; defaults otherwise.
    #[arg(long)]
    solver: Option<PathBuf>,
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Per-iteration report CSV.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Sinogram for residual statistics.
    #[arg(long)]
    sino: Option<PathBuf>,
    #[arg(long, default_value_t = 0.001)]
    threshold: f64,
    #[arg(long, default_value_t = 600.0)]
    sid: f64,
    #[arg(long, default_value_t = 1200.0)]
    sdd: f64,
    #[arg(long, default_value_t = 0.02)]
    mu_water: f64,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = -1000.0, allow_negative_numbers = true)]
    low: f64,
    #[arg(long, default_value_t = 1000.0, allow_negative_numbers = true)]
    high: f64,
    #[arg(long, default_value_t = 0.02)]
    mu_water: f64,
}

fn scale(mu_water: f64) -> Result<HuScale, CliError> {
    Ok(HuScale::new(mu_water)?)
}

/// Geometry over exactly the views of `sino`.
fn sinogram_geometry(sino: &Sinogram, sid: f64, sdd: f64) -> Result<FanBeamGeometry, CliError> {
    Ok(FanBeamGeometry::new(
        sid,
        sdd,
        sino.n_bins,
        sino.bin_size,
        sino.angles_deg.clone(),
    )?)
}

/// Partition of `geometry` whose measured views are the angles of `sino`.
fn partition_from(
    sino: &Sinogram,
    geometry: &FanBeamGeometry,
) -> Result<AngularPartition, CliError> {
    if sino.n_bins != geometry.n_bins || sino.bin_size != geometry.bin_size {
        return Err(CliError::Validation(format!(
            "sinogram detector ({} × {} mm) differs from the scan ({} × {} mm)",
            sino.n_bins, sino.bin_size, geometry.n_bins, geometry.bin_size
        )));
    }
    let mut measured = Vec::with_capacity(sino.angles_deg.len());
    for &a in &sino.angles_deg {
        let idx = geometry
            .angles_deg
            .iter()
            .position(|&b| (a - b).abs() < 1e-6)
            .ok_or_else(|| {
                CliError::Validation(format!("sinogram angle {a}° is not in the scan"))
            })?;
        measured.push(idx);
    }
    let unmeasured = (0..geometry.n_angles())
        .filter(|i| !measured.contains(i))
        .collect();
    Ok(AngularPartition {
        measured,
        unmeasured,
    })
}

fn read_toml<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn print_json<T: Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("serializable")
    );
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config, output_dir } => {
            let mut c = ExperimentConfig::load(&config)?;
            if let Some(dir) = output_dir {
                c.output_dir = dir;
            }
            let summary = pipeline::run(&c)?;
            println!("{}", pipeline::COMPARE_HEADER);
            println!("{}", pipeline::compare_row(&summary));
        }
        Command::Compare { configs, output } => {
            let loaded = configs
                .iter()
                .map(|p| ExperimentConfig::load(p))
                .collect::<Result<Vec<_>, _>>()?;
            let table = pipeline::compare(&loaded)?;
            print!("{table}");
            if let Some(path) = output {
                std::fs::write(&path, &table)
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            }
        }
        Command::Phantom(a) => {
            let grid = GridSpec::new(a.grid.nx, a.grid.ny, a.grid.dx, a.grid.dy)?;
            let source = match (a.seed, a.shepp_logan, a.specs) {
                (Some(seed), None, None) => PhantomSource::Seed { seed },
                (None, Some(radius), None) => PhantomSource::SheppLogan {
                    radius,
                    scale: a.scale,
                },
                (None, None, Some(path)) => {
                    #[derive(serde::Deserialize)]
                    #[serde(deny_unknown_fields)]
                    struct Specs {
                        ellipses: Vec<dcar_core::simulate::EllipseSpec>,
                    }
                    let specs: Specs = read_toml(&path)?;
                    PhantomSource::Specs {
                        ellipses: specs.ellipses,
                    }
                }
                _ => {
                    return Err(CliError::Validation(
                        "phantom: give exactly one of --seed, --shepp-logan, --specs".into(),
                    ))
                }
            };
            let img = pipeline::make_phantom(&source, &grid, 0.02)?;
            write_image(&a.out, &img, Unit::Mu)?;
        }
        Command::Project(a) => {
            let img = read_image_mu(&a.image, scale(a.mu_water)?)?;
            let geometry = a.scan.build()?;
            let subset = match &a.measured {
                Some(r) => dcar_core::partition_angles(&geometry, r[0], r[1])?.measured,
                None => geometry.all_angles(),
            };
            write_sinogram(&a.out, &forward_project(&img, &geometry, &subset)?)?;
        }
        Command::Noise(a) => {
            let sino = read_sinogram(&a.sino)?;
            let noisy = add_poisson_noise(
                &sino,
                &NoiseModel {
                    i0: a.i0,
                    seed: a.seed,
                },
            )?;
            write_sinogram(&a.out, &noisy)?;
        }
        Command::Fbp(a) => {
            let sino = read_sinogram(&a.sino)?;
            let geometry = sinogram_geometry(&sino, a.sid, a.sdd)?;
            let grid = GridSpec::new(a.grid.nx, a.grid.ny, a.grid.dx, a.grid.dy)?;
            let img = fbp_reconstruct(&sino, &geometry, &geometry.all_angles(), &grid)?;
            write_image(&a.out, &img, Unit::Mu)?;
        }
        Command::Dcar(a) => {
            let config: DcarConfig = match &a.solver {
                Some(p) => read_toml(p)?,
                None => DcarConfig::default(),
            };
            config.validate()?;
            let s = config.hu_scale();
            let sino = read_sinogram(&a.sino)?;
            let geometry = a.scan.build()?;
            let partition = partition_from(&sino, &geometry)?;
            let prior = read_image_mu(&a.prior, s)?;
            let reference = a
                .reference
                .as_deref()
                .map(|p| read_image_mu(p, s))
                .transpose()?;
            let (img, report) = dcar_reconstruct(
                &sino,
                &prior,
                &geometry,
                &partition,
                &config,
                reference.as_ref(),
            )?;
            write_image(&a.out, &img, Unit::Mu)?;
            if let Some(path) = &a.report {
                std::fs::write(path, report.to_csv())
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            }
        }
        Command::Metrics(a) => {
            let s = scale(a.mu_water)?;
            let img = read_image_mu(&a.image, s)?;
            let mut out = serde_json::Map::new();
            if let Some(r) = &a.reference {
                let reference = read_image_mu(r, s)?;
                out.insert("rmse_hu".into(), rmse_hu(&img, &reference, s, None)?.into());
            }
            if let Some(p) = &a.sino {
                let sino = read_sinogram(p)?;
                let geometry = sinogram_geometry(&sino, a.sid, a.sdd)?;
                let stats =
                    residual_stats(&img, &sino, &geometry, &geometry.all_angles(), a.threshold)?;
                out.insert(
                    "residual".into(),
                    serde_json::to_value(stats).expect("serializable"),
                );
            }
            print_json(&out);
        }
        Command::ExportPng(a) => {
            let s = scale(a.mu_water)?;
            let img = read_image_mu(&a.image, s)?;
            let window = Window {
                low: a.low,
                high: a.high,
            };
            export_png(&a.out, &img, s, window)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dcar: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
