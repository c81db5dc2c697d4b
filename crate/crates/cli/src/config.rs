//! Experiment configuration file (TOML). Unknown keys are rejected.
//!
//! Relative paths inside the file resolve against the file's directory.

use std::path::{Path, PathBuf};

use dcar_core::dcar::DcarConfig;
use dcar_core::prior::PriorSource;
use dcar_core::simulate::{EllipseSpec, NoiseModel};
use dcar_core::{make_short_scan_geometry, FanBeamGeometry, GridSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub method: Method,
    pub output_dir: PathBuf,
    pub geometry: GeometryBlock,
    pub grid: GridBlock,
    pub phantom: PhantomSource,
    #[serde(default)]
    pub noise: NoiseBlock,
    pub measured_range: RangeBlock,
    /// Required for `method = "dcar"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<PriorSource>,
    /// When absent: the baseline preset for `sart-wtv`, otherwise the
    /// defaults with `e1 = 0.01` if noise is enabled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<DcarConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Fbp,
    SartWtv,
    Dcar,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Fbp => "fbp",
            Method::SartWtv => "sart-wtv",
            Method::Dcar => "dcar",
        }
    }
}

/// Short-scan fan-beam geometry; angles in degrees, lengths in mm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    pub sid: f64,
    pub sdd: f64,
    pub n_bins: usize,
    pub bin_size: f64,
    pub start_deg: f64,
    pub end_deg: f64,
    pub step_deg: f64,
}

impl GeometryBlock {
    pub fn build(&self) -> dcar_core::Result<FanBeamGeometry> {
        make_short_scan_geometry(
            self.sid,
            self.sdd,
            self.n_bins,
            self.bin_size,
            self.start_deg,
            self.end_deg,
            self.step_deg,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
}

impl GridBlock {
    pub fn build(&self) -> dcar_core::Result<GridSpec> {
        GridSpec::new(self.nx, self.ny, self.dx, self.dy)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhantomSource {
    Specs { ellipses: Vec<EllipseSpec> },
    File { path: PathBuf },
    Seed { seed: u64 },
    SheppLogan { radius: f64, scale: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseBlock {
    pub enabled: bool,
    #[serde(default = "default_i0")]
    pub i0: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_i0() -> f64 {
    1e5
}

impl NoiseBlock {
    pub fn model(&self) -> Option<NoiseModel> {
        self.enabled.then_some(NoiseModel {
            i0: self.i0,
            seed: self.seed,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeBlock {
    pub start_deg: f64,
    pub end_deg: f64,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    /// Reads, parses, resolves relative paths and validates.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut config = Self::parse(&text).map_err(|e| match e {
            CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })?;
        config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        config.validate()?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        if let PhantomSource::File { path } = &mut self.phantom {
            fix(path);
        }
        if let Some(PriorSource::File { path }) = &mut self.prior {
            fix(path);
        }
    }

    /// Solver settings in effect, after presets.
    pub fn solver(&self) -> DcarConfig {
        match self.solver {
            Some(s) => s,
            None if self.method == Method::SartWtv => DcarConfig::baseline(),
            None if self.noise.enabled => DcarConfig::noisy(),
            None => DcarConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let geometry = self.geometry.build()?;
        let grid = self.grid.build()?;
        dcar_core::partition_angles(
            &geometry,
            self.measured_range.start_deg,
            self.measured_range.end_deg,
        )?;
        if let Some(model) = self.noise.model() {
            model.validate()?;
        }
        match &self.phantom {
            PhantomSource::Specs { ellipses } => {
                for e in ellipses {
                    e.validate()?;
                }
            }
            PhantomSource::SheppLogan { radius, scale } => {
                if !(*radius > 0.0 && radius.is_finite() && scale.is_finite()) {
                    return Err(CliError::Validation(format!(
                        "phantom: shepp-logan needs radius > 0 and a finite scale, got {radius}, {scale}"
                    )));
                }
            }
            PhantomSource::File { .. } | PhantomSource::Seed { .. } => {}
        }
        if self.method == Method::Dcar && self.prior.is_none() {
            return Err(CliError::Validation(
                "prior: required for method = \"dcar\"".into(),
            ));
        }
        self.solver().validate()?;
        let (hx, hy) = grid.half_extent();
        if hx.hypot(hy) >= geometry.sid {
            return Err(CliError::Validation(format!(
                "grid: half-diagonal {:.1} mm reaches the source circle (geometry.sid = {})",
                hx.hypot(hy),
                geometry.sid
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
method = "dcar"
output_dir = "out"

[geometry]
sid = 600.0
sdd = 1200.0
n_bins = 310
bin_size = 2.0
start_deg = 0.0
end_deg = 210.0
step_deg = 1.0

[grid]
nx = 128
ny = 128
dx = 2.5
dy = 2.5

[phantom]
kind = "seed"
seed = 7

[measured_range]
start_deg = 30.0
end_deg = 150.0

[prior]
kind = "oracle-corrupted"
corruptions = [{ center = [30.0, 20.0], semi_axes = [20.0, 20.0], offset_hu = -300.0 }]
"#;

    #[test]
    fn parses_and_validates() {
        let c = ExperimentConfig::parse(BASE).unwrap();
        c.validate().unwrap();
        assert_eq!(c.method, Method::Dcar);
        assert_eq!(c.solver(), DcarConfig::default());
        assert!(!c.noise.enabled);
    }

    #[test]
    fn unknown_keys_are_parse_errors() {
        let text = BASE.replace("sid = 600.0", "sid = 600.0\nsidd = 3.0");
        assert!(
            matches!(ExperimentConfig::parse(&text), Err(CliError::Parse(m)) if m.contains("sidd"))
        );
        let text = BASE.replace("[grid]", "[grid]\nspacing = 1");
        assert!(matches!(
            ExperimentConfig::parse(&text),
            Err(CliError::Parse(_))
        ));
        let text = format!("{BASE}\n[solver]\nepsilon = 3.0\n");
        assert!(matches!(
            ExperimentConfig::parse(&text),
            Err(CliError::Parse(_))
        ));
    }

    #[test]
    fn missing_blocks_are_parse_errors() {
        let start = BASE.find("[geometry]").unwrap();
        let end = BASE.find("[grid]").unwrap();
        let text = format!("{}{}", &BASE[..start], &BASE[end..]);
        assert!(
            matches!(ExperimentConfig::parse(&text), Err(CliError::Parse(m)) if m.contains("geometry"))
        );
    }

    #[test]
    fn validation_names_the_field() {
        let text = format!("{BASE}\n[solver]\nlambda = 2.5\n");
        let c = ExperimentConfig::parse(&text).unwrap();
        assert!(matches!(c.validate(), Err(CliError::Validation(m)) if m.contains("lambda")));
        let c = ExperimentConfig::parse(
            &BASE
                .replace("end_deg = 150.0", "end_deg = 10.8")
                .replace("start_deg = 30.0", "start_deg = 10.2"),
        )
        .unwrap();
        assert!(matches!(c.validate(), Err(CliError::Validation(_))));
        let no_prior = BASE.split("[prior]").next().unwrap();
        let c = ExperimentConfig::parse(no_prior).unwrap();
        assert!(matches!(c.validate(), Err(CliError::Validation(m)) if m.contains("prior")));
    }

    #[test]
    fn solver_presets() {
        let fbp = ExperimentConfig::parse(&BASE.replace("\"dcar\"", "\"sart-wtv\"")).unwrap();
        assert_eq!(fbp.solver().outer_iterations, 100);
        let noisy =
            ExperimentConfig::parse(&format!("{BASE}\n[noise]\nenabled = true\nseed = 3\n"))
                .unwrap();
        assert_eq!(noisy.solver().e1, 0.01);
        assert_eq!(noisy.noise.i0, 1e5);
    }

    #[test]
    fn relative_paths_follow_the_config() {
        let mut c = ExperimentConfig::parse(BASE).unwrap();
        c.resolve_paths(Path::new("/data/exp"));
        assert_eq!(c.output_dir, Path::new("/data/exp/out"));
    }
}
