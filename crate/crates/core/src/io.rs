//! On-disk formats.
//!
//! Raw arrays are little-endian `f32`, row-major, with a JSON sidecar next to
//! them (same path, `.json` extension):
//!
//! * images: `{"nx", "ny", "dx_mm", "dy_mm", "unit": "mm^-1" | "HU"}`
//! * sinograms: `{"nAngles", "nBins", "binSize_mm", "angles_deg"}`
//!
//! PNG export is 16-bit grayscale with a linear HU window; the first image
//! row is the top PNG row.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, HuScale, ImageGrid};
use crate::projector::Sinogram;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "mm^-1")]
    Mu,
    #[serde(rename = "HU")]
    Hu,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ImageSidecar {
    nx: usize,
    ny: usize,
    dx_mm: f64,
    dy_mm: f64,
    unit: Unit,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SinogramSidecar {
    #[serde(rename = "nAngles")]
    n_angles: usize,
    #[serde(rename = "nBins")]
    n_bins: usize,
    #[serde(rename = "binSize_mm")]
    bin_size_mm: f64,
    angles_deg: Vec<f64>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn write_f32(path: &Path, values: &[f64]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for &v in values {
        w.write_all(&(v as f32).to_le_bytes())
            .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_f32(path: &Path, expected: usize) -> Result<Vec<f64>> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() != expected * 4 {
        return Err(Error::Format {
            path: path.into(),
            reason: format!("{} bytes, sidecar implies {}", bytes.len(), expected * 4),
        });
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("sidecars serialize");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.into(),
        reason: e.to_string(),
    })
}

pub fn write_image(path: &Path, image: &ImageGrid, unit: Unit) -> Result<()> {
    let s = image.spec();
    write_f32(path, image.values())?;
    write_json(
        &sidecar_path(path),
        &ImageSidecar {
            nx: s.nx,
            ny: s.ny,
            dx_mm: s.dx,
            dy_mm: s.dy,
            unit,
        },
    )
}

pub fn read_image(path: &Path) -> Result<(ImageGrid, Unit)> {
    let side: ImageSidecar = read_json(&sidecar_path(path))?;
    let spec = GridSpec::new(side.nx, side.ny, side.dx_mm, side.dy_mm)?;
    let values = read_f32(path, spec.len())?;
    let image = ImageGrid::from_values(spec, values).map_err(|e| Error::Format {
        path: path.into(),
        reason: e.to_string(),
    })?;
    Ok((image, side.unit))
}

/// Reads an image and converts it to attenuation if stored in HU.
pub fn read_image_mu(path: &Path, scale: HuScale) -> Result<ImageGrid> {
    let (img, unit) = read_image(path)?;
    Ok(match unit {
        Unit::Mu => img,
        Unit::Hu => crate::grid::hu_to_mu(&img, scale),
    })
}

pub fn write_sinogram(path: &Path, sino: &Sinogram) -> Result<()> {
    write_f32(path, sino.values())?;
    write_json(
        &sidecar_path(path),
        &SinogramSidecar {
            n_angles: sino.n_angles,
            n_bins: sino.n_bins,
            bin_size_mm: sino.bin_size,
            angles_deg: sino.angles_deg.clone(),
        },
    )
}

pub fn read_sinogram(path: &Path) -> Result<Sinogram> {
    let side: SinogramSidecar = read_json(&sidecar_path(path))?;
    if side.angles_deg.len() != side.n_angles {
        return Err(Error::Format {
            path: sidecar_path(path),
            reason: format!(
                "nAngles = {} but {} angles listed",
                side.n_angles,
                side.angles_deg.len()
            ),
        });
    }
    let values = read_f32(path, side.n_angles * side.n_bins)?;
    Sinogram::from_values(side.n_bins, side.bin_size_mm, side.angles_deg, values).map_err(|e| {
        Error::Format {
            path: path.into(),
            reason: e.to_string(),
        }
    })
}

/// Display window in HU.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub low: f64,
    pub high: f64,
}

impl Default for Window {
    fn default() -> Self {
        Window {
            low: -1000.0,
            high: 1000.0,
        }
    }
}

/// Maps HU values linearly from the window onto `0..=65535`.
pub fn window_to_u16(hu: f64, window: Window) -> u16 {
    let t = ((hu - window.low) / (window.high - window.low)).clamp(0.0, 1.0);
    (t * 65535.0).round() as u16
}

/// Writes an attenuation image as a windowed 16-bit grayscale PNG.
pub fn export_png(path: &Path, image: &ImageGrid, scale: HuScale, window: Window) -> Result<()> {
    if !(window.high > window.low) {
        return Err(Error::invalid(
            "window",
            format!("high {} must exceed low {}", window.high, window.low),
        ));
    }
    let s = image.spec();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), s.nx as u32, s.ny as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Sixteen);
    let data: Vec<u8> = image
        .values()
        .iter()
        .flat_map(|&mu| window_to_u16(scale.mu_to_hu(mu), window).to_be_bytes())
        .collect();
    let png_err = |e: png::EncodingError| Error::Format {
        path: path.into(),
        reason: e.to_string(),
    };
    let mut writer = encoder.write_header().map_err(png_err)?;
    writer.write_image_data(&data).map_err(png_err)?;
    writer.finish().map_err(png_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn image_sidecar_keys() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("img.raw");
        let img = ImageGrid::constant(GridSpec::new(3, 2, 1.5, 2.5).unwrap(), 0.25);
        write_image(&p, &img, Unit::Hu).unwrap();
        let side: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("img.json")).unwrap())
                .unwrap();
        assert_eq!(side["nx"], 3);
        assert_eq!(side["dy_mm"], 2.5);
        assert_eq!(side["unit"], "HU");
        assert_eq!(std::fs::metadata(&p).unwrap().len(), 24);
        let (back, unit) = read_image(&p).unwrap();
        assert_eq!(unit, Unit::Hu);
        assert_eq!(back, img);
    }

    #[test]
    fn sinogram_sidecar_keys() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.raw");
        let s = Sinogram::from_values(2, 0.5, vec![10.0, 20.0, 30.0], vec![0.5; 6]).unwrap();
        write_sinogram(&p, &s).unwrap();
        let side: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("s.json")).unwrap())
                .unwrap();
        assert_eq!(side["nAngles"], 3);
        assert_eq!(side["nBins"], 2);
        assert_eq!(side["binSize_mm"], 0.5);
        assert_eq!(read_sinogram(&p).unwrap(), s);
    }

    #[test]
    fn truncated_file_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("img.raw");
        write_image(
            &p,
            &ImageGrid::zeros(GridSpec::new(4, 4, 1.0, 1.0).unwrap()),
            Unit::Mu,
        )
        .unwrap();
        std::fs::write(&p, [0u8; 10]).unwrap();
        assert!(matches!(read_image(&p), Err(Error::Format { .. })));
    }

    #[test]
    fn png_window_endpoints() {
        let w = Window::default();
        assert_eq!(window_to_u16(-1000.0, w), 0);
        assert_eq!(window_to_u16(-5000.0, w), 0);
        assert_eq!(window_to_u16(1000.0, w), 65535);
        assert_eq!(window_to_u16(0.0, w), 32768);

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        let img = ImageGrid::constant(GridSpec::new(5, 4, 1.0, 1.0).unwrap(), 0.02);
        export_png(&p, &img, HuScale::default(), w).unwrap();
        let decoder = png::Decoder::new(std::io::BufReader::new(File::open(&p).unwrap()));
        let reader = decoder.read_info().unwrap();
        let info = reader.info();
        assert_eq!((info.width, info.height), (5, 4));
        assert_eq!(info.bit_depth, png::BitDepth::Sixteen);
    }

    proptest! {
        #[test]
        fn raw_round_trip_is_f32_exact(vals in proptest::collection::vec(-1.0e3f64..1.0e3, 12)) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("x.raw");
            let img = ImageGrid::from_values(GridSpec::new(4, 3, 1.0, 1.0).unwrap(), vals.clone()).unwrap();
            write_image(&p, &img, Unit::Mu).unwrap();
            let (back, _) = read_image(&p).unwrap();
            for (a, b) in back.values().iter().zip(&vals) {
                prop_assert_eq!(*a, *b as f32 as f64);
            }
        }
    }
}
