//! 8-bit binary PGM band images with a JSON note of the intensity mapping.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Scaling {
    pub image: String,
    pub band: usize,
    pub wavelength_nm: f64,
    pub min: f64,
    pub max: f64,
    pub mapping: &'static str,
}

pub fn encode(values: &[f64], width: usize, height: usize, lo: f64, hi: f64) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    let span = hi - lo;
    out.extend(values.iter().map(|&v| {
        if span > 0.0 {
            (255.0 * (v - lo) / span).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    }));
    out
}

/// Writes `<stem>.pgm` and `<stem>.json`; returns both paths.
pub fn write_band(
    dir: &Path,
    stem: &str,
    values: &[f64],
    (width, height): (usize, usize),
    (band, wavelength_nm): (usize, f64),
    (lo, hi): (f64, f64),
) -> Result<[std::path::PathBuf; 2]> {
    let img = dir.join(format!("{stem}.pgm"));
    let note = dir.join(format!("{stem}.json"));
    fs::write(&img, encode(values, width, height, lo, hi)).with_context(|| format!("writing {}", img.display()))?;
    let scaling = Scaling {
        image: format!("{stem}.pgm"),
        band,
        wavelength_nm,
        min: lo,
        max: hi,
        mapping: "pixel = round(255 * (value - min) / (max - min)), clamped to 0..=255",
    };
    fs::write(&note, serde_json::to_string_pretty(&scaling)?).with_context(|| format!("writing {}", note.display()))?;
    Ok([img, note])
}
