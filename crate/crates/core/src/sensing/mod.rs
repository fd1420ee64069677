//! Noisy optical measurements `X x` and `Xᵀ x̃` of a (blurred) scene, and the
//! bookkeeping of how many were taken.
//!
//! Codes shown on a modulator must be non-negative, so a signed code is
//! split into `x⁺ = max(x, 0)` and `x⁻ = max(−x, 0)`, each scaled to unit
//! peak and exposed separately; the two noisy exposures are recombined as
//! `s⁺y⁺ − s⁻y⁻`.

mod budget;
mod noise;

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_arg, Error, Result};
use crate::hsi::{HsiCube, SpatialImage, SpectralProfile};

pub use budget::{budget, budget_from_counts, Budget};
pub use noise::{NoiseModel, POISSON_GAUSSIAN_SWITCH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementKind {
    /// Spatially coded measurement of a spectrum (`Xᵀ x̃`), `N_λ` samples.
    Spectral,
    /// Spectrally coded measurement of an image (`X x`), `N_x N_y` samples.
    Spatial,
}

impl fmt::Display for MeasurementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeasurementKind::Spectral => "spectral",
            MeasurementKind::Spatial => "spatial",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub index: usize,
    pub kind: MeasurementKind,
    /// FNV-1a over the code's f64 bit patterns.
    pub checksum: u64,
    /// Index of this record's first exposure in the overall sequence.
    pub first_exposure: usize,
    pub exposures: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeasurementLog {
    entries: Vec<MeasurementRecord>,
}

impl MeasurementLog {
    pub fn entries(&self) -> &[MeasurementRecord] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of signed codes of `kind`.
    pub fn codes(&self, kind: MeasurementKind) -> usize {
        self.entries.iter().filter(|e| e.kind == kind).count()
    }

    /// Number of physical exposures of `kind`.
    pub fn exposures(&self, kind: MeasurementKind) -> usize {
        self.entries
            .iter()
            .filter(|e| e.kind == kind)
            .map(|e| e.exposures)
            .sum()
    }

    pub fn total_exposures(&self) -> usize {
        self.entries.iter().map(|e| e.exposures).sum()
    }

    fn push(&mut self, kind: MeasurementKind, checksum: u64, exposures: usize, seed: u64) {
        let first_exposure = self.total_exposures();
        self.entries.push(MeasurementRecord {
            index: self.entries.len(),
            kind,
            checksum,
            first_exposure,
            exposures,
            seed,
        });
    }

    /// CSV with header `index,kind,exposures,seed`.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut out = std::io::BufWriter::new(out);
        writeln!(out, "index,kind,exposures,seed")?;
        for e in &self.entries {
            writeln!(out, "{},{},{},{}", e.index, e.kind, e.exposures, e.seed)?;
        }
        out.flush()
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(f).map_err(|e| Error::io(path, e))
    }
}

fn checksum(code: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in code {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// Per-record noise seed; distinct records draw independent streams.
fn record_seed(base: u64, index: usize) -> u64 {
    base ^ (index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// A signed code split into non-negative parts `x⁺`, `x⁻` with their peaks.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitCode {
    pub positive: Option<(f64, Vec<f64>)>,
    pub negative: Option<(f64, Vec<f64>)>,
}

impl SplitCode {
    pub fn new(code: &[f64]) -> Result<Self> {
        ensure_arg!(code.iter().all(|v| v.is_finite()), "code has non-finite entries");
        let part = |sign: f64| {
            let v: Vec<f64> = code.iter().map(|c| (sign * c).max(0.0)).collect();
            let s = v.iter().copied().fold(0.0, f64::max);
            (s > 0.0).then_some((s, v))
        };
        let split = SplitCode {
            positive: part(1.0),
            negative: part(-1.0),
        };
        ensure_arg!(split.exposures() > 0, "code is identically zero");
        Ok(split)
    }

    pub fn exposures(&self) -> usize {
        self.positive.is_some() as usize + self.negative.is_some() as usize
    }
}

/// The coded spectrometer/imager pair looking at one scene.
#[derive(Debug, Clone)]
pub struct Instrument {
    scene: Arc<HsiCube>,
    noise: NoiseModel,
    log: MeasurementLog,
}

impl Instrument {
    pub fn new(scene: Arc<HsiCube>, noise: NoiseModel) -> Result<Self> {
        noise.validate()?;
        Ok(Instrument {
            scene,
            noise,
            log: MeasurementLog::default(),
        })
    }

    pub fn noiseless(scene: Arc<HsiCube>) -> Self {
        Instrument {
            scene,
            noise: NoiseModel::noiseless(),
            log: MeasurementLog::default(),
        }
    }

    pub fn scene(&self) -> &HsiCube {
        &self.scene
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn log(&self) -> &MeasurementLog {
        &self.log
    }

    pub fn take_log(&mut self) -> MeasurementLog {
        std::mem::take(&mut self.log)
    }

    fn measure(
        &mut self,
        kind: MeasurementKind,
        code: &[f64],
        apply: impl Fn(&HsiCube, &[f64]) -> Result<Vec<f64>>,
    ) -> Result<Vec<f64>> {
        let split = SplitCode::new(code)?;
        let seed = record_seed(self.noise.seed, self.log.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out: Option<Vec<f64>> = None;
        let noiseless = self.noise.is_noiseless();
        for (sign, part) in [(&1.0, &split.positive), (&-1.0, &split.negative)] {
            let Some((scale, raw)) = part else { continue };
            let (mut y, w) = if noiseless {
                // skip the unit-peak round trip so one-signed codes are bit-exact
                (apply(&self.scene, raw)?, *sign)
            } else {
                let unit: Vec<f64> = raw.iter().map(|v| v / scale).collect();
                let mut y = apply(&self.scene, &unit)?;
                self.noise.apply(&mut y, &mut rng);
                (y, sign * scale)
            };
            match out.as_mut() {
                None if w == 1.0 => out = Some(std::mem::take(&mut y)),
                None => out = Some(y.into_iter().map(|v| w * v).collect()),
                Some(acc) => acc.iter_mut().zip(&y).for_each(|(a, v)| *a += w * v),
            }
        }
        self.log.push(kind, checksum(code), split.exposures(), seed);
        Ok(out.expect("split has at least one part"))
    }

    /// Spectrally coded image `X x` (two exposures for a signed code).
    pub fn measure_image(&mut self, code: &SpectralProfile) -> Result<SpatialImage> {
        let values = self.measure_image_raw(&code.values)?;
        SpatialImage::new(self.scene.nx(), self.scene.ny(), values)
    }

    /// Spatially coded spectrum `Xᵀ x̃` (two exposures for a signed code).
    pub fn measure_spectrum(&mut self, code: &SpatialImage) -> Result<SpectralProfile> {
        ensure_arg!(
            code.nx == self.scene.nx() && code.ny == self.scene.ny(),
            "spatial code is {}×{}, scene is {}×{}",
            code.nx,
            code.ny,
            self.scene.nx(),
            self.scene.ny()
        );
        let values = self.measure_spectrum_raw(&code.values)?;
        SpectralProfile::new(values, self.scene.wavelengths().clone())
    }

    pub fn measure_image_raw(&mut self, code: &[f64]) -> Result<Vec<f64>> {
        self.measure(MeasurementKind::Spatial, code, |c, x| c.matvec(x))
    }

    pub fn measure_spectrum_raw(&mut self, code: &[f64]) -> Result<Vec<f64>> {
        self.measure(MeasurementKind::Spectral, code, |c, x| c.rmatvec(x))
    }
}
