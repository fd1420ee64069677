use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_arg, Result};

/// Photon counts above which shot noise is drawn from the Gaussian limit.
pub const POISSON_GAUSSIAN_SWITCH: f64 = 100.0;

/// Sensor noise applied independently to every exposure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Full-scale-to-readout-σ ratio in dB; `None` disables readout noise.
    pub readout_snr_db: Option<f64>,
    /// ADC depth; `None` disables quantization and clipping.
    pub quant_bits: Option<u32>,
    pub photon_noise: bool,
    /// Photon count that reaches full scale.
    pub photons_at_full_scale: f64,
    /// Saturation level; `None` sets it per exposure to the noiseless peak,
    /// as an auto-exposed camera would.
    pub full_scale: Option<f64>,
    pub seed: u64,
}

impl Default for NoiseModel {
    /// 60 dB readout, photon noise, 12-bit quantization.
    fn default() -> Self {
        NoiseModel {
            readout_snr_db: Some(60.0),
            quant_bits: Some(12),
            photon_noise: true,
            photons_at_full_scale: 50_000.0,
            full_scale: None,
            seed: 0,
        }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        NoiseModel {
            readout_snr_db: None,
            quant_bits: None,
            photon_noise: false,
            ..NoiseModel::default()
        }
    }

    pub fn readout_only(snr_db: f64, seed: u64) -> Self {
        NoiseModel {
            readout_snr_db: Some(snr_db),
            photon_noise: false,
            seed,
            ..NoiseModel::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn is_noiseless(&self) -> bool {
        self.readout_snr_db.is_none() && self.quant_bits.is_none() && !self.photon_noise
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(db) = self.readout_snr_db {
            ensure_arg!(db > 0.0 && db.is_finite(), "readout_snr_db must be positive, got {db}");
        }
        if let Some(b) = self.quant_bits {
            ensure_arg!((4..=16).contains(&b), "quant_bits must lie in [4, 16], got {b}");
        }
        ensure_arg!(
            self.photons_at_full_scale > 0.0 && self.photons_at_full_scale.is_finite(),
            "photons_at_full_scale must be positive"
        );
        if let Some(fs) = self.full_scale {
            ensure_arg!(fs > 0.0 && fs.is_finite(), "full_scale must be positive");
        }
        Ok(())
    }

    /// Corrupts one non-negative exposure in place.
    pub fn apply<R: Rng + ?Sized>(&self, signal: &mut [f64], rng: &mut R) {
        if self.is_noiseless() {
            return;
        }
        let fs = self.full_scale.unwrap_or_else(|| {
            let peak = signal.iter().copied().fold(0.0, f64::max);
            if peak > 0.0 {
                peak
            } else {
                1.0
            }
        });
        let sigma = self.readout_snr_db.map(|db| fs / 10f64.powf(db / 20.0));
        let gain = self.photons_at_full_scale / fs;
        let levels = self.quant_bits.map(|b| (1u64 << b) as f64);

        for v in signal.iter_mut() {
            let mut s = v.max(0.0);
            if self.photon_noise {
                let counts = s * gain;
                let noisy = if counts > POISSON_GAUSSIAN_SWITCH {
                    counts + counts.sqrt() * rng.sample::<f64, _>(StandardNormal)
                } else if counts > 0.0 {
                    Poisson::new(counts).expect("positive mean").sample(rng)
                } else {
                    0.0
                };
                s = noisy / gain;
            }
            if let Some(sigma) = sigma {
                s += sigma * rng.sample::<f64, _>(StandardNormal);
            }
            if let Some(levels) = levels {
                // mid-rise uniform quantizer over [0, fs]
                let q = fs / levels;
                let idx = (s / q).floor().clamp(0.0, levels - 1.0);
                s = (idx + 0.5) * q;
            }
            *v = s;
        }
    }
}
