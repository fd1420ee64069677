//! Scalar-wave propagation through the coded relay, used as a test oracle for
//! the rainbow-plane blur.
//!
//! The chain is sampled on the pupil grid `dx = pitch / oversample`:
//! pupil field `i₂ = a(x)` for an on-axis point source, lens to the grating
//! plane (`i₃ = FT[i₂](u/λf) / jλf`), first-order grating phase that shifts
//! the next transform by `v₀λf`, and a second lens to the rainbow plane.

use std::f64::consts::PI;

use super::{wavelength_to_position, OpticalParams};
use crate::aperture::ApertureCode;
use crate::error::{ensure_arg, Result};
use crate::fourier::{Plan1d, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveOracleOptions {
    /// Pupil samples per code bit.
    pub oversample: usize,
    /// Transform length; `None` picks a power of two that holds the shifted code.
    pub fft_len: Option<usize>,
}

impl Default for WaveOracleOptions {
    fn default() -> Self {
        WaveOracleOptions {
            oversample: 4,
            fft_len: None,
        }
    }
}

/// Intensity cross-section on the rainbow plane.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveProfile {
    pub positions_um: Vec<f64>,
    pub intensity: Vec<f64>,
}

impl WaveProfile {
    pub fn peak_normalized(&self) -> Vec<f64> {
        let peak = self.intensity.iter().cloned().fold(0.0, f64::max);
        if peak == 0.0 {
            return self.intensity.clone();
        }
        self.intensity.iter().map(|v| v / peak).collect()
    }

    /// Intensity-weighted mean position.
    pub fn centroid_um(&self) -> f64 {
        let total: f64 = self.intensity.iter().sum();
        self.positions_um
            .iter()
            .zip(&self.intensity)
            .map(|(x, i)| x * i)
            .sum::<f64>()
            / total
    }
}

struct Grid {
    dx: f64,
    len: usize,
}

fn grid(code: &ApertureCode, params: &OpticalParams, lambda_nm: f64, opts: &WaveOracleOptions) -> Result<Grid> {
    params.validate()?;
    ensure_arg!(lambda_nm > 0.0 && lambda_nm.is_finite(), "wavelength must be positive");
    ensure_arg!(opts.oversample >= 1, "oversample must be at least 1");
    let dx = code.pitch_um / opts.oversample as f64;
    let shift = wavelength_to_position(params, lambda_nm)? / dx;
    let needed = shift.ceil() as usize + code.len() * opts.oversample + 1;
    let len = match opts.fft_len {
        Some(m) => {
            ensure_arg!(m >= needed, "fft_len {m} cannot hold the shifted code ({needed} samples)");
            m
        }
        None => needed.next_power_of_two() * 2,
    };
    Ok(Grid { dx, len })
}

/// Rainbow-plane intensity `|i₄|²` for a monochromatic on-axis point source,
/// computed by propagating the sampled pupil field through both lenses.
pub fn wave_oracle_rainbow(
    code: &ApertureCode,
    params: &OpticalParams,
    lambda_nm: f64,
    opts: &WaveOracleOptions,
) -> Result<WaveProfile> {
    let Grid { dx, len } = grid(code, params, lambda_nm, opts)?;
    let lambda_um = lambda_nm * 1e-3;
    let f_um = params.focal_um();
    // one-dimensional Fraunhofer factor 1/√(jλf)
    let lens = C64::from_polar(1.0 / (lambda_um * f_um).sqrt(), -PI / 4.0);

    let mut field = vec![C64::new(0.0, 0.0); len];
    for (n, &bit) in code.bits.iter().enumerate() {
        for s in 0..opts.oversample {
            field[n * opts.oversample + s] = C64::new(bit as f64, 0.0);
        }
    }

    let plan = Plan1d::new(len);
    // pupil → grating plane
    plan.forward(&mut field);
    for v in field.iter_mut() {
        *v *= lens * dx;
    }
    // first diffraction order: phase ramp that moves the next transform by v₀λf
    let shift = wavelength_to_position(params, lambda_nm)? / dx;
    for (k, v) in field.iter_mut().enumerate() {
        let t = 2.0 * PI * shift * k as f64 / len as f64;
        *v *= C64::new(t.cos(), t.sin());
    }
    // grating plane → rainbow plane; frequency step of the grating plane is λf/(len·dx)
    plan.forward(&mut field);
    let du = lambda_um * f_um / (len as f64 * dx);
    for v in field.iter_mut() {
        *v *= lens * du;
    }

    Ok(WaveProfile {
        positions_um: (0..len).map(|m| m as f64 * dx).collect(),
        intensity: field.iter().map(|v| v.norm_sqr()).collect(),
    })
}

/// Closed-form rainbow intensity `a²(−(x − v₀λf))` on the oracle's grid.
pub fn closed_form_rainbow(
    code: &ApertureCode,
    params: &OpticalParams,
    lambda_nm: f64,
    opts: &WaveOracleOptions,
) -> Result<WaveProfile> {
    let Grid { dx, len } = grid(code, params, lambda_nm, opts)?;
    let center = wavelength_to_position(params, lambda_nm)?;
    let positions_um: Vec<f64> = (0..len).map(|m| m as f64 * dx).collect();
    let intensity = positions_um
        .iter()
        .map(|&x| {
            let xi = center - x;
            // sample points sit on bit starts, so nudge off the boundary
            let bit = ((xi + 1e-9 * dx) / code.pitch_um).floor();
            if bit >= 0.0 && (bit as usize) < code.len() {
                let a = code.bits[bit as usize] as f64;
                a * a
            } else {
                0.0
            }
        })
        .collect();
    Ok(WaveProfile {
        positions_um,
        intensity,
    })
}
