//! Physical parameters of the coded-aperture relay and the blurs it induces.
//!
//! Units: focal length in mm, groove density in grooves/mm, pixel pitch and
//! code pitch in µm, wavelengths in nm. The product `f·v₀` is dimensionless
//! and maps wavelength to lateral position on the rainbow plane.

mod kernels;
mod wave;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_arg, Error, Result};

pub use kernels::{
    apply_radiometric_falloff, blur_cube, blur_cube_with, blur_spectrum, make_kernels, spatial_psf_at, spectral_kernel,
    BlurKernels, SpatialPsf, PSF_ENVELOPE_LOBES, PSF_TRUNCATION,
};
pub use wave::{closed_form_rainbow, wave_oracle_rainbow, WaveOracleOptions, WaveProfile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpticalParams {
    pub focal_mm: f64,
    pub groove_per_mm: f64,
    pub pixel_um: f64,
    pub design_lambda_nm: f64,
}

impl Default for OpticalParams {
    /// The prototype relay: f = 100 mm, 300 grooves/mm, 5 µm pixels, λ₀ = 500 nm.
    fn default() -> Self {
        OpticalParams {
            focal_mm: 100.0,
            groove_per_mm: 300.0,
            pixel_um: 5.0,
            design_lambda_nm: 500.0,
        }
    }
}

impl OpticalParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("focal_mm", self.focal_mm),
            ("groove_per_mm", self.groove_per_mm),
            ("pixel_um", self.pixel_um),
            ("design_lambda_nm", self.design_lambda_nm),
        ] {
            ensure_arg!(v.is_finite() && v > 0.0, "{name} must be positive, got {v}");
        }
        Ok(())
    }

    pub fn focal_um(&self) -> f64 {
        self.focal_mm * 1e3
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let p: OpticalParams =
            serde_json::from_str(&text).map_err(|e| Error::format("optics", e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("params serialize");
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// `f·v₀`, the wavelength-to-position stretch.
pub fn spectral_stretch(params: &OpticalParams) -> Result<f64> {
    params.validate()?;
    Ok(params.focal_mm * params.groove_per_mm)
}

/// Rainbow-plane position (µm) of wavelength `lambda_nm`.
pub fn wavelength_to_position(params: &OpticalParams, lambda_nm: f64) -> Result<f64> {
    Ok(spectral_stretch(params)? * lambda_nm * 1e-3)
}

/// Width (nm) of one code bit once mapped onto the wavelength axis.
pub fn bit_width_nm(params: &OpticalParams, pitch_um: f64) -> Result<f64> {
    Ok(pitch_um / spectral_stretch(params)? * 1e3)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlurExtents {
    pub spectral_nm: f64,
    pub spatial_x_um: f64,
    pub spatial_y_um: f64,
}

/// Blur sizes produced by an open `width_um × height_um` rectangle.
pub fn blur_extents(params: &OpticalParams, width_um: f64, height_um: f64) -> Result<BlurExtents> {
    ensure_arg!(width_um > 0.0 && height_um > 0.0, "aperture sides must be positive");
    let stretch = spectral_stretch(params)?;
    let f_lambda = params.focal_um() * params.design_lambda_nm * 1e-3;
    Ok(BlurExtents {
        spectral_nm: width_um / stretch * 1e3,
        spatial_x_um: f_lambda / width_um,
        spatial_y_um: f_lambda / height_um,
    })
}
