//! Deconvolution of the measured singular vectors and reconstruction metrics.
//!
//! Blur acts on `X` as `A_s X A_λᵀ`, so a factorization `U Σ Vᵀ` of the
//! blurred matrix deblurs vector by vector: spatial vectors through the
//! spatial PSF, spectral vectors through the spectral kernel.

mod metrics;
mod smooth;
mod tv;
mod wiener;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_arg, Error, Result};
use crate::exec::Execution;
use crate::krylov::LowRankFactors;
use crate::optics::{BlurKernels, SpatialPsf};

pub use metrics::{
    align_sign, mean_pixel_sam, rsnr, sam, sam_aligned, save_metrics_csv, write_metrics_csv, MetricsRecord,
    RSNR_CAP_DB,
};
pub use smooth::{conjugate_gradient, difference_normal, l2_smooth_deconv, l2_smooth_deconv_raw, CgReport};
pub use tv::{total_variation, tv_deconv_2d, tv_deconv_2d_raw, TvReport, TV_PROX_ITERS};
pub use wiener::{wiener_deconv_1d, wiener_deconv_1d_raw, wiener_deconv_2d, wiener_deconv_2d_raw};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeconvMethod {
    /// Leave vectors as measured.
    None,
    Wiener,
    L2Smooth,
    Tv,
}

impl std::str::FromStr for DeconvMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(DeconvMethod::None),
            "wiener" => Ok(DeconvMethod::Wiener),
            "l2_smooth" | "l2" => Ok(DeconvMethod::L2Smooth),
            "tv" => Ok(DeconvMethod::Tv),
            other => Err(Error::invalid(format!("unknown deconvolution method `{other}`"))),
        }
    }
}

/// Deconvolution settings. TV and ℓ2 weights are relative to the peak
/// magnitude of the vector being deconvolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeconvConfig {
    pub method: DeconvMethod,
    pub wiener_nsr: f64,
    pub eta: f64,
    pub tv_weight: f64,
    pub tv_iters: usize,
    pub cg_tol: f64,
    pub cg_maxiter: usize,
}

impl Default for DeconvConfig {
    fn default() -> Self {
        DeconvConfig {
            method: DeconvMethod::Wiener,
            wiener_nsr: 1e-3,
            eta: 1.0,
            tv_weight: 1e-3,
            tv_iters: 100,
            cg_tol: 1e-10,
            cg_maxiter: 2000,
        }
    }
}

impl DeconvConfig {
    pub fn with_method(mut self, method: DeconvMethod) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("wiener_nsr", self.wiener_nsr),
            ("eta", self.eta),
            ("tv_weight", self.tv_weight),
        ] {
            ensure_arg!(v >= 0.0 && v.is_finite(), "{name} must be non-negative, got {v}");
        }
        ensure_arg!(self.cg_tol > 0.0, "cg_tol must be positive");
        ensure_arg!(self.tv_iters >= 1 && self.cg_maxiter >= 1, "iteration counts must be ≥ 1");
        Ok(())
    }
}

fn peak_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn is_impulse(kernel: &[f64]) -> bool {
    kernel.len() == 1 && kernel[0] == 1.0
}

/// Deconvolves one spectral vector. An impulse kernel means no blur, so the
/// vector is returned as is.
pub fn deconv_spectral(v: &[f64], kernel: &[f64], cfg: &DeconvConfig) -> Result<Vec<f64>> {
    if is_impulse(kernel) && cfg.method != DeconvMethod::Tv {
        return Ok(v.to_vec());
    }
    match cfg.method {
        DeconvMethod::None => Ok(v.to_vec()),
        DeconvMethod::Wiener => wiener_deconv_1d_raw(v, kernel, cfg.wiener_nsr),
        DeconvMethod::L2Smooth => {
            let s = peak_abs(v);
            if s == 0.0 {
                return Ok(v.to_vec());
            }
            let unit: Vec<f64> = v.iter().map(|x| x / s).collect();
            let (out, _) = l2_smooth_deconv_raw(&unit, kernel, cfg.eta, cfg.cg_tol, cfg.cg_maxiter)?;
            Ok(out.into_iter().map(|x| x * s).collect())
        }
        DeconvMethod::Tv => Err(Error::invalid("TV deconvolution is only available for images")),
    }
}

/// Deconvolves one `nx × ny` spatial vector.
pub fn deconv_spatial(u: &[f64], nx: usize, ny: usize, psf: &SpatialPsf, cfg: &DeconvConfig) -> Result<Vec<f64>> {
    if is_impulse(&psf.values) && cfg.method != DeconvMethod::L2Smooth {
        return Ok(u.to_vec());
    }
    match cfg.method {
        DeconvMethod::None => Ok(u.to_vec()),
        DeconvMethod::Wiener => wiener_deconv_2d_raw(u, nx, ny, &psf.values, psf.kx, psf.ky, cfg.wiener_nsr),
        DeconvMethod::Tv => {
            let s = peak_abs(u);
            if s == 0.0 {
                return Ok(u.to_vec());
            }
            let unit: Vec<f64> = u.iter().map(|x| x / s).collect();
            let (out, _) = tv_deconv_2d_raw(&unit, nx, ny, psf, cfg.tv_weight, cfg.tv_iters)?;
            Ok(out.into_iter().map(|x| x * s).collect())
        }
        DeconvMethod::L2Smooth => Err(Error::invalid("ℓ2-smooth deconvolution is only available for spectra")),
    }
}

/// Deconvolves every stored singular vector; singular values and the Krylov
/// bases are left as measured.
pub fn deconv_factors(
    factors: &LowRankFactors,
    kernels: &BlurKernels,
    spectral: &DeconvConfig,
    spatial: &DeconvConfig,
    exec: Execution,
) -> Result<LowRankFactors> {
    spectral.validate()?;
    spatial.validate()?;
    let geom = factors
        .geometry
        .as_ref()
        .ok_or_else(|| Error::invalid("factors carry no cube geometry"))?;
    let (nx, ny) = (geom.nx, geom.ny);
    let r = factors.stored_rank();
    let mut out = factors.clone();

    let specs: Vec<Result<Vec<f64>>> = exec.map_indices(r, |j| {
        deconv_spectral(&factors.spectral_singular(j), &kernels.spectral, spectral)
    });
    for (j, v) in specs.into_iter().enumerate() {
        out.v.column_mut(j).copy_from_slice(&v?);
    }
    let imgs: Vec<Result<Vec<f64>>> = exec.map_indices(r, |j| {
        deconv_spatial(&factors.spatial_singular(j), nx, ny, &kernels.spatial, spatial)
    });
    for (j, u) in imgs.into_iter().enumerate() {
        out.u.column_mut(j).copy_from_slice(&u?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
