use std::f64::consts::PI;

use super::{bit_width_nm, OpticalParams};
use crate::aperture::ApertureCode;
use crate::error::{ensure_arg, Result};
use crate::exec::Execution;
use crate::fourier::{Convolver1d, Convolver2d};
use crate::hsi::{CubeGeometry, HsiCube, SpectralProfile};

/// Samples below this fraction of the PSF peak are dropped from the support.
pub const PSF_TRUNCATION: f64 = 1e-6;
/// Support cap per axis, in lobes of the single-bit (or slit-height) sinc²
/// envelope. The sinc² tails never fall below [`PSF_TRUNCATION`] within a
/// practical window, so in practice this cap decides the kernel size.
pub const PSF_ENVELOPE_LOBES: usize = 2;

/// Unit-sum, non-negative separable PSF on an `kx × ky` pixel grid centred at
/// `(kx / 2, ky / 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialPsf {
    pub kx: usize,
    pub ky: usize,
    pub values: Vec<f64>,
}

impl SpatialPsf {
    pub fn impulse() -> Self {
        SpatialPsf {
            kx: 1,
            ky: 1,
            values: vec![1.0],
        }
    }

    pub fn from_separable(px: &[f64], py: &[f64]) -> Self {
        let mut values = Vec::with_capacity(px.len() * py.len());
        for b in py {
            for a in px {
                values.push(a * b);
            }
        }
        let s: f64 = values.iter().sum();
        values.iter_mut().for_each(|v| *v /= s);
        SpatialPsf {
            kx: px.len(),
            ky: py.len(),
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlurKernels {
    /// Unit-sum spectral kernel sampled on the cube's wavelength step.
    pub spectral: Vec<f64>,
    pub spatial: SpatialPsf,
    /// Wavelength step (nm) the spectral kernel was sampled at; `None` for
    /// the identity, which fits any grid.
    pub grid_step_nm: Option<f64>,
}

impl BlurKernels {
    pub fn identity() -> Self {
        BlurKernels {
            spectral: vec![1.0],
            spatial: SpatialPsf::impulse(),
            grid_step_nm: None,
        }
    }
}

fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-300 {
        1.0
    } else {
        (PI * t).sin() / (PI * t)
    }
}

fn uniform_step(wavelengths: &[f64]) -> Result<f64> {
    ensure_arg!(wavelengths.len() >= 2, "need at least two wavelengths to define a grid step");
    let step = (wavelengths[wavelengths.len() - 1] - wavelengths[0]) / (wavelengths.len() - 1) as f64;
    let uniform = wavelengths
        .windows(2)
        .all(|w| ((w[1] - w[0]) - step).abs() <= 1e-6 * step);
    ensure_arg!(uniform, "wavelength grid must be uniformly spaced");
    Ok(step)
}

/// The code mirrored (`a(−x)`) and box-resampled onto a grid of step
/// `step_nm`, each bit spanning `bit_nm`. Bin `j` receives the total code
/// area overlapping `[j·step, (j+1)·step)`, so mass is preserved before the
/// final unit-sum normalization.
pub fn spectral_kernel(code: &ApertureCode, bit_nm: f64, step_nm: f64) -> Vec<f64> {
    let n = code.len();
    let span = n as f64 * bit_nm;
    let bins = ((span / step_nm) - 1e-9).ceil().max(1.0) as usize;
    let mut k = vec![0.0; bins];
    for (i, &bit) in code.bits.iter().rev().enumerate() {
        if bit == 0 {
            continue;
        }
        let (lo, hi) = (i as f64 * bit_nm, (i + 1) as f64 * bit_nm);
        let first = (lo / step_nm).floor() as usize;
        let last = ((hi / step_nm).ceil() as usize).min(bins);
        for (j, kj) in k.iter_mut().enumerate().take(last).skip(first) {
            let (a, b) = (j as f64 * step_nm, (j + 1) as f64 * step_nm);
            let overlap = hi.min(b) - lo.max(a);
            if overlap > 0.0 {
                *kj += overlap;
            }
        }
    }
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// `|Σ a_n e^{−2πi u nΔ}|²`, the discrete factor of the code's PSD.
pub fn code_power(code: &ApertureCode, u_per_um: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (n, &b) in code.bits.iter().enumerate() {
        if b == 1 {
            let t = -2.0 * PI * u_per_um * n as f64 * code.pitch_um;
            re += t.cos();
            im += t.sin();
        }
    }
    re * re + im * im
}

fn axis_profile(envelope_width_um: f64, f_lambda: f64, pixel_um: f64, value: impl Fn(f64) -> f64) -> Vec<f64> {
    // first envelope zero, in pixels
    let zero_px = (f_lambda / (envelope_width_um * pixel_um)).ceil().max(1.0) as usize;
    let cap = PSF_ENVELOPE_LOBES * zero_px;
    let samples: Vec<f64> = (0..=cap).map(|i| value(i as f64 * pixel_um / f_lambda)).collect();
    let peak = samples[0];
    let half = samples
        .iter()
        .rposition(|v| *v >= PSF_TRUNCATION * peak)
        .unwrap_or(0);
    let mut out: Vec<f64> = samples[1..=half].iter().rev().copied().collect();
    out.extend_from_slice(&samples[..=half]);
    out
}

/// Spatial PSF of `code · rect_H(y)` at wavelength `lambda_nm`:
/// `|A(x/(λf), y/(λf))|²` sampled at pixel centres, truncated and normalized.
pub fn spatial_psf_at(code: &ApertureCode, params: &OpticalParams, lambda_nm: f64) -> Result<SpatialPsf> {
    params.validate()?;
    ensure_arg!(lambda_nm > 0.0, "wavelength must be positive");
    ensure_arg!(code.throughput() > 0, "blur kernel needs at least one open bit");
    let f_lambda = params.focal_um() * lambda_nm * 1e-3;
    let pitch = code.pitch_um;
    let height_um = code.height_mm * 1e3;
    let px = axis_profile(pitch, f_lambda, params.pixel_um, |u| {
        let env = sinc(pitch * u);
        env * env * code_power(code, u)
    });
    let py = axis_profile(height_um, f_lambda, params.pixel_um, |v| {
        let s = sinc(height_um * v);
        s * s
    });
    Ok(SpatialPsf::from_separable(&px, &py))
}

/// Spectral and spatial kernels of `code` for a cube on `geom`'s grid, with
/// the spatial PSF evaluated at the design wavelength.
pub fn make_kernels(code: &ApertureCode, params: &OpticalParams, geom: &CubeGeometry) -> Result<BlurKernels> {
    params.validate()?;
    ensure_arg!(code.throughput() > 0, "blur kernel needs at least one open bit");
    let step = uniform_step(&geom.wavelengths)?;
    let bit_nm = bit_width_nm(params, code.pitch_um)?;
    let span = geom.wavelengths[geom.nl() - 1] - geom.wavelengths[0];
    ensure_arg!(
        span > bit_nm,
        "wavelength grid spans {span} nm, less than one code bit ({bit_nm} nm)"
    );
    Ok(BlurKernels {
        spectral: spectral_kernel(code, bit_nm, step),
        spatial: spatial_psf_at(code, params, params.design_lambda_nm)?,
        grid_step_nm: Some(step),
    })
}

/// Scales band `λ` by `(λ_ref/λ)²`, the rainbow-plane radiometric falloff.
/// Off by default in the simulators; the camera response is taken as flat.
pub fn apply_radiometric_falloff(cube: &HsiCube, reference_nm: f64) -> Result<HsiCube> {
    ensure_arg!(reference_nm > 0.0, "reference wavelength must be positive");
    let mut out = cube.clone();
    for (j, &lambda) in cube.wavelengths().iter().enumerate() {
        let g = (reference_nm / lambda).powi(2);
        out.band_mut(j).iter_mut().for_each(|v| *v *= g);
    }
    Ok(out)
}

pub fn blur_spectrum(profile: &SpectralProfile, kernel: &[f64]) -> Result<SpectralProfile> {
    ensure_arg!(!kernel.is_empty(), "empty spectral kernel");
    let conv = Convolver1d::new(kernel, profile.len());
    SpectralProfile::new(conv.same(&profile.values), profile.wavelengths.clone())
}

pub fn blur_cube(cube: &HsiCube, kernels: &BlurKernels) -> Result<HsiCube> {
    blur_cube_with(cube, kernels, Execution::default())
}

/// Per-band spatial blur followed by per-pixel spectral blur, both linear
/// ("same" size, zero padded).
pub fn blur_cube_with(cube: &HsiCube, kernels: &BlurKernels, exec: Execution) -> Result<HsiCube> {
    if let Some(step) = kernels.grid_step_nm {
        let cube_step = uniform_step(cube.wavelengths())?;
        ensure_arg!(
            (cube_step - step).abs() <= 1e-6 * step,
            "kernels were built for a {step} nm grid, cube uses {cube_step} nm"
        );
    }
    let (nx, ny, nl, npix) = (cube.nx(), cube.ny(), cube.nl(), cube.npix());
    let mut data = cube.data().to_vec();

    let psf = &kernels.spatial;
    if psf.values.len() > 1 {
        let conv = Convolver2d::new(&psf.values, psf.kx, psf.ky, nx, ny);
        exec.for_each_chunk_mut(&mut data, npix, |_, band| {
            let out = conv.same(band);
            band.copy_from_slice(&out);
        });
    }

    if kernels.spectral.len() > 1 {
        let conv = Convolver1d::new(&kernels.spectral, nl);
        // pixel-major copy so each spectrum is contiguous
        let mut spectra = vec![0.0; data.len()];
        for j in 0..nl {
            for p in 0..npix {
                spectra[p * nl + j] = data[j * npix + p];
            }
        }
        exec.for_each_chunk_mut(&mut spectra, nl, |_, s| {
            let out = conv.same(s);
            s.copy_from_slice(&out);
        });
        for j in 0..nl {
            for p in 0..npix {
                data[j * npix + p] = spectra[p * nl + j];
            }
        }
    }
    HsiCube::from_estimate(cube.geometry().clone(), data)
}
