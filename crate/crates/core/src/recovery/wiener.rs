use crate::error::{ensure_arg, Result};
use crate::hsi::{SpatialImage, SpectralProfile};
use crate::optics::SpatialPsf;
use crate::fourier::{same_offset, Convolver1d, Convolver2d, C64};

fn check_kernel(kernel: &[f64], nsr: f64) -> Result<()> {
    ensure_arg!(!kernel.is_empty(), "empty kernel");
    ensure_arg!(kernel.iter().all(|v| v.is_finite()), "kernel has non-finite entries");
    ensure_arg!(kernel.iter().any(|v| *v != 0.0), "all-zero kernel cannot be inverted");
    ensure_arg!(nsr >= 0.0 && nsr.is_finite(), "nsr must be non-negative, got {nsr}");
    Ok(())
}

fn wiener_gain(buf: &mut [C64], k: &[C64], nsr: f64) {
    for (b, k) in buf.iter_mut().zip(k) {
        let d = k.norm_sqr() + nsr;
        *b = if d > 0.0 { *b * k.conj() / d } else { C64::new(0.0, 0.0) };
    }
}

/// Wiener inverse of the "same"-size linear convolution with `kernel`.
///
/// `y` is placed at its offset inside the full linear-convolution support
/// (the clipped tails are taken as zero) and divided by the kernel spectrum
/// there, `X = Y·K̄ / (|K|² + nsr)`. With `nsr = 0` this inverts the blur
/// exactly for signals whose full blur fits inside the window.
pub fn wiener_deconv_1d_raw(y: &[f64], kernel: &[f64], nsr: f64) -> Result<Vec<f64>> {
    check_kernel(kernel, nsr)?;
    ensure_arg!(!y.is_empty(), "empty signal");
    let n = y.len();
    let conv = Convolver1d::new(kernel, n);
    let off = same_offset(kernel.len());
    let mut buf = vec![C64::new(0.0, 0.0); conv.full_len()];
    for (i, &v) in y.iter().enumerate() {
        buf[off + i].re = v;
    }
    conv.plan().forward(&mut buf);
    wiener_gain(&mut buf, conv.kernel_fft(), nsr);
    conv.plan().inverse(&mut buf);
    Ok(buf[..n].iter().map(|z| z.re).collect())
}

/// Two-dimensional analogue of [`wiener_deconv_1d`] for an `nx × ny` image
/// and a `kx × ky` kernel, both x-fastest.
pub fn wiener_deconv_2d_raw(
    img: &[f64],
    nx: usize,
    ny: usize,
    kernel: &[f64],
    kx: usize,
    ky: usize,
    nsr: f64,
) -> Result<Vec<f64>> {
    check_kernel(kernel, nsr)?;
    ensure_arg!(kernel.len() == kx * ky, "kernel buffer does not match {kx}×{ky}");
    ensure_arg!(img.len() == nx * ny && nx > 0 && ny > 0, "image buffer does not match {nx}×{ny}");
    let conv = Convolver2d::new(kernel, kx, ky, nx, ny);
    let (ox, oy) = (same_offset(kx), same_offset(ky));
    let w = conv.plan().w;
    let mut buf = vec![C64::new(0.0, 0.0); conv.plan().w * conv.plan().h];
    for y in 0..ny {
        for x in 0..nx {
            buf[(x + ox) + w * (y + oy)].re = img[x + nx * y];
        }
    }
    conv.plan().forward(&mut buf);
    wiener_gain(&mut buf, conv.kernel_fft(), nsr);
    conv.plan().inverse(&mut buf);
    let mut out = vec![0.0; nx * ny];
    for y in 0..ny {
        for x in 0..nx {
            out[x + nx * y] = buf[x + w * y].re;
        }
    }
    Ok(out)
}

pub fn wiener_deconv_1d(y: &SpectralProfile, kernel: &[f64], nsr: f64) -> Result<SpectralProfile> {
    SpectralProfile::new(wiener_deconv_1d_raw(&y.values, kernel, nsr)?, y.wavelengths.clone())
}

pub fn wiener_deconv_2d(img: &SpatialImage, psf: &SpatialPsf, nsr: f64) -> Result<SpatialImage> {
    let v = wiener_deconv_2d_raw(&img.values, img.nx, img.ny, &psf.values, psf.kx, psf.ky, nsr)?;
    SpatialImage::new(img.nx, img.ny, v)
}
