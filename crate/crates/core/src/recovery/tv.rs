use crate::error::{ensure_arg, Result};
use crate::fourier::Convolver2d;
use crate::hsi::SpatialImage;
use crate::optics::SpatialPsf;

/// Dual iterations of each TV proximal step.
pub const TV_PROX_ITERS: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct TvReport {
    /// Objective after every outer iteration (index 0 is the starting point).
    pub objective: Vec<f64>,
}

struct Grad {
    nx: usize,
    ny: usize,
}

impl Grad {
    /// Forward differences, zero across the far edges.
    fn apply(&self, u: &[f64], gx: &mut [f64], gy: &mut [f64]) {
        let (nx, ny) = (self.nx, self.ny);
        for y in 0..ny {
            for x in 0..nx {
                let i = x + nx * y;
                gx[i] = if x + 1 < nx { u[i + 1] - u[i] } else { 0.0 };
                gy[i] = if y + 1 < ny { u[i + nx] - u[i] } else { 0.0 };
            }
        }
    }

    /// `div = −∇ᵀ`.
    fn div(&self, px: &[f64], py: &[f64], out: &mut [f64]) {
        let (nx, ny) = (self.nx, self.ny);
        for y in 0..ny {
            for x in 0..nx {
                let i = x + nx * y;
                let mut d = 0.0;
                if x + 1 < nx {
                    d += px[i];
                }
                if x > 0 {
                    d -= px[i - 1];
                }
                if y + 1 < ny {
                    d += py[i];
                }
                if y > 0 {
                    d -= py[i - nx];
                }
                out[i] = d;
            }
        }
    }

    fn tv(&self, u: &[f64]) -> f64 {
        let mut gx = vec![0.0; u.len()];
        let mut gy = vec![0.0; u.len()];
        self.apply(u, &mut gx, &mut gy);
        gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).sum()
    }
}

/// Isotropic TV denoising `argmin ½‖u − g‖² + λ TV(u)` by projected dual
/// ascent, warm-started from `p`.
fn tv_prox(grad: &Grad, g: &[f64], lambda: f64, px: &mut [f64], py: &mut [f64]) -> Vec<f64> {
    let n = g.len();
    let tau = 0.125;
    let mut d = vec![0.0; n];
    let (mut gx, mut gy) = (vec![0.0; n], vec![0.0; n]);
    for _ in 0..TV_PROX_ITERS {
        grad.div(px, py, &mut d);
        for (di, gi) in d.iter_mut().zip(g) {
            *di -= gi / lambda;
        }
        grad.apply(&d, &mut gx, &mut gy);
        for i in 0..n {
            let (a, b) = (px[i] + tau * gx[i], py[i] + tau * gy[i]);
            let m = a.hypot(b).max(1.0);
            px[i] = a / m;
            py[i] = b / m;
        }
    }
    grad.div(px, py, &mut d);
    g.iter().zip(&d).map(|(g, d)| g - lambda * d).collect()
}

/// Minimizes `½‖y − p∗x‖² + weight·TV(x)` with a fixed number of monotone
/// FISTA iterations (a candidate is accepted only if it lowers the
/// objective), starting from `y`. `p∗` is the "same"-size zero-padded
/// convolution; step size is `1/(Σ|p|)²`.
pub fn tv_deconv_2d_raw(
    y: &[f64],
    nx: usize,
    ny: usize,
    psf: &SpatialPsf,
    weight: f64,
    iters: usize,
) -> Result<(Vec<f64>, TvReport)> {
    ensure_arg!(y.len() == nx * ny && nx > 0 && ny > 0, "image buffer does not match {nx}×{ny}");
    ensure_arg!(psf.values.len() == psf.kx * psf.ky, "psf buffer does not match its size");
    ensure_arg!(weight >= 0.0 && weight.is_finite(), "TV weight must be non-negative");
    ensure_arg!(iters >= 1, "need at least one iteration");
    let lip = psf.values.iter().map(|v| v.abs()).sum::<f64>().powi(2);
    ensure_arg!(lip > 0.0, "all-zero psf");
    let conv = Convolver2d::new(&psf.values, psf.kx, psf.ky, nx, ny);
    let grad = Grad { nx, ny };
    let objective = |x: &[f64]| {
        let r: f64 = conv.same(x).iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
        0.5 * r + if weight > 0.0 { weight * grad.tv(x) } else { 0.0 }
    };

    let n = nx * ny;
    let mut x = y.to_vec();
    let mut fx = objective(&x);
    let mut history = vec![fx];
    let mut z_in = x.clone();
    let mut t = 1.0f64;
    let (mut px, mut py) = (vec![0.0; n], vec![0.0; n]);
    for _ in 0..iters {
        let resid: Vec<f64> = conv.same(&z_in).iter().zip(y).map(|(a, b)| a - b).collect();
        let g_step = conv.same_adjoint(&resid);
        let g: Vec<f64> = z_in.iter().zip(&g_step).map(|(z, g)| z - g / lip).collect();
        let cand = if weight > 0.0 {
            tv_prox(&grad, &g, weight / lip, &mut px, &mut py)
        } else {
            g
        };
        let fc = objective(&cand);
        let x_prev = x.clone();
        if fc <= fx {
            x = cand.clone();
            fx = fc;
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        for i in 0..n {
            z_in[i] = x[i] + (t / t_next) * (cand[i] - x[i]) + ((t - 1.0) / t_next) * (x[i] - x_prev[i]);
        }
        t = t_next;
        history.push(fx);
    }
    Ok((x, TvReport { objective: history }))
}

pub fn tv_deconv_2d(img: &SpatialImage, psf: &SpatialPsf, weight: f64, iters: usize) -> Result<SpatialImage> {
    let (v, _) = tv_deconv_2d_raw(&img.values, img.nx, img.ny, psf, weight, iters)?;
    SpatialImage::new(img.nx, img.ny, v)
}

/// Isotropic total variation with forward differences.
pub fn total_variation(img: &[f64], nx: usize, ny: usize) -> f64 {
    Grad { nx, ny }.tv(img)
}
