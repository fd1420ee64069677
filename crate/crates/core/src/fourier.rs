//! FFT-backed linear convolution in one and two dimensions.
//!
//! All convolutions here are *linear*: inputs are zero-padded to the full
//! output length `n + m - 1` before transforming, so no circular wrap occurs.
//! "Same" mode crops the full result starting at `(m - 1) / 2`, which keeps
//! the output aligned with the input for odd and even kernels alike.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub type C64 = Complex64;

/// Offset of the "same" window inside the full convolution.
pub fn same_offset(kernel_len: usize) -> usize {
    (kernel_len.max(1) - 1) / 2
}

pub struct Plan1d {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    len: usize,
}

impl Plan1d {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Plan1d {
            fwd: planner.plan_fft_forward(len),
            inv: planner.plan_fft_inverse(len),
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn forward(&self, buf: &mut [C64]) {
        self.fwd.process(buf);
    }

    /// Inverse transform including the `1/len` normalization.
    pub fn inverse(&self, buf: &mut [C64]) {
        self.inv.process(buf);
        let s = 1.0 / self.len as f64;
        buf.iter_mut().for_each(|z| *z *= s);
    }

    pub fn forward_real(&self, x: &[f64]) -> Vec<C64> {
        let mut buf = vec![C64::new(0.0, 0.0); self.len];
        for (b, &v) in buf.iter_mut().zip(x) {
            b.re = v;
        }
        self.forward(&mut buf);
        buf
    }
}

/// Unnormalized `len`-point DFT of a real sequence (zero padded or truncated).
pub fn dft_real(x: &[f64], len: usize) -> Vec<C64> {
    Plan1d::new(len).forward_real(x)
}

/// Separable 2D transform on an x-fastest `w × h` buffer.
pub struct Plan2d {
    pub w: usize,
    pub h: usize,
    rows: Plan1d,
    cols: Plan1d,
}

impl Plan2d {
    pub fn new(w: usize, h: usize) -> Self {
        Plan2d {
            w,
            h,
            rows: Plan1d::new(w),
            cols: Plan1d::new(h),
        }
    }

    fn transform(&self, buf: &mut [C64], inverse: bool) {
        debug_assert_eq!(buf.len(), self.w * self.h);
        for row in buf.chunks_mut(self.w) {
            if inverse {
                self.rows.inverse(row);
            } else {
                self.rows.forward(row);
            }
        }
        let mut col = vec![C64::new(0.0, 0.0); self.h];
        for x in 0..self.w {
            for y in 0..self.h {
                col[y] = buf[x + self.w * y];
            }
            if inverse {
                self.cols.inverse(&mut col);
            } else {
                self.cols.forward(&mut col);
            }
            for y in 0..self.h {
                buf[x + self.w * y] = col[y];
            }
        }
    }

    pub fn forward(&self, buf: &mut [C64]) {
        self.transform(buf, false);
    }

    pub fn inverse(&self, buf: &mut [C64]) {
        self.transform(buf, true);
    }

    /// Embeds an `iw × ih` real image at the origin and transforms it.
    pub fn forward_real(&self, img: &[f64], iw: usize, ih: usize) -> Vec<C64> {
        let mut buf = vec![C64::new(0.0, 0.0); self.w * self.h];
        for y in 0..ih {
            for x in 0..iw {
                buf[x + self.w * y].re = img[x + iw * y];
            }
        }
        self.forward(&mut buf);
        buf
    }
}

/// Linear 1D convolution of length-`n` signals with a fixed kernel.
pub struct Convolver1d {
    n: usize,
    m: usize,
    plan: Plan1d,
    kernel_fft: Vec<C64>,
}

impl Convolver1d {
    pub fn new(kernel: &[f64], n: usize) -> Self {
        let m = kernel.len();
        let plan = Plan1d::new(n + m - 1);
        let kernel_fft = plan.forward_real(kernel);
        Convolver1d {
            n,
            m,
            plan,
            kernel_fft,
        }
    }

    pub fn full_len(&self) -> usize {
        self.n + self.m - 1
    }

    pub fn kernel_fft(&self) -> &[C64] {
        &self.kernel_fft
    }

    pub fn plan(&self) -> &Plan1d {
        &self.plan
    }

    pub fn full(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        let mut buf = self.plan.forward_real(x);
        for (b, k) in buf.iter_mut().zip(&self.kernel_fft) {
            *b *= k;
        }
        self.plan.inverse(&mut buf);
        buf.iter().map(|z| z.re).collect()
    }

    pub fn same(&self, x: &[f64]) -> Vec<f64> {
        let off = same_offset(self.m);
        self.full(x)[off..off + self.n].to_vec()
    }

    /// Adjoint of [`Convolver1d::same`]: correlation with the kernel.
    pub fn same_adjoint(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.n);
        let off = same_offset(self.m);
        let mut buf = vec![C64::new(0.0, 0.0); self.full_len()];
        for (i, &v) in y.iter().enumerate() {
            buf[off + i].re = v;
        }
        self.plan.forward(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_fft) {
            *b *= k.conj();
        }
        self.plan.inverse(&mut buf);
        buf[..self.n].iter().map(|z| z.re).collect()
    }
}

/// Linear 2D convolution of `nx × ny` images with a fixed `kx × ky` kernel.
pub struct Convolver2d {
    pub nx: usize,
    pub ny: usize,
    pub kx: usize,
    pub ky: usize,
    plan: Plan2d,
    kernel_fft: Vec<C64>,
}

impl Convolver2d {
    pub fn new(kernel: &[f64], kx: usize, ky: usize, nx: usize, ny: usize) -> Self {
        let plan = Plan2d::new(nx + kx - 1, ny + ky - 1);
        let kernel_fft = plan.forward_real(kernel, kx, ky);
        Convolver2d {
            nx,
            ny,
            kx,
            ky,
            plan,
            kernel_fft,
        }
    }

    pub fn full_dims(&self) -> (usize, usize) {
        (self.plan.w, self.plan.h)
    }

    pub fn kernel_fft(&self) -> &[C64] {
        &self.kernel_fft
    }

    pub fn plan(&self) -> &Plan2d {
        &self.plan
    }

    fn offsets(&self) -> (usize, usize) {
        (same_offset(self.kx), same_offset(self.ky))
    }

    pub fn same(&self, img: &[f64]) -> Vec<f64> {
        debug_assert_eq!(img.len(), self.nx * self.ny);
        let mut buf = self.plan.forward_real(img, self.nx, self.ny);
        for (b, k) in buf.iter_mut().zip(&self.kernel_fft) {
            *b *= k;
        }
        self.plan.inverse(&mut buf);
        let (ox, oy) = self.offsets();
        let w = self.plan.w;
        let mut out = vec![0.0; self.nx * self.ny];
        for y in 0..self.ny {
            for x in 0..self.nx {
                out[x + self.nx * y] = buf[(x + ox) + w * (y + oy)].re;
            }
        }
        out
    }

    pub fn same_adjoint(&self, img: &[f64]) -> Vec<f64> {
        debug_assert_eq!(img.len(), self.nx * self.ny);
        let (ox, oy) = self.offsets();
        let w = self.plan.w;
        let mut buf = vec![C64::new(0.0, 0.0); self.plan.w * self.plan.h];
        for y in 0..self.ny {
            for x in 0..self.nx {
                buf[(x + ox) + w * (y + oy)].re = img[x + self.nx * y];
            }
        }
        self.plan.forward(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_fft) {
            *b *= k.conj();
        }
        self.plan.inverse(&mut buf);
        let mut out = vec![0.0; self.nx * self.ny];
        for y in 0..self.ny {
            for x in 0..self.nx {
                out[x + self.nx * y] = buf[x + w * y].re;
            }
        }
        out
    }
}
