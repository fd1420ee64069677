use crate::error::{ensure_arg, Result};
use crate::fourier::Convolver1d;
use crate::hsi::SpectralProfile;
use crate::linalg::{axpy, dot, norm2};

/// Outcome of a conjugate-gradient solve.
#[derive(Debug, Clone, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    /// `‖b − A x‖ / ‖b‖` at exit.
    pub relative_residual: f64,
    pub converged: bool,
}

/// Conjugate gradients for a symmetric positive (semi)definite `apply`.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, CgReport) {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    if bnorm == 0.0 {
        return (
            vec![0.0; n],
            CgReport {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
            },
        );
    }
    let ax = apply(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut it = 0;
    while it < max_iter && rr.sqrt() > tol * bnorm {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let step = rr / pap;
        axpy(step, &p, &mut x);
        axpy(-step, &ap, &mut r);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rr = rr_new;
        it += 1;
    }
    // recompute the true residual rather than trusting the recursion
    let ax = apply(&x);
    let res = b.iter().zip(&ax).map(|(b, a)| (b - a).powi(2)).sum::<f64>().sqrt() / bnorm;
    (
        x,
        CgReport {
            iterations: it,
            relative_residual: res,
            converged: res <= tol,
        },
    )
}

/// `∇ᵀ∇ v` for the forward difference with replicate boundary
/// (`(∇v)_i = v_{i+1} − v_i`, zero at the last sample).
pub fn difference_normal(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let d = v[i + 1] - v[i];
        out[i] -= d;
        out[i + 1] += d;
    }
    out
}

/// Minimizes `½‖y − a∗v‖² + η‖∇v‖²` by conjugate gradients on
/// `(AᵀA + 2η∇ᵀ∇) v = Aᵀy`, with `A` the "same"-size linear convolution.
pub fn l2_smooth_deconv_raw(
    y: &[f64],
    kernel: &[f64],
    eta: f64,
    cg_tol: f64,
    cg_maxiter: usize,
) -> Result<(Vec<f64>, CgReport)> {
    ensure_arg!(!y.is_empty() && !kernel.is_empty(), "empty signal or kernel");
    ensure_arg!(kernel.iter().any(|v| *v != 0.0), "all-zero kernel");
    ensure_arg!(eta >= 0.0 && eta.is_finite(), "eta must be non-negative, got {eta}");
    ensure_arg!(cg_tol > 0.0 && cg_maxiter >= 1, "cg_tol must be positive and cg_maxiter ≥ 1");
    let conv = Convolver1d::new(kernel, y.len());
    let normal = |v: &[f64]| {
        let mut out = conv.same_adjoint(&conv.same(v));
        axpy(2.0 * eta, &difference_normal(v), &mut out);
        out
    };
    let rhs = conv.same_adjoint(y);
    Ok(conjugate_gradient(normal, &rhs, None, cg_tol, cg_maxiter))
}

pub fn l2_smooth_deconv(
    y: &SpectralProfile,
    kernel: &[f64],
    eta: f64,
    cg_tol: f64,
    cg_maxiter: usize,
) -> Result<SpectralProfile> {
    let (v, _) = l2_smooth_deconv_raw(&y.values, kernel, eta, cg_tol, cg_maxiter)?;
    SpectralProfile::new(v, y.wavelengths.clone())
}
