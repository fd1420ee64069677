//! Small dense helpers shared by the Krylov, baseline and metric code.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn scale(a: &mut [f64], s: f64) {
    a.iter_mut().for_each(|x| *x *= s);
}

/// `y += s * x`
pub fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

/// Modified Gram–Schmidt sweep of `v` against an orthonormal `basis`,
/// repeated `passes` times.
pub fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>], passes: usize) {
    for _ in 0..passes {
        for q in basis {
            let c = dot(q, v);
            axpy(-c, q, v);
        }
    }
}

/// Thin SVD with singular values sorted in descending order.
pub struct Svd {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub fn svd(m: &DMatrix<f64>) -> Result<Svd> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::invalid("svd of an empty matrix"));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("svd of a matrix with non-finite entries".into()));
    }
    // one-sided Jacobi works on columns; factor the transpose of wide inputs
    let wide = m.nrows() < m.ncols();
    let work = if wide { m.transpose() } else { m.clone() };
    let (u, sigma, v) = jacobi_svd(&work)?;
    Ok(if wide {
        Svd { u: v, sigma, v: u }
    } else {
        Svd { u, sigma, v }
    })
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD of a tall matrix. Rotates column pairs
/// until all are orthogonal to working precision; the column norms are the
/// singular values. Accurate on rank-deficient input, where some LAPACK-free
/// bidiagonal QR implementations lose digits.
fn jacobi_svd(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let (m, n) = (a.nrows(), a.ncols());
    let mut cols: Vec<Vec<f64>> = a.column_iter().map(|c| c.iter().copied().collect()).collect();
    let mut vcols: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let tol = f64::EPSILON * (m as f64).sqrt();
    // columns at roundoff level relative to the whole matrix count as null
    let fro2: f64 = cols.iter().map(|c| dot(c, c)).sum();
    let null2 = (f64::EPSILON * f64::EPSILON) * fro2;
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&cols[p], &cols[q]);
                    (dot(cp, cp), dot(cq, cq), dot(cp, cq))
                };
                if gamma == 0.0 || alpha.min(beta) <= null2 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let rotate = |x: &mut Vec<Vec<f64>>| {
                    let (lo, hi) = x.split_at_mut(q);
                    for (xp, xq) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                        let (a, b) = (*xp, *xq);
                        *xp = c * a - s * b;
                        *xq = s * a + c * b;
                    }
                };
                rotate(&mut cols);
                rotate(&mut vcols);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical("Jacobi SVD did not converge".into()));
    }

    let norms: Vec<f64> = cols.iter().map(|c| norm2(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();

    // normalize; exactly null columns get an orthonormal completion
    let mut ucols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for &j in &order {
        if norms[j] > 0.0 {
            ucols.push(cols[j].iter().map(|x| x / norms[j]).collect());
        } else {
            ucols.push(Vec::new());
        }
    }
    let mut next_e = 0;
    for j in 0..n {
        if !ucols[j].is_empty() {
            continue;
        }
        loop {
            let mut e = vec![0.0; m];
            e[next_e % m] = 1.0;
            next_e += 1;
            let basis: Vec<Vec<f64>> = ucols.iter().filter(|c| !c.is_empty()).cloned().collect();
            orthogonalize(&mut e, &basis, 2);
            let nrm = norm2(&e);
            if nrm > 1e-8 {
                ucols[j] = e.into_iter().map(|x| x / nrm).collect();
                break;
            }
            if next_e > 2 * m + n {
                return Err(Error::Numerical("could not complete singular basis".into()));
            }
        }
    }
    let u = DMatrix::from_fn(m, n, |i, j| ucols[j][i]);
    let v = DMatrix::from_fn(n, n, |i, j| vcols[order[j]][i]);
    Ok((u, sigma, v))
}

impl Svd {
    /// `U_k Σ_k V_kᵀ`
    pub fn truncate(&self, k: usize) -> DMatrix<f64> {
        let k = k.min(self.sigma.len());
        let mut us = self.u.columns(0, k).into_owned();
        for (j, s) in self.sigma.iter().take(k).enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.columns(0, k).transpose()
    }
}

/// Moore–Penrose pseudo-inverse, dropping singular values below
/// `rel_tol * σ₁`. Returns the inverse and the number of dropped values.
pub fn pinv(m: &DMatrix<f64>, rel_tol: f64) -> Result<(DMatrix<f64>, usize)> {
    let d = svd(m)?;
    let cutoff = rel_tol * d.sigma.first().copied().unwrap_or(0.0);
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    let mut dropped = 0;
    for (j, &s) in d.sigma.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            dropped += 1;
            continue;
        }
        let vj = d.v.column(j);
        let uj = d.u.column(j);
        out += (vj * uj.transpose()) / s;
    }
    Ok((out, dropped))
}

/// Singular values in descending order. Very tall inputs are reduced to
/// their triangular QR factor first, which has the same singular values.
pub fn singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if m.nrows() > 2 * m.ncols() && m.ncols() > 0 {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("svd of a matrix with non-finite entries".into()));
        }
        let r = m.clone().qr().r();
        return Ok(svd(&r)?.sigma);
    }
    Ok(svd(m)?.sigma)
}

/// Largest principal angle (radians) between the column spaces of two
/// matrices with orthonormal columns.
pub fn max_principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let m = a.transpose() * b;
    let d = svd(&m)?;
    let smallest = d.sigma.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(smallest.clamp(-1.0, 1.0).acos())
}
