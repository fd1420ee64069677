use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure_arg, Error, Result};
use crate::hsi::{CubeGeometry, HsiCube};
use crate::krylov::MatVecOperator;
use crate::linalg::{pinv, svd};

/// Relative cutoff of the pseudo-inverse of the sketch core.
pub const NYSTROM_PINV_TOL: f64 = 1e-10;

/// Random row and column sketches of `X` (`N_x N_y × N_λ`).
#[derive(Debug, Clone, PartialEq)]
pub struct SketchPair {
    /// `p × N_x N_y`
    pub s_row: DMatrix<f64>,
    /// `N_λ × p`
    pub s_col: DMatrix<f64>,
    /// `S_row X`, `p × N_λ`: spectra under `p` random spatial masks.
    pub y_row: DMatrix<f64>,
    /// `X S_col`, `N_x N_y × p`: images under `p` random spectral filters.
    pub y_col: DMatrix<f64>,
    pub seed: u64,
    pub geometry: Option<CubeGeometry>,
}

impl SketchPair {
    pub fn p(&self) -> usize {
        self.s_row.nrows()
    }
}

/// Gaussian sketch matrices with entries `N(0, 1)/√p`, drawn from `seed`
/// (`S_row` row by row, then `S_col` column by column).
pub fn sketch_matrices(npix: usize, nl: usize, p: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = 1.0 / (p as f64).sqrt();
    let rows: Vec<f64> = (0..p * npix).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect();
    let cols: Vec<f64> = (0..nl * p).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect();
    (
        DMatrix::from_row_slice(p, npix, &rows),
        DMatrix::from_column_slice(nl, p, &cols),
    )
}

/// Takes `p` spatially coded spectra and `p` spectrally coded images through `op`.
pub fn rowcol_acquire<O: MatVecOperator + ?Sized>(op: &mut O, p: usize, seed: u64) -> Result<SketchPair> {
    ensure_arg!(p >= 1, "sketch size p must be at least 1");
    let (npix, nl) = (op.nrows(), op.ncols());
    let (s_row, s_col) = sketch_matrices(npix, nl, p, seed);
    let mut y_row = DMatrix::zeros(p, nl);
    for i in 0..p {
        let mask: Vec<f64> = s_row.row(i).iter().copied().collect();
        let spec = op.apply_adjoint(&mask)?;
        y_row.row_mut(i).iter_mut().zip(spec).for_each(|(d, v)| *d = v);
    }
    let mut y_col = DMatrix::zeros(npix, p);
    for j in 0..p {
        let img = op.apply(s_col.column(j).as_slice())?;
        y_col.column_mut(j).copy_from_slice(&img);
    }
    Ok(SketchPair {
        s_row,
        s_col,
        y_row,
        y_col,
        seed,
        geometry: op.geometry(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NystromEstimate {
    /// Rank-`k` estimate, `N_x N_y × N_λ`.
    pub matrix: DMatrix<f64>,
    /// Singular values of the core `S_row Y_col` dropped by the pseudo-inverse.
    pub dropped: usize,
    /// Set when the core was numerically singular.
    pub ill_conditioned: bool,
}

impl NystromEstimate {
    pub fn to_cube(&self, geom: CubeGeometry) -> Result<HsiCube> {
        HsiCube::from_matrix(geom, &self.matrix)
    }
}

/// Generalized Nyström estimate `Y_col (S_row Y_col)⁺ Y_row`, truncated to rank `k`.
pub fn rowcol_recover(sketch: &SketchPair, k: usize) -> Result<NystromEstimate> {
    ensure_arg!(k >= 1 && k <= sketch.p(), "rank {k} must lie in 1..={}", sketch.p());
    let core = &sketch.s_row * &sketch.y_col;
    let (core_pinv, dropped) = pinv(&core, NYSTROM_PINV_TOL)?;
    let w = core_pinv * &sketch.y_row; // p × N_λ
    // X̂ = Y_col W = Q (R W); truncate through the small factor
    let qr = sketch.y_col.clone().qr();
    let (q, r) = (qr.q(), qr.r());
    let small = svd(&(r * w))?;
    let kk = k.min(small.sigma.len());
    let mut left = &q * small.u.columns(0, kk);
    for (j, s) in small.sigma.iter().take(kk).enumerate() {
        left.column_mut(j).scale_mut(*s);
    }
    let matrix = left * small.v.columns(0, kk).transpose();
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("Nyström estimate is not finite".into()));
    }
    Ok(NystromEstimate {
        matrix,
        dropped,
        ill_conditioned: dropped > 0,
    })
}
