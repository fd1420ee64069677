//! Lanczos bidiagonalization with full orthogonalization, driven only by
//! products with `X` and `Xᵀ`, and the low-rank reconstruction it yields.
//!
//! Each iteration measures `r_j = X ℓ_j` (an image) and `ℓ_{j+1} = Xᵀ r_j`
//! (a spectrum), orthogonalizing each against everything collected so far.
//! With `R = [r_j]`, `L = [ℓ_j]` and the upper-bidiagonal `B` of the norms,
//! `X L = R B`, so `T = R B Lᵀ` is `X` projected onto the spectral Krylov
//! space. The SVD of `T` comes from the SVD of the small `B`.

mod io;
mod operator;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_arg, Error, Result};
use crate::hsi::{CubeGeometry, HsiCube};
use crate::linalg::{norm2, orthogonalize, scale, svd};

pub use io::{load_factors, save_factors};
pub use operator::{DenseOperator, ExactCube, MatVecOperator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KrylovInit {
    /// `ℓ₁ ∝ Xᵀ 1`: one extra spectral measurement through an open mask.
    AllOnesSpatial,
    /// Seeded Gaussian spectral vector.
    Random,
    /// Given spectral vector.
    Spectral(Vec<f64>),
    /// `ℓ₁ ∝ Xᵀ y` for the given spatial image.
    Spatial(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrylovConfig {
    /// Target rank `k`.
    pub rank: usize,
    /// Iterations `L > k`.
    pub iterations: usize,
    pub init: KrylovInit,
    /// A new vector whose norm drops below `tol ×` its norm before
    /// orthogonalization (or the largest α/β so far) counts as a breakdown.
    pub breakdown_tol: f64,
    pub reorth_passes: usize,
    /// Seeds the random init and breakdown restarts.
    pub seed: u64,
}

impl KrylovConfig {
    pub fn new(rank: usize, iterations: usize) -> Self {
        KrylovConfig {
            rank,
            iterations,
            init: KrylovInit::AllOnesSpatial,
            breakdown_tol: 1e-10,
            reorth_passes: 2,
            seed: 0,
        }
    }

    pub fn with_init(mut self, init: KrylovInit) -> Self {
        self.init = init;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_arg!(self.rank >= 1, "target rank must be at least 1");
        ensure_arg!(
            self.iterations > self.rank,
            "iterations ({}) must exceed the target rank ({})",
            self.iterations,
            self.rank
        );
        ensure_arg!(self.reorth_passes >= 1, "need at least one orthogonalization pass");
        ensure_arg!(
            self.breakdown_tol >= 0.0 && self.breakdown_tol < 1.0,
            "breakdown_tol must lie in [0, 1)"
        );
        Ok(())
    }
}

/// Krylov bases, bidiagonal entries and the singular triplets of `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankFactors {
    /// `ℓ_1 … ℓ_L`, each of length `N_λ`.
    pub spectral_vectors: Vec<Vec<f64>>,
    /// `r_1 … r_L`, each of length `N_x N_y`.
    pub spatial_vectors: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    /// Left singular vectors of `T` (`N_x N_y × L`).
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    /// Right singular vectors of `T` (`N_λ × L`).
    pub v: DMatrix<f64>,
    pub target_rank: usize,
    /// Iterations actually run; below the request if the basis filled the space.
    pub iterations: usize,
    pub breakdowns: usize,
    pub geometry: Option<CubeGeometry>,
}

impl LowRankFactors {
    pub fn stored_rank(&self) -> usize {
        self.sigma.len()
    }

    /// `U_k Σ_k V_kᵀ` as an `N_x N_y × N_λ` matrix.
    pub fn matrix(&self, k: usize) -> Result<DMatrix<f64>> {
        ensure_arg!(k >= 1, "reconstruction rank must be at least 1");
        ensure_arg!(
            k <= self.stored_rank(),
            "rank {k} exceeds the {} stored triplets",
            self.stored_rank()
        );
        let mut us = self.u.columns(0, k).into_owned();
        for (j, s) in self.sigma.iter().take(k).enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        Ok(us * self.v.columns(0, k).transpose())
    }

    /// `B` as a dense `L × L` upper-bidiagonal matrix.
    pub fn bidiagonal(&self) -> DMatrix<f64> {
        let l = self.alphas.len();
        let mut b = DMatrix::zeros(l, l);
        for j in 0..l {
            b[(j, j)] = self.alphas[j];
            if j + 1 < l {
                b[(j, j + 1)] = self.betas[j];
            }
        }
        b
    }

    /// Spectral singular vector `j` (column of `V`).
    pub fn spectral_singular(&self, j: usize) -> Vec<f64> {
        self.v.column(j).iter().copied().collect()
    }

    /// Spatial singular vector `j` (column of `U`).
    pub fn spatial_singular(&self, j: usize) -> Vec<f64> {
        self.u.column(j).iter().copied().collect()
    }
}

fn random_orthogonal(n: usize, basis: &[Vec<f64>], passes: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    ensure_arg!(basis.len() < n, "basis already spans the space");
    for _ in 0..8 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let before = norm2(&v);
        orthogonalize(&mut v, basis, passes);
        let after = norm2(&v);
        if after > 1e-6 * before {
            scale(&mut v, 1.0 / after);
            return Ok(v);
        }
    }
    Err(Error::Numerical("could not draw a vector orthogonal to the basis".into()))
}

/// Orthogonalizes `v` against `basis` and normalizes it; on breakdown,
/// replaces it with a random unit vector orthogonal to `basis` and reports 0.
fn next_vector(
    mut v: Vec<f64>,
    basis: &[Vec<f64>],
    cfg: &KrylovConfig,
    scale_ref: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, f64, bool)> {
    ensure_arg!(v.iter().all(|x| x.is_finite()), "operator returned non-finite values");
    let before = norm2(&v);
    orthogonalize(&mut v, basis, cfg.reorth_passes);
    let nrm = norm2(&v);
    if nrm == 0.0 || nrm <= cfg.breakdown_tol * before.max(scale_ref) {
        let fresh = random_orthogonal(v.len(), basis, cfg.reorth_passes, rng)?;
        return Ok((fresh, 0.0, true));
    }
    scale(&mut v, 1.0 / nrm);
    Ok((v, nrm, false))
}

/// Runs `cfg.iterations` steps of bidiagonalization on `op` and returns the
/// bases, `B`, and the SVD of `T = R B Lᵀ`.
///
/// Spectral (`Xᵀ`) products: one for a spatial init plus `L − 1`; spatial
/// (`X`) products: `L`. With the all-ones init, `L = 6` costs 6 + 6.
pub fn lanczos<O: MatVecOperator + ?Sized>(op: &mut O, cfg: &KrylovConfig) -> Result<LowRankFactors> {
    cfg.validate()?;
    let (npix, nl) = (op.nrows(), op.ncols());
    ensure_arg!(npix >= 1 && nl >= 1, "operator has an empty dimension");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let l1 = match &cfg.init {
        KrylovInit::AllOnesSpatial => op.apply_adjoint(&vec![1.0; npix])?,
        KrylovInit::Spatial(y) => {
            ensure_arg!(y.len() == npix, "spatial init has length {}, expected {npix}", y.len());
            op.apply_adjoint(y)?
        }
        KrylovInit::Spectral(x) => {
            ensure_arg!(x.len() == nl, "spectral init has length {}, expected {nl}", x.len());
            x.clone()
        }
        KrylovInit::Random => (0..nl).map(|_| rng.sample(StandardNormal)).collect(),
    };
    let n1 = norm2(&l1);
    ensure_arg!(n1 > 0.0 && n1.is_finite(), "initial spectral vector is zero");
    let mut ls: Vec<Vec<f64>> = vec![l1.iter().map(|x| x / n1).collect()];
    let mut rs: Vec<Vec<f64>> = Vec::new();
    let (mut alphas, mut betas) = (Vec::new(), Vec::new());
    let mut scale_ref = 0.0f64;
    let mut breakdowns = 0;

    for j in 0..cfg.iterations {
        if rs.len() == npix {
            break;
        }
        let r = op.apply(&ls[j])?;
        let (r, alpha, broke) = next_vector(r, &rs, cfg, scale_ref, &mut rng)?;
        breakdowns += broke as usize;
        scale_ref = scale_ref.max(alpha);
        alphas.push(alpha);
        rs.push(r);

        // the last spectrum would only feed an iteration that never runs
        if j + 1 == cfg.iterations || ls.len() == nl {
            break;
        }
        let l = op.apply_adjoint(&rs[j])?;
        let (l, beta, broke) = next_vector(l, &ls, cfg, scale_ref, &mut rng)?;
        breakdowns += broke as usize;
        scale_ref = scale_ref.max(beta);
        betas.push(beta);
        ls.push(l);
    }

    let iterations = alphas.len();
    ls.truncate(iterations);
    betas.truncate(iterations.saturating_sub(1));
    let mut factors = LowRankFactors {
        spectral_vectors: ls,
        spatial_vectors: rs,
        alphas,
        betas,
        u: DMatrix::zeros(0, 0),
        sigma: Vec::new(),
        v: DMatrix::zeros(0, 0),
        target_rank: cfg.rank.min(iterations),
        iterations,
        breakdowns,
        geometry: op.geometry(),
    };
    let dec = svd(&factors.bidiagonal())?;
    let basis = |vs: &[Vec<f64>], n: usize| DMatrix::from_fn(n, vs.len(), |i, j| vs[j][i]);
    factors.u = basis(&factors.spatial_vectors, npix) * &dec.u;
    factors.v = basis(&factors.spectral_vectors, nl) * &dec.v;
    factors.sigma = dec.sigma;
    Ok(factors)
}

/// Cube view of the rank-`k` reconstruction. Values may be negative; clamp
/// separately if a physical cube is needed.
pub fn reconstruct(factors: &LowRankFactors, k: usize) -> Result<HsiCube> {
    let geom = factors
        .geometry
        .clone()
        .ok_or_else(|| Error::invalid("factors carry no cube geometry"))?;
    let m = factors.matrix(k)?;
    HsiCube::from_matrix(geom, &m)
}
