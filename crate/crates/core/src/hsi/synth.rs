use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{linear_grid, CubeGeometry, HsiCube};
use crate::error::{ensure_arg, Result};

/// Component weights decay geometrically with this ratio.
const WEIGHT_RATIO: f64 = 0.5;

/// The factors a synthetic scene was built from, kept for diagnostics.
#[derive(Debug, Clone)]
pub struct SceneComponents {
    /// Unit-norm abundance maps, one per component (x fastest).
    pub maps: Vec<Vec<f64>>,
    /// Unit-norm spectra, one per component.
    pub spectra: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

fn gaussian_spectrum(rng: &mut ChaCha8Rng, wl: &[f64]) -> Vec<f64> {
    let (lo, hi) = (wl[0], wl[wl.len() - 1]);
    let span = (hi - lo).max(1.0);
    let terms = rng.random_range(3..=6);
    let mut s = vec![0.0; wl.len()];
    for _ in 0..terms {
        let center = lo + span * rng.random::<f64>();
        let width = span * (0.04 + 0.2 * rng.random::<f64>());
        let amp = 0.3 + 0.7 * rng.random::<f64>();
        for (v, &w) in s.iter_mut().zip(wl) {
            let t = (w - center) / width;
            *v += amp * (-0.5 * t * t).exp();
        }
    }
    s
}

fn blob_map(rng: &mut ChaCha8Rng, nx: usize, ny: usize) -> Vec<f64> {
    let blobs = rng.random_range(3..=8);
    let scale = nx.max(ny) as f64;
    let mut m = vec![0.0; nx * ny];
    for _ in 0..blobs {
        let cx = nx as f64 * rng.random::<f64>();
        let cy = ny as f64 * rng.random::<f64>();
        let r = scale * (0.08 + 0.25 * rng.random::<f64>());
        let amp = 0.3 + 0.7 * rng.random::<f64>();
        for y in 0..ny {
            for x in 0..nx {
                let dx = (x as f64 - cx) / r;
                let dy = (y as f64 - cy) / r;
                m[x + nx * y] += amp * (-0.5 * (dx * dx + dy * dy)).exp();
            }
        }
    }
    m
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Builds a smooth, non-negative scene of exact rank `rank` (before dither)
/// on a 420–680 nm grid. Component `i` has weight `0.5^i`; the cube is scaled
/// to unit peak before the dither `noise_floor · U[0, 1)` is added.
pub fn synth_lowrank_scene(
    nx: usize,
    ny: usize,
    nl: usize,
    rank: usize,
    seed: u64,
    noise_floor: f64,
) -> Result<(HsiCube, SceneComponents)> {
    ensure_arg!(nx > 0 && ny > 0 && nl > 0, "scene dimensions must be positive");
    ensure_arg!(
        rank >= 1 && rank <= (nx * ny).min(nl),
        "rank {rank} must lie in [1, min(nx·ny, nl) = {}]",
        (nx * ny).min(nl)
    );
    ensure_arg!(
        (0.0..1.0).contains(&noise_floor),
        "noise_floor must lie in [0, 1), got {noise_floor}"
    );
    let wl = linear_grid(420.0, 680.0, nl);
    let geom = CubeGeometry::new(nx, ny, wl.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut comps = SceneComponents {
        maps: Vec::with_capacity(rank),
        spectra: Vec::with_capacity(rank),
        weights: Vec::with_capacity(rank),
    };
    for i in 0..rank {
        let mut m = blob_map(&mut rng, nx, ny);
        let mut s = gaussian_spectrum(&mut rng, &wl);
        normalize(&mut m);
        normalize(&mut s);
        comps.maps.push(m);
        comps.spectra.push(s);
        comps.weights.push(WEIGHT_RATIO.powi(i as i32));
    }

    let npix = nx * ny;
    let mut data = vec![0.0; geom.len()];
    for ((m, s), w) in comps.maps.iter().zip(&comps.spectra).zip(&comps.weights) {
        for (j, sj) in s.iter().enumerate() {
            let band = &mut data[j * npix..(j + 1) * npix];
            for (b, mv) in band.iter_mut().zip(m) {
                *b += w * sj * mv;
            }
        }
    }
    let peak = data.iter().copied().fold(0.0, f64::max);
    if peak > 0.0 {
        data.iter_mut().for_each(|v| *v /= peak);
        comps.weights.iter_mut().for_each(|w| *w /= peak);
    }
    if noise_floor > 0.0 {
        data.iter_mut()
            .for_each(|v| *v += noise_floor * rng.random::<f64>());
    }
    Ok((HsiCube::new(geom, data)?, comps))
}
