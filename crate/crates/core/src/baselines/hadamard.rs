use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{ensure_arg, Result};
use crate::hsi::HsiCube;
use crate::krylov::MatVecOperator;
use crate::sensing::SplitCode;

/// Sylvester Hadamard matrix of order `n` (a power of two), ±1 entries.
pub fn sylvester(n: usize) -> Result<DMatrix<f64>> {
    ensure_arg!(n.is_power_of_two(), "Hadamard order {n} is not a power of two");
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if (i & j).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HadamardScan {
    pub cube: HsiCube,
    /// Row permutation applied to the Sylvester matrix.
    pub permutation: Vec<usize>,
    pub padded_len: usize,
    /// Signed codes shown (one per Hadamard column).
    pub codes: usize,
    /// Physical exposures after positive/negative splitting.
    pub exposures: usize,
}

/// Measures `X h_i` for every column of a seeded row-permuted Hadamard
/// matrix `H` over the spectrum padded to a power of two, then inverts with
/// `X = (1/N) Y Hᵀ`.
pub fn hadamard_acquire_full<O: MatVecOperator + ?Sized>(op: &mut O, seed: u64) -> Result<HadamardScan> {
    let geom = op
        .geometry()
        .ok_or_else(|| crate::error::Error::invalid("operator has no cube geometry"))?;
    let (npix, nl) = (op.nrows(), op.ncols());
    let n = nl.next_power_of_two();
    let base = sylvester(n)?;
    let mut permutation: Vec<usize> = (0..n).collect();
    permutation.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let h = DMatrix::from_fn(n, n, |i, j| base[(permutation[i], j)]);

    let mut y = DMatrix::zeros(npix, n);
    let mut exposures = 0;
    for j in 0..n {
        // only the first nl entries face real bands; the padding is dark
        let code: Vec<f64> = (0..nl).map(|i| h[(i, j)]).collect();
        exposures += SplitCode::new(&code)?.exposures();
        let img = op.apply(&code)?;
        y.column_mut(j).copy_from_slice(&img);
    }
    let x_pad = (y * h.transpose()) / n as f64;
    let x = x_pad.columns(0, nl).into_owned();
    Ok(HadamardScan {
        cube: HsiCube::from_matrix(geom, &x)?,
        permutation,
        padded_len: n,
        codes: n,
        exposures,
    })
}
