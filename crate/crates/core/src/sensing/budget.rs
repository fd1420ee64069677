use serde::{Deserialize, Serialize};

use super::{MeasurementKind, MeasurementLog};
use crate::error::{ensure_arg, Result};

/// Measurement count against the full `N_x N_y N_λ` cube, under two
/// conventions: one measurement per signed code, and one per exposure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub m_nyquist: u64,
    /// Samples taken counting each signed code once.
    pub m_used: u64,
    pub compression: f64,
    /// Samples taken counting each physical exposure.
    pub m_used_exposures: u64,
    pub compression_exposures: f64,
    /// `k = min(spatial codes, spectral codes)`, the rank a balanced run resolves.
    pub k: u64,
    /// `k (N_x N_y + N_λ)`.
    pub m_power_formula: u64,
    /// `k (1/N_λ + 1/(N_x N_y))`, the fraction of the full cube sensed.
    pub reduction_factor: f64,
}

/// Budget for `spatial` image codes and `spectral` spectrum codes, with
/// exposure tallies given separately.
pub fn budget_from_counts(
    dims: (usize, usize, usize),
    spatial: (usize, usize),
    spectral: (usize, usize),
) -> Result<Budget> {
    let (nx, ny, nl) = dims;
    ensure_arg!(nx > 0 && ny > 0 && nl > 0, "cube dimensions must be positive");
    let npix = (nx * ny) as u64;
    let nl = nl as u64;
    let m_nyquist = npix * nl;
    let m_used = spatial.0 as u64 * npix + spectral.0 as u64 * nl;
    let m_used_exposures = spatial.1 as u64 * npix + spectral.1 as u64 * nl;
    ensure_arg!(m_used > 0, "no measurements to account for");
    let k = spatial.0.min(spectral.0) as u64;
    let ratio = |m: u64| if m == 0 { f64::INFINITY } else { m_nyquist as f64 / m as f64 };
    Ok(Budget {
        m_nyquist,
        m_used,
        compression: ratio(m_used),
        m_used_exposures,
        compression_exposures: ratio(m_used_exposures),
        k,
        m_power_formula: k * (npix + nl),
        reduction_factor: k as f64 * (1.0 / nl as f64 + 1.0 / npix as f64),
    })
}

/// Budget of everything recorded in `log` for a cube of `dims`.
pub fn budget(log: &MeasurementLog, dims: (usize, usize, usize)) -> Result<Budget> {
    use MeasurementKind::*;
    budget_from_counts(
        dims,
        (log.codes(Spatial), log.exposures(Spatial)),
        (log.codes(Spectral), log.exposures(Spectral)),
    )
}
