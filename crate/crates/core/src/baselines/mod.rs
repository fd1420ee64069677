//! Non-adaptive acquisition baselines: random row/column sketching with a
//! generalized Nyström estimate, and a full Hadamard-multiplexed scan.

mod hadamard;
mod rowcol;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensing::{MeasurementKind, MeasurementLog};

pub use hadamard::{hadamard_acquire_full, sylvester, HadamardScan};
pub use rowcol::{
    rowcol_acquire, rowcol_recover, sketch_matrices, NystromEstimate, SketchPair, NYSTROM_PINV_TOL,
};

/// How two acquisitions are judged to have spent the same budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParityMode {
    /// The candidate may not use more physical exposures than the baseline.
    Exposures,
    /// Same number of signed codes of each kind.
    Signed,
}

impl std::str::FromStr for ParityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exposures" => Ok(ParityMode::Exposures),
            "signed" => Ok(ParityMode::Signed),
            other => Err(Error::invalid(format!("unknown parity mode `{other}`"))),
        }
    }
}

/// Fails unless `candidate` spent no more than `baseline` under `mode`.
pub fn check_parity(candidate: &MeasurementLog, baseline: &MeasurementLog, mode: ParityMode) -> Result<()> {
    match mode {
        ParityMode::Exposures => {
            let (a, b) = (candidate.total_exposures(), baseline.total_exposures());
            if a > b {
                return Err(Error::invalid(format!(
                    "budget mismatch: {a} exposures against the baseline's {b}"
                )));
            }
        }
        ParityMode::Signed => {
            for kind in [MeasurementKind::Spatial, MeasurementKind::Spectral] {
                let (a, b) = (candidate.codes(kind), baseline.codes(kind));
                if a != b {
                    return Err(Error::invalid(format!(
                        "budget mismatch: {a} {kind} codes against the baseline's {b}"
                    )));
                }
            }
        }
    }
    Ok(())
}
