use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_arg, Error, Result};
use crate::linalg::{dot, norm2};

/// RSNR reported when the reconstruction is exact.
pub const RSNR_CAP_DB: f64 = 300.0;

/// `20 log₁₀(‖x‖ / ‖x − x̂‖)` in dB, capped at [`RSNR_CAP_DB`].
pub fn rsnr(x: &[f64], xhat: &[f64]) -> Result<f64> {
    ensure_arg!(x.len() == xhat.len(), "rsnr: lengths {} and {} differ", x.len(), xhat.len());
    let sig = norm2(x);
    ensure_arg!(sig > 0.0, "rsnr: reference is zero");
    let err = x.iter().zip(xhat).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    if err == 0.0 {
        return Ok(RSNR_CAP_DB);
    }
    Ok((20.0 * (sig / err).log10()).min(RSNR_CAP_DB))
}

/// Spectral angle between two vectors, in degrees.
pub fn sam(x: &[f64], xhat: &[f64]) -> Result<f64> {
    ensure_arg!(x.len() == xhat.len(), "sam: lengths {} and {} differ", x.len(), xhat.len());
    let (a, b) = (norm2(x), norm2(xhat));
    ensure_arg!(a > 0.0 && b > 0.0, "sam: zero vector");
    Ok((dot(x, xhat) / (a * b)).clamp(-1.0, 1.0).acos().to_degrees())
}

/// Flips `v` in place if that increases its correlation with `reference`;
/// returns true when it flipped.
pub fn align_sign(reference: &[f64], v: &mut [f64]) -> bool {
    if dot(reference, v) < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
        true
    } else {
        false
    }
}

/// SAM after resolving the sign ambiguity of singular vectors.
pub fn sam_aligned(reference: &[f64], v: &[f64]) -> Result<f64> {
    let mut w = v.to_vec();
    align_sign(reference, &mut w);
    sam(reference, &w)
}

/// Mean spectral angle over pixels of two `nx·ny × nλ` cubes given as
/// band-major buffers. Pixels where either spectrum is zero are skipped.
pub fn mean_pixel_sam(x: &[f64], xhat: &[f64], npix: usize) -> Result<f64> {
    ensure_arg!(x.len() == xhat.len(), "sam: lengths {} and {} differ", x.len(), xhat.len());
    ensure_arg!(npix > 0 && x.len() % npix == 0, "buffer of {} is not a whole number of bands", x.len());
    let nl = x.len() / npix;
    let (mut total, mut count) = (0.0, 0usize);
    for p in 0..npix {
        let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
        for j in 0..nl {
            let (a, b) = (x[p + npix * j], xhat[p + npix * j]);
            xy += a * b;
            xx += a * a;
            yy += b * b;
        }
        if xx > 0.0 && yy > 0.0 {
            total += (xy / (xx * yy).sqrt()).clamp(-1.0, 1.0).acos().to_degrees();
            count += 1;
        }
    }
    ensure_arg!(count > 0, "sam: every pixel spectrum is zero");
    Ok(total / count as f64)
}

/// One row of the metrics/benchmark CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub scene: String,
    pub method: String,
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub noise_db: f64,
    pub rsnr_db: f64,
    pub sam_deg: f64,
    pub exposures: usize,
    pub compression: f64,
}

pub fn write_metrics_csv<W: Write>(rows: &[MetricsRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::format("metrics", e.to_string()))?;
    }
    w.flush().map_err(|e| Error::format("metrics", e.to_string()))
}

pub fn save_metrics_csv(rows: &[MetricsRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_metrics_csv(rows, f)
}
