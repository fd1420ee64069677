//! Binary aperture codes and the metrics that make a code a good blur.
//!
//! A code `a = (a_0, …, a_{N-1})` places `N` bits of width `pitch_um` along
//! the dispersion axis. It blurs the spectrum by `a` itself and the image by
//! the power spectral density of `a`, so a good code has no DFT nulls and a
//! strictly positive autocorrelation.

mod mseq;
mod search;

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_arg, Error, Result};
use crate::fourier::dft_real;

pub use mseq::{msequence, primitive_polynomial};
pub use search::{
    search_code_exhaustive, search_code_exhaustive_with, search_code_heuristic,
    search_code_heuristic_with, SearchConfig, EXHAUSTIVE_DEFAULT_MAX, EXHAUSTIVE_FORCE_MAX,
};

/// Default bit pitch (µm) and slit height (mm) of the prototype-scale code.
pub const DEFAULT_PITCH_UM: f64 = 100.0;
pub const DEFAULT_HEIGHT_MM: f64 = 6.4;

/// Oversampling of the PSD grid used for side-lobe peak detection.
pub const PSD_OVERSAMPLE: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApertureCode {
    pub bits: Vec<u8>,
    pub pitch_um: f64,
    pub height_mm: f64,
}

impl ApertureCode {
    pub fn new(bits: Vec<u8>, pitch_um: f64, height_mm: f64) -> Result<Self> {
        ensure_arg!(!bits.is_empty(), "aperture code needs at least one bit");
        ensure_arg!(bits.iter().all(|b| *b <= 1), "aperture bits must be 0 or 1");
        ensure_arg!(
            pitch_um > 0.0 && pitch_um.is_finite(),
            "pitch_um must be positive"
        );
        ensure_arg!(
            height_mm > 0.0 && height_mm.is_finite(),
            "height_mm must be positive"
        );
        Ok(ApertureCode {
            bits,
            pitch_um,
            height_mm,
        })
    }

    /// Code with the default pitch and height.
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        Self::new(bits, DEFAULT_PITCH_UM, DEFAULT_HEIGHT_MM)
    }

    /// A single open bit followed by `n - 1` closed ones.
    pub fn slit(n: usize) -> Self {
        let mut bits = vec![0; n.max(1)];
        bits[0] = 1;
        ApertureCode {
            bits,
            pitch_um: DEFAULT_PITCH_UM,
            height_mm: DEFAULT_HEIGHT_MM,
        }
    }

    pub fn open(n: usize) -> Self {
        ApertureCode {
            bits: vec![1; n.max(1)],
            pitch_um: DEFAULT_PITCH_UM,
            height_mm: DEFAULT_HEIGHT_MM,
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn throughput(&self) -> usize {
        self.bits.iter().map(|b| *b as usize).sum()
    }

    /// Physical width `N·Δ` in µm.
    pub fn width_um(&self) -> f64 {
        self.len() as f64 * self.pitch_um
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.bits.iter().map(|b| *b as f64).collect()
    }

    pub fn bit_string(&self) -> String {
        self.bits.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw: ApertureCode =
            serde_json::from_str(&text).map_err(|e| Error::format("code", e.to_string()))?;
        Self::new(raw.bits, raw.pitch_um, raw.height_mm)
            .map_err(|e| Error::format("bits", e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("code serializes");
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    /// Flat spectral DFT plus positive autocorrelation.
    Invertible,
    /// Flat spectral DFT plus low PSF side lobes.
    Imperceptible,
}

impl ObjectiveKind {
    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::Invertible => "invertible",
            ObjectiveKind::Imperceptible => "imperceptible",
        }
    }
}

impl std::str::FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "invertible" => Ok(ObjectiveKind::Invertible),
            "imperceptible" => Ok(ObjectiveKind::Imperceptible),
            other => Err(Error::invalid(format!("unknown objective kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CodeScore {
    pub min_dft_mag: f64,
    pub min_autocorr: i64,
    pub peak_ratio: f64,
    pub throughput: usize,
    pub objective: f64,
}

/// One row of the score report CSV.
#[derive(Debug, Clone, Serialize)]
pub struct ScoreRecord {
    #[serde(rename = "N")]
    n: usize,
    pub alpha: f64,
    pub objective_kind: &'static str,
    pub min_dft_mag: f64,
    pub min_autocorr: i64,
    pub peak_ratio: f64,
    pub throughput: usize,
    pub objective: f64,
}

impl ScoreRecord {
    pub fn new(code: &ApertureCode, alpha: f64, kind: ObjectiveKind, s: &CodeScore) -> Self {
        ScoreRecord {
            n: code.len(),
            alpha,
            objective_kind: kind.name(),
            min_dft_mag: s.min_dft_mag,
            min_autocorr: s.min_autocorr,
            peak_ratio: s.peak_ratio,
            throughput: s.throughput,
            objective: s.objective,
        }
    }
}

/// Length of the DFT that covers a linear convolution with `nl` samples.
pub fn linear_dft_len(n: usize, nl: usize) -> usize {
    n + nl - 1
}

/// `min_k |A[k]|` over the unnormalized `(N + nl − 1)`-point DFT of the code.
pub fn code_dft_minmag(bits: &[u8], nl: usize) -> Result<f64> {
    ensure_arg!(nl >= 1, "nl must be at least 1");
    ensure_arg!(bits.iter().any(|b| *b != 0), "all-zero code has no spectrum");
    let a: Vec<f64> = bits.iter().map(|b| *b as f64).collect();
    let spec = dft_real(&a, linear_dft_len(bits.len(), nl));
    Ok(spec.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min))
}

/// `|A[k]|` over the `(N + nl − 1)`-point DFT, all bins.
pub fn code_dft_magnitudes(bits: &[u8], nl: usize) -> Vec<f64> {
    let a: Vec<f64> = bits.iter().map(|b| *b as f64).collect();
    dft_real(&a, linear_dft_len(bits.len(), nl.max(1)))
        .iter()
        .map(|z| z.norm())
        .collect()
}

/// Linear autocorrelation `c_k = Σ_p a_p a_{p+k}` for `k = −(N−1)..=N−1`;
/// index `k + N − 1` of the result holds `c_k`.
pub fn code_autocorr(bits: &[u8]) -> Vec<i64> {
    let n = bits.len() as isize;
    (-(n - 1)..n)
        .map(|k| {
            (0..n)
                .filter(|&p| (0..n).contains(&(p + k)))
                .map(|p| (bits[p as usize] * bits[(p + k) as usize]) as i64)
                .sum()
        })
        .collect()
}

/// `min c_k` over `|k| ≤ band` (all lags when `band` is `None`).
pub fn min_autocorr(bits: &[u8], band: Option<usize>) -> i64 {
    let n = bits.len();
    let band = band.unwrap_or(n - 1).min(n - 1);
    let c = code_autocorr(bits);
    (0..=band).map(|k| c[n - 1 + k]).min().unwrap_or(0)
}

/// PSD `|Σ a_n e^{−2πi n m / M}|²` on an `M = 16·N`-point grid.
pub fn code_psd(bits: &[u8]) -> Vec<f64> {
    let a: Vec<f64> = bits.iter().map(|b| *b as f64).collect();
    dft_real(&a, PSD_OVERSAMPLE * bits.len().max(1))
        .iter()
        .map(|z| z.norm_sqr())
        .collect()
}

/// `η₂/η₁` of a PSD sampled on a periodic grid whose bin 0 is DC.
///
/// `η₁` is the DC peak. The main lobe is the run of non-increasing samples
/// walking away from DC on either side; `η₂` is the largest sample outside
/// it (zero when the main lobe covers everything).
pub fn psd_peak_ratio(psd: &[f64]) -> f64 {
    let m = psd.len();
    let eta1 = psd[0];
    if m < 3 || eta1 <= 0.0 {
        return 0.0;
    }
    // rounding noise on flat stretches must not start a new lobe
    let tol = 1e-9 * eta1;
    let mut right = 0;
    while right + 1 < m && psd[right + 1] <= psd[right] + tol {
        right += 1;
    }
    let mut left = m;
    while left - 1 > right && psd[left - 1] <= psd[left % m] + tol {
        left -= 1;
    }
    let eta2 = (right + 1..left).map(|i| psd[i]).fold(0.0, f64::max);
    (eta2 / eta1).clamp(0.0, 1.0)
}

pub fn peak_ratio(bits: &[u8]) -> f64 {
    psd_peak_ratio(&code_psd(bits))
}

pub fn combine(kind: ObjectiveKind, alpha: f64, min_dft: f64, min_ac: i64, ratio: f64) -> f64 {
    match kind {
        ObjectiveKind::Invertible => alpha * min_dft + (1.0 - alpha) * min_ac as f64,
        ObjectiveKind::Imperceptible => alpha * min_dft + (1.0 - alpha) * (1.0 - ratio),
    }
}

pub fn score_code(
    code: &ApertureCode,
    nl: usize,
    alpha: f64,
    band_limit_lags: Option<usize>,
    kind: ObjectiveKind,
) -> Result<CodeScore> {
    ensure_arg!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1), got {alpha}");
    let min_dft_mag = code_dft_minmag(&code.bits, nl)?;
    let min_ac = min_autocorr(&code.bits, band_limit_lags);
    let ratio = peak_ratio(&code.bits);
    Ok(CodeScore {
        min_dft_mag,
        min_autocorr: min_ac,
        peak_ratio: ratio,
        throughput: code.throughput(),
        objective: combine(kind, alpha, min_dft_mag, min_ac, ratio),
    })
}

/// Precomputed tables for scoring many codes of one length as bit masks
/// (bit `n` of the mask is `a_n`).
pub(crate) struct MaskScorer {
    alpha: f64,
    kind: ObjectiveKind,
    band: usize,
    dft_len: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
    psd_len: usize,
    psd_cos: Vec<f64>,
    psd_sin: Vec<f64>,
}

impl MaskScorer {
    pub fn new(
        n: usize,
        nl: usize,
        alpha: f64,
        band: Option<usize>,
        kind: ObjectiveKind,
    ) -> Result<Self> {
        ensure_arg!(n >= 1 && n <= 64, "code length {n} outside 1..=64");
        ensure_arg!(nl >= 1, "nl must be at least 1");
        ensure_arg!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1), got {alpha}");
        let dft_len = linear_dft_len(n, nl);
        let table = |len: usize| -> (Vec<f64>, Vec<f64>) {
            (0..len)
                .map(|i| {
                    let t = -2.0 * PI * i as f64 / len as f64;
                    (t.cos(), t.sin())
                })
                .unzip()
        };
        let (cos, sin) = table(dft_len);
        let psd_len = if kind == ObjectiveKind::Imperceptible {
            PSD_OVERSAMPLE * n
        } else {
            0
        };
        let (psd_cos, psd_sin) = table(psd_len);
        Ok(MaskScorer {
            alpha,
            kind,
            band: band.unwrap_or(n - 1).min(n - 1),
            dft_len,
            cos,
            sin,
            psd_len,
            psd_cos,
            psd_sin,
        })
    }

    fn spectrum_at(&self, mask: u64, k: usize, len: usize, cos: &[f64], sin: &[f64]) -> (f64, f64) {
        let (mut re, mut im) = (0.0, 0.0);
        let mut m = mask;
        while m != 0 {
            let p = m.trailing_zeros() as usize;
            let idx = (k * p) % len;
            re += cos[idx];
            im += sin[idx];
            m &= m - 1;
        }
        (re, im)
    }

    pub fn score(&self, mask: u64) -> CodeScore {
        let throughput = mask.count_ones() as usize;
        let min_dft_mag = (0..self.dft_len)
            .map(|k| {
                let (re, im) = self.spectrum_at(mask, k, self.dft_len, &self.cos, &self.sin);
                (re * re + im * im).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        let min_ac = (0..=self.band)
            .map(|k| (mask & (mask >> k)).count_ones() as i64)
            .min()
            .unwrap_or(0);
        let ratio = if self.psd_len > 0 {
            let psd: Vec<f64> = (0..self.psd_len)
                .map(|k| {
                    let (re, im) =
                        self.spectrum_at(mask, k, self.psd_len, &self.psd_cos, &self.psd_sin);
                    re * re + im * im
                })
                .collect();
            psd_peak_ratio(&psd)
        } else {
            // Not needed by the invertible objective; filled in for the winner.
            f64::NAN
        };
        CodeScore {
            min_dft_mag,
            min_autocorr: min_ac,
            peak_ratio: ratio,
            throughput,
            objective: combine(self.kind, self.alpha, min_dft_mag, min_ac, ratio),
        }
    }
}

pub(crate) fn mask_to_bits(mask: u64, n: usize) -> Vec<u8> {
    (0..n).map(|i| ((mask >> i) & 1) as u8).collect()
}

pub(crate) fn bits_to_mask(bits: &[u8]) -> u64 {
    bits.iter()
        .enumerate()
        .fold(0u64, |m, (i, b)| m | ((*b as u64) << i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn delta_has_flat_spectrum() {
        assert!((code_dft_minmag(&[1, 0, 0, 0], 5).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn open_code_min_matches_direct_dft() {
        // direct 15-point DFT of eight ones, evaluated independently
        let l = 15;
        let direct = (0..l)
            .map(|k| {
                let (mut re, mut im) = (0.0f64, 0.0f64);
                for n in 0..8 {
                    let t = -2.0 * PI * (k * n) as f64 / l as f64;
                    re += t.cos();
                    im += t.sin();
                }
                (re * re + im * im).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        let got = code_dft_minmag(&[1; 8], 8).unwrap();
        assert!((got - direct).abs() < 1e-12);
        // with a length divisible by 8 the Dirichlet nulls land on bins
        let a = vec![1.0; 8];
        let on_grid = dft_real(&a, 16).iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        assert!(on_grid < 1e-9);
    }

    #[test]
    fn sparse_code_hand_value() {
        let expect = 2.0 * (2.0 * PI / 5.0).cos();
        let got = code_dft_minmag(&[1, 0, 1], 3).unwrap();
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
    }

    #[test]
    fn zero_code_rejected() {
        assert!(code_dft_minmag(&[0, 0, 0], 4).is_err());
        assert!(code_dft_minmag(&[1], 0).is_err());
    }

    #[test]
    fn autocorr_examples() {
        assert_eq!(code_autocorr(&[1]), vec![1]);
        assert_eq!(code_autocorr(&[1, 1, 1]), vec![1, 2, 3, 2, 1]);
        let c = code_autocorr(&[1, 0, 1, 1]);
        assert_eq!(&c[3..], &[3, 1, 1, 1]);
        assert_eq!(&c[..3], &[1, 1, 1]);
    }

    #[test]
    fn slit_and_open_scores() {
        let slit = score_code(&ApertureCode::slit(8), 8, 0.5, None, ObjectiveKind::Invertible).unwrap();
        assert!((slit.min_dft_mag - 1.0).abs() < 1e-12);
        assert_eq!(slit.min_autocorr, 0);
        assert!((slit.objective - 0.5).abs() < 1e-12);

        let open = score_code(&ApertureCode::open(8), 8, 0.5, None, ObjectiveKind::Invertible).unwrap();
        assert_eq!(open.min_autocorr, 1);
        let direct_min = code_dft_magnitudes(&[1; 8], 8).into_iter().fold(f64::INFINITY, f64::min);
        assert!((open.objective - (0.5 * direct_min + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn band_limit_restricts_lags() {
        // c_3 = 0 but c_0..c_2 > 0
        let bits = [1, 1, 0, 1, 0, 0];
        assert_eq!(min_autocorr(&bits, None), 0);
        assert_eq!(min_autocorr(&bits, Some(1)), 1);
    }

    #[test]
    fn peak_ratio_cases() {
        assert_eq!(peak_ratio(&[1, 0, 0, 0]), 0.0);
        let open = peak_ratio(&[1; 8]);
        // first side lobe of a Dirichlet kernel is about 4.7 % of the peak
        assert!(open > 0.03 && open < 0.06, "{open}");
        let r = peak_ratio(&[1, 0, 1, 1, 0, 0, 1]);
        assert!((0.0..=1.0).contains(&r));
    }

    #[test]
    fn mask_scorer_agrees_with_reference() {
        for kind in [ObjectiveKind::Invertible, ObjectiveKind::Imperceptible] {
            let scorer = MaskScorer::new(9, 7, 0.3, Some(5), kind).unwrap();
            for mask in [1u64, 0b1_0110_1101, 0b1_1111_1111, 0b1_0000_0001] {
                let code = ApertureCode::from_bits(mask_to_bits(mask, 9)).unwrap();
                let want = score_code(&code, 7, 0.3, Some(5), kind).unwrap();
                let got = scorer.score(mask);
                assert!((got.min_dft_mag - want.min_dft_mag).abs() < 1e-9);
                assert_eq!(got.min_autocorr, want.min_autocorr);
                assert!((got.objective - want.objective).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn code_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let code = ApertureCode::new(vec![1, 0, 1, 1], 30.0, 5.0).unwrap();
        let p = dir.path().join("code.json");
        code.save(&p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.contains("\"pitch_um\"") && text.contains("\"height_mm\""));
        assert_eq!(ApertureCode::load(&p).unwrap(), code);
    }

    proptest! {
        #[test]
        fn autocorr_symmetric_and_peak(bits in proptest::collection::vec(0u8..2, 1..24)) {
            let c = code_autocorr(&bits);
            let n = bits.len();
            for k in 0..n {
                prop_assert_eq!(c[n - 1 + k], c[n - 1 - k]);
            }
            let t: i64 = bits.iter().map(|b| *b as i64).sum();
            prop_assert_eq!(c[n - 1], t);
        }

        #[test]
        fn parseval(bits in proptest::collection::vec(0u8..2, 1..24), nl in 1usize..40) {
            let l = linear_dft_len(bits.len(), nl);
            let mags = code_dft_magnitudes(&bits, nl);
            let energy: f64 = mags.iter().map(|m| m * m).sum::<f64>() / l as f64;
            let t: f64 = bits.iter().map(|b| *b as f64).sum();
            prop_assert!((energy - t).abs() <= 1e-10 * t.max(1.0));
        }
    }
}
