//! `design-code`: exhaustive or hill-climbing code search.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use krylov_hsi::aperture::{
    code_dft_magnitudes, code_psd, score_code, search_code_exhaustive_with, search_code_heuristic_with,
    ApertureCode, CodeScore, ObjectiveKind, SearchConfig,
};
use krylov_hsi::Execution;

use crate::manifest::Run;
use crate::{ensure_dir, output_dir};

pub const NAME: &str = "design-code";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Exhaustive,
    Heuristic,
}

fn parse_objective(s: &str) -> Result<ObjectiveKind, String> {
    s.parse().map_err(|e: krylov_hsi::Error| e.to_string())
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DesignArgs {
    /// Code length in bits.
    #[arg(long)]
    pub n: usize,
    /// Spectral samples the code must stay invertible over.
    #[arg(long, default_value_t = 64)]
    pub nlambda: usize,
    /// Weight of spectral flatness against the spatial term, in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// invertible | imperceptible
    #[arg(long, default_value = "invertible", value_parser = parse_objective)]
    pub objective: ObjectiveKind,
    #[arg(long, value_enum, default_value_t = SearchMode::Exhaustive)]
    pub mode: SearchMode,
    /// Allow exhaustive search beyond the default size limit.
    #[arg(long)]
    pub force: bool,
    /// Only autocorrelation lags up to this bound enter the invertible objective.
    #[arg(long)]
    pub band_lags: Option<usize>,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long, default_value_t = 100)]
    pub flips: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = krylov_hsi::aperture::DEFAULT_PITCH_UM)]
    pub pitch_um: f64,
    #[arg(long, default_value_t = krylov_hsi::aperture::DEFAULT_HEIGHT_MM)]
    pub height_mm: f64,
    /// Output directory (default: $KHSI_OUTPUT_DIR or ./khsi-out).
    #[arg(long, visible_alias = "outdir")]
    pub out: Option<PathBuf>,
}

fn write_scores(path: &Path, rows: &[(&str, &ApertureCode, CodeScore)], args: &DesignArgs) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record([
        "label", "bits", "N", "nlambda", "alpha", "objective_kind", "min_dft_mag", "min_autocorr", "peak_ratio",
        "throughput", "objective",
    ])?;
    for (label, code, s) in rows {
        w.write_record([
            label.to_string(),
            code.bit_string(),
            code.len().to_string(),
            args.nlambda.to_string(),
            args.alpha.to_string(),
            args.objective.name().to_string(),
            s.min_dft_mag.to_string(),
            s.min_autocorr.to_string(),
            s.peak_ratio.to_string(),
            s.throughput.to_string(),
            s.objective.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Spectral `|A[k]|` and normalized spatial PSD of the code next to the open
/// aperture of the same length.
fn write_response(path: &Path, code: &ApertureCode, nlambda: usize) -> Result<()> {
    let open = ApertureCode::open(code.len());
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["curve", "bin", "frequency", "code", "open"])?;
    let (a, b) = (code_dft_magnitudes(&code.bits, nlambda), code_dft_magnitudes(&open.bits, nlambda));
    for (k, (x, y)) in a.iter().zip(&b).enumerate() {
        let f = k as f64 / a.len() as f64;
        w.write_record(["spectral".to_string(), k.to_string(), f.to_string(), x.to_string(), y.to_string()])?;
    }
    let (p, q) = (code_psd(&code.bits), code_psd(&open.bits));
    for (m, (x, y)) in p.iter().zip(&q).enumerate() {
        // cycles per bit pitch
        let f = m as f64 * code.len() as f64 / p.len() as f64;
        w.write_record([
            "spatial".to_string(),
            m.to_string(),
            f.to_string(),
            (x / p[0]).to_string(),
            (y / q[0]).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(mut args: DesignArgs) -> Result<()> {
    let mut run = Run::start();
    let dir = output_dir(&args.out);
    args.out = Some(dir.clone());
    let mut cfg = SearchConfig::new(args.n, args.nlambda, args.alpha, args.objective);
    cfg.band_limit_lags = args.band_lags;
    let exec = Execution::default();
    let (found, score) = match args.mode {
        SearchMode::Exhaustive => search_code_exhaustive_with(&cfg, args.force, exec)?,
        SearchMode::Heuristic => {
            run.seed("search", args.seed);
            search_code_heuristic_with(&cfg, args.restarts, args.flips, args.seed, exec)?
        }
    };
    let code = ApertureCode::new(found.bits, args.pitch_um, args.height_mm)?;
    ensure_dir(&dir)?;

    let code_path = dir.join("code.json");
    code.save(&code_path)?;
    run.output(&code_path);

    let mut rows = vec![("search", &code, score)];
    let refs = [ApertureCode::slit(args.n), ApertureCode::open(args.n)];
    let ref_scores: Vec<CodeScore> = refs
        .iter()
        .map(|c| score_code(c, args.nlambda, args.alpha, args.band_lags, args.objective))
        .collect::<krylov_hsi::Result<_>>()?;
    rows.push(("slit", &refs[0], ref_scores[0]));
    rows.push(("open", &refs[1], ref_scores[1]));
    let scores_path = dir.join("scores.csv");
    write_scores(&scores_path, &rows, &args)?;
    run.output(&scores_path);

    let resp_path = dir.join("response.csv");
    write_response(&resp_path, &code, args.nlambda)?;
    run.output(&resp_path);

    println!(
        "code {} (N={}, throughput {}), objective {:.6}, min|A| {:.4}, min autocorr {}, side-lobe ratio {:.4}",
        code.bit_string(),
        code.len(),
        score.throughput,
        score.objective,
        score.min_dft_mag,
        score.min_autocorr,
        score.peak_ratio
    );
    run.finish(NAME, &args, &dir.join("manifest.json"))?;
    Ok(())
}
