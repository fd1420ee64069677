//! `synthesize` and `inspect`.

use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};

use krylov_hsi::aperture::{score_code, ApertureCode, ObjectiveKind};
use krylov_hsi::hsi::{load_cube, save_cube_as, synth_lowrank_scene, PayloadType};
use krylov_hsi::linalg::singular_values;

use crate::manifest::Run;
use crate::{ensure_dir, output_dir, usage};

pub const SYNTH_NAME: &str = "synthesize";
pub const INSPECT_NAME: &str = "inspect";

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SynthesizeArgs {
    #[arg(long)]
    pub nx: usize,
    #[arg(long)]
    pub ny: usize,
    #[arg(long)]
    pub nl: usize,
    #[arg(long, default_value_t = 4)]
    pub rank: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Uniform dither added after scaling to unit peak, as a fraction of the peak.
    #[arg(long, default_value_t = 0.0)]
    pub noise_floor: f64,
    /// Store the payload as f32 (default f64, which keeps the exact rank).
    #[arg(long)]
    pub f32: bool,
    /// Cube path without extension (default: $KHSI_OUTPUT_DIR/scene).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn synthesize(mut args: SynthesizeArgs) -> Result<()> {
    let mut run = Run::start();
    run.seed("scene", args.seed);
    let stem = args.out.clone().unwrap_or_else(|| output_dir(&None).join("scene"));
    args.out = Some(stem.clone());
    let (cube, _) = synth_lowrank_scene(args.nx, args.ny, args.nl, args.rank, args.seed, args.noise_floor)?;
    if let Some(parent) = stem.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    let dtype = if args.f32 { PayloadType::F32Le } else { PayloadType::F64Le };
    save_cube_as(&cube, &stem, dtype)?;
    run.output(&stem.with_extension("json"));
    run.output(&stem.with_extension("bin"));
    println!(
        "wrote {} ({} x {} x {}, rank {})",
        stem.with_extension("json").display(),
        args.nx,
        args.ny,
        args.nl,
        args.rank
    );
    run.finish(SYNTH_NAME, &args, &stem.with_extension("manifest.json"))?;
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct InspectArgs {
    /// Cube header (`.json`) or stem.
    #[arg(long, conflicts_with = "code", required_unless_present = "code")]
    pub cube: Option<PathBuf>,
    /// Code JSON written by design-code.
    #[arg(long)]
    pub code: Option<PathBuf>,
    /// Singular values to list.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    /// Spectral samples used when scoring a code.
    #[arg(long, default_value_t = 64)]
    pub nlambda: usize,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Directory for the summary and manifest (default: $KHSI_OUTPUT_DIR or ./khsi-out).
    #[arg(long, visible_alias = "outdir")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct CubeSummary {
    nx: usize,
    ny: usize,
    nl: usize,
    wavelength_range_nm: (f64, f64),
    peak: f64,
    singular_values: Vec<f64>,
    relative: Vec<f64>,
    numerical_rank: usize,
}

#[derive(Debug, Serialize)]
struct CodeSummary {
    bits: String,
    n: usize,
    throughput: usize,
    pitch_um: f64,
    height_mm: f64,
    invertible: krylov_hsi::aperture::CodeScore,
    imperceptible: krylov_hsi::aperture::CodeScore,
}

pub fn inspect(mut args: InspectArgs) -> Result<()> {
    let mut run = Run::start();
    let dir = output_dir(&args.out);
    args.out = Some(dir.clone());
    let summary = match (&args.cube, &args.code) {
        (Some(path), None) => {
            run.input(path);
            let cube = load_cube(path)?;
            let sv = singular_values(&cube.to_matrix())?;
            let s1 = sv.first().copied().unwrap_or(0.0);
            let relative: Vec<f64> = sv.iter().map(|s| if s1 > 0.0 { s / s1 } else { 0.0 }).collect();
            let rank = relative.iter().filter(|r| **r > 1e-10).count();
            let wl = cube.wavelengths();
            println!("cube {} x {} x {}", cube.nx(), cube.ny(), cube.nl());
            println!("wavelengths {:.2}..{:.2} nm, peak {:.6}", wl[0], wl[wl.len() - 1], cube.max_value());
            println!("numerical rank (sigma_i > 1e-10 sigma_1): {rank}");
            for (i, (s, r)) in sv.iter().zip(&relative).take(args.top).enumerate() {
                println!("sigma_{:<3} {:>14.6e}  ratio {:.3e}", i + 1, s, r);
            }
            serde_json::to_value(CubeSummary {
                nx: cube.nx(),
                ny: cube.ny(),
                nl: cube.nl(),
                wavelength_range_nm: (wl[0], wl[wl.len() - 1]),
                peak: cube.max_value(),
                singular_values: sv.iter().take(args.top).copied().collect(),
                relative: relative.iter().take(args.top).copied().collect(),
                numerical_rank: rank,
            })?
        }
        (None, Some(path)) => {
            run.input(path);
            let code = ApertureCode::load(path)?;
            let inv = score_code(&code, args.nlambda, args.alpha, None, ObjectiveKind::Invertible)?;
            let imp = score_code(&code, args.nlambda, args.alpha, None, ObjectiveKind::Imperceptible)?;
            println!("code {} (N={}, throughput {})", code.bit_string(), code.len(), code.throughput());
            println!("pitch {} um, height {} mm", code.pitch_um, code.height_mm);
            println!(
                "min|A[k]| {:.6} over {} bins, min autocorr {}, side-lobe ratio {:.6}",
                inv.min_dft_mag,
                code.len() + args.nlambda - 1,
                inv.min_autocorr,
                inv.peak_ratio
            );
            println!("objective (alpha {}): invertible {:.6}, imperceptible {:.6}", args.alpha, inv.objective, imp.objective);
            serde_json::to_value(CodeSummary {
                bits: code.bit_string(),
                n: code.len(),
                throughput: code.throughput(),
                pitch_um: code.pitch_um,
                height_mm: code.height_mm,
                invertible: inv,
                imperceptible: imp,
            })?
        }
        _ => return Err(usage("give exactly one of --cube or --code")),
    };
    ensure_dir(&dir)?;
    let path = dir.join("inspect.json");
    std::fs::write(&path, serde_json::to_string_pretty(&summary)?)?;
    run.output(&path);
    run.finish(INSPECT_NAME, &args, &dir.join("inspect.manifest.json"))?;
    Ok(())
}
