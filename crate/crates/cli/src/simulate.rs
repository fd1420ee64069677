//! `simulate`: blur → Krylov acquisition → deconvolution → reconstruction.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use krylov_hsi::aperture::ApertureCode;
use krylov_hsi::hsi::{load_cube, save_cube, HsiCube};
use krylov_hsi::krylov::{lanczos, reconstruct, save_factors, KrylovConfig};
use krylov_hsi::optics::{blur_cube_with, make_kernels, BlurKernels, OpticalParams};
use krylov_hsi::recovery::{
    deconv_factors, mean_pixel_sam, rsnr, save_metrics_csv, DeconvConfig, DeconvMethod, MetricsRecord,
};
use krylov_hsi::sensing::{budget, Instrument, NoiseModel};
use krylov_hsi::Execution;

use crate::manifest::Run;
use crate::{ensure_dir, output_dir, pgm};

pub const NAME: &str = "simulate";

/// Noise settings shared by the measuring commands.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct NoiseArgs {
    /// Readout SNR in dB; 0 turns every noise source off.
    #[arg(long, default_value_t = 60.0)]
    pub noise_db: f64,
    /// Leave out photon noise.
    #[arg(long)]
    pub no_photon: bool,
    /// Quantizer bits; 0 disables quantization.
    #[arg(long, default_value_t = 12)]
    pub quant_bits: u32,
    /// Expected photons at full scale.
    #[arg(long, default_value_t = 50_000.0)]
    pub photons: f64,
}

impl NoiseArgs {
    pub fn model(&self, seed: u64) -> NoiseModel {
        if self.noise_db == 0.0 {
            return NoiseModel::noiseless().with_seed(seed);
        }
        NoiseModel {
            readout_snr_db: Some(self.noise_db),
            quant_bits: (self.quant_bits > 0).then_some(self.quant_bits),
            photon_noise: !self.no_photon,
            photons_at_full_scale: self.photons,
            full_scale: None,
            seed,
        }
    }
}

/// Seeds for the separate random streams of one run.
pub fn derived_seeds(seed: u64) -> (u64, u64) {
    (seed, seed ^ 0x5eed_0f_c0de)
}

fn parse_deconv(s: &str) -> Result<DeconvMethod, String> {
    s.parse().map_err(|e: krylov_hsi::Error| e.to_string())
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Scene cube header (`.json`) or stem.
    #[arg(long)]
    pub scene: PathBuf,
    /// Pupil code JSON; without it the optics are taken as blur-free.
    #[arg(long)]
    pub code: Option<PathBuf>,
    /// Optical parameters JSON (default: f = 100 mm, 300 /mm, 5 um pixels, 500 nm).
    #[arg(long)]
    pub optics: Option<PathBuf>,
    /// Target rank k.
    #[arg(long, default_value_t = 4)]
    pub rank: usize,
    /// Krylov iterations L.
    #[arg(long, default_value_t = 6)]
    pub iters: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub noise: NoiseArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// none | wiener | l2_smooth. Wiener zero-pads the band ends and rings on
    /// spectra that stay bright there, so the default is l2_smooth.
    #[arg(long, default_value = "l2_smooth", value_parser = parse_deconv)]
    pub spectral_deconv: DeconvMethod,
    /// none | wiener | tv
    #[arg(long, default_value = "wiener", value_parser = parse_deconv)]
    pub spatial_deconv: DeconvMethod,
    #[arg(long, default_value_t = 1e-3)]
    pub wiener_nsr: f64,
    /// Smoothness weight for l2_smooth, relative to each vector's peak.
    #[arg(long, default_value_t = 0.003)]
    pub eta: f64,
    /// TV weight, relative to each vector's peak.
    #[arg(long, default_value_t = 1e-3)]
    pub tv_weight: f64,
    #[arg(long, default_value_t = 100)]
    pub tv_iters: usize,
    /// Bands written as PGM images (default: first, middle, last).
    #[arg(long, value_delimiter = ',')]
    pub bands: Vec<usize>,
    /// Run every loop on one thread.
    #[arg(long)]
    pub sequential: bool,
    /// Output directory (default: $KHSI_OUTPUT_DIR or ./khsi-out).
    #[arg(long, visible_alias = "outdir")]
    pub out: Option<PathBuf>,
}

pub fn scene_label(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scene".into())
}

pub fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

/// Kernels for the given code (identity without one) and the blurred scene.
pub fn optics_for(
    run: &mut Run,
    scene: &HsiCube,
    code: &Option<PathBuf>,
    optics: &Option<PathBuf>,
    exec: Execution,
) -> Result<(BlurKernels, HsiCube)> {
    let params = match optics {
        Some(p) => {
            run.input(p);
            OpticalParams::load(p)?
        }
        None => OpticalParams::default(),
    };
    match code {
        Some(p) => {
            run.input(p);
            let code = ApertureCode::load(p)?;
            let kernels = make_kernels(&code, &params, scene.geometry())?;
            let blurred = blur_cube_with(scene, &kernels, exec)?;
            Ok((kernels, blurred))
        }
        None => Ok((BlurKernels::identity(), scene.clone())),
    }
}

fn write_bands(run: &mut Run, dir: &Path, cube: &HsiCube, bands: &[usize]) -> Result<()> {
    let nl = cube.nl();
    let mut picks: Vec<usize> = if bands.is_empty() {
        vec![0, nl / 2, nl - 1]
    } else {
        bands.to_vec()
    };
    picks.sort_unstable();
    picks.dedup();
    if let Some(&bad) = picks.iter().find(|&&b| b >= nl) {
        return Err(crate::usage(format!("band {bad} out of range (cube has {nl})")));
    }
    let lo = cube.data().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = cube.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for b in picks {
        let written = pgm::write_band(
            dir,
            &format!("band_{b:03}"),
            cube.band(b),
            (cube.nx(), cube.ny()),
            (b, cube.wavelengths()[b]),
            (lo, hi),
        )?;
        written.iter().for_each(|p| run.output(p));
    }
    Ok(())
}

pub fn run(mut args: SimulateArgs) -> Result<()> {
    let mut run = Run::start();
    let dir = output_dir(&args.out);
    args.out = Some(dir.clone());
    let exec = execution(args.sequential);
    let (noise_seed, krylov_seed) = derived_seeds(args.seed);
    run.seed("noise", noise_seed);
    run.seed("krylov", krylov_seed);

    run.input(&args.scene);
    let scene = load_cube(&args.scene).with_context(|| format!("loading scene {}", args.scene.display()))?;
    let (kernels, blurred) = optics_for(&mut run, &scene, &args.code, &args.optics, exec)?;
    let noise = args.noise.model(noise_seed);
    let mut cam = Instrument::new(Arc::new(blurred), noise)?;
    let cfg = KrylovConfig::new(args.rank, args.iters).with_seed(krylov_seed);
    let factors = lanczos(&mut cam, &cfg)?;
    let log = cam.take_log();

    let base = DeconvConfig {
        wiener_nsr: args.wiener_nsr,
        eta: args.eta,
        tv_weight: args.tv_weight,
        tv_iters: args.tv_iters,
        ..DeconvConfig::default()
    };
    let spectral = base.clone().with_method(args.spectral_deconv);
    let spatial = base.with_method(args.spatial_deconv);
    let factors = deconv_factors(&factors, &kernels, &spectral, &spatial, exec)?;
    let recon = reconstruct(&factors, args.rank)?;

    let b = budget(&log, (scene.nx(), scene.ny(), scene.nl()))?;
    let row = MetricsRecord {
        scene: scene_label(&args.scene),
        method: "krism".into(),
        k: args.rank,
        l: factors.iterations,
        noise_db: args.noise.noise_db,
        rsnr_db: rsnr(scene.data(), recon.data())?,
        sam_deg: mean_pixel_sam(scene.data(), recon.data(), scene.npix())?,
        exposures: log.total_exposures(),
        compression: b.compression,
    };

    ensure_dir(&dir)?;
    let factors_path = dir.join("factors.json");
    save_factors(&factors, &factors_path)?;
    run.output(&factors_path);
    let recon_path = dir.join("recon");
    save_cube(&recon, &recon_path)?;
    run.output(&recon_path.with_extension("json"));
    run.output(&recon_path.with_extension("bin"));
    let metrics_path = dir.join("metrics.csv");
    save_metrics_csv(std::slice::from_ref(&row), &metrics_path)?;
    run.output(&metrics_path);
    let log_path = dir.join("measurements.csv");
    log.save_csv(&log_path)?;
    run.output(&log_path);
    let budget_path = dir.join("budget.json");
    std::fs::write(&budget_path, serde_json::to_string_pretty(&b)?)?;
    run.output(&budget_path);
    write_bands(&mut run, &dir, &recon, &args.bands)?;

    println!(
        "krism k={} L={}: RSNR {:.2} dB, SAM {:.2} deg, {} exposures, N/M {:.2}",
        row.k, row.l, row.rsnr_db, row.sam_deg, row.exposures, row.compression
    );
    run.finish(NAME, &args, &dir.join("manifest.json"))?;
    Ok(())
}
