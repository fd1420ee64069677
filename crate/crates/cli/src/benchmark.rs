//! `benchmark`: KRISM against the sketching and Hadamard baselines.

use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use krylov_hsi::baselines::{check_parity, hadamard_acquire_full, rowcol_acquire, rowcol_recover, ParityMode};
use krylov_hsi::hsi::{load_cube, HsiCube};
use krylov_hsi::krylov::{lanczos, reconstruct, KrylovConfig};
use krylov_hsi::recovery::{mean_pixel_sam, rsnr, save_metrics_csv, MetricsRecord};
use krylov_hsi::sensing::{budget, Instrument, MeasurementLog};

use crate::manifest::Run;
use crate::simulate::{derived_seeds, scene_label, NoiseArgs};
use crate::{ensure_dir, output_dir, usage};

pub const NAME: &str = "benchmark";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Krism,
    Rowcol,
    Hadamard,
}

fn parse_parity(s: &str) -> Result<ParityMode, String> {
    s.parse().map_err(|e: krylov_hsi::Error| e.to_string())
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "krism,rowcol,hadamard")]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 4)]
    pub rank: usize,
    /// Krylov iterations L.
    #[arg(long, default_value_t = 6)]
    pub iters: usize,
    /// Row/column sketch size (default: L).
    #[arg(long)]
    pub sketch: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub noise: NoiseArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// How KRISM and Row/Col budgets are matched: exposures (KRISM may not
    /// use more) or signed (equal code counts per kind).
    #[arg(long, default_value = "exposures", value_parser = parse_parity)]
    pub budget_match: ParityMode,
    /// Report mismatched budgets instead of refusing.
    #[arg(long)]
    pub no_parity: bool,
    /// Output directory (default: $KHSI_OUTPUT_DIR or ./khsi-out).
    #[arg(long, visible_alias = "outdir")]
    pub out: Option<PathBuf>,
}

struct Outcome {
    method: Method,
    estimate: HsiCube,
    log: MeasurementLog,
    l: usize,
}

pub fn run(mut args: BenchmarkArgs) -> Result<()> {
    let mut run = Run::start();
    let dir = output_dir(&args.out);
    args.out = Some(dir.clone());
    let p = args.sketch.unwrap_or(args.iters);
    args.sketch = Some(p);
    if args.methods.is_empty() {
        return Err(usage("no methods selected"));
    }
    let mut methods = args.methods.clone();
    let mut seen = Vec::new();
    methods.retain(|m| {
        let fresh = !seen.contains(m);
        seen.push(*m);
        fresh
    });
    let (noise_seed, algo_seed) = derived_seeds(args.seed);
    run.seed("noise", noise_seed);
    run.seed("algorithm", algo_seed);

    run.input(&args.scene);
    let scene = Arc::new(load_cube(&args.scene).with_context(|| format!("loading scene {}", args.scene.display()))?);
    let dims = (scene.nx(), scene.ny(), scene.nl());

    let mut outcomes = Vec::new();
    for (i, &method) in methods.iter().enumerate() {
        // each method sees its own noise stream
        let noise = args.noise.model(noise_seed.wrapping_add(i as u64));
        let mut cam = Instrument::new(scene.clone(), noise)?;
        let (estimate, l) = match method {
            Method::Krism => {
                let f = lanczos(&mut cam, &KrylovConfig::new(args.rank, args.iters).with_seed(algo_seed))?;
                (reconstruct(&f, args.rank)?, f.iterations)
            }
            Method::Rowcol => {
                let sketch = rowcol_acquire(&mut cam, p, algo_seed)?;
                let est = rowcol_recover(&sketch, args.rank)?;
                (est.to_cube(scene.geometry().clone())?, p)
            }
            Method::Hadamard => {
                let scan = hadamard_acquire_full(&mut cam, algo_seed)?;
                (scan.cube, scan.codes)
            }
        };
        outcomes.push(Outcome {
            method,
            estimate,
            log: cam.take_log(),
            l,
        });
    }

    let find = |m: Method| outcomes.iter().find(|o| o.method == m);
    if let (Some(k), Some(r)) = (find(Method::Krism), find(Method::Rowcol)) {
        if let Err(e) = check_parity(&k.log, &r.log, args.budget_match) {
            if !args.no_parity {
                return Err(usage(format!("{e}; pass --no-parity to run anyway")));
            }
            eprintln!("warning: {e}");
        }
    }

    let mut rows = Vec::new();
    for o in &outcomes {
        let b = budget(&o.log, dims)?;
        let row = MetricsRecord {
            scene: scene_label(&args.scene),
            method: format!("{:?}", o.method).to_lowercase(),
            k: args.rank,
            l: o.l,
            noise_db: args.noise.noise_db,
            rsnr_db: rsnr(scene.data(), o.estimate.data())?,
            sam_deg: mean_pixel_sam(scene.data(), o.estimate.data(), scene.npix())?,
            exposures: o.log.total_exposures(),
            compression: b.compression,
        };
        println!(
            "{:<9} RSNR {:>7.2} dB  SAM {:>6.2} deg  exposures {:>5}  N/M {:>7.2}",
            row.method, row.rsnr_db, row.sam_deg, row.exposures, row.compression
        );
        rows.push(row);
    }
    ensure_dir(&dir)?;
    let path = dir.join("benchmark.csv");
    save_metrics_csv(&rows, &path)?;
    run.output(&path);
    run.finish(NAME, &args, &dir.join("benchmark.manifest.json"))?;
    Ok(())
}
