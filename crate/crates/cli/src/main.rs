//! `khsi`: simulate coded-aperture hyperspectral acquisition from the shell.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

mod benchmark;
mod design;
mod manifest;
mod pgm;
mod scene;
mod simulate;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "KHSI_OUTPUT_DIR";
const FALLBACK_OUTPUT_DIR: &str = "khsi-out";

#[derive(Parser)]
#[command(name = "khsi", version, about = "Adaptive hyperspectral acquisition simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Search for a binary pupil code.
    DesignCode(design::DesignArgs),
    /// Blur, measure and reconstruct a scene with the Krylov method.
    Simulate(simulate::SimulateArgs),
    /// Compare acquisition methods on one scene at matched budgets.
    Benchmark(benchmark::BenchmarkArgs),
    /// Write a synthetic low-rank scene.
    Synthesize(scene::SynthesizeArgs),
    /// Print facts about a cube or a code.
    Inspect(scene::InspectArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(clap::Args)]
struct ReplayArgs {
    manifest: PathBuf,
    /// Write outputs here instead of the recorded location.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A bad flag combination or a refused request (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// `--out` if given, else `$KHSI_OUTPUT_DIR`, else `./khsi-out`.
pub fn output_dir(flag: &Option<PathBuf>) -> PathBuf {
    flag.clone()
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUTPUT_DIR))
}

pub fn ensure_dir(dir: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| {
        anyhow::Error::new(e).context(format!("creating output directory {}", dir.display()))
    })
}

fn replay(args: ReplayArgs) -> Result<()> {
    let m = manifest::RunManifest::load(&args.manifest)?;
    let params = m.parameters.clone();
    let out = args.out;
    match m.command.as_str() {
        design::NAME => design::run(with_out(serde_json::from_value(params)?, out, |a: &mut design::DesignArgs| &mut a.out)),
        simulate::NAME => simulate::run(with_out(serde_json::from_value(params)?, out, |a: &mut simulate::SimulateArgs| &mut a.out)),
        benchmark::NAME => benchmark::run(with_out(serde_json::from_value(params)?, out, |a: &mut benchmark::BenchmarkArgs| &mut a.out)),
        scene::SYNTH_NAME => {
            let mut a: scene::SynthesizeArgs = serde_json::from_value(params)?;
            if let Some(dir) = out {
                let name = a.out.as_ref().and_then(|p| p.file_name()).map(PathBuf::from);
                a.out = Some(dir.join(name.unwrap_or_else(|| PathBuf::from("scene"))));
            }
            scene::synthesize(a)
        }
        scene::INSPECT_NAME => scene::inspect(with_out(serde_json::from_value(params)?, out, |a: &mut scene::InspectArgs| &mut a.out)),
        other => Err(usage(format!("manifest records unknown command `{other}`"))),
    }
}

fn with_out<A>(mut args: A, out: Option<PathBuf>, field: impl Fn(&mut A) -> &mut Option<PathBuf>) -> A {
    if out.is_some() {
        *field(&mut args) = out;
    }
    args
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<krylov_hsi::Error>() {
            return match e {
                krylov_hsi::Error::Numerical(_) => 1,
                _ => 2,
            };
        }
        if cause.is::<UsageError>()
            || cause.is::<std::io::Error>()
            || cause.is::<serde_json::Error>()
            || cause.is::<csv::Error>()
        {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    // die quietly when piped into `head` instead of panicking on EPIPE
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::DesignCode(a) => design::run(a),
        Cmd::Simulate(a) => simulate::run(a),
        Cmd::Benchmark(a) => benchmark::run(a),
        Cmd::Synthesize(a) => scene::synthesize(a),
        Cmd::Inspect(a) => scene::inspect(a),
        Cmd::Replay(a) => replay(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
