//! Experiment harness for the depthgeom toolkit.
//!
//! Exit codes: 0 success, 2 bad arguments, 3 I/O or parse failure,
//! 4 numerical failure (e.g. empty joint validity mask).

mod commands;
mod common;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "depthgeom",
    version,
    about = "Depth-map geometry experiment harness"
)]
pub struct Cli {
    /// Worker threads for pixel-parallel stages (0 = rayon default). Results
    /// are identical for any thread count.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Asn,
    Sobel,
    Lsq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SceneKind {
    Plane,
    Hemisphere,
    Step,
    Wedge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EvalKind {
    Depth,
    Normal,
    Cloud,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Estimate a normal map from a depth raster.
    Normals {
        #[arg(long)]
        depth: PathBuf,
        #[arg(long)]
        intrinsics: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Asn)]
        method: Method,
        /// Local patch side length (odd).
        #[arg(long, default_value_t = 5)]
        patch: usize,
        /// Sampled triplets per pixel.
        #[arg(long, default_value_t = 40)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Guidance provider: `constant`, `oracle`, or a feature raster path.
        #[arg(long, default_value = "constant")]
        guidance: String,
        /// Scale factor applied to features loaded from a file.
        #[arg(long, default_value_t = 1.0)]
        guidance_scale: f64,
        /// Segment raster, required with `--guidance oracle`.
        #[arg(long)]
        segments: Option<PathBuf>,
        /// Disable area adaption.
        #[arg(long)]
        no_area: bool,
        /// Disable geometric context adaption.
        #[arg(long)]
        no_context: bool,
        #[arg(long, default_value_t = 0.25)]
        collinearity_eps: f64,
        #[arg(long, default_value_t = 16)]
        max_resample: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a prediction raster against ground truth and emit metric rows.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        intrinsics: PathBuf,
        #[arg(long, value_enum)]
        kind: EvalKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render an analytic scene to depth/normals/segments/intrinsics files.
    Scene {
        #[arg(long, value_enum)]
        kind: SceneKind,
        #[arg(long, default_value_t = 128)]
        res: usize,
        /// Gaussian depth-noise sigma in meters.
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Plane only: x slope of the plane (0 = fronto-parallel).
        #[arg(long, default_value_t = 0.0)]
        tilt: f64,
        /// Hemisphere only: leave background pixels invalid instead of the
        /// backing plane.
        #[arg(long)]
        no_background: bool,
        #[arg(long)]
        outdir: PathBuf,
    },
    /// Sweep the triplet count on noisy hemispheres.
    SweepK {
        #[arg(long, value_enum, default_value_t = SceneKind::Hemisphere)]
        kind: SceneKind,
        #[arg(long, default_value_t = 0.01)]
        sigma: f64,
        #[arg(long, value_delimiter = ',', default_value = "10,20,40,60,80")]
        klist: Vec<usize>,
        #[arg(long, default_value_t = 128)]
        res: usize,
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        #[arg(long, default_value_t = 5)]
        patch: usize,
        /// `constant` or `oracle`.
        #[arg(long, default_value = "oracle")]
        guidance: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep the local patch size on noisy hemispheres.
    SweepPatch {
        #[arg(long, value_delimiter = ',', default_value = "3,5,7,9")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0.002)]
        sigma: f64,
        #[arg(long, default_value_t = 40)]
        k: usize,
        #[arg(long, default_value_t = 128)]
        res: usize,
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        /// `constant` or `oracle`.
        #[arg(long, default_value = "constant")]
        guidance: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare area-weighted and uniform averaging across noise levels.
    NoiseExp {
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "0.0,0.002,0.005,0.01,0.02"
        )]
        sigmas: Vec<f64>,
        /// Any of `area`, `uniform`.
        #[arg(long, value_delimiter = ',', default_value = "area,uniform")]
        modes: Vec<String>,
        #[arg(long, default_value_t = 128)]
        res: usize,
        #[arg(long, default_value_t = 40)]
        k: usize,
        #[arg(long, default_value_t = 5)]
        patch: usize,
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Verify the analytic loss gradient against central finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 16)]
        res: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-5)]
        h: f64,
        #[arg(long, default_value_t = 12)]
        k: usize,
        #[arg(long, default_value_t = 5)]
        patch: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time the estimators and report wall and per-pixel costs.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "64,128,256,512")]
        res: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "asn,sobel,lsq")]
        methods: Vec<String>,
        /// Triplet counts timed for the asn method.
        #[arg(long, value_delimiter = ',', default_value = "10,20,40,80")]
        klist: Vec<usize>,
        #[arg(long, default_value_t = 9)]
        lsq_patch: usize,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("depthgeom: failed to configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("depthgeom: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
