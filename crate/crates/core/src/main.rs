use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use planestitch::evalmetrics::rmse_ncc;
use planestitch::ingest::{self, io, InputPaths, SceneSpec, StitchConfig};
use planestitch::pipeline::{dump_intermediates, run_stitch, StitchMode, StitchOptions};
use planestitch::segmetrics::permuted_scores;
use planestitch::Error;

/// Two-image stitching by planar region consensus.
#[derive(Parser)]
#[command(name = "planestitch", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a predicted region mask against ground truth up to relabeling.
    Segscore {
        /// Predicted label mask (8-bit gray PNG).
        #[arg(long)]
        pred: PathBuf,
        /// Ground-truth label mask (8-bit gray PNG).
        #[arg(long)]
        gt: PathBuf,
    },
    /// Stitch a reference and a target image into one mosaic.
    Stitch(Box<StitchArgs>),
    /// RMSE of one minus NCC between two aligned images over an overlap mask.
    Eval {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long = "tar")]
        target: PathBuf,
        /// Gray PNG; nonzero pixels belong to the overlap.
        #[arg(long)]
        overlap: PathBuf,
    },
    /// Write a synthetic multi-plane fixture directory.
    Synth {
        #[arg(long, default_value_t = 2)]
        planes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 800)]
        width: usize,
        #[arg(long, default_value_t = 600)]
        height: usize,
        /// Mesh cells per side written into the fixture config.
        #[arg(long)]
        mesh: Option<usize>,
    },
}

#[derive(Args)]
struct StitchArgs {
    /// `key = value` config; input paths in it are relative to its directory.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Reference image (overrides the config).
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    /// Target image (overrides the config).
    #[arg(long = "tar")]
    target: Option<PathBuf>,
    #[arg(long)]
    ref_mask: Option<PathBuf>,
    #[arg(long)]
    tar_mask: Option<PathBuf>,
    /// Match file, one `x1 y1 x2 y2` per line.
    #[arg(long)]
    matches: Option<PathBuf>,
    #[arg(long)]
    ref_lines: Option<PathBuf>,
    #[arg(long)]
    tar_lines: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Mosaic output PNG.
    #[arg(long)]
    out: PathBuf,
    /// Report file; printed to stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Directory for overlays, field and mesh dumps, warped layers and masks.
    #[arg(long)]
    dump_intermediates: Option<PathBuf>,
    /// Warp the target by one global homography instead of the mesh solve.
    #[arg(long)]
    baseline_global: bool,
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Input(_) | Error::File { .. } | Error::Io { .. } | Error::Image { .. } | Error::Spec(_) => 2,
        Error::Consensus(_) | Error::Estimation(_) => 3,
        Error::Solver { .. } => 4,
        _ => 1,
    }
}

fn segscore(pred: &Path, gt: &Path) -> Result<(), Error> {
    let s = permuted_scores(&io::read_mask(pred)?, &io::read_mask(gt)?)?;
    println!("accuracy={:?} mean_iou={:?}", s.accuracy, s.mean_iou);
    Ok(())
}

fn eval(reference: &Path, target: &Path, overlap: &Path) -> Result<(), Error> {
    let a = io::read_rgb(reference)?;
    let b = io::read_rgb(target)?;
    let mask = io::read_rgb(overlap)?;
    if mask.dimensions() != a.dimensions() {
        return Err(Error::Input("overlap mask size differs from the images".into()));
    }
    let overlap: Vec<bool> = mask.pixels().map(|p| p.0.iter().any(|&c| c > 0)).collect();
    let s = rmse_ncc(&a, &b, &overlap)?;
    println!("rmse_ncc={:?} evaluated={} skipped={}", s.rmse, s.evaluated, s.skipped);
    Ok(())
}

fn synth(planes: usize, seed: u64, out: &Path, width: usize, height: usize, mesh: Option<usize>) -> Result<(), Error> {
    let mut scene = ingest::synth_scene(&SceneSpec::preset(planes, width, height), seed)?;
    if let Some(m) = mesh {
        scene.bundle.config.mesh_cols = m;
        scene.bundle.config.mesh_rows = m;
        scene.bundle.config.check().map_err(Error::Input)?;
    }
    let cfg = ingest::write_scene(&scene, out)?;
    println!("{}", cfg.display());
    Ok(())
}

fn stitch(args: &StitchArgs) -> Result<(), Error> {
    let flags = InputPaths {
        reference: args.reference.clone(),
        target: args.target.clone(),
        ref_mask: args.ref_mask.clone(),
        tar_mask: args.tar_mask.clone(),
        matches: args.matches.clone(),
        ref_lines: args.ref_lines.clone(),
        tar_lines: args.tar_lines.clone(),
    };
    let mut bundle = match &args.config {
        Some(c) => ingest::load_config_bundle(c, flags)?,
        None => ingest::load_inputs(&flags, StitchConfig::default())?,
    };
    if let Some(seed) = args.seed {
        bundle.config.seed = seed;
    }
    let options = StitchOptions {
        mode: if args.baseline_global {
            StitchMode::GlobalBaseline
        } else {
            StitchMode::Regional
        },
        ..Default::default()
    };
    let run = run_stitch(&bundle, &options);
    eprint!("{}", run.report.log());
    match &args.report {
        Some(p) => io::write_text(p, &run.report.to_text())?,
        None => print!("{}", run.report.to_text()),
    }
    let out = run.outcome?;
    io::write_rgb(&args.out, &out.mosaic)?;
    if let Some(dir) = &args.dump_intermediates {
        dump_intermediates(dir, &bundle, &out)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Segscore { pred, gt } => segscore(pred, gt),
        Command::Stitch(args) => stitch(args),
        Command::Eval {
            reference,
            target,
            overlap,
        } => eval(reference, target, overlap),
        Command::Synth {
            planes,
            seed,
            out,
            width,
            height,
            mesh,
        } => synth(*planes, *seed, out, *width, *height, *mesh),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
