use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ufo_core::evaluation::DEFAULT_IOU;
use ufo_core::pipeline::{ConfigError, PipelineConfig};
use ufo_core::runner::{read_sequence_list, run, run_davis, DavisConfig, RunConfig, RunError};
use ufo_core::synthetic::{generate_synthetic, SyntheticSpec};
use ufo_core::MetricReport;

/// Discover the most salient object in an image sequence.
#[derive(Debug, Parser)]
#[command(name = "ufo", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate every sequence of a DAVIS-style dataset.
    Davis(DavisArgs),
}

#[derive(Debug, Args)]
struct PipelineArgs {
    /// Frames kept in the correspondence graph (at least 2).
    #[arg(long, default_value_t = PipelineConfig::default().window)]
    window: usize,
    /// Proposals kept after NMS.
    #[arg(long, default_value_t = PipelineConfig::default().keep_max)]
    keep_max: usize,
    #[arg(long, default_value_t = PipelineConfig::default().nms_iou)]
    nms_iou: f64,
    /// Minimum embedding similarity for a correspondence edge.
    #[arg(long, default_value_t = PipelineConfig::default().gate)]
    gate: f64,
    /// Weight of edge similarity in path scores.
    #[arg(long, default_value_t = PipelineConfig::default().lambda)]
    lambda: f64,
    /// Minimum correlation peak for a template prediction.
    #[arg(long, default_value_t = PipelineConfig::default().peak_gate)]
    peak_gate: f64,
    /// Raster-scan passes of the saliency transform.
    #[arg(long, default_value_t = PipelineConfig::default().passes)]
    passes: usize,
    /// IoU threshold for precision/recall/AP.
    #[arg(long, default_value_t = DEFAULT_IOU)]
    iou: f64,
}

impl PipelineArgs {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            window: self.window,
            keep_max: self.keep_max,
            nms_iou: self.nms_iou,
            gate: self.gate,
            lambda: self.lambda,
            peak_gate: self.peak_gate,
            passes: self.passes,
            ..PipelineConfig::default()
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Directory of frames (png, jpg, ppm), processed in file-name order.
    #[arg(long, conflicts_with = "synthetic")]
    input: Option<PathBuf>,
    /// Generate a synthetic sequence, e.g. "size=64x64,frames=30,distractors=0.2,drop=14".
    /// Keys: size, frames, object, start, velocity, noise, distractors, clutter, drop, seed.
    #[arg(long)]
    synthetic: Option<String>,
    /// Proposal manifest (JSON). Synthetic runs use the generated one by default.
    #[arg(long)]
    proposals: Option<PathBuf>,
    /// Ignore any manifest and propose connected components of the saliency mask.
    #[arg(long, conflicts_with = "proposals")]
    fallback_proposals: bool,
    /// Directory of per-frame embedding files (NNNNN.ufoe).
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Ground truth: mask directory or ground_truth.json.
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "ufo-out")]
    out: PathBuf,
    /// Write overlay PNGs (ground truth green, detection red).
    #[arg(long)]
    overlay: bool,
    /// Write the per-frame saliency maps.
    #[arg(long)]
    saliency: bool,
    /// Seed for the synthetic generator (overrides seed= in the spec).
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
struct DavisArgs {
    /// Dataset root holding JPEGImages/ and Annotations/.
    #[arg(long)]
    root: PathBuf,
    /// Resolution level under JPEGImages/ and Annotations/, e.g. 480p.
    #[arg(long)]
    resolution: Option<String>,
    /// Sequence list file (e.g. ImageSets/2016/val.txt); all sequences otherwise.
    #[arg(long)]
    sequences: Option<PathBuf>,
    /// Directory of <sequence>.json proposal manifests.
    #[arg(long)]
    proposals_dir: Option<PathBuf>,
    /// Directory of <sequence>/NNNNN.ufoe embedding files.
    #[arg(long)]
    embeddings_dir: Option<PathBuf>,
    #[arg(long, default_value = "ufo-davis")]
    out: PathBuf,
    #[arg(long)]
    overlay: bool,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

fn print_report(name: &str, r: &MetricReport) {
    eprintln!(
        "{name}: P={:.3} R={:.3} F={:.3} CorLoc={:.3} AP={:.3} t={:.4}s/frame",
        r.precision, r.recall, r.f_score, r.corloc, r.ap, r.seconds_per_frame
    );
}

fn run_single(args: RunArgs) -> Result<(), RunError> {
    let pipeline = args.pipeline.config();
    // fail on bad settings before generating anything
    pipeline.validate()?;

    let mut cfg = match (&args.input, &args.synthetic) {
        (Some(dir), None) => {
            let mut cfg = RunConfig::new(dir, &args.out);
            cfg.proposals = args.proposals.clone();
            cfg.ground_truth = args.gt.clone();
            cfg
        }
        (None, Some(spec)) => {
            let mut spec: SyntheticSpec = spec
                .parse()
                .map_err(|e| RunError::Usage(format!("--synthetic: {e}")))?;
            if let Some(seed) = args.seed {
                spec.seed = seed;
            }
            let syn = generate_synthetic(&spec, &args.out.join("synthetic")).map_err(|e| {
                RunError::Output {
                    path: args.out.join("synthetic").display().to_string(),
                    reason: e.to_string(),
                }
            })?;
            let mut cfg = RunConfig::new(&syn.frames_dir, &args.out);
            cfg.sequence = Some("synthetic".into());
            cfg.proposals = args.proposals.clone().or(Some(syn.proposals_path));
            cfg.ground_truth = args.gt.clone().or(Some(syn.gt_dir));
            cfg
        }
        _ => {
            return Err(RunError::Usage(
                "exactly one of --input or --synthetic is required".into(),
            ))
        }
    };
    if args.fallback_proposals {
        cfg.proposals = None;
    }
    cfg.embeddings = args.embeddings;
    cfg.overlay = args.overlay;
    cfg.dump_saliency = args.saliency;
    cfg.iou = args.pipeline.iou;
    cfg.pipeline = pipeline;

    let summary = run(&cfg)?;
    eprintln!(
        "{}: {} frames, {:.4} s/frame, detections in {}",
        summary.sequence,
        summary.timing.frames,
        summary.timing.seconds_per_frame,
        cfg.out.join("detections.jsonl").display()
    );
    if let Some(report) = &summary.report {
        print_report(&summary.sequence, report);
    }
    Ok(())
}

fn run_dataset(args: DavisArgs) -> Result<(), RunError> {
    let sequences = match &args.sequences {
        Some(list) => read_sequence_list(list)?,
        None => Vec::new(),
    };
    let cfg = DavisConfig {
        root: args.root,
        resolution: args.resolution,
        sequences,
        proposals_dir: args.proposals_dir,
        embeddings_dir: args.embeddings_dir,
        out: args.out,
        overlay: args.overlay,
        iou: args.pipeline.iou,
        pipeline: args.pipeline.config(),
    };
    cfg.pipeline.validate()?;
    if !(cfg.iou > 0.0 && cfg.iou <= 1.0) {
        return Err(ConfigError {
            field: "iou",
            reason: "must lie in (0, 1]".into(),
        }
        .into());
    }
    for (name, report) in run_davis(&cfg)? {
        print_report(&name, &report);
    }
    eprintln!("metrics in {}", cfg.out.join("metrics.csv").display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Some(Command::Davis(args)) => run_dataset(args),
        None => run_single(cli.run),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
