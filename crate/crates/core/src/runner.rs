//! Running the pipeline over image directories and writing its outputs.
//!
//! A run reads frames (png, ppm/pgm, jpg; sorted by file name, indexed by
//! position) and writes into the output directory:
//!
//! - `detections.jsonl`: one record per frame, byte-identical across runs;
//! - `timing.json`: mean seconds per frame and mean per-stage milliseconds;
//! - `metrics.csv`: only when ground truth is given;
//! - `overlays/` and `saliency/`: optional per-frame PNGs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::{
    load_davis_gt, write_metrics_csv, EvalError, GroundTruth, MetricReport, DEFAULT_IOU,
};
use crate::geometry::{BoundingBox, Frame, GeometryError};
use crate::pipeline::{
    ConfigError, DetectionRecord, EmbeddingInput, PipelineConfig, PipelineError, ProposalInput,
    Session, StageTimings,
};
use crate::proposals::{ProposalError, ProposalManifest, ProposalSource};
use crate::saliency::SaliencyError;

const FRAME_EXTENSIONS: [&str; 6] = ["png", "jpg", "jpeg", "ppm", "pgm", "pnm"];

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("no frames found in {0}")]
    NoFrames(String),
    #[error(transparent)]
    Frame(#[from] GeometryError),
    #[error(transparent)]
    Proposals(#[from] ProposalError),
    #[error(transparent)]
    GroundTruth(#[from] EvalError),
    #[error("cannot parse ground truth {path}: {reason}")]
    GroundTruthJson { path: String, reason: String },
    #[error("cannot write {path}: {reason}")]
    Output { path: String, reason: String },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

impl RunError {
    /// Process exit code: 1 for configuration, 2 for input/output, 3 for
    /// failures inside the pipeline.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Usage(_) => 1,
            RunError::Pipeline(_) => 3,
            _ => 2,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError {
    let path = path.display().to_string();
    move |source| RunError::Io { path, source }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub frames_dir: PathBuf,
    pub proposals: Option<PathBuf>,
    /// Directory of per-frame `UFOE` files; the built-in descriptor otherwise.
    pub embeddings: Option<PathBuf>,
    /// Mask directory or `ground_truth.json`.
    pub ground_truth: Option<PathBuf>,
    pub out: PathBuf,
    pub overlay: bool,
    pub dump_saliency: bool,
    pub sequence: Option<String>,
    pub iou: f64,
    pub pipeline: PipelineConfig,
}

impl RunConfig {
    pub fn new(frames_dir: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            frames_dir: frames_dir.into(),
            proposals: None,
            embeddings: None,
            ground_truth: None,
            out: out.into(),
            overlay: false,
            dump_saliency: false,
            sequence: None,
            iou: DEFAULT_IOU,
            pipeline: PipelineConfig::default(),
        }
    }
}

/// One line of `detections.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionLine {
    pub frame: usize,
    pub bbox: Option<[i32; 4]>,
    pub objectness: Option<f64>,
    pub source: Option<ProposalSource>,
    pub detection_frame: Option<usize>,
}

impl From<&DetectionRecord> for DetectionLine {
    fn from(r: &DetectionRecord) -> Self {
        Self {
            frame: r.frame,
            bbox: r.bbox.map(|b| [b.x, b.y, b.w, b.h]),
            objectness: r.objectness,
            source: r.source,
            detection_frame: r.detection_frame,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TimingSummary {
    pub frames: usize,
    pub seconds_per_frame: f64,
    pub mean_stage_ms: StageTimings,
    pub peak_retained_frames: usize,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub sequence: String,
    pub records: Vec<DetectionRecord>,
    pub timing: TimingSummary,
    pub report: Option<MetricReport>,
}

/// Frame files of a directory in name order.
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if path.is_file() && ext.is_some_and(|e| FRAME_EXTENSIONS.contains(&e.as_str())) {
            paths.push(path);
        }
    }
    if paths.is_empty() {
        return Err(RunError::NoFrames(dir.display().to_string()));
    }
    paths.sort();
    Ok(paths)
}

/// Loads ground truth from a mask directory or a JSON file.
pub fn load_ground_truth(path: &Path) -> Result<GroundTruth, RunError> {
    if path.is_dir() {
        return Ok(load_davis_gt(path)?);
    }
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| RunError::GroundTruthJson {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

/// The explicit name, else the frame directory's name (its parent's when the
/// directory is called `frames`).
fn sequence_name(cfg: &RunConfig) -> String {
    if let Some(s) = &cfg.sequence {
        return s.clone();
    }
    let dir = cfg
        .frames_dir
        .canonicalize()
        .unwrap_or_else(|_| cfg.frames_dir.clone());
    let name = |p: &Path| p.file_name().and_then(|n| n.to_str()).map(str::to_string);
    match name(&dir).as_deref() {
        Some("frames") => dir.parent().and_then(name),
        other => other.map(str::to_string),
    }
    .unwrap_or_else(|| "sequence".into())
}

fn draw_rect(img: &mut image::RgbImage, b: &BoundingBox, color: [u8; 3]) {
    let (w, h) = (img.width() as i32, img.height() as i32);
    let mut put = |x: i32, y: i32| {
        if (0..w).contains(&x) && (0..h).contains(&y) {
            img.put_pixel(x as u32, y as u32, image::Rgb(color));
        }
    };
    for x in b.x..b.right() {
        put(x, b.y);
        put(x, b.bottom() - 1);
    }
    for y in b.y..b.bottom() {
        put(b.x, y);
        put(b.right() - 1, y);
    }
}

fn write_overlay(
    frame: &Frame,
    gt: Option<BoundingBox>,
    det: Option<BoundingBox>,
    path: &Path,
) -> Result<(), RunError> {
    let mut img = frame.to_rgb8();
    if let Some(g) = gt {
        draw_rect(&mut img, &g, [0, 255, 0]);
    }
    if let Some(d) = det {
        draw_rect(&mut img, &d, [255, 0, 0]);
    }
    img.save(path).map_err(|e| RunError::Output {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

/// Runs one sequence end to end.
pub fn run(cfg: &RunConfig) -> Result<RunSummary, RunError> {
    cfg.pipeline.validate()?;
    if !(cfg.iou > 0.0 && cfg.iou <= 1.0) {
        return Err(ConfigError {
            field: "iou",
            reason: "must lie in (0, 1]".into(),
        }
        .into());
    }
    let frames = list_frames(&cfg.frames_dir)?;
    let proposals = match &cfg.proposals {
        Some(p) => ProposalInput::Manifest(ProposalManifest::from_path(p)?),
        None => ProposalInput::Fallback,
    };
    let embeddings = match &cfg.embeddings {
        Some(d) if !d.is_dir() => {
            return Err(RunError::Usage(format!(
                "embeddings directory {} not found",
                d.display()
            )))
        }
        Some(d) => EmbeddingInput::Directory(d.clone()),
        None => EmbeddingInput::Descriptor,
    };
    let gt = cfg
        .ground_truth
        .as_deref()
        .map(load_ground_truth)
        .transpose()?;
    let sequence = sequence_name(cfg);

    std::fs::create_dir_all(&cfg.out).map_err(io_err(&cfg.out))?;
    let overlay_dir = cfg.out.join("overlays");
    let saliency_dir = cfg.out.join("saliency");
    if cfg.overlay {
        std::fs::create_dir_all(&overlay_dir).map_err(io_err(&overlay_dir))?;
    }
    if cfg.dump_saliency {
        std::fs::create_dir_all(&saliency_dir).map_err(io_err(&saliency_dir))?;
    }

    let mut session = Session::new(cfg.pipeline.clone(), proposals, embeddings)?;
    let det_path = cfg.out.join("detections.jsonl");
    let mut det_out = BufWriter::new(File::create(&det_path).map_err(io_err(&det_path))?);
    let mut records = Vec::with_capacity(frames.len());
    let mut totals = StageTimings::default();

    for (index, path) in frames.iter().enumerate() {
        // frames are loaded one at a time; the session keeps only its window
        let frame = Frame::load(path, index)?;
        let overlay_frame = cfg.overlay.then(|| frame.clone());
        let record = session.process_frame(frame)?;
        totals.accumulate(&record.timing);

        let line =
            serde_json::to_string(&DetectionLine::from(&record)).expect("detection serializes");
        writeln!(det_out, "{line}").map_err(io_err(&det_path))?;
        let name = format!("{index:05}.png");
        if let Some(f) = overlay_frame {
            write_overlay(
                &f,
                gt.as_ref().and_then(|g| g.get(index)),
                record.bbox,
                &overlay_dir.join(&name),
            )?;
        }
        if cfg.dump_saliency {
            let smap = session.last_saliency().expect("frame was processed");
            let p = saliency_dir.join(&name);
            smap.save_png(&p)
                .map_err(|e: SaliencyError| RunError::Output {
                    path: p.display().to_string(),
                    reason: e.to_string(),
                })?;
        }
        records.push(record);
    }
    det_out.flush().map_err(io_err(&det_path))?;

    let n = records.len();
    let mean = totals.scaled(1.0 / n as f64);
    let timing = TimingSummary {
        frames: n,
        seconds_per_frame: mean.total / 1e3,
        mean_stage_ms: mean,
        peak_retained_frames: session.peak_retained_frames(),
    };
    let timing_path = cfg.out.join("timing.json");
    let json = serde_json::to_string_pretty(&timing).expect("timing serializes");
    std::fs::write(&timing_path, json).map_err(io_err(&timing_path))?;

    let report = match &gt {
        Some(gt) => {
            let dets: Vec<_> = records.iter().map(|r| r.bbox.zip(r.objectness)).collect();
            let report = MetricReport::evaluate(&dets, gt, cfg.iou, timing.seconds_per_frame)?;
            write_metrics_csv(&cfg.out.join("metrics.csv"), &[(sequence.clone(), report)])?;
            Some(report)
        }
        None => None,
    };

    Ok(RunSummary {
        sequence,
        records,
        timing,
        report,
    })
}

/// Layout of a DAVIS-style dataset: `<root>/JPEGImages/<seq>/*.jpg` frames
/// and `<root>/Annotations/<seq>/*.png` masks. Official releases add a
/// resolution level (`JPEGImages/480p/<seq>`), selected by `resolution`.
#[derive(Clone, Debug)]
pub struct DavisConfig {
    pub root: PathBuf,
    pub resolution: Option<String>,
    /// Sequences to run; every sequence directory when empty.
    pub sequences: Vec<String>,
    /// Holds `<seq>.json` proposal manifests.
    pub proposals_dir: Option<PathBuf>,
    /// Holds `<seq>/NNNNN.ufoe` embedding files.
    pub embeddings_dir: Option<PathBuf>,
    pub out: PathBuf,
    pub overlay: bool,
    pub iou: f64,
    pub pipeline: PipelineConfig,
}

/// Reads a sequence list such as DAVIS `ImageSets/2016/val.txt`: one name per
/// line, or `/JPEGImages/480p/<seq>/00000.jpg ...` lines as in older
/// releases. Duplicates are dropped, order kept.
pub fn read_sequence_list(path: &Path) -> Result<Vec<String>, RunError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut out: Vec<String> = Vec::new();
    for line in text.lines() {
        let Some(first) = line.split_whitespace().next() else {
            continue;
        };
        let parts: Vec<&str> = first.split('/').filter(|p| !p.is_empty()).collect();
        let name = if parts.len() >= 2 {
            parts[parts.len() - 2]
        } else {
            parts[0]
        };
        if !out.iter().any(|s| s == name) {
            out.push(name.to_string());
        }
    }
    Ok(out)
}

/// Runs every sequence and writes `metrics.csv` with one row per sequence
/// plus a `mean` row (its `ap` column is the mAP).
pub fn run_davis(cfg: &DavisConfig) -> Result<Vec<(String, MetricReport)>, RunError> {
    let level = |kind: &str| {
        let base = cfg.root.join(kind);
        match &cfg.resolution {
            Some(r) => base.join(r),
            None => base,
        }
    };
    let images = level("JPEGImages");
    let annotations = level("Annotations");
    let mut sequences = cfg.sequences.clone();
    if sequences.is_empty() {
        for entry in std::fs::read_dir(&images).map_err(io_err(&images))? {
            let path = entry.map_err(io_err(&images))?.path();
            if path.is_dir() {
                sequences.extend(
                    path.file_name()
                        .and_then(|n| n.to_str())
                        .map(str::to_string),
                );
            }
        }
        sequences.sort();
    }
    if sequences.is_empty() {
        return Err(RunError::NoFrames(images.display().to_string()));
    }

    let mut rows = Vec::with_capacity(sequences.len() + 1);
    for seq in &sequences {
        let run_cfg = RunConfig {
            frames_dir: images.join(seq),
            proposals: cfg
                .proposals_dir
                .as_ref()
                .map(|d| d.join(format!("{seq}.json"))),
            embeddings: cfg.embeddings_dir.as_ref().map(|d| d.join(seq)),
            ground_truth: Some(annotations.join(seq)),
            out: cfg.out.join(seq),
            overlay: cfg.overlay,
            dump_saliency: false,
            sequence: Some(seq.clone()),
            iou: cfg.iou,
            pipeline: cfg.pipeline.clone(),
        };
        let summary = run(&run_cfg)?;
        rows.push((seq.clone(), summary.report.expect("ground truth was given")));
    }
    let reports: Vec<MetricReport> = rows.iter().map(|(_, r)| *r).collect();
    rows.push(("mean".to_string(), MetricReport::mean(&reports)));
    write_metrics_csv(&cfg.out.join("metrics.csv"), &rows)?;
    Ok(rows)
}
