//! Single-object detection metrics against per-frame ground truth boxes.
//!
//! Accounting is per frame: a frame with a detection and a ground truth box
//! is a hit when their IoU reaches the threshold; otherwise the detection
//! counts as a false positive and the missed object as a false negative.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{iou, BoundingBox};

pub const DEFAULT_IOU: f64 = 0.5;

pub const METRICS_HEADER: &str = "sequence,precision,recall,f_score,corloc,ap,seconds_per_frame";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("sequence has no ground-truth boxes")]
    NoGroundTruth,
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot decode mask {path}: {source}")]
    Image {
        path: String,
        #[source]
        source: image::ImageError,
    },
    #[error("mask {path} has value {value} (expected 0 or {max})")]
    NonBinaryMask { path: String, value: u8, max: u8 },
    #[error("mask file name {0} is not a frame index")]
    BadMaskName(String),
}

/// Ground-truth boxes indexed by frame.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub sequence: String,
    pub boxes: Vec<Option<BoundingBox>>,
}

impl GroundTruth {
    pub fn get(&self, frame: usize) -> Option<BoundingBox> {
        self.boxes.get(frame).copied().flatten()
    }

    pub fn positives(&self) -> usize {
        self.boxes.iter().flatten().count()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FrameOutcome {
    pub true_positive: bool,
    pub false_positive: bool,
    pub false_negative: bool,
}

impl FrameOutcome {
    pub fn has_ground_truth(&self) -> bool {
        self.true_positive || self.false_negative
    }
}

pub fn match_at_iou(dets: &[Option<BoundingBox>], gt: &GroundTruth, tau: f64) -> Vec<FrameOutcome> {
    let n = dets.len().max(gt.boxes.len());
    (0..n)
        .map(|f| {
            let det = dets.get(f).copied().flatten();
            match (det, gt.get(f)) {
                (Some(d), Some(g)) if iou(&d, &g) >= tau => FrameOutcome {
                    true_positive: true,
                    ..Default::default()
                },
                (Some(_), Some(_)) => FrameOutcome {
                    false_positive: true,
                    false_negative: true,
                    ..Default::default()
                },
                (Some(_), None) => FrameOutcome {
                    false_positive: true,
                    ..Default::default()
                },
                (None, Some(_)) => FrameOutcome {
                    false_negative: true,
                    ..Default::default()
                },
                (None, None) => FrameOutcome::default(),
            }
        })
        .collect()
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f_measure(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// `(precision, recall, f_score)`, with 0 for empty denominators.
pub fn precision_recall_f(flags: &[FrameOutcome]) -> (f64, f64, f64) {
    let tp = flags.iter().filter(|f| f.true_positive).count();
    let fp = flags.iter().filter(|f| f.false_positive).count();
    let fneg = flags.iter().filter(|f| f.false_negative).count();
    let p = ratio(tp, tp + fp);
    let r = ratio(tp, tp + fneg);
    (p, r, f_measure(p, r))
}

/// Fraction of ground-truth frames that were hit.
pub fn corloc(flags: &[FrameOutcome]) -> Result<f64, EvalError> {
    let gt = flags.iter().filter(|f| f.has_ground_truth()).count();
    if gt == 0 {
        return Err(EvalError::NoGroundTruth);
    }
    Ok(ratio(flags.iter().filter(|f| f.true_positive).count(), gt))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoredDetection {
    pub frame: usize,
    pub bbox: BoundingBox,
    pub confidence: f64,
}

/// Area under the all-point interpolated precision/recall curve.
///
/// Detections are ranked by confidence (stable for ties); each ground-truth
/// frame can be claimed by one detection.
pub fn average_precision(
    dets: &[ScoredDetection],
    gt: &GroundTruth,
    tau: f64,
) -> Result<f64, EvalError> {
    let positives = gt.positives();
    if positives == 0 {
        return Err(EvalError::NoGroundTruth);
    }
    let mut order: Vec<&ScoredDetection> = dets.iter().collect();
    order.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
    let mut claimed = vec![false; gt.boxes.len()];
    let mut hits = Vec::with_capacity(order.len());
    let mut precision = Vec::with_capacity(order.len());
    let mut tp = 0usize;
    for (k, d) in order.iter().enumerate() {
        let hit = match gt.get(d.frame) {
            Some(g) if !claimed[d.frame] && iou(&d.bbox, &g) >= tau => {
                claimed[d.frame] = true;
                true
            }
            _ => false,
        };
        tp += hit as usize;
        hits.push(hit);
        precision.push(tp as f64 / (k + 1) as f64);
    }
    // monotone non-increasing envelope
    for k in (0..precision.len().saturating_sub(1)).rev() {
        precision[k] = precision[k].max(precision[k + 1]);
    }
    // recall rises by 1/positives at each hit
    let area: f64 = hits
        .iter()
        .zip(&precision)
        .filter(|(h, _)| **h)
        .map(|(_, p)| p)
        .sum();
    Ok(area / positives as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub corloc: f64,
    pub ap: f64,
    pub seconds_per_frame: f64,
}

impl MetricReport {
    /// Scores one emitted `(box, confidence)` per frame. CorLoc always uses
    /// IoU 0.5; the other metrics use `tau`.
    pub fn evaluate(
        dets: &[Option<(BoundingBox, f64)>],
        gt: &GroundTruth,
        tau: f64,
        seconds_per_frame: f64,
    ) -> Result<Self, EvalError> {
        let boxes: Vec<Option<BoundingBox>> = dets.iter().map(|d| d.map(|(b, _)| b)).collect();
        let flags = match_at_iou(&boxes, gt, tau);
        let (precision, recall, f_score) = precision_recall_f(&flags);
        let corloc = corloc(&match_at_iou(&boxes, gt, DEFAULT_IOU))?;
        let scored: Vec<ScoredDetection> = dets
            .iter()
            .enumerate()
            .filter_map(|(frame, d)| {
                d.map(|(bbox, confidence)| ScoredDetection {
                    frame,
                    bbox,
                    confidence,
                })
            })
            .collect();
        let ap = average_precision(&scored, gt, tau)?;
        Ok(Self {
            precision,
            recall,
            f_score,
            corloc,
            ap,
            seconds_per_frame,
        })
    }

    /// Unweighted mean over sequences (the mean of AP is the mAP).
    pub fn mean(reports: &[MetricReport]) -> MetricReport {
        let n = reports.len().max(1) as f64;
        let sum = |f: fn(&MetricReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        MetricReport {
            precision: sum(|r| r.precision),
            recall: sum(|r| r.recall),
            f_score: sum(|r| r.f_score),
            corloc: sum(|r| r.corloc),
            ap: sum(|r| r.ap),
            seconds_per_frame: sum(|r| r.seconds_per_frame),
        }
    }
}

pub fn metrics_csv(rows: &[(String, MetricReport)]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for (name, r) in rows {
        let _ = writeln!(
            out,
            "{name},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.precision, r.recall, r.f_score, r.corloc, r.ap, r.seconds_per_frame
        );
    }
    out
}

pub fn write_metrics_csv(path: &Path, rows: &[(String, MetricReport)]) -> Result<(), EvalError> {
    std::fs::write(path, metrics_csv(rows)).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Tight box around the nonzero pixels of a mask, if any.
pub fn mask_bounding_box(mask: &[bool], width: usize) -> Option<BoundingBox> {
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    for (i, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
        let (x, y) = (i % width, i / width);
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    (x0 != usize::MAX).then(|| {
        BoundingBox::new(
            x0 as i32,
            y0 as i32,
            (x1 - x0 + 1) as i32,
            (y1 - y0 + 1) as i32,
        )
    })
}

/// Reads a directory of per-frame mask PNGs named by frame index
/// (`00000.png`, `00001.png`, ...). Each mask must hold only 0 and one
/// other value.
pub fn load_davis_gt(dir: &Path) -> Result<GroundTruth, EvalError> {
    let io = |source| EvalError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut entries = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.eq_ignore_ascii_case("png"))
            != Some(true)
        {
            continue;
        }
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        let index: usize = stem
            .parse()
            .map_err(|_| EvalError::BadMaskName(path.display().to_string()))?;
        entries.push((index, path));
    }
    entries.sort();
    let mut boxes = vec![None; entries.last().map_or(0, |(i, _)| i + 1)];
    for (index, path) in entries {
        let img = image::open(&path)
            .map_err(|source| EvalError::Image {
                path: path.display().to_string(),
                source,
            })?
            .to_luma8();
        let max = img.as_raw().iter().copied().max().unwrap_or(0);
        if let Some(&value) = img.as_raw().iter().find(|&&v| v != 0 && v != max) {
            return Err(EvalError::NonBinaryMask {
                path: path.display().to_string(),
                value,
                max,
            });
        }
        let mask: Vec<bool> = img.as_raw().iter().map(|&v| v != 0).collect();
        boxes[index] = mask_bounding_box(&mask, img.width() as usize);
    }
    let sequence = dir
        .file_name()
        .and_then(|s| s.to_str())
        .unwrap_or_default()
        .to_string();
    Ok(GroundTruth { sequence, boxes })
}
