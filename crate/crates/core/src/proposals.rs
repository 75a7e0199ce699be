//! General object proposals: ingestion, fallback generation, saliency
//! scoring and saliency-aware non-maximum suppression.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{clip_box, iou, BoundingBox};
use crate::saliency::SaliencyMap;

#[derive(Debug, Error)]
pub enum ProposalError {
    #[error("cannot read proposal manifest {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed proposal manifest: {0}")]
    Parse(String),
    #[error("proposal manifest schema violation: {0}")]
    Schema(String),
}

pub const DEFAULT_NMS_IOU: f64 = 0.5;
pub const DEFAULT_KEEP_MAX: usize = 100;
pub const DEFAULT_PRE_NMS_CAP: usize = 300;
pub const MIN_COMPONENT_AREA: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProposalSource {
    External,
    Fallback,
    Predicted,
}

impl std::fmt::Display for ProposalSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::External => "external",
            Self::Fallback => "fallback",
            Self::Predicted => "predicted",
        })
    }
}

/// A candidate object: box, objectness confidence and enclosed saliency.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectProposal {
    pub frame: usize,
    /// Position in the frame's proposal list before any filtering.
    pub id: usize,
    pub bbox: BoundingBox,
    pub objectness: f64,
    pub saliency: f64,
    pub source: ProposalSource,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxRecord {
    pub x: i32,
    pub y: i32,
    pub w: i32,
    pub h: i32,
    pub objectness: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame: usize,
    pub boxes: Vec<BoxRecord>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
struct ManifestDoc {
    frames: Vec<FrameRecord>,
}

/// Per-frame proposal boxes produced by an external proposal generator.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProposalManifest {
    frames: BTreeMap<usize, Vec<BoxRecord>>,
}

impl ProposalManifest {
    pub fn from_path(path: &Path) -> Result<Self, ProposalError> {
        let text = std::fs::read_to_string(path).map_err(|source| ProposalError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ProposalError> {
        let doc: ManifestDoc = serde_json::from_str(text).map_err(|e| match e.classify() {
            serde_json::error::Category::Data => ProposalError::Schema(e.to_string()),
            _ => ProposalError::Parse(e.to_string()),
        })?;
        let mut frames = BTreeMap::new();
        for entry in doc.frames {
            for (i, b) in entry.boxes.iter().enumerate() {
                if b.w <= 0 || b.h <= 0 {
                    return Err(ProposalError::Schema(format!(
                        "frame {} box {i}: non-positive size {}x{}",
                        entry.frame, b.w, b.h
                    )));
                }
                if !(0.0..=1.0).contains(&b.objectness) {
                    return Err(ProposalError::Schema(format!(
                        "frame {} box {i}: objectness {} outside [0,1]",
                        entry.frame, b.objectness
                    )));
                }
            }
            if frames.insert(entry.frame, entry.boxes).is_some() {
                return Err(ProposalError::Schema(format!(
                    "frame {} listed twice",
                    entry.frame
                )));
            }
        }
        Ok(Self { frames })
    }

    pub fn insert(&mut self, frame: usize, boxes: Vec<BoxRecord>) {
        self.frames.insert(frame, boxes);
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn to_json(&self) -> String {
        let doc = ManifestDoc {
            frames: self
                .frames
                .iter()
                .map(|(&frame, boxes)| FrameRecord {
                    frame,
                    boxes: boxes.clone(),
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("manifest serializes")
    }

    /// Proposals for one frame, clipped to the frame, in file order.
    ///
    /// A frame absent from the manifest yields an empty list. Boxes lying
    /// entirely outside the frame are dropped; ids keep their file position.
    pub fn proposals_for(
        &self,
        frame_index: usize,
        width: usize,
        height: usize,
    ) -> Vec<ObjectProposal> {
        let Some(boxes) = self.frames.get(&frame_index) else {
            return Vec::new();
        };
        boxes
            .iter()
            .enumerate()
            .filter_map(|(id, r)| {
                let b = BoundingBox::new(r.x, r.y, r.w, r.h);
                let bbox = clip_box(&b, width, height).ok()?;
                Some(ObjectProposal {
                    frame: frame_index,
                    id,
                    bbox,
                    objectness: r.objectness,
                    saliency: 0.0,
                    source: ProposalSource::External,
                })
            })
            .collect()
    }
}

/// One proposal per 4-connected mask component of at least
/// [`MIN_COMPONENT_AREA`] pixels; objectness is the component's fill ratio
/// of its bounding box.
pub fn generate_fallback_proposals(
    mask: &[bool],
    width: usize,
    height: usize,
    frame: usize,
) -> Vec<ObjectProposal> {
    assert_eq!(mask.len(), width * height);
    let mut seen = vec![false; mask.len()];
    let mut queue = VecDeque::new();
    let mut out = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        let mut area = 0usize;
        while let Some(p) = queue.pop_front() {
            let (x, y) = (p % width, p / width);
            area += 1;
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
            let mut visit = |n: usize| {
                if mask[n] && !seen[n] {
                    seen[n] = true;
                    queue.push_back(n);
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < width {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - width);
            }
            if y + 1 < height {
                visit(p + width);
            }
        }
        if area < MIN_COMPONENT_AREA {
            continue;
        }
        let bbox = BoundingBox::new(
            x0 as i32,
            y0 as i32,
            (x1 - x0 + 1) as i32,
            (y1 - y0 + 1) as i32,
        );
        out.push(ObjectProposal {
            frame,
            id: out.len(),
            objectness: area as f64 / bbox.area() as f64,
            bbox,
            saliency: 0.0,
            source: ProposalSource::Fallback,
        });
    }
    out
}

/// Fraction of the box's pixels that are salient in the mask.
pub fn score_saliency(p: &ObjectProposal, smap: &SaliencyMap) -> f64 {
    smap.salient_count(&p.bbox) as f64 / p.bbox.area() as f64
}

/// Keep-priority order: more salient first, then higher objectness, then lower id.
pub fn priority_cmp(a: &ObjectProposal, b: &ObjectProposal) -> Ordering {
    b.saliency
        .total_cmp(&a.saliency)
        .then(b.objectness.total_cmp(&a.objectness))
        .then(a.id.cmp(&b.id))
}

/// Greedy NMS in [`priority_cmp`] order. A proposal is suppressed when its
/// IoU with an already kept proposal exceeds `iou_threshold`; at most
/// `keep_max` proposals are kept.
pub fn saliency_nms(
    props: &[ObjectProposal],
    iou_threshold: f64,
    keep_max: usize,
) -> Vec<ObjectProposal> {
    let mut order: Vec<&ObjectProposal> = props.iter().collect();
    order.sort_by(|a, b| priority_cmp(a, b));
    let mut kept: Vec<ObjectProposal> = Vec::new();
    for p in order {
        if kept.len() >= keep_max {
            break;
        }
        if kept.iter().all(|k| iou(&k.bbox, &p.bbox) <= iou_threshold) {
            kept.push(p.clone());
        }
    }
    kept
}

/// Keeps the `cap` proposals with highest objectness (ties to lower id),
/// preserving their original relative order.
pub fn cap_by_objectness(mut props: Vec<ObjectProposal>, cap: usize) -> Vec<ObjectProposal> {
    if props.len() <= cap {
        return props;
    }
    let mut order: Vec<usize> = (0..props.len()).collect();
    order.sort_by(|&a, &b| {
        props[b]
            .objectness
            .total_cmp(&props[a].objectness)
            .then(props[a].id.cmp(&props[b].id))
    });
    let mut keep = vec![false; props.len()];
    for &i in &order[..cap] {
        keep[i] = true;
    }
    let mut i = 0;
    props.retain(|_| {
        i += 1;
        keep[i - 1]
    });
    props
}
