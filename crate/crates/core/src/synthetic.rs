//! Seeded synthetic sequences with planted ground truth.
//!
//! A textured square moves (bouncing off the borders) over a noisy dark
//! background while short-lived distractor blobs come and go. Alongside the
//! frames the generator emits the ground-truth boxes and a simulated
//! proposal manifest: a jittered box around the object, boxes around live
//! distractors and random clutter boxes. Frames listed in `drop_frames` omit
//! the object's proposal.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::GroundTruth;
use crate::geometry::{BoundingBox, Frame};
use crate::proposals::{BoxRecord, ProposalManifest};

#[derive(Debug, Error)]
pub enum SyntheticError {
    #[error("invalid synthetic spec: {0}")]
    Spec(String),
    #[error("synthetic output i/o on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot encode {path}: {source}")]
    Encode {
        path: String,
        #[source]
        source: image::ImageError,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub object_size: usize,
    /// Top-left corner of the object in frame 0.
    pub start: (f64, f64),
    /// Pixels per frame.
    pub velocity: (f64, f64),
    /// Amplitude of uniform per-channel background noise.
    pub noise: f32,
    /// Probability per frame of spawning a distractor blob.
    pub distractor_rate: f64,
    /// Random non-object boxes added to each frame's proposals.
    pub clutter: usize,
    /// Frames whose proposal list leaves out the object.
    pub drop_frames: Vec<usize>,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            frames: 30,
            object_size: 16,
            start: (8.0, 10.0),
            velocity: (1.5, 1.0),
            noise: 0.05,
            distractor_rate: 0.2,
            clutter: 6,
            drop_frames: Vec::new(),
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), SyntheticError> {
        let bad = |m: &str| Err(SyntheticError::Spec(m.into()));
        if self.width < 8 || self.height < 8 {
            return bad("frame must be at least 8x8");
        }
        if self.frames == 0 {
            return bad("frames must be positive");
        }
        if self.object_size < 4 || self.object_size + 2 > self.width.min(self.height) {
            return bad("object_size must be at least 4 and fit in the frame");
        }
        if !(0.0..=1.0).contains(&self.distractor_rate) {
            return bad("distractor_rate must lie in [0, 1]");
        }
        if !(0.0..=0.5).contains(&self.noise) {
            return bad("noise must lie in [0, 0.5]");
        }
        Ok(())
    }
}

/// Parses `key=value` pairs separated by commas, e.g.
/// `size=64x64,frames=30,noise=0.05,distractors=0.2,drop=12+20,seed=3`.
impl FromStr for SyntheticSpec {
    type Err = SyntheticError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut spec = SyntheticSpec::default();
        let err = |k: &str, v: &str| SyntheticError::Spec(format!("bad value {v:?} for {k}"));
        for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| SyntheticError::Spec(format!("expected key=value, got {item:?}")))?;
            let pair = |v: &str, sep: char| -> Option<(f64, f64)> {
                let (a, b) = v.split_once(sep)?;
                Some((a.parse().ok()?, b.parse().ok()?))
            };
            match k {
                "size" => {
                    let (w, h) = pair(v, 'x').ok_or_else(|| err(k, v))?;
                    spec.width = w as usize;
                    spec.height = h as usize;
                }
                "frames" => spec.frames = v.parse().map_err(|_| err(k, v))?,
                "object" => spec.object_size = v.parse().map_err(|_| err(k, v))?,
                "start" => spec.start = pair(v, ':').ok_or_else(|| err(k, v))?,
                "velocity" => spec.velocity = pair(v, ':').ok_or_else(|| err(k, v))?,
                "noise" => spec.noise = v.parse().map_err(|_| err(k, v))?,
                "distractors" => spec.distractor_rate = v.parse().map_err(|_| err(k, v))?,
                "clutter" => spec.clutter = v.parse().map_err(|_| err(k, v))?,
                "drop" => {
                    spec.drop_frames = v
                        .split('+')
                        .map(|d| d.parse().map_err(|_| err(k, v)))
                        .collect::<Result<_, _>>()?
                }
                "seed" => spec.seed = v.parse().map_err(|_| err(k, v))?,
                _ => return Err(SyntheticError::Spec(format!("unknown key {k:?}"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

pub struct SyntheticSequence {
    pub frames: Vec<Frame>,
    pub ground_truth: GroundTruth,
    pub proposals: ProposalManifest,
}

struct Distractor {
    bbox: BoundingBox,
    color: [f32; 3],
    frames_left: usize,
}

const BACKGROUND: [f32; 3] = [0.12, 0.14, 0.18];
const OBJECT_COLORS: [[f32; 3]; 2] = [[0.96, 0.80, 0.35], [0.85, 0.55, 0.20]];
const TEXTURE_CELL: usize = 4;

fn bounce(p: f64, v: f64, t: usize, span: f64) -> f64 {
    if span <= 0.0 {
        return 0.0;
    }
    let period = 2.0 * span;
    let q = (p + v * t as f64).rem_euclid(period);
    if q > span {
        period - q
    } else {
        q
    }
}

fn object_box(spec: &SyntheticSpec, t: usize) -> BoundingBox {
    let s = spec.object_size;
    let x = bounce(spec.start.0, spec.velocity.0, t, (spec.width - s) as f64).round() as i32;
    let y = bounce(spec.start.1, spec.velocity.1, t, (spec.height - s) as f64).round() as i32;
    BoundingBox::new(x, y, s as i32, s as i32)
}

fn jitter(
    rng: &mut ChaCha8Rng,
    b: &BoundingBox,
    amount: i32,
    width: usize,
    height: usize,
) -> BoundingBox {
    let mut d = || rng.random_range(-amount..=amount);
    let (dx0, dy0, dx1, dy1) = (d(), d(), d(), d());
    let x0 = (b.x + dx0).clamp(0, width as i32 - 1);
    let y0 = (b.y + dy0).clamp(0, height as i32 - 1);
    let x1 = (b.right() + dx1).clamp(x0 + 1, width as i32);
    let y1 = (b.bottom() + dy1).clamp(y0 + 1, height as i32);
    BoundingBox::new(x0, y0, x1 - x0, y1 - y0)
}

/// Renders the whole sequence in memory.
pub fn render(spec: &SyntheticSpec) -> Result<SyntheticSequence, SyntheticError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (w, h) = (spec.width, spec.height);
    let mut frames = Vec::with_capacity(spec.frames);
    let mut gt = Vec::with_capacity(spec.frames);
    let mut manifest = ProposalManifest::default();
    let mut distractors: Vec<Distractor> = Vec::new();

    for t in 0..spec.frames {
        let obj = object_box(spec, t);

        distractors.retain_mut(|d| {
            d.frames_left -= 1;
            d.frames_left > 0
        });
        if rng.random_bool(spec.distractor_rate) {
            let s = rng.random_range(6..=10.min(w.min(h) - 1)) as i32;
            for _ in 0..20 {
                let cand = BoundingBox::new(
                    rng.random_range(0..=w as i32 - s),
                    rng.random_range(0..=h as i32 - s),
                    s,
                    s,
                );
                if cand.intersection_area(&obj.inflate(0.25, 0.25)) == 0 {
                    let color = [
                        rng.random_range(0.2..0.4),
                        rng.random_range(0.4..0.6),
                        rng.random_range(0.8..1.0),
                    ];
                    distractors.push(Distractor {
                        bbox: cand,
                        color,
                        frames_left: rng.random_range(1..=2),
                    });
                    break;
                }
            }
        }

        let mut rgb = Vec::with_capacity(w * h * 3);
        for y in 0..h as i32 {
            for x in 0..w as i32 {
                let base = if obj.contains_pixel(x, y) {
                    let cx = (x - obj.x) as usize / TEXTURE_CELL;
                    let cy = (y - obj.y) as usize / TEXTURE_CELL;
                    OBJECT_COLORS[(cx + cy) % 2]
                } else if let Some(d) = distractors.iter().find(|d| d.bbox.contains_pixel(x, y)) {
                    d.color
                } else {
                    BACKGROUND
                };
                for c in base {
                    let n = if spec.noise > 0.0 {
                        rng.random_range(-spec.noise..=spec.noise)
                    } else {
                        0.0
                    };
                    rgb.push((c + n).clamp(0.0, 1.0));
                }
            }
        }
        // quantize like an 8-bit image file would
        let bytes: Vec<u8> = rgb.iter().map(|&v| (v * 255.0).round() as u8).collect();
        frames.push(Frame::from_rgb8(t, w, h, &bytes));
        gt.push(Some(obj));

        let mut boxes = Vec::new();
        if !spec.drop_frames.contains(&t) {
            let b = jitter(&mut rng, &obj, 1, w, h);
            boxes.push(record(&b, rng.random_range(0.75..0.95)));
        }
        for d in &distractors {
            let b = jitter(&mut rng, &d.bbox, 1, w, h);
            boxes.push(record(&b, rng.random_range(0.4..0.8)));
        }
        for _ in 0..spec.clutter {
            // background boxes: at most a small sliver of the object
            for _ in 0..20 {
                let bw = rng.random_range(6..=(w / 3).max(7)).min(w) as i32;
                let bh = rng.random_range(6..=(h / 3).max(7)).min(h) as i32;
                let b = BoundingBox::new(
                    rng.random_range(0..=w as i32 - bw),
                    rng.random_range(0..=h as i32 - bh),
                    bw,
                    bh,
                );
                if b.intersection_area(&obj) * 5 <= b.area().min(obj.area()) {
                    boxes.push(record(&b, rng.random_range(0.05..0.5)));
                    break;
                }
            }
        }
        boxes.shuffle(&mut rng);
        manifest.insert(t, boxes);
    }

    Ok(SyntheticSequence {
        frames,
        ground_truth: GroundTruth {
            sequence: "synthetic".into(),
            boxes: gt,
        },
        proposals: manifest,
    })
}

fn record(b: &BoundingBox, objectness: f64) -> BoxRecord {
    BoxRecord {
        x: b.x,
        y: b.y,
        w: b.w,
        h: b.h,
        objectness,
    }
}

/// Paths written by [`generate_synthetic`].
#[derive(Clone, Debug)]
pub struct SyntheticOutput {
    pub frames_dir: PathBuf,
    pub gt_dir: PathBuf,
    pub proposals_path: PathBuf,
    pub ground_truth_path: PathBuf,
    pub ground_truth: GroundTruth,
}

/// Writes `frames/NNNNN.png`, ground-truth masks `gt/NNNNN.png`,
/// `proposals.json` and `ground_truth.json` under `out`.
pub fn generate_synthetic(
    spec: &SyntheticSpec,
    out: &Path,
) -> Result<SyntheticOutput, SyntheticError> {
    let seq = render(spec)?;
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| SyntheticError::Io { path, source }
    };
    let frames_dir = out.join("frames");
    let gt_dir = out.join("gt");
    std::fs::create_dir_all(&frames_dir).map_err(io(&frames_dir))?;
    std::fs::create_dir_all(&gt_dir).map_err(io(&gt_dir))?;
    for (frame, gt) in seq.frames.iter().zip(&seq.ground_truth.boxes) {
        let name = format!("{:05}.png", frame.index);
        let path = frames_dir.join(&name);
        frame
            .to_rgb8()
            .save(&path)
            .map_err(|source| SyntheticError::Encode {
                path: path.display().to_string(),
                source,
            })?;
        let mut mask = image::GrayImage::new(spec.width as u32, spec.height as u32);
        if let Some(b) = gt {
            for y in b.y..b.bottom() {
                for x in b.x..b.right() {
                    mask.put_pixel(x as u32, y as u32, image::Luma([255]));
                }
            }
        }
        let path = gt_dir.join(&name);
        mask.save(&path).map_err(|source| SyntheticError::Encode {
            path: path.display().to_string(),
            source,
        })?;
    }
    let proposals_path = out.join("proposals.json");
    std::fs::write(&proposals_path, seq.proposals.to_json()).map_err(io(&proposals_path))?;
    let ground_truth_path = out.join("ground_truth.json");
    let gt_json = serde_json::to_string(&seq.ground_truth).expect("ground truth serializes");
    std::fs::write(&ground_truth_path, gt_json).map_err(io(&ground_truth_path))?;
    Ok(SyntheticOutput {
        frames_dir,
        gt_dir,
        proposals_path,
        ground_truth_path,
        ground_truth: seq.ground_truth,
    })
}
