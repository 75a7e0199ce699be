//! Template prediction for frames where no proposal continues the
//! discovered object: average the recent matched crops into a luma template
//! and localize it in the new frame by zero-normalized cross-correlation.

use thiserror::Error;

use crate::geometry::{crop_resize, BoundingBox, Frame, GeometryError, Image};
use crate::graph::TrackPath;
use crate::proposals::{score_saliency, ObjectProposal, ProposalSource};
use crate::saliency::SaliencyMap;

pub const DEFAULT_PEAK_GATE: f64 = 0.3;
pub const PREDICTED_OBJECTNESS_DECAY: f64 = 0.8;
pub const SEARCH_INFLATION: f64 = 0.5;
pub const MAX_TEMPLATE_SUPPORT: usize = 3;

// Windows with a per-pixel variance below this count as flat.
const FLAT_VARIANCE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("template needs at least 2 matched path vertices, path has {0}")]
    InsufficientHistory(usize),
    #[error("frame {0} is no longer retained")]
    MissingFrame(usize),
    #[error("template {tw}x{th} does not fit in search region {rw}x{rh}")]
    TemplateLargerThanRegion {
        tw: usize,
        th: usize,
        rw: usize,
        rh: usize,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Template {
    pub patch: Image,
    /// Number of crops averaged into the patch.
    pub support: usize,
}

/// Pixelwise luma mean of the last (up to three) path crops, each resampled
/// to the size of the most recent box.
pub fn build_template(frames: &[Frame], path: &TrackPath) -> Result<Template, TemplateError> {
    if path.len() < 2 {
        return Err(TemplateError::InsufficientHistory(path.len()));
    }
    let last = path.proposals.last().expect("path has vertices").bbox;
    let (w, h) = (last.w as usize, last.h as usize);
    let start = path.len().saturating_sub(MAX_TEMPLATE_SUPPORT);
    let mut acc = vec![0f64; w * h];
    for p in &path.proposals[start..] {
        let frame = frames
            .iter()
            .find(|f| f.index == p.frame)
            .ok_or(TemplateError::MissingFrame(p.frame))?;
        let crop = crop_resize(frame.luma(), &p.bbox, w, h)?;
        for (a, &v) in acc.iter_mut().zip(crop.data()) {
            *a += v as f64;
        }
    }
    let support = path.len() - start;
    let data = acc
        .iter()
        .map(|&a| ((a / support as f64) as f32).clamp(0.0, 1.0))
        .collect();
    Ok(Template {
        patch: Image::new(w, h, 1, data),
        support,
    })
}

/// Exhaustive ZNCC of the template at every integer offset inside `search`.
///
/// Offsets whose frame window (or the template itself) has zero variance are
/// skipped. Returns the best box and its score, first offset in row-major
/// order on ties, or `None` when every offset was skipped.
pub fn ncc_search(
    template: &Template,
    frame: &Frame,
    search: &BoundingBox,
) -> Result<Option<(BoundingBox, f64)>, TemplateError> {
    let region = frame.clip(search)?;
    let (tw, th) = (template.patch.width(), template.patch.height());
    let (rw, rh) = (region.w as usize, region.h as usize);
    if tw > rw || th > rh {
        return Err(TemplateError::TemplateLargerThanRegion { tw, th, rw, rh });
    }
    let n = (tw * th) as f64;
    let t = template.patch.data();
    let t_mean = t.iter().map(|&v| v as f64).sum::<f64>() / n;
    let t_zero: Vec<f64> = t.iter().map(|&v| v as f64 - t_mean).collect();
    let t_ss: f64 = t_zero.iter().map(|v| v * v).sum();
    if t_ss / n < FLAT_VARIANCE {
        return Ok(None);
    }

    let luma = frame.luma();
    let fw = luma.width();
    let img = luma.data();
    let mut best: Option<(usize, usize, f64)> = None;
    for oy in 0..=rh - th {
        for ox in 0..=rw - tw {
            let (x0, y0) = (region.x as usize + ox, region.y as usize + oy);
            let (mut s, mut ss, mut cross) = (0f64, 0f64, 0f64);
            for ty in 0..th {
                let row = &img[(y0 + ty) * fw + x0..(y0 + ty) * fw + x0 + tw];
                let trow = &t_zero[ty * tw..(ty + 1) * tw];
                for (&v, &tz) in row.iter().zip(trow) {
                    let v = v as f64;
                    s += v;
                    ss += v * v;
                    cross += tz * v;
                }
            }
            let var_n = ss - s * s / n;
            if var_n / n < FLAT_VARIANCE {
                continue;
            }
            let score = (cross / (t_ss * var_n).sqrt()).clamp(-1.0, 1.0);
            if best.is_none_or(|(_, _, b)| score > b) {
                best = Some((x0, y0, score));
            }
        }
    }
    Ok(best.map(|(x, y, score)| {
        (
            BoundingBox::new(x as i32, y as i32, tw as i32, th as i32),
            score,
        )
    }))
}

/// Searches for the template around `last_box` (inflated by half its size on
/// every side) and turns a strong enough peak into a predicted proposal.
///
/// The proposal's id is left at 0 for the caller to assign.
pub fn predict_proposal(
    template: &Template,
    frame: &Frame,
    smap: &SaliencyMap,
    last_box: &BoundingBox,
    peak_gate: f64,
) -> Option<ObjectProposal> {
    let search = frame
        .clip(&last_box.inflate(SEARCH_INFLATION, SEARCH_INFLATION))
        .ok()?;
    let (bbox, peak) = ncc_search(template, frame, &search).ok()??;
    if peak < peak_gate {
        return None;
    }
    let mut p = ObjectProposal {
        frame: frame.index,
        id: 0,
        bbox,
        objectness: PREDICTED_OBJECTNESS_DECAY * peak.clamp(0.0, 1.0),
        saliency: 0.0,
        source: ProposalSource::Predicted,
    };
    p.saliency = score_saliency(&p, smap);
    Some(p)
}
