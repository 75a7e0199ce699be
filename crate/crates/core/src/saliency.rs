//! Minimum barrier distance saliency.
//!
//! The barrier cost of a path is `max(I) - min(I)` over the pixels it visits.
//! Seeds are the image border; pixels far (in barrier terms) from every border
//! pixel are salient. The transform here is the raster-scan approximation:
//! each pixel carries `(d, hi, lo)` for the best path found so far and scans
//! alternate between top-left and bottom-right neighbor sets.

use std::path::Path;

use thiserror::Error;

use crate::geometry::{to_u8, BoundingBox, Image};

#[derive(Debug, Error)]
pub enum SaliencyError {
    #[error("passes must be at least 1")]
    ZeroPasses,
    #[error("image is empty")]
    EmptyImage,
    #[error("saliency transform expects a single-channel image, got {0} channels")]
    NotSingleChannel(usize),
    #[error("failed to write saliency map: {0}")]
    Write(#[from] image::ImageError),
}

pub const DEFAULT_PASSES: usize = 3;

const OTSU_BINS: usize = 256;

/// Threshold reported for maps with no usable split; the mask is empty.
pub const CONSTANT_MAP_THRESHOLD: f32 = 1.0;

/// Approximate minimum barrier distance from the image border.
///
/// Every returned value is the barrier cost of an actual 4-connected path
/// from a border pixel, so it bounds the exact distance from above. More
/// passes never increase any value.
pub fn mbd_transform(luma: &Image, passes: usize) -> Result<Image, SaliencyError> {
    if passes == 0 {
        return Err(SaliencyError::ZeroPasses);
    }
    if luma.is_empty() {
        return Err(SaliencyError::EmptyImage);
    }
    if luma.channels() != 1 {
        return Err(SaliencyError::NotSingleChannel(luma.channels()));
    }
    let (w, h) = (luma.width(), luma.height());
    let img = luma.data();
    let mut dist = vec![f32::INFINITY; w * h];
    let mut hi = img.to_vec();
    let mut lo = img.to_vec();
    for y in 0..h {
        for x in 0..w {
            if x == 0 || y == 0 || x + 1 == w || y + 1 == h {
                dist[y * w + x] = 0.0;
            }
        }
    }
    if w <= 2 || h <= 2 {
        return Ok(Image::new(w, h, 1, dist));
    }

    let relax = |p: usize, n: usize, dist: &mut [f32], hi: &mut [f32], lo: &mut [f32]| {
        if !dist[n].is_finite() {
            return;
        }
        let v = img[p];
        let nh = hi[n].max(v);
        let nl = lo[n].min(v);
        let d = nh - nl;
        if d < dist[p] {
            dist[p] = d;
            hi[p] = nh;
            lo[p] = nl;
        }
    };

    for pass in 0..passes {
        if pass % 2 == 0 {
            for y in 1..h - 1 {
                for x in 1..w - 1 {
                    let p = y * w + x;
                    relax(p, p - 1, &mut dist, &mut hi, &mut lo);
                    relax(p, p - w, &mut dist, &mut hi, &mut lo);
                }
            }
        } else {
            for y in (1..h - 1).rev() {
                for x in (1..w - 1).rev() {
                    let p = y * w + x;
                    relax(p, p + 1, &mut dist, &mut hi, &mut lo);
                    relax(p, p + w, &mut dist, &mut hi, &mut lo);
                }
            }
        }
    }
    Ok(Image::new(w, h, 1, dist))
}

/// Divides by the maximum so the map spans `[0,1]`. An all-zero map is
/// returned unchanged.
pub fn normalize_saliency(dmap: &Image) -> Image {
    let max = dmap.data().iter().copied().fold(0.0f32, f32::max);
    if max <= 0.0 {
        return dmap.clone();
    }
    let data = dmap
        .data()
        .iter()
        .map(|&v| (v / max).clamp(0.0, 1.0))
        .collect();
    Image::new(dmap.width(), dmap.height(), 1, data)
}

/// Otsu threshold over a 256-bin histogram of values in `[0,1]`.
///
/// Returns the salient mask (`v >= threshold`) and the threshold. Maps whose
/// values all fall into one bin have no split; they get an empty mask and
/// [`CONSTANT_MAP_THRESHOLD`].
pub fn binarize(values: &[f32]) -> (Vec<bool>, f32) {
    let mut hist = [0u64; OTSU_BINS];
    for &v in values {
        hist[bin_of(v)] += 1;
    }
    let total = values.len() as f64;
    let sum_all: f64 = hist
        .iter()
        .enumerate()
        .map(|(i, &c)| bin_center(i) * c as f64)
        .sum();

    let mut best: Option<(f64, usize)> = None;
    let mut w0 = 0.0;
    let mut sum0 = 0.0;
    // Candidate split k: bins < k are background, bins >= k salient.
    for k in 1..OTSU_BINS {
        w0 += hist[k - 1] as f64;
        sum0 += bin_center(k - 1) * hist[k - 1] as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let mu0 = sum0 / w0;
        let mu1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if best.is_none_or(|(b, _)| between > b) {
            best = Some((between, k));
        }
    }
    match best {
        None => (vec![false; values.len()], CONSTANT_MAP_THRESHOLD),
        Some((_, k)) => {
            let threshold = k as f32 / OTSU_BINS as f32;
            (values.iter().map(|&v| v >= threshold).collect(), threshold)
        }
    }
}

fn bin_of(v: f32) -> usize {
    ((v.clamp(0.0, 1.0) * OTSU_BINS as f32) as usize).min(OTSU_BINS - 1)
}

fn bin_center(i: usize) -> f64 {
    (i as f64 + 0.5) / OTSU_BINS as f64
}

/// Per-pixel saliency with its binarized mask.
#[derive(Clone, Debug)]
pub struct SaliencyMap {
    width: usize,
    height: usize,
    values: Vec<f32>,
    mask: Vec<bool>,
    threshold: f32,
    // (width+1)x(height+1) summed-area table of the mask
    integral: Vec<u32>,
}

impl SaliencyMap {
    pub fn compute(luma: &Image, passes: usize) -> Result<Self, SaliencyError> {
        let dmap = mbd_transform(luma, passes)?;
        Ok(Self::from_values(normalize_saliency(&dmap)))
    }

    pub fn from_values(values: Image) -> Self {
        let (mask, threshold) = binarize(values.data());
        Self::from_parts(
            values.width(),
            values.height(),
            values.into_data(),
            mask,
            threshold,
        )
    }

    /// Builds a map from an explicit mask; values mirror the mask.
    pub fn from_mask(width: usize, height: usize, mask: Vec<bool>) -> Self {
        let values = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
        Self::from_parts(width, height, values, mask, 0.5)
    }

    fn from_parts(
        width: usize,
        height: usize,
        values: Vec<f32>,
        mask: Vec<bool>,
        threshold: f32,
    ) -> Self {
        assert_eq!(values.len(), width * height);
        assert_eq!(mask.len(), width * height);
        let stride = width + 1;
        let mut integral = vec![0u32; stride * (height + 1)];
        for y in 0..height {
            let mut row = 0u32;
            for x in 0..width {
                row += mask[y * width + x] as u32;
                integral[(y + 1) * stride + x + 1] = integral[y * stride + x + 1] + row;
            }
        }
        Self {
            width,
            height,
            values,
            mask,
            threshold,
            integral,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn threshold(&self) -> f32 {
        self.threshold
    }

    /// Number of salient mask pixels inside `b`, which must lie inside the map.
    pub fn salient_count(&self, b: &BoundingBox) -> u32 {
        debug_assert!(b.is_inside(self.width, self.height));
        let s = self.width + 1;
        let (x0, y0) = (b.x as usize, b.y as usize);
        let (x1, y1) = (b.right() as usize, b.bottom() as usize);
        self.integral[y1 * s + x1] + self.integral[y0 * s + x0]
            - self.integral[y0 * s + x1]
            - self.integral[y1 * s + x0]
    }

    /// Writes the values as 8-bit grayscale.
    pub fn save_png(&self, path: &Path) -> Result<(), SaliencyError> {
        let bytes = self.values.iter().map(|&v| to_u8(v)).collect();
        let img = image::GrayImage::from_raw(self.width as u32, self.height as u32, bytes)
            .expect("map buffer size");
        img.save(path)?;
        Ok(())
    }
}
