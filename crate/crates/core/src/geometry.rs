//! Boxes, planar images and frames shared by every pipeline stage.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("box ({x},{y},{w},{h}) does not overlap the {width}x{height} frame")]
    NoOverlap {
        x: i32,
        y: i32,
        w: i32,
        h: i32,
        width: usize,
        height: usize,
    },
    #[error("invalid box size {w}x{h}")]
    InvalidBox { w: i32, h: i32 },
    #[error("output dimensions must be at least 1x1, got {0}x{1}")]
    EmptyOutput(usize, usize),
    #[error("failed to load image {path}: {source}")]
    Load {
        path: String,
        #[source]
        source: image::ImageError,
    },
}

/// Axis-aligned pixel rectangle. `(x, y)` is the top-left pixel; the box
/// covers columns `x..x+w` and rows `y..y+h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: i32,
    pub y: i32,
    pub w: i32,
    pub h: i32,
}

impl BoundingBox {
    /// Panics if `w` or `h` is not positive.
    pub fn new(x: i32, y: i32, w: i32, h: i32) -> Self {
        Self::try_new(x, y, w, h).expect("box width and height must be positive")
    }

    pub fn try_new(x: i32, y: i32, w: i32, h: i32) -> Result<Self, GeometryError> {
        if w < 1 || h < 1 {
            return Err(GeometryError::InvalidBox { w, h });
        }
        Ok(Self { x, y, w, h })
    }

    /// Exclusive right edge.
    pub fn right(&self) -> i32 {
        self.x + self.w
    }

    /// Exclusive bottom edge.
    pub fn bottom(&self) -> i32 {
        self.y + self.h
    }

    pub fn area(&self) -> i64 {
        self.w as i64 * self.h as i64
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> i64 {
        let iw = (self.right().min(other.right()) - self.x.max(other.x)).max(0) as i64;
        let ih = (self.bottom().min(other.bottom()) - self.y.max(other.y)).max(0) as i64;
        iw * ih
    }

    pub fn contains_pixel(&self, px: i32, py: i32) -> bool {
        px >= self.x && px < self.right() && py >= self.y && py < self.bottom()
    }

    pub fn is_inside(&self, width: usize, height: usize) -> bool {
        self.x >= 0
            && self.y >= 0
            && self.right() as i64 <= width as i64
            && self.bottom() as i64 <= height as i64
    }

    /// Grows the box by `fx * w` on the left and right and `fy * h` on the
    /// top and bottom, rounding the margin to the nearest pixel.
    pub fn inflate(&self, fx: f64, fy: f64) -> BoundingBox {
        let mx = (self.w as f64 * fx).round() as i32;
        let my = (self.h as f64 * fy).round() as i32;
        BoundingBox::new(self.x - mx, self.y - my, self.w + 2 * mx, self.h + 2 * my)
    }
}

/// Intersection over union on integer pixel areas.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter == 0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    inter as f64 / union as f64
}

/// Intersects `b` with the `width`x`height` frame rectangle.
pub fn clip_box(
    b: &BoundingBox,
    width: usize,
    height: usize,
) -> Result<BoundingBox, GeometryError> {
    let x0 = b.x.max(0);
    let y0 = b.y.max(0);
    let x1 = (b.right() as i64).min(width as i64) as i32;
    let y1 = (b.bottom() as i64).min(height as i64) as i32;
    if x1 <= x0 || y1 <= y0 {
        return Err(GeometryError::NoOverlap {
            x: b.x,
            y: b.y,
            w: b.w,
            h: b.h,
            width,
            height,
        });
    }
    Ok(BoundingBox::new(x0, y0, x1 - x0, y1 - y0))
}

/// Row-major interleaved image with `f32` samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Self {
        assert_eq!(
            data.len(),
            width * height * channels,
            "image buffer size mismatch"
        );
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Self {
        Self::new(
            width,
            height,
            channels,
            vec![value; width * height * channels],
        )
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, 1, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f32) {
        let idx = (y * self.width + x) * self.channels + c;
        self.data[idx] = v;
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Crops `b` out of `img` and resamples it bilinearly to `out_w`x`out_h`.
///
/// Output pixel centers are mapped onto source pixel centers, with samples
/// clamped to the crop, so an equal-size crop is reproduced exactly and the
/// output never leaves the range of the source crop.
pub fn crop_resize(
    img: &Image,
    b: &BoundingBox,
    out_w: usize,
    out_h: usize,
) -> Result<Image, GeometryError> {
    if out_w == 0 || out_h == 0 {
        return Err(GeometryError::EmptyOutput(out_w, out_h));
    }
    let b = clip_box(b, img.width, img.height)?;
    let (cx, cy) = (b.x as usize, b.y as usize);
    let (cw, ch) = (b.w as usize, b.h as usize);
    let channels = img.channels;

    let xs: Vec<(usize, usize, f32)> = (0..out_w).map(|o| sample_axis(o, out_w, cw)).collect();
    let ys: Vec<(usize, usize, f32)> = (0..out_h).map(|o| sample_axis(o, out_h, ch)).collect();

    let mut data = Vec::with_capacity(out_w * out_h * channels);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            for c in 0..channels {
                let p00 = img.get(cx + x0, cy + y0, c);
                let p10 = img.get(cx + x1, cy + y0, c);
                let p01 = img.get(cx + x0, cy + y1, c);
                let p11 = img.get(cx + x1, cy + y1, c);
                let top = p00 + (p10 - p00) * fx;
                let bot = p01 + (p11 - p01) * fx;
                let v = top + (bot - top) * fy;
                // Interpolation between in-range samples can still drift by an ulp.
                let (lo, hi) = min_max4(p00, p10, p01, p11);
                data.push(v.clamp(lo, hi));
            }
        }
    }
    Ok(Image::new(out_w, out_h, channels, data))
}

fn sample_axis(o: usize, out_len: usize, src_len: usize) -> (usize, usize, f32) {
    if out_len == src_len {
        return (o, o, 0.0);
    }
    let s =
        ((o as f64 + 0.5) * src_len as f64 / out_len as f64 - 0.5).clamp(0.0, (src_len - 1) as f64);
    let i0 = s.floor() as usize;
    let i1 = (i0 + 1).min(src_len - 1);
    (i0, i1, (s - i0 as f64) as f32)
}

fn min_max4(a: f32, b: f32, c: f32, d: f32) -> (f32, f32) {
    (a.min(b).min(c).min(d), a.max(b).max(c).max(d))
}

/// One image of a sequence, carrying both color and BT.601 luma planes.
#[derive(Clone, Debug)]
pub struct Frame {
    pub index: usize,
    rgb: Image,
    luma: Image,
}

impl Frame {
    /// `rgb` is row-major interleaved RGB in `[0,1]`.
    pub fn from_rgb(index: usize, width: usize, height: usize, rgb: Vec<f32>) -> Self {
        let rgb = Image::new(width, height, 3, rgb);
        let luma = rgb
            .data
            .chunks_exact(3)
            .map(|p| (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]).clamp(0.0, 1.0))
            .collect();
        Self {
            index,
            luma: Image::new(width, height, 1, luma),
            rgb,
        }
    }

    pub fn from_rgb8(index: usize, width: usize, height: usize, bytes: &[u8]) -> Self {
        Self::from_rgb(
            index,
            width,
            height,
            bytes.iter().map(|&b| b as f32 / 255.0).collect(),
        )
    }

    /// Gray frame; every color channel repeats the intensity.
    pub fn from_gray(index: usize, gray: &Image) -> Self {
        assert_eq!(gray.channels, 1);
        let rgb = gray.data.iter().flat_map(|&v| [v, v, v]).collect();
        Self::from_rgb(index, gray.width, gray.height, rgb)
    }

    pub fn load(path: &Path, index: usize) -> Result<Self, GeometryError> {
        let img = image::open(path).map_err(|source| GeometryError::Load {
            path: path.display().to_string(),
            source,
        })?;
        let rgb = img.to_rgb8();
        let (w, h) = rgb.dimensions();
        Ok(Self::from_rgb8(index, w as usize, h as usize, rgb.as_raw()))
    }

    pub fn width(&self) -> usize {
        self.rgb.width
    }

    pub fn height(&self) -> usize {
        self.rgb.height
    }

    pub fn rgb(&self) -> &Image {
        &self.rgb
    }

    pub fn luma(&self) -> &Image {
        &self.luma
    }

    pub fn clip(&self, b: &BoundingBox) -> Result<BoundingBox, GeometryError> {
        clip_box(b, self.width(), self.height())
    }

    pub fn to_rgb8(&self) -> image::RgbImage {
        let bytes = self.rgb.data.iter().map(|&v| to_u8(v)).collect();
        image::RgbImage::from_raw(self.width() as u32, self.height() as u32, bytes)
            .expect("rgb buffer size")
    }
}

pub(crate) fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}
