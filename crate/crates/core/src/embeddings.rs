//! Appearance embeddings for proposals and their pairwise similarity.
//!
//! The built-in descriptor is a 60-value vector: 8-bin histograms of each
//! color channel (24 values) followed by 9-bin magnitude-weighted gradient
//! orientation histograms over a 2x2 grid of the luma patch (36 values, each
//! cell normalized to unit sum).
//! Embeddings computed elsewhere can be ingested from per-frame binary files.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geometry::{crop_resize, BoundingBox, Frame, GeometryError};

pub const DESCRIPTOR_DIM: usize = 60;
const PATCH: usize = 32;
const COLOR_BINS: usize = 8;
const ORIENT_BINS: usize = 9;
const GRID: usize = 2;

pub const EMBEDDING_MAGIC: &[u8; 4] = b"UFOE";

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("embedding dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("embedding count mismatch: expected {expected}, found {found}")]
    CountMismatch { expected: usize, found: usize },
    #[error("malformed embedding file {path}: {reason}")]
    Parse { path: String, reason: String },
    #[error("embedding file i/o on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    values: Vec<f32>,
}

impl Embedding {
    pub fn new(values: Vec<f32>) -> Self {
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values
            .iter()
            .map(|&v| v as f64 * v as f64)
            .sum::<f64>()
            .sqrt()
    }
}

/// Cosine similarity; 0 when either vector is all zeros.
pub fn similarity(a: &Embedding, b: &Embedding) -> Result<f64, EmbeddingError> {
    if a.dim() != b.dim() {
        return Err(EmbeddingError::DimMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    let dot: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(&x, &y)| x as f64 * y as f64)
        .sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Hand-crafted color + gradient descriptor of the box contents.
pub fn extract_descriptor(frame: &Frame, b: &BoundingBox) -> Result<Embedding, GeometryError> {
    let rgb = crop_resize(frame.rgb(), b, PATCH, PATCH)?;
    let luma = crop_resize(frame.luma(), b, PATCH, PATCH)?;
    let mut v = vec![0f64; DESCRIPTOR_DIM];

    let n = (PATCH * PATCH) as f64;
    for px in rgb.data().chunks_exact(3) {
        for (c, &val) in px.iter().enumerate() {
            let bin = ((val * COLOR_BINS as f32) as usize).min(COLOR_BINS - 1);
            v[c * COLOR_BINS + bin] += 1.0 / n;
        }
    }

    let grad = &mut v[3 * COLOR_BINS..];
    let cell = PATCH / GRID;
    let at = |x: usize, y: usize| luma.get(x, y, 0) as f64;
    for y in 0..PATCH {
        for x in 0..PATCH {
            let gx = at((x + 1).min(PATCH - 1), y) - at(x.saturating_sub(1), y);
            let gy = at(x, (y + 1).min(PATCH - 1)) - at(x, y.saturating_sub(1));
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            // unsigned orientation in [0, pi)
            let mut theta = gy.atan2(gx);
            if theta < 0.0 {
                theta += std::f64::consts::PI;
            }
            let bin =
                ((theta / std::f64::consts::PI * ORIENT_BINS as f64) as usize).min(ORIENT_BINS - 1);
            let c = (y / cell) * GRID + x / cell;
            grad[c * ORIENT_BINS + bin] += mag;
        }
    }

    // orientation distribution per cell, so texture and colour weigh alike
    for cell_hist in grad.chunks_exact_mut(ORIENT_BINS) {
        let total: f64 = cell_hist.iter().sum();
        if total > 0.0 {
            cell_hist.iter_mut().for_each(|x| *x /= total);
        }
    }

    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    Ok(Embedding::new(v.into_iter().map(|x| x as f32).collect()))
}

/// File holding the embeddings of one frame's post-NMS proposals.
pub fn embedding_file_name(frame_index: usize) -> String {
    format!("{frame_index:05}.ufoe")
}

pub fn embedding_path(dir: &Path, frame_index: usize) -> PathBuf {
    dir.join(embedding_file_name(frame_index))
}

/// Reads a `UFOE` file: magic, u32 count, u32 dim, then count*dim f32, all
/// little-endian. Values are returned as stored.
pub fn load_embeddings(
    path: &Path,
    run_dim: Option<usize>,
    expected_count: Option<usize>,
) -> Result<Vec<Embedding>, EmbeddingError> {
    let io_err = |source| EmbeddingError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(io_err)?;
    let rows = decode_embeddings(&bytes).map_err(|reason| EmbeddingError::Parse {
        path: path.display().to_string(),
        reason,
    })?;
    if let (Some(expected), Some(first)) = (run_dim, rows.first()) {
        if first.dim() != expected {
            return Err(EmbeddingError::DimMismatch {
                expected,
                found: first.dim(),
            });
        }
    }
    if let Some(expected) = expected_count {
        if rows.len() != expected {
            return Err(EmbeddingError::CountMismatch {
                expected,
                found: rows.len(),
            });
        }
    }
    Ok(rows)
}

pub fn decode_embeddings(bytes: &[u8]) -> Result<Vec<Embedding>, String> {
    if bytes.len() < 12 {
        return Err(format!("header needs 12 bytes, file has {}", bytes.len()));
    }
    if &bytes[..4] != EMBEDDING_MAGIC {
        return Err("bad magic".into());
    }
    let count = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = &bytes[12..];
    let want = count
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| "count*dim overflows".to_string())?;
    if body.len() != want {
        return Err(format!(
            "header declares {count}x{dim} floats ({want} bytes), body has {} bytes",
            body.len()
        ));
    }
    let floats: Vec<f32> = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if dim == 0 {
        return Ok(vec![Embedding::new(Vec::new()); count]);
    }
    Ok(floats
        .chunks_exact(dim)
        .map(|r| Embedding::new(r.to_vec()))
        .collect())
}

pub fn encode_embeddings(rows: &[Embedding]) -> Result<Vec<u8>, EmbeddingError> {
    let dim = rows.first().map_or(0, Embedding::dim);
    if let Some(bad) = rows.iter().find(|r| r.dim() != dim) {
        return Err(EmbeddingError::DimMismatch {
            expected: dim,
            found: bad.dim(),
        });
    }
    let mut out = Vec::with_capacity(12 + rows.len() * dim * 4);
    out.extend_from_slice(EMBEDDING_MAGIC);
    out.extend_from_slice(&(rows.len() as u32).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    for r in rows {
        for v in &r.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn write_embeddings(path: &Path, rows: &[Embedding]) -> Result<(), EmbeddingError> {
    let bytes = encode_embeddings(rows)?;
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&bytes))
        .map_err(|source| EmbeddingError::Io {
            path: path.display().to_string(),
            source,
        })
}
