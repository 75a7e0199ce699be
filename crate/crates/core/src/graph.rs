//! Sliding-window correspondence graph over per-frame proposals.
//!
//! Each frame contributes a vertex set. Adjacent frames are joined by an
//! optimal one-to-one matching on embedding similarity, so every vertex has
//! at most one incoming and one outgoing edge and the maximal chains are
//! vertex-disjoint. The discovered object is the best-scoring chain.

use std::cmp::Ordering;
use std::collections::VecDeque;

use thiserror::Error;

use crate::assignment::max_weight_matching;
use crate::embeddings::{similarity, Embedding, EmbeddingError};
use crate::proposals::ObjectProposal;

pub const DEFAULT_WINDOW: usize = 5;
pub const DEFAULT_GATE: f64 = 0.4;
pub const DEFAULT_LAMBDA: f64 = 1.0;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("frame {got} does not follow frame {expected_after}")]
    NonContiguousFrame { expected_after: usize, got: usize },
    #[error("vertex belongs to frame {vertex_frame}, not {frame}")]
    WrongFrame { frame: usize, vertex_frame: usize },
    #[error("graph holds no frames")]
    EmptyGraph,
    #[error("path has no vertices")]
    EmptyPath,
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId {
    pub frame: usize,
    /// Position within the frame's vertex set.
    pub slot: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vertex {
    pub proposal: ObjectProposal,
    pub embedding: Embedding,
}

impl Vertex {
    pub fn new(proposal: ObjectProposal, embedding: Embedding) -> Self {
        Self {
            proposal,
            embedding,
        }
    }

    pub fn frame(&self) -> usize {
        self.proposal.frame
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub from: VertexId,
    pub to: VertexId,
    pub weight: f64,
}

/// Optimal gated assignment between the vertex sets of two adjacent frames.
pub fn match_frames(
    prev: &[Vertex],
    next: &[Vertex],
    gate: f64,
) -> Result<Vec<Edge>, EmbeddingError> {
    let weights = prev
        .iter()
        .map(|p| {
            next.iter()
                .map(|n| similarity(&p.embedding, &n.embedding))
                .collect()
        })
        .collect::<Result<Vec<Vec<f64>>, _>>()?;
    Ok(max_weight_matching(&weights, gate)
        .into_iter()
        .map(|(i, j)| Edge {
            from: VertexId {
                frame: prev[i].frame(),
                slot: i,
            },
            to: VertexId {
                frame: next[j].frame(),
                slot: j,
            },
            weight: weights[i][j],
        })
        .collect())
}

#[derive(Clone, Debug)]
struct FrameSlot {
    frame: usize,
    vertices: Vec<Vertex>,
    /// Edges from the previous frame in the window into this one.
    incoming: Vec<Edge>,
}

/// A chain of matched vertices on consecutive frames.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackPath {
    pub ids: Vec<VertexId>,
    pub proposals: Vec<ObjectProposal>,
    /// `edge_weights[i]` joins `ids[i]` and `ids[i + 1]`.
    pub edge_weights: Vec<f64>,
    pub score: f64,
}

impl TrackPath {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn first_id(&self) -> Option<VertexId> {
        self.ids.first().copied()
    }

    pub fn last_frame(&self) -> Option<usize> {
        self.ids.last().map(|v| v.frame)
    }
}

/// Sum of vertex objectness plus `lambda` times the sum of edge similarities.
pub fn path_score(p: &TrackPath, lambda: f64) -> f64 {
    let objectness: f64 = p.proposals.iter().map(|q| q.objectness).sum();
    let edges: f64 = p.edge_weights.iter().sum();
    objectness + lambda * edges
}

/// Higher score first, then the longer chain, then the lower first vertex.
pub fn path_cmp(a: &TrackPath, b: &TrackPath) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(b.len().cmp(&a.len()))
        .then(a.first_id().cmp(&b.first_id()))
}

/// The proposal at the chain's most recent vertex.
pub fn emit_detection(p: &TrackPath) -> Result<ObjectProposal, GraphError> {
    p.proposals.last().cloned().ok_or(GraphError::EmptyPath)
}

#[derive(Clone, Debug)]
pub struct CorrespondenceGraph {
    capacity: usize,
    gate: f64,
    dim: Option<usize>,
    window: VecDeque<FrameSlot>,
}

impl CorrespondenceGraph {
    /// `capacity` is the number of frames kept (at least 1).
    pub fn new(capacity: usize, gate: f64) -> Self {
        assert!(capacity >= 1, "window capacity must be positive");
        Self {
            capacity,
            gate,
            dim: None,
            window: VecDeque::with_capacity(capacity + 1),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn frames(&self) -> impl Iterator<Item = usize> + '_ {
        self.window.iter().map(|s| s.frame)
    }

    pub fn latest_frame(&self) -> Option<usize> {
        self.window.back().map(|s| s.frame)
    }

    pub fn vertex_count(&self) -> usize {
        self.window.iter().map(|s| s.vertices.len()).sum()
    }

    pub fn frame_vertices(&self, frame: usize) -> Option<&[Vertex]> {
        self.slot_of(frame)
            .map(|k| self.window[k].vertices.as_slice())
    }

    pub fn vertex(&self, id: VertexId) -> Option<&Vertex> {
        self.slot_of(id.frame)
            .and_then(|k| self.window[k].vertices.get(id.slot))
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> + '_ {
        self.window.iter().flat_map(|s| s.incoming.iter())
    }

    fn slot_of(&self, frame: usize) -> Option<usize> {
        let first = self.window.front()?.frame;
        let k = frame.checked_sub(first)?;
        (k < self.window.len()).then_some(k)
    }

    fn check_vertices(&mut self, frame: usize, vertices: &[Vertex]) -> Result<(), GraphError> {
        for v in vertices {
            if v.frame() != frame {
                return Err(GraphError::WrongFrame {
                    frame,
                    vertex_frame: v.frame(),
                });
            }
            let dim = *self.dim.get_or_insert(v.embedding.dim());
            if v.embedding.dim() != dim {
                return Err(EmbeddingError::DimMismatch {
                    expected: dim,
                    found: v.embedding.dim(),
                }
                .into());
            }
        }
        Ok(())
    }

    /// Appends the next frame's vertices, matches them against the previous
    /// frame and evicts the oldest frame once the window is over capacity.
    pub fn update(&mut self, frame: usize, vertices: Vec<Vertex>) -> Result<(), GraphError> {
        if let Some(last) = self.latest_frame() {
            if frame != last + 1 {
                return Err(GraphError::NonContiguousFrame {
                    expected_after: last,
                    got: frame,
                });
            }
        }
        self.check_vertices(frame, &vertices)?;
        let incoming = match self.window.back() {
            Some(prev) => match_frames(&prev.vertices, &vertices, self.gate)?,
            None => Vec::new(),
        };
        self.window.push_back(FrameSlot {
            frame,
            vertices,
            incoming,
        });
        if self.window.len() > self.capacity {
            self.window.pop_front();
            if let Some(front) = self.window.front_mut() {
                front.incoming.clear();
            }
        }
        Ok(())
    }

    /// Adds a vertex to the newest frame and redoes that frame's matching.
    pub fn push_vertex(&mut self, vertex: Vertex) -> Result<VertexId, GraphError> {
        let frame = self.latest_frame().ok_or(GraphError::EmptyGraph)?;
        self.check_vertices(frame, std::slice::from_ref(&vertex))?;
        let n = self.window.len();
        let slot = self.window[n - 1].vertices.len();
        self.window[n - 1].vertices.push(vertex);
        if n >= 2 {
            let incoming = match_frames(
                &self.window[n - 2].vertices,
                &self.window[n - 1].vertices,
                self.gate,
            )?;
            self.window[n - 1].incoming = incoming;
        }
        Ok(VertexId { frame, slot })
    }

    /// Every maximal chain in the window, in order of first vertex id.
    pub fn chains(&self, lambda: f64) -> Vec<TrackPath> {
        // next[k][s]: the edge leaving vertex s of window frame k
        let mut next: Vec<Vec<Option<Edge>>> = self
            .window
            .iter()
            .map(|s| vec![None; s.vertices.len()])
            .collect();
        let mut has_incoming: Vec<Vec<bool>> = self
            .window
            .iter()
            .map(|s| vec![false; s.vertices.len()])
            .collect();
        for (k, slot) in self.window.iter().enumerate().skip(1) {
            for e in &slot.incoming {
                next[k - 1][e.from.slot] = Some(*e);
                has_incoming[k][e.to.slot] = true;
            }
        }
        let mut out = Vec::new();
        for (k, slot) in self.window.iter().enumerate() {
            for (s, vertex) in slot.vertices.iter().enumerate() {
                if has_incoming[k][s] {
                    continue;
                }
                let mut path = TrackPath {
                    ids: vec![VertexId {
                        frame: slot.frame,
                        slot: s,
                    }],
                    proposals: vec![vertex.proposal.clone()],
                    edge_weights: Vec::new(),
                    score: 0.0,
                };
                let (mut kk, mut ss) = (k, s);
                while let Some(e) = next[kk][ss] {
                    kk += 1;
                    ss = e.to.slot;
                    path.ids.push(e.to);
                    path.proposals
                        .push(self.window[kk].vertices[ss].proposal.clone());
                    path.edge_weights.push(e.weight);
                }
                path.score = path_score(&path, lambda);
                out.push(path);
            }
        }
        out
    }

    /// The maximal chain with the best [`path_cmp`] rank; `None` when the
    /// window has no vertices.
    pub fn select_best_path(&self, lambda: f64) -> Option<TrackPath> {
        self.chains(lambda).into_iter().min_by(path_cmp)
    }
}
