//! Unsupervised discovery of the most salient object in an image sequence.
//!
//! Per frame: minimum-barrier-distance saliency, object proposals (from an
//! external proposal file or generated from the saliency mask), saliency-aware
//! NMS, appearance embeddings, a sliding-window correspondence graph joined by
//! optimal bipartite matching, and best-chain selection. When the chain loses
//! the object, a template built from its recent crops is searched for by
//! normalized cross-correlation.

pub mod assignment;
pub mod embeddings;
pub mod evaluation;
pub mod geometry;
pub mod graph;
pub mod pipeline;
pub mod proposals;
pub mod runner;
pub mod saliency;
pub mod synthetic;
pub mod template;

pub use embeddings::{similarity, Embedding};
pub use evaluation::{GroundTruth, MetricReport};
pub use geometry::{iou, BoundingBox, Frame, Image};
pub use graph::{CorrespondenceGraph, TrackPath, Vertex, VertexId};
pub use proposals::{ObjectProposal, ProposalManifest, ProposalSource};
pub use saliency::SaliencyMap;
pub use template::Template;
