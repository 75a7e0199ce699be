//! Per-frame orchestration of the discovery pipeline.

use std::collections::VecDeque;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::{
    embedding_path, extract_descriptor, load_embeddings, Embedding, EmbeddingError,
};
use crate::geometry::{BoundingBox, Frame, GeometryError};
use crate::graph::{self, emit_detection, CorrespondenceGraph, GraphError, TrackPath, Vertex};
use crate::proposals::{
    self, cap_by_objectness, generate_fallback_proposals, saliency_nms, score_saliency,
    ObjectProposal, ProposalManifest, ProposalSource,
};
use crate::saliency::{self, SaliencyError, SaliencyMap};
use crate::template::{self, build_template, predict_proposal, TemplateError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("frame {got} arrived, expected frame {expected}")]
    OutOfOrder { expected: usize, got: usize },
    #[error(transparent)]
    Saliency(#[from] SaliencyError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Error, PartialEq)]
#[error("invalid configuration: {field} {reason}")]
pub struct ConfigError {
    pub field: &'static str,
    pub reason: String,
}

/// Tunable parameters of the per-frame pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Frames kept in the correspondence graph.
    pub window: usize,
    pub keep_max: usize,
    pub pre_nms_cap: usize,
    pub nms_iou: f64,
    /// Minimum similarity for a correspondence edge.
    pub gate: f64,
    /// Weight of edge similarity against objectness in path scores.
    pub lambda: f64,
    pub peak_gate: f64,
    pub passes: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            window: graph::DEFAULT_WINDOW,
            keep_max: proposals::DEFAULT_KEEP_MAX,
            pre_nms_cap: proposals::DEFAULT_PRE_NMS_CAP,
            nms_iou: proposals::DEFAULT_NMS_IOU,
            gate: graph::DEFAULT_GATE,
            lambda: graph::DEFAULT_LAMBDA,
            peak_gate: template::DEFAULT_PEAK_GATE,
            passes: saliency::DEFAULT_PASSES,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |field, reason: &str| {
            Err(ConfigError {
                field,
                reason: reason.to_string(),
            })
        };
        if self.window < 2 {
            return bad("window", "must be at least 2");
        }
        if self.keep_max < 1 {
            return bad("keep_max", "must be at least 1");
        }
        if self.pre_nms_cap < 1 {
            return bad("pre_nms_cap", "must be at least 1");
        }
        if !(self.nms_iou > 0.0 && self.nms_iou < 1.0) {
            return bad("nms_iou", "must lie in (0, 1)");
        }
        if !(-1.0..=1.0).contains(&self.gate) {
            return bad("gate", "must lie in [-1, 1]");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda", "must be a finite non-negative number");
        }
        if !(-1.0..=1.0).contains(&self.peak_gate) {
            return bad("peak_gate", "must lie in [-1, 1]");
        }
        if self.passes < 1 {
            return bad("passes", "must be at least 1");
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub enum ProposalInput {
    /// Connected components of the saliency mask.
    Fallback,
    Manifest(ProposalManifest),
}

#[derive(Clone, Debug)]
pub enum EmbeddingInput {
    Descriptor,
    /// One `UFOE` file per frame, rows in post-NMS proposal order.
    Directory(PathBuf),
}

/// Wall-clock milliseconds spent in each stage of one frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub saliency: f64,
    pub proposals: f64,
    pub nms: f64,
    pub embeddings: f64,
    pub graph: f64,
    pub selection: f64,
    pub prediction: f64,
    pub total: f64,
}

impl StageTimings {
    pub fn accumulate(&mut self, other: &StageTimings) {
        self.saliency += other.saliency;
        self.proposals += other.proposals;
        self.nms += other.nms;
        self.embeddings += other.embeddings;
        self.graph += other.graph;
        self.selection += other.selection;
        self.prediction += other.prediction;
        self.total += other.total;
    }

    pub fn scaled(&self, k: f64) -> StageTimings {
        StageTimings {
            saliency: self.saliency * k,
            proposals: self.proposals * k,
            nms: self.nms * k,
            embeddings: self.embeddings * k,
            graph: self.graph * k,
            selection: self.selection * k,
            prediction: self.prediction * k,
            total: self.total * k,
        }
    }
}

/// What the pipeline reports for one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectionRecord {
    pub frame: usize,
    /// The discovered object's latest box; absent only when nothing has been
    /// proposed yet and prediction failed.
    pub bbox: Option<BoundingBox>,
    pub objectness: Option<f64>,
    pub source: Option<ProposalSource>,
    /// Frame of the proposal that produced `bbox`; earlier than `frame` when
    /// the chain could not be continued.
    pub detection_frame: Option<usize>,
    pub timing: StageTimings,
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Streaming discovery over one sequence. Frames must arrive in index order.
pub struct Session {
    config: PipelineConfig,
    proposals: ProposalInput,
    embeddings: EmbeddingInput,
    graph: CorrespondenceGraph,
    history: VecDeque<Frame>,
    next_index: Option<usize>,
    peak_retained: usize,
    last_saliency: Option<SaliencyMap>,
}

impl Session {
    pub fn new(
        config: PipelineConfig,
        proposals: ProposalInput,
        embeddings: EmbeddingInput,
    ) -> Result<Self, ConfigError> {
        config.validate()?;
        Ok(Self {
            graph: CorrespondenceGraph::new(config.window, config.gate),
            config,
            proposals,
            embeddings,
            history: VecDeque::new(),
            next_index: None,
            peak_retained: 0,
            last_saliency: None,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn graph(&self) -> &CorrespondenceGraph {
        &self.graph
    }

    /// Most frames held at once so far, including the one being processed.
    pub fn peak_retained_frames(&self) -> usize {
        self.peak_retained
    }

    /// Saliency map of the most recently processed frame.
    pub fn last_saliency(&self) -> Option<&SaliencyMap> {
        self.last_saliency.as_ref()
    }

    /// Unfiltered proposals of a frame, from the manifest or the saliency mask.
    pub fn raw_proposals(&self, frame: &Frame, smap: &SaliencyMap) -> Vec<ObjectProposal> {
        match &self.proposals {
            ProposalInput::Fallback => {
                generate_fallback_proposals(smap.mask(), smap.width(), smap.height(), frame.index)
            }
            ProposalInput::Manifest(m) => {
                m.proposals_for(frame.index, frame.width(), frame.height())
            }
        }
    }

    /// Caps by objectness, scores saliency and applies NMS.
    pub fn filter_proposals(
        &self,
        raw: Vec<ObjectProposal>,
        smap: &SaliencyMap,
    ) -> Vec<ObjectProposal> {
        let mut props = cap_by_objectness(raw, self.config.pre_nms_cap);
        for p in &mut props {
            p.saliency = score_saliency(p, smap);
        }
        saliency_nms(&props, self.config.nms_iou, self.config.keep_max)
    }

    fn embed(
        &self,
        frame: &Frame,
        props: &[ObjectProposal],
    ) -> Result<Vec<Embedding>, PipelineError> {
        match &self.embeddings {
            EmbeddingInput::Descriptor => props
                .iter()
                .map(|p| extract_descriptor(frame, &p.bbox).map_err(PipelineError::from))
                .collect(),
            EmbeddingInput::Directory(dir) => {
                let run_dim = self
                    .graph
                    .frames()
                    .filter_map(|f| self.graph.frame_vertices(f))
                    .flat_map(|vs| vs.first())
                    .map(|v| v.embedding.dim())
                    .next();
                if props.is_empty() {
                    return Ok(Vec::new());
                }
                Ok(load_embeddings(
                    &embedding_path(dir, frame.index),
                    run_dim,
                    Some(props.len()),
                )?)
            }
        }
    }

    pub fn process_frame(&mut self, frame: Frame) -> Result<DetectionRecord, PipelineError> {
        let expected = self.next_index.unwrap_or(frame.index);
        if frame.index != expected {
            return Err(PipelineError::OutOfOrder {
                expected,
                got: frame.index,
            });
        }
        let start = Instant::now();
        let mut timing = StageTimings::default();

        let t = Instant::now();
        let smap = SaliencyMap::compute(frame.luma(), self.config.passes)?;
        timing.saliency = ms_since(t);

        let t = Instant::now();
        let raw = self.raw_proposals(&frame, &smap);
        let next_id = raw.iter().map(|p| p.id + 1).max().unwrap_or(0);
        timing.proposals = ms_since(t);

        let t = Instant::now();
        let kept = self.filter_proposals(raw, &smap);
        timing.nms = ms_since(t);

        let t = Instant::now();
        let embeddings = self.embed(&frame, &kept)?;
        timing.embeddings = ms_since(t);

        let t = Instant::now();
        let vertices = kept
            .into_iter()
            .zip(embeddings)
            .map(|(p, e)| Vertex::new(p, e))
            .collect();
        self.graph.update(frame.index, vertices)?;
        timing.graph = ms_since(t);

        let t = Instant::now();
        let mut best = self.graph.select_best_path(self.config.lambda);
        timing.selection = ms_since(t);

        self.history.push_back(frame);
        self.history.make_contiguous();
        self.peak_retained = self.peak_retained.max(self.history.len());
        let frame = self.history.back().expect("just pushed");
        let index = frame.index;

        let t = Instant::now();
        if let Some(path) = best.as_ref().filter(|p| self.needs_prediction(p, index)) {
            if let Some(vertex) = self.predict(frame, &smap, path, next_id)? {
                self.graph.push_vertex(vertex)?;
                best = self.graph.select_best_path(self.config.lambda);
            }
        }
        timing.prediction = ms_since(t);

        while self.history.len() > self.config.window {
            self.history.pop_front();
        }
        self.next_index = Some(index + 1);

        self.last_saliency = Some(smap);
        let detection = best.as_ref().map(emit_detection).transpose()?;
        timing.total = ms_since(start);
        Ok(DetectionRecord {
            frame: index,
            bbox: detection.as_ref().map(|d| d.bbox),
            objectness: detection.as_ref().map(|d| d.objectness),
            source: detection.as_ref().map(|d| d.source),
            detection_frame: detection.as_ref().map(|d| d.frame),
            timing,
        })
    }

    // Only a chain that ended on the previous frame can be continued by an edge.
    fn needs_prediction(&self, path: &TrackPath, index: usize) -> bool {
        path.len() >= 2 && path.last_frame().is_some_and(|f| f + 1 == index)
    }

    fn predict(
        &self,
        frame: &Frame,
        smap: &SaliencyMap,
        path: &TrackPath,
        next_id: usize,
    ) -> Result<Option<Vertex>, PipelineError> {
        let template = match build_template(self.history.as_slices().0, path) {
            Ok(t) => t,
            Err(TemplateError::InsufficientHistory(_)) => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let tail = path.proposals.last().expect("path has vertices");
        let Some(mut proposal) =
            predict_proposal(&template, frame, smap, &tail.bbox, self.config.peak_gate)
        else {
            return Ok(None);
        };
        proposal.id = next_id;
        let embedding = match &self.embeddings {
            EmbeddingInput::Descriptor => extract_descriptor(frame, &proposal.bbox)?,
            // no external embedding exists for a predicted box; reuse the tail's
            EmbeddingInput::Directory(_) => self
                .graph
                .vertex(*path.ids.last().expect("path has vertices"))
                .expect("tail vertex is in the window")
                .embedding
                .clone(),
        };
        Ok(Some(Vertex::new(proposal, embedding)))
    }
}
