//! Shared fixtures for the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ufo_core::synthetic::{render, SyntheticSequence, SyntheticSpec};
use ufo_core::{BoundingBox, Embedding, ObjectProposal, ProposalSource};

/// A 480x270 sequence whose manifests hold well over 100 boxes per frame.
pub fn quarter_hd_sequence(frames: usize) -> SyntheticSequence {
    render(&SyntheticSpec {
        width: 480,
        height: 270,
        frames,
        object_size: 60,
        start: (40.0, 30.0),
        velocity: (6.0, 3.0),
        clutter: 160,
        seed: 6,
        ..Default::default()
    })
    .expect("valid spec")
}

pub fn random_proposals(n: usize, seed: u64) -> Vec<ObjectProposal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|id| ObjectProposal {
            frame: 0,
            id,
            bbox: BoundingBox::new(
                rng.random_range(0..420),
                rng.random_range(0..220),
                rng.random_range(8..60),
                rng.random_range(8..50),
            ),
            objectness: rng.random(),
            saliency: rng.random(),
            source: ProposalSource::External,
        })
        .collect()
}

pub fn random_embeddings(n: usize, dim: usize, seed: u64) -> Vec<Embedding> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Embedding::new((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()))
        .collect()
}
