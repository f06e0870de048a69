//! Fixtures for the criterion benchmarks.

use synpart::{
    encode_labels, generate, labels_to_oracle_scores, paper_offset_set, CostMatrix, EdgeScoreVolume, NoiseSpec,
    OffsetSet, PointAnnotationSet, SegmentationVolume, SynthSpec, VolumeGeometry,
};

pub struct Fixture {
    pub segmentation: SegmentationVolume,
    pub annotations: PointAnnotationSet,
    pub offsets: OffsetSet,
    pub labels: EdgeScoreVolume,
    pub scores: EdgeScoreVolume,
}

/// Synthetic volume of the given shape at CREMI resolution with noisy scores.
pub fn fixture(shape: [usize; 3], n_segments: usize, n_synapses: usize, seed: u64) -> Fixture {
    let g = VolumeGeometry::with_shape(shape, VolumeGeometry::CREMI_RESOLUTION).expect("valid shape");
    let offsets = paper_offset_set(&g).expect("CREMI offsets");
    let spec = SynthSpec {
        geometry: g,
        n_segments,
        n_synapses,
        partner_distance_range_nm: (80.0, 140.0),
        seed,
        coverage_offsets: Some(offsets.clone()),
    };
    let (segmentation, annotations) = generate(&spec).expect("generation succeeds");
    let labels = encode_labels(&annotations, &offsets, &segmentation).expect("encoding succeeds");
    let scores = labels_to_oracle_scores(&labels, &NoiseSpec::gaussian(0.1, seed)).expect("valid noise");
    Fixture { segmentation, annotations, offsets, labels, scores }
}

/// Dense `n x n` cost matrix with a deterministic pseudo-random pattern and some forbidden entries.
pub fn cost_matrix(n: usize) -> CostMatrix {
    CostMatrix::from_fn(n, n, |i, j| {
        let h = (i * 7919 + j * 104_729) % 1009;
        if h % 11 == 0 {
            None
        } else {
            Some(h as f64)
        }
    })
}
