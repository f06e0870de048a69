//! Candidate synapses from edge scores.
//!
//! Edges scoring at least `t1` that cross from one segment into another are
//! grouped by directed segment pair. Within a group, edges whose target voxels
//! are connected form one candidate; its confidence is the sum of its edge
//! scores and it is kept when the confidence exceeds `t2`. The pre and post
//! locations are the centroids of the source and target voxels, snapped onto
//! the nearest member voxel.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::components::{connected_components, Connectivity};
use crate::encode::EdgeScoreVolume;
use crate::error::{Error, Result};
use crate::geometry::{Point3, VolumeGeometry, Voxel};
use crate::volume::{Label, SegmentationVolume, BACKGROUND};

/// Thresholds and neighborhood for [`extract`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractionParams {
    /// Minimum edge score (inclusive).
    pub t1: f64,
    /// Confidence a candidate must exceed (strict).
    pub t2: f64,
    pub connectivity: Connectivity,
}

impl ExtractionParams {
    /// Thresholds selected on CREMI: `t1 = 0.5`, `t2 = 2500`.
    pub const CREMI: ExtractionParams = ExtractionParams { t1: 0.5, t2: 2500.0, connectivity: Connectivity::TwentySix };

    pub fn new(t1: f64, t2: f64, connectivity: Connectivity) -> Result<Self> {
        let p = Self { t1, t2, connectivity };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.t1) {
            return Err(Error::Parameter(format!("t1 must be in [0,1], got {}", self.t1)));
        }
        if !self.t2.is_finite() || self.t2 < 0.0 {
            return Err(Error::Parameter(format!("t2 must be >= 0, got {}", self.t2)));
        }
        Ok(())
    }
}

/// One above-threshold edge: source voxel, offset channel, target voxel (linear indices).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeEvidence {
    pub source: usize,
    pub offset: usize,
    pub target: usize,
    pub score: f32,
}

/// Edges grouped by directed `(source segment, target segment)`.
pub type EdgeGroups = BTreeMap<(Label, Label), Vec<EdgeEvidence>>;

/// Collects edges with score `>= t1` that start and end on different nonzero
/// labels inside the volume.
pub fn threshold_edges(scores: &EdgeScoreVolume, seg: &SegmentationVolume, t1: f64) -> Result<EdgeGroups> {
    scores.geometry().ensure_same(seg.geometry(), "scores vs segmentation")?;
    let g = *seg.geometry();
    let labels = seg.as_slice();
    let t1 = t1 as f32;
    let per_channel: Vec<Vec<((Label, Label), EdgeEvidence)>> = (0..scores.num_channels())
        .into_par_iter()
        .map(|k| {
            let d = scores.offsets().offsets_vox()[k];
            let mut found = Vec::new();
            for (idx, &s) in scores.channel_slice(k).iter().enumerate() {
                if s < t1 {
                    continue;
                }
                let src = labels[idx];
                if src == BACKGROUND {
                    continue;
                }
                let Some(w) = g.offset(g.unlinear(idx), d) else { continue };
                let target = g.linear(w);
                let dst = labels[target];
                if dst == BACKGROUND || dst == src {
                    continue;
                }
                found.push(((src, dst), EdgeEvidence { source: idx, offset: k, target, score: s }));
            }
            found
        })
        .collect();
    let mut groups = EdgeGroups::new();
    for channel in per_channel {
        for (key, e) in channel {
            groups.entry(key).or_default().push(e);
        }
    }
    for edges in groups.values_mut() {
        edges.sort_by_key(|e| (e.source, e.offset));
    }
    Ok(groups)
}

/// Edges of one segment pair whose targets form one connected component.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeComponent {
    pub source_segment: Label,
    pub target_segment: Label,
    pub edges: Vec<EdgeEvidence>,
}

impl EdgeComponent {
    /// Sum of edge scores.
    pub fn confidence(&self) -> f64 {
        self.edges.iter().map(|e| e.score as f64).sum()
    }

    /// Smallest target index; identifies the component independent of traversal order.
    pub fn canonical_id(&self) -> usize {
        self.edges.iter().map(|e| e.target).min().unwrap_or(usize::MAX)
    }

    pub fn sources(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.edges.iter().map(|e| e.source).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn targets(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.edges.iter().map(|e| e.target).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Splits one segment pair's edges by connected components of their target
/// voxels. Components are ordered by smallest target index.
pub fn split_components(
    pair: (Label, Label),
    edges: &[EdgeEvidence],
    g: &VolumeGeometry,
    connectivity: Connectivity,
) -> Vec<EdgeComponent> {
    let targets: Vec<usize> = edges.iter().map(|e| e.target).collect();
    let comps = connected_components(&targets, g, connectivity);
    let mut owner: HashMap<usize, usize> = HashMap::with_capacity(targets.len());
    for (c, members) in comps.iter().enumerate() {
        for &t in members {
            owner.insert(t, c);
        }
    }
    let mut out: Vec<EdgeComponent> = (0..comps.len())
        .map(|_| EdgeComponent { source_segment: pair.0, target_segment: pair.1, edges: Vec::new() })
        .collect();
    for e in edges {
        out[owner[&e.target]].edges.push(*e);
    }
    for c in &mut out {
        c.edges.sort_by_key(|e| (e.source, e.offset));
    }
    out
}

/// Keeps components whose confidence is strictly greater than `t2`.
pub fn score_and_filter(components: Vec<EdgeComponent>, t2: f64) -> Vec<EdgeComponent> {
    components.into_iter().filter(|c| c.confidence() > t2).collect()
}

/// Centroid of `voxels` in nm, snapped to the nearest member; ties go to the
/// smallest linear index. `voxels` must be sorted and non-empty.
pub fn snap_centroid(voxels: &[usize], g: &VolumeGeometry) -> Voxel {
    let n = voxels.len() as f64;
    let mut c = [0.0; 3];
    for &idx in voxels {
        let p = g.world(g.unlinear(idx));
        for a in 0..3 {
            c[a] += p[a];
        }
    }
    let c = c.map(|s| s / n);
    let mut best = (f64::INFINITY, usize::MAX);
    for &idx in voxels {
        let p = g.world(g.unlinear(idx));
        let d2: f64 = (0..3).map(|a| (p[a] - c[a]) * (p[a] - c[a])).sum();
        if d2 < best.0 || (d2 == best.0 && idx < best.1) {
            best = (d2, idx);
        }
    }
    g.unlinear(best.1)
}

/// Pre and post locations (nm) of a component.
pub fn localize(c: &EdgeComponent, g: &VolumeGeometry) -> (Point3, Point3) {
    assert!(!c.edges.is_empty(), "cannot localize a component without edges");
    let pre = snap_centroid(&c.sources(), g);
    let post = snap_centroid(&c.targets(), g);
    (g.world(pre), g.world(post))
}

/// An extracted synaptic partner pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSynapse {
    pub source_segment: Label,
    pub target_segment: Label,
    pub edges: Vec<EdgeEvidence>,
    pub confidence: f64,
    pub pre_location: Point3,
    pub post_location: Point3,
}

impl CandidateSynapse {
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }
}

/// Full extraction. Output is sorted by source segment, target segment, then
/// descending confidence.
pub fn extract(
    scores: &EdgeScoreVolume,
    seg: &SegmentationVolume,
    params: &ExtractionParams,
) -> Result<Vec<CandidateSynapse>> {
    params.validate()?;
    let groups = threshold_edges(scores, seg, params.t1)?;
    let g = *seg.geometry();
    let groups: Vec<((Label, Label), Vec<EdgeEvidence>)> = groups.into_iter().collect();
    let per_group: Vec<Vec<CandidateSynapse>> = groups
        .par_iter()
        .map(|(pair, edges)| {
            let comps = split_components(*pair, edges, &g, params.connectivity);
            score_and_filter(comps, params.t2)
                .into_iter()
                .map(|c| {
                    let (pre_location, post_location) = localize(&c, &g);
                    CandidateSynapse {
                        source_segment: c.source_segment,
                        target_segment: c.target_segment,
                        confidence: c.confidence(),
                        edges: c.edges,
                        pre_location,
                        post_location,
                    }
                })
                .collect()
        })
        .collect();
    let mut out: Vec<CandidateSynapse> = per_group.into_iter().flatten().collect();
    // stable: equal confidences keep component order
    out.sort_by(|a, b| {
        (a.source_segment, a.target_segment)
            .cmp(&(b.source_segment, b.target_segment))
            .then(b.confidence.total_cmp(&a.confidence))
    });
    Ok(out)
}
