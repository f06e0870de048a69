//! Seeded synthetic volumes with planted synaptic partners, and a round trip
//! through encoding, simulated scores, extraction and evaluation.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::components::{connected_components, Connectivity};
use crate::annotation::{PointAnnotationSet, SynapticPartnerAnnotation};
use crate::encode::{encode_labels, EdgeScoreVolume};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport, MatchingConstraint, PartnerPair};
use crate::extract::{extract, CandidateSynapse, ExtractionParams};
use crate::geometry::{point_distance, Point3, VolumeGeometry, Voxel};
use crate::noise::{labels_to_oracle_scores, NoiseSpec};
use crate::offsets::{OffsetSet, DEFAULT_R_SYN_NM};
use crate::regions::{AnnotationRegions, SynapticRegionMask};
use crate::volume::{Label, SegmentationVolume};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub geometry: VolumeGeometry,
    pub n_segments: usize,
    pub n_synapses: usize,
    /// Inclusive `(min, max)` pre-to-post distance in nm.
    pub partner_distance_range_nm: (f64, f64),
    pub seed: u64,
    /// When set, every planted pair must be covered by these offsets.
    pub coverage_offsets: Option<OffsetSet>,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.partner_distance_range_nm;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::Parameter(format!("partner distance range ({lo}, {hi}) must satisfy 0 < min <= max")));
        }
        if self.n_segments == 0 {
            return Err(Error::Parameter("n_segments must be >= 1".into()));
        }
        if let Some(o) = &self.coverage_offsets {
            o.check_resolution(&self.geometry)?;
            let reach = o.max_length_nm() + 2.0 * o.r_syn_nm();
            if hi > reach {
                return Err(Error::Parameter(format!(
                    "max partner distance {hi} nm exceeds the offset reach {reach} nm (max |r| + 2 r_syn)"
                )));
            }
        }
        Ok(())
    }

    fn r_syn(&self) -> f64 {
        self.coverage_offsets.as_ref().map_or(DEFAULT_R_SYN_NM, OffsetSet::r_syn_nm)
    }

    /// Minimum distance between the postsynaptic points of two synapses on the
    /// same directed segment pair, so their target regions cannot touch.
    pub fn min_separation_nm(&self) -> f64 {
        let res = self.geometry.resolution();
        2.0 * self.r_syn() + 2.0 * res.iter().cloned().fold(0.0, f64::max)
    }
}

/// Nearest-seed partition in nm; labels are `1..=n_segments`, ties go to the lower label.
fn voronoi(g: &VolumeGeometry, seeds: &[Point3]) -> SegmentationVolume {
    let [nx, ny, nz] = g.shape();
    let labels: Vec<Label> = (0..nx)
        .into_par_iter()
        .flat_map_iter(|x| {
            let mut slab = Vec::with_capacity(ny * nz);
            for y in 0..ny {
                for z in 0..nz {
                    let p = g.world([x, y, z]);
                    let mut best = (f64::INFINITY, 0usize);
                    for (i, s) in seeds.iter().enumerate() {
                        let d: f64 = (0..3).map(|a| (p[a] - s[a]) * (p[a] - s[a])).sum();
                        if d < best.0 {
                            best = (d, i);
                        }
                    }
                    slab.push(best.1 as Label + 1);
                }
            }
            slab
        })
        .collect();
    let arr = ndarray::Array3::from_shape_vec((nx, ny, nz), labels).expect("shape matches");
    SegmentationVolume::new(*g, arr).expect("shape matches")
}

/// Face-adjacent voxel pairs with different labels, keyed by `(low label, high label)`;
/// each entry is `(voxel in low label, voxel in high label)`.
fn boundaries(seg: &SegmentationVolume) -> BTreeMap<(Label, Label), Vec<(Voxel, Voxel)>> {
    let g = seg.geometry();
    let mut out: BTreeMap<(Label, Label), Vec<(Voxel, Voxel)>> = BTreeMap::new();
    for idx in 0..g.num_voxels() {
        let v = g.unlinear(idx);
        let a = seg.label(v);
        for d in [[1, 0, 0], [0, 1, 0], [0, 0, 1]] {
            if let Some(w) = g.offset(v, d) {
                let b = seg.label(w);
                if a != b {
                    let entry = if a < b { ((a, b), (v, w)) } else { ((b, a), (w, v)) };
                    out.entry(entry.0).or_default().push(entry.1);
                }
            }
        }
    }
    out
}

/// Whether the noise-free edges of `a` exist and their targets form a single
/// face-connected component, so extraction returns exactly one candidate.
fn recoverable(a: &SynapticPartnerAnnotation, o: &OffsetSet, seg: &SegmentationVolume) -> Result<bool> {
    let g = seg.geometry();
    let regions = AnnotationRegions::new(a, o.r_syn_nm(), seg)?;
    let edges = regions.edges(o.offsets_vox(), seg);
    if edges.is_empty() {
        return Ok(false);
    }
    let targets: Vec<usize> = edges
        .iter()
        .map(|&(k, idx)| g.linear(g.offset(g.unlinear(idx), o.offsets_vox()[k]).expect("edge stays inside")))
        .collect();
    Ok(connected_components(&targets, g, Connectivity::Six).len() == 1)
}

/// Builds a Voronoi segmentation and plants `n_synapses` partner pairs across
/// segment boundaries. Deterministic in `spec.seed`.
///
/// A pre point sits on a boundary voxel; its post point is a voxel of the
/// neighboring segment whose distance lies in the configured range. Both are
/// voxel centers. Pairs on the same directed segment pair keep their post
/// points at least [`SynthSpec::min_separation_nm`] apart. With
/// `coverage_offsets`, each pair must be linked by at least one offset and
/// its edge targets must be face-connected.
pub fn generate(spec: &SynthSpec) -> Result<(SegmentationVolume, PointAnnotationSet)> {
    spec.validate()?;
    let g = spec.geometry;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let shape = g.shape();
    let origin = g.origin();
    let res = g.resolution();
    let seeds: Vec<Point3> = (0..spec.n_segments)
        .map(|_| [0, 1, 2].map(|a| origin[a] + rng.random::<f64>() * (shape[a] - 1) as f64 * res[a]))
        .collect();
    let seg = voronoi(&g, &seeds);
    if spec.n_synapses == 0 {
        return Ok((seg, PointAnnotationSet::empty(g)));
    }
    let borders = boundaries(&seg);
    let pairs: Vec<(Label, Label)> = borders.keys().copied().collect();
    if pairs.is_empty() {
        return Err(Error::Generation { placed: 0, requested: spec.n_synapses });
    }

    let (dmin, dmax) = spec.partner_distance_range_nm;
    let ext = [0, 1, 2].map(|a| (dmax / res[a]).floor() as i64);
    let min_sep = spec.min_separation_nm();
    let mut planted: Vec<(SynapticPartnerAnnotation, (Label, Label))> = Vec::new();
    let attempts = 10 * spec.n_synapses;
    for _ in 0..attempts {
        if planted.len() == spec.n_synapses {
            break;
        }
        let pair = pairs[rng.random_range(0..pairs.len())];
        let faces = &borders[&pair];
        let (lo_vox, hi_vox) = faces[rng.random_range(0..faces.len())];
        let (pre_vox, post_label) = if rng.random::<bool>() { (lo_vox, pair.1) } else { (hi_vox, pair.0) };
        let pre_label = seg.label(pre_vox);

        let mut candidates: Vec<Voxel> = Vec::new();
        for dx in -ext[0]..=ext[0] {
            for dy in -ext[1]..=ext[1] {
                for dz in -ext[2]..=ext[2] {
                    let Some(w) = g.offset(pre_vox, [dx, dy, dz]) else { continue };
                    if seg.label(w) != post_label {
                        continue;
                    }
                    let d = g.distance_nm(pre_vox, w);
                    if d >= dmin && d <= dmax {
                        candidates.push(w);
                    }
                }
            }
        }
        if candidates.is_empty() {
            continue;
        }
        let post_vox = candidates[rng.random_range(0..candidates.len())];
        let ann = SynapticPartnerAnnotation::new(planted.len() as u64, g.world(pre_vox), g.world(post_vox));
        let key = (pre_label, post_label);
        let crowded = planted
            .iter()
            .any(|(other, k)| *k == key && point_distance(other.post_location, ann.post_location) <= min_sep);
        if crowded {
            continue;
        }
        if let Some(o) = &spec.coverage_offsets {
            if !recoverable(&ann, o, &seg)? {
                continue;
            }
        }
        planted.push((ann, key));
    }
    if planted.len() < spec.n_synapses {
        return Err(Error::Generation { placed: planted.len(), requested: spec.n_synapses });
    }
    let set = PointAnnotationSet::new(planted.into_iter().map(|(a, _)| a).collect(), g)?;
    Ok((seg, set))
}

/// Confidence each annotation would get from noise-free labels: its number of edges.
pub fn planted_confidences(annotations: &PointAnnotationSet, o: &OffsetSet, seg: &SegmentationVolume) -> Result<Vec<f64>> {
    let mask = SynapticRegionMask::build(annotations, o.r_syn_nm(), seg)?;
    Ok(mask.regions.iter().map(|r| r.edges(o.offsets_vox(), seg).len() as f64).collect())
}

/// Everything produced by [`end_to_end_roundtrip`].
#[derive(Debug, Clone)]
pub struct RoundTrip {
    pub segmentation: SegmentationVolume,
    pub planted: PointAnnotationSet,
    pub labels: EdgeScoreVolume,
    pub scores: EdgeScoreVolume,
    pub candidates: Vec<CandidateSynapse>,
    pub params: ExtractionParams,
    pub report: EvalReport,
}

/// Generation, label encoding, simulated scores, extraction and evaluation
/// against the planted annotations.
///
/// With `t2 = None` the confidence threshold is half the smallest noise-free
/// planted confidence.
pub fn end_to_end_roundtrip(
    spec: &SynthSpec,
    offsets: &OffsetSet,
    t1: f64,
    t2: Option<f64>,
    connectivity: crate::components::Connectivity,
    noise: &NoiseSpec,
    constraint: &MatchingConstraint,
) -> Result<RoundTrip> {
    let (segmentation, planted) = generate(spec)?;
    let labels = encode_labels(&planted, offsets, &segmentation)?;
    let t2 = match t2 {
        Some(t2) => t2,
        None => {
            let conf = planted_confidences(&planted, offsets, &segmentation)?;
            conf.into_iter().reduce(f64::min).map_or(0.0, |m| 0.5 * m)
        }
    };
    let params = ExtractionParams::new(t1, t2, connectivity)?;
    let scores = labels_to_oracle_scores(&labels, noise)?;
    let candidates = extract(&scores, &segmentation, &params)?;
    let predicted = PartnerPair::from_candidates(&candidates);
    let truth: Vec<PartnerPair> = planted.iter().map(PartnerPair::from).collect();
    let report = evaluate(&predicted, &truth, &segmentation, constraint);
    Ok(RoundTrip { segmentation, planted, labels, scores, candidates, params, report })
}
