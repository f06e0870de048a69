//! Per-voxel, per-offset edge volumes: ground-truth encoding of point
//! annotations and the score volumes consumed by extraction.

use ndarray::{Array4, ArrayView3};
use rayon::prelude::*;

use crate::annotation::PointAnnotationSet;
use crate::error::{Error, Result};
use crate::geometry::VolumeGeometry;
use crate::offsets::OffsetSet;
use crate::regions::SynapticRegionMask;
use crate::volume::SegmentationVolume;

/// Scores in `[0, 1]` for every (offset, voxel), laid out `[k, x, y, z]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeScoreVolume {
    geometry: VolumeGeometry,
    offsets: OffsetSet,
    scores: Array4<f32>,
}

impl EdgeScoreVolume {
    pub fn new(geometry: VolumeGeometry, offsets: OffsetSet, scores: Array4<f32>) -> Result<Self> {
        let (k, x, y, z) = scores.dim();
        if k != offsets.len() {
            return Err(Error::GeometryMismatch(format!(
                "score volume has {k} channels but the offset set has {}",
                offsets.len()
            )));
        }
        if [x, y, z] != geometry.shape() {
            return Err(Error::GeometryMismatch(format!(
                "score volume spatial shape {:?} differs from geometry {:?}",
                [x, y, z],
                geometry.shape()
            )));
        }
        offsets.check_resolution(&geometry)?;
        if let Some(bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::Parameter(format!("edge score {bad} outside [0, 1]")));
        }
        let scores = if scores.is_standard_layout() { scores } else { scores.as_standard_layout().to_owned() };
        Ok(Self { geometry, offsets, scores })
    }

    pub fn zeros(geometry: VolumeGeometry, offsets: OffsetSet) -> Self {
        let [x, y, z] = geometry.shape();
        let scores = Array4::zeros((offsets.len(), x, y, z));
        Self { geometry, offsets, scores }
    }

    pub fn geometry(&self) -> &VolumeGeometry {
        &self.geometry
    }

    pub fn offsets(&self) -> &OffsetSet {
        &self.offsets
    }

    pub fn scores(&self) -> &Array4<f32> {
        &self.scores
    }

    pub fn num_channels(&self) -> usize {
        self.offsets.len()
    }

    pub fn channel(&self, k: usize) -> ArrayView3<'_, f32> {
        self.scores.index_axis(ndarray::Axis(0), k)
    }

    /// Channel `k` in linear voxel order.
    pub fn channel_slice(&self, k: usize) -> &[f32] {
        let n = self.geometry.num_voxels();
        &self.scores.as_slice().expect("standard layout")[k * n..(k + 1) * n]
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f32] {
        self.scores.as_slice_mut().expect("standard layout")
    }

    #[inline]
    pub fn score(&self, k: usize, idx: usize) -> f32 {
        self.channel_slice(k)[idx]
    }

    /// Only 0 and 1 entries.
    pub fn is_binary(&self) -> bool {
        self.scores.iter().all(|&s| s == 0.0 || s == 1.0)
    }

    pub fn count_positive(&self) -> usize {
        self.scores.iter().filter(|&&s| s > 0.0).count()
    }
}

/// Ground-truth edge labels: entry `(k, v)` is 1 iff for some annotation
/// `v` lies in its pre-region and `v + r_k` lies in its post-region.
///
/// Edges whose target leaves the volume are 0.
pub fn encode_labels(
    annotations: &PointAnnotationSet,
    o: &OffsetSet,
    seg: &SegmentationVolume,
) -> Result<EdgeScoreVolume> {
    let g = *seg.geometry();
    o.check_resolution(&g)?;
    let mask = SynapticRegionMask::build(annotations, o.r_syn_nm(), seg)?;
    let per_annotation: Vec<Vec<(usize, usize)>> =
        mask.regions.par_iter().map(|r| r.edges(o.offsets_vox(), seg)).collect();
    let mut out = EdgeScoreVolume::zeros(g, o.clone());
    let n = g.num_voxels();
    let data = out.as_mut_slice();
    for edges in per_annotation {
        for (k, idx) in edges {
            data[k * n + idx] = 1.0;
        }
    }
    Ok(out)
}
