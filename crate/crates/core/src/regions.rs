//! Synaptic regions: the ball of radius `r_syn` around an annotated point,
//! restricted to the segment that contains the point.

use rayon::prelude::*;

use crate::annotation::{PointAnnotationSet, SynapticPartnerAnnotation};
use crate::error::{Endpoint, Error, Result};
use crate::geometry::{Point3, Voxel, VoxelOffset};
use crate::volume::{SegmentationVolume, BACKGROUND};

/// A set of voxels stored as sorted linear indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VoxelRegion {
    voxels: Vec<usize>,
}

impl VoxelRegion {
    pub fn from_linear(mut voxels: Vec<usize>) -> Self {
        voxels.sort_unstable();
        voxels.dedup();
        Self { voxels }
    }

    #[inline]
    pub fn contains(&self, idx: usize) -> bool {
        self.voxels.binary_search(&idx).is_ok()
    }

    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.voxels
    }
}

/// Voxels within `r_syn` nm of the voxel containing `p` that share its label.
///
/// Distances are measured between voxel centers (closed ball), so the voxel
/// of `p` is always a member.
pub fn expand_region(p: Point3, r_syn: f64, seg: &SegmentationVolume) -> Result<VoxelRegion> {
    let g = seg.geometry();
    let center = g.world_to_voxel(p)?;
    let label = seg.label(center);
    if label == BACKGROUND {
        return Err(Error::Annotation(format!("point {p:?} nm lies on the background label")));
    }
    Ok(ball_in_segment(center, r_syn, seg))
}

fn ball_in_segment(center: Voxel, r_syn: f64, seg: &SegmentationVolume) -> VoxelRegion {
    let g = seg.geometry();
    let label = seg.label(center);
    let shape = g.shape();
    let res = g.resolution();
    let r2 = r_syn * r_syn;
    let ext = [0, 1, 2].map(|a| (r_syn / res[a]).floor() as usize);
    let lo = [0, 1, 2].map(|a| center[a].saturating_sub(ext[a]));
    let hi = [0, 1, 2].map(|a| (center[a] + ext[a]).min(shape[a] - 1));
    let mut voxels = Vec::new();
    for x in lo[0]..=hi[0] {
        let dx = (x as f64 - center[0] as f64) * res[0];
        for y in lo[1]..=hi[1] {
            let dy = (y as f64 - center[1] as f64) * res[1];
            for z in lo[2]..=hi[2] {
                let dz = (z as f64 - center[2] as f64) * res[2];
                if dx * dx + dy * dy + dz * dz <= r2 && seg.label([x, y, z]) == label {
                    voxels.push(g.linear([x, y, z]));
                }
            }
        }
    }
    // loop order is already linear-index order
    VoxelRegion { voxels }
}

/// Pre- and post-synaptic regions of one annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationRegions {
    pub id: u64,
    pub pre: VoxelRegion,
    pub post: VoxelRegion,
}

impl AnnotationRegions {
    pub fn new(a: &SynapticPartnerAnnotation, r_syn: f64, seg: &SegmentationVolume) -> Result<Self> {
        let region = |endpoint: Endpoint| {
            let p = a.location(endpoint);
            let v = seg.geometry().world_to_voxel(p)?;
            if seg.label(v) == BACKGROUND {
                return Err(Error::BackgroundEndpoint { id: a.id, endpoint });
            }
            Ok(ball_in_segment(v, r_syn, seg))
        };
        Ok(Self { id: a.id, pre: region(Endpoint::Pre)?, post: region(Endpoint::Post)? })
    }

    /// Whether some pre-region voxel reaches the post-region through offset `d`.
    pub fn linked_by(&self, d: VoxelOffset, seg: &SegmentationVolume) -> bool {
        let g = seg.geometry();
        self.pre.as_slice().iter().any(|&idx| {
            g.offset(g.unlinear(idx), d).is_some_and(|w| self.post.contains(g.linear(w)))
        })
    }

    /// All `(offset index, source linear index)` edges from the pre- into the post-region.
    pub fn edges(&self, offsets: &[VoxelOffset], seg: &SegmentationVolume) -> Vec<(usize, usize)> {
        let g = seg.geometry();
        let mut out = Vec::new();
        for (k, &d) in offsets.iter().enumerate() {
            for &idx in self.pre.as_slice() {
                if let Some(w) = g.offset(g.unlinear(idx), d) {
                    if self.post.contains(g.linear(w)) {
                        out.push((k, idx));
                    }
                }
            }
        }
        out
    }
}

/// Regions for every annotation of a set, in annotation order.
#[derive(Debug, Clone, PartialEq)]
pub struct SynapticRegionMask {
    pub r_syn_nm: f64,
    pub regions: Vec<AnnotationRegions>,
}

impl SynapticRegionMask {
    pub fn build(annotations: &PointAnnotationSet, r_syn: f64, seg: &SegmentationVolume) -> Result<Self> {
        annotations.geometry().ensure_same(seg.geometry(), "annotations vs segmentation")?;
        let regions = annotations
            .annotations()
            .par_iter()
            .map(|a| AnnotationRegions::new(a, r_syn, seg))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { r_syn_nm: r_syn, regions })
    }
}
