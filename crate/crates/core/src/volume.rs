use ndarray::Array3;

use crate::error::{Error, Result};
use crate::geometry::{Point3, VolumeGeometry, Voxel};

/// Neuron segment id. `0` is background.
pub type Label = u64;

pub const BACKGROUND: Label = 0;

/// Integer neuron labels on an anisotropic grid, indexed `[x, y, z]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationVolume {
    geometry: VolumeGeometry,
    labels: Array3<Label>,
}

impl SegmentationVolume {
    pub fn new(geometry: VolumeGeometry, labels: Array3<Label>) -> Result<Self> {
        let dim = labels.dim();
        if [dim.0, dim.1, dim.2] != geometry.shape() {
            return Err(Error::GeometryMismatch(format!(
                "label array has shape {:?} but geometry says {:?}",
                dim,
                geometry.shape()
            )));
        }
        // keep standard layout so linear indices match iteration order
        let labels = if labels.is_standard_layout() { labels } else { labels.as_standard_layout().to_owned() };
        Ok(Self { geometry, labels })
    }

    /// Volume filled with a single label.
    pub fn filled(geometry: VolumeGeometry, label: Label) -> Self {
        let s = geometry.shape();
        Self { geometry, labels: Array3::from_elem((s[0], s[1], s[2]), label) }
    }

    pub fn from_fn(geometry: VolumeGeometry, mut f: impl FnMut(Voxel) -> Label) -> Self {
        let s = geometry.shape();
        let labels = Array3::from_shape_fn((s[0], s[1], s[2]), |(x, y, z)| f([x, y, z]));
        Self { geometry, labels }
    }

    pub fn geometry(&self) -> &VolumeGeometry {
        &self.geometry
    }

    pub fn labels(&self) -> &Array3<Label> {
        &self.labels
    }

    /// Labels in linear-index order.
    pub fn as_slice(&self) -> &[Label] {
        self.labels.as_slice().expect("standard layout")
    }

    #[inline]
    pub fn label(&self, v: Voxel) -> Label {
        self.labels[[v[0], v[1], v[2]]]
    }

    #[inline]
    pub fn label_linear(&self, idx: usize) -> Label {
        self.as_slice()[idx]
    }

    /// Label of the voxel containing `p`.
    pub fn label_at(&self, p: Point3) -> Result<Label> {
        Ok(self.label(self.geometry.world_to_voxel(p)?))
    }

    /// Sorted distinct nonzero labels.
    pub fn segment_ids(&self) -> Vec<Label> {
        let mut ids: Vec<Label> = self.as_slice().iter().copied().filter(|&l| l != BACKGROUND).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_must_match_geometry() {
        let g = VolumeGeometry::with_shape([2, 3, 4], [1.0; 3]).unwrap();
        assert!(SegmentationVolume::new(g, Array3::zeros((2, 3, 5))).is_err());
        assert!(SegmentationVolume::new(g, Array3::zeros((2, 3, 4))).is_ok());
    }

    #[test]
    fn fortran_layout_is_normalized() {
        use ndarray::ShapeBuilder;
        let g = VolumeGeometry::with_shape([2, 3, 4], [1.0; 3]).unwrap();
        let mut a = Array3::<Label>::zeros((2, 3, 4).f());
        a[[1, 2, 3]] = 9;
        let seg = SegmentationVolume::new(g, a).unwrap();
        assert_eq!(seg.label_linear(g.linear([1, 2, 3])), 9);
    }

    #[test]
    fn label_lookup_by_point() {
        let g = VolumeGeometry::with_shape([4, 4, 4], [4.0, 4.0, 40.0]).unwrap();
        let seg = SegmentationVolume::from_fn(g, |v| if v[0] < 2 { 1 } else { 2 });
        assert_eq!(seg.label_at([6.0, 0.0, 0.0]).unwrap(), 2);
        assert_eq!(seg.label_at([5.0, 0.0, 0.0]).unwrap(), 1);
        assert_eq!(seg.segment_ids(), vec![1, 2]);
    }
}
