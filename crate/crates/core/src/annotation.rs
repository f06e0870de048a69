use std::collections::HashSet;

use crate::error::{Endpoint, Error, Result};
use crate::geometry::{Point3, VolumeGeometry};
use crate::volume::{Label, SegmentationVolume, BACKGROUND};

/// One annotated synaptic connection: presynaptic and postsynaptic point in nm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynapticPartnerAnnotation {
    pub id: u64,
    pub pre_location: Point3,
    pub post_location: Point3,
}

impl SynapticPartnerAnnotation {
    pub fn new(id: u64, pre_location: Point3, post_location: Point3) -> Self {
        Self { id, pre_location, post_location }
    }

    pub fn location(&self, endpoint: Endpoint) -> Point3 {
        match endpoint {
            Endpoint::Pre => self.pre_location,
            Endpoint::Post => self.post_location,
        }
    }

    /// Segment labels under the two endpoints.
    pub fn segments(&self, seg: &SegmentationVolume) -> Result<(Label, Label)> {
        Ok((seg.label_at(self.pre_location)?, seg.label_at(self.post_location)?))
    }
}

/// Validated collection of partner annotations sharing one geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct PointAnnotationSet {
    annotations: Vec<SynapticPartnerAnnotation>,
    geometry: VolumeGeometry,
}

impl PointAnnotationSet {
    /// Checks unique ids, distinct endpoints and that both endpoints are in bounds.
    pub fn new(annotations: Vec<SynapticPartnerAnnotation>, geometry: VolumeGeometry) -> Result<Self> {
        let mut seen = HashSet::with_capacity(annotations.len());
        for a in &annotations {
            if !seen.insert(a.id) {
                return Err(Error::Annotation(format!("duplicate annotation id {}", a.id)));
            }
            if a.pre_location == a.post_location {
                return Err(Error::Annotation(format!(
                    "annotation {}: pre and post locations coincide",
                    a.id
                )));
            }
            for endpoint in [Endpoint::Pre, Endpoint::Post] {
                geometry.world_to_voxel(a.location(endpoint)).map_err(|e| {
                    Error::Annotation(format!("annotation {}: {endpoint} location: {e}", a.id))
                })?;
            }
        }
        Ok(Self { annotations, geometry })
    }

    pub fn empty(geometry: VolumeGeometry) -> Self {
        Self { annotations: Vec::new(), geometry }
    }

    pub fn annotations(&self) -> &[SynapticPartnerAnnotation] {
        &self.annotations
    }

    pub fn geometry(&self) -> &VolumeGeometry {
        &self.geometry
    }

    pub fn len(&self) -> usize {
        self.annotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.annotations.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SynapticPartnerAnnotation> {
        self.annotations.iter()
    }

    /// First annotation with an endpoint on background, as an error.
    pub fn check_labeled(&self, seg: &SegmentationVolume) -> Result<()> {
        for a in &self.annotations {
            for endpoint in [Endpoint::Pre, Endpoint::Post] {
                if seg.label_at(a.location(endpoint))? == BACKGROUND {
                    return Err(Error::BackgroundEndpoint { id: a.id, endpoint });
                }
            }
        }
        Ok(())
    }
}

impl<'a> IntoIterator for &'a PointAnnotationSet {
    type Item = &'a SynapticPartnerAnnotation;
    type IntoIter = std::slice::Iter<'a, SynapticPartnerAnnotation>;

    fn into_iter(self) -> Self::IntoIter {
        self.annotations.iter()
    }
}
