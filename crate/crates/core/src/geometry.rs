//! Anisotropic voxel grids and the nm <-> voxel mapping.
//!
//! Every public coordinate is a world position in nm with axis order
//! `(x, y, z)`. Voxel `v` represents the world point
//! `origin + v * resolution` (its center).

use crate::error::{Error, Result};

/// World position in nm, `(x, y, z)`.
pub type Point3 = [f64; 3];
/// Voxel index, `(x, y, z)`.
pub type Voxel = [usize; 3];
/// Signed voxel displacement.
pub type VoxelOffset = [i64; 3];

const AXES: [char; 3] = ['x', 'y', 'z'];

/// Shape, nm resolution and nm origin of a voxel grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeGeometry {
    shape: [usize; 3],
    resolution: [f64; 3],
    origin: Point3,
}

impl VolumeGeometry {
    /// CREMI resolution, nm per voxel.
    pub const CREMI_RESOLUTION: [f64; 3] = [4.0, 4.0, 40.0];

    pub fn new(shape: [usize; 3], resolution: [f64; 3], origin: Point3) -> Result<Self> {
        for axis in 0..3 {
            if shape[axis] == 0 {
                return Err(Error::Geometry(format!("shape along {} must be >= 1", AXES[axis])));
            }
            if !(resolution[axis] > 0.0 && resolution[axis].is_finite()) {
                return Err(Error::Geometry(format!(
                    "resolution along {} must be a positive number, got {}",
                    AXES[axis], resolution[axis]
                )));
            }
            if !origin[axis].is_finite() {
                return Err(Error::Geometry(format!("origin along {} is not finite", AXES[axis])));
            }
        }
        Ok(Self { shape, resolution, origin })
    }

    /// Geometry with zero origin.
    pub fn with_shape(shape: [usize; 3], resolution: [f64; 3]) -> Result<Self> {
        Self::new(shape, resolution, [0.0; 3])
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn resolution(&self) -> [f64; 3] {
        self.resolution
    }

    pub fn origin(&self) -> Point3 {
        self.origin
    }

    pub fn num_voxels(&self) -> usize {
        self.shape.iter().product()
    }

    /// Center of voxel `v` in nm.
    pub fn world(&self, v: Voxel) -> Point3 {
        [0, 1, 2].map(|a| self.origin[a] + v[a] as f64 * self.resolution[a])
    }

    /// Nearest voxel to `p`, rounding half away from zero on each axis.
    pub fn world_to_voxel(&self, p: Point3) -> Result<Voxel> {
        let mut v = [0usize; 3];
        for axis in 0..3 {
            let idx = ((p[axis] - self.origin[axis]) / self.resolution[axis]).round();
            if !(idx >= 0.0 && idx < self.shape[axis] as f64) {
                return Err(Error::OutOfBounds {
                    axis: AXES[axis],
                    value: p[axis],
                    index: if idx.is_finite() { idx as i64 } else { i64::MIN },
                    extent: self.shape[axis],
                });
            }
            v[axis] = idx as usize;
        }
        Ok(v)
    }

    pub fn contains_point(&self, p: Point3) -> bool {
        self.world_to_voxel(p).is_ok()
    }

    /// Row-major linear index (z fastest).
    #[inline]
    pub fn linear(&self, v: Voxel) -> usize {
        (v[0] * self.shape[1] + v[1]) * self.shape[2] + v[2]
    }

    #[inline]
    pub fn unlinear(&self, idx: usize) -> Voxel {
        let z = idx % self.shape[2];
        let rest = idx / self.shape[2];
        [rest / self.shape[1], rest % self.shape[1], z]
    }

    /// `v + d` if it stays inside the grid.
    #[inline]
    pub fn offset(&self, v: Voxel, d: VoxelOffset) -> Option<Voxel> {
        let mut out = [0usize; 3];
        for axis in 0..3 {
            let t = v[axis] as i64 + d[axis];
            if t < 0 || t >= self.shape[axis] as i64 {
                return None;
            }
            out[axis] = t as usize;
        }
        Some(out)
    }

    /// Euclidean distance between two voxel centers in nm.
    pub fn distance_nm(&self, a: Voxel, b: Voxel) -> f64 {
        let mut s = 0.0;
        for axis in 0..3 {
            let d = (a[axis] as f64 - b[axis] as f64) * self.resolution[axis];
            s += d * d;
        }
        s.sqrt()
    }

    /// Same shape, resolution and origin.
    pub fn ensure_same(&self, other: &VolumeGeometry, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::GeometryMismatch(format!(
                "{what}: {:?}/{:?}/{:?} vs {:?}/{:?}/{:?}",
                self.shape, self.resolution, self.origin, other.shape, other.resolution, other.origin
            )));
        }
        Ok(())
    }
}

/// Euclidean distance between the centers of voxels `a` and `b`, in nm.
pub fn anisotropic_distance_nm(a: Voxel, b: Voxel, g: &VolumeGeometry) -> f64 {
    g.distance_nm(a, b)
}

/// Euclidean distance between two world points.
pub fn point_distance(a: Point3, b: Point3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}
