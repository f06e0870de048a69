//! Directed long-range edge offsets.
//!
//! Each voxel owns one candidate edge per offset `r`; the edge points from the
//! voxel to the voxel displaced by `r`. Offsets are given in nm and converted
//! to voxel displacements with the grid resolution.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{Point3, VolumeGeometry, VoxelOffset};

/// Radius of the synaptic regions used with [`paper_offset_set`].
pub const DEFAULT_R_SYN_NM: f64 = 100.0;

/// The candidate edge offsets (nm and voxel) plus the synaptic region radius.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetSet {
    offsets_nm: Vec<Point3>,
    offsets_vox: Vec<VoxelOffset>,
    r_syn_nm: f64,
    resolution: [f64; 3],
}

/// `round(nm / resolution)` per axis, half away from zero.
pub fn nm_to_voxel_offset(r: Point3, resolution: [f64; 3]) -> VoxelOffset {
    [0, 1, 2].map(|a| (r[a] / resolution[a]).round() as i64)
}

impl OffsetSet {
    pub fn new(offsets_nm: Vec<Point3>, r_syn_nm: f64, resolution: [f64; 3]) -> Result<Self> {
        if !(r_syn_nm >= 0.0 && r_syn_nm.is_finite()) {
            return Err(Error::OffsetConfig(format!("r_syn must be a finite value >= 0, got {r_syn_nm}")));
        }
        if resolution.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::OffsetConfig(format!("invalid resolution {resolution:?}")));
        }
        if offsets_nm.is_empty() {
            return Err(Error::OffsetConfig("offset set is empty".into()));
        }
        let mut seen_vox = HashSet::new();
        let mut offsets_vox = Vec::with_capacity(offsets_nm.len());
        for (i, r) in offsets_nm.iter().enumerate() {
            if r.iter().any(|c| !c.is_finite()) {
                return Err(Error::OffsetConfig(format!("offset {i} is not finite: {r:?}")));
            }
            if offsets_nm[..i].contains(r) {
                return Err(Error::OffsetConfig(format!("duplicate offset {r:?} nm")));
            }
            let v = nm_to_voxel_offset(*r, resolution);
            if v == [0, 0, 0] {
                return Err(Error::OffsetConfig(format!(
                    "offset {r:?} nm rounds to the zero voxel vector at resolution {resolution:?}"
                )));
            }
            if !seen_vox.insert(v) {
                return Err(Error::OffsetConfig(format!(
                    "offset {r:?} nm maps to voxel offset {v:?} which is already present"
                )));
            }
            offsets_vox.push(v);
        }
        Ok(Self { offsets_nm, offsets_vox, r_syn_nm, resolution })
    }

    pub fn offsets_nm(&self) -> &[Point3] {
        &self.offsets_nm
    }

    pub fn offsets_vox(&self) -> &[VoxelOffset] {
        &self.offsets_vox
    }

    pub fn r_syn_nm(&self) -> f64 {
        self.r_syn_nm
    }

    pub fn resolution(&self) -> [f64; 3] {
        self.resolution
    }

    /// Number of edges per voxel.
    pub fn len(&self) -> usize {
        self.offsets_nm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets_nm.is_empty()
    }

    /// Euclidean lengths of the nm offsets.
    pub fn lengths_nm(&self) -> Vec<f64> {
        self.offsets_nm.iter().map(|r| norm(*r)).collect()
    }

    pub fn total_length_nm(&self) -> f64 {
        self.lengths_nm().iter().sum()
    }

    pub fn max_length_nm(&self) -> f64 {
        self.lengths_nm().into_iter().fold(0.0, f64::max)
    }

    pub fn with_r_syn(&self, r_syn_nm: f64) -> Result<Self> {
        Self::new(self.offsets_nm.clone(), r_syn_nm, self.resolution)
    }

    pub fn check_resolution(&self, g: &VolumeGeometry) -> Result<()> {
        if self.resolution != g.resolution() {
            return Err(Error::GeometryMismatch(format!(
                "offsets were built for resolution {:?}, volume has {:?}",
                self.resolution,
                g.resolution()
            )));
        }
        Ok(())
    }

    /// Plain-text form: `r_syn_nm=` and `resolution=` headers, then one `x y z` line per offset.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        writeln!(s, "r_syn_nm={}", self.r_syn_nm).unwrap();
        let [rx, ry, rz] = self.resolution;
        writeln!(s, "resolution={rx},{ry},{rz}").unwrap();
        for r in &self.offsets_nm {
            writeln!(s, "{} {} {}", r[0], r[1], r[2]).unwrap();
        }
        s
    }

    /// Parses [`OffsetSet::to_config_string`] output. `#` lines are comments.
    pub fn parse_config(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: String| Error::OffsetConfig(format!("line {line}: {msg}"));
        let mut r_syn = None;
        let mut resolution = None;
        let mut offsets = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some((key, value)) = line.split_once('=') {
                match key.trim() {
                    "r_syn_nm" => {
                        r_syn = Some(value.trim().parse::<f64>().map_err(|e| bad(i + 1, e.to_string()))?)
                    }
                    "resolution" => {
                        let parts = parse_floats(value, ',').map_err(|e| bad(i + 1, e))?;
                        resolution = Some(to_triple(&parts).map_err(|e| bad(i + 1, e))?);
                    }
                    other => return Err(bad(i + 1, format!("unknown header `{other}`"))),
                }
                continue;
            }
            let parts = parse_floats(line, ' ').map_err(|e| bad(i + 1, e))?;
            offsets.push(to_triple(&parts).map_err(|e| bad(i + 1, e))?);
        }
        let r_syn = r_syn.ok_or_else(|| Error::OffsetConfig("missing r_syn_nm header".into()))?;
        let resolution = resolution.ok_or_else(|| Error::OffsetConfig("missing resolution header".into()))?;
        Self::new(offsets, r_syn, resolution)
    }
}

fn parse_floats(s: &str, sep: char) -> std::result::Result<Vec<f64>, String> {
    s.split(sep)
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect()
}

fn to_triple(v: &[f64]) -> std::result::Result<[f64; 3], String> {
    <[f64; 3]>::try_from(v).map_err(|_| format!("expected 3 values, got {}", v.len()))
}

pub(crate) fn norm(r: Point3) -> f64 {
    (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt()
}

/// `(+a, -a)` along one axis.
pub(crate) fn axis_pair(axis: usize, length: f64) -> [Point3; 2] {
    let mut plus = [0.0; 3];
    plus[axis] = length;
    let mut minus = [0.0; 3];
    minus[axis] = -length;
    [plus, minus]
}

/// All 8 sign variants of `(x, y, z)`, x sign slowest, `+` before `-`.
pub(crate) fn sign_orbit(p: Point3) -> [Point3; 8] {
    let mut out = [[0.0; 3]; 8];
    let mut i = 0;
    for sx in [1.0, -1.0] {
        for sy in [1.0, -1.0] {
            for sz in [1.0, -1.0] {
                out[i] = [sx * p[0], sy * p[1], sz * p[2]];
                i += 1;
            }
        }
    }
    out
}

/// The 14 offsets found for CREMI: `(0,0,±80)`, `(±120,0,0)`, `(0,±120,0)`,
/// `(±40,±60,±40)` nm, with a 100 nm synaptic radius.
pub fn paper_offset_set(g: &VolumeGeometry) -> Result<OffsetSet> {
    let mut offsets = Vec::with_capacity(14);
    offsets.extend(axis_pair(2, 80.0));
    offsets.extend(axis_pair(0, 120.0));
    offsets.extend(axis_pair(1, 120.0));
    offsets.extend(sign_orbit([40.0, 60.0, 40.0]));
    OffsetSet::new(offsets, DEFAULT_R_SYN_NM, g.resolution())
}
