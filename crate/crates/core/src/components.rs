//! Connected components of sparse voxel sets.

use std::str::FromStr;

use crate::error::Error;
use crate::geometry::{VolumeGeometry, VoxelOffset};

/// Voxel neighborhood used for component analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    /// Face neighbors.
    Six,
    /// Face, edge and corner neighbors.
    #[default]
    TwentySix,
}

impl Connectivity {
    pub fn neighbors(self) -> Vec<VoxelOffset> {
        let mut out = Vec::new();
        for dx in -1i64..=1 {
            for dy in -1i64..=1 {
                for dz in -1i64..=1 {
                    let n = dx.abs() + dy.abs() + dz.abs();
                    let keep = match self {
                        Connectivity::Six => n == 1,
                        Connectivity::TwentySix => n > 0,
                    };
                    if keep {
                        out.push([dx, dy, dz]);
                    }
                }
            }
        }
        out
    }

    pub fn as_number(self) -> u8 {
        match self {
            Connectivity::Six => 6,
            Connectivity::TwentySix => 26,
        }
    }
}

impl FromStr for Connectivity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "6" => Ok(Connectivity::Six),
            "26" => Ok(Connectivity::TwentySix),
            other => Err(Error::Parameter(format!("connectivity must be 6 or 26, got `{other}`"))),
        }
    }
}

impl std::fmt::Display for Connectivity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.as_number())
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins so roots are the first member in sorted order
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Partitions a set of linear voxel indices into connected components.
///
/// Input order and duplicates do not matter. Each component is sorted, and
/// components are ordered by their smallest linear index.
pub fn connected_components(voxels: &[usize], g: &VolumeGeometry, conn: Connectivity) -> Vec<Vec<usize>> {
    let mut set: Vec<usize> = voxels.to_vec();
    set.sort_unstable();
    set.dedup();
    let mut ds = DisjointSet::new(set.len());
    let neighbors = conn.neighbors();
    for (i, &idx) in set.iter().enumerate() {
        let v = g.unlinear(idx);
        for &d in &neighbors {
            if let Some(w) = g.offset(v, d) {
                let wi = g.linear(w);
                if wi > idx {
                    if let Ok(j) = set.binary_search(&wi) {
                        ds.union(i, j);
                    }
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; set.len()];
    for (i, &v) in set.iter().enumerate() {
        let root = ds.find(i);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(v);
    }
    groups
}
