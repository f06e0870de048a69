//! Brute-force oracles and random instance generators shared by the
//! integration and acceptance tests. Nothing here calls the code under test
//! except constructors and accessors.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use synpart::extract::EdgeEvidence;
use synpart::{
    Label, OffsetSet, Point3, PointAnnotationSet, SegmentationVolume, SynapticPartnerAnnotation, VolumeGeometry,
    Voxel,
};

pub const RESOLUTIONS: [[f64; 3]; 4] = [[4.0, 4.0, 40.0], [8.0, 8.0, 8.0], [4.0, 4.0, 20.0], [6.0, 6.0, 30.0]];

pub struct Instance {
    pub seg: SegmentationVolume,
    pub annotations: PointAnnotationSet,
    pub offsets: OffsetSet,
}

pub fn all_voxels(g: &VolumeGeometry) -> impl Iterator<Item = Voxel> {
    let [nx, ny, nz] = g.shape();
    (0..nx).flat_map(move |x| (0..ny).flat_map(move |y| (0..nz).map(move |z| [x, y, z])))
}

/// Voxel holding point `p`, rounding half away from zero.
pub fn oracle_voxel(p: Point3, g: &VolumeGeometry) -> Voxel {
    let (o, r) = (g.origin(), g.resolution());
    [0, 1, 2].map(|a| ((p[a] - o[a]) / r[a]).round() as usize)
}

pub fn oracle_distance(a: Voxel, b: Voxel, g: &VolumeGeometry) -> f64 {
    let r = g.resolution();
    (0..3)
        .map(|i| {
            let d = (a[i] as f64 - b[i] as f64) * r[i];
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Membership in the synaptic region of `p`, by definition.
pub fn in_region(v: Voxel, p: Point3, r_syn: f64, seg: &SegmentationVolume) -> bool {
    let g = seg.geometry();
    let c = oracle_voxel(p, g);
    let l = seg.label(c);
    l != 0 && seg.label(v) == l && oracle_distance(v, c, g) <= r_syn
}

fn shifted(v: Voxel, d: [i64; 3], g: &VolumeGeometry) -> Option<Voxel> {
    let s = g.shape();
    let mut out = [0usize; 3];
    for a in 0..3 {
        let w = v[a] as i64 + d[a];
        if w < 0 || w >= s[a] as i64 {
            return None;
        }
        out[a] = w as usize;
    }
    Some(out)
}

/// `labels[k][x][y][z]` by looping over every voxel, offset and annotation.
pub fn oracle_encode(annotations: &PointAnnotationSet, o: &OffsetSet, seg: &SegmentationVolume) -> Vec<Vec<u8>> {
    let g = seg.geometry();
    let r = o.r_syn_nm();
    let mut out = vec![vec![0u8; g.num_voxels()]; o.len()];
    for (k, &d) in o.offsets_vox().iter().enumerate() {
        for (n, v) in all_voxels(g).enumerate() {
            let Some(w) = shifted(v, d, g) else { continue };
            if annotations
                .iter()
                .any(|a| in_region(v, a.pre_location, r, seg) && in_region(w, a.post_location, r, seg))
            {
                out[k][n] = 1;
            }
        }
    }
    out
}

fn region_voxels(p: Point3, r: f64, seg: &SegmentationVolume) -> Vec<Voxel> {
    all_voxels(seg.geometry()).filter(|&v| in_region(v, p, r, seg)).collect()
}

/// Coverage by pairing every pre-region voxel with every post-region voxel.
pub fn oracle_is_covered(a: &SynapticPartnerAnnotation, o: &OffsetSet, seg: &SegmentationVolume) -> bool {
    let r = o.r_syn_nm();
    let pre = region_voxels(a.pre_location, r, seg);
    let post = region_voxels(a.post_location, r, seg);
    let wanted: HashSet<[i64; 3]> = o.offsets_vox().iter().copied().collect();
    pre.iter().any(|u| {
        post.iter().any(|w| wanted.contains(&[0, 1, 2].map(|i| w[i] as i64 - u[i] as i64)))
    })
}

/// Components by repeatedly merging any two groups with an adjacent pair.
pub fn oracle_components(voxels: &[Voxel], six: bool) -> BTreeSet<BTreeSet<Voxel>> {
    let adjacent = |a: Voxel, b: Voxel| {
        let d: Vec<i64> = (0..3).map(|i| (a[i] as i64 - b[i] as i64).abs()).collect();
        if six {
            d.iter().sum::<i64>() == 1
        } else {
            d.iter().all(|&x| x <= 1) && d.iter().any(|&x| x > 0)
        }
    };
    let unique: BTreeSet<Voxel> = voxels.iter().copied().collect();
    let mut groups: Vec<Vec<Voxel>> = unique.into_iter().map(|v| vec![v]).collect();
    loop {
        let mut merged = false;
        'outer: for i in 0..groups.len() {
            for j in i + 1..groups.len() {
                if groups[i].iter().any(|&a| groups[j].iter().any(|&b| adjacent(a, b))) {
                    let g = groups.remove(j);
                    groups[i].extend(g);
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            break;
        }
    }
    groups.into_iter().map(|g| g.into_iter().collect()).collect()
}

/// Best `(matched, cost)` over every partial injection of rows into columns:
/// most matches first, then lowest cost.
pub fn oracle_assignment(cost: &[Vec<Option<f64>>]) -> (usize, f64) {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    let mut used = vec![false; cols];
    let mut best = (0usize, 0.0f64);
    fn go(
        i: usize,
        cost: &[Vec<Option<f64>>],
        used: &mut [bool],
        count: usize,
        total: f64,
        best: &mut (usize, f64),
    ) {
        if i == cost.len() {
            if count > best.0 || (count == best.0 && total < best.1) {
                *best = (count, total);
            }
            return;
        }
        go(i + 1, cost, used, count, total, best);
        for j in 0..used.len() {
            if let (false, Some(c)) = (used[j], cost[i][j]) {
                used[j] = true;
                go(i + 1, cost, used, count + 1, total + c, best);
                used[j] = false;
            }
        }
    }
    if rows > 0 && cols > 0 {
        go(0, cost, &mut used, 0, 0.0, &mut best);
    }
    best
}

/// Nearest-seed labeling; with `background` the first seed's cell becomes label 0.
pub fn random_segmentation(rng: &mut ChaCha8Rng, g: VolumeGeometry, n_seeds: usize, background: bool) -> SegmentationVolume {
    let seeds: Vec<Point3> = (0..n_seeds)
        .map(|_| {
            let s = g.shape();
            let r = g.resolution();
            [0, 1, 2].map(|a| rng.random_range(0.0..(s[a] as f64 * r[a])))
        })
        .collect();
    SegmentationVolume::from_fn(g, |v| {
        let p = g.world(v);
        let mut best = (f64::INFINITY, 0usize);
        for (i, s) in seeds.iter().enumerate() {
            let d: f64 = (0..3).map(|a| (p[a] - s[a]).powi(2)).sum();
            if d < best.0 {
                best = (d, i);
            }
        }
        if background && best.1 == 0 {
            0
        } else {
            best.1 as Label + 1
        }
    })
}

/// Point near the center of voxel `v`, jittered by less than a third of a voxel.
pub fn jittered(rng: &mut ChaCha8Rng, v: Voxel, g: &VolumeGeometry) -> Point3 {
    let c = g.world(v);
    let r = g.resolution();
    [0, 1, 2].map(|a| c[a] + rng.random_range(-0.3..0.3) * r[a])
}

pub fn random_offsets(rng: &mut ChaCha8Rng, resolution: [f64; 3], r_syn: f64, max_n: usize) -> OffsetSet {
    let n = rng.random_range(1..=max_n);
    let mut seen = BTreeSet::new();
    let mut nm = Vec::new();
    while nm.len() < n {
        let d = [rng.random_range(-12i64..=12), rng.random_range(-12i64..=12), rng.random_range(-2i64..=2)];
        if d == [0, 0, 0] || !seen.insert(d) {
            continue;
        }
        nm.push([0, 1, 2].map(|a| d[a] as f64 * resolution[a]));
    }
    OffsetSet::new(nm, r_syn, resolution).unwrap()
}

/// Volumes up to 48x48x8 with at most 5 annotations on labeled voxels.
pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let shape = [rng.random_range(8..=48), rng.random_range(8..=48), rng.random_range(2..=8)];
    let resolution = *RESOLUTIONS.choose(rng).unwrap();
    let g = VolumeGeometry::with_shape(shape, resolution).unwrap();
    let n_seeds = rng.random_range(2..=6);
    let background = rng.random_bool(0.3);
    let seg = random_segmentation(rng, g, n_seeds, background);
    let labeled: Vec<Voxel> = all_voxels(&g).filter(|&v| seg.label(v) != 0).collect();
    let n_ann = rng.random_range(0..=5);
    let mut anns = Vec::new();
    let mut used = BTreeSet::new();
    while anns.len() < n_ann && labeled.len() >= 2 {
        let a = *labeled.choose(rng).unwrap();
        let b = *labeled.choose(rng).unwrap();
        if a == b || !used.insert((a, b)) {
            continue;
        }
        anns.push(SynapticPartnerAnnotation::new(3 * anns.len() as u64 + 7, jittered(rng, a, &g), jittered(rng, b, &g)));
    }
    let annotations = PointAnnotationSet::new(anns, g).unwrap();
    let r_syn = *[0.0, 20.0, 50.0, 100.0].choose(rng).unwrap();
    let offsets = random_offsets(rng, resolution, r_syn, 8);
    Instance { seg, annotations, offsets }
}

/// Sparse target set with clustered voxels, and edges pointing at it.
pub fn random_target_edges(rng: &mut ChaCha8Rng) -> (VolumeGeometry, Vec<EdgeEvidence>) {
    let shape = [rng.random_range(4..=16), rng.random_range(4..=16), rng.random_range(2..=6)];
    let g = VolumeGeometry::with_shape(shape, [4.0, 4.0, 40.0]).unwrap();
    let n = rng.random_range(1..=40);
    let mut targets = Vec::new();
    let mut cur = [0, 1, 2].map(|a| rng.random_range(0..shape[a]));
    for _ in 0..n {
        if rng.random_bool(0.25) {
            cur = [0, 1, 2].map(|a| rng.random_range(0..shape[a]));
        } else {
            for a in 0..3 {
                let step = rng.random_range(-1i64..=1) + if rng.random_bool(0.1) { 1 } else { 0 };
                cur[a] = (cur[a] as i64 + step).clamp(0, shape[a] as i64 - 1) as usize;
            }
        }
        targets.push(cur);
    }
    let nv = g.num_voxels();
    let edges = targets
        .iter()
        .enumerate()
        .map(|(k, &t)| EdgeEvidence {
            source: rng.random_range(0..nv),
            offset: k % 5,
            target: g.linear(t),
            score: rng.random_range(0.5f32..1.0),
        })
        .collect();
    (g, edges)
}

/// Cost matrix with roughly `forbid` of the entries forbidden.
pub fn random_cost_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, forbid: f64) -> Vec<Vec<Option<f64>>> {
    (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| {
                    if rng.random_bool(forbid) {
                        None
                    } else if rng.random_bool(0.3) {
                        Some(rng.random_range(0..5) as f64)
                    } else {
                        // Multiples of 1/8 keep every sum exact.
                        Some(rng.random_range(0..800) as f64 / 8.0)
                    }
                })
                .collect()
        })
        .collect()
}
