mod support;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use synpart::extract::{split_components, threshold_edges};
use synpart::noise::labels_to_oracle_scores;
use synpart::{
    build_matrix, diff_matrix, encode_labels, evaluate, extract, Connectivity, EvalReport, ExtractionParams,
    MatchingConstraint, NoiseSpec, OffsetSet, PartnerPair, PointAnnotationSet, SegmentationVolume,
    SynapticPartnerAnnotation,
};
use support::*;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 32, ..ProptestConfig::default() }
}

/// Ground truth on labeled voxels and predictions perturbed around it.
fn pairs(rng: &mut ChaCha8Rng, seg: &SegmentationVolume) -> (Vec<PartnerPair>, Vec<PartnerPair>) {
    let g = seg.geometry();
    let labeled: Vec<[usize; 3]> = all_voxels(g).filter(|&v| seg.label(v) != 0).collect();
    let pick = |rng: &mut ChaCha8Rng| {
        let v = *labeled.choose(rng).unwrap();
        jittered(rng, v, g)
    };
    let n_gt = rng.random_range(0..8);
    let gt: Vec<PartnerPair> =
        (0..n_gt).map(|i| PartnerPair { id: i as u64, pre: pick(rng), post: pick(rng) }).collect();
    let mut pred = Vec::new();
    for t in &gt {
        if rng.random_bool(0.7) {
            let shake = |rng: &mut ChaCha8Rng, p: [f64; 3]| p.map(|c| c + rng.random_range(-150.0..150.0));
            pred.push(PartnerPair { id: pred.len() as u64 + 100, pre: shake(rng, t.pre), post: shake(rng, t.post) });
        }
    }
    for _ in 0..rng.random_range(0..4) {
        pred.push(PartnerPair { id: pred.len() as u64 + 100, pre: pick(rng), post: pick(rng) });
    }
    (pred, gt)
}

fn counts(r: &EvalReport) -> (usize, usize, usize) {
    (r.tp, r.fp, r.fn_)
}

fn mirror_x(inst: &Instance) -> (SegmentationVolume, PointAnnotationSet, OffsetSet) {
    let g = *inst.seg.geometry();
    let nx = g.shape()[0];
    let flip = |v: [usize; 3]| [nx - 1 - v[0], v[1], v[2]];
    let seg = SegmentationVolume::from_fn(g, |v| inst.seg.label(flip(v)));
    let to_lattice = |p| g.world(flip(oracle_voxel(p, &g)));
    let anns = inst
        .annotations
        .iter()
        .map(|a| SynapticPartnerAnnotation::new(a.id, to_lattice(a.pre_location), to_lattice(a.post_location)))
        .collect();
    let offsets: Vec<[f64; 3]> = inst.offsets.offsets_nm().iter().map(|r| [-r[0], r[1], r[2]]).collect();
    (
        seg,
        PointAnnotationSet::new(anns, g).unwrap(),
        OffsetSet::new(offsets, inst.offsets.r_syn_nm(), inst.offsets.resolution()).unwrap(),
    )
}

fn on_lattice(inst: &Instance) -> PointAnnotationSet {
    let g = *inst.seg.geometry();
    let anns = inst
        .annotations
        .iter()
        .map(|a| {
            SynapticPartnerAnnotation::new(
                a.id,
                g.world(oracle_voxel(a.pre_location, &g)),
                g.world(oracle_voxel(a.post_location, &g)),
            )
        })
        .collect();
    PointAnnotationSet::new(anns, g).unwrap()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn mirrored_volume_gives_mirrored_labels(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng);
        let g = *inst.seg.geometry();
        let nx = g.shape()[0];
        let labels = encode_labels(&on_lattice(&inst), &inst.offsets, &inst.seg).unwrap();
        let (seg_m, anns_m, off_m) = mirror_x(&inst);
        let mirrored = encode_labels(&anns_m, &off_m, &seg_m).unwrap();
        for k in 0..inst.offsets.len() {
            for v in all_voxels(&g) {
                let w = [nx - 1 - v[0], v[1], v[2]];
                prop_assert_eq!(labels.score(k, g.linear(v)), mirrored.score(k, g.linear(w)));
            }
        }
    }

    #[test]
    fn swapping_endpoints_reverses_edges(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng);
        let g = *inst.seg.geometry();
        let swapped = PointAnnotationSet::new(
            inst.annotations.iter().map(|a| SynapticPartnerAnnotation::new(a.id, a.post_location, a.pre_location)).collect(),
            g,
        ).unwrap();
        let neg: Vec<[f64; 3]> = inst.offsets.offsets_nm().iter().map(|r| r.map(|c| -c)).collect();
        let neg = OffsetSet::new(neg, inst.offsets.r_syn_nm(), inst.offsets.resolution()).unwrap();
        let fwd = encode_labels(&inst.annotations, &inst.offsets, &inst.seg).unwrap();
        let back = encode_labels(&swapped, &neg, &inst.seg).unwrap();
        prop_assert_eq!(fwd.count_positive(), back.count_positive());
        for (k, &d) in inst.offsets.offsets_vox().iter().enumerate() {
            for v in all_voxels(&g) {
                if let Some(w) = g.offset(v, d) {
                    prop_assert_eq!(fwd.score(k, g.linear(v)), back.score(k, g.linear(w)));
                }
            }
        }
    }

    #[test]
    fn evaluation_is_symmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng);
        let (pred, gt) = pairs(&mut rng, &inst.seg);
        let c = MatchingConstraint::new(rng.random_range(0.0..400.0)).unwrap();
        let ab = evaluate(&pred, &gt, &inst.seg, &c);
        let ba = evaluate(&gt, &pred, &inst.seg, &c);
        prop_assert_eq!(counts(&ab), (ba.tp, ba.fn_, ba.fp));
        prop_assert_eq!(ab.fscore, ba.fscore);
    }

    #[test]
    fn evaluation_ignores_ordering(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng);
        let (mut pred, mut gt) = pairs(&mut rng, &inst.seg);
        let c = MatchingConstraint::default();
        let before = evaluate(&pred, &gt, &inst.seg, &c);
        pred.shuffle(&mut rng);
        gt.shuffle(&mut rng);
        let after = evaluate(&pred, &gt, &inst.seg, &c);
        prop_assert_eq!(counts(&before), counts(&after));
        let cost = |r: &EvalReport| r.matches.iter().map(|m| m.cost).sum::<f64>();
        prop_assert!((cost(&before) - cost(&after)).abs() <= 1e-9 * cost(&before).max(1.0));
    }

    #[test]
    fn shrinking_tolerance_never_adds_matches(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng);
        let (pred, gt) = pairs(&mut rng, &inst.seg);
        let d = rng.random_range(0.0..500.0);
        let wide = evaluate(&pred, &gt, &inst.seg, &MatchingConstraint::new(d).unwrap());
        let narrow = evaluate(&pred, &gt, &inst.seg, &MatchingConstraint::new(d * rng.random_range(0.0..1.0)).unwrap());
        prop_assert!(narrow.tp <= wide.tp);
    }

    #[test]
    fn thresholds_are_monotone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng);
        let labels = encode_labels(&inst.annotations, &inst.offsets, &inst.seg).unwrap();
        let scores = labels_to_oracle_scores(&labels, &NoiseSpec::gaussian(0.3, seed)).unwrap();
        let t1 = rng.random_range(0.0..1.0);
        let t1_hi = rng.random_range(t1..=1.0);
        let edges = |t| -> BTreeSet<(usize, usize)> {
            threshold_edges(&scores, &inst.seg, t).unwrap().values().flatten().map(|e| (e.source, e.offset)).collect()
        };
        prop_assert!(edges(t1_hi).is_subset(&edges(t1)));

        let t2 = rng.random_range(0.0..5.0);
        let t2_hi = t2 + rng.random_range(0.0..5.0);
        let key = |c: &synpart::CandidateSynapse| c.edges.iter().map(|e| (e.source, e.offset)).collect::<Vec<_>>();
        let lo: BTreeSet<_> = extract(&scores, &inst.seg, &ExtractionParams::new(t1, t2, Connectivity::TwentySix).unwrap())
            .unwrap().iter().map(key).collect();
        let hi: BTreeSet<_> = extract(&scores, &inst.seg, &ExtractionParams::new(t1, t2_hi, Connectivity::TwentySix).unwrap())
            .unwrap().iter().map(key).collect();
        prop_assert!(hi.is_subset(&lo));
    }

    #[test]
    fn confidence_is_additive(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng);
        let labels = encode_labels(&inst.annotations, &inst.offsets, &inst.seg).unwrap();
        let scores = labels_to_oracle_scores(&labels, &NoiseSpec::gaussian(0.2, seed)).unwrap();
        let g = *inst.seg.geometry();
        for (pair, edges) in threshold_edges(&scores, &inst.seg, 0.4).unwrap() {
            let total: f64 = edges.iter().map(|e| e.score as f64).sum();
            let comps = split_components(pair, &edges, &g, Connectivity::Six);
            let split: f64 = comps.iter().map(|c| c.confidence()).sum();
            prop_assert!((total - split).abs() <= 1e-9 * total.max(1.0));
            for c in &comps {
                let direct: f64 = c.edges.iter().map(|e| scores.score(e.offset, e.source) as f64).sum();
                prop_assert!((c.confidence() - direct).abs() <= 1e-9 * direct.max(1.0));
            }
        }
    }

    #[test]
    fn connectome_follows_relabeling(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng);
        let (pred, gt) = pairs(&mut rng, &inst.seg);
        let ids = inst.seg.segment_ids();
        let mut perm = ids.clone();
        perm.shuffle(&mut rng);
        let map = |l: u64| if l == 0 { 0 } else { perm[ids.iter().position(|&i| i == l).unwrap()] * 10 };
        let relabeled = SegmentationVolume::from_fn(*inst.seg.geometry(), |v| map(inst.seg.label(v)));
        let a = build_matrix(&pred, &inst.seg, None).matrix;
        let b = build_matrix(&pred, &relabeled, None).matrix;
        prop_assert_eq!(a.total(), b.total());
        for (i, j, c) in a.entries() {
            prop_assert_eq!(b.get(map(i), map(j)), c);
        }

        let p = build_matrix(&pred, &inst.seg, None);
        let t = build_matrix(&gt, &inst.seg, None);
        let d = diff_matrix(&p.matrix, &t.matrix);
        let accepted = |n: usize, rejected: usize| (n - rejected) as i64;
        prop_assert_eq!(d.total(), accepted(pred.len(), p.rejects.len()) - accepted(gt.len(), t.rejects.len()));
    }
}
