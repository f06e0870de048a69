//! Simulated classifier output: binary edge labels perturbed with seeded noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::components::{connected_components, Connectivity};
use crate::encode::EdgeScoreVolume;
use crate::error::{Error, Result};

/// Perturbations applied by [`labels_to_oracle_scores`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Standard deviation of additive zero-mean Gaussian noise.
    pub gaussian_sigma: f64,
    /// Per-voxel probability of seeding a spurious positive blob.
    pub false_blob_rate: f64,
    /// Probability of erasing each connected positive region.
    pub drop_synapse_prob: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none(seed: u64) -> Self {
        Self { gaussian_sigma: 0.0, false_blob_rate: 0.0, drop_synapse_prob: 0.0, seed }
    }

    pub fn gaussian(sigma: f64, seed: u64) -> Self {
        Self { gaussian_sigma: sigma, ..Self::none(seed) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gaussian_sigma >= 0.0 && self.gaussian_sigma.is_finite()) {
            return Err(Error::Parameter(format!("sigma must be >= 0, got {}", self.gaussian_sigma)));
        }
        for (name, v) in [("false blob rate", self.false_blob_rate), ("drop probability", self.drop_synapse_prob)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Parameter(format!("{name} must be in [0,1], got {v}")));
            }
        }
        Ok(())
    }
}

const DROP_STREAM: u64 = 0;
const BLOB_STREAM: u64 = 1;
const GAUSS_STREAM_BASE: u64 = 2;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Turns binary labels into pseudo-predictions.
///
/// In order: connected positive regions (26-connected over the union of
/// channels) are erased with `drop_synapse_prob`; each voxel seeds with
/// `false_blob_rate` a 3x3x1 block of ones in a random channel; Gaussian
/// noise is added and the result clamped to `[0, 1]`. Every stage draws
/// from its own seeded stream, and the Gaussian stage uses one stream per
/// `(channel, x)` slab, so the output does not depend on thread count.
pub fn labels_to_oracle_scores(labels: &EdgeScoreVolume, noise: &NoiseSpec) -> Result<EdgeScoreVolume> {
    noise.validate()?;
    if !labels.is_binary() {
        return Err(Error::Parameter("oracle scores require a binary label volume".into()));
    }
    let g = *labels.geometry();
    let n = g.num_voxels();
    let channels = labels.num_channels();
    let mut out = labels.clone();

    if noise.drop_synapse_prob > 0.0 {
        let mut positive: Vec<usize> = Vec::new();
        for k in 0..channels {
            positive.extend(
                labels.channel_slice(k).iter().enumerate().filter(|(_, &s)| s > 0.0).map(|(i, _)| i),
            );
        }
        let comps = connected_components(&positive, &g, Connectivity::TwentySix);
        let mut r = rng(noise.seed, DROP_STREAM);
        let data = out.as_mut_slice();
        for comp in comps {
            if r.random::<f64>() < noise.drop_synapse_prob {
                for idx in comp {
                    for k in 0..channels {
                        data[k * n + idx] = 0.0;
                    }
                }
            }
        }
    }

    if noise.false_blob_rate > 0.0 {
        let mut r = rng(noise.seed, BLOB_STREAM);
        let data = out.as_mut_slice();
        for idx in 0..n {
            if r.random::<f64>() < noise.false_blob_rate {
                let k = r.random_range(0..channels);
                let v = g.unlinear(idx);
                for dx in -1..=1 {
                    for dy in -1..=1 {
                        if let Some(w) = g.offset(v, [dx, dy, 0]) {
                            data[k * n + g.linear(w)] = 1.0;
                        }
                    }
                }
            }
        }
    }

    if noise.gaussian_sigma > 0.0 {
        let normal = Normal::new(0.0, noise.gaussian_sigma).map_err(|e| Error::Parameter(e.to_string()))?;
        let [_, ny, nz] = g.shape();
        let slab = ny * nz;
        out.as_mut_slice().par_chunks_mut(slab).enumerate().for_each(|(c, chunk)| {
            let mut r = rng(noise.seed, GAUSS_STREAM_BASE + c as u64);
            for s in chunk.iter_mut() {
                let v = *s as f64 + normal.sample(&mut r);
                *s = v.clamp(0.0, 1.0) as f32;
            }
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{PointAnnotationSet, SynapticPartnerAnnotation};
    use crate::encode::encode_labels;
    use crate::geometry::VolumeGeometry;
    use crate::offsets::paper_offset_set;
    use crate::volume::SegmentationVolume;

    fn labels() -> EdgeScoreVolume {
        let g = VolumeGeometry::with_shape([80, 40, 6], VolumeGeometry::CREMI_RESOLUTION).unwrap();
        let seg = SegmentationVolume::from_fn(g, |v| if v[0] < 40 { 1 } else { 2 });
        let a = SynapticPartnerAnnotation::new(1, g.world([30, 20, 3]), g.world([55, 20, 3]));
        let set = PointAnnotationSet::new(vec![a], g).unwrap();
        encode_labels(&set, &paper_offset_set(&g).unwrap(), &seg).unwrap()
    }

    #[test]
    fn zero_noise_is_identity() {
        let l = labels();
        assert!(l.count_positive() > 0);
        assert_eq!(labels_to_oracle_scores(&l, &NoiseSpec::none(3)).unwrap(), l);
    }

    #[test]
    fn full_drop_clears_everything() {
        let l = labels();
        let spec = NoiseSpec { drop_synapse_prob: 1.0, ..NoiseSpec::none(3) };
        assert_eq!(labels_to_oracle_scores(&l, &spec).unwrap().count_positive(), 0);
    }

    #[test]
    fn same_seed_same_output() {
        let l = labels();
        let spec = NoiseSpec { gaussian_sigma: 0.2, false_blob_rate: 0.001, drop_synapse_prob: 0.5, seed: 11 };
        let a = labels_to_oracle_scores(&l, &spec).unwrap();
        let b = labels_to_oracle_scores(&l, &spec).unwrap();
        assert_eq!(a, b);
        let c = labels_to_oracle_scores(&l, &NoiseSpec { seed: 12, ..spec }).unwrap();
        assert_ne!(a, c);
        assert!(a.scores().iter().all(|s| (0.0..=1.0).contains(s)));
    }

    #[test]
    fn thread_count_does_not_matter() {
        let l = labels();
        let spec = NoiseSpec::gaussian(0.1, 5);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| labels_to_oracle_scores(&l, &spec).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn rejects_non_binary_and_bad_rates() {
        let l = labels();
        let noisy = labels_to_oracle_scores(&l, &NoiseSpec::gaussian(0.3, 1)).unwrap();
        assert!(labels_to_oracle_scores(&noisy, &NoiseSpec::none(1)).is_err());
        assert!(labels_to_oracle_scores(&l, &NoiseSpec { drop_synapse_prob: 1.5, ..NoiseSpec::none(1) }).is_err());
        assert!(labels_to_oracle_scores(&l, &NoiseSpec::gaussian(-1.0, 1)).is_err());
    }
}
