//! Coverage of annotated partners by an offset set, and the grid search
//! that picks a minimal offset configuration reaching full coverage.

use std::cmp::Reverse;
use std::collections::HashMap;

use rayon::prelude::*;

use crate::annotation::{PointAnnotationSet, SynapticPartnerAnnotation};
use crate::error::{Error, Result};
use crate::geometry::{Point3, VoxelOffset};
use crate::offsets::{axis_pair, nm_to_voxel_offset, sign_orbit, OffsetSet};
use crate::regions::AnnotationRegions;
use crate::volume::SegmentationVolume;

/// Fraction of annotations representable by at least one candidate edge.
///
/// Annotations with an endpoint on background are listed in
/// `background_ids` and excluded from `total`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub covered: usize,
    pub total: usize,
    pub uncovered_ids: Vec<u64>,
    pub background_ids: Vec<u64>,
    pub rate: f64,
}

impl CoverageReport {
    fn from_outcomes(outcomes: &[(u64, Outcome)]) -> Self {
        let mut covered = 0;
        let mut uncovered_ids = Vec::new();
        let mut background_ids = Vec::new();
        for &(id, o) in outcomes {
            match o {
                Outcome::Covered => covered += 1,
                Outcome::Uncovered => uncovered_ids.push(id),
                Outcome::Background => background_ids.push(id),
            }
        }
        let total = covered + uncovered_ids.len();
        let rate = if total == 0 { 1.0 } else { covered as f64 / total as f64 };
        Self { covered, total, uncovered_ids, background_ids, rate }
    }

    /// No coverable annotations; `rate` is 1 by convention.
    pub fn is_vacuous(&self) -> bool {
        self.total == 0
    }

    pub fn is_complete(&self) -> bool {
        self.covered == self.total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Covered,
    Uncovered,
    Background,
}

/// Whether some offset links the pre-region of `a` to its post-region.
///
/// Fails with [`Error::BackgroundEndpoint`] if either endpoint sits on label 0.
pub fn is_covered(a: &SynapticPartnerAnnotation, o: &OffsetSet, seg: &SegmentationVolume) -> Result<bool> {
    o.check_resolution(seg.geometry())?;
    let regions = AnnotationRegions::new(a, o.r_syn_nm(), seg)?;
    Ok(o.offsets_vox().iter().any(|&d| regions.linked_by(d, seg)))
}

fn outcome(a: &SynapticPartnerAnnotation, o: &OffsetSet, seg: &SegmentationVolume) -> Result<Outcome> {
    match is_covered(a, o, seg) {
        Ok(true) => Ok(Outcome::Covered),
        Ok(false) => Ok(Outcome::Uncovered),
        Err(Error::BackgroundEndpoint { .. }) => Ok(Outcome::Background),
        Err(e) => Err(e),
    }
}

pub fn coverage(annotations: &PointAnnotationSet, o: &OffsetSet, seg: &SegmentationVolume) -> Result<CoverageReport> {
    annotations.geometry().ensure_same(seg.geometry(), "annotations vs segmentation")?;
    let outcomes = annotations
        .annotations()
        .par_iter()
        .map(|a| outcome(a, o, seg).map(|x| (a.id, x)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CoverageReport::from_outcomes(&outcomes))
}

/// Structured offset families enumerated by [`grid_search_offsets`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OffsetFamily {
    /// `(0, 0, ±L)`
    AxisZ,
    /// `(±L, 0, 0)`
    AxisX,
    /// `(0, ±L, 0)`
    AxisY,
    /// Sign orbit of `(L/3, L/2, L/3)`.
    Diagonal,
}

impl OffsetFamily {
    pub const ALL: [OffsetFamily; 4] = [Self::AxisZ, Self::AxisX, Self::AxisY, Self::Diagonal];

    pub fn offsets(self, length: f64) -> Vec<Point3> {
        match self {
            Self::AxisX => axis_pair(0, length).to_vec(),
            Self::AxisY => axis_pair(1, length).to_vec(),
            Self::AxisZ => axis_pair(2, length).to_vec(),
            Self::Diagonal => sign_orbit([length / 3.0, length / 2.0, length / 3.0]).to_vec(),
        }
    }
}

/// Outcome of [`grid_search_offsets`]. `report.rate < 1` means no
/// configuration reached full coverage and the best one found is returned.
#[derive(Debug, Clone)]
pub struct GridSearchResult {
    pub offsets: OffsetSet,
    pub report: CoverageReport,
    /// Families in use with their length.
    pub families: Vec<(OffsetFamily, f64)>,
    pub evaluated: usize,
}

struct Config {
    families: Vec<(OffsetFamily, f64)>,
    r_syn: f64,
    offsets: OffsetSet,
}

/// Searches over offset families, family lengths and region radii for the
/// smallest configuration covering every annotation.
///
/// Each family (`±z`, `±x`, `±y` axis pairs and the 8-fold diagonal orbit)
/// is either absent or instantiated at one of `candidate_lengths`. Only
/// configurations whose edge count is in `candidate_counts` are evaluated.
/// Among full-coverage configurations the winner has the fewest edges, then
/// the smallest radius, then the smallest summed offset length.
pub fn grid_search_offsets(
    annotations: &PointAnnotationSet,
    seg: &SegmentationVolume,
    candidate_lengths: &[f64],
    candidate_counts: &[usize],
    candidate_radii: &[f64],
) -> Result<GridSearchResult> {
    if candidate_lengths.is_empty() || candidate_counts.is_empty() || candidate_radii.is_empty() {
        return Err(Error::Parameter("grid search candidate lists must be non-empty".into()));
    }
    if let Some(l) = candidate_lengths.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::Parameter(format!("candidate length {l} must be positive")));
    }
    annotations.geometry().ensure_same(seg.geometry(), "annotations vs segmentation")?;
    let resolution = seg.geometry().resolution();

    let configs = enumerate_configs(candidate_lengths, candidate_counts, candidate_radii, resolution);
    if configs.is_empty() {
        return Err(Error::Parameter(
            "no valid offset configuration matches the candidate counts and lengths".into(),
        ));
    }

    // Per radius, which distinct voxel offsets link each annotation.
    let mut offset_index: HashMap<VoxelOffset, usize> = HashMap::new();
    for c in &configs {
        for &d in c.offsets.offsets_vox() {
            let next = offset_index.len();
            offset_index.entry(d).or_insert(next);
        }
    }
    let mut distinct: Vec<(VoxelOffset, usize)> = offset_index.iter().map(|(d, i)| (*d, *i)).collect();
    distinct.sort_by_key(|&(_, i)| i);

    let mut radii: Vec<f64> = candidate_radii.to_vec();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let mut hits: HashMap<u64, HitTable> = HashMap::new();
    for &r in &radii {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::Parameter(format!("candidate radius {r} must be >= 0")));
        }
        let rows = annotations
            .annotations()
            .par_iter()
            .map(|a| match AnnotationRegions::new(a, r, seg) {
                Ok(regions) => Ok((a.id, Some(distinct.iter().map(|&(d, _)| regions.linked_by(d, seg)).collect()))),
                Err(Error::BackgroundEndpoint { .. }) => Ok((a.id, None)),
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<(u64, Option<Vec<bool>>)>>>()?;
        hits.insert(r.to_bits(), rows);
    }

    let scored: Vec<(usize, CoverageReport)> = configs
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let table = &hits[&c.r_syn.to_bits()];
            let cols: Vec<usize> = c.offsets.offsets_vox().iter().map(|d| offset_index[d]).collect();
            let outcomes: Vec<(u64, Outcome)> = table
                .iter()
                .map(|(id, row)| {
                    let o = match row {
                        None => Outcome::Background,
                        Some(row) if cols.iter().any(|&j| row[j]) => Outcome::Covered,
                        Some(_) => Outcome::Uncovered,
                    };
                    (*id, o)
                })
                .collect();
            (i, CoverageReport::from_outcomes(&outcomes))
        })
        .collect();

    let key = |(i, report): &(usize, CoverageReport)| {
        let c = &configs[*i];
        (Reverse(report.covered), c.offsets.len(), c.r_syn, c.offsets.total_length_nm(), *i)
    };
    let best = scored
        .iter()
        .min_by(|a, b| {
            let (ka, kb) = (key(a), key(b));
            ka.0.cmp(&kb.0)
                .then(ka.1.cmp(&kb.1))
                .then(ka.2.total_cmp(&kb.2))
                .then(ka.3.total_cmp(&kb.3))
                .then(ka.4.cmp(&kb.4))
        })
        .expect("configs is non-empty");
    let evaluated = configs.len();
    let (i, report) = best.clone();
    let config = configs.into_iter().nth(i).expect("index from enumeration");
    Ok(GridSearchResult { offsets: config.offsets, report, families: config.families, evaluated })
}

type HitTable = Vec<(u64, Option<Vec<bool>>)>;

fn enumerate_configs(lengths: &[f64], counts: &[usize], radii: &[f64], resolution: [f64; 3]) -> Vec<Config> {
    let mut lengths = lengths.to_vec();
    lengths.sort_by(f64::total_cmp);
    lengths.dedup();
    let mut radii = radii.to_vec();
    radii.sort_by(f64::total_cmp);
    radii.dedup();

    // each family: index 0 = absent, i = lengths[i-1]
    let choices = lengths.len() + 1;
    let mut out = Vec::new();
    for &r_syn in &radii {
        for code in 0..choices.pow(4) {
            let mut rest = code;
            let mut families = Vec::new();
            for family in OffsetFamily::ALL {
                let pick = rest % choices;
                rest /= choices;
                if pick > 0 {
                    families.push((family, lengths[pick - 1]));
                }
            }
            let n_e: usize = families.iter().map(|(f, _)| if *f == OffsetFamily::Diagonal { 8 } else { 2 }).sum();
            if n_e == 0 || !counts.contains(&n_e) {
                continue;
            }
            let offsets: Vec<Point3> = families.iter().flat_map(|&(f, l)| f.offsets(l)).collect();
            if offsets.iter().any(|&r| nm_to_voxel_offset(r, resolution) == [0, 0, 0]) {
                continue;
            }
            if let Ok(offsets) = OffsetSet::new(offsets, r_syn, resolution) {
                out.push(Config { families, r_syn, offsets });
            }
        }
    }
    out
}
