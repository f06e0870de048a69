use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;
use serde_json::Value;

use synpart::eval::ToleranceMode;
use synpart::io::{self, EdgeDataset, PartnerRecord};
use synpart::{
    Connectivity, ConnectivityMatrix, ExtractionParams, MatchingConstraint, NoiseSpec, OffsetSet, PartnerPair,
    PointAnnotationSet, SynapticPartnerAnnotation, SynthSpec, VolumeGeometry,
};

use crate::failure::{require_inputs, Failure};
use crate::{
    CoverageSearchArgs, ConnmatrixArgs, EvaluateArgs, ExtractArgs, GenLabelsArgs, NoiseArgs, RoundtripArgs,
    SimulateScoresArgs, SynthArgs, SynthGenArgs, ToleranceModeArg, VERSION,
};

type Params = Vec<(String, String)>;

fn params(command: &str) -> Params {
    vec![
        ("tool".into(), format!("synpart {VERSION}")),
        ("format_version".into(), synpart::FORMAT_VERSION.into()),
        ("command".into(), command.into()),
    ]
}

fn push(p: &mut Params, key: &str, value: impl ToString) {
    p.push((key.into(), value.to_string()));
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

/// Provenance as stored in HDF5 attributes.
fn attr_text(p: &Params) -> String {
    p.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

fn json_params(p: &Params) -> Value {
    Value::Object(p.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect())
}

fn is_container(p: &Path) -> bool {
    matches!(
        p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("h5" | "hdf5" | "hdf")
    )
}

fn load_offsets(path: Option<&Path>, g: &VolumeGeometry) -> Result<OffsetSet, Failure> {
    let o = match path {
        Some(p) => OffsetSet::parse_config(&io::read_text(p)?)
            .map_err(|e| Failure::validation(format!("{}: {e}", p.display())))?,
        None => synpart::paper_offset_set(g)?,
    };
    o.check_resolution(g)?;
    Ok(o)
}

fn load_annotation_file(path: &Path, g: VolumeGeometry) -> Result<PointAnnotationSet, Failure> {
    if is_container(path) {
        Ok(io::load_annotations(path, g)?)
    } else {
        Ok(io::parse_annotations_text(&io::read_text(path)?, g, path)?)
    }
}

fn first_data_line_fields(text: &str) -> Option<usize> {
    text.lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split('\t').count())
}

/// Partner pairs from a partner table, an annotation text file or a container.
fn load_pairs(path: &Path, g: VolumeGeometry) -> Result<Vec<PartnerPair>, Failure> {
    if is_container(path) {
        let set = io::load_annotations(path, g)?;
        return Ok(set.iter().map(PartnerPair::from).collect());
    }
    let text = io::read_text(path)?;
    if first_data_line_fields(&text) == Some(7) {
        let set = io::parse_annotations_text(&text, g, path)?;
        return Ok(set.iter().map(PartnerPair::from).collect());
    }
    let records = io::parse_partners_tsv(&text, path)?;
    Ok(records
        .iter()
        .enumerate()
        .map(|(i, r)| PartnerPair { id: i as u64, pre: r.pre, post: r.post })
        .collect())
}

fn constraint(tolerance_nm: f64, mode: ToleranceModeArg, no_segment_match: bool) -> Result<MatchingConstraint, Failure> {
    let mut c = MatchingConstraint::new(tolerance_nm)
        .map_err(|_| Failure::validation(format!("tolerance-nm must be >= 0, got {tolerance_nm}")))?;
    c.mode = match mode {
        ToleranceModeArg::PerEndpoint => ToleranceMode::PerEndpoint,
        ToleranceModeArg::Sum => ToleranceMode::Sum,
    };
    c.require_segment_match = !no_segment_match;
    Ok(c)
}

fn mode_name(m: ToleranceModeArg) -> &'static str {
    match m {
        ToleranceModeArg::PerEndpoint => "per-endpoint",
        ToleranceModeArg::Sum => "sum",
    }
}

fn write_json(path: &Path, value: &Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(io::write_text_atomic(path, &text)?)
}

fn report_json(p: &Params, body: impl Serialize) -> Result<Value, Failure> {
    let mut v = serde_json::to_value(body)?;
    if let Value::Object(m) = &mut v {
        m.insert("parameters".into(), json_params(p));
    }
    Ok(v)
}

fn matrix_csv(m: &ConnectivityMatrix, p: &Params) -> Result<String, Failure> {
    let mut buf = Vec::new();
    m.write_csv(&mut buf)?;
    let body = String::from_utf8(buf).map_err(|e| Failure::io(e.to_string()))?;
    Ok(io::provenance_header(p) + &body)
}

fn check_unit(name: &str, v: f64) -> Result<(), Failure> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Failure::validation(format!("{name} must be in [0,1], got {v}")))
    }
}

pub fn gen_labels(a: GenLabelsArgs) -> Result<(), Failure> {
    require_inputs([a.annotations.as_path(), a.segmentation.as_path()].into_iter().chain(a.offsets.as_deref()))?;
    let seg = io::load_segmentation(&a.segmentation)?;
    let g = *seg.geometry();
    let anns = load_annotation_file(&a.annotations, g)?;
    let mut offsets = load_offsets(a.offsets.as_deref(), &g)?;
    if let Some(r) = a.r_syn_nm {
        offsets = offsets.with_r_syn(r).map_err(|e| Failure::validation(format!("r-syn-nm: {e}")))?;
    }
    anns.check_labeled(&seg)?;
    let labels = synpart::encode_labels(&anns, &offsets, &seg)?;
    info!("{} annotations, {} positive edges", anns.len(), labels.count_positive());

    let mut p = params("gen-labels");
    push(&mut p, "annotations", path_str(&a.annotations));
    push(&mut p, "segmentation", path_str(&a.segmentation));
    push(&mut p, "offsets", a.offsets.as_deref().map_or("cremi-default".into(), path_str));
    push(&mut p, "r_syn_nm", offsets.r_syn_nm());
    push(&mut p, "n_offsets", offsets.len());
    io::save_edge_volume(&a.out, &labels, EdgeDataset::Labels, &attr_text(&p))?;
    Ok(())
}

#[derive(Serialize)]
struct CoverageOut<'a> {
    covered: usize,
    total: usize,
    rate: f64,
    uncovered_ids: &'a [u64],
    background_ids: &'a [u64],
    n_offsets: usize,
    r_syn_nm: f64,
    configurations_evaluated: usize,
    offsets_nm: &'a [[f64; 3]],
}

pub fn coverage_search(a: CoverageSearchArgs) -> Result<(), Failure> {
    require_inputs([a.annotations.as_path(), a.segmentation.as_path()])?;
    let seg = io::load_segmentation(&a.segmentation)?;
    let anns = load_annotation_file(&a.annotations, *seg.geometry())?;
    let result = synpart::grid_search_offsets(&anns, &seg, &a.lengths, &a.counts, &a.radii)?;
    let r = &result.report;
    if !r.is_complete() {
        warn!("best configuration covers {}/{} annotations", r.covered, r.total);
    }
    if !r.background_ids.is_empty() {
        warn!("{} annotations have a background endpoint", r.background_ids.len());
    }
    info!("{} offsets, r_syn {} nm, coverage {}", result.offsets.len(), result.offsets.r_syn_nm(), r.rate);

    let mut p = params("coverage-search");
    push(&mut p, "annotations", path_str(&a.annotations));
    push(&mut p, "segmentation", path_str(&a.segmentation));
    push(&mut p, "lengths", join(&a.lengths));
    push(&mut p, "radii", join(&a.radii));
    push(&mut p, "counts", join(&a.counts));
    push(&mut p, "coverage", r.rate);
    push(&mut p, "covered", r.covered);
    push(&mut p, "total", r.total);
    let text = io::provenance_header(&p) + &result.offsets.to_config_string();
    io::write_text_atomic(&a.out, &text)?;
    if let Some(report) = &a.report {
        let body = CoverageOut {
            covered: r.covered,
            total: r.total,
            rate: r.rate,
            uncovered_ids: &r.uncovered_ids,
            background_ids: &r.background_ids,
            n_offsets: result.offsets.len(),
            r_syn_nm: result.offsets.r_syn_nm(),
            configurations_evaluated: result.evaluated,
            offsets_nm: result.offsets.offsets_nm(),
        };
        write_json(report, &report_json(&p, body)?)?;
    }
    Ok(())
}

fn extraction_params(t1: f64, t2: f64, connectivity: Connectivity) -> Result<ExtractionParams, Failure> {
    check_unit("t1", t1)?;
    if !(t2 >= 0.0 && t2.is_finite()) {
        return Err(Failure::validation(format!("t2 must be >= 0, got {t2}")));
    }
    Ok(ExtractionParams::new(t1, t2, connectivity)?)
}

fn write_candidates(
    out: &Path,
    candidates: &[synpart::CandidateSynapse],
    g: VolumeGeometry,
    p: &Params,
) -> Result<(), Failure> {
    if is_container(out) {
        let anns = candidates
            .iter()
            .enumerate()
            .map(|(i, c)| SynapticPartnerAnnotation::new(i as u64, c.pre_location, c.post_location))
            .collect();
        let set = PointAnnotationSet::new(anns, g)?;
        io::save_annotations(out, &set, &attr_text(p))?;
    } else {
        let records: Vec<PartnerRecord> = candidates.iter().map(PartnerRecord::from).collect();
        io::write_text_atomic(out, &io::format_partners_tsv(&records, p))?;
    }
    Ok(())
}

pub fn extract(a: ExtractArgs) -> Result<(), Failure> {
    let params_ = extraction_params(a.t1, a.t2, a.connectivity)?;
    require_inputs([a.scores.as_path(), a.segmentation.as_path()])?;
    let seg = io::load_segmentation(&a.segmentation)?;
    let (scores, kind) = io::load_edge_volume(&a.scores)?;
    let candidates = synpart::extract(&scores, &seg, &params_)?;
    info!("{} candidates from {:?}", candidates.len(), kind);

    let mut p = params("extract");
    push(&mut p, "scores", path_str(&a.scores));
    push(&mut p, "segmentation", path_str(&a.segmentation));
    push(&mut p, "t1", a.t1);
    push(&mut p, "t2", a.t2);
    push(&mut p, "connectivity", a.connectivity);
    push(&mut p, "r_syn_nm", scores.offsets().r_syn_nm());
    push(&mut p, "n_offsets", scores.offsets().len());
    write_candidates(&a.out, &candidates, *seg.geometry(), &p)
}

pub fn evaluate(a: EvaluateArgs) -> Result<(), Failure> {
    let c = constraint(a.tolerance_nm, a.tolerance_mode, a.no_segment_match)?;
    require_inputs([a.pred.as_path(), a.gt.as_path(), a.segmentation.as_path()])?;
    let seg = io::load_segmentation(&a.segmentation)?;
    let g = *seg.geometry();
    let pred = load_pairs(&a.pred, g)?;
    let gt = load_pairs(&a.gt, g)?;
    let report = synpart::evaluate(&pred, &gt, &seg, &c);
    info!("tp {} fp {} fn {} f-score {:.4}", report.tp, report.fp, report.fn_, report.fscore);

    let mut p = params("evaluate");
    push(&mut p, "pred", path_str(&a.pred));
    push(&mut p, "gt", path_str(&a.gt));
    push(&mut p, "segmentation", path_str(&a.segmentation));
    push(&mut p, "tolerance_nm", a.tolerance_nm);
    push(&mut p, "tolerance_mode", mode_name(a.tolerance_mode));
    push(&mut p, "require_segment_match", !a.no_segment_match);
    write_json(&a.report, &report_json(&p, &report)?)
}

fn default_diff_out(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.diff.csv"))
}

pub fn connmatrix(a: ConnmatrixArgs) -> Result<(), Failure> {
    require_inputs([a.partners.as_path(), a.segmentation.as_path()].into_iter().chain(a.diff.as_deref()))?;
    let seg = io::load_segmentation(&a.segmentation)?;
    let pairs = load_pairs(&a.partners, *seg.geometry())?;
    let build = synpart::build_matrix(&pairs, &seg, None);
    for r in &build.rejects {
        warn!("partner {} skipped: {}", r.id, r.reason);
    }

    let mut p = params("connmatrix");
    push(&mut p, "partners", path_str(&a.partners));
    push(&mut p, "segmentation", path_str(&a.segmentation));
    push(&mut p, "rejected", build.rejects.len());
    io::write_text_atomic(&a.out, &matrix_csv(&build.matrix, &p)?)?;

    if let Some(gt_path) = &a.diff {
        let gt = ConnectivityMatrix::read_csv(fs::File::open(gt_path).map_err(|e| {
            Failure::io(format!("cannot open {}: {e}", gt_path.display()))
        })?, gt_path)?;
        let diff = synpart::diff_matrix(&build.matrix, &gt);
        info!("diff is {}", if diff.is_zero() { "zero" } else { "non-zero" });
        let diff_out = a.diff_out.clone().unwrap_or_else(|| default_diff_out(&a.out));
        push(&mut p, "diff_against", path_str(gt_path));
        io::write_text_atomic(&diff_out, &matrix_csv(&diff, &p)?)?;
    }
    Ok(())
}

fn triple<T: Copy>(v: &[T], name: &str) -> Result<[T; 3], Failure> {
    <[T; 3]>::try_from(v).map_err(|_| Failure::validation(format!("{name} needs 3 comma-separated values, got {}", v.len())))
}

fn synth_spec(s: &SynthArgs) -> Result<SynthSpec, Failure> {
    let shape = triple(&s.shape, "shape")?;
    let resolution = triple(&s.resolution, "resolution")?;
    let g = VolumeGeometry::with_shape(shape, resolution)?;
    let [lo, hi] = <[f64; 2]>::try_from(s.dist.as_slice())
        .map_err(|_| Failure::validation(format!("dist needs min,max, got {} values", s.dist.len())))?;
    if let Some(o) = s.offsets.as_deref() {
        require_inputs([o])?;
    }
    let coverage_offsets = if s.no_coverage_check { None } else { Some(load_offsets(s.offsets.as_deref(), &g)?) };
    let spec = SynthSpec {
        geometry: g,
        n_segments: s.segments,
        n_synapses: s.synapses,
        partner_distance_range_nm: (lo, hi),
        seed: s.seed,
        coverage_offsets,
    };
    spec.validate()?;
    Ok(spec)
}

fn push_synth(p: &mut Params, s: &SynthArgs) {
    push(p, "shape", join(&s.shape));
    push(p, "resolution", join(&s.resolution));
    push(p, "segments", s.segments);
    push(p, "synapses", s.synapses);
    push(p, "dist", join(&s.dist));
    push(p, "seed", s.seed);
    push(p, "offsets", s.offsets.as_deref().map_or("cremi-default".into(), path_str));
    push(p, "coverage_check", !s.no_coverage_check);
}

pub fn synth_gen(a: SynthGenArgs) -> Result<(), Failure> {
    let spec = synth_spec(&a.synth)?;
    let (segmentation, annotations) = synpart::generate(&spec)?;
    info!("{} segments, {} planted partners", spec.n_segments, annotations.len());
    let mut p = params("synth-gen");
    push_synth(&mut p, &a.synth);
    let container = io::CremiContainer { raw: None, segmentation, annotations };
    io::save_container(&a.out, &container, &attr_text(&p))?;
    if let Some(t) = &a.annotations_out {
        io::write_text_atomic(t, &io::format_annotations_text(&container.annotations, &p))?;
    }
    Ok(())
}

fn noise_spec(n: &NoiseArgs, seed: u64) -> Result<NoiseSpec, Failure> {
    check_unit("blob-rate", n.blob_rate)?;
    check_unit("drop-prob", n.drop_prob)?;
    if !(n.sigma >= 0.0 && n.sigma.is_finite()) {
        return Err(Failure::validation(format!("sigma must be >= 0, got {}", n.sigma)));
    }
    let spec = NoiseSpec { gaussian_sigma: n.sigma, false_blob_rate: n.blob_rate, drop_synapse_prob: n.drop_prob, seed };
    spec.validate()?;
    Ok(spec)
}

fn push_noise(p: &mut Params, n: &NoiseArgs, seed: u64) {
    push(p, "sigma", n.sigma);
    push(p, "blob_rate", n.blob_rate);
    push(p, "drop_prob", n.drop_prob);
    push(p, "noise_seed", seed);
}

pub fn simulate_scores(a: SimulateScoresArgs) -> Result<(), Failure> {
    let noise = noise_spec(&a.noise, a.seed)?;
    require_inputs([a.labels.as_path()])?;
    let (labels, kind) = io::load_edge_volume(&a.labels)?;
    if kind != EdgeDataset::Labels && !labels.is_binary() {
        return Err(Failure::validation(format!("labels: {} holds non-binary scores", a.labels.display())));
    }
    let scores = synpart::labels_to_oracle_scores(&labels, &noise)?;
    let mut p = params("simulate-scores");
    push(&mut p, "labels", path_str(&a.labels));
    push_noise(&mut p, &a.noise, a.seed);
    push(&mut p, "r_syn_nm", labels.offsets().r_syn_nm());
    io::save_edge_volume(&a.out, &scores, EdgeDataset::Scores, &attr_text(&p))?;
    Ok(())
}

#[derive(Serialize)]
struct RoundtripOut<'a> {
    planted: usize,
    candidates: usize,
    t2: f64,
    evaluation: &'a synpart::EvalReport,
    connectome_consistent: bool,
    connectome_diff_abs_total: i64,
}

pub fn roundtrip(a: RoundtripArgs) -> Result<(), Failure> {
    check_unit("t1", a.t1)?;
    let spec = synth_spec(&a.synth)?;
    let offsets = match &spec.coverage_offsets {
        Some(o) => o.clone(),
        None => load_offsets(a.synth.offsets.as_deref(), &spec.geometry)?,
    };
    let noise_seed = a.noise_seed.unwrap_or(a.synth.seed);
    let noise = noise_spec(&a.noise, noise_seed)?;
    let tolerance = a.tolerance_nm.unwrap_or(2.0 * offsets.r_syn_nm());
    let c = constraint(tolerance, a.tolerance_mode, a.no_segment_match)?;
    if let Some(t2) = a.t2 {
        if !(t2 >= 0.0 && t2.is_finite()) {
            return Err(Failure::validation(format!("t2 must be >= 0, got {t2}")));
        }
    }

    let rt = synpart::end_to_end_roundtrip(&spec, &offsets, a.t1, a.t2, a.connectivity, &noise, &c)?;
    let extracted = PartnerPair::from_candidates(&rt.candidates);
    let planted: Vec<PartnerPair> = rt.planted.iter().map(PartnerPair::from).collect();
    let m_pred = synpart::build_matrix(&extracted, &rt.segmentation, None).matrix;
    let m_gt = synpart::build_matrix(&planted, &rt.segmentation, None).matrix;
    let diff = synpart::diff_matrix(&m_pred, &m_gt);
    let diff_abs: i64 = diff.entries().map(|(_, _, c)| c.abs()).sum();
    info!("f-score {:.4}, {} candidates for {} planted", rt.report.fscore, rt.candidates.len(), planted.len());

    let mut p = params("roundtrip");
    push_synth(&mut p, &a.synth);
    push_noise(&mut p, &a.noise, noise_seed);
    push(&mut p, "r_syn_nm", offsets.r_syn_nm());
    push(&mut p, "t1", a.t1);
    push(&mut p, "t2", rt.params.t2);
    push(&mut p, "t2_source", if a.t2.is_some() { "explicit" } else { "half-min-planted-confidence" });
    push(&mut p, "connectivity", a.connectivity);
    push(&mut p, "tolerance_nm", tolerance);
    push(&mut p, "tolerance_mode", mode_name(a.tolerance_mode));
    push(&mut p, "require_segment_match", !a.no_segment_match);

    if let Some(dir) = &a.work_dir {
        fs::create_dir_all(dir).map_err(|e| Failure::io(format!("cannot create {}: {e}", dir.display())))?;
        let attrs = attr_text(&p);
        let container =
            io::CremiContainer { raw: None, segmentation: rt.segmentation.clone(), annotations: rt.planted.clone() };
        io::save_container(&dir.join("synth.h5"), &container, &attrs)?;
        io::save_edge_volume(&dir.join("labels.h5"), &rt.labels, EdgeDataset::Labels, &attrs)?;
        io::save_edge_volume(&dir.join("scores.h5"), &rt.scores, EdgeDataset::Scores, &attrs)?;
        write_candidates(&dir.join("partners.tsv"), &rt.candidates, spec.geometry, &p)?;
        io::write_text_atomic(&dir.join("matrix_pred.csv"), &matrix_csv(&m_pred, &p)?)?;
        io::write_text_atomic(&dir.join("matrix_gt.csv"), &matrix_csv(&m_gt, &p)?)?;
        io::write_text_atomic(&dir.join("matrix_diff.csv"), &matrix_csv(&diff, &p)?)?;
    }

    let body = RoundtripOut {
        planted: planted.len(),
        candidates: rt.candidates.len(),
        t2: rt.params.t2,
        evaluation: &rt.report,
        connectome_consistent: diff.is_zero(),
        connectome_diff_abs_total: diff_abs,
    };
    write_json(&a.report, &report_json(&p, body)?)
}
