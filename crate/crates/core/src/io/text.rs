use std::fmt::Write as _;
use std::path::Path;

use crate::annotation::{PointAnnotationSet, SynapticPartnerAnnotation};
use crate::error::{Error, Result};
use crate::extract::CandidateSynapse;
use crate::geometry::{Point3, VolumeGeometry};
use crate::volume::Label;

/// `# key=value` lines recording the parameters that produced a file.
pub fn provenance_header(params: &[(String, String)]) -> String {
    let mut s = String::new();
    for (k, v) in params {
        writeln!(s, "# {k}={v}").unwrap();
    }
    s
}

fn fields(line: &str) -> Vec<&str> {
    line.split('\t').map(str::trim).collect()
}

fn parse_f64(s: &str, path: &Path, line: usize) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|e| Error::Format { path: path.to_path_buf(), msg: format!("line {line}: `{s}`: {e}") })
}

/// Tab-separated `id pre_x pre_y pre_z post_x post_y post_z` (nm), one partner per line.
pub fn format_annotations_text(set: &PointAnnotationSet, provenance: &[(String, String)]) -> String {
    let mut s = provenance_header(provenance);
    for a in set {
        let [px, py, pz] = a.pre_location;
        let [qx, qy, qz] = a.post_location;
        writeln!(s, "{}\t{px}\t{py}\t{pz}\t{qx}\t{qy}\t{qz}", a.id).unwrap();
    }
    s
}

pub fn parse_annotations_text(text: &str, geometry: VolumeGeometry, path: &Path) -> Result<PointAnnotationSet> {
    let mut anns = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f = fields(line);
        if f.len() != 7 {
            return Err(Error::Format {
                path: path.to_path_buf(),
                msg: format!("line {}: expected 7 tab-separated fields, got {}", i + 1, f.len()),
            });
        }
        let id = f[0].parse::<u64>().map_err(|e| Error::Format {
            path: path.to_path_buf(),
            msg: format!("line {}: id `{}`: {e}", i + 1, f[0]),
        })?;
        let mut v = [0.0; 6];
        for (j, s) in f[1..].iter().enumerate() {
            v[j] = parse_f64(s, path, i + 1)?;
        }
        anns.push(SynapticPartnerAnnotation::new(id, [v[0], v[1], v[2]], [v[3], v[4], v[5]]));
    }
    PointAnnotationSet::new(anns, geometry)
}

/// One row of an extracted partner list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartnerRecord {
    pub pre: Point3,
    pub post: Point3,
    pub pre_segment: Label,
    pub post_segment: Label,
    pub confidence: f64,
    pub n_edges: usize,
}

impl From<&CandidateSynapse> for PartnerRecord {
    fn from(c: &CandidateSynapse) -> Self {
        Self {
            pre: c.pre_location,
            post: c.post_location,
            pre_segment: c.source_segment,
            post_segment: c.target_segment,
            confidence: c.confidence,
            n_edges: c.n_edges(),
        }
    }
}

const PARTNER_COLUMNS: &str = "pre_x\tpre_y\tpre_z\tpost_x\tpost_y\tpost_z\tpre_seg\tpost_seg\tconfidence\tn_edges";

/// `pre_x pre_y pre_z post_x post_y post_z pre_seg post_seg confidence n_edges`, tab-separated.
pub fn format_partners_tsv(records: &[PartnerRecord], provenance: &[(String, String)]) -> String {
    let mut s = provenance_header(provenance);
    writeln!(s, "# {PARTNER_COLUMNS}").unwrap();
    for r in records {
        let [px, py, pz] = r.pre;
        let [qx, qy, qz] = r.post;
        writeln!(
            s,
            "{px}\t{py}\t{pz}\t{qx}\t{qy}\t{qz}\t{}\t{}\t{}\t{}",
            r.pre_segment, r.post_segment, r.confidence, r.n_edges
        )
        .unwrap();
    }
    s
}

pub fn parse_partners_tsv(text: &str, path: &Path) -> Result<Vec<PartnerRecord>> {
    let bad = |line: usize, msg: String| Error::Format { path: path.to_path_buf(), msg: format!("line {line}: {msg}") };
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f = fields(line);
        if f.len() != 10 {
            return Err(bad(i + 1, format!("expected 10 fields, got {}", f.len())));
        }
        let mut v = [0.0; 6];
        for j in 0..6 {
            v[j] = parse_f64(f[j], path, i + 1)?;
        }
        out.push(PartnerRecord {
            pre: [v[0], v[1], v[2]],
            post: [v[3], v[4], v[5]],
            pre_segment: f[6].parse().map_err(|e| bad(i + 1, format!("pre_seg: {e}")))?,
            post_segment: f[7].parse().map_err(|e| bad(i + 1, format!("post_seg: {e}")))?,
            confidence: parse_f64(f[8], path, i + 1)?,
            n_edges: f[9].parse().map_err(|e| bad(i + 1, format!("n_edges: {e}")))?,
        });
    }
    Ok(out)
}
