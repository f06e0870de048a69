//! Neuron-by-neuron connectivity matrices (rows presynaptic, columns postsynaptic).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::PartnerPair;
use crate::volume::{Label, SegmentationVolume, BACKGROUND};

/// Sparse directed synapse counts between neurons.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConnectivityMatrix {
    row_labels: Vec<Label>,
    col_labels: Vec<Label>,
    counts: BTreeMap<(Label, Label), i64>,
}

/// A partner that could not be placed in the matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectedPartner {
    pub id: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixBuild {
    pub matrix: ConnectivityMatrix,
    pub rejects: Vec<RejectedPartner>,
}

impl ConnectivityMatrix {
    pub fn new(row_labels: Vec<Label>, col_labels: Vec<Label>) -> Self {
        Self { row_labels, col_labels, counts: BTreeMap::new() }
    }

    pub fn row_labels(&self) -> &[Label] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[Label] {
        &self.col_labels
    }

    pub fn get(&self, pre: Label, post: Label) -> i64 {
        self.counts.get(&(pre, post)).copied().unwrap_or(0)
    }

    /// Nonzero entries.
    pub fn entries(&self) -> impl Iterator<Item = (Label, Label, i64)> + '_ {
        self.counts.iter().filter(|(_, &c)| c != 0).map(|(&(a, b), &c)| (a, b, c))
    }

    pub fn total(&self) -> i64 {
        self.counts.values().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.counts.values().all(|&c| c == 0)
    }

    fn add(&mut self, pre: Label, post: Label, n: i64) {
        let e = self.counts.entry((pre, post)).or_insert(0);
        *e += n;
        if *e == 0 {
            self.counts.remove(&(pre, post));
        }
    }

    pub fn dense(&self) -> Vec<Vec<i64>> {
        self.row_labels
            .iter()
            .map(|&r| self.col_labels.iter().map(|&c| self.get(r, c)).collect())
            .collect()
    }

    /// Same entries on a different label ordering; labels not present are zero.
    pub fn relabeled(&self, row_labels: Vec<Label>, col_labels: Vec<Label>) -> Self {
        let rows: BTreeSet<Label> = row_labels.iter().copied().collect();
        let cols: BTreeSet<Label> = col_labels.iter().copied().collect();
        let counts = self
            .counts
            .iter()
            .filter(|((a, b), _)| rows.contains(a) && cols.contains(b))
            .map(|(k, v)| (*k, *v))
            .collect();
        Self { row_labels, col_labels, counts }
    }

    /// Dense CSV: corner cell `pre\post`, then column ids; each row starts with its id.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["pre\\post".to_string()];
        header.extend(self.col_labels.iter().map(u64::to_string));
        w.write_record(&header).map_err(csv_err)?;
        for (r, row) in self.row_labels.iter().zip(self.dense()) {
            let mut rec = vec![r.to_string()];
            rec.extend(row.iter().map(i64::to_string));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads [`ConnectivityMatrix::write_csv`] output; lines starting with `#` are skipped.
    pub fn read_csv<R: Read>(reader: R, source: &Path) -> Result<Self> {
        let bad = |msg: String| Error::Format { path: source.to_path_buf(), msg };
        let mut r = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).from_reader(reader);
        let mut records = r.records();
        let header = records.next().ok_or_else(|| bad("empty matrix file".into()))?.map_err(|e| bad(e.to_string()))?;
        let col_labels = header
            .iter()
            .skip(1)
            .map(|s| s.trim().parse::<Label>().map_err(|e| bad(format!("column id `{s}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let mut m = Self::new(Vec::new(), col_labels);
        for rec in records {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let mut cells = rec.iter();
            let id = cells.next().unwrap_or("");
            let row: Label = id.trim().parse().map_err(|e| bad(format!("row id `{id}`: {e}")))?;
            m.row_labels.push(row);
            let values: Vec<&str> = cells.collect();
            if values.len() != m.col_labels.len() {
                return Err(bad(format!("row {row} has {} cells, expected {}", values.len(), m.col_labels.len())));
            }
            for (j, v) in values.iter().enumerate() {
                let n: i64 = v.trim().parse().map_err(|e| bad(format!("cell `{v}`: {e}")))?;
                let col = m.col_labels[j];
                m.add(row, col, n);
            }
        }
        Ok(m)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Counts partners per directed `(pre segment, post segment)`.
///
/// Without `neuron_ids`, rows and columns both list every segment that occurs
/// in an accepted partner, ascending. Partners on background, outside the
/// volume, or on segments missing from `neuron_ids` are rejected.
pub fn build_matrix(partners: &[PartnerPair], seg: &SegmentationVolume, neuron_ids: Option<&[Label]>) -> MatrixBuild {
    let allowed: Option<HashMap<Label, ()>> = neuron_ids.map(|ids| ids.iter().map(|&i| (i, ())).collect());
    let mut accepted = Vec::new();
    let mut rejects = Vec::new();
    for p in partners {
        let labels = (seg.label_at(p.pre), seg.label_at(p.post));
        let (pre, post) = match labels {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                rejects.push(RejectedPartner { id: p.id, reason: e.to_string() });
                continue;
            }
        };
        if pre == BACKGROUND || post == BACKGROUND {
            rejects.push(RejectedPartner { id: p.id, reason: "endpoint on background label".into() });
            continue;
        }
        if let Some(allowed) = &allowed {
            if !allowed.contains_key(&pre) || !allowed.contains_key(&post) {
                rejects.push(RejectedPartner { id: p.id, reason: format!("segment pair {pre}->{post} not in neuron list") });
                continue;
            }
        }
        accepted.push((pre, post));
    }
    let labels: Vec<Label> = match neuron_ids {
        Some(ids) => ids.to_vec(),
        None => {
            let set: BTreeSet<Label> = accepted.iter().flat_map(|&(a, b)| [a, b]).collect();
            set.into_iter().collect()
        }
    };
    let mut matrix = ConnectivityMatrix::new(labels.clone(), labels);
    for (a, b) in accepted {
        matrix.add(a, b, 1);
    }
    MatrixBuild { matrix, rejects }
}

/// Entrywise `pred - gt` over the union of both label sets.
pub fn diff_matrix(pred: &ConnectivityMatrix, gt: &ConnectivityMatrix) -> ConnectivityMatrix {
    let union = |a: &[Label], b: &[Label]| -> Vec<Label> {
        let s: BTreeSet<Label> = a.iter().chain(b).copied().collect();
        s.into_iter().collect()
    };
    let mut out = ConnectivityMatrix::new(
        union(&pred.row_labels, &gt.row_labels),
        union(&pred.col_labels, &gt.col_labels),
    );
    for (&(a, b), &c) in &pred.counts {
        out.add(a, b, c);
    }
    for (&(a, b), &c) in &gt.counts {
        out.add(a, b, -c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::VolumeGeometry;

    fn seg() -> SegmentationVolume {
        let g = VolumeGeometry::with_shape([30, 10, 2], [4.0, 4.0, 40.0]).unwrap();
        SegmentationVolume::from_fn(g, |v| match v[0] {
            0..=4 => 0,
            5..=14 => 10,
            15..=24 => 20,
            _ => 30,
        })
    }

    fn at(x: usize) -> [f64; 3] {
        [x as f64 * 4.0, 8.0, 0.0]
    }

    fn p(id: u64, a: usize, b: usize) -> PartnerPair {
        PartnerPair { id, pre: at(a), post: at(b) }
    }

    #[test]
    fn empty_partners() {
        let b = build_matrix(&[], &seg(), None);
        assert!(b.matrix.is_zero());
        assert!(b.matrix.row_labels().is_empty());
        let b = build_matrix(&[], &seg(), Some(&[10, 20]));
        assert_eq!(b.matrix.dense(), vec![vec![0, 0], vec![0, 0]]);
    }

    #[test]
    fn directed_counting() {
        let partners = [p(0, 6, 16), p(1, 7, 17), p(2, 8, 18), p(3, 16, 6)];
        let b = build_matrix(&partners, &seg(), None);
        assert_eq!(b.matrix.get(10, 20), 3);
        assert_eq!(b.matrix.get(20, 10), 1);
        assert_eq!(b.matrix.row_labels(), &[10, 20]);
    }

    #[test]
    fn background_rejected() {
        let b = build_matrix(&[p(5, 1, 16), p(6, 6, 16)], &seg(), None);
        assert_eq!(b.rejects.len(), 1);
        assert_eq!(b.rejects[0].id, 5);
        assert_eq!(b.matrix.total(), 1);
    }

    #[test]
    fn diff_entries() {
        let s = seg();
        let gt = build_matrix(&[p(0, 6, 16), p(1, 16, 26)], &s, None).matrix;
        assert!(diff_matrix(&gt, &gt).is_zero());
        let extra = build_matrix(&[p(0, 6, 16), p(1, 16, 26), p(2, 26, 6)], &s, None).matrix;
        let d = diff_matrix(&extra, &gt);
        assert_eq!(d.entries().collect::<Vec<_>>(), vec![(30, 10, 1)]);
        let missed = build_matrix(&[p(0, 6, 16)], &s, None).matrix;
        let d = diff_matrix(&missed, &gt);
        assert_eq!(d.entries().collect::<Vec<_>>(), vec![(20, 30, -1)]);
        assert_eq!(d.row_labels(), &[10, 20, 30]);
    }

    #[test]
    fn csv_roundtrip() {
        let s = seg();
        let m = build_matrix(&[p(0, 6, 16), p(1, 16, 26), p(2, 7, 17)], &s, None).matrix;
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("pre\\post,10,20,30\n10,0,2,0\n"), "{text}");
        let back = ConnectivityMatrix::read_csv(&buf[..], Path::new("m.csv")).unwrap();
        assert_eq!(back, m);
    }
}
