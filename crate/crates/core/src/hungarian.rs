//! Rectangular assignment with forbidden entries.
//!
//! Maximizes the number of matched allowed pairs, and among maximum matchings
//! minimizes total cost. Forbidden entries carry a lexicographic penalty
//! `(1, 0)` against allowed entries `(0, cost)`, so a shortest-augmenting-path
//! Hungarian solver over these pairs gives both objectives at once.

use std::cmp::Ordering;
use std::ops::{Add, Sub};

/// Dense `rows x cols` cost matrix; `None` marks a forbidden pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Option<f64>>,
}

impl CostMatrix {
    /// All entries forbidden.
    pub fn forbidden(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![None; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Option<f64>) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self { rows, cols, entries }
    }

    pub fn from_rows(rows: &[Vec<Option<f64>>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged cost matrix");
        Self { rows: rows.len(), cols, entries: rows.concat() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, cost: Option<f64>) {
        assert!(cost.is_none_or(f64::is_finite), "allowed costs must be finite");
        self.entries[i * self.cols + j] = cost;
    }
}

/// Matched `(row, col)` pairs sorted by row, and their summed cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub pairs: Vec<(usize, usize)>,
    pub total_cost: f64,
}

impl Assignment {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Lex {
    penalty: i64,
    cost: f64,
}

impl Lex {
    const ZERO: Lex = Lex { penalty: 0, cost: 0.0 };
    const INF: Lex = Lex { penalty: i64::MAX / 4, cost: 0.0 };
}

impl Add for Lex {
    type Output = Lex;
    fn add(self, o: Lex) -> Lex {
        Lex { penalty: self.penalty + o.penalty, cost: self.cost + o.cost }
    }
}

impl Sub for Lex {
    type Output = Lex;
    fn sub(self, o: Lex) -> Lex {
        Lex { penalty: self.penalty - o.penalty, cost: self.cost - o.cost }
    }
}

impl PartialOrd for Lex {
    fn partial_cmp(&self, o: &Lex) -> Option<Ordering> {
        Some(self.penalty.cmp(&o.penalty).then(self.cost.total_cmp(&o.cost)))
    }
}

/// Optimal assignment: maximum number of allowed matches, then minimum cost.
pub fn hungarian_assign(cost: &CostMatrix) -> Assignment {
    if cost.rows == 0 || cost.cols == 0 {
        return Assignment { pairs: Vec::new(), total_cost: 0.0 };
    }
    let transposed = cost.rows > cost.cols;
    let (n, m) = if transposed { (cost.cols, cost.rows) } else { (cost.rows, cost.cols) };
    let entry = |i: usize, j: usize| {
        let c = if transposed { cost.get(j, i) } else { cost.get(i, j) };
        match c {
            Some(c) => Lex { penalty: 0, cost: c },
            None => Lex { penalty: 1, cost: 0.0 },
        }
    };

    // Shortest augmenting paths with potentials, 1-based with a virtual column 0.
    let mut u = vec![Lex::ZERO; n + 1];
    let mut v = vec![Lex::ZERO; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![Lex::INF; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = Lex::INF;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = entry(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] = u[p[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut pairs = Vec::new();
    for (j, &row) in p.iter().enumerate().skip(1) {
        if row == 0 {
            continue;
        }
        let (r, c) = if transposed { (j - 1, row - 1) } else { (row - 1, j - 1) };
        if cost.get(r, c).is_some() {
            pairs.push((r, c));
        }
    }
    pairs.sort_unstable();
    let total_cost = pairs.iter().map(|&(r, c)| cost.get(r, c).unwrap()).sum();
    Assignment { pairs, total_cost }
}
