use serde::{Deserialize, Serialize};

use crate::multidegree::TwistVector;
use crate::table::VanishingTable;

/// Row-pair sums a^i_{(j,j′)} = a^i_j + a^i_{j′}, b likewise, for j ≤ j′.
///
/// Rows are ordered by j + j′, then by j, as in the printed tensor table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorTable {
    n: usize,
    d: i32,
    rows: Vec<(usize, usize)>,
    // row-major: row * n + (i - 1)
    a: Vec<i32>,
    b: Vec<i32>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppearanceFlags {
    pub appearing: bool,
    pub starting: bool,
    pub ending: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PotentialSection {
    pub row: (usize, usize),
    pub start: usize,
    pub end: usize,
}

impl PotentialSection {
    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i <= self.end
    }
    pub fn involves(&self, j: usize) -> bool {
        self.row.0 == j || self.row.1 == j
    }
}

pub fn tensor_rows(r: usize) -> Vec<(usize, usize)> {
    let mut rows = Vec::with_capacity((r + 1) * (r + 2) / 2);
    for s in 0..=2 * r {
        for j in 0..=s / 2 {
            let jp = s - j;
            if jp <= r {
                rows.push((j, jp));
            }
        }
    }
    rows
}

impl TensorTable {
    pub fn new(t: &VanishingTable) -> Self {
        let n = t.n();
        let rows = tensor_rows(t.r());
        let mut a = Vec::with_capacity(rows.len() * n);
        let mut b = Vec::with_capacity(rows.len() * n);
        for &(j, jp) in &rows {
            for i in 1..=n {
                a.push(t.a(i, j) + t.a(i, jp));
                b.push(t.b(i, j) + t.b(i, jp));
            }
        }
        TensorTable { n, d: t.d(), rows, a, b }
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn d(&self) -> i32 {
        self.d
    }
    pub fn rows(&self) -> &[(usize, usize)] {
        &self.rows
    }

    pub fn row_index(&self, row: (usize, usize)) -> Option<usize> {
        let row = if row.0 <= row.1 { row } else { (row.1, row.0) };
        self.rows.iter().position(|&x| x == row)
    }

    /// a^i_{(j,j′)} by row index and 1-based column.
    #[inline]
    pub fn a(&self, row: usize, i: usize) -> i32 {
        self.a[row * self.n + i - 1]
    }
    #[inline]
    pub fn b(&self, row: usize, i: usize) -> i32 {
        self.b[row * self.n + i - 1]
    }

    /// Per-column appearance test; nothing precedes column 1 and nothing
    /// follows column N, so those ends always count as starts and ends.
    #[inline]
    pub fn flags(&self, w: &TwistVector, i: usize, row: usize) -> AppearanceFlags {
        let a = self.a(row, i) as i64;
        let b = self.b(row, i) as i64;
        let lo = w.c_at(i);
        let hi = 2 * self.d as i64 - w.c_at(i + 1);
        let appearing = a >= lo && b >= hi;
        AppearanceFlags {
            appearing,
            starting: appearing && (a > lo || i == 1),
            ending: appearing && (b > hi || i == self.n),
        }
    }

    /// Maximal runs of appearing columns that start and end properly, in row
    /// order then left to right.
    pub fn potential_sections(&self, w: &TwistVector) -> Vec<PotentialSection> {
        let n = self.n;
        let two_d = 2 * self.d as i64;
        let lo: Vec<i64> = (1..=n).map(|i| w.c_at(i)).collect();
        let hi: Vec<i64> = (1..=n).map(|i| two_d - w.c_at(i + 1)).collect();
        let mut out = Vec::new();
        for (row, &label) in self.rows.iter().enumerate() {
            let a = &self.a[row * n..(row + 1) * n];
            let b = &self.b[row * n..(row + 1) * n];
            let appears = |c: usize| a[c] as i64 >= lo[c] && b[c] as i64 >= hi[c];
            let mut c = 0;
            while c < n {
                if !appears(c) {
                    c += 1;
                    continue;
                }
                let s = c;
                while c + 1 < n && appears(c + 1) {
                    c += 1;
                }
                let starts = a[s] as i64 > lo[s] || s == 0;
                let ends = b[c] as i64 > hi[c] || c == n - 1;
                if starts && ends {
                    out.push(PotentialSection { row: label, start: s + 1, end: c + 1 });
                }
                c += 1;
            }
        }
        out
    }

    /// Direct check of every interval [s, e]: appearing throughout, starting
    /// at s, ending at e.
    pub fn potential_sections_naive(&self, w: &TwistVector) -> Vec<PotentialSection> {
        let mut out = Vec::new();
        for row in 0..self.rows.len() {
            for s in 1..=self.n {
                for e in s..=self.n {
                    let ok = (s..=e).all(|i| self.flags(w, i, row).appearing)
                        && self.flags(w, s, row).starting
                        && self.flags(w, e, row).ending;
                    if ok {
                        out.push(PotentialSection { row: self.rows[row], start: s, end: e });
                    }
                }
            }
        }
        out
    }
}

/// Number of sections whose support contains both i and i+1.
pub fn spanning_count(sections: &[PotentialSection], i: usize) -> usize {
    sections.iter().filter(|s| s.start <= i && s.end > i).count()
}
