use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chain::ChainCurve;
use crate::error::{Error, Result};

/// The table T′: for each column i = 1..=N and row j = 0..=r the pair
/// (a^i_j, b^i_j) of vanishing orders at P_i and Q_i.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VanishingTable {
    chain: Arc<ChainCurve>,
    r: usize,
    d: i32,
    // column-major, (i-1)*(r+1)+j
    a: Vec<i32>,
    b: Vec<i32>,
}

#[derive(Serialize, Deserialize)]
struct TableJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    chain: Option<ChainCurve>,
    r: usize,
    d: i32,
    a: Vec<Vec<i32>>,
    b: Vec<Vec<i32>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ValidateOptions {
    /// Allow genus-0 columns whose rows sum below d.
    pub allow_genus0_exceptional: bool,
}

impl VanishingTable {
    /// Builds a table from per-column vectors. Only shapes are checked here;
    /// call [`validate`](Self::validate) for the series invariants.
    pub fn from_columns(
        chain: impl Into<Arc<ChainCurve>>,
        r: usize,
        d: i32,
        a: Vec<Vec<i32>>,
        b: Vec<Vec<i32>>,
    ) -> Result<Self> {
        let chain = chain.into();
        let n = chain.len();
        if a.len() != n || b.len() != n {
            return Err(Error::Shape(format!(
                "chain has {} components but table has {} a-columns and {} b-columns",
                n,
                a.len(),
                b.len()
            )));
        }
        for (i, (ca, cb)) in a.iter().zip(&b).enumerate() {
            if ca.len() != r + 1 || cb.len() != r + 1 {
                return Err(Error::Shape(format!("column {} must have {} rows", i + 1, r + 1)));
            }
        }
        Ok(VanishingTable { chain, r, d, a: a.concat(), b: b.concat() })
    }

    /// Refined table from the a-sequences a^1, …, a^{N+1}, where a^{N+1}
    /// stands for d − b^N.
    pub fn from_a_sequence(chain: impl Into<Arc<ChainCurve>>, r: usize, d: i32, cols: &[Vec<i32>]) -> Result<Self> {
        let chain = chain.into();
        let n = chain.len();
        if cols.len() != n + 1 {
            return Err(Error::Shape(format!("expected {} a-columns", n + 1)));
        }
        let a: Vec<Vec<i32>> = cols[..n].to_vec();
        let b: Vec<Vec<i32>> = cols[1..].iter().map(|c| c.iter().map(|x| d - x).collect()).collect();
        Self::from_columns(chain, r, d, a, b)
    }

    /// Same as [`from_a_sequence`](Self::from_a_sequence) with the columns
    /// concatenated; the length must be (N+1)(r+1).
    pub(crate) fn from_flat_a_sequence(chain: Arc<ChainCurve>, r: usize, d: i32, flat: &[i32]) -> Self {
        let rows = r + 1;
        let cells = chain.len() * rows;
        assert_eq!(flat.len(), cells + rows, "a-sequence length");
        VanishingTable { chain, r, d, a: flat[..cells].to_vec(), b: flat[rows..].iter().map(|x| d - x).collect() }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let t: TableJson = serde_json::from_str(s)?;
        let chain = match t.chain {
            Some(c) => c,
            None => ChainCurve::elliptic(t.a.len())?,
        };
        Self::from_columns(chain, t.r, t.d, t.a, t.b)
    }

    pub fn to_json(&self) -> String {
        let t = TableJson {
            chain: if self.chain.is_pure_elliptic() { None } else { Some((*self.chain).clone()) },
            r: self.r,
            d: self.d,
            a: (1..=self.n()).map(|i| self.a_col(i).to_vec()).collect(),
            b: (1..=self.n()).map(|i| self.b_col(i).to_vec()).collect(),
        };
        serde_json::to_string(&t).expect("table serializes")
    }

    pub fn chain(&self) -> &ChainCurve {
        &self.chain
    }
    pub fn r(&self) -> usize {
        self.r
    }
    pub fn rows(&self) -> usize {
        self.r + 1
    }
    pub fn d(&self) -> i32 {
        self.d
    }
    /// Number of columns N.
    pub fn n(&self) -> usize {
        self.chain.len()
    }
    pub fn genus(&self) -> usize {
        self.chain.genus()
    }

    /// ρ = g − (r+1)(g + r − d).
    pub fn rho(&self) -> i64 {
        brill_noether_rho(self.genus() as i64, self.r as i64, self.d as i64)
    }

    /// a^i_j, with `i` 1-based.
    #[inline]
    pub fn a(&self, i: usize, j: usize) -> i32 {
        self.a[(i - 1) * (self.r + 1) + j]
    }
    #[inline]
    pub fn b(&self, i: usize, j: usize) -> i32 {
        self.b[(i - 1) * (self.r + 1) + j]
    }
    pub fn a_col(&self, i: usize) -> &[i32] {
        &self.a[(i - 1) * (self.r + 1)..i * (self.r + 1)]
    }
    pub fn b_col(&self, i: usize) -> &[i32] {
        &self.b[(i - 1) * (self.r + 1)..i * (self.r + 1)]
    }

    /// a^{i+1}_j read through refinedness, i.e. d − b^i_j; for i = N this is
    /// the a^{N+1} convention.
    #[inline]
    pub fn a_after(&self, i: usize, j: usize) -> i32 {
        self.d - self.b(i, j)
    }

    /// The a-sequence before column i, for i in 1..=N+1.
    #[inline]
    pub fn a_at(&self, i: usize, j: usize) -> i32 {
        if i == 1 {
            self.a(1, j)
        } else {
            self.a_after(i - 1, j)
        }
    }

    /// d − a^i_j − b^i_j: 0 for the row adding a box, 1 for a generic row.
    #[inline]
    pub fn defect(&self, i: usize, j: usize) -> i32 {
        self.d - self.a(i, j) - self.b(i, j)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with(ValidateOptions::default())
    }

    pub fn validate_with(&self, opts: ValidateOptions) -> Result<()> {
        let n = self.n();
        let rows = self.rows();
        for i in 1..=n {
            for j in 0..rows {
                if self.a(i, j) < 0 || self.b(i, j) < 0 {
                    return Err(Error::NegativeOrder { column: i, row: j });
                }
            }
        }
        for i in 1..=n {
            for j in 0..rows {
                if self.a(i, j) + self.b(i, j) > self.d {
                    return Err(Error::SumExceedsD { column: i, row: j });
                }
            }
        }
        for i in 1..n {
            for j in 0..rows {
                if self.a(i + 1, j) != self.d - self.b(i, j) {
                    return Err(Error::RefinednessViolation { column: i, row: j });
                }
            }
        }
        for i in 1..=n {
            if has_duplicate(self.a_col(i)) {
                return Err(Error::DuplicateVanishing { column: i, subcolumn: 'a' });
            }
            if has_duplicate(self.b_col(i)) {
                return Err(Error::DuplicateVanishing { column: i, subcolumn: 'b' });
            }
        }
        for i in 1..=n {
            let full = (0..rows).filter(|&j| self.defect(i, j) == 0).count();
            if self.chain.genus_of(i) == 1 {
                if full > 1 {
                    return Err(Error::TooManyFullRows { column: i, count: full });
                }
            } else if !opts.allow_genus0_exceptional {
                if let Some(j) = (0..rows).find(|&j| self.defect(i, j) != 0) {
                    return Err(Error::DeficientGenusZero { column: i, row: j });
                }
            }
        }
        if self.a_col(1).windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::RowOrder);
        }
        Ok(())
    }

    /// Rows whose sum falls below the generic value: d − 1 on genus 1,
    /// d on genus 0.
    pub fn is_exceptional(&self, i: usize, j: usize) -> bool {
        let k = self.defect(i, j);
        if self.chain.genus_of(i) == 1 {
            k >= 2
        } else {
            k >= 1
        }
    }

    pub fn exceptional_rows(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 1..=self.n() {
            for j in 0..self.rows() {
                if self.is_exceptional(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn column_has_exceptional(&self, i: usize) -> bool {
        (0..self.rows()).any(|j| self.is_exceptional(i, j))
    }

    /// δ_i: the row whose λ value increases in column i.
    pub fn delta(&self, i: usize) -> Option<usize> {
        if self.chain.genus_of(i) != 1 {
            return None;
        }
        (0..self.rows()).find(|&j| self.defect(i, j) == 0)
    }

    pub fn lambda_sequence(&self) -> LambdaSequence {
        LambdaSequence::new(self)
    }

    pub fn find_swaps(&self) -> Vec<Swap> {
        let mut out = Vec::new();
        let rows = self.rows();
        for i in 1..=self.n() {
            for j in 0..rows {
                for jp in j + 1..rows {
                    let da = self.a(i, j) - self.a(i, jp);
                    let db = self.b(i, j) - self.b(i, jp);
                    if (da < 0) == (db < 0) {
                        let minimal =
                            da.abs() == 1 && db.abs() == 1 && (self.defect(i, j) == 0 || self.defect(i, jp) == 0);
                        out.push(Swap { column: i, rows: (j, jp), minimal });
                    }
                }
            }
        }
        out
    }

    pub fn rho_accounting(&self) -> Result<RhoBreakdown> {
        let rows = self.rows() as i64;
        let initial: i64 = (0..self.rows()).map(|j| self.a(1, j) as i64 - j as i64).sum();
        let mut exceptional = 0i64;
        let mut missing = 0i64;
        for i in 1..=self.n() {
            let genus1 = self.chain.genus_of(i) == 1;
            if genus1 && self.delta(i).is_none() {
                missing += 1;
            }
            for j in 0..self.rows() {
                let k = self.defect(i, j) as i64;
                exceptional += if genus1 { (k - 1).max(0) } else { k };
            }
        }
        let n = self.n();
        let final_ram: i64 = (0..self.rows()).map(|j| self.b(n, j) as i64).sum::<i64>() - rows * (rows - 1) / 2;
        let total = initial + exceptional + missing;
        let rho = self.rho();
        if total > rho {
            return Err(Error::InvalidSeries { total, rho });
        }
        Ok(RhoBreakdown {
            initial_ramification: initial,
            exceptional_defect: exceptional,
            missing_delta: missing,
            final_ramification: final_ram,
            total,
        })
    }

    /// Same table with each subcolumn sorted (a ascending, b descending).
    pub fn bar_table(&self) -> VanishingTable {
        let mut t = self.clone();
        let rows = self.rows();
        for c in 0..self.n() {
            t.a[c * rows..(c + 1) * rows].sort_unstable();
            t.b[c * rows..(c + 1) * rows].sort_unstable_by(|x, y| y.cmp(x));
        }
        t
    }

    pub fn classify_degeneracy(&self) -> DegeneracyClass {
        classify_swaps(&self.find_swaps())
    }

    /// Stable 64-bit FNV-1a identifier over (N, r, d, a^1..a^{N+1}).
    pub fn table_id(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.write_i64(self.n() as i64);
        h.write_i64(self.r as i64);
        h.write_i64(self.d as i64);
        for &g in self.chain.genera() {
            h.write_i64(g as i64);
        }
        for i in 1..=self.n() + 1 {
            for j in 0..self.rows() {
                h.write_i64(self.a_at(i, j) as i64);
            }
        }
        h.finish()
    }
}

pub fn brill_noether_rho(g: i64, r: i64, d: i64) -> i64 {
    g - (r + 1) * (g + r - d)
}

fn has_duplicate(v: &[i32]) -> bool {
    let mut s = v.to_vec();
    s.sort_unstable();
    s.windows(2).any(|w| w[0] == w[1])
}

pub(crate) struct Fnv1a(u64);

impl Fnv1a {
    pub(crate) fn new() -> Self {
        Fnv1a(0xcbf2_9ce4_8422_2325)
    }
    pub(crate) fn from_state(h: u64) -> Self {
        Fnv1a(h)
    }
    pub(crate) fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    pub(crate) fn write_i64(&mut self, x: i64) {
        self.write(&x.to_le_bytes());
    }
    pub(crate) fn finish(&self) -> u64 {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RhoBreakdown {
    pub initial_ramification: i64,
    pub exceptional_defect: i64,
    pub missing_delta: i64,
    /// Σ b^N_j − C(r+1, 2); with the other three it sums to ρ exactly.
    pub final_ramification: i64,
    /// initial + exceptional + missing.
    pub total: i64,
}

/// λ_{i,j} for i = 0..=N together with δ_i and the sorted variant λ̄.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LambdaSequence {
    pub lambda: Vec<Vec<i32>>,
    /// Indexed by column i = 1..=N; entry 0 is unused and always `None`.
    pub delta: Vec<Option<usize>>,
    pub bar_lambda: Vec<Vec<i32>>,
}

impl LambdaSequence {
    pub fn new(t: &VanishingTable) -> Self {
        let n = t.n();
        let rows = t.rows();
        let mut lambda = Vec::with_capacity(n + 1);
        let mut bar_lambda = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let g = t.chain().genus_prefix(i) as i32;
            let next: Vec<i32> = (0..rows).map(|j| t.a_at(i + 1, j)).collect();
            lambda.push((0..rows).map(|j| g + j as i32 - next[j]).collect());
            let mut sorted = next;
            sorted.sort_unstable();
            bar_lambda.push((0..rows).map(|j| g + j as i32 - sorted[j]).collect());
        }
        let mut delta = vec![None];
        delta.extend((1..=n).map(|i| t.delta(i)));
        LambdaSequence { lambda, delta, bar_lambda }
    }

    /// λ̄_i^ℓ = #{j : λ̄_{i,j} ≥ ℓ}.
    pub fn bar_count(&self, i: usize, l: i32) -> usize {
        self.bar_lambda[i].iter().filter(|&&x| x >= l).count()
    }

    /// λ̄_i^p + λ̄_i^q.
    pub fn bar_pair(&self, i: usize, p: i32, q: i32) -> usize {
        self.bar_count(i, p) + self.bar_count(i, q)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Swap {
    pub column: usize,
    pub rows: (usize, usize),
    pub minimal: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "class")]
pub enum DegeneracyClass {
    NoSwap,
    Single { i0: usize, rows: (usize, usize) },
    Repeated { j0: usize, i0: usize, i1: usize },
    Disjoint { first: (usize, usize), second: (usize, usize) },
    Cycle1 { j0: usize, i0: usize, i1: usize },
    Cycle2 { j0: usize, i0: usize, i1: usize },
    Other,
}

impl DegeneracyClass {
    pub fn name(&self) -> &'static str {
        match self {
            DegeneracyClass::NoSwap => "NoSwap",
            DegeneracyClass::Single { .. } => "Single",
            DegeneracyClass::Repeated { .. } => "Repeated",
            DegeneracyClass::Disjoint { .. } => "Disjoint",
            DegeneracyClass::Cycle1 { .. } => "Cycle1",
            DegeneracyClass::Cycle2 { .. } => "Cycle2",
            DegeneracyClass::Other => "Other",
        }
    }

    pub const NAMES: [&'static str; 7] = ["NoSwap", "Single", "Repeated", "Disjoint", "Cycle1", "Cycle2", "Other"];
}

/// Classifies a swap list; pairs are (j, j′) with j < j′.
pub fn classify_swaps(swaps: &[Swap]) -> DegeneracyClass {
    match swaps {
        [] => DegeneracyClass::NoSwap,
        [s] => DegeneracyClass::Single { i0: s.column, rows: s.rows },
        [s, t] => {
            let (s, t) = if s.column <= t.column { (s, t) } else { (t, s) };
            if s.column == t.column {
                return DegeneracyClass::Other;
            }
            let (i0, i1) = (s.column, t.column);
            let (p0, q0) = s.rows;
            let (p1, q1) = t.rows;
            if s.rows == t.rows && q0 == p0 + 1 {
                return DegeneracyClass::Repeated { j0: q0, i0, i1 };
            }
            let disjoint = p0 != p1 && p0 != q1 && q0 != p1 && q0 != q1;
            if disjoint {
                if q0 == p0 + 1 && q1 == p1 + 1 {
                    return DegeneracyClass::Disjoint { first: (q0, i0), second: (q1, i1) };
                }
                return DegeneracyClass::Other;
            }
            // second swap between j0-1 and j0+1
            if q1 == p1 + 2 && p1 + 1 >= 1 {
                let j0 = p1 + 1;
                if s.rows == (j0, j0 + 1) {
                    return DegeneracyClass::Cycle1 { j0, i0, i1 };
                }
                if s.rows == (j0 - 1, j0) {
                    return DegeneracyClass::Cycle2 { j0, i0, i1 };
                }
            }
            DegeneracyClass::Other
        }
        _ => DegeneracyClass::Other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sw(column: usize, a: usize, b: usize) -> Swap {
        Swap { column, rows: (a, b), minimal: true }
    }

    #[test]
    fn classification_patterns() {
        assert_eq!(classify_swaps(&[]), DegeneracyClass::NoSwap);
        assert_eq!(classify_swaps(&[sw(3, 1, 2), sw(7, 1, 2)]), DegeneracyClass::Repeated { j0: 2, i0: 3, i1: 7 });
        assert_eq!(
            classify_swaps(&[sw(3, 1, 2), sw(7, 4, 5)]),
            DegeneracyClass::Disjoint { first: (2, 3), second: (5, 7) }
        );
        assert_eq!(classify_swaps(&[sw(3, 2, 3), sw(7, 1, 3)]), DegeneracyClass::Cycle1 { j0: 2, i0: 3, i1: 7 });
        assert_eq!(classify_swaps(&[sw(3, 1, 2), sw(7, 1, 3)]), DegeneracyClass::Cycle2 { j0: 2, i0: 3, i1: 7 });
        assert_eq!(classify_swaps(&[sw(7, 1, 3), sw(3, 1, 2)]), DegeneracyClass::Cycle2 { j0: 2, i0: 3, i1: 7 });
        assert_eq!(classify_swaps(&[sw(3, 1, 2), sw(3, 4, 5)]), DegeneracyClass::Other);
        assert_eq!(classify_swaps(&[sw(3, 1, 3), sw(7, 1, 2)]), DegeneracyClass::Other);
    }

    #[test]
    fn rho_formula() {
        assert_eq!(brill_noether_rho(22, 6, 25), 1);
        assert_eq!(brill_noether_rho(21, 6, 24), 0);
        assert_eq!(brill_noether_rho(23, 6, 26), 2);
        assert_eq!(brill_noether_rho(4, 1, 3), 0);
    }
}
