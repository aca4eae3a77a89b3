use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::chain::ChainCurve;
use crate::error::{Error, Result};
use crate::table::{LambdaSequence, VanishingTable};

/// w = (c_2, …, c_N) with c_1 = 0 and c_{N+1} = D; the multidegree places
/// c_{i+1} − c_i on Z_i.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TwistVector {
    #[serde(rename = "D")]
    total: i64,
    c: Vec<i64>,
}

impl TwistVector {
    pub fn new(total: i64, c: Vec<i64>) -> Result<Self> {
        if total < 0 {
            return Err(Error::InvalidTwist("total degree must be nonnegative".into()));
        }
        if let Some(p) = c.iter().position(|&x| x < 0 || x > total) {
            return Err(Error::InvalidTwist(format!("c_{} = {} lies outside [0, {}]", p + 2, c[p], total)));
        }
        Ok(TwistVector { total, c })
    }

    /// Inverse of [`component_degrees`](Self::component_degrees).
    pub fn from_degrees(degrees: &[i64]) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::InvalidTwist("no components".into()));
        }
        let total: i64 = degrees.iter().sum();
        let mut c = Vec::with_capacity(degrees.len() - 1);
        let mut acc = 0;
        for &x in &degrees[..degrees.len() - 1] {
            acc += x;
            c.push(acc);
        }
        Self::new(total, c)
    }

    pub fn total(&self) -> i64 {
        self.total
    }

    /// (c_2, …, c_N).
    pub fn c(&self) -> &[i64] {
        &self.c
    }

    /// Number of components N.
    pub fn n(&self) -> usize {
        self.c.len() + 1
    }

    /// c_i for i in 1..=N+1.
    #[inline]
    pub fn c_at(&self, i: usize) -> i64 {
        if i == 1 {
            0
        } else if i == self.c.len() + 2 {
            self.total
        } else {
            self.c[i - 2]
        }
    }

    pub fn component_degrees(&self) -> Vec<i64> {
        (1..=self.n()).map(|i| self.c_at(i + 1) - self.c_at(i)).collect()
    }

    pub fn degree(&self, i: usize) -> i64 {
        self.c_at(i + 1) - self.c_at(i)
    }

    pub fn check_chain(&self, chain: &ChainCurve) -> Result<()> {
        if self.n() != chain.len() {
            return Err(Error::InvalidTwist(format!(
                "twist vector has {} components, chain has {}",
                self.n(),
                chain.len()
            )));
        }
        Ok(())
    }

    /// Total 2d, degree 0 on genus-0 and 2 or 3 on genus-1 components.
    pub fn is_unimaginative(&self, chain: &ChainCurve, d: i64) -> bool {
        self.n() == chain.len()
            && self.total == 2 * d
            && (1..=self.n()).all(|i| {
                let deg = self.degree(i);
                if chain.genus_of(i) == 1 {
                    deg == 2 || deg == 3
                } else {
                    deg == 0
                }
            })
    }

    /// γ_i: number of degree-3 components among Z_1..Z_i.
    pub fn gamma_profile(&self, chain: &ChainCurve) -> Result<Vec<usize>> {
        self.check_chain(chain)?;
        let mut out = Vec::with_capacity(self.n());
        let mut g = 0;
        for i in 1..=self.n() {
            let deg = self.degree(i);
            let ok = if chain.genus_of(i) == 1 { deg == 2 || deg == 3 } else { deg == 0 };
            if !ok {
                return Err(Error::InvalidTwist(format!("degree {} on component {} is not unimaginative", deg, i)));
            }
            if deg == 3 {
                g += 1;
            }
            out.push(g);
        }
        Ok(out)
    }

    /// Columns carrying degree 3.
    pub fn three_columns(&self) -> Vec<usize> {
        (1..=self.n()).filter(|&i| self.degree(i) == 3).collect()
    }

    /// Unimaginative vector with degree 3 exactly at `threes`.
    pub fn unimaginative(chain: &ChainCurve, d: i64, threes: &[usize]) -> Result<Self> {
        let mut deg: Vec<i64> = chain.genera().iter().map(|&g| 2 * g as i64).collect();
        for &t in threes {
            if t == 0 || t > chain.len() || chain.genus_of(t) != 1 || deg[t - 1] != 2 {
                return Err(Error::InvalidTwist(format!("cannot place degree 3 at column {}", t)));
            }
            deg[t - 1] = 3;
        }
        let w = Self::from_degrees(&deg)?;
        if w.total != 2 * d {
            return Err(Error::InvalidTwist(format!("degree-3 placement gives total {}, expected {}", w.total, 2 * d)));
        }
        Ok(w)
    }
}

/// Components where the twist map from md(w) to md(w′) vanishes identically:
/// i such that Σ_{j>i} (c′_j − c_j) exceeds its minimum over all i.
pub fn twist_vanishing_components(w: &TwistVector, w2: &TwistVector) -> Result<BTreeSet<usize>> {
    if w.n() != w2.n() || w.total != w2.total {
        return Err(Error::InvalidTwist("twist vectors differ in length or total degree".into()));
    }
    let n = w.n();
    let mut s = vec![0i64; n + 1];
    for i in (1..n).rev() {
        s[i] = s[i + 1] + (w2.c_at(i + 1) - w.c_at(i + 1));
    }
    let min = s[1..=n].iter().copied().min().unwrap();
    Ok((1..=n).filter(|&i| s[i] > min).collect())
}

/// The six default degree-3 columns, in rule order.
pub fn default_three_positions(t: &VanishingTable, ls: &LambdaSequence) -> Result<[usize; 6]> {
    if t.r() != 6 {
        return Err(Error::DefaultUndefined(format!("requires r = 6, got r = {}", t.r())));
    }
    let n = t.n();
    let first = |p: i32, q: i32, v: usize| (1..=n).find(|&i| ls.bar_pair(i, p, q) == v);
    let last = |p: i32, q: i32, v: usize| (1..=n).rev().find(|&i| ls.bar_pair(i, p, q) == v);
    let missing = |what: &str| Error::DefaultUndefined(format!("threshold {} never attained", what));
    let p2 = first(1, 2, 5).ok_or_else(|| missing("λ̄^1+λ̄^2=5"))?;
    let p3 = first(1, 3, 7).ok_or_else(|| missing("λ̄^1+λ̄^3=7"))?;
    let p4 = last(1, 3, 7).ok_or_else(|| missing("λ̄^1+λ̄^3=7"))? + 1;
    let p5 = last(2, 3, 9).ok_or_else(|| missing("λ̄^2+λ̄^3=9"))? + 1;
    let pos = [1, p2, p3, p4, p5, n];
    for (k, &p) in pos.iter().enumerate() {
        if p > n || t.chain().genus_of(p) != 1 {
            return Err(Error::DefaultUndefined(format!(
                "rule {} places a 3 at column {} outside the genus-1 columns",
                k + 1,
                p
            )));
        }
    }
    let distinct: BTreeSet<usize> = pos.iter().copied().collect();
    if distinct.len() != 6 {
        return Err(Error::DefaultUndefined(format!("degree-3 columns collide: {:?}", pos)));
    }
    Ok(pos)
}

pub fn default_multidegree(t: &VanishingTable) -> Result<TwistVector> {
    let ls = t.lambda_sequence();
    let pos = default_three_positions(t, &ls)?;
    TwistVector::unimaginative(t.chain(), t.d() as i64, &pos)
}

/// For each of the six degree-3 rules, the columns where that 3 may sit.
pub fn flexibility_windows(t: &VanishingTable, ls: &LambdaSequence) -> [Vec<usize>; 6] {
    let n = t.n();
    let chain = t.chain();
    let g1 = |i: usize| chain.genus_of(i) == 1;
    let s = |i: usize, p: i32, q: i32| ls.bar_pair(i, p, q);
    let first = |p: i32, q: i32, v: usize| (1..=n).find(|&i| s(i, p, q) == v);
    let last = |p: i32, q: i32, v: usize| (1..=n).rev().find(|&i| s(i, p, q) == v);
    let range = |lo: Option<usize>, hi: Option<usize>| -> Vec<usize> {
        match (lo, hi) {
            (Some(lo), Some(hi)) => (lo.max(1)..=hi.min(n)).filter(|&i| g1(i)).collect(),
            _ => Vec::new(),
        }
    };

    let w1: Vec<usize> = (1..=n)
        .filter(|&i| i == 1 || (g1(i) && !t.column_has_exceptional(i) && s(i, 1, 2) <= 4 && ls.bar_lambda[i][0] <= 2))
        .collect();
    let w2: Vec<usize> = (1..=n).filter(|&i| g1(i) && s(i, 1, 2) == 5 && s(i - 1, 1, 2) == 4).collect();
    let w3 = range(first(1, 2, 6), first(1, 3, 7));
    let w4 = range(last(1, 3, 7).map(|x| x + 1), last(2, 3, 8).map(|x| x + 1));
    let w5: Vec<usize> = (1..=n).filter(|&i| g1(i) && s(i, 2, 3) == 10 && s(i - 1, 2, 3) == 9).collect();
    let w6: Vec<usize> = (1..=n)
        .filter(|&i| {
            i == n || (g1(i) && !t.column_has_exceptional(i) && s(i - 1, 2, 3) >= 10 && ls.bar_lambda[i - 1][6] >= 1)
        })
        .collect();
    [w1, w2, w3, w4, w5, w6]
}

/// Candidate multidegrees in search order: the default, then single
/// relocations of one 3 within its window (by target column), then moves
/// of a 3 onto the swap columns. Empty if the default is undefined.
pub fn candidate_multidegrees(t: &VanishingTable) -> Vec<TwistVector> {
    let ls = t.lambda_sequence();
    let Ok(pos) = default_three_positions(t, &ls) else {
        return Vec::new();
    };
    let d = t.d() as i64;
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut out = Vec::new();
    let mut push = |threes: Vec<usize>, out: &mut Vec<TwistVector>| {
        let mut key = threes.clone();
        key.sort_unstable();
        key.dedup();
        if key.len() != threes.len() || seen.contains(&key) {
            return;
        }
        if let Ok(w) = TwistVector::unimaginative(t.chain(), d, &key) {
            seen.insert(key);
            out.push(w);
        }
    };
    push(pos.to_vec(), &mut out);

    let windows = flexibility_windows(t, &ls);
    let mut moves: Vec<(usize, usize)> = Vec::new();
    for (k, win) in windows.iter().enumerate() {
        for &col in win {
            if col != pos[k] {
                moves.push((col, k));
            }
        }
    }
    moves.sort_unstable();
    for (col, k) in moves {
        let mut p = pos.to_vec();
        p[k] = col;
        push(p, &mut out);
    }

    let mut swap_cols: Vec<usize> = t.find_swaps().iter().map(|s| s.column).collect();
    swap_cols.sort_unstable();
    swap_cols.dedup();
    let mut sorted = pos;
    sorted.sort_unstable();
    for &sc in &swap_cols {
        if sorted.contains(&sc) {
            continue;
        }
        if let Some(k) = sorted.iter().rposition(|&p| p < sc) {
            let mut p = sorted.to_vec();
            p[k] = sc;
            push(p, &mut out);
        }
        if let Some(k) = sorted.iter().position(|&p| p > sc) {
            let mut p = sorted.to_vec();
            p[k] = sc;
            push(p, &mut out);
        }
    }
    if swap_cols.len() == 2 {
        let (i0, i1) = (swap_cols[0], swap_cols[1]);
        let mut p = sorted.to_vec();
        p[2] = i0;
        p[3] = i1;
        push(p, &mut out);
        if let Some(f) = (1..=t.n()).find(|&i| ls.bar_pair(i, 2, 3) == 9) {
            let mut p = sorted.to_vec();
            p[3] = f;
            p[2] = i0;
            push(p, &mut out);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degrees_from_twist() {
        let w = TwistVector::new(4, vec![1, 2]).unwrap();
        assert_eq!(w.component_degrees(), vec![1, 1, 2]);
        let z = TwistVector::new(7, vec![0, 0, 0]).unwrap();
        assert_eq!(z.component_degrees(), vec![0, 0, 0, 7]);
        assert!(TwistVector::new(4, vec![5, 2]).is_err());
        assert_eq!(TwistVector::from_degrees(&[1, 1, 2]).unwrap(), w);
    }

    #[test]
    fn vanishing_components_small() {
        let w = TwistVector::new(4, vec![1, 2]).unwrap();
        let w2 = TwistVector::new(4, vec![2, 2]).unwrap();
        assert!(twist_vanishing_components(&w, &w).unwrap().is_empty());
        assert_eq!(twist_vanishing_components(&w, &w2).unwrap(), BTreeSet::from([1]));
        assert_eq!(twist_vanishing_components(&w2, &w).unwrap(), BTreeSet::from([2, 3]));
    }

    #[test]
    fn all_two_profile_has_wrong_total() {
        let chain = ChainCurve::elliptic(22).unwrap();
        assert!(TwistVector::unimaginative(&chain, 25, &[]).is_err());
    }
}
