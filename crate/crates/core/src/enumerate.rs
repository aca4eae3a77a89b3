//! Enumeration of refined tables on a pure elliptic chain.
//!
//! A table is determined by a^1 and, for each column, the increments
//! k_{i,j} = a^{i+1}_j − a^i_j = d − a^i_j − b^i_j. A row with k = 0 adds a
//! box (at most one per column); k ≥ 2 is exceptional and costs k − 1; a
//! column without a k = 0 row costs 1. Counts of completions depend only on
//! the column, the set of current positions and the defect used so far, so
//! the search space collapses to a small graph of such states. Walks follow
//! that graph and never enter a branch without completions in the requested
//! stratum.

use std::collections::HashMap;
use std::ops::ControlFlow;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain::ChainCurve;
use crate::error::{Error, Result};
use crate::table::{brill_noether_rho, VanishingTable};

/// Largest supported defect budget (swap counts are indexed up to it).
pub const MAX_RHO: usize = 7;
const S: usize = MAX_RHO + 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Params {
    pub g: usize,
    pub r: usize,
    pub d: i32,
    pub rho_max: usize,
}

impl Params {
    pub fn new(g: usize, r: usize, d: i32, rho_max: Option<usize>) -> Result<Self> {
        if g == 0 {
            return Err(Error::Infeasible("genus must be positive".into()));
        }
        let rho = brill_noether_rho(g as i64, r as i64, d as i64);
        if rho < 0 {
            return Err(Error::Infeasible(format!("rho = {} is negative for (g,r,d) = ({},{},{})", rho, g, r, d)));
        }
        let rho_max = rho_max.unwrap_or(rho as usize);
        if rho_max as i64 > rho {
            return Err(Error::Infeasible(format!("rho_max {} exceeds rho = {}", rho_max, rho)));
        }
        if rho_max > MAX_RHO {
            return Err(Error::TooLarge(format!("rho_max {} exceeds supported {}", rho_max, MAX_RHO)));
        }
        Ok(Params { g, r, d, rho_max })
    }

    pub fn rho(&self) -> i64 {
        brill_noether_rho(self.g as i64, self.r as i64, self.d as i64)
    }
}

/// Completion counts indexed by the number of swaps still to occur.
pub type Counts = [u64; S];

/// Which total swap counts to keep.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapFilter(pub Vec<usize>);

impl SwapFilter {
    pub fn all(rho_max: usize) -> Self {
        SwapFilter((0..=rho_max).collect())
    }
    pub fn only(s: usize) -> Self {
        SwapFilter(vec![s])
    }
    #[inline]
    pub fn weight(&self, counts: &Counts, swaps_so_far: usize) -> u64 {
        self.0.iter().filter(|&&s| s >= swaps_so_far && s - swaps_so_far < S).map(|&s| counts[s - swaps_so_far]).sum()
    }
}

/// Canonical state: column, sorted positions, defect used.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Key {
    col: u16,
    used: u8,
    pos: Vec<i32>,
}

struct Node {
    col: usize,
    used: usize,
    first_edge: u32,
    edge_count: u32,
    counts: Counts,
}

/// Exact completion counts for every reachable state and the moves between
/// them. Increments on edges are stored by rank (rows sorted by current
/// position), so one edge list serves every labeling of the same state.
pub struct Enumerator {
    params: Params,
    chain: Arc<ChainCurve>,
    rows: usize,
    nodes: Vec<Node>,
    edge_k: Vec<i8>,
    edge_cost: Vec<u8>,
    edge_swaps: Vec<u8>,
    edge_child: Vec<u32>,
    /// (a^1, root node) pairs in lexicographic order of a^1.
    starts: Vec<(Vec<i32>, u32)>,
}

impl Enumerator {
    pub fn new(params: Params) -> Result<Self> {
        let chain = Arc::new(ChainCurve::elliptic(params.g)?);
        let rows = params.r + 1;
        let mut e = Enumerator {
            params,
            chain,
            rows,
            nodes: Vec::new(),
            edge_k: Vec::new(),
            edge_cost: Vec::new(),
            edge_swaps: Vec::new(),
            edge_child: Vec::new(),
            starts: Vec::new(),
        };
        let mut index: HashMap<Key, u32> = HashMap::new();
        let starts = e.initial_sequences();
        for (a1, used) in starts {
            let id = e.build(0, a1.clone(), used, &mut index);
            e.starts.push((a1, id));
        }
        Ok(e)
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn chain(&self) -> &Arc<ChainCurve> {
        &self.chain
    }

    pub fn state_count(&self) -> usize {
        self.nodes.len()
    }

    /// Strictly increasing a^1 ≥ 0 with Σ(a^1_j − j) ≤ rho_max, in
    /// lexicographic order, with that initial cost.
    fn initial_sequences(&self) -> Vec<(Vec<i32>, usize)> {
        fn rec(e: &Enumerator, cur: &mut Vec<i32>, cost: usize, out: &mut Vec<(Vec<i32>, usize)>) {
            let j = cur.len();
            if j == e.rows {
                out.push((cur.clone(), cost));
                return;
            }
            let mut v = cur.last().map_or(0, |&x| x + 1);
            loop {
                let step = (v - j as i32) as usize;
                // every later row sits at least this far above its index
                if cost + step * (e.rows - j) > e.params.rho_max || v > e.params.d {
                    break;
                }
                cur.push(v);
                rec(e, cur, cost + step, out);
                cur.pop();
                v += 1;
            }
        }
        let mut out = Vec::new();
        rec(self, &mut Vec::with_capacity(self.rows), 0, &mut out);
        out
    }

    /// Moves out of sorted positions `pos` before column `i` (1-based):
    /// increment vectors in lexicographic order, with cost and swap count.
    fn moves(&self, i: usize, pos: &[i32], budget: usize) -> Vec<(Vec<i8>, usize, usize)> {
        let n = self.params.g;
        let d = self.params.d;
        let remaining = (n - i) as i32;
        let mut out = Vec::new();
        let mut k = vec![0i8; self.rows];
        let mut newpos = vec![0i32; self.rows];
        #[allow(clippy::too_many_arguments)]
        fn rec(
            e: &Enumerator,
            j: usize,
            pos: &[i32],
            budget: usize,
            has_zero: bool,
            cost: usize,
            k: &mut Vec<i8>,
            newpos: &mut Vec<i32>,
            out: &mut Vec<(Vec<i8>, usize, usize)>,
        ) {
            if j == e.rows {
                let total = cost + usize::from(!has_zero);
                if total <= budget {
                    out.push((k.clone(), total, 0));
                }
                return;
            }
            for kj in 0..=1 + budget as i32 {
                if kj == 0 && has_zero {
                    continue;
                }
                let c = cost + (kj - 1).max(0) as usize;
                if c > budget {
                    break;
                }
                let p = pos[j] + kj;
                if newpos[..j].contains(&p) {
                    continue;
                }
                k[j] = kj as i8;
                newpos[j] = p;
                rec(e, j + 1, pos, budget, has_zero || kj == 0, c, k, newpos, out);
            }
        }
        rec(self, 0, pos, budget, false, 0, &mut k, &mut newpos, &mut out);
        out.retain(|(k, _, _)| {
            // each later column raises every row but at most one
            let np = pos.iter().zip(k).map(|(&p, &x)| p + x as i32);
            let mut need = 0;
            for p in np {
                if p > d {
                    return false;
                }
                need += (p + remaining - d).max(0);
            }
            need <= remaining
        });
        for m in &mut out {
            let mut s = 0;
            for a in 0..self.rows {
                for b in a + 1..self.rows {
                    if pos[a] + m.0[a] as i32 > pos[b] + m.0[b] as i32 {
                        s += 1;
                    }
                }
            }
            m.2 = s;
        }
        out
    }

    /// Builds (or finds) the node for sorted positions `pos` after column
    /// `col`, returning its id.
    fn build(&mut self, col: usize, mut pos: Vec<i32>, used: usize, index: &mut HashMap<Key, u32>) -> u32 {
        pos.sort_unstable();
        let key = Key { col: col as u16, used: used as u8, pos };
        if let Some(&id) = index.get(&key) {
            return id;
        }
        let pos = key.pos.clone();
        let mut counts = [0u64; S];
        let mut edges = Vec::new();
        if col == self.params.g {
            counts[0] = 1;
        } else {
            for (k, cost, swaps) in self.moves(col + 1, &pos, self.params.rho_max - used) {
                let np: Vec<i32> = pos.iter().zip(&k).map(|(&p, &x)| p + x as i32).collect();
                let child = self.build(col + 1, np, used + cost, index);
                let cc = self.nodes[child as usize].counts;
                if cc.iter().all(|&x| x == 0) {
                    continue;
                }
                for s in 0..S - swaps {
                    counts[s + swaps] += cc[s];
                }
                edges.push((k, cost, swaps, child));
            }
        }
        let first_edge = self.edge_child.len() as u32;
        let edge_count = edges.len() as u32;
        for (k, cost, swaps, child) in edges {
            self.edge_k.extend_from_slice(&k);
            self.edge_cost.push(cost as u8);
            self.edge_swaps.push(swaps as u8);
            self.edge_child.push(child);
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(Node { col, used, first_edge, edge_count, counts });
        index.insert(key, id);
        id
    }

    /// Number of tables, indexed by swap count (entries beyond rho_max are 0).
    pub fn total_counts(&self) -> Counts {
        let mut total = [0u64; S];
        for (_, id) in &self.starts {
            let c = &self.nodes[*id as usize].counts;
            for s in 0..S {
                total[s] += c[s];
            }
        }
        total
    }

    pub fn total(&self, filter: &SwapFilter) -> u64 {
        filter.weight(&self.total_counts(), 0)
    }

    /// Rank of each labeled row among the positions `cur`.
    #[inline]
    fn ranks(cur: &[i32], out: &mut [u8]) {
        for (j, r) in out.iter_mut().enumerate() {
            *r = cur.iter().filter(|&&p| p < cur[j]).count() as u8;
        }
    }

    /// Applies edge `e` to labeled positions `cur` with ranks `rank`.
    #[inline]
    fn apply(&self, e: usize, cur: &[i32], rank: &[u8], next: &mut [i32]) {
        let k = &self.edge_k[e * self.rows..(e + 1) * self.rows];
        for j in 0..self.rows {
            next[j] = cur[j] + k[rank[j] as usize] as i32;
        }
    }

    fn table_from_flat(&self, flat: &[i32]) -> VanishingTable {
        VanishingTable::from_flat_a_sequence(self.chain.clone(), self.params.r, self.params.d, flat)
    }

    /// Prefixes at `depth` (a^1 plus depth−1 columns) having completions in
    /// the stratum, in canonical order.
    pub fn work_units(&self, filter: &SwapFilter, depth: usize) -> Vec<WorkUnit> {
        let depth = depth.clamp(1, self.params.g + 1);
        let mut out = Vec::new();
        for (si, (a1, id)) in self.starts.iter().enumerate() {
            if filter.weight(&self.nodes[*id as usize].counts, 0) == 0 {
                continue;
            }
            let mut unit = WorkUnit { prefix: vec![si as u32], path: vec![a1.clone()], swaps: 0, node: *id };
            self.units_rec(filter, depth, &mut unit, &mut out);
        }
        out
    }

    /// Number of tables in the stratum below `unit`.
    pub fn unit_weight(&self, unit: &WorkUnit, filter: &SwapFilter) -> u64 {
        filter.weight(&self.nodes[unit.node as usize].counts, unit.swaps)
    }

    /// Subtrees holding at most `max_weight` tables each, split no deeper
    /// than single tables, in canonical order.
    pub fn work_units_bounded(&self, filter: &SwapFilter, max_weight: u64) -> Vec<WorkUnit> {
        let mut out = Vec::new();
        let mut stack: Vec<WorkUnit> = self.work_units(filter, 1);
        stack.reverse();
        while let Some(unit) = stack.pop() {
            if unit.path.len() == self.params.g + 1 || self.unit_weight(&unit, filter) <= max_weight {
                out.push(unit);
                continue;
            }
            let mut children = Vec::new();
            let mut u = unit.clone();
            self.units_rec(filter, unit.path.len() + 1, &mut u, &mut children);
            stack.extend(children.into_iter().rev());
        }
        out
    }

    fn units_rec(&self, filter: &SwapFilter, depth: usize, unit: &mut WorkUnit, out: &mut Vec<WorkUnit>) {
        if unit.path.len() == depth {
            out.push(unit.clone());
            return;
        }
        let node = &self.nodes[unit.node as usize];
        let cur = unit.path.last().unwrap().clone();
        let mut rank = vec![0u8; self.rows];
        Self::ranks(&cur, &mut rank);
        let mut next = vec![0; self.rows];
        for e in node.first_edge..node.first_edge + node.edge_count {
            let e = e as usize;
            let child = self.edge_child[e];
            let s = unit.swaps + self.edge_swaps[e] as usize;
            if filter.weight(&self.nodes[child as usize].counts, s) == 0 {
                continue;
            }
            self.apply(e, &cur, &rank, &mut next);
            let saved = (unit.node, unit.swaps);
            unit.path.push(next.clone());
            unit.prefix.push(e as u32 - node.first_edge);
            unit.node = child;
            unit.swaps = s;
            self.units_rec(filter, depth, unit, out);
            unit.node = saved.0;
            unit.swaps = saved.1;
            unit.prefix.pop();
            unit.path.pop();
        }
    }

    /// Calls `f` on every table below the unit, in canonical order, until it
    /// breaks.
    pub fn for_each_in_unit(
        &self,
        unit: &WorkUnit,
        filter: &SwapFilter,
        f: &mut dyn FnMut(VanishingTable) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        let rows = self.rows;
        let mut flat = vec![0i32; (self.params.g + 1) * rows];
        for (c, p) in unit.path.iter().enumerate() {
            flat[c * rows..(c + 1) * rows].copy_from_slice(p);
        }
        self.walk(filter, unit.path.len(), unit.node, unit.swaps, &mut flat, f)
    }

    fn walk(
        &self,
        filter: &SwapFilter,
        depth: usize,
        node: u32,
        swaps: usize,
        flat: &mut Vec<i32>,
        f: &mut dyn FnMut(VanishingTable) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        let rows = self.rows;
        if depth == self.params.g + 1 {
            return f(self.table_from_flat(flat));
        }
        let mut rank = [0u8; 32];
        let rank = &mut rank[..rows];
        Self::ranks(&flat[(depth - 1) * rows..depth * rows], rank);
        let nd = &self.nodes[node as usize];
        for e in nd.first_edge..nd.first_edge + nd.edge_count {
            let e = e as usize;
            let child = self.edge_child[e];
            let s = swaps + self.edge_swaps[e] as usize;
            if filter.weight(&self.nodes[child as usize].counts, s) == 0 {
                continue;
            }
            let (head, tail) = flat.split_at_mut(depth * rows);
            self.apply(e, &head[(depth - 1) * rows..], rank, &mut tail[..rows]);
            self.walk(filter, depth + 1, child, s, flat, f)?;
        }
        ControlFlow::Continue(())
    }

    /// All tables in the stratum, in canonical order, until `f` breaks.
    pub fn for_each(
        &self,
        filter: &SwapFilter,
        f: &mut dyn FnMut(VanishingTable) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        for unit in self.work_units(filter, 1) {
            self.for_each_in_unit(&unit, filter, f)?;
        }
        ControlFlow::Continue(())
    }

    /// Uniform draw from the stratum. Draw `index` under `seed` does not
    /// depend on any other draw.
    pub fn sample(&self, filter: &SwapFilter, seed: u64, index: u64) -> Option<VanishingTable> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let rows = self.rows;
        let weights: Vec<u64> =
            self.starts.iter().map(|(_, id)| filter.weight(&self.nodes[*id as usize].counts, 0)).collect();
        let k = pick(&mut rng, &weights)?;
        let (a1, mut node) = self.starts[k].clone();
        let mut flat = vec![0i32; (self.params.g + 1) * rows];
        flat[..rows].copy_from_slice(&a1);
        let mut swaps = 0;
        let mut weights = Vec::new();
        for depth in 1..=self.params.g {
            let nd = &self.nodes[node as usize];
            let range = nd.first_edge as usize..(nd.first_edge + nd.edge_count) as usize;
            weights.clear();
            weights.extend(range.clone().map(|e| {
                filter.weight(&self.nodes[self.edge_child[e] as usize].counts, swaps + self.edge_swaps[e] as usize)
            }));
            let e = range.start + pick(&mut rng, &weights)?;
            let (head, tail) = flat.split_at_mut(depth * rows);
            let cur = &head[(depth - 1) * rows..];
            let mut rank = vec![0u8; rows];
            Self::ranks(cur, &mut rank);
            self.apply(e, cur, &rank, &mut tail[..rows]);
            swaps += self.edge_swaps[e] as usize;
            node = self.edge_child[e];
        }
        debug_assert_eq!(self.nodes[node as usize].col, self.params.g);
        let _ = self.nodes[node as usize].used;
        Some(self.table_from_flat(&flat))
    }
}

fn pick(rng: &mut ChaCha8Rng, weights: &[u64]) -> Option<usize> {
    let total: u64 = weights.iter().sum();
    if total == 0 {
        return None;
    }
    let mut x = rng.gen_range(0..total);
    for (k, &w) in weights.iter().enumerate() {
        if x < w {
            return Some(k);
        }
        x -= w;
    }
    unreachable!()
}

/// A subtree of the search: the a-sequences fixed so far.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkUnit {
    /// Child indices from the root.
    pub prefix: Vec<u32>,
    pub path: Vec<Vec<i32>>,
    pub swaps: usize,
    #[serde(skip)]
    node: u32,
}

/// Brute-force count with no pruning beyond the per-row increment bound
/// k ≤ 1 + rho_max: every combination is built as a table and checked.
pub fn count_small_oracle(g: usize, r: usize, d: i32, rho_max: usize) -> Result<u64> {
    let rows = r + 1;
    let kmax = 1 + rho_max as i32;
    let space = ((kmax as f64 + 1.0).powi(rows as i32)).powi(g as i32);
    if space > 1e7 {
        return Err(Error::TooLarge(format!("about {:.0} increment vectors", space)));
    }
    let chain = Arc::new(ChainCurve::elliptic(g)?);
    let mut starts = Vec::new();
    fn rec(j: usize, rows: usize, lo: i32, hi: i32, cur: &mut Vec<i32>, out: &mut Vec<Vec<i32>>) {
        if j == rows {
            out.push(cur.clone());
            return;
        }
        for v in lo..=hi {
            cur[j] = v;
            rec(j + 1, rows, v + 1, hi, cur, out);
        }
    }
    rec(0, rows, 0, r as i32 + rho_max as i32, &mut vec![0; rows], &mut starts);
    let cells = g * rows;
    let mut count = 0u64;
    for a1 in starts {
        let mut ks = vec![0i32; cells];
        loop {
            let mut flat = a1.clone();
            for i in 0..g {
                for j in 0..rows {
                    let prev = flat[i * rows + j];
                    flat.push(prev + ks[i * rows + j]);
                }
            }
            let t = VanishingTable::from_flat_a_sequence(chain.clone(), r, d, &flat);
            if t.validate().is_ok() && t.rho_accounting().is_ok_and(|b| b.total <= rho_max as i64) {
                count += 1;
            }
            let mut p = 0;
            while p < cells {
                ks[p] += 1;
                if ks[p] <= kmax {
                    break;
                }
                ks[p] = 0;
                p += 1;
            }
            if p == cells {
                break;
            }
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_counts() {
        let e = Enumerator::new(Params::new(4, 1, 3, None).unwrap()).unwrap();
        assert_eq!(e.total(&SwapFilter::all(0)), 2);
        let e = Enumerator::new(Params::new(6, 1, 4, None).unwrap()).unwrap();
        assert_eq!(e.total(&SwapFilter::all(0)), 5);
    }

    #[test]
    fn infeasible_parameters() {
        assert!(Params::new(5, 1, 2, None).is_err());
        assert!(Params::new(4, 1, 3, Some(1)).is_err());
    }
}
