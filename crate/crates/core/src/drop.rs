use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multidegree::TwistVector;
use crate::table::VanishingTable;
use crate::tensor::{PotentialSection, TensorTable};

pub const CERTIFICATE_VERSION: u32 = 1;

/// Depth bound for the backtracking fallback.
pub const BACKTRACK_DEPTH: usize = 16;

/// States visited by the restart search when the fallback from the stuck
/// state fails; 2^14 covers every subset of up to 14 sections.
pub const RESTART_BUDGET: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    #[serde(rename = "i")]
    UniqueMinimum,
    #[serde(rename = "ii")]
    AtMostTwo,
    #[serde(rename = "iii")]
    Block,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub rule: Rule,
    pub columns: Vec<usize>,
    pub dropped: Vec<PotentialSection>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropCertificate {
    pub version: u32,
    pub steps: Vec<Step>,
}

impl DropCertificate {
    pub fn blocks(&self) -> Vec<(usize, usize)> {
        self.steps.iter().filter(|s| s.rule == Rule::Block).map(|s| (s.columns[0], s.columns[1])).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum DropOutcome {
    Success {
        certificate: DropCertificate,
        /// True when only the backtracking fallback found an order.
        order_sensitive: bool,
    },
    Failure {
        /// Steps applied before getting stuck.
        partial: DropCertificate,
        remaining: Vec<PotentialSection>,
    },
}

impl DropOutcome {
    pub fn is_success(&self) -> bool {
        matches!(self, DropOutcome::Success { .. })
    }
    pub fn certificate(&self) -> Option<&DropCertificate> {
        match self {
            DropOutcome::Success { certificate, .. } => Some(certificate),
            DropOutcome::Failure { .. } => None,
        }
    }
}

/// Steps as section indices; turned into a certificate only on demand.
#[derive(Default)]
pub(crate) struct Trace {
    steps: Vec<(Rule, u16, u16, u32)>,
    dropped: Vec<u32>,
}

impl Trace {
    fn push(&mut self, rule: Rule, i: usize, ip: usize, ks: &[usize]) {
        self.steps.push((rule, i as u16, ip as u16, self.dropped.len() as u32));
        self.dropped.extend(ks.iter().map(|&k| k as u32));
    }

    pub(crate) fn len(&self) -> usize {
        self.steps.len()
    }

    fn truncate(&mut self, len: usize) {
        if len < self.steps.len() {
            self.dropped.truncate(self.steps[len].3 as usize);
            self.steps.truncate(len);
        }
    }

    pub(crate) fn blocks(&self) -> Vec<(usize, usize)> {
        self.steps.iter().filter(|s| s.0 == Rule::Block).map(|s| (s.1 as usize, s.2 as usize)).collect()
    }

    pub(crate) fn certificate(&self, sections: &[PotentialSection]) -> DropCertificate {
        let steps = self
            .steps
            .iter()
            .enumerate()
            .map(|(n, &(rule, i, ip, from))| {
                let to = self.steps.get(n + 1).map_or(self.dropped.len(), |s| s.3 as usize);
                let columns = if rule == Rule::Block { vec![i as usize, ip as usize] } else { vec![i as usize] };
                let dropped = self.dropped[from as usize..to].iter().map(|&k| sections[k as usize]).collect();
                Step { rule, columns, dropped }
            })
            .collect();
        DropCertificate { version: CERTIFICATE_VERSION, steps }
    }
}

pub(crate) struct DropRun {
    pub(crate) trace: Trace,
    pub(crate) success: bool,
    pub(crate) order_sensitive: bool,
    alive: Vec<bool>,
}

impl DropRun {
    pub(crate) fn remaining(&self, sections: &[PotentialSection]) -> Vec<PotentialSection> {
        (0..sections.len()).filter(|&k| self.alive[k]).map(|k| sections[k]).collect()
    }

    fn into_outcome(self, sections: &[PotentialSection]) -> DropOutcome {
        let certificate = self.trace.certificate(sections);
        if self.success {
            DropOutcome::Success { certificate, order_sensitive: self.order_sensitive }
        } else {
            let remaining = self.remaining(sections);
            DropOutcome::Failure { partial: certificate, remaining }
        }
    }
}

/// A fixed (table, multidegree, section list) on which rules are evaluated
/// against a set of remaining sections.
pub struct DropContext<'a> {
    table: &'a VanishingTable,
    tt: &'a TensorTable,
    sections: Vec<PotentialSection>,
    row_idx: Vec<usize>,
    // sections containing column i: col_items[col_start[i]..col_start[i + 1]]
    col_start: Vec<u32>,
    col_items: Vec<u32>,
    delta: Vec<Option<usize>>,
    delta_row: Vec<Option<usize>>,
    // bit j set when row j is exceptional at column i
    exceptional: Vec<u64>,
    genus1: Vec<bool>,
    // first column at or after m whose degree is not 2
    next_not_deg2: Vec<usize>,
}

type Alive = [bool];

/// Up to two sections picked by rule (ii).
#[derive(Clone, Copy, Debug)]
struct Pair {
    ks: [usize; 2],
    len: usize,
}

impl Pair {
    fn as_slice(&self) -> &[usize] {
        &self.ks[..self.len]
    }
}

/// Per-column data for block search against one set of remaining sections.
#[derive(Clone, Copy, Default)]
struct ColumnInfo {
    count: usize,
    semi: bool,
    critical: bool,
    ends_here: bool,
    starts_here: bool,
}

impl<'a> DropContext<'a> {
    pub fn new(
        table: &'a VanishingTable,
        tt: &'a TensorTable,
        w: &'a TwistVector,
        sections: Vec<PotentialSection>,
    ) -> Self {
        let n = table.n();
        assert!(table.rows() <= 64, "at most 64 rows");
        let row_idx = sections.iter().map(|s| tt.row_index(s.row).expect("row in tensor table")).collect();
        let mut col_start = vec![0u32; n + 3];
        for s in &sections {
            for i in s.start..=s.end {
                col_start[i + 1] += 1;
            }
        }
        for i in 1..col_start.len() {
            col_start[i] += col_start[i - 1];
        }
        let mut fill = col_start.clone();
        let mut col_items = vec![0u32; col_start[n + 2] as usize];
        for (k, s) in sections.iter().enumerate() {
            for i in s.start..=s.end {
                col_items[fill[i] as usize] = k as u32;
                fill[i] += 1;
            }
        }
        let delta: Vec<Option<usize>> = (0..=n).map(|i| if i == 0 { None } else { table.delta(i) }).collect();
        let delta_row = delta.iter().map(|d| d.and_then(|j| tt.row_index((j, j)))).collect();
        let exceptional = (0..=n)
            .map(|i| {
                if i == 0 {
                    return 0;
                }
                (0..table.rows()).filter(|&j| table.is_exceptional(i, j)).fold(0u64, |m, j| m | 1 << j)
            })
            .collect();
        let genus1 = (0..=n).map(|i| i > 0 && table.chain().genus_of(i) == 1).collect();
        let mut next_not_deg2 = vec![n + 1; n + 2];
        for m in (1..=n).rev() {
            next_not_deg2[m] = if w.degree(m) != 2 { m } else { next_not_deg2[m + 1] };
        }
        DropContext {
            table,
            tt,
            sections,
            row_idx,
            col_start,
            col_items,
            delta,
            delta_row,
            exceptional,
            genus1,
            next_not_deg2,
        }
    }

    pub fn sections(&self) -> &[PotentialSection] {
        &self.sections
    }

    pub fn into_sections(self) -> Vec<PotentialSection> {
        self.sections
    }

    fn n(&self) -> usize {
        self.table.n()
    }

    fn alive_in<'b>(&'b self, alive: &'b Alive, i: usize) -> impl Iterator<Item = usize> + 'b {
        self.col_items[self.col_start[i] as usize..self.col_start[i + 1] as usize]
            .iter()
            .map(|&k| k as usize)
            .filter(move |&k| alive[k])
    }

    #[inline]
    fn row_exceptional(&self, i: usize, k: usize) -> bool {
        let (j, jp) = self.sections[k].row;
        self.exceptional[i] & (1 << j | 1 << jp) != 0
    }

    fn count_in(&self, alive: &Alive, i: usize) -> usize {
        self.alive_in(alive, i).count()
    }

    fn a_val(&self, k: usize, i: usize) -> i32 {
        self.tt.a(self.row_idx[k], i)
    }

    fn b_val(&self, k: usize, i: usize) -> i32 {
        self.tt.b(self.row_idx[k], i)
    }

    /// Sections that rule (i) may drop at column i: the unique minimizer of
    /// a, and the unique minimizer of b (a first).
    fn rule_i_candidates(&self, alive: &Alive, i: usize) -> [Option<usize>; 2] {
        let mut best_a = (i32::MAX, None, 0usize);
        let mut best_b = (i32::MAX, None, 0usize);
        for k in self.alive_in(alive, i) {
            let a = self.a_val(k, i);
            if a < best_a.0 {
                best_a = (a, Some(k), 1);
            } else if a == best_a.0 {
                best_a.2 += 1;
            }
            let b = self.b_val(k, i);
            if b < best_b.0 {
                best_b = (b, Some(k), 1);
            } else if b == best_b.0 {
                best_b.2 += 1;
            }
        }
        [if best_a.2 == 1 { best_a.1 } else { None }, if best_b.2 == 1 { best_b.1 } else { None }]
    }

    fn rule_ii(&self, alive: &Alive, i: usize) -> Option<Pair> {
        if !self.genus1[i] {
            return None;
        }
        let mut pair = Pair { ks: [0; 2], len: 0 };
        for k in self.alive_in(alive, i) {
            if pair.len == 2 || self.row_exceptional(i, k) {
                return None;
            }
            pair.ks[pair.len] = k;
            pair.len += 1;
        }
        (pair.len > 0).then_some(pair)
    }

    /// (semicritical, critical) for column i against the remaining sections.
    pub fn criticality(&self, alive: &Alive, i: usize) -> (bool, bool) {
        let Some(delta) = self.delta[i] else {
            return (false, false);
        };
        let mut min_a = i32::MAX;
        let mut min_b = i32::MAX;
        for k in self.alive_in(alive, i) {
            min_a = min_a.min(self.a_val(k, i));
            min_b = min_b.min(self.b_val(k, i));
            let (j, jp) = self.sections[k].row;
            let other = if j == delta {
                Some(jp)
            } else if jp == delta {
                Some(j)
            } else {
                None
            };
            if let Some(o) = other {
                if o != delta && self.exceptional[i] & (1 << o) != 0 {
                    return (false, false);
                }
            }
        }
        if min_a == i32::MAX {
            // no remaining sections, hence no minimal values to compare
            return (false, false);
        }
        let d2 = 2 * self.table.d();
        if min_a + min_b < d2 - 2 {
            return (false, false);
        }
        let dd = self.delta_row[i].expect("diagonal row exists");
        let critical = !(min_a == self.tt.a(dd, i) - 1 && min_b == self.tt.b(dd, i) - 1);
        (true, critical)
    }

    fn rule_iii(&self, alive: &Alive, i: usize, ip: usize) -> Option<Vec<usize>> {
        if self.next_not_deg2[i + 1] < ip {
            return None;
        }
        if self.count_in(alive, i) > 3 || self.count_in(alive, ip) > 3 {
            return None;
        }
        for m in i..ip {
            let span = self.alive_in(alive, m).filter(|&k| self.sections[k].end > m).count();
            if span > 3 {
                return None;
            }
        }
        let (semi_i, crit_i) = self.criticality(alive, i);
        if !semi_i {
            return None;
        }
        let (semi_ip, crit_ip) = self.criticality(alive, ip);
        if !semi_ip {
            return None;
        }
        let left = crit_i && !self.alive_in(alive, i).any(|k| self.sections[k].end == i);
        let right = crit_ip && !self.alive_in(alive, ip).any(|k| self.sections[k].start == ip);
        if !(left || right) {
            return None;
        }
        let dropped: Vec<usize> = (0..self.sections.len())
            .filter(|&k| alive[k] && self.sections[k].start <= ip && self.sections[k].end >= i)
            .collect();
        (!dropped.is_empty()).then_some(dropped)
    }

    fn sweep(&self, alive: &mut [bool], trace: &mut Trace, cols: impl Iterator<Item = usize>) -> bool {
        let mut changed = false;
        for i in cols {
            loop {
                let [ca, cb] = self.rule_i_candidates(alive, i);
                if let Some(k) = ca.or(cb) {
                    alive[k] = false;
                    trace.push(Rule::UniqueMinimum, i, i, &[k]);
                    changed = true;
                    continue;
                }
                if let Some(p) = self.rule_ii(alive, i) {
                    for &k in p.as_slice() {
                        alive[k] = false;
                    }
                    trace.push(Rule::AtMostTwo, i, i, p.as_slice());
                    changed = true;
                    continue;
                }
                break;
            }
        }
        changed
    }

    fn column_info(&self, alive: &Alive, i: usize) -> ColumnInfo {
        let (semi, critical) = self.criticality(alive, i);
        let mut info = ColumnInfo { semi, critical, ..ColumnInfo::default() };
        for k in self.alive_in(alive, i) {
            info.count += 1;
            info.ends_here |= self.sections[k].end == i;
            info.starts_here |= self.sections[k].start == i;
        }
        info
    }

    /// Shortest, then leftmost, block that rule (iii) accepts. Agrees with
    /// [`rule_iii`](Self::rule_iii) but summarizes each column once.
    fn first_block(&self, alive: &Alive) -> Option<(usize, usize, Vec<usize>)> {
        let n = self.n();
        let info: Vec<ColumnInfo> =
            (0..=n).map(|i| if i == 0 { ColumnInfo::default() } else { self.column_info(alive, i) }).collect();
        // first m' ≥ m where more than three remaining sections span m'..m'+1
        let mut next_wide = vec![n + 1; n + 2];
        for m in (1..n).rev() {
            let span = self.alive_in(alive, m).filter(|&k| self.sections[k].end > m).count();
            next_wide[m] = if span > 3 { m } else { next_wide[m + 1] };
        }
        let end_ok = |i: usize| info[i].semi && info[i].count <= 3;
        for len in 2..=n {
            for i in 1..=n + 1 - len {
                let ip = i + len - 1;
                if !end_ok(i) || !end_ok(ip) || self.next_not_deg2[i + 1] < ip || next_wide[i] < ip {
                    continue;
                }
                let left = info[i].critical && !info[i].ends_here;
                let right = info[ip].critical && !info[ip].starts_here;
                if !(left || right) {
                    continue;
                }
                let dropped: Vec<usize> = (0..self.sections.len())
                    .filter(|&k| alive[k] && self.sections[k].start <= ip && self.sections[k].end >= i)
                    .collect();
                debug_assert_eq!(self.rule_iii(alive, i, ip).as_ref(), Some(&dropped));
                return Some((i, ip, dropped));
            }
        }
        None
    }

    /// Canonical elimination: rules (i)/(ii) swept left to right and right to
    /// left until stable, then the shortest (then leftmost) applicable block,
    /// repeated until nothing applies. If sections remain, a depth-bounded
    /// search from the stuck state takes over, then a state-budgeted search
    /// from the start.
    pub fn drop_all(&self) -> DropOutcome {
        self.run().into_outcome(&self.sections)
    }

    pub(crate) fn run(&self) -> DropRun {
        let n = self.n();
        let mut alive = vec![true; self.sections.len()];
        let mut trace = Trace::default();
        loop {
            let a = self.sweep(&mut alive, &mut trace, 1..=n);
            let b = self.sweep(&mut alive, &mut trace, (1..=n).rev());
            if a || b {
                continue;
            }
            if let Some((i, ip, ks)) = self.first_block(&alive) {
                for &k in &ks {
                    alive[k] = false;
                }
                trace.push(Rule::Block, i, ip, &ks);
                continue;
            }
            break;
        }
        if alive.iter().all(|x| !x) {
            return DropRun { trace, success: true, order_sensitive: false, alive };
        }
        let mut rest = alive.clone();
        let mut seen = HashSet::new();
        let before = trace.len();
        if self.search(&mut rest, &mut trace, &mut seen, BACKTRACK_DEPTH, usize::MAX) {
            return DropRun { trace, success: true, order_sensitive: true, alive: rest };
        }
        trace.truncate(before);
        // an earlier canonical choice may be the obstacle: restart from scratch
        let mut fresh = vec![true; self.sections.len()];
        let mut other = Trace::default();
        seen.clear();
        if self.search(&mut fresh, &mut other, &mut seen, usize::MAX, RESTART_BUDGET) {
            return DropRun { trace: other, success: true, order_sensitive: true, alive: fresh };
        }
        DropRun { trace, success: false, order_sensitive: false, alive }
    }

    /// Every single rule application available in the current state.
    pub fn applicable_steps(&self, alive: &Alive) -> Vec<(Rule, Vec<usize>, Vec<usize>)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 1..=n {
            let [ca, cb] = self.rule_i_candidates(alive, i);
            if let Some(k) = ca {
                out.push((Rule::UniqueMinimum, vec![i], vec![k]));
            }
            if let Some(k) = cb {
                if Some(k) != ca {
                    out.push((Rule::UniqueMinimum, vec![i], vec![k]));
                }
            }
            if let Some(p) = self.rule_ii(alive, i) {
                out.push((Rule::AtMostTwo, vec![i], p.as_slice().to_vec()));
            }
        }
        for i in 1..=n {
            for ip in i + 1..=n {
                if let Some(ks) = self.rule_iii(alive, i, ip) {
                    out.push((Rule::Block, vec![i, ip], ks));
                }
            }
        }
        out
    }

    fn search(
        &self,
        alive: &mut Vec<bool>,
        trace: &mut Trace,
        seen: &mut HashSet<Vec<bool>>,
        depth: usize,
        budget: usize,
    ) -> bool {
        if alive.iter().all(|x| !x) {
            return true;
        }
        if depth == 0 || seen.len() >= budget || !seen.insert(alive.clone()) {
            return false;
        }
        for (rule, cols, ks) in self.applicable_steps(alive) {
            for &k in &ks {
                alive[k] = false;
            }
            trace.push(rule, cols[0], *cols.last().unwrap(), &ks);
            if self.search(alive, trace, seen, depth - 1, budget) {
                return true;
            }
            trace.truncate(trace.len() - 1);
            for &k in &ks {
                alive[k] = true;
            }
        }
        false
    }

    /// Whether some order of rule applications drops everything, searching
    /// all reachable states (no depth bound).
    pub fn exists_successful_order(&self) -> bool {
        let mut alive = vec![true; self.sections.len()];
        let mut trace = Trace::default();
        let mut seen = HashSet::new();
        self.search(&mut alive, &mut trace, &mut seen, usize::MAX, usize::MAX)
    }

    /// Replays a certificate, checking each step's preconditions at the moment
    /// it is applied; true iff every step is legal and nothing remains.
    pub fn replay(&self, cert: &DropCertificate) -> Result<bool> {
        if cert.version != CERTIFICATE_VERSION {
            return Err(Error::MalformedCertificate(format!("unsupported version {}", cert.version)));
        }
        let mut alive = vec![true; self.sections.len()];
        for step in &cert.steps {
            let mut ks = Vec::with_capacity(step.dropped.len());
            for s in &step.dropped {
                match self.sections.iter().position(|x| x == s) {
                    Some(k) if alive[k] && !ks.contains(&k) => ks.push(k),
                    _ => return Ok(false),
                }
            }
            ks.sort_unstable();
            let legal = match (step.rule, step.columns.as_slice()) {
                (Rule::UniqueMinimum, &[i]) if (1..=self.n()).contains(&i) && ks.len() == 1 => {
                    self.rule_i_candidates(&alive, i).contains(&Some(ks[0]))
                }
                (Rule::AtMostTwo, &[i]) if (1..=self.n()).contains(&i) => self.rule_ii(&alive, i).is_some_and(|p| {
                    let mut v = p.as_slice().to_vec();
                    v.sort_unstable();
                    v == ks
                }),
                (Rule::Block, &[i, ip]) if 1 <= i && i < ip && ip <= self.n() => {
                    self.rule_iii(&alive, i, ip).is_some_and(|mut v| {
                        v.sort_unstable();
                        v == ks
                    })
                }
                _ => {
                    return Err(Error::MalformedCertificate(format!(
                        "step {:?} has malformed columns {:?}",
                        step.rule, step.columns
                    )))
                }
            };
            if !legal {
                return Ok(false);
            }
            for k in ks {
                alive[k] = false;
            }
        }
        Ok(alive.iter().all(|x| !x))
    }
}

/// Convenience: extract sections for `w` and run the canonical elimination.
pub fn drop_all(table: &VanishingTable, tt: &TensorTable, w: &TwistVector) -> DropOutcome {
    let sections = tt.potential_sections(w);
    DropContext::new(table, tt, w, sections).drop_all()
}

pub fn replay_certificate(
    table: &VanishingTable,
    tt: &TensorTable,
    w: &TwistVector,
    cert: &DropCertificate,
) -> Result<bool> {
    let sections = tt.potential_sections(w);
    DropContext::new(table, tt, w, sections).replay(cert)
}
