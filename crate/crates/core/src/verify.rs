use serde::{Deserialize, Serialize};

use crate::drop::{DropCertificate, DropContext, DropRun};
use crate::multidegree::{candidate_multidegrees, default_multidegree, TwistVector};
use crate::table::{DegeneracyClass, VanishingTable};
use crate::tensor::{spanning_count, PotentialSection, TensorTable};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyConfig {
    /// Stop after this many candidate multidegrees.
    pub max_candidates: Option<usize>,
    /// Embed the full certificate in the verdict.
    pub include_certificate: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideCondition {
    NotApplicable,
    /// The (j0−1, j0) row has a unique section, avoiding i0 and i1.
    Cycle1Ok,
    /// Which of the three alternatives held: 'a', 'b' or 'c'.
    Cycle2 {
        case: char,
    },
    Unsatisfied,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateDiagnostic {
    pub c: Vec<i64>,
    pub dropped_all: bool,
    pub remaining: Vec<PotentialSection>,
    pub side_condition: SideCondition,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub id: String,
    pub class: DegeneracyClass,
    pub swaps: usize,
    pub pass: bool,
    /// Index into the candidate sequence of the passing multidegree.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<TwistVector>,
    pub side_condition: SideCondition,
    pub left_weighted_required: bool,
    pub certificate_steps: usize,
    pub blocks: Vec<(usize, usize)>,
    pub order_sensitive: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<DropCertificate>,
    /// Structural invariants broken by this table (should stay empty).
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub violations: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub diagnostics: Vec<CandidateDiagnostic>,
}

pub fn side_condition(
    t: &VanishingTable,
    class: &DegeneracyClass,
    w: &TwistVector,
    sections: &[PotentialSection],
) -> SideCondition {
    match *class {
        DegeneracyClass::Cycle1 { j0, i0, i1 } => {
            let row = (j0 - 1, j0);
            let mine: Vec<_> = sections.iter().filter(|s| s.row == row).collect();
            if mine.len() == 1 && !mine[0].contains(i0) && !mine[0].contains(i1) {
                SideCondition::Cycle1Ok
            } else {
                SideCondition::Unsatisfied
            }
        }
        DegeneracyClass::Cycle2 { j0, i0, i1 } => {
            let row = (j0 - 1, j0 - 1);
            let left = sections.iter().any(|s| s.row == row && s.end < i0);
            let right = sections.iter().any(|s| s.row == row && s.start > i1);
            if !(left && right) {
                return SideCondition::Cycle2 { case: 'a' };
            }
            let lo = 2 * t.a(i0, j0 - 1) as i64 - w.c_at(i0);
            let hi = 2 * t.a_at(i1 + 1, j0 - 1) as i64 - w.c_at(i1 + 1);
            if lo == -1 && hi == 1 {
                return SideCondition::Cycle2 { case: 'b' };
            }
            if lo == -2 && hi == 2 && w.degree(i0) == 2 && w.degree(i1) == 2 {
                return SideCondition::Cycle2 { case: 'c' };
            }
            SideCondition::Unsatisfied
        }
        _ => SideCondition::NotApplicable,
    }
}

/// Checks of the structural invariants in the default multidegree.
fn structural_violations(
    t: &VanishingTable,
    default_sections: Option<&[PotentialSection]>,
    swaps: usize,
) -> Vec<String> {
    let mut v = Vec::new();
    if swaps as i64 > t.rho() {
        v.push(format!("{} swaps exceed rho = {}", swaps, t.rho()));
    }
    if let Some(secs) = default_sections {
        for i in 1..t.n() {
            let c = spanning_count(secs, i);
            if c > 3 {
                v.push(format!("{} sections span columns {}-{}", c, i, i + 1));
            }
        }
        let mut k = 0;
        while k < secs.len() {
            let row = secs[k].row;
            let mut m = k;
            while m < secs.len() && secs[m].row == row {
                m += 1;
            }
            if m - k >= 2 {
                let exc = (1..=t.n()).any(|i| t.is_exceptional(i, row.0) || t.is_exceptional(i, row.1));
                if !exc {
                    v.push(format!("row {:?} has disconnected support without an exceptional row", row));
                }
            }
            k = m;
        }
    }
    v
}

struct Attempt {
    run: DropRun,
    side: SideCondition,
    sections: Vec<PotentialSection>,
}

fn attempt(t: &VanishingTable, tt: &TensorTable, class: &DegeneracyClass, w: &TwistVector) -> Attempt {
    let sections = tt.potential_sections(w);
    let ctx = DropContext::new(t, tt, w, sections);
    let run = ctx.run();
    let sections = ctx.into_sections();
    let side = side_condition(t, class, w, &sections);
    Attempt { run, side, sections }
}

fn side_ok(s: SideCondition) -> bool {
    !matches!(s, SideCondition::Unsatisfied)
}

/// Walks the candidate multidegrees and stops at the first one where every
/// section drops and the class's side condition holds.
pub fn verify_table(t: &VanishingTable, config: &VerifyConfig) -> Verdict {
    let swaps = t.find_swaps();
    let class = crate::table::classify_swaps(&swaps);
    let tt = TensorTable::new(t);
    let limit = config.max_candidates.unwrap_or(usize::MAX);
    let left_weighted_required = matches!(class, DegeneracyClass::Disjoint { .. } | DegeneracyClass::Cycle2 { .. });

    let mut verdict = Verdict {
        id: format!("{:016x}", t.table_id()),
        class,
        swaps: swaps.len(),
        pass: false,
        candidate: None,
        w: None,
        side_condition: SideCondition::NotApplicable,
        left_weighted_required,
        certificate_steps: 0,
        blocks: Vec::new(),
        order_sensitive: false,
        certificate: None,
        violations: Vec::new(),
        diagnostics: Vec::new(),
    };

    let default = default_multidegree(t).ok();
    let mut diagnostics = Vec::new();
    let mut finish = |verdict: &mut Verdict, idx: usize, w: TwistVector, a: Attempt| -> bool {
        if a.run.success && side_ok(a.side) {
            verdict.pass = true;
            verdict.candidate = Some(idx);
            verdict.side_condition = a.side;
            verdict.certificate_steps = a.run.trace.len();
            verdict.blocks = a.run.trace.blocks();
            verdict.order_sensitive = a.run.order_sensitive;
            if config.include_certificate {
                verdict.certificate = Some(a.run.trace.certificate(&a.sections));
            }
            verdict.w = Some(w);
            return true;
        }
        diagnostics.push(CandidateDiagnostic {
            c: w.c().to_vec(),
            dropped_all: a.run.success,
            remaining: a.run.remaining(&a.sections),
            side_condition: a.side,
        });
        false
    };

    if let Some(w) = &default {
        let a = attempt(t, &tt, &class, w);
        verdict.violations = structural_violations(t, Some(&a.sections), swaps.len());
        if limit > 0 && finish(&mut verdict, 0, w.clone(), a) {
            return verdict;
        }
    } else {
        verdict.violations = structural_violations(t, None, swaps.len());
        if let Err(e) = default_multidegree(t) {
            verdict.violations.push(e.to_string());
        }
    }
    if default.is_some() {
        for (idx, w) in candidate_multidegrees(t).into_iter().enumerate().skip(1).take(limit.saturating_sub(1)) {
            let a = attempt(t, &tt, &class, &w);
            if finish(&mut verdict, idx, w, a) {
                return verdict;
            }
        }
    }
    verdict.diagnostics = diagnostics;
    verdict
}
