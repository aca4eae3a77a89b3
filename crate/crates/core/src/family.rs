//! Verification of every table in a family, stratified by swap count.
//!
//! Each stratum is walked exhaustively or drawn by seeded uniform sampling.
//! Work is cut into units (enumeration subtrees, or index ranges of draws)
//! that run in parallel; their verdicts are merged back in unit order, so
//! the JSONL stream is the same for any number of jobs. After each merged
//! batch the sink is flushed and a checkpoint may be written; resuming from
//! it continues the identical stream.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::minimal_left_weights;
use crate::enumerate::{Enumerator, Params, SwapFilter, WorkUnit};
use crate::error::{Error, Result};
use crate::table::{Fnv1a, VanishingTable};
use crate::verify::{verify_table, SideCondition, Verdict, VerifyConfig};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Mode {
    Exhaustive,
    Sampled { n: u64, seed: u64 },
}

/// Tables whose swap count lies in `swaps`, covered according to `mode`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stratum {
    pub swaps: Vec<usize>,
    #[serde(flatten)]
    pub mode: Mode,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyConfig {
    pub params: Params,
    pub strata: Vec<Stratum>,
    pub verify: VerifyConfig,
    /// Most tables in one exhaustive work unit; also the sampled batch size.
    pub unit_size: u64,
    /// Units verified in parallel before each merge.
    pub batch_units: usize,
    /// Failures kept in full in the report.
    pub max_failures_kept: usize,
    /// Stop (as if interrupted) after this many merged batches.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_after_batches: Option<u64>,
}

impl FamilyConfig {
    pub fn new(params: Params, strata: Vec<Stratum>) -> Self {
        FamilyConfig {
            params,
            strata,
            verify: VerifyConfig::default(),
            unit_size: 4096,
            batch_units: 64,
            max_failures_kept: 100,
            stop_after_batches: None,
        }
    }

    /// Every swap count from 0 to rho_max, walked exhaustively.
    pub fn exhaustive(params: Params) -> Self {
        let strata = vec![Stratum { swaps: (0..=params.rho_max).collect(), mode: Mode::Exhaustive }];
        Self::new(params, strata)
    }

    /// Every swap count, sampled `n` times in one stratum.
    pub fn sampled(params: Params, n: u64, seed: u64) -> Self {
        let strata = vec![Stratum { swaps: (0..=params.rho_max).collect(), mode: Mode::Sampled { n, seed } }];
        Self::new(params, strata)
    }

    /// The top swap count rho_max walked exhaustively and all lower counts
    /// sampled `n` times together. With rho_max = 0 this is exhaustive.
    pub fn stratified(params: Params, n: u64, seed: u64) -> Self {
        if params.rho_max == 0 {
            return Self::exhaustive(params);
        }
        let strata = vec![
            Stratum { swaps: vec![params.rho_max], mode: Mode::Exhaustive },
            Stratum { swaps: (0..params.rho_max).collect(), mode: Mode::Sampled { n, seed } },
        ];
        Self::new(params, strata)
    }

    fn check(&self) -> Result<()> {
        if self.unit_size == 0 || self.batch_units == 0 {
            return Err(Error::Infeasible("unit size and batch size must be positive".into()));
        }
        for s in &self.strata {
            if s.swaps.is_empty() || s.swaps.iter().any(|&k| k > self.params.rho_max) {
                return Err(Error::Infeasible(format!(
                    "stratum swap counts {:?} must be nonempty and at most rho_max = {}",
                    s.swaps, self.params.rho_max
                )));
            }
        }
        Ok(())
    }

    /// Fingerprint of everything that shapes the verdict stream.
    fn fingerprint(&self) -> String {
        let mut c = self.clone();
        c.stop_after_batches = None;
        c.max_failures_kept = 0;
        let mut h = Fnv1a::new();
        h.write(serde_json::to_string(&c).expect("config serializes").as_bytes());
        format!("{:016x}", h.finish())
    }
}

/// One line of the verdict stream.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub stratum: usize,
    /// Position within the stratum: canonical rank, or draw index.
    pub index: u64,
    #[serde(flatten)]
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub record: VerdictRecord,
    pub table: serde_json::Value,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratumReport {
    pub swaps: Vec<usize>,
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Tables in the stratum.
    pub population: u64,
    /// Tables (or draws) to process.
    pub target: u64,
    pub processed: u64,
    pub passed: u64,
    pub failed: u64,
    pub classes: BTreeMap<String, u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub params: Option<Params>,
    pub rho: i64,
    pub strata: Vec<StratumReport>,
    pub classes: BTreeMap<String, u64>,
    pub side_conditions: BTreeMap<String, u64>,
    /// Index of the passing candidate multidegree (0 is the default).
    pub candidates: BTreeMap<usize, u64>,
    pub order_sensitive: u64,
    pub left_weighted_required: u64,
    /// Minimal left-weighted node multiplicities for the chain, as decimals.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub left_weights: Vec<String>,
    pub violations: u64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub violation_examples: Vec<FailureRecord>,
    pub failures_total: u64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub failures: Vec<FailureRecord>,
    pub processed: u64,
    pub stream_hash: String,
    pub complete: bool,
}

impl Report {
    pub fn ok(&self) -> bool {
        self.failures_total == 0 && self.violations == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cursor {
    pub stratum: usize,
    /// Units of the current stratum already merged.
    pub unit: u64,
    /// Enumeration prefix (child indices) of the next exhaustive unit.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub prefix: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub fingerprint: String,
    pub cursor: Cursor,
    /// Seeds of the sampled strata, in stratum order.
    pub seeds: Vec<u64>,
    /// Bytes of verdict stream written so far.
    pub bytes: u64,
    pub hash_state: u64,
    pub counts: Report,
}

impl Checkpoint {
    pub fn load(path: &Path) -> Result<Self> {
        let s =
            fs::read_to_string(path).map_err(|e| Error::Io(format!("reading checkpoint {}: {}", path.display(), e)))?;
        let c: Checkpoint = serde_json::from_str(&s)?;
        if c.version != CHECKPOINT_VERSION {
            return Err(Error::Io(format!("unsupported checkpoint version {}", c.version)));
        }
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        let io = |e: std::io::Error| {
            Error::Io(format!(
                "writing checkpoint {} at stratum {}, unit {}: {}",
                path.display(),
                self.cursor.stratum,
                self.cursor.unit,
                e
            ))
        };
        fs::write(&tmp, serde_json::to_vec_pretty(self)?).map_err(io)?;
        fs::rename(&tmp, path).map_err(io)?;
        Ok(())
    }
}

/// Where verdict lines go and where checkpoints are kept.
pub struct Sink<'a> {
    pub out: Option<&'a mut dyn Write>,
    pub checkpoint: Option<PathBuf>,
}

impl<'a> Sink<'a> {
    pub fn none() -> Self {
        Sink { out: None, checkpoint: None }
    }
}

enum Units {
    Tree(Vec<WorkUnit>),
    Draws { n: u64, seed: u64, size: u64 },
}

impl Units {
    fn len(&self) -> u64 {
        match self {
            Units::Tree(v) => v.len() as u64,
            Units::Draws { n, size, .. } => n.div_ceil(*size),
        }
    }
}

struct State {
    report: Report,
    hash: Fnv1a,
    bytes: u64,
    cursor: Cursor,
}

/// Verifies the family described by `config`, streaming one JSON line per
/// table. Pass a checkpoint to continue an interrupted run; the sink must
/// then hold exactly the `bytes` recorded in it.
pub fn verify_family(config: &FamilyConfig, sink: &mut Sink, resume: Option<Checkpoint>) -> Result<Report> {
    config.check()?;
    let params = config.params;
    let e = Enumerator::new(params)?;
    let fingerprint = config.fingerprint();
    let seeds: Vec<u64> = config
        .strata
        .iter()
        .filter_map(|s| match s.mode {
            Mode::Sampled { seed, .. } => Some(seed),
            Mode::Exhaustive => None,
        })
        .collect();

    let mut state = match resume {
        Some(c) => {
            if c.fingerprint != fingerprint {
                return Err(Error::Io("checkpoint was written for a different configuration".into()));
            }
            State { report: c.counts, hash: Fnv1a::from_state(c.hash_state), bytes: c.bytes, cursor: c.cursor }
        }
        None => {
            let mut report = Report { params: Some(params), rho: params.rho(), ..Report::default() };
            for s in &config.strata {
                let filter = SwapFilter(s.swaps.clone());
                let population = e.total(&filter);
                let (mode, seed, target) = match s.mode {
                    Mode::Exhaustive => ("exhaustive", None, population),
                    Mode::Sampled { n, seed } => ("sampled", Some(seed), if population == 0 { 0 } else { n }),
                };
                report.strata.push(StratumReport {
                    swaps: s.swaps.clone(),
                    mode: mode.into(),
                    seed,
                    population,
                    target,
                    ..StratumReport::default()
                });
            }
            if params.g >= 2 {
                report.left_weights =
                    minimal_left_weights(params.g, params.d as u64)?.iter().map(|w| w.to_string()).collect();
            }
            State { report, hash: Fnv1a::new(), bytes: 0, cursor: Cursor { stratum: 0, unit: 0, prefix: Vec::new() } }
        }
    };

    let mut batches = 0u64;
    while state.cursor.stratum < config.strata.len() {
        let k = state.cursor.stratum;
        let stratum = &config.strata[k];
        let filter = SwapFilter(stratum.swaps.clone());
        let units = match stratum.mode {
            Mode::Exhaustive => Units::Tree(e.work_units_bounded(&filter, config.unit_size)),
            Mode::Sampled { n, seed } => {
                let n = if state.report.strata[k].population == 0 { 0 } else { n };
                Units::Draws { n, seed, size: config.unit_size }
            }
        };
        // canonical rank of the first table of each exhaustive unit
        let offsets: Vec<u64> = match &units {
            Units::Tree(v) => v
                .iter()
                .scan(0u64, |acc, u| {
                    let o = *acc;
                    *acc += e.unit_weight(u, &filter);
                    Some(o)
                })
                .collect(),
            Units::Draws { .. } => Vec::new(),
        };
        let total = units.len();
        if let Units::Tree(v) = &units {
            if state.cursor.unit < total
                && v[state.cursor.unit as usize].prefix != state.cursor.prefix
                && state.cursor.unit > 0
            {
                return Err(Error::Io(format!(
                    "checkpoint prefix {:?} does not match unit {}",
                    state.cursor.prefix, state.cursor.unit
                )));
            }
        }
        while state.cursor.unit < total {
            if config.stop_after_batches.is_some_and(|m| batches >= m) {
                state.report.complete = false;
                state.report.stream_hash = format!("{:016x}", state.hash.finish());
                return Ok(state.report);
            }
            let lo = state.cursor.unit;
            let hi = (lo + config.batch_units as u64).min(total);
            let results: Vec<Vec<(u64, Verdict, Option<VanishingTable>)>> = (lo..hi)
                .into_par_iter()
                .map(|u| match &units {
                    Units::Tree(v) => run_tree_unit(&e, &v[u as usize], &filter, offsets[u as usize], &config.verify),
                    Units::Draws { n, seed, size } => {
                        let start = u * size;
                        let end = (start + size).min(*n);
                        (start..end)
                            .map(|idx| {
                                let t = e.sample(&filter, *seed, idx).expect("stratum is nonempty");
                                keep(idx, t, &config.verify)
                            })
                            .collect()
                    }
                })
                .collect();
            for batch in results {
                for (index, verdict, table) in batch {
                    absorb(&mut state, config, sink, k, index, verdict, table)?;
                }
            }
            if let Some(out) = sink.out.as_mut() {
                out.flush().map_err(|err| io_at(&state.cursor, err))?;
            }
            state.cursor.unit = hi;
            state.cursor.prefix = match &units {
                Units::Tree(v) if hi < total => v[hi as usize].prefix.clone(),
                _ => Vec::new(),
            };
            batches += 1;
            if let Some(path) = &sink.checkpoint {
                checkpoint(&state, &fingerprint, &seeds).save(path)?;
            }
        }
        state.cursor = Cursor { stratum: k + 1, unit: 0, prefix: Vec::new() };
    }
    state.report.complete = true;
    state.report.stream_hash = format!("{:016x}", state.hash.finish());
    if let Some(path) = &sink.checkpoint {
        checkpoint(&state, &fingerprint, &seeds).save(path)?;
    }
    Ok(state.report)
}

fn checkpoint(state: &State, fingerprint: &str, seeds: &[u64]) -> Checkpoint {
    Checkpoint {
        version: CHECKPOINT_VERSION,
        fingerprint: fingerprint.to_string(),
        cursor: state.cursor.clone(),
        seeds: seeds.to_vec(),
        bytes: state.bytes,
        hash_state: state.hash.finish(),
        counts: state.report.clone(),
    }
}

fn io_at(cursor: &Cursor, err: std::io::Error) -> Error {
    Error::Io(format!(
        "writing verdicts at stratum {}, unit {} (resume from the last checkpoint): {}",
        cursor.stratum, cursor.unit, err
    ))
}

/// Verifies one table, keeping it only when it will be needed for the report.
fn keep(index: u64, t: VanishingTable, config: &VerifyConfig) -> (u64, Verdict, Option<VanishingTable>) {
    let v = verify_table(&t, config);
    let table = (!v.pass || !v.violations.is_empty()).then_some(t);
    (index, v, table)
}

fn run_tree_unit(
    e: &Enumerator,
    unit: &WorkUnit,
    filter: &SwapFilter,
    offset: u64,
    config: &VerifyConfig,
) -> Vec<(u64, Verdict, Option<VanishingTable>)> {
    let mut out = Vec::new();
    let mut index = offset;
    let _ = e.for_each_in_unit(unit, filter, &mut |t| {
        out.push(keep(index, t, config));
        index += 1;
        ControlFlow::Continue(())
    });
    out
}

fn absorb(
    state: &mut State,
    config: &FamilyConfig,
    sink: &mut Sink,
    stratum: usize,
    index: u64,
    verdict: Verdict,
    table: Option<VanishingTable>,
) -> Result<()> {
    let record = VerdictRecord { stratum, index, verdict };
    let mut line = serde_json::to_string(&record)?;
    line.push('\n');
    state.hash.write(line.as_bytes());
    state.bytes += line.len() as u64;
    if let Some(out) = sink.out.as_mut() {
        out.write_all(line.as_bytes()).map_err(|err| io_at(&state.cursor, err))?;
    }
    let v = &record.verdict;
    let r = &mut state.report;
    let s = &mut r.strata[stratum];
    s.processed += 1;
    *s.classes.entry(v.class.name().to_string()).or_default() += 1;
    *r.classes.entry(v.class.name().to_string()).or_default() += 1;
    r.processed += 1;
    if v.pass {
        s.passed += 1;
        *r.candidates.entry(v.candidate.unwrap_or(0)).or_default() += 1;
        let side = match v.side_condition {
            SideCondition::NotApplicable => "not_applicable".to_string(),
            SideCondition::Cycle1Ok => "cycle1_ok".to_string(),
            SideCondition::Cycle2 { case } => format!("cycle2_{}", case),
            SideCondition::Unsatisfied => "unsatisfied".to_string(),
        };
        *r.side_conditions.entry(side).or_default() += 1;
    } else {
        s.failed += 1;
        r.failures_total += 1;
    }
    r.order_sensitive += u64::from(v.order_sensitive);
    r.left_weighted_required += u64::from(v.left_weighted_required);
    let broken = !v.violations.is_empty();
    let failed = !v.pass;
    if broken {
        r.violations += 1;
    }
    let table_json = || {
        table
            .as_ref()
            .map(|t| serde_json::from_str(&t.to_json()).expect("table json"))
            .unwrap_or(serde_json::Value::Null)
    };
    if broken && r.violation_examples.len() < config.max_failures_kept {
        r.violation_examples.push(FailureRecord { record: record.clone(), table: table_json() });
    }
    if failed && r.failures.len() < config.max_failures_kept {
        r.failures.push(FailureRecord { record, table: table_json() });
    }
    Ok(())
}
