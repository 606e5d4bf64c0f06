//! Attack-outcome metrics: functional key verification, Hamming distance
//! and output error rate between stochastic circuits, multi-run campaigns
//! and their reports.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::cnf::{differ, encode_circuit, EncodeError, Signal};
use crate::attack::solver::{ClauseSink, Lit, SatBackend, SolveResult, Solver};
use crate::attack::{attack, AttackConfig, AttackError, AttackKind, AttackStatus};
use crate::netlist::Circuit;
use crate::obfuscate::{
    insert_key_gates, make_polymorphic, make_probabilistic, polymorphic_distribution, select_gates_random,
    select_gates_where, BehaviorAnnotation, LockedCircuit, ObfuscateError,
};
use crate::oracle::{DefenseConfig, Oracle, OracleError};
use crate::simulate::{counter_hash, SampleContext, SimError, Simulator};
use crate::Pattern;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("width mismatch: {0}")]
    Width(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Obfuscate(#[from] ObfuscateError),
    #[error("campaign has no runs")]
    EmptyCampaign,
    #[error("report: {0}")]
    Report(String),
}

/// Above this many data inputs, equivalence is decided by a SAT miter
/// instead of exhaustive simulation.
pub const EXHAUSTIVE_LIMIT: usize = 20;

/// A circuit with its key inputs tied to constants, evaluated over its data inputs.
pub struct KeyedCircuit {
    sim: Simulator,
    data_pos: Vec<usize>,
    key_pos: Vec<usize>,
    key: Pattern,
}

impl KeyedCircuit {
    pub fn new(
        locked: &LockedCircuit,
        annotations: &[BehaviorAnnotation],
        key: &Pattern,
    ) -> Result<Self, MetricsError> {
        if key.len() != locked.key_len() {
            return Err(MetricsError::Width(format!(
                "key has {} bits, circuit expects {}",
                key.len(),
                locked.key_len()
            )));
        }
        let inputs = locked.circuit.inputs();
        let pos = |ids: Vec<usize>| -> Vec<usize> {
            ids.iter()
                .map(|k| inputs.iter().position(|i| i == k).unwrap())
                .collect()
        };
        Ok(Self {
            sim: Simulator::with_annotations(&locked.circuit, annotations)?,
            data_pos: pos(locked.data_inputs()),
            key_pos: pos(locked.key_input_ids()),
            key: key.clone(),
        })
    }

    /// A circuit without key inputs.
    pub fn plain(circuit: &Circuit, annotations: &[BehaviorAnnotation]) -> Result<Self, MetricsError> {
        Self::new(&LockedCircuit::plain(circuit.clone()), annotations, &Pattern::zeros(0))
    }

    pub fn data_width(&self) -> usize {
        self.data_pos.len()
    }

    pub fn output_width(&self) -> usize {
        self.sim.circuit().outputs().len()
    }

    /// One word per data input in, one word per output out.
    pub fn eval_words(&self, data: &[u64], ctx: Option<SampleContext>) -> Vec<u64> {
        let mut words = vec![0u64; self.sim.circuit().inputs().len()];
        for (&p, &w) in self.data_pos.iter().zip(data) {
            words[p] = w;
        }
        for (i, &p) in self.key_pos.iter().enumerate() {
            words[p] = if self.key.get(i) { !0 } else { 0 };
        }
        self.sim.eval_words(&words, ctx)
    }
}

fn check_widths(a: &KeyedCircuit, b: &KeyedCircuit) -> Result<(), MetricsError> {
    if a.data_width() != b.data_width() || a.output_width() != b.output_width() {
        return Err(MetricsError::Width(format!(
            "{}→{} vs {}→{}",
            a.data_width(),
            a.output_width(),
            b.data_width(),
            b.output_width()
        )));
    }
    Ok(())
}

/// Whether `locked` under `key` computes the same function as `original`
/// (nominal behavior of both).
pub fn verify_key(locked: &LockedCircuit, original: &Circuit, key: &Pattern) -> Result<bool, MetricsError> {
    let a = KeyedCircuit::new(locked, &[], key)?;
    let b = KeyedCircuit::plain(original, &[])?;
    check_widths(&a, &b)?;
    let n = a.data_width();
    if n <= EXHAUSTIVE_LIMIT {
        Ok(exhaustively_equal(&a, &b, n))
    } else {
        miter_equal(locked, key, &LockedCircuit::plain(original.clone()), &Pattern::zeros(0))
    }
}

/// Functional equivalence of two keys of the same locked circuit.
pub fn keys_equivalent(locked: &LockedCircuit, a: &Pattern, b: &Pattern) -> Result<bool, MetricsError> {
    let x = KeyedCircuit::new(locked, &[], a)?;
    let y = KeyedCircuit::new(locked, &[], b)?;
    let n = x.data_width();
    if n <= EXHAUSTIVE_LIMIT {
        return Ok(exhaustively_equal(&x, &y, n));
    }
    miter_equal(locked, a, locked, b)
}

fn exhaustively_equal(a: &KeyedCircuit, b: &KeyedCircuit, n: usize) -> bool {
    let total: u64 = 1 << n;
    let mut base = 0u64;
    while base < total {
        let lanes = (total - base).min(64);
        let mask = if lanes == 64 { !0 } else { (1u64 << lanes) - 1 };
        // Lane l carries the pattern `base + l`.
        let words: Vec<u64> = (0..n)
            .map(|i| {
                let mut w = 0u64;
                for l in 0..lanes {
                    if (base + l) >> i & 1 == 1 {
                        w |= 1 << l;
                    }
                }
                w
            })
            .collect();
        let (ya, yb) = (a.eval_words(&words, None), b.eval_words(&words, None));
        if ya.iter().zip(&yb).any(|(x, y)| (x ^ y) & mask != 0) {
            return false;
        }
        base += lanes;
    }
    true
}

fn encode_keyed(
    s: &mut Solver,
    locked: &LockedCircuit,
    key: &Pattern,
    x: &[Signal],
) -> Result<Vec<Signal>, MetricsError> {
    let data = locked.data_inputs();
    let keys = locked.key_input_ids();
    let inputs: Vec<Signal> = locked
        .circuit
        .inputs()
        .iter()
        .map(|id| match data.iter().position(|d| d == id) {
            Some(i) => x[i],
            None => Signal::Const(key.get(keys.iter().position(|k| k == id).unwrap())),
        })
        .collect();
    let nets = encode_circuit(s, &locked.circuit, &inputs, true)?;
    Ok(locked.circuit.outputs().iter().map(|&o| nets[o]).collect())
}

/// Miter-UNSAT check of `a@ka` against `b@kb` over shared data inputs.
fn miter_equal(a: &LockedCircuit, ka: &Pattern, b: &LockedCircuit, kb: &Pattern) -> Result<bool, MetricsError> {
    let mut s = Solver::new();
    let x: Vec<Signal> = (0..a.data_inputs().len())
        .map(|_| Signal::Lit(Lit::pos(s.new_var())))
        .collect();
    let ya = encode_keyed(&mut s, a, ka, &x)?;
    let yb = encode_keyed(&mut s, b, kb, &x)?;
    let mut clause = Vec::new();
    for (&p, &q) in ya.iter().zip(&yb) {
        match differ(&mut s, p, q) {
            Signal::Const(true) => return Ok(false),
            Signal::Const(false) => {}
            Signal::Lit(l) => clause.push(l),
        }
    }
    if clause.is_empty() {
        return Ok(true);
    }
    s.add_clause(&clause);
    Ok(s.solve(&[]) == SolveResult::Unsat)
}

/// Mean fraction of differing output bits and fraction of patterns with
/// any differing bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HdOer {
    pub hd: f64,
    pub oer: f64,
}

/// Compares `a` and `b` on `n` uniform random inputs, one stochastic sample
/// of each circuit per input. Reproducible from `(n, seed)`.
pub fn hd_oer(a: &KeyedCircuit, b: &KeyedCircuit, n: usize, seed: u64) -> Result<HdOer, MetricsError> {
    check_widths(a, b)?;
    if n == 0 {
        return Ok(HdOer { hd: 0.0, oer: 0.0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outs = a.output_width().max(1) as f64;
    let (mut bit_frac, mut any) = (0.0f64, 0u64);
    let mut done = 0usize;
    while done < n {
        let lanes = (n - done).min(64);
        let mask = if lanes == 64 { !0u64 } else { (1u64 << lanes) - 1 };
        let words: Vec<u64> = (0..a.data_width()).map(|_| rng.gen()).collect();
        let first = done as u64;
        let ya = a.eval_words(&words, Some(SampleContext::new(seed, 1, first)));
        let yb = b.eval_words(&words, Some(SampleContext::new(seed, 2, first)));
        let diffs: Vec<u64> = ya.iter().zip(&yb).map(|(x, y)| (x ^ y) & mask).collect();
        let union = diffs.iter().fold(0u64, |acc, d| acc | d);
        any += union.count_ones() as u64;
        bit_frac += diffs.iter().map(|d| d.count_ones() as f64).sum::<f64>() / outs;
        done += lanes;
    }
    Ok(HdOer {
        hd: bit_frac / n as f64,
        oer: any as f64 / n as f64,
    })
}

/// A fixed obfuscated instance that every run of a campaign attacks.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub benchmark: String,
    /// The unlocked design; when absent, recovered keys are checked
    /// against the locked circuit's correct key instead.
    pub original: Option<Circuit>,
    pub locked: LockedCircuit,
    pub annotations: Vec<BehaviorAnnotation>,
    /// Fraction of gates (of the locked circuit) carrying annotations.
    pub pct_prob_gates: f64,
    /// Correctness of probabilistic gates (1.0 if none or polymorphic).
    pub correctness: f64,
}

impl Scenario {
    /// Unannotated locked instance.
    pub fn deterministic(benchmark: impl Into<String>, original: &Circuit, locked: LockedCircuit) -> Self {
        Self {
            benchmark: benchmark.into(),
            original: Some(original.clone()),
            locked,
            annotations: Vec::new(),
            pct_prob_gates: 0.0,
            correctness: 1.0,
        }
    }

    /// `key_gates` XOR/XNOR key gates, then `fraction` of all gates of the
    /// locked circuit made probabilistic at `correctness`. The gate
    /// selection depends only on `seed` and `fraction`.
    pub fn probabilistic(
        benchmark: impl Into<String>,
        original: &Circuit,
        key_gates: usize,
        fraction: f64,
        correctness: f64,
        seed: u64,
    ) -> Result<Self, MetricsError> {
        let locked = insert_key_gates(original, key_gates, seed)?;
        let selection = select_gates_random(&locked.circuit, fraction, seed ^ 0x9E37_79B9)?;
        let annotations = make_probabilistic(&locked.circuit, &selection, correctness)?;
        Ok(Self {
            benchmark: benchmark.into(),
            original: Some(original.clone()),
            locked,
            annotations,
            pct_prob_gates: fraction,
            correctness,
        })
    }

    /// Like [`Scenario::probabilistic`] with polymorphic gates (default
    /// distributions) instead; only gates with a polymorphic family are eligible.
    pub fn polymorphic(
        benchmark: impl Into<String>,
        original: &Circuit,
        key_gates: usize,
        fraction: f64,
        seed: u64,
    ) -> Result<Self, MetricsError> {
        let locked = insert_key_gates(original, key_gates, seed)?;
        let c = &locked.circuit;
        let selection = select_gates_where(c, fraction, seed ^ 0x9E37_79B9, |g| {
            polymorphic_distribution(&c.gate(g).function).is_some()
        })?;
        let annotations = make_polymorphic(c, &selection)?;
        Ok(Self {
            benchmark: benchmark.into(),
            original: Some(original.clone()),
            locked,
            annotations,
            pct_prob_gates: fraction,
            correctness: 1.0,
        })
    }
}

#[derive(Debug, Clone, Default)]
pub enum OracleSpec {
    /// Deterministic without annotations, probabilistic otherwise.
    #[default]
    Auto,
    Defended(DefenseConfig),
}

#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub scenario: Scenario,
    pub attack: AttackKind,
    pub attack_config: AttackConfig,
    pub runs: usize,
    pub master_seed: u64,
    pub oracle: OracleSpec,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

/// Seed of run `index`, independent of execution order.
pub fn run_seed(master: u64, index: usize) -> u64 {
    counter_hash(master, 0xCA4D, index as u64, 0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub status: AttackStatus,
    /// Whether the returned key is functionally equivalent to the correct one.
    pub key_correct: bool,
    pub hd: Option<f64>,
    pub oer: Option<f64>,
    /// Attack time; for PSAT also the final HD/OER sampling.
    pub runtime_s: f64,
    pub iterations: usize,
    pub oracle_queries: u64,
    pub key: Option<Pattern>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub benchmark: String,
    pub attack: AttackKind,
    pub pct_prob_gates: f64,
    pub correctness: f64,
    pub runs: usize,
    /// Fraction of runs returning a key.
    pub success_rate: f64,
    /// Fraction of runs returning a functionally correct key.
    pub key_correct_rate: f64,
    /// Averaged over successful runs; `None` without any.
    pub mean_hd: Option<f64>,
    pub mean_oer: Option<f64>,
    pub mean_runtime_s: f64,
    pub mean_iterations: f64,
    pub mean_oracle_queries: f64,
    pub master_seed: u64,
    pub records: Vec<RunRecord>,
}

impl CampaignSummary {
    pub fn from_records(config: &CampaignConfig, records: Vec<RunRecord>) -> Result<Self, MetricsError> {
        if records.is_empty() {
            return Err(MetricsError::EmptyCampaign);
        }
        let n = records.len() as f64;
        let mean = |f: &dyn Fn(&RunRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
        let successes: Vec<&RunRecord> = records.iter().filter(|r| r.status == AttackStatus::Success).collect();
        let avg = |f: &dyn Fn(&RunRecord) -> Option<f64>| {
            let v: Vec<f64> = successes.iter().filter_map(|r| f(r)).collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        };
        let s = &config.scenario;
        Ok(Self {
            benchmark: s.benchmark.clone(),
            attack: config.attack,
            pct_prob_gates: s.pct_prob_gates,
            correctness: s.correctness,
            runs: records.len(),
            success_rate: successes.len() as f64 / n,
            key_correct_rate: records.iter().filter(|r| r.key_correct).count() as f64 / n,
            mean_hd: avg(&|r| r.hd),
            mean_oer: avg(&|r| r.oer),
            mean_runtime_s: mean(&|r| r.runtime_s),
            mean_iterations: mean(&|r| r.iterations as f64),
            mean_oracle_queries: mean(&|r| r.oracle_queries as f64),
            master_seed: config.master_seed,
            records,
        })
    }
}

/// One campaign run.
pub fn run_once(config: &CampaignConfig, index: usize) -> Result<RunRecord, MetricsError> {
    let seed = run_seed(config.master_seed, index);
    let s = &config.scenario;
    let oracle = match (&config.oracle, s.annotations.is_empty()) {
        (OracleSpec::Auto, true) => Oracle::deterministic(&s.locked)?,
        (OracleSpec::Auto, false) => Oracle::probabilistic(&s.locked, &s.annotations, seed)?,
        (OracleSpec::Defended(cfg), _) => Oracle::defended(&s.locked, &s.annotations, seed, cfg)?,
    };
    let mut cfg = config.attack_config.clone();
    cfg.seed = seed;
    let start = Instant::now();
    let result = attack(config.attack, &s.locked, &oracle, &cfg)?;
    let (mut hd, mut oer, mut key_correct) = (None, None, false);
    if let Some(key) = result.key.as_ref().filter(|_| result.status == AttackStatus::Success) {
        key_correct = match &s.original {
            Some(original) => verify_key(&s.locked, original, key)?,
            None => keys_equivalent(&s.locked, key, &s.locked.correct_key)?,
        };
        let reference = KeyedCircuit::new(&s.locked, &s.annotations, &s.locked.correct_key)?;
        let recovered = KeyedCircuit::new(&s.locked, &s.annotations, key)?;
        let m = hd_oer(&reference, &recovered, cfg.patterns, seed ^ 0x4844)?;
        hd = Some(m.hd);
        oer = Some(m.oer);
    }
    let runtime_s = match config.attack {
        AttackKind::Psat => start.elapsed().as_secs_f64(),
        _ => result.runtime_s,
    };
    Ok(RunRecord {
        run: index,
        seed,
        status: result.status,
        key_correct,
        hd,
        oer,
        runtime_s,
        iterations: result.iterations,
        oracle_queries: result.oracle_queries,
        key: result.key,
    })
}

/// Runs `config.runs` independent attacks and aggregates them.
pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignSummary, MetricsError> {
    if config.runs == 0 {
        return Err(MetricsError::EmptyCampaign);
    }
    let work = || {
        (0..config.runs)
            .into_par_iter()
            .map(|i| run_once(config, i))
            .collect::<Result<Vec<_>, _>>()
    };
    let records = match config.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| MetricsError::Report(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    CampaignSummary::from_records(config, records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    JsonLike,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json-like" | "json" => Ok(ReportFormat::JsonLike),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(format!("unknown format {s:?} (expected json-like or csv)")),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::JsonLike => "json-like",
            ReportFormat::Csv => "csv",
        })
    }
}

/// One CSV row: the summary columns repeated, then the run's own columns.
#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    benchmark: String,
    attack: AttackKind,
    pct_prob_gates: f64,
    correctness: f64,
    runs: usize,
    success_rate: f64,
    key_correct_rate: f64,
    mean_hd: Option<f64>,
    mean_oer: Option<f64>,
    mean_runtime_s: f64,
    mean_iterations: f64,
    mean_oracle_queries: f64,
    master_seed: u64,
    run: usize,
    seed: u64,
    status: AttackStatus,
    key_correct: bool,
    hd: Option<f64>,
    oer: Option<f64>,
    runtime_s: f64,
    iterations: usize,
    oracle_queries: u64,
    key: Option<String>,
}

pub fn emit_report(summary: &CampaignSummary, format: ReportFormat) -> Result<String, MetricsError> {
    if summary.records.is_empty() {
        return Err(MetricsError::EmptyCampaign);
    }
    match format {
        ReportFormat::JsonLike => {
            serde_json::to_string_pretty(summary).map_err(|e| MetricsError::Report(e.to_string()))
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &summary.records {
                w.serialize(CsvRow {
                    benchmark: summary.benchmark.clone(),
                    attack: summary.attack,
                    pct_prob_gates: summary.pct_prob_gates,
                    correctness: summary.correctness,
                    runs: summary.runs,
                    success_rate: summary.success_rate,
                    key_correct_rate: summary.key_correct_rate,
                    mean_hd: summary.mean_hd,
                    mean_oer: summary.mean_oer,
                    mean_runtime_s: summary.mean_runtime_s,
                    mean_iterations: summary.mean_iterations,
                    mean_oracle_queries: summary.mean_oracle_queries,
                    master_seed: summary.master_seed,
                    run: r.run,
                    seed: r.seed,
                    status: r.status,
                    key_correct: r.key_correct,
                    hd: r.hd,
                    oer: r.oer,
                    runtime_s: r.runtime_s,
                    iterations: r.iterations,
                    oracle_queries: r.oracle_queries,
                    key: r.key.as_ref().map(|k| k.to_string()),
                })
                .map_err(|e| MetricsError::Report(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| MetricsError::Report(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| MetricsError::Report(e.to_string()))
        }
    }
}

/// Inverse of [`emit_report`].
pub fn parse_report(text: &str, format: ReportFormat) -> Result<CampaignSummary, MetricsError> {
    let err = |e: &dyn fmt::Display| MetricsError::Report(e.to_string());
    match format {
        ReportFormat::JsonLike => serde_json::from_str(text).map_err(|e| err(&e)),
        ReportFormat::Csv => {
            let mut rdr = csv::Reader::from_reader(text.as_bytes());
            let rows: Vec<CsvRow> = rdr.deserialize().collect::<Result<_, _>>().map_err(|e| err(&e))?;
            let first = rows.first().ok_or(MetricsError::EmptyCampaign)?;
            let records = rows
                .iter()
                .map(|r| {
                    Ok(RunRecord {
                        run: r.run,
                        seed: r.seed,
                        status: r.status,
                        key_correct: r.key_correct,
                        hd: r.hd,
                        oer: r.oer,
                        runtime_s: r.runtime_s,
                        iterations: r.iterations,
                        oracle_queries: r.oracle_queries,
                        key: r
                            .key
                            .as_ref()
                            .map(|k| k.parse::<Pattern>())
                            .transpose()
                            .map_err(|e| err(&e))?,
                    })
                })
                .collect::<Result<Vec<_>, MetricsError>>()?;
            Ok(CampaignSummary {
                benchmark: first.benchmark.clone(),
                attack: first.attack,
                pct_prob_gates: first.pct_prob_gates,
                correctness: first.correctness,
                runs: first.runs,
                success_rate: first.success_rate,
                key_correct_rate: first.key_correct_rate,
                mean_hd: first.mean_hd,
                mean_oer: first.mean_oer,
                mean_runtime_s: first.mean_runtime_s,
                mean_iterations: first.mean_iterations,
                mean_oracle_queries: first.mean_oracle_queries,
                master_seed: first.master_seed,
                records,
            })
        }
    }
}
