//! Oracle-guided key-recovery attacks: conventional SAT, Double-DIP and
//! PSAT (Monte-Carlo-sampled responses), on top of a built-in CDCL solver
//! or an external DIMACS solver.
//!
//! All attacks share one incremental formula. Key copies `K0, K1, ...` are
//! each wired into a circuit copy over the shared data inputs `X`; the miter
//! conditions are guarded by activation literals so the final key can be
//! extracted from the same formula by switching the miter off. Every DIP
//! adds the I/O constraint `C(Xd, Ki) = Yd` as a fresh, constant-propagated
//! circuit copy per key copy.

pub mod cnf;
pub mod dimacs;
pub mod solver;
pub mod table;

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::netlist::GateFunction;
use crate::obfuscate::LockedCircuit;
use crate::oracle::{Oracle, OracleError};
use crate::simulate::OutputHistogram;
use crate::Pattern;
use cnf::{constrain, differ, encode_gate, EncodeError, Signal};
use dimacs::ExternalSolver;
use solver::{Lit, SatBackend, SolveResult, Solver};

#[derive(Debug, thiserror::Error)]
pub enum AttackError {
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("oracle answers {oracle} data bits, locked circuit has {circuit}")]
    Width { oracle: usize, circuit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttackKind {
    #[serde(rename = "sat")]
    Sat,
    #[serde(rename = "2dip")]
    DoubleDip,
    #[serde(rename = "psat")]
    Psat,
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttackKind::Sat => "sat",
            AttackKind::DoubleDip => "2dip",
            AttackKind::Psat => "psat",
        })
    }
}

impl FromStr for AttackKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sat" => Ok(AttackKind::Sat),
            "2dip" => Ok(AttackKind::DoubleDip),
            "psat" => Ok(AttackKind::Psat),
            _ => Err(format!("unknown attack kind {s:?} (expected sat, 2dip or psat)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolverChoice {
    Builtin,
    /// Path to an executable taking a DIMACS file argument.
    Dimacs(PathBuf),
}

impl FromStr for SolverChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "builtin" {
            Ok(SolverChoice::Builtin)
        } else if let Some(p) = s.strip_prefix("dimacs:") {
            if p.is_empty() {
                return Err("dimacs: needs a solver path".into());
            }
            Ok(SolverChoice::Dimacs(PathBuf::from(p)))
        } else {
            Err(format!("unknown solver {s:?} (expected builtin or dimacs:<path>)"))
        }
    }
}

#[derive(Debug, Clone)]
pub struct AttackConfig {
    /// Oracle samples per DIP (PSAT only).
    pub samples: u64,
    /// Random patterns for the final HD/OER estimate.
    pub patterns: usize,
    pub max_iterations: usize,
    pub timeout: Duration,
    pub seed: u64,
    pub solver: SolverChoice,
    /// Luby restarts in the built-in solver.
    pub restarts: bool,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            samples: 1000,
            patterns: 10_000,
            max_iterations: 10_000,
            timeout: Duration::from_secs(3600),
            seed: 0,
            solver: SolverChoice::Builtin,
            restarts: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackStatus {
    Success,
    InconsistentOracle,
    IterationCap,
    Timeout,
}

impl fmt::Display for AttackStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttackStatus::Success => "success",
            AttackStatus::InconsistentOracle => "inconsistent_oracle",
            AttackStatus::IterationCap => "iteration_cap",
            AttackStatus::Timeout => "timeout",
        })
    }
}

/// One iteration of an attack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DipRecord {
    pub input: Pattern,
    /// The response used as ground truth.
    pub response: Pattern,
    /// PSAT: whether the dominance rule fired (always true otherwise).
    pub dominant: bool,
    /// Whether the DIP came from the four-copy Double-DIP miter.
    pub double_dip: bool,
    /// Clauses in the formula after adding this DIP's constraints.
    pub clauses: usize,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub kind: AttackKind,
    pub status: AttackStatus,
    pub key: Option<Pattern>,
    pub trace: Vec<DipRecord>,
    pub iterations: usize,
    pub oracle_queries: u64,
    pub runtime_s: f64,
}

impl AttackResult {
    /// One log line per iteration: `iter, dip_hex, response_hex, dominant, clauses, elapsed_s`.
    pub fn trace_lines(&self) -> Vec<String> {
        self.trace
            .iter()
            .enumerate()
            .map(|(i, r)| {
                format!(
                    "{}, {}, {}, {}, {}, {:.6}",
                    i + 1,
                    r.input.to_hex(),
                    r.response.to_hex(),
                    r.dominant,
                    r.clauses,
                    r.elapsed_s
                )
            })
            .collect()
    }
}

/// Chooses the ground-truth response from sampled oracle outputs.
///
/// The most frequent pattern wins outright if it occurred at least as often
/// as the second and third most frequent combined; otherwise a pattern is
/// drawn with probability proportional to its count. Returns the pattern and
/// whether the dominance rule applied.
pub fn ground_truth<R: Rng + ?Sized>(histogram: &OutputHistogram, rng: &mut R) -> (Pattern, bool) {
    let ranked = histogram.ranked();
    assert!(!ranked.is_empty(), "ground truth needs at least one sample");
    let count = |i: usize| ranked.get(i).map_or(0, |r| r.1);
    if count(0) >= count(1) + count(2) {
        return (ranked[0].0.clone(), true);
    }
    let total: u64 = ranked.iter().map(|r| r.1).sum();
    let mut pick = rng.gen_range(0..total);
    for (p, c) in &ranked {
        if pick < *c {
            return (p.clone(), false);
        }
        pick -= c;
    }
    unreachable!()
}

type StrashKey = (GateFunction, Vec<Signal>);

/// Incremental attack formula.
struct Engine<'a> {
    locked: &'a LockedCircuit,
    solver: Box<dyn SatBackend>,
    data_pos: Vec<usize>,
    key_pos: Vec<usize>,
    x: Vec<Lit>,
    keys: Vec<Vec<Lit>>,
    outs: Vec<Vec<Signal>>,
    strash: HashMap<StrashKey, Signal>,
    /// Key copies that still receive I/O constraints.
    constrained: usize,
}

impl<'a> Engine<'a> {
    fn new(locked: &'a LockedCircuit, copies: usize, config: &AttackConfig) -> Result<Self, AttackError> {
        let solver: Box<dyn SatBackend> = match &config.solver {
            SolverChoice::Builtin => {
                let mut s = Solver::new();
                s.set_restarts(config.restarts);
                Box::new(s)
            }
            SolverChoice::Dimacs(p) => Box::new(ExternalSolver::new(p)),
        };
        let inputs = locked.circuit.inputs();
        let key_pos = locked
            .key_input_ids()
            .iter()
            .map(|k| inputs.iter().position(|i| i == k).unwrap())
            .collect();
        let data_pos = locked
            .data_inputs()
            .iter()
            .map(|d| inputs.iter().position(|i| i == d).unwrap())
            .collect();
        let mut e = Self {
            locked,
            solver,
            data_pos,
            key_pos,
            x: Vec::new(),
            keys: Vec::new(),
            outs: Vec::new(),
            strash: HashMap::new(),
            constrained: copies,
        };
        e.x = (0..e.data_pos.len()).map(|_| Lit::pos(e.solver.new_var())).collect();
        for _ in 0..copies {
            let k: Vec<Lit> = (0..e.key_pos.len()).map(|_| Lit::pos(e.solver.new_var())).collect();
            let x: Vec<Signal> = e.x.iter().map(|&l| Signal::Lit(l)).collect();
            let ks: Vec<Signal> = k.iter().map(|&l| Signal::Lit(l)).collect();
            let outs = e.encode_copy(&x, &ks)?;
            e.keys.push(k);
            e.outs.push(outs);
        }
        Ok(e)
    }

    /// Encodes one circuit copy with structural hashing; returns output signals.
    fn encode_copy(&mut self, data: &[Signal], key: &[Signal]) -> Result<Vec<Signal>, AttackError> {
        let c = &self.locked.circuit;
        if !c.is_combinational() {
            return Err(EncodeError::Sequential.into());
        }
        let mut net = vec![Signal::Const(false); c.net_count()];
        for (i, &p) in self.data_pos.iter().enumerate() {
            net[c.inputs()[p]] = data[i];
        }
        for (i, &p) in self.key_pos.iter().enumerate() {
            net[c.inputs()[p]] = key[i];
        }
        for g in c.gates() {
            let fanin: Vec<Signal> = g.fanin.iter().map(|&f| net[f]).collect();
            let key = (g.function.clone(), fanin);
            net[g.output] = match self.strash.get(&key) {
                Some(&s) => s,
                None => {
                    let s = encode_gate(self.solver.as_mut(), &g.function, &key.1, true);
                    self.strash.insert(key, s);
                    s
                }
            };
        }
        Ok(c.outputs().iter().map(|&o| net[o]).collect())
    }

    /// Fresh activation literal `act` with `act → OR(signals)`.
    fn guarded_or(&mut self, signals: &[Signal]) -> Lit {
        let act = Lit::pos(self.solver.new_var());
        if signals.contains(&Signal::Const(true)) {
            return act;
        }
        let mut clause = vec![!act];
        clause.extend(signals.iter().filter_map(|&s| match s {
            Signal::Lit(l) => Some(l),
            Signal::Const(_) => None,
        }));
        self.solver.add_clause(&clause);
        act
    }

    fn output_diffs(&mut self, a: usize, b: usize) -> Vec<Signal> {
        let (oa, ob) = (self.outs[a].clone(), self.outs[b].clone());
        oa.iter()
            .zip(&ob)
            .map(|(&x, &y)| differ(self.solver.as_mut(), x, y))
            .collect()
    }

    fn key_diffs(&mut self, a: usize, b: usize) -> Vec<Signal> {
        let (ka, kb) = (self.keys[a].clone(), self.keys[b].clone());
        ka.iter()
            .zip(&kb)
            .map(|(&x, &y)| differ(self.solver.as_mut(), Signal::Lit(x), Signal::Lit(y)))
            .collect()
    }

    /// `act → (outputs of copies a and b agree)`.
    fn guard_equal(&mut self, act: Lit, a: usize, b: usize) {
        for d in self.output_diffs(a, b) {
            match d {
                Signal::Const(false) => {}
                Signal::Const(true) => self.solver.add_clause(&[!act]),
                Signal::Lit(l) => self.solver.add_clause(&[!act, !l]),
            }
        }
    }

    fn conventional_miter(&mut self) -> Lit {
        let d = self.output_diffs(0, 1);
        self.guarded_or(&d)
    }

    /// Y(K0)=Y(K1), Y(K2)=Y(K3), Y(K0)≠Y(K2), K0≠K1, K2≠K3.
    fn double_dip_miter(&mut self) -> Lit {
        let d02 = self.output_diffs(0, 2);
        let act = self.guarded_or(&d02);
        self.guard_equal(act, 0, 1);
        self.guard_equal(act, 2, 3);
        for (a, b) in [(0, 1), (2, 3)] {
            let kd = self.key_diffs(a, b);
            let mut clause = vec![!act];
            clause.extend(kd.iter().filter_map(|&s| match s {
                Signal::Lit(l) => Some(l),
                Signal::Const(_) => None,
            }));
            self.solver.add_clause(&clause);
        }
        act
    }

    fn model_lit(&self, l: Lit) -> bool {
        self.solver.value(l.var()) != l.is_negated()
    }

    fn dip(&self) -> Pattern {
        let bits: Vec<bool> = self.x.iter().map(|&l| self.model_lit(l)).collect();
        Pattern::from_bools(&bits)
    }

    fn key(&self, copy: usize) -> Pattern {
        let bits: Vec<bool> = self.keys[copy].iter().map(|&l| self.model_lit(l)).collect();
        Pattern::from_bools(&bits)
    }

    fn add_io_constraint(&mut self, input: &Pattern, output: &Pattern) -> Result<(), AttackError> {
        let data: Vec<Signal> = input.iter().map(Signal::Const).collect();
        for copy in 0..self.constrained {
            let key: Vec<Signal> = self.keys[copy].iter().map(|&l| Signal::Lit(l)).collect();
            let outs = self.encode_copy(&data, &key)?;
            for (i, s) in outs.into_iter().enumerate() {
                constrain(self.solver.as_mut(), s, output.get(i));
            }
        }
        Ok(())
    }
}

/// How an attack obtains the ground-truth response for a DIP.
#[allow(clippy::large_enum_variant)]
enum Responder<'o> {
    Single(&'o Oracle),
    Sampled {
        oracle: &'o Oracle,
        samples: u64,
        rng: ChaCha8Rng,
    },
}

impl Responder<'_> {
    fn respond(&mut self, input: &Pattern) -> Result<(Pattern, bool), AttackError> {
        Ok(match self {
            Responder::Single(o) => (o.query(input)?, true),
            Responder::Sampled { oracle, samples, rng } => {
                let h = oracle.sample_histogram(input, (*samples).max(1))?;
                ground_truth(&h, rng)
            }
        })
    }

    fn oracle(&self) -> &Oracle {
        match self {
            Responder::Single(o) | Responder::Sampled { oracle: o, .. } => o,
        }
    }
}

fn run_attack(
    kind: AttackKind,
    locked: &LockedCircuit,
    mut responder: Responder<'_>,
    config: &AttackConfig,
) -> Result<AttackResult, AttackError> {
    let start = Instant::now();
    let oracle = responder.oracle();
    let queries_before = oracle.queries();
    let data_width = locked.data_inputs().len();
    if oracle.data_width() != data_width {
        return Err(AttackError::Width {
            oracle: oracle.data_width(),
            circuit: data_width,
        });
    }
    let finish = |status, key, trace: Vec<DipRecord>, responder: &Responder<'_>| AttackResult {
        kind,
        status,
        key,
        iterations: trace.len(),
        trace,
        oracle_queries: responder.oracle().queries() - queries_before,
        runtime_s: start.elapsed().as_secs_f64(),
    };
    if locked.key_len() == 0 {
        return Ok(finish(
            AttackStatus::Success,
            Some(Pattern::zeros(0)),
            Vec::new(),
            &responder,
        ));
    }

    let double = kind == AttackKind::DoubleDip;
    let mut engine = Engine::new(locked, if double { 4 } else { 2 }, config)?;
    let deadline = start + config.timeout;
    engine.solver.set_deadline(Some(deadline));
    let act_conv = engine.conventional_miter();
    let dd_lit = if double { Some(engine.double_dip_miter()) } else { None };
    let mut act_dd = dd_lit;
    let mut trace = Vec::new();

    loop {
        if Instant::now() >= deadline {
            return Ok(finish(AttackStatus::Timeout, None, trace, &responder));
        }
        if trace.len() >= config.max_iterations {
            return Ok(finish(AttackStatus::IterationCap, None, trace, &responder));
        }
        let assumptions: Vec<Lit> = match act_dd {
            Some(a) => vec![a, !act_conv],
            None => vec![act_conv],
        };
        match engine.solver.solve(&assumptions) {
            SolveResult::Sat => {
                let dip = engine.dip();
                let (response, dominant) = responder.respond(&dip)?;
                engine.add_io_constraint(&dip, &response)?;
                trace.push(DipRecord {
                    input: dip,
                    response,
                    dominant,
                    double_dip: act_dd.is_some(),
                    clauses: engine.solver.num_clauses(),
                    elapsed_s: start.elapsed().as_secs_f64(),
                });
            }
            SolveResult::Unsat => {
                if act_dd.take().is_some() {
                    // No DIP separating two key pairs remains; finish conventionally.
                    engine.constrained = 2;
                    continue;
                }
                break;
            }
            SolveResult::Unknown => return Ok(finish(AttackStatus::Timeout, None, trace, &responder)),
        }
    }

    let mut off = vec![!act_conv];
    off.extend(dd_lit.map(|l| !l));
    match engine.solver.solve(&off) {
        SolveResult::Sat => {
            let key = engine.key(0);
            Ok(finish(AttackStatus::Success, Some(key), trace, &responder))
        }
        SolveResult::Unsat => Ok(finish(AttackStatus::InconsistentOracle, None, trace, &responder)),
        SolveResult::Unknown => Ok(finish(AttackStatus::Timeout, None, trace, &responder)),
    }
}

/// Conventional SAT attack: one oracle query per DIP.
pub fn conventional_attack(
    locked: &LockedCircuit,
    oracle: &Oracle,
    config: &AttackConfig,
) -> Result<AttackResult, AttackError> {
    run_attack(AttackKind::Sat, locked, Responder::Single(oracle), config)
}

/// Double-DIP attack: each DIP separates two pairs of candidate keys; falls
/// back to conventional iterations once no such DIP exists.
pub fn double_dip_attack(
    locked: &LockedCircuit,
    oracle: &Oracle,
    config: &AttackConfig,
) -> Result<AttackResult, AttackError> {
    run_attack(AttackKind::DoubleDip, locked, Responder::Single(oracle), config)
}

/// PSAT: each DIP's response is the ground truth of `config.samples` oracle samples.
pub fn psat_attack(
    locked: &LockedCircuit,
    oracle: &Oracle,
    config: &AttackConfig,
) -> Result<AttackResult, AttackError> {
    let responder = Responder::Sampled {
        oracle,
        samples: config.samples,
        rng: ChaCha8Rng::seed_from_u64(config.seed ^ 0x5053_4154),
    };
    run_attack(AttackKind::Psat, locked, responder, config)
}

pub fn attack(
    kind: AttackKind,
    locked: &LockedCircuit,
    oracle: &Oracle,
    config: &AttackConfig,
) -> Result<AttackResult, AttackError> {
    match kind {
        AttackKind::Sat => conventional_attack(locked, oracle, config),
        AttackKind::DoubleDip => double_dip_attack(locked, oracle, config),
        AttackKind::Psat => psat_attack(locked, oracle, config),
    }
}
