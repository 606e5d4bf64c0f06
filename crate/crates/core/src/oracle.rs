//! Black-box access to a correctly keyed circuit.
//!
//! Attacks see only the data inputs and the primary outputs. Every query
//! consumes one sample index from an atomic counter, which both accounts
//! for the query and makes stochastic answers reproducible from the seed.

use std::collections::{HashMap, VecDeque};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use crate::obfuscate::{BehaviorAnnotation, LockedCircuit};
use crate::simulate::{OutputHistogram, SampleContext, SimError, Simulator};
use crate::Pattern;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("query has {got} bits, oracle expects {expected}")]
    Width { expected: usize, got: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("invalid defense configuration: {0}")]
    Defense(String),
}

/// Decides whether the input stream looks like an attack.
pub trait Detector: Send {
    /// Records one query; returns true if it should trigger escalation.
    fn observe(&mut self, input: &Pattern) -> bool;
}

/// Triggers when one input occurs `threshold` times within the last
/// `window` queries.
#[derive(Debug, Clone)]
pub struct RepeatDetector {
    window: usize,
    threshold: usize,
    recent: VecDeque<Pattern>,
    counts: HashMap<Pattern, usize>,
}

impl RepeatDetector {
    pub fn new(window: usize, threshold: usize) -> Self {
        Self {
            window,
            threshold,
            recent: VecDeque::with_capacity(window + 1),
            counts: HashMap::new(),
        }
    }
}

impl Detector for RepeatDetector {
    fn observe(&mut self, input: &Pattern) -> bool {
        if self.window == 0 {
            return false;
        }
        self.recent.push_back(input.clone());
        let count = {
            let c = self.counts.entry(input.clone()).or_default();
            *c += 1;
            *c
        };
        if self.recent.len() > self.window {
            let old = self.recent.pop_front().unwrap();
            if let Some(c) = self.counts.get_mut(&old) {
                *c -= 1;
                if *c == 0 {
                    self.counts.remove(&old);
                }
            }
        }
        count >= self.threshold
    }
}

/// Counter-based error-scrambling defense.
#[derive(Debug, Clone, PartialEq)]
pub struct DefenseConfig {
    /// Sliding window length, in queries.
    pub window: usize,
    /// Repetitions of one input within the window that trigger escalation.
    pub threshold: usize,
    /// Queries served at escalated error after a trigger.
    pub duration: u64,
    pub escalated_correctness: f64,
    /// Gates driven into high-error operation; `None` means every annotated gate.
    pub monitored: Option<Vec<String>>,
}

impl Default for DefenseConfig {
    fn default() -> Self {
        Self {
            window: 64,
            threshold: 4,
            duration: 1024,
            escalated_correctness: 0.5,
            monitored: None,
        }
    }
}

impl DefenseConfig {
    pub fn validate(&self) -> Result<(), OracleError> {
        if self.threshold == 0 || self.threshold > self.window {
            return Err(OracleError::Defense(format!(
                "threshold {} must be in 1..={}",
                self.threshold, self.window
            )));
        }
        if !(0.5..=1.0).contains(&self.escalated_correctness) {
            return Err(OracleError::Defense(format!(
                "escalated correctness {} outside [0.5, 1]",
                self.escalated_correctness
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleVariant {
    Deterministic,
    Probabilistic,
    Defended,
}

struct DefenseState {
    detector: Box<dyn Detector>,
    duration: u64,
    escalated_until: u64,
    triggers: u64,
}

/// A working chip: the locked circuit with its correct key applied.
pub struct Oracle {
    sim: Simulator,
    escalated: Option<Simulator>,
    variant: OracleVariant,
    key: Pattern,
    data_positions: Vec<usize>,
    key_positions: Vec<usize>,
    seed: u64,
    stream: u64,
    queries: AtomicU64,
    defense: Option<Mutex<DefenseState>>,
}

impl std::fmt::Debug for Oracle {
    // The key stays out of debug output.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Oracle")
            .field("variant", &self.variant)
            .field("data_width", &self.data_positions.len())
            .field("queries", &self.queries())
            .finish_non_exhaustive()
    }
}

impl Oracle {
    fn build(
        locked: &LockedCircuit,
        annotations: &[BehaviorAnnotation],
        variant: OracleVariant,
        seed: u64,
    ) -> Result<Self, OracleError> {
        let sim = Simulator::with_annotations(&locked.circuit, annotations)?;
        let inputs = locked.circuit.inputs();
        let key_ids = locked.key_input_ids();
        let key_positions = key_ids
            .iter()
            .map(|k| {
                inputs
                    .iter()
                    .position(|i| i == k)
                    .expect("key inputs are primary inputs")
            })
            .collect();
        let data_positions = locked
            .data_inputs()
            .iter()
            .map(|d| inputs.iter().position(|i| i == d).unwrap())
            .collect();
        Ok(Self {
            sim,
            escalated: None,
            variant,
            key: locked.correct_key.clone(),
            data_positions,
            key_positions,
            seed,
            stream: 0,
            queries: AtomicU64::new(0),
            defense: None,
        })
    }

    /// Exact answers; annotations are ignored.
    pub fn deterministic(locked: &LockedCircuit) -> Result<Self, OracleError> {
        Self::build(locked, &[], OracleVariant::Deterministic, 0)
    }

    /// One stochastic sample per query.
    pub fn probabilistic(
        locked: &LockedCircuit,
        annotations: &[BehaviorAnnotation],
        seed: u64,
    ) -> Result<Self, OracleError> {
        Self::build(locked, annotations, OracleVariant::Probabilistic, seed)
    }

    /// Probabilistic oracle guarded by the default repeat detector.
    pub fn defended(
        locked: &LockedCircuit,
        annotations: &[BehaviorAnnotation],
        seed: u64,
        config: &DefenseConfig,
    ) -> Result<Self, OracleError> {
        let detector = Box::new(RepeatDetector::new(config.window, config.threshold));
        Self::defended_with(locked, annotations, seed, config, detector)
    }

    /// Defended oracle with a custom detector; `window`/`threshold` of the
    /// config are then only validated, not used.
    pub fn defended_with(
        locked: &LockedCircuit,
        annotations: &[BehaviorAnnotation],
        seed: u64,
        config: &DefenseConfig,
        detector: Box<dyn Detector>,
    ) -> Result<Self, OracleError> {
        config.validate()?;
        let mut oracle = Self::build(locked, annotations, OracleVariant::Defended, seed)?;
        let monitored: Vec<String> = match &config.monitored {
            Some(m) => m.clone(),
            None => annotations.iter().map(|a| a.gate.clone()).collect(),
        };
        let mut escalated = oracle.sim.clone();
        for name in &monitored {
            let g = locked
                .circuit
                .gate_by_name(name)
                .ok_or_else(|| OracleError::Defense(format!("unknown monitored gate {name:?}")))?;
            escalated.force_probabilistic(g, config.escalated_correctness);
        }
        oracle.escalated = Some(escalated);
        oracle.defense = Some(Mutex::new(DefenseState {
            detector,
            duration: config.duration,
            escalated_until: 0,
            triggers: 0,
        }));
        Ok(oracle)
    }

    /// Selects an independent random stream (e.g. one per campaign run).
    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn variant(&self) -> OracleVariant {
        self.variant
    }

    pub fn data_width(&self) -> usize {
        self.data_positions.len()
    }

    pub fn output_width(&self) -> usize {
        self.sim.circuit().outputs().len()
    }

    /// Total single queries answered so far.
    pub fn queries(&self) -> u64 {
        self.queries.load(Ordering::SeqCst)
    }

    /// Number of times the defense escalated.
    pub fn defense_triggers(&self) -> u64 {
        self.defense.as_ref().map_or(0, |d| d.lock().unwrap().triggers)
    }

    fn full_input(&self, data: &Pattern) -> Result<Pattern, OracleError> {
        if data.len() != self.data_positions.len() {
            return Err(OracleError::Width {
                expected: self.data_positions.len(),
                got: data.len(),
            });
        }
        let mut full = Pattern::zeros(self.data_positions.len() + self.key_positions.len());
        for (i, &p) in self.data_positions.iter().enumerate() {
            full.set(p, data.get(i));
        }
        for (i, &p) in self.key_positions.iter().enumerate() {
            full.set(p, self.key.get(i));
        }
        Ok(full)
    }

    fn ctx(&self, sample: u64) -> SampleContext {
        SampleContext::new(self.seed, self.stream, sample)
    }

    /// One query.
    pub fn query(&self, input: &Pattern) -> Result<Pattern, OracleError> {
        let full = self.full_input(input)?;
        let index = self.queries.fetch_add(1, Ordering::SeqCst);
        self.answer(input, &full, index)
    }

    fn answer(&self, input: &Pattern, full: &Pattern, index: u64) -> Result<Pattern, OracleError> {
        Ok(match self.variant {
            OracleVariant::Deterministic => self.sim.eval(full)?,
            OracleVariant::Probabilistic => self.sim.sample(full, self.ctx(index))?,
            OracleVariant::Defended => {
                let escalate = {
                    let mut state = self.defense.as_ref().unwrap().lock().unwrap();
                    if state.detector.observe(input) {
                        if index >= state.escalated_until {
                            state.triggers += 1;
                        }
                        // The triggering query and the following `duration` ones are scrambled.
                        state.escalated_until = index + 1 + state.duration;
                    }
                    index < state.escalated_until
                };
                let sim = if escalate {
                    self.escalated.as_ref().unwrap()
                } else {
                    &self.sim
                };
                sim.sample(full, self.ctx(index))?
            }
        })
    }

    /// `n` queries of the same input, aggregated. Counts `n` queries.
    pub fn sample_histogram(&self, input: &Pattern, n: u64) -> Result<OutputHistogram, OracleError> {
        let full = self.full_input(input)?;
        match self.variant {
            OracleVariant::Deterministic => {
                let out = self.sim.eval(&full)?;
                self.queries.fetch_add(n, Ordering::SeqCst);
                let mut h = OutputHistogram::default();
                for _ in 0..n {
                    h.add(out.clone());
                }
                Ok(h)
            }
            OracleVariant::Probabilistic => {
                let first = self.queries.fetch_add(n, Ordering::SeqCst);
                Ok(self.sim.sample_outputs(&full, n, self.ctx(first))?)
            }
            OracleVariant::Defended => {
                let mut h = OutputHistogram::default();
                for _ in 0..n {
                    let index = self.queries.fetch_add(1, Ordering::SeqCst);
                    h.add(self.answer(input, &full, index)?);
                }
                Ok(h)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_bench;
    use crate::obfuscate::{insert_key_gates, Behavior};

    const C17: &str = "INPUT(1)\nINPUT(2)\nINPUT(3)\nINPUT(6)\nINPUT(7)\nOUTPUT(22)\nOUTPUT(23)\n\
        10 = NAND(1, 3)\n11 = NAND(3, 6)\n16 = NAND(2, 11)\n19 = NAND(11, 7)\n22 = NAND(10, 16)\n23 = NAND(16, 19)\n";

    fn buffer() -> (LockedCircuit, Vec<BehaviorAnnotation>) {
        let c = parse_bench("INPUT(a)\nOUTPUT(y)\ny = BUFF(a)\n").unwrap();
        let ann = vec![BehaviorAnnotation {
            gate: "y".into(),
            behavior: Behavior::Probabilistic { correctness: 0.95 },
        }];
        (LockedCircuit::plain(c), ann)
    }

    #[test]
    fn deterministic_c17_counts_queries() {
        let locked = insert_key_gates(&parse_bench(C17).unwrap(), 3, 1).unwrap();
        let o = Oracle::deterministic(&locked).unwrap();
        assert_eq!(o.data_width(), 5);
        assert_eq!(o.query(&Pattern::zeros(5)).unwrap().to_string(), "00");
        o.sample_histogram(&Pattern::zeros(5), 10).unwrap();
        assert_eq!(o.queries(), 11);
        assert!(matches!(o.query(&Pattern::zeros(8)), Err(OracleError::Width { .. })));
    }

    #[test]
    fn single_queries_match_histogram_sampling() {
        let (locked, ann) = buffer();
        let a = Oracle::probabilistic(&locked, &ann, 9).unwrap();
        let b = Oracle::probabilistic(&locked, &ann, 9).unwrap();
        let h = a.sample_histogram(&Pattern::zeros(1), 500).unwrap();
        let mut h2 = OutputHistogram::default();
        for _ in 0..500 {
            h2.add(b.query(&Pattern::zeros(1)).unwrap());
        }
        assert_eq!(h, h2);
    }

    #[test]
    fn repeat_detector_threshold() {
        let mut d = RepeatDetector::new(10, 3);
        let p = Pattern::zeros(2);
        assert!(!d.observe(&p));
        assert!(!d.observe(&p));
        assert!(d.observe(&p));
        let mut d = RepeatDetector::new(10, 3);
        for i in 0..100u64 {
            assert!(!d.observe(&Pattern::from_u64(i, 8)));
        }
    }

    #[test]
    fn escalation_scrambles_outputs() {
        let (locked, ann) = buffer();
        let o = Oracle::defended(
            &locked,
            &ann,
            3,
            &DefenseConfig {
                threshold: 3,
                window: 10,
                ..Default::default()
            },
        )
        .unwrap();
        let h = o.sample_histogram(&Pattern::zeros(1), 10_000).unwrap();
        let f = h.frequency(&Pattern::from_u64(1, 1));
        assert!((f - 0.5).abs() < 0.03, "{f}");
        assert!(o.defense_triggers() >= 1);
    }

    #[test]
    fn unreachable_threshold_matches_probabilistic() {
        let (locked, ann) = buffer();
        let cfg = DefenseConfig {
            threshold: 1000,
            window: 1000,
            ..Default::default()
        };
        let d = Oracle::defended(&locked, &ann, 4, &cfg).unwrap();
        let p = Oracle::probabilistic(&locked, &ann, 4).unwrap();
        let x = Pattern::zeros(1);
        for _ in 0..999 {
            assert_eq!(d.query(&x).unwrap(), p.query(&x).unwrap());
        }
        assert!(DefenseConfig {
            threshold: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
