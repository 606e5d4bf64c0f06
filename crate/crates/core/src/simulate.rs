//! Bit-parallel logic simulation with stochastic gates.
//!
//! Every stochastic draw is a pure function of `(seed, stream, gate, sample)`
//! through a counter-based hash, so results do not depend on evaluation
//! order, batching or thread count. Lane `l` of a 64-bit word evaluates
//! sample `first_sample + l`.

use std::collections::BTreeMap;

use crate::netlist::{Circuit, GateFunction, NetId};
use crate::obfuscate::{validate_annotations, Behavior, BehaviorAnnotation, ObfuscateError};
use crate::Pattern;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("circuit contains flip-flops; unroll it first")]
    Sequential,
    #[error(transparent)]
    Annotation(#[from] ObfuscateError),
    #[error("expected {expected} input bits, got {got}")]
    InputWidth { expected: usize, got: usize },
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic 64-bit hash of a draw coordinate.
pub fn counter_hash(seed: u64, stream: u64, gate: u64, sample: u64) -> u64 {
    const G: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut h = mix(seed.wrapping_add(G));
    h = mix(h ^ stream.wrapping_mul(G).wrapping_add(1));
    h = mix(h ^ gate.wrapping_mul(0xd6e8_feb8_6659_fd93).wrapping_add(2));
    mix(h ^ sample.wrapping_mul(0xa076_1d64_78bd_642f).wrapping_add(3))
}

/// Uniform draw in `[0, 1)` for a coordinate.
pub fn counter_uniform(seed: u64, stream: u64, gate: u64, sample: u64) -> f64 {
    (counter_hash(seed, stream, gate, sample) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// How often a polymorphic gate redraws its function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PolymorphicMode {
    /// A fresh function on every evaluation.
    #[default]
    PerEvaluation,
    /// One function per block of this many consecutive samples.
    Epoch(u64),
}

/// Where stochastic draws come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleContext {
    pub seed: u64,
    pub stream: u64,
    pub first_sample: u64,
}

impl SampleContext {
    pub fn new(seed: u64, stream: u64, first_sample: u64) -> Self {
        Self {
            seed,
            stream,
            first_sample,
        }
    }
}

#[derive(Debug, Clone)]
enum Compiled {
    Deterministic,
    Probabilistic {
        correctness: f64,
    },
    Polymorphic {
        functions: Vec<GateFunction>,
        cumulative: Vec<f64>,
    },
}

/// A circuit prepared for repeated simulation.
#[derive(Debug, Clone)]
pub struct Simulator {
    circuit: Circuit,
    behavior: Vec<Compiled>,
    mode: PolymorphicMode,
}

impl Simulator {
    /// Purely deterministic simulator.
    pub fn new(circuit: &Circuit) -> Result<Self, SimError> {
        Self::with_annotations(circuit, &[])
    }

    pub fn with_annotations(circuit: &Circuit, annotations: &[BehaviorAnnotation]) -> Result<Self, SimError> {
        if !circuit.is_combinational() {
            return Err(SimError::Sequential);
        }
        validate_annotations(circuit, annotations)?;
        let mut behavior = vec![Compiled::Deterministic; circuit.gate_count()];
        for a in annotations {
            let g = circuit.gate_by_name(&a.gate).expect("validated");
            behavior[g] = match &a.behavior {
                Behavior::Probabilistic { correctness } => Compiled::Probabilistic {
                    correctness: *correctness,
                },
                Behavior::Polymorphic { distribution } => {
                    let mut acc = 0.0;
                    let cumulative = distribution
                        .iter()
                        .map(|(_, p)| {
                            acc += p;
                            acc
                        })
                        .collect();
                    Compiled::Polymorphic {
                        functions: distribution.iter().map(|(f, _)| f.clone()).collect(),
                        cumulative,
                    }
                }
            };
        }
        Ok(Self {
            circuit: circuit.clone(),
            behavior,
            mode: PolymorphicMode::PerEvaluation,
        })
    }

    pub fn with_mode(mut self, mode: PolymorphicMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    /// Whether any gate behaves stochastically.
    pub fn is_stochastic(&self) -> bool {
        self.behavior.iter().any(|b| !matches!(b, Compiled::Deterministic))
    }

    /// Changes the correctness of every probabilistic gate.
    pub fn set_all_correctness(&mut self, c: f64) {
        for b in &mut self.behavior {
            if let Compiled::Probabilistic { correctness } = b {
                *correctness = c;
            }
        }
    }

    /// Sets the correctness of probabilistic gate `gate` (by gate index).
    pub fn set_correctness(&mut self, gate: usize, c: f64) {
        if let Compiled::Probabilistic { correctness } = &mut self.behavior[gate] {
            *correctness = c;
        }
    }

    /// Makes gate `gate` probabilistic at correctness `c`, whatever it was.
    pub fn force_probabilistic(&mut self, gate: usize, c: f64) {
        self.behavior[gate] = Compiled::Probabilistic { correctness: c };
    }

    pub fn probabilistic_gates(&self) -> Vec<usize> {
        (0..self.behavior.len())
            .filter(|&g| matches!(self.behavior[g], Compiled::Probabilistic { .. }))
            .collect()
    }

    /// Evaluates one word per primary input; returns one word per net.
    /// With `ctx == None` every gate computes its nominal function.
    pub fn eval_nets(&self, inputs: &[u64], ctx: Option<SampleContext>) -> Vec<u64> {
        let mut values = vec![0u64; self.circuit.net_count()];
        self.eval_into(inputs, ctx, 64, &mut values);
        values
    }

    /// Only the first `lanes` lanes receive stochastic draws; the rest
    /// compute nominally (and are ignored by callers).
    fn eval_into(&self, inputs: &[u64], ctx: Option<SampleContext>, lanes: u64, values: &mut [u64]) {
        for (&net, &w) in self.circuit.inputs().iter().zip(inputs) {
            values[net] = w;
        }
        let mut fanin = Vec::with_capacity(4);
        for (g, gate) in self.circuit.gates().iter().enumerate() {
            fanin.clear();
            fanin.extend(gate.fanin.iter().map(|&f| values[f]));
            let nominal = || gate.function.eval_words(&fanin);
            values[gate.output] = match (&self.behavior[g], ctx) {
                (Compiled::Deterministic, _) | (_, None) => nominal(),
                (Compiled::Probabilistic { correctness }, Some(ctx)) => {
                    let mut flips = 0u64;
                    if *correctness < 1.0 {
                        for lane in 0..lanes {
                            let u = counter_uniform(ctx.seed, ctx.stream, g as u64, ctx.first_sample + lane);
                            if u >= *correctness {
                                flips |= 1 << lane;
                            }
                        }
                    }
                    nominal() ^ flips
                }
                (Compiled::Polymorphic { functions, cumulative }, Some(ctx)) => {
                    let mut masks = vec![0u64; functions.len()];
                    for lane in 0..lanes {
                        let sample = ctx.first_sample + lane;
                        let key = match self.mode {
                            PolymorphicMode::PerEvaluation => sample,
                            PolymorphicMode::Epoch(n) => sample / n.max(1),
                        };
                        let u = counter_uniform(ctx.seed, ctx.stream, g as u64, key);
                        let i = cumulative.iter().position(|&c| u < c).unwrap_or(functions.len() - 1);
                        masks[i] |= 1 << lane;
                    }
                    let rest = if lanes >= 64 { 0 } else { !0u64 << lanes };
                    let base = nominal() & rest;
                    functions
                        .iter()
                        .zip(&masks)
                        .filter(|(_, &m)| m != 0)
                        .fold(base, |acc, (f, &m)| acc | (f.eval_words(&fanin) & m))
                }
            };
        }
    }

    /// Evaluates one word per primary input; returns one word per output.
    pub fn eval_words(&self, inputs: &[u64], ctx: Option<SampleContext>) -> Vec<u64> {
        let values = self.eval_nets(inputs, ctx);
        self.circuit.outputs().iter().map(|&o| values[o]).collect()
    }

    fn check_width(&self, len: usize) -> Result<(), SimError> {
        let expected = self.circuit.inputs().len();
        if len != expected {
            return Err(SimError::InputWidth { expected, got: len });
        }
        Ok(())
    }

    /// Nominal (deterministic) evaluation of one input pattern.
    pub fn eval(&self, inputs: &Pattern) -> Result<Pattern, SimError> {
        self.check_width(inputs.len())?;
        Ok(unpack_lane(&self.eval_words(&broadcast(inputs), None), 0))
    }

    /// One stochastic evaluation of `inputs` as sample `ctx.first_sample`.
    pub fn sample(&self, inputs: &Pattern, ctx: SampleContext) -> Result<Pattern, SimError> {
        self.check_width(inputs.len())?;
        let mut values = vec![0u64; self.circuit.net_count()];
        self.eval_into(&broadcast(inputs), Some(ctx), 1, &mut values);
        Ok(nets_lane(&values, self.circuit.outputs(), 0))
    }

    /// Evaluates many patterns, pattern `i` as sample `ctx.first_sample + i`
    /// (nominally when `ctx` is `None`).
    pub fn eval_batch(&self, patterns: &[Pattern], ctx: Option<SampleContext>) -> Result<Vec<Pattern>, SimError> {
        let mut out = Vec::with_capacity(patterns.len());
        let mut values = vec![0u64; self.circuit.net_count()];
        for (block, chunk) in patterns.chunks(64).enumerate() {
            for p in chunk {
                self.check_width(p.len())?;
            }
            let words = pack(chunk, self.circuit.inputs().len());
            let ctx = ctx.map(|c| SampleContext {
                first_sample: c.first_sample + 64 * block as u64,
                ..c
            });
            self.eval_into(&words, ctx, chunk.len() as u64, &mut values);
            let outs: Vec<u64> = self.circuit.outputs().iter().map(|&o| values[o]).collect();
            out.extend((0..chunk.len()).map(|l| unpack_lane(&outs, l)));
        }
        Ok(out)
    }

    /// Output distribution of `n` stochastic evaluations of one pattern.
    pub fn sample_outputs(&self, inputs: &Pattern, n: u64, ctx: SampleContext) -> Result<OutputHistogram, SimError> {
        self.check_width(inputs.len())?;
        let words = broadcast(inputs);
        let mut hist = OutputHistogram::default();
        let mut values = vec![0u64; self.circuit.net_count()];
        let mut done = 0;
        while done < n {
            let lanes = (n - done).min(64) as usize;
            let c = SampleContext {
                first_sample: ctx.first_sample + done,
                ..ctx
            };
            self.eval_into(&words, Some(c), lanes as u64, &mut values);
            let outs: Vec<u64> = self.circuit.outputs().iter().map(|&o| values[o]).collect();
            for l in 0..lanes {
                hist.add(unpack_lane(&outs, l));
            }
            done += lanes as u64;
        }
        Ok(hist)
    }
}

/// The same pattern in every lane.
pub fn broadcast(p: &Pattern) -> Vec<u64> {
    p.iter().map(|b| if b { !0 } else { 0 }).collect()
}

/// Packs up to 64 patterns (one per lane) into one word per bit position.
pub fn pack(patterns: &[Pattern], width: usize) -> Vec<u64> {
    debug_assert!(patterns.len() <= 64);
    let mut words = vec![0u64; width];
    for (lane, p) in patterns.iter().enumerate() {
        for (i, w) in words.iter_mut().enumerate() {
            if p.get(i) {
                *w |= 1 << lane;
            }
        }
    }
    words
}

/// Extracts lane `lane` as a pattern.
pub fn unpack_lane(words: &[u64], lane: usize) -> Pattern {
    let bits: Vec<bool> = words.iter().map(|w| w >> lane & 1 == 1).collect();
    Pattern::from_bools(&bits)
}

/// Reads the values of selected nets from `eval_nets` output for one lane.
pub fn nets_lane(values: &[u64], nets: &[NetId], lane: usize) -> Pattern {
    let bits: Vec<bool> = nets.iter().map(|&n| values[n] >> lane & 1 == 1).collect();
    Pattern::from_bools(&bits)
}

/// Counts of observed output patterns.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OutputHistogram {
    counts: BTreeMap<Pattern, u64>,
    total: u64,
}

impl OutputHistogram {
    pub fn add(&mut self, p: Pattern) {
        *self.counts.entry(p).or_default() += 1;
        self.total += 1;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, p: &Pattern) -> u64 {
        self.counts.get(p).copied().unwrap_or(0)
    }

    pub fn frequency(&self, p: &Pattern) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(p) as f64 / self.total as f64
        }
    }

    /// Patterns by descending count, ties broken by ascending pattern.
    pub fn ranked(&self) -> Vec<(Pattern, u64)> {
        let mut v: Vec<(Pattern, u64)> = self.counts.iter().map(|(p, &c)| (p.clone(), c)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        v
    }

    pub fn most_frequent(&self) -> Option<Pattern> {
        self.ranked().into_iter().next().map(|(p, _)| p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_bench;

    const TEXT: &str = "INPUT(a)\nINPUT(b)\nOUTPUT(y)\nOUTPUT(z)\nt = NAND(a, b)\ny = NOT(t)\nz = XOR(a, t)\n";

    #[test]
    fn nominal_eval_matches_truth_table() {
        let c = parse_bench(TEXT).unwrap();
        let sim = Simulator::new(&c).unwrap();
        for x in 0..4u64 {
            let (a, b) = (x & 1 == 1, x & 2 == 2);
            let out = sim.eval(&Pattern::from_u64(x, 2)).unwrap();
            let t = !(a && b);
            assert_eq!(out.to_bools(), vec![!t, a ^ t]);
        }
        assert!(matches!(sim.eval(&Pattern::zeros(3)), Err(SimError::InputWidth { .. })));
    }

    #[test]
    fn batch_agrees_with_single() {
        let c = parse_bench(TEXT).unwrap();
        let sim = Simulator::new(&c).unwrap();
        let pats: Vec<Pattern> = (0..150).map(|i| Pattern::from_u64(i % 4, 2)).collect();
        let batch = sim.eval_batch(&pats, None).unwrap();
        for (p, o) in pats.iter().zip(&batch) {
            assert_eq!(&sim.eval(p).unwrap(), o);
        }
    }

    #[test]
    fn probabilistic_flip_rate_and_determinism() {
        let c = parse_bench("INPUT(a)\nOUTPUT(y)\ny = BUFF(a)\n").unwrap();
        let ann = vec![BehaviorAnnotation {
            gate: "y".into(),
            behavior: Behavior::Probabilistic { correctness: 0.9 },
        }];
        let sim = Simulator::with_annotations(&c, &ann).unwrap();
        let ctx = SampleContext::new(42, 0, 0);
        let h = sim.sample_outputs(&Pattern::zeros(1), 100_000, ctx).unwrap();
        let wrong = h.frequency(&Pattern::from_u64(1, 1));
        assert!((wrong - 0.1).abs() < 0.005, "{wrong}");
        assert_eq!(h, sim.sample_outputs(&Pattern::zeros(1), 100_000, ctx).unwrap());
        // Single-sample evaluation agrees with the corresponding lane.
        let one = sim.sample(&Pattern::zeros(1), SampleContext::new(42, 0, 77)).unwrap();
        let batch = sim.eval_batch(&vec![Pattern::zeros(1); 100], Some(ctx)).unwrap();
        assert_eq!(one, batch[77]);
    }

    #[test]
    fn polymorphic_draws_follow_distribution() {
        let c = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)\n").unwrap();
        let ann = vec![BehaviorAnnotation {
            gate: "y".into(),
            behavior: Behavior::Polymorphic {
                distribution: vec![(GateFunction::and(2), 0.75), (GateFunction::or(2), 0.25)],
            },
        }];
        let sim = Simulator::with_annotations(&c, &ann).unwrap();
        // Inputs 10: AND gives 0, OR gives 1.
        let h = sim
            .sample_outputs(&Pattern::from_u64(1, 2), 40_000, SampleContext::new(1, 2, 0))
            .unwrap();
        assert!((h.frequency(&Pattern::from_u64(1, 1)) - 0.25).abs() < 0.01);
        let epoch = sim.clone().with_mode(PolymorphicMode::Epoch(1000));
        let h = epoch
            .sample_outputs(&Pattern::from_u64(1, 2), 1000, SampleContext::new(1, 2, 0))
            .unwrap();
        assert_eq!(h.ranked().len(), 1);
    }

    #[test]
    fn histogram_ties_break_on_pattern() {
        let mut h = OutputHistogram::default();
        h.add("10".parse().unwrap());
        h.add("01".parse().unwrap());
        assert_eq!(h.most_frequent().unwrap().to_string(), "01");
        assert_eq!(h.total(), 2);
    }

    #[test]
    fn hash_is_sensitive_to_every_coordinate() {
        let base = counter_hash(1, 2, 3, 4);
        assert_ne!(base, counter_hash(0, 2, 3, 4));
        assert_ne!(base, counter_hash(1, 0, 3, 4));
        assert_ne!(base, counter_hash(1, 2, 0, 4));
        assert_ne!(base, counter_hash(1, 2, 3, 0));
    }
}
