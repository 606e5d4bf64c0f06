//! Obfuscation transforms: XOR/XNOR key-gate locking, MUX-model
//! camouflaging, and probabilistic/polymorphic behavior annotations.
//!
//! Every transform returns a [`LockedCircuit`]: the new netlist, the names of
//! its key inputs (always appended after the data inputs) and the key that
//! restores the original function.

mod behavior;
mod camo;

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use behavior::{
    annotate_circuit, annotations_from_pragmas, annotations_to_pragmas, make_polymorphic, make_probabilistic,
    polymorphic_distribution, validate_annotations, with_correctness_overrides, Behavior, BehaviorAnnotation,
};
pub use camo::{camouflage, supports, CamoRecord, FunctionSet};

use crate::netlist::{Circuit, CircuitBuilder, GateFunction, NetId, NetlistError};
use crate::Pattern;

#[derive(Debug, thiserror::Error)]
pub enum ObfuscateError {
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error("unknown gate {0:?}")]
    UnknownGate(String),
    #[error("function set {0:?} has fewer than two functions")]
    DegenerateSet(String),
    #[error("invalid function set: {0}")]
    InvalidSet(String),
    #[error("gate {gate:?} has {arity} inputs, set {set:?} does not")]
    ArityMismatch { gate: String, arity: usize, set: String },
    #[error("gate {gate:?} computes {function}, which set {set:?} cannot cloak")]
    FunctionNotInSet {
        gate: String,
        function: String,
        set: String,
    },
    #[error("fraction {0} outside (0, 1]")]
    Fraction(f64),
    #[error("circuit has no gates to select from")]
    NoGates,
    #[error("requested {requested} key gates but only {available} nets are eligible")]
    TooManyKeyGates { requested: usize, available: usize },
    #[error("circuit contains flip-flops; unroll it first")]
    Sequential,
    #[error("invalid annotation for gate {gate:?}: {message}")]
    Annotation { gate: String, message: String },
    #[error("malformed pragma {line:?}: {message}")]
    Pragma { line: String, message: String },
    #[error("key sidecar: {0}")]
    Sidecar(#[from] serde_json::Error),
}

/// A seeded random subset of gates, stored by output-net name.
///
/// `gates` is a prefix of a seeded permutation of all gates, so selections
/// made with the same seed at different fractions are nested and
/// [`Selection::truncated`] yields a uniformly random sub-selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub seed: u64,
    pub fraction: f64,
    pub gates: Vec<String>,
}

impl Selection {
    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Keeps the first `count` gates (a random subset, since the order is random).
    pub fn truncated(&self, count: usize) -> Selection {
        Selection {
            seed: self.seed,
            fraction: self.fraction,
            gates: self.gates[..count.min(self.gates.len())].to_vec(),
        }
    }
}

/// Number of gates selected for `fraction` of `total`, rounded down.
pub fn selection_size(total: usize, fraction: f64) -> usize {
    // The epsilon absorbs binary rounding, e.g. 0.29 * 100 = 28.999...
    ((fraction * total as f64) + 1e-9).floor() as usize
}

/// Selects `floor(fraction * gates)` gates uniformly at random.
pub fn select_gates_random(circuit: &Circuit, fraction: f64, seed: u64) -> Result<Selection, ObfuscateError> {
    select_gates_where(circuit, fraction, seed, |_| true)
}

/// Like [`select_gates_random`], restricted to gates accepted by `eligible`;
/// the fraction applies to the total gate count.
pub fn select_gates_where(
    circuit: &Circuit,
    fraction: f64,
    seed: u64,
    eligible: impl Fn(usize) -> bool,
) -> Result<Selection, ObfuscateError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(ObfuscateError::Fraction(fraction));
    }
    if circuit.gate_count() == 0 {
        return Err(ObfuscateError::NoGates);
    }
    let mut order: Vec<usize> = (0..circuit.gate_count()).filter(|&g| eligible(g)).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = selection_size(circuit.gate_count(), fraction).min(order.len());
    Ok(Selection {
        seed,
        fraction,
        gates: order[..n].iter().map(|&g| circuit.gate_name(g).to_string()).collect(),
    })
}

/// An obfuscated netlist together with its key interface and correct key.
#[derive(Debug, Clone)]
pub struct LockedCircuit {
    pub circuit: Circuit,
    pub key_inputs: Vec<String>,
    pub correct_key: Pattern,
    pub camo: Vec<CamoRecord>,
}

impl LockedCircuit {
    /// Wraps a circuit without any key inputs.
    pub fn plain(circuit: Circuit) -> Self {
        Self {
            circuit,
            key_inputs: Vec::new(),
            correct_key: Pattern::zeros(0),
            camo: Vec::new(),
        }
    }

    pub fn key_len(&self) -> usize {
        self.key_inputs.len()
    }

    /// Primary inputs that are not key inputs, in declaration order.
    pub fn data_inputs(&self) -> Vec<NetId> {
        let keys: HashSet<&str> = self.key_inputs.iter().map(String::as_str).collect();
        self.circuit
            .inputs()
            .iter()
            .copied()
            .filter(|&i| !keys.contains(self.circuit.name(i)))
            .collect()
    }

    pub fn key_input_ids(&self) -> Vec<NetId> {
        self.key_inputs
            .iter()
            .map(|k| self.circuit.net(k).expect("key inputs exist"))
            .collect()
    }

    /// The function index each camouflaged gate takes under `key`.
    pub fn decode_camo(&self, key: &Pattern) -> Vec<usize> {
        self.camo
            .iter()
            .map(|r| key.slice(r.key_start, r.key_width).to_u64() as usize)
            .collect()
    }
}

/// Inserts `count` XOR/XNOR key gates on randomly chosen gate outputs.
///
/// The chosen gate's output is renamed and the key gate takes over the
/// original net name, so every reader (including primary outputs) sees the
/// key gate. XOR gates need key bit 0, XNOR gates key bit 1.
pub fn insert_key_gates(circuit: &Circuit, count: usize, seed: u64) -> Result<LockedCircuit, ObfuscateError> {
    if !circuit.is_combinational() {
        return Err(ObfuscateError::Sequential);
    }
    let available = circuit.gate_count();
    if count > available {
        return Err(ObfuscateError::TooManyKeyGates {
            requested: count,
            available,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..available).collect();
    order.shuffle(&mut rng);
    let chosen: Vec<usize> = order[..count].to_vec();
    let xnor: Vec<bool> = chosen.iter().map(|_| rng.gen()).collect();

    let mut taken = HashSet::new();
    let mut fresh = |base: String| {
        let n = circuit.fresh_name(&base, &taken);
        taken.insert(n.clone());
        n
    };
    let keys: Vec<String> = (0..count).map(|i| fresh(format!("keyinput{i}"))).collect();
    let mut slot = vec![None; available];
    for (i, &g) in chosen.iter().enumerate() {
        slot[g] = Some(i);
    }

    let mut b = CircuitBuilder::new();
    for name in circuit.input_names() {
        b.input(name);
    }
    for k in &keys {
        b.input(k.clone());
    }
    for name in circuit.output_names() {
        b.output(name);
    }
    for p in circuit.pragmas() {
        b.pragma(p.clone());
    }
    for (g, gate) in circuit.gates().iter().enumerate() {
        let name = circuit.name(gate.output).to_string();
        let fanin: Vec<&str> = gate.fanin.iter().map(|&f| circuit.name(f)).collect();
        match slot[g] {
            None => {
                b.gate(name, gate.function.clone(), fanin);
            }
            Some(i) => {
                let inner = fresh(format!("{name}_lk"));
                b.gate(inner.clone(), gate.function.clone(), fanin);
                let f = if xnor[i] {
                    GateFunction::xnor(2)
                } else {
                    GateFunction::xor(2)
                };
                b.gate(name, f, [inner, keys[i].clone()]);
            }
        }
    }
    Ok(LockedCircuit {
        circuit: b.build()?,
        key_inputs: keys,
        correct_key: Pattern::from_bools(&xnor),
        camo: Vec::new(),
    })
}

/// Everything needed to reproduce or grade an obfuscated benchmark,
/// stored as JSON next to the `.bench` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeySidecar {
    pub benchmark: String,
    pub seed: u64,
    pub key_inputs: Vec<String>,
    pub correct_key: Pattern,
    #[serde(default)]
    pub camo: Vec<CamoRecord>,
    #[serde(default)]
    pub annotations: Vec<BehaviorAnnotation>,
}

impl KeySidecar {
    pub fn new(
        benchmark: impl Into<String>,
        seed: u64,
        locked: &LockedCircuit,
        annotations: Vec<BehaviorAnnotation>,
    ) -> Self {
        Self {
            benchmark: benchmark.into(),
            seed,
            key_inputs: locked.key_inputs.clone(),
            correct_key: locked.correct_key.clone(),
            camo: locked.camo.clone(),
            annotations,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sidecar serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ObfuscateError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Re-attaches key metadata to a circuit read back from `.bench`.
    pub fn attach(&self, circuit: Circuit) -> Result<LockedCircuit, ObfuscateError> {
        for k in &self.key_inputs {
            if circuit.net(k).is_none_or(|n| !circuit.inputs().contains(&n)) {
                return Err(ObfuscateError::Netlist(NetlistError::UnknownNet(k.clone())));
            }
        }
        if self.correct_key.len() != self.key_inputs.len() {
            return Err(ObfuscateError::Annotation {
                gate: String::new(),
                message: format!(
                    "correct key has {} bits for {} key inputs",
                    self.correct_key.len(),
                    self.key_inputs.len()
                ),
            });
        }
        Ok(LockedCircuit {
            circuit,
            key_inputs: self.key_inputs.clone(),
            correct_key: self.correct_key.clone(),
            camo: self.camo.clone(),
        })
    }
}
