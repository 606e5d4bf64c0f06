//! Camouflaging: a selected gate is replaced by every function of a set
//! evaluated in parallel and a key-driven multiplexer tree choosing one.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{LockedCircuit, ObfuscateError, Selection};
use crate::netlist::{BenchKind, Circuit, CircuitBuilder, GateFunction};
use crate::Pattern;

/// The cloakable functions of one camouflaging primitive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionSet {
    pub name: String,
    pub functions: Vec<GateFunction>,
}

impl FunctionSet {
    pub fn new(name: impl Into<String>, functions: Vec<GateFunction>) -> Result<Self, ObfuscateError> {
        let name = name.into();
        if functions.len() < 2 {
            return Err(ObfuscateError::DegenerateSet(name));
        }
        let arity = functions[0].arity();
        if functions.iter().any(|f| f.arity() != arity) || arity > 2 {
            return Err(ObfuscateError::InvalidSet(format!(
                "{name}: functions must all be unary or all binary"
            )));
        }
        let distinct: HashSet<_> = functions.iter().collect();
        if distinct.len() != functions.len() {
            return Err(ObfuscateError::InvalidSet(format!("{name}: duplicate functions")));
        }
        Ok(Self { name, functions })
    }

    fn named(name: &str, functions: &[&str]) -> Self {
        let arity = if functions.iter().any(|f| matches!(*f, "INV" | "BUF")) {
            1
        } else {
            2
        };
        let fs = functions
            .iter()
            .map(|n| GateFunction::from_name(n, arity).expect("catalog names are valid"))
            .collect();
        Self::new(name, fs).expect("catalog sets are valid")
    }

    /// All sixteen two-input functions (the GSHE primitive).
    pub fn gshe16() -> Self {
        Self::new("gshe16", GateFunction::all_two_input()).unwrap()
    }

    /// The catalog of primitives compared in the security study.
    pub fn catalog() -> Vec<FunctionSet> {
        vec![
            Self::named("nand_nor", &["NAND", "NOR"]),
            Self::named("xor_xnor", &["XOR", "XNOR"]),
            Self::named("inv_buf", &["INV", "BUF"]),
            Self::named("and_or", &["AND", "OR"]),
            Self::named("nand_nor_and_or", &["NAND", "NOR", "AND", "OR"]),
            Self::named("nand_nor_xor", &["NAND", "NOR", "XOR"]),
            Self::named("six", &["NAND", "NOR", "XOR", "XNOR", "AND", "OR"]),
            // Seven DWM functions plus BUF; INV/BUF act on the first input.
            Self::named(
                "seven_plus_one",
                &["NAND", "NOR", "XOR", "XNOR", "AND", "OR", "NOTA", "A"],
            ),
            Self::gshe16(),
        ]
    }

    pub fn by_name(name: &str) -> Option<FunctionSet> {
        Self::catalog().into_iter().find(|s| s.name == name)
    }

    pub fn arity(&self) -> usize {
        self.functions[0].arity()
    }

    /// `ceil(log2(|functions|))`.
    pub fn key_width(&self) -> usize {
        let n = self.functions.len();
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }

    pub fn index_of(&self, f: &GateFunction) -> Option<usize> {
        self.functions.iter().position(|g| g == f)
    }
}

/// Metadata for one camouflaged gate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CamoRecord {
    pub gate: String,
    pub set: String,
    pub key_start: usize,
    pub key_width: usize,
    pub original_index: usize,
}

/// Adds gates computing `f(fanin)` and returns the net carrying the result.
fn emit_function(
    b: &mut CircuitBuilder,
    fresh: &mut impl FnMut(&str) -> String,
    f: &GateFunction,
    fanin: &[String],
    inverted: &mut [Option<String>],
) -> String {
    let mut not = |b: &mut CircuitBuilder, fresh: &mut dyn FnMut(&str) -> String, i: usize| -> String {
        if let Some(n) = &inverted[i] {
            return n.clone();
        }
        let n = fresh(&format!("{}_n", fanin[i]));
        b.gate(n.clone(), GateFunction::not(), [fanin[i].clone()]);
        inverted[i] = Some(n.clone());
        n
    };
    let out = fresh("cf");
    if let Some(kind) = f.bench_kind() {
        b.gate(
            out.clone(),
            GateFunction::from_kind(kind, fanin.len()).unwrap(),
            fanin.to_vec(),
        );
        return out;
    }
    let (a, bb) = (fanin[0].clone(), fanin[1].clone());
    match f.name().as_str() {
        "ZERO" => b.gate(out.clone(), GateFunction::xor(2), [a.clone(), a]),
        "ONE" => b.gate(out.clone(), GateFunction::xnor(2), [a.clone(), a]),
        "A" => b.gate(out.clone(), GateFunction::buf(), [a]),
        "B" => b.gate(out.clone(), GateFunction::buf(), [bb]),
        "NOTA" => b.gate(out.clone(), GateFunction::not(), [a]),
        "NOTB" => b.gate(out.clone(), GateFunction::not(), [bb]),
        "ANDNB" => {
            let nb = not(b, fresh, 1);
            b.gate(out.clone(), GateFunction::and(2), [a, nb])
        }
        "ANDNA" => {
            let na = not(b, fresh, 0);
            b.gate(out.clone(), GateFunction::and(2), [na, bb])
        }
        "ORNB" => {
            let nb = not(b, fresh, 1);
            b.gate(out.clone(), GateFunction::or(2), [a, nb])
        }
        "ORNA" => {
            let na = not(b, fresh, 0);
            b.gate(out.clone(), GateFunction::or(2), [na, bb])
        }
        other => unreachable!("unary sets only contain NOT/BUFF, got {other}"),
    };
    out
}

/// Replaces every selected gate by the MUX model of `set`.
///
/// Each camouflaged gate receives a fresh slice of `key_width` key inputs;
/// the slice value (bit 0 first) selects the function index. Codes beyond
/// the set size select index 0.
pub fn camouflage(
    circuit: &Circuit,
    selection: &Selection,
    set: &FunctionSet,
) -> Result<LockedCircuit, ObfuscateError> {
    if set.functions.len() < 2 {
        return Err(ObfuscateError::DegenerateSet(set.name.clone()));
    }
    if !circuit.is_combinational() {
        return Err(ObfuscateError::Sequential);
    }
    let selected: HashSet<&str> = selection.gates.iter().map(String::as_str).collect();
    let mut original_index = std::collections::HashMap::new();
    for name in &selection.gates {
        let g = circuit
            .gate_by_name(name)
            .ok_or_else(|| ObfuscateError::UnknownGate(name.clone()))?;
        let gate = circuit.gate(g);
        if gate.function.arity() != set.arity() {
            return Err(ObfuscateError::ArityMismatch {
                gate: name.clone(),
                arity: gate.function.arity(),
                set: set.name.clone(),
            });
        }
        let idx = set
            .index_of(&gate.function)
            .ok_or_else(|| ObfuscateError::FunctionNotInSet {
                gate: name.clone(),
                function: gate.function.name(),
                set: set.name.clone(),
            })?;
        original_index.insert(name.as_str(), idx);
    }

    let width = set.key_width();
    let mut taken: HashSet<String> = HashSet::new();
    let mut fresh = |base: &str| -> String {
        let n = circuit.fresh_name(base, &taken);
        taken.insert(n.clone());
        n
    };

    let mut b = CircuitBuilder::new();
    for name in circuit.input_names() {
        b.input(name);
    }
    for name in circuit.output_names() {
        b.output(name);
    }
    for p in circuit.pragmas() {
        b.pragma(p.clone());
    }

    let mut key_inputs = Vec::new();
    let mut key_bits = Vec::new();
    let mut camo = Vec::new();
    for gate in circuit.gates() {
        let name = circuit.name(gate.output).to_string();
        let fanin: Vec<String> = gate.fanin.iter().map(|&f| circuit.name(f).to_string()).collect();
        if !selected.contains(name.as_str()) {
            b.gate(name, gate.function.clone(), fanin);
            continue;
        }
        let idx = original_index[name.as_str()];
        let key_start = key_inputs.len();
        let keys: Vec<String> = (0..width)
            .map(|j| fresh(&format!("keyinput{}", key_start + j)))
            .collect();
        for (j, k) in keys.iter().enumerate() {
            b.input(k.clone());
            key_inputs.push(k.clone());
            key_bits.push(idx >> j & 1 == 1);
        }

        let mut inverted = vec![None; fanin.len()];
        let mut fresh_local = |base: &str| fresh(&format!("{name}_{base}"));
        let outs: Vec<String> = set
            .functions
            .iter()
            .map(|f| emit_function(&mut b, &mut fresh_local, f, &fanin, &mut inverted))
            .collect();
        let mut level: Vec<String> = (0..1usize << width)
            .map(|c| outs.get(c).unwrap_or(&outs[0]).clone())
            .collect();
        for (j, key) in keys.iter().enumerate() {
            let last = j + 1 == width;
            let nk = fresh_local(&format!("nk{j}"));
            b.gate(nk.clone(), GateFunction::not(), [key.clone()]);
            let mut next = Vec::with_capacity(level.len() / 2);
            for pair in level.chunks(2) {
                let out = if last { name.clone() } else { fresh_local("mx") };
                if pair[0] == pair[1] && !last {
                    next.push(pair[0].clone());
                    continue;
                }
                let lo = fresh_local("ml");
                let hi = fresh_local("mh");
                b.gate(lo.clone(), GateFunction::and(2), [pair[0].clone(), nk.clone()]);
                b.gate(hi.clone(), GateFunction::and(2), [pair[1].clone(), key.clone()]);
                b.gate(out.clone(), GateFunction::or(2), [lo, hi]);
                next.push(out);
            }
            level = next;
        }
        camo.push(CamoRecord {
            gate: name.clone(),
            set: set.name.clone(),
            key_start,
            key_width: width,
            original_index: idx,
        });
    }
    let circuit = b.build()?;
    Ok(LockedCircuit {
        circuit,
        key_inputs,
        correct_key: Pattern::from_bools(&key_bits),
        camo,
    })
}

/// Whether `kind` can be the original function of a gate camouflaged with `set`.
pub fn supports(set: &FunctionSet, kind: BenchKind, arity: usize) -> bool {
    GateFunction::from_kind(kind, arity)
        .map(|f| set.index_of(&f).is_some())
        .unwrap_or(false)
}
