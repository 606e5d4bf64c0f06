//! Gate-level combinational netlists.
//!
//! A [`Circuit`] is an immutable DAG of gates over named nets. Gates are
//! stored in a topological order fixed at construction, so every consumer
//! (simulation, CNF encoding, timing) can walk `gates()` front to back.
//! Flip-flops parsed from `.bench` files are carried as
//! [`SequentialElement`]s and must be removed with [`unroll_sequential`]
//! before a circuit is attacked or simulated.

mod bench;
mod function;

use std::collections::{HashMap, HashSet, VecDeque};

pub use bench::{parse_bench, write_bench};
pub use function::{BenchKind, FunctionError, GateFunction, MAX_ARITY};

use serde::{Deserialize, Serialize};

pub type NetId = usize;
pub type GateId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub output: NetId,
    pub function: GateFunction,
    pub fanin: Vec<NetId>,
}

/// A D flip-flop: `q_output` takes the value of `d_input` on the next cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequentialElement {
    pub d_input: String,
    pub q_output: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NetlistError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("no outputs declared")]
    NoOutputs,
    #[error("net {0:?} is used but never driven")]
    Undriven(String),
    #[error("net {0:?} is defined more than once")]
    Duplicate(String),
    #[error("combinational cycle through net {0:?}")]
    Cycle(String),
    #[error("gate {gate:?}: {source}")]
    Function {
        gate: String,
        #[source]
        source: FunctionError,
    },
    #[error("gate {gate:?} has {got} fanins but its function takes {expected}")]
    Arity { gate: String, expected: usize, got: usize },
    #[error("unknown net {0:?}")]
    UnknownNet(String),
    #[error("circuit still contains {0} sequential element(s)")]
    Sequential(usize),
}

/// Mutable staging area for a [`Circuit`]; `build` validates everything.
#[derive(Debug, Clone, Default)]
pub struct CircuitBuilder {
    inputs: Vec<String>,
    outputs: Vec<String>,
    gates: Vec<(String, GateFunction, Vec<String>)>,
    sequential: Vec<SequentialElement>,
    pragmas: Vec<String>,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn input(&mut self, name: impl Into<String>) -> &mut Self {
        self.inputs.push(name.into());
        self
    }

    pub fn output(&mut self, name: impl Into<String>) -> &mut Self {
        self.outputs.push(name.into());
        self
    }

    pub fn gate<S: Into<String>>(
        &mut self,
        name: impl Into<String>,
        function: GateFunction,
        fanin: impl IntoIterator<Item = S>,
    ) -> &mut Self {
        self.gates
            .push((name.into(), function, fanin.into_iter().map(Into::into).collect()));
        self
    }

    pub fn flip_flop(&mut self, d_input: impl Into<String>, q_output: impl Into<String>) -> &mut Self {
        self.sequential.push(SequentialElement {
            d_input: d_input.into(),
            q_output: q_output.into(),
        });
        self
    }

    pub fn pragma(&mut self, line: impl Into<String>) -> &mut Self {
        self.pragmas.push(line.into());
        self
    }

    pub fn build(self) -> Result<Circuit, NetlistError> {
        if self.outputs.is_empty() {
            return Err(NetlistError::NoOutputs);
        }
        let mut names: Vec<String> = Vec::new();
        let mut index: HashMap<String, NetId> = HashMap::new();
        // Each net may be defined once: as an input, a flip-flop output, or a gate output.
        let define =
            |name: &str, names: &mut Vec<String>, index: &mut HashMap<String, NetId>| -> Result<NetId, NetlistError> {
                if index.contains_key(name) {
                    return Err(NetlistError::Duplicate(name.to_string()));
                }
                let id = names.len();
                names.push(name.to_string());
                index.insert(name.to_string(), id);
                Ok(id)
            };

        let mut inputs = Vec::with_capacity(self.inputs.len());
        for n in &self.inputs {
            inputs.push(define(n, &mut names, &mut index)?);
        }
        for ff in &self.sequential {
            define(&ff.q_output, &mut names, &mut index)?;
        }
        let mut staged = Vec::with_capacity(self.gates.len());
        for (name, function, _) in &self.gates {
            let id = define(name, &mut names, &mut index)?;
            staged.push((id, function.clone()));
        }

        let lookup = |n: &str| {
            index
                .get(n)
                .copied()
                .ok_or_else(|| NetlistError::Undriven(n.to_string()))
        };
        let mut gates = Vec::with_capacity(staged.len());
        for ((id, function), (name, _, fanin)) in staged.into_iter().zip(&self.gates) {
            if fanin.len() != function.arity() {
                return Err(NetlistError::Arity {
                    gate: name.clone(),
                    expected: function.arity(),
                    got: fanin.len(),
                });
            }
            let fanin = fanin.iter().map(|n| lookup(n)).collect::<Result<Vec<_>, _>>()?;
            if fanin.contains(&id) {
                return Err(NetlistError::Cycle(name.clone()));
            }
            gates.push(Gate {
                output: id,
                function,
                fanin,
            });
        }
        for ff in &self.sequential {
            lookup(&ff.d_input)?;
        }
        let outputs = self.outputs.iter().map(|n| lookup(n)).collect::<Result<Vec<_>, _>>()?;

        let gates = topo_sort(gates, names.len()).map_err(|net| NetlistError::Cycle(names[net].clone()))?;
        let mut driver = vec![None; names.len()];
        for (g, gate) in gates.iter().enumerate() {
            driver[gate.output] = Some(g);
        }
        Ok(Circuit {
            names,
            index,
            inputs,
            outputs,
            gates,
            driver,
            sequential: self.sequential,
            pragmas: self.pragmas,
        })
    }
}

/// Kahn's algorithm; ties resolve in declaration order so the result is
/// deterministic. On a cycle, returns a net on it.
fn topo_sort(gates: Vec<Gate>, net_count: usize) -> Result<Vec<Gate>, NetId> {
    let mut driver = vec![None; net_count];
    for (g, gate) in gates.iter().enumerate() {
        driver[gate.output] = Some(g);
    }
    let mut pending = vec![0usize; gates.len()];
    let mut consumers: Vec<Vec<usize>> = vec![Vec::new(); gates.len()];
    for (g, gate) in gates.iter().enumerate() {
        for &f in &gate.fanin {
            if let Some(d) = driver[f] {
                pending[g] += 1;
                consumers[d].push(g);
            }
        }
    }
    let mut ready: VecDeque<usize> = (0..gates.len()).filter(|&g| pending[g] == 0).collect();
    let mut order = Vec::with_capacity(gates.len());
    while let Some(g) = ready.pop_front() {
        order.push(g);
        for &c in &consumers[g] {
            pending[c] -= 1;
            if pending[c] == 0 {
                ready.push_back(c);
            }
        }
    }
    if order.len() != gates.len() {
        let stuck = (0..gates.len()).find(|&g| pending[g] > 0).unwrap();
        return Err(gates[stuck].output);
    }
    let mut slots: Vec<Option<Gate>> = gates.into_iter().map(Some).collect();
    Ok(order.into_iter().map(|g| slots[g].take().unwrap()).collect())
}

/// Immutable gate-level netlist; gates are kept in topological order.
#[derive(Debug, Clone)]
pub struct Circuit {
    names: Vec<String>,
    index: HashMap<String, NetId>,
    inputs: Vec<NetId>,
    outputs: Vec<NetId>,
    gates: Vec<Gate>,
    driver: Vec<Option<GateId>>,
    sequential: Vec<SequentialElement>,
    pragmas: Vec<String>,
}

impl Circuit {
    pub fn builder() -> CircuitBuilder {
        CircuitBuilder::new()
    }

    /// Builder pre-filled with this circuit's contents, for transforms.
    pub fn to_builder(&self) -> CircuitBuilder {
        let mut b = CircuitBuilder::new();
        for &i in &self.inputs {
            b.input(self.name(i));
        }
        for &o in &self.outputs {
            b.output(self.name(o));
        }
        for ff in &self.sequential {
            b.flip_flop(ff.d_input.clone(), ff.q_output.clone());
        }
        for g in &self.gates {
            b.gate(
                self.name(g.output),
                g.function.clone(),
                g.fanin.iter().map(|&f| self.name(f).to_string()),
            );
        }
        for p in &self.pragmas {
            b.pragma(p.clone());
        }
        b
    }

    pub fn net_count(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, net: NetId) -> &str {
        &self.names[net]
    }

    pub fn net(&self, name: &str) -> Option<NetId> {
        self.index.get(name).copied()
    }

    pub fn inputs(&self) -> &[NetId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[NetId] {
        &self.outputs
    }

    pub fn input_names(&self) -> Vec<&str> {
        self.inputs.iter().map(|&n| self.name(n)).collect()
    }

    pub fn output_names(&self) -> Vec<&str> {
        self.outputs.iter().map(|&n| self.name(n)).collect()
    }

    /// Gates in topological order.
    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    pub fn gate(&self, id: GateId) -> &Gate {
        &self.gates[id]
    }

    /// The gate driving `net`, if any.
    pub fn driver(&self, net: NetId) -> Option<GateId> {
        self.driver[net]
    }

    /// Gate identified by its output net name.
    pub fn gate_by_name(&self, name: &str) -> Option<GateId> {
        self.net(name).and_then(|n| self.driver(n))
    }

    pub fn gate_name(&self, id: GateId) -> &str {
        self.name(self.gates[id].output)
    }

    pub fn sequential(&self) -> &[SequentialElement] {
        &self.sequential
    }

    pub fn is_combinational(&self) -> bool {
        self.sequential.is_empty()
    }

    pub fn pragmas(&self) -> &[String] {
        &self.pragmas
    }

    /// Same circuit with its pragma lines replaced.
    pub fn with_pragmas(&self, pragmas: Vec<String>) -> Circuit {
        let mut c = self.clone();
        c.pragmas = pragmas;
        c
    }

    /// For each net, the gates that read it.
    pub fn fanouts(&self) -> Vec<Vec<GateId>> {
        let mut out = vec![Vec::new(); self.names.len()];
        for (g, gate) in self.gates.iter().enumerate() {
            for &f in &gate.fanin {
                if !out[f].contains(&g) {
                    out[f].push(g);
                }
            }
        }
        out
    }

    /// Gate names in topological order.
    pub fn topological_order(&self) -> Vec<&str> {
        self.gates.iter().map(|g| self.name(g.output)).collect()
    }

    /// Indices (into `outputs()`) of primary outputs reachable from `gate`.
    pub fn fanout_cone(&self, gate: GateId) -> Vec<usize> {
        let reach = self.forward_reach(&[self.gates[gate].output]);
        self.outputs
            .iter()
            .enumerate()
            .filter(|(_, &o)| reach[o])
            .map(|(i, _)| i)
            .collect()
    }

    /// Gates in the transitive fanin of the given primary-output indices, ascending.
    pub fn fanin_cone(&self, outputs: &[usize]) -> Vec<GateId> {
        let mut seen = vec![false; self.names.len()];
        let mut stack: Vec<NetId> = outputs.iter().map(|&i| self.outputs[i]).collect();
        let mut gates = Vec::new();
        while let Some(n) = stack.pop() {
            if std::mem::replace(&mut seen[n], true) {
                continue;
            }
            if let Some(g) = self.driver[n] {
                gates.push(g);
                stack.extend(self.gates[g].fanin.iter().copied());
            }
        }
        gates.sort_unstable();
        gates
    }

    fn forward_reach(&self, start: &[NetId]) -> Vec<bool> {
        let fanouts = self.fanouts();
        let mut seen = vec![false; self.names.len()];
        let mut stack = start.to_vec();
        while let Some(n) = stack.pop() {
            if std::mem::replace(&mut seen[n], true) {
                continue;
            }
            for &g in &fanouts[n] {
                stack.push(self.gates[g].output);
            }
        }
        seen
    }

    /// Logic depth (gates on the longest input-to-net path) of every net.
    pub fn levels(&self) -> Vec<usize> {
        let mut level = vec![0usize; self.names.len()];
        for g in &self.gates {
            level[g.output] = 1 + g.fanin.iter().map(|&f| level[f]).max().unwrap_or(0);
        }
        level
    }

    /// Returns a fresh net name derived from `base` that does not collide
    /// with existing nets or with `taken`.
    pub fn fresh_name(&self, base: &str, taken: &HashSet<String>) -> String {
        if self.net(base).is_none() && !taken.contains(base) {
            return base.to_string();
        }
        (1..)
            .map(|i| format!("{base}_{i}"))
            .find(|n| self.net(n).is_none() && !taken.contains(n))
            .unwrap()
    }

    /// Structural equality up to gate ordering and net numbering.
    pub fn isomorphic(&self, other: &Circuit) -> bool {
        if self.input_names() != other.input_names() || self.output_names() != other.output_names() {
            return false;
        }
        if self.gates.len() != other.gates.len() || self.sequential != other.sequential {
            return false;
        }
        self.gates.iter().all(|g| {
            let Some(og) = other.gate_by_name(self.name(g.output)).map(|id| other.gate(id)) else {
                return false;
            };
            og.function == g.function
                && og.fanin.len() == g.fanin.len()
                && og
                    .fanin
                    .iter()
                    .zip(&g.fanin)
                    .all(|(&a, &b)| other.name(a) == self.name(b))
        })
    }
}

/// A combinational circuit obtained by cutting every flip-flop.
#[derive(Debug, Clone)]
pub struct Unrolled {
    pub circuit: Circuit,
    /// Former flip-flop outputs, now primary inputs (appended after the originals).
    pub pseudo_inputs: Vec<String>,
    /// Former flip-flop data nets, now primary outputs (appended after the originals).
    pub pseudo_outputs: Vec<String>,
}

/// Replaces each flip-flop by a pseudo-primary input (its Q net) and a
/// pseudo-primary output (its D net).
pub fn unroll_sequential(circuit: &Circuit, elements: &[SequentialElement]) -> Result<Unrolled, NetlistError> {
    for ff in elements {
        for n in [&ff.d_input, &ff.q_output] {
            if circuit.net(n).is_none() {
                return Err(NetlistError::UnknownNet(n.clone()));
            }
        }
    }
    let cut: HashSet<&str> = elements.iter().map(|ff| ff.q_output.as_str()).collect();
    let mut b = CircuitBuilder::new();
    for name in circuit.input_names() {
        b.input(name);
    }
    for ff in elements {
        b.input(ff.q_output.clone());
    }
    for name in circuit.output_names() {
        b.output(name);
    }
    for ff in elements {
        b.output(ff.d_input.clone());
    }
    for ff in circuit.sequential() {
        if !cut.contains(ff.q_output.as_str()) {
            b.flip_flop(ff.d_input.clone(), ff.q_output.clone());
        }
    }
    for g in circuit.gates() {
        b.gate(
            circuit.name(g.output),
            g.function.clone(),
            g.fanin.iter().map(|&f| circuit.name(f).to_string()),
        );
    }
    for p in circuit.pragmas() {
        b.pragma(p.clone());
    }
    Ok(Unrolled {
        circuit: b.build()?,
        pseudo_inputs: elements.iter().map(|ff| ff.q_output.clone()).collect(),
        pseudo_outputs: elements.iter().map(|ff| ff.d_input.clone()).collect(),
    })
}
