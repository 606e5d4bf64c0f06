//! Tseitin encoding of circuits into CNF, and a plain formula buffer with
//! DIMACS export.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::solver::{ClauseSink, Lit, Var};
use crate::netlist::{BenchKind, Circuit, GateFunction};

/// The value of a net inside an encoding: a known constant or a literal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Signal {
    Const(bool),
    Lit(Lit),
}

impl Signal {
    pub fn negate(self) -> Signal {
        match self {
            Signal::Const(b) => Signal::Const(!b),
            Signal::Lit(l) => Signal::Lit(!l),
        }
    }
}

/// A CNF formula held in memory.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CnfFormula {
    num_vars: u32,
    clauses: Vec<Vec<Lit>>,
    /// (net name, copy index) → variable, for formulas built by [`encode`].
    pub var_map: HashMap<(String, usize), Var>,
}

impl CnfFormula {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    /// Standard DIMACS CNF text.
    pub fn to_dimacs(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "p cnf {} {}", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                let _ = write!(s, "{} ", l.to_dimacs());
            }
            s.push_str("0\n");
        }
        s
    }

    /// Replays the formula into another sink (e.g. a solver).
    pub fn load_into<S: ClauseSink + ?Sized>(&self, sink: &mut S) {
        while sink.num_vars() < self.num_vars {
            sink.new_var();
        }
        for c in &self.clauses {
            sink.add_clause(c);
        }
    }
}

impl ClauseSink for CnfFormula {
    fn new_var(&mut self) -> Var {
        self.num_vars += 1;
        self.num_vars - 1
    }

    fn add_clause(&mut self, lits: &[Lit]) {
        for l in lits {
            self.num_vars = self.num_vars.max(l.var() + 1);
        }
        self.clauses.push(lits.to_vec());
    }

    fn num_vars(&self) -> u32 {
        self.num_vars
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("circuit contains flip-flops; unroll it first")]
    Sequential,
    #[error("circuit has no gates")]
    Empty,
    #[error("expected {expected} input signals, got {got}")]
    Width { expected: usize, got: usize },
}

/// Fresh output variable `y` constrained to `y ↔ AND(xs)` (or NAND when `invert`).
fn encode_and<S: ClauseSink + ?Sized>(sink: &mut S, xs: &[Lit], invert: bool) -> Lit {
    let y = Lit::pos(sink.new_var());
    let out = if invert { !y } else { y };
    let mut long = Vec::with_capacity(xs.len() + 1);
    for &x in xs {
        sink.add_clause(&[!out, x]);
        long.push(!x);
    }
    long.push(out);
    sink.add_clause(&long);
    y
}

fn encode_xor2<S: ClauseSink + ?Sized>(sink: &mut S, a: Lit, b: Lit) -> Lit {
    let y = Lit::pos(sink.new_var());
    sink.add_clause(&[!y, a, b]);
    sink.add_clause(&[!y, !a, !b]);
    sink.add_clause(&[y, !a, b]);
    sink.add_clause(&[y, a, !b]);
    y
}

fn encode_table<S: ClauseSink + ?Sized>(sink: &mut S, f: &GateFunction, xs: &[Lit]) -> Lit {
    let y = Lit::pos(sink.new_var());
    for m in 0..1usize << xs.len() {
        let mut clause: Vec<Lit> = xs
            .iter()
            .enumerate()
            .map(|(j, &x)| if m >> j & 1 == 1 { !x } else { x })
            .collect();
        clause.push(if f.output(m) { y } else { !y });
        sink.add_clause(&clause);
    }
    y
}

/// Encodes one gate. With `simplify`, constant inputs are folded and
/// buffers/inverters alias their input instead of adding a variable.
pub fn encode_gate<S: ClauseSink + ?Sized>(sink: &mut S, f: &GateFunction, fanin: &[Signal], simplify: bool) -> Signal {
    if !simplify {
        let lits: Vec<Lit> = fanin
            .iter()
            .map(|s| match *s {
                Signal::Lit(l) => l,
                Signal::Const(b) => {
                    let v = Lit::pos(sink.new_var());
                    sink.add_clause(&[if b { v } else { !v }]);
                    v
                }
            })
            .collect();
        let y = match f.bench_kind() {
            Some(BenchKind::And) => encode_and(sink, &lits, false),
            Some(BenchKind::Nand) => encode_and(sink, &lits, true),
            Some(BenchKind::Or) => encode_and(sink, &lits.iter().map(|&l| !l).collect::<Vec<_>>(), true),
            Some(BenchKind::Nor) => encode_and(sink, &lits.iter().map(|&l| !l).collect::<Vec<_>>(), false),
            Some(BenchKind::Xor) if lits.len() == 2 => encode_xor2(sink, lits[0], lits[1]),
            Some(BenchKind::Xnor) if lits.len() == 2 => encode_xor2(sink, lits[0], !lits[1]),
            _ => encode_table(sink, f, &lits),
        };
        return Signal::Lit(y);
    }

    let kind = f.bench_kind();
    match kind {
        Some(k @ (BenchKind::And | BenchKind::Nand | BenchKind::Or | BenchKind::Nor)) => {
            // AND/NAND over inputs; OR/NOR via De Morgan on negated inputs.
            let demorgan = matches!(k, BenchKind::Or | BenchKind::Nor);
            let invert = matches!(k, BenchKind::Nand | BenchKind::Or);
            let mut lits = Vec::with_capacity(fanin.len());
            for s in fanin {
                match if demorgan { s.negate() } else { *s } {
                    Signal::Const(false) => return Signal::Const(invert),
                    Signal::Const(true) => {}
                    Signal::Lit(l) => lits.push(l),
                }
            }
            lits.sort_unstable();
            lits.dedup();
            if lits.windows(2).any(|w| w[0] == !w[1]) {
                return Signal::Const(invert);
            }
            let out = match lits.len() {
                0 => Signal::Const(true),
                1 => Signal::Lit(lits[0]),
                _ => Signal::Lit(encode_and(sink, &lits, false)),
            };
            if invert {
                out.negate()
            } else {
                out
            }
        }
        Some(k @ (BenchKind::Xor | BenchKind::Xnor)) => {
            let mut parity = k == BenchKind::Xnor;
            let mut lits: Vec<Lit> = Vec::new();
            for s in fanin {
                match *s {
                    Signal::Const(b) => parity ^= b,
                    Signal::Lit(l) => {
                        // Normalize to positive literals; negation flips parity.
                        parity ^= l.is_negated();
                        let p = Lit::pos(l.var());
                        if let Some(i) = lits.iter().position(|&x| x == p) {
                            lits.remove(i);
                        } else {
                            lits.push(p);
                        }
                    }
                }
            }
            let mut acc = match lits.first() {
                None => return Signal::Const(parity),
                Some(&l) => l,
            };
            for &l in &lits[1..] {
                acc = encode_xor2(sink, acc, l);
            }
            Signal::Lit(if parity { !acc } else { acc })
        }
        Some(BenchKind::Buff) => fanin[0],
        Some(BenchKind::Not) => fanin[0].negate(),
        None => {
            // Cofactor constants away, then encode the residual table.
            let free: Vec<usize> = (0..fanin.len())
                .filter(|&j| matches!(fanin[j], Signal::Lit(_)))
                .collect();
            let mut base = 0usize;
            for (j, s) in fanin.iter().enumerate() {
                if *s == Signal::Const(true) {
                    base |= 1 << j;
                }
            }
            let bits: Vec<bool> = (0..1usize << free.len())
                .map(|m| {
                    let mut full = base;
                    for (k, &j) in free.iter().enumerate() {
                        if m >> k & 1 == 1 {
                            full |= 1 << j;
                        }
                    }
                    f.output(full)
                })
                .collect();
            if bits.iter().all(|&b| b == bits[0]) {
                return Signal::Const(bits[0]);
            }
            let lits: Vec<Lit> = free
                .iter()
                .map(|&j| match fanin[j] {
                    Signal::Lit(l) => l,
                    Signal::Const(_) => unreachable!(),
                })
                .collect();
            let g = GateFunction::from_table(lits.len(), &bits).expect("residual table is valid");
            if let Some(k) = g.bench_kind() {
                let sig: Vec<Signal> = lits.iter().map(|&l| Signal::Lit(l)).collect();
                return encode_gate(sink, &GateFunction::from_kind(k, lits.len()).unwrap(), &sig, true);
            }
            Signal::Lit(encode_table(sink, &g, &lits))
        }
    }
}

/// Encodes every gate of `circuit` given a signal for each primary input;
/// returns a signal per net.
pub fn encode_circuit<S: ClauseSink + ?Sized>(
    sink: &mut S,
    circuit: &Circuit,
    inputs: &[Signal],
    simplify: bool,
) -> Result<Vec<Signal>, EncodeError> {
    if !circuit.is_combinational() {
        return Err(EncodeError::Sequential);
    }
    if inputs.len() != circuit.inputs().len() {
        return Err(EncodeError::Width {
            expected: circuit.inputs().len(),
            got: inputs.len(),
        });
    }
    let mut net = vec![Signal::Const(false); circuit.net_count()];
    for (&i, &s) in circuit.inputs().iter().zip(inputs) {
        net[i] = s;
    }
    let mut fanin = Vec::with_capacity(4);
    for g in circuit.gates() {
        fanin.clear();
        fanin.extend(g.fanin.iter().map(|&f| net[f]));
        net[g.output] = encode_gate(sink, &g.function, &fanin, simplify);
    }
    Ok(net)
}

/// Plain Tseitin encoding of one circuit copy: one variable per net, with
/// `var_map` recording `(net, copy)`.
pub fn encode(circuit: &Circuit, copy: usize) -> Result<CnfFormula, EncodeError> {
    if circuit.gate_count() == 0 {
        return Err(EncodeError::Empty);
    }
    let mut f = CnfFormula::new();
    let inputs: Vec<Signal> = circuit
        .inputs()
        .iter()
        .map(|_| Signal::Lit(Lit::pos(f.new_var())))
        .collect();
    let nets = encode_circuit(&mut f, circuit, &inputs, false)?;
    for (n, s) in nets.iter().enumerate() {
        if let Signal::Lit(l) = s {
            f.var_map.insert((circuit.name(n).to_string(), copy), l.var());
        }
    }
    Ok(f)
}

/// Adds clauses forcing `s` to equal `value`. A constant mismatch adds the
/// empty clause.
pub fn constrain<S: ClauseSink + ?Sized>(sink: &mut S, s: Signal, value: bool) {
    match s {
        Signal::Const(b) if b == value => {}
        Signal::Const(_) => sink.add_clause(&[]),
        Signal::Lit(l) => sink.add_clause(&[if value { l } else { !l }]),
    }
}

/// Fresh literal `d ↔ (a ≠ b)`, or a constant.
pub fn differ<S: ClauseSink + ?Sized>(sink: &mut S, a: Signal, b: Signal) -> Signal {
    encode_gate(sink, &GateFunction::xor(2), &[a, b], true)
}
