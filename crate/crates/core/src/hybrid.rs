//! Hybrid GSHE/CMOS design: static timing analysis, delay-aware
//! replacement of CMOS gates on non-critical paths, full-chip cost
//! estimates, and the approximate ripple-adder case study.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::device::{primitive_cost, PrimitiveKind};
use crate::netlist::{Circuit, GateFunction, NetlistError};

#[derive(Debug, thiserror::Error)]
pub enum HybridError {
    #[error("no delay for function {0}")]
    MissingDelay(String),
    #[error("no cell cost for function {0}")]
    MissingCell(String),
    #[error("circuit has sequential elements")]
    Sequential,
    #[error("delay map line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("delay for {0} must be positive")]
    NonPositive(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
}

/// CMOS cell figures for one gate function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellCost {
    /// Seconds.
    pub delay: f64,
    /// Square metres.
    pub area: f64,
    /// Watts.
    pub power: f64,
}

/// Per-function CMOS cell costs, keyed by canonical function name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellLibrary {
    pub cells: BTreeMap<String, CellCost>,
}

impl Default for CellLibrary {
    /// Generic small-node figures; override for a real library.
    fn default() -> Self {
        let rows = [
            ("NOT", 8.0, 0.098, 0.35),
            ("BUFF", 14.0, 0.147, 0.45),
            ("NAND", 10.0, 0.147, 0.50),
            ("NOR", 12.0, 0.147, 0.55),
            ("AND", 16.0, 0.196, 0.65),
            ("OR", 18.0, 0.196, 0.70),
            ("XOR", 22.0, 0.294, 0.95),
            ("XNOR", 22.0, 0.294, 0.95),
        ];
        Self {
            cells: rows
                .iter()
                .map(|&(n, ps, um2, uw)| {
                    (
                        n.to_string(),
                        CellCost {
                            delay: ps * 1e-12,
                            area: um2 * 1e-12,
                            power: uw * 1e-6,
                        },
                    )
                })
                .collect(),
        }
    }
}

impl CellLibrary {
    pub fn cost(&self, f: &GateFunction) -> Result<CellCost, HybridError> {
        let name = f.name();
        self.cells.get(&name).copied().ok_or(HybridError::MissingCell(name))
    }
}

/// Gate delays by function, plus the delay of the replacing GSHE primitive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayMap {
    /// Seconds, keyed by canonical function name.
    pub delays: BTreeMap<String, f64>,
    /// Seconds.
    pub gshe_delay: f64,
}

impl Default for DelayMap {
    fn default() -> Self {
        Self::from_library(&CellLibrary::default())
    }
}

impl DelayMap {
    /// CMOS delays from `lib`, GSHE delay of the obfuscated primitive.
    pub fn from_library(lib: &CellLibrary) -> Self {
        Self {
            delays: lib.cells.iter().map(|(k, c)| (k.clone(), c.delay)).collect(),
            gshe_delay: primitive_cost(PrimitiveKind::ObfuscatedWithMuxes).delay,
        }
    }

    /// Unit delay for every standard function.
    pub fn unit(gshe_delay: f64) -> Self {
        let mut m = Self::from_library(&CellLibrary::default());
        m.delays.values_mut().for_each(|d| *d = 1.0);
        m.gshe_delay = gshe_delay;
        m
    }

    pub fn delay(&self, f: &GateFunction) -> Result<f64, HybridError> {
        let name = f.name();
        self.delays.get(&name).copied().ok_or(HybridError::MissingDelay(name))
    }

    /// Reads `function delay_ns` lines on top of the defaults; the
    /// function name `GSHE` sets the primitive delay. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, HybridError> {
        let mut m = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| HybridError::Parse { line: i + 1, message };
            let mut f = line.split_whitespace();
            let (Some(name), Some(value), None) = (f.next(), f.next(), f.next()) else {
                return Err(err("expected `function delay_ns`".into()));
            };
            let ns: f64 = value.parse().map_err(|_| err(format!("bad delay {value:?}")))?;
            if !(ns > 0.0 && ns.is_finite()) {
                return Err(HybridError::NonPositive(name.to_string()));
            }
            let name = name.to_ascii_uppercase();
            match name.as_str() {
                "GSHE" => m.gshe_delay = ns * 1e-9,
                "INV" => {
                    m.delays.insert("NOT".into(), ns * 1e-9);
                }
                "BUF" => {
                    m.delays.insert("BUFF".into(), ns * 1e-9);
                }
                _ => {
                    m.delays.insert(name, ns * 1e-9);
                }
            }
        }
        Ok(m)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, d) in &self.delays {
            let _ = writeln!(s, "{k} {}", d * 1e9);
        }
        let _ = writeln!(s, "GSHE {}", self.gshe_delay * 1e9);
        s
    }
}

/// Per-gate timing (indexed by gate id) and the critical delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub arrival: Vec<f64>,
    pub required: Vec<f64>,
    pub slack: Vec<f64>,
    pub critical_delay: f64,
}

impl TimingReport {
    /// Gates with (numerically) zero slack.
    pub fn critical_gates(&self) -> Vec<usize> {
        let tol = self.critical_delay.abs() * 1e-12;
        (0..self.slack.len()).filter(|&g| self.slack[g] <= tol).collect()
    }
}

fn gate_delays(circuit: &Circuit, delays: &DelayMap) -> Result<Vec<f64>, HybridError> {
    circuit.gates().iter().map(|g| delays.delay(&g.function)).collect()
}

/// Longest-path timing with explicit per-gate delays.
pub fn sta_with(circuit: &Circuit, delay: &[f64]) -> Result<TimingReport, HybridError> {
    if !circuit.is_combinational() {
        return Err(HybridError::Sequential);
    }
    let mut at = vec![0.0f64; circuit.net_count()];
    for (g, gate) in circuit.gates().iter().enumerate() {
        at[gate.output] = gate.fanin.iter().map(|&f| at[f]).fold(0.0, f64::max) + delay[g];
    }
    let critical = circuit.outputs().iter().map(|&o| at[o]).fold(0.0, f64::max);
    let mut rt = vec![f64::INFINITY; circuit.net_count()];
    for &o in circuit.outputs() {
        rt[o] = critical;
    }
    for (g, gate) in circuit.gates().iter().enumerate().rev() {
        let r = rt[gate.output] - delay[g];
        for &f in &gate.fanin {
            rt[f] = rt[f].min(r);
        }
    }
    let gates = circuit.gates();
    // Gates not reaching any output keep an infinite required time.
    let arrival: Vec<f64> = gates.iter().map(|g| at[g.output]).collect();
    let required: Vec<f64> = gates.iter().map(|g| rt[g.output]).collect();
    let slack = arrival.iter().zip(&required).map(|(a, r)| r - a).collect();
    Ok(TimingReport {
        arrival,
        required,
        slack,
        critical_delay: critical,
    })
}

/// Static timing analysis with CMOS delays from `delays`.
pub fn sta(circuit: &Circuit, delays: &DelayMap) -> Result<TimingReport, HybridError> {
    sta_with(circuit, &gate_delays(circuit, delays)?)
}

/// Gates replaced by GSHE primitives, with the resulting timing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridSelection {
    pub gates: Vec<usize>,
    pub original: TimingReport,
    pub timing: TimingReport,
}

impl HybridSelection {
    pub fn fraction(&self, circuit: &Circuit) -> f64 {
        self.gates.len() as f64 / circuit.gate_count().max(1) as f64
    }

    pub fn gate_names(&self, circuit: &Circuit) -> Vec<String> {
        self.gates.iter().map(|&g| circuit.gate_name(g).to_string()).collect()
    }
}

/// Greedily replaces gates, most slack first, as long as the critical delay
/// does not grow. Timing is re-propagated after every acceptance.
pub fn delay_aware_select(circuit: &Circuit, delays: &DelayMap) -> Result<HybridSelection, HybridError> {
    let mut delay = gate_delays(circuit, delays)?;
    let original = sta_with(circuit, &delay)?;
    let mut order: Vec<usize> = (0..circuit.gate_count()).collect();
    order.sort_by(|&a, &b| original.slack[b].total_cmp(&original.slack[a]).then(a.cmp(&b)));
    let mut timing = original.clone();
    let mut gates = Vec::new();
    for g in order {
        let extra = delays.gshe_delay - delay[g];
        if extra > timing.slack[g] {
            continue;
        }
        let old = std::mem::replace(&mut delay[g], delays.gshe_delay);
        let t = sta_with(circuit, &delay)?;
        if t.critical_delay <= original.critical_delay {
            timing = t;
            gates.push(g);
        } else {
            delay[g] = old;
        }
    }
    gates.sort_unstable();
    Ok(HybridSelection {
        gates,
        original,
        timing,
    })
}

/// Whole-circuit totals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChipCost {
    /// Square metres.
    pub area: f64,
    /// Watts.
    pub power: f64,
    /// Critical delay, seconds.
    pub delay: f64,
}

/// Sums CMOS cell costs for unselected gates and `primitive` costs for the
/// selected ones; the delay comes from timing with the mixed delays.
pub fn chip_cost(
    circuit: &Circuit,
    selection: &[usize],
    lib: &CellLibrary,
    primitive: PrimitiveKind,
) -> Result<ChipCost, HybridError> {
    let p = primitive_cost(primitive);
    let mut selected = vec![false; circuit.gate_count()];
    for &g in selection {
        *selected
            .get_mut(g)
            .ok_or_else(|| HybridError::Parameter(format!("gate {g} out of range")))? = true;
    }
    let (mut area, mut power) = (0.0, 0.0);
    let mut delay = Vec::with_capacity(circuit.gate_count());
    for (g, gate) in circuit.gates().iter().enumerate() {
        if selected[g] {
            area += p.area;
            power += p.power;
            delay.push(p.delay);
        } else {
            let c = lib.cost(&gate.function)?;
            area += c.area;
            power += c.power;
            delay.push(c.delay);
        }
    }
    Ok(ChipCost {
        area,
        power,
        delay: sta_with(circuit, &delay)?.critical_delay,
    })
}

/// Parameters of the skewed-path circuit generator: a few long chains that
/// set the critical delay, plus many shallow output cones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewParams {
    pub inputs: usize,
    pub deep_paths: usize,
    /// Gates on the longest chain; other chains are 85–100% as long.
    pub deep_depth: usize,
    pub shallow_cones: usize,
    /// Levels of each shallow cone (a complete binary tree).
    pub cone_depth: usize,
    pub seed: u64,
}

impl Default for SkewParams {
    fn default() -> Self {
        Self {
            inputs: 32,
            deep_paths: 4,
            deep_depth: 160,
            shallow_cones: 30,
            cone_depth: 2,
            seed: 1,
        }
    }
}

/// Builds a random circuit with a skewed path-delay distribution.
pub fn skewed_circuit(p: &SkewParams) -> Result<Circuit, HybridError> {
    if p.inputs < 2 || p.deep_paths == 0 || p.deep_depth == 0 || p.cone_depth == 0 {
        return Err(HybridError::Parameter(
            "generator sizes must be positive (inputs ≥ 2)".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let funcs = [
        GateFunction::nand(2),
        GateFunction::nor(2),
        GateFunction::and(2),
        GateFunction::or(2),
        GateFunction::xor(2),
    ];
    let mut b = Circuit::builder();
    let pis: Vec<String> = (0..p.inputs).map(|i| format!("i{i}")).collect();
    for pi in &pis {
        b.input(pi.clone());
    }
    let pick = |rng: &mut ChaCha8Rng| pis[rng.gen_range(0..pis.len())].clone();
    for c in 0..p.deep_paths {
        let depth = if c == 0 {
            p.deep_depth
        } else {
            let lo = (p.deep_depth * 85).div_ceil(100).max(1);
            rng.gen_range(lo..=p.deep_depth)
        };
        let mut prev = pick(&mut rng);
        for d in 0..depth {
            let name = format!("d{c}_{d}");
            let f = funcs[rng.gen_range(0..funcs.len())].clone();
            b.gate(name.clone(), f, [prev, pick(&mut rng)]);
            prev = name;
        }
        b.output(prev);
    }
    for c in 0..p.shallow_cones {
        let mut level: Vec<String> = (0..1usize << p.cone_depth).map(|_| pick(&mut rng)).collect();
        for l in 0..p.cone_depth {
            level = level
                .chunks(2)
                .enumerate()
                .map(|(j, pair)| {
                    let name = format!("s{c}_{l}_{j}");
                    let f = funcs[rng.gen_range(0..funcs.len())].clone();
                    b.gate(name.clone(), f, [pair[0].clone(), pair[1].clone()]);
                    name
                })
                .collect();
        }
        b.output(level.pop().unwrap());
    }
    Ok(b.build()?)
}

/// Ripple-carry adder over inputs `a0..`, `b0..`, `cin`; outputs `s0..` and
/// `cout`. Each bit uses two XOR, two AND and one OR gate.
pub fn build_ripple_adder(width: usize) -> Result<Circuit, HybridError> {
    if width == 0 {
        return Err(HybridError::Parameter("adder width must be ≥ 1".into()));
    }
    let mut b = Circuit::builder();
    for i in 0..width {
        b.input(format!("a{i}"));
    }
    for i in 0..width {
        b.input(format!("b{i}"));
    }
    b.input("cin");
    let mut carry = "cin".to_string();
    for i in 0..width {
        let (a, bb) = (format!("a{i}"), format!("b{i}"));
        let (x, g, p, s) = (format!("x{i}"), format!("g{i}"), format!("p{i}"), format!("s{i}"));
        let next = if i + 1 == width {
            "cout".to_string()
        } else {
            format!("c{}", i + 1)
        };
        b.gate(x.clone(), GateFunction::xor(2), [a.clone(), bb.clone()]);
        b.gate(s.clone(), GateFunction::xor(2), [x.clone(), carry.clone()]);
        b.gate(g.clone(), GateFunction::and(2), [a, bb]);
        b.gate(p.clone(), GateFunction::and(2), [x, carry]);
        b.gate(next.clone(), GateFunction::or(2), [g, p]);
        b.output(s);
        carry = next;
    }
    b.output("cout");
    Ok(b.build()?)
}

/// Gates whose reachable outputs all lie among the first `k` sum bits.
pub fn lsb_cone_selection(adder: &Circuit, k: usize) -> Vec<usize> {
    if k == 0 {
        return Vec::new();
    }
    let sums: Vec<usize> = (0..adder.outputs().len())
        .filter(|&o| {
            adder
                .name(adder.outputs()[o])
                .strip_prefix('s')
                .and_then(|n| n.parse::<usize>().ok())
                .is_some_and(|n| n < k)
        })
        .collect();
    (0..adder.gate_count())
        .filter(|&g| {
            let cone = adder.fanout_cone(g);
            !cone.is_empty() && cone.iter().all(|o| sums.contains(o))
        })
        .collect()
}

/// Outcome of the approximate-adder study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdderStudy {
    pub width: usize,
    pub k: usize,
    /// Worst-case error relative to the full range, `(2^k − 1) / 2^width`.
    pub error_bound: f64,
    /// `1 − P_prob / P_det`.
    pub per_gate_saving: f64,
    /// Per-gate saving weighted by the selected share of gates.
    pub total_saving: f64,
    pub selected: Vec<String>,
    pub gates: usize,
}

/// Analyzes a `width`-bit ripple adder whose lower-`k`-bit cone runs on
/// probabilistic devices of power `p_prob` instead of `p_det`.
pub fn adder_case_study(width: usize, k: usize, p_det: f64, p_prob: f64) -> Result<AdderStudy, HybridError> {
    if k > width {
        return Err(HybridError::Parameter(format!("k = {k} exceeds width {width}")));
    }
    if !(p_det > 0.0 && p_prob > 0.0) {
        return Err(HybridError::Parameter("powers must be positive".into()));
    }
    let adder = build_ripple_adder(width)?;
    let sel = lsb_cone_selection(&adder, k);
    let per_gate_saving = 1.0 - p_prob / p_det;
    let error_bound = ((1u128 << k) - 1) as f64 / (1u128 << width) as f64;
    Ok(AdderStudy {
        width,
        k,
        error_bound,
        per_gate_saving,
        total_saving: per_gate_saving * sel.len() as f64 / adder.gate_count() as f64,
        selected: sel.iter().map(|&g| adder.gate_name(g).to_string()).collect(),
        gates: adder.gate_count(),
    })
}

/// Largest absolute deviation of the adder's numeric result (sum bits plus
/// carry-out) over all inputs when any subset of the `selected` gates has its
/// output inverted. Exhaustive; intended for small widths.
pub fn worst_flip_error(adder: &Circuit, width: usize, selected: &[usize]) -> Result<u64, HybridError> {
    let n_in = adder.inputs().len();
    if n_in != 2 * width + 1 || n_in > 24 || selected.len() > 16 {
        return Err(HybridError::Parameter(
            "adder too large for exhaustive flip analysis".into(),
        ));
    }
    let total = 1u64 << n_in;
    let outs = adder.outputs();
    let mut worst = 0u64;
    let mut values = vec![0u64; adder.net_count()];
    let mut fanin = Vec::with_capacity(2);
    for subset in 0..1u64 << selected.len() {
        let mut flip = vec![0u64; adder.gate_count()];
        for (j, &g) in selected.iter().enumerate() {
            if subset >> j & 1 == 1 {
                flip[g] = !0;
            }
        }
        let mut base = 0;
        while base < total {
            let lanes = (total - base).min(64);
            for (i, &net) in adder.inputs().iter().enumerate() {
                let mut w = 0u64;
                for l in 0..lanes {
                    w |= ((base + l) >> i & 1) << l;
                }
                values[net] = w;
            }
            for (g, gate) in adder.gates().iter().enumerate() {
                fanin.clear();
                fanin.extend(gate.fanin.iter().map(|&f| values[f]));
                values[gate.output] = gate.function.eval_words(&fanin) ^ flip[g];
            }
            for l in 0..lanes {
                let x = base + l;
                let a = x & ((1 << width) - 1);
                let b = (x >> width) & ((1 << width) - 1);
                let cin = (x >> (2 * width)) & 1;
                let exact = a + b + cin;
                let got = outs
                    .iter()
                    .enumerate()
                    .fold(0u64, |acc, (bit, &o)| acc | ((values[o] >> l) & 1) << bit);
                worst = worst.max(exact.abs_diff(got));
            }
            base += lanes;
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_bench;

    fn chain() -> Circuit {
        parse_bench(
            "INPUT(a)\nINPUT(b)\nOUTPUT(z)\nOUTPUT(w)\nx = NAND(a, b)\ny = NAND(x, b)\nz = NAND(y, a)\nw = NOT(a)\n",
        )
        .unwrap()
    }

    #[test]
    fn unit_chain_and_side_branch() {
        let c = chain();
        let t = sta(&c, &DelayMap::unit(5.0)).unwrap();
        let g = |n: &str| c.gate_by_name(n).unwrap();
        assert_eq!(t.critical_delay, 3.0);
        for n in ["x", "y", "z"] {
            assert_eq!(t.slack[g(n)], 0.0);
        }
        assert_eq!(t.slack[g("w")], 2.0);
        let mut crit = t.critical_gates();
        crit.sort_unstable();
        let mut expect = vec![g("x"), g("y"), g("z")];
        expect.sort_unstable();
        assert_eq!(crit, expect);
    }

    #[test]
    fn three_gshe_gates_in_series() {
        let c = chain();
        let t = sta_with(&c, &[1.55e-9; 4]).unwrap();
        assert!((t.critical_delay - 4.65e-9).abs() < 1e-18);
    }

    #[test]
    fn single_critical_path_selects_nothing() {
        let c = parse_bench("INPUT(a)\nOUTPUT(z)\nx = NOT(a)\ny = NOT(x)\nz = NOT(y)\n").unwrap();
        let s = delay_aware_select(&c, &DelayMap::unit(2.0)).unwrap();
        assert!(s.gates.is_empty());
    }

    #[test]
    fn side_branch_is_replaced_when_slack_allows() {
        let c = chain();
        let s = delay_aware_select(&c, &DelayMap::unit(3.0)).unwrap();
        assert_eq!(s.gate_names(&c), ["w"]);
        assert_eq!(s.timing.critical_delay, s.original.critical_delay);
        assert!(delay_aware_select(&chain(), &DelayMap::unit(3.5))
            .unwrap()
            .gates
            .is_empty());
    }

    #[test]
    fn delay_map_text() {
        let m = DelayMap::parse("# lib\nnand 0.02\nGSHE 2.0\ninv 0.005\n").unwrap();
        assert!((m.delays["NAND"] - 0.02e-9).abs() < 1e-24);
        assert!((m.delays["NOT"] - 0.005e-9).abs() < 1e-24);
        assert!((m.gshe_delay - 2.0e-9).abs() < 1e-24);
        assert!(DelayMap::parse("NAND x").is_err());
        assert!(DelayMap::parse("NAND -1").is_err());
        let back = DelayMap::parse(&m.to_text()).unwrap();
        for (k, v) in &m.delays {
            assert!((back.delays[k] - v).abs() < 1e-24);
        }
    }

    #[test]
    fn chip_cost_extremes() {
        let c = chain();
        let lib = CellLibrary::default();
        let none = chip_cost(&c, &[], &lib, PrimitiveKind::ObfuscatedWithMuxes).unwrap();
        let cmos: f64 = c.gates().iter().map(|g| lib.cost(&g.function).unwrap().area).sum();
        assert!((none.area - cmos).abs() < 1e-20);
        let all = chip_cost(&c, &[0, 1, 2, 3], &lib, PrimitiveKind::ObfuscatedWithMuxes).unwrap();
        assert!((all.area - 4.0 * 0.029e-12).abs() < 1e-24);
        assert!((all.power - 4.0 * 0.2673e-6).abs() < 1e-15);
        assert!((all.delay - 3.0 * 1.83e-9).abs() < 1e-18);
    }

    #[test]
    fn adder_structure() {
        assert_eq!(build_ripple_adder(32).unwrap().gate_count(), 160);
        let a = build_ripple_adder(4).unwrap();
        let sim = crate::simulate::Simulator::new(&a).unwrap();
        for x in 0..512u64 {
            let out = sim.eval(&crate::Pattern::from_u64(x, 9)).unwrap().to_u64();
            assert_eq!(out, (x & 15) + (x >> 4 & 15) + (x >> 8 & 1), "input {x}");
        }
    }

    #[test]
    fn lsb_cones() {
        let a = build_ripple_adder(8).unwrap();
        assert!(lsb_cone_selection(&a, 0).is_empty());
        let all = lsb_cone_selection(&a, 8);
        let names: Vec<&str> = all.iter().map(|&g| a.gate_name(g)).collect();
        assert_eq!(names, ["s0", "s1", "s2", "s3", "s4", "s5", "s6", "s7"]);
        for k in 0..=8 {
            for g in lsb_cone_selection(&a, k) {
                assert!(a.fanout_cone(g).iter().all(|&o| o < k));
            }
        }
    }

    #[test]
    fn case_study_numbers() {
        let s = adder_case_study(32, 10, 0.2125e-6, 0.1071e-6).unwrap();
        assert!((s.error_bound - 1023.0 / 4294967296.0).abs() < 1e-20);
        assert_eq!(format!("{:.6}%", s.error_bound * 100.0), "0.000024%");
        assert!((s.per_gate_saving - 0.496).abs() < 1e-3);
        let z = adder_case_study(32, 0, 0.2125e-6, 0.1071e-6).unwrap();
        assert_eq!((z.error_bound, z.total_saving), (0.0, 0.0));
        assert!(adder_case_study(4, 5, 1.0, 0.5).is_err());
    }

    #[test]
    fn flips_stay_within_bound() {
        let a = build_ripple_adder(4).unwrap();
        for k in 0..=4 {
            let sel = lsb_cone_selection(&a, k);
            assert!(worst_flip_error(&a, 4, &sel).unwrap() < (1 << k));
        }
        // Flipping a carry gate breaks the bound.
        let c1 = a.gate_by_name("c1").unwrap();
        assert!(worst_flip_error(&a, 4, &[c1]).unwrap() > 1);
    }
}
