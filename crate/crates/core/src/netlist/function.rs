use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Widest gate accepted anywhere in the crate.
pub const MAX_ARITY: u8 = 16;

/// The gate primitives expressible in `.bench` (excluding `DFF`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchKind {
    And,
    Nand,
    Or,
    Nor,
    Xor,
    Xnor,
    Not,
    Buff,
}

impl BenchKind {
    pub const ALL: [BenchKind; 8] = [
        BenchKind::And,
        BenchKind::Nand,
        BenchKind::Or,
        BenchKind::Nor,
        BenchKind::Xor,
        BenchKind::Xnor,
        BenchKind::Not,
        BenchKind::Buff,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            BenchKind::And => "AND",
            BenchKind::Nand => "NAND",
            BenchKind::Or => "OR",
            BenchKind::Nor => "NOR",
            BenchKind::Xor => "XOR",
            BenchKind::Xnor => "XNOR",
            BenchKind::Not => "NOT",
            BenchKind::Buff => "BUFF",
        }
    }

    /// Case-insensitive; accepts the common `BUF`/`INV` spellings.
    pub fn from_keyword(word: &str) -> Option<BenchKind> {
        let kind = match word.to_ascii_uppercase().as_str() {
            "AND" => BenchKind::And,
            "NAND" => BenchKind::Nand,
            "OR" => BenchKind::Or,
            "NOR" => BenchKind::Nor,
            "XOR" => BenchKind::Xor,
            "XNOR" => BenchKind::Xnor,
            "NOT" | "INV" => BenchKind::Not,
            "BUFF" | "BUF" => BenchKind::Buff,
            _ => return None,
        };
        Some(kind)
    }

    pub fn is_unary(self) -> bool {
        matches!(self, BenchKind::Not | BenchKind::Buff)
    }

    /// Evaluate over 64 parallel lanes.
    pub fn eval_words(self, inputs: &[u64]) -> u64 {
        match self {
            BenchKind::And => inputs.iter().fold(!0, |acc, w| acc & w),
            BenchKind::Nand => !inputs.iter().fold(!0, |acc, w| acc & w),
            BenchKind::Or => inputs.iter().fold(0, |acc, w| acc | w),
            BenchKind::Nor => !inputs.iter().fold(0, |acc, w| acc | w),
            BenchKind::Xor => inputs.iter().fold(0, |acc, w| acc ^ w),
            BenchKind::Xnor => !inputs.iter().fold(0, |acc, w| acc ^ w),
            BenchKind::Not => !inputs[0],
            BenchKind::Buff => inputs[0],
        }
    }

    fn output_for(self, minterm: usize, arity: u8) -> bool {
        let ones = (minterm as u32).count_ones();
        let all = (1usize << arity) - 1;
        match self {
            BenchKind::And => minterm == all,
            BenchKind::Nand => minterm != all,
            BenchKind::Or => minterm != 0,
            BenchKind::Nor => minterm == 0,
            BenchKind::Xor => ones % 2 == 1,
            BenchKind::Xnor => ones.is_multiple_of(2),
            BenchKind::Not => minterm == 0,
            BenchKind::Buff => minterm == 1,
        }
    }
}

/// Names of the sixteen two-input functions, indexed by 4-bit truth table.
///
/// Input `a` is fanin 0 and selects minterm bit 0; `b` is fanin 1.
const TWO_INPUT_NAMES: [&str; 16] = [
    "ZERO", "NOR", "ANDNB", "NOTB", "ANDNA", "NOTA", "XOR", "NAND", "AND", "XNOR", "A", "ORNB", "B", "ORNA", "OR",
    "ONE",
];

/// A Boolean function given by its truth table.
///
/// Bit `i` of the table is the output for input minterm `i`, where fanin `j`
/// contributes bit `j` of the minterm index.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GateFunction {
    arity: u8,
    table: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FunctionError {
    #[error("gate arity must be between 1 and {MAX_ARITY}, got {0}")]
    Arity(usize),
    #[error("truth table for arity {arity} needs {expected} bits")]
    TableLength { arity: u8, expected: usize },
    #[error("unknown gate function {0:?}")]
    UnknownName(String),
    #[error("{kind} cannot take {arity} inputs")]
    KindArity { kind: &'static str, arity: usize },
}

impl GateFunction {
    pub fn from_kind(kind: BenchKind, arity: usize) -> Result<Self, FunctionError> {
        if kind.is_unary() && arity != 1 {
            return Err(FunctionError::KindArity {
                kind: kind.keyword(),
                arity,
            });
        }
        if arity == 0 || arity > MAX_ARITY as usize {
            return Err(FunctionError::Arity(arity));
        }
        let arity = arity as u8;
        let rows = 1usize << arity;
        let mut table = vec![0u64; rows.div_ceil(64)];
        for m in 0..rows {
            if kind.output_for(m, arity) {
                table[m / 64] |= 1 << (m % 64);
            }
        }
        Ok(Self { arity, table })
    }

    pub fn from_table(arity: usize, bits: &[bool]) -> Result<Self, FunctionError> {
        if arity == 0 || arity > MAX_ARITY as usize {
            return Err(FunctionError::Arity(arity));
        }
        let rows = 1usize << arity;
        if bits.len() != rows {
            return Err(FunctionError::TableLength {
                arity: arity as u8,
                expected: rows,
            });
        }
        let mut table = vec![0u64; rows.div_ceil(64)];
        for (m, &b) in bits.iter().enumerate() {
            if b {
                table[m / 64] |= 1 << (m % 64);
            }
        }
        Ok(Self {
            arity: arity as u8,
            table,
        })
    }

    /// One of the sixteen two-input functions, by 4-bit table.
    pub fn two_input(table: u8) -> Self {
        assert!(table < 16, "two-input truth table must fit in 4 bits");
        Self {
            arity: 2,
            table: vec![table as u64],
        }
    }

    /// All sixteen two-input functions in table order.
    pub fn all_two_input() -> Vec<Self> {
        (0..16).map(Self::two_input).collect()
    }

    pub fn and(arity: usize) -> Self {
        Self::from_kind(BenchKind::And, arity).expect("valid arity")
    }
    pub fn nand(arity: usize) -> Self {
        Self::from_kind(BenchKind::Nand, arity).expect("valid arity")
    }
    pub fn or(arity: usize) -> Self {
        Self::from_kind(BenchKind::Or, arity).expect("valid arity")
    }
    pub fn nor(arity: usize) -> Self {
        Self::from_kind(BenchKind::Nor, arity).expect("valid arity")
    }
    pub fn xor(arity: usize) -> Self {
        Self::from_kind(BenchKind::Xor, arity).expect("valid arity")
    }
    pub fn xnor(arity: usize) -> Self {
        Self::from_kind(BenchKind::Xnor, arity).expect("valid arity")
    }
    pub fn not() -> Self {
        Self::from_kind(BenchKind::Not, 1).expect("valid arity")
    }
    pub fn buf() -> Self {
        Self::from_kind(BenchKind::Buff, 1).expect("valid arity")
    }

    pub fn arity(&self) -> usize {
        self.arity as usize
    }

    /// 4-bit table for two-input functions, 2-bit table for unary ones.
    pub fn small_table(&self) -> Option<u8> {
        (self.arity <= 2).then(|| self.table[0] as u8)
    }

    pub fn output(&self, minterm: usize) -> bool {
        assert!(minterm < 1 << self.arity);
        (self.table[minterm / 64] >> (minterm % 64)) & 1 == 1
    }

    pub fn eval(&self, inputs: &[bool]) -> bool {
        assert_eq!(inputs.len(), self.arity(), "arity mismatch");
        let m = inputs
            .iter()
            .enumerate()
            .fold(0usize, |acc, (j, &b)| acc | ((b as usize) << j));
        self.output(m)
    }

    /// Evaluate over 64 parallel lanes via sum of minterms.
    pub fn eval_words(&self, inputs: &[u64]) -> u64 {
        if let Some(kind) = self.bench_kind() {
            return kind.eval_words(inputs);
        }
        let mut out = 0u64;
        for m in 0..(1usize << self.arity) {
            if self.output(m) {
                let term = inputs
                    .iter()
                    .enumerate()
                    .fold(!0u64, |acc, (j, &w)| acc & if m >> j & 1 == 1 { w } else { !w });
                out |= term;
            }
        }
        out
    }

    /// The `.bench` primitive with this exact truth table, if any.
    pub fn bench_kind(&self) -> Option<BenchKind> {
        // Single-input AND/OR/XOR degenerate to BUFF; only NOT/BUFF may match arity 1.
        BenchKind::ALL.into_iter().find(|&k| {
            k.is_unary() == (self.arity == 1)
                && (0..1usize << self.arity).all(|m| k.output_for(m, self.arity) == self.output(m))
        })
    }

    /// Canonical name: `.bench` keyword when one exists, otherwise the
    /// two-input catalog name, otherwise a hex table.
    pub fn name(&self) -> String {
        if let Some(k) = self.bench_kind() {
            return k.keyword().to_string();
        }
        if self.arity == 2 {
            return TWO_INPUT_NAMES[self.table[0] as usize].to_string();
        }
        if self.arity == 1 {
            return if self.table[0] == 0 { "ZERO1" } else { "ONE1" }.to_string();
        }
        format!("LUT{}_{}", self.arity, self.hex_table())
    }

    fn hex_table(&self) -> String {
        self.table.iter().rev().map(|w| format!("{w:016x}")).collect()
    }

    /// Parses names produced by [`GateFunction::name`] for one- and
    /// two-input functions (`INV`/`BUF` accepted as synonyms).
    pub fn from_name(name: &str, arity: usize) -> Result<Self, FunctionError> {
        let upper = name.to_ascii_uppercase();
        if arity == 1 {
            return match upper.as_str() {
                "NOT" | "INV" => Ok(Self::not()),
                "BUFF" | "BUF" => Ok(Self::buf()),
                _ => Err(FunctionError::UnknownName(name.to_string())),
            };
        }
        if arity == 2 {
            if let Some(t) = TWO_INPUT_NAMES.iter().position(|n| *n == upper) {
                return Ok(Self::two_input(t as u8));
            }
        }
        let kind = BenchKind::from_keyword(&upper).ok_or_else(|| FunctionError::UnknownName(name.to_string()))?;
        Self::from_kind(kind, arity)
    }
}

impl fmt::Debug for GateFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name(), self.arity)
    }
}

impl fmt::Display for GateFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Serialized as `NAME/arity`.
impl Serialize for GateFunction {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format!("{}/{}", self.name(), self.arity))
    }
}

impl<'de> Deserialize<'de> for GateFunction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl FromStr for GateFunction {
    type Err = FunctionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, arity) = s
            .split_once('/')
            .ok_or_else(|| FunctionError::UnknownName(s.to_string()))?;
        let arity: usize = arity.parse().map_err(|_| FunctionError::UnknownName(s.to_string()))?;
        Self::from_name(name, arity)
    }
}
