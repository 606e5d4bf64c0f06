//! Per-gate stochastic behavior: probabilistic gates (correct with
//! probability `c`, otherwise the output flips) and polymorphic gates (the
//! function is redrawn from a distribution on every evaluation).
//!
//! Annotations travel inside `.bench` files as pragmas:
//!
//! ```text
//! #@ prob <gate> <correctness>
//! #@ poly <gate> <FUNCTION:probability>,<FUNCTION:probability>,...
//! ```

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{ObfuscateError, Selection};
use crate::netlist::{Circuit, GateFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Behavior {
    Probabilistic { correctness: f64 },
    Polymorphic { distribution: Vec<(GateFunction, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorAnnotation {
    pub gate: String,
    #[serde(flatten)]
    pub behavior: Behavior,
}

fn annotation_error(gate: &str, message: impl Into<String>) -> ObfuscateError {
    ObfuscateError::Annotation {
        gate: gate.to_string(),
        message: message.into(),
    }
}

/// Marks every selected gate probabilistic with the same correctness.
pub fn make_probabilistic(
    circuit: &Circuit,
    selection: &Selection,
    correctness: f64,
) -> Result<Vec<BehaviorAnnotation>, ObfuscateError> {
    let anns: Vec<_> = selection
        .gates
        .iter()
        .map(|g| BehaviorAnnotation {
            gate: g.clone(),
            behavior: Behavior::Probabilistic { correctness },
        })
        .collect();
    validate_annotations(circuit, &anns)?;
    Ok(anns)
}

const POLY_BINARY: [&str; 6] = ["NAND", "AND", "NOR", "OR", "XOR", "XNOR"];

/// The default polymorphic distribution for a gate computing `original`:
/// the original function with probability 2/3, the remaining functions of
/// its family sharing 1/3 equally. `None` if `original` has no family.
pub fn polymorphic_distribution(original: &GateFunction) -> Option<Vec<(GateFunction, f64)>> {
    let family: Vec<GateFunction> = match original.arity() {
        1 => vec![GateFunction::not(), GateFunction::buf()],
        2 => POLY_BINARY
            .iter()
            .map(|n| GateFunction::from_name(n, 2).unwrap())
            .collect(),
        _ => return None,
    };
    if !family.contains(original) {
        return None;
    }
    let other = (1.0 / 3.0) / (family.len() - 1) as f64;
    Some(
        family
            .into_iter()
            .map(|f| {
                let p = if &f == original { 2.0 / 3.0 } else { other };
                (f, p)
            })
            .collect(),
    )
}

/// Marks every selected gate polymorphic with its default distribution.
pub fn make_polymorphic(circuit: &Circuit, selection: &Selection) -> Result<Vec<BehaviorAnnotation>, ObfuscateError> {
    let mut anns = Vec::with_capacity(selection.len());
    for name in &selection.gates {
        let g = circuit
            .gate_by_name(name)
            .ok_or_else(|| ObfuscateError::UnknownGate(name.clone()))?;
        let f = &circuit.gate(g).function;
        let distribution = polymorphic_distribution(f)
            .ok_or_else(|| annotation_error(name, format!("no polymorphic family for {f}")))?;
        anns.push(BehaviorAnnotation {
            gate: name.clone(),
            behavior: Behavior::Polymorphic { distribution },
        });
    }
    Ok(anns)
}

/// Checks gate existence, parameter ranges and uniqueness.
pub fn validate_annotations(circuit: &Circuit, annotations: &[BehaviorAnnotation]) -> Result<(), ObfuscateError> {
    let mut seen = HashSet::new();
    for a in annotations {
        let g = circuit
            .gate_by_name(&a.gate)
            .ok_or_else(|| ObfuscateError::UnknownGate(a.gate.clone()))?;
        if !seen.insert(a.gate.as_str()) {
            return Err(annotation_error(&a.gate, "annotated more than once"));
        }
        match &a.behavior {
            Behavior::Probabilistic { correctness } => {
                if !(0.5..=1.0).contains(correctness) {
                    return Err(annotation_error(
                        &a.gate,
                        format!("correctness {correctness} outside [0.5, 1]"),
                    ));
                }
            }
            Behavior::Polymorphic { distribution } => {
                let arity = circuit.gate(g).function.arity();
                if distribution.is_empty() {
                    return Err(annotation_error(&a.gate, "empty distribution"));
                }
                let mut total = 0.0;
                for (f, p) in distribution {
                    if f.arity() != arity {
                        return Err(annotation_error(&a.gate, format!("{f} does not take {arity} inputs")));
                    }
                    if !(*p >= 0.0) {
                        return Err(annotation_error(&a.gate, format!("negative probability {p}")));
                    }
                    total += p;
                }
                if (total - 1.0).abs() > 1e-6 {
                    return Err(annotation_error(&a.gate, format!("probabilities sum to {total}")));
                }
            }
        }
    }
    Ok(())
}

/// Renders annotations as `#@` pragma lines.
pub fn annotations_to_pragmas(annotations: &[BehaviorAnnotation]) -> Vec<String> {
    annotations
        .iter()
        .map(|a| match &a.behavior {
            Behavior::Probabilistic { correctness } => format!("#@ prob {} {}", a.gate, correctness),
            Behavior::Polymorphic { distribution } => {
                let items: Vec<String> = distribution
                    .iter()
                    .map(|(f, p)| format!("{}:{}", f.name(), p))
                    .collect();
                format!("#@ poly {} {}", a.gate, items.join(","))
            }
        })
        .collect()
}

fn pragma_error(line: &str, message: impl Into<String>) -> ObfuscateError {
    ObfuscateError::Pragma {
        line: line.to_string(),
        message: message.into(),
    }
}

/// Reads `prob`/`poly` pragmas from a parsed circuit; other pragmas are ignored.
pub fn annotations_from_pragmas(circuit: &Circuit) -> Result<Vec<BehaviorAnnotation>, ObfuscateError> {
    let mut out = Vec::new();
    for line in circuit.pragmas() {
        let body = line.trim().trim_start_matches("#@");
        let fields: Vec<&str> = body.split_whitespace().collect();
        let (kind, gate, arg) = match fields.as_slice() {
            [kind @ ("prob" | "poly"), gate, arg] => (*kind, *gate, *arg),
            [kind @ ("prob" | "poly"), ..] => {
                return Err(pragma_error(line, format!("{kind} takes a gate and one argument")))
            }
            _ => continue,
        };
        let g = circuit
            .gate_by_name(gate)
            .ok_or_else(|| pragma_error(line, format!("unknown gate {gate:?}")))?;
        let behavior = if kind == "prob" {
            let correctness = arg
                .parse::<f64>()
                .map_err(|_| pragma_error(line, format!("bad correctness {arg:?}")))?;
            Behavior::Probabilistic { correctness }
        } else {
            let arity = circuit.gate(g).function.arity();
            let mut distribution = Vec::new();
            for item in arg.split(',') {
                let (name, p) = item
                    .split_once(':')
                    .ok_or_else(|| pragma_error(line, format!("expected FUNCTION:p, got {item:?}")))?;
                let f = GateFunction::from_name(name, arity).map_err(|e| pragma_error(line, e.to_string()))?;
                let p = p
                    .parse::<f64>()
                    .map_err(|_| pragma_error(line, format!("bad probability {p:?}")))?;
                distribution.push((f, p));
            }
            Behavior::Polymorphic { distribution }
        };
        out.push(BehaviorAnnotation {
            gate: gate.to_string(),
            behavior,
        });
    }
    validate_annotations(circuit, &out)?;
    Ok(out)
}

/// Replaces the circuit's `prob`/`poly` pragmas with `annotations`, keeping
/// every other pragma line.
pub fn annotate_circuit(circuit: &Circuit, annotations: &[BehaviorAnnotation]) -> Result<Circuit, ObfuscateError> {
    validate_annotations(circuit, annotations)?;
    let mut pragmas: Vec<String> = circuit
        .pragmas()
        .iter()
        .filter(|p| {
            let first = p.trim().trim_start_matches("#@").split_whitespace().next();
            !matches!(first, Some("prob" | "poly"))
        })
        .cloned()
        .collect();
    pragmas.extend(annotations_to_pragmas(annotations));
    Ok(circuit.with_pragmas(pragmas))
}

/// Per-gate correctness overrides applied on top of a uniform default.
pub fn with_correctness_overrides(annotations: &mut [BehaviorAnnotation], overrides: &HashMap<String, f64>) {
    for a in annotations {
        if let (Behavior::Probabilistic { correctness }, Some(c)) = (&mut a.behavior, overrides.get(&a.gate)) {
            *correctness = *c;
        }
    }
}
