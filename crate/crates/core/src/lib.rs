//! Logic-obfuscation workbench: lock and camouflage gate-level netlists,
//! simulate deterministic, probabilistic and polymorphic behavior, and
//! attack the result with SAT, Double-DIP and PSAT.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack;
pub mod benchmarks;
pub mod device;
pub mod hybrid;
pub mod metrics;
pub mod netlist;
pub mod obfuscate;
pub mod oracle;
pub mod pattern;
pub mod simulate;

pub use pattern::Pattern;
