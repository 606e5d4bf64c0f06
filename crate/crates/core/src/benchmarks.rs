//! Bundled ISCAS-85 netlists, so examples and tests need no external files.

use crate::netlist::{parse_bench, Circuit, NetlistError};

const BUNDLED: [(&str, &str); 4] = [
    ("c17", include_str!("../data/c17.bench")),
    ("c432", include_str!("../data/c432.bench")),
    ("c880", include_str!("../data/c880.bench")),
    ("c7552", include_str!("../data/c7552.bench")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|b| b.0)
}

/// `.bench` source of a bundled benchmark.
pub fn source(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|b| b.0 == name).map(|b| b.1)
}

/// Parses a bundled benchmark; `None` for unknown names.
pub fn load(name: &str) -> Option<Result<Circuit, NetlistError>> {
    source(name).map(parse_bench)
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_bundled_parse() {
        for n in super::names() {
            let c = super::load(n).unwrap().unwrap();
            assert!(c.is_combinational() && c.gate_count() > 0, "{n}");
        }
        assert!(super::load("nope").is_none());
    }
}
