//! ISCAS `.bench` reader and writer.
//!
//! Grammar (one statement per line):
//!
//! ```text
//! INPUT(name)
//! OUTPUT(name)
//! name = KIND(a, b, ...)      KIND in AND NAND OR NOR XOR XNOR NOT BUFF DFF
//! # comment                   discarded
//! #@ pragma                   kept verbatim, re-emitted by write_bench
//! ```

use std::fmt::Write as _;

use super::{BenchKind, Circuit, CircuitBuilder, GateFunction, NetlistError};

fn syntax(line: usize, column: usize, message: impl Into<String>) -> NetlistError {
    NetlistError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn valid_name(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| !c.is_whitespace() && !matches!(c, '(' | ')' | ',' | '=' | '#'))
}

/// Parses `NAME(args)` starting at byte `start` of `line`; returns name and args.
fn call(line: &str, start: usize, lineno: usize) -> Result<(&str, Vec<&str>), NetlistError> {
    let rest = &line[start..];
    let open = rest
        .find('(')
        .ok_or_else(|| syntax(lineno, start + rest.len() + 1, "expected '('"))?;
    let close = rest
        .rfind(')')
        .ok_or_else(|| syntax(lineno, start + rest.len() + 1, "expected ')'"))?;
    if close < open {
        return Err(syntax(lineno, start + close + 1, "unbalanced parentheses"));
    }
    let trailing = rest[close + 1..].trim();
    if !trailing.is_empty() {
        let col = start + close + 2 + (rest[close + 1..].len() - rest[close + 1..].trim_start().len());
        return Err(syntax(lineno, col, format!("unexpected trailing text {trailing:?}")));
    }
    let name = rest[..open].trim();
    let inner = &rest[open + 1..close];
    let args: Vec<&str> = if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner.split(',').map(str::trim).collect()
    };
    for (i, a) in args.iter().enumerate() {
        if !valid_name(a) {
            let offset = inner.split(',').take(i).map(|s| s.len() + 1).sum::<usize>();
            return Err(syntax(
                lineno,
                start + open + 2 + offset,
                format!("invalid net name {a:?}"),
            ));
        }
    }
    Ok((name, args))
}

/// Parses `.bench` text into a validated circuit. Flip-flops become
/// [`super::SequentialElement`]s on the returned circuit.
pub fn parse_bench(text: &str) -> Result<Circuit, NetlistError> {
    let mut b = CircuitBuilder::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let trimmed = raw.trim_start();
        if trimmed.starts_with("#@") {
            b.pragma(raw);
            continue;
        }
        let code = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        if code.trim().is_empty() {
            continue;
        }
        let indent = code.len() - code.trim_start().len();
        if let Some(eq) = code.find('=') {
            let lhs = code[..eq].trim();
            if !valid_name(lhs) {
                return Err(syntax(lineno, indent + 1, format!("invalid net name {lhs:?}")));
            }
            let kw_col = eq + 1 + (code[eq + 1..].len() - code[eq + 1..].trim_start().len());
            let (kind, args) = call(code, eq + 1, lineno)?;
            if kind.eq_ignore_ascii_case("DFF") {
                if args.len() != 1 {
                    return Err(syntax(lineno, kw_col + 1, "DFF takes exactly one input"));
                }
                b.flip_flop(args[0], lhs);
                continue;
            }
            let bench_kind = BenchKind::from_keyword(kind)
                .ok_or_else(|| syntax(lineno, kw_col + 1, format!("unknown gate type {kind:?}")))?;
            if args.is_empty() {
                return Err(syntax(lineno, kw_col + 1, "gate without inputs"));
            }
            let function =
                GateFunction::from_kind(bench_kind, args.len()).map_err(|source| NetlistError::Function {
                    gate: lhs.to_string(),
                    source,
                })?;
            b.gate(lhs, function, args);
        } else {
            let (kw, args) = call(code, indent, lineno)?;
            if args.len() != 1 {
                return Err(syntax(lineno, indent + 1, format!("{kw} takes exactly one net")));
            }
            match kw.to_ascii_uppercase().as_str() {
                "INPUT" => b.input(args[0]),
                "OUTPUT" => b.output(args[0]),
                _ => return Err(syntax(lineno, indent + 1, format!("unknown statement {kw:?}"))),
            };
        }
    }
    b.build()
}

/// Serializes a circuit: pragmas, inputs, outputs, flip-flops, then gates in
/// topological order. Ordinary comments are not preserved.
pub fn write_bench(circuit: &Circuit) -> String {
    let mut s = String::new();
    for p in circuit.pragmas() {
        s.push_str(p);
        s.push('\n');
    }
    for name in circuit.input_names() {
        let _ = writeln!(s, "INPUT({name})");
    }
    for name in circuit.output_names() {
        let _ = writeln!(s, "OUTPUT({name})");
    }
    for ff in circuit.sequential() {
        let _ = writeln!(s, "{} = DFF({})", ff.q_output, ff.d_input);
    }
    for g in circuit.gates() {
        let kind = g
            .function
            .bench_kind()
            .map(BenchKind::keyword)
            .unwrap_or_else(|| panic!("gate {} has no .bench primitive", circuit.name(g.output)));
        let fanin: Vec<&str> = g.fanin.iter().map(|&f| circuit.name(f)).collect();
        let _ = writeln!(s, "{} = {}({})", circuit.name(g.output), kind, fanin.join(", "));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const C17: &str = "# c17\nINPUT(1)\nINPUT(2)\nINPUT(3)\nINPUT(6)\nINPUT(7)\n\nOUTPUT(22)\nOUTPUT(23)\n\n\
        10 = NAND(1, 3)\n11 = NAND(3, 6)\n16 = NAND(2, 11)\n19 = NAND(11, 7)\n22 = NAND(10, 16)\n23 = NAND(16, 19)\n";

    #[test]
    fn c17_shape() {
        let c = parse_bench(C17).unwrap();
        assert_eq!(c.inputs().len(), 5);
        assert_eq!(c.outputs().len(), 2);
        assert_eq!(c.gate_count(), 6);
        assert!(c.gates().iter().all(|g| g.function == GateFunction::nand(2)));
    }

    #[test]
    fn empty_text_has_no_outputs() {
        assert_eq!(parse_bench("").unwrap_err(), NetlistError::NoOutputs);
        assert_eq!(parse_bench("# only a comment\n").unwrap_err(), NetlistError::NoOutputs);
    }

    #[test]
    fn self_referencing_gate_is_cycle() {
        let err = parse_bench("INPUT(a)\nOUTPUT(g)\ng = NAND(g, a)\n").unwrap_err();
        assert_eq!(err, NetlistError::Cycle("g".into()));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_bench("INPUT(a)\nOUTPUT(g)\ng = FROB(a)\n").unwrap_err();
        assert_eq!(
            err,
            NetlistError::Syntax {
                line: 3,
                column: 5,
                message: "unknown gate type \"FROB\"".into()
            }
        );
        let err = parse_bench("INPUT(a\n").unwrap_err();
        assert!(matches!(err, NetlistError::Syntax { line: 1, .. }));
        let err = parse_bench("WIRE(a)\n").unwrap_err();
        assert!(matches!(err, NetlistError::Syntax { line: 1, column: 1, .. }));
    }

    #[test]
    fn round_trip_is_isomorphic() {
        let c = parse_bench(C17).unwrap();
        let again = parse_bench(&write_bench(&c)).unwrap();
        assert!(c.isomorphic(&again));
    }

    #[test]
    fn single_buffer_writes_three_lines() {
        let c = parse_bench("INPUT(a)\nOUTPUT(y)\ny = BUFF(a)\n").unwrap();
        assert_eq!(write_bench(&c), "INPUT(a)\nOUTPUT(y)\ny = BUFF(a)\n");
    }

    #[test]
    fn pragmas_survive_byte_exact() {
        let text = "#@ prob g 0.95\n# plain comment\nINPUT(a)\n  #@ poly g NAND:0.5,AND:0.5 \nOUTPUT(g)\ng = NOT(a)\n";
        let c = parse_bench(text).unwrap();
        assert_eq!(c.pragmas(), &["#@ prob g 0.95", "  #@ poly g NAND:0.5,AND:0.5 "]);
        let out = write_bench(&c);
        assert!(out.starts_with("#@ prob g 0.95\n  #@ poly g NAND:0.5,AND:0.5 \n"));
        assert!(!out.contains("plain comment"));
        assert_eq!(parse_bench(&out).unwrap().pragmas(), c.pragmas());
    }

    #[test]
    fn dff_lines_become_sequential_elements() {
        let c = parse_bench("INPUT(a)\nOUTPUT(y)\nq = DFF(d)\nd = AND(a, q)\ny = NOT(q)\n").unwrap();
        assert_eq!(c.sequential().len(), 1);
        assert_eq!(c.sequential()[0].q_output, "q");
        let again = parse_bench(&write_bench(&c)).unwrap();
        assert!(c.isomorphic(&again));
    }

    #[test]
    fn lowercase_keywords_and_synonyms() {
        let c = parse_bench("input(a)\noutput(y)\nt = inv(a)\ny = buf(t)\n").unwrap();
        assert_eq!(c.gate_count(), 2);
    }
}
