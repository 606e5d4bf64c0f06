//! DIMACS parsing and an external-solver backend that runs any
//! SAT-competition-compatible executable on a temporary CNF file.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use super::cnf::CnfFormula;
use super::solver::{ClauseSink, Lit, SatBackend, SolveResult, Var};

#[derive(Debug, thiserror::Error)]
pub enum DimacsError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

/// Parses DIMACS CNF text.
pub fn parse_dimacs(text: &str) -> Result<CnfFormula, DimacsError> {
    let mut f = CnfFormula::new();
    let mut declared: Option<u32> = None;
    let mut clause = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('p') {
            let fields: Vec<&str> = rest.split_whitespace().collect();
            match fields.as_slice() {
                ["cnf", v, _] => {
                    declared = Some(v.parse().map_err(|_| DimacsError::Syntax {
                        line: i + 1,
                        message: format!("bad variable count {v:?}"),
                    })?)
                }
                _ => {
                    return Err(DimacsError::Syntax {
                        line: i + 1,
                        message: "expected `p cnf <vars> <clauses>`".into(),
                    })
                }
            }
            continue;
        }
        for tok in line.split_whitespace() {
            let x: i64 = tok.parse().map_err(|_| DimacsError::Syntax {
                line: i + 1,
                message: format!("bad literal {tok:?}"),
            })?;
            if x == 0 {
                f.add_clause(&clause);
                clause.clear();
            } else {
                clause.push(Lit::from_dimacs(x));
            }
        }
    }
    if !clause.is_empty() {
        f.add_clause(&clause);
    }
    if let Some(n) = declared {
        while f.num_vars() < n {
            f.new_var();
        }
    }
    Ok(f)
}

/// Result of parsing a solver's standard output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverOutput {
    pub result: SolveResult,
    /// Literals from `v` lines (true literals of the model).
    pub model: Vec<i64>,
}

/// Reads `s ...` / `v ...` lines; falls back to the 10/20 exit-code
/// convention when no status line is printed.
pub fn parse_solver_output(stdout: &str, exit_code: Option<i32>) -> SolverOutput {
    let mut result = None;
    let mut model = Vec::new();
    for line in stdout.lines() {
        let line = line.trim();
        if let Some(s) = line.strip_prefix("s ") {
            result = Some(match s.trim() {
                "SATISFIABLE" => SolveResult::Sat,
                "UNSATISFIABLE" => SolveResult::Unsat,
                _ => SolveResult::Unknown,
            });
        } else if let Some(v) = line.strip_prefix("v ") {
            model.extend(
                v.split_whitespace()
                    .filter_map(|t| t.parse::<i64>().ok())
                    .filter(|&x| x != 0),
            );
        }
    }
    let result = result.unwrap_or(match exit_code {
        Some(10) => SolveResult::Sat,
        Some(20) => SolveResult::Unsat,
        _ => SolveResult::Unknown,
    });
    SolverOutput { result, model }
}

static FILE_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Runs an external solver executable for every `solve` call. Clauses are
/// buffered; assumptions become unit clauses of the written file.
#[derive(Debug)]
pub struct ExternalSolver {
    program: PathBuf,
    formula: CnfFormula,
    model: Vec<bool>,
    deadline: Option<Instant>,
}

impl ExternalSolver {
    pub fn new(program: impl AsRef<Path>) -> Self {
        Self {
            program: program.as_ref().to_path_buf(),
            formula: CnfFormula::new(),
            model: Vec::new(),
            deadline: None,
        }
    }

    fn run(&mut self, text: &str) -> std::io::Result<SolverOutput> {
        let path = std::env::temp_dir().join(format!(
            "camoforge-{}-{}.cnf",
            std::process::id(),
            FILE_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        std::fs::write(&path, text)?;
        let mut child = Command::new(&self.program)
            .arg(&path)
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()?;
        let mut stdout = child.stdout.take().unwrap();
        let reader = std::thread::spawn(move || {
            let mut s = String::new();
            let _ = stdout.read_to_string(&mut s);
            s
        });
        let status = loop {
            if let Some(st) = child.try_wait()? {
                break Some(st);
            }
            if self.deadline.is_some_and(|d| Instant::now() >= d) {
                let _ = child.kill();
                let _ = child.wait();
                break None;
            }
            std::thread::sleep(Duration::from_millis(2));
        };
        let out = reader.join().unwrap_or_default();
        let _ = std::fs::remove_file(&path);
        Ok(match status {
            None => SolverOutput {
                result: SolveResult::Unknown,
                model: Vec::new(),
            },
            Some(st) => parse_solver_output(&out, st.code()),
        })
    }
}

impl ClauseSink for ExternalSolver {
    fn new_var(&mut self) -> Var {
        self.formula.new_var()
    }

    fn add_clause(&mut self, lits: &[Lit]) {
        self.formula.add_clause(lits);
    }

    fn num_vars(&self) -> u32 {
        self.formula.num_vars()
    }
}

impl SatBackend for ExternalSolver {
    fn solve(&mut self, assumptions: &[Lit]) -> SolveResult {
        let mut f = self.formula.clone();
        f.var_map.clear();
        for &a in assumptions {
            f.add_clause(&[a]);
        }
        match self.run(&f.to_dimacs()) {
            Ok(out) => {
                self.model = vec![false; f.num_vars() as usize];
                for x in out.model {
                    let l = Lit::from_dimacs(x);
                    if let Some(slot) = self.model.get_mut(l.var() as usize) {
                        *slot = !l.is_negated();
                    }
                }
                out.result
            }
            Err(_) => SolveResult::Unknown,
        }
    }

    fn value(&self, var: Var) -> bool {
        self.model.get(var as usize).copied().unwrap_or(false)
    }

    fn set_deadline(&mut self, deadline: Option<Instant>) {
        self.deadline = deadline;
    }

    fn num_clauses(&self) -> usize {
        self.formula.num_clauses()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        let text = "c comment\np cnf 3 2\n1 -2 0\n2 3\n-1 0\n";
        let f = parse_dimacs(text).unwrap();
        assert_eq!(f.num_clauses(), 2);
        assert_eq!(f.to_dimacs(), "p cnf 3 2\n1 -2 0\n2 3 -1 0\n");
        assert_eq!(parse_dimacs(&f.to_dimacs()).unwrap(), f);
        assert!(parse_dimacs("1 x 0\n").is_err());
    }

    #[test]
    fn solver_output_parsing() {
        let out = parse_solver_output("c hi\ns SATISFIABLE\nv 1 -2\nv 3 0\n", Some(10));
        assert_eq!(out.result, SolveResult::Sat);
        assert_eq!(out.model, vec![1, -2, 3]);
        assert_eq!(parse_solver_output("", Some(20)).result, SolveResult::Unsat);
        assert_eq!(parse_solver_output("", None).result, SolveResult::Unknown);
    }
}
