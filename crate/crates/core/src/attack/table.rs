//! Explicit-table form of the DIP pruning loop, for small abstract
//! instances where every key's response to every input is written out.

use crate::Pattern;

/// Responses of every candidate key to a set of inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyTable {
    pub keys: usize,
    /// `(input, outputs[k])` for each tabulated input.
    pub rows: Vec<(Pattern, Vec<Pattern>)>,
}

/// One pruning step: the DIP, the oracle's answer, and the keys removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PruneStep {
    pub input: Pattern,
    pub response: Pattern,
    pub pruned: Vec<usize>,
    pub remaining: Vec<usize>,
}

impl KeyTable {
    pub fn row(&self, input: &Pattern) -> Option<&[Pattern]> {
        self.rows.iter().find(|r| &r.0 == input).map(|r| r.1.as_slice())
    }

    /// Whether `input` still distinguishes some pair of remaining keys.
    pub fn distinguishes(&self, input: &Pattern, remaining: &[usize]) -> bool {
        self.row(input)
            .is_some_and(|outs| remaining.iter().any(|&k| outs[k] != outs[remaining[0]]))
    }

    /// Applies `dips` in order, querying `oracle` for each, and removes
    /// every key whose tabulated output disagrees. Inputs that do not
    /// distinguish the remaining keys are skipped; when `dips` runs out the
    /// first distinguishing row is used. Returns the steps and the surviving
    /// keys.
    pub fn prune(&self, dips: &[Pattern], mut oracle: impl FnMut(&Pattern) -> Pattern) -> (Vec<PruneStep>, Vec<usize>) {
        let mut remaining: Vec<usize> = (0..self.keys).collect();
        let mut steps = Vec::new();
        let mut scripted = dips.iter();
        loop {
            let next = scripted
                .by_ref()
                .find(|d| self.distinguishes(d, &remaining))
                .or_else(|| {
                    self.rows
                        .iter()
                        .map(|r| &r.0)
                        .find(|d| self.distinguishes(d, &remaining))
                });
            let Some(input) = next.cloned() else { break };
            let response = oracle(&input);
            let outs = self.row(&input).unwrap();
            let (keep, pruned): (Vec<usize>, Vec<usize>) = remaining.iter().partition(|&&k| outs[k] == response);
            remaining = keep;
            steps.push(PruneStep {
                input,
                response,
                pruned,
                remaining: remaining.clone(),
            });
            if remaining.len() <= 1 {
                break;
            }
        }
        (steps, remaining)
    }
}

const EXAMPLE_ROWS: [(&str, [&str; 8]); 9] = [
    ("00000", ["01", "00", "10", "11", "00", "01", "10", "11"]),
    ("00001", ["00", "01", "10", "11", "01", "00", "10", "11"]),
    ("00010", ["10", "11", "01", "00", "10", "11", "00", "01"]),
    ("00011", ["10", "11", "00", "01", "10", "11", "01", "00"]),
    ("00100", ["01", "00", "10", "11", "00", "01", "10", "11"]),
    ("00101", ["00", "01", "10", "11", "01", "00", "10", "11"]),
    ("00110", ["10", "11", "01", "00", "10", "11", "00", "01"]),
    ("00111", ["10", "11", "00", "01", "10", "11", "01", "00"]),
    ("11111", ["11", "10", "10", "11", "11", "10", "10", "11"]),
];

/// Correct outputs of the example instance (key k1), row by row.
const EXAMPLE_ORACLE: [&str; 9] = ["00", "01", "11", "11", "00", "01", "11", "11", "10"];

/// Eight-key, five-input, two-output example: c17 with three key bits,
/// where k1 is the correct key.
pub fn example_table() -> KeyTable {
    KeyTable {
        keys: 8,
        rows: EXAMPLE_ROWS
            .iter()
            .map(|(i, outs)| (i.parse().unwrap(), outs.iter().map(|o| o.parse().unwrap()).collect()))
            .collect(),
    }
}

/// The example instance's correct response to `input`, if tabulated.
pub fn example_oracle(input: &Pattern) -> Option<Pattern> {
    EXAMPLE_ROWS
        .iter()
        .position(|(i, _)| i.parse::<Pattern>().unwrap() == *input)
        .map(|r| EXAMPLE_ORACLE[r].parse().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Pattern {
        s.parse().unwrap()
    }

    #[test]
    fn deterministic_walkthrough() {
        let t = example_table();
        let (steps, remaining) = t.prune(&[p("00100"), p("00111")], |x| example_oracle(x).unwrap());
        assert_eq!(steps.len(), 2);
        assert_eq!(steps[0].pruned, vec![0, 2, 3, 5, 6, 7]);
        assert_eq!(steps[1].pruned, vec![4]);
        assert_eq!(remaining, vec![1]);
    }

    #[test]
    fn erroneous_response_prunes_correct_key() {
        let t = example_table();
        // A single faulty 01 answer to 00100 keeps k0/k5 and discards k1.
        let (steps, remaining) = t.prune(&[p("00100"), p("00111")], |x| {
            if *x == p("00100") {
                p("01")
            } else {
                example_oracle(x).unwrap()
            }
        });
        assert_eq!(steps[0].pruned, vec![1, 2, 3, 4, 6, 7]);
        assert_eq!(steps[1].pruned, vec![0]);
        assert_eq!(remaining, vec![5]);
    }

    #[test]
    fn unscripted_run_finds_correct_key() {
        let t = example_table();
        let (_, remaining) = t.prune(&[], |x| example_oracle(x).unwrap());
        assert_eq!(remaining, vec![1]);
    }
}
