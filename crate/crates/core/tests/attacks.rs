use camoforge::attack::{
    conventional_attack, double_dip_attack, psat_attack, AttackConfig, AttackResult, AttackStatus,
};
use camoforge::benchmarks;
use camoforge::metrics::verify_key;
use camoforge::netlist::Circuit;
use camoforge::obfuscate::{insert_key_gates, LockedCircuit};
use camoforge::oracle::Oracle;
use camoforge::simulate::Simulator;
use camoforge::Pattern;

fn bench(name: &str) -> Circuit {
    benchmarks::load(name).unwrap().unwrap()
}

/// Keys (as integers) consistent with every DIP recorded so far.
fn consistent_keys(locked: &LockedCircuit, dips: &[(Pattern, Pattern)]) -> Vec<u64> {
    let sim = Simulator::new(&locked.circuit).unwrap();
    let inputs = locked.circuit.inputs();
    let data = locked.data_inputs();
    let keys = locked.key_input_ids();
    (0..1u64 << locked.key_len())
        .filter(|&k| {
            dips.iter().all(|(x, y)| {
                let mut full = Pattern::zeros(inputs.len());
                for (pos, id) in inputs.iter().enumerate() {
                    if let Some(i) = data.iter().position(|d| d == id) {
                        full.set(pos, x.get(i));
                    } else {
                        let j = keys.iter().position(|q| q == id).unwrap();
                        full.set(pos, k >> j & 1 == 1);
                    }
                }
                sim.eval(&full).unwrap() == *y
            })
        })
        .collect()
}

fn dips(r: &AttackResult) -> Vec<(Pattern, Pattern)> {
    r.trace.iter().map(|d| (d.input.clone(), d.response.clone())).collect()
}

#[test]
fn c17_three_key_gates_recovered() {
    let c = bench("c17");
    for seed in 0..20 {
        let locked = insert_key_gates(&c, 3, seed).unwrap();
        let oracle = Oracle::deterministic(&locked).unwrap();
        let r = conventional_attack(&locked, &oracle, &AttackConfig::default()).unwrap();
        assert_eq!(r.status, AttackStatus::Success);
        assert!(verify_key(&locked, &c, r.key.as_ref().unwrap()).unwrap(), "seed {seed}");
        assert_eq!(r.oracle_queries, r.iterations as u64);
    }
}

#[test]
fn zero_key_inputs_succeed_immediately() {
    let c = bench("c17");
    let locked = LockedCircuit::plain(c);
    let oracle = Oracle::deterministic(&locked).unwrap();
    let r = conventional_attack(&locked, &oracle, &AttackConfig::default()).unwrap();
    assert_eq!((r.status, r.iterations), (AttackStatus::Success, 0));
    assert!(r.key.unwrap().is_empty());
}

#[test]
fn every_iteration_shrinks_the_consistent_key_set() {
    let c = bench("c432");
    for seed in 0..4 {
        let locked = insert_key_gates(&c, 10, seed).unwrap();
        let oracle = Oracle::deterministic(&locked).unwrap();
        let r = conventional_attack(&locked, &oracle, &AttackConfig::default()).unwrap();
        assert_eq!(r.status, AttackStatus::Success);
        assert!(r.iterations <= 1 << 10);
        let d = dips(&r);
        let mut prev = consistent_keys(&locked, &[]).len();
        for i in 1..=d.len() {
            let now = consistent_keys(&locked, &d[..i]).len();
            assert!(now < prev, "seed {seed} iteration {i}: {now} !< {prev}");
            prev = now;
        }
        assert!(verify_key(&locked, &c, r.key.as_ref().unwrap()).unwrap());
    }
}

#[test]
fn double_dip_eliminates_at_least_two_keys_per_iteration() {
    for (name, keys) in [("c17", 4), ("c432", 8), ("c880", 12)] {
        let c = bench(name);
        for seed in 0..3 {
            let locked = insert_key_gates(&c, keys, seed).unwrap();
            let oracle = Oracle::deterministic(&locked).unwrap();
            let r = double_dip_attack(&locked, &oracle, &AttackConfig::default()).unwrap();
            assert_eq!(r.status, AttackStatus::Success);
            assert!(verify_key(&locked, &c, r.key.as_ref().unwrap()).unwrap());
            let d = dips(&r);
            let mut prev = consistent_keys(&locked, &[]).len();
            for i in 1..=d.len() {
                let now = consistent_keys(&locked, &d[..i]).len();
                if r.trace[i - 1].double_dip {
                    assert!(prev - now >= 2, "{name}/{seed} iteration {i}: {prev} -> {now}");
                } else {
                    assert!(now < prev);
                }
                prev = now;
            }
        }
    }
}

#[test]
fn one_bit_key_falls_back_to_conventional() {
    let c = bench("c17");
    let locked = insert_key_gates(&c, 1, 3).unwrap();
    let oracle = Oracle::deterministic(&locked).unwrap();
    let r = double_dip_attack(&locked, &oracle, &AttackConfig::default()).unwrap();
    assert_eq!(r.status, AttackStatus::Success);
    assert!(r.trace.iter().all(|d| !d.double_dip));
    assert!(verify_key(&locked, &c, r.key.as_ref().unwrap()).unwrap());
}

#[test]
fn psat_on_deterministic_oracle_matches_conventional() {
    let c = bench("c432");
    for seed in 0..3 {
        let locked = insert_key_gates(&c, 16, seed).unwrap();
        let o1 = Oracle::deterministic(&locked).unwrap();
        let o2 = Oracle::deterministic(&locked).unwrap();
        let config = AttackConfig {
            samples: 50,
            ..AttackConfig::default()
        };
        let a = conventional_attack(&locked, &o1, &config).unwrap();
        let b = psat_attack(&locked, &o2, &config).unwrap();
        assert_eq!(a.status, AttackStatus::Success);
        assert_eq!(b.status, AttackStatus::Success);
        assert_eq!(dips(&a), dips(&b));
        assert_eq!(a.key, b.key);
        assert!(b.trace.iter().all(|d| d.dominant));
        assert_eq!(b.oracle_queries, 50 * b.iterations as u64);
    }
}

#[test]
fn double_dip_and_conventional_agree_on_c432() {
    let c = bench("c432");
    let locked = insert_key_gates(&c, 32, 7).unwrap();
    let oracle = Oracle::deterministic(&locked).unwrap();
    let a = conventional_attack(&locked, &oracle, &AttackConfig::default()).unwrap();
    let b = double_dip_attack(&locked, &oracle, &AttackConfig::default()).unwrap();
    assert!(verify_key(&locked, &c, a.key.as_ref().unwrap()).unwrap());
    assert!(verify_key(&locked, &c, b.key.as_ref().unwrap()).unwrap());
}

#[test]
fn iteration_cap_is_reported() {
    let c = bench("c432");
    let locked = insert_key_gates(&c, 32, 2).unwrap();
    let oracle = Oracle::deterministic(&locked).unwrap();
    let config = AttackConfig {
        max_iterations: 1,
        ..AttackConfig::default()
    };
    let r = conventional_attack(&locked, &oracle, &config).unwrap();
    assert_eq!((r.status, r.iterations), (AttackStatus::IterationCap, 1));
    assert!(r.key.is_none());
}

#[test]
fn trace_lines_have_six_fields() {
    let c = bench("c17");
    let locked = insert_key_gates(&c, 3, 1).unwrap();
    let oracle = Oracle::deterministic(&locked).unwrap();
    let r = conventional_attack(&locked, &oracle, &AttackConfig::default()).unwrap();
    let lines = r.trace_lines();
    assert_eq!(lines.len(), r.iterations);
    for (i, l) in lines.iter().enumerate() {
        let f: Vec<&str> = l.split(", ").collect();
        assert_eq!(f.len(), 6);
        assert_eq!(f[0], (i + 1).to_string());
    }
}
