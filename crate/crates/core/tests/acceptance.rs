//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the report is always shown
//! by `cargo test`. A FAIL line is a finding, not a crash: the process exits
//! successfully either way and the line carries the measured values.
//!
//! `CAMOFORGE_SMOKE_BUDGET_S` shortens the c7552 smoke budget (default 600 s)
//! for quick local runs; the default is the criterion's budget.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use camoforge::attack::table::{example_oracle, example_table};
use camoforge::attack::{conventional_attack, double_dip_attack, AttackConfig, AttackKind, AttackStatus};
use camoforge::benchmarks;
use camoforge::device::{conductances, energy, read_power, DeviceParams, DETERMINISTIC_DELAY, POWER_AT_90_PERCENT};
use camoforge::hybrid::{
    adder_case_study, build_ripple_adder, delay_aware_select, lsb_cone_selection, skewed_circuit, worst_flip_error,
    DelayMap, SkewParams,
};
use camoforge::metrics::{run_campaign, verify_key, CampaignConfig, CampaignSummary, OracleSpec, Scenario};
use camoforge::netlist::{Circuit, GateFunction};
use camoforge::obfuscate::{
    camouflage, insert_key_gates, select_gates_where, supports, Behavior, BehaviorAnnotation, FunctionSet,
    LockedCircuit,
};
use camoforge::oracle::{DefenseConfig, Oracle};
use camoforge::simulate::{SampleContext, Simulator};
use camoforge::Pattern;

struct Report {
    failed: Vec<String>,
}

impl Report {
    fn line(&mut self, id: &str, pass: bool, detail: String) {
        println!("{} criterion {id}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(id.to_string());
        }
    }
}

fn bench(name: &str) -> Circuit {
    benchmarks::load(name).unwrap().unwrap()
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

// ---------------------------------------------------------------- 1

fn device_equations(r: &mut Report) {
    let p = DeviceParams::reference();
    let (gp, gap) = conductances(&p);
    let bare = read_power(&p, 20e-6).unwrap();
    let leaky_params = p.with_calibrated_leakage().unwrap();
    let leaky = read_power(&leaky_params, 20e-6).unwrap();
    let (lo, hi) = (0.2095e-6 * 0.98, 0.2125e-6 * 1.02);
    let power_ok = (lo..=hi).contains(&bare) && (lo..=hi).contains(&leaky);
    let e = energy(leaky, DETERMINISTIC_DELAY);
    let energy_ok = (e / 0.33e-15 - 1.0).abs() <= 0.03;
    // Conductances are quoted to four significant figures.
    let g_ok = (gp * 1e6 - 420.0).abs() < 1e-9 && ((gap * 1e6 * 10.0).round() / 10.0 - 155.6).abs() < 1e-9;
    let quad = [1e-6, 5e-6, 13e-6, 20e-6, 37e-6].iter().all(|&i| {
        let a = read_power(&p, i).unwrap();
        let b = read_power(&p, 2.0 * i).unwrap();
        ((b / a) - 4.0).abs() <= 8.0 * f64::EPSILON
    });
    r.line(
        "1",
        power_ok && energy_ok && g_ok && quad,
        format!(
            "device equations: P(20uA) = {:.4} uW bare / {:.4} uW with leakage (window [{:.4}, {:.4}]), \
             energy = {:.4} fJ (0.33 +/- 3%), G_P = {:.4} uS, G_AP = {:.4} uS, quadratic scaling {}",
            bare * 1e6,
            leaky * 1e6,
            lo * 1e6,
            hi * 1e6,
            e * 1e15,
            gp * 1e6,
            gap * 1e6,
            if quad { "exact" } else { "violated" }
        ),
    );
}

// ---------------------------------------------------------------- 2

fn walkthrough(r: &mut Report) {
    let table = example_table();
    let dips: Vec<Pattern> = ["00100", "00111"].iter().map(|s| s.parse().unwrap()).collect();
    let (steps, remaining) = table.prune(&dips, |x| example_oracle(x).unwrap());
    let got: Vec<(String, String, Vec<usize>)> = steps
        .iter()
        .map(|s| (s.input.to_string(), s.response.to_string(), s.pruned.clone()))
        .collect();
    let want = vec![
        ("00100".to_string(), "00".to_string(), vec![0, 2, 3, 5, 6, 7]),
        (
            "00111".to_string(),
            example_oracle(&dips[1]).unwrap().to_string(),
            vec![4],
        ),
    ];
    r.line(
        "2",
        got == want && remaining == vec![1],
        format!("pruning walkthrough: steps {got:?}, returned keys {remaining:?} (expected k1)"),
    );
}

// ---------------------------------------------------------------- 3

/// Random simulation cross-check, independent of the SAT-based miter.
fn agrees_on_random_patterns(locked: &LockedCircuit, original: &Circuit, key: &Pattern, seed: u64) -> bool {
    let sim_l = Simulator::new(&locked.circuit).unwrap();
    let sim_o = Simulator::new(original).unwrap();
    let data = locked.data_inputs();
    let keys = locked.key_input_ids();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..2048).all(|_| {
        let x = Pattern::random(original.inputs().len(), &mut rng);
        let mut full = Pattern::zeros(locked.circuit.inputs().len());
        for (pos, id) in locked.circuit.inputs().iter().enumerate() {
            let bit = match data.iter().position(|d| d == id) {
                Some(i) => x.get(i),
                None => key.get(keys.iter().position(|k| k == id).unwrap()),
            };
            full.set(pos, bit);
        }
        sim_l.eval(&full).unwrap() == sim_o.eval(&x).unwrap()
    })
}

fn deterministic_soundness(r: &mut Report) {
    let names = ["c17", "c432", "c880"];
    let circuits: Vec<Circuit> = names.iter().map(|n| bench(n)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0003);
    let (mut ok, mut slowest) = (0, 0.0f64);
    let mut failures = Vec::new();
    for trial in 0..100 {
        let which = rng.gen_range(0..names.len());
        let c = &circuits[which];
        // c17 has only six lockable nets.
        let max_keys = if which == 0 { 6 } else { 32 };
        let keys = rng.gen_range(3..=max_keys);
        let seed = rng.gen::<u64>();
        let locked = insert_key_gates(c, keys, seed).unwrap();
        let oracle = Oracle::deterministic(&locked).unwrap();
        let config = AttackConfig {
            timeout: Duration::from_secs(60),
            seed,
            ..AttackConfig::default()
        };
        let res = conventional_attack(&locked, &oracle, &config).unwrap();
        slowest = slowest.max(res.runtime_s);
        let good = res.status == AttackStatus::Success
            && res
                .key
                .as_ref()
                .is_some_and(|k| verify_key(&locked, c, k).unwrap() && agrees_on_random_patterns(&locked, c, k, seed));
        if good {
            ok += 1;
        } else {
            failures.push(format!("#{trial} {}/{keys}: {}", names[which], res.status));
        }
    }
    r.line(
        "3",
        ok == 100 && slowest <= 60.0,
        format!("deterministic soundness: {ok}/100 random locks recovered, slowest {slowest:.3} s (limit 60 s) {failures:?}"),
    );
}

// ---------------------------------------------------------------- campaigns

/// Pooled statistics over several fixed placements.
#[derive(Default, Clone)]
struct Pool {
    runs: usize,
    successes: usize,
    correct: usize,
    hd: Vec<f64>,
    oer: Vec<f64>,
    runtime: f64,
}

impl Pool {
    fn add(&mut self, s: &CampaignSummary) {
        for rec in &s.records {
            self.runs += 1;
            self.runtime += rec.runtime_s;
            if rec.status == AttackStatus::Success {
                self.successes += 1;
                self.hd.extend(rec.hd);
                self.oer.extend(rec.oer);
            }
            self.correct += rec.key_correct as usize;
        }
    }
    fn success(&self) -> f64 {
        self.successes as f64 / self.runs as f64
    }
    fn correct(&self) -> f64 {
        self.correct as f64 / self.runs as f64
    }
    fn mean(v: &[f64]) -> Option<f64> {
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
    fn mean_hd(&self) -> Option<f64> {
        Self::mean(&self.hd)
    }
    fn mean_oer(&self) -> Option<f64> {
        Self::mean(&self.oer)
    }
    fn mean_runtime(&self) -> f64 {
        self.runtime / self.runs as f64
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Mode {
    Prob,
    Poly,
}

/// `runs` attacks spread evenly over `placements` key/gate placements; the
/// seed matrix depends only on the placement index and run index, so two
/// attack kinds see identical scenarios and oracle seeds.
#[allow(clippy::too_many_arguments)]
fn pooled(
    circuit: &Circuit,
    name: &str,
    mode: Mode,
    fraction: f64,
    correctness: f64,
    kind: AttackKind,
    runs: usize,
    placements: u64,
    oracle: OracleSpec,
) -> Pool {
    let mut pool = Pool::default();
    for placement in 0..placements {
        let lock_seed = 0x5EED_0000 + placement;
        let scenario = match mode {
            Mode::Prob => Scenario::probabilistic(name, circuit, 32, fraction, correctness, lock_seed).unwrap(),
            Mode::Poly => Scenario::polymorphic(name, circuit, 32, fraction, lock_seed).unwrap(),
        };
        let config = CampaignConfig {
            scenario,
            attack: kind,
            attack_config: AttackConfig {
                samples: 1000,
                patterns: 10_000,
                timeout: Duration::from_secs(60),
                ..AttackConfig::default()
            },
            runs: runs / placements as usize,
            master_seed: 0xC0FF_EE00 + placement,
            oracle: oracle.clone(),
            jobs: None,
        };
        pool.add(&run_campaign(&config).unwrap());
    }
    pool
}

type Key = (&'static str, u32, u32, AttackKind);

struct Campaigns {
    c432: Circuit,
    c880: Circuit,
    prob: BTreeMap<(&'static str, u32, u32, u8), Pool>,
}

fn kind_tag(k: AttackKind) -> u8 {
    match k {
        AttackKind::Sat => 0,
        AttackKind::DoubleDip => 1,
        AttackKind::Psat => 2,
    }
}

impl Campaigns {
    fn circuit(&self, name: &str) -> &Circuit {
        if name == "c432" {
            &self.c432
        } else {
            &self.c880
        }
    }

    /// Probabilistic-gate campaign, memoized; `pct` and `corr_pct` in percent.
    fn prob(&mut self, key: Key, runs: usize) -> Pool {
        let (name, pct, corr_pct, kind) = key;
        let k = (name, pct, corr_pct, kind_tag(kind));
        if let Some(p) = self.prob.get(&k) {
            if p.runs >= runs {
                return p.clone();
            }
        }
        let pool = pooled(
            self.circuit(name),
            name,
            Mode::Prob,
            pct as f64 / 100.0,
            corr_pct as f64 / 100.0,
            kind,
            runs,
            4,
            OracleSpec::Auto,
        );
        self.prob.insert(k, pool.clone());
        pool
    }
}

const RUNS: usize = 200;

fn degradation(r: &mut Report, cs: &mut Campaigns) {
    let mut parts = Vec::new();
    let mut pass = true;
    for name in ["c432", "c880"] {
        for (corr, limit) in [(99, 0.20), (90, 0.05)] {
            let p = cs.prob((name, 50, corr, AttackKind::Sat), RUNS);
            pass &= p.success() <= limit;
            parts.push(format!(
                "{name} 0.{corr}: {} ({} runs, limit {})",
                pct(p.success()),
                p.runs,
                pct(limit)
            ));
        }
    }
    r.line(
        "4",
        pass,
        format!(
            "conventional degradation at 50% probabilistic gates: {}",
            parts.join("; ")
        ),
    );
}

fn psat_superiority(r: &mut Report, cs: &mut Campaigns) {
    let mut parts = Vec::new();
    let mut pass = true;
    for name in ["c432", "c880"] {
        for corr in [99, 90] {
            let psat = cs.prob((name, 50, corr, AttackKind::Psat), RUNS);
            let conv = cs.prob((name, 50, corr, AttackKind::Sat), RUNS);
            let greater = psat.success() > conv.success();
            let floor = corr != 99 || psat.success() >= 0.90;
            pass &= greater && floor;
            parts.push(format!(
                "{name} 0.{corr}: PSAT {} (key-correct {}) vs conventional {} (key-correct {}){}{}",
                pct(psat.success()),
                pct(psat.correct()),
                pct(conv.success()),
                pct(conv.correct()),
                if floor { "" } else { " [below 90%]" },
                if greater { "" } else { " [not strictly greater]" }
            ));
        }
    }
    r.line(
        "5",
        pass,
        format!("PSAT superiority (S = 1000, {RUNS} runs each): {}", parts.join("; ")),
    );
}

fn hd_oer_ordering(r: &mut Report, cs: &mut Campaigns) {
    let psat = cs.prob(("c432", 50, 99, AttackKind::Psat), RUNS);
    let conv = cs.prob(("c432", 50, 99, AttackKind::Sat), RUNS);
    let (Some(ph), Some(po), Some(ch), Some(co)) = (psat.mean_hd(), psat.mean_oer(), conv.mean_hd(), conv.mean_oer())
    else {
        r.line(
            "6",
            false,
            format!(
                "HD/OER ordering on c432 50%/0.99: no successful runs to compare (PSAT {}, conventional {})",
                psat.successes, conv.successes
            ),
        );
        return;
    };
    let ordered = ph < ch && po < co;
    let near = |v: f64, target: f64| (100.0 * v - target).abs() <= 8.0;
    let close = near(ph, 7.5) && near(po, 23.0) && near(ch, 11.5) && near(co, 33.1);
    r.line(
        "6",
        ordered && close,
        format!(
            "HD/OER on c432 50%/0.99: PSAT HD {} OER {} ({} successes) vs conventional HD {} OER {} ({} successes); \
             ordering {}; reference 7.5%/23.0% vs 11.5%/33.1%, +/-8 pp {}",
            pct(ph),
            pct(po),
            psat.successes,
            pct(ch),
            pct(co),
            conv.successes,
            if ordered { "holds" } else { "violated" },
            if close { "met" } else { "missed" }
        ),
    );
}

fn runtime_overhead(r: &mut Report, cs: &mut Campaigns) {
    let configs = [(10, 99), (20, 95), (50, 90)];
    let mut logs = Vec::new();
    let mut parts = Vec::new();
    for name in ["c432", "c880"] {
        for (frac, corr) in configs {
            let runs = if frac == 50 { RUNS } else { 100 };
            let psat = cs.prob((name, frac, corr, AttackKind::Psat), runs);
            let conv = cs.prob((name, frac, corr, AttackKind::Sat), runs);
            let ratio = psat.mean_runtime() / conv.mean_runtime();
            logs.push(ratio.ln());
            parts.push(format!(
                "{name} {frac}%/0.{corr}: {:.4}s vs {:.4}s = {ratio:.1}x",
                psat.mean_runtime(),
                conv.mean_runtime()
            ));
        }
    }
    let geo = (logs.iter().sum::<f64>() / logs.len() as f64).exp();
    r.line(
        "7",
        (3.0..=40.0).contains(&geo),
        format!(
            "PSAT runtime overhead: geometric mean {geo:.1}x (window 3x-40x) over {}",
            parts.join("; ")
        ),
    );
}

fn polymorphic_sweep(r: &mut Report, cs: &Campaigns) {
    let mut parts = Vec::new();
    let mut pass = true;
    // The distribution itself: 2/3 for the original function, the rest shared.
    let dist = camoforge::obfuscate::polymorphic_distribution(&GateFunction::nand(2)).unwrap();
    let dist_ok = dist.len() == 6
        && dist.iter().all(|(f, p)| {
            let want = if *f == GateFunction::nand(2) {
                2.0 / 3.0
            } else {
                1.0 / 15.0
            };
            (p - want).abs() < 1e-12
        });
    for name in ["c432", "c880"] {
        let run = |frac: f64| {
            pooled(
                cs.circuit(name),
                name,
                Mode::Poly,
                frac,
                1.0,
                AttackKind::Psat,
                100,
                2,
                OracleSpec::Auto,
            )
        };
        let (low, high) = (run(0.01), run(0.10));
        pass &= low.success() > high.success();
        parts.push(format!(
            "{name}: 1% {} vs 10% {}",
            pct(low.success()),
            pct(high.success())
        ));
    }
    r.line(
        "8",
        pass && dist_ok,
        format!(
            "polymorphic sweep (PSAT, 100 runs per point, 66.67%/6.67% distributions {}): {}",
            if dist_ok { "confirmed" } else { "wrong" },
            parts.join("; ")
        ),
    );
}

fn defense(r: &mut Report, cs: &mut Campaigns) {
    let undefended = cs.prob(("c432", 50, 99, AttackKind::Psat), RUNS);
    let defended = pooled(
        &cs.c432,
        "c432",
        Mode::Prob,
        0.5,
        0.99,
        AttackKind::Psat,
        RUNS,
        4,
        OracleSpec::Defended(DefenseConfig::default()),
    );
    r.line(
        "12",
        defended.success() < 0.5 * undefended.success(),
        format!(
            "defended oracle on c432 50%/0.99: PSAT success {} vs undefended {} (must be < half)",
            pct(defended.success()),
            pct(undefended.success())
        ),
    );
}

// ---------------------------------------------------------------- 9

fn consistent_keys(locked: &LockedCircuit, sim: &Simulator, dips: &[(Pattern, Pattern)]) -> usize {
    let inputs = locked.circuit.inputs();
    let data = locked.data_inputs();
    let keys = locked.key_input_ids();
    (0..1u64 << locked.key_len())
        .filter(|&k| {
            dips.iter().all(|(x, y)| {
                let mut full = Pattern::zeros(inputs.len());
                for (pos, id) in inputs.iter().enumerate() {
                    let bit = match data.iter().position(|d| d == id) {
                        Some(i) => x.get(i),
                        None => k >> keys.iter().position(|q| q == id).unwrap() & 1 == 1,
                    };
                    full.set(pos, bit);
                }
                sim.eval(&full).unwrap() == *y
            })
        })
        .count()
}

fn double_dip(r: &mut Report) {
    let mut runs = 0;
    let mut dd_iters = 0;
    let mut min_elim = usize::MAX;
    let mut violations = Vec::new();
    for (name, widths) in [
        ("c17", &[2usize, 4, 6][..]),
        ("c432", &[6, 8, 10, 12]),
        ("c880", &[8, 10, 12]),
    ] {
        let c = bench(name);
        for &w in widths {
            for seed in 0..3u64 {
                let locked = insert_key_gates(&c, w, 0xDD00 + seed).unwrap();
                let oracle = Oracle::deterministic(&locked).unwrap();
                let res = double_dip_attack(&locked, &oracle, &AttackConfig::default()).unwrap();
                runs += 1;
                if res.status != AttackStatus::Success || !verify_key(&locked, &c, res.key.as_ref().unwrap()).unwrap() {
                    violations.push(format!("{name}/{w}/{seed}: {}", res.status));
                    continue;
                }
                let sim = Simulator::new(&locked.circuit).unwrap();
                let mut dips = Vec::new();
                let mut before = consistent_keys(&locked, &sim, &dips);
                for d in &res.trace {
                    dips.push((d.input.clone(), d.response.clone()));
                    let after = consistent_keys(&locked, &sim, &dips);
                    if d.double_dip {
                        dd_iters += 1;
                        min_elim = min_elim.min(before - after);
                        if before - after < 2 {
                            violations.push(format!("{name}/{w}/{seed}: eliminated {}", before - after));
                        }
                    }
                    before = after;
                }
            }
        }
    }
    r.line(
        "9",
        violations.is_empty() && dd_iters > 0,
        format!(
            "Double-DIP: {runs} runs, {dd_iters} double-DIP iterations, minimum eliminated per iteration {} {violations:?}",
            if dd_iters > 0 { min_elim.to_string() } else { "-".into() }
        ),
    );
}

// ---------------------------------------------------------------- 10

fn adder(r: &mut Report) {
    let s = adder_case_study(32, 10, 0.2125e-6, POWER_AT_90_PERCENT).unwrap();
    let bound = (1024.0 - 1.0) / 4_294_967_296.0;
    let printed = format!("{:.6}%", s.error_bound * 100.0);
    let saving = 1.0 - 0.1071 / 0.2125;
    let mut flips_ok = true;
    let mut detail = Vec::new();
    let a8 = build_ripple_adder(8).unwrap();
    for k in 0..=8 {
        let sel = lsb_cone_selection(&a8, k);
        let worst = worst_flip_error(&a8, 8, &sel).unwrap();
        flips_ok &= worst < 1 << k;
        detail.push(format!("k={k}:{worst}"));
    }
    let pass = (s.error_bound - bound).abs() < 1e-18
        && printed == "0.000024%"
        && (s.per_gate_saving - saving).abs() < 1e-12
        && (100.0 * s.per_gate_saving - 49.6).abs() < 0.05
        && flips_ok;
    r.line(
        "10",
        pass,
        format!(
            "adder study: bound {:.4e} ({printed}), per-gate saving {}, total saving {} over {} of {} gates; \
             width-8 worst flip error vs 2^k-1: {}",
            s.error_bound,
            pct(s.per_gate_saving),
            pct(s.total_saving),
            s.selected.len(),
            s.gates,
            detail.join(" ")
        ),
    );
}

// ---------------------------------------------------------------- 11

fn hybrid(r: &mut Report) {
    let delays = DelayMap::default();
    let mut pass = true;
    let mut fracs = Vec::new();
    for seed in 1..=10 {
        let c = skewed_circuit(&SkewParams {
            seed,
            ..SkewParams::default()
        })
        .unwrap();
        let sel = delay_aware_select(&c, &delays).unwrap();
        let f = sel.fraction(&c);
        pass &= sel.timing.critical_delay == sel.original.critical_delay && (0.05..=0.15).contains(&f);
        fracs.push(f);
    }
    let lo = fracs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = fracs.iter().cloned().fold(0.0, f64::max);
    r.line(
        "11",
        pass,
        format!(
            "hybrid pass on 10 skewed circuits: critical delay unchanged {}, selection fraction {}-{} (window 5-15%)",
            if pass { "in every case" } else { "check failed" },
            pct(lo),
            pct(hi)
        ),
    );
}

// ---------------------------------------------------------------- 13

fn within_3_sigma(hits: u64, n: u64, p: f64) -> bool {
    let (n, hits) = (n as f64, hits as f64);
    let sigma = (n * p * (1.0 - p)).sqrt();
    (hits - n * p).abs() <= 3.0 * sigma.max(f64::MIN_POSITIVE)
}

fn simulation_statistics(r: &mut Report) {
    const SAMPLES: u64 = 100_000;
    let c = bench("c432");
    let gates: Vec<usize> = (0..c.gate_count()).step_by(c.gate_count() / 12).take(12).collect();
    let levels = [0.99, 0.95, 0.9, 0.75];
    let mut anns = Vec::new();
    for (i, &g) in gates.iter().enumerate() {
        let f = &c.gate(g).function;
        let behavior = if i % 3 == 2 {
            match camoforge::obfuscate::polymorphic_distribution(f) {
                Some(distribution) => Behavior::Polymorphic { distribution },
                None => Behavior::Probabilistic {
                    correctness: levels[i % 4],
                },
            }
        } else {
            Behavior::Probabilistic {
                correctness: levels[i % 4],
            }
        };
        anns.push(BehaviorAnnotation {
            gate: c.gate_name(g).to_string(),
            behavior,
        });
    }
    let sim = Simulator::with_annotations(&c, &anns).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5747);
    // Per probabilistic gate: flips; per polymorphic gate and minterm: (ones, total).
    let mut flips = vec![0u64; anns.len()];
    let mut minterms = vec![[(0u64, 0u64); 4]; anns.len()];
    for block in 0..SAMPLES / 64 + 1 {
        let lanes = (SAMPLES - block * 64).min(64);
        if lanes == 0 {
            break;
        }
        let mask = if lanes == 64 { !0 } else { (1u64 << lanes) - 1 };
        let words: Vec<u64> = (0..c.inputs().len()).map(|_| rng.gen()).collect();
        let values = sim.eval_nets(&words, Some(SampleContext::new(77, 5, block * 64)));
        for (i, &g) in gates.iter().enumerate() {
            let gate = c.gate(g);
            let fanin: Vec<u64> = gate.fanin.iter().map(|&f| values[f]).collect();
            let out = values[gate.output];
            match &anns[i].behavior {
                Behavior::Probabilistic { .. } => {
                    flips[i] += ((out ^ gate.function.eval_words(&fanin)) & mask).count_ones() as u64;
                }
                Behavior::Polymorphic { .. } => {
                    for l in 0..lanes {
                        let m = fanin
                            .iter()
                            .enumerate()
                            .fold(0usize, |acc, (j, w)| acc | ((w >> l & 1) as usize) << j);
                        minterms[i][m].1 += 1;
                        minterms[i][m].0 += out >> l & 1;
                    }
                }
            }
        }
    }
    let mut ok = true;
    let mut checked = 0;
    let mut worst_z = 0.0f64;
    for (i, a) in anns.iter().enumerate() {
        match &a.behavior {
            Behavior::Probabilistic { correctness } => {
                let p = 1.0 - correctness;
                ok &= within_3_sigma(flips[i], SAMPLES, p);
                worst_z =
                    worst_z.max((flips[i] as f64 - SAMPLES as f64 * p).abs() / (SAMPLES as f64 * p * (1.0 - p)).sqrt());
                checked += 1;
            }
            Behavior::Polymorphic { distribution } => {
                for (m, &(ones, n)) in minterms[i].iter().enumerate() {
                    if n == 0 {
                        continue;
                    }
                    let p: f64 = distribution.iter().filter(|(f, _)| f.output(m)).map(|(_, p)| p).sum();
                    ok &= within_3_sigma(ones, n, p);
                    if p > 0.0 && p < 1.0 {
                        worst_z = worst_z.max((ones as f64 - n as f64 * p).abs() / (n as f64 * p * (1.0 - p)).sqrt());
                    }
                    checked += 1;
                }
            }
        }
    }
    // Inert annotations: correctness 1 and single-function distributions.
    let c880 = bench("c880");
    let inert: Vec<BehaviorAnnotation> = (0..c880.gate_count())
        .map(|g| {
            let f = c880.gate(g).function.clone();
            BehaviorAnnotation {
                gate: c880.gate_name(g).to_string(),
                behavior: if g % 2 == 0 {
                    Behavior::Probabilistic { correctness: 1.0 }
                } else {
                    Behavior::Polymorphic {
                        distribution: vec![(f, 1.0)],
                    }
                },
            }
        })
        .collect();
    let stochastic = Simulator::with_annotations(&c880, &inert).unwrap();
    let nominal = Simulator::new(&c880).unwrap();
    let patterns: Vec<Pattern> = (0..10_000)
        .map(|_| Pattern::random(c880.inputs().len(), &mut rng))
        .collect();
    let a = stochastic
        .eval_batch(&patterns, Some(SampleContext::new(3, 1, 0)))
        .unwrap();
    let b = nominal.eval_batch(&patterns, None).unwrap();
    let identical = a == b;
    r.line(
        "13",
        ok && identical,
        format!(
            "simulation statistics: {checked} rate checks over 1e5 samples, largest deviation {worst_z:.2} sigma (limit 3); \
             inert annotations {} on 1e4 cases",
            if identical { "bit-identical" } else { "DIFFER" }
        ),
    );
}

// ---------------------------------------------------------------- smoke

fn c7552_smoke(r: &mut Report) {
    let budget = std::env::var("CAMOFORGE_SMOKE_BUDGET_S")
        .ok()
        .and_then(|v| v.parse::<f64>().ok())
        .unwrap_or(600.0);
    let c = bench("c7552");
    let set = FunctionSet::gshe16();
    let sel = select_gates_where(&c, 0.10, 1, |g| {
        let f = &c.gate(g).function;
        f.arity() == set.arity() && f.bench_kind().is_some_and(|k| supports(&set, k, set.arity()))
    })
    .unwrap();
    let locked = camouflage(&c, &sel, &set).unwrap();
    let oracle = Oracle::deterministic(&locked).unwrap();
    let config = AttackConfig {
        timeout: Duration::from_secs_f64(budget),
        max_iterations: usize::MAX,
        ..AttackConfig::default()
    };
    let start = Instant::now();
    let res = conventional_attack(&locked, &oracle, &config).unwrap();
    r.line(
        "smoke",
        res.status != AttackStatus::Success,
        format!(
            "c7552 with {} GSHE-camouflaged gates ({} key bits): conventional attack {} after {} iterations in {:.0} s (budget {budget:.0} s)",
            sel.len(),
            locked.key_len(),
            res.status,
            res.iterations,
            start.elapsed().as_secs_f64()
        ),
    );
}

fn main() {
    // `cargo test -- --list` and filters should not launch the full report.
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    if args
        .iter()
        .any(|a| !a.starts_with('-') && !"acceptance".contains(a.as_str()))
    {
        return;
    }
    let start = Instant::now();
    let mut r = Report { failed: Vec::new() };
    device_equations(&mut r);
    walkthrough(&mut r);
    deterministic_soundness(&mut r);
    let mut cs = Campaigns {
        c432: bench("c432"),
        c880: bench("c880"),
        prob: BTreeMap::new(),
    };
    degradation(&mut r, &mut cs);
    psat_superiority(&mut r, &mut cs);
    hd_oer_ordering(&mut r, &mut cs);
    runtime_overhead(&mut r, &mut cs);
    polymorphic_sweep(&mut r, &cs);
    double_dip(&mut r);
    adder(&mut r);
    hybrid(&mut r);
    defense(&mut r, &mut cs);
    simulation_statistics(&mut r);
    c7552_smoke(&mut r);
    println!(
        "acceptance: {} criteria failed {:?} ({:.0} s)",
        r.failed.len(),
        r.failed,
        start.elapsed().as_secs_f64()
    );
}
