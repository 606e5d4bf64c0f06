//! `camoforge` command-line interface.
//!
//! Exit codes: 0 on completion, 2 on usage errors, 3 on input errors
//! (unreadable or malformed files), 1 on any other failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use camoforge::attack::{attack, AttackConfig, AttackKind, AttackStatus, SolverChoice};
use camoforge::device::{
    conductances, primitive_cost, read_power, DeviceParams, FlipCalibration, PrimitiveKind, DETERMINISTIC_DELAY,
};
use camoforge::hybrid::{
    adder_case_study, build_ripple_adder, chip_cost, delay_aware_select, lsb_cone_selection, skewed_circuit,
    worst_flip_error, CellLibrary, DelayMap, SkewParams,
};
use camoforge::metrics::{
    emit_report, hd_oer, keys_equivalent, parse_report, run_campaign, CampaignConfig, KeyedCircuit, OracleSpec,
    ReportFormat, Scenario,
};
use camoforge::netlist::{parse_bench, write_bench, Circuit};
use camoforge::obfuscate::{
    annotate_circuit, annotations_from_pragmas, camouflage, insert_key_gates, make_polymorphic, make_probabilistic,
    polymorphic_distribution, select_gates_random, select_gates_where, supports, BehaviorAnnotation, FunctionSet,
    KeySidecar, LockedCircuit,
};
use camoforge::oracle::{DefenseConfig, Oracle};
use camoforge::{benchmarks, Pattern};

#[derive(Parser)]
#[command(
    name = "camoforge",
    version,
    about = "Logic locking, camouflaging and SAT/PSAT attack workbench"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a `.bench` netlist and report its shape.
    Parse(ParseArgs),
    /// Insert XOR/XNOR key gates.
    Lock(LockArgs),
    /// Camouflage gates with a multi-function primitive.
    Camo(CamoArgs),
    /// Mark gates probabilistic or polymorphic.
    Annotate(AnnotateArgs),
    /// Evaluate or sample a netlist.
    Simulate(SimulateArgs),
    /// Run one oracle-guided attack.
    Attack(AttackArgs),
    /// Run many attacks and summarize.
    Campaign(CampaignArgs),
    /// Delay-aware GSHE replacement and chip cost.
    Hybrid(HybridArgs),
    /// Approximate ripple-adder error bound and power saving.
    AdderStudy(AdderArgs),
    /// Evaluate the GSHE device cost model.
    Device(DeviceArgs),
    /// Convert a campaign report between formats.
    Report(ReportArgs),
}

#[derive(Args)]
struct ParseArgs {
    /// Netlist path or bundled benchmark name.
    input: String,
    /// Write the normalized netlist here.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct OutputArgs {
    /// Output netlist path [default: <input stem>_<subcommand>.bench].
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Key sidecar path [default: <output>.key.json].
    #[arg(long)]
    key_out: Option<PathBuf>,
}

#[derive(Args)]
struct LockArgs {
    input: String,
    #[arg(long)]
    keys: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct CamoArgs {
    input: String,
    /// Fraction of all gates to camouflage.
    #[arg(long, default_value_t = 0.1)]
    fraction: f64,
    /// Function set name (see `FunctionSet::catalog`).
    #[arg(long, default_value = "gshe16")]
    set: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum AnnotateMode {
    Prob,
    Poly,
}

#[derive(Args)]
struct AnnotateArgs {
    input: String,
    /// Key sidecar of a locked input.
    #[arg(long)]
    key: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "prob")]
    mode: AnnotateMode,
    #[arg(long)]
    fraction: f64,
    #[arg(long, default_value_t = 0.99)]
    correctness: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct SimulateArgs {
    input: String,
    /// Key sidecar: inputs are then data inputs only and the correct key is applied.
    #[arg(long)]
    key: Option<PathBuf>,
    /// Input pattern, first input first (repeatable).
    #[arg(long = "input", value_name = "BITS")]
    inputs: Vec<String>,
    /// Evaluate this many uniform random patterns.
    #[arg(long)]
    random: Option<usize>,
    /// Stochastic samples per pattern (histogram); omit for nominal evaluation.
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Clone)]
struct AttackOptions {
    #[arg(long, default_value = "sat")]
    kind: AttackKind,
    /// Oracle samples per DIP (PSAT).
    #[arg(long, default_value_t = 1000)]
    samples: u64,
    /// Random patterns for HD/OER.
    #[arg(long, default_value_t = 10_000)]
    patterns: usize,
    #[arg(long = "timeout-s", default_value_t = 3600.0)]
    timeout_s: f64,
    #[arg(long = "max-iters", default_value_t = 10_000)]
    max_iters: usize,
    /// `builtin` or `dimacs:<path>`.
    #[arg(long, default_value = "builtin")]
    solver: SolverChoice,
    /// Disable solver restarts for reproducible search.
    #[arg(long)]
    no_restarts: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Guard the oracle with the repeat-detection defense.
    #[arg(long)]
    defended: bool,
}

impl AttackOptions {
    fn config(&self) -> Result<AttackConfig, CliError> {
        if !(self.timeout_s > 0.0 && self.timeout_s.is_finite()) {
            return Err(CliError::Usage("--timeout-s must be positive".into()));
        }
        Ok(AttackConfig {
            samples: self.samples,
            patterns: self.patterns,
            max_iterations: self.max_iters,
            timeout: Duration::from_secs_f64(self.timeout_s),
            seed: self.seed,
            solver: self.solver.clone(),
            restarts: !self.no_restarts,
        })
    }
}

#[derive(Args)]
struct AttackArgs {
    /// Locked netlist.
    input: String,
    /// Key sidecar [default: <input>.key.json].
    #[arg(long)]
    key: Option<PathBuf>,
    #[command(flatten)]
    opts: AttackOptions,
    /// Include the per-iteration trace.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct CampaignArgs {
    /// Original netlist (or bundled name); locked per the flags below.
    /// With `--key`, a locked netlist attacked as is.
    input: String,
    #[arg(long)]
    key: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    keys: usize,
    /// Fraction of gates made probabilistic.
    #[arg(long)]
    prob_fraction: Option<f64>,
    #[arg(long, default_value_t = 0.99)]
    correctness: f64,
    /// Fraction of gates made polymorphic.
    #[arg(long, conflicts_with = "prob_fraction")]
    poly_fraction: Option<f64>,
    /// Seed of the (fixed) lock and gate selection [default: --seed].
    #[arg(long)]
    lock_seed: Option<u64>,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value = "json-like")]
    format: ReportFormat,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    opts: AttackOptions,
}

#[derive(Args)]
struct HybridArgs {
    /// Netlist path, bundled name, or `skewed` for a generated circuit.
    input: String,
    /// Delay file of `function delay_ns` lines.
    #[arg(long)]
    delays: Option<PathBuf>,
    #[arg(long, default_value = "obfuscated")]
    primitive: PrimitiveKind,
    /// Generator seed for `skewed`.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct AdderArgs {
    #[arg(long, default_value_t = 32)]
    width: usize,
    /// Low-order sum bits computed approximately.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Deterministic gate power, W.
    #[arg(long, default_value_t = 0.2125e-6)]
    p_det: f64,
    /// Probabilistic gate power, W.
    #[arg(long, default_value_t = 0.1071e-6)]
    p_prob: f64,
    /// Also run the exhaustive adversarial-flip check at this width (≤ 8).
    #[arg(long)]
    flip_width: Option<usize>,
}

#[derive(Args)]
struct DeviceArgs {
    /// Spin current, A.
    #[arg(long, default_value_t = 20e-6)]
    current: f64,
    /// Parameter file of `key value` lines.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Flip-probability calibration of `current probability` lines.
    #[arg(long)]
    calibration: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Report file in either format.
    input: PathBuf,
    #[arg(long, default_value = "csv")]
    format: ReportFormat,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Input(String),
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) => 3,
            CliError::Failed(_) => 1,
        }
    }
}

fn input_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn failed(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| failed(format!("{}: {e}", path.display())))
}

/// A file path, or the name of a bundled benchmark.
fn load_circuit(spec: &str) -> Result<Circuit, CliError> {
    let path = Path::new(spec);
    if path.exists() || benchmarks::source(spec).is_none() {
        return parse_bench(&read(path)?).map_err(|e| CliError::Input(format!("{spec}: {e}")));
    }
    benchmarks::load(spec).unwrap().map_err(input_err)
}

fn bench_name(spec: &str) -> String {
    Path::new(spec)
        .file_name()
        .and_then(|f| f.to_str())
        .map(|f| f.split('.').next().unwrap_or(f).to_string())
        .unwrap_or_else(|| spec.to_string())
}

fn sidecar_path(input: &str, explicit: Option<&PathBuf>) -> PathBuf {
    explicit
        .cloned()
        .unwrap_or_else(|| PathBuf::from(format!("{input}.key.json")))
}

/// Netlist and sidecar destinations; without `-o` the netlist lands in the
/// working directory, named after the input and the producing subcommand.
fn destinations(out: &OutputArgs, input: &str, suffix: &str) -> (PathBuf, PathBuf) {
    let netlist = out
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}_{suffix}.bench", bench_name(input))));
    let side = out
        .key_out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.key.json", netlist.display())));
    (netlist, side)
}

/// Locked circuit and annotations from a netlist plus its sidecar. Sidecar
/// annotations take precedence over netlist pragmas.
fn load_locked(input: &str, key: &Path) -> Result<(LockedCircuit, Vec<BehaviorAnnotation>, KeySidecar), CliError> {
    let circuit = load_circuit(input)?;
    let sidecar = KeySidecar::from_json(&read(key)?).map_err(|e| CliError::Input(format!("{}: {e}", key.display())))?;
    let pragmas = annotations_from_pragmas(&circuit).map_err(input_err)?;
    let annotations = if sidecar.annotations.is_empty() {
        pragmas
    } else {
        sidecar.annotations.clone()
    };
    let locked = sidecar.attach(circuit).map_err(input_err)?;
    Ok((locked, annotations, sidecar))
}

fn emit_locked(
    (netlist, side): (PathBuf, PathBuf),
    benchmark: &str,
    seed: u64,
    locked: &LockedCircuit,
    annotations: Vec<BehaviorAnnotation>,
) -> Result<serde_json::Value, CliError> {
    let circuit = annotate_circuit(&locked.circuit, &annotations).map_err(failed)?;
    write(&netlist, &write_bench(&circuit))?;
    let n_ann = annotations.len();
    write(&side, &KeySidecar::new(benchmark, seed, locked, annotations).to_json())?;
    Ok(json!({
        "benchmark": benchmark,
        "seed": seed,
        "netlist": netlist,
        "sidecar": side,
        "gates": locked.circuit.gate_count(),
        "key_bits": locked.key_len(),
        "annotations": n_ann,
    }))
}

/// Writes to stdout, ignoring a closed pipe (e.g. output piped into `head`).
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
    if !text.ends_with('\n') {
        let _ = out.write_all(b"\n");
    }
}

fn print_json(v: &serde_json::Value) {
    emit(&serde_json::to_string_pretty(v).expect("json"));
}

fn cmd_parse(a: &ParseArgs) -> Result<(), CliError> {
    let c = load_circuit(&a.input)?;
    let text = write_bench(&c);
    let round_trip = parse_bench(&text).map(|d| d.isomorphic(&c)).unwrap_or(false);
    if let Some(o) = &a.output {
        write(o, &text)?;
    }
    let depth = c.outputs().iter().map(|&o| c.levels()[o]).max().unwrap_or(0);
    print_json(&json!({
        "benchmark": bench_name(&a.input),
        "inputs": c.inputs().len(),
        "outputs": c.outputs().len(),
        "gates": c.gate_count(),
        "sequential": c.sequential().len(),
        "depth": depth,
        "pragmas": c.pragmas().len(),
        "round_trip": round_trip,
    }));
    Ok(())
}

fn cmd_lock(a: &LockArgs) -> Result<(), CliError> {
    let c = load_circuit(&a.input)?;
    let locked = insert_key_gates(&c, a.keys, a.seed).map_err(|e| CliError::Usage(e.to_string()))?;
    print_json(&emit_locked(
        destinations(&a.out, &a.input, "locked"),
        &bench_name(&a.input),
        a.seed,
        &locked,
        Vec::new(),
    )?);
    Ok(())
}

fn cmd_camo(a: &CamoArgs) -> Result<(), CliError> {
    let c = load_circuit(&a.input)?;
    let set = FunctionSet::by_name(&a.set).ok_or_else(|| {
        let names: Vec<String> = FunctionSet::catalog().into_iter().map(|s| s.name).collect();
        CliError::Usage(format!(
            "unknown function set {:?} (known: {})",
            a.set,
            names.join(", ")
        ))
    })?;
    let arity = set.arity();
    let sel = select_gates_where(&c, a.fraction, a.seed, |g| {
        let f = &c.gate(g).function;
        f.arity() == arity && f.bench_kind().is_some_and(|k| supports(&set, k, arity))
    })
    .map_err(|e| CliError::Usage(e.to_string()))?;
    let locked = camouflage(&c, &sel, &set).map_err(failed)?;
    print_json(&emit_locked(
        destinations(&a.out, &a.input, "camo"),
        &bench_name(&a.input),
        a.seed,
        &locked,
        Vec::new(),
    )?);
    Ok(())
}

fn cmd_annotate(a: &AnnotateArgs) -> Result<(), CliError> {
    let (locked, benchmark) = match &a.key {
        Some(k) => {
            let (l, _, side) = load_locked(&a.input, k)?;
            (l, side.benchmark)
        }
        None => (LockedCircuit::plain(load_circuit(&a.input)?), bench_name(&a.input)),
    };
    let c = &locked.circuit;
    let anns = match a.mode {
        AnnotateMode::Prob => {
            let sel = select_gates_random(c, a.fraction, a.seed).map_err(|e| CliError::Usage(e.to_string()))?;
            make_probabilistic(c, &sel, a.correctness).map_err(|e| CliError::Usage(e.to_string()))?
        }
        AnnotateMode::Poly => {
            let sel = select_gates_where(c, a.fraction, a.seed, |g| {
                polymorphic_distribution(&c.gate(g).function).is_some()
            })
            .map_err(|e| CliError::Usage(e.to_string()))?;
            make_polymorphic(c, &sel).map_err(failed)?
        }
    };
    print_json(&emit_locked(
        destinations(&a.out, &a.input, "annotated"),
        &benchmark,
        a.seed,
        &locked,
        anns,
    )?);
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let (locked, anns) = match &a.key {
        Some(k) => {
            let (l, anns, _) = load_locked(&a.input, k)?;
            (l, anns)
        }
        None => {
            let c = load_circuit(&a.input)?;
            let anns = annotations_from_pragmas(&c).map_err(input_err)?;
            (LockedCircuit::plain(c), anns)
        }
    };
    let oracle = if a.samples.is_some() && !anns.is_empty() {
        Oracle::probabilistic(&locked, &anns, a.seed)
    } else {
        Oracle::deterministic(&locked)
    }
    .map_err(input_err)?;
    let width = oracle.data_width();
    let mut patterns = Vec::new();
    for s in &a.inputs {
        let p: Pattern = s.parse().map_err(|e| CliError::Usage(format!("--input {s:?}: {e}")))?;
        if p.len() != width {
            return Err(CliError::Usage(format!(
                "--input {s:?} has {} bits, expected {width}",
                p.len()
            )));
        }
        patterns.push(p);
    }
    if let Some(n) = a.random {
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        patterns.extend((0..n).map(|_| Pattern::random(width, &mut rng)));
    }
    if patterns.is_empty() {
        return Err(CliError::Usage("give --input or --random".into()));
    }
    let mut rows = Vec::new();
    for p in &patterns {
        match a.samples {
            None => rows.push(json!({"input": p.to_string(), "output": oracle.query(p).map_err(failed)?.to_string()})),
            Some(s) => {
                let h = oracle.sample_histogram(p, s.max(1)).map_err(failed)?;
                let hist: Vec<_> = h
                    .ranked()
                    .into_iter()
                    .map(
                        |(o, n)| json!({"output": o.to_string(), "count": n, "frequency": n as f64 / h.total() as f64}),
                    )
                    .collect();
                rows.push(json!({"input": p.to_string(), "samples": h.total(), "histogram": hist}));
            }
        }
    }
    print_json(&json!({"seed": a.seed, "stochastic": a.samples.is_some() && !anns.is_empty(), "results": rows}));
    Ok(())
}

fn build_oracle(
    locked: &LockedCircuit,
    anns: &[BehaviorAnnotation],
    seed: u64,
    defended: bool,
) -> Result<Oracle, CliError> {
    if defended {
        return Oracle::defended(locked, anns, seed, &DefenseConfig::default()).map_err(input_err);
    }
    if anns.is_empty() {
        Oracle::deterministic(locked).map_err(input_err)
    } else {
        Oracle::probabilistic(locked, anns, seed).map_err(input_err)
    }
}

fn cmd_attack(a: &AttackArgs) -> Result<(), CliError> {
    let key = sidecar_path(&a.input, a.key.as_ref());
    let (locked, anns, side) = load_locked(&a.input, &key)?;
    let config = a.opts.config()?;
    let oracle = build_oracle(&locked, &anns, a.opts.seed, a.opts.defended)?;
    let r = attack(a.opts.kind, &locked, &oracle, &config).map_err(failed)?;
    let (mut key_correct, mut hd, mut oer) = (None, None, None);
    if let (AttackStatus::Success, Some(k)) = (r.status, &r.key) {
        key_correct = Some(keys_equivalent(&locked, k, &locked.correct_key).map_err(failed)?);
        let reference = KeyedCircuit::new(&locked, &anns, &locked.correct_key).map_err(failed)?;
        let recovered = KeyedCircuit::new(&locked, &anns, k).map_err(failed)?;
        let m = hd_oer(&reference, &recovered, config.patterns, a.opts.seed).map_err(failed)?;
        hd = Some(m.hd);
        oer = Some(m.oer);
    }
    let mut out = json!({
        "benchmark": side.benchmark,
        "kind": a.opts.kind,
        "seed": a.opts.seed,
        "status": r.status,
        "key": r.key.as_ref().map(|k| k.to_string()),
        "key_correct": key_correct,
        "hd": hd,
        "oer": oer,
        "iterations": r.iterations,
        "oracle_queries": r.oracle_queries,
        "runtime_s": r.runtime_s,
    });
    if a.trace {
        out["trace"] = json!(r.trace_lines());
    }
    print_json(&out);
    Ok(())
}

fn cmd_campaign(a: &CampaignArgs) -> Result<(), CliError> {
    let lock_seed = a.lock_seed.unwrap_or(a.opts.seed);
    let name = bench_name(&a.input);
    let usage = |e: camoforge::metrics::MetricsError| CliError::Usage(e.to_string());
    let scenario = if let Some(k) = &a.key {
        let (locked, anns, _) = load_locked(&a.input, k)?;
        let frac = anns.len() as f64 / locked.circuit.gate_count().max(1) as f64;
        let correctness = anns
            .iter()
            .find_map(|x| match x.behavior {
                camoforge::obfuscate::Behavior::Probabilistic { correctness } => Some(correctness),
                _ => None,
            })
            .unwrap_or(1.0);
        Scenario {
            benchmark: name,
            original: None,
            locked,
            annotations: anns,
            pct_prob_gates: frac,
            correctness,
        }
    } else {
        let c = load_circuit(&a.input)?;
        match (a.prob_fraction, a.poly_fraction) {
            (Some(f), _) => Scenario::probabilistic(name, &c, a.keys, f, a.correctness, lock_seed).map_err(usage)?,
            (None, Some(f)) => Scenario::polymorphic(name, &c, a.keys, f, lock_seed).map_err(usage)?,
            (None, None) => {
                let locked = insert_key_gates(&c, a.keys, lock_seed).map_err(|e| CliError::Usage(e.to_string()))?;
                Scenario::deterministic(name, &c, locked)
            }
        }
    };
    if a.runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    let config = CampaignConfig {
        scenario,
        attack: a.opts.kind,
        attack_config: a.opts.config()?,
        runs: a.runs,
        master_seed: a.opts.seed,
        oracle: if a.opts.defended {
            OracleSpec::Defended(DefenseConfig::default())
        } else {
            OracleSpec::Auto
        },
        jobs: a.jobs,
    };
    let summary = run_campaign(&config).map_err(failed)?;
    let text = emit_report(&summary, a.format).map_err(failed)?;
    match &a.output {
        Some(p) => write(p, &text)?,
        None => emit(&text),
    }
    Ok(())
}

fn cmd_hybrid(a: &HybridArgs) -> Result<(), CliError> {
    let c = if a.input == "skewed" {
        skewed_circuit(&SkewParams {
            seed: a.seed,
            ..SkewParams::default()
        })
        .map_err(failed)?
    } else {
        load_circuit(&a.input)?
    };
    let delays = match &a.delays {
        Some(p) => DelayMap::parse(&read(p)?).map_err(input_err)?,
        None => DelayMap::default(),
    };
    let mut delays = delays;
    delays.gshe_delay = primitive_cost(a.primitive).delay;
    let sel = delay_aware_select(&c, &delays).map_err(input_err)?;
    let lib = CellLibrary::default();
    let cmos = chip_cost(&c, &[], &lib, a.primitive).map_err(input_err)?;
    let hybrid = chip_cost(&c, &sel.gates, &lib, a.primitive).map_err(input_err)?;
    print_json(&json!({
        "benchmark": if a.input == "skewed" { format!("skewed-{}", a.seed) } else { bench_name(&a.input) },
        "gates": c.gate_count(),
        "selected": sel.gates.len(),
        "fraction": sel.fraction(&c),
        "selected_gates": sel.gate_names(&c),
        "original_critical_s": sel.original.critical_delay,
        "critical_s": sel.timing.critical_delay,
        "cmos": cmos,
        "hybrid": hybrid,
    }));
    Ok(())
}

fn cmd_adder(a: &AdderArgs) -> Result<(), CliError> {
    let s = adder_case_study(a.width, a.k, a.p_det, a.p_prob).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut out = json!({
        "width": s.width,
        "k": s.k,
        "error_bound": s.error_bound,
        "error_bound_pct": format!("{:.6}%", s.error_bound * 100.0),
        "per_gate_saving": s.per_gate_saving,
        "total_saving": s.total_saving,
        "selected": s.selected,
        "gates": s.gates,
    });
    if let Some(w) = a.flip_width {
        if w == 0 || w > 8 {
            return Err(CliError::Usage("--flip-width must be in 1..=8".into()));
        }
        let k = a.k.min(w);
        let adder = build_ripple_adder(w).map_err(failed)?;
        let sel = lsb_cone_selection(&adder, k);
        let worst = worst_flip_error(&adder, w, &sel).map_err(failed)?;
        out["flip_check"] = json!({
            "width": w,
            "k": k,
            "worst_abs_error": worst,
            "bound_abs": (1u64 << k) - 1,
            "within_bound": worst < (1u64 << k),
        });
    }
    print_json(&out);
    Ok(())
}

fn cmd_device(a: &DeviceArgs) -> Result<(), CliError> {
    let params = match &a.params {
        Some(p) => read(p)?.parse::<DeviceParams>().map_err(input_err)?,
        None => DeviceParams::reference(),
    };
    let cal = match &a.calibration {
        Some(p) => read(p)?.parse::<FlipCalibration>().map_err(input_err)?,
        None => FlipCalibration::reference(),
    };
    if a.current.is_nan() || a.current < 0.0 {
        return Err(CliError::Usage("--current must be non-negative".into()));
    }
    let (gp, gap) = conductances(&params);
    let power = read_power(&params, a.current).map_err(input_err)?;
    let leaky = params.with_calibrated_leakage().map_err(input_err)?;
    let power_leak = read_power(&leaky, a.current).map_err(input_err)?;
    let correctness = if a.current >= params.switching_current {
        1.0
    } else {
        cal.flip_probability(a.current)
    };
    let mut s = String::new();
    let _ = writeln!(s, "current_A {:e}", a.current);
    let _ = writeln!(s, "g_p_uS {:.4}", gp * 1e6);
    let _ = writeln!(s, "g_ap_uS {:.4}", gap * 1e6);
    let _ = writeln!(s, "read_power_uW {:.4}", power * 1e6);
    let _ = writeln!(s, "read_power_with_leakage_uW {:.4}", power_leak * 1e6);
    let _ = writeln!(s, "energy_fJ {:.4}", power_leak * DETERMINISTIC_DELAY * 1e15);
    let _ = writeln!(s, "correctness {correctness:.6}");
    for k in PrimitiveKind::ALL {
        let c = primitive_cost(k);
        let _ = writeln!(
            s,
            "primitive {k} energy_fJ {:.3} power_uW {:.4} delay_ns {:.3} area_um2 {:.4}",
            c.energy * 1e15,
            c.power * 1e6,
            c.delay * 1e9,
            c.area * 1e12
        );
    }
    emit(&s);
    Ok(())
}

fn cmd_report(a: &ReportArgs) -> Result<(), CliError> {
    let text = read(&a.input)?;
    let summary = parse_report(&text, ReportFormat::JsonLike)
        .or_else(|_| parse_report(&text, ReportFormat::Csv))
        .map_err(|e| CliError::Input(format!("{}: {e}", a.input.display())))?;
    let out = emit_report(&summary, a.format).map_err(failed)?;
    emit(&out);
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Parse(a) => cmd_parse(a),
        Command::Lock(a) => cmd_lock(a),
        Command::Camo(a) => cmd_camo(a),
        Command::Annotate(a) => cmd_annotate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Attack(a) => cmd_attack(a),
        Command::Campaign(a) => cmd_campaign(a),
        Command::Hybrid(a) => cmd_hybrid(a),
        Command::AdderStudy(a) => cmd_adder(a),
        Command::Device(a) => cmd_device(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = match &e {
                CliError::Usage(m) | CliError::Input(m) | CliError::Failed(m) => m,
            };
            eprintln!("camoforge: {msg}");
            ExitCode::from(e.code())
        }
    }
}
