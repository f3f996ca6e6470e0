//! The `brickwall` command line: one subcommand per experiment, all
//! writing into `--out-dir` together with a `run_record.json`.
//!
//! Seeds: the root seed (`--seed`, default 0) drives every random draw.
//! `verify-ybe` takes its gates from `sample_haar_stream(s, trials)` and its
//! spectral points from ChaCha8 seeded with `s` on stream 1, where `s` is the
//! gate's `haar_seed` if given and the root seed otherwise. Realization `i`
//! of `spectrum-stats` uses `sample_haar_stream(seed + i, 2)`. Typicality
//! vector `i` is drawn from ChaCha8 seeded with the root seed on stream `i`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{Config, GateSpec, MethodKind, ResolutionKind, RunParams, SignChoice};
use crate::dynamics::{boundary_autocorrelation, domain_wall_evolution, staggered_correlation, CorrelationSeries, Method};
use crate::error::{Error, Result};
use crate::gates::{gate_from_haar, haar_params_from_gate, sample_haar_stream, HamiltonianGateParams, TwoQubitGate};
use crate::integrability::{
    charge_q1, charge_q1_closed_form, check_inversion, check_yang_baxter, classify_phase_haar, classify_phase_hamiltonian, gate_to_r,
    haar_to_r, higher_charge,
};
use crate::operators::{support_weights, BlockOperator, Boundary, BrickworkCircuit};
use crate::ruelle::{gap_scaling, rp_spectrum, truncated_propagator, UNIT_TOL};
use crate::spectral::{all_sectors, bulk_magnetization_window, pooled_r_tilde, spacing_histogram, Ensemble, SpectrumResult};
use crate::symmetry::time_reversal_check;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Largest residual `verify-ybe` accepts.
pub const YBE_TOL: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(name = "brickwall", version, about = "Integrability experiments on U(1)-invariant brickwall circuits")]
pub struct Cli {
    /// TOML config; flags override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [default: out]
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Root seed [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for typicality sampling [default: 1]
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

/// Gate flags. `--tau` and `--delta` select the Hamiltonian form;
/// `--haar-seed` draws a Haar-random gate.
#[derive(Debug, Clone, Default, Args)]
pub struct GateArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub tau: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    #[arg(long = "B", allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long = "D", allow_negative_numbers = true)]
    pub d: Option<f64>,
    #[arg(long = "M", allow_negative_numbers = true)]
    pub m: Option<f64>,
    #[arg(long = "A", allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long = "J", allow_negative_numbers = true)]
    pub j: Option<f64>,
    #[arg(long)]
    pub haar_seed: Option<u64>,
}

impl GateArgs {
    fn spec(&self) -> Result<Option<GateSpec>> {
        let ham_set = [self.tau, self.delta, self.b, self.d, self.m, self.a, self.j].iter().any(Option::is_some);
        if ham_set && self.haar_seed.is_some() {
            return Err(Error::Parameter("give either Hamiltonian flags or --haar-seed, not both".into()));
        }
        if let Some(s) = self.haar_seed {
            return Ok(Some(GateSpec { haar_seed: Some(s), ..Default::default() }));
        }
        if !ham_set {
            return Ok(None);
        }
        let (Some(tau), Some(delta)) = (self.tau, self.delta) else {
            return Err(Error::Parameter("Hamiltonian gates need both --tau and --delta".into()));
        };
        let h = HamiltonianGateParams {
            tau,
            delta,
            b: self.b.unwrap_or(0.0),
            d: self.d.unwrap_or(0.0),
            m: self.m.unwrap_or(0.0),
            a: self.a.unwrap_or(0.0),
            j: self.j.unwrap_or(1.0),
        };
        Ok(Some(GateSpec { hamiltonian: Some(h), ..Default::default() }))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Phase label of a gate.
    Classify {
        #[command(flatten)]
        gate: GateArgs,
    },
    /// Ř-matrix parameters of a gate.
    MapParams {
        #[command(flatten)]
        gate: GateArgs,
    },
    /// Yang-Baxter and inversion residuals over random gates or points.
    VerifyYbe {
        #[command(flatten)]
        gate: GateArgs,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Commutators and support of the local charges on a ring.
    Charges {
        #[command(flatten)]
        gate: GateArgs,
        #[arg(long = "L")]
        l: Option<usize>,
        #[arg(long)]
        ell: Option<usize>,
        #[arg(long, value_enum)]
        sign: Option<SignChoice>,
    },
    /// Level-spacing statistics of Haar-random brickwalls.
    SpectrumStats {
        #[command(flatten)]
        gate: GateArgs,
        #[arg(long = "L")]
        l: Option<usize>,
        #[arg(long)]
        boundary: Option<Boundary>,
        #[arg(long)]
        two_gate: bool,
        #[arg(long, value_enum)]
        resolution: Option<ResolutionKind>,
        #[arg(long)]
        realizations: Option<usize>,
        #[arg(long, allow_negative_numbers = true)]
        max_abs_m: Option<i32>,
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Spectrum of the truncated operator propagator and gap fits.
    RpSpectrum {
        #[command(flatten)]
        gate: GateArgs,
        /// Support sizes, comma separated.
        #[arg(long, value_delimiter = ',')]
        r: Option<Vec<usize>>,
        /// Momenta, comma separated.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        k: Option<Vec<f64>>,
    },
    /// Boundary-spin autocorrelation of the open chain.
    Szm {
        #[command(flatten)]
        gate: GateArgs,
        #[command(flatten)]
        dynamics: DynamicsArgs,
    },
    /// Staggered-magnetization autocorrelation on a ring.
    StaggeredCorr {
        #[command(flatten)]
        gate: GateArgs,
        #[command(flatten)]
        dynamics: DynamicsArgs,
    },
    /// Melting of a domain wall on the open chain.
    DomainWall {
        #[command(flatten)]
        gate: GateArgs,
        #[arg(long = "L")]
        l: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Time-reversal construction for the equivalent circuit.
    TimeReversal {
        #[command(flatten)]
        gate: GateArgs,
        #[arg(long = "L")]
        l: Option<usize>,
        #[arg(long)]
        boundary: Option<Boundary>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct DynamicsArgs {
    #[arg(long = "L")]
    pub l: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, value_enum)]
    pub method: Option<MethodKind>,
    #[arg(long)]
    pub samples: Option<usize>,
}

impl DynamicsArgs {
    fn params(&self) -> RunParams {
        RunParams { l: self.l, steps: self.steps, method: self.method, samples: self.samples, ..Default::default() }
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Classify { .. } => "classify",
            Command::MapParams { .. } => "map-params",
            Command::VerifyYbe { .. } => "verify-ybe",
            Command::Charges { .. } => "charges",
            Command::SpectrumStats { .. } => "spectrum-stats",
            Command::RpSpectrum { .. } => "rp-spectrum",
            Command::Szm { .. } => "szm",
            Command::StaggeredCorr { .. } => "staggered-corr",
            Command::DomainWall { .. } => "domain-wall",
            Command::TimeReversal { .. } => "time-reversal",
        }
    }

    fn gate_args(&self) -> &GateArgs {
        match self {
            Command::Classify { gate }
            | Command::MapParams { gate }
            | Command::VerifyYbe { gate, .. }
            | Command::Charges { gate, .. }
            | Command::SpectrumStats { gate, .. }
            | Command::RpSpectrum { gate, .. }
            | Command::Szm { gate, .. }
            | Command::StaggeredCorr { gate, .. }
            | Command::DomainWall { gate, .. }
            | Command::TimeReversal { gate, .. } => gate,
        }
    }

    fn flag_params(&self) -> RunParams {
        let d = RunParams::default();
        match self {
            Command::Classify { .. } | Command::MapParams { .. } => d,
            Command::VerifyYbe { trials, .. } => RunParams { trials: *trials, ..d },
            Command::Charges { l, ell, sign, .. } => RunParams { l: *l, ell: *ell, sign: *sign, ..d },
            Command::SpectrumStats { l, boundary, two_gate, resolution, realizations, max_abs_m, bins, .. } => RunParams {
                l: *l,
                boundary: *boundary,
                two_gate: two_gate.then_some(true),
                resolution: *resolution,
                realizations: *realizations,
                max_abs_m: *max_abs_m,
                bins: *bins,
                ..d
            },
            Command::RpSpectrum { r, k, .. } => RunParams { r: r.clone(), k: k.clone(), ..d },
            Command::Szm { dynamics, .. } | Command::StaggeredCorr { dynamics, .. } => dynamics.params(),
            Command::DomainWall { l, steps, .. } => RunParams { l: *l, steps: *steps, ..d },
            Command::TimeReversal { l, boundary, .. } => RunParams { l: *l, boundary: *boundary, ..d },
        }
    }
}

/// `[run]` keys each subcommand reads.
pub fn allowed_keys(subcommand: &str) -> &'static [&'static str] {
    match subcommand {
        "verify-ybe" => &["trials"],
        "charges" => &["L", "ell", "sign"],
        "spectrum-stats" => &["L", "boundary", "two_gate", "resolution", "realizations", "max_abs_m", "bins"],
        "rp-spectrum" => &["r", "k"],
        "szm" | "staggered-corr" => &["L", "steps", "method", "samples"],
        "domain-wall" => &["L", "steps"],
        "time-reversal" => &["L", "boundary"],
        _ => &[],
    }
}

/// Fills every key the subcommand reads that is still unset.
fn with_defaults(subcommand: &str, p: RunParams, has_gate: bool) -> RunParams {
    let d = RunParams::default();
    let base = match subcommand {
        "verify-ybe" => RunParams { trials: Some(100), ..d },
        "charges" => RunParams { l: Some(10), ell: Some(1), sign: Some(SignChoice::Both), ..d },
        "spectrum-stats" => RunParams {
            l: Some(10),
            boundary: Some(Boundary::Periodic),
            two_gate: Some(false),
            realizations: Some(if has_gate { 1 } else { 10 }),
            bins: Some(30),
            ..d
        },
        "rp-spectrum" => RunParams { r: Some(vec![3, 4, 5]), k: Some(vec![0.0]), ..d },
        "szm" | "staggered-corr" => RunParams { l: Some(12), steps: Some(200), method: Some(MethodKind::Exact), samples: Some(20), ..d },
        "domain-wall" => RunParams { l: Some(16), steps: Some(200), ..d },
        "time-reversal" => RunParams { l: Some(8), boundary: Some(Boundary::Open), ..d },
        _ => d,
    };
    let mut out = base.overlay(p);
    if subcommand == "spectrum-stats" {
        let l = out.l.unwrap_or(10);
        out.max_abs_m = out.max_abs_m.or(Some(bulk_magnetization_window(l)));
        let periodic = out.boundary == Some(Boundary::Periodic);
        let two = out.two_gate == Some(true);
        out.resolution = out.resolution.or(Some(match (periodic, two) {
            (false, _) => ResolutionKind::Magnetization,
            (true, true) => ResolutionKind::Momentum,
            (true, false) => ResolutionKind::Full,
        }));
    }
    out
}

/// Provenance of one invocation, written as `run_record.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub subcommand: String,
    /// Resolved inputs: root seed, gate and every `[run]` key the subcommand reads.
    pub parameters: Value,
    pub threads: usize,
    pub tool_version: String,
    /// SHA-256 of the canonical JSON of `{subcommand, parameters, tool_version}`.
    pub hash: String,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub status: String,
    pub error: Option<String>,
    pub exit_code: i32,
}

pub fn record_hash(subcommand: &str, parameters: &Value) -> String {
    let canonical = json!({ "subcommand": subcommand, "parameters": parameters, "tool_version": TOOL_VERSION });
    let digest = Sha256::digest(canonical.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Full double precision, 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

struct Outputs {
    dir: PathBuf,
    hash: String,
    files: Vec<String>,
}

impl Outputs {
    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn json(&mut self, name: &str, mut v: Value) -> Result<()> {
        if let Value::Object(m) = &mut v {
            m.insert("run_record_hash".into(), Value::String(self.hash.clone()));
        }
        let path = self.path(name);
        std::fs::write(path, serde_json::to_string_pretty(&v).map_err(|e| Error::Numerical(e.to_string()))? + "\n")?;
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
        let path = self.path(name);
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "# run_record_hash={}", self.hash)?;
        writeln!(w, "{}", header.join(","))?;
        for r in rows {
            writeln!(w, "{}", r.join(","))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn hdr(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

struct Ctx {
    seed: u64,
    threads: usize,
    gate: Option<GateSpec>,
    run: RunParams,
}

impl Ctx {
    fn gate(&self, subcommand: &str) -> Result<TwoQubitGate> {
        match &self.gate {
            Some(g) => g.build(),
            None => Err(Error::Parameter(format!(
                "{subcommand} needs a gate\nusage: brickwall {subcommand} (--tau <T> --delta <D> [--B --D --M --A --J] | --haar-seed <S>) or a [gate] table in --config"
            ))),
        }
    }

    fn l(&self) -> usize {
        self.run.l.unwrap_or_default()
    }

    fn steps(&self) -> usize {
        self.run.steps.unwrap_or_default()
    }

    fn method(&self) -> Method {
        match self.run.method {
            Some(MethodKind::Typicality) => Method::Typicality { samples: self.run.samples.unwrap_or(20), seed: self.seed },
            _ => Method::ExactTrace,
        }
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let start = Instant::now();
    let name = cli.command.name();
    let config = match &cli.config {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    };
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| config.as_ref().ok().and_then(|c| c.out_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    let threads = cli.threads.or(config.as_ref().ok().and_then(|c| c.threads)).unwrap_or(1).max(1);

    let (parameters, resolved) = match config.and_then(|cfg| resolve(&cli, cfg)) {
        Ok((p, ctx)) => (p, Ok(ctx)),
        Err(e) => (Value::Null, Err(e)),
    };
    let hash = record_hash(name, &parameters);
    let mut out = Outputs { dir: out_dir.clone(), hash: hash.clone(), files: Vec::new() };
    let result = std::fs::create_dir_all(&out_dir).map_err(Error::from).and(resolved).and_then(|mut ctx| {
        ctx.threads = threads;
        dispatch(name, &ctx, &mut out)
    });
    let (status, error, code) = match &result {
        Ok(()) => ("ok".to_string(), None, 0),
        Err(e) => ("error".to_string(), Some(e.to_string()), e.exit_code()),
    };
    if let Some(msg) = &error {
        eprintln!("brickwall {name}: {msg}");
    }
    let record = RunRecord {
        subcommand: name.to_string(),
        parameters,
        threads,
        tool_version: TOOL_VERSION.to_string(),
        hash,
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: out.files.clone(),
        status,
        error,
        exit_code: code,
    };
    if let Err(e) = write_record(&out_dir, &record) {
        eprintln!("brickwall {name}: could not write run record: {e}");
        return if code == 0 { 1 } else { code };
    }
    code
}

fn write_record(dir: &Path, r: &RunRecord) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(r).map_err(|e| Error::Numerical(e.to_string()))?;
    std::fs::write(dir.join("run_record.json"), text + "\n")?;
    Ok(())
}

fn resolve(cli: &Cli, cfg: Config) -> Result<(Value, Ctx)> {
    let name = cli.command.name();
    let flags = cli.command.flag_params();
    let merged = cfg.run.clone().overlay(flags);
    merged.check_allowed(name, allowed_keys(name))?;
    let gate = match cli.command.gate_args().spec()? {
        Some(g) => Some(g),
        None => cfg.gate,
    };
    if let Some(g) = &gate {
        g.validate()?;
    }
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let run = with_defaults(name, merged, gate.is_some());
    let parameters = json!({ "seed": seed, "gate": gate, "run": run });
    Ok((parameters, Ctx { seed, threads: 1, gate, run }))
}

fn dispatch(name: &str, ctx: &Ctx, out: &mut Outputs) -> Result<()> {
    match name {
        "classify" => classify(ctx, out),
        "map-params" => map_params(ctx, out),
        "verify-ybe" => verify_ybe(ctx, out),
        "charges" => charges(ctx, out),
        "spectrum-stats" => spectrum_stats(ctx, out),
        "rp-spectrum" => rp(ctx, out),
        "szm" => szm(ctx, out),
        "staggered-corr" => staggered(ctx, out),
        "domain-wall" => domain_wall(ctx, out),
        "time-reversal" => time_reversal(ctx, out),
        _ => Err(Error::Unsupported(name.to_string())),
    }
}

fn phase_of(g: &TwoQubitGate) -> Option<String> {
    haar_params_from_gate(g).ok().map(|e| classify_phase_haar(&e.params).to_string())
}

fn classify(ctx: &Ctx, out: &mut Outputs) -> Result<()> {
    let gate = ctx.gate("classify")?;
    let spec = ctx.gate.unwrap_or_default();
    let mut v = json!({ "haar_rule_phase": phase_of(&gate) });
    if let Some(h) = &spec.hamiltonian {
        let c = classify_phase_hamiltonian(h)?;
        v["phase"] = json!(c.phase.to_string());
        v["eq16_lhs"] = if c.infinite { Value::Null } else { json!(c.lhs) };
        v["lhs_infinite"] = json!(c.infinite);
    } else if let Some(p) = spec.haar_params() {
        v["phase"] = json!(classify_phase_haar(&p).to_string());
    }
    out.json("classify.json", v)
}

fn map_params(ctx: &Ctx, out: &mut Outputs) -> Result<()> {
    let gate = ctx.gate("map-params")?;
    let (map, mu) = gate_to_r(&gate)?;
    let p = map.params;
    out.json(
        "map_params.json",
        json!({
            "input": ctx.gate,
            "gamma": map.gamma,
            "phi": map.phi,
            "phase": p.phase.to_string(),
            "beta": p.beta,
            "xi": p.xi,
            "theta": p.theta,
            "rho": p.rho,
            "u": p.u,
            "magnetization_phase": mu,
            "reduced_haar": map.reduced,
            "reconstruction_error": map.reconstruction_error,
        }),
    )
}

fn verify_ybe(ctx: &Ctx, out: &mut Outputs) -> Result<()> {
    let trials = ctx.run.trials.unwrap_or_default();
    let spec = ctx.gate.unwrap_or_default();
    let stream_seed = spec.haar_seed.unwrap_or(ctx.seed);
    // an explicit gate is tested at `trials` random points; otherwise every
    // trial draws its own gate
    let fixed = if spec.hamiltonian.is_some() || spec.haar.is_some() { Some(spec.build()?) } else { None };
    let draws = if fixed.is_none() { sample_haar_stream(stream_seed, trials) } else { Vec::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed);
    rng.set_stream(1);

    let mut rows = Vec::new();
    let (mut skipped, mut max_ybe, mut max_inv, mut max_rec) = (Vec::new(), 0.0f64, 0.0f64, 0.0f64);
    for t in 0..trials {
        let (fx, fy): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let mapped = match &fixed {
            Some(g) => gate_to_r(g).map(|(m, _)| m),
            None => haar_to_r(&draws[t]),
        };
        let map = match mapped {
            Ok(m) => m,
            Err(e @ (Error::CriticalManifold { .. } | Error::Degenerate(_))) => {
                if fixed.is_some() {
                    return Err(e);
                }
                skipped.push(json!({ "trial": t, "reason": e.to_string() }));
                continue;
            }
            Err(e) => return Err(e),
        };
        let p = map.params;
        let (x, y) = (fx * p.u, fy * p.u);
        let ybe = check_yang_baxter(&p, x, y)?;
        let inv = check_inversion(&p, x)?;
        max_ybe = max_ybe.max(ybe);
        max_inv = max_inv.max(inv);
        max_rec = max_rec.max(map.reconstruction_error);
        rows.push(vec![t.to_string(), p.phase.to_string(), num(p.u), num(x), num(y), num(ybe), num(inv), num(map.reconstruction_error)]);
    }
    let checked = rows.len();
    out.csv("verify_ybe.csv", &hdr(&["trial", "phase", "u", "x", "y", "ybe_residual", "inversion_residual", "reconstruction_error"]), &rows)?;
    let pass = max_ybe < YBE_TOL && max_inv < YBE_TOL;
    out.json(
        "verify_ybe.json",
        json!({
            "trials": trials,
            "checked": checked,
            "skipped": skipped,
            "max_ybe_residual": max_ybe,
            "max_inversion_residual": max_inv,
            "max_reconstruction_error": max_rec,
            "tolerance": YBE_TOL,
            "pass": pass,
        }),
    )?;
    if pass {
        Ok(())
    } else {
        Err(Error::Numerical(format!("residual above {YBE_TOL:e}: ybe {max_ybe:e}, inversion {max_inv:e}")))
    }
}

fn charges(ctx: &Ctx, out: &mut Outputs) -> Result<()> {
    let gate = ctx.gate("charges")?;
    let (l, ell) = (ctx.l(), ctx.run.ell.unwrap_or(1));
    let (map, _) = gate_to_r(&gate)?;
    let p = map.params;
    let u = BlockOperator::from_action(&BrickworkCircuit::homogeneous(&gate, l, Boundary::Periodic)?, l)?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for sign in ctx.run.sign.unwrap_or(SignChoice::Both).signs() {
        let q = if ell == 1 { charge_q1(&p, sign, l)? } else { higher_charge(&p, ell, sign, l)? };
        let tl = q.operator.traceless();
        let w = support_weights(&tl);
        for (k, wk) in w.iter().enumerate().skip(1) {
            rows.push(vec![sign.to_string(), k.to_string(), num(*wk)]);
        }
        let total: f64 = w.iter().skip(1).sum();
        let outside: f64 = w.iter().skip(2 * ell + 2).sum();
        let closed = if ell == 1 { Some(charge_q1_closed_form(&p, sign, l)?.operator.max_abs_diff(&tl)) } else { None };
        summary.push(json!({
            "sign": sign.to_string(),
            "commutator_norm": q.operator.commutator_norm(&u),
            "hermitian_commutator_norm": q.hermitian_part().commutator_norm(&u),
            "anti_hermitian_commutator_norm": q.anti_hermitian_part().commutator_norm(&u),
            "relative_weight_beyond_support": if total > 0.0 { (outside / total).sqrt() } else { 0.0 },
            "closed_form_max_diff": closed,
        }));
    }
    out.csv("charges_support.csv", &hdr(&["sign", "support", "weight"]), &rows)?;
    out.json("charges.json", json!({ "L": l, "ell": ell, "u": p.u, "phase": p.phase.to_string(), "charges": summary }))
}

fn spectrum_stats(ctx: &Ctx, out: &mut Outputs) -> Result<()> {
    let r = &ctx.run;
    let (l, boundary) = (ctx.l(), r.boundary.unwrap_or(Boundary::Periodic));
    let two = r.two_gate.unwrap_or(false);
    let realizations = r.realizations.unwrap_or(1);
    let resolution = r.resolution.unwrap_or(ResolutionKind::Magnetization).into();
    let max_abs_m = r.max_abs_m.unwrap_or_else(|| bulk_magnetization_window(l));
    let fixed = match &ctx.gate {
        Some(g) if two => return Err(Error::Parameter(format!("two-gate statistics draw Haar pairs from the seed; drop the gate ({g:?})"))),
        Some(_) if realizations != 1 => return Err(Error::Parameter("a fixed gate gives a single realization".into())),
        Some(g) => Some(g.build()?),
        None => None,
    };

    let mut all: Vec<SpectrumResult> = Vec::new();
    let mut sector_rows = Vec::new();
    let mut per = Vec::new();
    for i in 0..realizations {
        let pair = sample_haar_stream(ctx.seed.wrapping_add(i as u64), 2);
        let a = fixed.unwrap_or_else(|| gate_from_haar(&pair[0]));
        let circuit = if two { BrickworkCircuit::two_gate(&a, &gate_from_haar(&pair[1]), l, boundary)? } else { BrickworkCircuit::homogeneous(&a, l, boundary)? };
        let spectra = all_sectors(&circuit, resolution, max_abs_m)?;
        for s in &spectra {
            let opt = |v: Option<String>| v.unwrap_or_default();
            sector_rows.push(vec![
                i.to_string(),
                s.m.to_string(),
                opt(s.k.map(|k| k.to_string())),
                opt(s.block.y_parity.map(|y| y.to_string())),
                opt(s.block.k_half.map(|h| h.to_string())),
                s.eigenphases.len().to_string(),
                num(s.r_tilde),
            ]);
        }
        per.push(pooled_r_tilde(&spectra));
        all.extend(spectra);
    }
    let spacings: Vec<f64> = all.iter().flat_map(|s| s.spacings.iter().copied()).collect();
    let hist = spacing_histogram(&spacings, r.bins.unwrap_or(30), 3.0)?;
    out.csv("sectors.csv", &hdr(&["realization", "m", "k", "y_parity", "k_half", "levels", "r_tilde"]), &sector_rows)?;
    let rows: Vec<Vec<String>> = (0..hist.density.len())
        .map(|b| {
            let mut row = vec![num(hist.edges[b]), num(hist.edges[b + 1]), num(hist.density[b])];
            row.extend(hist.references.iter().map(|rf| num(rf[b])));
            row
        })
        .collect();
    out.csv("spacings_hist.csv", &hdr(&["s_lo", "s_hi", "density", "poisson", "coe", "cue"]), &rows)?;
    let refs: Vec<Value> = Ensemble::ALL.iter().zip(&hist.tv_distance).map(|(e, tv)| json!({ "ensemble": e, "r_tilde": e.r_tilde(), "tv_distance": tv })).collect();
    out.json(
        "spectrum_stats.json",
        json!({
            "pooled_r_tilde": pooled_r_tilde(&all),
            "per_realization_r_tilde": per,
            "spacings": hist.count,
            "too_few": hist.too_few,
            "closest": hist.closest,
            "references": refs,
        }),
    )
}

fn rp(ctx: &Ctx, out: &mut Outputs) -> Result<()> {
    let gate = ctx.gate("rp-spectrum")?;
    let r_list = ctx.run.r.clone().unwrap_or_default();
    let k_list = ctx.run.k.clone().unwrap_or_default();
    if r_list.is_empty() || k_list.is_empty() {
        return Err(Error::Parameter("rp-spectrum needs at least one r and one k".into()));
    }
    let mut rows = Vec::new();
    let mut spectra = Vec::new();
    let mut fits = Vec::new();
    for &k in &k_list {
        for &r in &r_list {
            let tp = truncated_propagator(&gate, r, k)?;
            let s = rp_spectrum(&tp, 0.0)?;
            for e in &s.eigenvalues {
                rows.push(vec![num(k), r.to_string(), e.charge_block.to_string(), num(e.re), num(e.im)]);
            }
            spectra.push(json!({
                "k": k,
                "r": r,
                "spectral_radius": s.spectral_radius(),
                "unit_multiplicity": s.unit_multiplicity(UNIT_TOL),
                "lambda2": s.lambda2(),
                "charge_leak": tp.charge_leak,
            }));
        }
        let mut distinct: Vec<usize> = r_list.iter().copied().filter(|r| (3..=6).contains(r)).collect();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() >= 2 {
            fits.push(match gap_scaling(&gate, k, &distinct) {
                Ok(f) => json!(f),
                Err(e) => json!({ "k": k, "error": e.to_string() }),
            });
        }
    }
    out.csv("rp_spectrum.csv", &hdr(&["k", "r", "charge_block", "re", "im"]), &rows)?;
    out.json("rp_fits.json", json!({ "phase": phase_of(&gate), "spectra": spectra, "fits": fits }))
}

fn series_rows(s: &CorrelationSeries) -> Vec<Vec<String>> {
    s.times
        .iter()
        .zip(&s.values)
        .enumerate()
        .map(|(i, (t, v))| {
            let err = s.estimator_error.as_ref().map(|e| num(e[i])).unwrap_or_default();
            vec![t.to_string(), num(*v), err]
        })
        .collect()
}

fn szm(ctx: &Ctx, out: &mut Outputs) -> Result<()> {
    let gate = ctx.gate("szm")?;
    let s = boundary_autocorrelation(&gate, ctx.l(), ctx.steps(), ctx.method(), ctx.threads)?;
    out.csv("szm.csv", &hdr(&["t", "value", "err"]), &series_rows(&s))?;
    let tail = &s.values[s.values.len() / 2..];
    out.json(
        "szm.json",
        json!({
            "L": ctx.l(),
            "phase": phase_of(&gate),
            "method": s.method,
            "second_half_mean": tail.iter().sum::<f64>() / tail.len() as f64,
            "min": s.values.iter().copied().fold(f64::INFINITY, f64::min),
        }),
    )
}

fn staggered(ctx: &Ctx, out: &mut Outputs) -> Result<()> {
    let gate = ctx.gate("staggered-corr")?;
    let s = staggered_correlation(&gate, ctx.l(), ctx.steps(), ctx.method(), ctx.threads)?;
    out.csv("staggered.csv", &hdr(&["t", "value", "err"]), &series_rows(&s.series))?;
    let fits = match &s.fits {
        Some(f) => json!(f),
        None => json!({ "error": "no fit: the series is not positive on the fit window" }),
    };
    out.json("staggered.json", json!({ "L": ctx.l(), "phase": phase_of(&gate), "method": s.series.method, "fits": fits }))
}

fn domain_wall(ctx: &Ctx, out: &mut Outputs) -> Result<()> {
    let gate = ctx.gate("domain-wall")?;
    let d = domain_wall_evolution(&gate, ctx.l(), ctx.steps())?;
    let mut header = hdr(&["t", "transported"]);
    header.extend((0..d.l).map(|j| format!("sz_{j}")));
    let rows: Vec<Vec<String>> = d
        .profiles
        .iter()
        .zip(&d.transported)
        .enumerate()
        .map(|(t, (p, m))| {
            let mut row = vec![t.to_string(), num(*m)];
            row.extend(p.iter().map(|x| num(*x)));
            row
        })
        .collect();
    out.csv("domain_wall.csv", &header, &rows)?;
    out.json(
        "domain_wall.json",
        json!({
            "L": d.l,
            "phase": phase_of(&gate),
            "final_transported": d.transported.last(),
            "max_transported": d.transported.iter().copied().fold(0.0, f64::max),
            "magnetization_drift": d.magnetization_drift,
        }),
    )
}

fn time_reversal(ctx: &Ctx, out: &mut Outputs) -> Result<()> {
    let gate = ctx.gate("time-reversal")?;
    let c = BrickworkCircuit::homogeneous(&gate, ctx.l(), ctx.run.boundary.unwrap_or(Boundary::Open))?;
    let report = time_reversal_check(&c)?;
    out.json("time_reversal.json", json!(report))
}
