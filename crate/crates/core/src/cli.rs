//! Command-line orchestration. Each subcommand reads a flat `key = value`
//! config (or a JSON object, or a manifest written by an earlier run), runs
//! one module pipeline, and writes JSON and CSV artifacts under `--out`.
//!
//! Exit codes: 0 when the module's invariant checks pass, 1 when one fails
//! (artifacts are still written) or a numerical routine gives up, 2 for
//! config, IO and precondition errors.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::generator::{default_radii, drift_profile_l1};
use crate::lambda::{lambda_report, write_lambda_csv};
use crate::model::{KernelVariant, ModelParams};
use crate::quad::QuadOptions;
use crate::recurrence::{self, LFamily, RadialCoefficient, RecurrenceInput, RecurrenceSettings, Verdict};
use crate::simulate::{
    dynkin_check, event_log, run_big_jump_paths, run_small_jump_paths_eps, write_event_log, BigJumpEngine,
    SimConfig,
};
use crate::specfun::{identity_suite, IDENTITY_ALPHAS, IDENTITY_DIMS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "jumprec", version, about = "Recurrence and transience diagnostics for stable-like jump processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Config file: `key = value` lines, a JSON object, or a run manifest.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Seed for Monte Carlo runs (overrides the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Numerical tolerance (overrides the config).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Analytic recurrence/transience verdict from the exponent inequalities.
    Classify,
    /// Drift profile of the small-jump generator on ψ_δ.
    Drift,
    /// Λ_q, Λ'_q and the I₁/I₂ integrals at one parameter point.
    Lambda,
    /// Monte Carlo hitting frequencies or the Dynkin residual.
    Simulate,
    /// N(s), the integral test and the capacity chain.
    Recurrence,
    /// Series identity suite.
    Identities,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Drift => "drift",
            Command::Lambda => "lambda",
            Command::Simulate => "simulate",
            Command::Recurrence => "recurrence",
            Command::Identities => "identities",
        }
    }
}

/// Flat key-value configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    pub values: BTreeMap<String, String>,
    /// Subcommand recorded in a manifest, if the config came from one.
    pub manifest_subcommand: Option<String>,
}

impl Config {
    /// Parses `key = value` lines (`#` comments, `[section]` headers
    /// ignored) or a JSON object. A run manifest, or an artifact embedding
    /// one, yields its recorded config.
    pub fn parse(text: &str) -> Result<Config> {
        let t = text.trim_start();
        if t.starts_with('{') {
            let v: Value = serde_json::from_str(t)?;
            let v = v.get("manifest").cloned().unwrap_or(v);
            if let (Some(cfg), Some(sub)) = (v.get("config"), v.get("subcommand")) {
                let mut c = Config::from_json(cfg)?;
                c.manifest_subcommand = sub.as_str().map(str::to_string);
                return Ok(c);
            }
            return Config::from_json(&v);
        }
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got '{line}'", i + 1)))?;
            values.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Config {
            values,
            manifest_subcommand: None,
        })
    }

    fn from_json(v: &Value) -> Result<Config> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Config("JSON config must be an object".into()))?;
        let mut values = BTreeMap::new();
        for (k, v) in obj {
            let s = match v {
                Value::String(s) => s.clone(),
                Value::Array(a) => a
                    .iter()
                    .map(|x| x.as_str().map(str::to_string).unwrap_or_else(|| x.to_string()))
                    .collect::<Vec<_>>()
                    .join(","),
                Value::Null => continue,
                other => other.to_string(),
            };
            values.insert(k.clone(), s);
        }
        Ok(Config {
            values,
            manifest_subcommand: None,
        })
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Config::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse_f64(key, v),
        }
    }

    pub fn f64_opt(&self, key: &str) -> Result<Option<f64>> {
        self.get(key).map(|v| parse_f64(key, v)).transpose()
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.f64_opt(key)?
            .ok_or_else(|| Error::Config(format!("missing key {key}")))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => {
                // accept 1e6-style integers
                let x = parse_f64(key, v)?;
                if x < 0.0 || x.fract() != 0.0 || x > u64::MAX as f64 {
                    return Err(Error::Config(format!("{key}: '{v}' is not a non-negative integer")));
                }
                Ok(x as u64)
            }
        }
    }

    pub fn list_f64(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key)
            .map(|v| {
                v.trim_matches(|c| c == '[' || c == ']')
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse_f64(key, s))
                    .collect()
            })
            .transpose()
    }

    pub fn model(&self) -> Result<ModelParams> {
        ModelParams::from_kv(self.values.iter().map(|(k, v)| (k.as_str(), v.as_str())))
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}' as a number")))
}

/// Reproducibility record embedded in every artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// Effective config, including the seed and tolerance actually used.
    pub config: BTreeMap<String, String>,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub tol: f64,
    pub threads: usize,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<String>,
}

/// What a subcommand produced.
struct Outcome {
    result: Value,
    /// (file name, contents) written next to the JSON.
    csv: Vec<(String, Vec<u8>)>,
    /// Names of failed invariant checks.
    failures: Vec<String>,
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

/// Exit code for an error that stopped a run.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Quadrature { .. } | Error::Series { .. } | Error::Contract(_) | Error::RejectionCap { .. } => {
            EXIT_INVARIANT
        }
        _ => EXIT_USAGE,
    }
}

/// Runs a parsed command line and writes its artifacts.
pub fn execute(cli: &Cli) -> Result<i32> {
    let mut config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(sub) = &config.manifest_subcommand {
        if sub != cli.command.name() {
            return Err(Error::Config(format!(
                "manifest was written by '{sub}', not '{}'",
                cli.command.name()
            )));
        }
    }
    if let Some(seed) = cli.seed {
        config.set("seed", seed);
    }
    let tol = match cli.tol {
        Some(t) => t,
        None => config.f64_or("tol", default_tol(cli.command))?,
    };
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::out_of_range("tol", format!("{tol} not in (0, 1)")));
    }
    config.set("tol", tol);
    let threads = cli
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    if threads == 0 {
        return Err(Error::out_of_range("threads", "must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let started = Instant::now();
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let outcome = pool.install(|| dispatch(cli.command, &mut config, tol))?;
    let name = cli.command.name();
    fs::create_dir_all(&cli.out)?;
    let mut outputs = vec![format!("{name}.json")];
    outputs.extend(outcome.csv.iter().map(|(f, _)| f.clone()));
    let seed = config.get("seed").map(|s| parse_f64("seed", s).map(|x| x as u64)).transpose()?;
    let manifest = RunManifest {
        subcommand: name.to_string(),
        config: config.values.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        tol,
        threads,
        started_unix,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        outputs: outputs.clone(),
    };
    for (file, bytes) in &outcome.csv {
        fs::write(cli.out.join(file), bytes)?;
    }
    let doc = json!({
        "manifest": manifest,
        "result": outcome.result,
        "invariant_failures": outcome.failures,
    });
    fs::write(cli.out.join(format!("{name}.json")), serde_json::to_string_pretty(&doc)? + "\n")?;
    fs::write(cli.out.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    if name == "classify" {
        println!("{}", serde_json::to_string_pretty(&outcome.result)?);
    }
    if outcome.failures.is_empty() {
        Ok(EXIT_OK)
    } else {
        for f in &outcome.failures {
            eprintln!("invariant failed: {f}");
        }
        Ok(EXIT_INVARIANT)
    }
}

fn default_tol(cmd: Command) -> f64 {
    match cmd {
        Command::Drift => 1e-6,
        Command::Lambda => 1e-10,
        Command::Identities => 1e-8,
        Command::Recurrence => 1e-8,
        Command::Classify | Command::Simulate => 1e-6,
    }
}

fn dispatch(cmd: Command, config: &mut Config, tol: f64) -> Result<Outcome> {
    match cmd {
        Command::Classify => cmd_classify(config),
        Command::Drift => cmd_drift(config, tol),
        Command::Lambda => cmd_lambda(config, tol),
        Command::Simulate => cmd_simulate(config),
        Command::Recurrence => cmd_recurrence(config, tol),
        Command::Identities => cmd_identities(config, tol),
    }
}

fn csv_bytes<F: FnOnce(&mut Vec<u8>) -> Result<()>>(f: F) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

/// Analytic verdict in the (1+|x|) exponent convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub d: usize,
    pub beta: f64,
    /// Exponent of a₁ in (1+|x|)^{p'}.
    pub p_prime: f64,
    /// Exponent of a₂ in (1+|x|)^{q'}.
    pub q_prime: f64,
    /// Exponent of the local part, if any.
    pub diffusion_exponent: Option<f64>,
    pub small_part_recurrent: bool,
    pub big_part_recurrent: bool,
    pub local_part_recurrent: Option<bool>,
    pub verdict: String,
    pub evidence: Vec<String>,
}

/// Recurrent iff p' ≤ 2−d, q' ≤ β−d and (with a local part) r ≤ 2−d.
/// The model's (1+|x|²)^p convention converts as p' = 2p.
pub fn classify(config: &Config) -> Result<Classification> {
    let d: usize = config
        .get("d")
        .ok_or_else(|| Error::Config("missing key d".into()))?
        .trim()
        .parse()
        .map_err(|_| Error::Config("d: not a dimension".into()))?;
    if d == 0 {
        return Err(Error::out_of_range("d", "must be at least 1"));
    }
    let beta = match config.f64_opt("beta")? {
        Some(b) => b,
        None => config.require_f64("alpha")?,
    };
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::out_of_range("beta", format!("{beta} not positive")));
    }
    let p_prime = match config.f64_opt("p_prime")? {
        Some(v) => v,
        None => 2.0 * config.f64_or("p", 0.0)?,
    };
    let q_prime = match config.f64_opt("q_prime")? {
        Some(v) => v,
        None => 2.0 * config.f64_or("q", 0.0)?,
    };
    if q_prime >= beta {
        return Err(Error::Precondition(format!(
            "q' = {q_prime} must be below beta = {beta} for the jump form to be defined"
        )));
    }
    let r = config.f64_opt("diffusion_exponent")?;
    let dd = d as f64;
    let small = p_prime <= 2.0 - dd;
    let big = q_prime <= beta - dd;
    let local = r.map(|r| r <= 2.0 - dd);
    let recurrent = small && big && local.unwrap_or(true);
    let model_keys = format!("d = {d}, beta = {beta}, p = {}, q = {}", p_prime / 2.0, q_prime / 2.0);
    Ok(Classification {
        d,
        beta,
        p_prime,
        q_prime,
        diffusion_exponent: r,
        small_part_recurrent: small,
        big_part_recurrent: big,
        local_part_recurrent: local,
        verdict: if recurrent { "recurrent" } else { "transient" }.into(),
        evidence: vec![
            format!("jumprec drift (small-jump Lyapunov drift, needs p > (2−d)/2; model {model_keys})"),
            "jumprec simulate (hitting frequencies against the ψ_δ bound)".into(),
            "jumprec recurrence (N(s) majorant, integral test and capacity chain)".into(),
        ],
    })
}

fn cmd_classify(config: &mut Config) -> Result<Outcome> {
    let c = classify(config)?;
    Ok(Outcome {
        result: serde_json::to_value(&c)?,
        csv: Vec::new(),
        failures: Vec::new(),
    })
}

fn cmd_drift(config: &mut Config, tol: f64) -> Result<Outcome> {
    let model = config.model()?;
    let delta = config.require_f64("delta")?;
    let radii = config.list_f64("radii")?.unwrap_or_else(default_radii);
    let report = drift_profile_l1(&model, delta, &radii, tol)?;
    let mut failures = Vec::new();
    if !report.all_negative_beyond_m {
        failures.push("drift is not negative on a tail of the radius grid".to_string());
    } else if report.fitted_m >= 1e3 {
        failures.push(format!("fitted M = {} is not below 1e3", report.fitted_m));
    }
    let csv = csv_bytes(|b| report.write_csv(b))?;
    Ok(Outcome {
        result: serde_json::to_value(&report)?,
        csv: vec![("drift.csv".into(), csv)],
        failures,
    })
}

fn cmd_lambda(config: &mut Config, tol: f64) -> Result<Outcome> {
    let d = config.u64_or("d", 0)? as usize;
    if d == 0 {
        return Err(Error::Config("missing key d".into()));
    }
    let alpha = config.require_f64("alpha")?;
    let critical = (alpha - d as f64) / 2.0;
    let q = config.f64_or("q", critical)?;
    let delta = config.f64_or("delta", 0.0)?;
    let r = lambda_report(delta, q, d, alpha, QuadOptions::new(tol, tol))?;
    let mut failures = Vec::new();
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    for (name, a, b) in [
        ("closed/series", r.i1_closed, r.i1_series),
        ("closed/quadrature", r.i1_closed, r.i1_quad),
        ("series/quadrature", r.i1_series, r.i1_quad),
    ] {
        if rel(a, b) > 1e-5 {
            failures.push(format!("I1 {name} disagree: {a} vs {b}"));
        }
    }
    if (q - critical).abs() < 1e-12 {
        if r.lambda_prime_zero.abs() > 1e-6 {
            failures.push(format!("|Λ'_q(0)| = {:e} exceeds 1e-6 at the critical q", r.lambda_prime_zero.abs()));
        }
        if (r.i1_quad + r.i2_quad).abs() > 1e-5 * r.i1_quad.abs() {
            failures.push("I1 + I2 does not cancel at the critical q".into());
        }
    }
    let csv = csv_bytes(|b| write_lambda_csv(&[r], b))?;
    Ok(Outcome {
        result: serde_json::to_value(r)?,
        csv: vec![("lambda.csv".into(), csv)],
        failures,
    })
}

fn cmd_simulate(config: &mut Config) -> Result<Outcome> {
    let model = config.model()?;
    let seed = config.u64_or("seed", 0)?;
    config.set("seed", seed);
    let mode = config.get("mode").unwrap_or("hitting").to_string();
    let mut cfg = SimConfig::new(
        model,
        config.f64_or("x0", 100.0)?,
        config.f64_or("r_hit", 1.0)?,
        config.u64_or("max_jumps", 1_000_000)?,
        config.u64_or("n_paths", 1000)? as usize,
        seed,
    );
    cfg.max_time = config.f64_opt("max_time")?;
    cfg.delta_ref = config.f64_or("delta_ref", cfg.delta_ref)?;
    cfg.epsilon_cutoff = config.f64_opt("epsilon")?;
    cfg.validate()?;
    model.check_big_jump()?;
    let mut failures = Vec::new();
    let mut csv = Vec::new();
    let result = match mode.as_str() {
        "hitting" => {
            let est = run_big_jump_paths(&cfg)?;
            // transient regime: the hitting probability is bounded by ψ_δ(x0)/ψ_δ(r)
            let transient = 2.0 * model.q > model.beta - model.d as f64;
            if transient && est.ci_low > est.theory_bound {
                failures.push(format!(
                    "hitting frequency {} is above the bound {} beyond its interval",
                    est.freq, est.theory_bound
                ));
            }
            let events = config.u64_or("events", 0)?;
            if events > 0 {
                let engine = BigJumpEngine::new(&model)?;
                let log = event_log(&engine, &cfg, events)?;
                csv.push(("events.csv".to_string(), csv_bytes(|b| write_event_log(&log, model.d, b))?));
            }
            json!({ "mode": mode, "config": cfg, "estimate": est })
        }
        "small_jump" => {
            let rep = run_small_jump_paths_eps(&cfg)?;
            json!({ "mode": mode, "config": cfg, "report": rep })
        }
        "dynkin" => {
            let delta = config.f64_or("delta", 0.3)?;
            let t_star = config.f64_or("t_star", 10.0)?;
            let res = dynkin_check(&cfg, delta, t_star)?;
            if !res.within(3.0) {
                failures.push(format!("Dynkin residual {} exceeds 3 se = {}", res.residual, 3.0 * res.se));
            }
            json!({ "mode": mode, "config": cfg, "dynkin": res })
        }
        other => return Err(Error::Config(format!("unknown simulate mode '{other}'"))),
    };
    Ok(Outcome { result, csv, failures })
}

/// `zero`, `bracket(c, e)` or `growth(c, e[, log_pow[, loglog_pow]])`.
pub fn parse_coefficient(s: &str) -> Result<RadialCoefficient> {
    let s = s.trim();
    if s == "zero" || s == "0" {
        return Ok(RadialCoefficient::Zero);
    }
    let bad = || Error::Config(format!("cannot parse coefficient '{s}'"));
    let (name, rest) = s.split_once('(').ok_or_else(bad)?;
    let args: Vec<f64> = rest
        .strip_suffix(')')
        .ok_or_else(bad)?
        .split(',')
        .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match (name.trim(), args.as_slice()) {
        ("bracket", [c, e]) => Ok(RadialCoefficient::Bracket { c: *c, e: *e }),
        ("growth", [c, e, rest @ ..]) if rest.len() <= 2 => Ok(RadialCoefficient::Growth {
            c: *c,
            e: *e,
            log_pow: rest.first().copied().unwrap_or(0.0),
            loglog_pow: rest.get(1).copied().unwrap_or(0.0),
        }),
        _ => Err(bad()),
    }
}

/// Builds the recurrence input: a named preset or the model's own a₁, a₂,
/// then explicit `a1`, `a2`, `diffusion`, `l_family`, `r0`, `c0` overrides.
pub fn recurrence_input(config: &Config) -> Result<RecurrenceInput> {
    let preset = config.get("preset").unwrap_or("model");
    let dim = || -> Result<usize> {
        config
            .get("d")
            .ok_or_else(|| Error::Config("missing key d".into()))?
            .trim()
            .parse()
            .map_err(|_| Error::Config("d: not a dimension".into()))
    };
    let alpha = || config.require_f64("alpha");
    let beta = || -> Result<f64> {
        match config.f64_opt("beta")? {
            Some(b) => Ok(b),
            None => alpha(),
        }
    };
    let mut input = match preset {
        "model" => {
            let family = config.get("l_family").unwrap_or("log").parse::<LFamily>()?;
            RecurrenceInput::from_model(config.model()?, family)
        }
        "boundary_growth" => recurrence::boundary_growth(dim()?, alpha()?, beta()?)?,
        "critical_growth" => recurrence::critical_growth(dim()?, alpha()?)?,
        "log_kernel" => recurrence::log_kernel_growth(dim()?, alpha()?, beta()?)?,
        "with_diffusion" => recurrence::with_diffusion(dim()?, alpha()?, beta()?)?,
        other => return Err(Error::Config(format!("unknown recurrence preset '{other}'"))),
    };
    if let Some(v) = config.get("kernel_variant") {
        input.model.kernel_variant = v.parse::<KernelVariant>()?;
    }
    if let Some(v) = config.get("a1") {
        input.a1 = parse_coefficient(v)?;
    }
    if let Some(v) = config.get("a2") {
        input.a2 = parse_coefficient(v)?;
    }
    if let Some(v) = config.get("diffusion") {
        input.diffusion = match parse_coefficient(v)? {
            RadialCoefficient::Zero => None,
            c => Some(c),
        };
    }
    if let Some(v) = config.get("l_family") {
        input.l_family = v.parse()?;
    }
    input.r0 = config.f64_or("r0", input.r0)?;
    input.c0 = config.f64_or("c0", input.c0)?;
    input.validate()?;
    Ok(input)
}

fn cmd_recurrence(config: &mut Config, tol: f64) -> Result<Outcome> {
    let input = recurrence_input(config)?;
    let mut settings = RecurrenceSettings {
        tol,
        ..RecurrenceSettings::default()
    };
    if let Some(g) = config.list_f64("s_grid")? {
        settings.s_grid = g;
    }
    settings.s_max = config.f64_or("s_max", settings.s_max)?;
    settings.chain_r = config.f64_or("chain_r", settings.chain_r)?;
    settings.chain_links = config.u64_or("chain_links", settings.chain_links as u64)? as usize;
    settings.chain_tol = config.f64_or("chain_tol", settings.chain_tol)?;
    if let Some(m) = config.list_f64("m_radii")? {
        settings.m_radii = m;
    }
    let report = recurrence::analyze(&input, &settings)?;
    let mut failures = Vec::new();
    if report
        .n_values
        .iter()
        .any(|n| ![n.local, n.small, n.big_inner, n.big_outer].iter().all(|v| *v >= 0.0 && v.is_finite()))
    {
        failures.push("a term of N(s) is negative or not finite".into());
    }
    if !report.capacity_decreasing {
        failures.push("chain energies do not decrease along the chain grid".into());
    }
    if report.integral.verdict == Verdict::DivergesNumerically && !report.capacity_within_bound {
        failures.push("a chain energy exceeds the frozen K bound".into());
    }
    let csv = csv_bytes(|b| recurrence::write_n_csv(&report, b))?;
    Ok(Outcome {
        result: serde_json::to_value(&report)?,
        csv: vec![("recurrence_n.csv".into(), csv)],
        failures,
    })
}

fn cmd_identities(config: &mut Config, tol: f64) -> Result<Outcome> {
    let dims: Vec<usize> = match config.list_f64("dims")? {
        Some(v) => v.into_iter().map(|x| x as usize).collect(),
        None => IDENTITY_DIMS.to_vec(),
    };
    let alphas = config.list_f64("alphas")?.unwrap_or_else(|| IDENTITY_ALPHAS.to_vec());
    let rows = identity_suite(&dims, &alphas, tol)?;
    let failures: Vec<String> = rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{} at {}: |lhs − rhs| = {:e}", r.identity, r.params, r.abs_diff))
        .collect();
    let csv = csv_bytes(|b| {
        let mut w = csv::Writer::from_writer(b);
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    })?;
    Ok(Outcome {
        result: serde_json::to_value(&rows)?,
        csv: vec![("identities.csv".into(), csv)],
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_value_and_json_configs_agree() {
        let kv = Config::parse("# model\n[model]\nd = 1\nalpha = 1.2\nradii = 1, 2, 4\n").unwrap();
        let js = Config::parse(r#"{"d": 1, "alpha": 1.2, "radii": [1, 2, 4]}"#).unwrap();
        assert_eq!(kv.model().unwrap(), js.model().unwrap());
        assert_eq!(kv.list_f64("radii").unwrap(), js.list_f64("radii").unwrap());
        assert!(Config::parse("d 1").is_err());
    }

    #[test]
    fn manifest_round_trips_as_config() {
        let mut values = BTreeMap::new();
        values.insert("d".to_string(), "2".to_string());
        let m = RunManifest {
            subcommand: "lambda".into(),
            config: values.clone(),
            tool_version: "0".into(),
            seed: None,
            tol: 1e-8,
            threads: 1,
            started_unix: 0,
            wall_clock_seconds: 0.0,
            outputs: vec![],
        };
        let doc = json!({ "manifest": m, "result": {} }).to_string();
        let c = Config::parse(&doc).unwrap();
        assert_eq!(c.values, values);
        assert_eq!(c.manifest_subcommand.as_deref(), Some("lambda"));
    }

    fn verdict(text: &str) -> String {
        classify(&Config::parse(text).unwrap()).unwrap().verdict
    }

    #[test]
    fn classification_examples() {
        assert_eq!(verdict("d=1\nbeta=1.5\np_prime=-1\nq_prime=0.4"), "recurrent");
        assert_eq!(verdict("d=1\nbeta=1.5\np_prime=-1\nq_prime=0.6"), "transient");
        assert_eq!(verdict("d=1\nbeta=1.5\np_prime=-1\nq_prime=0.4\ndiffusion_exponent=1.5"), "transient");
        // (1+|x|²)^q with q = 0.2 is q' = 0.4
        assert_eq!(verdict("d=1\nbeta=1.5\nq=0.2"), "recurrent");
        assert!(classify(&Config::parse("d=1\nbeta=1.5\nq_prime=1.5").unwrap()).is_err());
    }

    #[test]
    fn coefficient_strings() {
        assert_eq!(parse_coefficient("zero").unwrap(), RadialCoefficient::Zero);
        assert_eq!(
            parse_coefficient("bracket(2, 0.5)").unwrap(),
            RadialCoefficient::Bracket { c: 2.0, e: 0.5 }
        );
        assert_eq!(
            parse_coefficient("growth(1, -1, 1)").unwrap(),
            RadialCoefficient::Growth {
                c: 1.0,
                e: -1.0,
                log_pow: 1.0,
                loglog_pow: 0.0
            }
        );
        assert!(parse_coefficient("growth(1)").is_err());
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(exit_code_for(&Error::Config("x".into())), EXIT_USAGE);
        assert_eq!(exit_code_for(&Error::Precondition("x".into())), EXIT_USAGE);
        assert_eq!(
            exit_code_for(&Error::Quadrature {
                context: "x".into(),
                value: 0.0,
                error: 1.0
            }),
            EXIT_INVARIANT
        );
    }
}
