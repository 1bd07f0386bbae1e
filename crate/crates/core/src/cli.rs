//! The `dham` command line: JSON configs in, JSON reports and CSV
//! trajectories out.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure,
//! 4 verification failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::classical::ClassicalHamiltonian;
use crate::expr::{parse, Expr, Sampler, ZeroCheck};
use crate::legendre::{legendre_forward, legendre_reverse, MomentumMap};
use crate::model::{DelayHamiltonian, Generator, QuadraticHamiltonian, QuadraticLagrangian};
use crate::noether::{analyze, variational_derivative_identities, verify_hamiltonian_identity, AnalysisOptions, DriftReport};
use crate::recursion::{compare, convergence_table, recover_constants, recurse, ComponentDiff, SumFormRelation};
use crate::solver::{
    residual_report, step_elsgolts, step_hamiltonian, History, LagrangianHistory, Trajectory,
};

#[derive(Debug, Parser)]
#[command(name = "dham", version, about = "Hamiltonian tools for delay ODEs")]
pub struct Cli {
    /// JSON file with model, generators, history and solver settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed for identity sampling.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for reports and trajectories; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Relative tolerance for identity checks.
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default, Clone)]
pub struct RunArgs {
    /// Model JSON; overrides the config's model.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// History JSON `{"t0", "q", "p"}`; overrides the config's history.
    #[arg(long)]
    pub history: Option<PathBuf>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long = "steps-per-delay")]
    pub steps_per_delay: Option<usize>,
    /// Length of the run past t0, a multiple of tau.
    #[arg(long)]
    pub horizon: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Delay Legendre transform in either direction.
    Transform {
        #[arg(long)]
        model: Option<PathBuf>,
        /// Free scale of the coefficients; defaults to beta (or B).
        #[arg(long)]
        alpha1: Option<f64>,
    },
    /// Method-of-steps trajectory as CSV.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// CSV path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Invariance, first integrals and drift for each generator.
    Noether {
        #[command(flatten)]
        run: RunArgs,
        /// Assert (S+ - 1)P = 0 and monitor I = C.
        #[arg(long)]
        constraint: bool,
    },
    /// Integration-free solution from the sum-form relations, as CSV.
    Recurse {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long = "c-mid")]
        c_mid: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Numerical against recursive trajectories over several grid sizes.
    Compare {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long = "c-mid")]
        c_mid: Option<f64>,
        /// Steps per delay to compare, comma separated.
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
    },
    /// Off-shell identity suites.
    CheckIdentity {
        #[arg(long)]
        model: Option<PathBuf>,
        /// Check the classical (non-delay) identity instead.
        #[arg(long)]
        classical: bool,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{pointer}: {message}")]
    Config { pointer: String, message: String },
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Verification(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } => 2,
            CliError::Numeric(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

fn config_err(pointer: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Config {
        pointer: pointer.to_string(),
        message: message.to_string(),
    }
}

fn numeric(e: impl std::fmt::Display) -> CliError {
    CliError::Numeric(e.to_string())
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| config_err("", format!("{}: {e}", path.display())))
}

fn field<'a>(v: &'a Value, ptr: &str, key: &str) -> Result<&'a Value, CliError> {
    v.get(key)
        .ok_or_else(|| config_err(&format!("{ptr}/{key}"), "missing"))
}

fn number(v: &Value, ptr: &str) -> Result<f64, CliError> {
    v.as_f64().ok_or_else(|| config_err(ptr, "expected a number"))
}

fn num_field(v: &Value, ptr: &str, key: &str) -> Result<f64, CliError> {
    number(field(v, ptr, key)?, &format!("{ptr}/{key}"))
}

fn expr_value(v: &Value, ptr: &str) -> Result<Expr, CliError> {
    match v {
        Value::String(s) => parse(s).map_err(|e| config_err(ptr, e)),
        Value::Number(n) => Ok(Expr::real(n.as_f64().unwrap_or(f64::NAN))),
        _ => Err(config_err(ptr, "expected an expression string")),
    }
}

fn expr_field(v: &Value, ptr: &str, key: &str) -> Result<Expr, CliError> {
    expr_value(field(v, ptr, key)?, &format!("{ptr}/{key}"))
}

fn optional_expr(v: &Value, ptr: &str, key: &str) -> Result<Expr, CliError> {
    match v.get(key) {
        None => Ok(Expr::zero()),
        Some(x) => expr_value(x, &format!("{ptr}/{key}")),
    }
}

/// Model section of a config.
#[derive(Debug, Clone)]
pub enum Model {
    Lagrangian(QuadraticLagrangian, Option<f64>),
    Hamiltonian(DelayHamiltonian),
    Classical(ClassicalHamiltonian),
}

impl Model {
    pub fn from_json(v: &Value) -> Result<Model, CliError> {
        let alpha1 = match v.get("alpha1") {
            Some(a) => Some(number(a, "/alpha1")?),
            None => None,
        };
        if let Some(l) = v.get("lagrangian") {
            let p = "/lagrangian";
            let l = QuadraticLagrangian::new(
                num_field(l, p, "alpha")?,
                num_field(l, p, "beta")?,
                num_field(l, p, "gamma")?,
                optional_expr(l, p, "phi")?,
            )
            .map_err(|e| config_err(p, e))?;
            return Ok(Model::Lagrangian(l, alpha1));
        }
        if let Some(h) = v.get("hamiltonian") {
            let p = "/hamiltonian";
            let expr = expr_field(h, p, "H")?;
            let alphas = field(h, p, "alphas")?
                .as_array()
                .filter(|a| a.len() == 4)
                .ok_or_else(|| config_err("/hamiltonian/alphas", "expected four numbers"))?;
            let mut a = [0.0; 4];
            for (i, x) in alphas.iter().enumerate() {
                a[i] = number(x, &format!("/hamiltonian/alphas/{i}"))?;
            }
            let h = DelayHamiltonian::new(expr, a).map_err(|e| config_err("/hamiltonian/H", e))?;
            return Ok(Model::Hamiltonian(h));
        }
        if let Some(c) = v.get("classical") {
            let h = ClassicalHamiltonian::new(expr_field(c, "/classical", "H")?)
                .map_err(|e| config_err("/classical/H", e))?;
            return Ok(Model::Classical(h));
        }
        Err(config_err("", "expected one of lagrangian, hamiltonian, classical"))
    }

    /// The delay Hamiltonian, through the Legendre transform if needed.
    pub fn hamiltonian(&self) -> Result<DelayHamiltonian, CliError> {
        match self {
            Model::Hamiltonian(h) => Ok(h.clone()),
            Model::Lagrangian(l, a1) => legendre_forward(l, a1.unwrap_or(l.beta))
                .map(|r| r.hamiltonian)
                .map_err(|e| config_err("/lagrangian", e)),
            Model::Classical(_) => Err(config_err("/classical", "a delay model is required")),
        }
    }
}

pub fn generators_from_json(v: &Value) -> Result<Vec<Generator>, CliError> {
    let Some(list) = v.get("generators") else {
        return Ok(Vec::new());
    };
    let list = list
        .as_array()
        .ok_or_else(|| config_err("/generators", "expected an array"))?;
    list.iter()
        .enumerate()
        .map(|(i, g)| {
            let p = format!("/generators/{i}");
            let name = g
                .get("name")
                .and_then(Value::as_str)
                .map(str::to_string)
                .unwrap_or_else(|| format!("X{}", i + 1));
            Generator::new(
                name,
                optional_expr(g, &p, "xi")?,
                optional_expr(g, &p, "eta")?,
                optional_expr(g, &p, "nu")?,
            )
            .map_err(|e| config_err(&p, e))
        })
        .collect()
}

/// Everything a command may need, merged from `--config` and flags.
struct Context {
    config: Value,
    sampler: Sampler,
    out_dir: Option<PathBuf>,
}

impl Context {
    fn load(cli: &Cli) -> Result<Context, CliError> {
        let config = match &cli.config {
            Some(p) => read_json(p)?,
            None => Value::Object(Map::new()),
        };
        if !config.is_object() {
            return Err(config_err("", "config must be a JSON object"));
        }
        let seed = match (cli.seed, config.get("seed")) {
            (Some(s), _) => s,
            (None, Some(v)) => v.as_u64().ok_or_else(|| config_err("/seed", "expected an unsigned integer"))?,
            (None, None) => 0,
        };
        let tol = match (cli.tol, config.get("tol")) {
            (Some(t), _) => t,
            (None, Some(v)) => number(v, "/tol")?,
            (None, None) => 1e-9,
        };
        if !(tol > 0.0) {
            return Err(config_err("/tol", "must be positive"));
        }
        Ok(Context {
            config,
            sampler: Sampler::new(100, tol, seed),
            out_dir: cli.out.clone(),
        })
    }

    fn model_json(&self, file: &Option<PathBuf>) -> Result<Value, CliError> {
        match file {
            Some(p) => read_json(p),
            None => Ok(self.config.clone()),
        }
    }

    fn number(&self, flag: Option<f64>, key: &str) -> Result<Option<f64>, CliError> {
        match (flag, self.config.get(key)) {
            (Some(x), _) => Ok(Some(x)),
            (None, Some(v)) => number(v, &format!("/{key}")).map(Some),
            (None, None) => Ok(None),
        }
    }

    fn settings(&self, run: &RunArgs) -> Result<Settings, CliError> {
        let tau = self
            .number(run.tau, "tau")?
            .ok_or_else(|| config_err("/tau", "missing (or pass --tau)"))?;
        if !(tau > 0.0) {
            return Err(config_err("/tau", "must be positive"));
        }
        let n = match (run.steps_per_delay, self.config.get("steps_per_delay")) {
            (Some(n), _) => n,
            (None, Some(v)) => v
                .as_u64()
                .ok_or_else(|| config_err("/steps_per_delay", "expected an integer"))? as usize,
            (None, None) => 64,
        };
        if n < 8 {
            return Err(config_err("/steps_per_delay", "must be at least 8"));
        }
        let horizon = self
            .number(run.horizon, "horizon")?
            .ok_or_else(|| config_err("/horizon", "missing (or pass --horizon)"))?;
        let k = horizon / tau;
        if !(k.round() >= 1.0 && (k - k.round()).abs() < 1e-9 * k.max(1.0)) {
            return Err(config_err("/horizon", "must be a positive multiple of tau"));
        }
        let hist = match &run.history {
            Some(p) => read_json(p)?,
            None => field(&self.config, "", "history")?.clone(),
        };
        let ptr = if run.history.is_some() { "" } else { "/history" };
        let t0 = match hist.get("t0") {
            Some(v) => number(v, &format!("{ptr}/t0"))?,
            None => 0.0,
        };
        let q = expr_field(&hist, ptr, "q")?;
        let p = match hist.get("p") {
            Some(v) => Some(expr_value(v, &format!("{ptr}/p"))?),
            None => None,
        };
        Ok(Settings {
            tau,
            n,
            t0,
            t_end: t0 + horizon,
            q,
            p,
            history_ptr: ptr.to_string(),
        })
    }

    fn write(&self, name: &str, explicit: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
        let path = match (explicit, &self.out_dir) {
            (Some(p), _) => p.clone(),
            (None, Some(dir)) => {
                fs::create_dir_all(dir).map_err(|e| CliError::Io {
                    path: dir.display().to_string(),
                    message: e.to_string(),
                })?;
                dir.join(name)
            }
            (None, None) => {
                print!("{text}");
                return Ok(());
            }
        };
        fs::write(&path, text).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

struct Settings {
    tau: f64,
    n: usize,
    t0: f64,
    t_end: f64,
    q: Expr,
    p: Option<Expr>,
    history_ptr: String,
}

impl Settings {
    fn history(&self) -> Result<History, CliError> {
        let p = self
            .p
            .clone()
            .ok_or_else(|| config_err(&format!("{}/p", self.history_ptr), "missing"))?;
        History::new(self.t0, self.tau, self.q.clone(), p).map_err(|e| config_err(&self.history_ptr, e))
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// CSV with columns `t,q,p,qdot,pdot,Rp,Rq,Rt`; residuals are `NaN` where
/// the stencil leaves the grid or no Hamiltonian is known.
pub fn trajectory_csv(traj: &Trajectory, h: Option<&DelayHamiltonian>) -> Result<String, CliError> {
    let report = match h {
        Some(h) if !traj.node(0).p.is_nan() => Some(residual_report(traj, h).map_err(numeric)?),
        _ => None,
    };
    let mut out = String::from("t,q,p,qdot,pdot,Rp,Rq,Rt\n");
    for (i, x) in traj.nodes().iter().enumerate() {
        let r = report.as_ref().and_then(|r| r.at(i));
        let (rp, rq, rt) = r.map_or((f64::NAN, f64::NAN, f64::NAN), |r| (r.rp, r.rq, r.rt));
        let cols = [x.t, x.q, x.p, x.qd, x.pd, rp, rq, rt].map(fmt_num);
        writeln!(out, "{}", cols.join(",")).expect("write to string");
    }
    Ok(out)
}

fn expr_json(e: &Option<Expr>) -> Value {
    e.as_ref().map_or(Value::Null, |e| Value::String(e.to_string()))
}

fn drift_json(d: &Option<DriftReport>) -> Value {
    match d {
        None => Value::Null,
        Some(d) => json!({
            "max": d.max,
            "t_max": d.t_max,
            "reference": if d.reference.is_nan() { Value::Null } else { json!(d.reference) },
            "nodes": d.nodes,
        }),
    }
}

fn diff_json(d: &Option<ComponentDiff>) -> Value {
    match d {
        None => Value::Null,
        Some(d) => json!({"max": d.max, "l2": d.l2, "t_max": d.t_max}),
    }
}

fn check_json(name: &str, c: &ZeroCheck) -> Value {
    json!({"name": name, "passed": c.passed, "worst": c.worst})
}

fn transform(ctx: &Context, model: &Option<PathBuf>, alpha1: Option<f64>) -> Result<(), CliError> {
    let v = ctx.model_json(model)?;
    let alpha1 = match alpha1 {
        Some(a) => Some(a),
        None => match v.get("alpha1") {
            Some(a) => Some(number(a, "/alpha1")?),
            None => None,
        },
    };
    let report = match Model::from_json(&v)? {
        Model::Lagrangian(l, _) => {
            let r = legendre_forward(&l, alpha1.unwrap_or(l.beta)).map_err(|e| config_err("/lagrangian", e))?;
            let map = match &r.momentum_map {
                MomentumMap::Pointwise { p, pm } => json!({"p": p.to_string(), "pm": pm.to_string()}),
                MomentumMap::Merged { lhs, rhs } => json!({"lhs": lhs.to_string(), "rhs": rhs.to_string()}),
            };
            json!({
                "H": r.hamiltonian.h.to_string(),
                "alphas": r.hamiltonian.alphas,
                "momentum_map": map,
                "degenerate": r.degenerate,
            })
        }
        Model::Hamiltonian(h) => {
            let q = quadratic_parts(&h.h, &ctx.sampler)?;
            let r = legendre_reverse(&q, alpha1.unwrap_or(q.b)).map_err(|e| config_err("/hamiltonian", e))?;
            let l = &r.lagrangian;
            json!({
                "L": l.to_expr().to_string(),
                "lagrangian": {"alpha": l.alpha, "beta": l.beta, "gamma": l.gamma, "phi": l.phi.to_string()},
                "alphas": r.alphas,
                "velocity_map": {"qd": r.velocity_map.0.to_string(), "qdm": r.velocity_map.1.to_string()},
            })
        }
        Model::Classical(h) => {
            json!({"H": h.h.to_string(), "tilde_H": h.tilde_h().to_string()})
        }
    };
    ctx.write("transform.json", None, &pretty(&report))
}

/// Splits `H` into `A/2 p^2 + B p pm + C/2 pm^2 + phi(t, q, qm)`, checking
/// by sampling that the split is exact.
fn quadratic_parts(h: &Expr, sampler: &Sampler) -> Result<QuadraticHamiltonian, CliError> {
    use crate::expr::{JetPoint, Symbol};
    let (p, pm) = (Symbol::p(0), Symbol::p(-1));
    let second = |a: Symbol, b: Symbol| -> Result<f64, CliError> {
        let e = h.partial(a).partial(b);
        let v = e.eval(&JetPoint::new(1.0, 0.0)).ok();
        match v {
            Some(v) if sampler.holds(&(&e - Expr::real(v))) => Ok(v),
            _ => Err(config_err("/hamiltonian/H", "not quadratic in p, pm with constant coefficients")),
        }
    };
    let (a, b, c) = (second(p, p)?, second(p, pm)?, second(pm, pm)?);
    let q = QuadraticHamiltonian::new(a, b, c, Expr::zero()).map_err(|e| config_err("/hamiltonian/H", e))?;
    let phi = h - q.to_expr();
    if sampler.holds(&phi.partial(p)) && sampler.holds(&phi.partial(pm)) {
        let clean = phi.substitute(&|s| (s == p || s == pm).then(Expr::zero));
        QuadraticHamiltonian::new(a, b, c, clean).map_err(|e| config_err("/hamiltonian/H", e))
    } else {
        Err(config_err("/hamiltonian/H", "not quadratic in p, pm"))
    }
}

fn simulate(ctx: &Context, run: &RunArgs, out: Option<&PathBuf>) -> Result<(), CliError> {
    let model = Model::from_json(&ctx.model_json(&run.model)?)?;
    let s = ctx.settings(run)?;
    let csv = match (&model, &s.p) {
        (Model::Lagrangian(l, _), None) => {
            let lh = LagrangianHistory::new(s.t0, s.tau, s.q.clone()).map_err(|e| config_err(&s.history_ptr, e))?;
            let tr = step_elsgolts(l, &lh, s.t_end, s.n).map_err(numeric)?;
            trajectory_csv(&tr, None)?
        }
        _ => {
            let h = model.hamiltonian()?;
            let tr = step_hamiltonian(&h, &s.history()?, s.t_end, s.n).map_err(numeric)?;
            trajectory_csv(&tr, Some(&h))?
        }
    };
    ctx.write("trajectory.csv", out, &csv)
}

fn noether(ctx: &Context, run: &RunArgs, constraint: bool) -> Result<(), CliError> {
    let v = ctx.model_json(&run.model)?;
    let h = Model::from_json(&v)?.hamiltonian()?;
    let gens = generators_from_json(&v)?;
    let has_history = run.history.is_some() || ctx.config.get("history").is_some();
    let traj = if has_history && !gens.is_empty() {
        let s = ctx.settings(run)?;
        Some(step_hamiltonian(&h, &s.history()?, s.t_end, s.n).map_err(numeric)?)
    } else {
        None
    };
    let opts = AnalysisOptions {
        sampler: ctx.sampler,
        assert_constraint: constraint,
        ..AnalysisOptions::default()
    };
    let mut reports = Vec::new();
    let mut failed = Vec::new();
    for g in &gens {
        let r = analyze(&h, g, &opts, traj.as_ref()).map_err(numeric)?;
        if !r.identity.passed {
            failed.push(r.name.clone());
        }
        let drift = match &r.drift {
            None => json!({}),
            Some(d) => json!({
                "I": drift_json(&d.differential),
                "J": drift_json(&d.difference),
                "relation": drift_json(&d.relation),
                "constraint": drift_json(&d.constraint),
            }),
        };
        reports.push(json!({
            "name": r.name,
            "classification": r.invariance.classification.as_str(),
            "omega": r.invariance.omega.to_string(),
            "V": expr_json(&r.invariance.v),
            "W": expr_json(&r.invariance.w),
            "C": r.quantities.c.to_string(),
            "P": r.quantities.p_quantity.to_string(),
            "I": expr_json(&r.quantities.differential_integral),
            "J": expr_json(&r.quantities.difference_integral),
            "identity_ok": r.identity.passed,
            "drift": drift,
            "notes": r.notes,
        }));
    }
    ctx.write("noether.json", None, &pretty(&Value::Array(reports)))?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!("Hamiltonian identity failed for {}", failed.join(", "))))
    }
}

fn c_mid(ctx: &Context, flag: Option<f64>) -> Result<f64, CliError> {
    let c = ctx.number(flag, "c_mid")?.unwrap_or(0.0);
    if c != 0.0 && c != 2.0 {
        return Err(config_err("/c_mid", "must be 0 or 2"));
    }
    Ok(c)
}

fn recurse_cmd(ctx: &Context, run: &RunArgs, flag: Option<f64>, out: Option<&PathBuf>) -> Result<(), CliError> {
    let s = ctx.settings(run)?;
    let c = c_mid(ctx, flag)?;
    let hist = s.history()?;
    let (a, b) = recover_constants(&hist, c).map_err(numeric)?;
    let rel = SumFormRelation::new(c, a, b).map_err(numeric)?;
    let r = recurse(&rel, &hist, s.t_end, s.n).map_err(numeric)?;
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    let model = match (&run.model, ctx.config.get("lagrangian").or(ctx.config.get("hamiltonian"))) {
        (None, None) => None,
        _ => Some(Model::from_json(&ctx.model_json(&run.model)?)?.hamiltonian()?),
    };
    ctx.write("recursion.csv", out, &trajectory_csv(&r.trajectory, model.as_ref())?)
}

fn compare_cmd(ctx: &Context, run: &RunArgs, flag: Option<f64>, ns: &[usize]) -> Result<(), CliError> {
    let h = Model::from_json(&ctx.model_json(&run.model)?)?.hamiltonian()?;
    let s = ctx.settings(run)?;
    let c = c_mid(ctx, flag)?;
    let hist = s.history()?;
    let (a, b) = recover_constants(&hist, c).map_err(numeric)?;
    let rel = SumFormRelation::new(c, a, b).map_err(numeric)?;
    let ns: Vec<usize> = if ns.is_empty() { vec![32, 64, 128] } else { ns.to_vec() };
    let mut runs = Vec::new();
    let mut errors = Vec::new();
    for &n in &ns {
        if n < 8 {
            return Err(config_err("/n", "steps per delay must be at least 8"));
        }
        let num = step_hamiltonian(&h, &hist, s.t_end, n).map_err(numeric)?;
        let rec = recurse(&rel, &hist, s.t_end, n).map_err(numeric)?;
        let cmp = compare(&num, &rec.trajectory).map_err(numeric)?;
        errors.push((n, cmp.q.map_or(f64::NAN, |d| d.max)));
        runs.push(json!({
            "n": n,
            "q": diff_json(&cmp.q),
            "p": diff_json(&cmp.p),
            "qd": diff_json(&cmp.qd),
            "pd": diff_json(&cmp.pd),
        }));
    }
    let table: Vec<Value> = convergence_table(&errors)
        .iter()
        .map(|r| json!({"n": r.n, "max_dq": r.error, "order": r.order}))
        .collect();
    let report = json!({"A": a, "B": b, "c_mid": c, "runs": runs, "convergence": table});
    ctx.write("compare.json", None, &pretty(&report))
}

fn builtin_suite() -> Vec<(DelayHamiltonian, Vec<Generator>)> {
    let e = |s: &str| parse(s).expect("built-in expression");
    let g = |n: &str, xi: &str, eta: &str, nu: &str| Generator::new(n, e(xi), e(eta), e(nu)).expect("point generator");
    let mut suite = vec![
        (
            DelayHamiltonian::new(e("p*pm + q*qm"), [1.0, 0.0, 0.0, 1.0]).expect("example 1"),
            vec![
                g("X1", "0", "sin(t)", "cos(t)"),
                g("X2", "0", "cos(t)", "-sin(t)"),
                g("X4", "0", "q", "p"),
                g("X5", "0", "p", "-q"),
            ],
        ),
        (
            DelayHamiltonian::new(e("(p + pm)^2/2 + (q + qm)^2/2"), [1.0; 4]).expect("example 2"),
            vec![g("X1", "0", "sin(t)", "cos(t)"), g("X2", "0", "cos(t)", "-sin(t)")],
        ),
    ];
    for seed in 0..20 {
        suite.push((
            crate::random::quadratic_hamiltonian(seed),
            vec![crate::random::polynomial_generator(seed, false)],
        ));
    }
    suite
}

fn check_identity(ctx: &Context, model: &Option<PathBuf>, classical: bool) -> Result<(), CliError> {
    let have_model = model.is_some()
        || ["lagrangian", "hamiltonian", "classical"].iter().any(|k| ctx.config.get(*k).is_some());
    let mut rows = Vec::new();
    let mut failed = 0;
    let mut push = |rows: &mut Vec<Value>, label: String, c: &ZeroCheck| {
        if !c.passed {
            failed += 1;
        }
        rows.push(check_json(&label, c));
    };
    if classical {
        let (h, gens) = if have_model {
            let v = ctx.model_json(model)?;
            match Model::from_json(&v)? {
                Model::Classical(h) => (h, generators_from_json(&v)?),
                _ => return Err(config_err("/classical", "missing")),
            }
        } else {
            let e = |s: &str| parse(s).expect("built-in expression");
            (
                ClassicalHamiltonian::new(e("(p^2 + q^2)/2")).expect("oscillator"),
                vec![
                    Generator::new("time", Expr::one(), Expr::zero(), Expr::zero()).expect("point"),
                    Generator::new("rotation", Expr::zero(), e("p"), e("-q")).expect("point"),
                    Generator::new("mixed", e("t^2"), e("q*t"), e("p^2")).expect("point"),
                ],
            )
        };
        for g in &gens {
            let c = h.verify_identity(g, &ctx.sampler).map_err(numeric)?;
            push(&mut rows, g.name.clone(), &c);
        }
    } else {
        let suite = if have_model {
            let v = ctx.model_json(model)?;
            vec![(Model::from_json(&v)?.hamiltonian()?, generators_from_json(&v)?)]
        } else {
            builtin_suite()
        };
        for (k, (h, gens)) in suite.iter().enumerate() {
            for g in gens {
                let c = verify_hamiltonian_identity(h, g, &ctx.sampler).map_err(numeric)?;
                push(&mut rows, format!("{k}/{}/identity", g.name), &c);
                if g.xi.symbols().iter().all(|s| s.base() == crate::expr::Base::T) {
                    let r = variational_derivative_identities(h, g, &ctx.sampler).map_err(numeric)?;
                    for (part, c) in [("p", &r.p), ("q", &r.q), ("t", &r.t), ("combined", &r.combined)] {
                        push(&mut rows, format!("{k}/{}/variational_{part}", g.name), c);
                    }
                }
            }
        }
    }
    let report = json!({"passed": failed == 0, "checks": rows});
    ctx.write("check-identity.json", None, &pretty(&report))?;
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Verification(format!("{failed} identity checks failed")))
    }
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let ctx = Context::load(cli)?;
    match &cli.command {
        Command::Transform { model, alpha1 } => transform(&ctx, model, *alpha1),
        Command::Simulate { run, out } => simulate(&ctx, run, out.as_ref()),
        Command::Noether { run, constraint } => noether(&ctx, run, *constraint),
        Command::Recurse { run, c_mid, out } => recurse_cmd(&ctx, run, *c_mid, out.as_ref()),
        Command::Compare { run, c_mid, n } => compare_cmd(&ctx, run, *c_mid, n),
        Command::CheckIdentity { model, classical } => check_identity(&ctx, model, *classical),
    }
}

/// Entry point shared by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
