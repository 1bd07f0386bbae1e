//! Python bindings for the delay Hamiltonian toolkit.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use delay_hamiltonian_core::expr::{self, Sampler, Symbol};
use delay_hamiltonian_core::legendre::{legendre_forward, MomentumMap};
use delay_hamiltonian_core::model;
use delay_hamiltonian_core::noether::{self, AnalysisOptions, DriftReport};
use delay_hamiltonian_core::recursion::{recover_constants, recurse as core_recurse, SumFormRelation};
use delay_hamiltonian_core::solver::{self, History, LagrangianHistory};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse(s: &str) -> PyResult<expr::Expr> {
    expr::parse(s).map_err(err)
}

/// Symbolic expression over the delay jet space.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Expr(expr::Expr);

#[pymethods]
impl Expr {
    #[new]
    fn new(source: &str) -> PyResult<Self> {
        parse(source).map(Expr)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Expr('{}')", self.0)
    }

    fn __eq__(&self, other: PyRef<'_, Expr>) -> bool {
        self.0 == other.0
    }

    /// Partial derivative with respect to a symbol name such as `qm`.
    fn partial(&self, symbol: &str) -> PyResult<Expr> {
        let s = Symbol::from_name(symbol).ok_or_else(|| err(format!("unknown symbol {symbol}")))?;
        Ok(Expr(self.0.partial(s)))
    }

    fn total_derivative(&self) -> PyResult<Expr> {
        self.0.total_derivative().map(Expr).map_err(err)
    }

    fn shift(&self, direction: i8) -> PyResult<Expr> {
        self.0.shift(direction).map(Expr).map_err(err)
    }

    /// Value at `t` with the given symbol values; time symbols follow `t`.
    #[pyo3(signature = (values, t = 0.0, tau = 1.0))]
    fn eval(&self, values: std::collections::HashMap<String, f64>, t: f64, tau: f64) -> PyResult<f64> {
        if !(tau > 0.0) {
            return Err(err("tau must be positive"));
        }
        let mut j = expr::JetPoint::new(tau, t);
        for (k, v) in values {
            let s = Symbol::from_name(&k).ok_or_else(|| err(format!("unknown symbol {k}")))?;
            j.set(s, v);
        }
        self.0.eval(&j).map_err(err)
    }

    /// Whether the expression vanishes at seeded random jet points.
    #[pyo3(signature = (samples = 100, tol = 1e-9, seed = 0))]
    fn is_zero(&self, samples: usize, tol: f64, seed: u64) -> PyResult<bool> {
        Sampler::new(samples, tol, seed)
            .is_zero(&self.0)
            .map(|c| c.passed)
            .map_err(err)
    }
}

/// `L = alpha/2 qd^2 + beta qd qdm + gamma/2 qdm^2 - phi(q, qm)`.
#[pyclass(frozen)]
struct Lagrangian(model::QuadraticLagrangian);

#[pymethods]
impl Lagrangian {
    #[new]
    #[pyo3(signature = (alpha, beta, gamma, phi = "0"))]
    fn new(alpha: f64, beta: f64, gamma: f64, phi: &str) -> PyResult<Self> {
        model::QuadraticLagrangian::new(alpha, beta, gamma, parse(phi)?)
            .map(Lagrangian)
            .map_err(err)
    }

    fn __str__(&self) -> String {
        self.0.to_expr().to_string()
    }

    fn is_degenerate(&self) -> bool {
        self.0.is_degenerate()
    }

    /// Delay Legendre transform; `alpha1` defaults to `beta`.
    #[pyo3(signature = (alpha1 = None))]
    fn legendre(&self, alpha1: Option<f64>) -> PyResult<Hamiltonian> {
        legendre_forward(&self.0, alpha1.unwrap_or(self.0.beta))
            .map(|r| Hamiltonian(r.hamiltonian))
            .map_err(err)
    }

    /// Momentum relations as strings, keyed `p`/`pm` or `lhs`/`rhs`.
    #[pyo3(signature = (alpha1 = None))]
    fn momentum_map<'py>(&self, py: Python<'py>, alpha1: Option<f64>) -> PyResult<Bound<'py, PyDict>> {
        let r = legendre_forward(&self.0, alpha1.unwrap_or(self.0.beta)).map_err(err)?;
        let d = PyDict::new(py);
        match r.momentum_map {
            MomentumMap::Pointwise { p, pm } => {
                d.set_item("p", p.to_string())?;
                d.set_item("pm", pm.to_string())?;
            }
            MomentumMap::Merged { lhs, rhs } => {
                d.set_item("lhs", lhs.to_string())?;
                d.set_item("rhs", rhs.to_string())?;
            }
        }
        Ok(d)
    }

    /// Method-of-steps solution of the Elsgolts equation.
    #[pyo3(signature = (q, t_end, steps_per_delay, t0 = 0.0, tau = 1.0, start_velocity = None))]
    fn simulate(
        &self,
        q: &str,
        t_end: f64,
        steps_per_delay: usize,
        t0: f64,
        tau: f64,
        start_velocity: Option<f64>,
    ) -> PyResult<Trajectory> {
        let mut hist = LagrangianHistory::new(t0, tau, parse(q)?).map_err(err)?;
        if let Some(v) = start_velocity {
            hist = hist.with_start_velocity(v);
        }
        solver::step_elsgolts(&self.0, &hist, t_end, steps_per_delay)
            .map(Trajectory)
            .map_err(err)
    }
}

/// Delay Hamiltonian with coefficients `alpha1..alpha4`.
#[pyclass(frozen)]
struct Hamiltonian(model::DelayHamiltonian);

#[pymethods]
impl Hamiltonian {
    #[new]
    fn new(h: &str, alphas: [f64; 4]) -> PyResult<Self> {
        model::DelayHamiltonian::new(parse(h)?, alphas)
            .map(Hamiltonian)
            .map_err(err)
    }

    #[getter]
    fn h(&self) -> Expr {
        Expr(self.0.h.clone())
    }

    #[getter]
    fn alphas(&self) -> [f64; 4] {
        self.0.alphas
    }

    fn __str__(&self) -> String {
        self.0.h.to_string()
    }

    fn tilde_h(&self) -> Expr {
        Expr(self.0.tilde_h())
    }

    /// `(Rp, Rq, Rt)`.
    fn residuals(&self) -> (Expr, Expr, Expr) {
        let r = self.0.variational_residuals();
        (Expr(r.rp), Expr(r.rq), Expr(r.rt))
    }

    /// Method-of-steps solution from history `q(t), p(t)` on `[t0 - 2 tau, t0]`.
    #[pyo3(signature = (q, p, t_end, steps_per_delay, t0 = 0.0, tau = 1.0))]
    fn simulate(&self, q: &str, p: &str, t_end: f64, steps_per_delay: usize, t0: f64, tau: f64) -> PyResult<Trajectory> {
        let hist = History::new(t0, tau, parse(q)?, parse(p)?).map_err(err)?;
        solver::step_hamiltonian(&self.0, &hist, t_end, steps_per_delay)
            .map(Trajectory)
            .map_err(err)
    }
}

/// Lie point generator `xi d/dt + eta d/dq + nu d/dp`.
#[pyclass(frozen)]
struct Generator(model::Generator);

#[pymethods]
impl Generator {
    #[new]
    #[pyo3(signature = (name, xi = "0", eta = "0", nu = "0"))]
    fn new(name: &str, xi: &str, eta: &str, nu: &str) -> PyResult<Self> {
        model::Generator::new(name, parse(xi)?, parse(eta)?, parse(nu)?)
            .map(Generator)
            .map_err(err)
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name.clone()
    }
}

/// Solution on a uniform grid with `steps_per_delay` nodes per delay.
#[pyclass(frozen)]
struct Trajectory(solver::Trajectory);

#[pymethods]
impl Trajectory {
    #[getter]
    fn tau(&self) -> f64 {
        self.0.tau()
    }

    #[getter]
    fn steps_per_delay(&self) -> usize {
        self.0.steps_per_delay()
    }

    #[getter]
    fn start_index(&self) -> usize {
        self.0.start_index()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn t(&self) -> Vec<f64> {
        self.0.nodes().iter().map(|n| n.t).collect()
    }

    #[getter]
    fn q(&self) -> Vec<f64> {
        self.0.nodes().iter().map(|n| n.q).collect()
    }

    /// `NaN` for Elsgolts runs.
    #[getter]
    fn p(&self) -> Vec<f64> {
        self.0.nodes().iter().map(|n| n.p).collect()
    }

    #[getter]
    fn qdot(&self) -> Vec<f64> {
        self.0.nodes().iter().map(|n| n.qd).collect()
    }

    #[getter]
    fn pdot(&self) -> Vec<f64> {
        self.0.nodes().iter().map(|n| n.pd).collect()
    }

    /// Largest `|I - I(first node)|` of a differential integral.
    fn drift(&self, integral: PyRef<'_, Expr>) -> PyResult<f64> {
        noether::drift(&integral.0, &self.0).map(|d| d.max).map_err(err)
    }
}

/// Off-shell check of the delay Hamiltonian identity; `(passed, worst)`.
#[pyfunction]
#[pyo3(signature = (h, g, samples = 100, tol = 1e-9, seed = 0))]
fn verify_identity(h: PyRef<'_, Hamiltonian>, g: PyRef<'_, Generator>, samples: usize, tol: f64, seed: u64) -> PyResult<(bool, f64)> {
    noether::verify_hamiltonian_identity(&h.0, &g.0, &Sampler::new(samples, tol, seed))
        .map(|c| (c.passed, c.worst))
        .map_err(err)
}

fn opt_str(e: &Option<expr::Expr>) -> Option<String> {
    e.as_ref().map(ToString::to_string)
}

fn drift_max(d: &Option<DriftReport>) -> Option<f64> {
    d.as_ref().map(|d| d.max)
}

/// Invariance, Noether quantities and, with a trajectory, drift.
#[pyfunction]
#[pyo3(signature = (h, g, trajectory = None, constraint = false, seed = 0))]
fn analyze<'py>(
    py: Python<'py>,
    h: PyRef<'_, Hamiltonian>,
    g: PyRef<'_, Generator>,
    trajectory: Option<PyRef<'_, Trajectory>>,
    constraint: bool,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let opts = AnalysisOptions {
        sampler: Sampler::new(100, 1e-9, seed),
        assert_constraint: constraint,
        ..AnalysisOptions::default()
    };
    let r = noether::analyze(&h.0, &g.0, &opts, trajectory.as_ref().map(|t| &t.0)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("name", &r.name)?;
    d.set_item("classification", r.invariance.classification.as_str())?;
    d.set_item("omega", r.invariance.omega.to_string())?;
    d.set_item("V", opt_str(&r.invariance.v))?;
    d.set_item("W", opt_str(&r.invariance.w))?;
    d.set_item("C", r.quantities.c.to_string())?;
    d.set_item("P", r.quantities.p_quantity.to_string())?;
    d.set_item("I", opt_str(&r.quantities.differential_integral))?;
    d.set_item("J", opt_str(&r.quantities.difference_integral))?;
    d.set_item("identity_ok", r.identity.passed)?;
    if let Some(s) = &r.drift {
        let dr = PyDict::new(py);
        dr.set_item("I", drift_max(&s.differential))?;
        dr.set_item("J", drift_max(&s.difference))?;
        dr.set_item("relation", drift_max(&s.relation))?;
        dr.set_item("constraint", drift_max(&s.constraint))?;
        d.set_item("drift", dr)?;
    }
    d.set_item("notes", r.notes)?;
    Ok(d)
}

/// Integration-free solution from the sum-form relations with constants
/// recovered from the history.
#[pyfunction]
#[pyo3(signature = (q, p, t_end, steps_per_delay, c_mid = 0.0, t0 = 0.0, tau = 1.0))]
fn recurse(q: &str, p: &str, t_end: f64, steps_per_delay: usize, c_mid: f64, t0: f64, tau: f64) -> PyResult<Trajectory> {
    let hist = History::new(t0, tau, parse(q)?, parse(p)?).map_err(err)?;
    let (a, b) = recover_constants(&hist, c_mid).map_err(err)?;
    let rel = SumFormRelation::new(c_mid, a, b).map_err(err)?;
    core_recurse(&rel, &hist, t_end, steps_per_delay)
        .map(|r| Trajectory(r.trajectory))
        .map_err(err)
}

/// Adds the classes and functions to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Expr>()?;
    m.add_class::<Lagrangian>()?;
    m.add_class::<Hamiltonian>()?;
    m.add_class::<Generator>()?;
    m.add_class::<Trajectory>()?;
    m.add_function(wrap_pyfunction!(verify_identity, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(recurse, m)?)?;
    Ok(())
}

#[pymodule]
fn delay_hamiltonian(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
