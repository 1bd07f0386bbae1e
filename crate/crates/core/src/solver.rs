//! Method-of-steps integration of the delay canonical equations and of the
//! Elsgolts equation on a grid commensurate with the delay.
//!
//! Each equation is evaluated at the base time `s = t - tau` and solved for
//! the newest derivative, which turns the advance-delay system into an ODE
//! with lags `tau` and `2 tau`. Steps never cross a knot `t0 + k tau`; values
//! at stage times between nodes come from cubic Hermite interpolation.

use thiserror::Error;

use crate::expr::{Expr, ExprError, JetPoint, Symbol};
use crate::model::{DelayHamiltonian, QuadraticLagrangian};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("alpha{0} must be nonzero to advance the canonical equations")]
    ZeroAlpha(usize),
    #[error("beta must be nonzero to advance the Elsgolts equation")]
    ZeroBeta,
    #[error("horizon {t_end} is not t0 + k*tau for a positive integer k (t0 = {t0}, tau = {tau})")]
    Horizon { t_end: f64, t0: f64, tau: f64 },
    #[error("at least 8 steps per delay are required, got {0}")]
    StepsPerDelay(usize),
    #[error("delay must be positive and finite, got {0}")]
    Delay(f64),
    #[error("history may depend on t only, found {0}")]
    HistorySymbol(Symbol),
    #[error("history is not finite at t = {t}")]
    HistoryValue { t: f64 },
    #[error("evaluation failed at t = {t}: {source}")]
    Eval {
        t: f64,
        #[source]
        source: ExprError,
    },
    #[error("solution blew up at t = {t}")]
    NonFinite { t: f64 },
}

/// Initial data on `[t0 - 2 tau, t0]` given as expressions in `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    pub t0: f64,
    pub tau: f64,
    pub q: Expr,
    pub p: Expr,
}

fn check_history_expr(e: &Expr) -> Result<(), SolverError> {
    match e.symbols().into_iter().find(|s| *s != Symbol::t(0)) {
        Some(s) => Err(SolverError::HistorySymbol(s)),
        None => Ok(()),
    }
}

fn eval_at(e: &Expr, tau: f64, t: f64) -> Result<f64, SolverError> {
    let v = e
        .eval(&JetPoint::new(tau, t))
        .map_err(|source| SolverError::Eval { t, source })?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(SolverError::HistoryValue { t })
    }
}

impl History {
    pub fn new(t0: f64, tau: f64, q: Expr, p: Expr) -> Result<History, SolverError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(SolverError::Delay(tau));
        }
        check_history_expr(&q)?;
        check_history_expr(&p)?;
        Ok(History { t0, tau, q, p })
    }

    /// Values and analytic derivatives `(q, p, qd, pd)` at `t`.
    pub fn sample(&self, t: f64) -> Result<[f64; 4], SolverError> {
        let d = |e: &Expr| e.total_derivative().expect("history is zeroth order");
        Ok([
            eval_at(&self.q, self.tau, t)?,
            eval_at(&self.p, self.tau, t)?,
            eval_at(&d(&self.q), self.tau, t)?,
            eval_at(&d(&self.p), self.tau, t)?,
        ])
    }
}

/// History for the second-order Elsgolts equation. The velocity just after
/// `t0` may differ from the history's derivative; the Hamiltonian system
/// fixes it through the momentum relation, so cross-checks pass it in.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianHistory {
    pub t0: f64,
    pub tau: f64,
    pub q: Expr,
    pub start_velocity: Option<f64>,
}

impl LagrangianHistory {
    pub fn new(t0: f64, tau: f64, q: Expr) -> Result<LagrangianHistory, SolverError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(SolverError::Delay(tau));
        }
        check_history_expr(&q)?;
        Ok(LagrangianHistory {
            t0,
            tau,
            q,
            start_velocity: None,
        })
    }

    pub fn with_start_velocity(mut self, v: f64) -> LagrangianHistory {
        self.start_velocity = Some(v);
        self
    }
}

/// One grid node. Derivatives are right limits, which is the side on which
/// the stepped equations hold at knots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub t: f64,
    pub q: f64,
    pub p: f64,
    pub qd: f64,
    pub pd: f64,
}

/// A solution on the uniform grid `t0 - 2 tau + i h` with `h = tau / n`.
///
/// `p` and `pd` are `NaN` for trajectories of the Elsgolts equation.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    tau: f64,
    h: f64,
    n: usize,
    t0: f64,
    nodes: Vec<Node>,
    /// Left limits of `(qd, pd)`, different from `nodes` only at knots.
    left: Vec<[f64; 2]>,
}

impl Trajectory {
    /// Builds a trajectory from nodes with continuous derivatives.
    pub fn from_nodes(tau: f64, n: usize, t0: f64, nodes: Vec<Node>) -> Trajectory {
        let left = nodes.iter().map(|x| [x.qd, x.pd]).collect();
        Trajectory {
            tau,
            h: tau / n as f64,
            n,
            t0,
            nodes,
            left,
        }
    }

    /// Like [`Trajectory::from_nodes`] with separate left limits of
    /// `(qd, pd)`.
    pub fn with_left_limits(
        tau: f64,
        n: usize,
        t0: f64,
        nodes: Vec<Node>,
        left: Vec<[f64; 2]>,
    ) -> Trajectory {
        assert_eq!(nodes.len(), left.len());
        Trajectory {
            tau,
            h: tau / n as f64,
            n,
            t0,
            nodes,
            left,
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn steps_per_delay(&self) -> usize {
        self.n
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Index of the node at `t0`.
    pub fn start_index(&self) -> usize {
        2 * self.n
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    pub fn left_derivatives(&self, i: usize) -> [f64; 2] {
        self.left[i]
    }

    pub fn same_grid(&self, other: &Trajectory) -> bool {
        self.n == other.n
            && self.len() == other.len()
            && self.tau == other.tau
            && self.t0 == other.t0
    }

    /// Second derivatives of `(q, p)` by differencing the stored first
    /// derivatives; one-sided at knots so no difference straddles a jump.
    fn second_derivatives(&self, i: usize) -> [f64; 2] {
        let last = self.len() - 1;
        let right = |k: usize| [self.nodes[k].qd, self.nodes[k].pd];
        let h = self.h;
        let fd = |a: [f64; 2], b: [f64; 2], c: [f64; 2], w: [f64; 3]| {
            [
                (w[0] * a[0] + w[1] * b[0] + w[2] * c[0]) / (2.0 * h),
                (w[0] * a[1] + w[1] * b[1] + w[2] * c[1]) / (2.0 * h),
            ]
        };
        if i.is_multiple_of(self.n) && i + 2 <= last {
            fd(right(i), right(i + 1), self.left[i + 2], [-3.0, 4.0, -1.0])
        } else if i == last {
            fd(self.left[i], right(i - 1), right(i - 2), [3.0, -4.0, 1.0])
        } else {
            let a = self.left[i + 1];
            let b = right(i - 1);
            [(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h)]
        }
    }

    /// The three-point jet centred on node `i`, with second derivatives
    /// from finite differences. `None` when a stencil point is off the grid.
    pub fn jet(&self, i: usize) -> Option<JetPoint> {
        if i < self.n || i + self.n >= self.len() {
            return None;
        }
        let mut j = JetPoint::new(self.tau, self.nodes[i].t);
        for s in -1i8..=1 {
            let k = (i as isize + s as isize * self.n as isize) as usize;
            let x = &self.nodes[k];
            let dd = self.second_derivatives(k);
            j.set(Symbol::q(s), x.q);
            j.set(Symbol::qd(s), x.qd);
            j.set(Symbol::new(crate::expr::Base::Q, s, 2), dd[0]);
            if !x.p.is_nan() {
                j.set(Symbol::p(s), x.p);
                j.set(Symbol::pd(s), x.pd);
                j.set(Symbol::new(crate::expr::Base::P, s, 2), dd[1]);
            }
        }
        Some(j)
    }

    /// Indices at which [`Trajectory::jet`] is defined.
    pub fn jet_range(&self) -> std::ops::Range<usize> {
        self.n..self.len().saturating_sub(self.n)
    }
}

/// Grid state for the generic stepper: values and derivatives of a pair of
/// unknowns, with separate left and right limits at knots.
struct Grid {
    tau: f64,
    h: f64,
    n: usize,
    t_start: f64,
    y_l: Vec<[f64; 2]>,
    y_r: Vec<[f64; 2]>,
    d_l: Vec<[f64; 2]>,
    d_r: Vec<[f64; 2]>,
}

/// Interpolated value and derivative at fraction `theta` of segment `m`.
type Lag = ([f64; 2], [f64; 2]);

impl Grid {
    fn t(&self, i: usize) -> f64 {
        self.t_start + i as f64 * self.h
    }

    fn lag(&self, m: usize, theta: f64) -> Lag {
        let (y0, y1, d0, d1) = (self.y_r[m], self.y_l[m + 1], self.d_r[m], self.d_l[m + 1]);
        let h = self.h;
        let th = theta;
        let h00 = 2.0 * th.powi(3) - 3.0 * th * th + 1.0;
        let h10 = th.powi(3) - 2.0 * th * th + th;
        let h01 = -2.0 * th.powi(3) + 3.0 * th * th;
        let h11 = th.powi(3) - th * th;
        let g0 = (6.0 * th * th - 6.0 * th) / h;
        let g10 = 3.0 * th * th - 4.0 * th + 1.0;
        let g11 = 3.0 * th * th - 2.0 * th;
        let mut v = [0.0; 2];
        let mut dv = [0.0; 2];
        for k in 0..2 {
            v[k] = h00 * y0[k] + h10 * h * d0[k] + h01 * y1[k] + h11 * h * d1[k];
            dv[k] = g0 * (y0[k] - y1[k]) + g10 * d0[k] + g11 * d1[k];
        }
        (v, dv)
    }

    /// Integrates `intervals` delay intervals past `t0`. `rhs` receives the
    /// time, the state and the lags at `t - tau` and `t - 2 tau`.
    /// `knot` may replace the right limit of the state at each knot.
    fn run<F, K>(&mut self, intervals: usize, rhs: F, knot: K) -> Result<(), SolverError>
    where
        F: Fn(f64, [f64; 2], Lag, Lag) -> Result<[f64; 2], SolverError>,
        K: Fn(&Grid, usize) -> [f64; 2],
    {
        let n = self.n;
        let axpy = |y: [f64; 2], a: f64, k: [f64; 2]| [y[0] + a * k[0], y[1] + a * k[1]];
        for k in 0..intervals {
            let i0 = 2 * n + k * n;
            self.y_r[i0] = knot(self, i0);
            let f0 = rhs(self.t(i0), self.y_r[i0], self.lag(i0 - n, 0.0), self.lag(i0 - 2 * n, 0.0))?;
            self.d_r[i0] = f0;
            let mut y = self.y_r[i0];
            for j in 0..n {
                let i = i0 + j;
                let (t, h) = (self.t(i), self.h);
                let k1 = self.d_r[i];
                let (a, b) = (self.lag(i - n, 0.5), self.lag(i - 2 * n, 0.5));
                let k2 = rhs(t + 0.5 * h, axpy(y, 0.5 * h, k1), a, b)?;
                let k3 = rhs(t + 0.5 * h, axpy(y, 0.5 * h, k2), a, b)?;
                let (a, b) = (self.lag(i - n, 1.0), self.lag(i - 2 * n, 1.0));
                let k4 = rhs(t + h, axpy(y, h, k3), a, b)?;
                for c in 0..2 {
                    y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
                }
                if !(y[0].is_finite() && y[1].is_finite()) {
                    return Err(SolverError::NonFinite { t: t + h });
                }
                let d = rhs(t + h, y, a, b)?;
                self.y_l.push(y);
                self.y_r.push(y);
                self.d_l.push(d);
                self.d_r.push(d);
            }
        }
        // Right limit at the final knot, as if one more interval started.
        let last = self.y_r.len() - 1;
        self.d_r[last] = rhs(
            self.t(last),
            self.y_r[last],
            self.lag(last - n, 0.0),
            self.lag(last - 2 * n, 0.0),
        )?;
        Ok(())
    }
}

pub(crate) fn intervals(t0: f64, tau: f64, t_end: f64, n: usize) -> Result<usize, SolverError> {
    if n < 8 {
        return Err(SolverError::StepsPerDelay(n));
    }
    let k = (t_end - t0) / tau;
    let kr = k.round();
    if !(kr >= 1.0 && (k - kr).abs() <= 1e-9 * kr.max(1.0)) {
        return Err(SolverError::Horizon { t_end, t0, tau });
    }
    Ok(kr as usize)
}

fn new_grid(t0: f64, tau: f64, n: usize) -> Grid {
    Grid {
        tau,
        h: tau / n as f64,
        n,
        t_start: t0 - 2.0 * tau,
        y_l: Vec::new(),
        y_r: Vec::new(),
        d_l: Vec::new(),
        d_r: Vec::new(),
    }
}

fn base_jet(tau: f64, s: f64, minus: [f64; 2], mid: [f64; 2], plus: [f64; 2]) -> JetPoint {
    JetPoint::new(tau, s)
        .with(Symbol::q(-1), minus[0])
        .with(Symbol::q(0), mid[0])
        .with(Symbol::q(1), plus[0])
        .with(Symbol::p(-1), minus[1])
        .with(Symbol::p(0), mid[1])
        .with(Symbol::p(1), plus[1])
}

/// Integrates the delay canonical equations from `hist` to `t_end` with
/// `n` steps per delay.
pub fn step_hamiltonian(
    h: &DelayHamiltonian,
    hist: &History,
    t_end: f64,
    n: usize,
) -> Result<Trajectory, SolverError> {
    let [a1, a2, a3, a4] = h.alphas;
    if a1 == 0.0 {
        return Err(SolverError::ZeroAlpha(1));
    }
    if a4 == 0.0 {
        return Err(SolverError::ZeroAlpha(4));
    }
    let k = intervals(hist.t0, hist.tau, t_end, n)?;
    let tau = hist.tau;
    let mut g = new_grid(hist.t0, tau, n);
    for i in 0..=2 * n {
        let [q, p, qd, pd] = hist.sample(g.t(i))?;
        g.y_l.push([q, p]);
        g.y_r.push([q, p]);
        g.d_l.push([qd, pd]);
        g.d_r.push([qd, pd]);
    }
    let both = &h.h + h.h_plus();
    let phi_p = both.partial(Symbol::p(0));
    let phi_q = both.partial(Symbol::q(0));
    let a23 = a2 + a3;
    g.run(k, |t, y, (v1, d1), (v2, d2)| {
        let s = t - tau;
        let jet = base_jet(tau, s, v2, v1, y);
        let ev = |e: &Expr| e.eval(&jet).map_err(|source| SolverError::Eval { t, source });
        let fp = ev(&phi_p)?;
        let fq = ev(&phi_q)?;
        Ok([
            (fp - a23 * d1[0] - a4 * d2[0]) / a1,
            (-fq - a23 * d1[1] - a1 * d2[1]) / a4,
        ])
    }, |g, i| g.y_r[i])?;
    Ok(finish(g, hist.t0, false))
}

fn finish(g: Grid, t0: f64, lagrangian: bool) -> Trajectory {
    let mut nodes = Vec::with_capacity(g.y_r.len());
    let mut left = Vec::with_capacity(g.y_r.len());
    for i in 0..g.y_r.len() {
        let t = g.t(i);
        if lagrangian {
            nodes.push(Node {
                t,
                q: g.y_r[i][0],
                p: f64::NAN,
                qd: g.y_r[i][1],
                pd: f64::NAN,
            });
            left.push([g.y_l[i][1], f64::NAN]);
        } else {
            nodes.push(Node {
                t,
                q: g.y_r[i][0],
                p: g.y_r[i][1],
                qd: g.d_r[i][0],
                pd: g.d_r[i][1],
            });
            left.push(g.d_l[i]);
        }
    }
    Trajectory {
        tau: g.tau,
        h: g.h,
        n: g.n,
        t0,
        nodes,
        left,
    }
}

/// Integrates the Elsgolts equation of a quadratic Lagrangian, written as a
/// first-order system in `(q, qd)`.
pub fn step_elsgolts(
    l: &QuadraticLagrangian,
    hist: &LagrangianHistory,
    t_end: f64,
    n: usize,
) -> Result<Trajectory, SolverError> {
    if l.beta == 0.0 {
        return Err(SolverError::ZeroBeta);
    }
    let k = intervals(hist.t0, hist.tau, t_end, n)?;
    let tau = hist.tau;
    let d = |e: &Expr| e.total_derivative().expect("history is zeroth order");
    let (qd, qdd) = (d(&hist.q), d(&d(&hist.q)));
    let mut g = new_grid(hist.t0, tau, n);
    for i in 0..=2 * n {
        let t = g.t(i);
        let y = [eval_at(&hist.q, tau, t)?, eval_at(&qd, tau, t)?];
        let dy = [y[1], eval_at(&qdd, tau, t)?];
        g.y_l.push(y);
        g.y_r.push(y);
        g.d_l.push(dy);
        g.d_r.push(dy);
    }
    if let Some(v) = hist.start_velocity {
        g.y_r[2 * n][1] = v;
    }
    let phi_plus = l.phi.shift(1).expect("phi has no advanced symbols");
    let force = (&l.phi + phi_plus).partial(Symbol::q(0));
    let (ag, beta) = (l.alpha + l.gamma, l.beta);
    g.run(k, |t, y, (v1, d1), (v2, d2)| {
        let s = t - tau;
        let jet = JetPoint::new(tau, s)
            .with(Symbol::q(-1), v2[0])
            .with(Symbol::q(0), v1[0])
            .with(Symbol::q(1), y[0]);
        let f = force
            .eval(&jet)
            .map_err(|source| SolverError::Eval { t, source })?;
        Ok([y[1], -(ag * d1[1] + beta * d2[1] + f) / beta])
    }, |g, i| {
        // Velocity jumps propagate along the stencil: integrating the
        // equation across a knot gives beta dv(t) + (alpha+gamma) dv(s)
        // + beta dv(s - tau) = 0.
        let mut y = g.y_r[i];
        if i > 2 * n {
            let jump = |k: usize| g.y_r[k][1] - g.y_l[k][1];
            y[1] = g.y_l[i][1] - (ag * jump(i - n) + beta * jump(i - 2 * n)) / beta;
        }
        y
    })?;
    Ok(finish(g, hist.t0, true))
}

/// Residuals of the three variational equations at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualRow {
    pub t: f64,
    pub rp: f64,
    pub rq: f64,
    pub rt: f64,
}

/// `Rp`, `Rq`, `Rt` at every node whose stencil is on the grid. `Rt` uses
/// finite-difference second derivatives and is reported, not enforced.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub first_index: usize,
    pub rows: Vec<ResidualRow>,
}

impl ResidualReport {
    pub fn max_abs(&self, f: impl Fn(&ResidualRow) -> f64) -> f64 {
        self.rows.iter().map(|r| f(r).abs()).fold(0.0, f64::max)
    }

    /// Row for node `i`, if it has one.
    pub fn at(&self, i: usize) -> Option<&ResidualRow> {
        i.checked_sub(self.first_index).and_then(|k| self.rows.get(k))
    }
}

pub fn residual_report(traj: &Trajectory, h: &DelayHamiltonian) -> Result<ResidualReport, SolverError> {
    let r = h.variational_residuals();
    let range = traj.jet_range();
    let mut rows = Vec::with_capacity(range.len());
    for i in range.clone() {
        let jet = traj.jet(i).expect("index in jet range");
        let t = jet.t();
        let ev = |e: &Expr| e.eval(&jet).map_err(|source| SolverError::Eval { t, source });
        rows.push(ResidualRow {
            t,
            rp: ev(&r.rp)?,
            rq: ev(&r.rq)?,
            rt: ev(&r.rt)?,
        });
    }
    Ok(ResidualReport {
        first_index: range.start,
        rows,
    })
}
