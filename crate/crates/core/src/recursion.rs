//! Integration-free solution of the Cauchy problem from a pair of sum-form
//! first-integral relations
//! `q+ + c q + q- = -A cos t + B sin t`, `p+ + c p + p- = A sin t + B cos t`
//! with middle coefficient `c` in `{0, 2}`.

use thiserror::Error;

use crate::expr::Expr;
use crate::solver::{intervals, History, Node, SolverError, Trajectory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecursionError {
    #[error("middle coefficient must be 0 or 2, got {0}")]
    MiddleCoefficient(f64),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("trajectories are on different grids")]
    GridMismatch,
}

/// The relation pair with its constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumFormRelation {
    pub c_mid: f64,
    pub a: f64,
    pub b: f64,
}

impl SumFormRelation {
    pub fn new(c_mid: f64, a: f64, b: f64) -> Result<SumFormRelation, RecursionError> {
        if c_mid != 0.0 && c_mid != 2.0 {
            return Err(RecursionError::MiddleCoefficient(c_mid));
        }
        Ok(SumFormRelation { c_mid, a, b })
    }

    /// `-A cos t + B sin t`.
    pub fn g_q(&self) -> Expr {
        let t = Expr::t(0);
        Expr::real(-self.a) * Expr::cos(t.clone()) + Expr::real(self.b) * Expr::sin(t)
    }

    /// `A sin t + B cos t`.
    pub fn g_p(&self) -> Expr {
        let t = Expr::t(0);
        Expr::real(self.a) * Expr::sin(t.clone()) + Expr::real(self.b) * Expr::cos(t)
    }

    fn values(&self, t: f64) -> [f64; 4] {
        let (s, c) = t.sin_cos();
        [
            -self.a * c + self.b * s,
            self.a * s + self.b * c,
            self.a * s + self.b * c,
            self.a * c - self.b * s,
        ]
    }
}

/// Constants `(A, B)` from the relations at the base time `t0 - tau`, the
/// only base time whose three points lie in the history.
pub fn recover_constants(hist: &History, c_mid: f64) -> Result<(f64, f64), RecursionError> {
    SumFormRelation::new(c_mid, 0.0, 0.0)?;
    let tau = hist.tau;
    let s = hist.t0 - tau;
    let [q0, p0, ..] = hist.sample(hist.t0)?;
    let [q1, p1, ..] = hist.sample(s)?;
    let [q2, p2, ..] = hist.sample(s - tau)?;
    let qs = q0 + c_mid * q1 + q2;
    let ps = p0 + c_mid * p1 + p2;
    // [[-cos s, sin s], [sin s, cos s]] is its own inverse.
    let (sn, cs) = s.sin_cos();
    Ok((-cs * qs + sn * ps, sn * qs + cs * ps))
}

/// The closed forms for `c = 0` and `t0 = 0`:
/// `A = -cos tau (q(0) + q(-2 tau)) - sin tau (p(0) + p(-2 tau))`,
/// `B = -sin tau (q(0) + q(-2 tau)) + cos tau (p(0) + p(-2 tau))`.
pub fn constants_closed_form(hist: &History) -> Result<(f64, f64), RecursionError> {
    let tau = hist.tau;
    let [q0, p0, ..] = hist.sample(0.0)?;
    let [q2, p2, ..] = hist.sample(-2.0 * tau)?;
    let (sn, cs) = tau.sin_cos();
    Ok((
        -cs * (q0 + q2) - sn * (p0 + p2),
        -sn * (q0 + q2) + cs * (p0 + p2),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecursionResult {
    pub trajectory: Trajectory,
    /// `|q_rec(t0) - q(t0)|` and the same for `p`.
    pub seam_value_jump: f64,
    /// Jump of `(qd, pd)` at `t0`; nonzero jumps are legitimate but noted.
    pub seam_derivative_jump: f64,
    pub warnings: Vec<String>,
}

/// Propagates the history by `q(t) = g_q(t - tau) - c q(t - tau) - q(t - 2 tau)`
/// and the same for `p`, node by node. Derivatives follow the same
/// recurrence, with left and right limits kept apart at knots.
pub fn recurse(
    rel: &SumFormRelation,
    hist: &History,
    t_end: f64,
    n: usize,
) -> Result<RecursionResult, RecursionError> {
    let k = intervals(hist.t0, hist.tau, t_end, n)?;
    let tau = hist.tau;
    let h = tau / n as f64;
    let t_start = hist.t0 - 2.0 * tau;
    let total = 2 * n + k * n + 1;
    let c = rel.c_mid;
    let mut nodes: Vec<Node> = Vec::with_capacity(total);
    let mut left: Vec<[f64; 2]> = Vec::with_capacity(total);
    for i in 0..=2 * n {
        let t = t_start + i as f64 * h;
        let [q, p, qd, pd] = hist.sample(t)?;
        nodes.push(Node { t, q, p, qd, pd });
        left.push([qd, pd]);
    }
    let step = |nodes: &[Node], left: &[[f64; 2]], i: usize| {
        let t = t_start + i as f64 * h;
        let [gq, gp, gqd, gpd] = rel.values(t - tau);
        let (a, b) = (&nodes[i - n], &nodes[i - 2 * n]);
        let (la, lb) = (left[i - n], left[i - 2 * n]);
        let node = Node {
            t,
            q: gq - c * a.q - b.q,
            p: gp - c * a.p - b.p,
            qd: gqd - c * a.qd - b.qd,
            pd: gpd - c * a.pd - b.pd,
        };
        (node, [gqd - c * la[0] - lb[0], gpd - c * la[1] - lb[1]])
    };
    let (at_seam, _) = step(&nodes, &left, 2 * n);
    let hist_seam = nodes[2 * n];
    let seam_value_jump = (at_seam.q - hist_seam.q).abs().max((at_seam.p - hist_seam.p).abs());
    let seam_derivative_jump = (at_seam.qd - hist_seam.qd)
        .abs()
        .max((at_seam.pd - hist_seam.pd).abs());
    nodes[2 * n].qd = at_seam.qd;
    nodes[2 * n].pd = at_seam.pd;
    for i in 2 * n + 1..total {
        let (node, l) = step(&nodes, &left, i);
        nodes.push(node);
        left.push(l);
    }
    let mut warnings = Vec::new();
    let scale = 1.0 + hist_seam.q.abs().max(hist_seam.p.abs());
    if seam_value_jump > 1e-9 * scale {
        warnings.push(format!(
            "history is inconsistent with the relations at t0: jump {seam_value_jump:.3e}"
        ));
    }
    if seam_derivative_jump > 1e-9 * scale {
        warnings.push(format!(
            "derivative jumps by {seam_derivative_jump:.3e} at t0 and propagates to later knots"
        ));
    }
    Ok(RecursionResult {
        trajectory: Trajectory::with_left_limits(tau, n, hist.t0, nodes, left),
        seam_value_jump,
        seam_derivative_jump,
        warnings,
    })
}

/// Largest residual of the two relations over base nodes from `t0 - tau`.
pub fn relation_residual(rel: &SumFormRelation, traj: &Trajectory) -> f64 {
    let n = traj.steps_per_delay();
    let mut worst = 0.0f64;
    for i in traj.start_index() - n..traj.len().saturating_sub(n) {
        let (a, b, c) = (traj.node(i - n), traj.node(i), traj.node(i + n));
        let [gq, gp, ..] = rel.values(b.t);
        let rq = c.q + rel.c_mid * b.q + a.q - gq;
        let rp = c.p + rel.c_mid * b.p + a.p - gp;
        worst = worst.max(rq.abs()).max(rp.abs());
    }
    worst
}

/// Difference statistics for one component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentDiff {
    pub max: f64,
    /// Discrete `L2` norm, `sqrt(h sum d^2)`.
    pub l2: f64,
    pub t_max: f64,
}

/// Per-component differences; `None` where either side lacks the
/// component (the Elsgolts solver has no momentum).
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub q: Option<ComponentDiff>,
    pub p: Option<ComponentDiff>,
    pub qd: Option<ComponentDiff>,
    pub pd: Option<ComponentDiff>,
}

fn component(a: &Trajectory, b: &Trajectory, f: impl Fn(&Node) -> f64) -> Option<ComponentDiff> {
    let mut out = ComponentDiff {
        max: 0.0,
        l2: 0.0,
        t_max: a.node(0).t,
    };
    for (x, y) in a.nodes().iter().zip(b.nodes()) {
        let (u, v) = (f(x), f(y));
        if u.is_nan() || v.is_nan() {
            return None;
        }
        let d = (u - v).abs();
        if d > out.max {
            out.max = d;
            out.t_max = x.t;
        }
        out.l2 += d * d;
    }
    out.l2 = (out.l2 * a.h()).sqrt();
    Some(out)
}

pub fn compare(a: &Trajectory, b: &Trajectory) -> Result<ComparisonReport, RecursionError> {
    if !a.same_grid(b) {
        return Err(RecursionError::GridMismatch);
    }
    Ok(ComparisonReport {
        q: component(a, b, |x| x.q),
        p: component(a, b, |x| x.p),
        qd: component(a, b, |x| x.qd),
        pd: component(a, b, |x| x.pd),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub error: f64,
    /// Observed order against the previous row.
    pub order: Option<f64>,
}

/// Observed orders for errors measured at increasing `n`.
pub fn convergence_table(runs: &[(usize, f64)]) -> Vec<ConvergenceRow> {
    runs.iter()
        .enumerate()
        .map(|(k, &(n, error))| ConvergenceRow {
            n,
            error,
            order: (k > 0).then(|| {
                let (n0, e0) = runs[k - 1];
                (e0 / error).ln() / (n as f64 / n0 as f64).ln()
            }),
        })
        .collect()
}
