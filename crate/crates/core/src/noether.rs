//! Invariance of delay Hamiltonians, the Hamiltonian identity and
//! Noether-type first integrals.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::expr::{
    random_jet, Base, Expr, ExprError, Num, SampleError, Sampler, Symbol, ZeroCheck,
};
use crate::model::{variational_derivative, variational_derivative_t, DelayHamiltonian, Generator};
use crate::solver::Trajectory;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NoetherError {
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("xi must depend on t only, got {0}")]
    XiNotTimeOnly(Expr),
    #[error("trajectory has no node where the expression can be evaluated")]
    InsufficientHistory,
    #[error("evaluation failed at t = {t}: {source}")]
    Eval {
        t: f64,
        #[source]
        source: ExprError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// `Omega` vanishes identically.
    Variational,
    /// `Omega = D(V) + (1 - S+) W` identically.
    Divergence,
    None,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Variational => "Variational",
            Classification::Divergence => "Divergence",
            Classification::None => "None",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceResidual {
    pub omega: Expr,
    pub classification: Classification,
    pub v: Option<Expr>,
    pub w: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoetherQuantities {
    pub c: Expr,
    pub p_quantity: Expr,
    pub differential_integral: Option<Expr>,
    pub difference_integral: Option<Expr>,
}

fn d(e: &Expr) -> Result<Expr, ExprError> {
    e.total_derivative()
}

fn a(h: &DelayHamiltonian, i: usize) -> Expr {
    Expr::real(h.alphas[i - 1])
}

/// `Omega` as displayed for the invariance criterion.
pub fn omega(h: &DelayHamiltonian, g: &Generator) -> Expr {
    let gm = g.shifted(-1);
    let (qd, qdm) = (Expr::qd(0), Expr::qd(-1));
    let (p, pm) = (Expr::p(0), Expr::p(-1));
    let de = d(&g.eta).expect("point function");
    let dem = d(&gm.eta).expect("point function");
    let dxi = d(&g.xi).expect("point function");
    let dxim = d(&gm.xi).expect("point function");
    let hm = |s: Symbol| h.h.partial(s);
    &gm.nu * (a(h, 1) * &qd + a(h, 2) * &qdm)
        + &pm * (a(h, 1) * &de + a(h, 2) * &dem)
        + &g.nu * (a(h, 3) * &qd + a(h, 4) * &qdm)
        + &p * (a(h, 3) * &de + a(h, 4) * &dem)
        + (a(h, 2) * &pm + a(h, 4) * &p) * &qdm * (&dxi - dxim)
        - &g.xi * hm(Symbol::t(0))
        - &g.eta * hm(Symbol::q(0))
        - &g.nu * hm(Symbol::p(0))
        - &gm.xi * hm(Symbol::t(-1))
        - &gm.eta * hm(Symbol::q(-1))
        - &gm.nu * hm(Symbol::p(-1))
        - &h.h * dxi
}

/// Applies the prolonged generator, acting at all three stencil points up
/// to second derivatives, to `f`.
pub fn prolonged_apply(g: &Generator, f: &Expr) -> Result<Expr, ExprError> {
    let (zq, zp) = g.prolong();
    let dxi = d(&g.xi)?;
    let q2 = Expr::sym(Symbol::new(Base::Q, 0, 2));
    let p2 = Expr::sym(Symbol::new(Base::P, 0, 2));
    let zq2 = d(&zq)? - q2 * &dxi;
    let zp2 = d(&zp)? - p2 * &dxi;
    let coeffs = [
        (Base::T, 0, &g.xi),
        (Base::Q, 0, &g.eta),
        (Base::P, 0, &g.nu),
        (Base::Q, 1, &zq),
        (Base::P, 1, &zp),
        (Base::Q, 2, &zq2),
        (Base::P, 2, &zp2),
    ];
    let mut out = Expr::zero();
    for s in -1i8..=1 {
        for (base, order, c) in coeffs {
            let sym = Symbol::new(base, s, order);
            if !f.depends_on(sym) {
                continue;
            }
            let c = if s == 0 { c.clone() } else { c.shift(s)? };
            out = out + c * f.partial(sym);
        }
    }
    Ok(out)
}

/// `X(H~) + H~ D(xi)` straight from the prolongation; an independent check
/// on [`omega`].
pub fn omega_direct(h: &DelayHamiltonian, g: &Generator) -> Result<Expr, ExprError> {
    let ht = h.tilde_h();
    Ok(prolonged_apply(g, &ht)? + &ht * d(&g.xi)?)
}

/// `C` and `P` of the Hamiltonian identity. Integrals are left empty.
pub fn c_and_p(h: &DelayHamiltonian, g: &Generator) -> NoetherQuantities {
    let gm = g.shifted(-1);
    let (p, pm, pp) = (Expr::p(0), Expr::p(-1), Expr::p(1));
    let (qd, qdm) = (Expr::qd(0), Expr::qd(-1));
    let a23 = Expr::real(h.alphas[1] + h.alphas[2]);
    let c = &g.eta * (a(h, 4) * &pp + a23 * &p + a(h, 1) * &pm)
        - &g.xi
            * (a(h, 2) * (&p * &qd - &pm * &qdm) + a(h, 4) * (&pp * &qd - &p * &qdm) + &h.h);
    let lever = a(h, 2) * &pm + a(h, 4) * &p;
    let hm = |s: Symbol| h.h.partial(s);
    let p_quantity = &lever * d(&gm.eta).expect("point function")
        + &gm.nu * (a(h, 1) * &qd + a(h, 2) * &qdm)
        - lever * &qdm * d(&gm.xi).expect("point function")
        - &gm.xi * hm(Symbol::t(-1))
        - &gm.eta * hm(Symbol::q(-1))
        - &gm.nu * hm(Symbol::p(-1));
    NoetherQuantities {
        c,
        p_quantity,
        differential_integral: None,
        difference_integral: None,
    }
}

/// `Omega - [xi Rt + eta Rq + nu Rp + D(C) + P - S+(P)]`, which vanishes
/// identically.
pub fn identity_residual(h: &DelayHamiltonian, g: &Generator, nq: &NoetherQuantities) -> Result<Expr, ExprError> {
    Ok(omega(h, g)
        - (h.local_extremal_residual(g) + d(&nq.c)? + &nq.p_quantity - nq.p_quantity.shift(1)?))
}

pub fn verify_hamiltonian_identity(
    h: &DelayHamiltonian,
    g: &Generator,
    sampler: &Sampler,
) -> Result<ZeroCheck, NoetherError> {
    let nq = c_and_p(h, g);
    Ok(sampler.is_zero(&identity_residual(h, g, &nq)?)?)
}

/// `D(V) + (1 - S+) W`.
pub fn divergence(v: &Expr, w: &Expr) -> Result<Expr, ExprError> {
    Ok(d(v)? + w - w.shift(1)?)
}

/// Classifies `g`, trying a dictionary fit for `V` when none is supplied.
pub fn classify_invariance(
    h: &DelayHamiltonian,
    g: &Generator,
    v: Option<&Expr>,
    w: Option<&Expr>,
    sampler: &Sampler,
) -> Result<InvarianceResidual, NoetherError> {
    let om = omega(h, g);
    let result = |classification, v: Option<Expr>, w: Option<Expr>| InvarianceResidual {
        omega: om.clone(),
        classification,
        v,
        w,
    };
    if sampler.is_zero(&om)?.passed {
        return Ok(result(Classification::Variational, None, None));
    }
    if v.is_some() || w.is_some() {
        let v = v.cloned().unwrap_or_else(Expr::zero);
        let w = w.cloned().unwrap_or_else(Expr::zero);
        if sampler.is_zero(&(&om - divergence(&v, &w)?))?.passed {
            return Ok(result(Classification::Divergence, Some(v), Some(w)));
        }
    }
    match fit_total_derivative(&om, sampler)? {
        Some(v) => Ok(result(Classification::Divergence, Some(v), Some(Expr::zero()))),
        None => Ok(result(Classification::None, None, None)),
    }
}

/// `I = C - V`.
pub fn differential_integral(nq: &NoetherQuantities, v: &Expr) -> Expr {
    &nq.c - v
}

/// `J = P - W`.
pub fn difference_integral(nq: &NoetherQuantities, w: &Expr) -> Expr {
    &nq.p_quantity - w
}

const TIME_FACTORS: usize = 6;

fn time_factors() -> [Expr; TIME_FACTORS] {
    let (t, tm) = (Expr::t(0), Expr::t(-1));
    [
        Expr::one(),
        Expr::sin(t.clone()),
        Expr::cos(t.clone()),
        Expr::sin(tm.clone()),
        Expr::cos(tm),
        t,
    ]
}

fn dictionary(vars: &[Expr]) -> Vec<Expr> {
    let mut monomials: Vec<Expr> = vars.to_vec();
    for i in 0..vars.len() {
        for j in i..vars.len() {
            monomials.push(&vars[i] * &vars[j]);
        }
    }
    let mut out = Vec::with_capacity(monomials.len() * TIME_FACTORS);
    for f in time_factors() {
        for m in &monomials {
            out.push(&f * m);
        }
    }
    out
}

/// Candidates for `V`: point values at the three stencil points and their
/// pairwise products, times `1, sin t, cos t, sin tm, cos tm, t`.
pub fn v_dictionary() -> Vec<Expr> {
    let vars: Vec<Expr> = [-1i8, 0, 1]
        .iter()
        .flat_map(|&s| [Expr::q(s), Expr::p(s)])
        .collect();
    dictionary(&vars)
}

/// Candidates for `W`: values and first derivatives at `t` and `t - tau`,
/// so that `S+(W)` stays on the stencil.
pub fn w_dictionary() -> Vec<Expr> {
    let vars: Vec<Expr> = [-1i8, 0]
        .iter()
        .flat_map(|&s| [Expr::q(s), Expr::p(s), Expr::qd(s), Expr::pd(s)])
        .collect();
    dictionary(&vars)
}

/// Finds `V` in the dictionary with `D(V) = target` identically.
pub fn fit_total_derivative(target: &Expr, sampler: &Sampler) -> Result<Option<Expr>, NoetherError> {
    fit(target, &v_dictionary(), &|e: &Expr| e.total_derivative(), sampler)
}

/// Finds `W` in the dictionary with `(S+ - 1) W = target` identically.
pub fn fit_difference(target: &Expr, sampler: &Sampler) -> Result<Option<Expr>, NoetherError> {
    fit(target, &w_dictionary(), &|e: &Expr| Ok(e.shift(1)? - e), sampler)
}

/// Least-squares fit of `target` against the images of `basis` under the
/// linear operator `op`, followed by rational snapping and an independent
/// sampled re-check. Only identities are accepted.
fn fit(
    target: &Expr,
    basis: &[Expr],
    op: &dyn Fn(&Expr) -> Result<Expr, ExprError>,
    sampler: &Sampler,
) -> Result<Option<Expr>, NoetherError> {
    let seed = sampler.seed.wrapping_add(0x5eed);
    let check = Sampler::new(sampler.samples, sampler.tol, seed.wrapping_add(1));
    if check.is_zero(target)?.passed {
        return Ok(Some(Expr::zero()));
    }
    let images = basis.iter().map(op).collect::<Result<Vec<_>, _>>()?;
    let cols = basis.len();
    let rows = 2 * cols + 50;
    let mut a = DMatrix::<f64>::zeros(rows, cols);
    let mut b = DVector::<f64>::zeros(rows);
    for r in 0..rows {
        let jet = random_jet(seed, r);
        b[r] = target.eval(&jet)?;
        for (c, img) in images.iter().enumerate() {
            a[(r, c)] = img.eval(&jet)?;
        }
    }
    let norms: Vec<f64> = (0..cols).map(|c| a.column(c).norm()).collect();
    for (c, n) in norms.iter().enumerate() {
        if *n > 0.0 {
            a.column_mut(c).scale_mut(1.0 / n);
        }
    }
    let svd = a.clone().svd(true, true);
    let cutoff = 1e-10 * svd.singular_values.max();
    let x = match svd.solve(&b, cutoff) {
        Ok(x) => x,
        Err(_) => return Ok(None),
    };
    if (&a * &x - &b).norm() > 1e-7 * (1.0 + b.norm()) {
        return Ok(None);
    }
    let raw: Vec<f64> = (0..cols)
        .map(|c| if norms[c] > 0.0 { x[c] / norms[c] } else { 0.0 })
        .collect();
    let build = |coef: &dyn Fn(f64) -> Num| {
        Expr::sum(
            raw.iter()
                .zip(basis)
                .filter(|(c, _)| c.abs() > 1e-9)
                .map(|(c, m)| Expr::num(coef(*c)) * m),
        )
    };
    let snapped = build(&|c| Num::snap(c, 12, 1e-8));
    for cand in [snapped, build(&Num::Float)] {
        if check.is_zero(&(target - op(&cand)?))?.passed {
            return Ok(Some(cand));
        }
    }
    Ok(None)
}

/// Maximum deviation of a monitored quantity along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftReport {
    pub max: f64,
    /// Time of the largest deviation.
    pub t_max: f64,
    /// Value at the first node, for differential integrals.
    pub reference: f64,
    pub nodes: usize,
}

/// Values of `e` at nodes from `t0 - tau` on, where every stencil point is
/// available. Nodes before `t0 - tau` are history, where the equations need
/// not hold.
fn values(e: &Expr, traj: &Trajectory) -> Result<Vec<Option<(f64, f64)>>, NoetherError> {
    let start = traj.start_index() - traj.steps_per_delay();
    let mut out = vec![None; traj.len()];
    for (i, slot) in out.iter_mut().enumerate().skip(start) {
        let Some(jet) = traj.jet(i) else { continue };
        match e.eval(&jet) {
            Ok(v) => *slot = Some((jet.t(), v)),
            Err(ExprError::MissingSymbol(_)) => {}
            Err(source) => return Err(NoetherError::Eval { t: jet.t(), source }),
        }
    }
    Ok(out)
}

/// `max |I(t) - I(t_first)|` over the trajectory.
pub fn drift(i: &Expr, traj: &Trajectory) -> Result<DriftReport, NoetherError> {
    let vals: Vec<(f64, f64)> = values(i, traj)?.into_iter().flatten().collect();
    let &(t_first, reference) = vals.first().ok_or(NoetherError::InsufficientHistory)?;
    let mut rep = DriftReport {
        max: 0.0,
        t_max: t_first,
        reference,
        nodes: vals.len(),
    };
    for (t, v) in vals {
        let dev = (v - reference).abs();
        if dev > rep.max || dev.is_nan() {
            rep.max = dev;
            rep.t_max = t;
        }
    }
    Ok(rep)
}

/// `max |J(t + tau) - J(t)|` over the trajectory.
pub fn difference_drift(j: &Expr, traj: &Trajectory) -> Result<DriftReport, NoetherError> {
    let vals = values(j, traj)?;
    let n = traj.steps_per_delay();
    let mut rep = DriftReport {
        max: 0.0,
        t_max: f64::NAN,
        reference: f64::NAN,
        nodes: 0,
    };
    for k in 0..vals.len().saturating_sub(n) {
        if let (Some((t, a)), Some((_, b))) = (vals[k], vals[k + n]) {
            let dev = (b - a).abs();
            if rep.nodes == 0 || dev > rep.max || dev.is_nan() {
                rep.max = dev;
                rep.t_max = t;
            }
            rep.nodes += 1;
        }
    }
    if rep.nodes == 0 {
        return Err(NoetherError::InsufficientHistory);
    }
    Ok(rep)
}

/// `max |e|` along the trajectory, for residuals that vanish on solutions.
pub fn residual_drift(e: &Expr, traj: &Trajectory) -> Result<DriftReport, NoetherError> {
    let vals: Vec<(f64, f64)> = values(e, traj)?.into_iter().flatten().collect();
    if vals.is_empty() {
        return Err(NoetherError::InsufficientHistory);
    }
    let mut rep = DriftReport {
        max: 0.0,
        t_max: vals[0].0,
        reference: 0.0,
        nodes: vals.len(),
    };
    for (t, v) in vals {
        if v.abs() > rep.max || v.is_nan() {
            rep.max = v.abs();
            rep.t_max = t;
        }
    }
    Ok(rep)
}

/// Outcome of the identities for variational derivatives of `Omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalIdentities {
    pub p: ZeroCheck,
    pub q: ZeroCheck,
    pub t: ZeroCheck,
    pub combined: ZeroCheck,
}

impl VariationalIdentities {
    pub fn all_passed(&self) -> bool {
        self.p.passed && self.q.passed && self.t.passed && self.combined.passed
    }
}

fn require_time_xi(g: &Generator) -> Result<(), NoetherError> {
    if g.xi.symbols().iter().all(|s| s.base() == Base::T) {
        Ok(())
    } else {
        Err(NoetherError::XiNotTimeOnly(g.xi.clone()))
    }
}

/// Checks off-shell that the variational derivatives of `Omega` equal the
/// prolonged generator applied to the canonical residuals plus multiples of
/// those residuals.
pub fn variational_derivative_identities(
    h: &DelayHamiltonian,
    g: &Generator,
    sampler: &Sampler,
) -> Result<VariationalIdentities, NoetherError> {
    require_time_xi(g)?;
    let om = omega(h, g);
    let r = h.variational_residuals();
    let dxi = d(&g.xi)?;
    let x = |e: &Expr| prolonged_apply(g, e);
    let (q0, p0, t0) = (Symbol::q(0), Symbol::p(0), Symbol::t(0));

    let rhs_p = x(&r.rp)? + g.eta.partial(p0) * &r.rq + (g.nu.partial(p0) + &dxi) * &r.rp;
    let rhs_q = x(&r.rq)? + (g.eta.partial(q0) + &dxi) * &r.rq + g.nu.partial(q0) * &r.rp;
    let rhs_t = x(&r.rt)?
        + Expr::int(2) * &dxi * &r.rt
        + g.eta.partial(t0) * &r.rq
        + g.nu.partial(t0) * &r.rp;
    let dp = variational_derivative(&om, Base::P)?;
    let dq = variational_derivative(&om, Base::Q)?;
    let dt = variational_derivative_t(&om)?;

    let f = h.local_extremal_residual(g);
    let lhs = &g.xi * &dt + &g.eta * &dq + &g.nu * &dp;
    let rhs = x(&f)? + dxi * &f;
    Ok(VariationalIdentities {
        p: sampler.is_zero(&(dp - rhs_p))?,
        q: sampler.is_zero(&(dq - rhs_q))?,
        t: sampler.is_zero(&(dt - rhs_t))?,
        combined: sampler.is_zero(&(lhs - rhs))?,
    })
}

/// Options for [`analyze`].
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub sampler: Sampler,
    /// User-supplied divergence terms; override the dictionary fit.
    pub v: Option<Expr>,
    pub w: Option<Expr>,
    /// Assert `(S+ - 1) P = 0` and monitor `I = C`.
    pub assert_constraint: bool,
    /// Drift above this along the trajectory is flagged.
    pub drift_tol: f64,
}

impl Default for AnalysisOptions {
    fn default() -> AnalysisOptions {
        AnalysisOptions {
            sampler: Sampler::default(),
            v: None,
            w: None,
            assert_constraint: false,
            drift_tol: 1e-5,
        }
    }
}

/// Drift statistics of everything the report could monitor.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DriftSummary {
    pub differential: Option<DriftReport>,
    pub difference: Option<DriftReport>,
    /// `D(C - V) - (S+ - 1)(P - W)`.
    pub relation: Option<DriftReport>,
    /// `(S+ - 1) P` when the constraint is asserted.
    pub constraint: Option<DriftReport>,
}

/// Everything known about one generator.
#[derive(Debug, Clone, PartialEq)]
pub struct NoetherReport {
    pub name: String,
    pub invariance: InvarianceResidual,
    pub quantities: NoetherQuantities,
    pub identity: ZeroCheck,
    pub drift: Option<DriftSummary>,
    /// Human-readable caveats: skipped integrals, failed fits, flagged drift.
    pub notes: Vec<String>,
}

fn is_affine_in_t(xi: &Expr, sampler: &Sampler) -> Result<bool, NoetherError> {
    Ok(sampler.is_zero(&d(&d(xi)?)?)?.passed)
}

/// Classification, `C`, `P`, integrals and, given a trajectory, drift.
pub fn analyze(
    h: &DelayHamiltonian,
    g: &Generator,
    opts: &AnalysisOptions,
    traj: Option<&Trajectory>,
) -> Result<NoetherReport, NoetherError> {
    let sampler = &opts.sampler;
    let mut notes = Vec::new();
    let identity = verify_hamiltonian_identity(h, g, sampler)?;
    if !identity.passed {
        notes.push("Hamiltonian identity failed".to_string());
    }
    let invariance = classify_invariance(h, g, opts.v.as_ref(), opts.w.as_ref(), sampler)?;
    let mut nq = c_and_p(h, g);
    let time_only = g.xi.symbols().iter().all(|s| s.base() == Base::T);
    if !time_only {
        notes.push("xi depends on q or p: not an admissible generator".to_string());
    } else if !g.xi_admissible(sampler) {
        notes.push("D(xi) is not tau-periodic: the delay equation is not invariant".to_string());
    } else if !is_affine_in_t(&g.xi, sampler)? {
        notes.push("periodic xi: no invariance guarantee".to_string());
    }

    let v_om = invariance.v.clone().unwrap_or_else(Expr::zero);
    let w_om = invariance.w.clone().unwrap_or_else(Expr::zero);
    let invariant = invariance.classification != Classification::None;
    if !invariant {
        notes.push("no divergence representation of Omega found".to_string());
    } else if !g.is_zero_xi() {
        notes.push(
            "xi is not zero: the relation holds on the local extremal equation, not on the canonical equations; no integral emitted"
                .to_string(),
        );
    } else if opts.assert_constraint {
        nq.differential_integral = Some(differential_integral(&nq, &v_om));
    } else {
        // D(C - V) = (S+ - 1)(P - W) on solutions; look for either side as
        // an exact total derivative or difference.
        let diff_side = nq.p_quantity.shift(1)? - &nq.p_quantity - (w_om.shift(1)? - &w_om);
        match fit_total_derivative(&diff_side, sampler)? {
            Some(vp) => nq.differential_integral = Some(differential_integral(&nq, &(&v_om + vp))),
            None => notes.push("differential integral: no V found".to_string()),
        }
        match fit_difference(&d(&(&nq.c - &v_om))?, sampler)? {
            Some(wc) => nq.difference_integral = Some(difference_integral(&nq, &(&w_om + wc))),
            None => notes.push("difference integral: no W found".to_string()),
        }
    }

    let drift = match traj {
        None => None,
        Some(traj) => {
            let mut s = DriftSummary::default();
            if let Some(i) = &nq.differential_integral {
                s.differential = Some(drift(i, traj)?);
            }
            if let Some(j) = &nq.difference_integral {
                s.difference = Some(difference_drift(j, traj)?);
            }
            if invariant && g.is_zero_xi() {
                let rel = d(&(&nq.c - &v_om))?
                    - (nq.p_quantity.shift(1)? - &nq.p_quantity - w_om.shift(1)? + &w_om);
                s.relation = Some(residual_drift(&rel, traj)?);
            }
            if opts.assert_constraint {
                let con = nq.p_quantity.shift(1)? - &nq.p_quantity;
                let rep = residual_drift(&con, traj)?;
                if rep.max > opts.drift_tol {
                    notes.push(format!(
                        "constraint (S+ - 1)P = 0 violated: {:.3e} at t = {}",
                        rep.max, rep.t_max
                    ));
                }
                s.constraint = Some(rep);
            }
            for (label, rep) in [("I", &s.differential), ("J", &s.difference)] {
                if let Some(rep) = rep {
                    if rep.max > opts.drift_tol {
                        notes.push(format!("{label} drifts by {:.3e} at t = {}", rep.max, rep.t_max));
                    }
                }
            }
            Some(s)
        }
    };
    Ok(NoetherReport {
        name: g.name.clone(),
        invariance,
        quantities: nq,
        identity,
        drift,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::solver::{step_hamiltonian, History};

    fn e(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn gen(name: &str, xi: &str, eta: &str, nu: &str) -> Generator {
        Generator::new(name, e(xi), e(eta), e(nu)).unwrap()
    }

    fn example1() -> DelayHamiltonian {
        DelayHamiltonian::new(e("p*pm + q*qm"), [1.0, 0.0, 0.0, 1.0]).unwrap()
    }

    fn example2() -> DelayHamiltonian {
        DelayHamiltonian::new(e("(p + pm)^2/2 + (q + qm)^2/2"), [1.0; 4]).unwrap()
    }

    fn symmetries() -> Vec<Generator> {
        vec![
            gen("X1", "0", "sin(t)", "cos(t)"),
            gen("X2", "0", "cos(t)", "-sin(t)"),
            gen("X3", "1", "0", "0"),
            gen("X4", "0", "q", "p"),
            gen("X5", "0", "p", "-q"),
        ]
    }

    fn holds(x: &Expr) -> bool {
        Sampler::default().is_zero(x).unwrap().passed
    }

    #[test]
    fn displayed_omega_matches_prolongation() {
        for h in [example1(), example2()] {
            for g in symmetries().into_iter().chain([gen("T", "2*t + 1", "t*q", "p^2 - q")]) {
                let diff = omega(&h, &g) - omega_direct(&h, &g).unwrap();
                assert!(holds(&diff), "{}", g.name);
            }
        }
    }

    #[test]
    fn example1_omegas() {
        let h = example1();
        let g = symmetries();
        assert!(holds(&(omega(&h, &g[0]) - d(&e("cos(tm)*q + cos(t)*qm")).unwrap())));
        assert!(holds(&(omega(&h, &g[1]) - d(&e("-sin(tm)*q - sin(t)*qm")).unwrap())));
        assert!(holds(&omega(&h, &g[2])));
        assert!(holds(&(omega(&h, &g[3]) - e("2*(pm*qd + p*qdm - p*pm - q*qm)"))));
        // Not D(-H): expanding either form of Omega gives
        // D(p pm - q qm).
        assert!(holds(&(omega(&h, &g[4]) - d(&e("p*pm - q*qm")).unwrap())));
        assert!(omega(&h, &Generator::zero()).is_zero_const());
    }

    #[test]
    fn example1_c_and_p() {
        let h = example1();
        let g = symmetries();
        let nq = c_and_p(&h, &g[0]);
        assert!(holds(&(nq.c - e("sin(t)*(pp + pm)"))));
        assert!(holds(&(nq.p_quantity - e("cos(tm)*qd - sin(tm)*q"))));
        let nq = c_and_p(&h, &g[4]);
        assert!(holds(&(nq.c - e("p*(pp + pm)"))));
        assert!(holds(&(nq.p_quantity - e("p*pdm - qm*qd - q*pm + qm*p"))));
        let z = c_and_p(&h, &Generator::zero());
        assert!(z.c.is_zero_const() && z.p_quantity.is_zero_const());
    }

    #[test]
    fn identity_holds_and_detects_mutation() {
        let s = Sampler::default();
        for h in [example1(), example2()] {
            for g in symmetries().into_iter().chain([gen("T", "t", "t*q^2", "sin(t)*p*q")]) {
                assert!(verify_hamiltonian_identity(&h, &g, &s).unwrap().passed, "{}", g.name);
            }
        }
        let h = example1();
        let g = &symmetries()[0];
        let mut nq = c_and_p(&h, g);
        nq.c = e("sin(t)*pp");
        let c = s.is_zero(&identity_residual(&h, g, &nq).unwrap()).unwrap();
        assert!(!c.passed && c.witness.is_some());
    }

    #[test]
    fn example1_classifications() {
        let h = example1();
        let s = Sampler::default();
        let got: Vec<_> = symmetries()
            .iter()
            .map(|g| classify_invariance(&h, g, None, None, &s).unwrap().classification)
            .collect();
        use Classification as C;
        assert_eq!(got, [C::Divergence, C::Divergence, C::Variational, C::None, C::Divergence]);
        let x5 = classify_invariance(&h, &symmetries()[4], None, None, &s).unwrap();
        assert!(holds(&(x5.v.unwrap() - e("p*pm - q*qm"))));
    }

    #[test]
    fn supplied_divergence_is_accepted() {
        let h = example1();
        let g = &symmetries()[0];
        let v = e("cos(tm)*q + cos(t)*qm");
        let r = classify_invariance(&h, g, Some(&v), None, &Sampler::default()).unwrap();
        assert_eq!(r.classification, Classification::Divergence);
        assert_eq!(r.v, Some(v));
    }

    #[test]
    fn non_legendre_coefficients_are_not_a_divergence() {
        let h = DelayHamiltonian::new(e("p*pm + q*qm"), [0.0, 0.0, 1.0, 0.0]).unwrap();
        let g = gen("X2", "0", "q", "p");
        let r = classify_invariance(&h, &g, None, None, &Sampler::default()).unwrap();
        assert_eq!(r.classification, Classification::None);
        assert!(holds(&(r.omega - Expr::int(2) * h.tilde_h())));
        let rep = analyze(&h, &g, &AnalysisOptions::default(), None).unwrap();
        assert!(rep.quantities.differential_integral.is_none());
        assert!(rep.quantities.difference_integral.is_none());
    }

    #[test]
    fn example_integrals_are_found() {
        let opts = AnalysisOptions::default();
        let cases = [
            (example1(), 0, "sin(t)*(pp + pm) - cos(t)*(qp + qm)"),
            (example1(), 1, "cos(t)*(pp + pm) + sin(t)*(qp + qm)"),
            (example2(), 0, "sin(t)*(pp + 2*p + pm) - cos(t)*(qp + 2*q + qm)"),
        ];
        for (h, k, want) in cases {
            let rep = analyze(&h, &symmetries()[k], &opts, None).unwrap();
            let i = rep.quantities.differential_integral.expect("integral");
            assert!(holds(&(&i - e(want))), "{i}");
        }
    }

    #[test]
    fn x5_and_x3_give_no_integral() {
        let opts = AnalysisOptions::default();
        let h = example1();
        let x5 = analyze(&h, &symmetries()[4], &opts, None).unwrap();
        assert_eq!(x5.invariance.classification, Classification::Divergence);
        assert!(x5.quantities.differential_integral.is_none());
        assert!(x5.quantities.difference_integral.is_none());
        let x3 = analyze(&h, &symmetries()[2], &opts, None).unwrap();
        assert_eq!(x3.invariance.classification, Classification::Variational);
        assert!(x3.quantities.differential_integral.is_none());
    }

    #[test]
    fn trivial_difference_integral() {
        let nq = NoetherQuantities {
            c: Expr::zero(),
            p_quantity: e("q*qm"),
            differential_integral: None,
            difference_integral: None,
        };
        assert_eq!(difference_integral(&nq, &Expr::zero()), e("q*qm"));
    }

    #[test]
    fn scaling_is_linear() {
        let h = example2();
        let (g1, g2) = (&symmetries()[0], &symmetries()[4]);
        let sum = Generator::new("s", &g1.xi + &g2.xi, &g1.eta + &g2.eta, &g1.nu + &g2.nu).unwrap();
        assert!(holds(&(omega(&h, &sum) - omega(&h, g1) - omega(&h, g2))));
        let (a, b, c) = (c_and_p(&h, &sum), c_and_p(&h, g1), c_and_p(&h, g2));
        assert!(holds(&(a.c - b.c - c.c)));
        assert!(holds(&(a.p_quantity - b.p_quantity - c.p_quantity)));
    }

    #[test]
    fn section8_identities_hold() {
        let s = Sampler::default();
        for h in [example1(), example2()] {
            for g in symmetries().into_iter().chain([gen("A", "3*t - 1", "t*q + p", "q*p")]) {
                let r = variational_derivative_identities(&h, &g, &s).unwrap();
                assert!(r.all_passed(), "{} {r:?}", g.name);
            }
        }
        let bad = gen("B", "q", "0", "0");
        assert!(matches!(
            variational_derivative_identities(&example1(), &bad, &s),
            Err(NoetherError::XiNotTimeOnly(_))
        ));
    }

    #[test]
    fn x4_is_a_symmetry_of_the_canonical_equations() {
        let h = example1();
        let om = omega(&h, &symmetries()[3]);
        let two = Expr::int(2);
        let r = h.variational_residuals();
        let dp = variational_derivative(&om, Base::P).unwrap();
        let dq = variational_derivative(&om, Base::Q).unwrap();
        assert!(holds(&(dp - &two * r.rp)));
        assert!(holds(&(dq - two * r.rq)));
    }

    fn example1_run(n: usize) -> Trajectory {
        let hist = History::new(0.0, 1.0, e("cos(t) + t/4"), e("sin(t)*t")).unwrap();
        step_hamiltonian(&example1(), &hist, 10.0, n).unwrap()
    }

    #[test]
    fn drift_of_integrals_and_controls() {
        let tr = example1_run(64);
        let i1 = e("sin(t)*(pp + pm) - cos(t)*(qp + qm)");
        let r = drift(&i1, &tr).unwrap();
        assert!(r.max < 1e-5, "{r:?}");
        assert_eq!(drift(&Expr::one(), &tr).unwrap().max, 0.0);
        assert!(drift(&e("q"), &tr).unwrap().max > 0.1);
    }

    #[test]
    fn relation_residual_vanishes_on_solutions() {
        let tr = example1_run(64);
        let rep = analyze(&example1(), &symmetries()[4], &AnalysisOptions::default(), Some(&tr)).unwrap();
        let rel = rep.drift.unwrap().relation.unwrap();
        assert!(rel.max < 1e-6, "{rel:?}");
    }

    #[test]
    fn toy_hamiltonian_integrals() {
        let h = DelayHamiltonian::new(e("p*pm"), [1.0, 0.0, 0.0, 1.0]).unwrap();
        let g = gen("shift", "0", "1", "0");
        let hist = History::new(0.0, 1.0, e("sin(t)"), e("t^2")).unwrap();
        let tr = step_hamiltonian(&h, &hist, 6.0, 32).unwrap();
        let rep = analyze(&h, &g, &AnalysisOptions::default(), Some(&tr)).unwrap();
        assert_eq!(rep.invariance.classification, Classification::Variational);
        let i = rep.quantities.differential_integral.clone().unwrap();
        assert!(holds(&(i - e("pp + pm"))));
        // D(C) is a difference only on solutions, so the exact fit finds
        // nothing; J = P - 0 = 0 is the trivial on-shell answer.
        assert!(rep.quantities.difference_integral.is_none());
        assert!(rep.drift.unwrap().differential.unwrap().max < 1e-9);
        let nq = c_and_p(&h, &g);
        let j = difference_integral(&nq, &Expr::zero());
        assert_eq!(difference_drift(&j, &tr).unwrap().max, 0.0);
    }

    #[test]
    fn constraint_path_flags_violations() {
        let h = example1();
        let tr = example1_run(32);
        let opts = AnalysisOptions {
            assert_constraint: true,
            ..AnalysisOptions::default()
        };
        let rep = analyze(&h, &symmetries()[0], &opts, Some(&tr)).unwrap();
        assert!(rep.notes.iter().any(|n| n.contains("constraint")));
        let toy = DelayHamiltonian::new(e("p*pm"), [1.0, 0.0, 0.0, 1.0]).unwrap();
        let hist = History::new(0.0, 1.0, e("sin(t)"), e("t^2")).unwrap();
        let tr = step_hamiltonian(&toy, &hist, 4.0, 16).unwrap();
        let rep = analyze(&toy, &gen("g", "0", "1", "0"), &opts, Some(&tr)).unwrap();
        assert!(!rep.notes.iter().any(|n| n.contains("constraint")));
        assert_eq!(rep.drift.unwrap().constraint.unwrap().max, 0.0);
    }

    #[test]
    fn random_models_satisfy_all_identities() {
        let s = Sampler::default();
        for seed in 0..10 {
            let h = crate::random::quadratic_hamiltonian(seed);
            let g = crate::random::polynomial_generator(seed, false);
            assert!(verify_hamiltonian_identity(&h, &g, &s).unwrap().passed, "{seed}");
            let g = crate::random::polynomial_generator(seed, true);
            let r = variational_derivative_identities(&h, &g, &s).unwrap();
            assert!(r.all_passed(), "{seed} {r:?}");
        }
    }
}
