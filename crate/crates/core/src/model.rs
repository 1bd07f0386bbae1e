//! Structured delay Lagrangians and Hamiltonians, symmetry generators, and
//! the residuals of their variational equations.

use thiserror::Error;

use crate::expr::{Base, Expr, ExprError, Sampler, Symbol};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("beta must be nonzero")]
    ZeroBeta,
    #[error("B must be nonzero")]
    ZeroB,
    #[error("{role} may not contain `{symbol}`")]
    ForbiddenSymbol { role: &'static str, symbol: Symbol },
    #[error("{role} may not reference tau")]
    ForbiddenTau { role: &'static str },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

fn check_symbols(
    role: &'static str,
    e: &Expr,
    allow_tau: bool,
    ok: impl Fn(Symbol) -> bool,
) -> Result<(), ModelError> {
    if let Some(symbol) = e.symbols().into_iter().find(|s| !ok(*s)) {
        return Err(ModelError::ForbiddenSymbol { role, symbol });
    }
    if !allow_tau && e.contains_tau() {
        return Err(ModelError::ForbiddenTau { role });
    }
    Ok(())
}

fn potential_symbol(s: Symbol) -> bool {
    s.base() == Base::Q && s.order() == 0 && s.shift() <= 0
}

/// Relative tolerance for deciding `alpha*gamma - beta^2 == 0`.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// `L = alpha/2 qd^2 + beta qd qdm + gamma/2 qdm^2 - phi(q, qm)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticLagrangian {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub phi: Expr,
}

impl QuadraticLagrangian {
    pub fn new(alpha: f64, beta: f64, gamma: f64, phi: Expr) -> Result<Self, ModelError> {
        if beta == 0.0 {
            return Err(ModelError::ZeroBeta);
        }
        check_symbols("phi", &phi, false, potential_symbol)?;
        Ok(QuadraticLagrangian {
            alpha,
            beta,
            gamma,
            phi,
        })
    }

    pub fn is_degenerate(&self) -> bool {
        let d = self.alpha * self.gamma - self.beta * self.beta;
        let scale = (self.alpha * self.gamma).abs().max(self.beta * self.beta);
        d.abs() <= DEGENERACY_TOL * scale
    }

    pub fn to_expr(&self) -> Expr {
        let (qd, qdm) = (Expr::qd(0), Expr::qd(-1));
        half(self.alpha) * Expr::pow(qd.clone(), 2)
            + Expr::real(self.beta) * qd * &qdm
            + half(self.gamma) * Expr::pow(qdm, 2)
            - &self.phi
    }
}

/// `c/2` kept exact when `c` is a whole number.
pub(crate) fn half(c: f64) -> Expr {
    Expr::real(c) / Expr::int(2)
}

/// `H = A/2 p^2 + B p pm + C/2 pm^2 + phi(q, qm)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticHamiltonian {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub phi: Expr,
}

impl QuadraticHamiltonian {
    pub fn new(a: f64, b: f64, c: f64, phi: Expr) -> Result<Self, ModelError> {
        if b == 0.0 {
            return Err(ModelError::ZeroB);
        }
        check_symbols("phi", &phi, false, potential_symbol)?;
        Ok(QuadraticHamiltonian { a, b, c, phi })
    }

    pub fn to_expr(&self) -> Expr {
        let (p, pm) = (Expr::p(0), Expr::p(-1));
        half(self.a) * Expr::pow(p.clone(), 2)
            + Expr::real(self.b) * p * &pm
            + half(self.c) * Expr::pow(pm, 2)
            + &self.phi
    }
}

/// A delay Hamiltonian `H(t, tm, q, qm, p, pm)` with its coefficients
/// `alpha1..alpha4`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayHamiltonian {
    pub h: Expr,
    pub alphas: [f64; 4],
}

/// Residuals of the three variational equations.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    pub rp: Expr,
    pub rq: Expr,
    pub rt: Expr,
}

impl DelayHamiltonian {
    pub fn new(h: Expr, alphas: [f64; 4]) -> Result<Self, ModelError> {
        check_symbols("H", &h, true, |s| s.order() == 0 && s.shift() <= 0)?;
        Ok(DelayHamiltonian { h, alphas })
    }

    fn alpha(&self, i: usize) -> Expr {
        Expr::real(self.alphas[i - 1])
    }

    /// `pm (a1 qd + a2 qdm) + p (a3 qd + a4 qdm) - H`.
    pub fn tilde_h(&self) -> Expr {
        let (qd, qdm) = (Expr::qd(0), Expr::qd(-1));
        Expr::p(-1) * (self.alpha(1) * &qd + self.alpha(2) * &qdm)
            + Expr::p(0) * (self.alpha(3) * &qd + self.alpha(4) * &qdm)
            - &self.h
    }

    pub fn h_plus(&self) -> Expr {
        self.h.shift(1).expect("H has no advanced symbols")
    }

    /// `Rp`, `Rq`, `Rt` built from the displayed canonical formulas.
    pub fn variational_residuals(&self) -> Residuals {
        let (a1, a2, a4) = (self.alpha(1), self.alpha(2), self.alpha(4));
        let a23 = Expr::real(self.alphas[1] + self.alphas[2]);
        let both = &self.h + self.h_plus();
        let rp = &a1 * Expr::qd(1) + &a23 * Expr::qd(0) + &a4 * Expr::qd(-1)
            - both.partial(Symbol::p(0));
        let rq = -(&a4 * Expr::pd(1)
            + &a23 * Expr::pd(0)
            + &a1 * Expr::pd(-1)
            + both.partial(Symbol::q(0)));
        let (p, pm, pp) = (Expr::p(0), Expr::p(-1), Expr::p(1));
        let (qd, qdm) = (Expr::qd(0), Expr::qd(-1));
        let flux = a2 * (&p * &qd - &pm * &qdm) + a4 * (pp * &qd - &p * &qdm);
        let rt = d(&flux) + d(&self.h) - both.partial(Symbol::t(0));
        Residuals { rp, rq, rt }
    }

    /// `xi Rt + eta Rq + nu Rp`.
    pub fn local_extremal_residual(&self, g: &Generator) -> Expr {
        let r = self.variational_residuals();
        &g.xi * r.rt + &g.eta * r.rq + &g.nu * r.rp
    }
}

/// Total derivative of an expression known to be at most first order.
pub(crate) fn d(e: &Expr) -> Expr {
    e.total_derivative()
        .expect("total derivative of a first-order expression")
}

/// `L` of a quadratic Lagrangian gives the Elsgolts residual
/// `-(beta qddp + (alpha+gamma) qdd + beta qddm + d(phi + phi+)/dq)`.
pub fn elsgolts_residual(l: &QuadraticLagrangian) -> Expr {
    let phi_plus = l.phi.shift(1).expect("phi has no advanced symbols");
    let q2 = |s| Expr::sym(Symbol::new(Base::Q, s, 2));
    let beta = Expr::real(l.beta);
    -(&beta * q2(1)
        + Expr::real(l.alpha + l.gamma) * q2(0)
        + beta * q2(-1)
        + (&l.phi + phi_plus).partial(Symbol::q(0)))
}

/// Lie point generator `xi d/dt + eta d/dq + nu d/dp`.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub name: String,
    pub xi: Expr,
    pub eta: Expr,
    pub nu: Expr,
}

impl Generator {
    pub fn new(name: impl Into<String>, xi: Expr, eta: Expr, nu: Expr) -> Result<Self, ModelError> {
        let point = |s: Symbol| s.order() == 0 && s.shift() == 0;
        check_symbols("xi", &xi, true, point)?;
        check_symbols("eta", &eta, true, point)?;
        check_symbols("nu", &nu, true, point)?;
        Ok(Generator {
            name: name.into(),
            xi,
            eta,
            nu,
        })
    }

    pub fn zero() -> Generator {
        Generator {
            name: String::new(),
            xi: Expr::zero(),
            eta: Expr::zero(),
            nu: Expr::zero(),
        }
    }

    /// `(zeta_eta, zeta_nu) = (D eta - qd D xi, D nu - pd D xi)`.
    pub fn prolong(&self) -> (Expr, Expr) {
        let dxi = d(&self.xi);
        (
            d(&self.eta) - Expr::qd(0) * &dxi,
            d(&self.nu) - Expr::pd(0) * dxi,
        )
    }

    /// Coefficients moved to `t - tau` or `t + tau`.
    pub fn shifted(&self, direction: i8) -> Generator {
        let s = |e: &Expr| e.shift(direction).expect("generator is a point function");
        Generator {
            name: self.name.clone(),
            xi: s(&self.xi),
            eta: s(&self.eta),
            nu: s(&self.nu),
        }
    }

    /// Whether `xi` depends on `t` only and `D xi` is `tau`-periodic, which
    /// is what the delay equation needs to stay invariant.
    pub fn xi_admissible(&self, sampler: &Sampler) -> bool {
        let time_only = self.xi.symbols().iter().all(|s| s.base() == Base::T);
        if !time_only {
            return false;
        }
        let dxi = d(&self.xi);
        sampler.holds(&(&dxi - dxi.shift(-1).expect("xi is a point function")))
    }

    pub fn is_zero_xi(&self) -> bool {
        self.xi.is_zero_const()
    }
}

fn sym(base: Base, shift: i8, order: u8) -> Symbol {
    Symbol::new(base, shift, order)
}

/// Applies `S^k` with `k` in `{-1, 0, 1}`.
fn shift_by(e: Expr, k: i8) -> Result<Expr, ExprError> {
    if k == 0 {
        Ok(e)
    } else {
        e.shift(k)
    }
}

/// Delay variational derivative with respect to `q` or `p`, summed over the
/// three stencil points:
/// `sum_s S^{-s}(dF/dx_s - D dF/dxd_s)`.
pub fn variational_derivative(f: &Expr, base: Base) -> Result<Expr, ExprError> {
    assert!(base != Base::T, "use variational_derivative_t for time");
    let mut out = Expr::zero();
    for s in -1..=1 {
        let x = f.partial(sym(base, s, 0));
        let v = f.partial(sym(base, s, 1));
        let term = x - v.total_derivative()?;
        out = out + shift_by(term, -s)?;
    }
    Ok(out)
}

/// Horizontal variational derivative:
/// `sum_s S^{-s}(dF/dt_s + D(qd_s dF/dqd_s + pd_s dF/dpd_s)) - D F`.
pub fn variational_derivative_t(f: &Expr) -> Result<Expr, ExprError> {
    let mut out = -f.total_derivative()?;
    for s in -1..=1 {
        let flux = Expr::sym(sym(Base::Q, s, 1)) * f.partial(sym(Base::Q, s, 1))
            + Expr::sym(sym(Base::P, s, 1)) * f.partial(sym(Base::P, s, 1));
        let term = f.partial(Symbol::t(s)) + flux.total_derivative()?;
        out = out + shift_by(term, -s)?;
    }
    Ok(out)
}
