//! The non-delay baseline: canonical equations, the Hamiltonian identity and
//! the classical Noether integral `I = p eta - xi H`.

use crate::expr::{Base, Expr, ExprError, Sampler, Symbol, ZeroCheck};
use crate::model::{d, Generator, ModelError, Residuals};

/// `H(t, q, p)` without delays.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalHamiltonian {
    pub h: Expr,
}

fn point(s: Symbol) -> bool {
    s.shift() == 0 && s.order() == 0
}

impl ClassicalHamiltonian {
    pub fn new(h: Expr) -> Result<Self, ModelError> {
        if let Some(symbol) = h.symbols().into_iter().find(|s| !point(*s)) {
            return Err(ModelError::ForbiddenSymbol { role: "H", symbol });
        }
        if h.contains_tau() {
            return Err(ModelError::ForbiddenTau { role: "H" });
        }
        Ok(ClassicalHamiltonian { h })
    }

    fn hp(&self) -> Expr {
        self.h.partial(Symbol::p(0))
    }

    fn hq(&self) -> Expr {
        self.h.partial(Symbol::q(0))
    }

    /// `p qd - H`.
    pub fn tilde_h(&self) -> Expr {
        Expr::p(0) * Expr::qd(0) - &self.h
    }

    pub fn residuals(&self) -> Residuals {
        Residuals {
            rp: Expr::qd(0) - self.hp(),
            rq: -Expr::pd(0) - self.hq(),
            rt: d(&self.h) - self.h.partial(Symbol::t(0)),
        }
    }

    /// `nu qd + p D(eta) - X(H) - H D(xi)`.
    pub fn invariance(&self, g: &Generator) -> Expr {
        let xh = &g.xi * self.h.partial(Symbol::t(0)) + &g.eta * self.hq() + &g.nu * self.hp();
        &g.nu * Expr::qd(0) + Expr::p(0) * d(&g.eta) - xh - &self.h * d(&g.xi)
    }

    /// `I = p eta - xi H`.
    pub fn first_integral_expr(&self, g: &Generator) -> Expr {
        Expr::p(0) * &g.eta - &g.xi * &self.h
    }

    /// Right-hand side of the Hamiltonian identity.
    pub fn identity_rhs(&self, g: &Generator) -> Expr {
        let r = self.residuals();
        &g.xi * r.rt + &g.eta * r.rq + &g.nu * r.rp + d(&self.first_integral_expr(g))
    }

    pub fn verify_identity(&self, g: &Generator, sampler: &Sampler) -> Result<ZeroCheck, crate::expr::SampleError> {
        sampler.is_zero(&(self.invariance(g) - self.identity_rhs(g)))
    }

    /// Replaces velocities and accelerations by their values on solutions of
    /// the canonical equations.
    pub fn on_shell(&self, e: &Expr) -> Expr {
        let qd = self.hp();
        let pd = -self.hq();
        let lower = |x: &Expr| {
            x.substitute(&|s| match (s.base(), s.order()) {
                (Base::Q, 1) => Some(qd.clone()),
                (Base::P, 1) => Some(pd.clone()),
                _ => None,
            })
        };
        let qdd = lower(&d(&qd));
        let pdd = lower(&d(&pd));
        e.substitute(&|s| match (s.base(), s.order()) {
            (Base::Q, 1) => Some(qd.clone()),
            (Base::P, 1) => Some(pd.clone()),
            (Base::Q, 2) => Some(qdd.clone()),
            (Base::P, 2) => Some(pdd.clone()),
            _ => None,
        })
    }

    /// `I = p eta - xi H` with a warning when the invariance condition fails
    /// on sampled solutions.
    pub fn first_integral(&self, g: &Generator, sampler: &Sampler) -> ClassicalIntegral {
        let on_shell = self.on_shell(&self.invariance(g));
        let warning = match sampler.is_zero(&on_shell) {
            Ok(c) if c.passed => None,
            Ok(c) => Some(format!(
                "invariance fails on solutions (relative residual {:.3e})",
                c.worst
            )),
            Err(e) => Some(format!("invariance check failed: {e}")),
        };
        ClassicalIntegral {
            integral: self.first_integral_expr(g),
            warning,
        }
    }

    /// One-point variational derivatives `d/dx - D d/dxd` for `x` in `{q, p}`.
    pub fn variational_derivative(e: &Expr, base: Base) -> Result<Expr, ExprError> {
        let x = Symbol::new(base, 0, 0);
        let v = Symbol::new(base, 0, 1);
        Ok(e.partial(x) - e.partial(v).total_derivative()?)
    }

    /// Fixed-step RK4 solution of `qd = H_p`, `pd = -H_q`.
    pub fn integrate(
        &self,
        t0: f64,
        q0: f64,
        p0: f64,
        step: f64,
        steps: usize,
    ) -> Result<Vec<(f64, f64, f64)>, ExprError> {
        let (hp, hq) = (self.hp(), self.hq());
        let rhs = |t: f64, q: f64, p: f64| -> Result<(f64, f64), ExprError> {
            let j = crate::expr::JetPoint::new(1.0, t)
                .with(Symbol::q(0), q)
                .with(Symbol::p(0), p);
            Ok((hp.eval(&j)?, -hq.eval(&j)?))
        };
        let mut out = Vec::with_capacity(steps + 1);
        let (mut q, mut p) = (q0, p0);
        out.push((t0, q, p));
        for i in 0..steps {
            let t = t0 + i as f64 * step;
            let (k1q, k1p) = rhs(t, q, p)?;
            let (k2q, k2p) = rhs(t + step / 2.0, q + step / 2.0 * k1q, p + step / 2.0 * k1p)?;
            let (k3q, k3p) = rhs(t + step / 2.0, q + step / 2.0 * k2q, p + step / 2.0 * k2p)?;
            let (k4q, k4p) = rhs(t + step, q + step * k3q, p + step * k3p)?;
            q += step / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
            p += step / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
            out.push((t0 + (i + 1) as f64 * step, q, p));
        }
        Ok(out)
    }

    /// Largest `|I(t) - I(t0)|` of a point function along a solution.
    pub fn drift(integral: &Expr, path: &[(f64, f64, f64)]) -> Result<f64, ExprError> {
        let value = |&(t, q, p): &(f64, f64, f64)| {
            integral.eval(
                &crate::expr::JetPoint::new(1.0, t)
                    .with(Symbol::q(0), q)
                    .with(Symbol::p(0), p),
            )
        };
        let first = value(&path[0])?;
        let mut worst: f64 = 0.0;
        for node in path {
            worst = worst.max((value(node)? - first).abs());
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalIntegral {
    pub integral: Expr,
    pub warning: Option<String>,
}

/// `L = a/2 qd^2 - V(t, q)`, the quadratic family the classical transform
/// handles without numeric inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalLagrangian {
    pub a: f64,
    pub v: Expr,
}

impl ClassicalLagrangian {
    pub fn to_expr(&self) -> Expr {
        Expr::real(self.a) * Expr::pow(Expr::qd(0), 2) / Expr::int(2) - &self.v
    }

    /// `dL/dq - D dL/dqd`.
    pub fn euler_lagrange_residual(&self) -> Expr {
        let l = self.to_expr();
        l.partial(Symbol::q(0)) - d(&l.partial(Symbol::qd(0)))
    }

    /// `p = a qd`, `H = p^2/(2a) + V`.
    pub fn legendre(&self) -> Result<ClassicalHamiltonian, ModelError> {
        if self.a == 0.0 {
            return Err(ModelError::ZeroBeta);
        }
        ClassicalHamiltonian::new(
            Expr::pow(Expr::p(0), 2) / Expr::real(2.0 * self.a) + &self.v,
        )
    }
}
