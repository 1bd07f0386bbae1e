//! Delay Legendre transformations between quadratic Lagrangians and
//! Hamiltonians, plus the state-dependent extension.

use thiserror::Error;

use crate::expr::{Base, Expr, ExprError, Sampler, Symbol};
use crate::model::{
    variational_derivative, DelayHamiltonian, ModelError, QuadraticHamiltonian,
    QuadraticLagrangian,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LegendreError {
    #[error("alpha1 must be nonzero")]
    ZeroAlpha1,
    #[error("degenerate Lagrangian needs alpha > 0 and gamma > 0 with beta = sqrt(alpha*gamma); got alpha = {alpha}, beta = {beta}, gamma = {gamma}")]
    UnsupportedDegenerate { alpha: f64, beta: f64, gamma: f64 },
    #[error("mu vanishes at sampled point {sample}")]
    SingularMomentumMap { sample: usize },
    #[error("{0} vanishes identically")]
    Vanishing(&'static str),
    #[error("{role} may not contain `{symbol}`")]
    ForbiddenSymbol { role: &'static str, symbol: Symbol },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// How momenta relate to velocities.
#[derive(Debug, Clone, PartialEq)]
pub enum MomentumMap {
    /// `p = f(qd)` and `pm = f(qdm)` separately.
    Pointwise { p: Expr, pm: Expr },
    /// Degenerate case: one relation `lhs(p, pm) = rhs(qd, qdm)`.
    Merged { lhs: Expr, rhs: Expr },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LegendreResult {
    pub hamiltonian: DelayHamiltonian,
    pub momentum_map: MomentumMap,
    /// `qd` in terms of `p` and `qdm` in terms of `pm`. In the degenerate
    /// case this is the compatible particular solution of the merged relation.
    pub inverse_map: (Expr, Expr),
    pub degenerate: bool,
}

impl LegendreResult {
    /// Pointwise momenta compatible with the transform in both cases.
    pub fn compatible_momenta(&self) -> (Expr, Expr) {
        let k = self.inverse_map.0.partial(Symbol::p(0));
        let p = Expr::qd(0) / &k;
        let pm = Expr::qd(-1) / k;
        (p, pm)
    }
}

/// Coefficients `(alpha1, (gamma/beta) alpha1, (alpha/beta) alpha1, alpha1)`.
pub fn coefficients(l: &QuadraticLagrangian, alpha1: f64) -> [f64; 4] {
    [
        alpha1,
        l.gamma / l.beta * alpha1,
        l.alpha / l.beta * alpha1,
        alpha1,
    ]
}

/// Lagrangian to Hamiltonian. `alpha1` is the free scale; `beta` is the
/// conventional choice.
pub fn legendre_forward(
    l: &QuadraticLagrangian,
    alpha1: f64,
) -> Result<LegendreResult, LegendreError> {
    if alpha1 == 0.0 {
        return Err(LegendreError::ZeroAlpha1);
    }
    let alphas = coefficients(l, alpha1);
    let k = l.beta / alpha1;
    let inverse_map = (Expr::real(1.0 / k) * Expr::p(0), Expr::real(1.0 / k) * Expr::p(-1));
    if !l.is_degenerate() {
        let s = alpha1 * alpha1 / (l.beta * l.beta);
        let h = QuadraticHamiltonian {
            a: s * l.alpha,
            b: s * l.beta,
            c: s * l.gamma,
            phi: l.phi.clone(),
        }
        .to_expr();
        return Ok(LegendreResult {
            hamiltonian: DelayHamiltonian::new(h, alphas)?,
            momentum_map: MomentumMap::Pointwise {
                p: Expr::real(k) * Expr::qd(0),
                pm: Expr::real(k) * Expr::qd(-1),
            },
            inverse_map,
            degenerate: false,
        });
    }
    if !(l.alpha > 0.0 && l.gamma > 0.0 && l.beta > 0.0) {
        return Err(LegendreError::UnsupportedDegenerate {
            alpha: l.alpha,
            beta: l.beta,
            gamma: l.gamma,
        });
    }
    let (sa, sg) = (l.alpha.sqrt(), l.gamma.sqrt());
    let combo = Expr::real(alpha1 / sg) * Expr::p(0) + Expr::real(alpha1 / sa) * Expr::p(-1);
    let h = Expr::pow(combo.clone(), 2) / Expr::int(2) + &l.phi;
    Ok(LegendreResult {
        hamiltonian: DelayHamiltonian::new(h, alphas)?,
        momentum_map: MomentumMap::Merged {
            lhs: combo,
            rhs: Expr::real(sa) * Expr::qd(0) + Expr::real(sg) * Expr::qd(-1),
        },
        inverse_map,
        degenerate: true,
    })
}

/// Result of the Hamiltonian to Lagrangian direction.
#[derive(Debug, Clone, PartialEq)]
pub struct ReverseResult {
    pub lagrangian: QuadraticLagrangian,
    pub alphas: [f64; 4],
    /// `qd = (B/alpha1) p`, `qdm = (B/alpha1) pm`.
    pub velocity_map: (Expr, Expr),
}

pub fn legendre_reverse(
    h: &QuadraticHamiltonian,
    alpha1: f64,
) -> Result<ReverseResult, LegendreError> {
    if alpha1 == 0.0 {
        return Err(LegendreError::ZeroAlpha1);
    }
    if h.b == 0.0 {
        return Err(ModelError::ZeroB.into());
    }
    let s = alpha1 * alpha1 / (h.b * h.b);
    let lagrangian = QuadraticLagrangian::new(s * h.a, s * h.b, s * h.c, h.phi.clone())?;
    let k = Expr::real(h.b / alpha1);
    Ok(ReverseResult {
        lagrangian,
        alphas: [alpha1, h.c / h.b * alpha1, h.a / h.b * alpha1, alpha1],
        velocity_map: (&k * Expr::p(0), k * Expr::p(-1)),
    })
}

/// Coefficients from the point relations `a_i p_s = c_i qd_s` after moving
/// the delayed ones forward with `S+`; normalized so the first equals
/// `alpha1`.
pub fn alphas_alternative(l: &QuadraticLagrangian, alpha1: f64) -> Result<[f64; 4], LegendreError> {
    if l.beta == 0.0 {
        return Err(ModelError::ZeroBeta.into());
    }
    // (velocity coefficient, shift of the relation) for alpha1..alpha4.
    let relations = [(l.beta, -1), (l.gamma, -1), (l.alpha, 0), (l.beta, 0)];
    let mut ratios = [0.0; 4];
    for (i, (c, s)) in relations.into_iter().enumerate() {
        let mut rhs = Expr::real(c) * Expr::qd(s);
        let mut lhs = Expr::p(s);
        if s < 0 {
            rhs = rhs.shift(1)?;
            lhs = lhs.shift(1)?;
        }
        // a_i * lhs = rhs with lhs = p: a_i = (d rhs/d qd) / (d lhs/d p) in units of p/qd.
        let num = rhs.partial(Symbol::qd(0)).as_const().expect("linear relation");
        let den = lhs.partial(Symbol::p(0)).as_const().expect("linear relation");
        ratios[i] = num.to_f64() / den.to_f64();
    }
    let scale = alpha1 / ratios[0];
    Ok(ratios.map(|r| r * scale))
}

/// Lagrangian with state-dependent coefficients and momentum map
/// `qd = mu(q) p + lambda(q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedLagrangian {
    pub alpha: Expr,
    pub beta: Expr,
    pub gamma: Expr,
    pub lambda: Expr,
    pub mu: Expr,
    pub phi: Expr,
}

fn only(role: &'static str, e: &Expr, ok: impl Fn(Symbol) -> bool) -> Result<(), LegendreError> {
    match e.symbols().into_iter().find(|s| !ok(*s)) {
        Some(symbol) => Err(LegendreError::ForbiddenSymbol { role, symbol }),
        None => Ok(()),
    }
}

fn q_qm(s: Symbol) -> bool {
    s.base() == Base::Q && s.order() == 0 && s.shift() <= 0
}

fn q_only(s: Symbol) -> bool {
    s == Symbol::q(0)
}

impl ExtendedLagrangian {
    pub fn new(
        alpha: Expr,
        beta: Expr,
        gamma: Expr,
        lambda: Expr,
        mu: Expr,
        phi: Expr,
    ) -> Result<Self, LegendreError> {
        for (role, e) in [("alpha", &alpha), ("beta", &beta), ("gamma", &gamma), ("phi", &phi)] {
            only(role, e, q_qm)?;
        }
        only("lambda", &lambda, q_only)?;
        only("mu", &mu, q_only)?;
        let sampler = Sampler::default();
        if sampler.holds(&beta) {
            return Err(LegendreError::Vanishing("beta"));
        }
        if sampler.holds(&(&alpha * &gamma - Expr::pow(beta.clone(), 2))) {
            return Err(LegendreError::Vanishing("alpha*gamma - beta^2"));
        }
        Ok(ExtendedLagrangian {
            alpha,
            beta,
            gamma,
            lambda,
            mu,
            phi,
        })
    }

    /// `alpha/2 qd^2 + beta qd qdm + gamma/2 qdm^2
    ///  - (alpha lambda + beta lambda-) qd - (beta lambda + gamma lambda-) qdm - phi`.
    pub fn to_expr(&self) -> Expr {
        let (qd, qdm) = (Expr::qd(0), Expr::qd(-1));
        let lm = shifted(&self.lambda, -1);
        let (a, b, g, l) = (&self.alpha, &self.beta, &self.gamma, &self.lambda);
        a * Expr::pow(qd.clone(), 2) / Expr::int(2)
            + b * &qd * &qdm
            + g * Expr::pow(qdm.clone(), 2) / Expr::int(2)
            - (a * l + b * &lm) * qd
            - (b * l + g * lm) * qdm
            - &self.phi
    }
}

fn shifted(e: &Expr, d: i8) -> Expr {
    e.shift(d).expect("point function shifts stay in range")
}

/// Hamiltonian with expression-valued coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedHamiltonian {
    pub h: Expr,
    pub alphas: [Expr; 4],
    /// `r = mu p + lambda`, the velocity in terms of the momentum.
    pub velocity: Expr,
}

impl ExtendedHamiltonian {
    pub fn tilde_h(&self) -> Expr {
        let (qd, qdm) = (Expr::qd(0), Expr::qd(-1));
        let [a1, a2, a3, a4] = &self.alphas;
        Expr::p(-1) * (a1 * &qd + a2 * &qdm) + Expr::p(0) * (a3 * qd + a4 * qdm) - &self.h
    }

    /// `(Rp, Rq)` as delay variational derivatives of `tilde H`, so the
    /// state dependence of the coefficients is accounted for.
    pub fn canonical_residuals(&self) -> Result<(Expr, Expr), ExprError> {
        let ht = self.tilde_h();
        Ok((
            variational_derivative(&ht, Base::P)?,
            variational_derivative(&ht, Base::Q)?,
        ))
    }
}

/// Transform for state-dependent coefficients with `alphas = (beta mu-, gamma mu-, alpha mu, beta mu)`.
pub fn legendre_extended(l: &ExtendedLagrangian) -> Result<ExtendedHamiltonian, LegendreError> {
    let sampler = Sampler::default();
    for i in 0..sampler.samples {
        let v = l.mu.eval(&sampler.jet(i))?;
        if v.abs() < 1e-12 {
            return Err(LegendreError::SingularMomentumMap { sample: i });
        }
    }
    let r = &l.mu * Expr::p(0) + &l.lambda;
    let rm = shifted(&r, -1);
    let mu_m = shifted(&l.mu, -1);
    let h = &l.alpha * Expr::pow(r.clone(), 2) / Expr::int(2)
        + &l.beta * &r * &rm
        + &l.gamma * Expr::pow(rm, 2) / Expr::int(2)
        + &l.phi;
    Ok(ExtendedHamiltonian {
        h,
        alphas: [
            &l.beta * &mu_m,
            &l.gamma * mu_m,
            &l.alpha * &l.mu,
            &l.beta * &l.mu,
        ],
        velocity: r,
    })
}

/// Quadratic form of a forward result, for round trips.
pub fn quadratic_hamiltonian(l: &QuadraticLagrangian, alpha1: f64) -> QuadraticHamiltonian {
    let s = alpha1 * alpha1 / (l.beta * l.beta);
    QuadraticHamiltonian {
        a: s * l.alpha,
        b: s * l.beta,
        c: s * l.gamma,
        phi: l.phi.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::model::elsgolts_residual;

    fn e(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn same(a: &Expr, b: &Expr) {
        let c = Sampler::new(50, 1e-12, 11).is_zero(&(a - b)).unwrap();
        assert!(c.passed, "{a}\n  !=\n{b}");
    }

    fn lag(a: f64, b: f64, g: f64, phi: &str) -> QuadraticLagrangian {
        QuadraticLagrangian::new(a, b, g, e(phi)).unwrap()
    }

    #[test]
    fn example_one_forward() {
        let r = legendre_forward(&lag(0.0, 1.0, 0.0, "q*qm"), 1.0).unwrap();
        assert_eq!(r.hamiltonian.alphas, [1.0, 0.0, 0.0, 1.0]);
        assert_eq!(r.hamiltonian.h.to_string(), "p*pm + q*qm");
        assert!(!r.degenerate);
    }

    #[test]
    fn example_two_forward_is_degenerate() {
        let r = legendre_forward(&lag(1.0, 1.0, 1.0, "(q + qm)^2/2"), 1.0).unwrap();
        assert_eq!(r.hamiltonian.alphas, [1.0; 4]);
        assert!(r.degenerate);
        assert_eq!(r.hamiltonian.h, e("(p + pm)^2/2 + (q + qm)^2/2"));
        let MomentumMap::Merged { lhs, rhs } = &r.momentum_map else {
            panic!("expected merged relation")
        };
        assert_eq!(lhs, &e("p + pm"));
        assert_eq!(rhs, &e("qd + qdm"));
    }

    #[test]
    fn hand_expanded_forward() {
        let l = lag(2.0, 1.0, 0.0, "0");
        let r = legendre_forward(&l, 1.0).unwrap();
        assert_eq!(r.hamiltonian.alphas, [1.0, 0.0, 2.0, 1.0]);
        same(&r.hamiltonian.h, &e("p^2 + p*pm"));
        let back = legendre_reverse(&quadratic_hamiltonian(&l, 1.0), 1.0).unwrap();
        assert_eq!(back.lagrangian, l);
    }

    #[test]
    fn reverse_examples() {
        let h1 = QuadraticHamiltonian::new(0.0, 1.0, 0.0, e("q*qm")).unwrap();
        let r1 = legendre_reverse(&h1, 1.0).unwrap();
        assert_eq!(r1.lagrangian.to_expr(), e("qd*qdm - q*qm"));
        assert_eq!(r1.alphas, [1.0, 0.0, 0.0, 1.0]);
        let h2 = QuadraticHamiltonian::new(1.0, 1.0, 1.0, e("(q + qm)^2/2")).unwrap();
        let r2 = legendre_reverse(&h2, 1.0).unwrap();
        same(&r2.lagrangian.to_expr(), &e("(qd + qdm)^2/2 - (q + qm)^2/2"));
        assert_eq!(r2.lagrangian, lag(1.0, 1.0, 1.0, "(q + qm)^2/2"));
    }

    #[test]
    fn maps_are_inverse_and_compatible() {
        for l in [lag(0.0, 1.0, 0.0, "q*qm"), lag(3.0, -2.0, 0.5, "q^2"), lag(4.0, 2.0, 1.0, "0")] {
            for a1 in [1.0, l.beta, -0.75] {
                let r = legendre_forward(&l, a1).unwrap();
                let (p, pm) = r.compatible_momenta();
                same(&pm.shift(1).unwrap(), &p);
                let qd = r.inverse_map.0.substitute_one(Symbol::p(0), &p);
                same(&qd, &Expr::qd(0));
                if let MomentumMap::Merged { lhs, rhs } = &r.momentum_map {
                    let sub = lhs.substitute(&|s| match s {
                        s if s == Symbol::p(0) => Some(p.clone()),
                        s if s == Symbol::p(-1) => Some(pm.clone()),
                        _ => None,
                    });
                    same(&sub, rhs);
                }
            }
        }
    }

    #[test]
    fn degenerate_sign_patterns_rejected() {
        let err = legendre_forward(&lag(-1.0, 1.0, -1.0, "0"), 1.0).unwrap_err();
        assert!(matches!(err, LegendreError::UnsupportedDegenerate { .. }));
        assert!(legendre_forward(&lag(1.0, -1.0, 1.0, "0"), 1.0).is_err());
        assert_eq!(
            legendre_forward(&lag(1.0, 2.0, 1.0, "0"), 0.0),
            Err(LegendreError::ZeroAlpha1)
        );
    }

    #[test]
    fn canonical_equations_reduce_to_elsgolts() {
        for (l, a1) in [
            (lag(0.0, 1.0, 0.0, "q*qm"), 1.0),
            (lag(3.0, -2.0, 0.5, "q^2*qm + sin(q)"), -2.0),
            (lag(1.0, 1.0, 1.0, "(q + qm)^2/2"), 1.0),
            (lag(4.0, 2.0, 1.0, "exp(qm)"), 0.5),
        ] {
            let r = legendre_forward(&l, a1).unwrap();
            let res = r.hamiltonian.variational_residuals();
            let k = l.beta / a1;
            let on_shell = |x: &Expr| {
                x.substitute(&|s| {
                    (s.base() == Base::P).then(|| {
                        Expr::real(k) * Expr::sym(Symbol::new(Base::Q, s.shift(), s.order() + 1))
                    })
                })
            };
            same(&on_shell(&res.rp), &Expr::zero());
            // With p = (beta/alpha1) qd the alpha1 scale cancels exactly.
            same(&on_shell(&res.rq), &elsgolts_residual(&l));
        }
    }

    #[test]
    fn alternative_coefficients() {
        let close = |a: [f64; 4], b: [f64; 4]| {
            a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-14)
        };
        assert!(close(alphas_alternative(&lag(0.0, 1.0, 0.0, "0"), 1.0).unwrap(), [1.0, 0.0, 0.0, 1.0]));
        assert!(close(alphas_alternative(&lag(1.0, 1.0, 1.0, "0"), 1.0).unwrap(), [1.0; 4]));
        assert!(close(alphas_alternative(&lag(2.0, 1.0, 0.0, "0"), 1.0).unwrap(), [1.0, 0.0, 2.0, 1.0]));
    }

    #[test]
    fn extended_reduces_to_constant_case() {
        let x = ExtendedLagrangian::new(e("0"), e("1"), e("0"), e("0"), e("1"), e("q*qm")).unwrap();
        let h = legendre_extended(&x).unwrap();
        assert_eq!(h.h, e("p*pm + q*qm"));
        assert_eq!(h.alphas.clone().map(|a| a.as_const().unwrap().to_f64()), [1.0, 0.0, 0.0, 1.0]);
        let x2 = ExtendedLagrangian::new(e("3"), e("2"), e("5"), e("0"), e("1"), e("q^2")).unwrap();
        let h2 = legendre_extended(&x2).unwrap();
        let l2 = lag(3.0, 2.0, 5.0, "q^2");
        let f = legendre_forward(&l2, 2.0).unwrap();
        same(&h2.h, &f.hamiltonian.h);
        for (a, b) in h2.alphas.iter().zip(f.hamiltonian.alphas) {
            assert_eq!(a.as_const().unwrap().to_f64(), b);
        }
    }

    #[test]
    fn extended_validation() {
        assert!(matches!(
            ExtendedLagrangian::new(e("1"), e("0"), e("1"), e("0"), e("1"), e("0")),
            Err(LegendreError::Vanishing("beta"))
        ));
        assert!(matches!(
            ExtendedLagrangian::new(e("1"), e("1"), e("1"), e("0"), e("1"), e("0")),
            Err(LegendreError::Vanishing(_))
        ));
        assert!(matches!(
            ExtendedLagrangian::new(e("1"), e("2"), e("1"), e("qm"), e("1"), e("0")),
            Err(LegendreError::ForbiddenSymbol { role: "lambda", .. })
        ));
        let x = ExtendedLagrangian::new(e("1"), e("2"), e("1"), e("0"), e("q - q*0"), e("0")).unwrap();
        let x = ExtendedLagrangian { mu: e("q*0.5 - q/2"), ..x };
        assert!(matches!(
            legendre_extended(&x),
            Err(LegendreError::SingularMomentumMap { sample: 0 })
        ));
    }
}
