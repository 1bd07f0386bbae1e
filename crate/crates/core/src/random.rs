//! Seeded random models for identity suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::{Expr, Num};
use crate::model::{DelayHamiltonian, Generator};

/// Coefficient in `[-2, 2]` on a grid of eighths, nonzero if `nonzero`.
fn coef(rng: &mut ChaCha8Rng, nonzero: bool) -> i64 {
    loop {
        let k = rng.random_range(-16i64..=16);
        if k != 0 || !nonzero {
            return k;
        }
    }
}

fn eighths(k: i64) -> Expr {
    Expr::num(Num::ratio(k, 8))
}

/// Random quadratic form in `q, qm, p, pm` with a `sin(t) q` forcing term,
/// and nonzero coefficients `alpha1..alpha4`.
pub fn quadratic_hamiltonian(seed: u64) -> DelayHamiltonian {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vars = [Expr::q(0), Expr::q(-1), Expr::p(0), Expr::p(-1)];
    let mut terms = Vec::new();
    for i in 0..vars.len() {
        for j in i..vars.len() {
            terms.push(eighths(coef(&mut rng, false)) * &vars[i] * &vars[j]);
        }
    }
    terms.push(eighths(coef(&mut rng, false)) * Expr::sin(Expr::t(0)) * Expr::q(0));
    let mut alphas = [0.0; 4];
    for a in &mut alphas {
        *a = coef(&mut rng, true) as f64 / 8.0;
    }
    DelayHamiltonian::new(Expr::sum(terms), alphas).expect("only allowed symbols")
}

fn polynomial(rng: &mut ChaCha8Rng, vars: &[Expr]) -> Expr {
    let mut terms = vec![eighths(coef(rng, false))];
    for (i, v) in vars.iter().enumerate() {
        terms.push(eighths(coef(rng, false)) * v);
        for w in &vars[i..] {
            terms.push(eighths(coef(rng, false)) * v * w);
        }
    }
    Expr::sum(terms)
}

/// Random generator with `eta`, `nu` quadratic in `t, q, p`. With
/// `affine_xi` the time component is `A t + B`, otherwise also quadratic.
pub fn polynomial_generator(seed: u64, affine_xi: bool) -> Generator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let vars = [Expr::t(0), Expr::q(0), Expr::p(0)];
    let xi = if affine_xi {
        eighths(coef(&mut rng, false)) * Expr::t(0) + eighths(coef(&mut rng, false))
    } else {
        polynomial(&mut rng, &vars)
    };
    let eta = polynomial(&mut rng, &vars);
    let nu = polynomial(&mut rng, &vars);
    Generator::new(format!("random-{seed}"), xi, eta, nu).expect("point symbols only")
}
