//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::time::{Duration, Instant};

use delay_hamiltonian_core::classical::ClassicalHamiltonian;
use delay_hamiltonian_core::expr::{parse, Base, Expr, JetPoint, Sampler, Symbol};
use delay_hamiltonian_core::legendre::{
    alphas_alternative, coefficients, legendre_extended, legendre_forward, legendre_reverse,
    quadratic_hamiltonian, ExtendedLagrangian,
};
use delay_hamiltonian_core::model::{
    elsgolts_residual, variational_derivative, DelayHamiltonian, Generator, QuadraticLagrangian,
};
use delay_hamiltonian_core::noether::{
    analyze, classify_invariance, drift, omega, variational_derivative_identities,
    verify_hamiltonian_identity, AnalysisOptions, Classification,
};
use delay_hamiltonian_core::random;
use delay_hamiltonian_core::recursion::{
    compare, constants_closed_form, recurse, relation_residual, SumFormRelation,
};
use delay_hamiltonian_core::solver::{step_elsgolts, step_hamiltonian, History, LagrangianHistory, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn e(s: &str) -> Expr {
    parse(s).expect("test expression")
}

fn gen(name: &str, xi: &str, eta: &str, nu: &str) -> Generator {
    Generator::new(name, e(xi), e(eta), e(nu)).expect("point generator")
}

fn lag1() -> QuadraticLagrangian {
    QuadraticLagrangian::new(0.0, 1.0, 0.0, e("q*qm")).unwrap()
}

fn lag2() -> QuadraticLagrangian {
    QuadraticLagrangian::new(1.0, 1.0, 1.0, e("(q + qm)^2/2")).unwrap()
}

fn ham1() -> DelayHamiltonian {
    DelayHamiltonian::new(e("p*pm + q*qm"), [1.0, 0.0, 0.0, 1.0]).unwrap()
}

fn ham2() -> DelayHamiltonian {
    DelayHamiltonian::new(e("(p + pm)^2/2 + (q + qm)^2/2"), [1.0; 4]).unwrap()
}

fn x1() -> Generator {
    gen("X1", "0", "sin(t)", "cos(t)")
}

fn x2() -> Generator {
    gen("X2", "0", "cos(t)", "-sin(t)")
}

fn x4() -> Generator {
    gen("X4", "0", "q", "p")
}

fn x5() -> Generator {
    gen("X5", "0", "p", "-q")
}

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let el = start.elapsed();
    check(el < limit, format!("runtime {el:?} exceeds {limit:?}"))
}

fn str_err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn off_shell_identity() -> Outcome {
    let start = Instant::now();
    let sampler = Sampler::new(100, 1e-9, 2024);
    let mut cases = vec![
        (ham1(), vec![x1(), x2(), x4(), x5()]),
        (ham2(), vec![x1(), x2()]),
    ];
    for seed in 0..20 {
        cases.push((random::quadratic_hamiltonian(seed), vec![random::polynomial_generator(seed, false)]));
    }
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (h, gens) in &cases {
        for g in gens {
            let c = verify_hamiltonian_identity(h, g, &sampler).map_err(str_err)?;
            check(c.passed, format!("identity fails for {} on {}: {:.3e}", g.name, h.h, c.worst))?;
            worst = worst.max(c.worst);
            count += 1;
        }
    }
    within(start, Duration::from_secs(5))?;
    Ok(format!("{count} (H, g) pairs, worst relative residual {worst:.2e}"))
}

fn classical_baseline() -> Outcome {
    let start = Instant::now();
    let h = ClassicalHamiltonian::new(e("(p^2 + q^2)/2")).map_err(str_err)?;
    let sampler = Sampler::new(100, 1e-9, 7);
    for g in [gen("time", "1", "0", "0"), gen("rot", "0", "p", "-q"), gen("poly", "t^2", "q*t", "p^2")] {
        let c = h.verify_identity(&g, &sampler).map_err(str_err)?;
        check(c.passed, format!("classical identity fails for {}", g.name))?;
    }
    let time = gen("time", "1", "0", "0");
    let integral = h.first_integral(&time, &sampler);
    check(integral.warning.is_none(), "time translation not a symmetry")?;
    check(sampler.holds(&(&integral.integral + &h.h)), format!("I = {} is not -H", integral.integral))?;
    let path = h.integrate(0.0, 1.0, 0.5, 1e-3, 10_000).map_err(str_err)?;
    let d = ClassicalHamiltonian::drift(&integral.integral, &path).map_err(str_err)?;
    check(d <= 1e-8, format!("energy drift {d:.3e}"))?;
    within(start, Duration::from_secs(1))?;
    Ok(format!("identity holds, I = -H drift {d:.2e} over T = 10"))
}

fn legendre_golden() -> Outcome {
    let f1 = legendre_forward(&lag1(), 1.0).map_err(str_err)?;
    check(f1.hamiltonian.h == e("p*pm + q*qm"), format!("example 1 H = {}", f1.hamiltonian.h))?;
    check(f1.hamiltonian.alphas == [1.0, 0.0, 0.0, 1.0], "example 1 alphas")?;
    let f2 = legendre_forward(&lag2(), 1.0).map_err(str_err)?;
    check(
        f2.hamiltonian.h == e("(p + pm)^2/2 + (q + qm)^2/2"),
        format!("example 2 H = {}", f2.hamiltonian.h),
    )?;
    check(f2.hamiltonian.alphas == [1.0; 4], "example 2 alphas")?;
    for l in [lag1(), lag2()] {
        let r = legendre_reverse(&quadratic_hamiltonian(&l, 1.0), 1.0).map_err(str_err)?;
        check(r.lagrangian == l, format!("reverse gives {:?}", r.lagrangian))?;
        check(r.lagrangian.to_expr() == l.to_expr(), "reverse Lagrangian trees differ")?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut tried = 0;
    while tried < 20 {
        let (a, b, g): (f64, f64, f64) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        if b.abs() < 1e-3 || (a * g - b * b).abs() < 1e-6 {
            continue;
        }
        tried += 1;
        let l = QuadraticLagrangian::new(a, b, g, Expr::zero()).map_err(str_err)?;
        let a1 = rng.random_range(0.5..2.0);
        let x = alphas_alternative(&l, a1).map_err(str_err)?;
        let y = coefficients(&l, a1);
        for i in 0..4 {
            for j in 0..4 {
                let cross = x[i] * y[j] - x[j] * y[i];
                check(cross.abs() <= 1e-12 * (1.0 + (x[i] * y[j]).abs()), format!("not proportional for {a}, {b}, {g}"))?;
            }
        }
    }
    Ok("both examples forward and back, 20 random alternative coefficient sets".into())
}

fn hist1() -> History {
    History::new(0.0, 1.0, e("cos(t) + t/4"), e("1/4 - sin(t)")).unwrap()
}

fn hist2() -> History {
    History::new(0.0, 1.0, e("sin(t) + t^2/8"), e("cos(t) + t/4")).unwrap()
}

fn max_dq(a: &Trajectory, b: &Trajectory) -> f64 {
    a.nodes().iter().zip(b.nodes()).map(|(x, y)| (x.q - y.q).abs()).fold(0.0, f64::max)
}

fn dynamics_equivalence() -> Outcome {
    let mut lines = Vec::new();
    for (name, h, l, hist) in [("example 1", ham1(), lag1(), hist1()), ("example 2", ham2(), lag2(), hist2())] {
        let mut errors = Vec::new();
        for n in [32, 64, 128, 256] {
            let th = step_hamiltonian(&h, &hist, 10.0, n).map_err(str_err)?;
            let lh = LagrangianHistory::new(0.0, 1.0, hist.q.clone())
                .map_err(str_err)?
                .with_start_velocity(th.node(th.start_index()).qd);
            let tl = step_elsgolts(&l, &lh, 10.0, n).map_err(str_err)?;
            errors.push(max_dq(&th, &tl));
        }
        check(errors[2] <= 1e-5, format!("{name}: max |dq| = {:.3e} at N = 128", errors[2]))?;
        let ord = orders(&errors);
        let low = ord.iter().cloned().fold(f64::INFINITY, f64::min);
        check(low >= 3.0, format!("{name}: orders {ord:.2?}"))?;
        lines.push(format!("{name} |dq| {:.2e} at N=128, order >= {low:.2}", errors[2]));
    }
    Ok(lines.join("; "))
}

fn first_integrals() -> Outcome {
    let printed = [
        ("example 1", ham1(), hist1(), [
            "sin(t)*(pp + pm) - cos(t)*(qp + qm)",
            "cos(t)*(pp + pm) + sin(t)*(qp + qm)",
        ]),
        ("example 2", ham2(), hist2(), [
            "sin(t)*(pp + 2*p + pm) - cos(t)*(qp + 2*q + qm)",
            "cos(t)*(pp + 2*p + pm) + sin(t)*(qp + 2*q + qm)",
        ]),
    ];
    let sampler = Sampler::default();
    let opts = AnalysisOptions::default();
    let mut worst_drift: f64 = 0.0;
    let mut worst_order = f64::INFINITY;
    for (name, h, hist, want) in printed {
        let runs: Vec<Trajectory> = [32, 64, 128]
            .iter()
            .map(|&n| step_hamiltonian(&h, &hist, 10.0, n))
            .collect::<Result<_, _>>()
            .map_err(str_err)?;
        for (g, want) in [x1(), x2()].iter().zip(want) {
            let rep = analyze(&h, g, &opts, None).map_err(str_err)?;
            let i = rep
                .quantities
                .differential_integral
                .ok_or(format!("{name} {}: no integral", g.name))?;
            check(sampler.holds(&(&i - e(want))), format!("{name} {}: I = {i}", g.name))?;
            let d: Vec<f64> = runs
                .iter()
                .map(|tr| drift(&i, tr).map(|r| r.max))
                .collect::<Result<_, _>>()
                .map_err(str_err)?;
            check(d[2] <= 1e-5, format!("{name} {}: drift {:.3e} at N = 128", g.name, d[2]))?;
            let ord = orders(&d);
            let low = ord.iter().cloned().fold(f64::INFINITY, f64::min);
            check(low >= 3.0, format!("{name} {}: drift orders {ord:.2?}", g.name))?;
            worst_drift = worst_drift.max(d[2]);
            worst_order = worst_order.min(low);
        }
    }
    Ok(format!("I1, I2 reproduced for both examples, drift <= {worst_drift:.2e} at N=128, order >= {worst_order:.2}"))
}

fn recursion_oracle() -> Outcome {
    let start = Instant::now();
    let hist = History::new(0.0, 1.0, e("sin(t)"), e("cos(t)")).map_err(str_err)?;
    let tau: f64 = 1.0;
    let (phi, psi) = (|t: f64| t.sin(), |t: f64| t.cos());
    let a_want = -tau.cos() * (phi(0.0) + phi(-2.0 * tau)) - tau.sin() * (psi(0.0) + psi(-2.0 * tau));
    let b_want = -tau.sin() * (phi(0.0) + phi(-2.0 * tau)) + tau.cos() * (psi(0.0) + psi(-2.0 * tau));
    let (a, b) = constants_closed_form(&hist).map_err(str_err)?;
    check((a - a_want).abs() < 1e-14 && (b - b_want).abs() < 1e-14, format!("A, B = {a}, {b}"))?;
    let rel = SumFormRelation::new(0.0, a, b).map_err(str_err)?;
    let rec = recurse(&rel, &hist, 6.0, 128).map_err(str_err)?;
    let res = relation_residual(&rel, &rec.trajectory);
    check(res <= 1e-12, format!("sum relations residual {res:.3e}"))?;
    let num = step_hamiltonian(&ham1(), &hist, 6.0, 128).map_err(str_err)?;
    let cmp = compare(&num, &rec.trajectory).map_err(str_err)?;
    let dq = cmp.q.map_or(f64::NAN, |d| d.max);
    let dp = cmp.p.map_or(f64::NAN, |d| d.max);
    check(dq <= 1e-5 && dp <= 1e-5, format!("max |dq| {dq:.3e}, |dp| {dp:.3e}"))?;
    within(start, Duration::from_secs(2))?;
    Ok(format!("relations {res:.1e}, |dq| {dq:.2e}, |dp| {dp:.2e} on [0, 6]"))
}

fn negative_controls() -> Outcome {
    let sampler = Sampler::default();
    let h = ham1();
    let r = classify_invariance(&h, &x4(), None, None, &sampler).map_err(str_err)?;
    check(r.classification == Classification::None, format!("X4 classified {:?}", r.classification))?;
    check(!sampler.holds(&r.omega), "Omega4 vanishes")?;
    let om = omega(&h, &x4());
    let ht = h.tilde_h();
    for base in [Base::P, Base::Q] {
        let lhs = variational_derivative(&om, base).map_err(str_err)?;
        let rhs = variational_derivative(&ht, base).map_err(str_err)?;
        check(sampler.holds(&(lhs - Expr::int(2) * rhs)), format!("dOmega4/d{base:?} not proportional"))?;
    }
    let rep = analyze(&h, &x4(), &AnalysisOptions::default(), None).map_err(str_err)?;
    check(rep.quantities.differential_integral.is_none(), "integral emitted for X4")?;
    let hd = DelayHamiltonian::new(e("p*pm + q*qm"), [0.0, 0.0, 1.0, 0.0]).map_err(str_err)?;
    let g = gen("X2", "0", "q", "p");
    let r = classify_invariance(&hd, &g, None, None, &sampler).map_err(str_err)?;
    check(sampler.holds(&(&r.omega - Expr::int(2) * hd.tilde_h())), "Omega2 != 2 tilde H")?;
    check(r.classification == Classification::None, "(0, 0, 1, 0) classified as divergence")?;
    let rep = analyze(&hd, &g, &AnalysisOptions::default(), None).map_err(str_err)?;
    check(
        rep.quantities.differential_integral.is_none() && rep.quantities.difference_integral.is_none(),
        "integral emitted for (0, 0, 1, 0)",
    )?;
    Ok("X4 None with dOmega4 = 2 dH~, (0,0,1,0) gives Omega = 2H~ and no integral".into())
}

fn equation_invariance() -> Outcome {
    let sampler = Sampler::new(100, 1e-9, 99);
    let mut cases = vec![
        (ham1(), x1()),
        (ham1(), x2()),
        (ham1(), x4()),
        (ham1(), x5()),
        (ham2(), x1()),
        (ham2(), x2()),
    ];
    for seed in 100..110 {
        cases.push((random::quadratic_hamiltonian(seed), random::polynomial_generator(seed, true)));
    }
    for (h, g) in &cases {
        let r = variational_derivative_identities(h, g, &sampler).map_err(str_err)?;
        check(r.all_passed(), format!("identities fail for {} on {}", g.name, h.h))?;
    }
    Ok(format!("{} (H, g) pairs", cases.len()))
}

fn state_dependent_legendre() -> Outcome {
    let (alpha, beta, gamma) = (3.0, 2.0, 5.0);
    let phi = e("q^2*qm + sin(qm)");
    let x = ExtendedLagrangian::new(
        Expr::real(alpha),
        Expr::real(beta),
        Expr::real(gamma),
        e("q"),
        e("2"),
        phi.clone(),
    )
    .map_err(str_err)?;
    let h = legendre_extended(&x).map_err(str_err)?;
    let (rp, rq) = h.canonical_residuals().map_err(str_err)?;
    // Independent oracle: the lambda terms are a total derivative, so the
    // equation is the one of the constant-coefficient Lagrangian.
    let oracle = elsgolts_residual(&QuadraticLagrangian::new(alpha, beta, gamma, phi).map_err(str_err)?);
    let sampler = Sampler::new(30, 1e-8, 17);
    let mut worst: f64 = 0.0;
    for i in 0..30 {
        let mut j: JetPoint = sampler.jet(i);
        for s in -1..=1i8 {
            let q = j.get(Symbol::q(s)).ok_or("jet without q")?;
            let qd = j.get(Symbol::new(Base::Q, s, 1)).ok_or("jet without qd")?;
            let qdd = j.get(Symbol::new(Base::Q, s, 2)).ok_or("jet without qdd")?;
            // qd = mu p + lambda with mu = 2, lambda = q.
            j.set(Symbol::p(s), (qd - q) / 2.0);
            j.set(Symbol::new(Base::P, s, 1), (qdd - qd) / 2.0);
        }
        let (vp, vq, vo) = (
            rp.eval(&j).map_err(str_err)?,
            rq.eval(&j).map_err(str_err)?,
            oracle.eval(&j).map_err(str_err)?,
        );
        let rel = (vq - vo).abs().max(vp.abs()) / (1.0 + vo.abs());
        check(rel <= 1e-8, format!("jet {i}: Rp {vp:.3e}, Rq {vq:.6e} vs {vo:.6e}"))?;
        worst = worst.max(rel);
    }
    Ok(format!("30 on-shell jets, worst relative mismatch {worst:.2e}"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 off-shell identity suite", off_shell_identity),
        ("2 classical baseline", classical_baseline),
        ("3 Legendre golden", legendre_golden),
        ("4 dynamics equivalence", dynamics_equivalence),
        ("5 first integrals and drift", first_integrals),
        ("6 recursion oracle", recursion_oracle),
        ("7 negative controls", negative_controls),
        ("8 invariance of equations", equation_invariance),
        ("9 state-dependent Legendre", state_dependent_legendre),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        match f() {
            Ok(detail) => println!("PASS criterion {name}: {detail} ({:.2?})", start.elapsed()),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
