//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Runs without the libtest harness so the summary is always printed.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use osserman_lab::config::Scenario;
use osserman_lab::criteria::{self, Outcome};
use osserman_lab::envelopes::{Nonlinearity, Profile, ProblemSpec};
use osserman_lab::estimates::{self, BoundKind, BoundValue, EstimateOptions, GrowthBound, RateKind};
use osserman_lab::par;
use osserman_lab::powerlog::{fmt_rational, q, qi, to_f64, PowerLogTerm, Rational};
use osserman_lab::quadrature::{self, TailOptions};
use osserman_lab::radial::{self, RadialCandidate, Status};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

/// Label, problem, expected kind, `r` exponent and `log` exponent.
type RateCase = (String, ProblemSpec, RateKind, Rational, Rational);

fn term(c: f64, a: Rational, b: Rational) -> PowerLogTerm {
    PowerLogTerm::new(c, a, b, Rational::zero()).expect("positive coefficient")
}

fn problem(p: Rational, b: Option<(Rational, Rational)>, l: Rational, mu: Rational, g: Nonlinearity) -> ProblemSpec {
    let b = b.map_or(Profile::Zero, |(k, m)| Profile::term(term(1.0, k, m)));
    ProblemSpec::new(p, b, Profile::term(term(1.0, l, mu)), g)
}

fn power(lambda: Rational) -> Nonlinearity {
    Nonlinearity::Power { lambda }
}

/// A rational with denominator `den` drawn from `[lo, hi]`.
fn draw(rng: &mut ChaCha8Rng, den: i64, lo: Rational, hi: Rational) -> Rational {
    let a = (lo * den).ceil().to_integer();
    let b = (hi * den).floor().to_integer();
    q(rng.gen_range(a..=b), den)
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.toml"))
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    if elapsed.as_secs_f64() < limit_s {
        Ok(())
    } else {
        Err(format!("took {:.2} s, limit {limit_s} s", elapsed.as_secs_f64()))
    }
}

// 1 ------------------------------------------------------------------------

fn sharp_boundary_in_l() -> Check {
    let t = Instant::now();
    let ls: Vec<Rational> = [-3, -2].map(qi).into_iter().chain([q(-3, 2), qi(-1), q(-1, 2), qi(0), qi(1)]).collect();
    let verdicts = par::map(&ls, |&l| criteria::evaluate(&problem(qi(2), Some((qi(0), qi(0))), l, qi(0), power(qi(2)))));
    let boundary = qi(0) - qi(2) + qi(1);
    let mut line = Vec::new();
    for (l, v) in ls.iter().zip(&verdicts) {
        let trivial = v.outcome == Outcome::Trivial;
        if trivial != (*l >= boundary) {
            return Err(format!("l = {}: {} ({})", fmt_rational(*l), v.outcome, v.applied));
        }
        line.push(format!("{}:{}", fmt_rational(*l), if trivial { "T" } else { "-" }));
    }
    within(t.elapsed(), 5.0)?;
    Ok(format!("Trivial exactly for l >= -1 [{}]", line.join(" ")))
}

// 2 ------------------------------------------------------------------------

fn log_critical_boundaries() -> Check {
    let t = Instant::now();
    let one = Rational::one();
    let mut cases = 0;
    for p in [qi(2), q(3, 2), qi(3)] {
        let lambda = p; // any lambda > p - 1
        for k in [qi(0), q(1, 2), qi(1)] {
            let l = k - p + one;
            for n in -12..=4 {
                let mu = q(n, 4);
                let v = criteria::evaluate(&problem(p, Some((k, qi(0))), l, mu, power(lambda)));
                if (v.outcome == Outcome::Trivial) != (mu >= one - p) {
                    return Err(format!("p = {p}, k = {k}, mu = {mu}: {}", v.outcome));
                }
                cases += 1;
            }
        }
        for k in [qi(-1), qi(0), q(1, 2)] {
            let l = k - p + one;
            for n in -4..=16 {
                let m = q(n, 4);
                let v = criteria::evaluate(&problem(p, Some((k, m)), l, qi(0), power(lambda)));
                if (v.outcome == Outcome::Trivial) != (m <= p - one) {
                    return Err(format!("p = {p}, k = {k}, m = {m}: {}", v.outcome));
                }
                cases += 1;
            }
        }
    }
    within(t.elapsed(), 1.0)?;
    Ok(format!("{cases} exact cases: Trivial iff mu >= 1-p (q log) and m <= p-1 (b log)"))
}

// 3 ------------------------------------------------------------------------

/// Independently derived rate table.
fn rate_cases(rng: &mut ChaCha8Rng) -> Vec<RateCase> {
    let one = Rational::one();
    let mut out = Vec::new();
    for i in 0..20 {
        let p = [qi(2), q(3, 2), qi(3), q(5, 2)][rng.gen_range(0..4)];
        let k = draw(rng, 4, q(-3, 4), qi(2));
        let crit = k - p + one;
        let case = match i % 4 {
            0 => {
                // power lower estimate
                let lambda = draw(rng, 4, Rational::zero(), p - one - q(1, 4));
                let l = crit + draw(rng, 4, q(1, 4), qi(3));
                let d = p - one - lambda;
                ("lower power", problem(p, Some((k, qi(0))), l, qi(0), power(lambda)), (l - k + p - one) / d, qi(0))
            }
            1 => {
                // log-weighted q at the critical power
                let lambda = draw(rng, 4, Rational::zero(), p - one - q(1, 4));
                let mu = one - p + draw(rng, 4, q(1, 4), qi(3));
                let d = p - one - lambda;
                ("lower log", problem(p, Some((k, qi(0))), crit, mu, power(lambda)), qi(0), (mu + p - one) / d)
            }
            2 => {
                // power-log nonlinearity
                let lambda = draw(rng, 4, q(1, 4), p - one - q(1, 4));
                let s = draw(rng, 4, -lambda, qi(2));
                let l = crit + draw(rng, 4, q(1, 4), qi(3));
                let d = p - one - lambda;
                let g = Nonlinearity::PowerLog { lambda, s };
                ("lower power-log g", problem(p, Some((k, qi(0))), l, qi(0), g), (l - k + p - one) / d, s / d)
            }
            _ => {
                // upper estimates, power or log weighted q
                let lambda = p - one + draw(rng, 4, q(1, 4), qi(3));
                let d = p - one - lambda;
                if rng.gen_bool(0.5) {
                    let l = crit - draw(rng, 4, q(1, 4), qi(3));
                    ("upper power", problem(p, Some((k, qi(0))), l, qi(0), power(lambda)), (l - k + p - one) / d, qi(0))
                } else {
                    let mu = one - p - draw(rng, 4, q(1, 4), qi(3));
                    ("upper log", problem(p, Some((k, qi(0))), crit, mu, power(lambda)), qi(0), (mu + p - one) / d)
                }
            }
        };
        out.push((case.0.to_string(), case.1, RateKind::Power, case.2, case.3));
    }
    out
}

fn rate_formulas() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x2_5);
    let cases = rate_cases(&mut rng);
    let mut mismatches = Vec::new();
    for (label, spec, kind, a, b) in &cases {
        match estimates::symbolic_rate(spec) {
            Ok(rate) if rate.kind == *kind && rate.term.exponents() == (*a, *b, qi(0)) => {}
            Ok(rate) => mismatches.push(format!("{label}: got {rate}, want r^{a} log^{b}")),
            Err(e) => mismatches.push(format!("{label}: {e}")),
        }
    }
    if mismatches.is_empty() {
        Ok(format!("{} randomized tuples, zero mismatches", cases.len()))
    } else {
        Err(format!("{} mismatches: {}", mismatches.len(), mismatches.join("; ")))
    }
}

// 4 ------------------------------------------------------------------------

fn critical_exponential_rates() -> Check {
    let one = Rational::one();
    let mut checked = 0;
    for p in [qi(2), q(3, 2), qi(3)] {
        for k in [q(-1, 2), qi(0), q(1, 2), qi(1)] {
            let pk = p * k;
            let crit = k - p + one;
            for dl in [q(-3, 4), q(-1, 4), qi(0), q(1, 4), q(3, 4)] {
                let l = pk + dl;
                if l <= crit {
                    continue;
                }
                let spec = problem(p, Some((k, qi(0))), l, qi(0), power(p - one));
                let want = if l <= pk { (l - k + p - one) / (p - one) } else { (l + p) / p };
                let rate = estimates::symbolic_rate(&spec).map_err(|e| format!("p = {p}, k = {k}, l = {l}: {e}"))?;
                if rate.kind != RateKind::Exponential || rate.term.exponents() != (want, qi(0), qi(0)) {
                    return Err(format!("p = {p}, k = {k}, l = {l}: got {rate}, want log M ~ r^{want}"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} cases on both sides of l = pk"))
}

// 5 ------------------------------------------------------------------------

fn numeric_symbolic_agreement() -> Check {
    let t = Instant::now();
    let one = Rational::one();
    // G ~ M^((p-1-lambda)/p) starts at M = 1; when that power is small the
    // offset still bends the fitted slope at r = 1e3, so the lower forms
    // here keep lambda well below p - 1
    let specs = vec![
        problem(qi(2), Some((qi(0), qi(0))), qi(0), qi(0), power(qi(0))),
        problem(qi(3), Some((qi(0), qi(0))), qi(0), qi(0), power(qi(0))),
        problem(qi(2), Some((q(1, 2), qi(0))), qi(1), qi(0), power(q(1, 2))),
        problem(qi(3), Some((qi(0), qi(0))), qi(0), qi(0), power(qi(1))),
        problem(qi(2), None, qi(0), qi(0), power(qi(0))),
        problem(qi(2), Some((qi(0), qi(0))), qi(-2), qi(0), power(qi(3))),
        problem(qi(2), Some((qi(0), qi(0))), qi(-3), qi(0), power(qi(2))),
        problem(qi(2), Some((qi(0), qi(0))), qi(0), qi(0), power(one)),
        problem(qi(2), Some((qi(1), qi(0))), qi(1), qi(0), power(one)),
        problem(qi(3), Some((qi(0), qi(0))), qi(1), qi(0), power(qi(2))),
    ];
    let radii = radial::geometric_radii(1e3, 1e6, 25);
    let results = par::map(&specs, |spec| -> Result<(f64, f64), String> {
        let v = criteria::evaluate(spec);
        let kind = match v.outcome {
            Outcome::LowerEstimate => BoundKind::Lower,
            Outcome::MinEstimate => BoundKind::Min,
            Outcome::UpperEstimate => BoundKind::Upper,
            other => return Err(format!("{other}")),
        };
        let rate = estimates::symbolic_rate(spec).map_err(|e| e.to_string())?;
        let bound = GrowthBound::from_spec(spec, kind, &EstimateOptions::default(), v.stabilized_at).map_err(|e| e.to_string())?;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &r in &radii {
            let ln_m = bound.invert(r).map_err(|e| e.to_string())?.ln_m().ok_or("no finite bound")?;
            xs.push(r.ln());
            ys.push(match rate.kind {
                RateKind::Power => ln_m,
                RateKind::Exponential => ln_m.ln(),
                RateKind::DoubleExponential => ln_m.ln().ln(),
            });
        }
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        Ok((sxy / sxx, to_f64(rate.exponent())))
    });
    let mut worst: f64 = 0.0;
    let mut off = Vec::new();
    for (i, res) in results.into_iter().enumerate() {
        let (slope, exponent) = res.map_err(|e| format!("spec {i}: {e}"))?;
        let rel = (slope / exponent - 1.0).abs();
        if rel > 0.03 {
            off.push(format!("spec {i}: slope {slope:.4} vs exponent {exponent:.4} ({:.1}%)", 100.0 * rel));
        }
        worst = worst.max(rel);
    }
    if !off.is_empty() {
        return Err(off.join("; "));
    }
    within(t.elapsed(), 30.0)?;
    Ok(format!("10 specs, worst slope deviation {:.2}%", 100.0 * worst))
}

// 6 ------------------------------------------------------------------------

fn witness_verification() -> Check {
    let mut notes = Vec::new();
    for name in ["e2_1", "e2_2", "e2_3", "e2_4"] {
        let sc = Scenario::load(&fixture(name)).map_err(|e| e.to_string())?;
        let spec = &sc.spec;
        let w = criteria::sharpness_witness(spec).ok_or(format!("{name}: no witness"))?;
        let cand = RadialCandidate::ClosedForm(w);
        let (lo, hi) = (spec.r0, 1e6 * spec.r0);
        let rep = radial::verify_witness(&cand, spec, lo, hi, 10_000, 0.0).map_err(|e| e.to_string())?;
        if !rep.pass || rep.samples != 10_000 || rep.min_relative_residual < 0.0 {
            return Err(format!("{name}: shipped fixture fails ({:e} at r = {})", rep.min_relative_residual, rep.at_radius));
        }
        let mut bumped = spec.clone();
        if let Profile::Symbolic { term, .. } = &mut bumped.q {
            *term = term.scale(10.0).unwrap();
        }
        let bad = radial::verify_witness(&cand, &bumped, lo, hi, 10_000, 0.0).map_err(|e| e.to_string())?;
        if bad.pass {
            return Err(format!("{name}: 10x q still passes"));
        }
        notes.push(format!("{name} min {:.3e}", rep.min_relative_residual));
    }
    Ok(format!("PASS on fixtures, FAIL at 10x q [{}]", notes.join(", ")))
}

// 7 ------------------------------------------------------------------------

fn blow_up_probe() -> Check {
    let t = Instant::now();
    let ko = ProblemSpec::new(qi(2), Profile::Zero, Profile::term(term(1.0, qi(0), qi(0))), power(qi(2)));
    let u0s = [1e3, 1.0, 1e-3];
    let runs = par::map(&u0s, |&u0| radial::shoot(&ko, u0, 1e-6, 1e6));
    let mut radii = Vec::new();
    for (u0, run) in u0s.iter().zip(runs) {
        match run.map_err(|e| format!("u0 = {u0}: {e}"))?.status {
            Status::BlowUp { radius } => radii.push(radius),
            other => return Err(format!("u0 = {u0}: {other:?}")),
        }
    }
    if !radii.windows(2).all(|w| w[0] < w[1]) {
        return Err(format!("blow-up radii not increasing as u0 decreases: {radii:?}"));
    }
    let sc = Scenario::load(&fixture("e2_1")).map_err(|e| e.to_string())?;
    let w = criteria::sharpness_witness(&sc.spec).ok_or("no witness")?;
    let r0 = sc.spec.r0;
    let u0 = 0.5 * w.u(r0);
    let sol = radial::shoot(&sc.spec, u0, r0, 1e6 * r0).map_err(|e| e.to_string())?;
    let Status::Global { r_max } = sol.status else {
        return Err(format!("below the witness: {:?}", sol.status));
    };
    within(t.elapsed(), 60.0)?;
    Ok(format!(
        "BlowUp at r = {:.4}, {:.4}, {:.4} for u0 = 1e3, 1, 1e-3; Global to {r_max:e} below the witness",
        radii[0], radii[1], radii[2]
    ))
}

// 8 ------------------------------------------------------------------------

fn quadrature_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let opts = TailOptions::default();
    let mut terms = Vec::new();
    while terms.len() < 50 {
        let a = draw(&mut rng, 20, qi(-3), qi(1));
        let b = draw(&mut rng, 4, qi(-3), qi(3));
        if (to_f64(a) + 1.0).abs() < 0.05 {
            continue;
        }
        terms.push(term(rng.gen_range(0.5..2.0), a, b));
    }
    let verdicts = par::map(&terms, |t| {
        quadrature::classify_tail(|r| t.eval(r).unwrap_or(f64::NAN), 10.0, &opts)
    });
    let mut wrong = Vec::new();
    for (t, c) in terms.iter().zip(&verdicts) {
        if c.converges() != Some(t.tail_converges()) {
            wrong.push(format!("{t}: {c:?}"));
        }
    }
    if wrong.is_empty() {
        Ok("50 terms outside the guard band, zero misclassifications".into())
    } else {
        Err(format!("{} misclassified: {}", wrong.len(), wrong.join("; ")))
    }
}

// 9 ------------------------------------------------------------------------

fn inversion_consistency() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let one = Rational::one();
    let mut draws = Vec::new();
    for _ in 0..100 {
        let p = [qi(2), q(3, 2), qi(3)][rng.gen_range(0..3)];
        let k = draw(&mut rng, 4, q(-1, 2), qi(1));
        let crit = k - p + one;
        let (l, lambda) = match rng.gen_range(0..3) {
            0 => (crit + draw(&mut rng, 4, q(1, 4), qi(2)), draw(&mut rng, 4, Rational::zero(), p - one - q(1, 4))),
            1 => (crit + draw(&mut rng, 4, q(1, 4), qi(2)), p - one),
            _ => (crit - draw(&mut rng, 4, q(1, 4), qi(2)), p - one + draw(&mut rng, 4, q(1, 4), qi(2))),
        };
        let c = rng.gen_range(0.1..10.0);
        let ln_r = rng.gen_range(3f64..(1e5f64).ln());
        draws.push((problem(p, Some((k, qi(0))), l, qi(0), power(lambda)), c, ln_r));
    }
    let results = par::map(&draws, |(spec, c, ln_r)| -> Result<Option<f64>, String> {
        let v = criteria::evaluate(spec);
        let kind = match v.outcome {
            Outcome::LowerEstimate => BoundKind::Lower,
            Outcome::MinEstimate => BoundKind::Min,
            Outcome::UpperEstimate => BoundKind::Upper,
            other => return Err(format!("unexpected {other}")),
        };
        let opts = EstimateOptions { c: *c, ..EstimateOptions::default() };
        let bound = GrowthBound::from_spec(spec, kind, &opts, v.stabilized_at).map_err(|e| e.to_string())?;
        let r = ln_r.exp().max(bound.r_star);
        let target = bound.target(r).map_err(|e| e.to_string())?;
        match bound.invert(r).map_err(|e| e.to_string())? {
            // M = 1 is the vacuous end of the domain, not an interior inverse
            BoundValue::Finite { ln_m, .. } if ln_m > 0.0 => {
                let g = bound.lhs_ln(ln_m).map_err(|e| e.to_string())?;
                Ok(Some((g / target - 1.0).abs()))
            }
            _ => Ok(None),
        }
    });
    let mut worst: f64 = 0.0;
    let mut interior = 0;
    for (i, res) in results.into_iter().enumerate() {
        if let Some(rel) = res.map_err(|e| format!("draw {i}: {e}"))? {
            interior += 1;
            if rel > 1e-8 {
                return Err(format!("draw {i}: relative mismatch {rel:e}"));
            }
            worst = worst.max(rel);
        }
    }
    if interior < 80 {
        return Err(format!("only {interior} of 100 draws had an interior inverse"));
    }
    Ok(format!("{interior}/100 interior draws, worst relative error {worst:.1e}"))
}

fn main() {
    let _ = env_logger::builder().is_test(true).try_init();
    let criteria: [Criterion; 9] = [
        ("sharp boundary in l", sharp_boundary_in_l),
        ("log-critical boundaries", log_critical_boundaries),
        ("rate formulas", rate_formulas),
        ("critical exponential rates", critical_exponential_rates),
        ("numeric/symbolic agreement", numeric_symbolic_agreement),
        ("witness verification", witness_verification),
        ("blow-up probe", blow_up_probe),
        ("quadrature oracle", quadrature_oracle),
        ("inversion consistency", inversion_consistency),
    ];
    let mut failed = 0;
    println!("acceptance ({} build)", if par::is_parallel() { "parallel" } else { "sequential" });
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let res = check();
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("[PASS] {}. {name} ({secs:.2} s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {}. {name} ({secs:.2} s): {detail}", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
