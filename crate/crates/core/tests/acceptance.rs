//! Exit-gate criteria. Runs without the libtest harness so each criterion
//! prints exactly one PASS/FAIL line; the process fails if any criterion does.

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fracmink::harness::{default_examples, random_scenario, run_pairs, run_suite, Family};
use fracmink::inequalities::{check_theorem, RealFn, Scenario, Theorem, Verdict};
use fracmink::operators::{frac_integral_direct, frac_integral_series, rl_monomial_closed_form, DEFAULT_SERIES_TOL};
use fracmink::special::{gamma, mittag_leffler3, MittagLefflerParams};
use fracmink::{
    kernel_transform_eval, make_constant_kernel, make_prabhakar_kernel, make_proportional_kernel, make_rl_kernel,
    AnalyticKernel, FractionalOrder, Interval, QuadratureSpec,
};

type Outcome = Result<String, String>;
type TestFn = fn(f64) -> fracmink::Result<f64>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    if elapsed.as_secs_f64() < limit_s as f64 {
        Ok(())
    } else {
        Err(format!("took {:.1}s, limit {limit_s}s", elapsed.as_secs_f64()))
    }
}

fn test_functions() -> Vec<(&'static str, TestFn)> {
    vec![
        ("1", |_| Ok(1.0)),
        ("theta", Ok),
        ("theta^2", |t| Ok(t * t)),
        ("sin(theta)+2", |t| Ok(t.sin() + 2.0)),
        ("exp(theta)", |t| Ok(t.exp())),
    ]
}

fn operator_oracle() -> Outcome {
    let start = Instant::now();
    let q = QuadratureSpec::default();
    let iv = Interval::left(0.0, 1.5).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for sigma in [0.5, 1.0, 2.0] {
        let k = make_rl_kernel(sigma).map_err(|e| e.to_string())?;
        let order = FractionalOrder::new(sigma, 0.0).map_err(|e| e.to_string())?;
        for mu in [0.0, 1.0, 2.5] {
            let v = frac_integral_direct(&k, order, |t| Ok(t.powf(mu)), &iv, &q).map_err(|e| e.to_string())?;
            let exact = rl_monomial_closed_form(sigma, mu, 0.0, 1.5).map_err(|e| e.to_string())?;
            let r = rel(v.value, exact);
            if r > 1e-8 {
                return Err(format!("sigma={sigma} mu={mu}: {} vs {exact} (rel {r:.2e})", v.value));
            }
            worst = worst.max(r);
        }
    }
    within(start.elapsed(), 5)?;
    Ok(format!(
        "9 cases, worst rel {worst:.2e}, {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

fn cross_method_kernels() -> fracmink::Result<Vec<(AnalyticKernel, FractionalOrder)>> {
    let mut out = Vec::new();
    for alpha in [0.5, 1.0, 1.5] {
        out.push((make_rl_kernel(alpha)?, FractionalOrder::new(alpha, 0.0)?));
    }
    let order = FractionalOrder::new(1.0, 1.0)?;
    out.push((make_constant_kernel(1.0)?, order));
    for rho in [0.5, 1.0] {
        out.push((make_proportional_kernel(rho, 1.0)?, order));
    }
    for rho in [0.5, 1.0, 2.0] {
        for omega in [0.0, 0.3, 1.0] {
            out.push((make_prabhakar_kernel(rho, omega, order)?, order));
        }
    }
    Ok(out)
}

fn cross_method() -> Outcome {
    let start = Instant::now();
    let q = QuadratureSpec::default();
    let kernels = cross_method_kernels().map_err(|e| e.to_string())?;
    let mut count = 0;
    let mut worst = 0.0f64;
    for (k, order) in &kernels {
        for (label, f) in test_functions() {
            for (a, x) in [(0.0, 1.0), (1.0, 2.0)] {
                let iv = Interval::left(a, x).map_err(|e| e.to_string())?;
                let d = frac_integral_direct(k, *order, f, &iv, &q).map_err(|e| e.to_string())?;
                let s = frac_integral_series(k, *order, f, &iv, &q, DEFAULT_SERIES_TOL).map_err(|e| e.to_string())?;
                let r = rel(s.value, d.value);
                if r > 1e-6 {
                    return Err(format!(
                        "{k} f={label} [{a},{x}]: series {} direct {}",
                        s.value, d.value
                    ));
                }
                worst = worst.max(r);
                count += 1;
            }
        }
    }
    if count < 60 {
        return Err(format!("only {count} combinations"));
    }
    within(start.elapsed(), 60)?;
    Ok(format!(
        "{count} combinations, worst rel {worst:.2e}, {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

fn reductions() -> Outcome {
    let q = QuadratureSpec::default();
    let mut worst_omega0 = 0.0f64;
    for alpha in [0.5, 1.0, 1.5] {
        let rl = make_rl_kernel(alpha).map_err(|e| e.to_string())?;
        let rl_order = FractionalOrder::new(alpha, 0.0).map_err(|e| e.to_string())?;
        for rho in [0.5, 1.0, 2.0] {
            let order = FractionalOrder::new(alpha, 0.7).map_err(|e| e.to_string())?;
            let pk = make_prabhakar_kernel(rho, 0.0, order).map_err(|e| e.to_string())?;
            for (label, f) in test_functions() {
                let iv = Interval::left(1.0, 2.0).map_err(|e| e.to_string())?;
                let a = frac_integral_direct(&pk, order, f, &iv, &q).map_err(|e| e.to_string())?;
                let b = frac_integral_direct(&rl, rl_order, f, &iv, &q).map_err(|e| e.to_string())?;
                let r = rel(a.value, b.value);
                if r > 1e-10 {
                    return Err(format!(
                        "omega=0 alpha={alpha} rho={rho} f={label}: {} vs {}",
                        a.value, b.value
                    ));
                }
                worst_omega0 = worst_omega0.max(r);
            }
        }
    }

    let mut worst_transform = 0.0f64;
    for rho in [0.5, 1.0, 2.0] {
        for (alpha, beta) in [(0.5, 0.5), (1.0, 1.0), (1.7, 0.8)] {
            let order = FractionalOrder::new(alpha, beta).map_err(|e| e.to_string())?;
            let omega = 0.6;
            let k = make_prabhakar_kernel(rho, omega, order).map_err(|e| e.to_string())?;
            for i in 0..=30 {
                let x = 1.5 * i as f64 / 30.0;
                let v = kernel_transform_eval(&k, order, x, 1e-14).map_err(|e| e.to_string())?;
                let exact = (1.0 - omega * x).powf(-rho);
                let r = rel(v, exact);
                if r > 1e-8 {
                    return Err(format!("transform rho={rho} x={x}: {v} vs {exact}"));
                }
                worst_transform = worst_transform.max(r);
            }
        }
    }

    let mut worst_exp = 0.0f64;
    for i in 0..=200 {
        let x = -5.0 + 10.0 * i as f64 / 200.0;
        let v = mittag_leffler3(MittagLefflerParams::new(1.0, 1.0, 1.0, x), 1e-16).map_err(|e| e.to_string())?;
        let r = rel(v, x.exp());
        if r > 1e-10 {
            return Err(format!("E(1,1,1)({x}) = {v}, exp = {}", x.exp()));
        }
        worst_exp = worst_exp.max(r);
    }
    Ok(format!(
        "omega=0 {worst_omega0:.2e}, transform {worst_transform:.2e}, exp {worst_exp:.2e}"
    ))
}

/// RL at three orders and the default Prabhakar kernel.
fn example_kernels() -> fracmink::Result<Vec<(AnalyticKernel, FractionalOrder)>> {
    let mut out = Vec::new();
    for alpha in [0.5, 1.0, 1.5] {
        out.push((make_rl_kernel(alpha)?, FractionalOrder::new(alpha, 0.0)?));
    }
    let order = FractionalOrder::new(1.0, 0.8)?;
    out.push((make_prabhakar_kernel(1.2, 0.3, order)?, order));
    Ok(out)
}

fn equality_cases() -> Outcome {
    let theorems = [
        Theorem::ReverseMinkowski,
        Theorem::ProductBound,
        Theorem::HolderType,
        Theorem::ProductSandwich,
        Theorem::MaxFunctional,
    ];
    let iv = Interval::left(1.0, 2.0).map_err(|e| e.to_string())?;
    let kernels = example_kernels().map_err(|e| e.to_string())?;
    let mut worst_budget = 0.0f64;
    let mut n = 0;
    for (k, order) in kernels {
        for f in ["theta + 1", "exp(theta)", "theta^2"] {
            for p in [1.0, 2.0, 3.0] {
                let fr = RealFn::parse(f).map_err(|e| e.to_string())?;
                let s = Scenario::new("eq", k.clone(), order, iv, fr.clone(), fr, p)
                    .with_bounds(1.0, 1.0)
                    .map_err(|e| e.to_string())?;
                for th in theorems {
                    let r = check_theorem(&s, th).map_err(|e| format!("{th}: {e}"))?;
                    if !(r.margin.abs() <= r.error_budget && r.error_budget <= 1e-7) {
                        return Err(format!(
                            "{th} {k} f={f} p={p}: margin {:e} budget {:e}",
                            r.margin, r.error_budget
                        ));
                    }
                    worst_budget = worst_budget.max(r.error_budget);
                    n += 1;
                }
            }
        }
    }
    Ok(format!("{n} reports, max budget {worst_budget:.2e}"))
}

fn paper_examples() -> Outcome {
    let start = Instant::now();
    let kernels = example_kernels().map_err(|e| e.to_string())?;
    let mut n = 0;
    let mut min_margin = f64::INFINITY;
    for (k, order) in kernels {
        let pairs: Vec<_> = default_examples(&k, order)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|e| (e.scenario, e.theorem))
            .collect();
        let result = run_pairs(&pairs, 4);
        for e in &result.entries {
            let r = e.outcome.as_ref().map_err(|err| format!("{k} {}: {err}", e.theorem))?;
            if r.verdict != Verdict::Holds || r.margin < -1e-9 {
                return Err(format!("{k} {}: {:?} margin {:e}", e.theorem, r.verdict, r.margin));
            }
            if r.theorem == Theorem::ReverseMinkowski && r.constant("C") != Some(7.0 / 6.0) {
                return Err(format!("example 1 constant {:?}, expected 7/6", r.constant("C")));
            }
            min_margin = min_margin.min(r.margin);
            n += 1;
        }
    }
    within(start.elapsed(), 30)?;
    Ok(format!(
        "{n} reports hold, min margin {min_margin:.3e}, C=7/6, {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

fn fuzz_suite() -> Outcome {
    let start = Instant::now();
    let scenarios: Vec<_> = (0..200).map(|seed| random_scenario(seed, Family::Admissible)).collect();
    let r = run_suite(&scenarios, &Theorem::ALL, 8);
    let c = r.counts;
    for e in &r.entries {
        match &e.outcome {
            Ok(rep) if rep.verdict == Verdict::Violated => {
                return Err(format!(
                    "{} {} violated (margin {:e})",
                    e.scenario_id, e.theorem, rep.margin
                ))
            }
            Err(err) => return Err(format!("{} {} failed: {err}", e.scenario_id, e.theorem)),
            _ => {}
        }
    }
    if c.holds + c.violated + c.inconclusive + c.failed != 1600 {
        return Err(format!("counts do not sum to 1600: {}", r.summary_line()));
    }
    within(start.elapsed(), 600)?;
    Ok(format!("{}, {:.2}s", r.summary_line(), start.elapsed().as_secs_f64()))
}

fn determinism() -> Outcome {
    let run = |par: &str| -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_fracmink"))
            .args([
                "fuzz",
                "--seeds",
                "50",
                "--seed0",
                "1",
                "--format",
                "csv",
                "--parallelism",
                par,
            ])
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!(
                "exit {:?}: {}",
                out.status.code(),
                String::from_utf8_lossy(&out.stderr)
            ));
        }
        Ok(out.stdout)
    };
    let (one, eight) = (run("1")?, run("8")?);
    if one != eight {
        return Err("CSV differs between parallelism 1 and 8".into());
    }
    let rows = one.iter().filter(|&&b| b == b'\n').count();
    Ok(format!("{} bytes, {rows} lines identical", one.len()))
}

fn special_functions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_rec = 0.0f64;
    let mut worst_refl = 0.0f64;
    for _ in 0..1000 {
        let x: f64 = rng.random_range(0.1..50.0);
        let (g, g1) = (
            gamma(x).map_err(|e| e.to_string())?,
            gamma(x + 1.0).map_err(|e| e.to_string())?,
        );
        let r = rel(g1, x * g);
        if r > 1e-12 {
            return Err(format!("recurrence at {x}: rel {r:e}"));
        }
        worst_rec = worst_rec.max(r);

        let y: f64 = rng.random_range(0.001..0.999);
        let prod =
            gamma(y).map_err(|e| e.to_string())? * gamma(1.0 - y).map_err(|e| e.to_string())? * (PI * y).sin() / PI;
        let r = (prod - 1.0).abs();
        if r > 1e-10 {
            return Err(format!("reflection at {y}: {prod}"));
        }
        worst_refl = worst_refl.max(r);
    }
    let half = gamma(0.5).map_err(|e| e.to_string())?;
    let r = rel(half, PI.sqrt());
    if r > 1e-13 {
        return Err(format!("gamma(0.5) = {half}, rel {r:e}"));
    }
    Ok(format!(
        "recurrence {worst_rec:.2e}, reflection {worst_refl:.2e}, gamma(1/2) {r:.2e}"
    ))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("operator oracle", operator_oracle),
        ("cross-method agreement", cross_method),
        ("reduction identities", reductions),
        ("equality cases", equality_cases),
        ("canned examples", paper_examples),
        ("fuzz suite", fuzz_suite),
        ("determinism", determinism),
        ("special functions", special_functions),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
