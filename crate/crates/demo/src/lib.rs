//! WebAssembly entry points for the static demo page in `www/`.
//!
//! Each export takes plain numbers and strings and returns a JSON document;
//! errors come back as a JS string. The `*_json` functions hold the logic and
//! are what the native tests exercise.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use fracmink::harness::paper_example;
use fracmink::inequalities::{check_theorem, InequalityReport, RealFn};
use fracmink::operators::{frac_integral_direct, frac_integral_series, DEFAULT_SERIES_TOL};
use fracmink::special::{mittag_leffler3, MittagLefflerParams};
use fracmink::{
    make_constant_kernel, make_prabhakar_kernel, make_proportional_kernel, make_rl_kernel, AnalyticKernel,
    FractionalOrder, Interval, QuadratureSpec,
};

const MAX_POINTS: usize = 400;

#[derive(Serialize)]
struct OperatorCurve {
    kernel: String,
    xs: Vec<f64>,
    direct: Vec<f64>,
    series: Vec<Option<f64>>,
}

#[derive(Serialize)]
struct Curve {
    xs: Vec<f64>,
    values: Vec<Option<f64>>,
}

#[derive(Serialize)]
struct ExampleCheck {
    kernel: String,
    f1: String,
    f2: String,
    report: InequalityReport,
}

fn kernel(
    name: &str,
    alpha: f64,
    beta: f64,
    rho: f64,
    omega: f64,
) -> fracmink::Result<(AnalyticKernel, FractionalOrder)> {
    let beta = if matches!(name, "rl" | "constant") { 0.0 } else { beta };
    let order = FractionalOrder::new(alpha, beta)?;
    let k = match name {
        "rl" => make_rl_kernel(alpha)?,
        "constant" => make_constant_kernel(rho)?,
        "proportional" => make_proportional_kernel(rho, alpha)?,
        "prabhakar" => make_prabhakar_kernel(rho, omega, order)?,
        other => {
            return Err(fracmink::Error::InvalidParameter {
                name: "kernel".into(),
                message: format!("unknown kernel '{other}'"),
            })
        }
    };
    Ok((k, order))
}

fn grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, String> {
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(format!("empty range [{lo}, {hi}]"));
    }
    let n = points.clamp(2, MAX_POINTS);
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

fn to_json(v: &impl Serialize) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// Left operator applied to `f` on `[a, x]` for `x` sweeping `(a, x_max]`.
#[allow(clippy::too_many_arguments)]
pub fn operator_curve_json(
    kernel_name: &str,
    alpha: f64,
    beta: f64,
    rho: f64,
    omega: f64,
    f: &str,
    a: f64,
    x_max: f64,
    points: usize,
) -> Result<String, String> {
    let (k, order) = kernel(kernel_name, alpha, beta, rho, omega).map_err(|e| e.to_string())?;
    let f = RealFn::parse(f).map_err(|e| e.to_string())?;
    let q = QuadratureSpec::default();
    let xs: Vec<f64> = grid(a, x_max, points + 1)?.into_iter().skip(1).collect();
    let mut direct = Vec::with_capacity(xs.len());
    let mut series = Vec::with_capacity(xs.len());
    for &x in &xs {
        let iv = Interval::left(a, x).map_err(|e| e.to_string())?;
        let g = |t: f64| f.eval(t);
        direct.push(
            frac_integral_direct(&k, order, g, &iv, &q)
                .map_err(|e| format!("x = {x}: {e}"))?
                .value,
        );
        // the series method can legitimately fail (radius, divergence); the curve just has a gap
        series.push(
            frac_integral_series(&k, order, g, &iv, &q, DEFAULT_SERIES_TOL)
                .ok()
                .map(|v| v.value),
        );
    }
    to_json(&OperatorCurve {
        kernel: k.name().to_string(),
        xs,
        direct,
        series,
    })
}

/// `E^rho_{beta,alpha}(z)` on `[z_min, z_max]`; points that overflow are `null`.
pub fn mittag_leffler_curve_json(
    rho: f64,
    beta: f64,
    alpha: f64,
    z_min: f64,
    z_max: f64,
    points: usize,
) -> Result<String, String> {
    let xs = grid(z_min, z_max, points)?;
    let mut values = Vec::with_capacity(xs.len());
    for &z in &xs {
        match mittag_leffler3(MittagLefflerParams::new(rho, beta, alpha, z), 1e-14) {
            Ok(v) => values.push(Some(v)),
            Err(e) if e.is_input_error() => return Err(e.to_string()),
            Err(_) => values.push(None),
        }
    }
    to_json(&Curve { xs, values })
}

/// Canned example `id` on `[a, x]`, checked with the chosen kernel.
#[allow(clippy::too_many_arguments)]
pub fn check_example_json(
    id: u32,
    ell: f64,
    p: f64,
    a: f64,
    x: f64,
    kernel_name: &str,
    alpha: f64,
    beta: f64,
    rho: f64,
    omega: f64,
) -> Result<String, String> {
    let (k, order) = kernel(kernel_name, alpha, beta, rho, omega).map_err(|e| e.to_string())?;
    let iv = Interval::left(a, x).map_err(|e| e.to_string())?;
    let name = k.name().to_string();
    let ex = paper_example(id, ell, order, k, iv, p).map_err(|e| e.to_string())?;
    let report = check_theorem(&ex.scenario, ex.theorem).map_err(|e| e.to_string())?;
    to_json(&ExampleCheck {
        kernel: name,
        f1: ex.scenario.f1.label().to_string(),
        f2: ex.scenario.f2.label().to_string(),
        report,
    })
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn operator_curve(
    kernel: &str,
    alpha: f64,
    beta: f64,
    rho: f64,
    omega: f64,
    f: &str,
    a: f64,
    x_max: f64,
    points: usize,
) -> Result<String, JsValue> {
    operator_curve_json(kernel, alpha, beta, rho, omega, f, a, x_max, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn mittag_leffler_curve(
    rho: f64,
    beta: f64,
    alpha: f64,
    z_min: f64,
    z_max: f64,
    points: usize,
) -> Result<String, JsValue> {
    mittag_leffler_curve_json(rho, beta, alpha, z_min, z_max, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn check_example(
    id: u32,
    ell: f64,
    p: f64,
    a: f64,
    x: f64,
    kernel: &str,
    alpha: f64,
    beta: f64,
    rho: f64,
    omega: f64,
) -> Result<String, JsValue> {
    check_example_json(id, ell, p, a, x, kernel, alpha, beta, rho, omega).map_err(|e| JsValue::from_str(&e))
}
