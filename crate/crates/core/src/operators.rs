//! Left and right fractional integrals with analytic kernels, evaluated by
//! direct quadrature or as a series of Riemann-Liouville integrals.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{AnalyticKernel, FractionalOrder, Interval, KERNEL_TERM_CAP};
use crate::quadrature::{chebyshev_nodes, integrate, QuadratureSpec};
use crate::series::sum_series;
use crate::special::{gamma_ratio, ln_gamma};

/// Default tolerance on the truncated tail of the series method.
pub const DEFAULT_SERIES_TOL: f64 = 1e-10;

/// Sample count for the sup-norm estimate used by the series tail bound.
pub const SUP_SAMPLES: usize = 257;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Direct,
    Series,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorValue {
    pub value: f64,
    pub error_estimate: f64,
    pub method: Method,
    /// Quadrature panels (direct) or series terms (series).
    pub terms_or_cells: usize,
}

/// `int_0^h t^(sigma-1) g(t) dt`, with the endpoint singularity removed by
/// `s = t^sigma` when `sigma < 1`.
fn weighted_integral<G>(sigma: f64, h: f64, mut g: G, q: &QuadratureSpec) -> Result<(f64, f64, usize)>
where
    G: FnMut(f64) -> Result<f64>,
{
    let r = if sigma < 1.0 {
        let inv = 1.0 / sigma;
        integrate(|s: f64| Ok(g(s.powf(inv))? * inv), 0.0, h.powf(sigma), q)?
    } else if sigma == 1.0 {
        integrate(g, 0.0, h, q)?
    } else {
        let e = sigma - 1.0;
        integrate(|t: f64| Ok(t.powf(e) * g(t)?), 0.0, h, q)?
    };
    Ok((r.value, r.error, r.panels))
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("sigma", format!("must be > 0, got {sigma}")));
    }
    Ok(())
}

fn finite_at<F>(f: &F, theta: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let v = f(theta)?;
    if !v.is_finite() {
        return Err(Error::Domain(format!("f({theta}) = {v}")));
    }
    Ok(v)
}

/// Classical Riemann-Liouville integral `(1/Gamma(sigma)) int_a^x f(t)(x-t)^(sigma-1) dt`.
pub fn rl_integral<F>(sigma: f64, f: F, a: f64, x: f64, q: &QuadratureSpec) -> Result<OperatorValue>
where
    F: Fn(f64) -> Result<f64>,
{
    check_sigma(sigma)?;
    q.validate()?;
    if !(a < x) {
        return Err(Error::invalid("interval", format!("need a < x, got a={a}, x={x}")));
    }
    let scale = (-ln_gamma(sigma)?).exp();
    let (value, error, panels) = weighted_integral(sigma, x - a, |t| Ok(scale * finite_at(&f, x - t)?), q)?;
    Ok(OperatorValue {
        value,
        error_estimate: error,
        method: Method::Series,
        terms_or_cells: panels,
    })
}

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
}

fn kernel_integral<F>(
    k: &AnalyticKernel,
    order: FractionalOrder,
    f: F,
    x: f64,
    h: f64,
    side: Side,
    q: &QuadratureSpec,
) -> Result<OperatorValue>
where
    F: Fn(f64) -> Result<f64>,
{
    q.validate()?;
    let y_max = h.powf(order.beta);
    let tol = (q.abs_tol * 1e-3).min(1e-13);
    let poly = k.truncate(y_max, tol)?;
    let f_max = Cell::new(0.0f64);
    let beta = order.beta;
    let (value, error, panels) = weighted_integral(
        order.alpha,
        h,
        |t| {
            let theta = match side {
                Side::Left => x - t,
                Side::Right => x + t,
            };
            let fv = finite_at(&f, theta)?;
            f_max.set(f_max.get().max(fv.abs()));
            let y = if beta == 0.0 { 1.0 } else { t.powf(beta) };
            Ok(fv * poly.eval(y))
        },
        q,
    )?;
    // omitted kernel tail, integrated against t^(alpha-1) |f|
    let truncation = poly.tail_bound * f_max.get() * h.powf(order.alpha) / order.alpha;
    Ok(OperatorValue {
        value,
        error_estimate: error + truncation,
        method: Method::Direct,
        terms_or_cells: panels,
    })
}

/// `int_a^x f(t) (x-t)^(alpha-1) A((x-t)^beta) dt` by adaptive quadrature.
pub fn frac_integral_direct<F>(
    k: &AnalyticKernel,
    order: FractionalOrder,
    f: F,
    iv: &Interval,
    q: &QuadratureSpec,
) -> Result<OperatorValue>
where
    F: Fn(f64) -> Result<f64>,
{
    kernel_integral(k, order, f, iv.x, iv.x - iv.a, Side::Left, q)
}

/// `int_x^b f(t) (t-x)^(alpha-1) A((t-x)^beta) dt` by adaptive quadrature.
pub fn frac_integral_right<F>(
    k: &AnalyticKernel,
    order: FractionalOrder,
    f: F,
    iv: &Interval,
    q: &QuadratureSpec,
) -> Result<OperatorValue>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(iv.x < iv.b) {
        return Err(Error::invalid(
            "interval",
            format!("right operator needs x < b, got x={}, b={}", iv.x, iv.b),
        ));
    }
    kernel_integral(k, order, f, iv.x, iv.b - iv.x, Side::Right, q)
}

/// Estimate of `sup |f|` on `[a, x]` from Chebyshev samples.
pub fn sup_norm<F>(f: &F, a: f64, x: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    chebyshev_nodes(a, x, SUP_SAMPLES)
        .into_iter()
        .try_fold(0.0f64, |m, t| Ok(m.max(finite_at(f, t)?.abs())))
}

/// `sum_n a_n Gamma(beta n + alpha) I_RL^(alpha + n beta) f`, truncated when
/// the tail bound falls below `series_tol`.
pub fn frac_integral_series<F>(
    k: &AnalyticKernel,
    order: FractionalOrder,
    f: F,
    iv: &Interval,
    q: &QuadratureSpec,
    series_tol: f64,
) -> Result<OperatorValue>
where
    F: Fn(f64) -> Result<f64>,
{
    q.validate()?;
    if !(series_tol > 0.0) {
        return Err(Error::invalid("series_tol", "must be > 0"));
    }
    let (a, x, h) = (iv.a, iv.x, iv.x - iv.a);
    let f_sup = sup_norm(&f, a, x)?;
    let mass = h.powf(order.alpha) / order.alpha;

    if order.beta == 0.0 {
        // (x-t)^0 = 1: the operator is A(1) Gamma(alpha) I_RL^alpha f
        if !k.radius().exceeds(1.0) {
            return Err(Error::Radius {
                arg: 1.0,
                radius: k.radius().value(),
            });
        }
        let tol = series_tol / (f_sup * mass).max(f64::MIN_POSITIVE);
        let weight = k.transform_eval(order, 1.0, tol)?;
        let rl = rl_integral(order.alpha, &f, a, x, q)?;
        return Ok(OperatorValue {
            value: weight.value * rl.value,
            error_estimate: weight.value.abs() * rl.error_estimate + weight.tail_bound * f_sup * mass,
            method: Method::Series,
            terms_or_cells: weight.terms,
        });
    }

    let y = h.powf(order.beta);
    k.check_radius(y)?;
    let mut rule = k.eval_tail_rule(y);
    let mut quad_error = 0.0;
    let mut failure = None;
    let kernel_term = |n: usize| k.power_term(n, y).abs();
    let s = sum_series(
        |n| {
            if failure.is_some() {
                return f64::NAN;
            }
            let w = k.transform_coeff(n, order);
            if w == 0.0 {
                return 0.0;
            }
            let sigma = order.alpha + n as f64 * order.beta;
            match rl_integral(sigma, &f, a, x, q) {
                Ok(r) => {
                    quad_error += (w * r.error_estimate).abs();
                    w * r.value
                }
                Err(e) => {
                    failure = Some(e);
                    f64::NAN
                }
            }
        },
        |n, _| {
            rule.tail(n, kernel_term(n))
                .map(|tail| f_sup * h.powf(order.alpha) / (order.alpha + (n + 1) as f64 * order.beta) * tail)
        },
        series_tol,
        KERNEL_TERM_CAP,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let s = s.map_err(|e| match e {
        Error::Tolerance { terms, .. } => Error::Divergence {
            what: format!("series of RL integrals for {}", k.name()),
            terms,
        },
        other => other,
    })?;
    Ok(OperatorValue {
        value: s.value,
        error_estimate: s.tail_bound + quad_error,
        method: Method::Series,
        terms_or_cells: s.terms,
    })
}

/// `I_RL^sigma (t-a)^mu` at `x`: `Gamma(mu+1)/Gamma(mu+sigma+1) (x-a)^(mu+sigma)`.
pub fn rl_monomial_closed_form(sigma: f64, mu: f64, a: f64, x: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if !(mu > -1.0) {
        return Err(Error::Domain(format!("monomial exponent mu = {mu} must exceed -1")));
    }
    if !(x >= a) {
        return Err(Error::invalid("interval", format!("need x >= a, got a={a}, x={x}")));
    }
    Ok(gamma_ratio(mu + 1.0, sigma)? * (x - a).powf(mu + sigma))
}
