//! Analytic kernels `A(y) = sum_n a_n y^n` and their transformed series
//! `A_Gamma(y) = sum_n a_n Gamma(beta n + alpha) y^n`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funclang::{self, FreeVar, FunctionExpr};
use crate::series::{geometric_tail, sum_series, EmpiricalTail, SeriesSum};
use crate::special::{gamma, gamma_ratio, ln_gamma, pochhammer, prabhakar_ratio_bound};

/// Coefficients probed when classifying the sign of a kernel.
pub const SIGN_PROBE_DEPTH: usize = 512;

/// Term cap for kernel and transform series.
pub const KERNEL_TERM_CAP: usize = 2000;

const EMPIRICAL_WINDOW: usize = 8;

/// Order `(alpha, beta)` of a generalized fractional integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractionalOrder {
    pub alpha: f64,
    pub beta: f64,
}

impl FractionalOrder {
    /// `alpha > 0`, `beta >= 0`. `beta = 0` is admitted for the classical
    /// Riemann-Liouville and constant-kernel reductions.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid("alpha", format!("must be > 0, got {alpha}")));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::invalid("beta", format!("must be >= 0, got {beta}")));
        }
        Ok(Self { alpha, beta })
    }
}

/// Left endpoint `a`, evaluation point `x` and right endpoint `b`,
/// with `a < x <= b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub a: f64,
    pub x: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, x: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && x.is_finite() && b.is_finite()) {
            return Err(Error::invalid("interval", "endpoints must be finite"));
        }
        if !(a < x && x <= b) {
            return Err(Error::invalid(
                "interval",
                format!("need a < x <= b, got a={a}, x={x}, b={b}"),
            ));
        }
        Ok(Self { a, x, b })
    }

    /// Interval with `b = x`; only the left operator at `x` is needed.
    pub fn left(a: f64, x: f64) -> Result<Self> {
        Self::new(a, x, x)
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Radius {
    Finite(f64),
    Infinite,
}

impl Radius {
    pub fn exceeds(&self, y: f64) -> bool {
        match self {
            Radius::Infinite => true,
            Radius::Finite(r) => *r > y,
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            Radius::Infinite => f64::INFINITY,
            Radius::Finite(r) => *r,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignStatus {
    AllNonnegative,
    Mixed,
    /// Probe found no negative coefficient, but the tail is unproven.
    Unknown,
}

#[derive(Debug, Clone)]
pub enum KernelKind {
    Constant {
        c: f64,
    },
    RiemannLiouville {
        alpha: f64,
    },
    Proportional {
        rho: f64,
        alpha: f64,
    },
    Prabhakar {
        rho: f64,
        omega: f64,
        order: FractionalOrder,
    },
    Series {
        expr: FunctionExpr,
    },
}

/// An analytic kernel; immutable once built.
#[derive(Debug, Clone)]
pub struct AnalyticKernel {
    name: String,
    kind: KernelKind,
    radius: Radius,
    sign_status: SignStatus,
}

/// Kernel for the classical Riemann-Liouville integral: `A = 1 / Gamma(alpha)`.
pub fn make_rl_kernel(alpha: f64) -> Result<AnalyticKernel> {
    if !(alpha > 0.0) {
        return Err(Error::invalid("alpha", "must be > 0"));
    }
    Ok(AnalyticKernel {
        name: format!("rl(alpha={alpha})"),
        kind: KernelKind::RiemannLiouville { alpha },
        radius: Radius::Infinite,
        sign_status: SignStatus::AllNonnegative,
    })
}

pub fn make_constant_kernel(c: f64) -> Result<AnalyticKernel> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid("c", format!("must be > 0, got {c}")));
    }
    Ok(AnalyticKernel {
        name: format!("constant(c={c})"),
        kind: KernelKind::Constant { c },
        radius: Radius::Infinite,
        sign_status: SignStatus::AllNonnegative,
    })
}

/// Generalized proportional kernel `exp(((rho-1)/rho) y) / (rho^alpha Gamma(alpha))`.
pub fn make_proportional_kernel(rho: f64, alpha: f64) -> Result<AnalyticKernel> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::invalid("rho", format!("must lie in (0, 1], got {rho}")));
    }
    if !(alpha > 0.0) {
        return Err(Error::invalid("alpha", "must be > 0"));
    }
    let sign_status = if rho == 1.0 {
        SignStatus::AllNonnegative
    } else {
        SignStatus::Mixed
    };
    Ok(AnalyticKernel {
        name: format!("proportional(rho={rho}, alpha={alpha})"),
        kind: KernelKind::Proportional { rho, alpha },
        radius: Radius::Infinite,
        sign_status,
    })
}

/// Prabhakar kernel `E^rho_{beta,alpha}(omega y)`.
///
/// Entire for `beta > 0`; at `beta = 0` the coefficients form a binomial
/// series with radius `1 / omega`.
pub fn make_prabhakar_kernel(rho: f64, omega: f64, order: FractionalOrder) -> Result<AnalyticKernel> {
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::invalid("rho", format!("must be >= 0, got {rho}")));
    }
    if !(omega >= 0.0 && omega.is_finite()) {
        return Err(Error::invalid("omega", format!("must be >= 0, got {omega}")));
    }
    let radius = if order.beta == 0.0 && omega > 0.0 && rho > 0.0 {
        Radius::Finite(1.0 / omega)
    } else {
        Radius::Infinite
    };
    Ok(AnalyticKernel {
        name: format!(
            "prabhakar(rho={rho}, omega={omega}, alpha={}, beta={})",
            order.alpha, order.beta
        ),
        kind: KernelKind::Prabhakar { rho, omega, order },
        radius,
        sign_status: SignStatus::AllNonnegative,
    })
}

/// User kernel with coefficients `a(n)` given as an expression in `n`.
pub fn make_series_kernel(coeff_src: &str, radius: Radius) -> Result<AnalyticKernel> {
    if let Radius::Finite(r) = radius {
        if !(r > 0.0) {
            return Err(Error::invalid("radius", "must be > 0"));
        }
    }
    let expr = funclang::parse(coeff_src, FreeVar::N)?;
    let mut sign_status = SignStatus::Unknown;
    for n in 0..=SIGN_PROBE_DEPTH {
        let v = expr.eval(n as f64)?;
        if v < 0.0 {
            sign_status = SignStatus::Mixed;
        }
    }
    Ok(AnalyticKernel {
        name: format!("series(a_n={coeff_src})"),
        kind: KernelKind::Series { expr },
        radius,
        sign_status,
    })
}

/// Tail bookkeeping for one series evaluation.
pub(crate) enum TailRule {
    /// Every coefficient after `last` is zero.
    Finite {
        last: usize,
    },
    /// `bound(n)` bounds `|t_{m+1}/t_m|` for all `m >= n`; `None` when not yet available.
    Ratio(Box<dyn Fn(usize) -> Option<f64>>),
    Empirical(EmpiricalTail),
}

impl TailRule {
    pub(crate) fn tail(&mut self, n: usize, t: f64) -> Option<f64> {
        match self {
            TailRule::Finite { last } => (n >= *last).then_some(0.0),
            TailRule::Ratio(bound) => bound(n).and_then(|r| geometric_tail(t, r)),
            TailRule::Empirical(e) => e.push(n, t),
        }
    }
}

/// A kernel truncated to a polynomial valid for `|y| <= y_max`.
#[derive(Debug, Clone)]
pub struct KernelPoly {
    coeffs: Vec<f64>,
    /// Bound on the omitted tail at `|y| = y_max`.
    pub tail_bound: f64,
}

impl KernelPoly {
    pub fn eval(&self, y: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * y + c)
    }

    pub fn terms(&self) -> usize {
        self.coeffs.len()
    }
}

impl AnalyticKernel {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    pub fn radius(&self) -> Radius {
        self.radius
    }

    pub fn sign_status(&self) -> SignStatus {
        self.sign_status
    }

    /// Coefficient `a_n`.
    pub fn coeff(&self, n: usize) -> f64 {
        let nf = n as f64;
        match &self.kind {
            KernelKind::Constant { c } => {
                if n == 0 {
                    *c
                } else {
                    0.0
                }
            }
            KernelKind::RiemannLiouville { alpha } => {
                if n == 0 {
                    gamma(*alpha).map(|g| 1.0 / g).unwrap_or(f64::NAN)
                } else {
                    0.0
                }
            }
            KernelKind::Proportional { rho, alpha } => {
                let lambda = (rho - 1.0) / rho;
                let scale = match gamma(*alpha) {
                    Ok(g) => 1.0 / (rho.powf(*alpha) * g),
                    Err(_) => return f64::NAN,
                };
                if lambda == 0.0 {
                    return if n == 0 { scale } else { 0.0 };
                }
                let ln_mag = nf * lambda.abs().ln() - ln_gamma(nf + 1.0).unwrap_or(f64::NAN);
                let sign = if lambda < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
                sign * scale * ln_mag.exp()
            }
            KernelKind::Prabhakar { rho, omega, order } => prabhakar_coeff(*rho, *omega, order.alpha, order.beta, n),
            KernelKind::Series { expr } => expr.eval(nf).unwrap_or(f64::NAN),
        }
    }

    /// `(sign, ln |a_n|)`, or `None` when `a_n` is exactly zero. Built-in
    /// kernels are evaluated in log space so that tiny coefficients keep
    /// their magnitude instead of underflowing to zero.
    pub(crate) fn signed_ln_coeff(&self, n: usize) -> Option<(f64, f64)> {
        let nf = n as f64;
        let lg = |y: f64| ln_gamma(y).unwrap_or(f64::NAN);
        match &self.kind {
            KernelKind::Proportional { rho, alpha } => {
                let lambda = (rho - 1.0) / rho;
                if lambda == 0.0 && n > 0 {
                    return None;
                }
                let ln_mag = if n == 0 { 0.0 } else { nf * lambda.abs().ln() };
                let sign = if lambda < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
                Some((sign, ln_mag - lg(nf + 1.0) - alpha * rho.ln() - lg(*alpha)))
            }
            KernelKind::Prabhakar { rho, omega, order } if n > 0 => {
                if *omega == 0.0 || *rho == 0.0 {
                    return None;
                }
                let arg = order.beta * nf + order.alpha;
                Some((1.0, lg(rho + nf) - lg(*rho) + nf * omega.ln() - lg(nf + 1.0) - lg(arg)))
            }
            _ => {
                let a = self.coeff(n);
                if a == 0.0 {
                    None
                } else {
                    Some((a.signum(), a.abs().ln()))
                }
            }
        }
    }

    /// `a_n y^n`, kept accurate when `a_n` or `y^n` alone would leave the float range.
    pub(crate) fn power_term(&self, n: usize, y: f64) -> f64 {
        let a = self.coeff(n);
        if a.is_nan() {
            return a;
        }
        if a.abs() > 1e-250 {
            let direct = coeff_times_power(a, y, n);
            if direct.is_finite() && (direct != 0.0 || y == 0.0) {
                return direct;
            }
        }
        match self.signed_ln_coeff(n) {
            None => 0.0,
            Some(_) if n > 0 && y == 0.0 => 0.0,
            Some((sign, ln_a)) => {
                let sign = if y < 0.0 && n % 2 == 1 { -sign } else { sign };
                let ln_y = if n == 0 { 0.0 } else { n as f64 * y.abs().ln() };
                sign * (ln_a + ln_y).exp()
            }
        }
    }

    /// Transformed coefficient `a_n Gamma(beta n + alpha)`, evaluated in log
    /// space where the gamma factors would overflow.
    pub fn transform_coeff(&self, n: usize, order: FractionalOrder) -> f64 {
        let nf = n as f64;
        let arg = order.beta * nf + order.alpha;
        match &self.kind {
            KernelKind::Constant { c } => {
                if n == 0 {
                    gamma(order.alpha).map(|g| c * g).unwrap_or(f64::NAN)
                } else {
                    0.0
                }
            }
            KernelKind::RiemannLiouville { alpha } => {
                if n == 0 {
                    gamma_ratio(order.alpha, alpha - order.alpha).unwrap_or(f64::NAN)
                } else {
                    0.0
                }
            }
            KernelKind::Prabhakar { rho, omega, order: k } if *k == order => {
                // Gamma(beta n + alpha) cancels: (rho)_n omega^n / n!
                if n == 0 {
                    return 1.0;
                }
                if *omega == 0.0 || *rho == 0.0 {
                    return 0.0;
                }
                if n <= 30 {
                    return pochhammer(*rho, n as u32) * omega.powi(n as i32) / gamma(nf + 1.0).unwrap_or(f64::NAN);
                }
                let ln = ln_gamma(rho + nf).unwrap_or(f64::NAN) - ln_gamma(*rho).unwrap_or(f64::NAN) + nf * omega.ln()
                    - ln_gamma(nf + 1.0).unwrap_or(f64::NAN);
                ln.exp()
            }
            _ => match self.signed_ln_coeff(n) {
                None => 0.0,
                Some((sign, ln_a)) => match ln_gamma(arg) {
                    Ok(lg) => sign * (ln_a + lg).exp(),
                    Err(_) => f64::NAN,
                },
            },
        }
    }

    /// Tail rule for `sum a_n y^n` at `|y| = y_abs`. Also valid for `sum |a_n| y_abs^n`.
    pub(crate) fn eval_tail_rule(&self, y_abs: f64) -> TailRule {
        match &self.kind {
            KernelKind::Constant { .. } | KernelKind::RiemannLiouville { .. } => TailRule::Finite { last: 0 },
            KernelKind::Proportional { rho, .. } => {
                let lambda = ((rho - 1.0) / rho).abs();
                TailRule::Ratio(Box::new(move |n| Some(lambda * y_abs / (n as f64 + 1.0))))
            }
            KernelKind::Prabhakar { rho, omega, order } => {
                let (rho, z, order) = (*rho, omega * y_abs, *order);
                TailRule::Ratio(Box::new(move |n| {
                    prabhakar_ratio_bound(rho, order.beta, order.alpha, z, n).ok()
                }))
            }
            KernelKind::Series { .. } => TailRule::Empirical(EmpiricalTail::new(EMPIRICAL_WINDOW)),
        }
    }

    fn transform_tail_rule(&self, order: FractionalOrder, x_abs: f64) -> Result<TailRule> {
        Ok(match &self.kind {
            KernelKind::Constant { .. } | KernelKind::RiemannLiouville { .. } => TailRule::Finite { last: 0 },
            KernelKind::Prabhakar { rho, omega, order: k } if *k == order => {
                let (rho, z) = (*rho, omega * x_abs);
                TailRule::Ratio(Box::new(move |n| {
                    let nf = n as f64;
                    Some(((rho + nf) / (nf + 1.0)).max(1.0) * z)
                }))
            }
            KernelKind::Proportional { rho, .. } => {
                let lz = ((rho - 1.0) / rho).abs() * x_abs;
                let (alpha, beta) = (order.alpha, order.beta);
                if lz == 0.0 {
                    TailRule::Finite { last: 0 }
                } else if beta > 1.0 {
                    return Err(Error::Divergence {
                        what: format!("transform of {} with beta = {beta} > 1", self.name),
                        terms: 0,
                    });
                } else {
                    // Gamma(y + beta) / Gamma(y) <= y^beta for 0 <= beta <= 1
                    TailRule::Ratio(Box::new(move |n| {
                        let m = n as f64;
                        let g = |m: f64| (beta * m + alpha).powf(beta) / (m + 1.0);
                        let slope_sign = m * (beta * beta - beta) + beta * beta - alpha;
                        if beta < 1.0 {
                            (slope_sign <= 0.0).then(|| lz * g(m))
                        } else if alpha >= 1.0 {
                            Some(lz * g(m))
                        } else {
                            Some(lz)
                        }
                    }))
                }
            }
            _ => TailRule::Empirical(EmpiricalTail::new(EMPIRICAL_WINDOW)),
        })
    }

    pub(crate) fn check_radius(&self, y_abs: f64) -> Result<()> {
        if !self.radius.exceeds(y_abs) {
            return Err(Error::Radius {
                arg: y_abs,
                radius: self.radius.value(),
            });
        }
        Ok(())
    }

    /// Truncates the kernel to a polynomial accurate to `tol` on `|y| <= y_max`.
    pub fn truncate(&self, y_max: f64, tol: f64) -> Result<KernelPoly> {
        let y_max = y_max.abs();
        self.check_radius(y_max)?;
        let mut rule = self.eval_tail_rule(y_max);
        let mut coeffs = Vec::new();
        let s = sum_series(
            |n| {
                coeffs.push(self.coeff(n));
                self.power_term(n, y_max).abs()
            },
            |n, t| rule.tail(n, t),
            tol,
            KERNEL_TERM_CAP,
        )?;
        Ok(KernelPoly {
            coeffs,
            tail_bound: s.tail_bound,
        })
    }

    /// `A(x)` to absolute tolerance `tol`.
    pub fn eval(&self, x: f64, tol: f64) -> Result<SeriesSum> {
        self.check_radius(x.abs())?;
        let mut rule = self.eval_tail_rule(x.abs());
        sum_series(|n| self.power_term(n, x), |n, t| rule.tail(n, t), tol, KERNEL_TERM_CAP)
    }

    /// `A_Gamma(x)` to absolute tolerance `tol`.
    pub fn transform_eval(&self, order: FractionalOrder, x: f64, tol: f64) -> Result<SeriesSum> {
        let mut rule = self.transform_tail_rule(order, x.abs())?;
        sum_series(
            |n| {
                let w = self.transform_coeff(n, order);
                if w == 0.0 {
                    0.0
                } else {
                    coeff_times_power(w, x, n)
                }
            },
            |n, t| rule.tail(n, t),
            tol,
            KERNEL_TERM_CAP,
        )
        .map_err(|e| match e {
            Error::Tolerance { terms, .. } | Error::SeriesOverflow { terms } => Error::Divergence {
                what: format!("transform of {}", self.name),
                terms,
            },
            other => other,
        })
    }
}

impl fmt::Display for AnalyticKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// `c x^n`, falling back to logs when `x^n` alone leaves the float range
/// but the product does not.
fn coeff_times_power(c: f64, x: f64, n: usize) -> f64 {
    let direct = c * x.powi(n as i32);
    if direct.is_finite() && (direct != 0.0 || x == 0.0) {
        return direct;
    }
    let sign = if x < 0.0 && n % 2 == 1 { -c.signum() } else { c.signum() };
    sign * (c.abs().ln() + n as f64 * x.abs().ln()).exp()
}

fn prabhakar_coeff(rho: f64, omega: f64, alpha: f64, beta: f64, n: usize) -> f64 {
    let nf = n as f64;
    let arg = beta * nf + alpha;
    if n == 0 {
        return gamma(alpha).map(|g| 1.0 / g).unwrap_or(f64::NAN);
    }
    if omega == 0.0 || rho == 0.0 {
        return 0.0;
    }
    if n <= 20 && arg < 160.0 {
        let denom = gamma(nf + 1.0).and_then(|g| gamma(arg).map(|h| g * h));
        return denom
            .map(|d| pochhammer(rho, n as u32) * omega.powi(n as i32) / d)
            .unwrap_or(f64::NAN);
    }
    let ln = || -> Result<f64> {
        Ok(ln_gamma(rho + nf)? - ln_gamma(rho)? + nf * omega.ln() - ln_gamma(nf + 1.0)? - ln_gamma(arg)?)
    };
    ln().map(f64::exp).unwrap_or(f64::NAN)
}

/// `A(x)` with the tail truncated below `tol`.
pub fn kernel_eval(k: &AnalyticKernel, x: f64, tol: f64) -> Result<f64> {
    k.eval(x, tol).map(|s| s.value)
}

/// `A_Gamma(x) = sum a_n Gamma(beta n + alpha) x^n` with the tail truncated below `tol`.
pub fn kernel_transform_eval(k: &AnalyticKernel, order: FractionalOrder, x: f64, tol: f64) -> Result<f64> {
    k.transform_eval(order, x, tol).map(|s| s.value)
}

/// Outcome of [`validate_kernel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelValidation {
    /// `(b - a)^beta`, the largest kernel argument the operator needs.
    pub radius_arg: f64,
    pub radius: f64,
    pub radius_ok: bool,
    pub sign_status: SignStatus,
    /// First negative coefficient found by the probe, if any.
    pub first_negative: Option<usize>,
    pub probe_depth: usize,
    /// Whether inequality verdicts may be asserted (not just reported).
    pub admissible: bool,
}

pub fn validate_kernel(k: &AnalyticKernel, order: FractionalOrder, iv: &Interval) -> KernelValidation {
    let radius_arg = iv.len().powf(order.beta);
    let radius_ok = k.radius.exceeds(radius_arg);
    let first_negative = (0..=SIGN_PROBE_DEPTH).find(|&n| k.coeff(n) < 0.0);
    let sign_status = match (k.sign_status, first_negative) {
        (_, Some(_)) => SignStatus::Mixed,
        (s, None) => s,
    };
    KernelValidation {
        radius_arg,
        radius: k.radius.value(),
        radius_ok,
        sign_status,
        first_negative,
        probe_depth: SIGN_PROBE_DEPTH,
        admissible: radius_ok && sign_status == SignStatus::AllNonnegative,
    }
}
