//! Both sides of the reverse Minkowski-type inequalities for a scenario,
//! with hypothesis checks, signed margins and verdicts.

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::funclang::{self, FreeVar, FunctionExpr};
use crate::kernels::{validate_kernel, AnalyticKernel, FractionalOrder, Interval};
use crate::operators::{frac_integral_direct, OperatorValue};
use crate::quadrature::{chebyshev_nodes, QuadratureSpec};

/// Default number of Chebyshev points for hypothesis checks.
pub const DEFAULT_GRID: usize = 1025;

/// Multiplier applied to propagated error estimates to form the error budget.
pub const SAFETY_FACTOR: f64 = 10.0;

/// Quadrature defaults for scenarios: tighter than the operator defaults so
/// that error budgets of equality cases stay well below 1e-7.
pub const SCENARIO_QUAD: QuadratureSpec = QuadratureSpec {
    abs_tol: 1e-11,
    rel_tol: 1e-11,
    max_subdivisions: 4096,
};

// slack for ratio checks, so bounds built exactly are not rejected by rounding
const RATIO_SLACK: f64 = 1e-12;

type Handle = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// A real function of one variable with a printable label.
#[derive(Clone)]
pub struct RealFn {
    label: String,
    f: Handle,
}

impl RealFn {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> Result<f64> + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn from_expr(expr: FunctionExpr) -> Self {
        let label = expr.to_string();
        Self::new(label, move |t| Ok(expr.eval(t)?))
    }

    /// Parses a funclang expression in `theta`.
    pub fn parse(src: &str) -> Result<Self> {
        Ok(Self::from_expr(funclang::parse(src, FreeVar::Theta)?))
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        (self.f)(t)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `c * self`.
    pub fn scaled(&self, c: f64) -> Self {
        let f = self.f.clone();
        Self::new(format!("{c:?}*({})", self.label), move |t| Ok(c * f(t)?))
    }
}

impl fmt::Debug for RealFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RealFn({})", self.label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioBounds {
    pub tau1: f64,
    pub tau2: f64,
}

impl RatioBounds {
    pub fn new(tau1: f64, tau2: f64) -> Result<Self> {
        if !(tau1 > 0.0 && tau1.is_finite()) {
            return Err(Error::invalid("tau1", format!("must be > 0, got {tau1}")));
        }
        if !(tau2 >= tau1 && tau2.is_finite()) {
            return Err(Error::invalid("tau2", format!("must be >= tau1 = {tau1}, got {tau2}")));
        }
        Ok(Self { tau1, tau2 })
    }
}

/// Pointwise bounds `m <= f1 <= M`, `n <= f2 <= N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxBounds {
    pub m: f64,
    pub big_m: f64,
    pub n: f64,
    pub big_n: f64,
}

impl BoxBounds {
    pub fn new(m: f64, big_m: f64, n: f64, big_n: f64) -> Result<Self> {
        if !(0.0 <= m && m <= big_m && big_m.is_finite()) {
            return Err(Error::invalid("box", format!("need 0 <= m <= M, got m={m}, M={big_m}")));
        }
        if !(0.0 <= n && n <= big_n && big_n.is_finite()) {
            return Err(Error::invalid("box", format!("need 0 <= n <= N, got n={n}, N={big_n}")));
        }
        if m + big_n == 0.0 || n + big_m == 0.0 {
            return Err(Error::invalid("box", "m + N and n + M must be positive"));
        }
        Ok(Self { m, big_m, n, big_n })
    }
}

/// Everything a theorem checker needs.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub kernel: AnalyticKernel,
    pub order: FractionalOrder,
    pub iv: Interval,
    pub f1: RealFn,
    pub f2: RealFn,
    pub p: f64,
    /// Conjugate exponent; infinite when `p = 1`.
    pub q: f64,
    pub bounds: Option<RatioBounds>,
    pub phi: Option<f64>,
    pub box_bounds: Option<BoxBounds>,
    /// Replaces the pointwise max functional in the max-functional check.
    pub upsilon_override: Option<RealFn>,
    pub quad: QuadratureSpec,
    pub grid_size: usize,
}

/// `q` with `1/p + 1/q = 1`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

impl Scenario {
    /// Scenario with `q` derived from `p`, no optional hypotheses and default tolerances.
    pub fn new(
        id: impl Into<String>,
        kernel: AnalyticKernel,
        order: FractionalOrder,
        iv: Interval,
        f1: RealFn,
        f2: RealFn,
        p: f64,
    ) -> Self {
        Self {
            id: id.into(),
            kernel,
            order,
            iv,
            f1,
            f2,
            p,
            q: conjugate(p),
            bounds: None,
            phi: None,
            box_bounds: None,
            upsilon_override: None,
            quad: SCENARIO_QUAD,
            grid_size: DEFAULT_GRID,
        }
    }

    pub fn with_bounds(mut self, tau1: f64, tau2: f64) -> Result<Self> {
        self.bounds = Some(RatioBounds::new(tau1, tau2)?);
        Ok(self)
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = Some(phi);
        self
    }

    pub fn with_box(mut self, b: BoxBounds) -> Self {
        self.box_bounds = Some(b);
        self
    }

    /// Every violated structural constraint, one message per field.
    pub fn constraint_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.p >= 1.0 && self.p.is_finite()) {
            out.push(format!("p: must be >= 1, got {}", self.p));
        } else if self.q.is_finite() {
            if !((1.0 / self.p + 1.0 / self.q - 1.0).abs() <= 1e-12) {
                out.push(format!("q: 1/p + 1/q must equal 1, got p={}, q={}", self.p, self.q));
            }
        } else if self.p != 1.0 {
            out.push(format!("q: infinite q requires p = 1, got p={}", self.p));
        }
        if let (Some(phi), Some(b)) = (self.phi, self.bounds) {
            if !(phi > 0.0 && phi < b.tau1) {
                out.push(format!("phi: must lie in (0, tau1 = {}), got {phi}", b.tau1));
            }
        }
        if self.grid_size < 2 {
            out.push("grid_size: must be >= 2".into());
        }
        if let Err(e) = self.quad.validate() {
            out.push(e.to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.constraint_violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Constraint(v))
        }
    }

    fn integrate(&self, g: impl Fn(f64) -> Result<f64>) -> Result<OperatorValue> {
        frac_integral_direct(&self.kernel, self.order, g, &self.iv, &self.quad)
    }
}

/// Result of [`check_hypothesis`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub grid_size: usize,
    /// Empirically tightest ratio bounds on the grid.
    pub tau1_star: f64,
    pub tau2_star: f64,
    pub theta_at_tau1: f64,
    pub theta_at_tau2: f64,
}

fn grid_values(s: &Scenario, grid_size: usize) -> Result<Vec<(f64, f64, f64)>> {
    chebyshev_nodes(s.iv.a, s.iv.x, grid_size)
        .into_iter()
        .map(|t| Ok((t, s.f1.eval(t)?, s.f2.eval(t)?)))
        .collect()
}

/// Checks `f1, f2 > 0` and, when bounds are given, `tau1 <= f1/f2 <= tau2` on a
/// Chebyshev grid over `[a, x]`.
pub fn check_hypothesis(s: &Scenario, grid_size: usize) -> Result<HypothesisReport> {
    let mut rep = HypothesisReport {
        grid_size,
        tau1_star: f64::INFINITY,
        tau2_star: 0.0,
        theta_at_tau1: s.iv.a,
        theta_at_tau2: s.iv.a,
    };
    for (t, v1, v2) in grid_values(s, grid_size.max(2))? {
        for (name, v) in [("f1", v1), ("f2", v2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::HypothesisViolation {
                    theta: t,
                    quantity: format!("{name} = {v} is not positive"),
                });
            }
        }
        let r = v1 / v2;
        if r < rep.tau1_star {
            rep.tau1_star = r;
            rep.theta_at_tau1 = t;
        }
        if r > rep.tau2_star {
            rep.tau2_star = r;
            rep.theta_at_tau2 = t;
        }
        if let Some(b) = s.bounds {
            if r < b.tau1 * (1.0 - RATIO_SLACK) {
                return Err(Error::HypothesisViolation {
                    theta: t,
                    quantity: format!("f1/f2 = {r} below tau1 = {}", b.tau1),
                });
            }
            if r > b.tau2 * (1.0 + RATIO_SLACK) {
                return Err(Error::HypothesisViolation {
                    theta: t,
                    quantity: format!("f1/f2 = {r} above tau2 = {}", b.tau2),
                });
            }
        }
    }
    Ok(rep)
}

fn check_box(s: &Scenario, b: &BoxBounds) -> Result<()> {
    for (t, v1, v2) in grid_values(s, s.grid_size)? {
        if !(v1 >= b.m && v1 <= b.big_m) {
            return Err(Error::BoxViolation {
                theta: t,
                quantity: format!("f1 = {v1} outside [{}, {}]", b.m, b.big_m),
            });
        }
        if !(v2 >= b.n && v2 <= b.big_n) {
            return Err(Error::BoxViolation {
                theta: t,
                quantity: format!("f2 = {v2} outside [{}, {}]", b.n, b.big_n),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Theorem {
    ReverseMinkowski,
    ProductBound,
    HolderType,
    YoungType,
    ShiftedSandwich,
    BoxedMinkowski,
    ProductSandwich,
    MaxFunctional,
}

impl Theorem {
    pub const ALL: [Theorem; 8] = [
        Theorem::ReverseMinkowski,
        Theorem::ProductBound,
        Theorem::HolderType,
        Theorem::YoungType,
        Theorem::ShiftedSandwich,
        Theorem::BoxedMinkowski,
        Theorem::ProductSandwich,
        Theorem::MaxFunctional,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Theorem::ReverseMinkowski => "thm31",
            Theorem::ProductBound => "thm32",
            Theorem::HolderType => "thm41",
            Theorem::YoungType => "thm42",
            Theorem::ShiftedSandwich => "thm43",
            Theorem::BoxedMinkowski => "thm44",
            Theorem::ProductSandwich => "thm45",
            Theorem::MaxFunctional => "thm46",
        }
    }

    /// Parses a comma-separated list; `all` selects every theorem.
    pub fn parse_list(s: &str) -> Result<Vec<Theorem>> {
        if s.trim() == "all" {
            return Ok(Self::ALL.to_vec());
        }
        s.split(',').map(|t| t.trim().parse()).collect()
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Theorem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.id() == s)
            .ok_or_else(|| Error::invalid("theorem", format!("unknown theorem '{s}'")))
    }
}

impl Serialize for Theorem {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SideValue {
    pub label: String,
    pub value: f64,
    pub error_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub theorem: Theorem,
    pub sides: Vec<SideValue>,
    /// Constants of the inequality as evaluated for this scenario.
    pub constants: Vec<(String, f64)>,
    pub margin: f64,
    pub relative_margin: f64,
    pub error_budget: f64,
    pub verdict: Verdict,
    pub kernel_admissible: bool,
}

impl InequalityReport {
    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn side(&self, label: &str) -> Option<&SideValue> {
        self.sides.iter().find(|s| s.label == label)
    }
}

/// A quantity with a propagated error and a flag for unreliable powers.
#[derive(Debug, Clone, Copy)]
struct Q {
    v: f64,
    e: f64,
    unreliable: bool,
}

impl Q {
    fn of(o: OperatorValue) -> Self {
        Q {
            v: o.value,
            e: o.error_estimate,
            unreliable: false,
        }
    }

    fn exact(v: f64) -> Self {
        Q {
            v,
            e: 0.0,
            unreliable: false,
        }
    }

    /// `u^r` with first-order error `r u^(r-1) du`.
    fn pow(self, r: f64) -> Self {
        if r == 1.0 {
            return self;
        }
        let unreliable = self.unreliable || self.v < 10.0 * self.e;
        let v = self.v.max(0.0);
        let e = if v > 0.0 {
            (r * v.powf(r - 1.0) * self.e).abs()
        } else {
            self.e.powf(r)
        };
        Q {
            v: v.powf(r),
            e,
            unreliable,
        }
    }

    fn scale(self, c: f64) -> Self {
        Q {
            v: c * self.v,
            e: c.abs() * self.e,
            unreliable: self.unreliable,
        }
    }

    fn add(self, o: Q) -> Self {
        Q {
            v: self.v + o.v,
            e: self.e + o.e,
            unreliable: self.unreliable || o.unreliable,
        }
    }

    fn mul(self, o: Q) -> Self {
        Q {
            v: self.v * o.v,
            e: (self.v * o.e).abs() + (o.v * self.e).abs(),
            unreliable: self.unreliable || o.unreliable,
        }
    }
}

/// Gap direction: `Upper(l, r)` means `l <= r`.
enum Gap {
    Upper(usize, usize),
}

struct Pending {
    sides: Vec<(String, Q)>,
    constants: Vec<(String, f64)>,
    gaps: Vec<Gap>,
}

fn finish(theorem: Theorem, s: &Scenario, p: Pending) -> InequalityReport {
    let admissible = validate_kernel(&s.kernel, s.order, &s.iv).admissible;
    let margin = p
        .gaps
        .iter()
        .map(|Gap::Upper(l, r)| p.sides[*r].1.v - p.sides[*l].1.v)
        .fold(f64::INFINITY, f64::min);
    let scale = p.sides.iter().map(|(_, q)| q.v.abs()).fold(0.0, f64::max);
    let error_sum: f64 = p.sides.iter().map(|(_, q)| q.e).sum();
    let error_budget = SAFETY_FACTOR * (error_sum + 4.0 * f64::EPSILON * scale);
    let unreliable = p.sides.iter().any(|(_, q)| q.unreliable);
    let verdict = if unreliable {
        Verdict::Inconclusive
    } else if margin >= -error_budget {
        Verdict::Holds
    } else if admissible {
        Verdict::Violated
    } else {
        Verdict::Inconclusive
    };
    InequalityReport {
        theorem,
        sides: p
            .sides
            .into_iter()
            .map(|(label, q)| SideValue {
                label,
                value: q.v,
                error_estimate: q.e,
            })
            .collect(),
        constants: p.constants,
        margin,
        relative_margin: margin / scale.max(f64::MIN_POSITIVE),
        error_budget,
        verdict,
        kernel_admissible: admissible,
    }
}

fn ratio_bounds(s: &Scenario, theorem: Theorem) -> Result<RatioBounds> {
    let b = s.bounds.ok_or_else(|| Error::MissingHypothesis {
        theorem: theorem.id().into(),
        missing: "ratio bounds tau1, tau2".into(),
    })?;
    check_hypothesis(s, s.grid_size)?;
    Ok(b)
}

fn check_p(s: &Scenario) -> Result<()> {
    if !(s.p >= 1.0 && s.p.is_finite()) {
        return Err(Error::invalid("p", format!("must be >= 1, got {}", s.p)));
    }
    Ok(())
}

/// `(I f1^p)^(1/p)`, `(I f2^p)^(1/p)` and their raw integrals.
fn p_norms(s: &Scenario) -> Result<(Q, Q)> {
    let p = s.p;
    let a = Q::of(s.integrate(|t| Ok(s.f1.eval(t)?.powf(p)))?);
    let b = Q::of(s.integrate(|t| Ok(s.f2.eval(t)?.powf(p)))?);
    Ok((a, b))
}

fn sum_norm(s: &Scenario) -> Result<Q> {
    let p = s.p;
    Ok(Q::of(s.integrate(|t| Ok((s.f1.eval(t)? + s.f2.eval(t)?).powf(p)))?).pow(1.0 / p))
}

/// Reverse Minkowski: `(I f1^p)^(1/p) + (I f2^p)^(1/p) <= C (I (f1+f2)^p)^(1/p)`.
pub fn thm31_reverse_minkowski(s: &Scenario) -> Result<InequalityReport> {
    let th = Theorem::ReverseMinkowski;
    check_p(s)?;
    let RatioBounds { tau1, tau2 } = ratio_bounds(s, th)?;
    let c = (1.0 + tau2 * (tau1 + 2.0)) / ((tau1 + 1.0) * (tau2 + 1.0));
    let (a, b) = p_norms(s)?;
    let lhs = a.pow(1.0 / s.p).add(b.pow(1.0 / s.p));
    let rhs = sum_norm(s)?.scale(c);
    Ok(finish(
        th,
        s,
        Pending {
            sides: vec![("lhs".into(), lhs), ("rhs".into(), rhs)],
            constants: vec![("C".into(), c)],
            gaps: vec![Gap::Upper(0, 1)],
        },
    ))
}

/// `(I f1^p)^(2/p) + (I f2^p)^(2/p) >= C (I f1^p)^(1/p) (I f2^p)^(1/p)`.
pub fn thm32_product_bound(s: &Scenario) -> Result<InequalityReport> {
    let th = Theorem::ProductBound;
    check_p(s)?;
    let RatioBounds { tau1, tau2 } = ratio_bounds(s, th)?;
    let c = (1.0 + tau2) * (tau1 + 1.0) / tau2 - 2.0;
    let (a, b) = p_norms(s)?;
    let lhs = a.pow(2.0 / s.p).add(b.pow(2.0 / s.p));
    let bound = a.pow(1.0 / s.p).mul(b.pow(1.0 / s.p)).scale(c);
    Ok(finish(
        th,
        s,
        Pending {
            sides: vec![("lhs".into(), lhs), ("bound".into(), bound)],
            constants: vec![("C".into(), c)],
            gaps: vec![Gap::Upper(1, 0)],
        },
    ))
}

/// `(I f1)^(1/p) (I f2)^(1/q) <= (tau2/tau1)^(1/pq) I(f1^(1/p) f2^(1/q))`.
pub fn thm41_holder_type(s: &Scenario) -> Result<InequalityReport> {
    let th = Theorem::HolderType;
    check_p(s)?;
    let RatioBounds { tau1, tau2 } = ratio_bounds(s, th)?;
    let (ip, iq) = (1.0 / s.p, 1.0 / s.q);
    let c = (tau2 / tau1).powf(ip * iq);
    let a = Q::of(s.integrate(|t| s.f1.eval(t))?);
    let b = Q::of(s.integrate(|t| s.f2.eval(t))?);
    let lhs = a.pow(ip).mul(if iq == 0.0 { Q::exact(1.0) } else { b.pow(iq) });
    let mixed = Q::of(s.integrate(|t| Ok(s.f1.eval(t)?.powf(ip) * s.f2.eval(t)?.powf(iq)))?);
    let rhs = mixed.scale(c);
    Ok(finish(
        th,
        s,
        Pending {
            sides: vec![("lhs".into(), lhs), ("rhs".into(), rhs)],
            constants: vec![("C".into(), c)],
            gaps: vec![Gap::Upper(0, 1)],
        },
    ))
}

/// `I(exp(ln_c) (f1+f2)^r)`, evaluated as `exp(ln_c + r ln(f1+f2))` so large
/// exponents with small constants stay in range. Infinite when the integrand
/// exceeds the floating-point range on the grid.
fn young_term(s: &Scenario, r: f64, ln_c: f64) -> Result<Q> {
    let exponent = |f1: f64, f2: f64| ln_c + r * (f1 + f2).ln();
    let peak = grid_values(s, s.grid_size)?
        .into_iter()
        .map(|(_, a, b)| exponent(a, b))
        .fold(f64::NEG_INFINITY, f64::max);
    if peak > 700.0 {
        return Ok(Q::exact(f64::INFINITY));
    }
    Ok(Q::of(
        s.integrate(|t| Ok(exponent(s.f1.eval(t)?, s.f2.eval(t)?).exp()))?,
    ))
}

/// `I(f1 f2) <= C1 I(f1+f2)^p + C2 I(f1+f2)^q`.
pub fn thm42_young_type(s: &Scenario) -> Result<InequalityReport> {
    let th = Theorem::YoungType;
    check_p(s)?;
    let RatioBounds { tau1, tau2 } = ratio_bounds(s, th)?;
    let (p, q) = (s.p, s.q);
    let c1 = 2f64.powf(p - 1.0) * tau2.powf(p) / (p * (tau2 + 1.0).powf(p));
    let lhs = Q::of(s.integrate(|t| Ok(s.f1.eval(t)? * s.f2.eval(t)?))?);
    let term_p = young_term(s, p, (p - 1.0) * LN_2 + p * tau2.ln() - p.ln() - p * (tau2 + 1.0).ln())?;
    let (c2, term_q) = if q.is_finite() {
        let ln_c2 = (q - 1.0) * LN_2 - q.ln() - q * (tau1 + 1.0).ln();
        let c2 = 2f64.powf(q - 1.0) / (q * (tau1 + 1.0).powf(q));
        let c2 = if c2.is_finite() { c2 } else { ln_c2.exp() };
        (c2, young_term(s, q, ln_c2)?)
    } else {
        // q -> infinity: C2 I (f1+f2)^q diverges if f1+f2 exceeds 1 anywhere, else vanishes
        let peak = grid_values(s, s.grid_size)?
            .into_iter()
            .map(|(_, a, b)| a + b)
            .fold(0.0, f64::max);
        (0.0, Q::exact(if peak > 1.0 { f64::INFINITY } else { 0.0 }))
    };
    let rhs = term_p.add(term_q);
    Ok(finish(
        th,
        s,
        Pending {
            sides: vec![("lhs".into(), lhs), ("rhs".into(), rhs)],
            constants: vec![("C1".into(), c1), ("C2".into(), c2)],
            gaps: vec![Gap::Upper(0, 1)],
        },
    ))
}

/// `lower <= (I f1^p)^(1/p) + (I f2^p)^(1/p) <= upper`, both bounds scaling
/// `(I (f1 - phi f2)^p)^(1/p)`.
pub fn thm43_shifted_sandwich(s: &Scenario) -> Result<InequalityReport> {
    let th = Theorem::ShiftedSandwich;
    check_p(s)?;
    let RatioBounds { tau1, tau2 } = ratio_bounds(s, th)?;
    let phi = s.phi.ok_or_else(|| Error::MissingHypothesis {
        theorem: th.id().into(),
        missing: "phi".into(),
    })?;
    if !(phi > 0.0 && phi < tau1) {
        return Err(Error::PhiRange { phi, tau1 });
    }
    let p = s.p;
    let lower_c = (tau2 + 1.0) / (tau2 - phi);
    let upper_c = (tau1 + 1.0) / (tau1 - phi);
    let (a, b) = p_norms(s)?;
    let middle = a.pow(1.0 / p).add(b.pow(1.0 / p));
    let shifted = Q::of(s.integrate(|t| Ok((s.f1.eval(t)? - phi * s.f2.eval(t)?).powf(p)))?).pow(1.0 / p);
    Ok(finish(
        th,
        s,
        Pending {
            sides: vec![
                ("lower".into(), shifted.scale(lower_c)),
                ("middle".into(), middle),
                ("upper".into(), shifted.scale(upper_c)),
            ],
            constants: vec![("lower".into(), lower_c), ("upper".into(), upper_c)],
            gaps: vec![Gap::Upper(0, 1), Gap::Upper(1, 2)],
        },
    ))
}

/// Minkowski bound with pointwise box constraints on `f1`, `f2`.
pub fn thm44_boxed_minkowski(s: &Scenario) -> Result<InequalityReport> {
    let th = Theorem::BoxedMinkowski;
    check_p(s)?;
    let b = s.box_bounds.ok_or_else(|| Error::MissingHypothesis {
        theorem: th.id().into(),
        missing: "box (m, M, n, N)".into(),
    })?;
    check_box(s, &b)?;
    let BoxBounds { m, big_m, n, big_n } = b;
    let c3 = (big_m * (m + big_n) + big_n * (n + big_m)) / ((m + big_n) * (n + big_m));
    let (a, bb) = p_norms(s)?;
    let lhs = a.pow(1.0 / s.p).add(bb.pow(1.0 / s.p));
    let rhs = sum_norm(s)?.scale(c3);
    Ok(finish(
        th,
        s,
        Pending {
            sides: vec![("lhs".into(), lhs), ("rhs".into(), rhs)],
            constants: vec![("C3".into(), c3)],
            gaps: vec![Gap::Upper(0, 1)],
        },
    ))
}

/// `(1/tau2) I(f1 f2) <= I(f1+f2)^2 / ((tau1+1)(tau2+1)) <= (1/tau1) I(f1 f2)`.
pub fn thm45_product_sandwich(s: &Scenario) -> Result<InequalityReport> {
    let th = Theorem::ProductSandwich;
    let RatioBounds { tau1, tau2 } = ratio_bounds(s, th)?;
    let mid_c = 1.0 / ((tau1 + 1.0) * (tau2 + 1.0));
    let prod = Q::of(s.integrate(|t| Ok(s.f1.eval(t)? * s.f2.eval(t)?))?);
    let square = Q::of(s.integrate(|t| Ok((s.f1.eval(t)? + s.f2.eval(t)?).powi(2)))?);
    Ok(finish(
        th,
        s,
        Pending {
            sides: vec![
                ("lower".into(), prod.scale(1.0 / tau2)),
                ("middle".into(), square.scale(mid_c)),
                ("upper".into(), prod.scale(1.0 / tau1)),
            ],
            constants: vec![
                ("lower".into(), 1.0 / tau2),
                ("middle".into(), mid_c),
                ("upper".into(), 1.0 / tau1),
            ],
            gaps: vec![Gap::Upper(0, 1), Gap::Upper(1, 2)],
        },
    ))
}

/// Pointwise max functional
/// `max{ tau2 ((tau2/tau1 + 1) v1 - tau2 v2), ((tau2 + tau1) v2 - v1) / tau1 }`.
pub fn upsilon(v1: f64, v2: f64, bounds: RatioBounds) -> f64 {
    let RatioBounds { tau1, tau2 } = bounds;
    let first = tau2 * ((tau2 / tau1 + 1.0) * v1 - tau2 * v2);
    let second = ((tau2 + tau1) * v2 - v1) / tau1;
    first.max(second)
}

/// `(I f1^p)^(1/p) + (I f2^p)^(1/p) <= 2 (I Upsilon^p)^(1/p)`.
pub fn thm46_max_functional(s: &Scenario) -> Result<InequalityReport> {
    let th = Theorem::MaxFunctional;
    check_p(s)?;
    let bounds = ratio_bounds(s, th)?;
    let p = s.p;
    let (a, b) = p_norms(s)?;
    let lhs = a.pow(1.0 / p).add(b.pow(1.0 / p));
    let ups = |t: f64| -> Result<f64> {
        match &s.upsilon_override {
            Some(u) => u.eval(t),
            None => Ok(upsilon(s.f1.eval(t)?, s.f2.eval(t)?, bounds)),
        }
    };
    let rhs = Q::of(s.integrate(|t| Ok(ups(t)?.powf(p)))?).pow(1.0 / p).scale(2.0);
    Ok(finish(
        th,
        s,
        Pending {
            sides: vec![("lhs".into(), lhs), ("rhs".into(), rhs)],
            constants: vec![("C".into(), 2.0)],
            gaps: vec![Gap::Upper(0, 1)],
        },
    ))
}

/// Runs the checker for `theorem`.
pub fn check_theorem(s: &Scenario, theorem: Theorem) -> Result<InequalityReport> {
    match theorem {
        Theorem::ReverseMinkowski => thm31_reverse_minkowski(s),
        Theorem::ProductBound => thm32_product_bound(s),
        Theorem::HolderType => thm41_holder_type(s),
        Theorem::YoungType => thm42_young_type(s),
        Theorem::ShiftedSandwich => thm43_shifted_sandwich(s),
        Theorem::BoxedMinkowski => thm44_boxed_minkowski(s),
        Theorem::ProductSandwich => thm45_product_sandwich(s),
        Theorem::MaxFunctional => thm46_max_functional(s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{make_prabhakar_kernel, make_proportional_kernel, make_rl_kernel};
    use crate::operators::rl_integral;
    use approx::assert_relative_eq;

    fn rl_scenario(alpha: f64, a: f64, x: f64, f1: &str, f2: &str, p: f64) -> Scenario {
        Scenario::new(
            "t",
            make_rl_kernel(alpha).unwrap(),
            FractionalOrder::new(alpha, 0.0).unwrap(),
            Interval::left(a, x).unwrap(),
            RealFn::parse(f1).unwrap(),
            RealFn::parse(f2).unwrap(),
            p,
        )
    }

    fn prabhakar_scenario(f1: &str, f2: &str, p: f64) -> Scenario {
        let o = FractionalOrder::new(1.0, 0.8).unwrap();
        Scenario::new(
            "t",
            make_prabhakar_kernel(1.2, 0.3, o).unwrap(),
            o,
            Interval::left(1.0, 2.0).unwrap(),
            RealFn::parse(f1).unwrap(),
            RealFn::parse(f2).unwrap(),
            p,
        )
    }

    #[test]
    fn hypothesis_examples() {
        let s = rl_scenario(1.0, 1.0, 2.0, "theta + 1", "theta", 2.0)
            .with_bounds(1.0, 2.0)
            .unwrap();
        let r = check_hypothesis(&s, DEFAULT_GRID).unwrap();
        assert_relative_eq!(r.tau2_star, 2.0, max_relative = 1e-15);
        assert_eq!(r.theta_at_tau2, 1.0);
        assert_relative_eq!(r.tau1_star, 1.5, max_relative = 1e-15);

        let s = rl_scenario(1.0, 1.0, 2.0, "theta", "theta", 2.0);
        let r = check_hypothesis(&s, 65).unwrap();
        assert_eq!((r.tau1_star, r.tau2_star), (1.0, 1.0));

        let s = rl_scenario(1.0, 1.0, 2.0, "theta", "theta + 1", 2.0)
            .with_bounds(1.0, 2.0)
            .unwrap();
        assert!(matches!(
            check_hypothesis(&s, 65),
            Err(Error::HypothesisViolation { .. })
        ));

        let s = rl_scenario(1.0, 0.0, 2.0, "theta", "1", 2.0);
        assert!(matches!(
            check_hypothesis(&s, 65),
            Err(Error::HypothesisViolation { .. })
        ));
    }

    #[test]
    fn equality_case_reverse_minkowski() {
        let s = rl_scenario(1.0, 0.0, 1.0, "1", "1", 2.0).with_bounds(1.0, 1.0).unwrap();
        let r = thm31_reverse_minkowski(&s).unwrap();
        assert_relative_eq!(r.side("lhs").unwrap().value, 2.0, max_relative = 1e-12);
        assert_relative_eq!(r.side("rhs").unwrap().value, 2.0, max_relative = 1e-12);
        assert!(r.margin.abs() <= r.error_budget);
        assert_eq!(r.verdict, Verdict::Holds);
        assert_eq!(r.constant("C"), Some(1.0));
    }

    #[test]
    fn example_one_constant_is_seven_sixths() {
        let s = rl_scenario(1.0, 1.0, 2.0, "theta + 1", "theta", 2.0)
            .with_bounds(1.0, 2.0)
            .unwrap();
        let r = thm31_reverse_minkowski(&s).unwrap();
        assert_eq!(r.constant("C"), Some(7.0 / 6.0));
        assert!(r.margin >= 0.0);
        assert_eq!(r.verdict, Verdict::Holds);
    }

    #[test]
    fn product_bound() {
        let s = rl_scenario(1.0, 0.0, 1.0, "1", "1", 2.0).with_bounds(1.0, 1.0).unwrap();
        let r = thm32_product_bound(&s).unwrap();
        assert_eq!(r.constant("C"), Some(2.0));
        assert_relative_eq!(r.side("lhs").unwrap().value, 2.0, max_relative = 1e-12);
        assert!(r.margin.abs() <= r.error_budget);

        let s = rl_scenario(1.0, 1.0, 2.0, "theta + 1", "theta", 2.0)
            .with_bounds(1.0, 2.0)
            .unwrap();
        let r = thm32_product_bound(&s).unwrap();
        assert_eq!(r.constant("C"), Some(1.0));
        assert_eq!(r.verdict, Verdict::Holds);
    }

    #[test]
    fn holder_type() {
        let s = rl_scenario(0.5, 1.0, 2.0, "theta^2", "theta^2", 3.0)
            .with_bounds(1.0, 1.0)
            .unwrap();
        let r = thm41_holder_type(&s).unwrap();
        assert!(r.margin.abs() <= r.error_budget);

        let s = rl_scenario(1.0, 1.0, 2.0, "theta + 1", "theta", 2.0)
            .with_bounds(1.0, 2.0)
            .unwrap();
        let r = thm41_holder_type(&s).unwrap();
        assert_relative_eq!(r.constant("C").unwrap(), 2f64.powf(0.25), max_relative = 1e-15);
        assert_eq!(r.verdict, Verdict::Holds);

        // p = 1: q infinite, both sides reduce to I f1
        let s = rl_scenario(1.0, 1.0, 2.0, "theta + 1", "theta", 1.0)
            .with_bounds(1.0, 2.0)
            .unwrap();
        let r = thm41_holder_type(&s).unwrap();
        assert_eq!(r.constant("C"), Some(1.0));
        assert!(r.margin.abs() <= r.error_budget);
    }

    #[test]
    fn young_type() {
        let s = rl_scenario(1.0, 0.0, 1.0, "1", "1", 2.0).with_bounds(1.0, 1.0).unwrap();
        let r = thm42_young_type(&s).unwrap();
        assert_eq!(r.constant("C1"), Some(0.25));
        assert_eq!(r.constant("C2"), Some(0.25));
        assert_relative_eq!(r.side("lhs").unwrap().value, 1.0, max_relative = 1e-12);
        assert_relative_eq!(r.side("rhs").unwrap().value, 2.0, max_relative = 1e-12);
        assert_relative_eq!(r.margin, 1.0, max_relative = 1e-12);

        let p: f64 = 3.0;
        let s = rl_scenario(1.0, 1.0, 2.0, "theta + 1", "theta", p)
            .with_bounds(1.0, 2.0)
            .unwrap();
        let r = thm42_young_type(&s).unwrap();
        let c1 = 2f64.powf(p - 1.0) * 2f64.powf(p) / (p * 3f64.powf(p));
        assert_relative_eq!(r.constant("C1").unwrap(), c1, max_relative = 1e-15);
        assert_relative_eq!(r.constant("C2").unwrap(), 1.0 / (2.0 * 1.5), max_relative = 1e-15);
        assert_eq!(r.verdict, Verdict::Holds);

        let s = rl_scenario(1.0, 1.0, 2.0, "theta + 1", "theta", 1.0)
            .with_bounds(1.0, 2.0)
            .unwrap();
        let r = thm42_young_type(&s).unwrap();
        assert_eq!(r.side("rhs").unwrap().value, f64::INFINITY);
        assert_eq!(r.verdict, Verdict::Holds);
    }

    #[test]
    fn shifted_sandwich() {
        // f1 = 2 f2, phi = 1: f1 - phi f2 = f2 and the lower gap closes
        let s = rl_scenario(1.0, 1.0, 2.0, "2*theta", "theta", 2.0)
            .with_bounds(2.0, 2.0)
            .unwrap()
            .with_phi(1.0);
        let r = thm43_shifted_sandwich(&s).unwrap();
        let gap = r.side("middle").unwrap().value - r.side("lower").unwrap().value;
        assert!(gap.abs() <= r.error_budget);
        assert_eq!(r.verdict, Verdict::Holds);

        let s = rl_scenario(1.0, 1.0, 2.0, "theta + 1", "theta", 2.0)
            .with_bounds(1.0, 2.0)
            .unwrap()
            .with_phi(0.5);
        let r = thm43_shifted_sandwich(&s).unwrap();
        assert_eq!(r.constant("lower"), Some(3.0 / 1.5));
        assert_eq!(r.constant("upper"), Some(2.0 / 0.5));
        assert_eq!(r.verdict, Verdict::Holds);

        let bad = s.clone().with_phi(1.0);
        assert!(matches!(thm43_shifted_sandwich(&bad), Err(Error::PhiRange { .. })));
    }

    #[test]
    fn boxed_minkowski() {
        let s = rl_scenario(1.0, 1.0, 2.0, "sin(theta)^2", "cos(theta)^2", 2.0)
            .with_box(BoxBounds::new(0.0, 1.0, 0.0, 1.0).unwrap());
        let r = thm44_boxed_minkowski(&s).unwrap();
        assert_eq!(r.constant("C3"), Some(2.0));
        assert_eq!(r.verdict, Verdict::Holds);

        let s = rl_scenario(1.0, 0.0, 1.0, "1", "1", 2.0).with_box(BoxBounds::new(1.0, 1.0, 1.0, 1.0).unwrap());
        let r = thm44_boxed_minkowski(&s).unwrap();
        assert_eq!(r.constant("C3"), Some(1.0));
        assert!(r.margin.abs() <= r.error_budget);

        let s = rl_scenario(1.0, 0.0, 1.0, "2", "1", 2.0).with_box(BoxBounds::new(0.0, 1.0, 0.0, 1.0).unwrap());
        assert!(matches!(thm44_boxed_minkowski(&s), Err(Error::BoxViolation { .. })));
        assert!(BoxBounds::new(0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn product_sandwich() {
        let s = rl_scenario(1.5, 1.0, 2.0, "exp(theta)", "exp(theta)", 2.0)
            .with_bounds(1.0, 1.0)
            .unwrap();
        let r = thm45_product_sandwich(&s).unwrap();
        assert!(r.margin.abs() <= r.error_budget);
        let s = rl_scenario(1.0, 1.0, 2.0, "theta + 1", "theta", 2.0)
            .with_bounds(1.0, 2.0)
            .unwrap();
        let r = thm45_product_sandwich(&s).unwrap();
        assert_eq!(r.constant("middle"), Some(1.0 / 6.0));
        assert_eq!(r.verdict, Verdict::Holds);
    }

    #[test]
    fn upsilon_examples() {
        let one = RatioBounds::new(1.0, 1.0).unwrap();
        assert_eq!(upsilon(3.5, 3.5, one), 3.5);
        let b = RatioBounds::new(1.0, 2.0).unwrap();
        assert_eq!(upsilon(2.0, 1.0, b), 8.0);
        assert_eq!(upsilon(1.0, 1.0, b), 2.0);
    }

    #[test]
    fn max_functional() {
        let s = rl_scenario(1.0, 1.0, 2.0, "theta", "theta", 2.0)
            .with_bounds(1.0, 1.0)
            .unwrap();
        let r = thm46_max_functional(&s).unwrap();
        // Upsilon = f1, so rhs = 2 lhs / 2
        assert_relative_eq!(
            r.side("rhs").unwrap().value,
            r.side("lhs").unwrap().value,
            max_relative = 1e-12
        );
        assert!(r.margin.abs() <= r.error_budget);
    }

    #[test]
    fn missing_hypotheses_are_reported() {
        let s = rl_scenario(1.0, 1.0, 2.0, "theta + 1", "theta", 2.0);
        assert!(matches!(
            thm31_reverse_minkowski(&s),
            Err(Error::MissingHypothesis { .. })
        ));
        assert!(matches!(
            thm44_boxed_minkowski(&s),
            Err(Error::MissingHypothesis { .. })
        ));
        let s = s.with_bounds(1.0, 2.0).unwrap();
        assert!(matches!(
            thm43_shifted_sandwich(&s),
            Err(Error::MissingHypothesis { .. })
        ));
    }

    #[test]
    fn equality_suite_prabhakar() {
        for th in [
            Theorem::ReverseMinkowski,
            Theorem::ProductBound,
            Theorem::HolderType,
            Theorem::ProductSandwich,
            Theorem::MaxFunctional,
        ] {
            let s = prabhakar_scenario("theta^2 + 1", "theta^2 + 1", 2.5)
                .with_bounds(1.0, 1.0)
                .unwrap();
            let r = check_theorem(&s, th).unwrap();
            assert!(r.margin.abs() <= r.error_budget, "{th}: {r:?}");
            assert!(r.error_budget <= 1e-7, "{th}: {r:?}");
        }
    }

    #[test]
    fn reduction_to_riemann_liouville() {
        // with A = 1/Gamma(alpha), beta = 0 the operator is the RL integral
        let (alpha, p) = (0.75, 2.5);
        let s = rl_scenario(alpha, 1.0, 2.0, "theta + 1", "theta", p)
            .with_bounds(1.5, 2.0)
            .unwrap();
        let q = QuadratureSpec::default();
        let rl = |g: &dyn Fn(f64) -> f64| rl_integral(alpha, |t| Ok(g(t)), 1.0, 2.0, &q).unwrap().value;
        let a = rl(&|t| (t + 1.0).powf(p)).powf(1.0 / p);
        let b = rl(&|t| t.powf(p)).powf(1.0 / p);
        let c = rl(&|t| (2.0 * t + 1.0).powf(p)).powf(1.0 / p);
        let k = (1.0 + 2.0 * 3.5) / (2.5 * 3.0);

        let r = thm31_reverse_minkowski(&s).unwrap();
        assert_relative_eq!(r.side("lhs").unwrap().value, a + b, max_relative = 1e-9);
        assert_relative_eq!(r.side("rhs").unwrap().value, k * c, max_relative = 1e-9);
        assert_relative_eq!(r.constant("C").unwrap(), k, max_relative = 1e-15);

        let r = thm32_product_bound(&s).unwrap();
        let k2 = 3.0 * 2.5 / 2.0 - 2.0;
        assert_relative_eq!(r.side("lhs").unwrap().value, a * a + b * b, max_relative = 1e-9);
        assert_relative_eq!(r.side("bound").unwrap().value, k2 * a * b, max_relative = 1e-9);
    }

    #[test]
    fn scale_invariance() {
        let base = prabhakar_scenario("theta + 1", "theta", 2.0)
            .with_bounds(1.0, 2.0)
            .unwrap()
            .with_phi(0.5);
        let c = 3.7;
        let mut scaled = base.clone();
        scaled.f1 = base.f1.scaled(c);
        scaled.f2 = base.f2.scaled(c);
        for (th, degree) in [
            (Theorem::ReverseMinkowski, 1),
            (Theorem::ProductBound, 2),
            (Theorem::HolderType, 1),
            (Theorem::ShiftedSandwich, 1),
            (Theorem::ProductSandwich, 2),
            (Theorem::MaxFunctional, 1),
        ] {
            let r0 = check_theorem(&base, th).unwrap();
            let r1 = check_theorem(&scaled, th).unwrap();
            assert_eq!(r0.verdict, r1.verdict);
            let f = c.powi(degree);
            for (s0, s1) in r0.sides.iter().zip(&r1.sides) {
                assert_relative_eq!(s1.value, f * s0.value, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn mixed_sign_kernel_is_never_violated() {
        // rho < 1 gives alternating coefficients
        let o = FractionalOrder::new(1.0, 1.0).unwrap();
        let s = Scenario::new(
            "mixed",
            make_proportional_kernel(0.3, 1.0).unwrap(),
            o,
            Interval::left(0.0, 2.0).unwrap(),
            RealFn::parse("theta + 1").unwrap(),
            RealFn::parse("1").unwrap(),
            2.0,
        )
        .with_bounds(1.0, 3.0)
        .unwrap();
        for th in [Theorem::ReverseMinkowski, Theorem::ProductBound, Theorem::MaxFunctional] {
            let r = check_theorem(&s, th).unwrap();
            assert!(!r.kernel_admissible);
            assert_ne!(r.verdict, Verdict::Violated);
        }
    }

    #[test]
    fn theorem_ids_round_trip() {
        for t in Theorem::ALL {
            assert_eq!(t.id().parse::<Theorem>().unwrap(), t);
        }
        assert_eq!(Theorem::parse_list("all").unwrap().len(), 8);
        assert_eq!(
            Theorem::parse_list("thm31, thm46").unwrap(),
            vec![Theorem::ReverseMinkowski, Theorem::MaxFunctional]
        );
        assert!(Theorem::parse_list("thm99").is_err());
    }

    #[test]
    fn scenario_constraints() {
        let mut s = rl_scenario(1.0, 1.0, 2.0, "theta", "theta", 2.0)
            .with_bounds(1.0, 1.0)
            .unwrap();
        assert!(s.validate().is_ok());
        s.q = 3.0;
        s.phi = Some(1.5);
        s.p = 0.5;
        let v = s.constraint_violations();
        assert_eq!(v.len(), 2, "{v:?}");
        assert_eq!(conjugate(2.0), 2.0);
        assert_eq!(conjugate(1.0), f64::INFINITY);
    }
}
