//! Scenario files, the canned examples, seeded random scenarios, suite
//! execution and report output.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::inequalities::{
    check_hypothesis, check_theorem, BoxBounds, InequalityReport, RatioBounds, RealFn, Scenario, Theorem, Verdict,
    DEFAULT_GRID, SCENARIO_QUAD,
};
use crate::kernels::{
    make_constant_kernel, make_prabhakar_kernel, make_proportional_kernel, make_rl_kernel, make_series_kernel,
    AnalyticKernel, FractionalOrder, Interval, Radius,
};
use crate::quadrature::QuadratureSpec;

/// `phi` used by the shifted-sandwich example.
pub const DEFAULT_PHI: f64 = 0.5;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    id: Option<String>,
    kernel: KernelBlock,
    order: OrderBlock,
    interval: IntervalBlock,
    functions: FunctionsBlock,
    hypothesis: HypothesisBlock,
    #[serde(default)]
    tolerances: TolerancesBlock,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelBlock {
    #[serde(rename = "type")]
    kind: String,
    c: Option<f64>,
    rho: Option<f64>,
    omega: Option<f64>,
    coeff: Option<String>,
    radius: Option<RadiusField>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RadiusField {
    Number(f64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OrderBlock {
    alpha: f64,
    beta: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntervalBlock {
    a: f64,
    x: f64,
    b: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionsBlock {
    f1: String,
    f2: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HypothesisBlock {
    p: f64,
    q: Option<f64>,
    tau1: Option<f64>,
    tau2: Option<f64>,
    phi: Option<f64>,
    #[serde(rename = "box")]
    box_bounds: Option<[f64; 4]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TolerancesBlock {
    abs_tol: Option<f64>,
    rel_tol: Option<f64>,
    max_subdivisions: Option<usize>,
    grid_size: Option<usize>,
}

fn build_kernel(k: &KernelBlock, order: FractionalOrder, errs: &mut Vec<String>) -> Option<AnalyticKernel> {
    let kind = k.kind.as_str();
    let need = |errs: &mut Vec<String>, name: &str, v: Option<f64>| {
        if v.is_none() {
            errs.push(format!("kernel.{name}: required for type '{kind}'"));
        }
        v
    };
    let built = match k.kind.as_str() {
        "rl" => make_rl_kernel(order.alpha),
        "constant" => make_constant_kernel(need(errs, "c", k.c)?),
        "proportional" => make_proportional_kernel(need(errs, "rho", k.rho)?, order.alpha),
        "prabhakar" => {
            let (rho, omega) = (need(errs, "rho", k.rho), need(errs, "omega", k.omega));
            make_prabhakar_kernel(rho?, omega?, order)
        }
        "series" => {
            let Some(src) = &k.coeff else {
                errs.push("kernel.coeff: required for type 'series'".into());
                return None;
            };
            let radius = match &k.radius {
                None => Radius::Infinite,
                Some(RadiusField::Number(r)) => Radius::Finite(*r),
                Some(RadiusField::Text(t)) if t == "inf" => Radius::Infinite,
                Some(RadiusField::Text(t)) => {
                    errs.push(format!("kernel.radius: expected a number or \"inf\", got \"{t}\""));
                    return None;
                }
            };
            make_series_kernel(src, radius)
        }
        other => {
            errs.push(format!(
                "kernel.type: unknown kernel '{other}' (expected rl, constant, proportional, prabhakar or series)"
            ));
            return None;
        }
    };
    built.map_err(|e| errs.push(format!("kernel: {e}"))).ok()
}

/// Parses and validates a scenario file. Missing `tau1`/`tau2` are filled in
/// with the tightest bounds found on the hypothesis grid.
pub fn load_scenario(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::ScenarioParse(e.to_string()))?;
    let mut errs = Vec::new();

    let default_beta = match file.kernel.kind.as_str() {
        "rl" | "constant" => 0.0,
        _ => 1.0,
    };
    let order = FractionalOrder::new(file.order.alpha, file.order.beta.unwrap_or(default_beta))
        .map_err(|e| errs.push(format!("order: {e}")))
        .ok();
    let kernel = order.and_then(|o| build_kernel(&file.kernel, o, &mut errs));
    let iv = Interval::new(
        file.interval.a,
        file.interval.x,
        file.interval.b.unwrap_or(file.interval.x),
    )
    .map_err(|e| errs.push(format!("interval: {e}")))
    .ok();
    let mut parse_fn = |name: &str, src: &str| {
        RealFn::parse(src)
            .map_err(|e| errs.push(format!("functions.{name}: {e}")))
            .ok()
    };
    let f1 = parse_fn("f1", &file.functions.f1);
    let f2 = parse_fn("f2", &file.functions.f2);

    let h = &file.hypothesis;
    let box_bounds = h.box_bounds.and_then(|[m, big_m, n, big_n]| {
        BoxBounds::new(m, big_m, n, big_n)
            .map_err(|e| errs.push(format!("hypothesis.box: {e}")))
            .ok()
    });
    let t = &file.tolerances;
    let d = SCENARIO_QUAD;
    let quad = QuadratureSpec {
        abs_tol: t.abs_tol.unwrap_or(d.abs_tol),
        rel_tol: t.rel_tol.unwrap_or(d.rel_tol),
        max_subdivisions: t.max_subdivisions.unwrap_or(d.max_subdivisions),
    };

    let (Some(kernel), Some(order), Some(iv), Some(f1), Some(f2)) = (kernel, order, iv, f1, f2) else {
        return Err(Error::Constraint(errs));
    };
    let mut s = Scenario::new(
        file.id.unwrap_or_else(|| "scenario".into()),
        kernel,
        order,
        iv,
        f1,
        f2,
        h.p,
    );
    if let Some(q) = h.q {
        s.q = q;
    }
    s.phi = h.phi;
    s.box_bounds = box_bounds;
    s.quad = quad;
    s.grid_size = t.grid_size.unwrap_or(DEFAULT_GRID);

    let grid = if h.tau1.is_some() && h.tau2.is_some() {
        None
    } else {
        check_hypothesis(&s, s.grid_size).ok()
    };
    let tau1 = h.tau1.or(grid.as_ref().map(|g| g.tau1_star));
    let tau2 = h.tau2.or(grid.as_ref().map(|g| g.tau2_star));
    if let (Some(t1), Some(t2)) = (tau1, tau2) {
        match RatioBounds::new(t1, t2) {
            Ok(b) => s.bounds = Some(b),
            Err(e) => errs.push(format!("hypothesis: {e}")),
        }
    }
    if s.phi.is_some() && s.bounds.is_none() {
        errs.push("hypothesis.phi: needs ratio bounds (tau1, tau2), and f1, f2 are not positive on the grid".into());
    }
    errs.extend(s.constraint_violations().into_iter().map(|m| format!("hypothesis.{m}")));
    if !errs.is_empty() {
        return Err(Error::Constraint(errs));
    }
    Ok(s)
}

/// Reads a scenario file; the id defaults to the file stem.
pub fn load_scenario_path(path: &Path) -> Result<Scenario> {
    let mut text = String::new();
    std::fs::File::open(path)?.read_to_string(&mut text)?;
    let mut s = load_scenario(&text)?;
    if s.id == "scenario" {
        if let Some(stem) = path.file_stem() {
            s.id = stem.to_string_lossy().into_owned();
        }
    }
    Ok(s)
}

/// One canned example: its scenario and the theorem it instantiates.
#[derive(Debug, Clone)]
pub struct PaperExample {
    pub scenario: Scenario,
    pub theorem: Theorem,
}

/// Example `id` (1..=8) with `f1 = theta + ell`, `f2 = theta`, except example 6
/// which uses `sin^2`, `cos^2` with the unit box.
pub fn paper_example(
    id: u32,
    ell: f64,
    order: FractionalOrder,
    kernel: AnalyticKernel,
    iv: Interval,
    p: f64,
) -> Result<PaperExample> {
    let theorem = match id {
        1 => Theorem::ReverseMinkowski,
        2 => Theorem::ProductBound,
        3 => Theorem::HolderType,
        4 => Theorem::YoungType,
        5 => Theorem::ShiftedSandwich,
        6 => Theorem::BoxedMinkowski,
        7 => Theorem::ProductSandwich,
        8 => Theorem::MaxFunctional,
        _ => return Err(Error::Range(format!("example id {id} (expected 1..8)"))),
    };
    let name = format!("example-{id}");
    if id == 6 {
        let s = Scenario::new(
            name,
            kernel,
            order,
            iv,
            RealFn::parse("sin(theta)^2")?,
            RealFn::parse("cos(theta)^2")?,
            p,
        )
        .with_box(BoxBounds::new(0.0, 1.0, 0.0, 1.0)?);
        return Ok(PaperExample { scenario: s, theorem });
    }
    if !(ell > 0.0 && ell.is_finite()) {
        return Err(Error::invalid("ell", format!("must be > 0, got {ell}")));
    }
    if !(iv.a >= 1.0) {
        return Err(Error::invalid(
            "interval",
            format!("examples need a >= 1, got a = {}", iv.a),
        ));
    }
    let mut s = Scenario::new(
        name,
        kernel,
        order,
        iv,
        RealFn::parse(&format!("theta + {ell:?}"))?,
        RealFn::parse("theta")?,
        p,
    )
    .with_bounds(1.0, ell + 1.0)?;
    if id == 5 {
        s.phi = Some(DEFAULT_PHI);
    }
    if id == 8 {
        s.upsilon_override = Some(RealFn::parse(&format!(
            "max({ell:?}*(2 + {ell:?}) + theta, theta*(1 + {ell:?}) - {ell:?})"
        ))?);
    }
    s.validate()?;
    Ok(PaperExample { scenario: s, theorem })
}

/// All eight examples at the default instantiation `a = 1`, `x = 2`, `ell = 1`, `p = 2`.
pub fn default_examples(kernel: &AnalyticKernel, order: FractionalOrder) -> Result<Vec<PaperExample>> {
    let iv = Interval::left(1.0, 2.0)?;
    (1..=8)
        .map(|id| paper_example(id, 1.0, order, kernel.clone(), iv, 2.0))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Rl,
    Constant,
    Prabhakar,
    ProportionalReportOnly,
    /// One of the three nonnegative-coefficient families, chosen by the seed.
    Admissible,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "rl" => Family::Rl,
            "constant" => Family::Constant,
            "prabhakar" => Family::Prabhakar,
            "proportional-report-only" | "proportional" => Family::ProportionalReportOnly,
            "admissible" => Family::Admissible,
            _ => {
                return Err(Error::invalid(
                    "family",
                    format!("unknown family '{s}' (rl, constant, prabhakar, proportional-report-only, admissible)"),
                ))
            }
        })
    }
}

/// Deterministic scenario from `seed` that satisfies the ratio hypothesis by construction.
pub fn random_scenario(seed: u64, family: Family) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let family = match family {
        Family::Admissible => [Family::Rl, Family::Constant, Family::Prabhakar][rng.random_range(0..3)],
        f => f,
    };
    let alpha = rng.random_range(0.3..=2.5);
    let beta = match family {
        Family::Rl | Family::Constant => 0.0,
        _ => rng.random_range(0.0..=1.5),
    };
    let order = FractionalOrder { alpha, beta };
    let a = rng.random_range(0.0..=2.0);
    let x = a + rng.random_range(0.2..=2.0);
    let tau1 = rng.random_range(0.2..=2.0);
    let tau2 = tau1 + rng.random_range(0.0..=3.0);
    let p = rng.random_range(1.0..=4.0);
    let c0 = 2.0 - rng.random_range(0.0..1.9);
    let c1 = rng.random_range(0.0..=1.0);
    let c2 = rng.random_range(0.0..=1.0);
    let omega_f = rng.random_range(0.5..=5.0);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);

    let kernel = match family {
        Family::Rl => make_rl_kernel(alpha),
        Family::Constant => make_constant_kernel(rng.random_range(0.5..=2.0)),
        Family::Prabhakar => {
            let rho = rng.random_range(0.0..=2.0);
            let omega = rng.random_range(0.0..=0.9);
            make_prabhakar_kernel(rho, omega, order)
        }
        _ => make_proportional_kernel(rng.random_range(0.3..=0.95), alpha),
    }
    .expect("generator draws valid kernel parameters");

    let f2_src = format!("{c0:?} + {c1:?}*theta + {c2:?}*theta^2");
    let f1_src = format!(
        "({tau1:?} + {:?}*(1 + sin({omega_f:?}*theta + {phase:?}))/2) * ({f2_src})",
        tau2 - tau1
    );
    let f2_at = |t: f64| c0 + c1 * t + c2 * t * t;
    let iv = Interval { a, x, b: x };
    let mut s = Scenario::new(
        format!("seed-{seed:06}"),
        kernel,
        order,
        iv,
        RealFn::parse(&f1_src).expect("generated f1 parses"),
        RealFn::parse(&f2_src).expect("generated f2 parses"),
        p,
    );
    s.bounds = Some(RatioBounds { tau1, tau2 });
    s.phi = Some(tau1 / 2.0);
    // f2 is increasing on theta >= 0, so f1 lies in [tau1 f2(a), tau2 f2(x)];
    // the box is widened by a relative 1e-9 to absorb rounding
    let (lo, hi) = (1.0 - 1e-9, 1.0 + 1e-9);
    s.box_bounds = Some(BoxBounds {
        m: tau1 * f2_at(a) * lo,
        big_m: tau2 * f2_at(x) * hi,
        n: f2_at(a) * lo,
        big_n: f2_at(x) * hi,
    });
    s
}

#[derive(Debug, Clone)]
pub struct SuiteEntry {
    pub scenario_id: String,
    pub theorem: Theorem,
    pub outcome: std::result::Result<InequalityReport, Error>,
}

impl SuiteEntry {
    pub fn verdict(&self) -> Option<Verdict> {
        self.outcome.as_ref().ok().map(|r| r.verdict)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub holds: usize,
    pub violated: usize,
    pub inconclusive: usize,
    /// Pairs whose checker returned an error.
    pub failed: usize,
}

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub entries: Vec<SuiteEntry>,
    pub counts: Counts,
    pub seed: Option<u64>,
    pub wall_time: Duration,
}

impl SuiteResult {
    fn from_entries(mut entries: Vec<SuiteEntry>, wall_time: Duration) -> Self {
        entries.sort_by(|x, y| (&x.scenario_id, x.theorem).cmp(&(&y.scenario_id, y.theorem)));
        let mut counts = Counts::default();
        for e in &entries {
            match e.verdict() {
                Some(Verdict::Holds) => counts.holds += 1,
                Some(Verdict::Violated) => counts.violated += 1,
                Some(Verdict::Inconclusive) => counts.inconclusive += 1,
                None => counts.failed += 1,
            }
        }
        Self {
            entries,
            counts,
            seed: None,
            wall_time,
        }
    }

    pub fn summary_line(&self) -> String {
        let c = self.counts;
        let mut line = format!(
            "holds={} violated={} inconclusive={}",
            c.holds, c.violated, c.inconclusive
        );
        if c.failed > 0 {
            let _ = write!(line, " failed={}", c.failed);
        }
        line
    }

    /// Process exit code: 2 for a violation (never produced by inadmissible
    /// kernels), 3 for input errors, 4 for numerical failures, else 0.
    pub fn exit_code(&self) -> i32 {
        let errors = || self.entries.iter().filter_map(|e| e.outcome.as_ref().err());
        if self.counts.violated > 0 {
            2
        } else if errors().any(Error::is_input_error) {
            3
        } else if errors().next().is_some() {
            4
        } else {
            0
        }
    }
}

/// Runs each `(scenario, theorem)` pair on up to `parallelism` threads.
/// Output order is canonical (scenario id, then theorem) whatever the thread count.
pub fn run_pairs(pairs: &[(Scenario, Theorem)], parallelism: usize) -> SuiteResult {
    let start = Instant::now();
    let next = AtomicUsize::new(0);
    let out = Mutex::new(Vec::with_capacity(pairs.len()));
    let workers = parallelism.clamp(1, pairs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((s, th)) = pairs.get(i) else { break };
                let entry = SuiteEntry {
                    scenario_id: s.id.clone(),
                    theorem: *th,
                    outcome: check_theorem(s, *th),
                };
                out.lock().expect("no worker panics while holding the lock").push(entry);
            });
        }
    });
    let entries = out.into_inner().expect("workers finished");
    SuiteResult::from_entries(entries, start.elapsed())
}

/// Every scenario against every selected theorem.
pub fn run_suite(scenarios: &[Scenario], theorems: &[Theorem], parallelism: usize) -> SuiteResult {
    let pairs: Vec<_> = scenarios
        .iter()
        .flat_map(|s| theorems.iter().map(move |t| (s.clone(), *t)))
        .collect();
    run_pairs(&pairs, parallelism)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    SvgMargins,
    Text,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "svg" | "svg-margins" => Ok(ReportFormat::SvgMargins),
            "text" => Ok(ReportFormat::Text),
            _ => Err(Error::invalid(
                "format",
                format!("unknown format '{s}' (csv, svg, text)"),
            )),
        }
    }
}

pub const CSV_COLUMNS: [&str; 9] = [
    "scenario_id",
    "theorem",
    "side_labels",
    "side_values",
    "margin",
    "relative_margin",
    "error_budget",
    "verdict",
    "kernel_admissible",
];

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn write_csv(r: &SuiteResult, out: &mut dyn Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for e in &r.entries {
        let row: Vec<String> = match &e.outcome {
            Ok(rep) => vec![
                e.scenario_id.clone(),
                e.theorem.to_string(),
                rep.sides.iter().map(|s| s.label.as_str()).collect::<Vec<_>>().join(";"),
                rep.sides
                    .iter()
                    .map(|s| s.value.to_string())
                    .collect::<Vec<_>>()
                    .join(";"),
                rep.margin.to_string(),
                rep.relative_margin.to_string(),
                rep.error_budget.to_string(),
                rep.verdict.to_string(),
                rep.kernel_admissible.to_string(),
            ],
            Err(err) => vec![
                e.scenario_id.clone(),
                e.theorem.to_string(),
                err.to_string(),
                String::new(),
                "NaN".into(),
                "NaN".into(),
                "NaN".into(),
                "error".into(),
                String::new(),
            ],
        };
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// One plotted point.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginPoint {
    pub label: String,
    pub margin: f64,
    pub verdict: String,
}

/// Reads `(scenario_id/theorem, margin, verdict)` back from a report CSV.
pub fn read_margins(input: impl Read) -> Result<Vec<MarginPoint>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::ScenarioParse(format!("report CSV lacks column '{name}'")))
    };
    let (ci, ct, cm, cv) = (col("scenario_id")?, col("theorem")?, col("margin")?, col("verdict")?);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let margin = rec[cm]
            .parse::<f64>()
            .map_err(|_| Error::ScenarioParse(format!("bad margin '{}'", &rec[cm])))?;
        out.push(MarginPoint {
            label: format!("{}/{}", &rec[ci], &rec[ct]),
            margin,
            verdict: rec[cv].to_string(),
        });
    }
    Ok(out)
}

fn signed_log(m: f64) -> f64 {
    // symmetric log with a linear core below 1e-12
    m.signum() * (1.0 + m.abs() / 1e-12).log10()
}

/// Margin-vs-scenario scatter on a signed log scale with a zero line.
pub fn margins_svg(points: &[MarginPoint]) -> String {
    let (w, h, pad) = (900.0, 420.0, 40.0);
    let plotted: Vec<(usize, f64, &MarginPoint)> = points
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.margin.is_nan())
        .map(|(i, p)| {
            let m = if p.margin.is_infinite() {
                p.margin.signum() * 1e300
            } else {
                p.margin
            };
            (i, signed_log(m), p)
        })
        .collect();
    let ymax = plotted.iter().map(|(_, y, _)| y.abs()).fold(1.0, f64::max);
    let n = points.len().max(1) as f64;
    let zero_y = h / 2.0;
    let sx = |i: usize| pad + (w - 2.0 * pad) * (i as f64 + 0.5) / n;
    let sy = |y: f64| zero_y - (h / 2.0 - pad) * y / ymax;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<line id="zero" x1="{pad}" y1="{zero_y}" x2="{}" y2="{zero_y}" stroke="black" stroke-width="1"/>"#,
        w - pad
    );
    let _ = writeln!(
        svg,
        r#"<text x="{pad}" y="20" font-family="sans-serif" font-size="12">margin (signed log scale); {} points</text>"#,
        plotted.len()
    );
    for (i, y, p) in plotted {
        let color = match p.verdict.as_str() {
            "holds" => "#2a7",
            "violated" => "#d22",
            _ => "#888",
        };
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"><title>{} margin={}</title></circle>"#,
            sx(i),
            sy(y),
            xml_escape(&p.label),
            p.margin
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn margin_points(r: &SuiteResult) -> Vec<MarginPoint> {
    r.entries
        .iter()
        .map(|e| MarginPoint {
            label: format!("{}/{}", e.scenario_id, e.theorem),
            margin: e.outcome.as_ref().map(|r| r.margin).unwrap_or(f64::NAN),
            verdict: e.verdict().map(|v| v.to_string()).unwrap_or_else(|| "error".into()),
        })
        .collect()
}

fn write_text(r: &SuiteResult, out: &mut dyn Write) -> Result<()> {
    for e in &r.entries {
        match &e.outcome {
            Ok(rep) => {
                let sides: Vec<String> = rep
                    .sides
                    .iter()
                    .map(|s| format!("{}={:.12}", s.label, s.value))
                    .collect();
                let consts: Vec<String> = rep.constants.iter().map(|(n, v)| format!("{n}={v}")).collect();
                writeln!(
                    out,
                    "{} {} {} margin={:.3e} budget={:.3e} {} [{}]{}",
                    e.scenario_id,
                    e.theorem,
                    rep.verdict,
                    rep.margin,
                    rep.error_budget,
                    sides.join(" "),
                    consts.join(" "),
                    if rep.kernel_admissible { "" } else { " report-only" }
                )?;
            }
            Err(err) => writeln!(out, "{} {} error: {err}", e.scenario_id, e.theorem)?,
        }
    }
    writeln!(out, "{}", r.summary_line())?;
    Ok(())
}

/// Writes the suite result in `format`.
pub fn emit_report(r: &SuiteResult, format: ReportFormat, out: &mut dyn Write) -> Result<()> {
    match format {
        ReportFormat::Csv => write_csv(r, out),
        ReportFormat::Text => write_text(r, out),
        ReportFormat::SvgMargins => {
            out.write_all(margins_svg(&margin_points(r)).as_bytes())?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[kernel]
type = "rl"
[order]
alpha = 0.5
[interval]
a = 1.0
x = 2.0
[functions]
f1 = "theta + 1"
f2 = "theta"
[hypothesis]
p = 2
"#;

    #[test]
    fn minimal_rl_scenario() {
        let s = load_scenario(MINIMAL).unwrap();
        assert_eq!(s.order.beta, 0.0);
        assert_eq!(s.q, 2.0);
        assert_eq!(s.iv.b, 2.0);
        let b = s.bounds.unwrap();
        assert!((b.tau1 - 1.5).abs() < 1e-15 && (b.tau2 - 2.0).abs() < 1e-15);
    }

    #[test]
    fn phi_outside_range_is_a_constraint_error() {
        let text = MINIMAL.replace("p = 2", "p = 2\ntau1 = 1.0\ntau2 = 2.0\nphi = 1.0");
        match load_scenario(&text) {
            Err(Error::Constraint(v)) => assert!(v.iter().any(|m| m.contains("phi")), "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn every_violation_is_listed() {
        let text = r#"
[kernel]
type = "prabhakar"
rho = 1.0
[order]
alpha = -1.0
[interval]
a = 2.0
x = 1.0
[functions]
f1 = "theta +"
f2 = "foo(theta)"
[hypothesis]
p = 2
"#;
        match load_scenario(text) {
            Err(Error::Constraint(v)) => {
                assert_eq!(v.len(), 4, "{v:?}");
                assert!(v[0].starts_with("order"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            load_scenario("[kernel]\ntype = 1"),
            Err(Error::ScenarioParse(_))
        ));
        let unknown = MINIMAL.replace("alpha = 0.5", "alpha = 0.5\ngamma = 1");
        assert!(matches!(load_scenario(&unknown), Err(Error::ScenarioParse(_))));
    }

    #[test]
    fn series_kernel_block() {
        let text = MINIMAL.replace(
            "type = \"rl\"",
            "type = \"series\"\ncoeff = \"1/gamma(n+1)\"\nradius = \"inf\"",
        );
        let s = load_scenario(&text).unwrap();
        assert_eq!(s.order.beta, 1.0);
        let bad = MINIMAL.replace("type = \"rl\"", "type = \"series\"\ncoeff = \"1\"\nradius = \"big\"");
        assert!(matches!(load_scenario(&bad), Err(Error::Constraint(_))));
    }

    #[test]
    fn examples_are_bound_to_theorems() {
        let o = FractionalOrder::new(1.0, 0.0).unwrap();
        let k = make_rl_kernel(1.0).unwrap();
        let ex = default_examples(&k, o).unwrap();
        assert_eq!(ex.len(), 8);
        assert_eq!(ex[0].theorem, Theorem::ReverseMinkowski);
        assert_eq!(ex[5].theorem, Theorem::BoxedMinkowski);
        assert_eq!(ex[4].scenario.phi, Some(0.5));
        let iv = Interval::left(1.0, 2.0).unwrap();
        assert!(matches!(
            paper_example(9, 1.0, o, k.clone(), iv, 2.0),
            Err(Error::Range(_))
        ));
        let low = Interval::left(0.5, 2.0).unwrap();
        assert!(paper_example(1, 1.0, o, k, low, 2.0).is_err());
    }

    #[test]
    fn example_eight_uses_displayed_max() {
        let o = FractionalOrder::new(1.0, 0.0).unwrap();
        let iv = Interval::left(1.0, 2.0).unwrap();
        let ex = paper_example(8, 1.0, o, make_rl_kernel(1.0).unwrap(), iv, 2.0).unwrap();
        let u = ex.scenario.upsilon_override.unwrap();
        assert_eq!(u.eval(1.5).unwrap(), 4.5);
        assert_eq!(u.eval(10.0).unwrap(), 19.0);
    }

    #[test]
    fn generator_is_deterministic_and_sound() {
        for seed in [0, 7, 42, 12345] {
            for fam in [
                Family::Rl,
                Family::Prabhakar,
                Family::Admissible,
                Family::ProportionalReportOnly,
            ] {
                let s1 = random_scenario(seed, fam);
                let s2 = random_scenario(seed, fam);
                assert_eq!(s1.f1.label(), s2.f1.label());
                assert_eq!(s1.order, s2.order);
                assert_eq!(s1.p.to_bits(), s2.p.to_bits());
                check_hypothesis(&s1, s1.grid_size).unwrap();
                s1.validate().unwrap();
            }
        }
        assert_eq!(random_scenario(7, Family::Rl).order.beta, 0.0);
    }

    #[test]
    fn empty_suite() {
        let r = run_suite(&[], &Theorem::ALL, 4);
        assert_eq!(r.counts, Counts::default());
        let mut buf = Vec::new();
        emit_report(&r, ReportFormat::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), CSV_COLUMNS.join(",") + "\n");
        assert_eq!(r.exit_code(), 0);
    }

    #[test]
    fn summary_counts_and_line() {
        let s = random_scenario(3, Family::Rl);
        let r = run_suite(&[s], &[Theorem::ReverseMinkowski], 1);
        let mut forged = r.clone();
        let mut bad = forged.entries[0].clone();
        if let Ok(rep) = &mut bad.outcome {
            rep.verdict = Verdict::Violated;
        }
        forged.entries.push(bad);
        let forged = SuiteResult::from_entries(forged.entries, Duration::ZERO);
        assert_eq!(forged.summary_line(), "holds=1 violated=1 inconclusive=0");
        assert_eq!(forged.exit_code(), 2);
    }

    #[test]
    fn svg_points_sit_above_zero_for_positive_margins() {
        let pts: Vec<MarginPoint> = (0..5)
            .map(|i| MarginPoint {
                label: format!("s{i}"),
                margin: 10f64.powi(-i),
                verdict: "holds".into(),
            })
            .collect();
        let svg = margins_svg(&pts);
        let zero = 420.0 / 2.0;
        for line in svg.lines().filter(|l| l.starts_with("<circle")) {
            let cy: f64 = line
                .split("cy=\"")
                .nth(1)
                .unwrap()
                .split('"')
                .next()
                .unwrap()
                .parse()
                .unwrap();
            assert!(cy < zero);
        }
    }

    #[test]
    fn csv_round_trips_margins() {
        let s = random_scenario(5, Family::Constant);
        let r = run_suite(&[s], &[Theorem::ReverseMinkowski, Theorem::ProductSandwich], 2);
        let mut buf = Vec::new();
        emit_report(&r, ReportFormat::Csv, &mut buf).unwrap();
        let pts = read_margins(buf.as_slice()).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0].margin, r.entries[0].outcome.as_ref().unwrap().margin);
    }
}
