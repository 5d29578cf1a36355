//! Adaptive composite Gauss-Kronrod quadrature (7-point Gauss embedded in a
//! 15-point Kronrod panel), bisecting the worst panel until the summed error
//! estimate meets the tolerance.

// weight tables keep the published digits
#![allow(clippy::excessive_precision)]

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances for every adaptive integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            max_subdivisions: 4096,
        }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let q = Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(Error::invalid("abs_tol", "must be > 0"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::invalid("rel_tol", "must be > 0"));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::invalid("max_subdivisions", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    /// Number of panels in the final partition.
    pub panels: usize,
}

// Kronrod abscissae on [0, 1]; odd indices are the Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn checked<F>(f: &mut F, t: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let v = f(t)?;
    if !v.is_finite() {
        return Err(Error::Domain(format!("integrand is {v} at {t}")));
    }
    Ok(v)
}

fn kronrod15<F>(f: &mut F, a: f64, b: f64) -> Result<Panel>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = checked(f, center)?;
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = resk.abs();
    let mut fv = [(0.0, 0.0); 7];
    for (j, slot) in fv.iter_mut().enumerate() {
        let dx = half * XGK[j];
        let f1 = checked(f, center - dx)?;
        let f2 = checked(f, center + dx)?;
        *slot = (f1, f2);
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for (j, &(f1, f2)) in fv.iter().enumerate() {
        resasc += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let h = half.abs();
    resabs *= h;
    resasc *= h;
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Ok(Panel {
        a,
        b,
        value: resk * half,
        error: err,
    })
}

/// Integrates `f` over `[a, b]` (`a <= b`).
pub fn integrate<F>(mut f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::Domain(format!("bad integration range [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            panels: 0,
        });
    }
    let mut panels = vec![kronrod15(&mut f, a, b)?];
    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        let tol = spec.abs_tol.max(spec.rel_tol * value.abs());
        if error <= tol {
            return Ok(QuadResult {
                value,
                error,
                panels: panels.len(),
            });
        }
        if panels.len() >= spec.max_subdivisions {
            return Err(Error::QuadFailure {
                estimate: error,
                tolerance: tol,
                subdivisions: panels.len(),
            });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one panel");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            return Err(Error::QuadFailure {
                estimate: error,
                tolerance: tol,
                subdivisions: panels.len() + 1,
            });
        }
        panels.push(kronrod15(&mut f, p.a, mid)?);
        panels.push(kronrod15(&mut f, mid, p.b)?);
    }
}

/// Chebyshev points of the second kind on `[a, b]`, endpoints included,
/// in increasing order.
pub fn chebyshev_nodes(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![0.5 * (a + b)];
    }
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let last = (count - 1) as f64;
    (0..count)
        .map(|k| {
            let c = -(std::f64::consts::PI * k as f64 / last).cos();
            match k {
                0 => a,
                _ if k == count - 1 => b,
                _ => mid + half * c,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|t| Ok(t.powi(6) - 2.0 * t), 0.0, 2.0, &QuadratureSpec::default()).unwrap();
        assert!((r.value - (128.0 / 7.0 - 4.0)).abs() < 1e-13);
        assert_eq!(r.panels, 1);
    }

    #[test]
    fn sqrt_endpoint_is_refined() {
        // int_0^1 sqrt(t) dt = 2/3, derivative singular at 0
        let r = integrate(|t: f64| Ok(t.sqrt()), 0.0, 1.0, &QuadratureSpec::default()).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-9);
        assert!(r.error <= 1e-9);
        assert!(r.panels > 1);
    }

    #[test]
    fn failure_when_subdivisions_run_out() {
        let q = QuadratureSpec::new(1e-14, 1e-14, 2).unwrap();
        let r = integrate(|t: f64| Ok(t.powf(0.1)), 0.0, 1.0, &q);
        assert!(matches!(r, Err(Error::QuadFailure { .. })));
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        let r = integrate(|t: f64| Ok(1.0 / (t - 0.5)), 0.0, 1.0, &QuadratureSpec::default());
        assert!(r.is_err());
    }

    #[test]
    fn chebyshev_nodes_cover_the_interval() {
        let n = chebyshev_nodes(1.0, 2.0, 5);
        assert_eq!(n.len(), 5);
        assert_eq!((n[0], n[4]), (1.0, 2.0));
        assert!((n[2] - 1.5).abs() < 1e-15);
        assert!(n.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::new(0.0, 1e-9, 10).is_err());
        assert!(QuadratureSpec::new(1e-9, -1.0, 10).is_err());
        assert!(QuadratureSpec::new(1e-9, 1e-9, 0).is_err());
    }
}
