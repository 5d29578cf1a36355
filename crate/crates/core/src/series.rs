//! Power-series summation with a tail bound.

use crate::error::{Error, Result};

/// A truncated series with a bound on what was left out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    /// Upper bound on the absolute sum of all omitted terms.
    pub tail_bound: f64,
    /// Number of terms added.
    pub terms: usize,
    /// Floating-point rounding estimate, proportional to `sum |t_n|`.
    pub roundoff: f64,
}

/// Relative error assumed per computed term, in units of machine epsilon.
const TERM_ULPS: f64 = 8.0;

/// Relative accuracy below which a cancelling sum is rejected.
const CANCELLATION_LIMIT: f64 = 1e-6;

/// Tail bound from a ratio bound: if `|t_{m+1} / t_m| <= r < 1` for every
/// `m >= n`, the terms after `t_n` sum to at most `|t_n| r / (1 - r)`.
pub fn geometric_tail(t_n: f64, r: f64) -> Option<f64> {
    if t_n == 0.0 {
        return Some(0.0);
    }
    (r < 1.0).then(|| t_n.abs() * r / (1.0 - r))
}

/// Sums `term(0) + term(1) + ...` until the tail bound drops to `tol`.
///
/// `tail(n, t_n)` returns a bound on `sum_{m > n} |t_m|`, or `None` while no
/// bound is available. Terms are requested strictly in order `0, 1, 2, ...`.
pub fn sum_series(
    mut term: impl FnMut(usize) -> f64,
    mut tail: impl FnMut(usize, f64) -> Option<f64>,
    tol: f64,
    cap: usize,
) -> Result<SeriesSum> {
    let mut value = 0.0;
    // Kahan compensation; alternating kernels sum a few hundred terms
    let mut comp = 0.0;
    let mut abs_sum = 0.0;
    for n in 0..cap {
        let t = term(n);
        if t.is_infinite() || (t + value).is_infinite() {
            return Err(Error::SeriesOverflow { terms: n });
        }
        if t.is_nan() {
            return Err(Error::Divergence {
                what: "series term".into(),
                terms: n,
            });
        }
        abs_sum += t.abs();
        let y = t - comp;
        let s = value + y;
        comp = (s - value) - y;
        value = s;
        if let Some(bound) = tail(n, t) {
            if bound <= tol {
                let roundoff = TERM_ULPS * f64::EPSILON * abs_sum;
                if roundoff > tol.max(CANCELLATION_LIMIT * value.abs()) {
                    return Err(Error::Cancellation {
                        terms: n + 1,
                        roundoff,
                        value,
                    });
                }
                return Ok(SeriesSum {
                    value,
                    tail_bound: bound,
                    terms: n + 1,
                    roundoff,
                });
            }
        }
    }
    Err(Error::Tolerance {
        what: "series tail bound".into(),
        terms: cap,
    })
}

/// Ratio-test tail estimate for series without an analytic bound.
///
/// Zero terms are skipped; the decay rate is measured per index between
/// consecutive nonzero terms over a window. An estimate, not a certificate.
#[derive(Debug, Clone)]
pub struct EmpiricalTail {
    window: usize,
    nonzero: std::collections::VecDeque<(usize, f64)>,
    last_index: usize,
}

impl EmpiricalTail {
    pub fn new(window: usize) -> Self {
        Self {
            window: window.max(2),
            nonzero: Default::default(),
            last_index: 0,
        }
    }

    /// Records `t_n` and returns the current tail estimate.
    pub fn push(&mut self, n: usize, t: f64) -> Option<f64> {
        self.last_index = n;
        if t != 0.0 {
            self.nonzero.push_back((n, t.abs()));
            if self.nonzero.len() > self.window + 1 {
                self.nonzero.pop_front();
            }
        }
        self.estimate()
    }

    fn estimate(&self) -> Option<f64> {
        if self.nonzero.is_empty() {
            // nothing nonzero seen yet; only trust this after a long run of zeros
            return (self.last_index >= 4 * self.window).then_some(0.0);
        }
        if self.nonzero.len() <= self.window {
            return None;
        }
        let mut worst: f64 = 0.0;
        let items: Vec<_> = self.nonzero.iter().copied().collect();
        for w in items.windows(2) {
            let ((i, a), (j, b)) = (w[0], w[1]);
            let rate = (b / a).powf(1.0 / (j - i) as f64);
            worst = worst.max(rate);
        }
        if worst >= 1.0 {
            return None;
        }
        let (last_n, last_mag) = *self.nonzero.back()?;
        // value the geometric continuation from the last nonzero term
        let steps = (self.last_index - last_n) as f64;
        Some(last_mag * worst.powf(steps) * worst / (1.0 - worst))
    }
}
