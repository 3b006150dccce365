//! p-variation of sampled functions, the sliding-average mollifier in one and
//! two variables, and the variation-contraction check.
//!
//! The grid-restricted p-variation
//!
//! ```text
//! sup over sub-partitions i_0 < i_1 < ... < i_k of  sum |v[i_{l+1}] - v[i_l]|^p
//! ```
//!
//! is computed exactly by dynamic programming over the sample points. For
//! piecewise-monotone catalog members the grid supremum attains the true
//! supremum once the sample set contains the breakpoints.

use crate::error::{Error, Result};
use crate::functions::{SpaceFn, TestFunction, TimeFn};

/// Exact grid-restricted p-variation by O(n^2) dynamic programming:
/// best[j] = max over m < j of best[m] + |v[j] - v[m]|^p.
pub fn p_variation(samples: &[f64], p: f64) -> Result<f64> {
    if p < 1.0 || !p.is_finite() {
        return Err(Error::invalid(format!("p-variation exponent must be >= 1, got {p}")));
    }
    if samples.len() < 2 {
        return Err(Error::invalid("p-variation needs at least two samples"));
    }
    let n = samples.len();
    let mut best = vec![0.0f64; n];
    for j in 1..n {
        let mut b = 0.0f64;
        for m in 0..j {
            let cand = best[m] + (samples[j] - samples[m]).abs().powf(p);
            if cand > b {
                b = cand;
            }
        }
        best[j] = b;
    }
    Ok(best[n - 1])
}

/// The forward sliding average H_eps(x) = (1/eps) * integral of F over
/// [x, x + eps]; converges to F pointwise at continuity points as eps -> 0.
#[derive(Debug, Clone)]
pub struct Mollified<'a> {
    f: &'a SpaceFn,
    eps: f64,
}

impl Mollified<'_> {
    pub fn eval(&self, x: f64) -> f64 {
        self.f.integral(x, x + self.eps) / self.eps
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

pub fn mollify_1d(f: &SpaceFn, eps: f64) -> Result<Mollified<'_>> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::invalid(format!("mollifier width must be positive, got {eps}")));
    }
    Ok(Mollified { f, eps })
}

/// Time-dependent mollifier H_eps(t, x), smoothing in x per time slice.
#[derive(Debug, Clone)]
pub struct Mollified2<'a> {
    time: TimeFn,
    space: Mollified<'a>,
}

impl Mollified2<'_> {
    pub fn eval(&self, s: f64, x: f64) -> f64 {
        self.time.eval(s) * self.space.eval(x)
    }
}

pub fn mollify_2d(f: &TestFunction, eps: f64) -> Result<Mollified2<'_>> {
    // product rules F(s,x) = g(s) h(x) mollify slice-exactly: g(s) H_eps[h](x)
    let (time, space) = match f {
        TestFunction::Space(space) => (TimeFn::One, space),
        TestFunction::TimeSpace { time, space } => (*time, space),
    };
    Ok(Mollified2 { time, space: mollify_1d(space, eps)? })
}

/// Result of the variation-contraction check: the mollifier, being an average
/// of translates, must not increase the grid p-variation.
#[derive(Debug, Clone, Copy)]
pub struct ContractionCheck {
    pub v_f: f64,
    pub v_h: f64,
    pub ok: bool,
}

const CONTRACTION_SLACK: f64 = 1e-9;

/// Compare p-variations of F and H_eps on the same sample points;
/// ok = v_H <= v_F * (1 + 1e-9) + 1e-9. The additive term absorbs evaluation
/// roundoff in H when v_F is exactly zero (constant rules), where any noise
/// would otherwise fail a purely multiplicative bound. The sample set should
/// contain F's breakpoints so v_F attains the true supremum.
pub fn mollifier_contraction_check(
    f: &SpaceFn,
    eps: f64,
    p: f64,
    samples_x: &[f64],
) -> Result<ContractionCheck> {
    let h = mollify_1d(f, eps)?;
    let f_samples: Vec<f64> = samples_x.iter().map(|&x| f.eval(x)).collect();
    let h_samples: Vec<f64> = samples_x.iter().map(|&x| h.eval(x)).collect();
    let v_f = p_variation(&f_samples, p)?;
    let v_h = p_variation(&h_samples, p)?;
    let ok = v_h <= v_f * (1.0 + CONTRACTION_SLACK) + CONTRACTION_SLACK;
    Ok(ContractionCheck { v_f, v_h, ok })
}

/// Fixed-grid (p, q)-variation functional over rectangular increments
/// (no partition supremum):
///
/// ```text
/// ( sum_k ( sum_j |d_rect(k, j)|^p )^{q/p} )^{1/q}
/// d_rect(k, j) = F(s_{k+1}, x_{j+1}) - F(s_{k+1}, x_j) - F(s_k, x_{j+1}) + F(s_k, x_j)
/// ```
///
/// Zero exactly when F is additively separable. Serves as a finiteness
/// certificate for the two-parameter test functions.
pub fn pq_variation_grid(rows: &[Vec<f64>], p: f64, q: f64) -> Result<f64> {
    if p < 1.0 || q < 1.0 {
        return Err(Error::invalid(format!("(p, q) must both be >= 1, got ({p}, {q})")));
    }
    if rows.len() < 2 || rows.iter().any(|r| r.len() < 2) {
        return Err(Error::invalid("lattice must be at least 2 x 2"));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::invalid("lattice rows must have equal length"));
    }
    let mut outer = 0.0f64;
    for k in 0..rows.len() - 1 {
        let mut inner = 0.0f64;
        for j in 0..cols - 1 {
            let rect = rows[k + 1][j + 1] - rows[k + 1][j] - rows[k][j + 1] + rows[k][j];
            inner += rect.abs().powf(p);
        }
        outer += inner.powf(q / p);
    }
    Ok(outer.powf(1.0 / q))
}
