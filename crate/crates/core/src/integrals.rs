//! Both sides of the occupation-time identities: Stieltjes sums against
//! local-time increments (in space, and two-parameter in time and space) and
//! the epsilon-difference-quotient estimators, plus the exact discrete
//! identity that ties them together.
//!
//! Sign conventions, resolved once and kept visible: with
//!
//! ```text
//! lhs_forward   = (1/eps)  sum { F(X_s) - F(X_s + eps) } dqv
//! lhs_backward  = (1/eps)  sum { F(s, X_s) - F(s, X_s - eps) } dqv
//! lhs_symmetric = (1/2eps) sum { F(s, X_s - eps) - F(s, X_s + eps) } dqv
//! ```
//!
//! the limits are +integral(F dL) for forward, -double_integral(F dL) for
//! backward and +double_integral(F dL) for symmetric. The special cases pin
//! the forward sign: F = 1_{x <= a} recovers +L_t^a (the definition of local
//! time) and F(x) = x gives lhs = -qv_t on both sides. A `Paper` reporting
//! mode negates the forward right side so the alternative convention stays
//! visible in output instead of being silently patched; it changes nothing
//! for backward/symmetric, where the two conventions agree.

use crate::error::{Error, Result};
use crate::functions::{SpaceFn, TestFunction};
use crate::grid::{Path, SpaceGrid};
use crate::local_time::{occupation_local_time, LocalTimeField, LocalTimeSheet};
use crate::sum::CompensatedSum;

/// Floor for the denominator of relative errors.
pub const REL_ERR_FLOOR: f64 = 1e-8;

/// Which difference quotient an estimator used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Forward,
    Backward,
    Symmetric,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Forward => "forward",
            Variant::Backward => "backward",
            Variant::Symmetric => "symmetric",
        }
    }
}

/// Sign convention for the forward right side; see the module docs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignConvention {
    Paper,
    Resolved,
}

impl SignConvention {
    pub fn name(&self) -> &'static str {
        match self {
            SignConvention::Paper => "paper",
            SignConvention::Resolved => "resolved",
        }
    }
}

/// One (eps, lhs, rhs) comparison.
#[derive(Debug, Clone, Copy)]
pub struct EstimatorResult {
    pub epsilon: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub variant: Variant,
    pub sign_convention: SignConvention,
}

impl EstimatorResult {
    pub fn new(epsilon: f64, lhs: f64, rhs: f64, variant: Variant, sign: SignConvention) -> Self {
        let abs_err = (lhs - rhs).abs();
        Self {
            epsilon,
            lhs,
            rhs,
            abs_err,
            rel_err: abs_err / rhs.abs().max(REL_ERR_FLOOR),
            variant,
            sign_convention: sign,
        }
    }
}

/// Left edge x_j = x_min + j * delta, also defined past the top of the grid
/// (the mollified identity reads F a margin's width beyond the last bin).
#[inline]
fn edge_unclamped(space: &SpaceGrid, j: usize) -> f64 {
    space.x_min() + j as f64 * space.delta()
}

fn check_margin_bins(field: &LocalTimeField, margin: usize) -> Result<()> {
    let v = field.values();
    let n = v.len();
    if n < 2 * margin + 1 {
        return Err(Error::range(format!("grid too small for a {margin}-bin margin")));
    }
    let lo_busy = v[..margin].iter().any(|&x| x != 0.0);
    let hi_busy = v[n - margin..].iter().any(|&x| x != 0.0);
    if lo_busy || hi_busy {
        return Err(Error::range(format!(
            "field support touches the grid boundary (needs {margin} empty bin(s) per side)"
        )));
    }
    Ok(())
}

/// Stieltjes sum against space increments of the field with left-point
/// evaluation at bin edges: sum_j F(x_j) (L^{x_j} - L^{x_{j-1}}) with
/// L^{x_{-1}} = 0. Requires one empty bin on each side so the increments of
/// the compactly supported field telescope fully.
pub fn stieltjes_space_integral(f: &SpaceFn, field: &LocalTimeField) -> Result<f64> {
    stieltjes_with(field, |j| f.eval(edge_unclamped(field.space(), j)))
}

fn stieltjes_with(field: &LocalTimeField, f_at: impl Fn(usize) -> f64) -> Result<f64> {
    check_margin_bins(field, 1)?;
    let v = field.values();
    let mut acc = CompensatedSum::new();
    let mut prev = 0.0;
    for (j, &lj) in v.iter().enumerate() {
        acc.add(f_at(j) * (lj - prev));
        prev = lj;
    }
    Ok(acc.value())
}

/// Forward difference-quotient estimator (space-only F):
/// (1/eps) sum over s_i < t of {F(X_i) - F(X_i + eps)} (qv[i+1] - qv[i]).
pub fn lhs_forward(f: &SpaceFn, path: &Path, eps: f64, t: f64) -> Result<f64> {
    check_eps(eps)?;
    let m = path.grid().index_of(t)?;
    let mut acc = CompensatedSum::new();
    for i in 0..m {
        let x = path.values()[i];
        acc.add((f.eval(x) - f.eval(x + eps)) * path.qv_increment(i));
    }
    Ok(acc.value() / eps)
}

/// Backward variant with time-dependent evaluation:
/// (1/eps) sum {F(s_i, X_i) - F(s_i, X_i - eps)} dqv.
pub fn lhs_backward(f: &TestFunction, path: &Path, eps: f64, t: f64) -> Result<f64> {
    check_eps(eps)?;
    let m = path.grid().index_of(t)?;
    let mut acc = CompensatedSum::new();
    for i in 0..m {
        let s = path.grid().point(i);
        let x = path.values()[i];
        acc.add((f.eval(s, x) - f.eval(s, x - eps)) * path.qv_increment(i));
    }
    Ok(acc.value() / eps)
}

/// Symmetric variant:
/// (1/2eps) sum {F(s_i, X_i - eps) - F(s_i, X_i + eps)} dqv.
pub fn lhs_symmetric(f: &TestFunction, path: &Path, eps: f64, t: f64) -> Result<f64> {
    check_eps(eps)?;
    let m = path.grid().index_of(t)?;
    let mut acc = CompensatedSum::new();
    for i in 0..m {
        let s = path.grid().point(i);
        let x = path.values()[i];
        acc.add((f.eval(s, x - eps) - f.eval(s, x + eps)) * path.qv_increment(i));
    }
    Ok(acc.value() / (2.0 * eps))
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::invalid(format!("shift eps must be positive, got {eps}")));
    }
    Ok(())
}

/// Outcome of the exact discrete identity check.
#[derive(Debug, Clone, Copy)]
pub struct IdentityCheck {
    /// Stieltjes side: sum_j H(x_j) (L^{x_j} - L^{x_{j-1}}).
    pub lhs: f64,
    /// Difference-quotient side: (1/eps) sum_i {F_bin(X_i) - F_bin(X_i + eps)} dqv.
    pub rhs: f64,
    pub defect: f64,
    pub eps: f64,
}

/// The discrete mollified identity with eps = m * delta and binned evaluation
/// of F at bin left edges.
///
/// Conventions, frozen by the 5-bin brute-force oracle test
/// (`identity_convention_oracle`): both sides read F only through its values
/// at the edges x_k = x_min + k delta;
///
/// ```text
/// lhs = sum_j H(x_j) (L^{x_j} - L^{x_{j-1}}),  H(x_j) = (1/m) sum_{k=j}^{j+m-1} F(x_k)
/// rhs = (1/(m delta)) sum_i {F(x_{b_i}) - F(x_{b_i + m})} (qv[i+1] - qv[i])
/// ```
///
/// where b_i is the bin of X_i: the index shift sits on the rhs, which reads F
/// at the sample's own bin edge and at the edge m bins to its right, while the
/// lhs windows start at the evaluation edge itself. With m empty margin bins
/// per side the two sides are the same sum term for term, so they agree to
/// rounding (asserted at 1e-10 relative).
pub fn identity_check(f: &SpaceFn, path: &Path, space: SpaceGrid, m: usize) -> Result<IdentityCheck> {
    if m < 1 {
        return Err(Error::invalid("identity window m must be at least 1"));
    }
    let t = path.grid().t_end();
    let field = occupation_local_time(path, space, t)?;
    check_margin_bins(&field, m)?;

    let delta = space.delta();
    let eps = m as f64 * delta;
    let n_bins = space.n_bins();

    // shared table so both sides see bit-identical F values
    let f_at: Vec<f64> = (0..n_bins + m)
        .map(|k| f.eval(edge_unclamped(&space, k)))
        .collect();

    let lhs = stieltjes_with(&field, |j| {
        let window: f64 = f_at[j..j + m].iter().sum();
        window / m as f64
    })?;

    let mut acc = CompensatedSum::new();
    for i in 0..path.grid().n_steps() {
        let b = space.bin_index(path.values()[i]).expect("checked by field construction");
        acc.add((f_at[b] - f_at[b + m]) * path.qv_increment(i));
    }
    let rhs = acc.value() / eps;

    Ok(IdentityCheck { lhs, rhs, defect: (lhs - rhs).abs(), eps })
}

/// Two-parameter Stieltjes sum over rectangular sheet increments with
/// left-point evaluation in both coordinates:
///
/// ```text
/// sum_k sum_j F(s_k, x_j) [ (L_{k+1,j} - L_{k,j}) - (L_{k+1,j-1} - L_{k,j-1}) ]
/// ```
///
/// For time-independent F the k-sum telescopes, leaving the space Stieltjes
/// integral against the final field.
pub fn two_param_integral(f: &TestFunction, sheet: &LocalTimeSheet) -> Result<f64> {
    check_margin_bins(&sheet.final_field(), 1)?;
    let space = sheet.space();
    let n_bins = space.n_bins();
    let mut acc = CompensatedSum::new();
    for k in 0..sheet.n_rows() - 1 {
        let s = sheet.checkpoints()[k];
        let (row0, row1) = (sheet.row(k), sheet.row(k + 1));
        let mut prev_rise = 0.0;
        for j in 0..n_bins {
            let rise = row1[j] - row0[j];
            acc.add(f.eval(s, edge_unclamped(space, j)) * (rise - prev_rise));
            prev_rise = rise;
        }
    }
    Ok(acc.value())
}

/// The dense-checkpoint limit of [`two_param_integral`] (a checkpoint at
/// every grid step), computed by streaming over the path instead of
/// materializing the sheet: one time step deposits mass (qv[i+1]-qv[i])/delta
/// in bin b_i only, so its row of rectangular increments collapses to
///
/// ```text
/// (dqv_i / delta) { F(s_i, x_{b_i}) - F(s_i, x_{b_i + 1}) }
/// ```
pub fn two_param_integral_dense(f: &TestFunction, path: &Path, space: SpaceGrid, t: f64) -> Result<f64> {
    let m = path.grid().index_of(t)?;
    let n_bins = space.n_bins();
    let mut acc = CompensatedSum::new();
    for i in 0..m {
        let x = path.values()[i];
        let b = space.bin_index(x).ok_or_else(|| {
            Error::range(format!("sample X[{i}] = {x} outside space grid"))
        })?;
        if b == 0 || b + 1 >= n_bins {
            return Err(Error::range(
                "sample in a boundary bin; the sheet integral needs one empty margin bin per side",
            ));
        }
        let s = path.grid().point(i);
        let bracket = f.eval(s, edge_unclamped(&space, b)) - f.eval(s, edge_unclamped(&space, b + 1));
        acc.add(bracket * path.qv_increment(i));
    }
    Ok(acc.value() / space.delta())
}

/// Outcome of an occupation-time-formula comparison.
#[derive(Debug, Clone, Copy)]
pub struct OccupationCheck {
    /// Time side: sum_i f(s_i, X_i) (qv[i+1] - qv[i]).
    pub lhs: f64,
    /// Local-time side: sum_j delta sum_k f(s_k, x_j) (L_{k+1,j} - L_{k,j}).
    pub rhs: f64,
    pub defect: f64,
}

/// Occupation-time formula against a checkpoint sheet. With dense checkpoints
/// the defect is pure space binning (at most Lip_x(f) * delta * qv_t); with
/// coarse checkpoints the time binning of f adds to it (reported, not bounded).
pub fn occupation_formula_check(f: &TestFunction, path: &Path, sheet: &LocalTimeSheet) -> Result<OccupationCheck> {
    let t = *sheet.checkpoints().last().unwrap();
    let m = path.grid().index_of(t)?;

    let mut lhs = CompensatedSum::new();
    for i in 0..m {
        lhs.add(f.eval(path.grid().point(i), path.values()[i]) * path.qv_increment(i));
    }

    let space = sheet.space();
    let mut rhs = CompensatedSum::new();
    for k in 0..sheet.n_rows() - 1 {
        let s = sheet.checkpoints()[k];
        let (row0, row1) = (sheet.row(k), sheet.row(k + 1));
        for j in 0..space.n_bins() {
            let rise = row1[j] - row0[j];
            if rise != 0.0 {
                rhs.add(f.eval(s, edge_unclamped(space, j)) * rise * space.delta());
            }
        }
    }

    let (lhs, rhs) = (lhs.value(), rhs.value());
    Ok(OccupationCheck { lhs, rhs, defect: (lhs - rhs).abs() })
}

/// Dense-checkpoint occupation-formula check streamed over the path. The
/// dense sheet's time increment at step i lives entirely in bin b_i, so the
/// local-time side is sum_i f(s_i, x_{b_i}) dqv_i; for x-independent f the
/// two sides are the same floating-point sum and the defect is exactly zero.
pub fn occupation_formula_dense(f: &TestFunction, path: &Path, space: SpaceGrid, t: f64) -> Result<OccupationCheck> {
    let m = path.grid().index_of(t)?;
    let mut lhs = CompensatedSum::new();
    let mut rhs = CompensatedSum::new();
    for i in 0..m {
        let s = path.grid().point(i);
        let x = path.values()[i];
        let b = space.bin_index(x).ok_or_else(|| {
            Error::range(format!("sample X[{i}] = {x} outside space grid"))
        })?;
        let dqv = path.qv_increment(i);
        lhs.add(f.eval(s, x) * dqv);
        rhs.add(f.eval(s, edge_unclamped(&space, b)) * dqv);
    }
    let (lhs, rhs) = (lhs.value(), rhs.value());
    Ok(OccupationCheck { lhs, rhs, defect: (lhs - rhs).abs() })
}

/// Run one difference-quotient variant down an eps ladder against its fixed
/// right side (space Stieltjes integral for forward, dense two-parameter
/// integral for backward/symmetric).
///
/// The ladder must be strictly decreasing with every eps >= delta: shifts
/// below the bin resolution alias against the field and are rejected.
pub fn theorem_convergence(
    f: &TestFunction,
    variant: Variant,
    path: &Path,
    eps_ladder: &[f64],
    space: SpaceGrid,
    sign: SignConvention,
) -> Result<Vec<EstimatorResult>> {
    if eps_ladder.is_empty() {
        return Err(Error::invalid("eps ladder is empty"));
    }
    if eps_ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("eps ladder must be strictly decreasing"));
    }
    let delta = space.delta();
    if let Some(&bad) = eps_ladder.iter().find(|&&e| e < delta * (1.0 - 1e-12)) {
        return Err(Error::invalid(format!(
            "eps = {bad} is below the bin width {delta}; sub-bin shifts alias"
        )));
    }

    let t = path.grid().t_end();
    let rhs = match variant {
        Variant::Forward => {
            let field = occupation_local_time(path, space, t)?;
            let s = stieltjes_space_integral(f.as_space()?, &field)?;
            match sign {
                SignConvention::Resolved => s,
                SignConvention::Paper => -s,
            }
        }
        Variant::Backward => -two_param_integral_dense(f, path, space, t)?,
        Variant::Symmetric => two_param_integral_dense(f, path, space, t)?,
    };

    eps_ladder
        .iter()
        .map(|&eps| {
            let lhs = match variant {
                Variant::Forward => lhs_forward(f.as_space()?, path, eps, t)?,
                Variant::Backward => lhs_backward(f, path, eps, t)?,
                Variant::Symmetric => lhs_symmetric(f, path, eps, t)?,
            };
            Ok(EstimatorResult::new(eps, lhs, rhs, variant, sign))
        })
        .collect()
}
