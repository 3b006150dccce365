//! The test-function catalog: left-continuous space functions with exact
//! pointwise evaluation and exact window integrals, plus time-space products.
//!
//! Every member carries its integral in closed form, so the sliding-window
//! average (the mollifier) is exact; a composite-midpoint fallback exists for
//! rules without one. Breakpoints (jumps, kinks, extrema) are exposed so
//! variation sweeps can place sample points on them.

use std::fmt;

use crate::error::{Error, Result};

/// Substep count for the midpoint-quadrature fallback. Midpoint error on a
/// C^2 piece is (x1-x0)^3 |f''| / (24 n^2).
pub const QUADRATURE_SUBSTEPS: usize = 64;

/// One step of a step combination: weight * 1_{x <= level}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub level: f64,
    pub weight: f64,
}

/// Space-only catalog members. All are left-continuous with finite
/// p-variation for some p < 2 on bounded grids (indicator/step: p = 1;
/// holder(alpha): p = 1/alpha).
#[derive(Debug, Clone, PartialEq)]
pub enum SpaceFn {
    /// F(x) = c
    Constant(f64),
    /// F(x) = x
    Linear,
    /// F(x) = 1_{x <= level}
    Indicator { level: f64 },
    /// F(x) = sum_i w_i 1_{x <= a_i}
    StepCombo { steps: Vec<Step> },
    /// F(x) = |x - center|^alpha, alpha in (1/2, 1]
    Holder { alpha: f64, center: f64 },
    /// F(x) = cos(x)
    Cos,
}

impl SpaceFn {
    pub fn validate(&self) -> Result<()> {
        match self {
            SpaceFn::Holder { alpha, .. } => {
                if !(*alpha > 0.5 && *alpha <= 1.0) {
                    return Err(Error::invalid(format!(
                        "holder exponent must satisfy 1/2 < alpha <= 1, got {alpha}"
                    )));
                }
                Ok(())
            }
            SpaceFn::StepCombo { steps } => {
                if steps.is_empty() {
                    return Err(Error::invalid("step_combo needs at least one step"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            SpaceFn::Constant(c) => *c,
            SpaceFn::Linear => x,
            SpaceFn::Indicator { level } => {
                if x <= *level {
                    1.0
                } else {
                    0.0
                }
            }
            SpaceFn::StepCombo { steps } => steps
                .iter()
                .map(|s| if x <= s.level { s.weight } else { 0.0 })
                .sum(),
            SpaceFn::Holder { alpha, center } => (x - center).abs().powf(*alpha),
            SpaceFn::Cos => x.cos(),
        }
    }

    /// Exact integral over [x0, x1], if the rule has a closed form.
    /// Reversed bounds negate, as usual.
    pub fn exact_integral(&self, x0: f64, x1: f64) -> Option<f64> {
        if x1 < x0 {
            return self.exact_integral(x1, x0).map(|v| -v);
        }
        let val = match self {
            SpaceFn::Constant(c) => c * (x1 - x0),
            SpaceFn::Linear => 0.5 * (x1 * x1 - x0 * x0),
            SpaceFn::Indicator { level } => (x1.min(*level) - x0).clamp(0.0, x1 - x0),
            SpaceFn::StepCombo { steps } => steps
                .iter()
                .map(|s| s.weight * (x1.min(s.level) - x0).clamp(0.0, x1 - x0))
                .sum(),
            SpaceFn::Holder { alpha, center } => {
                // antiderivative of |y - c|^a is sgn(y - c) |y - c|^{a+1} / (a+1)
                let prim = |y: f64| {
                    let d = y - center;
                    d.signum() * d.abs().powf(alpha + 1.0) / (alpha + 1.0)
                };
                prim(x1) - prim(x0)
            }
            SpaceFn::Cos => x1.sin() - x0.sin(),
        };
        Some(val)
    }

    /// Integral over [x0, x1]: exact when available, otherwise composite
    /// midpoint with [`QUADRATURE_SUBSTEPS`] substeps.
    pub fn integral(&self, x0: f64, x1: f64) -> f64 {
        match self.exact_integral(x0, x1) {
            Some(v) => v,
            None => midpoint_integral(|x| self.eval(x), x0, x1, QUADRATURE_SUBSTEPS),
        }
    }

    /// Jump/kink/extremum locations inside [lo, hi], in increasing order.
    pub fn breakpoints_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut pts: Vec<f64> = match self {
            SpaceFn::Constant(_) | SpaceFn::Linear => vec![],
            SpaceFn::Indicator { level } => vec![*level],
            SpaceFn::StepCombo { steps } => steps.iter().map(|s| s.level).collect(),
            SpaceFn::Holder { center, .. } => vec![*center],
            SpaceFn::Cos => {
                // extrema at integer multiples of pi
                let k0 = (lo / std::f64::consts::PI).ceil() as i64;
                let k1 = (hi / std::f64::consts::PI).floor() as i64;
                (k0..=k1).map(|k| k as f64 * std::f64::consts::PI).collect()
            }
        };
        pts.retain(|&p| p >= lo && p <= hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

/// Composite midpoint rule.
pub fn midpoint_integral(f: impl Fn(f64) -> f64, x0: f64, x1: f64, substeps: usize) -> f64 {
    let n = substeps.max(QUADRATURE_SUBSTEPS);
    let h = (x1 - x0) / n as f64;
    let mut sum = 0.0;
    for k in 0..n {
        sum += f(x0 + (k as f64 + 0.5) * h);
    }
    sum * h
}

/// Time factors for the time-space products.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeFn {
    /// g(s) = 1
    One,
    /// g(s) = s
    Ident,
    /// g(s) = e^{-s}
    ExpNeg,
}

impl TimeFn {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            TimeFn::One => 1.0,
            TimeFn::Ident => s,
            TimeFn::ExpNeg => (-s).exp(),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            TimeFn::One => "one",
            TimeFn::Ident => "s",
            TimeFn::ExpNeg => "exp_neg",
        }
    }
}

/// A catalog entry: either F(x) or the product F(s, x) = g(s) h(x).
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    Space(SpaceFn),
    TimeSpace { time: TimeFn, space: SpaceFn },
}

/// Arity of a test function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    SpaceOnly,
    TimeSpace,
}

impl TestFunction {
    pub fn arity(&self) -> Arity {
        match self {
            TestFunction::Space(_) => Arity::SpaceOnly,
            TestFunction::TimeSpace { .. } => Arity::TimeSpace,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.space_part().validate()
    }

    /// Evaluate at (s, x); space-only rules ignore s.
    pub fn eval(&self, s: f64, x: f64) -> f64 {
        match self {
            TestFunction::Space(f) => f.eval(x),
            TestFunction::TimeSpace { time, space } => time.eval(s) * space.eval(x),
        }
    }

    /// The space factor (the full rule for space-only entries).
    pub fn space_part(&self) -> &SpaceFn {
        match self {
            TestFunction::Space(f) => f,
            TestFunction::TimeSpace { space, .. } => space,
        }
    }

    /// The space-only rule, or an error for time-dependent entries.
    pub fn as_space(&self) -> Result<&SpaceFn> {
        match self {
            TestFunction::Space(f) => Ok(f),
            TestFunction::TimeSpace { .. } => {
                Err(Error::invalid("expected a space-only function, got a time-space one"))
            }
        }
    }

    /// Parse the config-surface syntax, e.g. `indicator(0)`, `linear`,
    /// `step_combo(-0.5:1, 0:2, 0.5:1)`, `holder(0.75, 0)`,
    /// `product(s, indicator(0))`, `product(exp_neg, cos)`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let (head, args) = split_call(text)?;
        let f = match head {
            "product" => {
                let args = args.ok_or_else(|| Error::invalid("product needs (time, space) arguments"))?;
                let (time_str, space_str) = split_top_level_pair(args)
                    .ok_or_else(|| Error::invalid(format!("product needs two arguments: '{text}'")))?;
                let time = match time_str.trim() {
                    "one" | "1" => TimeFn::One,
                    "s" => TimeFn::Ident,
                    "exp_neg" => TimeFn::ExpNeg,
                    other => return Err(Error::invalid(format!("unknown time factor '{other}'"))),
                };
                let space = match TestFunction::parse(space_str)? {
                    TestFunction::Space(f) => f,
                    TestFunction::TimeSpace { .. } => {
                        return Err(Error::invalid("product space factor must be space-only"))
                    }
                };
                TestFunction::TimeSpace { time, space }
            }
            _ => TestFunction::Space(parse_space(head, args)?),
        };
        f.validate()?;
        Ok(f)
    }
}

fn parse_space(head: &str, args: Option<&str>) -> Result<SpaceFn> {
    let need = |args: Option<&str>, what: &str| -> Result<Vec<f64>> {
        let raw = args.ok_or_else(|| Error::invalid(format!("{what} needs arguments")))?;
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::invalid(format!("bad number '{}' in {what}", s.trim())))
            })
            .collect()
    };
    match head {
        "linear" => Ok(SpaceFn::Linear),
        "cos" => Ok(SpaceFn::Cos),
        "constant" => {
            let v = need(args, "constant")?;
            if v.len() != 1 {
                return Err(Error::invalid("constant takes one argument"));
            }
            Ok(SpaceFn::Constant(v[0]))
        }
        "indicator" => {
            let v = need(args, "indicator")?;
            if v.len() != 1 {
                return Err(Error::invalid("indicator takes one argument"));
            }
            Ok(SpaceFn::Indicator { level: v[0] })
        }
        "holder" => {
            let v = need(args, "holder")?;
            if v.len() != 2 {
                return Err(Error::invalid("holder takes (alpha, center)"));
            }
            Ok(SpaceFn::Holder { alpha: v[0], center: v[1] })
        }
        "step_combo" => {
            let raw = args.ok_or_else(|| Error::invalid("step_combo needs level:weight pairs"))?;
            let mut steps = Vec::new();
            for part in raw.split(',') {
                let (a, w) = part
                    .split_once(':')
                    .ok_or_else(|| Error::invalid(format!("step_combo entry '{part}' is not level:weight")))?;
                let level = a.trim().parse::<f64>().map_err(|_| {
                    Error::invalid(format!("bad step level '{}'", a.trim()))
                })?;
                let weight = w.trim().parse::<f64>().map_err(|_| {
                    Error::invalid(format!("bad step weight '{}'", w.trim()))
                })?;
                steps.push(Step { level, weight });
            }
            Ok(SpaceFn::StepCombo { steps })
        }
        other => Err(Error::invalid(format!("unknown function '{other}'"))),
    }
}

/// Split `name(args)` into (name, Some(args)) or bare `name` into (name, None).
fn split_call(text: &str) -> Result<(&str, Option<&str>)> {
    match text.find('(') {
        None => Ok((text, None)),
        Some(i) => {
            if !text.ends_with(')') {
                return Err(Error::invalid(format!("unbalanced parentheses in '{text}'")));
            }
            Ok((&text[..i], Some(&text[i + 1..text.len() - 1])))
        }
    }
}

/// Split at the first comma not nested inside parentheses.
fn split_top_level_pair(text: &str) -> Option<(&str, &str)> {
    let mut depth = 0usize;
    for (i, ch) in text.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => return Some((&text[..i], &text[i + 1..])),
            _ => {}
        }
    }
    None
}

impl fmt::Display for SpaceFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceFn::Constant(c) => write!(f, "constant({c})"),
            SpaceFn::Linear => write!(f, "linear"),
            SpaceFn::Indicator { level } => write!(f, "indicator({level})"),
            SpaceFn::StepCombo { steps } => {
                write!(f, "step_combo(")?;
                for (i, s) in steps.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}:{}", s.level, s.weight)?;
                }
                write!(f, ")")
            }
            SpaceFn::Holder { alpha, center } => write!(f, "holder({alpha}, {center})"),
            SpaceFn::Cos => write!(f, "cos"),
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::Space(s) => write!(f, "{s}"),
            TestFunction::TimeSpace { time, space } => write!(f, "product({}, {space})", time.name()),
        }
    }
}
