//! Experiment configuration: a line-oriented `key = value` document with `#`
//! comments, strict key checking, and defaults for everything except what the
//! user overrides. `render` and `parse` round-trip exactly.

use std::fmt;

use crate::functions::TestFunction;
use crate::simulate::{DeterministicName, ProcessSpec, QvMode};

/// Which comparison the run performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// Per-path conservation check: field mass against qv_t.
    Conservation,
    /// Forward difference quotient vs the space Stieltjes integral.
    Theorem1,
    /// Backward and symmetric quotients vs the two-parameter integral.
    Theorem2,
    /// The exact discrete mollified identity at eps = m * delta.
    Identity27,
    /// Occupation-time formula, dense or coarse checkpoints.
    Occupation31,
    /// Local-time level statistics vs the gaussian reference mean.
    LocaltimeStats,
    /// p-variation contraction and mollifier sup-norm sweeps.
    PvariationAudit,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Conservation => "conservation",
            Experiment::Theorem1 => "theorem1",
            Experiment::Theorem2 => "theorem2",
            Experiment::Identity27 => "identity27",
            Experiment::Occupation31 => "occupation31",
            Experiment::LocaltimeStats => "localtime_stats",
            Experiment::PvariationAudit => "pvariation_audit",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "conservation" => Experiment::Conservation,
            "theorem1" => Experiment::Theorem1,
            "theorem2" => Experiment::Theorem2,
            "identity27" => Experiment::Identity27,
            "occupation31" => Experiment::Occupation31,
            "localtime_stats" => Experiment::LocaltimeStats,
            "pvariation_audit" => Experiment::PvariationAudit,
            _ => return None,
        })
    }
}

/// Space grid choice: explicit bounds or auto (path range + 10% margin,
/// snapped outward to multiples of the configured bin width).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpaceSpec {
    Auto,
    Explicit { x_min: f64, x_max: f64, n_bins: usize },
}

/// Sign-convention reporting mode for theorem runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignMode {
    Resolved,
    Paper,
    Both,
}

impl SignMode {
    fn name(&self) -> &'static str {
        match self {
            SignMode::Resolved => "resolved",
            SignMode::Paper => "paper",
            SignMode::Both => "both",
        }
    }
}

/// Checkpoint density for sheet-based experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckpointSpec {
    /// A checkpoint at every grid step.
    Dense,
    /// k evenly spaced checkpoint intervals (n_steps must be divisible by k).
    Count(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn name(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub process: ProcessSpec,
    pub t_end: f64,
    pub n_steps: usize,
    pub n_paths: u64,
    pub base_seed: u64,
    pub space: SpaceSpec,
    /// Bin width used by the auto space grid.
    pub delta: f64,
    pub eps_ladder: Vec<f64>,
    pub function: TestFunction,
    pub qv_mode: QvMode,
    pub sign_convention: SignMode,
    pub align_breakpoints: bool,
    pub checkpoints: CheckpointSpec,
    /// Output file; None writes rows to stdout.
    pub output: Option<String>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Conservation,
            process: ProcessSpec::Brownian,
            t_end: 1.0,
            n_steps: 4096,
            n_paths: 8,
            base_seed: 12345,
            space: SpaceSpec::Auto,
            delta: 0.015625,
            eps_ladder: vec![0.125, 0.0625, 0.03125],
            function: TestFunction::parse("indicator(0)").expect("default function"),
            qv_mode: QvMode::Realized,
            sign_convention: SignMode::Resolved,
            align_breakpoints: true,
            checkpoints: CheckpointSpec::Dense,
            output: None,
            format: OutputFormat::Csv,
        }
    }
}

/// Configuration diagnostic, pointing at the offending line when there is one.
#[derive(Debug, Clone)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self { line: Some(line), message: message.into() }
    }

    fn general(message: impl Into<String>) -> Self {
        Self { line: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "config line {n}: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Parse a config document; unknown keys, malformed values, duplicate keys
/// and invariant violations are all diagnosed with the offending line.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    let mut seen: Vec<String> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::at(lineno, format!("expected `key = value`, got '{line}'")))?;
        let key = key.trim();
        let value = value.trim();
        if seen.iter().any(|k| k == key) {
            return Err(ConfigError::at(lineno, format!("duplicate key '{key}'")));
        }
        seen.push(key.to_string());

        let bad = |what: &str| ConfigError::at(lineno, format!("{what} in '{key} = {value}'"));
        match key {
            "experiment" => {
                cfg.experiment = Experiment::parse(value)
                    .ok_or_else(|| ConfigError::at(lineno, format!("unknown experiment '{value}'")))?;
            }
            "process" => {
                cfg.process = parse_process(value).map_err(|e| ConfigError::at(lineno, e))?;
            }
            "t_end" => cfg.t_end = value.parse().map_err(|_| bad("bad real"))?,
            "n_steps" => cfg.n_steps = value.parse().map_err(|_| bad("bad count"))?,
            "n_paths" => cfg.n_paths = value.parse().map_err(|_| bad("bad count"))?,
            "base_seed" => cfg.base_seed = value.parse().map_err(|_| bad("bad seed"))?,
            "space" => {
                cfg.space = if value == "auto" {
                    SpaceSpec::Auto
                } else {
                    let parts: Vec<&str> = value.split(':').collect();
                    if parts.len() != 3 {
                        return Err(ConfigError::at(
                            lineno,
                            format!("space must be 'auto' or 'x_min:x_max:n_bins', got '{value}'"),
                        ));
                    }
                    SpaceSpec::Explicit {
                        x_min: parts[0].trim().parse().map_err(|_| bad("bad x_min"))?,
                        x_max: parts[1].trim().parse().map_err(|_| bad("bad x_max"))?,
                        n_bins: parts[2].trim().parse().map_err(|_| bad("bad n_bins"))?,
                    }
                };
            }
            "delta" => cfg.delta = value.parse().map_err(|_| bad("bad real"))?,
            "eps_ladder" => {
                cfg.eps_ladder = value
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad("bad real list"))?;
            }
            "function" => {
                cfg.function =
                    TestFunction::parse(value).map_err(|e| ConfigError::at(lineno, e.to_string()))?;
            }
            "qv_mode" => {
                cfg.qv_mode = match value {
                    "realized" => QvMode::Realized,
                    "analytic" => QvMode::Analytic,
                    _ => return Err(ConfigError::at(lineno, format!("unknown qv_mode '{value}'"))),
                };
            }
            "sign_convention" => {
                cfg.sign_convention = match value {
                    "resolved" => SignMode::Resolved,
                    "paper" => SignMode::Paper,
                    "both" => SignMode::Both,
                    _ => {
                        return Err(ConfigError::at(
                            lineno,
                            format!("sign_convention must be resolved|paper|both, got '{value}'"),
                        ))
                    }
                };
            }
            "align_breakpoints" => {
                cfg.align_breakpoints = match value {
                    "true" => true,
                    "false" => false,
                    _ => return Err(bad("bad bool")),
                };
            }
            "checkpoints" => {
                cfg.checkpoints = if value == "dense" {
                    CheckpointSpec::Dense
                } else {
                    CheckpointSpec::Count(value.parse().map_err(|_| bad("bad checkpoint count"))?)
                };
            }
            "output" => cfg.output = Some(value.to_string()),
            "format" => {
                cfg.format = match value {
                    "csv" => OutputFormat::Csv,
                    "json" => OutputFormat::Json,
                    _ => return Err(ConfigError::at(lineno, format!("unknown format '{value}'"))),
                };
            }
            _ => return Err(ConfigError::at(lineno, format!("unknown key '{key}'"))),
        }
    }

    validate(&cfg)?;
    Ok(cfg)
}

fn parse_process(text: &str) -> Result<ProcessSpec, String> {
    let (head, args) = match text.find('(') {
        None => (text, None),
        Some(i) => {
            if !text.ends_with(')') {
                return Err(format!("unbalanced parentheses in '{text}'"));
            }
            (&text[..i], Some(&text[i + 1..text.len() - 1]))
        }
    };
    let nums = |args: Option<&str>, n: usize| -> Result<Vec<f64>, String> {
        let raw = args.ok_or_else(|| format!("{head} needs {n} parameter(s)"))?;
        let vals: Vec<f64> = raw
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| format!("bad number '{}'", s.trim())))
            .collect::<Result<_, _>>()?;
        if vals.len() != n {
            return Err(format!("{head} needs {n} parameter(s), got {}", vals.len()));
        }
        Ok(vals)
    };
    let spec = match head {
        "brownian" => ProcessSpec::Brownian,
        "drifted_brownian" => {
            let v = nums(args, 2)?;
            ProcessSpec::DriftedBrownian { mu: v[0], sigma: v[1] }
        }
        "ornstein_uhlenbeck" => {
            let v = nums(args, 3)?;
            ProcessSpec::OrnsteinUhlenbeck { theta: v[0], sigma: v[1], x0: v[2] }
        }
        "geometric_brownian" => {
            let v = nums(args, 3)?;
            ProcessSpec::GeometricBrownian { mu: v[0], sigma: v[1], x0: v[2] }
        }
        "deterministic" => {
            let name = args.ok_or_else(|| "deterministic needs a path name".to_string())?;
            ProcessSpec::Deterministic(DeterministicName::parse(name.trim()).map_err(|e| e.to_string())?)
        }
        other => return Err(format!("unknown process '{other}'")),
    };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

pub fn render_process(p: &ProcessSpec) -> String {
    match p {
        ProcessSpec::Brownian => "brownian".to_string(),
        ProcessSpec::DriftedBrownian { mu, sigma } => format!("drifted_brownian({mu}, {sigma})"),
        ProcessSpec::OrnsteinUhlenbeck { theta, sigma, x0 } => {
            format!("ornstein_uhlenbeck({theta}, {sigma}, {x0})")
        }
        ProcessSpec::GeometricBrownian { mu, sigma, x0 } => {
            format!("geometric_brownian({mu}, {sigma}, {x0})")
        }
        ProcessSpec::Deterministic(name) => format!("deterministic({})", name.name()),
    }
}

fn validate(cfg: &ExperimentConfig) -> Result<(), ConfigError> {
    if !(cfg.t_end > 0.0) {
        return Err(ConfigError::general(format!("t_end must be positive, got {}", cfg.t_end)));
    }
    if cfg.n_steps == 0 {
        return Err(ConfigError::general("n_steps must be at least 1"));
    }
    if cfg.n_paths == 0 {
        return Err(ConfigError::general("n_paths must be at least 1"));
    }
    if cfg.eps_ladder.is_empty() {
        return Err(ConfigError::general("eps_ladder must not be empty"));
    }
    if cfg.eps_ladder.iter().any(|&e| !(e > 0.0)) {
        return Err(ConfigError::general("eps_ladder entries must be positive"));
    }
    if cfg.eps_ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ConfigError::general("eps_ladder must be strictly decreasing"));
    }
    let delta = match cfg.space {
        SpaceSpec::Auto => {
            if !(cfg.delta > 0.0) {
                return Err(ConfigError::general(format!(
                    "delta must be positive, got {}",
                    cfg.delta
                )));
            }
            cfg.delta
        }
        SpaceSpec::Explicit { x_min, x_max, n_bins } => {
            if x_min >= x_max || n_bins == 0 {
                return Err(ConfigError::general(format!(
                    "space must have x_min < x_max and n_bins >= 1, got {x_min}:{x_max}:{n_bins}"
                )));
            }
            (x_max - x_min) / n_bins as f64
        }
    };
    let min_eps = *cfg.eps_ladder.last().unwrap();
    if delta > min_eps * (1.0 + 1e-12) {
        return Err(ConfigError::general(format!(
            "bin width {delta} exceeds min(eps_ladder) = {min_eps}; eps_ladder shifts must stay at or above one bin"
        )));
    }
    if let CheckpointSpec::Count(k) = cfg.checkpoints {
        if k == 0 {
            return Err(ConfigError::general("checkpoints count must be at least 1"));
        }
        if !cfg.n_steps.is_multiple_of(k) {
            return Err(ConfigError::general(format!(
                "checkpoints = {k} must divide n_steps = {}",
                cfg.n_steps
            )));
        }
    }
    Ok(())
}

/// Render a config document that parses back to exactly this config.
pub fn render_config(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    let mut line = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    line("experiment", cfg.experiment.name().to_string());
    line("process", render_process(&cfg.process));
    line("t_end", format!("{}", cfg.t_end));
    line("n_steps", format!("{}", cfg.n_steps));
    line("n_paths", format!("{}", cfg.n_paths));
    line("base_seed", format!("{}", cfg.base_seed));
    match cfg.space {
        SpaceSpec::Auto => line("space", "auto".to_string()),
        SpaceSpec::Explicit { x_min, x_max, n_bins } => {
            line("space", format!("{x_min}:{x_max}:{n_bins}"))
        }
    }
    line("delta", format!("{}", cfg.delta));
    line(
        "eps_ladder",
        cfg.eps_ladder.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", "),
    );
    line("function", cfg.function.to_string());
    line(
        "qv_mode",
        match cfg.qv_mode {
            QvMode::Realized => "realized",
            QvMode::Analytic => "analytic",
        }
        .to_string(),
    );
    line("sign_convention", cfg.sign_convention.name().to_string());
    line("align_breakpoints", cfg.align_breakpoints.to_string());
    match cfg.checkpoints {
        CheckpointSpec::Dense => line("checkpoints", "dense".to_string()),
        CheckpointSpec::Count(k) => line("checkpoints", k.to_string()),
    }
    if let Some(path) = &cfg.output {
        line("output", path.clone());
    }
    line("format", cfg.format.name().to_string());
    out
}
