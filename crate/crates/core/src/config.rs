//! Scenario files.
//!
//! TOML by default, JSON when the file ends in `.json` or starts with `{`.
//!
//! ```toml
//! name = "e2_1"
//! tasks = ["classify", "verify"]
//!
//! [problem]
//! p = 2          # rational: 2, "3/2" or 1.5
//! n = 3
//! r0 = 1.0
//!
//! [b]
//! term = "1 * r^0"
//!
//! [q]
//! term = "0.4999 * r^-2"
//! lower = 1.0    # optional sandwich constants
//! upper = 1.0
//!
//! [g]
//! kind = "power" # power | powerlog | critical-log | table
//! lambda = 2
//!
//! [[sweep.axis]]
//! param = "l"
//! values = [-3, -2, -1.5, -1]
//! ```
//!
//! A profile may also be given as a bare string (`q = "r^-2"`, `b = "0"`)
//! or as a CSV table of `(r, value)` rows (`table = "q.csv"`, resolved
//! relative to the scenario file).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envelopes::{EnvelopeError, Nonlinearity, NumericProfile, Profile, ProblemSpec, Table};
use crate::powerlog::{fmt_rational, parse_rational, PowerLogTerm, Rational};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: field `{field}`: {message}")]
    Field { path: PathBuf, field: String, message: String },
}

/// Work a scenario can request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classify,
    Estimate,
    Verify,
    Shoot,
    Sweep,
}

impl Task {
    pub const ALL: [Task; 5] = [Task::Classify, Task::Estimate, Task::Verify, Task::Shoot, Task::Sweep];

    pub fn name(self) -> &'static str {
        match self {
            Self::Classify => "classify",
            Self::Estimate => "estimate",
            Self::Verify => "verify",
            Self::Shoot => "shoot",
            Self::Sweep => "sweep",
        }
    }
}

/// A spec exponent a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Param {
    /// Power of `g`.
    Lambda,
    /// Log power of `g` (power-log family).
    S,
    /// Power of `b`.
    K,
    /// Log power of `b`.
    M,
    /// Power of `q`.
    L,
    /// Log power of `q`.
    Mu,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Self::Lambda => "lambda",
            Self::S => "s",
            Self::K => "k",
            Self::M => "m",
            Self::L => "l",
            Self::Mu => "mu",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "lambda" | "λ" => Self::Lambda,
            "s" => Self::S,
            "k" => Self::K,
            "m" => Self::M,
            "l" => Self::L,
            "mu" | "μ" => Self::Mu,
            other => return Err(format!("unknown sweep parameter {other:?} (expected lambda, s, k, m, l or mu)")),
        })
    }
}

/// Sets one exponent of `spec`. A zero `b` becomes `r^k log^m r` with
/// coefficient 1 when `k` or `m` is swept.
pub fn apply_param(spec: &mut ProblemSpec, param: Param, v: Rational) -> Result<(), String> {
    let zero = Rational::zero();
    match param {
        Param::Lambda => match &mut spec.g {
            Nonlinearity::Power { lambda } | Nonlinearity::PowerLog { lambda, .. } | Nonlinearity::CriticalLog { lambda } => {
                *lambda = v
            }
            Nonlinearity::Numeric(_) => return Err("g is tabulated".into()),
        },
        Param::S => match spec.g {
            Nonlinearity::Power { lambda } | Nonlinearity::PowerLog { lambda, .. } => {
                spec.g = Nonlinearity::PowerLog { lambda, s: v }
            }
            _ => return Err("s applies to the power and powerlog families only".into()),
        },
        Param::K | Param::M => {
            if matches!(spec.b, Profile::Zero) {
                spec.b = Profile::term(PowerLogTerm::unit(zero, zero, zero));
            }
            let Profile::Symbolic { term, .. } = &mut spec.b else {
                return Err("b is tabulated".into());
            };
            if param == Param::K {
                term.pow = v
            } else {
                term.logpow = v
            }
        }
        Param::L | Param::Mu => {
            let Profile::Symbolic { term, .. } = &mut spec.q else {
                return Err("q is not a power-log term".into());
            };
            if param == Param::L {
                term.pow = v
            } else {
                term.logpow = v
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAxis {
    pub param: Param,
    pub values: Vec<Rational>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateSettings {
    /// The undetermined constant.
    pub c: f64,
    /// Last radius of `bounds.csv`; the first is `R*`.
    pub r_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifySettings {
    pub r_lo: f64,
    pub r_hi: f64,
    pub samples: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShootSettings {
    pub u0: Vec<f64>,
    pub r_start: f64,
    pub r_max: f64,
    pub blowup_factor: f64,
    pub step_floor: f64,
    pub rtol: f64,
    pub atol: f64,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub spec: ProblemSpec,
    pub tasks: Vec<Task>,
    pub sweep: Vec<SweepAxis>,
    pub estimate: EstimateSettings,
    pub verify: VerifySettings,
    pub shoot: ShootSettings,
    /// Where the scenario came from.
    pub source: PathBuf,
}

// ---------------------------------------------------------------- raw form

/// An exact number written as an integer, decimal or `"a/b"` string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Num {
    Int(i64),
    Float(f64),
    Str(String),
}

impl Num {
    fn rational(&self) -> Result<Rational, String> {
        match self {
            Self::Int(i) => Ok(Rational::from_integer(*i)),
            Self::Float(x) if x.is_finite() => parse_rational(&format!("{x}")).map_err(|e| e.to_string()),
            Self::Float(x) => Err(format!("{x} is not finite")),
            Self::Str(s) => parse_rational(s).map_err(|e| e.to_string()),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    #[serde(default)]
    tasks: Vec<Task>,
    problem: RawProblem,
    #[serde(default)]
    b: Option<RawProfile>,
    q: RawProfile,
    g: RawG,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    estimate: RawEstimate,
    #[serde(default)]
    verify: RawVerify,
    #[serde(default)]
    shoot: RawShoot,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    p: Num,
    n: Option<u32>,
    r0: Option<f64>,
    sigma: Option<f64>,
    theta: Option<f64>,
    #[serde(rename = "C1", alias = "c1")]
    c1: Option<f64>,
    #[serde(rename = "C2", alias = "c2")]
    c2: Option<f64>,
    samples: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawProfile {
    Term(String),
    Table(RawProfileTable),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfileTable {
    term: Option<String>,
    #[serde(default)]
    zero: bool,
    lower: Option<f64>,
    upper: Option<f64>,
    table: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawG {
    kind: String,
    lambda: Option<Num>,
    s: Option<Num>,
    table: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    #[serde(default)]
    axis: Vec<RawAxis>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAxis {
    param: String,
    values: Option<Vec<Num>>,
    from: Option<Num>,
    to: Option<Num>,
    steps: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEstimate {
    #[serde(rename = "C", alias = "c")]
    c: Option<f64>,
    r_max: Option<f64>,
    points: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerify {
    r_lo: Option<f64>,
    r_hi: Option<f64>,
    samples: Option<usize>,
    tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawShoot {
    u0: Option<Vec<f64>>,
    r_start: Option<f64>,
    r_max: Option<f64>,
    blowup_factor: Option<f64>,
    step_floor: Option<f64>,
    rtol: Option<f64>,
    atol: Option<f64>,
}

// ---------------------------------------------------------------- loading

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::parse(&text, path)
    }

    /// Parses `text`; `path` resolves table files and labels errors.
    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
        let raw: RawScenario = if json {
            serde_json::from_str(text).map_err(|e| ConfigError::Parse { path: path.into(), message: e.to_string() })?
        } else {
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: path.into(), message: e.to_string() })?
        };
        Builder { path }.build(raw)
    }

    /// The spec at one sweep cell.
    pub fn spec_at(&self, cell: &[(Param, Rational)]) -> Result<ProblemSpec, String> {
        let mut spec = self.spec.clone();
        for &(param, v) in cell {
            apply_param(&mut spec, param, v)?;
        }
        Ok(spec)
    }

    /// Sweep cells in row-major order (last axis fastest).
    pub fn sweep_cells(&self) -> Vec<Vec<(Param, Rational)>> {
        let mut cells = vec![Vec::new()];
        for axis in &self.sweep {
            cells = cells
                .into_iter()
                .flat_map(|prefix| {
                    axis.values.iter().map(move |&v| {
                        let mut c = prefix.clone();
                        c.push((axis.param, v));
                        c
                    })
                })
                .collect();
        }
        cells
    }
}

struct Builder<'a> {
    path: &'a Path,
}

impl Builder<'_> {
    fn err(&self, field: &str, message: impl fmt::Display) -> ConfigError {
        ConfigError::Field { path: self.path.into(), field: field.into(), message: message.to_string() }
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.path.parent().unwrap_or(Path::new(".")).join(p)
        }
    }

    fn positive(&self, field: &str, v: Option<f64>, default: f64) -> Result<f64, ConfigError> {
        let v = v.unwrap_or(default);
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(self.err(field, format!("must be finite and positive, got {v}")))
        }
    }

    fn table(&self, field: &str, file: &Path) -> Result<Table, ConfigError> {
        let full = self.resolve(file);
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(&full)
            .map_err(|e| self.err(field, format!("{}: {e}", full.display())))?;
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| self.err(field, format!("{}: {e}", full.display())))?;
            let cell = |j: usize| -> Result<f64, ConfigError> {
                rec.get(j).and_then(|s| s.parse().ok()).ok_or_else(|| {
                    self.err(field, format!("{} row {}: expected two numbers", full.display(), i + 2))
                })
            };
            rows.push((cell(0)?, cell(1)?));
        }
        Table::new(rows).map_err(|e| self.err(field, format!("{}: {e}", full.display())))
    }

    fn profile(&self, field: &str, raw: Option<RawProfile>) -> Result<Profile, ConfigError> {
        let raw = match raw {
            None => return Ok(Profile::Zero),
            Some(RawProfile::Term(s)) => RawProfileTable { term: Some(s), zero: false, lower: None, upper: None, table: None },
            Some(RawProfile::Table(t)) => t,
        };
        let sources = [raw.zero, raw.term.is_some(), raw.table.is_some()].iter().filter(|&&x| x).count();
        if sources != 1 {
            return Err(self.err(field, "give exactly one of `term`, `table` or `zero = true`"));
        }
        if let Some(file) = &raw.table {
            if raw.lower.is_some() || raw.upper.is_some() {
                return Err(self.err(field, "sandwich constants only apply to symbolic terms"));
            }
            return Ok(Profile::Numeric(NumericProfile::Table(self.table(&format!("{field}.table"), file)?)));
        }
        if raw.zero {
            return Ok(Profile::Zero);
        }
        let text = raw.term.expect("checked above");
        if text.trim() == "0" {
            return Ok(Profile::Zero);
        }
        let term: PowerLogTerm = text.parse().map_err(|e| self.err(&format!("{field}.term"), e))?;
        let lower = raw.lower.unwrap_or(1.0);
        let upper = raw.upper.unwrap_or(lower.max(1.0));
        Profile::sandwich(term, lower, upper).map_err(|e| self.err(field, e))
    }

    fn rational(&self, field: &str, v: &Num) -> Result<Rational, ConfigError> {
        v.rational().map_err(|e| self.err(field, e))
    }

    fn g(&self, raw: RawG) -> Result<Nonlinearity, ConfigError> {
        let lambda = |this: &Self| -> Result<Rational, ConfigError> {
            let v = raw.lambda.as_ref().ok_or_else(|| this.err("g.lambda", "missing"))?;
            this.rational("g.lambda", v)
        };
        let s = match &raw.s {
            Some(v) => Some(self.rational("g.s", v)?),
            None => None,
        };
        let g = match raw.kind.as_str() {
            "power" => match s {
                Some(s) if !s.is_zero() => Nonlinearity::PowerLog { lambda: lambda(self)?, s },
                _ => Nonlinearity::Power { lambda: lambda(self)? },
            },
            "powerlog" => Nonlinearity::PowerLog { lambda: lambda(self)?, s: s.unwrap_or_else(Rational::zero) },
            "critical-log" => Nonlinearity::CriticalLog { lambda: lambda(self)? },
            "table" => {
                let file = raw.table.as_ref().ok_or_else(|| self.err("g.table", "missing"))?;
                Nonlinearity::Numeric(NumericProfile::Table(self.table("g.table", file)?))
            }
            other => {
                return Err(self.err(
                    "g.kind",
                    format!("unknown kind {other:?} (expected power, powerlog, critical-log or table)"),
                ))
            }
        };
        if raw.table.is_some() && raw.kind != "table" {
            return Err(self.err("g.table", "only used with kind = \"table\""));
        }
        Ok(g)
    }

    fn axis(&self, i: usize, raw: RawAxis) -> Result<SweepAxis, ConfigError> {
        let field = format!("sweep.axis[{i}]");
        let param: Param = raw.param.parse().map_err(|e| self.err(&format!("{field}.param"), e))?;
        let values = match (raw.values, raw.from, raw.to, raw.steps) {
            (Some(vs), None, None, None) => vs
                .iter()
                .enumerate()
                .map(|(j, v)| self.rational(&format!("{field}.values[{j}]"), v))
                .collect::<Result<Vec<_>, _>>()?,
            (None, Some(from), Some(to), steps) => {
                let a = self.rational(&format!("{field}.from"), &from)?;
                let b = self.rational(&format!("{field}.to"), &to)?;
                let steps = steps.unwrap_or(2);
                if steps == 0 {
                    return Err(self.err(&format!("{field}.steps"), "must be at least 1"));
                }
                if steps == 1 {
                    vec![a]
                } else {
                    let h = (b - a) / Rational::from_integer(steps as i64 - 1);
                    (0..steps).map(|j| a + h * Rational::from_integer(j as i64)).collect()
                }
            }
            _ => return Err(self.err(&field, "give either `values` or `from`, `to` and `steps`")),
        };
        if values.is_empty() {
            return Err(self.err(&format!("{field}.values"), "empty"));
        }
        Ok(SweepAxis { param, values })
    }

    fn build(&self, raw: RawScenario) -> Result<Scenario, ConfigError> {
        let pr = &raw.problem;
        let p = self.rational("problem.p", &pr.p)?;
        let r0 = self.positive("problem.r0", pr.r0, 1.0)?;
        let b = self.profile("b", raw.b)?;
        let q = self.profile("q", Some(raw.q))?;
        let g = self.g(raw.g)?;
        let mut spec = ProblemSpec::new(p, b, q, g)
            .with_n(pr.n.unwrap_or(3))
            .with_r0(r0)
            .with_sigma(self.positive("problem.sigma", pr.sigma, 2.0)?)
            .with_theta(self.positive("problem.theta", pr.theta, 2.0)?);
        spec.c1 = self.positive("problem.C1", pr.c1, 1.0)?;
        spec.c2 = self.positive("problem.C2", pr.c2, 1.0)?;
        if spec.c2 < spec.c1 {
            return Err(self.err("problem.C2", "must be at least C1"));
        }
        if let Some(s) = pr.samples {
            spec.samples = s.max(2);
        }
        spec.validate().map_err(|e| match e {
            EnvelopeError::InvalidSpec(m) => self.err("problem", m),
            other => self.err("problem", other),
        })?;
        let sweep = raw
            .sweep
            .axis
            .into_iter()
            .enumerate()
            .map(|(i, a)| self.axis(i, a))
            .collect::<Result<Vec<_>, _>>()?;
        for (i, axis) in sweep.iter().enumerate() {
            let mut probe = spec.clone();
            apply_param(&mut probe, axis.param, axis.values[0])
                .map_err(|e| self.err(&format!("sweep.axis[{i}].param"), format!("{}: {e}", axis.param)))?;
        }
        let est = raw.estimate;
        let estimate = EstimateSettings {
            c: self.positive("estimate.C", est.c, 1.0)?,
            r_max: self.positive("estimate.r_max", est.r_max, 1e6 * r0)?,
            points: est.points.unwrap_or(61).max(2),
        };
        let v = raw.verify;
        let verify = VerifySettings {
            r_lo: self.positive("verify.r_lo", v.r_lo, r0)?,
            r_hi: self.positive("verify.r_hi", v.r_hi, 1e6 * r0)?,
            samples: v.samples.unwrap_or(10_000).max(2),
            tol: v.tol.unwrap_or(1e-9),
        };
        if !(verify.r_hi > verify.r_lo) {
            return Err(self.err("verify.r_hi", "must exceed verify.r_lo"));
        }
        if !(verify.tol >= 0.0) {
            return Err(self.err("verify.tol", "must be non-negative"));
        }
        let sh = raw.shoot;
        let u0 = sh.u0.unwrap_or_else(|| vec![1.0]);
        if let Some(j) = u0.iter().position(|&u| !(u.is_finite() && u > 0.0)) {
            return Err(self.err(&format!("shoot.u0[{j}]"), "must be finite and positive"));
        }
        let r_start = self.positive("shoot.r_start", sh.r_start, r0)?;
        let shoot = ShootSettings {
            u0,
            r_start,
            r_max: self.positive("shoot.r_max", sh.r_max, 1e6 * r0)?,
            blowup_factor: self.positive("shoot.blowup_factor", sh.blowup_factor, 1e12)?,
            step_floor: self.positive("shoot.step_floor", sh.step_floor, 1e-12)?,
            rtol: self.positive("shoot.rtol", sh.rtol, 1e-9)?,
            atol: self.positive("shoot.atol", sh.atol, 1e-12)?,
        };
        if !(shoot.r_max > shoot.r_start) {
            return Err(self.err("shoot.r_max", "must exceed shoot.r_start"));
        }
        let name = raw.name.unwrap_or_else(|| {
            self.path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scenario".into())
        });
        Ok(Scenario {
            name,
            spec,
            tasks: raw.tasks,
            sweep,
            estimate,
            verify,
            shoot,
            source: self.path.to_path_buf(),
        })
    }
}

/// Renders a sweep cell as `l=-3/2, lambda=2`.
pub fn describe_cell(cell: &[(Param, Rational)]) -> String {
    cell.iter().map(|(p, v)| format!("{p}={}", fmt_rational(*v))).collect::<Vec<_>>().join(", ")
}
