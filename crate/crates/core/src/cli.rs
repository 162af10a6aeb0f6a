//! Scenario runner behind the `osserman-lab` binary.
//!
//! Each subcommand loads a scenario file, runs one task and writes its
//! artifacts under `--out`:
//!
//! | task     | artifacts                                   |
//! |----------|---------------------------------------------|
//! | classify | `report.json`                               |
//! | estimate | `report.json`, `bounds.csv`                 |
//! | verify   | `report.json`, `solutions/witness.csv`      |
//! | shoot    | `report.json`, `solutions/shoot_NN.csv`     |
//! | sweep    | `report.json`, `phase.csv`, `phase.gp`      |
//!
//! `run` executes the scenario's own `tasks` list in one report.
//!
//! Exit codes: 0 on success, 1 on errors, 2 when `--strict` is set and some
//! verdict is Inconclusive.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::{describe_cell, Param, Scenario, Task};
use crate::criteria::{self, EvaluateOptions, Outcome, Verdict};
use crate::envelopes::{Nonlinearity, Profile, ProblemSpec};
use crate::estimates::{BoundKind, BoundValue, EstimateOptions, GrowthBound, RateKind, SymbolicRate};
use crate::par;
use crate::powerlog::{fmt_rational, to_f64, Rational};
use crate::quadrature::TailOptions;
use crate::radial::{self, ClosedFormSolution, RadialCandidate, RadialError, ShootOptions, Status};

pub const THREADS_ENV: &str = "OSSERMAN_LAB_THREADS";

const CONSTANT_NOTE: &str = "C has no closed form; it is set to the value below (default 1), \
so only growth rates are meaningful, never constants";

#[derive(Debug, Parser)]
#[command(name = "osserman-lab", version, about = "Blow-up criteria and growth estimates for quasilinear elliptic inequalities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario file (TOML, or JSON).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Relative residual tolerance for `verify`.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// The undetermined constant C of the estimates.
    #[arg(long = "constant-C", global = true, value_name = "C")]
    pub constant_c: Option<f64>,
    /// Annulus ratio for q and b envelopes.
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// Annulus ratio for the g envelope.
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    /// Exit with code 2 when any verdict is Inconclusive.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Doubling windows used by the numeric tail classifier.
    #[arg(long, global = true, value_name = "N")]
    pub max_windows: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Decide which theorem applies.
    Classify,
    /// Compute growth bounds on M(r; u) and write bounds.csv.
    Estimate,
    /// Check the sharpness witness against the radial inequality.
    Verify,
    /// Integrate the radial equality from u(r_start) = u0.
    Shoot,
    /// Classify every cell of the parameter grid and write phase.csv.
    Sweep,
    /// Run the tasks listed in the scenario file.
    Run,
}

/// Settings shared by every task.
#[derive(Debug, Clone, Copy)]
#[derive(Default)]
pub struct RunOptions {
    pub tail: TailOptions,
    pub strict: bool,
}


#[derive(Debug, Clone, Serialize)]
struct ProblemSummary {
    p: String,
    n: u32,
    r0: f64,
    sigma: f64,
    theta: f64,
    #[serde(rename = "C1")]
    c1: f64,
    #[serde(rename = "C2")]
    c2: f64,
    b: String,
    q: String,
    g: String,
}

fn describe_profile(p: &Profile) -> String {
    match p {
        Profile::Zero => "0".into(),
        Profile::Symbolic { term, lower, upper } if lower == upper && *lower == 1.0 => term.to_string(),
        Profile::Symbolic { term, lower, upper } => format!("[{lower}, {upper}] * {term}"),
        Profile::Numeric(n) => format!("{n:?}"),
    }
}

fn describe_g(g: &Nonlinearity) -> String {
    match g {
        Nonlinearity::Power { lambda } => format!("t^{}", fmt_rational(*lambda)),
        Nonlinearity::PowerLog { lambda, s } => format!("t^{} * log(1 + t)^{}", fmt_rational(*lambda), fmt_rational(*s)),
        Nonlinearity::CriticalLog { lambda } => format!("t^(p-1) * log(1 + t)^{}", fmt_rational(*lambda)),
        Nonlinearity::Numeric(n) => format!("{n:?}"),
    }
}

fn summarize(spec: &ProblemSpec) -> ProblemSummary {
    ProblemSummary {
        p: fmt_rational(spec.p),
        n: spec.n,
        r0: spec.r0,
        sigma: spec.sigma,
        theta: spec.theta,
        c1: spec.c1,
        c2: spec.c2,
        b: describe_profile(&spec.b),
        q: describe_profile(&spec.q),
        g: describe_g(&spec.g),
    }
}

#[derive(Debug, Clone, Serialize)]
struct ClassifyReport {
    verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<ClosedFormSolution>,
}

#[derive(Debug, Clone, Serialize)]
struct RateReport {
    kind: RateKind,
    term: String,
    text: String,
}

impl From<&SymbolicRate> for RateReport {
    fn from(r: &SymbolicRate) -> Self {
        Self { kind: r.kind, term: r.term.to_string(), text: r.to_string() }
    }
}

#[derive(Debug, Clone, Serialize)]
struct BoundReport {
    kind: BoundKind,
    applied: String,
    r_star: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate: Option<RateReport>,
    /// Inverted bound at the first and last exported radius.
    first: (f64, BoundValue),
    last: (f64, BoundValue),
}

#[derive(Debug, Clone, Serialize)]
struct EstimateReport {
    outcome: Outcome,
    applied: String,
    #[serde(rename = "C")]
    c: f64,
    constant_note: &'static str,
    bounds: Vec<BoundReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    csv: String,
}

#[derive(Debug, Clone, Serialize)]
struct VerifyReport {
    example: String,
    witness: String,
    /// `PASS` or `FAIL`.
    result: &'static str,
    min_relative_residual: f64,
    at_radius: f64,
    residual_at_min: f64,
    r_lo: f64,
    r_hi: f64,
    samples: usize,
    tol: f64,
    monotone: bool,
    csv: String,
}

#[derive(Debug, Clone, Serialize)]
struct ShootReport {
    u0: f64,
    r_start: f64,
    #[serde(flatten)]
    status: ShootStatus,
    points: usize,
    rejected_steps: usize,
    blowup_threshold: f64,
    step_floor: f64,
    /// Whether `u` is non-decreasing along the computed grid.
    monotone: bool,
    csv: String,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status")]
enum ShootStatus {
    Global { r_max: f64 },
    BlowUp { radius: f64 },
    Extinct { radius: f64 },
    StiffnessAbort { radius: f64 },
}

#[derive(Debug, Clone, Serialize)]
struct SweepCell {
    index: usize,
    params: Vec<(Param, String)>,
    outcome: Outcome,
    code: u8,
    applied: String,
}

#[derive(Debug, Clone, Serialize)]
struct SweepReport {
    axes: Vec<(Param, Vec<String>)>,
    cells: Vec<SweepCell>,
    csv: String,
    script: String,
}

/// The full `report.json`. `generated_at_unix` is the only field that
/// changes between identical runs and sits on a line of its own.
#[derive(Debug, Clone, Serialize)]
struct Report {
    generated_at_unix: u64,
    tool: &'static str,
    version: &'static str,
    scenario: String,
    problem: ProblemSummary,
    tasks: Vec<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    classify: Option<ClassifyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    estimate: Option<EstimateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verify: Option<VerifyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shoot: Option<Vec<ShootReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<SweepReport>,
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub report: PathBuf,
    /// Inconclusive verdicts met on the way.
    pub inconclusive: usize,
    pub exit_code: i32,
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok());
    par::configure_threads(threads);
    match execute(&cli) {
        Ok(summary) => {
            eprintln!("wrote {}", summary.report.display());
            summary.exit_code
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

/// Loads the scenario, applies flag overrides and runs the subcommand.
pub fn execute(cli: &Cli) -> Result<RunSummary> {
    let path = cli.config.as_ref().context("--config PATH is required")?;
    let mut scenario = Scenario::load(path)?;
    if let Some(s) = cli.sigma {
        scenario.spec.sigma = s;
    }
    if let Some(t) = cli.theta {
        scenario.spec.theta = t;
    }
    if let Some(c) = cli.constant_c {
        scenario.estimate.c = c;
    }
    if let Some(t) = cli.tol {
        scenario.verify.tol = t;
    }
    scenario.spec.validate().context("invalid problem after flag overrides")?;
    if !(scenario.estimate.c.is_finite() && scenario.estimate.c > 0.0) {
        bail!("--constant-C must be finite and positive");
    }
    let mut opts = RunOptions { strict: cli.strict, ..RunOptions::default() };
    if let Some(w) = cli.max_windows {
        if w < opts.tail.fit_windows.min(4) {
            bail!("--max-windows must be at least 4");
        }
        opts.tail.max_windows = w;
        opts.tail.fit_windows = opts.tail.fit_windows.min(w);
    }
    let tasks = match cli.command {
        Command::Classify => vec![Task::Classify],
        Command::Estimate => vec![Task::Estimate],
        Command::Verify => vec![Task::Verify],
        Command::Shoot => vec![Task::Shoot],
        Command::Sweep => vec![Task::Sweep],
        Command::Run if scenario.tasks.is_empty() => bail!("{}: `tasks` is empty", scenario.source.display()),
        Command::Run => scenario.tasks.clone(),
    };
    run(&scenario, &tasks, &cli.out, &opts)
}

/// Runs `tasks` in order and writes every artifact under `out`.
pub fn run(scenario: &Scenario, tasks: &[Task], out: &Path, opts: &RunOptions) -> Result<RunSummary> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let spec = &scenario.spec;
    let eval_opts = EvaluateOptions { tail: opts.tail, ..EvaluateOptions::default() };
    let mut report = Report {
        generated_at_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        tool: "osserman-lab",
        version: env!("CARGO_PKG_VERSION"),
        scenario: scenario.name.clone(),
        problem: summarize(spec),
        tasks: Vec::new(),
        classify: None,
        estimate: None,
        verify: None,
        shoot: None,
        sweep: None,
    };
    let mut inconclusive = 0;
    let mut verdict: Option<Verdict> = None;
    let mut verdict_once = || -> Verdict { verdict.get_or_insert_with(|| criteria::evaluate_with(spec, &eval_opts)).clone() };
    for &task in tasks {
        if report.tasks.contains(&task.name()) {
            continue;
        }
        report.tasks.push(task.name());
        match task {
            Task::Classify => {
                let v = verdict_once();
                log::info!("{}: {} ({})", scenario.name, v.outcome, v.applied);
                report.classify = Some(ClassifyReport { witness: criteria::sharpness_witness(spec), verdict: v });
            }
            Task::Estimate => report.estimate = Some(estimate(scenario, &verdict_once(), opts, out)?),
            Task::Verify => report.verify = Some(verify(scenario, out)?),
            Task::Shoot => report.shoot = Some(shoot(scenario, out)?),
            Task::Sweep => {
                let (sweep, n) = sweep(scenario, &eval_opts, out)?;
                inconclusive += n;
                report.sweep = Some(sweep);
            }
        }
    }
    if let Some(v) = &verdict {
        if v.outcome == Outcome::Inconclusive {
            inconclusive += 1;
        }
    }
    let path = out.join("report.json");
    write_report(&report, &path)?;
    let exit_code = if opts.strict && inconclusive > 0 { 2 } else { 0 };
    Ok(RunSummary { report: path, inconclusive, exit_code })
}

fn write_report(report: &Report, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn fmt_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else if v.is_nan() {
        String::new()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// `(M, ln M)` cells of `bounds.csv`.
fn bound_cells(v: Option<&BoundValue>) -> (String, String) {
    match v {
        None => (String::new(), String::new()),
        Some(BoundValue::Finite { m, ln_m }) => (fmt_value(*m), fmt_value(*ln_m)),
        Some(BoundValue::Infinite) => ("inf".into(), "inf".into()),
        Some(BoundValue::BelowDomain) => ("<1".into(), "<0".into()),
    }
}

/// Radii `R* = r_0 < ... < r_max`, geometric.
fn bound_radii(r_star: f64, r_max: f64, points: usize) -> Vec<f64> {
    if r_max <= r_star {
        return vec![r_star];
    }
    radial::geometric_radii(r_star, r_max, points)
}

fn estimate(scenario: &Scenario, verdict: &Verdict, opts: &RunOptions, out: &Path) -> Result<EstimateReport> {
    let spec = &scenario.spec;
    let est = EstimateOptions { c: scenario.estimate.c, tail: opts.tail, ..EstimateOptions::default() };
    let lower_kind = match verdict.outcome {
        Outcome::LowerEstimate => Some(BoundKind::Lower),
        Outcome::MinEstimate => Some(BoundKind::Min),
        _ => None,
    };
    let upper_kind = (verdict.outcome == Outcome::UpperEstimate).then_some(BoundKind::Upper);
    let build = |kind: Option<BoundKind>| -> Result<Option<GrowthBound>> {
        kind.map(|k| {
            GrowthBound::from_spec(spec, k, &est, verdict.stabilized_at)
                .with_context(|| format!("cannot build the {k} bound"))
        })
        .transpose()
    };
    let lower = build(lower_kind)?;
    let upper = build(upper_kind)?;
    let r_star = lower.iter().chain(upper.iter()).map(|b| b.r_star).fold(10.0 * spec.r0, f64::max);
    let radii = bound_radii(r_star, scenario.estimate.r_max.max(r_star), scenario.estimate.points);
    let invert_all = |b: &Option<GrowthBound>| -> Result<Option<Vec<BoundValue>>> {
        let Some(b) = b else { return Ok(None) };
        let vals = par::map(&radii, |&r| b.invert(r));
        Ok(Some(vals.into_iter().collect::<Result<Vec<_>, _>>().with_context(|| format!("inverting the {} bound", b.kind))?))
    };
    let lo_vals = invert_all(&lower)?;
    let up_vals = invert_all(&upper)?;
    let rate = lower.as_ref().or(upper.as_ref()).and_then(|b| b.rate);

    let csv_path = out.join("bounds.csv");
    let mut w = csv::Writer::from_path(&csv_path).with_context(|| format!("cannot write {}", csv_path.display()))?;
    w.write_record([
        "r",
        "M_lower",
        "M_upper",
        "rate_prediction",
        "ln_M_lower",
        "ln_M_upper",
        "ln_rate_prediction",
        "rate_kind",
    ])?;
    for (i, &r) in radii.iter().enumerate() {
        let (ml, lml) = bound_cells(lo_vals.as_ref().map(|v| &v[i]));
        let (mu, lmu) = bound_cells(up_vals.as_ref().map(|v| &v[i]));
        let ln_pred = rate.and_then(|t| t.ln_m(r));
        w.write_record([
            fmt_value(r),
            ml,
            mu,
            ln_pred.map(|l| fmt_value(l.exp())).unwrap_or_default(),
            lml,
            lmu,
            ln_pred.map(fmt_value).unwrap_or_default(),
            rate.map(|t| format!("{:?}", t.kind)).unwrap_or_default(),
        ])?;
    }
    w.flush()?;

    let mut bounds = Vec::new();
    for (b, vals) in [(&lower, &lo_vals), (&upper, &up_vals)] {
        if let (Some(b), Some(vals)) = (b, vals) {
            let applied = verdict.estimate(b.kind).map(|e| e.applied.clone()).unwrap_or_else(|| verdict.applied.clone());
            bounds.push(BoundReport {
                kind: b.kind,
                applied,
                r_star: b.r_star,
                rate: b.rate.as_ref().map(RateReport::from),
                first: (radii[0], vals[0]),
                last: (*radii.last().expect("non-empty"), *vals.last().expect("non-empty")),
            });
        }
    }
    let note = match verdict.outcome {
        Outcome::Trivial => Some("every non-negative solution vanishes; no growth bound is needed".to_string()),
        Outcome::Inconclusive => Some(format!(
            "no estimate applies{}",
            verdict.note.as_ref().map(|n| format!(": {n}")).unwrap_or_default()
        )),
        _ => None,
    };
    Ok(EstimateReport {
        outcome: verdict.outcome,
        applied: verdict.applied.clone(),
        c: scenario.estimate.c,
        constant_note: CONSTANT_NOTE,
        bounds,
        note,
        csv: "bounds.csv".into(),
    })
}

fn verify(scenario: &Scenario, out: &Path) -> Result<VerifyReport> {
    let spec = &scenario.spec;
    let cfg = &scenario.verify;
    let witness = criteria::sharpness_witness(spec)
        .context("no sharpness witness is known for this problem (verify needs one of the four witness families)")?;
    let candidate = RadialCandidate::ClosedForm(witness.clone());
    let rep = radial::verify_witness(&candidate, spec, cfg.r_lo, cfg.r_hi, cfg.samples, cfg.tol)?;
    let radii = radial::geometric_radii(rep.r_lo, rep.r_hi, 400);
    let monotone = radial::candidate_growth(&candidate, &radii).is_ok();
    let dir = out.join("solutions");
    fs::create_dir_all(&dir)?;
    let file = fs::File::create(dir.join("witness.csv"))?;
    radial::write_candidate_csv(&candidate, spec, &radii, std::io::BufWriter::new(file))?;
    Ok(VerifyReport {
        example: witness.example.clone(),
        witness: witness.describe(),
        result: if rep.pass { "PASS" } else { "FAIL" },
        min_relative_residual: rep.min_relative_residual,
        at_radius: rep.at_radius,
        residual_at_min: rep.residual_at_min,
        r_lo: rep.r_lo,
        r_hi: rep.r_hi,
        samples: rep.samples,
        tol: rep.tol_rel,
        monotone,
        csv: "solutions/witness.csv".into(),
    })
}

fn shoot(scenario: &Scenario, out: &Path) -> Result<Vec<ShootReport>> {
    let spec = &scenario.spec;
    let cfg = &scenario.shoot;
    let opts = ShootOptions {
        rtol: cfg.rtol,
        atol: cfg.atol,
        blowup_factor: cfg.blowup_factor,
        step_floor: cfg.step_floor,
        ..ShootOptions::default()
    };
    let dir = out.join("solutions");
    fs::create_dir_all(&dir)?;
    let runs = par::map(&cfg.u0, |&u0| radial::shoot_with(spec, u0, cfg.r_start, cfg.r_max, &opts));
    let mut reports = Vec::new();
    for (i, (res, &u0)) in runs.into_iter().zip(&cfg.u0).enumerate() {
        let (sol, status) = match res {
            Ok(sol) => {
                let status = match sol.status {
                    Status::Global { r_max } => ShootStatus::Global { r_max },
                    Status::BlowUp { radius } => ShootStatus::BlowUp { radius },
                    Status::Extinct { radius } => ShootStatus::Extinct { radius },
                };
                (sol, status)
            }
            Err(RadialError::StiffnessAbort { r, partial }) => (*partial, ShootStatus::StiffnessAbort { radius: r }),
            Err(e) => return Err(e).with_context(|| format!("shooting from u0 = {u0}")),
        };
        let name = format!("shoot_{i:02}.csv");
        sol.write_csv(spec, &dir.join(&name))?;
        let monotone = sol.grid.windows(2).all(|w| w[1].u >= w[0].u - 1e-9 * w[0].u.abs());
        reports.push(ShootReport {
            u0,
            r_start: sol.r_start,
            status,
            points: sol.grid.len(),
            rejected_steps: sol.rejected_steps,
            blowup_threshold: sol.blowup_threshold,
            step_floor: sol.step_floor,
            monotone,
            csv: format!("solutions/{name}"),
        });
    }
    Ok(reports)
}

fn sweep(scenario: &Scenario, opts: &EvaluateOptions, out: &Path) -> Result<(SweepReport, usize)> {
    if scenario.sweep.is_empty() {
        bail!("{}: the scenario has no [[sweep.axis]] entries", scenario.source.display());
    }
    let cells = scenario.sweep_cells();
    let verdicts = par::map(&cells, |cell| {
        scenario.spec_at(cell).map(|spec| criteria::evaluate_with(&spec, opts))
    });
    let mut rows = Vec::with_capacity(cells.len());
    for (index, (cell, v)) in cells.iter().zip(verdicts).enumerate() {
        let v = v.map_err(|e| anyhow::anyhow!("sweep cell {}: {e}", describe_cell(cell)))?;
        rows.push(SweepCell {
            index,
            params: cell.iter().map(|&(p, x)| (p, fmt_rational(x))).collect(),
            outcome: v.outcome,
            code: v.outcome.code(),
            applied: v.applied,
        });
    }
    let inconclusive = rows.iter().filter(|c| c.outcome == Outcome::Inconclusive).count();
    emit_phase_map(&scenario.sweep.iter().map(|a| a.param).collect::<Vec<_>>(), &cells, &rows, out)?;
    let report = SweepReport {
        axes: scenario
            .sweep
            .iter()
            .map(|a| (a.param, a.values.iter().map(|&v| fmt_rational(v)).collect()))
            .collect(),
        cells: rows,
        csv: "phase.csv".into(),
        script: "phase.gp".into(),
    };
    Ok((report, inconclusive))
}

/// Writes `phase.csv` (one row per cell: decimal axis values, verdict code,
/// outcome, tag, exact axis values) and a gnuplot script for it.
fn emit_phase_map(params: &[Param], cells: &[Vec<(Param, Rational)>], rows: &[SweepCell], out: &Path) -> Result<()> {
    let path = out.join("phase.csv");
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("cannot write {}", path.display()))?;
    let mut header: Vec<String> = params.iter().map(|p| p.name().to_string()).collect();
    header.extend(["code", "outcome", "applied"].map(String::from));
    header.extend(params.iter().map(|p| format!("{p}_exact")));
    w.write_record(&header)?;
    for (cell, row) in cells.iter().zip(rows) {
        let mut rec: Vec<String> = cell.iter().map(|&(_, v)| format!("{}", to_f64(v))).collect();
        rec.push(row.code.to_string());
        rec.push(row.outcome.to_string());
        rec.push(row.applied.clone());
        rec.extend(cell.iter().map(|&(_, v)| fmt_rational(v)));
        w.write_record(&rec)?;
    }
    w.flush()?;

    let mut gp = fs::File::create(out.join("phase.gp"))?;
    writeln!(gp, "# gnuplot phase.gp")?;
    writeln!(gp, "# codes: 0 Trivial, 1 LowerEstimate, 2 MinEstimate, 3 UpperEstimate, 4 Inconclusive")?;
    writeln!(gp, "set datafile separator ','")?;
    writeln!(gp, "set key off")?;
    writeln!(gp, "set cbrange [0:4]")?;
    writeln!(gp, "set palette maxcolors 5")?;
    writeln!(gp, "set cbtics ('Trivial' 0, 'Lower' 1, 'Min' 2, 'Upper' 3, 'Inconclusive' 4)")?;
    match params {
        [x] => {
            writeln!(gp, "set xlabel '{x}'")?;
            writeln!(gp, "set ylabel 'verdict code'")?;
            writeln!(gp, "set yrange [-0.5:4.5]")?;
            writeln!(gp, "plot 'phase.csv' skip 1 using 1:2:2 with points pt 5 ps 2 palette")?;
        }
        [x, y, ..] => {
            writeln!(gp, "set xlabel '{x}'")?;
            writeln!(gp, "set ylabel '{y}'")?;
            let code_col = params.len() + 1;
            writeln!(gp, "plot 'phase.csv' skip 1 using 1:2:{code_col} with points pt 5 ps 2 palette")?;
        }
        [] => {}
    }
    writeln!(gp, "pause -1")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const E21_TRIVIAL: &str = r#"
name = "e2_1_trivial"
[problem]
p = 2
n = 3
[b]
term = "r^0"
[q]
term = "r^-1"
[g]
kind = "power"
lambda = 2
[[sweep.axis]]
param = "l"
values = [-3, -2, -1.5, -1, -0.5, 0, 1]
"#;

    fn scenario(text: &str) -> Scenario {
        Scenario::parse(text, Path::new("t.toml")).unwrap()
    }

    #[test]
    fn classify_writes_report() {
        let dir = tempfile::tempdir().unwrap();
        let s = scenario(E21_TRIVIAL);
        let sum = run(&s, &[Task::Classify], dir.path(), &RunOptions::default()).unwrap();
        assert_eq!(sum.exit_code, 0);
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(sum.report).unwrap()).unwrap();
        assert_eq!(v["classify"]["verdict"]["outcome"], "Trivial");
        assert_eq!(v["classify"]["verdict"]["applied"], "Corollary 2.5");
    }

    #[test]
    fn sweep_finds_the_boundary() {
        let dir = tempfile::tempdir().unwrap();
        let s = scenario(E21_TRIVIAL);
        run(&s, &[Task::Sweep], dir.path(), &RunOptions::default()).unwrap();
        let text = fs::read_to_string(dir.path().join("phase.csv")).unwrap();
        let outcomes: Vec<(String, String)> = text
            .lines()
            .skip(1)
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                (f[4].to_string(), f[2].to_string())
            })
            .collect();
        for (l, outcome) in outcomes {
            let l: Rational = crate::powerlog::parse_rational(&l).unwrap();
            let want = if l >= Rational::from_integer(-1) { "Trivial" } else { "UpperEstimate" };
            assert_eq!(outcome, want, "l = {l}");
        }
        assert!(dir.path().join("phase.gp").exists());
    }

    #[test]
    fn report_is_deterministic_apart_from_the_timestamp() {
        let s = scenario(E21_TRIVIAL);
        let read = |tasks: &[Task]| {
            let dir = tempfile::tempdir().unwrap();
            let sum = run(&s, tasks, dir.path(), &RunOptions::default()).unwrap();
            fs::read_to_string(sum.report)
                .unwrap()
                .lines()
                .filter(|l| !l.contains("generated_at_unix"))
                .collect::<Vec<_>>()
                .join("\n")
        };
        let tasks = [Task::Classify, Task::Sweep];
        assert_eq!(read(&tasks), read(&tasks));
    }

    #[test]
    fn strict_flags_inconclusive() {
        // sublinear g with a fast-decaying q: KO diverges, the potential
        // converges, and no theorem covers that corner
        let text = E21_TRIVIAL.replace("lambda = 2", "lambda = \"1/2\"").replace("r^-1", "r^-3");
        let s = scenario(&text);
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions { strict: true, ..RunOptions::default() };
        let sum = run(&s, &[Task::Classify], dir.path(), &opts).unwrap();
        assert_eq!(sum.inconclusive, 1);
        assert_eq!(sum.exit_code, 2);
    }

    #[test]
    fn missing_config_is_an_error() {
        assert_eq!(main_with_args(["osserman-lab", "classify"]), 1);
    }
}
