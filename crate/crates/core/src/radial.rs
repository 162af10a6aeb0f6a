//! Radial solutions of the p-Laplace form of the inequality
//!
//! ```text
//! r^(1-n) (r^(n-1) |u'|^(p-2) u')' + b(r) |u'|^(p-1) >= q(r) g(u)
//! ```
//!
//! Closed-form witnesses are checked pointwise. Shooting integrates the
//! equality in the flux `w = |u'|^(p-2) u'`, which stays regular at `u' = 0`
//! for every `p > 1`.
//!
//! Coefficients with sandwich constants enter at their least favourable
//! ends: `q` at the upper constant, `b` at the lower one.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::envelopes::{EnvelopeError, ProblemSpec};
use crate::par;
use crate::powerlog::{to_f64, Rational};

#[derive(Debug, Error)]
pub enum RadialError {
    #[error("derivative unavailable at r = {r}: stencil leaves the validity range")]
    DerivativeUnavailable { r: f64 },
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error("step size collapsed at r = {r} without blow-up")]
    StiffnessAbort { r: f64, partial: Box<RadialSolution> },
    #[error("u decreases at r = {r} by {drop:e}")]
    MonotonicityViolation { r: f64, drop: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family")]
pub enum WitnessFamily {
    /// `max{r, r0}^exponent`.
    PowerLaw { exponent: Rational },
    /// `(log max{r, r0})^exponent`.
    LogPower { exponent: Rational },
    /// `exp(max{r, r0}^gamma)`.
    ExpPower { gamma: Rational },
}

/// Closed-form radial function with exact derivatives beyond `r0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedFormSolution {
    pub family: WitnessFamily,
    pub r0: f64,
    /// Which example the family comes from.
    pub example: String,
}

impl ClosedFormSolution {
    pub fn new(family: WitnessFamily, r0: f64) -> Self {
        Self { family, r0, example: String::new() }
    }

    /// `ln u(r)`.
    pub fn ln_u(&self, r: f64) -> f64 {
        let r = r.max(self.r0);
        match self.family {
            WitnessFamily::PowerLaw { exponent } => to_f64(exponent) * r.ln(),
            WitnessFamily::LogPower { exponent } => to_f64(exponent) * r.ln().ln(),
            WitnessFamily::ExpPower { gamma } => r.powf(to_f64(gamma)),
        }
    }

    pub fn u(&self, r: f64) -> f64 {
        self.ln_u(r).exp()
    }

    /// `ln u'(r)` for `r > r0`.
    fn ln_du(&self, r: f64) -> f64 {
        match self.family {
            WitnessFamily::PowerLaw { exponent } => {
                let e = to_f64(exponent);
                e.ln() + (e - 1.0) * r.ln()
            }
            WitnessFamily::LogPower { exponent } => {
                let e = to_f64(exponent);
                e.ln() + (e - 1.0) * r.ln().ln() - r.ln()
            }
            WitnessFamily::ExpPower { gamma } => {
                let g = to_f64(gamma);
                g.ln() + (g - 1.0) * r.ln() + r.powf(g)
            }
        }
    }

    /// `u'(r)`; zero on the plateau `r <= r0`.
    pub fn du(&self, r: f64) -> f64 {
        if r <= self.r0 {
            0.0
        } else {
            self.ln_du(r).exp()
        }
    }

    /// `u''(r) / u'(r)` for `r > r0`.
    fn ddu_ratio(&self, r: f64) -> f64 {
        match self.family {
            WitnessFamily::PowerLaw { exponent } => (to_f64(exponent) - 1.0) / r,
            WitnessFamily::LogPower { exponent } => ((to_f64(exponent) - 1.0) / r.ln() - 1.0) / r,
            WitnessFamily::ExpPower { gamma } => {
                let g = to_f64(gamma);
                (g - 1.0) / r + g * r.powf(g - 1.0)
            }
        }
    }

    pub fn describe(&self) -> String {
        match self.family {
            WitnessFamily::PowerLaw { exponent } => format!("max(r, {})^({exponent})", self.r0),
            WitnessFamily::LogPower { exponent } => format!("log(max(r, {}))^({exponent})", self.r0),
            WitnessFamily::ExpPower { gamma } => format!("exp(max(r, {})^({gamma}))", self.r0),
        }
    }

    fn validate(&self) -> Result<(), RadialError> {
        let positive = match self.family {
            WitnessFamily::PowerLaw { exponent } | WitnessFamily::LogPower { exponent } => exponent > Rational::from_integer(0),
            WitnessFamily::ExpPower { gamma } => gamma > Rational::from_integer(0),
        };
        let r0_ok = match self.family {
            WitnessFamily::LogPower { .. } => self.r0 > 1.0,
            _ => self.r0 > 0.0,
        };
        if positive && r0_ok {
            Ok(())
        } else {
            Err(RadialError::InvalidInput(format!("{} is not an increasing positive witness", self.describe())))
        }
    }
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A radial function to test against the inequality.
#[derive(Clone)]
pub enum RadialCandidate {
    ClosedForm(ClosedFormSolution),
    Constant(f64),
    /// Evaluable `u` on `[r_start, oo)`; derivatives by central differences.
    Numeric { u: RealFn, r_start: f64 },
}

impl fmt::Debug for RadialCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ClosedForm(c) => write!(f, "ClosedForm({})", c.describe()),
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Numeric { r_start, .. } => write!(f, "Numeric(r >= {r_start})"),
        }
    }
}

impl RadialCandidate {
    pub fn numeric(r_start: f64, u: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Numeric { u: Arc::new(u), r_start }
    }

    pub fn u(&self, r: f64) -> f64 {
        match self {
            Self::ClosedForm(c) => c.u(r),
            Self::Constant(c) => *c,
            Self::Numeric { u, .. } => u(r),
        }
    }

    /// `u'(r)`.
    pub fn du(&self, r: f64) -> Result<f64, RadialError> {
        match self {
            Self::ClosedForm(c) => Ok(c.du(r)),
            Self::Constant(_) => Ok(0.0),
            Self::Numeric { u, r_start } => {
                let h = r * 1e-6;
                if r - h < *r_start {
                    return Err(RadialError::DerivativeUnavailable { r });
                }
                Ok((u(r + h) - u(r - h)) / (2.0 * h))
            }
        }
    }
}

/// `(|x|^(p-2) x)` written for any sign.
fn flux(du: f64, p: f64) -> f64 {
    du.signum() * du.abs().powf(p - 1.0)
}

/// The pieces of the residual at one radius.
struct Terms {
    /// `r^(1-n) (r^(n-1) w)' + b |u'|^(p-1)`, or its log form.
    lhs: Lhs,
    ln_source: f64,
}

enum Lhs {
    /// `exp(ln_scale) * bracket`.
    Log { ln_scale: f64, bracket: f64 },
    Plain(f64),
}

fn terms(candidate: &RadialCandidate, spec: &ProblemSpec, r: f64) -> Result<Terms, RadialError> {
    let p = spec.p_f64();
    let n = spec.n as f64;
    let q = spec.q.upper_at(r)?;
    let b = spec.b.lower_at(r)?;
    let source = |ln_u: f64| -> Result<f64, RadialError> {
        Ok(q.ln() + spec.g.ln_eval_from_ln(ln_u, spec.p)?)
    };
    match candidate {
        RadialCandidate::ClosedForm(c) if r > c.r0 => {
            let ln_du = c.ln_du(r);
            let bracket = (p - 1.0) * c.ddu_ratio(r) + (n - 1.0) / r + b;
            Ok(Terms { lhs: Lhs::Log { ln_scale: (p - 1.0) * ln_du, bracket }, ln_source: source(c.ln_u(r))? })
        }
        RadialCandidate::ClosedForm(c) => {
            Ok(Terms { lhs: Lhs::Plain(0.0), ln_source: source(c.ln_u(r))? })
        }
        RadialCandidate::Constant(v) => {
            let ln_source = if *v > 0.0 { source(v.ln())? } else { (q * spec.g.eval(v.max(0.0), spec.p)?).ln() };
            Ok(Terms { lhs: Lhs::Plain(0.0), ln_source })
        }
        RadialCandidate::Numeric { u, r_start } => {
            let h = r * 1e-4;
            if r - h - (r - h) * 1e-6 < *r_start {
                return Err(RadialError::DerivativeUnavailable { r });
            }
            let big_w = |x: f64| -> Result<f64, RadialError> { Ok(x.powf(n - 1.0) * flux(candidate.du(x)?, p)) };
            let dw = (big_w(r + h)? - big_w(r - h)?) / (2.0 * h);
            let du = candidate.du(r)?;
            let lhs = r.powf(1.0 - n) * dw + b * du.abs().powf(p - 1.0);
            let v = u(r);
            let ln_source = if v > 0.0 { source(v.ln())? } else { (q * spec.g.eval(v.max(0.0), spec.p)?).ln() };
            Ok(Terms { lhs: Lhs::Plain(lhs), ln_source })
        }
    }
}

/// `r^(1-n) (r^(n-1) |u'|^(p-2) u')' + b |u'|^(p-1) - q g(u)`; the
/// inequality holds at `r` iff this is `>= 0`.
pub fn residual(candidate: &RadialCandidate, spec: &ProblemSpec, r: f64) -> Result<f64, RadialError> {
    let t = terms(candidate, spec, r)?;
    let lhs = match t.lhs {
        Lhs::Log { ln_scale, bracket } => ln_scale.exp() * bracket,
        Lhs::Plain(v) => v,
    };
    Ok(lhs - t.ln_source.exp())
}

/// `residual / (q g(u))`, evaluated in log space so fast-growing witnesses
/// do not overflow. Infinite when `q g(u) = 0`, signed like the residual.
pub fn relative_residual(candidate: &RadialCandidate, spec: &ProblemSpec, r: f64) -> Result<f64, RadialError> {
    let t = terms(candidate, spec, r)?;
    if t.ln_source == f64::NEG_INFINITY {
        let lhs = match t.lhs {
            Lhs::Log { bracket, .. } => bracket,
            Lhs::Plain(v) => v,
        };
        return Ok(if lhs >= 0.0 { f64::INFINITY } else { f64::NEG_INFINITY });
    }
    Ok(match t.lhs {
        Lhs::Log { ln_scale, bracket } => (ln_scale - t.ln_source).exp() * bracket - 1.0,
        Lhs::Plain(v) => v / t.ln_source.exp() - 1.0,
    })
}

/// Geometric radii `r_lo = x_0 < ... < x_{n-1} = r_hi`.
pub fn geometric_radii(r_lo: f64, r_hi: f64, samples: usize) -> Vec<f64> {
    let n = samples.max(2);
    let (a, b) = (r_lo.ln(), r_hi.ln());
    (0..n)
        .map(|i| match i {
            0 => r_lo,
            i if i == n - 1 => r_hi,
            i => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    pub pass: bool,
    pub candidate: String,
    pub r_lo: f64,
    pub r_hi: f64,
    pub samples: usize,
    pub tol_rel: f64,
    pub min_relative_residual: f64,
    pub at_radius: f64,
    /// Absolute residual at the minimizing radius; may overflow for
    /// exponential witnesses.
    pub residual_at_min: f64,
}

/// Samples the residual at geometrically spaced radii. Radii within
/// `r0 (1 + 1e-6)` of a witness kink are skipped.
pub fn verify_witness(
    candidate: &RadialCandidate,
    spec: &ProblemSpec,
    r_lo: f64,
    r_hi: f64,
    samples: usize,
    tol_rel: f64,
) -> Result<WitnessReport, RadialError> {
    let r_lo = match candidate {
        RadialCandidate::ClosedForm(c) => {
            c.validate()?;
            r_lo.max(c.r0 * (1.0 + 1e-6))
        }
        _ => r_lo,
    };
    if !(r_hi > r_lo) {
        return Err(RadialError::InvalidInput(format!("empty radius range [{r_lo}, {r_hi}]")));
    }
    let radii = geometric_radii(r_lo, r_hi, samples);
    let values = par::map(&radii, |&r| relative_residual(candidate, spec, r));
    let mut worst = (f64::INFINITY, r_lo);
    for (v, &r) in values.into_iter().zip(&radii) {
        let v = v?;
        // NaN counts as a failure
        if !(v >= worst.0) {
            worst = (v, r);
        }
    }
    let pass = worst.0 >= -tol_rel;
    Ok(WitnessReport {
        pass,
        candidate: format!("{candidate:?}"),
        r_lo,
        r_hi,
        samples: radii.len(),
        tol_rel,
        min_relative_residual: worst.0,
        at_radius: worst.1,
        residual_at_min: residual(candidate, spec, worst.1)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub r: f64,
    pub u: f64,
    /// `|u'|^(p-2) u'`.
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status")]
pub enum Status {
    Global { r_max: f64 },
    BlowUp { radius: f64 },
    Extinct { radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialSolution {
    pub p: f64,
    pub u0: f64,
    pub r_start: f64,
    pub status: Status,
    pub grid: Vec<GridPoint>,
    pub blowup_threshold: f64,
    pub step_floor: f64,
    pub rejected_steps: usize,
}

impl RadialSolution {
    pub fn du(&self, pt: &GridPoint) -> f64 {
        pt.w.signum() * pt.w.abs().powf(1.0 / (self.p - 1.0))
    }

    /// Writes `r, u, u', residual`; the residual is recomputed from the grid
    /// by three-point differences of `r^(n-1) w`.
    pub fn write_csv(&self, spec: &ProblemSpec, path: &Path) -> Result<(), RadialError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["r", "u", "du", "residual"])?;
        let n = spec.n as f64;
        let g = &self.grid;
        for i in 0..g.len() {
            let res = if i > 0 && i + 1 < g.len() {
                let (a, b, c) = (g[i - 1], g[i], g[i + 1]);
                let f = |pt: GridPoint| pt.r.powf(n - 1.0) * pt.w;
                let (h1, h2) = (b.r - a.r, c.r - b.r);
                let d = (f(c) - f(b)) * h1 / (h2 * (h1 + h2)) + (f(b) - f(a)) * h2 / (h1 * (h1 + h2));
                let rhs = spec.q.upper_at(b.r)? * spec.g.eval(b.u.max(0.0), spec.p)?
                    - spec.b.lower_at(b.r)? * b.w.abs();
                format!("{:e}", b.r.powf(1.0 - n) * d - rhs)
            } else {
                String::new()
            };
            w.write_record([
                format!("{:e}", g[i].r),
                format!("{:e}", g[i].u),
                format!("{:e}", self.du(&g[i])),
                res,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ShootOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Blow-up once `u > blowup_factor * u0`.
    pub blowup_factor: f64,
    /// Steps below `step_floor * r` count as collapsed.
    pub step_floor: f64,
    pub max_steps: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-12, blowup_factor: 1e12, step_floor: 1e-12, max_steps: 20_000_000 }
    }
}

// Dormand-Prince 5(4)
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates the equality `(r^(n-1) w)' = r^(n-1) (q g(u) - b |w|)` from
/// `u(r_start) = u0`, `u'(r_start) = 0`.
pub fn shoot(spec: &ProblemSpec, u0: f64, r_start: f64, r_max: f64) -> Result<RadialSolution, RadialError> {
    shoot_with(spec, u0, r_start, r_max, &ShootOptions::default())
}

pub fn shoot_with(
    spec: &ProblemSpec,
    u0: f64,
    r_start: f64,
    r_max: f64,
    opts: &ShootOptions,
) -> Result<RadialSolution, RadialError> {
    if !(u0 > 0.0 && r_start > 0.0 && r_max > r_start) {
        return Err(RadialError::InvalidInput(format!(
            "need u0 > 0 and 0 < r_start < r_max, got u0 = {u0}, [{r_start}, {r_max}]"
        )));
    }
    let p = spec.p_f64();
    let nm1 = spec.n as f64 - 1.0;
    let inv = 1.0 / (p - 1.0);
    let rhs = |r: f64, y: [f64; 2]| -> Result<[f64; 2], RadialError> {
        let (u, w) = (y[0], y[1]);
        let du = w.signum() * w.abs().powf(inv);
        let src = spec.q.upper_at(r)? * spec.g.eval(u.max(0.0), spec.p)?;
        let dw = src - spec.b.lower_at(r)? * w.abs() - nm1 * w / r;
        Ok([du, dw])
    };
    let threshold = opts.blowup_factor * u0;
    let mut sol = RadialSolution {
        p,
        u0,
        r_start,
        status: Status::Global { r_max },
        grid: vec![GridPoint { r: r_start, u: u0, w: 0.0 }],
        blowup_threshold: threshold,
        step_floor: opts.step_floor,
        rejected_steps: 0,
    };
    let mut r = r_start;
    let mut y = [u0, 0.0];
    let mut k1 = rhs(r, y)?;
    let mut h = (r_start * 1e-3).min(r_max - r_start);
    for _ in 0..opts.max_steps {
        if r >= r_max {
            return Ok(sol);
        }
        // the damping -(b + (n-1)/r) w is stiff once w drops below atol and
        // the error test stops seeing it; keep h inside the real stability
        // interval of DP45 (about 3.3)
        let damping = spec.b.lower_at(r)? + nm1 / r;
        if damping > 0.0 {
            h = h.min(3.0 / damping);
        }
        h = h.min(r_max - r);
        let mut k = [[0.0; 2]; 7];
        k[0] = k1;
        let mut stage_ok = true;
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                ys[0] += h * A[s][j] * kj[0];
                ys[1] += h * A[s][j] * kj[1];
            }
            match rhs(r + C[s] * h, ys) {
                Ok(v) if v[0].is_finite() && v[1].is_finite() => k[s] = v,
                Ok(_) => {
                    stage_ok = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        let mut y5 = y;
        let mut err = 0.0f64;
        if stage_ok {
            for i in 0..2 {
                let mut d5 = 0.0;
                let mut d4 = 0.0;
                for s in 0..7 {
                    d5 += B5[s] * k[s][i];
                    d4 += B4[s] * k[s][i];
                }
                y5[i] = y[i] + h * d5;
                let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
                err = err.max((h * (d5 - d4) / sc).abs());
            }
        }
        if !stage_ok || !err.is_finite() || err > 1.0 {
            sol.rejected_steps += 1;
            let factor = if stage_ok && err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.5) } else { 0.1 };
            h *= factor;
            if h < opts.step_floor * r {
                if y[0] > u0 && y[1] > 0.0 {
                    sol.status = Status::BlowUp { radius: r };
                    return Ok(sol);
                }
                return Err(RadialError::StiffnessAbort { r, partial: Box::new(sol) });
            }
            continue;
        }
        r += h;
        y = y5;
        sol.grid.push(GridPoint { r, u: y[0], w: y[1] });
        if y[0] <= 0.0 {
            sol.status = Status::Extinct { radius: r };
            return Ok(sol);
        }
        if y[0] > threshold {
            sol.status = Status::BlowUp { radius: r };
            return Ok(sol);
        }
        k1 = k[6];
        let factor = if err > 0.0 { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) } else { 5.0 };
        h *= factor;
    }
    Err(RadialError::StiffnessAbort { r, partial: Box::new(sol) })
}

/// `M(r) = u(r)` of a monotone radial solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthCurve {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
}

impl GrowthCurve {
    /// Piecewise linear in `r`; constant beyond the ends.
    pub fn eval(&self, r: f64) -> f64 {
        let i = self.r.partition_point(|&x| x <= r);
        if i == 0 {
            return self.u[0];
        }
        if i == self.r.len() {
            return *self.u.last().expect("non-empty");
        }
        let (r0, r1) = (self.r[i - 1], self.r[i]);
        let t = (r - r0) / (r1 - r0);
        self.u[i - 1] + t * (self.u[i] - self.u[i - 1])
    }

    /// Least-squares slope of `ln u` against `ln r` on `[lo, hi]`.
    pub fn loglog_slope(&self, lo: f64, hi: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .r
            .iter()
            .zip(&self.u)
            .filter(|(r, u)| **r >= lo && **r <= hi && **u > 0.0)
            .map(|(r, u)| (r.ln(), u.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    }
}

/// `M(r; u)` for a global radial solution, after checking that `u` never
/// decreases by more than `1e-9` relative.
pub fn max_growth(sol: &RadialSolution) -> Result<GrowthCurve, RadialError> {
    if !matches!(sol.status, Status::Global { .. }) {
        return Err(RadialError::InvalidInput(format!("solution is not global: {:?}", sol.status)));
    }
    for pair in sol.grid.windows(2) {
        let drop = pair[0].u - pair[1].u;
        if drop > 1e-9 * pair[0].u.abs().max(f64::MIN_POSITIVE) {
            return Err(RadialError::MonotonicityViolation { r: pair[1].r, drop });
        }
    }
    Ok(GrowthCurve { r: sol.grid.iter().map(|p| p.r).collect(), u: sol.grid.iter().map(|p| p.u).collect() })
}

/// Same audit for a closed-form candidate sampled on `radii`.
pub fn candidate_growth(candidate: &RadialCandidate, radii: &[f64]) -> Result<GrowthCurve, RadialError> {
    let u: Vec<f64> = radii.iter().map(|&r| candidate.u(r)).collect();
    for (i, pair) in u.windows(2).enumerate() {
        let drop = pair[0] - pair[1];
        if drop > 1e-9 * pair[0].abs().max(f64::MIN_POSITIVE) {
            return Err(RadialError::MonotonicityViolation { r: radii[i + 1], drop });
        }
    }
    Ok(GrowthCurve { r: radii.to_vec(), u })
}

/// Writes the closed-form candidate as `r, u, u', residual` rows.
pub fn write_candidate_csv(
    candidate: &RadialCandidate,
    spec: &ProblemSpec,
    radii: &[f64],
    mut out: impl Write,
) -> Result<(), RadialError> {
    writeln!(out, "r,u,du,residual")?;
    for &r in radii {
        let res = residual(candidate, spec, r).map(|v| format!("{v:e}")).unwrap_or_default();
        writeln!(out, "{:e},{:e},{:e},{}", r, candidate.u(r), candidate.du(r)?, res)?;
    }
    Ok(())
}
