//! Coefficient profiles, the nonlinearity, and the annulus envelopes
//!
//! ```text
//! q_sigma(r) = inf q over (r/sigma, sigma r)
//! f_sigma(r) = q_sigma(r) / (1 + r sup |b| over (r/sigma, sigma r))
//! g_theta(t) = inf g over (t/theta, theta t)
//! ```
//!
//! Symbolic profiles are evaluated exactly at the annulus extremes (end
//! points plus interior stationary points). Numeric profiles are sampled at
//! geometrically spaced points with a golden-section refinement around the
//! best sample, which approximates the essential extrema.

use std::cmp::Ordering;
use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering as AtomicOrdering};
use std::sync::Arc;

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::powerlog::{to_f64, PowerLogError, PowerLogTerm, Rational};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvelopeError {
    #[error("profile evaluated at r = {r} below its validity range (r_min = {r_min})")]
    ProfileDomain { r: f64, r_min: f64 },
    #[error("unsupported profile: {0}")]
    UnsupportedProfile(String),
    #[error("invalid problem: {0}")]
    InvalidSpec(String),
    #[error("numeric profile returned {value} at r = {r}")]
    BadValue { r: f64, value: f64 },
    #[error(transparent)]
    PowerLog(#[from] PowerLogError),
}

/// Tabulated `(r, value)` pairs, interpolated linearly in `ln r` (and in
/// `ln value` between positive neighbours).
#[derive(Debug, Clone)]
pub struct Table {
    points: Vec<(f64, f64)>,
    warned: Arc<AtomicBool>,
}

impl Table {
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self, EnvelopeError> {
        if points.len() < 2 {
            return Err(EnvelopeError::InvalidSpec("a table needs at least two rows".into()));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in points.windows(2) {
            if !(w[0].0 < w[1].0) {
                return Err(EnvelopeError::InvalidSpec(format!("duplicate radius {} in table", w[0].0)));
            }
        }
        if let Some(&(r, v)) = points.iter().find(|(r, v)| !(r.is_finite() && *r > 0.0 && v.is_finite())) {
            return Err(EnvelopeError::BadValue { r, value: v });
        }
        Ok(Self { points, warned: Arc::new(AtomicBool::new(false)) })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn r_min(&self) -> f64 {
        self.points[0].0
    }

    pub fn eval(&self, r: f64) -> Result<f64, EnvelopeError> {
        let first = self.points[0];
        let last = *self.points.last().expect("non-empty");
        if r < first.0 {
            return Err(EnvelopeError::ProfileDomain { r, r_min: first.0 });
        }
        if r >= last.0 {
            if r > last.0 && !self.warned.swap(true, AtomicOrdering::Relaxed) {
                log::warn!("table extrapolated as a constant beyond r = {}", last.0);
            }
            return Ok(last.1);
        }
        let i = self.points.partition_point(|&(x, _)| x <= r) - 1;
        let (r0, v0) = self.points[i];
        let (r1, v1) = self.points[i + 1];
        let t = (r.ln() - r0.ln()) / (r1.ln() - r0.ln());
        Ok(if v0 > 0.0 && v1 > 0.0 {
            (v0.ln() + t * (v1.ln() - v0.ln())).exp()
        } else {
            v0 + t * (v1 - v0)
        })
    }
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A coefficient known only through evaluations on `[r_min, oo)`.
#[derive(Clone)]
pub enum NumericProfile {
    Table(Table),
    Function { r_min: f64, f: RealFn },
}

impl NumericProfile {
    pub fn from_fn(r_min: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Function { r_min, f: Arc::new(f) }
    }

    pub fn r_min(&self) -> f64 {
        match self {
            Self::Table(t) => t.r_min(),
            Self::Function { r_min, .. } => *r_min,
        }
    }

    pub fn eval(&self, r: f64) -> Result<f64, EnvelopeError> {
        match self {
            Self::Table(t) => t.eval(r),
            Self::Function { r_min, f } => {
                if r < *r_min {
                    return Err(EnvelopeError::ProfileDomain { r, r_min: *r_min });
                }
                let v = f(r);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(EnvelopeError::BadValue { r, value: v })
                }
            }
        }
    }
}

impl fmt::Debug for NumericProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Table(t) => write!(f, "Table({} rows)", t.points.len()),
            Self::Function { r_min, .. } => write!(f, "Function(r >= {r_min})"),
        }
    }
}

/// Extremum of a numeric function over `[lo, hi]` by geometric sampling
/// plus golden-section refinement between the neighbours of the best sample.
fn sampled_extremum(
    f: &dyn Fn(f64) -> Result<f64, EnvelopeError>,
    lo: f64,
    hi: f64,
    samples: usize,
    want_min: bool,
) -> Result<f64, EnvelopeError> {
    let n = samples.max(2);
    let (l0, l1) = (lo.ln(), hi.ln());
    let xs: Vec<f64> = (0..n)
        .map(|i| if i + 1 == n { hi } else { (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp() })
        .collect();
    let better = |a: f64, b: f64| if want_min { a < b } else { a > b };
    let mut best_i = 0;
    let mut best = f(xs[0])?;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        let v = f(x)?;
        if better(v, best) {
            best = v;
            best_i = i;
        }
    }
    let (mut a, mut b) = (xs[best_i.saturating_sub(1)].ln(), xs[(best_i + 1).min(n - 1)].ln());
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c.exp())?, f(d.exp())?);
    for _ in 0..40 {
        if better(fc, fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c.exp())?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d.exp())?;
        }
    }
    for v in [fc, fd] {
        if better(v, best) {
            best = v;
        }
    }
    Ok(best)
}

/// A coefficient `b` or `q` as a function of the radius.
#[derive(Debug, Clone)]
pub enum Profile {
    /// Identically zero.
    Zero,
    /// `lower * term(r) <= |coefficient(r)| <= upper * term(r)`.
    Symbolic { term: PowerLogTerm, lower: f64, upper: f64 },
    Numeric(NumericProfile),
}

impl Profile {
    /// Exact symbolic profile (`lower = upper = 1`).
    pub fn term(term: PowerLogTerm) -> Self {
        Self::Symbolic { term, lower: 1.0, upper: 1.0 }
    }

    pub fn sandwich(term: PowerLogTerm, lower: f64, upper: f64) -> Result<Self, EnvelopeError> {
        if !(lower > 0.0 && upper >= lower && upper.is_finite()) {
            return Err(EnvelopeError::InvalidSpec(format!(
                "sandwich constants must satisfy 0 < lower <= upper, got ({lower}, {upper})"
            )));
        }
        Ok(Self::Symbolic { term, lower, upper })
    }

    pub fn symbolic_term(&self) -> Option<&PowerLogTerm> {
        match self {
            Self::Symbolic { term, .. } => Some(term),
            _ => None,
        }
    }

    /// Validity range start.
    pub fn r_min(&self) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Symbolic { term, .. } => term.domain_min(),
            Self::Numeric(n) => n.r_min(),
        }
    }

    fn check_domain(&self, r: f64) -> Result<(), EnvelopeError> {
        let r_min = self.r_min();
        let ok = match self {
            Self::Symbolic { .. } if r_min > 0.0 => r > r_min,
            _ => r >= r_min && r > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(EnvelopeError::ProfileDomain { r, r_min })
        }
    }

    /// Lower representative value (the smallest admissible magnitude).
    pub fn lower_at(&self, r: f64) -> Result<f64, EnvelopeError> {
        self.at(r, true)
    }

    /// Upper representative value (the largest admissible magnitude).
    pub fn upper_at(&self, r: f64) -> Result<f64, EnvelopeError> {
        self.at(r, false)
    }

    fn at(&self, r: f64, lower: bool) -> Result<f64, EnvelopeError> {
        self.check_domain(r)?;
        match self {
            Self::Zero => Ok(0.0),
            Self::Symbolic { term, lower: lo, upper: hi } => {
                let v = term.eval(r).ok_or(EnvelopeError::ProfileDomain { r, r_min: term.domain_min() })?;
                Ok(if lower { lo * v } else { hi * v })
            }
            Self::Numeric(n) => n.eval(r),
        }
    }

    /// Infimum over `[lo, hi]` using the lower representative.
    pub fn inf_on(&self, lo: f64, hi: f64, samples: usize) -> Result<f64, EnvelopeError> {
        self.check_domain(lo)?;
        match self {
            Self::Zero => Ok(0.0),
            Self::Symbolic { term, lower, .. } => {
                let (min, _) = term
                    .extrema_on(lo, hi)
                    .ok_or(EnvelopeError::ProfileDomain { r: lo, r_min: term.domain_min() })?;
                Ok(lower * min)
            }
            Self::Numeric(n) => sampled_extremum(&|r| n.eval(r), lo, hi, samples, true),
        }
    }

    /// Supremum of `|value|` over `[lo, hi]` using the upper representative.
    pub fn sup_abs_on(&self, lo: f64, hi: f64, samples: usize) -> Result<f64, EnvelopeError> {
        self.check_domain(lo)?;
        match self {
            Self::Zero => Ok(0.0),
            Self::Symbolic { term, upper, .. } => {
                let (_, max) = term
                    .extrema_on(lo, hi)
                    .ok_or(EnvelopeError::ProfileDomain { r: lo, r_min: term.domain_min() })?;
                Ok(upper * max)
            }
            Self::Numeric(n) => sampled_extremum(&|r| n.eval(r).map(f64::abs), lo, hi, samples, false),
        }
    }
}

/// The nonlinearity `g`.
#[derive(Debug, Clone)]
pub enum Nonlinearity {
    /// `t^lambda`.
    Power { lambda: Rational },
    /// `t^lambda log^s(1 + t)`.
    PowerLog { lambda: Rational, s: Rational },
    /// `t^(p-1) log^lambda(1 + t)`.
    CriticalLog { lambda: Rational },
    Numeric(NumericProfile),
}

/// Large-`t` shape of a built-in `g_theta`: `theta^(-lambda) t^lambda log^s t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GFamily {
    pub lambda: Rational,
    pub s: Rational,
    pub theta: f64,
}

impl GFamily {
    pub fn term(&self) -> PowerLogTerm {
        PowerLogTerm::power_log(self.theta.powf(-to_f64(self.lambda)), self.lambda, self.s)
            .expect("theta > 0 gives a positive coefficient")
    }
}

/// `ln(ln(1 + e^x))` without overflow.
fn ln_ln1p_exp(x: f64) -> f64 {
    let l = if x > 36.0 { x + (-x).exp() } else { x.exp().ln_1p() };
    l.ln()
}

impl Nonlinearity {
    /// `(lambda, s)` of the built-in families, as `t^lambda log^s(1+t)`.
    pub fn family(&self, p: Rational) -> Option<(Rational, Rational)> {
        match self {
            Self::Power { lambda } => Some((*lambda, Rational::zero())),
            Self::PowerLog { lambda, s } => Some((*lambda, *s)),
            Self::CriticalLog { lambda } => Some((p - Rational::from_integer(1), *lambda)),
            Self::Numeric(_) => None,
        }
    }

    fn validate(&self, p: Rational) -> Result<(), EnvelopeError> {
        if let Some((lambda, s)) = self.family(p) {
            if lambda < Rational::zero() || lambda + s < Rational::zero() {
                return Err(EnvelopeError::InvalidSpec(format!(
                    "g = t^{lambda} log^{s}(1+t) is not continuous on [0, oo)"
                )));
            }
        }
        Ok(())
    }

    /// `ln g(e^ln_t)`, stable for huge `t`.
    pub fn ln_eval_from_ln(&self, ln_t: f64, p: Rational) -> Result<f64, EnvelopeError> {
        match self.family(p) {
            Some((lambda, s)) => {
                let mut acc = to_f64(lambda) * ln_t;
                if !s.is_zero() {
                    acc += to_f64(s) * ln_ln1p_exp(ln_t);
                }
                Ok(acc)
            }
            None => {
                let t = ln_t.exp();
                let v = self.eval(t, p)?;
                Ok(v.ln())
            }
        }
    }

    pub fn eval(&self, t: f64, p: Rational) -> Result<f64, EnvelopeError> {
        if t < 0.0 {
            return Err(EnvelopeError::ProfileDomain { r: t, r_min: 0.0 });
        }
        match self {
            Self::Numeric(n) => n.eval(t),
            _ => {
                let (lambda, s) = self.family(p).expect("built-in family");
                let (lambda, s) = (to_f64(lambda), to_f64(s));
                if t == 0.0 {
                    // continuity at 0: t^(lambda+s) behaviour
                    return Ok(if lambda + s == 0.0 { 1.0 } else { 0.0 });
                }
                let mut v = t.powf(lambda);
                if s != 0.0 {
                    v *= t.ln_1p().powf(s);
                }
                Ok(v)
            }
        }
    }

    /// Whether `g` is non-decreasing, so that `g_theta(t) = g(t/theta)`.
    pub fn is_monotone(&self, p: Rational) -> bool {
        matches!(self.family(p), Some((l, s)) if l >= Rational::zero() && s >= Rational::zero())
    }
}

/// Everything the criteria need about one inequality.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub p: Rational,
    pub n: u32,
    pub r0: f64,
    pub sigma: f64,
    pub theta: f64,
    /// Ellipticity constants; they only enter the undetermined constant C.
    pub c1: f64,
    pub c2: f64,
    pub b: Profile,
    pub q: Profile,
    pub g: Nonlinearity,
    /// Sample count for numeric annulus extrema.
    pub samples: usize,
}

impl ProblemSpec {
    /// Spec with `n = 3`, `r0 = 1`, `sigma = theta = 2`, `C1 = C2 = 1`.
    pub fn new(p: Rational, b: Profile, q: Profile, g: Nonlinearity) -> Self {
        Self { p, n: 3, r0: 1.0, sigma: 2.0, theta: 2.0, c1: 1.0, c2: 1.0, b, q, g, samples: 256 }
    }

    pub fn with_n(mut self, n: u32) -> Self {
        self.n = n;
        self
    }

    pub fn with_r0(mut self, r0: f64) -> Self {
        self.r0 = r0;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn p_f64(&self) -> f64 {
        to_f64(self.p)
    }

    pub fn validate(&self) -> Result<(), EnvelopeError> {
        let bad = |m: String| Err(EnvelopeError::InvalidSpec(m));
        if self.p <= Rational::from_integer(1) {
            return bad(format!("p must exceed 1, got {}", self.p));
        }
        if self.n < 2 {
            return bad(format!("dimension n must be at least 2, got {}", self.n));
        }
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return bad(format!("r0 must be positive, got {}", self.r0));
        }
        if !(self.sigma > 1.0 && self.theta > 1.0) {
            return bad(format!("sigma and theta must exceed 1, got {} and {}", self.sigma, self.theta));
        }
        if !(self.c1 > 0.0 && self.c2 >= self.c1) {
            return bad(format!("ellipticity constants need 0 < C1 <= C2, got {} and {}", self.c1, self.c2));
        }
        if let Profile::Numeric(NumericProfile::Table(t)) = &self.q {
            if let Some(&(r, v)) = t.points().iter().find(|(_, v)| *v < 0.0) {
                return Err(EnvelopeError::BadValue { r, value: v });
            }
        }
        self.g.validate(self.p)
    }

    /// `inf q` over the annulus `(r/sigma, sigma r)`.
    pub fn q_sigma(&self, r: f64) -> Result<f64, EnvelopeError> {
        let v = self.q.inf_on(r / self.sigma, r * self.sigma, self.samples)?;
        if v < 0.0 {
            return Err(EnvelopeError::BadValue { r, value: v });
        }
        Ok(v)
    }

    /// `sup |b|` over the annulus `(r/sigma, sigma r)`.
    pub fn b_sup(&self, r: f64) -> Result<f64, EnvelopeError> {
        self.b.sup_abs_on(r / self.sigma, r * self.sigma, self.samples)
    }

    /// `q_sigma(r) / (1 + r sup |b|)`.
    pub fn f_sigma(&self, r: f64) -> Result<f64, EnvelopeError> {
        let qs = self.q_sigma(r)?;
        if qs == 0.0 {
            return Ok(0.0);
        }
        Ok(qs / (1.0 + r * self.b_sup(r)?))
    }

    /// `inf g` over `(t/theta, theta t)`.
    pub fn g_theta(&self, t: f64) -> Result<f64, EnvelopeError> {
        let (lo, hi) = (t / self.theta, t * self.theta);
        if self.g.is_monotone(self.p) {
            return self.g.eval(lo, self.p);
        }
        sampled_extremum(&|x| self.g.eval(x, self.p), lo, hi, self.samples, true)
    }

    /// `ln g_theta(t)`, stable for large `t` on the built-in families.
    pub fn ln_g_theta(&self, t: f64) -> Result<f64, EnvelopeError> {
        if self.g.is_monotone(self.p) {
            return self.g.ln_eval_from_ln(t.ln() - self.theta.ln(), self.p);
        }
        if self.g.family(self.p).is_some() {
            let (lo, hi) = (t / self.theta, t * self.theta);
            let ln_inf = sampled_extremum(
                &|x| self.g.ln_eval_from_ln(x.ln(), self.p),
                lo,
                hi,
                self.samples,
                true,
            )?;
            return Ok(ln_inf);
        }
        Ok(self.g_theta(t)?.ln())
    }

    /// `ln g_theta(e^ln_t)`; the built-in families never leave log space.
    pub fn ln_g_theta_from_ln(&self, ln_t: f64) -> Result<f64, EnvelopeError> {
        if self.g.is_monotone(self.p) {
            return self.g.ln_eval_from_ln(ln_t - self.theta.ln(), self.p);
        }
        let t = ln_t.exp();
        if (t * self.theta).is_finite() || self.g.family(self.p).is_none() {
            return self.ln_g_theta(t);
        }
        // beyond f64 range: sample the window (ln t - ln theta, ln t + ln theta)
        let lt = self.theta.ln();
        let n = self.samples.max(2);
        let mut best = f64::INFINITY;
        for i in 0..n {
            let x = ln_t - lt + 2.0 * lt * i as f64 / (n - 1) as f64;
            best = best.min(self.g.ln_eval_from_ln(x, self.p)?);
        }
        Ok(best)
    }

    /// Asymptotic shape of `g_theta` for built-in `g`.
    pub fn g_family(&self) -> Option<GFamily> {
        self.g.family(self.p).map(|(lambda, s)| GFamily { lambda, s, theta: self.theta })
    }

    /// Symbolic envelopes with sandwich factors valid for `r >= valid_from`.
    pub fn symbolic_envelopes(&self, valid_from: f64) -> Result<SymbolicEnvelopes, EnvelopeError> {
        symbolic_envelopes(self, valid_from)
    }
}

/// How `r sup |b|` behaves at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DriftClass {
    Zero,
    /// `r |b| -> 0`.
    Decaying,
    /// `r |b|` bounded above and below.
    Critical,
    /// `r |b| -> oo`.
    Growing,
}

/// Power-log forms of `f_sigma` and `q_sigma` with two-sided factors:
/// `f_bounds.0 * f_sigma_term(r) <= f_sigma(r) <= f_bounds.1 * f_sigma_term(r)`
/// for `r >= valid_from`, and likewise for `q_sigma`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymbolicEnvelopes {
    pub f_sigma: PowerLogTerm,
    pub f_bounds: (f64, f64),
    pub q_sigma: PowerLogTerm,
    pub q_bounds: (f64, f64),
    pub drift: DriftClass,
    pub g_family: Option<GFamily>,
    pub valid_from: f64,
}

/// Bounds on `term(sigma^e r) / term(r)` for `r >= big_r`.
#[derive(Debug, Clone, Copy)]
struct RatioBounds {
    annulus: (f64, f64),
    /// Upper bound on the ratio at each end point `e = -1, +1`.
    end_hi: [f64; 2],
    /// Lower bound on the ratio at each end point.
    end_lo: [f64; 2],
}

impl RatioBounds {
    fn new(term: &PowerLogTerm, sigma: f64, big_r: f64) -> Result<Self, EnvelopeError> {
        let ls = sigma.ln();
        let lr = big_r.ln();
        let a = to_f64(term.pow);
        let b = to_f64(term.logpow);
        let d = to_f64(term.loglogpow);
        let need_log = b != 0.0 || d != 0.0;
        if need_log && !(lr > ls) {
            return Err(EnvelopeError::ProfileDomain { r: big_r, r_min: sigma });
        }
        if d != 0.0 && !(lr - ls > 1.0) {
            return Err(EnvelopeError::ProfileDomain { r: big_r, r_min: sigma * std::f64::consts::E });
        }
        let x = if need_log { ls / lr } else { 0.0 };
        let log_f = |e: f64| if b == 0.0 { 1.0 } else { (1.0 + e * x).powf(b) };
        let ll_f = |e: f64| {
            if d == 0.0 {
                1.0
            } else {
                ((lr + e * ls).ln() / lr.ln()).powf(d)
            }
        };
        let mut end_lo = [0.0; 2];
        let mut end_hi = [0.0; 2];
        for (i, e) in [-1.0, 1.0].into_iter().enumerate() {
            let pw = sigma.powf(e * a);
            let (l, ll) = (log_f(e), ll_f(e));
            end_lo[i] = pw * l.min(1.0) * ll.min(1.0);
            end_hi[i] = pw * l.max(1.0) * ll.max(1.0);
        }
        let pw_lo = sigma.powf(-a.abs());
        let pw_hi = sigma.powf(a.abs());
        let l_lo = log_f(-1.0).min(log_f(1.0)).min(1.0);
        let l_hi = log_f(-1.0).max(log_f(1.0)).max(1.0);
        let ll_lo = ll_f(-1.0).min(ll_f(1.0)).min(1.0);
        let ll_hi = ll_f(-1.0).max(ll_f(1.0)).max(1.0);
        Ok(Self { annulus: (pw_lo * l_lo * ll_lo, pw_hi * l_hi * ll_hi), end_hi, end_lo })
    }

    /// Range of `inf over annulus / term(r)`.
    fn inf_range(&self) -> (f64, f64) {
        (self.annulus.0, self.end_hi[0].min(self.end_hi[1]))
    }

    /// Range of `sup over annulus / term(r)`.
    fn sup_range(&self) -> (f64, f64) {
        (self.end_lo[0].max(self.end_lo[1]), self.annulus.1)
    }
}

fn symbolic_envelopes(spec: &ProblemSpec, valid_from: f64) -> Result<SymbolicEnvelopes, EnvelopeError> {
    let (tq, q_lo_c) = match &spec.q {
        Profile::Symbolic { term, lower, .. } => (*term, *lower),
        Profile::Zero => return Err(EnvelopeError::UnsupportedProfile("q vanishes identically".into())),
        Profile::Numeric(_) => return Err(EnvelopeError::UnsupportedProfile("q is numeric".into())),
    };
    let q_sigma = tq.scale(q_lo_c)?;
    let qr = RatioBounds::new(&tq, spec.sigma, valid_from)?;
    let q_bounds = qr.inf_range();
    let (f_sigma, f_bounds, drift) = match &spec.b {
        Profile::Zero => (q_sigma, q_bounds, DriftClass::Zero),
        Profile::Numeric(_) => return Err(EnvelopeError::UnsupportedProfile("b is numeric".into())),
        Profile::Symbolic { term: tb, upper: b_hi_c, .. } => {
            let br = RatioBounds::new(tb, spec.sigma, valid_from)?;
            let (b_lo, b_hi) = br.sup_range();
            let r_tb = tb.mul(&PowerLogTerm::unit(Rational::from_integer(1), Rational::zero(), Rational::zero()));
            let (inf_rtb, sup_rtb) = r_tb
                .tail_extrema(valid_from)
                .ok_or(EnvelopeError::ProfileDomain { r: valid_from, r_min: tb.domain_min() })?;
            match r_tb.growth() {
                Ordering::Less => {
                    let lo = q_bounds.0 / (1.0 + b_hi_c * b_hi * sup_rtb);
                    (q_sigma, (lo, q_bounds.1), DriftClass::Decaying)
                }
                Ordering::Equal => {
                    let cb = b_hi_c * r_tb.coeff();
                    let f = q_sigma.scale(1.0 / (1.0 + cb))?;
                    let lo = q_bounds.0 * (1.0 + cb) / (1.0 + cb * b_hi);
                    let hi = q_bounds.1 * (1.0 + cb) / (1.0 + cb * b_lo);
                    (f, (lo, hi), DriftClass::Critical)
                }
                Ordering::Greater => {
                    let f = q_sigma.mul(&r_tb.scale(*b_hi_c)?.recip());
                    let lo = q_bounds.0 / (b_hi + 1.0 / (b_hi_c * inf_rtb));
                    let hi = q_bounds.1 / b_lo;
                    (f, (lo, hi), DriftClass::Growing)
                }
            }
        }
    };
    Ok(SymbolicEnvelopes {
        f_sigma,
        f_bounds,
        q_sigma,
        q_bounds,
        drift,
        g_family: spec.g_family(),
        valid_from,
    })
}
