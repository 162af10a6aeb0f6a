//! Growth bounds on `M(r; u)`.
//!
//! Every estimate has the shape `LHS(M) >= C Phi(r)`:
//!
//! ```text
//! Lower:  int_1^M (g_theta t)^(-1/p) dt             >= C (int_r0^r (xi f_sigma)^(1/(p-1)))^((p-1)/p)
//! Min:    int_1^M [(g_theta t)^(-1/p) + g_theta^(-1/(p-1))] dt
//!                                                    >= C  int_r0^r min{(xi f_sigma)^(1/(p-1)), q_sigma^(1/p)}
//! Upper:  int_M^oo (g_theta t)^(-1/p) dt             >= C (int_r^oo (xi f_sigma)^(1/(p-1)))^((p-1)/p)
//! ```
//!
//! The left side is tabulated once in `s = ln t` and inverted by bisection.
//! The constant `C` has no formula; it defaults to 1, so only rates (never
//! constants) are meaningful.

use std::fmt;
use std::sync::{Arc, Mutex};

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::criteria::{self, CriteriaError, SymbolicPieces};
use crate::envelopes::{EnvelopeError, ProblemSpec};
use crate::par;
use crate::powerlog::{to_f64, PowerLogError, PowerLogTerm, Rational};
use crate::quadrature::{self, QuadOptions, QuadratureError, TailOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("estimate not applicable: {0}")]
    NotApplicable(String),
    #[error("rate leaves the power-log class: {0}")]
    Unrepresentable(String),
    #[error("bracketing failed: {0}")]
    BracketFailure(String),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error(transparent)]
    PowerLog(#[from] PowerLogError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Criteria(#[from] CriteriaError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BoundKind {
    Lower,
    Min,
    Upper,
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Which iterate of `M` the rate term describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum RateKind {
    /// `M(r) ~ term`.
    Power,
    /// `log M(r) ~ term`.
    Exponential,
    /// `log log M(r) ~ term`.
    DoubleExponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymbolicRate {
    pub kind: RateKind,
    pub term: PowerLogTerm,
}

impl SymbolicRate {
    /// Faster growth: a higher iterate first, then the exponents.
    pub fn is_stronger_than(&self, other: &Self) -> bool {
        self.kind.cmp(&other.kind).then_with(|| self.term.cmp_rate(&other.term)).is_gt()
    }

    /// Predicted `ln M(r)`.
    pub fn ln_m(&self, r: f64) -> Option<f64> {
        match self.kind {
            RateKind::Power => self.term.ln_eval(r),
            RateKind::Exponential => self.term.eval(r),
            RateKind::DoubleExponential => self.term.eval(r).map(f64::exp),
        }
    }

    /// Exponent of `r` in the term.
    pub fn exponent(&self) -> Rational {
        self.term.pow
    }
}

impl fmt::Display for SymbolicRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            RateKind::Power => write!(f, "M(r) ~ {}", self.term),
            RateKind::Exponential => write!(f, "log M(r) ~ {}", self.term),
            RateKind::DoubleExponential => write!(f, "log log M(r) ~ {}", self.term),
        }
    }
}

/// Leading-order solution `M(r)` of `lhs(M) = rhs(r)` with both sides
/// power-log terms and `M -> oo`.
pub fn invert_asym(lhs: &PowerLogTerm, rhs: &PowerLogTerm) -> Result<SymbolicRate, EstimateError> {
    let zero = Rational::zero();
    let (a, b, d) = lhs.exponents();
    // lhs = c X^e0 (ln X)^e1 (ln ln X)^e2 with X = M, ln M or ln ln M
    let (kind, e0, e1, e2) = if !a.is_zero() {
        (RateKind::Power, a, b, d)
    } else if !b.is_zero() {
        (RateKind::Exponential, b, d, zero)
    } else if !d.is_zero() {
        (RateKind::DoubleExponential, d, zero, zero)
    } else {
        return Err(EstimateError::Unrepresentable(format!("left side {lhs} is bounded")));
    };
    let unrep = |why: &str| EstimateError::Unrepresentable(format!("{lhs} = {rhs}: {why}"));
    let inv = Rational::one() / e0;
    let base = rhs.scale(1.0 / lhs.coeff())?.pow(inv);
    let (ra, rb, rd) = rhs.exponents();
    let unit = |x, y, z| PowerLogTerm::unit(x, y, z);
    // leading behaviour of ln X: lam * (log r | loglog r | logloglog r)
    let correction = if !ra.is_zero() {
        let lam = ra * inv;
        if lam <= zero {
            return Err(unrep("the solution does not grow"));
        }
        let l = unit(zero, Rational::one(), zero).scale(to_f64(lam))?.pow(-e1 * inv);
        l.mul(&unit(zero, zero, Rational::one()).pow(-e2 * inv))
    } else if !rb.is_zero() {
        let lam = rb * inv;
        if lam <= zero {
            return Err(unrep("the solution does not grow"));
        }
        if !e2.is_zero() {
            return Err(unrep("needs a triple logarithm"));
        }
        unit(zero, zero, Rational::one()).scale(to_f64(lam))?.pow(-e1 * inv)
    } else if !rd.is_zero() {
        if rd * inv <= zero {
            return Err(unrep("the solution does not grow"));
        }
        if !(e1.is_zero() && e2.is_zero()) {
            return Err(unrep("needs a triple logarithm"));
        }
        unit(zero, zero, zero)
    } else {
        return Err(unrep("the right side is bounded"));
    };
    Ok(SymbolicRate { kind, term: base.mul(&correction) })
}

fn require_divergent(t: &PowerLogTerm, what: &str) -> Result<PowerLogTerm, EstimateError> {
    if t.tail_converges() {
        return Err(EstimateError::NotApplicable(format!("{what} integral converges")));
    }
    Ok(t.antiderivative_asym()?)
}

fn require_convergent(t: &PowerLogTerm, what: &str) -> Result<PowerLogTerm, EstimateError> {
    if !t.tail_converges() {
        return Err(EstimateError::NotApplicable(format!("{what} integral diverges")));
    }
    Ok(t.antiderivative_asym()?)
}

/// Symbolic rate of one estimate form from precomputed integrands.
pub fn rate_from_pieces(spec: &ProblemSpec, pieces: &SymbolicPieces, kind: BoundKind) -> Result<SymbolicRate, EstimateError> {
    let one = Rational::one();
    let e = (spec.p - one) / spec.p;
    let (lhs, rhs) = match kind {
        BoundKind::Lower => (
            require_divergent(&pieces.ko, "growth")?,
            require_divergent(&pieces.potential, "potential")?.pow(e),
        ),
        BoundKind::Min => {
            let g = require_divergent(&pieces.ko, "growth")?;
            let lhs = match require_divergent(&pieces.h, "companion") {
                Ok(h) => g.max_asym(&h),
                Err(EstimateError::NotApplicable(_)) => g,
                Err(other) => return Err(other),
            };
            (lhs, require_divergent(&pieces.potential.min_asym(&pieces.q_root), "min-form")?)
        }
        BoundKind::Upper => (
            require_convergent(&pieces.ko, "growth")?,
            require_convergent(&pieces.potential, "potential")?.pow(e),
        ),
    };
    invert_asym(&lhs, &rhs)
}

/// Rate of the estimate form `kind`, whether or not it is the verdict's.
pub fn symbolic_rate_for(spec: &ProblemSpec, kind: BoundKind) -> Result<SymbolicRate, EstimateError> {
    let pieces = criteria::symbolic_pieces(spec, false)?;
    rate_from_pieces(spec, &pieces, kind)
}

/// Rate of the estimate the verdict selects.
pub fn symbolic_rate(spec: &ProblemSpec) -> Result<SymbolicRate, EstimateError> {
    let v = criteria::evaluate(spec);
    if !v.symbolic {
        return Err(EstimateError::NotApplicable("the problem is not symbolic".into()));
    }
    let kind = match v.outcome {
        criteria::Outcome::LowerEstimate => BoundKind::Lower,
        criteria::Outcome::MinEstimate => BoundKind::Min,
        criteria::Outcome::UpperEstimate => BoundKind::Upper,
        other => return Err(EstimateError::NotApplicable(format!("outcome is {other}"))),
    };
    symbolic_rate_for(spec, kind)
}

/// Value of an inverted bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum BoundValue {
    Finite { m: f64, ln_m: f64 },
    /// Lower: no finite `M` satisfies the estimate (blow-up before `r`).
    /// Upper: the estimate puts no restriction on `M`.
    Infinite,
    /// Upper: only `M < 1` is admissible, outside the tabulated range.
    BelowDomain,
}

impl BoundValue {
    pub fn ln_m(&self) -> Option<f64> {
        match self {
            Self::Finite { ln_m, .. } => Some(*ln_m),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `int_1^M`.
    FromOne,
    /// `int_M^oo`.
    ToInfinity,
}

type SFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A left-hand side `G` tabulated in `s = ln M` on `[0, s_max]`.
#[derive(Clone)]
pub struct GrowthFunction {
    direction: Direction,
    cell: f64,
    /// `G` at `s = i * cell`.
    table: Vec<f64>,
    /// `int_{s_max}^oo` when finite.
    remainder: Option<f64>,
    integrand: SFn,
    quad: QuadOptions,
}

impl fmt::Debug for GrowthFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GrowthFunction")
            .field("direction", &self.direction)
            .field("cells", &(self.table.len() - 1))
            .field("remainder", &self.remainder)
            .finish()
    }
}

pub const TABLE_S_MAX: f64 = 690.0;
pub const TABLE_CELL: f64 = 0.5;

impl GrowthFunction {
    /// Tabulates `int` of `integrand(s)` (already including the `ds` Jacobian).
    pub fn build(
        integrand: impl Fn(f64) -> f64 + Send + Sync + 'static,
        direction: Direction,
        quad: QuadOptions,
    ) -> Result<Self, EstimateError> {
        let integrand: SFn = Arc::new(integrand);
        let n = (TABLE_S_MAX / TABLE_CELL).round() as usize;
        let cells = par::map_range(n, |i| {
            let a = i as f64 * TABLE_CELL;
            quadrature::integrate_relative(|s| integrand(s), a, a + TABLE_CELL, quad).map(|v| v.value)
        });
        let cells: Vec<f64> = cells.into_iter().collect::<Result<_, _>>()?;
        let s_max = n as f64 * TABLE_CELL;
        let tail = quadrature::integrate_semi_infinite(|s| integrand(s), s_max, s_max, quad)?;
        let remainder = (tail.value.is_finite()).then_some(tail.value);
        let table = match direction {
            Direction::FromOne => {
                let mut t = Vec::with_capacity(n + 1);
                let mut acc = 0.0;
                t.push(0.0);
                for c in &cells {
                    acc += c;
                    t.push(acc);
                }
                t
            }
            Direction::ToInfinity => {
                let r = remainder.ok_or_else(|| {
                    EstimateError::NotApplicable("the growth integral diverges; no upper estimate".into())
                })?;
                let mut t = vec![0.0; n + 1];
                t[n] = r;
                for i in (0..n).rev() {
                    t[i] = t[i + 1] + cells[i];
                }
                t
            }
        };
        Ok(Self { direction, cell: TABLE_CELL, table, remainder, integrand, quad })
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    fn s_max(&self) -> f64 {
        (self.table.len() - 1) as f64 * self.cell
    }

    fn piece(&self, a: f64, b: f64) -> Result<f64, EstimateError> {
        match quadrature::integrate_relative(|s| (self.integrand)(s), a, b, self.quad) {
            Ok(v) => Ok(v.value),
            Err(QuadratureError::NonFinite { value, .. }) if value == f64::INFINITY => Ok(f64::INFINITY),
            Err(e) => Err(e.into()),
        }
    }

    /// `G(e^s)`.
    pub fn at_ln(&self, s: f64) -> Result<f64, EstimateError> {
        let n = self.table.len() - 1;
        let s_max = self.s_max();
        match self.direction {
            Direction::FromOne => {
                if s < 0.0 {
                    return Ok(-self.piece(s, 0.0)?);
                }
                if s >= s_max {
                    return Ok(self.table[n] + self.piece(s_max, s)?);
                }
                let i = ((s / self.cell) as usize).min(n - 1);
                Ok(self.table[i] + self.piece(i as f64 * self.cell, s)?)
            }
            Direction::ToInfinity => {
                if s < 0.0 {
                    return Ok(self.table[0] + self.piece(s, 0.0)?);
                }
                if s >= s_max {
                    let t = quadrature::integrate_semi_infinite(|x| (self.integrand)(x), s, s.max(1.0), self.quad)?;
                    return Ok(t.value);
                }
                let i = ((s / self.cell) as usize).min(n - 1);
                Ok(self.table[i + 1] + self.piece(s, (i + 1) as f64 * self.cell)?)
            }
        }
    }

    /// `G(M)`.
    pub fn at(&self, m: f64) -> Result<f64, EstimateError> {
        self.at_ln(m.ln())
    }

    /// `G(oo)` for `FromOne`, when finite.
    pub fn total(&self) -> Option<f64> {
        match self.direction {
            Direction::FromOne => self.remainder.map(|r| self.table[self.table.len() - 1] + r),
            Direction::ToInfinity => Some(self.table[0]),
        }
    }

    /// `s = ln M` with `G(e^s) = target`.
    pub fn solve(&self, target: f64) -> Result<BoundValue, EstimateError> {
        let n = self.table.len() - 1;
        let finite = |s: f64| BoundValue::Finite { m: s.exp(), ln_m: s };
        let increasing = self.direction == Direction::FromOne;
        if increasing {
            if target <= 0.0 {
                return Ok(finite(0.0));
            }
            if let Some(total) = self.total() {
                if target >= total {
                    return Ok(BoundValue::Infinite);
                }
            }
        } else {
            if target <= 0.0 {
                return Ok(BoundValue::Infinite);
            }
            if target > self.table[0] {
                return Ok(BoundValue::BelowDomain);
            }
        }
        // bracket [lo, hi] in s
        let inside = if increasing { target <= self.table[n] } else { target >= self.table[n] };
        let (mut lo, mut hi) = if inside {
            let i = if increasing {
                self.table.partition_point(|&g| g < target)
            } else {
                self.table.partition_point(|&g| g > target)
            };
            let i = i.clamp(1, n);
            ((i - 1) as f64 * self.cell, i as f64 * self.cell)
        } else {
            let mut lo = self.s_max();
            let mut hi = 2.0 * lo;
            loop {
                let g = self.at_ln(hi)?;
                let past = if increasing { g >= target } else { g <= target };
                if past {
                    break;
                }
                lo = hi;
                hi *= 2.0;
                if hi > 1e300 {
                    return Err(EstimateError::BracketFailure(format!(
                        "target {target} not reached for ln M up to {lo:e}"
                    )));
                }
            }
            (lo, hi)
        };
        let (g_lo, g_hi) = (self.at_ln(lo)?, self.at_ln(hi)?);
        let ordered = if increasing { g_lo <= target && target <= g_hi } else { g_lo >= target && target >= g_hi };
        if !ordered {
            return Err(EstimateError::BracketFailure(format!(
                "G is not monotone on [{lo}, {hi}]: G = ({g_lo}, {g_hi}), target {target}"
            )));
        }
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if !(mid > lo && mid < hi) {
                break;
            }
            let g = self.at_ln(mid)?;
            if (g - target).abs() <= 1e-14 * target {
                return Ok(finite(mid));
            }
            if (g < target) == increasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(finite(0.5 * (lo + hi)))
    }
}

/// `integrand(ln t)` for the growth integral `(g_theta t)^(-1/p) dt`, in `s = ln t`.
fn ko_integrand(spec: &ProblemSpec, errors: Arc<Mutex<Option<EnvelopeError>>>) -> impl Fn(f64) -> f64 + Send + Sync {
    let spec = spec.clone();
    let p = spec.p_f64();
    move |s: f64| match spec.ln_g_theta_from_ln(s) {
        Ok(lg) => (s * (1.0 - 1.0 / p) - lg / p).exp(),
        Err(e) => {
            errors.lock().expect("poisoned").get_or_insert(e);
            f64::NAN
        }
    }
}

/// `g_theta(t)^(-1/(p-1)) dt` in `s = ln t`.
fn companion_integrand(spec: &ProblemSpec, errors: Arc<Mutex<Option<EnvelopeError>>>) -> impl Fn(f64) -> f64 + Send + Sync {
    let spec = spec.clone();
    let p = spec.p_f64();
    move |s: f64| match spec.ln_g_theta_from_ln(s) {
        Ok(lg) => (s - lg / (p - 1.0)).exp(),
        Err(e) => {
            errors.lock().expect("poisoned").get_or_insert(e);
            f64::NAN
        }
    }
}

fn take_error(errors: &Mutex<Option<EnvelopeError>>) -> Result<(), EstimateError> {
    match errors.lock().expect("poisoned").take() {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

/// Left side of the estimate `kind` for `spec`.
pub fn growth_function(spec: &ProblemSpec, kind: BoundKind, quad: QuadOptions) -> Result<GrowthFunction, EstimateError> {
    let errors = Arc::new(Mutex::new(None));
    let ko = ko_integrand(spec, errors.clone());
    let out = match kind {
        BoundKind::Lower => GrowthFunction::build(ko, Direction::FromOne, quad),
        BoundKind::Upper => GrowthFunction::build(ko, Direction::ToInfinity, quad),
        BoundKind::Min => {
            let h = companion_integrand(spec, errors.clone());
            GrowthFunction::build(move |s| ko(s) + h(s), Direction::FromOne, quad)
        }
    };
    take_error(&errors)?;
    out
}

/// Runs `f` on a fallible integrand and surfaces the first error.
fn guarded<F, T>(f: F, body: impl FnOnce(&(dyn Fn(f64) -> f64 + Sync)) -> Result<T, EstimateError>) -> Result<T, EstimateError>
where
    F: Fn(f64) -> Result<f64, EnvelopeError> + Sync,
{
    let errors = Mutex::new(None::<EnvelopeError>);
    let g = |x: f64| match f(x) {
        Ok(v) => v,
        Err(e) => {
            errors.lock().expect("poisoned").get_or_insert(e);
            f64::NAN
        }
    };
    let out = body(&g);
    if let Some(e) = errors.into_inner().expect("poisoned") {
        return Err(e.into());
    }
    out
}

fn integral_from(f: &(dyn Fn(f64) -> f64 + Sync), r0: f64, r: f64, quad: QuadOptions) -> Result<f64, EstimateError> {
    if r <= r0 {
        return Ok(0.0);
    }
    let v = quadrature::integrate_relative(|x: f64| {
        let e = x.exp();
        f(e) * e
    }, r0.ln(), r.ln(), quad)?;
    Ok(v.value)
}

/// `(int_r0^r (xi f(xi))^(1/(p-1)) dxi)^((p-1)/p)`.
pub fn phi_lower_fn<F>(f_sigma: F, p: f64, r0: f64, r: f64) -> Result<f64, EstimateError>
where
    F: Fn(f64) -> Result<f64, EnvelopeError> + Sync,
{
    let quad = QuadOptions::default();
    guarded(|x| Ok((x * f_sigma(x)?).powf(1.0 / (p - 1.0))), |g| {
        Ok(integral_from(g, r0, r, quad)?.powf((p - 1.0) / p))
    })
}

/// `int_r0^r min{(xi f(xi))^(1/(p-1)), q(xi)^(1/p)} dxi`.
pub fn phi_min_fn<F, Q>(f_sigma: F, q_sigma: Q, p: f64, r0: f64, r: f64) -> Result<f64, EstimateError>
where
    F: Fn(f64) -> Result<f64, EnvelopeError> + Sync,
    Q: Fn(f64) -> Result<f64, EnvelopeError> + Sync,
{
    let quad = QuadOptions::default();
    guarded(
        |x| Ok((x * f_sigma(x)?).powf(1.0 / (p - 1.0)).min(q_sigma(x)?.powf(1.0 / p))),
        |g| integral_from(g, r0, r, quad),
    )
}

/// `(int_r^oo (xi f(xi))^(1/(p-1)) dxi)^((p-1)/p)`.
pub fn phi_upper_fn<F>(f_sigma: F, p: f64, r: f64) -> Result<f64, EstimateError>
where
    F: Fn(f64) -> Result<f64, EnvelopeError> + Sync,
{
    let quad = QuadOptions::default();
    guarded(|x| Ok((x * f_sigma(x)?).powf(1.0 / (p - 1.0))), |g| {
        let x0 = r.ln();
        let v = quadrature::integrate_semi_infinite(|x: f64| {
            let e = x.exp();
            if e.is_infinite() {
                return 0.0;
            }
            g(e) * e
        }, x0, x0.abs().max(1.0), quad)?;
        if !v.value.is_finite() {
            return Err(EstimateError::NotApplicable("the potential integral diverges".into()));
        }
        Ok(v.value.powf((p - 1.0) / p))
    })
}

pub fn phi_lower(spec: &ProblemSpec, r: f64) -> Result<f64, EstimateError> {
    phi_lower_fn(|x| spec.f_sigma(x), spec.p_f64(), criteria::numeric_start(spec), r)
}

pub fn phi_min(spec: &ProblemSpec, r: f64) -> Result<f64, EstimateError> {
    phi_min_fn(|x| spec.f_sigma(x), |x| spec.q_sigma(x), spec.p_f64(), criteria::numeric_start(spec), r)
}

pub fn phi_upper(spec: &ProblemSpec, r: f64) -> Result<f64, EstimateError> {
    phi_upper_fn(|x| spec.f_sigma(x), spec.p_f64(), r.max(criteria::numeric_start(spec)))
}

#[derive(Debug, Clone, Copy)]
pub struct EstimateOptions {
    /// The undetermined constant of the theorems.
    pub c: f64,
    pub quad: QuadOptions,
    pub tail: TailOptions,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self { c: 1.0, quad: QuadOptions::default(), tail: TailOptions::default() }
    }
}

type PhiFn = Arc<dyn Fn(f64) -> Result<f64, EstimateError> + Send + Sync>;

/// A computable bound `LHS(M) >= C Phi(r)` on `M(r; u)`.
#[derive(Clone)]
pub struct GrowthBound {
    pub kind: BoundKind,
    pub c: f64,
    pub r0: f64,
    /// Radius from which the bound is asserted.
    pub r_star: f64,
    pub rate: Option<SymbolicRate>,
    lhs: Arc<GrowthFunction>,
    phi: PhiFn,
}

impl fmt::Debug for GrowthBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GrowthBound")
            .field("kind", &self.kind)
            .field("c", &self.c)
            .field("r0", &self.r0)
            .field("r_star", &self.r_star)
            .field("rate", &self.rate)
            .field("lhs", &self.lhs)
            .finish()
    }
}

impl GrowthBound {
    pub fn new(
        kind: BoundKind,
        lhs: GrowthFunction,
        phi: impl Fn(f64) -> Result<f64, EstimateError> + Send + Sync + 'static,
        c: f64,
        r0: f64,
    ) -> Self {
        Self { kind, c, r0, r_star: 10.0 * r0, rate: None, lhs: Arc::new(lhs), phi: Arc::new(phi) }
    }

    /// Bound of form `kind` for `spec`; `stabilized_at` feeds `R*`.
    pub fn from_spec(
        spec: &ProblemSpec,
        kind: BoundKind,
        opts: &EstimateOptions,
        stabilized_at: Option<f64>,
    ) -> Result<Self, EstimateError> {
        let lhs = growth_function(spec, kind, opts.quad)?;
        let s = spec.clone();
        let phi: PhiFn = match kind {
            BoundKind::Lower => Arc::new(move |r| phi_lower(&s, r)),
            BoundKind::Min => Arc::new(move |r| phi_min(&s, r)),
            BoundKind::Upper => Arc::new(move |r| phi_upper(&s, r)),
        };
        let r0 = criteria::numeric_start(spec);
        Ok(Self {
            kind,
            c: opts.c,
            r0,
            r_star: (10.0 * spec.r0).max(stabilized_at.unwrap_or(0.0)),
            rate: symbolic_rate_for(spec, kind).ok(),
            lhs: Arc::new(lhs),
            phi,
        })
    }

    pub fn phi(&self, r: f64) -> Result<f64, EstimateError> {
        (self.phi)(r)
    }

    /// `C Phi(r)`.
    pub fn target(&self, r: f64) -> Result<f64, EstimateError> {
        Ok(self.c * self.phi(r)?)
    }

    /// The left side at `M`.
    pub fn lhs(&self, m: f64) -> Result<f64, EstimateError> {
        self.lhs.at(m)
    }

    pub fn lhs_ln(&self, ln_m: f64) -> Result<f64, EstimateError> {
        self.lhs.at_ln(ln_m)
    }

    pub fn growth_function(&self) -> &GrowthFunction {
        &self.lhs
    }

    pub fn invert(&self, r: f64) -> Result<BoundValue, EstimateError> {
        self.lhs.solve(self.target(r)?)
    }
}

/// Smallest `M` (Lower, Min) or largest `M` (Upper) the estimate allows at `r`.
pub fn invert_growth(bound: &GrowthBound, r: f64) -> Result<BoundValue, EstimateError> {
    bound.invert(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelopes::{Nonlinearity, Profile};
    use crate::powerlog::{q, qi};

    fn spec(p: Rational, b: &str, qs: &str, lambda: Rational) -> ProblemSpec {
        let b = if b == "0" { Profile::Zero } else { Profile::term(b.parse().unwrap()) };
        ProblemSpec::new(p, b, Profile::term(qs.parse().unwrap()), Nonlinearity::Power { lambda })
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn phi_examples() {
        let zero = |_: f64| Ok(0.0);
        assert_eq!(phi_lower_fn(zero, 2.0, 1.0, 50.0).unwrap(), 0.0);
        let v = phi_lower_fn(|x| Ok(1.0 / x), 2.0, 2.0, 50.0).unwrap();
        assert!(close(v, 48f64.sqrt(), 1e-9));
        let v = phi_lower_fn(|_| Ok(1.0), 2.0, 2.0, 50.0).unwrap();
        assert!(close(v, ((2500.0 - 4.0) / 2.0f64).sqrt(), 1e-9));
        let v = phi_min_fn(|x| Ok(1.0 / x), |_| Ok(1.0), 2.0, 3.0, 40.0).unwrap();
        assert!(close(v, 37.0, 1e-9));
        let v = phi_min_fn(|x| Ok(x * x), |x| Ok(x * x), 2.0, 1.5, 20.0).unwrap();
        assert!(close(v, (400.0 - 2.25) / 2.0, 1e-9));
        let v = phi_upper_fn(|x| Ok(x.powi(-4)), 2.0, 10.0).unwrap();
        assert!(close(v, (0.005f64).sqrt(), 1e-8), "{v}");
    }

    #[test]
    fn inversion_matches_closed_form() {
        // g = t^(1/2), p = 2: G(M) = 4 theta^(1/4) (M^(1/4) - 1)
        let s = spec(qi(2), "0", "1", q(1, 2));
        let theta = s.theta;
        let g = growth_function(&s, BoundKind::Lower, QuadOptions::default()).unwrap();
        let bound = GrowthBound::new(BoundKind::Lower, g, |r| Ok(r * r), 1.0, 1.0);
        for r in [1.0, 10.0, 100.0, 1e3] {
            let exact = (1.0 + r * r / (4.0 * theta.powf(0.25))).powi(4);
            match invert_growth(&bound, r).unwrap() {
                BoundValue::Finite { m, .. } => assert!(close(m, exact, 1e-8), "{m} vs {exact}"),
                other => panic!("{other:?}"),
            }
        }
        let zero = GrowthBound::new(BoundKind::Lower, bound.growth_function().clone(), |_| Ok(0.0), 1.0, 1.0);
        assert_eq!(invert_growth(&zero, 5.0).unwrap(), BoundValue::Finite { m: 1.0, ln_m: 0.0 });
    }

    #[test]
    fn critical_growth_inverts_to_exponential() {
        // g = t^(p-1): G(M) = theta^(1/2) ln M for p = 2
        let s = spec(qi(2), "0", "1", qi(1));
        let g = growth_function(&s, BoundKind::Lower, QuadOptions::default()).unwrap();
        let bound = GrowthBound::new(BoundKind::Lower, g, Ok, 1.0, 1.0);
        for r in [10.0, 500.0, 5000.0] {
            let ln_m = invert_growth(&bound, r).unwrap().ln_m().unwrap();
            assert!(close(ln_m, r / s.theta.sqrt(), 1e-9), "{ln_m}");
        }
    }

    #[test]
    fn saturation_and_upper_markers() {
        let s = spec(qi(2), "0", "1", qi(3));
        let g = growth_function(&s, BoundKind::Lower, QuadOptions::default()).unwrap();
        let total = g.total().unwrap();
        // g_theta = (t/theta)^3, so int_1^oo theta^(3/2) t^-2 dt = theta^(3/2)
        let c = s.theta.powf(1.5);
        assert!(close(total, c, 1e-9), "{total}");
        let bound = GrowthBound::new(BoundKind::Lower, g, move |_| Ok(2.0 * total), 1.0, 1.0);
        assert_eq!(invert_growth(&bound, 5.0).unwrap(), BoundValue::Infinite);
        let up = growth_function(&s, BoundKind::Upper, QuadOptions::default()).unwrap();
        assert!(close(up.at(10.0).unwrap(), c / 10.0, 1e-9));
        let ub = GrowthBound::new(BoundKind::Upper, up, |r| Ok(1.0 / r), 1.0, 1.0);
        let m = invert_growth(&ub, 1e4).unwrap().ln_m().unwrap().exp();
        assert!(close(m, c * 1e4, 1e-8), "{m}");
        assert!(growth_function(&s.clone().with_theta(2.0), BoundKind::Upper, QuadOptions::default()).is_ok());
        let div = spec(qi(2), "0", "1", qi(1));
        assert!(matches!(
            growth_function(&div, BoundKind::Upper, QuadOptions::default()),
            Err(EstimateError::NotApplicable(_))
        ));
    }

    #[test]
    fn rate_examples() {
        let r = symbolic_rate(&spec(qi(2), "r^0", "1", q(1, 2))).unwrap();
        assert_eq!((r.kind, r.term.exponents()), (RateKind::Power, (qi(2), qi(0), qi(0))));
        let r = symbolic_rate(&spec(qi(2), "r^0", "r^-2", qi(3))).unwrap();
        assert_eq!((r.kind, r.exponent()), (RateKind::Power, q(1, 2)));
        let r = symbolic_rate(&spec(qi(2), "r^0", "1", qi(1))).unwrap();
        assert_eq!((r.kind, r.term.exponents()), (RateKind::Exponential, (qi(1), qi(0), qi(0))));
        let r = symbolic_rate(&spec(qi(2), "r^0", "r", qi(1))).unwrap();
        assert_eq!((r.kind, r.exponent()), (RateKind::Exponential, q(3, 2)));
    }

    #[test]
    fn invert_asym_levels() {
        let t = |s: &str| s.parse::<PowerLogTerm>().unwrap();
        let r = invert_asym(&t("r^2"), &t("r^4")).unwrap();
        assert_eq!(r.term.exponents(), (qi(2), qi(0), qi(0)));
        let r = invert_asym(&t("r^2 * log(r)"), &t("r^4")).unwrap();
        assert_eq!(r.term.exponents(), (qi(2), q(-1, 2), qi(0)));
        let r = invert_asym(&t("log(r)^2"), &t("r^4")).unwrap();
        assert_eq!((r.kind, r.term.exponents()), (RateKind::Exponential, (qi(2), qi(0), qi(0))));
        let r = invert_asym(&t("loglog(r)"), &t("r")).unwrap();
        assert_eq!(r.kind, RateKind::DoubleExponential);
        let r = invert_asym(&t("r^2"), &t("log(r)^4")).unwrap();
        assert_eq!(r.term.exponents(), (qi(0), qi(2), qi(0)));
        assert!(invert_asym(&t("r^2"), &t("r^-1")).is_err());
        assert!(invert_asym(&t("1"), &t("r")).is_err());
    }
}
