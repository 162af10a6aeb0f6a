//! Theorem dispatch.
//!
//! Two integrals decide everything:
//!
//! ```text
//! KO:        int_1^oo (g_theta(t) t)^(-1/p) dt
//! potential: int_r0^oo (r f_sigma(r))^(1/(p-1)) dr
//! ```
//!
//! | KO         | potential  | outcome                     |
//! |------------|------------|-----------------------------|
//! | convergent | divergent  | Trivial (Theorem 2.1)       |
//! | divergent  | divergent  | LowerEstimate (Theorem 2.2) |
//! | convergent | convergent | UpperEstimate (Theorem 2.4) |
//! | divergent  | convergent | Inconclusive                |
//!
//! In the lower case the min-form integral of Theorem 2.3 is checked as well.
//! When `b` and `q` are power-log terms and `g` is one of the built-in
//! families, the premises are decided exactly on the reduced integrands of
//! the corollaries; otherwise they go through the numeric tail classifier.

use std::fmt;

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::envelopes::{EnvelopeError, Nonlinearity, Profile, ProblemSpec};
use crate::estimates::{self, BoundKind, SymbolicRate};
use crate::powerlog::{PowerLogTerm, Rational};
use crate::quadrature::{self, IntegralClassification, QuadOptions, TailOptions};
use crate::radial::{ClosedFormSolution, WitnessFamily};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CriteriaError {
    #[error("unsupported profile: {0}")]
    UnsupportedProfile(String),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Outcome {
    Trivial,
    LowerEstimate,
    MinEstimate,
    UpperEstimate,
    Inconclusive,
}

impl Outcome {
    /// Short code used in phase maps.
    pub fn code(self) -> u8 {
        match self {
            Self::Trivial => 0,
            Self::LowerEstimate => 1,
            Self::MinEstimate => 2,
            Self::UpperEstimate => 3,
            Self::Inconclusive => 4,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Route {
    #[serde(rename = "general")]
    General,
    #[serde(rename = "power-b")]
    PowerB,
    #[serde(rename = "powerlog-b")]
    PowerLogB,
}

/// The lower bound on `f_sigma` a route relies on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Reduction {
    /// `f_sigma >= gamma q_sigma` (`k <= -1`, or `b = 0`).
    QSigma,
    /// `f_sigma >= gamma r^(-k-1) q_sigma` (`k > -1`).
    PowerQ { k: Rational },
    /// `f_sigma >= gamma r^(-k-1) log^(-m) r q_sigma`.
    PowerLogQ { k: Rational, m: Rational },
    /// `f_sigma` used as is.
    Envelope,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorollaryRoute {
    pub route: Route,
    pub reduction: Reduction,
}

/// Theorem tags and premise ids attached to a route.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RouteTags {
    pub trivial: &'static str,
    pub lower: &'static str,
    pub min: &'static str,
    pub upper: &'static str,
    pub potential_id: &'static str,
    pub min_id: &'static str,
}

impl CorollaryRoute {
    pub fn tags(&self) -> RouteTags {
        match self.reduction {
            Reduction::Envelope => RouteTags {
                trivial: "Theorem 2.1",
                lower: "Theorem 2.2",
                min: "Theorem 2.3",
                upper: "Theorem 2.4",
                potential_id: "T2.1.2",
                min_id: "T2.3.1",
            },
            Reduction::QSigma => RouteTags {
                trivial: "Corollary 2.1",
                lower: "Corollary 2.2",
                min: "Corollary 2.3",
                upper: "Corollary 2.4",
                potential_id: "C2.1.1",
                min_id: "C2.3",
            },
            Reduction::PowerQ { .. } => RouteTags {
                trivial: "Corollary 2.5",
                lower: "Corollary 2.7",
                min: "Corollary 2.8",
                upper: "Corollary 2.9",
                potential_id: "C2.5.1",
                min_id: "C2.8",
            },
            Reduction::PowerLogQ { .. } => RouteTags {
                trivial: "Corollary 2.6",
                lower: "Theorem 2.2",
                min: "Theorem 2.3",
                upper: "Theorem 2.4",
                potential_id: "C2.6",
                min_id: "T2.3.1",
            },
        }
    }

    /// The factor `r^(-k-1) log^(-m) r` multiplying `q_sigma`.
    pub fn damping(&self) -> Option<PowerLogTerm> {
        let one = Rational::one();
        match self.reduction {
            Reduction::QSigma => Some(PowerLogTerm::unit(Rational::zero(), Rational::zero(), Rational::zero())),
            Reduction::PowerQ { k } => Some(PowerLogTerm::unit(-k - one, Rational::zero(), Rational::zero())),
            Reduction::PowerLogQ { k, m } => Some(PowerLogTerm::unit(-k - one, -m, Rational::zero())),
            Reduction::Envelope => None,
        }
    }
}

/// General route with the unreduced envelope.
pub const GENERAL: CorollaryRoute = CorollaryRoute { route: Route::General, reduction: Reduction::Envelope };

/// Picks the corollary family from the shape of `b`.
pub fn corollary_route(spec: &ProblemSpec) -> Result<CorollaryRoute, CriteriaError> {
    let m1 = -Rational::one();
    match &spec.b {
        Profile::Zero => Ok(CorollaryRoute { route: Route::PowerB, reduction: Reduction::QSigma }),
        Profile::Numeric(_) => Err(CriteriaError::UnsupportedProfile("b is numeric".into())),
        Profile::Symbolic { term, .. } => {
            let (k, m, d) = term.exponents();
            if !d.is_zero() {
                return Err(CriteriaError::UnsupportedProfile(format!(
                    "b = {term} carries an iterated logarithm"
                )));
            }
            let reduction = if k < m1 || (k == m1 && m <= Rational::zero()) {
                Reduction::QSigma
            } else if m.is_zero() {
                Reduction::PowerQ { k }
            } else {
                Reduction::PowerLogQ { k, m }
            };
            let route = match reduction {
                Reduction::PowerLogQ { .. } => Route::PowerLogB,
                _ => Route::PowerB,
            };
            Ok(CorollaryRoute { route, reduction })
        }
    }
}

/// One evaluated premise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Premise {
    pub id: String,
    /// The integral, written out.
    pub integral: String,
    /// `symbolic` or `numeric`.
    pub method: &'static str,
    /// Symbolic integrand, when decided exactly.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integrand: Option<PowerLogTerm>,
    pub classification: IntegralClassification,
}

/// An estimate form the verdict licenses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateForm {
    pub kind: BoundKind,
    pub applied: String,
    pub premises: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<SymbolicRate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub applied: String,
    pub route: Route,
    pub reduction: Reduction,
    pub symbolic: bool,
    pub premises: Vec<Premise>,
    pub estimates: Vec<EstimateForm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Radius from which the numeric premise classifications were stable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stabilized_at: Option<f64>,
}

impl Verdict {
    pub fn premise(&self, id: &str) -> Option<&Premise> {
        self.premises.iter().find(|p| p.id == id)
    }

    pub fn estimate(&self, kind: BoundKind) -> Option<&EstimateForm> {
        self.estimates.iter().find(|e| e.kind == kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RoutePreference {
    /// Symbolic corollary route when the profiles allow it.
    #[default]
    Auto,
    /// Symbolic, but on the unreduced envelope `f_sigma`.
    General,
    /// Numeric classification of every premise.
    Numeric,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EvaluateOptions {
    pub tail: TailOptions,
    pub prefer: RoutePreference,
}

/// Power-log forms of every integrand the theorems use.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicPieces {
    pub route: CorollaryRoute,
    /// `(r f_sigma)^(1/(p-1))`, reduced along the route.
    pub potential: PowerLogTerm,
    /// `q_sigma^(1/p)`.
    pub q_root: PowerLogTerm,
    /// `(g_theta(t) t)^(-1/p)` for large `t`.
    pub ko: PowerLogTerm,
    /// `g_theta(t)^(-1/(p-1))` for large `t`.
    pub h: PowerLogTerm,
    /// Where the power-log forms are used from.
    pub start: f64,
}

/// Start radius at which every envelope factor is defined.
fn symbolic_start(spec: &ProblemSpec) -> f64 {
    (10.0 * spec.r0).max(spec.sigma * std::f64::consts::E.powi(2))
}

/// Builds the symbolic integrands, or explains why the spec is not symbolic.
pub fn symbolic_pieces(spec: &ProblemSpec, general: bool) -> Result<SymbolicPieces, CriteriaError> {
    let q_term = match &spec.q {
        Profile::Symbolic { term, lower, .. } => term.scale(*lower).map_err(EnvelopeError::from)?,
        Profile::Zero => return Err(CriteriaError::UnsupportedProfile("q vanishes identically".into())),
        Profile::Numeric(_) => return Err(CriteriaError::UnsupportedProfile("q is numeric".into())),
    };
    let fam = spec
        .g_family()
        .ok_or_else(|| CriteriaError::UnsupportedProfile("g is numeric".into()))?;
    let one = Rational::one();
    let p = spec.p;
    let start = symbolic_start(spec);
    let route = if general {
        if matches!(spec.b, Profile::Numeric(_)) {
            return Err(CriteriaError::UnsupportedProfile("b is numeric".into()));
        }
        GENERAL
    } else {
        corollary_route(spec)?
    };
    let f = match route.damping() {
        Some(d) => q_term.mul(&d),
        None => spec.symbolic_envelopes(start)?.f_sigma,
    };
    let r = PowerLogTerm::unit(one, Rational::zero(), Rational::zero());
    let potential = r.mul(&f).pow(one / (p - one));
    let q_root = q_term.pow(one / p);
    let g_term = fam.term();
    let ko = g_term.mul(&r).pow(-one / p);
    let h = g_term.pow(-one / (p - one));
    Ok(SymbolicPieces { route, potential, q_root, ko, h, start })
}

/// Whether the symbolic machinery covers this spec.
pub fn is_symbolic(spec: &ProblemSpec) -> bool {
    symbolic_pieces(spec, false).is_ok()
}

pub fn evaluate(spec: &ProblemSpec) -> Verdict {
    evaluate_with(spec, &EvaluateOptions::default())
}

pub fn evaluate_with(spec: &ProblemSpec, opts: &EvaluateOptions) -> Verdict {
    if let Err(e) = spec.validate() {
        return inconclusive_invalid(spec, e.to_string());
    }
    let symbolic = match opts.prefer {
        RoutePreference::Auto => symbolic_pieces(spec, false).ok(),
        RoutePreference::General => symbolic_pieces(spec, true).ok(),
        RoutePreference::Numeric => None,
    };
    match symbolic {
        Some(pieces) => evaluate_symbolic(spec, &pieces),
        None => evaluate_numeric(spec, &opts.tail),
    }
}

fn inconclusive_invalid(spec: &ProblemSpec, why: String) -> Verdict {
    let route = corollary_route(spec).unwrap_or(GENERAL);
    Verdict {
        outcome: Outcome::Inconclusive,
        applied: "none".into(),
        route: route.route,
        reduction: route.reduction,
        symbolic: false,
        premises: Vec::new(),
        estimates: Vec::new(),
        note: Some(format!("invalid problem: {why}")),
        stabilized_at: None,
    }
}

fn symbolic_classification(term: &PowerLogTerm, a: f64) -> IntegralClassification {
    if term.tail_converges() {
        let a = a.max(2.0 * term.domain_min());
        match quadrature::tail_integral_asym(term, a, QuadOptions::default()) {
            Ok(v) => IntegralClassification::Convergent { value: v.value, error: v.error.max(f64::EPSILON * v.value) },
            // the decision is exact; only the informative value is missing
            Err(e) => {
                log::warn!("tail value of {term} unavailable: {e}");
                IntegralClassification::Convergent { value: f64::NAN, error: f64::NAN }
            }
        }
    } else {
        IntegralClassification::Divergent { rate: term.antiderivative_asym().ok() }
    }
}

fn ko_integral_text() -> String {
    "int_1^oo (g_theta(t) t)^(-1/p) dt".into()
}

fn potential_text(route: &CorollaryRoute) -> String {
    match route.reduction {
        Reduction::Envelope => "int_r0^oo (r f_sigma(r))^(1/(p-1)) dr".into(),
        Reduction::QSigma => "int_r0^oo (r q_sigma(r))^(1/(p-1)) dr".into(),
        Reduction::PowerQ { k } => format!("int_r0^oo (r^(-({k})) q_sigma(r))^(1/(p-1)) dr"),
        Reduction::PowerLogQ { k, m } => {
            format!("int_r0^oo (r^(-({k})) log^(-({m})) r q_sigma(r))^(1/(p-1)) dr")
        }
    }
}

fn min_text(route: &CorollaryRoute) -> String {
    let inner = match route.reduction {
        Reduction::Envelope => "(r f_sigma(r))^(1/(p-1))".to_string(),
        Reduction::QSigma => "(r q_sigma(r))^(1/(p-1))".to_string(),
        Reduction::PowerQ { k } => format!("(r^(-({k})) q_sigma(r))^(1/(p-1))"),
        Reduction::PowerLogQ { k, m } => format!("(r^(-({k})) log^(-({m})) r q_sigma(r))^(1/(p-1))"),
    };
    format!("int_r0^oo min{{{inner}, q_sigma(r)^(1/p)}} dr")
}

fn ko_id(c: &IntegralClassification) -> &'static str {
    match c {
        IntegralClassification::Divergent { .. } => "T2.2.1",
        _ => "T2.1.1",
    }
}

/// Premise classifications handed to the decision table.
struct Decided {
    route: CorollaryRoute,
    symbolic: bool,
    ko: Premise,
    potential: Premise,
    /// Evaluated lazily: only needed in the lower-estimate case.
    min: Option<Premise>,
    stabilized_at: Option<f64>,
}

fn evaluate_symbolic(spec: &ProblemSpec, pieces: &SymbolicPieces) -> Verdict {
    let tags = pieces.route.tags();
    let ko_c = symbolic_classification(&pieces.ko, 1.0);
    let ko = Premise {
        id: ko_id(&ko_c).into(),
        integral: ko_integral_text(),
        method: "symbolic",
        integrand: Some(pieces.ko),
        classification: ko_c,
    };
    let potential = Premise {
        id: tags.potential_id.into(),
        integral: potential_text(&pieces.route),
        method: "symbolic",
        integrand: Some(pieces.potential),
        classification: symbolic_classification(&pieces.potential, pieces.start),
    };
    let min_term = pieces.potential.min_asym(&pieces.q_root);
    let min = Premise {
        id: tags.min_id.into(),
        integral: min_text(&pieces.route),
        method: "symbolic",
        integrand: Some(min_term),
        classification: symbolic_classification(&min_term, pieces.start),
    };
    let decided = Decided { route: pieces.route, symbolic: true, ko, potential, min: Some(min), stabilized_at: None };
    decide(spec, decided, Some(pieces))
}

/// Classifies `int_a^oo f` for a fallible numeric integrand.
fn classify_fallible<F>(f: F, a: f64, opts: &TailOptions) -> (IntegralClassification, Option<f64>)
where
    F: Fn(f64) -> Result<f64, EnvelopeError> + Sync + Send,
{
    let err = std::sync::Mutex::new(None::<EnvelopeError>);
    let integrand = |r: f64| match f(r) {
        Ok(v) => v,
        Err(e) => {
            err.lock().expect("poisoned").get_or_insert(e);
            f64::NAN
        }
    };
    let report = quadrature::analyze_tail(integrand, a, opts);
    if let Some(e) = err.into_inner().expect("poisoned") {
        return (IntegralClassification::Undecided { reason: e.to_string() }, None);
    }
    (report.classification, Some(report.stabilized_at))
}

/// First radius at which every profile and annulus is defined.
pub fn numeric_start(spec: &ProblemSpec) -> f64 {
    let r_min = spec.b.r_min().max(spec.q.r_min());
    let edge = spec.sigma * r_min * (1.0 + 1e-9);
    spec.r0.max(edge).max(f64::MIN_POSITIVE)
}

fn evaluate_numeric(spec: &ProblemSpec, opts: &TailOptions) -> Verdict {
    let p = spec.p_f64();
    let a = numeric_start(spec);
    let ko_c = quadrature::classify_growth_integral(spec, quadrature::GrowthIntegralKind::KellerOsserman, opts);
    let ko = Premise {
        id: ko_id(&ko_c).into(),
        integral: ko_integral_text(),
        method: "numeric",
        integrand: None,
        classification: ko_c,
    };
    let (pot_c, stab) = classify_fallible(|r| Ok((r * spec.f_sigma(r)?).powf(1.0 / (p - 1.0))), a, opts);
    let tags = GENERAL.tags();
    let potential = Premise {
        id: tags.potential_id.into(),
        integral: potential_text(&GENERAL),
        method: "numeric",
        integrand: None,
        classification: pot_c,
    };
    let mut decided = Decided { route: GENERAL, symbolic: false, ko, potential, min: None, stabilized_at: stab };
    if decided.ko.classification.converges() == Some(false) && decided.potential.classification.converges() == Some(false) {
        let (min_c, _) = classify_fallible(
            |r| {
                let a = (r * spec.f_sigma(r)?).powf(1.0 / (p - 1.0));
                let b = spec.q_sigma(r)?.powf(1.0 / p);
                Ok(a.min(b))
            },
            a,
            opts,
        );
        decided.min = Some(Premise {
            id: tags.min_id.into(),
            integral: min_text(&GENERAL),
            method: "numeric",
            integrand: None,
            classification: min_c,
        });
    }
    decide(spec, decided, None)
}

fn decide(spec: &ProblemSpec, d: Decided, pieces: Option<&SymbolicPieces>) -> Verdict {
    let tags = d.route.tags();
    let mut v = Verdict {
        outcome: Outcome::Inconclusive,
        applied: "none".into(),
        route: d.route.route,
        reduction: d.route.reduction,
        symbolic: d.symbolic,
        premises: vec![d.ko.clone(), d.potential.clone()],
        estimates: Vec::new(),
        note: None,
        stabilized_at: d.stabilized_at,
    };
    let ids = |ps: &[&Premise]| ps.iter().map(|p| p.id.clone()).collect::<Vec<_>>();
    let rate = |kind: BoundKind| pieces.and_then(|pc| estimates::rate_from_pieces(spec, pc, kind).ok());
    match (d.ko.classification.converges(), d.potential.classification.converges()) {
        (None, _) | (_, None) => {
            let failed: Vec<&str> = [&d.ko, &d.potential]
                .into_iter()
                .filter(|p| p.classification.converges().is_none())
                .map(|p| p.id.as_str())
                .collect();
            v.note = Some(format!("premise {} could not be classified", failed.join(" and ")));
        }
        (Some(true), Some(false)) => {
            v.outcome = Outcome::Trivial;
            v.applied = tags.trivial.into();
        }
        (Some(true), Some(true)) => {
            v.outcome = Outcome::UpperEstimate;
            v.applied = tags.upper.into();
            v.estimates.push(EstimateForm {
                kind: BoundKind::Upper,
                applied: tags.upper.into(),
                premises: ids(&[&d.ko, &d.potential]),
                rate: rate(BoundKind::Upper),
            });
        }
        (Some(false), Some(true)) => {
            v.note = Some(
                "the growth integral diverges while the potential integral converges; \
                 no estimate covers this case"
                    .into(),
            );
        }
        (Some(false), Some(false)) => {
            v.outcome = Outcome::LowerEstimate;
            v.applied = tags.lower.into();
            let lower = EstimateForm {
                kind: BoundKind::Lower,
                applied: tags.lower.into(),
                premises: ids(&[&d.ko, &d.potential]),
                rate: rate(BoundKind::Lower),
            };
            v.estimates.push(lower.clone());
            if let Some(min) = &d.min {
                v.premises.push(min.clone());
                match min.classification.converges() {
                    Some(false) => {
                        let form = EstimateForm {
                            kind: BoundKind::Min,
                            applied: tags.min.into(),
                            premises: ids(&[&d.ko, min]),
                            rate: rate(BoundKind::Min),
                        };
                        let stronger = match (&form.rate, &lower.rate) {
                            (Some(m), Some(l)) => m.is_stronger_than(l),
                            _ => false,
                        };
                        if stronger {
                            v.outcome = Outcome::MinEstimate;
                            v.applied = tags.min.into();
                            v.note = Some("the min-form estimate gives a strictly faster rate than the lower estimate".into());
                        } else if form.rate.is_some() {
                            v.note = Some("the min-form estimate also holds but gives no faster rate".into());
                        } else {
                            v.note = Some("the min-form estimate also holds".into());
                        }
                        v.estimates.push(form);
                    }
                    Some(true) => {
                        v.note = Some("the min-form integral converges; only the lower estimate applies".into());
                    }
                    None => {
                        v.note = Some(format!("premise {} could not be classified", min.id));
                    }
                }
            }
        }
    }
    if v.outcome == Outcome::Inconclusive && matches!(spec.g, Nonlinearity::CriticalLog { .. }) {
        if let Some(note) = v.note.as_mut() {
            if d.ko.classification.converges() == Some(false) {
                note.push_str("; for critical-log g with lambda <= p positive solutions are known to exist");
            }
        }
    }
    v
}

/// Closed-form positive solution on the non-trivial side of a sharpness
/// boundary, when the spec matches one of the four witness families.
pub fn sharpness_witness(spec: &ProblemSpec) -> Option<ClosedFormSolution> {
    let one = Rational::one();
    let p = spec.p;
    let (k, m) = match &spec.b {
        Profile::Symbolic { term, .. } if term.loglogpow.is_zero() => (term.pow, term.logpow),
        _ => return None,
    };
    let (l, mu) = match &spec.q {
        Profile::Symbolic { term, .. } if term.loglogpow.is_zero() => (term.pow, term.logpow),
        _ => return None,
    };
    let crit = k - p + one;
    let r0_log = if spec.r0 > 1.0 { spec.r0 } else { std::f64::consts::E };
    let pick = |family, example: &str, r0: f64| Some(ClosedFormSolution { family, r0, example: example.into() });
    match spec.g {
        Nonlinearity::Power { lambda } if lambda > p - one => {
            let denom = lambda - p + one;
            if k > -one && m.is_zero() {
                if mu.is_zero() && l < crit {
                    return pick(WitnessFamily::PowerLaw { exponent: (crit - l) / denom }, "Example 2.1", spec.r0);
                }
                if l == crit && mu < one - p {
                    return pick(WitnessFamily::LogPower { exponent: (one - p - mu) / denom }, "Example 2.2", r0_log);
                }
            }
            let power_log_b = k > -one || (k == -one && m > Rational::zero());
            if power_log_b && !m.is_zero() && l == crit && mu.is_zero() && m > p - one {
                return pick(WitnessFamily::LogPower { exponent: (m - p + one) / denom }, "Example 2.4", r0_log);
            }
            None
        }
        Nonlinearity::CriticalLog { lambda } if lambda > p => {
            if k > -one && m.is_zero() && mu.is_zero() && l < crit {
                let gamma = (crit - l) / (lambda - p + one);
                return pick(WitnessFamily::ExpPower { gamma }, "Example 2.3", spec.r0);
            }
            None
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::powerlog::{q, qi};

    fn spec(p: Rational, b: &str, qs: &str, g: Nonlinearity) -> ProblemSpec {
        let b = if b == "0" { Profile::Zero } else { Profile::term(b.parse().unwrap()) };
        ProblemSpec::new(p, b, Profile::term(qs.parse().unwrap()), g)
    }

    fn pw(l: Rational) -> Nonlinearity {
        Nonlinearity::Power { lambda: l }
    }

    #[test]
    fn keller_osserman_trivial_regime() {
        let v = evaluate(&spec(qi(2), "0", "1", pw(qi(2))));
        assert_eq!(v.outcome, Outcome::Trivial);
        assert_eq!(v.applied, "Corollary 2.1");
        assert!(v.premise("T2.1.1").is_some() && v.premise("C2.1.1").is_some());
    }

    #[test]
    fn upper_estimate_below_boundary() {
        let v = evaluate(&spec(qi(2), "r^0", "r^-2", pw(qi(2))));
        assert_eq!(v.outcome, Outcome::UpperEstimate);
        assert_eq!(v.applied, "Corollary 2.9");
    }

    #[test]
    fn sublinear_lower_estimate() {
        let v = evaluate(&spec(qi(2), "r^0", "1", pw(q(1, 2))));
        assert_eq!(v.outcome, Outcome::LowerEstimate);
        assert_eq!(v.applied, "Corollary 2.7");
        assert!(v.estimate(BoundKind::Min).is_some());
    }

    #[test]
    fn critical_exponent_prefers_min_form() {
        let v = evaluate(&spec(qi(2), "r^0", "1", pw(qi(1))));
        assert_eq!(v.outcome, Outcome::MinEstimate);
        assert_eq!(v.applied, "Corollary 2.8");
        assert!(v.premise("C2.8").is_some());
    }

    #[test]
    fn routes() {
        let r = |b: &str| corollary_route(&spec(qi(2), b, "1", pw(qi(2)))).unwrap();
        assert_eq!(r("r^-1").reduction, Reduction::QSigma);
        assert_eq!(r("r^0").reduction, Reduction::PowerQ { k: qi(0) });
        assert_eq!(r("r^0").damping().unwrap().exponents(), (qi(-1), qi(0), qi(0)));
        assert_eq!(r("r^-1 * log(r)").route, Route::PowerLogB);
        assert_eq!(r("r^-1 * log(r)^-1").reduction, Reduction::QSigma);
        assert_eq!(r("r^-3/2 * log(r)^4").reduction, Reduction::QSigma);
        let num = ProblemSpec { b: Profile::Numeric(crate::envelopes::NumericProfile::from_fn(0.0, |_| 1.0)), ..spec(qi(2), "0", "1", pw(qi(2))) };
        assert!(matches!(corollary_route(&num), Err(CriteriaError::UnsupportedProfile(_))));
    }

    #[test]
    fn divergent_ko_with_convergent_potential_is_inconclusive() {
        let v = evaluate(&spec(qi(2), "r^0", "r^-3", pw(q(1, 2))));
        assert_eq!(v.outcome, Outcome::Inconclusive);
        assert!(v.note.is_some());
    }

    #[test]
    fn witnesses() {
        let w = sharpness_witness(&spec(qi(2), "r^0", "r^-2", pw(qi(2)))).unwrap();
        assert_eq!(w.family, WitnessFamily::PowerLaw { exponent: qi(1) });
        let w = sharpness_witness(&spec(qi(2), "r^0", "r^-1 * log(r)^-2", pw(qi(2)))).unwrap();
        assert_eq!(w.family, WitnessFamily::LogPower { exponent: qi(1) });
        assert!(sharpness_witness(&spec(qi(2), "r^0", "r^-1", pw(qi(2)))).is_none());
        assert!(sharpness_witness(&spec(qi(2), "r^0", "r^-2", pw(qi(1)))).is_none());
        let w = sharpness_witness(&spec(qi(2), "r^0", "r^-2", Nonlinearity::CriticalLog { lambda: qi(3) })).unwrap();
        assert_eq!(w.family, WitnessFamily::ExpPower { gamma: q(1, 2) });
        let w = sharpness_witness(&spec(qi(2), "r^-1 * log(r)^2", "r^-2", pw(qi(2)))).unwrap();
        assert_eq!(w.family, WitnessFamily::LogPower { exponent: qi(1) });
    }

    #[test]
    fn numeric_route_agrees_off_boundary() {
        for (b, qs, lam, want) in [
            ("0", "1", qi(2), Outcome::Trivial),
            ("r^0", "r^-3", qi(2), Outcome::UpperEstimate),
        ] {
            let s = spec(qi(2), b, qs, pw(lam));
            let opts = EvaluateOptions { prefer: RoutePreference::Numeric, ..Default::default() };
            let v = evaluate_with(&s, &opts);
            assert_eq!(v.outcome, want, "{v:#?}");
            assert!(!v.symbolic);
            assert_eq!(v.route, Route::General);
        }
    }
}
