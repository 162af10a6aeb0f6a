//! Adaptive quadrature and convergence classification of improper integrals.
//!
//! Finite integrals use a global adaptive 21-point Gauss-Kronrod scheme with
//! QUADPACK-style error estimates. Tails `int_a^oo f` are analysed over
//! doubling windows `[a 2^j, a 2^(j+1)]`: the window sums are fitted to the
//! power-log model `ln W = c + s x + beta ln x` (with `x` the log-radius of
//! the window centre), and the fitted slope and log exponent decide the class.

use serde::Serialize;
use thiserror::Error;

use crate::envelopes::{EnvelopeError, ProblemSpec};
use crate::par;
use crate::powerlog::{PowerLogTerm, Rational};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("integrand returned non-finite value {value} at x = {x}")]
    NonFinite { x: f64, value: f64 },
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("integrand evaluation failed at x = {x}: {reason}")]
    Evaluation { x: f64, reason: String },
}

/// Result of a finite integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    /// False when the subdivision budget ran out before the tolerance was met.
    pub converged: bool,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    /// Relative tolerance: the target is `tol * (1 + |result|)`.
    pub tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_subdivisions: 2000 }
    }
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600525452878,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn checked<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64, QuadratureError> {
    let v = f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(QuadratureError::NonFinite { x, value: v })
    }
}

/// One 21-point Gauss-Kronrod panel.
fn qk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Panel, QuadratureError> {
    let centr = 0.5 * (a + b);
    let hlgth = 0.5 * (b - a);
    let dhlgth = hlgth.abs();
    let fc = checked(f, centr)?;
    let mut resg = 0.0;
    let mut resk = WGK[10] * fc;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..5 {
        let jtw = 2 * j + 1;
        let absc = hlgth * XGK[jtw];
        let f1 = checked(f, centr - absc)?;
        let f2 = checked(f, centr + absc)?;
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        resg += WG[j] * (f1 + f2);
        resk += WGK[jtw] * (f1 + f2);
        resabs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let absc = hlgth * XGK[jtwm1];
        let f1 = checked(f, centr - absc)?;
        let f2 = checked(f, centr + absc)?;
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        resk += WGK[jtwm1] * (f1 + f2);
        resabs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }
    let reskh = resk * 0.5;
    let mut resasc = WGK[10] * (fc - reskh).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let value = resk * hlgth;
    resabs *= dhlgth;
    resasc *= dhlgth;
    let mut error = ((resk - resg) * hlgth).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Ok(Panel { a, b, value, error })
}

/// `int_a^b f` by global adaptive bisection.
pub fn integrate_finite<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> Result<Integral, QuadratureError> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        if a == b && a.is_finite() {
            return Ok(Integral { value: 0.0, error: 0.0, converged: true, evaluations: 0 });
        }
        return Err(QuadratureError::InvalidInterval { a, b });
    }
    let mut panels = vec![qk21(&f, a, b)?];
    let mut evaluations = 21;
    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        if error <= opts.tol * (1.0 + value.abs()) {
            return Ok(Integral { value, error, converged: true, evaluations });
        }
        let (idx, worst) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, p)| (i, *p))
            .expect("at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        let too_narrow = !(mid > worst.a && mid < worst.b)
            || (worst.b - worst.a) <= 4.0 * f64::EPSILON * worst.a.abs().max(worst.b.abs());
        if panels.len() >= opts.max_subdivisions || too_narrow {
            return Ok(Integral { value, error, converged: false, evaluations });
        }
        let left = qk21(&f, worst.a, mid)?;
        let right = qk21(&f, mid, worst.b)?;
        evaluations += 42;
        panels[idx] = left;
        panels.push(right);
    }
}

/// `int_a^b f(r) dr` for `0 < a < b`, computed in `s = ln r`.
pub fn integrate_log<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> Result<Integral, QuadratureError> {
    if !(a > 0.0) {
        return Err(QuadratureError::InvalidInterval { a, b });
    }
    integrate_finite(
        |s| {
            let r = s.exp();
            f(r) * r
        },
        a.ln(),
        b.ln(),
        opts,
    )
}

/// `int_a^b f` with the tolerance taken relative to the size of the result
/// rather than `1 + |result|`.
pub fn integrate_relative<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> Result<Integral, QuadratureError> {
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0, converged: true, evaluations: 0 });
    }
    if !(a < b) {
        return Err(QuadratureError::InvalidInterval { a, b });
    }
    let probe = qk21(&f, a, b)?;
    let scale = if probe.value.abs() > 0.0 && probe.value.is_finite() { probe.value.abs() } else { 1.0 };
    let mut out = integrate_finite(|x| f(x) / scale, a, b, opts)?;
    out.value *= scale;
    out.error *= scale;
    out.evaluations += 21;
    Ok(out)
}

/// `int_x0^oo f` for an integrand that eventually decays at least like
/// `exp(-x / step)`, summed over chunks of width `step` until they stop
/// contributing. Each chunk is integrated relative to the first chunk's size.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    x0: f64,
    step: f64,
    opts: QuadOptions,
) -> Result<Integral, QuadratureError> {
    const MAX_CHUNKS: usize = 200_000;
    if !(x0.is_finite() && step > 0.0 && step.is_finite()) {
        return Err(QuadratureError::InvalidInterval { a: x0, b: f64::INFINITY });
    }
    let probe = qk21(&f, x0, x0 + step)?;
    let scale = if probe.value.abs() > 0.0 { probe.value.abs() } else { 1.0 };
    let g = |x: f64| f(x) / scale;
    let mut out = Integral { value: 0.0, error: 0.0, converged: true, evaluations: 21 };
    let mut quiet = 0;
    for i in 0..MAX_CHUNKS {
        let a = x0 + i as f64 * step;
        let piece = integrate_finite(g, a, a + step, opts)?;
        out.value += piece.value;
        out.error += piece.error;
        out.evaluations += piece.evaluations;
        out.converged &= piece.converged;
        if piece.value.abs() <= 1e-17 * out.value.abs() {
            quiet += 1;
            if quiet >= 3 {
                out.value *= scale;
                out.error = (out.error * scale).max(f64::EPSILON * out.value.abs());
                return Ok(out);
            }
        } else {
            quiet = 0;
        }
    }
    out.value *= scale;
    out.error *= scale;
    out.converged = false;
    Ok(out)
}

/// `int_x0^oo f` through `x = x0 + w (e^v - 1)`, which turns polynomial
/// decay in `x` into exponential decay in `v`. Chunks of `v` are summed
/// until they stop contributing; the leftover is closed with a geometric
/// series fitted to the last two chunks. Growing chunks or non-finite values
/// mean the integral diverges, reported as `converged = false` with an
/// infinite value.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    x0: f64,
    w: f64,
    opts: QuadOptions,
) -> Result<Integral, QuadratureError> {
    const DV: f64 = 0.5;
    const V_MAX: f64 = 600.0;
    if !(x0.is_finite() && w > 0.0) {
        return Err(QuadratureError::InvalidInterval { a: x0, b: f64::INFINITY });
    }
    let g = |v: f64| {
        let e = v.exp();
        let y = f(x0 + w * (e - 1.0)) * w * e;
        if y.is_nan() && e.is_infinite() {
            0.0
        } else {
            y
        }
    };
    let diverged = |evaluations| Integral { value: f64::INFINITY, error: f64::INFINITY, converged: false, evaluations };
    let mut out = Integral { value: 0.0, error: 0.0, converged: true, evaluations: 0 };
    let (mut prev, mut quiet, mut rising) = (f64::NAN, 0, 0);
    let mut v = 0.0;
    while v < V_MAX {
        let piece = match integrate_relative(g, v, v + DV, opts) {
            Ok(p) => p,
            Err(QuadratureError::NonFinite { value, .. }) if value.is_infinite() => return Ok(diverged(out.evaluations)),
            Err(e) => return Err(e),
        };
        out.evaluations += piece.evaluations;
        out.converged &= piece.converged;
        out.value += piece.value;
        out.error += piece.error;
        if !out.value.is_finite() {
            return Ok(diverged(out.evaluations));
        }
        if piece.value.abs() <= 1e-17 * out.value.abs() || (piece.value == 0.0 && v > 20.0) {
            quiet += 1;
            if quiet >= 3 {
                return Ok(out);
            }
        } else {
            quiet = 0;
        }
        if piece.value > prev * (1.0 + 1e-12) {
            rising += 1;
            if rising >= 8 {
                return Ok(diverged(out.evaluations));
            }
        } else {
            rising = 0;
        }
        prev = piece.value;
        v += DV;
    }
    // geometric closure from the last chunk ratio
    let last = integrate_relative(g, V_MAX - DV, V_MAX, opts)?.value;
    let before = integrate_relative(g, V_MAX - 2.0 * DV, V_MAX - DV, opts)?.value;
    let rho = last / before;
    if !(0.0..1.0).contains(&rho) {
        return Ok(diverged(out.evaluations));
    }
    let rest = last * rho / (1.0 - rho);
    out.value += rest;
    out.error += 0.1 * rest;
    Ok(out)
}

/// `int_a^oo u(r) dr` for a convergent power-log term, computed after the
/// substitution that turns its decay into an exponential one.
pub fn tail_integral_asym(term: &PowerLogTerm, a: f64, opts: QuadOptions) -> Result<Integral, QuadratureError> {
    let (pw, lp, llp) = term.exponents();
    let (pw, lp, llp) = (crate::powerlog::to_f64(pw), crate::powerlog::to_f64(lp), crate::powerlog::to_f64(llp));
    let c = term.coeff();
    let bad = || QuadratureError::Evaluation { x: a, reason: format!("{term} has a divergent tail") };
    if !term.tail_converges() {
        return Err(bad());
    }
    if !(a > term.domain_min()) {
        return Err(QuadratureError::InvalidInterval { a, b: f64::INFINITY });
    }
    let pos = |x: f64, e: f64| if e == 0.0 { 1.0 } else { x.powf(e) };
    if pw < -1.0 {
        // x = ln r
        let k = pw + 1.0;
        return integrate_to_infinity(
            |x| c * (k * x).exp() * pos(x, lp) * pos(x.ln(), llp),
            a.ln(),
            1.0 / k.abs(),
            opts,
        );
    }
    let y0 = a.ln().ln();
    if lp < -1.0 {
        // y = ln ln r
        let k = lp + 1.0;
        return integrate_to_infinity(|y| c * (k * y).exp() * pos(y, llp), y0, 1.0 / k.abs(), opts);
    }
    // ln ln ln r; exact
    let k = llp + 1.0;
    let value = c * y0.powf(k) / k.abs();
    Ok(Integral { value, error: f64::EPSILON * value, converged: true, evaluations: 0 })
}

/// Outcome of a convergence test on `int_a^oo f`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict")]
pub enum IntegralClassification {
    Convergent { value: f64, error: f64 },
    Divergent { rate: Option<PowerLogTerm> },
    Undecided { reason: String },
}

impl IntegralClassification {
    /// `Some(true)` for convergent, `Some(false)` for divergent.
    pub fn converges(&self) -> Option<bool> {
        match self {
            Self::Convergent { .. } => Some(true),
            Self::Divergent { .. } => Some(false),
            Self::Undecided { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TailOptions {
    pub quad: QuadOptions,
    /// Number of doubling windows `[a 2^j, a 2^(j+1)]`.
    pub max_windows: usize,
    /// How many trailing windows enter the model fit.
    pub fit_windows: usize,
    /// Slopes with `|s| < guard` are near-critical.
    pub guard: f64,
    /// Inside the guard band the power part is treated as exactly critical
    /// only when `|s|` is below this.
    pub critical_slope: f64,
    /// Band around `beta = -1` left undecided in the critical case.
    pub log_guard: f64,
}

impl Default for TailOptions {
    fn default() -> Self {
        Self {
            quad: QuadOptions { tol: 1e-10, max_subdivisions: 2000 },
            max_windows: 24,
            fit_windows: 12,
            guard: 0.05,
            critical_slope: 2e-3,
            log_guard: 0.05,
        }
    }
}

/// Fitted model `ln W(x) = c + slope x + beta ln x` for window sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailModel {
    pub c: f64,
    pub slope: f64,
    pub beta: f64,
}

impl TailModel {
    /// Least-squares fit of `ys = ln W` against the window centres `xs`.
    /// Falls back to `beta = 0` when some `x <= 0`.
    pub fn fit(xs: &[f64], ys: &[f64]) -> Option<Self> {
        if xs.len() < 3 || xs.len() != ys.len() {
            return None;
        }
        if xs.iter().any(|&x| x <= 0.0) {
            let (c, slope) = linear_fit(xs, ys)?;
            return Some(Self { c, slope, beta: 0.0 });
        }
        let cols: [Vec<f64>; 3] =
            [vec![1.0; xs.len()], xs.to_vec(), xs.iter().map(|x| x.ln()).collect()];
        let coef = least_squares::<3>(&cols, ys)?;
        Some(Self { c: coef[0], slope: coef[1], beta: coef[2] })
    }

    /// Fit with the slope pinned to zero: `ln W = c + beta ln x`.
    pub fn fit_critical(xs: &[f64], ys: &[f64]) -> Option<Self> {
        if xs.iter().any(|&x| x <= 0.0) {
            return None;
        }
        let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
        let (c, beta) = linear_fit(&lx, ys)?;
        Some(Self { c, slope: 0.0, beta })
    }

    pub fn window(&self, x: f64) -> f64 {
        let lx = if self.beta == 0.0 { 0.0 } else { x.ln() };
        (self.c + self.slope * x + self.beta * lx).exp()
    }

    /// Sum of predicted windows after the one centred at `x_last`, windows
    /// being `dx` apart. `None` if the model does not decay.
    pub fn remainder(&self, x_last: f64, dx: f64) -> Option<f64> {
        if self.slope < 0.0 {
            let mut sum = 0.0;
            for j in 1..2_000_000u32 {
                let w = self.window(x_last + j as f64 * dx);
                sum += w;
                if j > 8 && w <= 1e-17 * sum {
                    return Some(sum);
                }
            }
            Some(sum)
        } else if self.slope == 0.0 && self.beta < -1.0 {
            // Euler-Maclaurin: sum over windows ~ integral from the edge
            let edge = x_last + 0.5 * dx;
            Some(self.c.exp() * edge.powf(self.beta + 1.0) / ((-self.beta - 1.0) * dx))
        } else {
            None
        }
    }
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let cols = [vec![1.0; xs.len()], xs.to_vec()];
    least_squares::<2>(&cols, ys).map(|c| (c[0], c[1]))
}

/// Solves the normal equations with centred, scaled columns.
fn least_squares<const K: usize>(cols: &[Vec<f64>; K], ys: &[f64]) -> Option<[f64; K]> {
    let n = ys.len() as f64;
    // column 0 is the intercept; centre the others
    let mut means = [0.0; K];
    let mut scales = [1.0; K];
    let mut z: Vec<Vec<f64>> = Vec::with_capacity(K);
    for (k, col) in cols.iter().enumerate() {
        if k == 0 {
            z.push(col.clone());
            continue;
        }
        means[k] = col.iter().sum::<f64>() / n;
        let centred: Vec<f64> = col.iter().map(|v| v - means[k]).collect();
        let norm = centred.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        scales[k] = norm;
        z.push(centred.iter().map(|v| v / norm).collect());
    }
    let ym = ys.iter().sum::<f64>() / n;
    // slope block (without intercept) on centred data
    let m = K - 1;
    let mut a = vec![vec![0.0; m + 1]; m];
    for i in 0..m {
        for j in 0..m {
            a[i][j] = z[i + 1].iter().zip(&z[j + 1]).map(|(x, y)| x * y).sum();
        }
        a[i][m] = z[i + 1].iter().zip(ys).map(|(x, y)| x * (y - ym)).sum();
    }
    // Gaussian elimination with partial pivoting
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, piv);
        for row in 0..m {
            if row != col {
                let factor = a[row][col] / a[col][col];
                for k in col..=m {
                    a[row][k] -= factor * a[col][k];
                }
            }
        }
    }
    let mut out = [0.0; K];
    let mut intercept = ym;
    for i in 0..m {
        let beta = a[i][m] / a[i][i] / scales[i + 1];
        out[i + 1] = beta;
        intercept -= beta * means[i + 1];
    }
    out[0] = intercept;
    Some(out)
}

/// Full diagnostic output of [`analyze_tail`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub classification: IntegralClassification,
    pub model: Option<TailModel>,
    /// Left edge of the first window used in the fit.
    pub stabilized_at: f64,
    pub window_sums: Vec<f64>,
}

/// Rational with denominator at most 12 within `tol` of `x`, if any.
fn snap_rational(x: f64, tol: f64) -> Option<Rational> {
    (1..=12i64).find_map(|den| {
        let num = (x * den as f64).round();
        ((x - num / den as f64).abs() <= tol).then(|| Rational::new(num as i64, den))
    })
}

/// Classifies `int_a^oo f` with full diagnostics.
pub fn analyze_tail<F>(f: F, a: f64, opts: &TailOptions) -> TailReport
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    let undecided = |reason: String, sums: Vec<f64>| TailReport {
        classification: IntegralClassification::Undecided { reason },
        model: None,
        stabilized_at: a,
        window_sums: sums,
    };
    if !(a > 0.0 && a.is_finite()) {
        return undecided(format!("tail start {a} must be positive"), Vec::new());
    }
    let n = opts.max_windows.max(4);
    let ln2 = std::f64::consts::LN_2;
    let results = par::map_range(n, |j| {
        let lo = a * 2f64.powi(j as i32);
        integrate_log(&f, lo, 2.0 * lo, opts.quad)
    });
    let mut sums = Vec::with_capacity(n);
    let mut errs = 0.0;
    for (j, res) in results.into_iter().enumerate() {
        match res {
            Ok(int) => {
                sums.push(int.value);
                errs += int.error;
            }
            Err(e) => return undecided(format!("window {j}: {e}"), sums),
        }
    }
    if let Some(j) = sums.iter().position(|&w| w < 0.0) {
        return undecided(format!("negative window sum in window {j}"), sums);
    }
    let total: f64 = sums.iter().sum();
    let k = opts.fit_windows.clamp(3, n);
    let first_fit = n - k;
    let stabilized_at = a * 2f64.powi(first_fit as i32);
    if sums[first_fit..].iter().all(|&w| w == 0.0) {
        return TailReport {
            classification: IntegralClassification::Convergent {
                value: total,
                error: errs.max(f64::MIN_POSITIVE),
            },
            model: None,
            stabilized_at,
            window_sums: sums,
        };
    }
    if sums[first_fit..].contains(&0.0) {
        return undecided("window sums vanish intermittently".into(), sums);
    }
    let xs: Vec<f64> = (first_fit..n).map(|j| a.ln() + (j as f64 + 0.5) * ln2).collect();
    let ys: Vec<f64> = sums[first_fit..].iter().map(|w| w.ln()).collect();
    let Some(model) = TailModel::fit(&xs, &ys) else {
        return undecided("window model fit is singular".into(), sums);
    };
    let x_last = *xs.last().expect("non-empty fit");
    let report = |classification, model| TailReport {
        classification,
        model: Some(model),
        stabilized_at,
        window_sums: sums.clone(),
    };
    let convergent = |m: TailModel| -> IntegralClassification {
        match m.remainder(x_last, ln2) {
            Some(rem) if rem.is_finite() => IntegralClassification::Convergent {
                value: total + rem,
                error: (errs + 0.05 * rem).max(f64::MIN_POSITIVE),
            },
            _ => IntegralClassification::Undecided { reason: "tail remainder did not converge".into() },
        }
    };
    if model.slope <= -opts.guard {
        return report(convergent(model), model);
    }
    if model.slope >= opts.guard {
        let rate = snap_rational(model.slope, 2e-3).zip(snap_rational(model.beta, 2e-3)).and_then(
            |(s, b)| PowerLogTerm::power_log(model.c.exp() / (1.0 - 2f64.powf(-model.slope)), s, b).ok(),
        );
        return report(IntegralClassification::Divergent { rate }, model);
    }
    if model.slope.abs() > opts.critical_slope {
        return report(
            IntegralClassification::Undecided {
                reason: format!(
                    "near-critical tail: fitted power {:.4} inside the guard band {}",
                    model.slope - 1.0,
                    opts.guard
                ),
            },
            model,
        );
    }
    let Some(crit) = TailModel::fit_critical(&xs, &ys) else {
        return report(
            IntegralClassification::Undecided { reason: "critical fit is singular".into() },
            model,
        );
    };
    if crit.beta < -1.0 - opts.log_guard {
        report(convergent(crit), crit)
    } else if crit.beta > -1.0 + opts.log_guard {
        let rate = snap_rational(crit.beta + 1.0, 2e-3).and_then(|b| {
            PowerLogTerm::power_log(crit.c.exp() / ((crit.beta + 1.0) * ln2), Rational::from_integer(0), b).ok()
        });
        report(IntegralClassification::Divergent { rate }, crit)
    } else {
        report(
            IntegralClassification::Undecided {
                reason: format!("log-critical tail: fitted log exponent {:.4} near -1", crit.beta),
            },
            crit,
        )
    }
}

/// Classifies `int_a^oo f` as convergent, divergent or undecided.
pub fn classify_tail<F>(f: F, a: f64, opts: &TailOptions) -> IntegralClassification
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    analyze_tail(f, a, opts).classification
}

/// `int_a^oo f` when the tail classifies as convergent.
pub fn integrate_tail<F>(f: F, a: f64, opts: &TailOptions) -> Result<Integral, QuadratureError>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    match classify_tail(f, a, opts) {
        IntegralClassification::Convergent { value, error } => {
            Ok(Integral { value, error, converged: true, evaluations: 0 })
        }
        other => Err(QuadratureError::Evaluation {
            x: a,
            reason: format!("tail integral is not convergent: {other:?}"),
        }),
    }
}

/// Which reading of the growth integral `int_1^oo (g_theta(t) t)^(-1/p) dt`
/// a premise asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GrowthIntegralKind {
    /// Convergence: every solution is trivial or bounded above.
    KellerOsserman,
    /// Divergence: nontrivial solutions grow at least at a given rate.
    Complement,
}

impl GrowthIntegralKind {
    pub fn premise_id(self) -> &'static str {
        match self {
            Self::KellerOsserman => "T2.1.1",
            Self::Complement => "T2.2.1",
        }
    }
}

/// Classifies `int_1^oo (g_theta(t) t)^(-1/p) dt` numerically.
pub fn classify_growth_integral(
    spec: &ProblemSpec,
    _which: GrowthIntegralKind,
    opts: &TailOptions,
) -> IntegralClassification {
    let p = spec.p_f64();
    let err = std::sync::Mutex::new(None::<EnvelopeError>);
    let integrand = |t: f64| match spec.ln_g_theta(t) {
        Ok(lg) => (-(lg + t.ln()) / p).exp(),
        Err(e) => {
            err.lock().expect("poisoned").get_or_insert(e);
            f64::NAN
        }
    };
    let out = classify_tail(integrand, 1.0, opts);
    if let Some(e) = err.into_inner().expect("poisoned") {
        return IntegralClassification::Undecided { reason: format!("g_theta: {e}") };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn finite_examples() {
        let o = QuadOptions::default();
        let v = integrate_finite(|r| r, 1.0, 2.0, o).unwrap();
        assert!(close(v.value, 1.5, o.tol) && v.converged);
        let v = integrate_finite(|r| 1.0 / r, 1.0, E, o).unwrap();
        assert!(close(v.value, 1.0, o.tol));
        let v = integrate_finite(|t| 1.0 / t.sqrt(), 0.0, 1.0, o).unwrap();
        assert!(close(v.value, 2.0, o.tol), "{v:?}");
        assert!(v.converged);
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let o = QuadOptions { tol: 1e-14, max_subdivisions: 3 };
        let v = integrate_finite(|t| 1.0 / t.sqrt(), 0.0, 1.0, o).unwrap();
        assert!(!v.converged);
        assert!(v.value.is_finite());
    }

    #[test]
    fn non_finite_integrand_aborts() {
        let e = integrate_finite(|t| if t > 0.5 { f64::NAN } else { 1.0 }, 0.0, 1.0, QuadOptions::default());
        assert!(matches!(e, Err(QuadratureError::NonFinite { .. })));
        assert!(integrate_finite(|t| t, 1.0, 0.0, QuadOptions::default()).is_err());
    }

    #[test]
    fn asymptotic_tails() {
        let o = QuadOptions::default();
        let t: PowerLogTerm = "r^-3".parse().unwrap();
        let v = tail_integral_asym(&t, 10.0, o).unwrap();
        assert!((v.value - 0.005).abs() < 1e-12);
        let t: PowerLogTerm = "r^-1 * log(r)^-2".parse().unwrap();
        let v = tail_integral_asym(&t, 2.0, o).unwrap();
        assert!((v.value - 1.0 / 2f64.ln()).abs() < 1e-10);
        let t: PowerLogTerm = "r^-1 * log(r)^-1 * loglog(r)^-2".parse().unwrap();
        let v = tail_integral_asym(&t, 100.0, o).unwrap();
        assert!((v.value - 1.0 / 100f64.ln().ln()).abs() < 1e-12);
        let t: PowerLogTerm = "r^-1".parse().unwrap();
        assert!(tail_integral_asym(&t, 2.0, o).is_err());
    }

    #[test]
    fn semi_infinite() {
        let o = QuadOptions::default();
        let v = integrate_semi_infinite(|x| x.powi(-2), 1.0, 1.0, o).unwrap();
        assert!((v.value - 1.0).abs() < 1e-10 && v.converged, "{v:?}");
        let v = integrate_semi_infinite(|x| (-0.05 * x).exp(), 0.0, 1.0, o).unwrap();
        assert!((v.value - 20.0).abs() < 1e-8, "{v:?}");
        let v = integrate_semi_infinite(|x| 1.0 / x, 1.0, 1.0, o).unwrap();
        assert!(!v.converged && v.value.is_infinite());
        let v = integrate_semi_infinite(|x| x.powf(-1.5), 100.0, 100.0, o).unwrap();
        assert!((v.value - 0.2).abs() < 1e-10, "{v:?}");
    }

    #[test]
    fn tail_examples() {
        let o = TailOptions::default();
        match classify_tail(|r| r.powi(-2), 1.0, &o) {
            IntegralClassification::Convergent { value, .. } => assert!(close(value, 1.0, 1e-6)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(classify_tail(|r| 1.0 / r, 1.0, &o), IntegralClassification::Divergent { .. }));
        match classify_tail(|r| 1.0 / (r * r.ln().powi(2)), 2.0, &o) {
            IntegralClassification::Convergent { value, .. } => {
                let exact = 1.0 / 2f64.ln();
                assert!((value - exact).abs() < 0.02 * exact, "{value} vs {exact}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn near_critical_is_undecided() {
        let o = TailOptions::default();
        let c = classify_tail(|r| r.powf(-1.02), 1.0, &o);
        assert!(matches!(c, IntegralClassification::Undecided { .. }), "{c:?}");
        let c = classify_tail(|r| 1.0 / (r * r.ln()), 2.0, &o);
        assert!(matches!(c, IntegralClassification::Undecided { .. }), "{c:?}");
    }

    #[test]
    fn zero_integrand_converges_to_zero() {
        let c = classify_tail(|_| 0.0, 1.0, &TailOptions::default());
        assert_eq!(c.converges(), Some(true));
    }

    #[test]
    fn divergent_rate_is_reported() {
        let c = classify_tail(|r| r.sqrt(), 1.0, &TailOptions::default());
        match c {
            IntegralClassification::Divergent { rate: Some(t) } => {
                assert_eq!(t.pow, Rational::new(3, 2));
                assert_eq!(t.logpow, Rational::from_integer(0));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fit_recovers_exact_power_log() {
        let xs: Vec<f64> = (1..=12).map(|j| j as f64 + 3.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.3 - 0.4 * x + 1.5 * x.ln()).collect();
        let m = TailModel::fit(&xs, &ys).unwrap();
        assert!((m.c - 0.3).abs() < 1e-9 && (m.slope + 0.4).abs() < 1e-10 && (m.beta - 1.5).abs() < 1e-9);
    }
}
