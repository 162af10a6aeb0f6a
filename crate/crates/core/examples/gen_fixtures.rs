//! Regenerates `fixtures/e2_*.toml`.
//!
//! Each fixture pairs a closed-form radial witness with `q = alpha * shape`.
//! The witness is a supersolution exactly when
//!
//! ```text
//! alpha <= ratio(r) = (Delta_p u + b |u'|^(p-1)) / (shape(r) g(u))
//! ```
//!
//! for every sampled radius, so `alpha_max` is the minimum of `ratio` over
//! the verification range. The shipped constant is `alpha_max / 2` rounded
//! down to four significant digits; ten times that exceeds `alpha_max`.
//!
//! All derivatives below are worked out by hand for `p = 2`, `n = 3`, where
//! `Delta_p u = u'' + 2 u' / r`. Nothing from the library is used.
//!
//! Usage: `cargo run --example gen_fixtures [-- OUT_DIR]`

use std::fmt::Write as _;
use std::path::PathBuf;

const SAMPLES: usize = 10_000;
const SPAN: f64 = 1e6;

struct Fixture {
    name: &'static str,
    comment: &'static str,
    r0: f64,
    b: &'static str,
    /// `q` without its constant.
    shape: &'static str,
    g: &'static str,
    /// `ratio(r)` for `b` with unit coefficient.
    ratio: fn(f64) -> f64,
}

/// `u = r`: `Delta u = 2/r`, `b u' = 1`, `shape g(u) = r^-2 r^2 = 1`.
fn ratio_power(r: f64) -> f64 {
    2.0 / r + 1.0
}

/// `u = log r`: `Delta u = 1/r^2`, `b u' = 1/r`,
/// `shape g(u) = r^-1 log^-2 r log^2 r = 1/r`.
fn ratio_log_q(r: f64) -> f64 {
    (1.0 / (r * r) + 1.0 / r) * r
}

/// `u = exp(r^(1/2))`, divided through by `u`:
/// `Delta u / u = 1/(4r) + 3/(4 r^(3/2))`, `b u'/u = 1/(2 r^(1/2))`,
/// `shape g(u)/u = r^-2 log^3(1 + u)` with `log(1 + u) = s + ln(1 + e^-s)`.
fn ratio_exp(r: f64) -> f64 {
    let s = r.sqrt();
    let lhs = 0.25 / r + 0.75 / (r * s) + 0.5 / s;
    let log1pu = s + (-s).exp().ln_1p();
    lhs / (log1pu.powi(3) / (r * r))
}

/// `u = log r`, `b = r^-1 log^2 r`: `Delta u = 1/r^2`,
/// `b u' = log^2 r / r^2`, `shape g(u) = r^-2 log^2 r`.
fn ratio_log_b(r: f64) -> f64 {
    let l = r.ln();
    (1.0 + l * l) / (l * l)
}

fn radii(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
}

fn floor_sig(x: f64, digits: i32) -> f64 {
    let e = x.log10().floor() as i32;
    let unit = 10f64.powi(e - digits + 1);
    // guard against 0.49999.. style representation drift
    ((x / unit) + 1e-9).floor() * unit
}

fn main() {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    std::fs::create_dir_all(&out).expect("create output directory");

    let fixtures = [
        Fixture {
            name: "e2_1",
            comment: "power-law witness u = max(r, r0): lambda = 2, k = 0, l = -2",
            r0: 1.0,
            b: "1 * r^0",
            shape: "r^-2",
            g: "kind = \"power\"\nlambda = 2",
            ratio: ratio_power,
        },
        Fixture {
            name: "e2_2",
            comment: "log witness u = log max(r, r0): lambda = 2, k = 0, l = -1, mu = -2",
            r0: 3.0,
            b: "1 * r^0",
            shape: "r^-1 * log(r)^-2",
            g: "kind = \"power\"\nlambda = 2",
            ratio: ratio_log_q,
        },
        Fixture {
            name: "e2_3",
            comment: "exponential witness u = exp(max(r, r0)^(1/2)): g = t log^3(1+t), k = 0, l = -2",
            r0: 1.0,
            b: "1 * r^0",
            shape: "r^-2",
            g: "kind = \"critical-log\"\nlambda = 3",
            ratio: ratio_exp,
        },
        Fixture {
            name: "e2_4",
            comment: "log witness u = log max(r, r0) against b = r^-1 log^2 r: lambda = 2, k = -1, m = 2, l = -2",
            r0: 3.0,
            b: "1 * r^-1 * log(r)^2",
            shape: "r^-2",
            g: "kind = \"power\"\nlambda = 2",
            ratio: ratio_log_b,
        },
    ];

    for f in &fixtures {
        // the witness is smooth from just past r0 on
        let lo = f.r0 * (1.0 + 1e-6);
        let hi = f.r0 * SPAN;
        let alpha_max = radii(lo, hi, SAMPLES).map(f.ratio).fold(f64::INFINITY, f64::min);
        let alpha = floor_sig(alpha_max / 2.0, 4);
        assert!(10.0 * alpha > alpha_max, "{}: 10 alpha must break the witness", f.name);

        let mut text = String::new();
        writeln!(text, "# generated by `cargo run --example gen_fixtures`; do not edit").unwrap();
        writeln!(text, "# {}", f.comment).unwrap();
        writeln!(text, "# alpha_max = {alpha_max:.10} over [{lo}, {hi}], alpha = alpha_max / 2 to 4 digits").unwrap();
        writeln!(text, "name = \"{}\"", f.name).unwrap();
        writeln!(text, "tasks = [\"classify\", \"verify\"]\n").unwrap();
        writeln!(text, "[problem]\np = 2\nn = 3\nr0 = {:?}\n", f.r0).unwrap();
        writeln!(text, "[b]\nterm = \"{}\"\n", f.b).unwrap();
        writeln!(text, "[q]\nterm = \"{alpha} * {}\"\n", f.shape).unwrap();
        writeln!(text, "[g]\n{}\n", f.g).unwrap();
        writeln!(text, "[verify]\nr_hi = {hi:e}\nsamples = {SAMPLES}").unwrap();

        let path = out.join(format!("{}.toml", f.name));
        std::fs::write(&path, text).expect("write fixture");
        println!("{}: alpha_max = {alpha_max:.6}, alpha = {alpha}", path.display());
    }
}
