//! Resolvent kernels and tail-decay measurements.
//!
//! `G_sigma` and `K_{k,m}` are cosine transforms of slowly decaying symbols,
//! so they are computed by integrating between the zeros of `cos(xi x)` and
//! summing the resulting alternating series with an Euler transform.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{derivative, Field};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum KernelMethod {
    OscillatoryQuadrature,
    DenseTransform,
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelSample {
    pub sigma: f64,
    pub points: Vec<f64>,
    pub values: Vec<f64>,
    /// Absolute error estimate per point.
    pub errors: Vec<f64>,
    /// False where the quadrature missed its tolerance.
    pub converged: Vec<bool>,
    pub method: KernelMethod,
}

impl KernelSample {
    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }
}

/// `n` points spaced evenly in `log x` from `lo` to `hi`.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

// Kronrod 15-point nodes and weights with the embedded 7-point Gauss rule.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive bisection with a Gauss-Kronrod pair. Returns `(value, error)`.
pub fn integrate_adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> (f64, f64) {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: (f64, f64), tol: f64, depth: u32) -> (f64, f64) {
        let (v, e) = whole;
        if e <= tol || depth == 0 || (b - a).abs() < 1e-15 * a.abs().max(1e-300) {
            return (v, e);
        }
        let m = 0.5 * (a + b);
        let left = gk15(f, a, m);
        let right = gk15(f, m, b);
        let (lv, le) = rec(f, a, m, left, 0.5 * tol, depth - 1);
        let (rv, re) = rec(f, m, b, right, 0.5 * tol, depth - 1);
        (lv + rv, le + re)
    }
    let whole = gk15(f, a, b);
    let tol = abs_tol.max(rel_tol * whole.0.abs());
    rec(f, a, b, whole, tol, 40)
}

/// `int_0^inf f(xi) cos(xi x) d xi` for `x > 0`, `f` decaying at infinity.
///
/// Returns `(value, error estimate)`. The error compares two starting
/// indices of the Euler-transformed tail.
pub fn cosine_transform(f: &(dyn Fn(f64) -> f64 + Sync), x: f64) -> (f64, f64) {
    const EULER_TERMS: usize = 12;
    const K1: usize = 20;
    const K2: usize = 32;
    let period = PI / x;
    let zero = |k: usize| (k as f64 + 0.5) * period;
    let g = |xi: f64| f(xi) * (xi * x).cos();

    // First lobe [0, pi/(2x)], split geometrically when it spans many
    // scales of f.
    let mut head = 0.0;
    let mut head_err = 0.0;
    let end = zero(0);
    let mut a = 0.0;
    let mut b = end.min(1.0);
    loop {
        let (v, e) = integrate_adaptive(&g, a, b, 1e-300, 1e-14);
        head += v;
        head_err += e;
        if b >= end {
            break;
        }
        a = b;
        b = (2.0 * b).min(end);
    }

    let lobe = |k: usize| integrate_adaptive(&g, zero(k - 1), zero(k), 1e-300, 1e-14);
    let total = K2 + EULER_TERMS;
    let mut terms = Vec::with_capacity(total);
    let mut lobe_err = 0.0;
    for k in 1..=total {
        let (v, e) = lobe(k);
        terms.push(v);
        lobe_err += e;
    }
    let estimate = |start: usize| {
        let direct: f64 = terms[..start - 1].iter().sum();
        // a_j = (-1)^j T_{start+j} is the magnitude sequence of the tail.
        let s0 = if start % 2 == 1 { -1.0 } else { 1.0 };
        let mut diffs: Vec<f64> = (0..EULER_TERMS)
            .map(|j| terms[start - 1 + j] * if j % 2 == 0 { 1.0 } else { -1.0 } * s0)
            .collect();
        let mut tail = 0.0;
        let mut scale = 0.5;
        for n in 0..EULER_TERMS {
            tail += if n % 2 == 0 { scale } else { -scale } * diffs[0];
            scale *= 0.5;
            for i in 0..diffs.len() - 1 - n {
                diffs[i] = diffs[i + 1] - diffs[i];
            }
        }
        head + direct + s0 * tail
    };
    let v1 = estimate(K1);
    let v2 = estimate(K2);
    (v2, (v2 - v1).abs() + head_err + lobe_err)
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(1.0..=2.0).contains(&sigma) {
        return Err(Error::InvalidParameter(format!("sigma must lie in [1, 2], got {sigma}")));
    }
    Ok(())
}

fn check_points(points: &[f64]) -> Result<()> {
    if points.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidParameter("kernel abscissae must be positive".into()));
    }
    if points.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("kernel abscissae must increase".into()));
    }
    Ok(())
}

const KERNEL_REL_TOL: f64 = 1e-6;

fn sample_cosine(
    sigma: f64,
    points: &[f64],
    scale: f64,
    symbol: &(dyn Fn(f64) -> f64 + Sync),
) -> KernelSample {
    let out: Vec<(f64, f64)> = points
        .par_iter()
        .map(|&x| {
            let (v, e) = cosine_transform(symbol, x);
            (scale * v, scale.abs() * e)
        })
        .collect();
    let converged = out
        .iter()
        .map(|&(v, e)| e.is_finite() && e <= KERNEL_REL_TOL * v.abs().max(1e-300))
        .collect();
    KernelSample {
        sigma,
        points: points.to_vec(),
        values: out.iter().map(|p| p.0).collect(),
        errors: out.iter().map(|p| p.1).collect(),
        converged,
        method: KernelMethod::OscillatoryQuadrature,
    }
}

/// `G_sigma(x) = (1/pi) int_0^inf cos(xi x) / (1 + xi^sigma) d xi`.
pub fn compute_g(sigma: f64, points: &[f64]) -> Result<KernelSample> {
    check_sigma(sigma)?;
    check_points(points)?;
    let symbol = move |xi: f64| 1.0 / (1.0 + xi.powf(sigma));
    Ok(sample_cosine(sigma, points, 1.0 / PI, &symbol))
}

/// `g_1(x) = int_0^inf cos(xi x) / (1 + xi) d xi = pi G_1(x)`.
pub fn g1(x: f64) -> (f64, f64) {
    cosine_transform(&|xi: f64| 1.0 / (1.0 + xi), x)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OriginRow {
    pub x: f64,
    pub g1: f64,
    pub ratio: f64,
    /// `C / log(1/x)` with `C = log(pi + 1) + pi^2/4 + 1/pi`.
    pub bound: f64,
    pub converged: bool,
}

/// Constant of the deviation bound `|g_1(x)/log(1/x) - 1| <= C / log(1/x)`.
pub fn g1_origin_constant() -> f64 {
    (PI + 1.0).ln() + PI * PI / 4.0 + 1.0 / PI
}

/// `g_1(x) / log(1/x)` for `x` in `(0, 1)`.
pub fn g1_origin_check(points: &[f64]) -> Result<Vec<OriginRow>> {
    if points.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
        return Err(Error::InvalidParameter("origin check needs 0 < x < 1".into()));
    }
    Ok(points
        .par_iter()
        .map(|&x| {
            let (v, e) = g1(x);
            let log = (1.0 / x).ln();
            OriginRow {
                x,
                g1: v,
                ratio: v / log,
                bound: g1_origin_constant() / log,
                converged: e <= 1e-9 * v.abs(),
            }
        })
        .collect())
}

/// Kernel of `D^{sigma m - 2k} d_x^{2k} (1 + D^sigma)^{-1-k}`, i.e. the inverse
/// transform of `(-1)^k |xi|^{sigma m} / (1 + |xi|^sigma)^{1+k}`, normalised so
/// that convolution with it applies the multiplier.
pub fn compute_k_km(k: u32, m: u32, sigma: f64, points: &[f64], method: KernelMethod) -> Result<KernelSample> {
    check_sigma(sigma)?;
    check_points(points)?;
    if k < 1 || m < 1 || m > k {
        return Err(Error::InvalidParameter(format!("need 1 <= m <= k, got k = {k}, m = {m}")));
    }
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let symbol = move |xi: f64| {
        let s = xi.powf(sigma);
        xi.powf(sigma * m as f64) / (1.0 + s).powi(1 + k as i32)
    };
    match method {
        KernelMethod::OscillatoryQuadrature => Ok(sample_cosine(sigma, points, sign / PI, &symbol)),
        KernelMethod::DenseTransform => Ok(dense_transform(sigma, points, sign, &symbol)),
    }
}

/// Trigonometric sum of the symbol on a box of half length 400 with
/// wavenumbers up to 2500: `(1/2L) sum_k s(xi_k) cos(xi_k x)`.
fn dense_transform(sigma: f64, points: &[f64], sign: f64, symbol: &(dyn Fn(f64) -> f64 + Sync)) -> KernelSample {
    const HALF_LENGTH: f64 = 400.0;
    const XI_MAX: f64 = 2500.0;
    let dxi = PI / HALF_LENGTH;
    let modes = (XI_MAX / dxi) as usize;
    let weights: Vec<f64> = (1..=modes).map(|k| symbol(k as f64 * dxi)).collect();
    let s0 = symbol(0.0);
    let values: Vec<f64> = points
        .par_iter()
        .map(|&x| {
            let step = (dxi * x).sin_cos();
            let step = (step.1, step.0);
            let mut w = (1.0, 0.0);
            let mut acc = 0.0;
            for (k, s) in weights.iter().enumerate() {
                if k % 256 == 0 {
                    let (sn, cs) = ((k + 1) as f64 * dxi * x).sin_cos();
                    w = (cs, sn);
                }
                acc += s * w.0;
                w = (w.0 * step.0 - w.1 * step.1, w.0 * step.1 + w.1 * step.0);
            }
            sign * (s0 + 2.0 * acc) / (2.0 * HALF_LENGTH)
        })
        .collect();
    KernelSample {
        sigma,
        points: points.to_vec(),
        errors: vec![f64::NAN; values.len()],
        converged: vec![true; values.len()],
        values,
        method: KernelMethod::DenseTransform,
    }
}

/// `int_R G_sigma`, by Gauss-Kronrod on geometric panels of `[0, X]` plus
/// the algebraic tail `2 C X^{-sigma} / sigma` with `C` read off at `X`.
pub fn kernel_mass(sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let gx = |x: f64| cosine_transform(&move |xi: f64| 1.0 / (1.0 + xi.powf(sigma)), x).0 / PI;
    let mut edges = vec![0.0];
    let mut e = 1e-8;
    while e < 2e3 {
        edges.push(e);
        e *= 2.0;
    }
    // Fixed 15-point rule on each panel keeps the cost bounded; the sum runs
    // in order so the result does not depend on the thread count.
    let panels: Vec<f64> = edges.par_windows(2).map(|w| gk15(&gx, w[0], w[1]).0).collect();
    let total: f64 = panels.iter().sum();
    let x_end = *edges.last().unwrap();
    if sigma == 2.0 {
        return Ok(2.0 * total);
    }
    let plateau = x_end.powf(1.0 + sigma) * gx(x_end);
    Ok(2.0 * (total + plateau * x_end.powf(-sigma) / sigma))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TailShape {
    /// `C |x|^{exponent}`.
    Algebraic,
    /// `C exp(exponent |x|)`.
    Exponential,
}

/// How the samples relate to the free-space tail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TailModel {
    /// Samples of a function on the line.
    FreeSpace,
    /// A periodic solution on `[-L, L)`: the tail is the image sum
    /// `sum_n |x + 2nL|^{exponent}`.
    Periodic,
}

#[derive(Clone, Debug, Serialize)]
pub struct TailFit {
    pub exponent: f64,
    pub constant: f64,
    pub window: (f64, f64),
    /// Max deviation of the fitted log-profile, relative to the log-range
    /// spanned by the data in the window.
    pub residual: f64,
    pub shape: TailShape,
    /// Expected exponent `-(1 + sigma) - l`; `NaN` for exponential fits.
    pub expected: f64,
}

impl TailFit {
    pub fn relative_error(&self) -> f64 {
        ((self.exponent - self.expected) / self.expected).abs()
    }
}

/// Plateau of `x^{1+sigma} G_sigma(x)` over the top decade of the sample.
pub fn kernel_tail_constant(sample: &KernelSample) -> Result<TailFit> {
    let xs = &sample.points;
    let (first, last) = (xs[0], *xs.last().expect("non-empty"));
    if last / first < 100.0 * (1.0 - 1e-12) {
        return Err(Error::InvalidParameter("sample must span at least two decades".into()));
    }
    let lo = last / 10.0;
    let sel: Vec<(f64, f64)> = xs
        .iter()
        .zip(&sample.values)
        .filter(|(&x, _)| x >= lo * (1.0 - 1e-12))
        .map(|(&x, &v)| (x, v))
        .collect();
    let plateau: Vec<f64> = sel.iter().map(|&(x, v)| x.powf(1.0 + sample.sigma) * v).collect();
    let mean = plateau.iter().sum::<f64>() / plateau.len() as f64;
    let spread = plateau.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
        - plateau.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    let variation = spread / mean.abs();
    let positive: Vec<(f64, f64)> = sel.iter().copied().filter(|&(_, v)| v > 0.0).collect();
    let exponent = if positive.len() >= 2 {
        let (lx, ly): (Vec<f64>, Vec<f64>) = positive.iter().map(|&(x, v)| (x.ln(), v.ln())).unzip();
        linear_fit(&lx, &ly).0
    } else {
        f64::NAN
    };
    if !(variation <= 0.1) || !(mean > 0.0) {
        return Err(Error::FitRejected(format!(
            "no algebraic plateau on [{lo:.3e}, {last:.3e}]: relative variation {variation:.3e}"
        )));
    }
    Ok(TailFit {
        exponent,
        constant: mean,
        window: (lo, last),
        residual: variation,
        shape: TailShape::Algebraic,
        expected: -(1.0 + sample.sigma),
    })
}

/// Least squares `y = slope x + intercept`; returns `(slope, intercept)`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Samples of `|d^l u|` on `x > 0` inside `window`.
fn window_samples(profile: &Field, l: u32, window: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    let field = match l {
        0 => profile.clone(),
        1 => derivative(profile),
        _ => return Err(Error::InvalidParameter(format!("derivative order must be 0 or 1, got {l}"))),
    };
    let grid = profile.grid();
    let peak = field.max_abs();
    let mut out = Vec::new();
    for j in grid.len() / 2..grid.len() {
        let x = grid.node(j);
        if x >= window.0 && x <= window.1 {
            let v = field.values()[j].abs();
            if v < 100.0 * f64::EPSILON * peak {
                return Err(Error::WindowTooDeep {
                    x,
                    magnitude: v / peak,
                });
            }
            out.push((x, v));
        }
    }
    if out.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "tail window [{}, {}] holds fewer than 4 nodes",
            window.0, window.1
        )));
    }
    Ok(out)
}

/// `sum_n |x + 2nL|^{-alpha}`, or with `sgn(x + 2nL)` weights when `signed`.
fn image_sum(x: f64, half_length: f64, alpha: f64, signed: bool) -> f64 {
    const IMAGES: i32 = 200;
    let period = 2.0 * half_length;
    let mut s = 0.0;
    for n in -IMAGES..=IMAGES {
        let y = x + n as f64 * period;
        let t = y.abs().powf(-alpha);
        s += if signed { y.signum() * t } else { t };
    }
    if !signed {
        // Remaining images, by the integral of the summand.
        let far = (IMAGES as f64 + 0.5) * period;
        s += 2.0 * far.powf(1.0 - alpha) / ((alpha - 1.0) * period);
    }
    s
}

/// Power-law fit of `|d^l u|` over `window`. The exponent is found by a
/// golden-section search on the log residual, the constant in closed form.
pub fn fit_power_law(profile: &Field, sigma: f64, l: u32, window: (f64, f64), model: TailModel) -> Result<TailFit> {
    let data = window_samples(profile, l, window)?;
    let half_length = profile.grid().half_length();
    let ly: Vec<f64> = data.iter().map(|p| p.1.ln()).collect();
    let shape_log = |alpha: f64| -> Vec<f64> {
        data.iter()
            .map(|&(x, _)| match model {
                TailModel::FreeSpace => -alpha * x.ln(),
                TailModel::Periodic => image_sum(x, half_length, alpha, l == 1).abs().ln(),
            })
            .collect()
    };
    let misfit = |alpha: f64| -> (f64, f64, f64) {
        let s = shape_log(alpha);
        let log_c = ly.iter().zip(&s).map(|(y, s)| y - s).sum::<f64>() / ly.len() as f64;
        let (sq, max) = ly.iter().zip(&s).fold((0.0, 0.0_f64), |(sq, mx), (y, s)| {
            let r = y - s - log_c;
            (sq + r * r, mx.max(r.abs()))
        });
        (sq, max, log_c)
    };
    let alpha = golden_min(|a| misfit(a).0, 1.01, 30.0, 1e-10);
    let (_, max, log_c) = misfit(alpha);
    let range = ly.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)) - ly.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    Ok(TailFit {
        exponent: -alpha,
        constant: log_c.exp(),
        window,
        residual: max / range.max(f64::MIN_POSITIVE),
        shape: TailShape::Algebraic,
        expected: -(1.0 + sigma) - l as f64,
    })
}

/// Exponential fit `log |d^l u| = rate |x| + log C` over `window`.
pub fn fit_exponential(profile: &Field, l: u32, window: (f64, f64)) -> Result<TailFit> {
    let data = window_samples(profile, l, window)?;
    let x: Vec<f64> = data.iter().map(|p| p.0).collect();
    let y: Vec<f64> = data.iter().map(|p| p.1.ln()).collect();
    let (rate, intercept) = linear_fit(&x, &y);
    let max = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - rate * a - intercept).abs())
        .fold(0.0, f64::max);
    let range = y.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)) - y.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    Ok(TailFit {
        exponent: rate,
        constant: intercept.exp(),
        window,
        residual: max / range.max(f64::MIN_POSITIVE),
        shape: TailShape::Exponential,
        expected: f64::NAN,
    })
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol * (a.abs() + b.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Default window for `sigma = 2`: `[x_hi / 3, x_hi]` where `x_hi` is the
/// smaller of `0.6 L` and the point where `|u|` drops below `1e-9` of its peak.
pub fn exponential_window(profile: &Field) -> (f64, f64) {
    let grid = profile.grid();
    let peak = profile.max_abs();
    let mut x_hi = 0.6 * grid.half_length();
    for j in grid.len() / 2..grid.len() {
        if profile.values()[j].abs() < 1e-9 * peak {
            x_hi = x_hi.min(grid.node(j));
            break;
        }
    }
    (x_hi / 3.0, x_hi)
}

/// Trusted window `[0.2 L, 0.6 L]`.
pub fn algebraic_window(profile: &Field) -> (f64, f64) {
    let l = profile.grid().half_length();
    (0.2 * l, 0.6 * l)
}

/// Decay check on a computed ground state. For `sigma < 2` the algebraic
/// image-sum fit must reproduce `-(1 + sigma) - l` within 5%; for
/// `sigma = 2` the exponential fit must be linear within 2%.
pub fn fit_tail(profile: &Field, sigma: f64, l: u32, window: Option<(f64, f64)>) -> Result<TailFit> {
    fit_tail_with(profile, sigma, l, window, TailModel::Periodic)
}

/// [`fit_tail`] with an explicit tail model for the algebraic branch.
pub fn fit_tail_with(
    profile: &Field,
    sigma: f64,
    l: u32,
    window: Option<(f64, f64)>,
    model: TailModel,
) -> Result<TailFit> {
    if sigma >= 2.0 {
        let window = window.unwrap_or_else(|| exponential_window(profile));
        let fit = fit_exponential(profile, l, window)?;
        if !(fit.exponent < 0.0 && fit.residual <= 0.02) {
            return Err(Error::FitRejected(format!(
                "exponential rate {:.4} with residual {:.3e}",
                fit.exponent, fit.residual
            )));
        }
        return Ok(fit);
    }
    let window = window.unwrap_or_else(|| algebraic_window(profile));
    let fit = fit_power_law(profile, sigma, l, window, model)?;
    if !(fit.relative_error() <= 0.05) {
        return Err(Error::FitRejected(format!(
            "exponent {:.4} against expected {:.4}",
            fit.exponent, fit.expected
        )));
    }
    Ok(fit)
}
