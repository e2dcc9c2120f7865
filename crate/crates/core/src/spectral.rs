//! Periodic Fourier discretisation of the real line.
//!
//! The line is truncated to the box `[-L, L)` with `N` equispaced nodes
//! `x_j = -L + j dx`. Spectra are stored in FFT order (`k = 0, 1, ..,
//! N/2 - 1, -N/2, .., -1`) with unnormalised forward transforms; the inverse
//! carries the `1/N`. The single Nyquist mode `k = -N/2` is kept for even
//! multipliers and zeroed by odd ones.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Uniform periodic grid on `[-L, L)`.
///
/// Cloning is cheap: the FFT plans and the wavenumber table are shared.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    half_length: f64,
    n: usize,
    xi: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl Grid {
    pub const MIN_POINTS: usize = 16;

    pub fn new(half_length: f64, n: usize) -> Result<Self> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half length must be positive, got {half_length}"
            )));
        }
        if n < Self::MIN_POINTS || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "point count must be even and at least {}, got {n}",
                Self::MIN_POINTS
            )));
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let xi = (0..n)
            .map(|j| PI * signed_mode(j, n) as f64 / half_length)
            .collect();
        Ok(Self {
            inner: Arc::new(GridInner {
                half_length,
                n,
                xi,
                fft,
                ifft,
            }),
        })
    }

    pub fn half_length(&self) -> f64 {
        self.inner.half_length
    }

    pub fn len(&self) -> usize {
        self.inner.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.inner.half_length / self.inner.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.inner.half_length + j as f64 * self.dx()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.node(j)).collect()
    }

    /// Wavenumbers `pi k / L` in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.xi
    }

    /// Signed mode number of FFT slot `j`.
    pub fn mode(&self, j: usize) -> i64 {
        signed_mode(j, self.inner.n)
    }

    pub fn nyquist_slot(&self) -> usize {
        self.inner.n / 2
    }

    /// Index of the node at `-x_j`.
    pub fn mirror(&self, j: usize) -> usize {
        (self.inner.n - j) % self.inner.n
    }

    /// Same point count on the box `[-factor L, factor L)`.
    pub fn rescaled(&self, factor: f64) -> Result<Grid> {
        Grid::new(self.half_length() * factor, self.len())
    }

    pub fn forward(&self, values: &[f64]) -> Vec<C64> {
        debug_assert_eq!(values.len(), self.len());
        let mut buf: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.inner.fft.process(&mut buf);
        buf
    }

    pub fn forward_complex(&self, mut buf: Vec<C64>) -> Vec<C64> {
        self.inner.fft.process(&mut buf);
        buf
    }

    /// Inverse transform, keeping the real part.
    pub fn inverse(&self, mut spectrum: Vec<C64>) -> Vec<f64> {
        debug_assert_eq!(spectrum.len(), self.len());
        self.inner.ifft.process(&mut spectrum);
        let scale = 1.0 / self.len() as f64;
        spectrum.iter().map(|z| z.re * scale).collect()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n && self.inner.half_length == other.inner.half_length)
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("half_length", &self.half_length())
            .field("n", &self.len())
            .finish()
    }
}

fn signed_mode(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// `|xi|^s` with the conventions `|xi|^0 = 1` and `|0|^s = 0` for `s > 0`.
pub fn abs_pow(xi: f64, s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else if xi == 0.0 {
        0.0
    } else if s == 1.0 {
        xi.abs()
    } else if s == 2.0 {
        xi * xi
    } else {
        xi.abs().powf(s)
    }
}

/// A real profile sampled on a [`Grid`].
#[derive(Clone, Debug)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "field has {} samples, grid has {}",
                values.len(),
                grid.len()
            )));
        }
        check_finite(&values)?;
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub(crate) fn from_vec_unchecked(grid: &Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.len()).map(|j| f(grid.node(j))).collect();
        Self::from_vec_unchecked(grid, values)
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::from_vec_unchecked(grid, vec![0.0; grid.len()])
    }

    pub fn from_spectrum(grid: &Grid, spectrum: Vec<C64>) -> Self {
        Self::from_vec_unchecked(grid, grid.inverse(spectrum))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn spectrum(&self) -> Vec<C64> {
        self.grid.forward(&self.values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Self::from_vec_unchecked(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, factor: f64) -> Field {
        self.map(|v| factor * v)
    }

    /// `self + factor * other`.
    pub fn axpy(&self, factor: f64, other: &Field) -> Result<Field> {
        ensure_same_grid(self, other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + factor * b)
            .collect();
        Ok(Self::from_vec_unchecked(&self.grid, values))
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.axpy(-1.0, other)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `max_j |u(x_j) - u(-x_j)|`.
    pub fn parity_defect(&self) -> f64 {
        (0..self.values.len())
            .map(|j| (self.values[j] - self.values[self.grid.mirror(j)]).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_even(&self, rel_tol: f64) -> bool {
        self.parity_defect() <= rel_tol * self.max_abs()
    }

    /// Even part `(u(x) + u(-x)) / 2`.
    pub fn symmetrized(&self) -> Field {
        let v = &self.values;
        let values = (0..v.len())
            .map(|j| 0.5 * (v[j] + v[self.grid.mirror(j)]))
            .collect();
        Self::from_vec_unchecked(&self.grid, values)
    }

    /// Node value at the origin (`j = N/2`).
    pub fn center_value(&self) -> f64 {
        self.values[self.grid.len() / 2]
    }
}

pub(crate) fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

pub(crate) fn ensure_same_grid(u: &Field, v: &Field) -> Result<()> {
    if u.grid == v.grid {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Applies a real multiplier that is even in `xi`; the Nyquist mode is kept.
pub fn apply_even_multiplier(u: &Field, symbol: impl Fn(f64) -> f64) -> Field {
    let grid = u.grid();
    let mut spec = u.spectrum();
    for (z, &xi) in spec.iter_mut().zip(grid.wavenumbers()) {
        *z *= symbol(xi);
    }
    Field::from_spectrum(grid, spec)
}

/// `D^s u`, the Fourier multiplier `|xi|^s`.
pub fn fractional_derivative(u: &Field, s: f64) -> Result<Field> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "derivative order must be >= 0, got {s}"
        )));
    }
    check_finite(u.values())?;
    Ok(apply_even_multiplier(u, |xi| abs_pow(xi, s)))
}

/// Spectral first derivative; the Nyquist mode is dropped.
pub fn derivative(u: &Field) -> Field {
    let grid = u.grid();
    let mut spec = u.spectrum();
    for (z, &xi) in spec.iter_mut().zip(grid.wavenumbers()) {
        *z *= C64::new(0.0, xi);
    }
    spec[grid.nyquist_slot()] = C64::new(0.0, 0.0);
    Field::from_spectrum(grid, spec)
}

/// `u(. - y)` by a spectral phase shift.
pub fn translate(u: &Field, y: f64) -> Field {
    let grid = u.grid();
    let mut spec = u.spectrum();
    shift_spectrum(grid, &mut spec, y);
    Field::from_spectrum(grid, spec)
}

/// Multiplies a spectrum by `exp(-i xi y)`; the Nyquist mode takes the real part.
pub fn shift_spectrum(grid: &Grid, spec: &mut [C64], y: f64) {
    let nyq = grid.nyquist_slot();
    for (j, (z, &xi)) in spec.iter_mut().zip(grid.wavenumbers()).enumerate() {
        if j == nyq {
            *z *= (xi * y).cos();
        } else {
            let (s, c) = (xi * y).sin_cos();
            *z *= C64::new(c, -s);
        }
    }
}

/// Periodic trapezoid rule `dx sum_j u_j`.
pub fn integrate(u: &Field) -> f64 {
    u.grid().dx() * u.values().iter().sum::<f64>()
}

/// `(u, v)_{L^2}` by the trapezoid rule.
pub fn l2_inner(u: &Field, v: &Field) -> Result<f64> {
    ensure_same_grid(u, v)?;
    Ok(u.grid().dx() * u.values().iter().zip(v.values()).map(|(a, b)| a * b).sum::<f64>())
}

/// `H^s` inner product `(D^s u, D^s v) + (u, v)` for `s > 0`; plain `L^2` for `s = 0`.
pub fn sobolev_inner(u: &Field, v: &Field, s: f64) -> Result<f64> {
    ensure_same_grid(u, v)?;
    if s == 0.0 {
        return l2_inner(u, v);
    }
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!("Sobolev index must be >= 0, got {s}")));
    }
    let grid = u.grid();
    let uh = u.spectrum();
    let vh = v.spectrum();
    Ok(spectral_inner(grid, &uh, &vh, |xi| 1.0 + abs_pow(xi, 2.0 * s)))
}

/// `(dx / N) sum_k w(xi_k) Re(u_k conj(v_k))`, the weighted Parseval sum.
pub fn spectral_inner(grid: &Grid, uh: &[C64], vh: &[C64], weight: impl Fn(f64) -> f64) -> f64 {
    let sum: f64 = uh
        .iter()
        .zip(vh)
        .zip(grid.wavenumbers())
        .map(|((a, b), &xi)| weight(xi) * (a.re * b.re + a.im * b.im))
        .sum();
    sum * grid.dx() / grid.len() as f64
}

/// Two-thirds rule: zero every mode with `|k| > N/3`.
pub fn dealias(u: &Field) -> Field {
    let grid = u.grid();
    let mut spec = u.spectrum();
    apply_dealias(grid, &mut spec);
    Field::from_spectrum(grid, spec)
}

pub(crate) fn dealias_mask(grid: &Grid) -> Vec<bool> {
    let n = grid.len() as i64;
    (0..grid.len()).map(|j| 3 * grid.mode(j).abs() <= n).collect()
}

pub(crate) fn apply_dealias(grid: &Grid, spec: &mut [C64]) {
    let n = grid.len() as i64;
    for (j, z) in spec.iter_mut().enumerate() {
        if 3 * grid.mode(j).abs() > n {
            *z = C64::new(0.0, 0.0);
        }
    }
}

/// Samples the trigonometric interpolant of `u` at `lambda x_j`. Points
/// that land outside the box take the edge value `u(-L)`, which for a
/// localized profile is its far-field level.
///
/// With `t_j = lambda x_j + L` the interpolant phases are
/// `pi k (1 - lambda) + 2 pi k j lambda / N`, so the whole set of samples is
/// one chirp-z transform of the half spectrum, evaluated with FFTs.
pub fn resample_scaled(u: &Field, lambda: f64) -> Field {
    let grid = u.grid();
    if lambda == 1.0 {
        return u.clone();
    }
    let n = grid.len();
    let half = n / 2;
    let l = grid.half_length();
    let spec = u.spectrum();
    let d: Vec<C64> = (0..=half)
        .map(|k| {
            let weight = if k == 0 || k == half { 1.0 } else { 2.0 };
            let z = if k == half { C64::new(spec[k].re, 0.0) } else { spec[k] };
            let (s, c) = (PI * k as f64 * (1.0 - lambda)).sin_cos();
            z * C64::new(c, s) * weight
        })
        .collect();
    let sums = chirp_z(&d, n, lambda);
    let edge = u.values()[0];
    let values = (0..n)
        .map(|j| {
            if (lambda * grid.node(j)).abs() > l {
                edge
            } else {
                sums[j].re / n as f64
            }
        })
        .collect();
    Field::from_vec_unchecked(grid, values)
}

/// `X_j = sum_k d_k exp(2 pi i lambda k j / N)` for `j < n_out`, with
/// `N = n_out`, by Bluestein's identity `kj = (k^2 + j^2 - (j - k)^2) / 2`.
fn chirp_z(d: &[C64], n_out: usize, lambda: f64) -> Vec<C64> {
    let m = (d.len() + n_out - 1).next_power_of_two();
    let two_n = 2 * n_out as u64;
    // exp(i pi lambda n^2 / N), reducing n^2 modulo 2N first so that the
    // phase stays small when lambda is close to 1.
    let chirp = |idx: usize| {
        let sq = (idx as u64) * (idx as u64);
        let (a, r) = (sq / two_n, sq % two_n);
        let turns = ((lambda - 1.0) * a as f64).fract();
        let ang = 2.0 * PI * turns + PI * lambda * r as f64 / n_out as f64;
        let (s, c) = ang.sin_cos();
        C64::new(c, s)
    };
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    let ifft = planner.plan_fft_inverse(m);
    let zero = C64::new(0.0, 0.0);
    let mut a = vec![zero; m];
    for (k, z) in d.iter().enumerate() {
        a[k] = z * chirp(k);
    }
    let mut b = vec![zero; m];
    for idx in 0..n_out {
        b[idx] = chirp(idx).conj();
    }
    for idx in 1..d.len() {
        b[m - idx] = chirp(idx).conj();
    }
    fft.process(&mut a);
    fft.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    ifft.process(&mut a);
    let scale = 1.0 / m as f64;
    (0..n_out).map(|j| chirp(j) * a[j] * scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(10.0, 64).unwrap()
    }

    fn max_diff(a: &Field, b: &Field) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(Grid::new(1.0, 15).is_err());
        assert!(Grid::new(1.0, 8).is_err());
        assert!(Grid::new(0.0, 32).is_err());
        assert!(Grid::new(-1.0, 32).is_err());
        let g = Grid::new(3.0, 48).unwrap();
        assert_eq!(g.dx() * 48.0, 6.0);
        assert_eq!(g.mode(24), -24);
        assert_eq!(g.mirror(0), 0);
        assert_eq!(g.node(g.mirror(5)), -g.node(5));
    }

    #[test]
    fn wavenumbers_symmetric_except_nyquist() {
        let g = grid();
        let xi = g.wavenumbers();
        let n = g.len();
        for k in 1..n / 2 {
            assert_eq!(xi[k], -xi[n - k]);
        }
        assert_eq!(xi[n / 2], -PI * (n / 2) as f64 / g.half_length());
    }

    #[test]
    fn single_mode_derivatives() {
        let g = grid();
        let k = PI / g.half_length();
        let u = Field::from_fn(&g, |x| (k * x).cos());
        let d2 = fractional_derivative(&u, 2.0).unwrap();
        assert!(max_diff(&d2, &u.scaled(k * k)) < 1e-12);
        let d1 = fractional_derivative(&u, 1.0).unwrap();
        assert!(max_diff(&d1, &u.scaled(k)) < 1e-12);
        let one = Field::from_fn(&g, |_| 1.0);
        for s in [0.5, 1.0, 1.7] {
            assert!(fractional_derivative(&one, s).unwrap().max_abs() < 1e-14);
        }
    }

    #[test]
    fn nonfinite_input_rejected() {
        let g = grid();
        let mut v = vec![0.0; g.len()];
        v[3] = f64::NAN;
        assert!(matches!(Field::new(&g, v.clone()), Err(Error::NonFinite { index: 3 })));
        let bad = Field::from_vec_unchecked(&g, v);
        assert!(fractional_derivative(&bad, 1.0).is_err());
    }

    #[test]
    fn second_power_matches_second_derivative_exactly() {
        let g = grid();
        let u = Field::from_fn(&g, |x| (-x * x / 2.0).exp());
        let a = fractional_derivative(&u, 2.0).unwrap();
        let b = apply_even_multiplier(&u, |xi| xi * xi);
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn translation_examples() {
        let g = grid();
        let l = g.half_length();
        let u = Field::from_fn(&g, |x| (PI * x / l).cos());
        assert!(max_diff(&translate(&u, 0.0), &u) < 1e-15);
        assert!(max_diff(&translate(&u, l), &u.scaled(-1.0)) < 1e-13);

        // A Gaussian shifted by one cell equals the index-rolled samples.
        let g = Grid::new(20.0, 256).unwrap();
        let gauss = Field::from_fn(&g, |x| (-x * x).exp());
        let shifted = translate(&gauss, g.dx());
        let n = g.len();
        let rolled: Vec<f64> = (0..n).map(|j| gauss.values()[(j + n - 1) % n]).collect();
        let rolled = Field::new(&g, rolled).unwrap();
        assert!(max_diff(&shifted, &rolled) <= 1e-10 * gauss.max_abs());
    }

    #[test]
    fn integrate_examples() {
        let g = grid();
        let l = g.half_length();
        let one = Field::from_fn(&g, |_| 1.0);
        assert!((integrate(&one) - 2.0 * l).abs() < 1e-12);
        let c = Field::from_fn(&g, |x| (PI * x / l).cos());
        assert!(integrate(&c).abs() < 1e-12 * l);
        let g = Grid::new(20.0, 512).unwrap();
        let gauss = Field::from_fn(&g, |x| (-x * x).exp());
        assert!((integrate(&gauss) - PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn sobolev_inner_examples() {
        let g = grid();
        let l = g.half_length();
        let c = Field::from_fn(&g, |x| (PI * x / l).cos());
        let s = Field::from_fn(&g, |x| (PI * x / l).sin());
        for order in [0.0, 0.5, 1.0, 2.0] {
            assert!(sobolev_inner(&c, &s, order).unwrap().abs() < 1e-12);
        }
        let expect = (1.0 + (PI / l).powi(2)) * l;
        assert!((sobolev_inner(&c, &c, 1.0).unwrap() - expect).abs() < 1e-12 * expect);
        assert!(sobolev_inner(&c, &c, 0.0).unwrap() > 0.0);
        assert_eq!(sobolev_inner(&Field::zeros(&g), &Field::zeros(&g), 0.0).unwrap(), 0.0);

        let other = Grid::new(11.0, 64).unwrap();
        assert!(matches!(
            sobolev_inner(&c, &Field::zeros(&other), 1.0),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn dealias_examples() {
        let g = Grid::new(PI, 48).unwrap();
        let band = Field::from_fn(&g, |x| (3.0 * x).cos() + (16.0 * x).sin());
        assert!(max_diff(&dealias(&band), &band) < 1e-13);
        let nyquist = Field::from_fn(&g, |x| (24.0 * x).cos());
        assert!(dealias(&nyquist).max_abs() < 1e-14);

        // cos^2 at k = N/4 puts its harmonic on the Nyquist mode.
        let quarter = Field::from_fn(&g, |x| (12.0 * x).cos());
        let sq = quarter.map(|v| v * v);
        let before = sq.spectrum()[g.nyquist_slot()].norm();
        assert!(before > 1.0);
        let after = dealias(&sq).spectrum()[g.nyquist_slot()].norm();
        assert!(after < 1e-12);
        assert!((integrate(&dealias(&sq)) - integrate(&sq)).abs() < 1e-12);
    }

    #[test]
    fn resample_matches_analytic_gaussian() {
        let g = Grid::new(20.0, 256).unwrap();
        let gauss = Field::from_fn(&g, |x| (-x * x).exp());
        for lambda in [0.5, 0.9, 1.3, 2.0] {
            let r = resample_scaled(&gauss, lambda);
            let exact = Field::from_fn(&g, |x| (-(lambda * x).powi(2)).exp());
            assert!(max_diff(&r, &exact) < 1e-12, "lambda {lambda} {}", max_diff(&r, &exact));
        }
    }

    #[test]
    fn symmetrize_and_parity() {
        let g = grid();
        let u = Field::from_fn(&g, |x| (-x * x).exp() + 0.1 * x * (-x * x).exp());
        assert!(!u.is_even(1e-10));
        assert!(u.symmetrized().is_even(1e-15));
    }
}
