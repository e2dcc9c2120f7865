//! Mass, energy, action and the stationary identities.
//!
//! Everything here works for the generalised nonlinearity
//! `f(u) = a1 u^p + a2 u^q`; the plain model has `(a1, a2) = (a, 1)`.

use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    abs_pow, derivative, resample_scaled, spectral_inner, Field,
};

/// Default bound on the relative stationary residual accepted by
/// [`scaling_criterion`].
pub const STATIONARY_TOL: f64 = 1e-6;

/// Dispersion order, kept as an exact rational so that boundary cases such as
/// `p = 2 sigma + 1` are decided without rounding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sigma(Ratio<i64>);

impl Sigma {
    pub const TWO: Sigma = Sigma(Ratio::new_raw(2, 1));
    pub const ONE: Sigma = Sigma(Ratio::new_raw(1, 1));

    pub fn new(numer: i64, denom: i64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::InvalidParameter("sigma has zero denominator".into()));
        }
        Self::checked(Ratio::new(numer, denom))
    }

    /// Exact conversion of a binary fraction; 1.25 becomes 5/4. Values that
    /// are not short dyadic fractions are rejected rather than rounded.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::InvalidParameter(format!("sigma must be finite, got {x}")));
        }
        let mut denom: i64 = 1;
        while denom <= 1 << 40 {
            let scaled = x * denom as f64;
            if scaled.fract() == 0.0 {
                return Self::checked(Ratio::new(scaled as i64, denom));
            }
            denom <<= 1;
        }
        Err(Error::InvalidParameter(format!(
            "sigma = {x} is not an exact binary fraction; give it as a ratio such as \"4/3\""
        )))
    }

    fn checked(r: Ratio<i64>) -> Result<Self> {
        if r < Ratio::from_integer(1) || r > Ratio::from_integer(2) {
            return Err(Error::InvalidParameter(format!("sigma must lie in [1, 2], got {r}")));
        }
        Ok(Sigma(r))
    }

    pub fn value(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    pub fn ratio(self) -> Ratio<i64> {
        self.0
    }

    /// The L2-critical power `2 sigma + 1`.
    pub fn critical_power(self) -> Ratio<i64> {
        self.0 * 2 + 1
    }

    pub fn is_two(self) -> bool {
        self == Self::TWO
    }
}

impl fmt::Display for Sigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl std::str::FromStr for Sigma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let parse = |t: &str| {
                t.trim()
                    .parse::<i64>()
                    .map_err(|_| Error::InvalidParameter(format!("cannot parse sigma {s:?}")))
            };
            Sigma::new(parse(n)?, parse(d)?)
        } else {
            let x: f64 = s
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("cannot parse sigma {s:?}")))?;
            Sigma::from_f64(x)
        }
    }
}

impl Serialize for Sigma {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.denom().count_ones() == 1 {
            s.serialize_f64(self.value())
        } else {
            s.serialize_str(&self.to_string())
        }
    }
}

impl<'de> Deserialize<'de> for Sigma {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        let parsed = match Repr::deserialize(d)? {
            Repr::Num(x) => Sigma::from_f64(x),
            Repr::Text(t) => t.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// One instance of `D^sigma phi + c phi - a1 phi^p - a2 phi^q = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub sigma: Sigma,
    pub p: u32,
    pub q: u32,
    pub a: i8,
    pub c: f64,
    pub coeffs: (f64, f64),
}

impl ModelParams {
    pub fn new(sigma: Sigma, p: u32, q: u32, a: i8, c: f64) -> Result<Self> {
        let params = Self {
            sigma,
            p,
            q,
            a,
            c,
            coeffs: (a as f64, 1.0),
        };
        params.validate()?;
        Ok(params)
    }

    /// Shorthand for the common dyadic `sigma` values.
    pub fn model(sigma: f64, p: u32, q: u32, a: i8, c: f64) -> Result<Self> {
        Self::new(Sigma::from_f64(sigma)?, p, q, a, c)
    }

    pub fn with_coeffs(mut self, a1: f64, a2: f64) -> Result<Self> {
        self.coeffs = (a1, a2);
        self.validate()?;
        Ok(self)
    }

    pub fn with_speed(mut self, c: f64) -> Result<Self> {
        self.c = c;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 || self.q <= self.p {
            return Err(Error::InvalidParameter(format!(
                "need 2 <= p < q, got p = {}, q = {}",
                self.p, self.q
            )));
        }
        if self.a != 1 && self.a != -1 {
            return Err(Error::InvalidParameter(format!("a must be +1 or -1, got {}", self.a)));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::InvalidParameter(format!("c must be positive, got {}", self.c)));
        }
        if !(self.coeffs.0.is_finite() && self.coeffs.1.is_finite()) {
            return Err(Error::InvalidParameter("coefficients must be finite".into()));
        }
        Ok(())
    }

    pub fn sigma(&self) -> f64 {
        self.sigma.value()
    }

    /// True when the coefficients are the plain `(a, 1)`.
    pub fn is_standard(&self) -> bool {
        self.coeffs == (self.a as f64, 1.0)
    }

    /// `a1 u^p + a2 u^q`.
    pub fn nonlinearity(&self, u: f64) -> f64 {
        let up = u.powi(self.p as i32);
        self.coeffs.0 * up + self.coeffs.1 * up * u.powi((self.q - self.p) as i32)
    }

    /// Derivative of [`Self::nonlinearity`].
    pub fn nonlinearity_prime(&self, u: f64) -> f64 {
        self.coeffs.0 * self.p as f64 * u.powi(self.p as i32 - 1)
            + self.coeffs.1 * self.q as f64 * u.powi(self.q as i32 - 1)
    }

    /// `beta = (q - p)/(q - 1)`, the exponent of the lower-order coefficient
    /// after rescaling to unit speed.
    pub fn beta(&self) -> f64 {
        (self.q - self.p) as f64 / (self.q - 1) as f64
    }
}

/// Scalar diagnostics of a profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub mass: f64,
    pub energy: f64,
    pub action: f64,
    pub nehari: f64,
    pub pohozaev: f64,
    /// Closed-form second dilation derivative; meaningful on solutions only.
    pub criterion: f64,
    /// `||D^{sigma/2} u||^2`.
    pub kinetic: f64,
    /// `int u^{p+1}` and `int u^{q+1}`.
    pub power_integrals: (f64, f64),
    /// `max |S_c'(u)| / (c max |u|)`.
    pub residual: f64,
}

impl FunctionalReport {
    pub fn evaluate(u: &Field, params: &ModelParams) -> Self {
        let parts = Parts::of(u, params);
        let residual = relative_residual(u, params);
        Self {
            mass: parts.mass(),
            energy: parts.energy(params),
            action: parts.action(params),
            nehari: parts.nehari(params),
            pohozaev: parts.pohozaev(params),
            criterion: parts.criterion(params),
            kinetic: parts.kinetic,
            power_integrals: (parts.int_p, parts.int_q),
            residual,
        }
    }

    /// `|K_c|` relative to `||D^{sigma/2}u||^2 + c||u||^2`.
    pub fn nehari_relative(&self, c: f64) -> f64 {
        self.nehari.abs() / (self.kinetic + 2.0 * c * self.mass)
    }

    /// Pohozaev residual relative to `(sigma/2)||D^{sigma/2}u||^2`.
    pub fn pohozaev_relative(&self, sigma: f64) -> f64 {
        self.pohozaev.abs() / (0.5 * sigma * self.kinetic)
    }
}

/// Relative tolerance for the Nehari and Pohozaev identities.
pub fn identity_tolerance(sigma: Sigma) -> f64 {
    if sigma.is_two() {
        1e-6
    } else {
        1e-4
    }
}

struct Parts {
    kinetic: f64,
    l2: f64,
    int_p: f64,
    int_q: f64,
}

impl Parts {
    fn of(u: &Field, params: &ModelParams) -> Self {
        let (int_p, int_q) = power_integrals(u, params);
        Self {
            kinetic: kinetic(u, params.sigma()),
            l2: l2_squared(u),
            int_p,
            int_q,
        }
    }

    fn mass(&self) -> f64 {
        0.5 * self.l2
    }

    fn energy(&self, m: &ModelParams) -> f64 {
        let (a1, a2) = m.coeffs;
        0.5 * self.kinetic
            - a1 * self.int_p / (m.p + 1) as f64
            - a2 * self.int_q / (m.q + 1) as f64
    }

    fn action(&self, m: &ModelParams) -> f64 {
        self.energy(m) + m.c * self.mass()
    }

    fn nehari(&self, m: &ModelParams) -> f64 {
        let (a1, a2) = m.coeffs;
        self.kinetic + m.c * self.l2 - a1 * self.int_p - a2 * self.int_q
    }

    fn pohozaev(&self, m: &ModelParams) -> f64 {
        let (a1, a2) = m.coeffs;
        let (p, q) = (m.p as f64, m.q as f64);
        0.5 * m.sigma() * self.kinetic
            - a1 * (p - 1.0) / (2.0 * (p + 1.0)) * self.int_p
            - a2 * (q - 1.0) / (2.0 * (q + 1.0)) * self.int_q
    }

    fn criterion(&self, m: &ModelParams) -> f64 {
        let (a1, a2) = m.coeffs;
        let s = m.sigma();
        let (p, q) = (m.p as f64, m.q as f64);
        a1 * (p - 1.0) * (2.0 * s + 1.0 - p) / (4.0 * (p + 1.0)) * self.int_p
            + a2 * (q - 1.0) * (2.0 * s + 1.0 - q) / (4.0 * (q + 1.0)) * self.int_q
    }
}

fn l2_squared(u: &Field) -> f64 {
    u.grid().dx() * u.values().iter().map(|v| v * v).sum::<f64>()
}

/// `||D^{s/2} u||^2`, evaluated by Parseval.
pub fn kinetic(u: &Field, sigma: f64) -> f64 {
    let uh = u.spectrum();
    spectral_inner(u.grid(), &uh, &uh, |xi| abs_pow(xi, sigma))
}

/// `(int u^{p+1}, int u^{q+1})`.
pub fn power_integrals(u: &Field, params: &ModelParams) -> (f64, f64) {
    let dx = u.grid().dx();
    let (mut sp, mut sq) = (0.0, 0.0);
    for &v in u.values() {
        let vp = v.powi(params.p as i32 + 1);
        sp += vp;
        sq += vp * v.powi((params.q - params.p) as i32);
    }
    (dx * sp, dx * sq)
}

pub fn mass(u: &Field) -> f64 {
    0.5 * l2_squared(u)
}

pub fn energy(u: &Field, params: &ModelParams) -> f64 {
    Parts::of(u, params).energy(params)
}

pub fn action(u: &Field, params: &ModelParams) -> f64 {
    Parts::of(u, params).action(params)
}

pub fn nehari(u: &Field, params: &ModelParams) -> f64 {
    Parts::of(u, params).nehari(params)
}

pub fn pohozaev_residual(u: &Field, params: &ModelParams) -> f64 {
    Parts::of(u, params).pohozaev(params)
}

/// `D^sigma u + c u - a1 u^p - a2 u^q`.
pub fn action_gradient(u: &Field, params: &ModelParams) -> Field {
    let s = params.sigma();
    let c = params.c;
    let linear = crate::spectral::apply_even_multiplier(u, |xi| abs_pow(xi, s) + c);
    let values = linear
        .values()
        .iter()
        .zip(u.values())
        .map(|(l, &v)| l - params.nonlinearity(v))
        .collect();
    Field::from_vec_unchecked(u.grid(), values)
}

/// `max |S_c'(u)| / (c max |u|)`; unchanged by the rescaling to unit speed.
pub fn relative_residual(u: &Field, params: &ModelParams) -> f64 {
    let scale = params.c * u.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    action_gradient(u, params).max_abs() / scale
}

/// Closed-form `d^2/d lambda^2 S_c(u^lambda)` at `lambda = 1`, valid on
/// solutions. Refuses profiles whose residual exceeds [`STATIONARY_TOL`].
pub fn scaling_criterion(u: &Field, params: &ModelParams) -> Result<f64> {
    scaling_criterion_with_tol(u, params, STATIONARY_TOL)
}

pub fn scaling_criterion_with_tol(u: &Field, params: &ModelParams, tol: f64) -> Result<f64> {
    let residual = relative_residual(u, params);
    if !(residual <= tol) {
        return Err(Error::NotStationary { residual, tol });
    }
    Ok(Parts::of(u, params).criterion(params))
}

/// `lambda^{1/2} u(lambda x)` by band-limited resampling.
pub fn lambda_dilate(u: &Field, lambda: f64) -> Result<Field> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("dilation must be positive, got {lambda}")));
    }
    if lambda == 1.0 {
        return Ok(u.clone());
    }
    let out = resample_scaled(u, lambda).scaled(lambda.sqrt());
    let peak = out.max_abs();
    let edge = out.values()[0].abs().max(out.values()[out.grid().len() - 1].abs());
    if peak > 0.0 && edge > 1e-8 * peak {
        log::warn!(
            "dilated profile reaches the box edge (|u(-L)| = {edge:.2e}, peak {peak:.2e})"
        );
    }
    Ok(out)
}

/// `Lambda u = u/2 + x u'`, the generator of the dilation family.
pub fn lambda_generator(u: &Field) -> Field {
    let du = derivative(u);
    let grid = u.grid();
    let values = (0..grid.len())
        .map(|j| 0.5 * u.values()[j] + grid.node(j) * du.values()[j])
        .collect();
    Field::from_vec_unchecked(grid, values)
}

/// Centered second difference of `lambda -> S_c(u^lambda)` at `lambda = 1`.
/// Test oracle for [`scaling_criterion`].
pub fn dilation_second_difference(u: &Field, params: &ModelParams, h: f64) -> Result<f64> {
    let plus = action(&lambda_dilate(u, 1.0 + h)?, params);
    let minus = action(&lambda_dilate(u, 1.0 - h)?, params);
    Ok((plus - 2.0 * action(u, params) + minus) / (h * h))
}

/// Centered first difference of `lambda -> S_c(u^lambda)` at `lambda = 1`.
pub fn dilation_first_difference(u: &Field, params: &ModelParams, h: f64) -> Result<f64> {
    let plus = action(&lambda_dilate(u, 1.0 + h)?, params);
    let minus = action(&lambda_dilate(u, 1.0 - h)?, params);
    Ok((plus - minus) / (2.0 * h))
}

/// Second difference of `t -> S_c(t u)` at `t = 1`, i.e. `<S_c''(u) u, u>`.
pub fn amplitude_second_difference(u: &Field, params: &ModelParams, h: f64) -> f64 {
    let plus = action(&u.scaled(1.0 + h), params);
    let minus = action(&u.scaled(1.0 - h), params);
    (plus - 2.0 * action(u, params) + minus) / (h * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{l2_inner, Grid};
    use std::f64::consts::PI;

    fn sech2(x: f64) -> f64 {
        1.0 / x.cosh().powi(2)
    }

    fn linear_only(sigma: f64, c: f64) -> ModelParams {
        ModelParams::model(sigma, 2, 3, 1, c)
            .unwrap()
            .with_coeffs(0.0, 0.0)
            .unwrap()
    }

    #[test]
    fn sigma_is_exact() {
        assert_eq!(Sigma::from_f64(1.5).unwrap(), Sigma::new(3, 2).unwrap());
        assert_eq!(Sigma::from_f64(1.25).unwrap().to_string(), "5/4");
        assert_eq!("4/3".parse::<Sigma>().unwrap().critical_power(), Ratio::new(11, 3));
        assert!(Sigma::from_f64(0.5).is_err());
        assert!(Sigma::from_f64(4.0 / 3.0).is_err());
        let s: Sigma = serde_json::from_str("\"3/2\"").unwrap();
        assert_eq!(serde_json::to_string(&s).unwrap(), "1.5");
        let t: Sigma = serde_json::from_str("\"4/3\"").unwrap();
        assert_eq!(serde_json::to_string(&t).unwrap(), "\"4/3\"");
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::model(2.0, 3, 3, 1, 1.0).is_err());
        assert!(ModelParams::model(2.0, 1, 3, 1, 1.0).is_err());
        assert!(ModelParams::model(2.0, 2, 3, 0, 1.0).is_err());
        assert!(ModelParams::model(2.0, 2, 3, 1, 0.0).is_err());
        let m = ModelParams::model(2.0, 2, 3, -1, 1.0).unwrap();
        assert_eq!(m.coeffs, (-1.0, 1.0));
        assert!((m.beta() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mass_examples() {
        let g = Grid::new(10.0, 64).unwrap();
        assert_eq!(mass(&Field::zeros(&g)), 0.0);
        assert!((mass(&Field::from_fn(&g, |_| 1.0)) - 10.0).abs() < 1e-12);
        let g = Grid::new(800.0, 1 << 15).unwrap();
        let bo = Field::from_fn(&g, |x| 2.0 / (1.0 + x * x));
        assert!((mass(&bo) - PI).abs() < 1e-3);
    }

    #[test]
    fn energy_and_action_without_nonlinearity() {
        let g = Grid::new(10.0, 64).unwrap();
        let l = g.half_length();
        let eps = 0.1;
        let u = Field::from_fn(&g, |x| eps * (PI * x / l).cos());
        let m = linear_only(2.0, 1.0);
        assert_eq!(energy(&Field::zeros(&g), &m), 0.0);
        let expect = eps * eps * (PI / l).powi(2) * l / 2.0;
        assert!((energy(&u, &m) - expect).abs() < 1e-14);

        let m = linear_only(1.5, 1.0);
        let gauss = Field::from_fn(&g, |x| (-x * x).exp());
        let h = 0.5 * (kinetic(&gauss, 1.5) + l2_inner(&gauss, &gauss).unwrap());
        assert!((action(&gauss, &m) - h).abs() < 1e-13);
        let n = nehari(&gauss, &m);
        assert!(n > 0.0 && (n - 2.0 * h).abs() < 1e-13);
    }

    #[test]
    fn exact_kdv_soliton_residual_and_identities() {
        let g = Grid::new(60.0, 4096).unwrap();
        for c in [1.0, 2.0] {
            let m = ModelParams::model(2.0, 2, 3, 1, c).unwrap().with_coeffs(1.0, 0.0).unwrap();
            let u = Field::from_fn(&g, |x| 1.5 * c * sech2(c.sqrt() * x / 2.0));
            let r = action_gradient(&u, &m).max_abs();
            assert!(r <= 1e-8 * u.max_abs(), "c {c}: {r:e}");
            let rep = FunctionalReport::evaluate(&u, &m);
            assert!(rep.pohozaev.abs() <= 1e-8 * rep.kinetic);
            assert!(rep.nehari_relative(c) < 1e-10);
        }
        let m = ModelParams::model(2.0, 2, 3, 1, 1.0).unwrap();
        assert_eq!(action_gradient(&Field::zeros(&g), &m).max_abs(), 0.0);
    }

    #[test]
    fn exact_benjamin_ono_residual() {
        let g = Grid::new(800.0, 1 << 15).unwrap();
        let m = ModelParams::model(1.0, 2, 3, 1, 1.0).unwrap().with_coeffs(1.0, 0.0).unwrap();
        let u = Field::from_fn(&g, |x| 2.0 / (1.0 + x * x));
        let r = action_gradient(&u, &m).max_abs();
        assert!(r <= 1e-3 * u.max_abs(), "{r:e}");
    }

    #[test]
    fn criterion_refuses_non_solutions() {
        let g = Grid::new(20.0, 256).unwrap();
        let m = ModelParams::model(2.0, 2, 3, 1, 1.0).unwrap();
        let gauss = Field::from_fn(&g, |x| (-x * x).exp());
        assert!(matches!(
            scaling_criterion(&gauss, &m),
            Err(Error::NotStationary { .. })
        ));
    }

    #[test]
    fn dilation_examples() {
        let g = Grid::new(20.0, 512).unwrap();
        let gauss = Field::from_fn(&g, |x| (-x * x).exp());
        assert_eq!(lambda_dilate(&gauss, 1.0).unwrap().values(), gauss.values());
        assert!(lambda_dilate(&gauss, 0.0).is_err());
        assert!(lambda_dilate(&gauss, -1.0).is_err());
        let m0 = mass(&gauss);
        for lambda in [0.5, 2.0] {
            let d = lambda_dilate(&gauss, lambda).unwrap();
            assert!((mass(&d) - m0).abs() < 1e-8 * m0);
        }
        // |xi|^1.5 is not smooth at 0, so the Parseval sum needs a fine
        // wavenumber spacing to reproduce the continuum scaling law.
        let g = Grid::new(400.0, 8192).unwrap();
        let gauss = Field::from_fn(&g, |x| (-x * x).exp());
        let k0 = kinetic(&gauss, 1.5);
        for lambda in [0.8, 1.25] {
            let d = lambda_dilate(&gauss, lambda).unwrap();
            let expect = lambda.powf(1.5) * k0;
            let err = (kinetic(&d, 1.5) - expect).abs() / expect;
            assert!(err < 1e-6, "lambda {lambda}: {err:e}");
        }
    }

    #[test]
    fn generator_examples() {
        let g = Grid::new(20.0, 512).unwrap();
        let gauss = Field::from_fn(&g, |x| (-x * x).exp());
        let lu = lambda_generator(&gauss);
        let exact = Field::from_fn(&g, |x| (0.5 - 2.0 * x * x) * (-x * x).exp());
        assert!(lu.sub(&exact).unwrap().max_abs() < 1e-8);
        assert!(lu.is_even(1e-12));
        let pairing = l2_inner(&gauss, &lu).unwrap();
        assert!(pairing.abs() < 1e-6 * l2_inner(&gauss, &gauss).unwrap());
    }

    #[test]
    fn amplitude_convexity_diagnostic() {
        // For S_c(t u) with a single cubic term the second difference is exact.
        let g = Grid::new(20.0, 256).unwrap();
        let m = ModelParams::model(2.0, 2, 3, 1, 1.0).unwrap().with_coeffs(1.0, 0.0).unwrap();
        let u = Field::from_fn(&g, |x| 1.5 * sech2(x / 2.0));
        let rep = FunctionalReport::evaluate(&u, &m);
        let exact = rep.kinetic + 2.0 * rep.mass * m.c - 2.0 * rep.power_integrals.0;
        let fd = amplitude_second_difference(&u, &m, 1e-3);
        assert!((fd - exact).abs() < 1e-6 * exact.abs());
    }
}
