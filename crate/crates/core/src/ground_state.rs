//! Ground states of `D^sigma phi + c phi - a1 phi^p - a2 phi^q = 0`.
//!
//! The iteration is Petviashvili's scheme in the form that generalises to two
//! powers: each step rescales the iterate onto the Nehari manifold
//! `K_c(s phi) = 0` and then applies `(c + D^sigma)^{-1} f`. For a single power
//! `q` the rescaling factor is `M^{1/(q-1)}` with `M` the usual stabilising
//! quotient, so the step is exactly `M^{q/(q-1)} (c + D^sigma)^{-1} phi^q`.
//! A fixed quotient exponent can be requested instead through
//! [`SolverConfig::stab_exponent`].

use rustfft::num_complex::Complex;

use crate::classification::{classify_case, CaseLabel};
use crate::error::{Error, Result};
use crate::functionals::{identity_tolerance, FunctionalReport, ModelParams, Sigma};
use crate::spectral::{abs_pow, resample_scaled, sobolev_inner, Field, Grid};

#[derive(Clone, Debug)]
pub enum InitialGuess {
    /// `sign * amplitude * exp(-(x / width)^2)`.
    GaussianBump { width: f64, amplitude: f64, sign: f64 },
    /// A previous profile on the same grid (or one that resamples onto it).
    PriorSolution(Field),
    /// `sech^2(x / scale)` with the sign of the expected ground state.
    SechSquared { scale: f64 },
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub max_iter: usize,
    /// Bound on `max |S_c'(phi)| / (c max |phi|)`.
    pub tol_residual: f64,
    /// `None` selects the Nehari rescaling; `Some(gamma)` uses the quotient
    /// power `M^gamma` with `M = <L phi, phi> / <f(phi), phi>`.
    pub stab_exponent: Option<f64>,
    pub damping: f64,
    /// `None` uses a Gaussian of width `c^{-1/sigma}`.
    pub initial_guess: Option<InitialGuess>,
    /// Iterations without a 1% improvement before switching to descent.
    pub stall_window: usize,
    /// Overrides [`identity_tolerance`].
    pub identity_tol: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iter: 3000,
            tol_residual: 1e-10,
            stab_exponent: None,
            damping: 0.9,
            initial_guess: None,
            stall_window: 50,
            identity_tol: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter < 1 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        if !(self.tol_residual > 0.0) {
            return Err(Error::InvalidParameter("tol_residual must be positive".into()));
        }
        if let Some(g) = self.stab_exponent {
            if !(g > 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "stabilisation exponent must exceed 1, got {g}"
                )));
            }
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        Ok(())
    }

    pub fn with_guess(mut self, guess: InitialGuess) -> Self {
        self.initial_guess = Some(guess);
        self
    }
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub profile: Field,
    pub params: ModelParams,
    pub report: FunctionalReport,
    pub iterations: usize,
    pub converged: bool,
    pub residual_history: Vec<f64>,
}

impl GroundState {
    /// `+1` or `-1`.
    pub fn sign(&self) -> f64 {
        if self.profile.center_value() < 0.0 {
            -1.0
        } else {
            1.0
        }
    }

    /// `||phi||_{H^{sigma/2}}`.
    pub fn energy_norm(&self) -> f64 {
        let s = 0.5 * self.params.sigma();
        sobolev_inner(&self.profile, &self.profile, s)
            .expect("same grid")
            .sqrt()
    }

    /// Checks evenness, single sign and monotone modulus at relative level `tol`.
    pub fn shape_defects(&self, tol: f64) -> Vec<String> {
        shape_defects(&self.profile, tol)
    }
}

pub(crate) fn shape_defects(u: &Field, tol: f64) -> Vec<String> {
    let mut out = Vec::new();
    let peak = u.max_abs();
    let parity = u.parity_defect();
    if parity > tol * peak {
        out.push(format!("parity defect {:.3e}", parity / peak));
    }
    let sign = u.center_value().signum();
    let excursion = u
        .values()
        .iter()
        .map(|v| -sign * v)
        .fold(0.0_f64, f64::max);
    if excursion > tol * peak {
        out.push(format!("opposite-sign excursion {:.3e}", excursion / peak));
    }
    let half = &u.values()[u.grid().len() / 2..];
    let rise = half
        .windows(2)
        .map(|w| w[1].abs() - w[0].abs())
        .fold(0.0_f64, f64::max);
    if rise > tol * peak {
        out.push(format!("modulus increases by {:.3e} on x > 0", rise / peak));
    }
    out
}

/// Box used when none is given: `L = 60` at `sigma = 2`, `L = 200` below.
pub fn default_grid(sigma: Sigma) -> Grid {
    if sigma.is_two() {
        Grid::new(60.0, 2048).expect("valid")
    } else {
        Grid::new(200.0, 8192).expect("valid")
    }
}

/// `grid` with its half length divided by `c^{1/sigma}`, the profile width.
pub fn speed_adapted(grid: &Grid, sigma: f64, c: f64) -> Result<Grid> {
    grid.rescaled(c.powf(-1.0 / sigma))
}

/// Sign of the ground state promised for these coefficients, and whether the
/// case is reduced to a positive one by `phi = -psi`.
pub fn expected_sign(params: &ModelParams) -> Result<f64> {
    let (a1, a2) = params.coeffs;
    if a2 > 0.0 && a1 != 0.0 {
        let a = if a1 > 0.0 { 1 } else { -1 };
        match classify_case(params.p, params.q, a) {
            CaseLabel::Uncovered => Err(Error::UncoveredCase {
                p: params.p,
                q: params.q,
                a,
            }),
            CaseLabel::CaseII2 => Ok(-1.0),
            _ => Ok(1.0),
        }
    } else if (a2 > 0.0 && a1 == 0.0) || (a2 == 0.0 && a1 > 0.0) {
        Ok(1.0)
    } else {
        Err(Error::InvalidParameter(format!(
            "coefficients ({a1}, {a2}) give no focusing nonlinearity"
        )))
    }
}

/// Coefficients seen by `psi = -phi`.
fn negated_coeffs(params: &ModelParams) -> ModelParams {
    let flip = |r: u32, a: f64| if r.is_multiple_of(2) { -a } else { a };
    let mut out = *params;
    out.coeffs = (flip(params.p, params.coeffs.0), flip(params.q, params.coeffs.1));
    out
}

/// `psi_{1,q}`: the positive solution of `D^sigma psi + psi - psi^q = 0`.
///
/// The result is stored with `p = q`, `q + 1` in place of `q` and
/// coefficients `(1, 0)`.
pub fn solve_single_power(sigma: Sigma, q: u32, grid: &Grid, config: &SolverConfig) -> Result<GroundState> {
    let params = single_power_params(sigma, q, 1.0)?;
    solve_double_power(&params, grid, config)
}

pub fn single_power_params(sigma: Sigma, q: u32, c: f64) -> Result<ModelParams> {
    if q < 2 {
        return Err(Error::InvalidParameter(format!("power must be at least 2, got {q}")));
    }
    ModelParams::new(sigma, q, q + 1, 1, c)?.with_coeffs(1.0, 0.0)
}

/// Even, one-signed ground state for a covered case. Case II-2 is solved for
/// `psi = -phi > 0` and negated.
pub fn solve_double_power(params: &ModelParams, grid: &Grid, config: &SolverConfig) -> Result<GroundState> {
    params.validate()?;
    config.validate()?;
    let sign = expected_sign(params)?;
    let route = if sign < 0.0 { negated_coeffs(params) } else { *params };
    let init = initial_field(params, grid, config, sign)?.scaled(sign);
    let (psi, iterations, history) = iterate(&route, init, config)?;
    finish(psi.scaled(sign), params, iterations, history, config)
}

/// Iterates on the original coefficients from a guess of sign `sign`, without
/// the `phi = -psi` substitution. Kept for cross-checking case II-2.
pub fn solve_direct(params: &ModelParams, grid: &Grid, config: &SolverConfig, sign: f64) -> Result<GroundState> {
    params.validate()?;
    config.validate()?;
    let init = initial_field(params, grid, config, sign)?;
    let (phi, iterations, history) = iterate(params, init, config)?;
    finish(phi, params, iterations, history, config)
}

fn initial_field(params: &ModelParams, grid: &Grid, config: &SolverConfig, sign: f64) -> Result<Field> {
    let width = params.c.powf(-1.0 / params.sigma());
    let guess = config.initial_guess.clone().unwrap_or(InitialGuess::GaussianBump {
        width,
        amplitude: 1.0,
        sign,
    });
    let field = match guess {
        InitialGuess::GaussianBump { width, amplitude, sign: s } => {
            if !(width > 0.0 && amplitude > 0.0) {
                return Err(Error::InvalidParameter("Gaussian guess needs positive width and amplitude".into()));
            }
            if s * sign <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "initial guess sign {s} disagrees with the ground-state sign {sign}"
                )));
            }
            Field::from_fn(grid, |x| s.signum() * amplitude * (-(x / width).powi(2)).exp())
        }
        InitialGuess::SechSquared { scale } => {
            if !(scale > 0.0) {
                return Err(Error::InvalidParameter("sech^2 guess needs a positive scale".into()));
            }
            Field::from_fn(grid, |x| sign / (x / scale).cosh().powi(2))
        }
        InitialGuess::PriorSolution(prior) => {
            if prior.grid() != grid {
                return Err(Error::GridMismatch);
            }
            if prior.center_value() * sign <= 0.0 {
                return Err(Error::InvalidParameter("prior solution has the wrong sign".into()));
            }
            prior
        }
    };
    Ok(field)
}

fn finish(
    profile: Field,
    params: &ModelParams,
    iterations: usize,
    history: Vec<f64>,
    config: &SolverConfig,
) -> Result<GroundState> {
    let report = FunctionalReport::evaluate(&profile, params);
    let tol = config.identity_tol.unwrap_or_else(|| identity_tolerance(params.sigma));
    let nehari = report.nehari_relative(params.c);
    let pohozaev = report.pohozaev_relative(params.sigma());
    if !(nehari <= tol && pohozaev <= tol) {
        return Err(Error::IdentityViolation { nehari, pohozaev, tol });
    }
    let peak = profile.max_abs();
    let sign = profile.center_value().signum();
    let excursion = profile.values().iter().map(|v| -sign * v).fold(0.0_f64, f64::max);
    if excursion > 1e-8 * peak {
        return Err(Error::SignChange {
            iteration: iterations,
            excursion: excursion / peak,
        });
    }
    for defect in shape_defects(&profile, 1e-8) {
        log::warn!("ground state shape: {defect}");
    }
    let tail = spectral_tail(&profile);
    if tail > 1e-8 {
        log::warn!("ground state under-resolved: spectrum at |k| >= 3N/8 reaches {tail:.2e} of its peak");
    }
    Ok(GroundState {
        profile,
        params: *params,
        report,
        iterations,
        converged: true,
        residual_history: history,
    })
}

/// Largest `|u_k|` with `|k| >= 3N/8`, relative to the largest mode.
pub fn spectral_tail(u: &Field) -> f64 {
    let grid = u.grid();
    let spec = u.spectrum();
    let n = grid.len() as i64;
    let (mut top, mut tail) = (0.0_f64, 0.0_f64);
    for (j, z) in spec.iter().enumerate() {
        let a = z.norm();
        top = top.max(a);
        if 8 * grid.mode(j).abs() >= 3 * n {
            tail = tail.max(a);
        }
    }
    if top == 0.0 {
        0.0
    } else {
        tail / top
    }
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum Mode {
    FixedPoint,
    Descent,
}

/// Precomputed pieces of one solve.
struct Operator<'a> {
    params: &'a ModelParams,
    grid: Grid,
    symbol: Vec<f64>,
}

impl<'a> Operator<'a> {
    fn new(params: &'a ModelParams, grid: &Grid) -> Self {
        let s = params.sigma();
        let symbol = grid
            .wavenumbers()
            .iter()
            .map(|&xi| params.c + abs_pow(xi, s))
            .collect();
        Self {
            params,
            grid: grid.clone(),
            symbol,
        }
    }

    /// `<L u, u>` from the spectrum of `u`.
    fn quadratic(&self, uh: &[Complex<f64>]) -> f64 {
        let sum: f64 = uh.iter().zip(&self.symbol).map(|(z, l)| l * z.norm_sqr()).sum();
        sum * self.grid.dx() / self.grid.len() as f64
    }

    fn nonlinear(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|&v| self.params.nonlinearity(v)).collect()
    }

    /// `(int u^{p+1}, int u^{q+1})`.
    fn power_sums(&self, u: &[f64]) -> (f64, f64) {
        let (p, q) = (self.params.p as i32, self.params.q as i32);
        let (mut bp, mut bq) = (0.0, 0.0);
        for &v in u {
            let vp = v.powi(p + 1);
            bp += vp;
            bq += vp * v.powi(q - p);
        }
        (bp * self.grid.dx(), bq * self.grid.dx())
    }

    fn solve_linear(&self, rhs: &[f64]) -> Vec<f64> {
        let mut h = self.grid.forward(rhs);
        for (z, l) in h.iter_mut().zip(&self.symbol) {
            *z /= *l;
        }
        self.grid.inverse(h)
    }

    /// Relative residual `max |L u - f(u)| / (c max |u|)`.
    fn residual(&self, u: &[f64], uh: &[Complex<f64>]) -> f64 {
        let mut lu = uh.to_vec();
        for (z, l) in lu.iter_mut().zip(&self.symbol) {
            *z *= *l;
        }
        let lu = self.grid.inverse(lu);
        let peak = u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let r = lu
            .iter()
            .zip(u)
            .map(|(l, &v)| (l - self.params.nonlinearity(v)).abs())
            .fold(0.0, f64::max);
        r / (self.params.c * peak)
    }

    /// Positive `s` with `K_c(s u) = 0`.
    fn nehari_factor(&self, quad: f64, u: &[f64]) -> Option<f64> {
        let (bp, bq) = self.power_sums(u);
        let (a1, a2) = self.params.coeffs;
        let (p, q) = (self.params.p as f64, self.params.q as f64);
        let h = |s: f64| quad - a1 * bp * s.powf(p - 1.0) - a2 * bq * s.powf(q - 1.0);
        if !(quad > 0.0) {
            return None;
        }
        let mut hi = 1.0;
        let mut steps = 0;
        while h(hi) > 0.0 {
            hi *= 2.0;
            steps += 1;
            if steps > 200 {
                return None;
            }
        }
        let mut lo = hi;
        while h(lo) <= 0.0 {
            lo *= 0.5;
            steps += 1;
            if steps > 400 {
                return None;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if h(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }

    fn action_on(&self, u: &[f64], uh: &[Complex<f64>]) -> f64 {
        let (bp, bq) = self.power_sums(u);
        let (a1, a2) = self.params.coeffs;
        let (p, q) = (self.params.p as f64, self.params.q as f64);
        0.5 * self.quadratic(uh) - a1 * bp / (p + 1.0) - a2 * bq / (q + 1.0)
    }
}

fn symmetrize(grid: &Grid, u: &mut [f64]) {
    let n = grid.len();
    for j in 1..n / 2 {
        let m = 0.5 * (u[j] + u[n - j]);
        u[j] = m;
        u[n - j] = m;
    }
}

/// Runs the stabilised fixed point from `init`, whose sign is kept.
fn iterate(params: &ModelParams, init: Field, config: &SolverConfig) -> Result<(Field, usize, Vec<f64>)> {
    let grid = init.grid().clone();
    let op = Operator::new(params, &grid);
    let sign = init.center_value().signum();
    let mut u = init.into_values();
    symmetrize(&grid, &mut u);
    let start_norm = u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut history = Vec::new();
    let mut mode = Mode::FixedPoint;
    let mut step = config.damping;
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    let mut last_action = f64::INFINITY;

    for it in 0..config.max_iter {
        let mut uh = grid.forward(&u);
        let res = op.residual(&u, &uh);
        if !res.is_finite() {
            return Err(Error::Diverged {
                iteration: it,
                norm: f64::NAN,
            });
        }
        history.push(res);
        if res <= config.tol_residual {
            return Ok((Field::from_vec_unchecked(&grid, u), it, history));
        }
        if res < 0.99 * best {
            best = res;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.stall_window {
                if mode == Mode::FixedPoint {
                    log::debug!("residual stalled at {best:.3e} after {it} steps; switching to descent");
                    mode = Mode::Descent;
                    step = 0.5 * config.damping;
                } else {
                    step = (0.5 * step).max(1e-3);
                }
                since_best = 0;
                best = res;
            }
        }

        let quad = op.quadratic(&uh);
        let new = match config.stab_exponent {
            Some(gamma) if mode == Mode::FixedPoint => {
                let nl = op.nonlinear(&u);
                let pair: f64 = nl.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>() * grid.dx();
                let m = quad / pair;
                if !(m > 0.0) {
                    return Err(Error::Diverged { iteration: it, norm: m });
                }
                let w = op.solve_linear(&nl);
                let f = m.powf(gamma);
                u.iter()
                    .zip(&w)
                    .map(|(&a, &b)| (1.0 - step) * a + step * f * b)
                    .collect::<Vec<_>>()
            }
            _ => {
                let s = op.nehari_factor(quad, &u).ok_or(Error::Diverged {
                    iteration: it,
                    norm: quad,
                })?;
                for v in u.iter_mut() {
                    *v *= s;
                }
                if mode == Mode::Descent {
                    for z in uh.iter_mut() {
                        *z *= s;
                    }
                    let a = op.action_on(&u, &uh);
                    if a > last_action {
                        step = (0.5 * step).max(1e-3);
                    }
                    last_action = a;
                }
                let w = op.solve_linear(&op.nonlinear(&u));
                u.iter()
                    .zip(&w)
                    .map(|(&a, &b)| (1.0 - step) * a + step * b)
                    .collect::<Vec<_>>()
            }
        };
        u = new;
        symmetrize(&grid, &mut u);

        let norm = u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if !norm.is_finite() || norm > 1e6 * start_norm {
            return Err(Error::Diverged { iteration: it, norm });
        }
        let excursion = u.iter().map(|v| -sign * v).fold(0.0_f64, f64::max);
        if excursion > 0.5 * norm {
            return Err(Error::SignChange {
                iteration: it,
                excursion: excursion / norm,
            });
        }
    }
    let residual = history.last().copied().unwrap_or(f64::NAN);
    Err(Error::NotConverged {
        iterations: config.max_iter,
        residual,
        history,
    })
}

/// Solves at each speed in turn, warm-starting from the previous profile
/// mapped by `phi_new(x) = r^{1/(q-1)} phi_old(r^{1/sigma} x)`, `r = c_new / c_old`.
pub fn continue_in_speed(
    params: &ModelParams,
    c_list: &[f64],
    grid: &Grid,
    config: &SolverConfig,
) -> Result<Vec<GroundState>> {
    if c_list.windows(2).any(|w| !(w[0] < w[1])) || c_list.iter().any(|&c| !(c > 0.0)) {
        return Err(Error::InvalidParameter("speeds must be positive and strictly increasing".into()));
    }
    let mut out: Vec<GroundState> = Vec::with_capacity(c_list.len());
    for &c in c_list {
        let at = params.with_speed(c)?;
        let mut cfg = config.clone();
        if let Some(prev) = out.last() {
            cfg.initial_guess = Some(InitialGuess::PriorSolution(warm_start(prev, c)));
        }
        let gs = solve_double_power(&at, grid, &cfg).map_err(|e| Error::at_speed(c, e))?;
        out.push(gs);
    }
    Ok(out)
}

/// Previous solution mapped to speed `c` by the exact rescaling of the
/// dominant-power equation, on the previous grid.
pub fn warm_start(prev: &GroundState, c: f64) -> Field {
    let ratio = c / prev.params.c;
    let q = dominant_power(&prev.params) as f64;
    let lambda = ratio.powf(1.0 / prev.params.sigma());
    resample_scaled(&prev.profile, lambda).scaled(ratio.powf(1.0 / (q - 1.0)))
}

fn dominant_power(params: &ModelParams) -> u32 {
    if params.coeffs.1 != 0.0 {
        params.q
    } else {
        params.p
    }
}

/// Coefficients of the unit-speed equation solved by `phi_breve`:
/// `(a1 c^{-beta}, a2)` with `c = 1`.
pub fn breve_params(params: &ModelParams) -> ModelParams {
    let mut out = *params;
    out.coeffs.0 = params.coeffs.0 * params.c.powf(-params.beta());
    out.c = 1.0;
    out
}

/// `phi_breve(y) = c^{-1/(q-1)} phi(c^{-1/sigma} y)` on the profile's grid.
pub fn rescale_to_breve(gs: &GroundState) -> Field {
    let c = gs.params.c;
    if c == 1.0 {
        return gs.profile.clone();
    }
    let q = gs.params.q as f64;
    let lambda = c.powf(-1.0 / gs.params.sigma());
    resample_scaled(&gs.profile, lambda).scaled(c.powf(-1.0 / (q - 1.0)))
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ConvergenceRow {
    pub c: f64,
    pub distance: f64,
}

/// `||phi_breve_c - chi||_{H^{sigma/2}}` per speed, with `chi = +-psi_{1,q}`
/// carrying the sign of the ground state. Each `phi_breve_c` is computed by
/// solving the unit-speed equation directly on `grid`.
pub fn convergence_study(
    sigma: Sigma,
    p: u32,
    q: u32,
    a: i8,
    c_list: &[f64],
    grid: &Grid,
    config: &SolverConfig,
) -> Result<Vec<ConvergenceRow>> {
    if c_list.windows(2).any(|w| w[0] > w[1]) || c_list.iter().any(|&c| !(c > 0.0)) {
        return Err(Error::InvalidParameter("speeds must be positive and ascending".into()));
    }
    let base = ModelParams::new(sigma, p, q, a, 1.0)?;
    let sign = expected_sign(&base)?;
    let psi = solve_single_power(sigma, q, grid, config)?;
    let chi = psi.profile.scaled(sign);
    let s = 0.5 * sigma.value();
    c_list
        .iter()
        .map(|&c| {
            let breve = breve_params(&base.with_speed(c)?);
            let gs = solve_double_power(&breve, grid, config).map_err(|e| Error::at_speed(c, e))?;
            let diff = gs.profile.sub(&chi)?;
            Ok(ConvergenceRow {
                c,
                distance: sobolev_inner(&diff, &diff, s)?.sqrt(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::action_gradient;

    fn sigma(x: f64) -> Sigma {
        Sigma::from_f64(x).unwrap()
    }

    #[test]
    fn kdv_soliton_recovered() {
        let grid = Grid::new(60.0, 2048).unwrap();
        let gs = solve_single_power(sigma(2.0), 2, &grid, &SolverConfig::default()).unwrap();
        let exact = Field::from_fn(&grid, |x| 1.5 / (x / 2.0).cosh().powi(2));
        let err = gs.profile.sub(&exact).unwrap().max_abs() / 1.5;
        assert!(err < 1e-8, "{err:e}");
        assert!(gs.shape_defects(1e-8).is_empty());
    }

    #[test]
    fn gardner_converges_and_is_positive() {
        let grid = Grid::new(60.0, 2048).unwrap();
        let m = ModelParams::model(2.0, 2, 3, 1, 1.0).unwrap();
        let gs = solve_double_power(&m, &grid, &SolverConfig::default()).unwrap();
        assert!(gs.sign() > 0.0);
        assert!(action_gradient(&gs.profile, &m).max_abs() < 1e-9);
        assert!(gs.report.nehari_relative(1.0) < 1e-6);
        assert!(gs.report.pohozaev_relative(2.0) < 1e-6);
    }

    #[test]
    fn negative_case_is_negated_positive_case() {
        let grid = Grid::new(60.0, 2048).unwrap();
        let cfg = SolverConfig::default();
        let neg = ModelParams::model(2.0, 2, 3, -1, 1.0).unwrap();
        let gs = solve_double_power(&neg, &grid, &cfg).unwrap();
        assert!(gs.sign() < 0.0);
        let pos = ModelParams::model(2.0, 2, 3, 1, 1.0).unwrap().with_coeffs(1.0, 1.0).unwrap();
        let gp = solve_double_power(&pos, &grid, &cfg).unwrap();
        let diff = gs.profile.axpy(1.0, &gp.profile).unwrap().max_abs();
        assert!(diff < 1e-9 * gp.profile.max_abs(), "{diff:e}");
    }

    #[test]
    fn uncovered_and_bad_guess_rejected() {
        let grid = Grid::new(60.0, 256).unwrap();
        let m = ModelParams::model(2.0, 2, 4, 1, 1.0).unwrap();
        assert!(matches!(
            solve_double_power(&m, &grid, &SolverConfig::default()),
            Err(Error::UncoveredCase { p: 2, q: 4, a: 1 })
        ));
        let m = ModelParams::model(2.0, 2, 3, 1, 1.0).unwrap();
        let cfg = SolverConfig::default().with_guess(InitialGuess::GaussianBump {
            width: 1.0,
            amplitude: 1.0,
            sign: -1.0,
        });
        assert!(solve_double_power(&m, &grid, &cfg).is_err());
    }

    #[test]
    fn non_convergence_reports_history() {
        let grid = Grid::new(60.0, 1024).unwrap();
        let m = ModelParams::model(2.0, 2, 3, 1, 1.0).unwrap();
        let cfg = SolverConfig {
            max_iter: 3,
            ..SolverConfig::default()
        };
        match solve_double_power(&m, &grid, &cfg) {
            Err(Error::NotConverged { iterations, history, .. }) => {
                assert_eq!(iterations, 3);
                assert_eq!(history.len(), 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn breve_identity_at_unit_speed() {
        let grid = Grid::new(60.0, 1024).unwrap();
        let m = ModelParams::model(2.0, 2, 3, 1, 1.0).unwrap();
        let gs = solve_double_power(&m, &grid, &SolverConfig::default()).unwrap();
        assert_eq!(rescale_to_breve(&gs).values(), gs.profile.values());
        assert_eq!(breve_params(&m), m);
    }
}
