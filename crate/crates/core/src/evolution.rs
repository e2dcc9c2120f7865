//! Time integration of `u_t + (a1 u^p + a2 u^q)_x - (D^sigma u)_x = 0` and
//! the orbital diagnostics around a ground state.
//!
//! In Fourier space `u_t = L u + N(u)` with `L = i xi |xi|^sigma` and
//! `N(u) = -i xi F[f(u)]`, so a profile solving `D^sigma phi + c phi = f(phi)`
//! moves right at speed `c`. The stiff linear part is propagated exactly by
//! fourth-order exponential time differencing.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{action, energy, lambda_dilate, lambda_generator, mass, ModelParams};
use crate::ground_state::GroundState;
use crate::spectral::{
    abs_pow, dealias_mask, l2_inner, shift_spectrum, spectral_inner, Field, Grid, C64,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Perturbation {
    /// Start from `phi^{1 - mu}`.
    Dilation { mu: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_end: f64,
    pub dealias: bool,
    /// Diagnostics every this many steps.
    pub sample_stride: usize,
    pub perturbation: Option<Perturbation>,
    /// Integrate in the frame moving right at this speed.
    pub frame_speed: f64,
    /// Tube radius as a fraction of `||phi||_{H^{sigma/2}}`.
    pub tube_epsilon: f64,
    /// Virial cutoff scale; `None` picks `max(10, 5/sqrt(c))`, capped at `0.45 L`.
    pub virial_scale: Option<f64>,
    /// Times at which the field is stored.
    pub snapshot_times: Vec<f64>,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            dt: 0.01,
            t_end: 10.0,
            dealias: true,
            sample_stride: 10,
            perturbation: None,
            frame_speed: 0.0,
            tube_epsilon: 0.1,
            virial_scale: None,
            snapshot_times: Vec::new(),
        }
    }
}

/// Above this value of `dt * xi_max * max|f'(u0)|`, with `xi_max` the largest
/// retained wavenumber, the explicit nonlinear stages are under-resolved.
pub const NONLINEAR_CFL_LIMIT: f64 = 2.0;

/// Relative conservation drift that triggers an accuracy warning.
pub const DRIFT_WARNING: f64 = 1e-6;

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= self.dt && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter("t_end must be at least dt".into()));
        }
        if self.sample_stride == 0 {
            return Err(Error::InvalidParameter("sample_stride must be positive".into()));
        }
        if !(self.tube_epsilon > 0.0) {
            return Err(Error::InvalidParameter("tube_epsilon must be positive".into()));
        }
        if let Some(Perturbation::Dilation { mu }) = self.perturbation {
            if !(mu.abs() <= 0.05) {
                return Err(Error::InvalidParameter(format!("|mu| must not exceed 0.05, got {mu}")));
            }
        }
        if !self.frame_speed.is_finite() {
            return Err(Error::InvalidParameter("frame_speed must be finite".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub energy_drift: Vec<f64>,
    pub mass_drift: Vec<f64>,
    /// Modulation shift in the laboratory frame, unwrapped in time.
    pub shift: Vec<f64>,
    pub tube_distance: Vec<f64>,
    pub virial: Vec<f64>,
    pub exit_time: Option<f64>,
    /// Time of the last valid sample when the run stopped on a non-finite state.
    pub blow_up: Option<f64>,
    pub modulation_lost_at: Option<f64>,
    pub nonlinear_cfl: f64,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub snapshots: Vec<(f64, Field)>,
    #[serde(skip)]
    pub final_state: Option<Field>,
}

impl Trajectory {
    pub fn max_drift(&self) -> f64 {
        self.energy_drift
            .iter()
            .chain(&self.mass_drift)
            .fold(0.0, |m, d| m.max(d.abs()))
    }

    pub fn max_tube_distance(&self) -> f64 {
        self.tube_distance.iter().fold(0.0, |m, &d| m.max(d))
    }
}

/// Fourth-order ETD Runge-Kutta stepper for a diagonal linear part.
struct Etdrk4 {
    grid: Grid,
    e: Vec<C64>,
    e2: Vec<C64>,
    q: Vec<C64>,
    f1: Vec<C64>,
    f2: Vec<C64>,
    f3: Vec<C64>,
    /// `-i xi`, zeroed on removed modes.
    flux: Vec<C64>,
    params: ModelParams,
}

impl Etdrk4 {
    fn new(grid: &Grid, params: &ModelParams, dt: f64, frame_speed: f64, dealias: bool) -> Self {
        const CONTOUR: usize = 32;
        let sigma = params.sigma();
        let nyq = grid.nyquist_slot();
        let keep = dealias_mask(grid);
        let n = grid.len();
        let mut st = Etdrk4 {
            grid: grid.clone(),
            e: Vec::with_capacity(n),
            e2: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            f1: Vec::with_capacity(n),
            f2: Vec::with_capacity(n),
            f3: Vec::with_capacity(n),
            flux: Vec::with_capacity(n),
            params: *params,
        };
        for (j, &xi) in grid.wavenumbers().iter().enumerate() {
            let odd_ok = j != nyq;
            let l = if odd_ok {
                C64::new(0.0, xi * (abs_pow(xi, sigma) + frame_speed))
            } else {
                C64::new(0.0, 0.0)
            };
            let hl = l * dt;
            st.e.push(hl.exp());
            st.e2.push((hl * 0.5).exp());
            let (mut q, mut f1, mut f2, mut f3) = (C64::default(), C64::default(), C64::default(), C64::default());
            for m in 0..CONTOUR {
                let root = C64::from_polar(1.0, PI * (m as f64 + 0.5) / CONTOUR as f64);
                // Full circle: the conjugate half is needed since hl is imaginary.
                for r in [hl + root, hl - root] {
                    let er = r.exp();
                    let r3 = r * r * r;
                    q += ((r * 0.5).exp() - 1.0) / r;
                    f1 += (-4.0 - r + er * (4.0 - 3.0 * r + r * r)) / r3;
                    f2 += (2.0 + r + er * (r - 2.0)) / r3;
                    f3 += (-4.0 - 3.0 * r - r * r + er * (4.0 - r)) / r3;
                }
            }
            let w = dt / (2 * CONTOUR) as f64;
            st.q.push(q * w);
            st.f1.push(f1 * w);
            st.f2.push(f2 * w);
            st.f3.push(f3 * w);
            let active = odd_ok && (!dealias || keep[j]);
            st.flux.push(if active { C64::new(0.0, -xi) } else { C64::default() });
        }
        st
    }

    fn nonlinear(&self, v: &[C64]) -> Vec<C64> {
        let u = self.grid.inverse(v.to_vec());
        let f: Vec<f64> = u.iter().map(|&x| self.params.nonlinearity(x)).collect();
        let mut fh = self.grid.forward(&f);
        for (z, g) in fh.iter_mut().zip(&self.flux) {
            *z *= g;
        }
        fh
    }

    fn step(&self, v: &mut [C64]) {
        let nv = self.nonlinear(v);
        let a: Vec<C64> = (0..v.len()).map(|k| self.e2[k] * v[k] + self.q[k] * nv[k]).collect();
        let na = self.nonlinear(&a);
        let b: Vec<C64> = (0..v.len()).map(|k| self.e2[k] * v[k] + self.q[k] * na[k]).collect();
        let nb = self.nonlinear(&b);
        let c: Vec<C64> = (0..v.len())
            .map(|k| self.e2[k] * a[k] + self.q[k] * (2.0 * nb[k] - nv[k]))
            .collect();
        let nc = self.nonlinear(&c);
        for k in 0..v.len() {
            v[k] = self.e[k] * v[k]
                + nv[k] * self.f1[k]
                + 2.0 * (na[k] + nb[k]) * self.f2[k]
                + nc[k] * self.f3[k];
        }
    }
}

/// Diagnostics relative to a fixed ground state.
pub struct Orbit<'a> {
    phi: &'a GroundState,
    phi_hat: Vec<C64>,
    dphi_hat: Vec<C64>,
    norm: f64,
    weight: Option<Field>,
}

impl<'a> Orbit<'a> {
    pub fn new(phi: &'a GroundState, virial_scale: Option<f64>) -> Result<Self> {
        let phi_hat = phi.profile.spectrum();
        let dphi_hat = derivative_spectrum(phi.profile.grid(), &phi_hat);
        let weight = match virial_scale {
            Some(a) => Some(build_virial(phi, a)?),
            None => None,
        };
        Ok(Orbit {
            phi,
            norm: phi.energy_norm(),
            phi_hat,
            dphi_hat,
            weight,
        })
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }
}

fn derivative_spectrum(grid: &Grid, spec: &[C64]) -> Vec<C64> {
    let nyq = grid.nyquist_slot();
    spec.iter()
        .zip(grid.wavenumbers())
        .enumerate()
        .map(|(j, (z, &xi))| if j == nyq { C64::default() } else { z * C64::new(0.0, xi) })
        .collect()
}

/// Spectrum of `u(. + y)`.
fn advanced(grid: &Grid, spec: &[C64], y: f64) -> Vec<C64> {
    let mut out = spec.to_vec();
    shift_spectrum(grid, &mut out, -y);
    out
}

fn wrap(y: f64, half_length: f64) -> f64 {
    let period = 2.0 * half_length;
    let r = (y + half_length).rem_euclid(period) - half_length;
    if r <= -half_length {
        r + period
    } else {
        r
    }
}

/// Grid shift maximising the weighted cross-correlation `int w u(x + y) phi(x)`.
/// Returns the shift and whether a second local maximum comes within 90%.
fn correlation_peak(grid: &Grid, uh: &[C64], vh: &[C64], weight: impl Fn(f64) -> f64) -> (f64, f64, bool) {
    let prod: Vec<C64> = uh
        .iter()
        .zip(vh)
        .zip(grid.wavenumbers())
        .map(|((a, b), &xi)| a * b.conj() * weight(xi))
        .collect();
    // inverse gives sum_k a_k conj(b_k) e^{i xi_k x_j} / N, the correlation at y = x_j + L.
    let corr = grid.inverse(prod);
    let n = grid.len();
    let (mut best, mut jbest) = (f64::NEG_INFINITY, 0);
    for (j, &c) in corr.iter().enumerate() {
        if c > best {
            best = c;
            jbest = j;
        }
    }
    let mut second = f64::NEG_INFINITY;
    for j in 0..n {
        let (l, r) = (corr[(j + n - 1) % n], corr[(j + 1) % n]);
        let c = corr[j];
        let dist = (j as i64 - jbest as i64).rem_euclid(n as i64).min((jbest as i64 - j as i64).rem_euclid(n as i64));
        if c >= l && c >= r && dist > 2 {
            second = second.max(c);
        }
    }
    let y = wrap(grid.node(jbest) + grid.half_length(), grid.half_length());
    (y, best, best > 0.0 && second > 0.9 * best)
}

/// Shift `z` with `(u(. + z), phi')_{L^2} = 0`, found by safeguarded Newton
/// from the correlation peak. Result lies in `(-L, L]`.
pub fn modulation_shift(u: &Field, phi: &GroundState) -> Result<f64> {
    let uh = u.spectrum();
    let orbit = Orbit::new(phi, None)?;
    modulation_from_spectrum(u.grid(), &uh, &orbit)
}

fn modulation_from_spectrum(grid: &Grid, uh: &[C64], orbit: &Orbit) -> Result<f64> {
    if grid != orbit.phi.profile.grid() {
        return Err(Error::GridMismatch);
    }
    let one = |_: f64| 1.0;
    let l = grid.half_length();
    let (y0, peak, _) = correlation_peak(grid, uh, &orbit.phi_hat, one);
    if !(peak > 0.0) {
        return Err(Error::ModulationLost("no positive correlation with the ground state".into()));
    }
    let duh = derivative_spectrum(grid, uh);
    let g = |y: f64| spectral_inner(grid, &advanced(grid, uh, y), &orbit.dphi_hat, one);
    let dg = |y: f64| spectral_inner(grid, &advanced(grid, &duh, y), &orbit.dphi_hat, one);
    let scale = (spectral_inner(grid, uh, uh, one) * spectral_inner(grid, &orbit.dphi_hat, &orbit.dphi_hat, one)).sqrt();
    // g = -C' for the correlation C, so g increases through a peak of C.
    let mut width = grid.dx();
    let (mut lo, mut hi) = (y0 - width, y0 + width);
    while !(g(lo) < 0.0 && g(hi) > 0.0) {
        width *= 2.0;
        if width > 16.0 * grid.dx() {
            return Err(Error::ModulationLost(format!(
                "orthogonality condition not bracketed near y = {y0:.4}"
            )));
        }
        lo = y0 - width;
        hi = y0 + width;
    }
    let mut y = y0;
    for _ in 0..50 {
        let gy = g(y);
        if gy.abs() <= 1e-13 * scale {
            let u_aligned = advanced(grid, uh, y);
            check_neighbourhood(grid, &u_aligned, orbit)?;
            return Ok(wrap(y, l));
        }
        if gy < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let d = dg(y);
        let mut next = y - gy / d;
        if !(next > lo && next < hi) || !d.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - y).abs() <= 1e-14 * (1.0 + y.abs()) {
            return Ok(wrap(next, l));
        }
        y = next;
    }
    Err(Error::ModulationLost("Newton iteration did not converge in 50 steps".into()))
}

/// The modulated state must stay within `||phi||_{L^2}` of `phi`.
fn check_neighbourhood(grid: &Grid, aligned: &[C64], orbit: &Orbit) -> Result<()> {
    let diff: Vec<C64> = aligned.iter().zip(&orbit.phi_hat).map(|(a, b)| a - b).collect();
    let one = |_: f64| 1.0;
    let d = spectral_inner(grid, &diff, &diff, one).sqrt();
    let r = spectral_inner(grid, &orbit.phi_hat, &orbit.phi_hat, one).sqrt();
    if d > r {
        return Err(Error::ModulationLost(format!(
            "L2 distance {d:.3e} to the aligned ground state exceeds its norm {r:.3e}"
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TubeMeasure {
    pub distance: f64,
    /// Minimising translation `y` of `phi(. - y)`.
    pub shift: f64,
    /// A second correlation peak within 90% of the best.
    pub multimodal: bool,
}

/// `inf_y ||u - phi(. - y)||_{H^{sigma/2}}`.
pub fn tube_distance(u: &Field, phi: &GroundState) -> Result<TubeMeasure> {
    let orbit = Orbit::new(phi, None)?;
    if u.grid() != phi.profile.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(tube_from_spectrum(u.grid(), &u.spectrum(), &orbit))
}

fn tube_from_spectrum(grid: &Grid, uh: &[C64], orbit: &Orbit) -> TubeMeasure {
    let sigma = orbit.phi.params.sigma();
    let w = |xi: f64| 1.0 + abs_pow(xi, sigma);
    let (y0, peak, multimodal) = correlation_peak(grid, uh, &orbit.phi_hat, w);
    if !(peak > 0.0) {
        // No alignment helps; any shift gives at least ||u||^2 + ||phi||^2.
        let d = (spectral_inner(grid, uh, uh, w) + orbit.norm * orbit.norm).sqrt();
        let d0 = sq_distance(grid, uh, &orbit.phi_hat, 0.0, &w).sqrt();
        return TubeMeasure {
            distance: d0.min(d),
            shift: 0.0,
            multimodal,
        };
    }
    // phi(. - y) pairs with u(. + y) at offset y.
    let f = |y: f64| sq_distance(grid, uh, &orbit.phi_hat, y, &w);
    let dx = grid.dx();
    let y = golden(&f, y0 - dx, y0 + dx, 1e-12);
    TubeMeasure {
        distance: f(y).sqrt(),
        shift: wrap(y, grid.half_length()),
        multimodal,
    }
}

/// `||u - phi(. - y)||^2` in the weighted norm, without cancellation.
fn sq_distance(grid: &Grid, uh: &[C64], ph: &[C64], y: f64, w: &impl Fn(f64) -> f64) -> f64 {
    let mut moved = ph.to_vec();
    shift_spectrum(grid, &mut moved, y);
    let diff: Vec<C64> = uh.iter().zip(&moved).map(|(a, b)| a - b).collect();
    spectral_inner(grid, &diff, &diff, w)
}

fn golden(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol * (1.0 + a.abs()) {
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
    if fc < fd {
        c
    } else {
        d
    }
}

/// Cosine-smoothed step: 1 on `|x| <= 1`, 0 on `|x| >= 2`.
pub fn cutoff(x: f64) -> f64 {
    let r = x.abs();
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        0.5 * (1.0 + (PI * (r - 1.0)).cos())
    }
}

/// Default virial scale `max(10, 5/sqrt(c))`, capped at `0.45 L`.
pub fn default_virial_scale(c: f64, half_length: f64) -> f64 {
    (10f64).max(5.0 / c.sqrt()).min(0.45 * half_length)
}

/// `Phi_A(x) = rho(x/A) int_{-L}^x Lambda phi`.
pub fn build_virial(phi: &GroundState, a: f64) -> Result<Field> {
    let grid = phi.profile.grid();
    if !(a >= 1.0) {
        return Err(Error::InvalidParameter(format!("virial scale must be at least 1, got {a}")));
    }
    if 2.0 * a > 0.9 * grid.half_length() {
        return Err(Error::InvalidParameter(format!(
            "cutoff support 2A = {} exceeds 0.9 L = {}",
            2.0 * a,
            0.9 * grid.half_length()
        )));
    }
    let gen = lambda_generator(&phi.profile);
    let g = gen.values();
    let dx = grid.dx();
    let mut acc = 0.0;
    let mut values = Vec::with_capacity(grid.len());
    values.push(0.0);
    for j in 1..grid.len() {
        acc += 0.5 * dx * (g[j - 1] + g[j]);
        values.push(acc);
    }
    let weighted = values
        .iter()
        .zip(grid.nodes())
        .map(|(v, x)| v * cutoff(x / a))
        .collect();
    Field::new(grid, weighted)
}

/// `J_A(u) = int u(x + z(u)) Phi_A(x) dx`.
pub fn virial_value(u: &Field, phi: &GroundState, weight: &Field) -> Result<f64> {
    let z = modulation_shift(u, phi)?;
    let mut spec = u.spectrum();
    shift_spectrum(u.grid(), &mut spec, -z);
    let aligned = Field::from_spectrum(u.grid(), spec);
    l2_inner(&aligned, weight)
}

fn virial_from_spectrum(grid: &Grid, uh: &[C64], z: f64, weight: &Field) -> f64 {
    let aligned = Field::from_spectrum(grid, advanced(grid, uh, z));
    aligned
        .values()
        .iter()
        .zip(weight.values())
        .map(|(a, b)| a * b)
        .sum::<f64>()
        * grid.dx()
}

fn relative(v: f64, v0: f64) -> f64 {
    if v0 == 0.0 {
        v - v0
    } else {
        (v - v0) / v0.abs()
    }
}

/// Integrates from `u0` (after `config.perturbation`) up to `t_end`.
///
/// With a reference ground state the shift, tube distance and virial are
/// sampled; otherwise those series hold `NaN`.
pub fn evolve(
    u0: &Field,
    params: &ModelParams,
    config: &EvolutionConfig,
    reference: Option<&GroundState>,
) -> Result<Trajectory> {
    config.validate()?;
    params.validate()?;
    if !u0.is_finite() {
        return Err(Error::InvalidParameter("initial data is not finite".into()));
    }
    let grid = u0.grid().clone();
    let start = match config.perturbation {
        Some(Perturbation::Dilation { mu }) => lambda_dilate(u0, 1.0 - mu)?,
        None => u0.clone(),
    };
    let orbit = match reference {
        Some(phi) => {
            if phi.profile.grid() != &grid {
                return Err(Error::GridMismatch);
            }
            let a = config
                .virial_scale
                .unwrap_or_else(|| default_virial_scale(phi.params.c, grid.half_length()));
            Some(Orbit::new(phi, Some(a))?)
        }
        None => None,
    };

    let mut traj = Trajectory::default();
    let max_fprime = start
        .values()
        .iter()
        .fold(0.0_f64, |m, &v| m.max(params.nonlinearity_prime(v).abs()));
    let retained = if config.dealias { 1.0 / 3.0 } else { 0.5 };
    let xi_max = PI * retained * grid.len() as f64 / grid.half_length();
    traj.nonlinear_cfl = config.dt * xi_max * max_fprime;
    if traj.nonlinear_cfl > NONLINEAR_CFL_LIMIT {
        let msg = format!(
            "dt = {} gives nonlinear CFL number {:.3} above {NONLINEAR_CFL_LIMIT}",
            config.dt, traj.nonlinear_cfl
        );
        log::warn!("{msg}");
        traj.warnings.push(msg);
    }
    let sigma = params.sigma();
    if sigma < 4.0 / 3.0 {
        traj.warnings.push(format!(
            "sigma = {sigma} is below 4/3, outside the range with known local well-posedness"
        ));
    }

    let stepper = Etdrk4::new(&grid, params, config.dt, config.frame_speed, config.dealias);
    let mut v = start.spectrum();
    let e0 = energy(&start, params);
    let m0 = mass(&start);
    let mut last_shift: Option<f64> = None;
    let mut tracking = orbit.is_some();
    let mut drift_warned = false;
    let mut snapshots: Vec<f64> = config.snapshot_times.clone();
    snapshots.sort_by(f64::total_cmp);
    let mut next_snapshot = 0;
    let steps = config.steps();
    let period = 2.0 * grid.half_length();

    let mut sample = |t: f64, v: &[C64], traj: &mut Trajectory| -> Option<Field> {
        let u = Field::new(&grid, grid.inverse(v.to_vec())).ok()?;
        let (de, dm) = (relative(energy(&u, params), e0), relative(mass(&u), m0));
        traj.times.push(t);
        traj.energy_drift.push(de);
        traj.mass_drift.push(dm);
        if !drift_warned && de.abs().max(dm.abs()) > DRIFT_WARNING {
            drift_warned = true;
            let msg = format!("conservation drift {:.2e} at t = {t}", de.abs().max(dm.abs()));
            log::warn!("{msg}");
            traj.warnings.push(msg);
        }
        let (mut z, mut dist, mut jv) = (f64::NAN, f64::NAN, f64::NAN);
        if let Some(orbit) = &orbit {
            let tube = tube_from_spectrum(&grid, v, orbit);
            dist = tube.distance;
            if traj.exit_time.is_none() && dist > config.tube_epsilon * orbit.norm {
                traj.exit_time = Some(t);
            }
            if tracking {
                match modulation_from_spectrum(&grid, v, orbit) {
                    Ok(zf) => {
                        // Lab-frame shift, unwrapped against the previous sample.
                        let mut lab = zf + config.frame_speed * t;
                        if let Some(prev) = last_shift {
                            lab += period * ((prev - lab) / period).round();
                        }
                        last_shift = Some(lab);
                        z = lab;
                        jv = virial_from_spectrum(&grid, v, zf, orbit.weight.as_ref().expect("weight"));
                    }
                    Err(e) => {
                        log::info!("modulation tracking stopped at t = {t}: {e}");
                        traj.modulation_lost_at = Some(t);
                        tracking = false;
                    }
                }
            }
        }
        traj.shift.push(z);
        traj.tube_distance.push(dist);
        traj.virial.push(jv);
        Some(u)
    };

    sample(0.0, &v, &mut traj);
    for step in 1..=steps {
        stepper.step(&mut v);
        let t = step as f64 * config.dt;
        let finite = v.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite {
            traj.blow_up = Some(*traj.times.last().unwrap_or(&0.0));
            let msg = format!("non-finite state after t = {t}");
            log::warn!("{msg}");
            traj.warnings.push(msg);
            return Ok(traj);
        }
        let want_snapshot = next_snapshot < snapshots.len() && t + 0.5 * config.dt >= snapshots[next_snapshot];
        if step % config.sample_stride == 0 || step == steps || want_snapshot {
            let is_regular = step % config.sample_stride == 0 || step == steps;
            let u = if is_regular {
                sample(t, &v, &mut traj)
            } else {
                Field::new(&grid, grid.inverse(v.clone())).ok()
            };
            if want_snapshot {
                if let Some(u) = &u {
                    traj.snapshots.push((t, u.clone()));
                }
                next_snapshot += 1;
            }
            if u.is_none() {
                traj.blow_up = Some(t);
                return Ok(traj);
            }
        }
    }
    traj.final_state = Some(Field::from_spectrum(&grid, v));
    Ok(traj)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum ExperimentVerdict {
    Escaped { exit_time: f64 },
    Stayed,
    BlowUp { time: f64 },
}

impl std::fmt::Display for ExperimentVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExperimentVerdict::Escaped { exit_time } => write!(f, "escaped at t = {exit_time}"),
            ExperimentVerdict::Stayed => write!(f, "stayed"),
            ExperimentVerdict::BlowUp { time } => write!(f, "blow-up at t = {time}"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Experiment {
    pub mu: f64,
    pub epsilon: f64,
    pub verdict: ExperimentVerdict,
    pub action_initial: f64,
    pub action_ground_state: f64,
    /// `S_c(u0) < S_c(phi)`.
    pub action_decreased: bool,
    /// `J_A` at the last tracked sample minus its value at `t = 0`.
    pub virial_drift: f64,
    pub trajectory: Trajectory,
}

/// Evolves `phi^{1 - mu}` and reports whether it leaves the tube of radius
/// `epsilon ||phi||_{H^{sigma/2}}`.
pub fn instability_experiment(phi: &GroundState, mu: f64, epsilon: f64, config: &EvolutionConfig) -> Result<Experiment> {
    if !(mu.abs() <= 0.05) {
        return Err(Error::InvalidParameter(format!("|mu| must not exceed 0.05, got {mu}")));
    }
    let mut config = config.clone();
    config.tube_epsilon = epsilon;
    config.perturbation = if mu == 0.0 { None } else { Some(Perturbation::Dilation { mu }) };
    let u0 = lambda_dilate(&phi.profile, 1.0 - mu)?;
    let action_initial = action(&u0, &phi.params);
    let action_ground_state = action(&phi.profile, &phi.params);
    let trajectory = evolve(&phi.profile, &phi.params, &config, Some(phi))?;
    let verdict = match (trajectory.exit_time, trajectory.blow_up) {
        (Some(t), _) => ExperimentVerdict::Escaped { exit_time: t },
        (None, Some(t)) => ExperimentVerdict::BlowUp { time: t },
        (None, None) => ExperimentVerdict::Stayed,
    };
    let tracked: Vec<f64> = trajectory.virial.iter().copied().filter(|v| v.is_finite()).collect();
    let virial_drift = match (tracked.first(), tracked.last()) {
        (Some(a), Some(b)) => b - a,
        _ => f64::NAN,
    };
    Ok(Experiment {
        mu,
        epsilon,
        verdict,
        action_initial,
        action_ground_state,
        action_decreased: action_initial < action_ground_state,
        virial_drift,
        trajectory,
    })
}
