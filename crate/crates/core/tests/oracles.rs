//! Independent representations checked against the library routes.

use std::f64::consts::PI;

use fkdv::functionals::ModelParams;
use fkdv::ground_state::{rescale_to_breve, solve_double_power, SolverConfig};
use fkdv::kernels::{algebraic_window, compute_g, fit_power_law, fit_tail, TailModel};
use fkdv::spectral::Grid;

/// `G_sigma(x) = sin(theta)/pi int_0^inf r^s e^{-r x} / (1 + 2 r^s cos(theta) + r^{2s}) dr`
/// with `theta = pi s / 2`, from rotating the Fourier integral onto the
/// imaginary axis. Composite Simpson in `t = log r`.
fn laplace_kernel(s: f64, x: f64) -> f64 {
    let theta = 0.5 * PI * s;
    let (lo, hi) = (-60.0_f64, (80.0 / x).ln());
    let n = 200_000;
    let h = (hi - lo) / n as f64;
    let f = |t: f64| {
        let r = t.exp();
        let rs = r.powf(s);
        r * rs * (-r * x).exp() / (1.0 + 2.0 * rs * theta.cos() + rs * rs)
    };
    let mut sum = f(lo) + f(hi);
    for i in 1..n {
        sum += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    theta.sin() / PI * sum * h / 3.0
}

#[test]
fn kernel_matches_laplace_representation() {
    let xs = [0.05, 0.3, 1.0, 4.0, 20.0, 150.0];
    for s in [1.0, 1.25, 1.5, 1.75] {
        let g = compute_g(s, &xs).unwrap();
        for (&x, &v) in xs.iter().zip(&g.values) {
            let want = laplace_kernel(s, x);
            assert!((v / want - 1.0).abs() < 1e-6, "sigma {s}, x {x}: {v} vs {want}");
        }
    }
}

/// `phi = G * f(phi)` by direct summation over the grid, written as
/// `f(x) + int G(y) (f(x - y) - f(x)) dy` so the kernel cusp at the origin
/// multiplies a vanishing factor. The part of the unit kernel mass beyond
/// `|y| > Y` is restored from the kernel's algebraic tail.
#[test]
fn fixed_point_by_direct_convolution() {
    let s = 1.5;
    let params = ModelParams::model(s, 2, 3, 1, 1.0).unwrap();
    let grid = Grid::new(200.0, 8192).unwrap();
    let gs = solve_double_power(&params, &grid, &SolverConfig::default()).unwrap();
    let phi = gs.profile.values();
    let f: Vec<f64> = phi.iter().map(|&u| params.nonlinearity(u)).collect();
    let dx = grid.dx();
    let k_max = (120.0 / dx) as usize;
    let offsets: Vec<f64> = (1..=k_max).map(|k| k as f64 * dx).collect();
    let kernel = compute_g(s, &offsets).unwrap();
    assert!(kernel.all_converged());
    let y_cut = offsets[k_max - 1];
    let tail_constant = kernel.values[k_max - 1] * y_cut.powf(1.0 + s);
    let outside = 2.0 * tail_constant / (s * y_cut.powf(s));

    let centre = grid.len() / 2;
    for x in [0.0, 1.0, 3.0, 10.0] {
        let i = centre + (x / dx).round() as usize;
        let mut acc = 0.0;
        for (k, &g) in kernel.values.iter().enumerate() {
            let k = k + 1;
            acc += g * (f[i - k] + f[i + k] - 2.0 * f[i]);
        }
        let conv = f[i] + acc * dx - outside * f[i];
        let rel = (conv - phi[i]).abs() / phi[centre];
        assert!(rel < 1e-3, "x = {x}: {conv} vs {} ({rel:.2e})", phi[i]);
    }
}

#[test]
fn tail_exponent_is_scale_invariant() {
    let s = 1.5;
    let params = ModelParams::model(s, 2, 3, 1, 4.0).unwrap();
    let grid = Grid::new(400.0, 16384).unwrap();
    let gs = solve_double_power(&params, &grid, &SolverConfig::default()).unwrap();
    let a = fit_tail(&gs.profile, s, 0, None).unwrap();
    // Rescaling moves the periodic images of the box out to 2L c^{1/sigma},
    // where they are negligible over the window.
    let breve = rescale_to_breve(&gs);
    let b = fit_power_law(&breve, s, 0, algebraic_window(&breve), TailModel::FreeSpace).unwrap();
    assert!((a.exponent - b.exponent).abs() < 0.02, "{} vs {}", a.exponent, b.exponent);
    assert!(a.relative_error() <= 0.05);
}
