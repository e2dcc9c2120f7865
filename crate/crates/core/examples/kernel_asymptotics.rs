//! Resolvent kernel of `D^sigma + 1`: tail constants, mass, and the logarithmic origin at sigma = 1.

use fkdv::kernels::{
    compute_g, compute_k_km, g1_origin_check, kernel_mass, kernel_tail_constant, log_spaced, KernelMethod,
};

fn main() -> fkdv::Result<()> {
    let pts = log_spaced(1e-2, 1e3, 61);
    for sigma in [1.0, 1.25, 1.5, 1.75, 2.0] {
        let g = compute_g(sigma, &pts)?;
        let tail = match kernel_tail_constant(&g) {
            Ok(fit) => format!("x^{:.4} tail, constant {:.6}", fit.exponent, fit.constant),
            Err(e) => format!("{e}"),
        };
        println!("sigma {sigma}: mass {:.10}, {tail}", kernel_mass(sigma)?);
    }

    println!("g1 near the origin:");
    for row in g1_origin_check(&[1e-2, 1e-4, 1e-6])? {
        println!("  x = {:.0e}: g1 / log(1/x) = {:.5}, allowed deviation {:.4}", row.x, row.ratio, row.bound);
    }

    let far = log_spaced(10.0, 1e3, 5);
    for (k, m) in [(1, 1), (2, 1), (2, 2)] {
        let s = compute_k_km(k, m, 1.5, &far, KernelMethod::OscillatoryQuadrature)?;
        let w: Vec<String> = far.iter().zip(&s.values).map(|(x, v)| format!("{:.4e}", x.powf(2.5) * v.abs())).collect();
        println!("K_({k},{m}) weighted by x^2.5: {}", w.join(" "));
    }
    Ok(())
}
