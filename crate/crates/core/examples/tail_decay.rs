//! Algebraic tails below sigma = 2 and exponential tails at sigma = 2.

use fkdv::functionals::ModelParams;
use fkdv::ground_state::{solve_double_power, SolverConfig};
use fkdv::kernels::{exponential_window, fit_exponential, fit_tail};
use fkdv::spectral::Grid;

fn main() -> fkdv::Result<()> {
    let cfg = SolverConfig::default();

    let params = ModelParams::model(1.5, 2, 3, 1, 1.0)?;
    let gs = solve_double_power(&params, &Grid::new(200.0, 8192)?, &cfg)?;
    for l in [0, 1] {
        let fit = fit_tail(&gs.profile, 1.5, l, None)?;
        println!("sigma 1.5, l = {l}: exponent {:.4} (theory {:.2})", fit.exponent, fit.expected);
    }

    let gardner = ModelParams::model(2.0, 2, 3, 1, 1.0)?;
    let gs = solve_double_power(&gardner, &Grid::new(60.0, 2048)?, &cfg)?;
    let fit = fit_exponential(&gs.profile, 0, exponential_window(&gs.profile))?;
    println!("sigma 2: exponential rate {:.5}, residual {:.1e}", fit.exponent, fit.residual);
    Ok(())
}
