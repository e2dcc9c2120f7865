//! Gardner ground state against the KdV soliton it reduces to when the cubic term is dropped.

use fkdv::functionals::{ModelParams, Sigma};
use fkdv::ground_state::{solve_double_power, solve_single_power, SolverConfig};
use fkdv::spectral::{Field, Grid};

fn main() -> fkdv::Result<()> {
    let grid = Grid::new(60.0, 2048)?;
    let cfg = SolverConfig::default();

    let kdv = solve_single_power(Sigma::TWO, 2, &grid, &cfg)?;
    let exact = Field::from_fn(&grid, |x| 1.5 / (x / 2.0).cosh().powi(2));
    let err = kdv.profile.sub(&exact)?.max_abs() / 1.5;
    println!("KdV soliton: {} iterations, max relative error {err:.2e}", kdv.iterations);

    let gardner = ModelParams::model(2.0, 2, 3, 1, 1.0)?;
    let gs = solve_double_power(&gardner, &grid, &cfg)?;
    let r = &gs.report;
    println!("Gardner (c = 1): peak {:.6}, action {:.8}", gs.profile.center_value(), r.action);
    println!("  residual {:.2e}, nehari {:.2e}, pohozaev {:.2e}", r.residual, r.nehari_relative(1.0), r.pohozaev_relative(2.0));
    Ok(())
}
