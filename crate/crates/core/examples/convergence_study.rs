//! Rescaled ground states approach the single-power profile as the speed grows.

use fkdv::functionals::Sigma;
use fkdv::ground_state::{convergence_study, SolverConfig};
use fkdv::spectral::Grid;

fn main() -> fkdv::Result<()> {
    let grid = Grid::new(60.0, 2048)?;
    let speeds = [1.0, 10.0, 100.0, 1000.0];
    for a in [1, -1] {
        println!("(sigma, p, q, a) = (2, 2, 3, {a:+})");
        for row in convergence_study(Sigma::TWO, 2, 3, a, &speeds, &grid, &SolverConfig::default())? {
            println!("  c = {:6}: distance {:.6e}", row.c, row.distance);
        }
    }
    Ok(())
}
