//! An unperturbed Gardner soliton translating at its own speed.

use fkdv::evolution::{evolve, EvolutionConfig};
use fkdv::functionals::ModelParams;
use fkdv::ground_state::{solve_double_power, SolverConfig};
use fkdv::spectral::Grid;

fn main() -> fkdv::Result<()> {
    let params = ModelParams::model(2.0, 2, 3, 1, 1.0)?;
    let gs = solve_double_power(&params, &Grid::new(60.0, 1024)?, &SolverConfig::default())?;
    let cfg = EvolutionConfig { dt: 0.005, t_end: 10.0, sample_stride: 200, ..Default::default() };
    let tr = evolve(&gs.profile, &params, &cfg, Some(&gs))?;
    for i in 0..tr.times.len() {
        println!(
            "t {:5.1}  z - ct {:+.2e}  tube {:.2e}  energy drift {:+.2e}",
            tr.times[i],
            tr.shift[i] - tr.times[i],
            tr.tube_distance[i] / gs.energy_norm(),
            tr.energy_drift[i]
        );
    }
    Ok(())
}
