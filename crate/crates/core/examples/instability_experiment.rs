//! Dilation-perturbed ground states: (2, 3, 5, -1) leaves the tube, the Gardner control does not.

use fkdv::evolution::{instability_experiment, EvolutionConfig};
use fkdv::functionals::ModelParams;
use fkdv::ground_state::{solve_double_power, SolverConfig};
use fkdv::spectral::Grid;

fn main() -> fkdv::Result<()> {
    env_logger::init();
    let grid = Grid::new(60.0, 2048)?;
    let runs = [((3, 5, -1), 0.001), ((2, 3, 1), 0.005)];
    for ((p, q, a), dt) in runs {
        let params = ModelParams::model(2.0, p, q, a, 1.0)?;
        let gs = solve_double_power(&params, &grid, &SolverConfig::default())?;
        let cfg = EvolutionConfig { dt, t_end: 20.0, sample_stride: (1.0 / dt) as usize, ..Default::default() };
        let ex = instability_experiment(&gs, 0.01, 0.1, &cfg)?;
        println!("(2, {p}, {q}, {a:+}): {}", ex.verdict);
        println!("  S_c(u0) - S_c(phi) = {:+.3e}", ex.action_initial - ex.action_ground_state);
        let tr = &ex.trajectory;
        for i in (0..tr.times.len()).step_by(2) {
            println!("  t {:5.1}  tube {:.3}  J {:+.4}", tr.times[i], tr.tube_distance[i] / gs.energy_norm(), tr.virial[i]);
        }
    }
    Ok(())
}
