//! Speed beyond which the (2, 2, 7, +1) ground states become unstable.

use fkdv::classification::{criterion_at, find_critical_speed};
use fkdv::functionals::ModelParams;
use fkdv::ground_state::{default_grid, SolverConfig};

fn main() -> fkdv::Result<()> {
    let params = ModelParams::model(2.0, 2, 7, 1, 1.0)?;
    let grid = default_grid(params.sigma);
    let cfg = SolverConfig::default();
    let b = find_critical_speed(&params, (0.5, 2.0), &grid, &cfg)?;
    println!("critical speed in [{:.6}, {:.6}] (relative width {:.1e})", b.c_lo, b.c_hi, b.relative_width());
    println!("criterion {:+.3e} -> {:+.3e}, {} evaluations", b.criterion_lo, b.criterion_hi, b.evaluations.len());
    let far = criterion_at(&params.with_speed(10.0 * b.c_hi)?, &grid, &cfg)?;
    println!("criterion at 10 c_hi: {far:+.4e}");
    Ok(())
}
