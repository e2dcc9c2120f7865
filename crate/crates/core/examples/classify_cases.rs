//! Case label, instability verdict and criterion sign for a few parameter points.

use fkdv::classification::{classify_case, evaluate_point, theorem_verdict};
use fkdv::functionals::{ModelParams, Sigma};
use fkdv::ground_state::{default_grid, SolverConfig};

fn main() -> fkdv::Result<()> {
    let cfg = SolverConfig::default();
    let points = [(2.0, 3, 5, -1), (1.5, 3, 4, -1), (1.5, 4, 5, -1), (2.0, 5, 7, 1), (2.0, 2, 3, 1)];
    for (s, p, q, a) in points {
        let sigma = Sigma::from_f64(s)?;
        let verdict = theorem_verdict(sigma, p, q, a)?;
        print!("sigma {s} (p, q, a) = ({p}, {q}, {a:+}): case {}, {verdict};", classify_case(p, q, a));
        for c in [0.5, 1.0, 5.0] {
            let pt = evaluate_point(&ModelParams::new(sigma, p, q, a, c)?, &default_grid(sigma), &cfg, None)?;
            print!("  c={c}: {:+.4e}", pt.criterion);
        }
        println!();
    }
    Ok(())
}
