//! Pointwise residual of a solution, computed without the solver's convolution path.

use barronpde::oracle::{residual_pointwise, ResidualMode};
use barronpde::problem::families::reference_family;
use barronpde::solver::solve;
use barronpde::SolveOptions;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = reference_family(3)?;
    let opts = SolveOptions::default();
    let (u, report) = solve(&p, &opts)?;
    for mode in [ResidualMode::Analytic, ResidualMode::FiniteDifference] {
        let stats = residual_pointwise(&u, &p, 1000, 1, mode);
        println!("{mode:?}: max {:.3e}, rms {:.3e} at {:?}", stats.linf, stats.l2_rms, stats.worst_point);
    }
    println!("certified bound tol * S = {:.3e}", opts.tol * report.symbol_factor);
    Ok(())
}
