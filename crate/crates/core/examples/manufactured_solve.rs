//! Solve a problem whose exact solution is known and compare against it.

use barronpde::problem::families::manufactured_fixture;
use barronpde::solver::solve;
use barronpde::SolveOptions;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (p, u_exact) = manufactured_fixture()?;
    let opts = SolveOptions { tol: 1e-10, ..SolveOptions::default() };
    let (u, report) = solve(&p, &opts)?;
    let err = u.sub(&u_exact)?.barron_norm(p.order() + 2.0)?;
    println!("certified: {}, iterations: {}", report.certified, report.iterations);
    println!("increments: {:?}", report.increments);
    println!("reported bound {:?}, true error {err:.3e}", report.error_bound);
    println!("pointwise residual {:?} (bound {:.3e})", report.residual_linf, opts.tol * report.symbol_factor);
    Ok(())
}
