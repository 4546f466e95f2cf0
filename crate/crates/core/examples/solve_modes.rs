//! Combined and nested fixed-point schemes on the same problem.

use barronpde::problem::families::coupled_family;
use barronpde::solver::solve;
use barronpde::{SolveMode, SolveOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = coupled_family(3)?;
    let mut solutions = Vec::new();
    for mode in [SolveMode::Combined, SolveMode::Nested] {
        let opts = SolveOptions { mode, ..SolveOptions::default() };
        let (u, r) = solve(&p, &opts)?;
        println!(
            "{mode:?}: {} outer iterations, {} inner iterations, q = {:?}, {} atoms",
            r.iterations, r.inner_iterations, r.contraction_factor, r.atoms
        );
        solutions.push(u);
    }
    let gap = solutions[0].sub(&solutions[1])?.barron_norm(p.order() + 2.0)?;
    println!("B^(s+2) distance between the two solutions: {gap:.3e}");
    Ok(())
}
