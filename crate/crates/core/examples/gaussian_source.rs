//! Lattice discretization of the Gaussian density used as a source term.

use barronpde::atoms::DEFAULT_ATOM_CAP;
use barronpde::problem::discretize_gaussian;
use barronpde::solver::solve;
use barronpde::{EllipticProblem, Lattice, SolveOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (d, h) in [(1, 0.05), (2, 0.1)] {
        let l = Lattice::isotropic(d, h)?;
        let g = discretize_gaussian(&l, 8.0, DEFAULT_ATOM_CAP)?;
        let want = (2.0 * std::f64::consts::PI).powf(-(d as f64) / 2.0);
        println!(
            "d = {d}: {} atoms, ||phi_h||_B^0 = {:.12} (target {want:.12}), tail bound {:.1e}",
            g.map.len(),
            g.map.barron_norm(0.0)?,
            g.tail_bound
        );
    }

    let l = Lattice::isotropic(1, 0.05)?;
    let f = discretize_gaussian(&l, 8.0, DEFAULT_ATOM_CAP)?.map;
    let p = EllipticProblem::constant_coefficient(l, 0.0, 1.0, vec![0.5], vec![vec![1.0]], f)?;
    let (u, r) = solve(&p, &SolveOptions::default())?;
    println!("u(0) = {:.10}, ||u||_B^2 = {:.10}, iterations {}", u.eval(&[0.0])?, r.u_norm_s2, r.iterations);
    Ok(())
}
