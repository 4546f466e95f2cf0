//! A diffusion perturbation with moderate norm that destroys ellipticity at the origin.

use barronpde::problem::{counterexample_eta, ellipticity_verdict};
use barronpde::Lattice;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for eps in [1e-3f64, 1e-2, 0.1, 1.0] {
        let l = Lattice::isotropic(1, 0.9 * (2.0 * eps).sqrt())?;
        let v = ellipticity_verdict(&counterexample_eta(eps, &l)?, eps);
        println!(
            "eps = {eps}: ||eta||_B^1 = {:.12} (sqrt 2 (1 + eps) = {:.12}), 1 + eta(0) = {:.6}",
            v.norm_b1,
            2f64.sqrt() * (1.0 + eps),
            v.margin
        );
    }
    match counterexample_eta(0.1, &Lattice::isotropic(1, 1.0)?) {
        Ok(_) => println!("unexpected: coarse lattice accepted"),
        Err(e) => println!("coarse lattice rejected: {e}"),
    }
    Ok(())
}
