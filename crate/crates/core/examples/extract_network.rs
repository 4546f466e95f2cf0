//! Sample a cosine network from a computed solution and measure its H^k error on a box.

use barronpde::netx::{extract, hk_error_box, hk_error_mc};
use barronpde::problem::families::reference_family;
use barronpde::solver::solve;
use barronpde::{DomainBox, SolveOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = reference_family(2)?;
    let (u, _) = solve(&p, &SolveOptions::default())?;
    let bx = DomainBox::unit(2);
    let k = 2;
    let norm = u.barron_norm(k as f64)?;
    for n in [16, 64, 256, 1024] {
        let net = extract(&u, k, n, 7)?;
        let exact = hk_error_box(&u, &net, &bx, k)?;
        let (mc, se) = hk_error_mc(&u, &net, &bx, k, 100_000, 7)?;
        println!(
            "n = {n:5}: H^2 error {exact:.5} (Monte Carlo {mc:.5} +- {se:.5}), bound {:.5}",
            bx.vol().sqrt() * norm / (n as f64).sqrt()
        );
    }
    Ok(())
}
