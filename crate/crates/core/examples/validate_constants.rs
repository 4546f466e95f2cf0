//! Smallness checks and every derived constant for the reference problem in several dimensions.

use barronpde::problem::families::reference_family;
use barronpde::problem::neuron_bound;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for d in [1, 2, 4, 8] {
        let p = reference_family(d)?;
        let report = p.validate()?;
        let c = report.constants.expect("the reference problem satisfies the smallness assumption");
        println!(
            "d = {d}: K = {}, min(alpha, m) = {}, L = {}, C_sharp = {:?}, C_simple = {:?}",
            c.k, c.mu, c.l, c.c_sharp, c.c_simple
        );
    }
    let c = reference_family(1)?.validate()?.constants.and_then(|c| c.c_simple).expect("certified regime");
    for eps in [1.0, 0.1] {
        println!("eps = {eps}: {} neurons", neuron_bound(c, 1.0, 1.0, eps)?);
    }
    Ok(())
}
