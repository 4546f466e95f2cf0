//! Network error against width over many seeds, with the fitted log-log slope.

use barronpde::netx::rate_sweep;
use barronpde::problem::families::rate_target;
use barronpde::DomainBox;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let u = rate_target();
    let sweep = rate_sweep(&u, 2, &DomainBox::unit(4), &[64, 256, 1024], 20, 6)?;
    println!("n,mean_sq_err,mean_sq_bound,min_err,bound");
    for s in &sweep.summary {
        println!("{},{},{},{},{}", s.n, s.mean_sq_err, s.mean_sq_bound, s.min_err, s.bound);
    }
    println!("slope {:?}", sweep.slope);
    Ok(())
}
