//! Regenerates every file under `fixtures/`, including the golden solve outputs.
//!
//! Run from anywhere with `cargo run --example make_fixtures`; paths are relative to the crate.

use std::fs;
use std::path::Path;

use barronpde::cli;
use barronpde::netx::extract;
use barronpde::problem::families::{
    manufactured_fixture, oversized_diffusion_fixture, rate_target, reference_family, unperturbed_fixture,
};
use barronpde::problem::SolverDoc;
use barronpde::{AtomMap, Lattice, SolveMode};

fn write(path: &str, text: &str) {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    fs::write(path, text).unwrap_or_else(|e| panic!("writing {path}: {e}"));
    println!("wrote {path}");
}

fn main() {
    std::env::set_current_dir(Path::new(env!("CARGO_MANIFEST_DIR"))).expect("crate directory exists");
    fs::create_dir_all("fixtures/golden").expect("fixtures directory is writable");

    for d in [1, 2, 4, 8] {
        let p = reference_family(d).expect("reference family builds");
        write(&format!("fixtures/reference_d{d}.json"), &p.to_json_string(None));
    }

    let (p, u_exact) = manufactured_fixture().expect("manufactured fixture builds");
    let solver = SolverDoc { mode: Some(SolveMode::Combined), tol: Some(1e-8), ..SolverDoc::default() };
    write("fixtures/manufactured.json", &p.to_json_string(Some(solver)));
    write("fixtures/manufactured_u_exact.json", &u_exact.to_json_string());

    write("fixtures/zero_perturbation.json", &unperturbed_fixture().expect("builds").to_json_string(None));
    write("fixtures/oversized_diffusion.json", &oversized_diffusion_fixture().expect("builds").to_json_string(None));

    let target = rate_target();
    write("fixtures/rate_target_d4.json", &target.to_json_string());
    let single = AtomMap::cosine(Lattice::unit(3), &[1, -1, 2], 0.8, 0.25).expect("valid entry");
    write("fixtures/single_entry.json", &single.to_json_string());
    // Sanity: a width-one network reproduces a single entry exactly.
    assert_eq!(extract(&single, 2, 1, 0).expect("extracts").neurons.len(), 1);

    let code = cli::run_from([
        "barronpde",
        "solve",
        "fixtures/manufactured.json",
        "--residual-points",
        "200",
        "--out",
        "fixtures/golden/manufactured_solution.json",
        "--report",
        "fixtures/golden/manufactured_report.json",
    ]);
    assert_eq!(code, cli::EXIT_OK, "golden solve must certify");
}
