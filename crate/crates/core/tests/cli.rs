//! End-to-end runs of the `barronpde` binary against the committed fixtures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use barronpde::atoms::AtomMapDoc;
use barronpde::cli::{Envelope, EXIT_BEST_EFFORT, EXIT_DIVERGED, EXIT_FAILURE, EXIT_OK, EXIT_PRECONDITION, EXIT_USAGE};
use barronpde::oracle::ResidualStats;
use barronpde::problem::parse_json;
use barronpde::{AtomMap, CosineNetwork, EllipticProblem, SolveReport, ValidationReport};

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_barronpde"))
        .current_dir(crate_dir())
        .env_remove("BARRONPDE_THREADS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn tmp_path(dir: &tempfile::TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn write_problem(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let p = tmp_path(dir, name);
    fs::write(&p, text).unwrap();
    p
}

fn read(path: impl AsRef<Path>) -> String {
    fs::read_to_string(path).unwrap()
}

#[test]
fn validate_reference_problem() {
    let out = run(&["validate", "fixtures/reference_d4.json"]);
    assert_eq!(code(&out), EXIT_OK, "{}", stderr(&out));
    let env: Envelope<ValidationReport> = serde_json::from_str(&stdout(&out)).unwrap();
    let c = env.result.constants.unwrap();
    assert_eq!(c.c_simple, Some(6.0));
    assert_eq!(env.manifest.command, "validate");
    assert_eq!(env.manifest.input_digest.len(), 64);
}

#[test]
fn validate_rejects_oversized_diffusion() {
    let out = run(&["validate", "fixtures/oversized_diffusion.json"]);
    assert_eq!(code(&out), EXIT_PRECONDITION);
    assert!(stderr(&out).contains("(A3) fails"));
}

#[test]
fn validate_unperturbed_constants() {
    let out = run(&["validate", "fixtures/zero_perturbation.json"]);
    assert_eq!(code(&out), EXIT_OK);
    let env: Envelope<ValidationReport> = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(env.result.constants.unwrap().l, 2.0);
}

#[test]
fn validate_gap_regime_and_structural_errors() {
    let dir = tempfile::tempdir().unwrap();
    // ‖E‖ small but K large: only the weaker assumption holds.
    let gap = write_problem(
        &dir,
        "gap.json",
        r#"{"d":1,"s":0,"alpha":1,"beta":[0],"M":[[1]],"E":[[{"atoms":[{"z":[1],"re":0.05,"im":0}]}]],
            "w":{"atoms":[{"z":[0],"re":1.5,"im":0}]},"f":{"atoms":[{"z":[1],"re":0.5,"im":0}]}}"#,
    );
    assert_eq!(code(&run(&["validate", &gap])), EXIT_BEST_EFFORT);
    let asym = write_problem(
        &dir,
        "asym.json",
        r#"{"d":2,"s":0,"alpha":1,"beta":[0,0],"M":[[1,0.5],[0,1]],"f":{"atoms":[]}}"#,
    );
    assert_eq!(code(&run(&["validate", &asym])), EXIT_PRECONDITION);
}

#[test]
fn schema_errors_report_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_problem(
        &dir,
        "bad.json",
        r#"{"d":2,"s":0,"alpha":1,"beta":[0,0],"M":[[1,0],[0,1]],"v":[null,{"atoms":[{"z":[1,0],"re":"x","im":0}]}],"f":{"atoms":[]}}"#,
    );
    let out = run(&["validate", &bad]);
    assert_eq!(code(&out), EXIT_USAGE);
    assert!(stderr(&out).contains("/v/1/atoms/0/re"), "{}", stderr(&out));
    let future = write_problem(
        &dir,
        "future.json",
        r#"{"format":9,"d":1,"s":0,"alpha":1,"beta":[0],"M":[[1]],"f":{"atoms":[]}}"#,
    );
    let out = run(&["validate", &future]);
    assert_eq!(code(&out), EXIT_USAGE);
    assert!(stderr(&out).contains("/format"));
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&run(&["frobnicate"])), EXIT_USAGE);
    assert_eq!(code(&run(&["solve", "fixtures/reference_d1.json"])), EXIT_USAGE);
    let dir = tempfile::tempdir().unwrap();
    let out = tmp_path(&dir, "net.json");
    let both = run(&["extract", "fixtures/single_entry.json", "--k", "1", "--n", "3", "--eps", "0.1", "--out", &out]);
    assert_eq!(code(&both), EXIT_USAGE);
    let missing = run(&["extract", "fixtures/single_entry.json", "--k", "1", "--eps", "0.1", "--out", &out]);
    assert_eq!(code(&missing), EXIT_USAGE);
    assert_eq!(code(&run(&["validate", "fixtures/does_not_exist.json"])), EXIT_FAILURE);
}

#[test]
fn solve_matches_golden_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (u, r) = (tmp_path(&dir, "u.json"), tmp_path(&dir, "r.json"));
    let timing = tmp_path(&dir, "timing.json");
    let out = run(&[
        "solve",
        "fixtures/manufactured.json",
        "--residual-points",
        "200",
        "--out",
        &u,
        "--report",
        &r,
        "--timing",
        &timing,
    ]);
    assert_eq!(code(&out), EXIT_OK, "{}", stderr(&out));
    assert!(stdout(&out).starts_with("iterations="));
    assert_eq!(read(&r), read(crate_dir().join("fixtures/golden/manufactured_report.json")));
    assert_eq!(read(&u), read(crate_dir().join("fixtures/golden/manufactured_solution.json")));
    assert!(read(&timing).contains("elapsed_seconds"));

    let solution = AtomMap::from_json_str(&read(&u)).unwrap();
    let exact = AtomMap::from_json_str(&read(crate_dir().join("fixtures/manufactured_u_exact.json"))).unwrap();
    assert!(solution.sub(&exact).unwrap().barron_norm(2.0).unwrap() <= 1e-8);
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for threads in ["1", "3", "8"] {
        let tag = |n: &str| tmp_path(&dir, &format!("{n}_{threads}"));
        let (u, r, net, csv) = (tag("u.json"), tag("r.json"), tag("net.json"), tag("rate.csv"));
        let solve = run(&[
            "--threads",
            threads,
            "--seed",
            "5",
            "solve",
            "fixtures/reference_d2.json",
            "--out",
            &u,
            "--report",
            &r,
        ]);
        assert_eq!(code(&solve), EXIT_OK);
        let ex = run(&["--threads", threads, "--seed", "5", "extract", &u, "--k", "2", "--n", "64", "--out", &net]);
        assert_eq!(code(&ex), EXIT_OK);
        let sw = run(&[
            "--threads",
            threads,
            "--seed",
            "5",
            "sweep",
            "fixtures/reference_d1.json",
            "--n-list",
            "16,64",
            "--seeds",
            "4",
            "--out-csv",
            &csv,
        ]);
        assert_eq!(code(&sw), EXIT_OK);
        let res = run(&["--threads", threads, "--seed", "5", "oracle", "residual", "fixtures/reference_d2.json", &u]);
        assert_eq!(code(&res), EXIT_OK);
        // Only the solution path differs between runs; normalize it where it is recorded.
        let net_text = read(&net).replace(&u, "U");
        texts.push((
            read(&u),
            read(&r),
            net_text,
            read(&csv),
            read(format!("{csv}.manifest.json")),
            stdout(&res).replace(&u, "U"),
        ));
    }
    assert!(texts.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn threads_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let eta = tmp_path(&dir, "eta.json");
    let out = Command::new(env!("CARGO_BIN_EXE_barronpde"))
        .current_dir(crate_dir())
        .env("BARRONPDE_THREADS", "0")
        .args(["counterexample", "--eps", "0.1", "--hmin", "0.3", "--out", &eta])
        .output()
        .unwrap();
    assert_eq!(code(&out), EXIT_USAGE);
}

#[test]
fn emitted_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (u, r, net) = (tmp_path(&dir, "u.json"), tmp_path(&dir, "r.json"), tmp_path(&dir, "net.json"));
    assert_eq!(
        code(&run(&["solve", "fixtures/reference_d1.json", "--mode", "nested", "--out", &u, "--report", &r])),
        EXIT_OK
    );
    let report: Envelope<SolveReport> = serde_json::from_str(&read(&r)).unwrap();
    assert_eq!(barronpde::cli::to_pretty(&report), read(&r));
    let doc: AtomMapDoc = parse_json(&read(&u)).unwrap();
    assert_eq!(doc.manifest.as_ref(), Some(&report.manifest));
    let map = doc.into_map(None).unwrap();
    assert_eq!(map.barron_norm(2.0).unwrap(), report.result.u_norm_s2);

    assert_eq!(code(&run(&["extract", &u, "--k", "2", "--n", "10", "--out", &net])), EXIT_OK);
    let text = read(&net);
    let parsed = CosineNetwork::from_json_str(&text).unwrap();
    assert_eq!(barronpde::cli::to_pretty(&parsed), text);

    let (p, _) = EllipticProblem::from_json_str(&read(crate_dir().join("fixtures/reference_d8.json"))).unwrap();
    assert_eq!(p, barronpde::problem::families::reference_family(8).unwrap());
}

#[test]
fn pure_multiplier_and_zero_source() {
    let dir = tempfile::tempdir().unwrap();
    let zero =
        write_problem(&dir, "zero.json", r#"{"d":2,"s":0,"alpha":1,"beta":[1,0],"M":[[1,0],[0,1]],"f":{"atoms":[]}}"#);
    let (u, r) = (tmp_path(&dir, "u.json"), tmp_path(&dir, "r.json"));
    assert_eq!(code(&run(&["solve", &zero, "--out", &u, "--report", &r])), EXIT_OK);
    assert!(AtomMap::from_json_str(&read(&u)).unwrap().is_empty());
    let rep: Envelope<SolveReport> = serde_json::from_str(&read(&r)).unwrap();
    assert_eq!(rep.result.iterations, 1);

    assert_eq!(code(&run(&["solve", "fixtures/zero_perturbation.json", "--out", &u, "--report", &r])), EXIT_OK);
    let rep: Envelope<SolveReport> = serde_json::from_str(&read(&r)).unwrap();
    assert_eq!(rep.result.iterations, 1);
    let sol = AtomMap::from_json_str(&read(&u)).unwrap();
    let (p, _) = EllipticProblem::from_json_str(&read(crate_dir().join("fixtures/zero_perturbation.json"))).unwrap();
    assert_eq!(sol, barronpde::solver::l0_inv(p.source(), &p).unwrap());
}

#[test]
fn solve_exit_codes_for_weak_and_failing_problems() {
    let dir = tempfile::tempdir().unwrap();
    let (u, r) = (tmp_path(&dir, "u.json"), tmp_path(&dir, "r.json"));
    assert_eq!(
        code(&run(&["solve", "fixtures/oversized_diffusion.json", "--out", &u, "--report", &r])),
        EXIT_PRECONDITION
    );
    // Large reaction perturbation: only the weaker assumption holds and the iteration expands.
    let blow = write_problem(
        &dir,
        "blow.json",
        r#"{"d":1,"s":0,"alpha":1,"beta":[0],"M":[[1]],"w":{"atoms":[{"z":[0],"re":-3,"im":0}]},
            "f":{"atoms":[{"z":[1],"re":0.5,"im":0}]},"solver":{"max_iters":60}}"#,
    );
    let out = run(&["solve", &blow, "--out", &u, "--report", &r]);
    assert_eq!(code(&out), EXIT_DIVERGED, "{}", stderr(&out));
    let rep: Envelope<SolveReport> = serde_json::from_str(&read(&r)).unwrap();
    assert!(!rep.result.certified);
    // Moderate perturbation beyond the certified regime that still converges.
    let mild = write_problem(
        &dir,
        "mild.json",
        r#"{"d":1,"s":0,"alpha":1,"beta":[0],"M":[[1]],"w":{"atoms":[{"z":[0],"re":1.2,"im":0}]},
            "f":{"atoms":[{"z":[1],"re":0.5,"im":0}]}}"#,
    );
    assert_eq!(code(&run(&["solve", &mild, "--tol", "1e-6", "--out", &u, "--report", &r])), EXIT_BEST_EFFORT);
}

#[test]
fn extract_widths() {
    let dir = tempfile::tempdir().unwrap();
    let net = tmp_path(&dir, "net.json");
    for (eps, want) in [("0.1", 3600), ("1", 36)] {
        let out = run(&[
            "extract",
            "fixtures/single_entry.json",
            "--k",
            "1",
            "--eps",
            eps,
            "--C",
            "6",
            "--vol",
            "1",
            "--fnorm",
            "1",
            "--out",
            &net,
        ]);
        assert_eq!(code(&out), EXIT_OK);
        assert_eq!(CosineNetwork::from_json_str(&read(&net)).unwrap().n, want);
    }
    assert_eq!(code(&run(&["extract", "fixtures/single_entry.json", "--k", "2", "--n", "1", "--out", &net])), EXIT_OK);
    let n = CosineNetwork::from_json_str(&read(&net)).unwrap();
    let u = AtomMap::from_json_str(&read(crate_dir().join("fixtures/single_entry.json"))).unwrap();
    for x in [[0.0, 0.0, 0.0], [0.3, -1.0, 2.5]] {
        assert!((n.eval(&x) - u.eval(&x).unwrap()).abs() < 1e-14);
    }
}

#[test]
fn sweep_single_entry_has_no_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_problem(
        &dir,
        "one.json",
        r#"{"d":2,"s":0,"alpha":1,"beta":[0,0],"M":[[1,0],[0,1]],"f":{"atoms":[{"z":[1,1],"re":0.5,"im":0.2}]}}"#,
    );
    let csv = tmp_path(&dir, "rate.csv");
    assert_eq!(code(&run(&["sweep", &p, "--n-list", "1,4", "--seeds", "3", "--out-csv", &csv])), EXIT_OK);
    let mut rows = csv::Reader::from_path(&csv).unwrap();
    let mut count = 0;
    for rec in rows.deserialize::<(usize, usize, u64, f64, f64, f64)>() {
        let rec = rec.unwrap();
        assert_eq!(rec.3, 0.0);
        count += 1;
    }
    assert_eq!(count, 6);
}

#[test]
fn sweep_over_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, dims) = (tmp_path(&dir, "rate.csv"), tmp_path(&dir, "dims.csv"));
    let out = run(&[
        "sweep",
        "fixtures/reference_d1.json",
        "--n-list",
        "8,32",
        "--seeds",
        "3",
        "--out-csv",
        &csv,
        "--dims",
        "fixtures/reference_d2.json",
        "fixtures/reference_d4.json",
        "fixtures/reference_d8.json",
        "--dims-csv",
        &dims,
    ]);
    assert_eq!(code(&out), EXIT_OK, "{}", stderr(&out));
    let text = read(&dims);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("d,iterations,certified,u_norm_s2,bound_rhs,error_bound,source_norm_k,slope"));
    let iters: Vec<String> = lines.map(|l| l.split(',').nth(1).unwrap().to_string()).collect();
    assert_eq!(iters.len(), 4);
    assert!(iters.windows(2).all(|w| w[0] == w[1]));
    assert!(stdout(&out).contains("identical across problems: true"));
}

#[test]
fn counterexample_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let eta = tmp_path(&dir, "eta.json");
    let out = run(&["counterexample", "--eps", "0.1", "--hmin", "0.3", "--out", &eta]);
    assert_eq!(code(&out), EXIT_OK);
    let text = stdout(&out);
    assert!(text.contains("norm_b1=1.55563491861"));
    assert!(text.contains("verdict=FAIL-ELLIPTICITY"));
    let map = AtomMap::from_json_str(&read(&eta)).unwrap();
    assert!((1.0 + map.eval(&[0.0]).unwrap() + 0.0536).abs() < 1e-4);
    let small = run(&["counterexample", "--eps", "1e-3", "--hmin", "0.04", "--out", &eta]);
    assert!(stdout(&small).contains("verdict=FAIL-ELLIPTICITY"));
    let coarse = run(&["counterexample", "--eps", "0.1", "--hmin", "1.0", "--out", &eta]);
    assert_eq!(code(&coarse), EXIT_PRECONDITION);
    assert!(stderr(&coarse).contains("reduce --hmin"));
}

#[test]
fn oracle_gates() {
    let ok = run(&[
        "oracle",
        "residual",
        "fixtures/manufactured.json",
        "fixtures/golden/manufactured_solution.json",
        "--max-residual",
        "1e-6",
    ]);
    assert_eq!(code(&ok), EXIT_OK);
    let stats: Envelope<ResidualStats> = serde_json::from_str(&stdout(&ok)).unwrap();
    assert_eq!(stats.result.points, 1000);
    // The solution of a different problem leaves a large residual.
    let bad = run(&[
        "oracle",
        "residual",
        "fixtures/zero_perturbation.json",
        "fixtures/manufactured_u_exact.json",
        "--max-residual",
        "1e-6",
    ]);
    assert_eq!(code(&bad), EXIT_FAILURE);
    let fd = run(&[
        "oracle",
        "residual",
        "fixtures/manufactured.json",
        "fixtures/golden/manufactured_solution.json",
        "--mode",
        "finite-difference",
        "--points",
        "50",
    ]);
    assert_eq!(code(&fd), EXIT_OK);
    assert_eq!(
        code(&run(&["oracle", "product", "fixtures/rate_target_d4.json", "fixtures/rate_target_d4.json"])),
        EXIT_OK
    );
    assert_eq!(code(&run(&["oracle", "derivative", "fixtures/rate_target_d4.json"])), EXIT_OK);
    let mismatch = run(&["oracle", "product", "fixtures/rate_target_d4.json", "fixtures/single_entry.json"]);
    assert_eq!(code(&mismatch), EXIT_PRECONDITION);
}
