//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p barronpde --test acceptance`.

use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use barronpde::atoms::random::random_atom_map;
use barronpde::atoms::DEFAULT_ATOM_CAP;
use barronpde::netx::{extract, hk_error_box, hk_error_mc, rate_sweep};
use barronpde::oracle::{fd_partial_check, pointwise_product_check, residual_pointwise, residual_values, ResidualMode};
use barronpde::problem::families::{
    contraction_fixture, coupled_family, manufactured_fixture, rate_target, reference_family, unperturbed_fixture,
};
use barronpde::problem::{counterexample_eta, discretize_gaussian, ellipticity_verdict, neuron_bound};
use barronpde::solver::{apply_l, inner_solve, solve};
use barronpde::{AtomMap, DomainBox, EllipticProblem, Lattice, SolveMode, SolveOptions, SolveReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

/// A certified solve kept for the residual criterion.
struct Certified {
    name: String,
    problem: EllipticProblem,
    u: AtomMap,
    report: SolveReport,
}

#[derive(Default)]
struct Suite {
    certified: Vec<Certified>,
}

impl Suite {
    fn keep(&mut self, name: impl Into<String>, problem: &EllipticProblem, u: &AtomMap, report: &SolveReport) {
        if report.certified {
            self.certified.push(Certified {
                name: name.into(),
                problem: problem.clone(),
                u: u.clone(),
                report: report.clone(),
            });
        }
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_lattice(rng: &mut ChaCha8Rng, d: usize) -> Lattice {
    Lattice::new((0..d).map(|_| rng.gen_range(0.5..1.5)).collect()).unwrap()
}

fn opts(mode: SolveMode) -> SolveOptions {
    SolveOptions { mode, tol: 1e-8, residual_points: 1000, ..SolveOptions::default() }
}

fn banach_algebra(_: &mut Suite) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst_ratio: f64 = 0.0;
    let mut worst_point: f64 = 0.0;
    for trial in 0..200 {
        let d = rng.gen_range(1..=4);
        let l = random_lattice(&mut rng, d);
        // At most 20 canonical entries, hence at most 40 stored atoms.
        let ng = rng.gen_range(1..=20);
        let g = random_atom_map(&mut rng, &l, ng, 4, 1.0);
        let nh = rng.gen_range(1..=20);
        let h = random_atom_map(&mut rng, &l, nh, 4, 1.0);
        check(g.len() <= 40 && h.len() <= 40, || format!("trial {trial}: more than 40 atoms"))?;
        let s = rng.gen_range(0..=2) as f64;
        let lhs = g.multiply(&h).map_err(|e| e.to_string())?.barron_norm(s).unwrap();
        let rhs = g.barron_norm(s).unwrap() * h.barron_norm(s).unwrap();
        check(lhs <= rhs * (1.0 + 1e-12), || format!("trial {trial}: {lhs} > {rhs}"))?;
        worst_ratio = worst_ratio.max(lhs / rhs);
        let pe = pointwise_product_check(&g, &h, 64, trial).map_err(|e| e.to_string())?;
        check(pe <= 1e-10, || format!("trial {trial}: pointwise product error {pe}"))?;
        worst_point = worst_point.max(pe);
    }
    Ok(format!("max norm ratio {worst_ratio:.4}, max pointwise error {worst_point:.2e}"))
}

fn derivative_bound(_: &mut Suite) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst_fd: f64 = 0.0;
    for trial in 0..200u64 {
        let d = rng.gen_range(1..=4);
        let l = random_lattice(&mut rng, d);
        let ng = rng.gen_range(1..=20);
        let g = random_atom_map(&mut rng, &l, ng, 4, 1.0);
        let s: u32 = rng.gen_range(0..=3);
        let mut a = vec![0u32; d];
        for _ in 0..rng.gen_range(0..=s) {
            a[rng.gen_range(0..d)] += 1;
        }
        let order: u32 = a.iter().sum();
        let lhs = g.partial(&a).barron_norm((s - order) as f64).unwrap();
        let rhs = 2f64.powf(-(order as f64) / 2.0) * g.barron_norm(s as f64).unwrap();
        check(lhs <= rhs * (1.0 + 1e-12), || format!("trial {trial}: a = {a:?}, {lhs} > {rhs}"))?;
        let fd = fd_partial_check(&g, 32, trial);
        let scale = g.barron_norm(3.0).unwrap();
        check(fd <= 1e-6 * scale, || format!("trial {trial}: FD error {fd} > 1e-6 * {scale}"))?;
        worst_fd = worst_fd.max(fd / scale);
    }
    Ok(format!("max relative FD error {worst_fd:.2e}"))
}

fn inner_contraction(suite: &mut Suite) -> Outcome {
    let base = contraction_fixture().map_err(|e| e.to_string())?;
    let q = base.validate().unwrap().constants.unwrap().q_inner;
    check((q - 0.5).abs() < 1e-12, || format!("fixture has q_inner = {q}"))?;
    let (p, u_exact) = manufactured_fixture().map_err(|e| e.to_string())?;
    let g = apply_l(&u_exact, &base, DEFAULT_ATOM_CAP).map_err(|e| e.to_string())?;
    let o = opts(SolveMode::Combined);
    let (u, report) = inner_solve(&g, &base, &o).map_err(|e| e.to_string())?;
    let worst = report.measured_rates.iter().copied().fold(0.0, f64::max);
    check(worst <= 0.52, || format!("measured rate {worst} > 0.52"))?;
    let err = u.sub(&u_exact).unwrap().barron_norm(base.order() + 2.0).unwrap();
    check(err <= 1e-8, || format!("recovery error {err} > 1e-8"))?;
    suite.keep("inner solve of the manufactured fixture", &base.clone().with_source(g).unwrap(), &u, &report);
    let (uc, rc) = solve(&p, &o).map_err(|e| e.to_string())?;
    suite.keep("full solve of the manufactured fixture", &p, &uc, &rc);
    Ok(format!("{} iterations, max rate {worst:.4}, error {err:.2e}", report.iterations))
}

fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn regularity_constant(suite: &mut Suite) -> Outcome {
    let mut iterations = Vec::new();
    let mut worst: f64 = 0.0;
    for d in [1usize, 2, 4, 8] {
        let text =
            fs::read_to_string(fixtures_dir().join(format!("reference_d{d}.json"))).map_err(|e| e.to_string())?;
        let (p, _) = EllipticProblem::from_json_str(&text).map_err(|e| e.to_string())?;
        check(p == reference_family(d).unwrap(), || format!("fixture d = {d} differs from the family"))?;
        let c = p.validate().unwrap().constants.unwrap();
        check(c.mu == 1.0 && (c.k - 0.5).abs() < 1e-15, || format!("d = {d}: mu = {}, K = {}", c.mu, c.k))?;
        check((p.source_norm() - 1.0).abs() < 1e-15, || format!("d = {d}: source norm {}", p.source_norm()))?;
        let (u, report) = solve(&p, &opts(SolveMode::Combined)).map_err(|e| e.to_string())?;
        check(report.certified, || format!("d = {d}: not certified"))?;
        check(report.u_norm_s2 <= 6.0 + 1e-6, || format!("d = {d}: norm {} > 6", report.u_norm_s2))?;
        worst = worst.max(report.u_norm_s2);
        iterations.push(report.iterations);
        suite.keep(format!("reference problem d = {d}"), &p, &u, &report);
    }
    check(iterations.windows(2).all(|w| w[0] == w[1]), || format!("iteration counts differ: {iterations:?}"))?;
    Ok(format!("max norm {worst:.6}, iterations {iterations:?}"))
}

fn residual_soundness(suite: &mut Suite) -> Outcome {
    check(!suite.certified.is_empty(), || "no certified solves collected".into())?;
    let mut worst_ratio: f64 = 0.0;
    let mut worst_fd: f64 = 0.0;
    for c in &suite.certified {
        let stats = residual_pointwise(&c.u, &c.problem, 1000, 7, ResidualMode::Analytic);
        let bound = c.report.tol * c.report.symbol_factor;
        check(stats.linf <= bound, || format!("{}: residual {} > {bound}", c.name, stats.linf))?;
        worst_ratio = worst_ratio.max(stats.linf / bound);
        // FD truncation is measured against the sup bound of the source.
        let scale = c.problem.source().l1_amplitude().max(1.0);
        let an = residual_values(&c.u, &c.problem, 1000, 8, ResidualMode::Analytic);
        let fd = residual_values(&c.u, &c.problem, 1000, 8, ResidualMode::FiniteDifference);
        for ((_, a), (_, b)) in an.iter().zip(&fd) {
            let gap = (a - b).abs();
            check(gap <= 1e-5 * scale, || format!("{}: analytic vs FD gap {gap} > 1e-5 * {scale}", c.name))?;
            worst_fd = worst_fd.max(gap / scale);
        }
    }
    Ok(format!(
        "{} solves, max residual / bound {worst_ratio:.2e}, max FD gap / scale {worst_fd:.2e}",
        suite.certified.len()
    ))
}

fn network_rate(_: &mut Suite) -> Outcome {
    let u = rate_target();
    let bx = DomainBox::unit(4);
    let sweep = rate_sweep(&u, 2, &bx, &[64, 256, 1024], 20, 6).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for s in &sweep.summary {
        check(s.mean_sq_err <= 1.5 * s.mean_sq_bound, || {
            format!("n = {}: mean err^2 {} > 1.5 * {}", s.n, s.mean_sq_err, s.mean_sq_bound)
        })?;
        check(s.min_err <= s.bound, || format!("n = {}: min err {} > {}", s.n, s.min_err, s.bound))?;
        parts.push(format!("n={} ratio {:.3}", s.n, s.mean_sq_err / s.mean_sq_bound));
    }
    let slope = sweep.slope.ok_or("no slope")?;
    check((slope + 0.5).abs() <= 0.1, || format!("slope {slope} outside -0.5 +- 0.1"))?;
    Ok(format!("{}, slope {slope:.4}", parts.join(", ")))
}

fn neuron_counts(_: &mut Suite) -> Outcome {
    let a = neuron_bound(6.0, 1.0, 1.0, 0.1).map_err(|e| e.to_string())?;
    let b = neuron_bound(6.0, 1.0, 1.0, 1.0).map_err(|e| e.to_string())?;
    check(a == 3600 && b == 36, || format!("got {a} and {b}"))?;
    Ok("3600 and 36".into())
}

fn ellipticity_counterexample(_: &mut Suite) -> Outcome {
    for eps in [1e-3f64, 1e-2, 0.1, 1.0] {
        let l = Lattice::isotropic(1, 0.9 * (2.0 * eps).sqrt()).unwrap();
        let v = ellipticity_verdict(&counterexample_eta(eps, &l).map_err(|e| e.to_string())?, eps);
        let want = 2f64.sqrt() * (1.0 + eps);
        check((v.norm_b1 - want).abs() <= 4.0 * f64::EPSILON * want, || {
            format!("eps = {eps}: norm {} vs {want}", v.norm_b1)
        })?;
        check(v.margin < 0.0, || format!("eps = {eps}: 1 + eta(0) = {}", v.margin))?;
    }
    let l = Lattice::isotropic(1, 0.3).unwrap();
    let v = ellipticity_verdict(&counterexample_eta(0.1, &l).unwrap(), 0.1);
    let closed = 1.0 - 1.1 / (1.0f64 + 0.09).sqrt();
    check((v.margin - closed).abs() <= 1e-12, || format!("margin {} vs closed form {closed}", v.margin))?;
    check((v.margin + 0.0536).abs() <= 1e-4, || format!("margin {} not near -0.0536", v.margin))?;
    Ok(format!("margin at eps = 0.1, |xi| = 0.3: {:.6}", v.margin))
}

fn gaussian_norm(_: &mut Suite) -> Outcome {
    let mut parts = Vec::new();
    for (d, h) in [(1usize, 0.05), (2, 0.1)] {
        let l = Lattice::isotropic(d, h).unwrap();
        let g = discretize_gaussian(&l, 8.0, DEFAULT_ATOM_CAP).map_err(|e| e.to_string())?;
        let norm = g.map.barron_norm(0.0).unwrap();
        let want = (2.0 * PI).powf(-(d as f64) / 2.0);
        check((norm - want).abs() <= 1e-3, || format!("d = {d}: {norm} vs {want}"))?;
        parts.push(format!("d={d} gap {:.2e}", (norm - want).abs()));
    }
    Ok(parts.join(", "))
}

fn run_binary(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_barronpde"))
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .env_remove("BARRONPDE_THREADS")
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    check(out.status.success(), || format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr)))
}

fn modes_and_determinism(suite: &mut Suite) -> Outcome {
    let mut admissible: Vec<(String, EllipticProblem)> = Vec::new();
    for d in [1, 2, 4] {
        admissible.push((format!("reference d = {d}"), reference_family(d).unwrap()));
    }
    for d in [2, 3] {
        admissible.push((format!("coupled d = {d}"), coupled_family(d).unwrap()));
    }
    admissible.push(("manufactured".into(), manufactured_fixture().map_err(|e| e.to_string())?.0));
    admissible.push(("unperturbed".into(), unperturbed_fixture().unwrap()));
    let mut worst: f64 = 0.0;
    for (name, p) in &admissible {
        let (uc, rc) = solve(p, &opts(SolveMode::Combined)).map_err(|e| format!("{name}: {e}"))?;
        let (un, rn) = solve(p, &opts(SolveMode::Nested)).map_err(|e| format!("{name}: {e}"))?;
        let gap = uc.sub(&un).unwrap().barron_norm(p.order() + 2.0).unwrap();
        check(gap <= 2.0 * 1e-8, || format!("{name}: modes differ by {gap}"))?;
        worst = worst.max(gap);
        suite.keep(format!("{name}, combined"), p, &uc, &rc);
        suite.keep(format!("{name}, nested"), p, &un, &rn);
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    let mut runs = Vec::new();
    for threads in ["1", "4"] {
        let (u, r, net, csv) = (path("u.json"), path("r.json"), path("net.json"), path("rate.csv"));
        run_binary(&[
            "--threads",
            threads,
            "solve",
            "fixtures/manufactured.json",
            "--residual-points",
            "200",
            "--out",
            &u,
            "--report",
            &r,
        ])?;
        run_binary(&["--threads", threads, "--seed", "3", "extract", &u, "--k", "2", "--n", "128", "--out", &net])?;
        run_binary(&[
            "--threads",
            threads,
            "--seed",
            "3",
            "sweep",
            "fixtures/reference_d2.json",
            "--n-list",
            "16,64",
            "--seeds",
            "5",
            "--out-csv",
            &csv,
        ])?;
        let files = [u.clone(), r.clone(), net, csv.clone(), format!("{csv}.manifest.json")];
        runs.push(files.iter().map(fs::read).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?);
        if threads == "1" {
            let golden = fs::read(fixtures_dir().join("golden/manufactured_report.json")).map_err(|e| e.to_string())?;
            check(runs[0][1] == golden, || "solve report differs from the committed golden file".into())?;
        }
    }
    check(runs[0] == runs[1], || "re-running the same manifests changed the outputs".into())?;
    Ok(format!("{} problems, max mode gap {worst:.2e}, outputs byte-identical", admissible.len()))
}

fn hk_oracle(_: &mut Suite) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    let mut worst: f64 = 0.0;
    for case in 0..50u64 {
        let d = rng.gen_range(1..=4);
        let k = rng.gen_range(0..=2);
        let l = random_lattice(&mut rng, d);
        let ng = rng.gen_range(1..=8);
        let g = random_atom_map(&mut rng, &l, ng, 2, 1.0);
        let net = extract(&g, k, rng.gen_range(2..=8), case).map_err(|e| e.to_string())?;
        let lo: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..0.0)).collect();
        let hi: Vec<f64> = lo.iter().map(|a| a + rng.gen_range(0.5..1.5)).collect();
        let bx = DomainBox::new(lo, hi).map_err(|e| e.to_string())?;
        let exact = hk_error_box(&g, &net, &bx, k).map_err(|e| e.to_string())?;
        let (est, se) = hk_error_mc(&g, &net, &bx, k, 1_000_000, case).map_err(|e| e.to_string())?;
        let gap = (exact - est).abs();
        check(gap <= 3.0 * se, || format!("case {case} (d = {d}, k = {k}): |{exact} - {est}| > 3 * {se}"))?;
        if se > 0.0 {
            worst = worst.max(gap / se);
        }
    }
    Ok(format!("max deviation {worst:.2} stderr"))
}

type Criterion = (&'static str, Duration, fn(&mut Suite) -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("1 Banach algebra", Duration::from_secs(10), banach_algebra),
        ("2 derivative bound", Duration::from_secs(10), derivative_bound),
        ("3 inner-solve contraction", Duration::from_secs(30), inner_contraction),
        ("4 regularity constant", Duration::from_secs(300), regularity_constant),
        ("10 mode equivalence and determinism", Duration::from_secs(300), modes_and_determinism),
        ("5 residual soundness", Duration::from_secs(60), residual_soundness),
        ("6 network rate", Duration::from_secs(300), network_rate),
        ("7 neuron bound", Duration::from_secs(1), neuron_counts),
        ("8 ellipticity counterexample", Duration::from_secs(1), ellipticity_counterexample),
        ("9 Gaussian norm", Duration::from_secs(10), gaussian_norm),
        ("11 H^k metric oracle", Duration::from_secs(120), hk_oracle),
    ];
    let mut suite = Suite::default();
    let mut failures = 0;
    for (name, limit, f) in criteria {
        let start = Instant::now();
        let outcome = f(&mut suite);
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > limit => Err(format!("{detail}; took {elapsed:.2?}, limit {limit:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} ({elapsed:.2?})"),
            Err(why) => {
                failures += 1;
                println!("FAIL  {name}: {why} ({elapsed:.2?})");
            }
        }
    }
    println!("{} of 11 criteria passed", 11 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
