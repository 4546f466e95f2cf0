use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::manifest::{to_pretty, write_text};
use super::{
    Cli, CliError, Command, Envelope, ExtractArgs, OracleCommand, RunManifest, SolveArgs, SweepArgs, EXIT_BEST_EFFORT,
    EXIT_DIVERGED, EXIT_FAILURE, EXIT_OK, EXIT_PRECONDITION, EXIT_USAGE,
};
use crate::atoms::{AtomError, AtomMap, AtomMapDoc, Lattice};
use crate::netx::{extract, rate_sweep, DomainBox, NetError};
use crate::oracle::{fd_partial_check, pointwise_product_check, residual_pointwise, ResidualMode};
use crate::problem::{
    counterexample_eta, ellipticity_verdict, neuron_bound, parse_json, EllipticProblem, ProblemError, SolverDoc,
};
use crate::solver::{solve, SolveError, SolveOptions, SolveReport};

pub(super) fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    match &cli.command {
        Command::Validate { problem, out } => validate(problem, out.as_deref()),
        Command::Solve(a) => solve_cmd(cli, a),
        Command::Extract(a) => extract_cmd(cli, a),
        Command::Sweep(a) => sweep_cmd(cli, a),
        Command::Counterexample { eps, hmin, dim, out } => counterexample(*eps, *hmin, *dim, out),
        Command::Oracle(o) => oracle(cli, o),
    }
}

fn read_input(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::new(EXIT_FAILURE, format!("cannot read {}: {e}", path.display())))
}

fn as_text<'a>(path: &Path, bytes: &'a [u8]) -> Result<&'a str, CliError> {
    std::str::from_utf8(bytes).map_err(|_| CliError::new(EXIT_USAGE, format!("{} is not UTF-8", path.display())))
}

fn write_out(path: &Path, text: &str) -> Result<(), CliError> {
    write_text(path, text).map_err(|e| CliError::new(EXIT_FAILURE, format!("cannot write {}: {e}", path.display())))
}

fn show(path: &Path) -> String {
    path.display().to_string()
}

fn load_problem(path: &Path, bytes: &[u8]) -> Result<(EllipticProblem, SolverDoc), CliError> {
    EllipticProblem::from_json_str(as_text(path, bytes)?)
        .map_err(|e| CliError::new(EXIT_USAGE, format!("{}: {e}", path.display())))
}

fn load_atoms(path: &Path, bytes: &[u8], lattice: Option<&Lattice>) -> Result<AtomMap, CliError> {
    let doc: AtomMapDoc =
        parse_json(as_text(path, bytes)?).map_err(|e| CliError::new(EXIT_USAGE, format!("{}: {e}", path.display())))?;
    doc.into_map(lattice).map_err(|e| {
        let code = if e == AtomError::LatticeMismatch { EXIT_PRECONDITION } else { EXIT_USAGE };
        CliError::new(code, format!("{}: {e}", path.display()))
    })
}

fn atom_error(e: AtomError) -> CliError {
    match e {
        AtomError::Resource { .. } => CliError::new(EXIT_FAILURE, format!("{e}; raise --atom-cap")),
        other => CliError::new(EXIT_PRECONDITION, other.to_string()),
    }
}

fn problem_error(e: ProblemError) -> CliError {
    match e {
        ProblemError::Atoms(a) => atom_error(a),
        other => CliError::new(EXIT_PRECONDITION, other.to_string()),
    }
}

fn solve_error(e: SolveError) -> CliError {
    match e {
        SolveError::Atoms(a) => atom_error(a),
        SolveError::Problem(p) => problem_error(p),
        SolveError::Options(m) => CliError::new(EXIT_USAGE, m),
        other => CliError::new(EXIT_PRECONDITION, other.to_string()),
    }
}

fn net_error(e: NetError) -> CliError {
    CliError::new(EXIT_PRECONDITION, e.to_string())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:e}"))
}

fn validate(path: &Path, out: Option<&Path>) -> Result<i32, CliError> {
    let bytes = read_input(path)?;
    let (p, _) = load_problem(path, &bytes)?;
    let report = p.validate().map_err(problem_error)?;
    let mut manifest = RunManifest::new("validate").with_inputs(&[(&show(path), &bytes)]);
    manifest.problem_path = Some(show(path));
    let code = if report.a3prime_holds {
        EXIT_OK
    } else if report.a3_holds {
        EXIT_BEST_EFFORT
    } else {
        EXIT_PRECONDITION
    };
    if code != EXIT_OK {
        for m in report.messages.iter().filter(|m| m.contains("fails")) {
            eprintln!("{m}");
        }
    }
    let text = to_pretty(&Envelope::new(manifest, report));
    print!("{text}");
    if let Some(out) = out {
        write_out(out, &text)?;
    }
    Ok(code)
}

/// Effective solver options: problem file first, then flags, then global settings.
fn solve_options(cli: &Cli, doc: &SolverDoc, a: Option<&SolveArgs>) -> SolveOptions {
    let mut o = SolveOptions::from_doc(doc);
    if let Some(a) = a {
        if let Some(m) = a.mode {
            o.mode = m.into();
        }
        if let Some(t) = a.tol {
            o.tol = t;
        }
        if let Some(n) = a.max_iters {
            o.max_iters = n;
        }
        if let Some(f) = a.prune_frac {
            o.prune_tau_frac = f;
        }
        if let Some(r) = a.residual_points {
            o.residual_points = r;
        }
    }
    if let Some(c) = cli.atom_cap {
        o.atom_cap = c;
    }
    o.seed = cli.seed;
    o
}

#[derive(Serialize)]
struct Timing {
    format: u32,
    command: &'static str,
    elapsed_seconds: f64,
}

fn solve_cmd(cli: &Cli, a: &SolveArgs) -> Result<i32, CliError> {
    let bytes = read_input(&a.problem)?;
    let (p, doc) = load_problem(&a.problem, &bytes)?;
    let opts = solve_options(cli, &doc, Some(a));
    let mut manifest =
        RunManifest::new("solve").with_inputs(&[(&show(&a.problem), &bytes)]).option("solve", &opts).seed(opts.seed);
    manifest.problem_path = Some(show(&a.problem));

    let clock = Instant::now();
    let outcome = solve(&p, &opts);
    let elapsed = clock.elapsed().as_secs_f64();
    if let Some(t) = &a.timing {
        write_out(
            t,
            &to_pretty(&Timing { format: crate::FORMAT_VERSION, command: "solve", elapsed_seconds: elapsed }),
        )?;
    }

    match outcome {
        Ok((u, report)) => {
            let mut doc = u.to_doc(true);
            doc.manifest = Some(manifest.clone());
            write_out(&a.out, &to_pretty(&doc))?;
            write_out(&a.report, &to_pretty(&Envelope::new(manifest, &report)))?;
            println!(
                "iterations={} u_norm_s2={:e} bound_rhs={} residual_linf={}",
                report.iterations,
                report.u_norm_s2,
                fmt_opt(report.bound_rhs),
                fmt_opt(report.residual_linf)
            );
            Ok(if report.certified { EXIT_OK } else { EXIT_BEST_EFFORT })
        }
        Err(SolveError::Diverged { reason, report }) => {
            write_out(&a.report, &to_pretty(&Envelope::new(manifest, &*report)))?;
            eprintln!("error: iteration diverged: {reason}");
            Ok(EXIT_DIVERGED)
        }
        Err(e) => Err(solve_error(e)),
    }
}

fn extract_cmd(cli: &Cli, a: &ExtractArgs) -> Result<i32, CliError> {
    let bytes = read_input(&a.solution)?;
    let u = load_atoms(&a.solution, &bytes, None)?;
    let n = match (a.n, a.eps) {
        (Some(n), _) => n,
        (None, Some(eps)) => {
            let (c, vol, fnorm) = match (a.c, a.vol, a.fnorm) {
                (Some(c), Some(v), Some(f)) => (c, v, f),
                _ => return Err(CliError::new(EXIT_USAGE, "--eps needs --C, --vol and --fnorm")),
            };
            let n = neuron_bound(c, vol, fnorm, eps).map_err(|e| CliError::new(EXIT_USAGE, e.to_string()))?;
            usize::try_from(n).map_err(|_| CliError::new(EXIT_FAILURE, format!("{n} neurons do not fit in memory")))?
        }
        (None, None) => return Err(CliError::new(EXIT_USAGE, "give exactly one of --n or --eps")),
    };
    if n == 0 {
        return Err(CliError::new(EXIT_USAGE, "--n must be positive"));
    }
    let manifest = RunManifest::new("extract")
        .with_inputs(&[(&show(&a.solution), &bytes)])
        .option("k", a.k)
        .option("n", n)
        .option("eps", a.eps)
        .option("C", a.c)
        .option("vol", a.vol)
        .option("fnorm", a.fnorm)
        .seed(cli.seed);
    let mut net = extract(&u, a.k, n, cli.seed).map_err(net_error)?;
    net.manifest = Some(manifest);
    write_out(&a.out, &to_pretty(&net))?;
    println!("n={} k={} source_norm={:e}", net.n, net.k, net.source_norm);
    Ok(EXIT_OK)
}

/// One row of the rate CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCsvRow {
    pub d: usize,
    pub n: usize,
    pub seed: u64,
    pub err: f64,
    pub bound: f64,
    pub mean_sq_err: f64,
}

/// One row of the dimension table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimCsvRow {
    pub d: usize,
    pub iterations: usize,
    pub certified: bool,
    pub u_norm_s2: f64,
    pub bound_rhs: Option<f64>,
    pub error_bound: Option<f64>,
    pub source_norm_k: f64,
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SweepProblem {
    path: String,
    d: usize,
    iterations: usize,
    source_norm_k: f64,
    vol: f64,
    summary: Vec<crate::netx::SweepSummary>,
    slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SweepSidecar {
    problems: Vec<SweepProblem>,
    iterations_identical: bool,
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::new(EXIT_FAILURE, format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::new(EXIT_FAILURE, e.to_string()))?;
    write_out(path, &String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Path of the JSON sidecar next to a CSV table.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn sweep_cmd(cli: &Cli, a: &SweepArgs) -> Result<i32, CliError> {
    let (lo, hi) = (a.bx[0], a.bx[1]);
    let files: Vec<&PathBuf> = std::iter::once(&a.problem).chain(&a.dims).collect();
    let mut blobs = Vec::with_capacity(files.len());
    for f in &files {
        blobs.push(read_input(f)?);
    }
    let inputs: Vec<(String, &[u8])> = files.iter().zip(&blobs).map(|(f, b)| (show(f), b.as_slice())).collect();
    let input_refs: Vec<(&str, &[u8])> = inputs.iter().map(|(p, b)| (p.as_str(), *b)).collect();

    let mut rate_rows = Vec::new();
    let mut dim_rows = Vec::new();
    let mut problems = Vec::new();
    let mut all_opts = Vec::new();
    for (path, bytes) in files.iter().zip(&blobs) {
        let (p, doc) = load_problem(path, bytes)?;
        let opts = solve_options(cli, &doc, None);
        let (u, report): (AtomMap, SolveReport) = match solve(&p, &opts) {
            Ok(r) => r,
            Err(SolveError::Diverged { reason, .. }) => {
                return Err(CliError::new(EXIT_DIVERGED, format!("{}: iteration diverged: {reason}", path.display())))
            }
            Err(e) => return Err(solve_error(e)),
        };
        if !report.certified {
            return Err(CliError::new(
                EXIT_PRECONDITION,
                format!("{}: sweeps need a certified solve, but only (A3) holds", path.display()),
            ));
        }
        let d = p.dim();
        let bx = DomainBox::new(vec![lo; d], vec![hi; d]).map_err(|e| CliError::new(EXIT_USAGE, e.to_string()))?;
        let sweep = rate_sweep(&u, a.k, &bx, &a.n_list, a.seeds, cli.seed).map_err(net_error)?;
        rate_rows.extend(sweep.rows.iter().map(|r| RateCsvRow {
            d,
            n: r.n,
            seed: r.seed,
            err: r.err,
            bound: r.bound,
            mean_sq_err: r.mean_sq_err,
        }));
        dim_rows.push(DimCsvRow {
            d,
            iterations: report.iterations,
            certified: report.certified,
            u_norm_s2: report.u_norm_s2,
            bound_rhs: report.bound_rhs,
            error_bound: report.error_bound,
            source_norm_k: sweep.source_norm,
            slope: sweep.slope,
        });
        println!(
            "{}: d={d} iterations={} u_norm_s2={:e} slope={}",
            path.display(),
            report.iterations,
            report.u_norm_s2,
            fmt_opt(sweep.slope)
        );
        problems.push(SweepProblem {
            path: show(path),
            d,
            iterations: report.iterations,
            source_norm_k: sweep.source_norm,
            vol: sweep.vol,
            summary: sweep.summary,
            slope: sweep.slope,
        });
        all_opts.push(opts);
    }
    let iterations_identical = dim_rows.windows(2).all(|w| w[0].iterations == w[1].iterations);
    if files.len() > 1 {
        println!("iteration counts identical across problems: {iterations_identical}");
    }

    let mut manifest = RunManifest::new("sweep")
        .with_inputs(&input_refs)
        .option("n_list", &a.n_list)
        .option("replicates", a.seeds)
        .option("box", [lo, hi])
        .option("k", a.k)
        .option("solve", &all_opts)
        .seed(cli.seed);
    manifest.problem_path = Some(show(&a.problem));
    write_csv(&a.out_csv, &rate_rows)?;
    if let Some(dc) = &a.dims_csv {
        write_csv(dc, &dim_rows)?;
    }
    let sidecar = Envelope::new(manifest, SweepSidecar { problems, iterations_identical });
    write_out(&sidecar_path(&a.out_csv), &to_pretty(&sidecar))?;
    Ok(EXIT_OK)
}

fn counterexample(eps: f64, hmin: f64, dim: usize, out: &Path) -> Result<i32, CliError> {
    if dim == 0 {
        return Err(CliError::new(EXIT_USAGE, "--dim must be positive"));
    }
    let lattice = Lattice::isotropic(dim, hmin).map_err(|e| CliError::new(EXIT_USAGE, format!("--hmin: {e}")))?;
    let eta = counterexample_eta(eps, &lattice).map_err(|e| match e {
        ProblemError::Construction(m) => CliError::new(EXIT_PRECONDITION, format!("{m} (reduce --hmin)")),
        other => CliError::new(EXIT_USAGE, other.to_string()),
    })?;
    let verdict = ellipticity_verdict(&eta, eps);
    let manifest = RunManifest::new("counterexample").option("eps", eps).option("hmin", hmin).option("dim", dim);
    let mut doc = eta.to_doc(true);
    doc.manifest = Some(manifest);
    write_out(out, &to_pretty(&doc))?;
    println!("norm_b1={}", verdict.norm_b1);
    println!("eta_at_origin={}", verdict.eta_at_origin);
    println!("one_plus_eta_at_origin={}", verdict.margin);
    println!("verdict={}", if verdict.fails_ellipticity { "FAIL-ELLIPTICITY" } else { "ELLIPTIC" });
    Ok(EXIT_OK)
}

/// Norm inequality record for the product check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormCheck {
    pub s: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductCheck {
    pub samples: usize,
    pub max_rel_error: f64,
    pub max_error: f64,
    pub norms: Vec<NormCheck>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub samples: usize,
    pub max_abs_error: f64,
    /// `‖g‖_{B^3}`, the scale of the error gate.
    pub scale: f64,
    pub max_error: f64,
    pub norms: Vec<NormCheck>,
    pub pass: bool,
}

/// Relative slack on norm inequalities, covering rounding in the compensated sums.
const NORM_SLACK: f64 = 1e-12;

fn norm_check(s: f64, lhs: f64, rhs: f64) -> NormCheck {
    NormCheck { s, lhs, rhs, holds: lhs <= rhs * (1.0 + NORM_SLACK) }
}

fn emit<T: Serialize>(manifest: RunManifest, result: &T, out: Option<&Path>) -> Result<(), CliError> {
    let text = to_pretty(&Envelope::new(manifest, result));
    print!("{text}");
    if let Some(out) = out {
        write_out(out, &text)?;
    }
    Ok(())
}

fn oracle(cli: &Cli, o: &OracleCommand) -> Result<i32, CliError> {
    match o {
        OracleCommand::Residual { problem, solution, points, mode, max_residual, out } => {
            let pb = read_input(problem)?;
            let sb = read_input(solution)?;
            let (p, _) = load_problem(problem, &pb)?;
            let u = load_atoms(solution, &sb, Some(p.lattice()))?;
            let mode: ResidualMode = (*mode).into();
            let stats = residual_pointwise(&u, &p, *points, cli.seed, mode);
            let mut manifest = RunManifest::new("oracle residual")
                .with_inputs(&[(&show(problem), &pb), (&show(solution), &sb)])
                .option("points", points)
                .option("mode", mode)
                .option("max_residual", max_residual)
                .seed(cli.seed);
            manifest.problem_path = Some(show(problem));
            emit(manifest, &stats, out.as_deref())?;
            match max_residual {
                Some(m) if stats.linf.is_nan() || stats.linf > *m => {
                    eprintln!("residual gate failed: linf = {} > {m}", stats.linf);
                    Ok(EXIT_FAILURE)
                }
                _ => Ok(EXIT_OK),
            }
        }
        OracleCommand::Product { g, h, samples, max_error, out } => {
            let gb = read_input(g)?;
            let hb = read_input(h)?;
            let gm = load_atoms(g, &gb, None)?;
            let hm = load_atoms(h, &hb, Some(gm.lattice()))?;
            let err = pointwise_product_check(&gm, &hm, *samples, cli.seed).map_err(atom_error)?;
            let prod =
                gm.multiply_capped(&hm, cli.atom_cap.unwrap_or(crate::atoms::DEFAULT_ATOM_CAP)).map_err(atom_error)?;
            let mut norms = Vec::new();
            for s in [0.0, 1.0, 2.0] {
                let n = |m: &AtomMap| m.barron_norm(s).map_err(atom_error);
                norms.push(norm_check(s, n(&prod)?, n(&gm)? * n(&hm)?));
            }
            let pass = err <= *max_error && norms.iter().all(|c| c.holds);
            let check = ProductCheck { samples: *samples, max_rel_error: err, max_error: *max_error, norms, pass };
            let manifest = RunManifest::new("oracle product")
                .with_inputs(&[(&show(g), &gb), (&show(h), &hb)])
                .option("samples", samples)
                .option("max_error", max_error)
                .seed(cli.seed);
            emit(manifest, &check, out.as_deref())?;
            Ok(if pass { EXIT_OK } else { EXIT_FAILURE })
        }
        OracleCommand::Derivative { g, samples, max_error, out } => {
            let gb = read_input(g)?;
            let gm = load_atoms(g, &gb, None)?;
            let err = fd_partial_check(&gm, *samples, cli.seed);
            let scale = gm.barron_norm(3.0).map_err(atom_error)?;
            let mut norms = Vec::new();
            for s in [1.0, 2.0, 3.0] {
                let whole = gm.barron_norm(s).map_err(atom_error)?;
                for i in 0..gm.dim() {
                    let part = gm.partial_axis(i).barron_norm(s - 1.0).map_err(atom_error)?;
                    norms.push(norm_check(s, part, std::f64::consts::FRAC_1_SQRT_2 * whole));
                }
            }
            let pass = err <= *max_error * scale && norms.iter().all(|c| c.holds);
            let check =
                DerivativeCheck { samples: *samples, max_abs_error: err, scale, max_error: *max_error, norms, pass };
            let manifest = RunManifest::new("oracle derivative")
                .with_inputs(&[(&show(g), &gb)])
                .option("samples", samples)
                .option("max_error", max_error)
                .seed(cli.seed);
            emit(manifest, &check, out.as_deref())?;
            Ok(if pass { EXIT_OK } else { EXIT_FAILURE })
        }
    }
}
