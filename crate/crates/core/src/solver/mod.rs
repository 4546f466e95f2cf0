//! Certified fixed-point solvers.
//!
//! Every loop runs `u_{k+1} = Ψ(u_k) + δ_k` from `u_0 = 0`, where `Ψ` is a contraction in
//! `B^{s+2}` with factor `q` and `δ_k` collects pruning and inner-solve error. After each step
//! the distance to the fixed point is bounded by `(q‖u_{k+1} − u_k‖ + ‖δ_k‖) / (1 − q)`; the loop
//! stops once that bound is at most `tol`.

mod operators;

pub use operators::{apply_l, div_e_grad, l0_apply, l0_inv, lower_order, manufacture, symbol_factor, ConstantOperator};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atoms::{AtomError, AtomMap, DEFAULT_ATOM_CAP};
use crate::oracle::{residual_pointwise, ResidualMode};
use crate::problem::{Constants, EllipticProblem, ProblemError, SolverDoc};
use crate::FORMAT_VERSION;

/// Outer iteration structure.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    /// `u ← L₀⁻¹(f + ∇·E∇u − wu − v·∇u)`, factor `K / μ`.
    #[default]
    Combined,
    /// `u ← L_A⁻¹(f − wu − v·∇u)` with an inner variable-diffusion solve, factor
    /// `(‖w‖ + ‖v‖) / (μ − ‖E‖)`.
    Nested,
}

/// Which loop produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Combined,
    Nested,
    Inner,
}

impl From<SolveMode> for Scheme {
    fn from(m: SolveMode) -> Self {
        match m {
            SolveMode::Combined => Scheme::Combined,
            SolveMode::Nested => Scheme::Nested,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub mode: SolveMode,
    /// Target `B^{s+2}` distance between the returned iterate and the exact solution.
    pub tol: f64,
    /// Fraction of `tol` that pruning may spend in total.
    pub prune_tau_frac: f64,
    pub max_iters: usize,
    /// Random points for the pointwise residual check; 0 disables it.
    pub residual_points: usize,
    pub atom_cap: usize,
    /// Seed for residual sample points.
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            mode: SolveMode::Combined,
            tol: 1e-8,
            prune_tau_frac: 0.5,
            max_iters: 500,
            residual_points: 1000,
            atom_cap: DEFAULT_ATOM_CAP,
            seed: 0,
        }
    }
}

impl SolveOptions {
    /// Defaults overridden by a problem file's solver section.
    pub fn from_doc(doc: &SolverDoc) -> Self {
        let d = Self::default();
        Self {
            mode: doc.mode.unwrap_or(d.mode),
            tol: doc.tol.unwrap_or(d.tol),
            prune_tau_frac: doc.prune_tau_frac.unwrap_or(d.prune_tau_frac),
            max_iters: doc.max_iters.unwrap_or(d.max_iters),
            residual_points: doc.residual_points.unwrap_or(d.residual_points),
            ..d
        }
    }

    pub fn check(&self) -> Result<(), SolveError> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(SolveError::Options(format!("tol must be positive, got {}", self.tol)));
        }
        if !(0.0..1.0).contains(&self.prune_tau_frac) {
            return Err(SolveError::Options(format!("prune_tau_frac must lie in [0, 1), got {}", self.prune_tau_frac)));
        }
        if self.max_iters == 0 {
            return Err(SolveError::Options("max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub format: u32,
    pub scheme: Scheme,
    /// `true` when the contraction factor is proven; `false` when it was estimated.
    pub certified: bool,
    pub iterations: usize,
    /// Total inner iterations (nested scheme only).
    pub inner_iterations: usize,
    /// `‖u_{k+1} − u_k‖_{B^{s+2}}`.
    pub increments: Vec<f64>,
    /// Ratios of successive increments.
    pub measured_rates: Vec<f64>,
    /// Contraction factor used by the stopping rule; absent if it could not be estimated.
    pub contraction_factor: Option<f64>,
    pub tol: f64,
    /// Bound on `‖u − u*‖_{B^{s+2}}` at termination; absent if none was established.
    pub error_bound: Option<f64>,
    /// Total `B^{s+2}` mass removed by pruning.
    pub prune_spent: f64,
    pub prune_budget: f64,
    pub atoms: usize,
    pub u_norm_s2: f64,
    /// `‖f‖_{B^s}` (or `‖g‖_{B^s}` for an inner solve).
    pub rhs_norm: f64,
    /// A-priori bound on `‖u*‖_{B^{s+2}}`: `C_sharp ‖f‖_{B^s}`, or `L ‖g‖_{B^s}` for an inner solve.
    pub bound_rhs: Option<f64>,
    /// `u_norm_s2 ≤ bound_rhs + tol`.
    pub regularity_holds: Option<bool>,
    pub residual_points: usize,
    pub residual_linf: Option<f64>,
    /// `S` such that `sup |L u − f| ≤ S ‖u − u*‖_{B^{s+2}}`.
    pub symbol_factor: f64,
    /// `residual_linf ≤ tol · symbol_factor`.
    pub residual_within_bound: Option<bool>,
    pub constants: Constants,
}

impl SolveReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("iteration diverged: {reason}")]
    Diverged { reason: String, report: Box<SolveReport> },
    #[error("invalid solver options: {0}")]
    Options(String),
    #[error(transparent)]
    Atoms(#[from] AtomError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Outcome of one fixed-point loop.
struct Trace {
    u: AtomMap,
    iterations: usize,
    increments: Vec<f64>,
    rates: Vec<f64>,
    q: Option<f64>,
    error_bound: Option<f64>,
    prune_spent: f64,
    prune_budget: f64,
}

struct LoopSettings {
    /// Proven contraction factor; `None` estimates it from the trace.
    q: Option<f64>,
    tol: f64,
    prune_tau_frac: f64,
    max_iters: usize,
    /// Barron order of the iterate space.
    order: f64,
    cap: usize,
}

/// Consecutive expanding steps tolerated before declaring divergence.
const DIVERGENCE_RUN: usize = 5;
/// Number of recent rates whose maximum serves as the estimated contraction factor.
const RATE_WINDOW: usize = 3;
/// Pruning per step is kept below this fraction of the raw step size.
const PRUNE_STEP_FRACTION: f64 = 0.002;

fn estimate_rate(rates: &[f64]) -> Option<f64> {
    if rates.len() < 2 {
        return None;
    }
    let tail = &rates[rates.len().saturating_sub(RATE_WINDOW)..];
    Some(tail.iter().copied().fold(0.0, f64::max))
}

/// Failure of a fixed-point loop before a report can be assembled.
enum LoopFailure {
    Error(SolveError),
    Diverged(String, Box<Trace>),
}

impl From<SolveError> for LoopFailure {
    fn from(e: SolveError) -> Self {
        LoopFailure::Error(e)
    }
}

impl From<AtomError> for LoopFailure {
    fn from(e: AtomError) -> Self {
        LoopFailure::Error(e.into())
    }
}

/// `step(u, previous increment)` returns `Ψ(u)` and a bound on its own error.
fn fixed_point<F>(start: AtomMap, cfg: &LoopSettings, mut step: F) -> Result<Trace, LoopFailure>
where
    F: FnMut(&AtomMap, Option<f64>) -> Result<(AtomMap, f64), SolveError>,
{
    let budget = cfg.prune_tau_frac * cfg.tol;
    let mut u = start;
    let mut trace = Trace {
        u: AtomMap::zero(u.lattice().clone()),
        iterations: 0,
        increments: Vec::new(),
        rates: Vec::new(),
        q: cfg.q,
        error_bound: None,
        prune_spent: 0.0,
        prune_budget: budget,
    };
    let mut expanding = 0usize;
    for _ in 0..cfg.max_iters {
        let prev = trace.increments.last().copied();
        let (raw, inexact) = step(&u, prev)?;
        trace.iterations += 1;

        let q_guess = cfg.q.or_else(|| estimate_rate(&trace.rates));
        let (next, discarded) = if cfg.q == Some(0.0) || budget == 0.0 {
            (raw, 0.0)
        } else {
            let raw_incr = raw.sub(&u)?.barron_norm(cfg.order)?;
            let slack = 1.0 - q_guess.unwrap_or(0.5).clamp(0.0, 0.99);
            let tau = (budget - trace.prune_spent).max(0.0).min(PRUNE_STEP_FRACTION * raw_incr).min(budget * slack);
            raw.prune(cfg.order, tau)?
        };
        trace.prune_spent += discarded;
        if next.len() > cfg.cap {
            return Err(SolveError::Atoms(AtomError::Resource { requested: next.len(), cap: cfg.cap }).into());
        }

        let incr = next.sub(&u)?.barron_norm(cfg.order)?;
        if let Some(p) = prev {
            if p > 0.0 {
                trace.rates.push(incr / p);
            }
        }
        trace.increments.push(incr);
        u = next;
        if !incr.is_finite() {
            trace.u = u;
            return Err(LoopFailure::Diverged("non-finite increment".into(), Box::new(trace)));
        }

        let perturbation = discarded + inexact;
        if incr == 0.0 && perturbation == 0.0 {
            trace.error_bound = Some(0.0);
            trace.q = q_guess.or(Some(0.0));
            trace.u = u;
            return Ok(trace);
        }
        let q_now = cfg.q.or_else(|| estimate_rate(&trace.rates));
        if let Some(q) = q_now {
            if q < 1.0 {
                let bound = (q * incr + perturbation) / (1.0 - q);
                trace.q = Some(q);
                trace.error_bound = Some(bound);
                if bound <= cfg.tol {
                    trace.u = u;
                    return Ok(trace);
                }
            }
        }
        if cfg.q.is_none() {
            match trace.rates.last() {
                Some(&r) if r >= 1.0 => expanding += 1,
                _ => expanding = 0,
            }
            if expanding >= DIVERGENCE_RUN {
                trace.u = u;
                return Err(LoopFailure::Diverged(
                    format!("increments grew for {DIVERGENCE_RUN} consecutive iterations"),
                    Box::new(trace),
                ));
            }
        }
    }
    trace.u = u;
    Err(LoopFailure::Diverged(format!("no certificate within {} iterations", cfg.max_iters), Box::new(trace)))
}

fn require_a3(p: &EllipticProblem) -> Result<Constants, SolveError> {
    let report = p.validate()?;
    match report.constants {
        Some(c) if report.a3_holds => Ok(c),
        _ => Err(SolveError::Precondition(format!(
            "(A3) fails: ||E||_B^(s+1) = {} is not below min(alpha, m)",
            p.norm_diffusion_perturbation()
        ))),
    }
}

struct ReportParts<'a> {
    scheme: Scheme,
    certified: bool,
    inner_iterations: usize,
    tol: f64,
    rhs_norm: f64,
    bound_rhs: Option<f64>,
    symbol_factor: f64,
    constants: &'a Constants,
}

fn assemble(trace: &Trace, parts: ReportParts<'_>, order: f64) -> Result<SolveReport, SolveError> {
    let u_norm_s2 = trace.u.barron_norm(order + 2.0)?;
    Ok(SolveReport {
        format: FORMAT_VERSION,
        scheme: parts.scheme,
        certified: parts.certified,
        iterations: trace.iterations,
        inner_iterations: parts.inner_iterations,
        increments: trace.increments.clone(),
        measured_rates: trace.rates.clone(),
        contraction_factor: trace.q,
        tol: parts.tol,
        error_bound: trace.error_bound,
        prune_spent: trace.prune_spent,
        prune_budget: trace.prune_budget,
        atoms: trace.u.len(),
        u_norm_s2,
        rhs_norm: parts.rhs_norm,
        bound_rhs: parts.bound_rhs,
        regularity_holds: parts.bound_rhs.map(|b| u_norm_s2 <= b + parts.tol),
        residual_points: 0,
        residual_linf: None,
        symbol_factor: parts.symbol_factor,
        residual_within_bound: None,
        constants: parts.constants.clone(),
    })
}

fn finish(
    result: Result<Trace, LoopFailure>,
    parts: ReportParts<'_>,
    order: f64,
) -> Result<(AtomMap, SolveReport), SolveError> {
    match result {
        Ok(trace) => {
            let report = assemble(&trace, parts, order)?;
            Ok((trace.u, report))
        }
        Err(LoopFailure::Error(e)) => Err(e),
        Err(LoopFailure::Diverged(reason, trace)) => {
            let mut report = assemble(&trace, parts, order)?;
            report.certified = false;
            Err(SolveError::Diverged { reason, report: Box::new(report) })
        }
    }
}

/// Inner loop `u ← L₀⁻¹(g + ∇·E∇u)` for `L_A u = g` with `L_A = L₀ − ∇·E∇`.
fn inner_trace(
    g: &AtomMap,
    p: &EllipticProblem,
    c: &Constants,
    op: &ConstantOperator,
    tol: f64,
    opts: &SolveOptions,
    start: AtomMap,
) -> Result<Trace, LoopFailure> {
    let cfg = LoopSettings {
        q: Some(c.q_inner),
        tol,
        prune_tau_frac: opts.prune_tau_frac,
        max_iters: opts.max_iters,
        order: p.order() + 2.0,
        cap: opts.atom_cap,
    };
    let e = p.diffusion_perturbation();
    fixed_point(start, &cfg, |u, _| {
        let rhs = if p.has_diffusion_perturbation() { g.add(&div_e_grad(e, u, opts.atom_cap)?)? } else { g.clone() };
        Ok((op.invert(&rhs), 0.0))
    })
}

/// Solve `−∇·((M + E)∇u) + β·∇u + αu = g`, ignoring the problem's `v`, `w` and `f`.
///
/// Requires `‖E‖_{B^{s+1}} < min(α, m)`. The result is within `opts.tol` of the exact solution
/// in `B^{s+2}`.
pub fn inner_solve(
    g: &AtomMap,
    p: &EllipticProblem,
    opts: &SolveOptions,
) -> Result<(AtomMap, SolveReport), SolveError> {
    opts.check()?;
    let c = require_a3(p)?;
    let op = ConstantOperator::of(p)?;
    let start = AtomMap::zero(p.lattice().clone());
    let rhs_norm = g.barron_norm(p.order())?;
    let result = inner_trace(g, p, &c, &op, opts.tol, opts, start);
    let inner_problem = EllipticProblem::new(
        p.lattice().clone(),
        p.order(),
        p.reaction(),
        p.advection().to_vec(),
        p.diffusion().to_vec(),
        p.diffusion_perturbation().to_vec(),
        vec![AtomMap::zero(p.lattice().clone()); p.dim()],
        AtomMap::zero(p.lattice().clone()),
        g.clone(),
    )?;
    let parts = ReportParts {
        scheme: Scheme::Inner,
        certified: true,
        inner_iterations: 0,
        tol: opts.tol,
        rhs_norm,
        bound_rhs: Some(c.l * rhs_norm),
        symbol_factor: symbol_factor(&inner_problem),
        constants: &c,
    };
    finish(result, parts, p.order())
}

/// `T(u) = L_A⁻¹(wu + v·∇u)`, solved to `opts.tol`.
pub fn apply_t(u: &AtomMap, p: &EllipticProblem, opts: &SolveOptions) -> Result<AtomMap, SolveError> {
    let rhs = lower_order(u, p, opts.atom_cap)?;
    let mut inner = opts.clone();
    inner.residual_points = 0;
    Ok(inner_solve(&rhs, p, &inner)?.0)
}

/// Solve the full problem.
///
/// With `K < min(α, m)` the result is certified: `‖u − u*‖_{B^{s+2}} ≤ tol`. With only
/// `‖E‖_{B^{s+1}} < min(α, m)` the same iteration runs with an estimated contraction factor and
/// the report is marked uncertified.
pub fn solve(p: &EllipticProblem, opts: &SolveOptions) -> Result<(AtomMap, SolveReport), SolveError> {
    opts.check()?;
    let c = require_a3(p)?;
    let certified = c.k < c.mu;
    let op = ConstantOperator::of(p)?;
    let f = p.source();
    let order = p.order();
    let start = AtomMap::zero(p.lattice().clone());
    let cap = opts.atom_cap;
    let mut inner_iterations = 0usize;

    let result = match opts.mode {
        SolveMode::Combined => {
            let cfg = LoopSettings {
                q: certified.then(|| c.q_combined()),
                tol: opts.tol,
                prune_tau_frac: opts.prune_tau_frac,
                max_iters: opts.max_iters,
                order: order + 2.0,
                cap,
            };
            fixed_point(start, &cfg, |u, _| {
                let mut rhs = f.sub(&lower_order(u, p, cap)?)?;
                if p.has_diffusion_perturbation() {
                    rhs = rhs.add(&div_e_grad(p.diffusion_perturbation(), u, cap)?)?;
                }
                Ok((op.invert(&rhs), 0.0))
            })
        }
        SolveMode::Nested => {
            let q_outer = c.q_outer;
            let cfg = LoopSettings {
                q: q_outer,
                tol: opts.tol,
                prune_tau_frac: opts.prune_tau_frac,
                max_iters: opts.max_iters,
                order: order + 2.0,
                cap,
            };
            let lower = c.norm_w + c.norm_v;
            let slack = 1.0 - q_outer.unwrap_or(0.5);
            let base_inner_tol = (opts.tol / (4.0 * c.l * lower.max(1.0))).min(opts.tol * slack / 4.0);
            fixed_point(start, &cfg, |u, prev| {
                let g = f.sub(&lower_order(u, p, cap)?)?;
                let inner_tol = match prev {
                    Some(p_incr) if p_incr > 0.0 => base_inner_tol.min(1e-3 * p_incr),
                    _ => base_inner_tol,
                };
                match inner_trace(&g, p, &c, &op, inner_tol, opts, u.clone()) {
                    Ok(t) => {
                        inner_iterations += t.iterations;
                        Ok((t.u, t.error_bound.unwrap_or(inner_tol)))
                    }
                    Err(LoopFailure::Error(e)) => Err(e),
                    Err(LoopFailure::Diverged(reason, _)) => {
                        Err(SolveError::Precondition(format!("inner solve failed: {reason}")))
                    }
                }
            })
        }
    };

    let parts = ReportParts {
        scheme: opts.mode.into(),
        certified,
        inner_iterations,
        tol: opts.tol,
        rhs_norm: p.source_norm(),
        bound_rhs: c.c_sharp.map(|cs| cs * p.source_norm()),
        symbol_factor: symbol_factor(p),
        constants: &c,
    };
    let (u, mut report) = finish(result, parts, order)?;
    if opts.residual_points > 0 {
        let stats = residual_pointwise(&u, p, opts.residual_points, opts.seed, ResidualMode::Analytic);
        report.residual_points = stats.points;
        report.residual_linf = Some(stats.linf);
        report.residual_within_bound = Some(stats.linf <= opts.tol * report.symbol_factor);
    }
    Ok((u, report))
}
