//! Elliptic problem data, the smallness assumptions on its coefficients, and the explicit
//! constants that follow from them.
//!
//! The operator is `−∇·((M + E)∇u) + (β + v)·∇u + (α + w)u = f` where `M`, `β`, `α` are
//! constant and `E`, `v`, `w`, `f` are atom sums on a common lattice.

mod constructions;
pub mod families;
mod io;

pub use constructions::{
    counterexample_eta, discretize_gaussian, ellipticity_verdict, neuron_bound, EllipticityVerdict, GaussianSource,
};
pub use io::{parse_json, ProblemDoc, SchemaError, SolverDoc};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atoms::{AtomError, AtomMap, Lattice};
use crate::sum::NeumaierSum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("problem shape error: {0}")]
    Shape(String),
    #[error(transparent)]
    Atoms(#[from] AtomError),
    #[error("validation failed: {}", .clauses.join("; "))]
    Validation { clauses: Vec<String> },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("construction error: {0}")]
    Construction(String),
}

/// Tolerance for the symmetry check on the constant diffusion matrix.
const MATRIX_SYMMETRY_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct EllipticProblem {
    lattice: Lattice,
    order: f64,
    reaction: f64,
    advection: Vec<f64>,
    diffusion: Vec<Vec<f64>>,
    diffusion_perturbation: Vec<Vec<AtomMap>>,
    advection_perturbation: Vec<AtomMap>,
    reaction_perturbation: AtomMap,
    source: AtomMap,
}

impl EllipticProblem {
    /// Full constructor. Checks shapes and that every atom map lives on `lattice`; symmetry
    /// and definiteness are left to [`validate`](Self::validate).
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        lattice: Lattice,
        order: f64,
        reaction: f64,
        advection: Vec<f64>,
        diffusion: Vec<Vec<f64>>,
        diffusion_perturbation: Vec<Vec<AtomMap>>,
        advection_perturbation: Vec<AtomMap>,
        reaction_perturbation: AtomMap,
        source: AtomMap,
    ) -> Result<Self, ProblemError> {
        let d = lattice.dim();
        if !(order.is_finite() && order >= 0.0) {
            return Err(ProblemError::Shape(format!("order s must be finite and >= 0, got {order}")));
        }
        if !(reaction.is_finite() && reaction > 0.0) {
            return Err(ProblemError::Shape(format!("alpha must be positive, got {reaction}")));
        }
        if advection.len() != d || advection.iter().any(|b| !b.is_finite()) {
            return Err(ProblemError::Shape(format!("beta must hold {d} finite entries")));
        }
        if diffusion.len() != d || diffusion.iter().any(|r| r.len() != d || r.iter().any(|x| !x.is_finite())) {
            return Err(ProblemError::Shape(format!("M must be a finite {d}x{d} matrix")));
        }
        if diffusion_perturbation.len() != d || diffusion_perturbation.iter().any(|r| r.len() != d) {
            return Err(ProblemError::Shape(format!("E must be a {d}x{d} array")));
        }
        if advection_perturbation.len() != d {
            return Err(ProblemError::Shape(format!("v must hold {d} entries")));
        }
        let all_maps = diffusion_perturbation
            .iter()
            .flatten()
            .chain(&advection_perturbation)
            .chain([&reaction_perturbation, &source]);
        for g in all_maps {
            if *g.lattice() != lattice {
                return Err(ProblemError::Atoms(AtomError::LatticeMismatch));
            }
        }
        Ok(Self {
            lattice,
            order,
            reaction,
            advection,
            diffusion,
            diffusion_perturbation,
            advection_perturbation,
            reaction_perturbation,
            source,
        })
    }

    /// Constant-coefficient problem `−∇·(M∇u) + β·∇u + αu = f`.
    pub fn constant_coefficient(
        lattice: Lattice,
        order: f64,
        reaction: f64,
        advection: Vec<f64>,
        diffusion: Vec<Vec<f64>>,
        source: AtomMap,
    ) -> Result<Self, ProblemError> {
        let d = lattice.dim();
        let zero = AtomMap::zero(lattice.clone());
        Self::new(
            lattice,
            order,
            reaction,
            advection,
            diffusion,
            vec![vec![zero.clone(); d]; d],
            vec![zero.clone(); d],
            zero,
            source,
        )
    }

    /// Sets `e_ij` and `e_ji` to `g`.
    pub fn with_diffusion_perturbation(mut self, i: usize, j: usize, g: AtomMap) -> Result<Self, ProblemError> {
        self.check_map(&g)?;
        self.check_axis(i)?;
        self.check_axis(j)?;
        self.diffusion_perturbation[i][j] = g.clone();
        self.diffusion_perturbation[j][i] = g;
        Ok(self)
    }

    pub fn with_advection_perturbation(mut self, i: usize, g: AtomMap) -> Result<Self, ProblemError> {
        self.check_map(&g)?;
        self.check_axis(i)?;
        self.advection_perturbation[i] = g;
        Ok(self)
    }

    pub fn with_reaction_perturbation(mut self, g: AtomMap) -> Result<Self, ProblemError> {
        self.check_map(&g)?;
        self.reaction_perturbation = g;
        Ok(self)
    }

    pub fn with_source(mut self, g: AtomMap) -> Result<Self, ProblemError> {
        self.check_map(&g)?;
        self.source = g;
        Ok(self)
    }

    fn check_map(&self, g: &AtomMap) -> Result<(), ProblemError> {
        if *g.lattice() != self.lattice {
            return Err(AtomError::LatticeMismatch.into());
        }
        Ok(())
    }

    fn check_axis(&self, i: usize) -> Result<(), ProblemError> {
        if i >= self.dim() {
            return Err(ProblemError::Shape(format!("axis {i} out of range for d = {}", self.dim())));
        }
        Ok(())
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }
    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }
    /// Barron order `s` of the data.
    pub fn order(&self) -> f64 {
        self.order
    }
    /// Constant part `α` of the reaction coefficient.
    pub fn reaction(&self) -> f64 {
        self.reaction
    }
    /// Constant drift `β`.
    pub fn advection(&self) -> &[f64] {
        &self.advection
    }
    /// Constant diffusion matrix `M`.
    pub fn diffusion(&self) -> &[Vec<f64>] {
        &self.diffusion
    }
    /// `E = (e_ij)`.
    pub fn diffusion_perturbation(&self) -> &[Vec<AtomMap>] {
        &self.diffusion_perturbation
    }
    /// `v = (v_i)`.
    pub fn advection_perturbation(&self) -> &[AtomMap] {
        &self.advection_perturbation
    }
    /// `w`.
    pub fn reaction_perturbation(&self) -> &AtomMap {
        &self.reaction_perturbation
    }
    /// `f`.
    pub fn source(&self) -> &AtomMap {
        &self.source
    }

    pub fn has_diffusion_perturbation(&self) -> bool {
        self.diffusion_perturbation.iter().flatten().any(|g| !g.is_empty())
    }

    pub fn diffusion_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.diffusion[i][j])
    }

    /// Extreme eigenvalues `(λ_min, λ_max)` of the symmetrized `M`.
    pub fn diffusion_spectrum(&self) -> (f64, f64) {
        let m = self.diffusion_matrix();
        let sym = (&m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// `‖E‖_{B^{s+1}} = Σ_ij ‖e_ij‖_{B^{s+1}}`.
    pub fn norm_diffusion_perturbation(&self) -> f64 {
        let s1 = self.order + 1.0;
        let mut acc = NeumaierSum::new();
        for g in self.diffusion_perturbation.iter().flatten() {
            acc += g.barron_norm(s1).expect("order validated at construction");
        }
        acc.value()
    }

    /// `‖v‖_{B^s} = Σ_i ‖v_i‖_{B^s}`.
    pub fn norm_advection_perturbation(&self) -> f64 {
        let mut acc = NeumaierSum::new();
        for g in &self.advection_perturbation {
            acc += g.barron_norm(self.order).expect("order validated at construction");
        }
        acc.value()
    }

    /// `‖w‖_{B^s}`.
    pub fn norm_reaction_perturbation(&self) -> f64 {
        self.reaction_perturbation.barron_norm(self.order).expect("order validated at construction")
    }

    pub fn source_norm(&self) -> f64 {
        self.source.barron_norm(self.order).expect("order validated at construction")
    }

    /// Structural checks that must hold before any constant is meaningful.
    fn structural_violations(&self) -> Vec<String> {
        let mut clauses = Vec::new();
        let d = self.dim();
        let scale = self.diffusion.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs())).max(f64::MIN_POSITIVE);
        for i in 0..d {
            for j in (i + 1)..d {
                let (a, b) = (self.diffusion[i][j], self.diffusion[j][i]);
                if (a - b).abs() > MATRIX_SYMMETRY_RTOL * scale {
                    clauses.push(format!("(A3) M is not symmetric: M[{i}][{j}] = {a} but M[{j}][{i}] = {b}"));
                }
                if self.diffusion_perturbation[i][j] != self.diffusion_perturbation[j][i] {
                    clauses.push(format!("(A3) E is not symmetric: e_{i}{j} differs from e_{j}{i}"));
                }
            }
        }
        if clauses.is_empty() {
            let (lo, _) = self.diffusion_spectrum();
            if lo.is_nan() || lo <= 0.0 {
                clauses.push(format!("(A3) M is not positive definite: smallest eigenvalue {lo}"));
            }
        }
        clauses
    }

    /// Check the smallness assumptions and compute every derived constant.
    ///
    /// Structural defects (asymmetric `M` or `E`, indefinite `M`) are errors; the strict
    /// inequalities are reported as booleans.
    pub fn validate(&self) -> Result<ValidationReport, ProblemError> {
        let clauses = self.structural_violations();
        if !clauses.is_empty() {
            return Err(ProblemError::Validation { clauses });
        }
        let (m, _) = self.diffusion_spectrum();
        let norm_e = self.norm_diffusion_perturbation();
        let norm_v = self.norm_advection_perturbation();
        let norm_w = self.norm_reaction_perturbation();
        let k = norm_e + norm_w + norm_v;
        let mu = self.reaction.min(m);
        let a3 = norm_e < mu;
        let a3p = k < mu;
        let w_sup = self.reaction_perturbation.l1_amplitude();
        let a1_certificate = self.reaction >= w_sup;

        let mut messages = Vec::new();
        if a3 {
            messages.push(format!("(A3) holds: ||E||_B^(s+1) = {norm_e} < min(alpha, m) = {mu}"));
        } else {
            messages.push(format!("(A3) fails: ||E||_B^(s+1) = {norm_e} >= min(alpha, m) = {mu}"));
        }
        if a3p {
            messages.push(format!("(A3') holds: K = {k} < {mu}"));
        } else {
            messages.push(format!("(A3') fails: K = {k} >= {mu}"));
        }
        if a1_certificate {
            messages.push(format!("(A1) certified: alpha = {} >= ||w||_B^0 = {w_sup}", self.reaction));
        } else {
            messages.push(format!(
                "(A1) not certified: alpha = {} < ||w||_B^0 = {w_sup}; pointwise c >= 0 undecided",
                self.reaction
            ));
        }

        let constants = a3.then(|| Constants::from_norms(m, norm_e, norm_w, norm_v, self.reaction));
        Ok(ValidationReport { a3_holds: a3, a3prime_holds: a3p, a1_certificate, constants, messages })
    }
}

/// Every constant derived from the coefficient norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub m: f64,
    #[serde(rename = "norm_E")]
    pub norm_e: f64,
    pub norm_w: f64,
    pub norm_v: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub mu: f64,
    /// `2 / (μ − ‖E‖)`: bound of the variable-diffusion solve `B^s → B^{s+2}`.
    #[serde(rename = "L")]
    pub l: f64,
    pub q_inner: f64,
    pub q_outer: Option<f64>,
    #[serde(rename = "C_sharp")]
    pub c_sharp: Option<f64>,
    #[serde(rename = "C_simple")]
    pub c_simple: Option<f64>,
}

impl Constants {
    /// Requires `norm_e < min(alpha, m)`.
    pub fn from_norms(m: f64, norm_e: f64, norm_w: f64, norm_v: f64, alpha: f64) -> Self {
        let mu = alpha.min(m);
        let k = norm_e + norm_w + norm_v;
        let gap = mu - norm_e;
        let l = 2.0 / gap;
        let q_inner = norm_e / mu;
        let lower = norm_w + norm_v;
        let a3p = k < mu;
        let q_outer = a3p.then(|| lower / gap);
        let c_sharp = a3p.then(|| 2.0 * (gap + lower) / (gap * (gap - lower)));
        let c_simple = a3p.then(|| 2.0 * (mu + k) / (mu * (mu - k)));
        Self { m, norm_e, norm_w, norm_v, k, mu, l, q_inner, q_outer, c_sharp, c_simple }
    }

    /// Contraction factor `K / μ` of the single-loop iteration.
    pub fn q_combined(&self) -> f64 {
        self.k / self.mu
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub a3_holds: bool,
    pub a3prime_holds: bool,
    /// `α ≥ ‖w‖_{B^0}`, a sufficient condition for `c(x) ≥ 0`.
    pub a1_certificate: bool,
    pub constants: Option<Constants>,
    pub messages: Vec<String>,
}
