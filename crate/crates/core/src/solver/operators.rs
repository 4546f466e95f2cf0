//! Fourier-multiplier and convolution operators assembled from the problem coefficients.

use num_complex::Complex64;

use super::SolveError;
use crate::atoms::AtomMap;
use crate::problem::EllipticProblem;

/// The constant-coefficient part `α + β·∇ − ∇·(M∇)`, with symbol `α + iξ·β + ξᵀMξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantOperator {
    alpha: f64,
    beta: Vec<f64>,
    m: Vec<Vec<f64>>,
}

impl ConstantOperator {
    /// Requires `α > 0` and `M` positive definite so the symbol never vanishes.
    pub fn new(alpha: f64, beta: Vec<f64>, m: Vec<Vec<f64>>) -> Result<Self, SolveError> {
        let d = beta.len();
        if m.len() != d || m.iter().any(|r| r.len() != d) {
            return Err(SolveError::Precondition(format!("M must be {d}x{d}")));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(SolveError::Precondition(format!("alpha must be positive, got {alpha}")));
        }
        let mat = nalgebra::DMatrix::from_fn(d, d, |i, j| 0.5 * (m[i][j] + m[j][i]));
        let lo = nalgebra::SymmetricEigen::new(mat).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if lo.is_nan() || lo <= 0.0 {
            return Err(SolveError::Precondition(format!("M is not positive definite: smallest eigenvalue {lo}")));
        }
        Ok(Self { alpha, beta, m })
    }

    pub fn of(p: &EllipticProblem) -> Result<Self, SolveError> {
        Self::new(p.reaction(), p.advection().to_vec(), p.diffusion().to_vec())
    }

    pub fn symbol(&self, xi: &[f64]) -> Complex64 {
        let drift: f64 = xi.iter().zip(&self.beta).map(|(a, b)| a * b).sum();
        let mut quad = 0.0;
        for (i, row) in self.m.iter().enumerate() {
            for (j, mij) in row.iter().enumerate() {
                quad += xi[i] * mij * xi[j];
            }
        }
        Complex64::new(self.alpha + quad, drift)
    }

    pub fn apply(&self, u: &AtomMap) -> AtomMap {
        u.map_half(|xi, c| c * self.symbol(xi))
    }

    pub fn invert(&self, g: &AtomMap) -> AtomMap {
        g.map_half(|xi, c| c / self.symbol(xi))
    }
}

/// `L₀u` for the constant part of `p`.
pub fn l0_apply(u: &AtomMap, p: &EllipticProblem) -> Result<AtomMap, SolveError> {
    Ok(ConstantOperator::of(p)?.apply(u))
}

/// `L₀⁻¹g` for the constant part of `p`.
pub fn l0_inv(g: &AtomMap, p: &EllipticProblem) -> Result<AtomMap, SolveError> {
    Ok(ConstantOperator::of(p)?.invert(g))
}

/// `Σ_i ∂_i(Σ_j e_ij ∂_j u)`.
pub fn div_e_grad(e: &[Vec<AtomMap>], u: &AtomMap, cap: usize) -> Result<AtomMap, SolveError> {
    let d = u.dim();
    let mut out = AtomMap::zero(u.lattice().clone());
    let grads: Vec<Option<AtomMap>> =
        (0..d).map(|j| e.iter().any(|row| !row[j].is_empty()).then(|| u.partial_axis(j))).collect();
    for (i, row) in e.iter().enumerate() {
        let mut flux = AtomMap::zero(u.lattice().clone());
        for (j, eij) in row.iter().enumerate() {
            if eij.is_empty() {
                continue;
            }
            let gj = grads[j].as_ref().expect("gradient built for every used column");
            flux = flux.add(&eij.multiply_capped(gj, cap)?)?;
        }
        if !flux.is_empty() {
            out = out.add(&flux.partial_axis(i))?;
        }
    }
    Ok(out)
}

/// `w u + Σ_i v_i ∂_i u`.
pub fn lower_order(u: &AtomMap, p: &EllipticProblem, cap: usize) -> Result<AtomMap, SolveError> {
    let mut out = if p.reaction_perturbation().is_empty() {
        AtomMap::zero(u.lattice().clone())
    } else {
        p.reaction_perturbation().multiply_capped(u, cap)?
    };
    for (i, vi) in p.advection_perturbation().iter().enumerate() {
        if !vi.is_empty() {
            out = out.add(&vi.multiply_capped(&u.partial_axis(i), cap)?)?;
        }
    }
    Ok(out)
}

/// The full operator `−∇·((M + E)∇u) + (β + v)·∇u + (α + w)u`.
pub fn apply_l(u: &AtomMap, p: &EllipticProblem, cap: usize) -> Result<AtomMap, SolveError> {
    let base = l0_apply(u, p)?;
    let div = div_e_grad(p.diffusion_perturbation(), u, cap)?;
    let low = lower_order(u, p, cap)?;
    Ok(base.sub(&div)?.add(&low)?)
}

/// `p` with its source replaced by `L u_exact`, so `u_exact` is the exact solution.
pub fn manufacture(p: &EllipticProblem, u_exact: &AtomMap, cap: usize) -> Result<EllipticProblem, SolveError> {
    let f = apply_l(u_exact, p, cap)?;
    Ok(p.clone().with_source(f)?)
}

/// Factor `S` with `sup_x |L e(x)| ≤ S ‖e‖_{B^{s+2}}` for every atom sum `e`.
///
/// From `|α + iξ·β + ξᵀMξ| ≤ (max(α, λ_max) + |β|/2)(1 + ‖ξ‖²)` and the product and derivative
/// bounds for the perturbation terms, embedded into `B^0`.
pub fn symbol_factor(p: &EllipticProblem) -> f64 {
    let s = p.order();
    let (_, hi) = p.diffusion_spectrum();
    let beta = p.advection().iter().map(|b| b * b).sum::<f64>().sqrt();
    let principal = (p.reaction().max(hi) + 0.5 * beta) * 2f64.powf(-(s + 2.0) / 2.0);
    let k = p.norm_diffusion_perturbation() + p.norm_reaction_perturbation() + p.norm_advection_perturbation();
    principal + 2f64.powf(-s / 2.0) * 0.5 * k
}
