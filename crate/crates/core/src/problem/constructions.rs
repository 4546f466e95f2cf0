use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ProblemError;
use crate::atoms::{is_canonical, is_zero_index, AtomMap, Index, Lattice};

/// `max(1, ⌈C² |Ω| ‖f‖² ε⁻²⌉)` neurons suffice for `H^{k+2}` accuracy `ε`.
pub fn neuron_bound(c: f64, vol: f64, f_norm: f64, eps: f64) -> Result<u64, ProblemError> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(ProblemError::Domain(format!("accuracy eps must be positive, got {eps}")));
    }
    if !(c.is_finite() && c > 0.0) || !(vol.is_finite() && vol > 0.0) {
        return Err(ProblemError::Domain("C and the domain volume must be positive".into()));
    }
    if !(f_norm.is_finite() && f_norm >= 0.0) {
        return Err(ProblemError::Domain(format!("source norm must be nonnegative, got {f_norm}")));
    }
    let root = c * f_norm / eps;
    let value = root * root * vol;
    // Snap representation noise (e.g. from eps = 0.1) onto the nearest integer before rounding up.
    let nearest = value.round();
    let n = if (value - nearest).abs() <= 8.0 * f64::EPSILON * value.max(1.0) { nearest } else { value.ceil() };
    if n > u64::MAX as f64 {
        return Err(ProblemError::Domain("neuron count overflows u64".into()));
    }
    Ok((n as u64).max(1))
}

/// Lattice discretization of the standard Gaussian density.
#[derive(Debug, Clone)]
pub struct GaussianSource {
    pub map: AtomMap,
    pub radius: f64,
    /// Upper bound on the `B^0` mass of the spectrum outside the ball of radius `radius`.
    pub tail_bound: f64,
}

/// Midpoint-rule discretization of `φ̂(ξ) = (2π)^{-d} e^{-‖ξ‖²/2}` on the lattice, truncated to
/// `‖ξ‖ ≤ radius`.
pub fn discretize_gaussian(lattice: &Lattice, radius: f64, cap: usize) -> Result<GaussianSource, ProblemError> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(ProblemError::Domain(format!("radius must be positive, got {radius}")));
    }
    let d = lattice.dim();
    let h = lattice.steps();
    let cell: f64 = h.iter().product();
    let density = cell * (2.0 * PI).powi(-(d as i32));

    let mut points: Vec<Index> = Vec::new();
    let mut z = vec![0i32; d];
    enumerate_ball(h, radius * radius, 0, 0.0, &mut z, &mut points, cap)?;

    let entries = points.into_iter().filter(|z| is_zero_index(z) || is_canonical(z)).map(|z| {
        let r2 = lattice.freq_norm_sq(&z);
        (z, Complex64::new(density * (-0.5 * r2).exp(), 0.0))
    });
    let map = AtomMap::from_half(lattice.clone(), entries)?;

    // Lipschitz concentration: P(‖X‖ > R) ≤ exp(-(R - √d)²/2) for R ≥ √d.
    let sqrt_d = (d as f64).sqrt();
    let mass = (2.0 * PI).powf(-(d as f64) / 2.0);
    let tail_bound = if radius >= sqrt_d { mass * (-(radius - sqrt_d).powi(2) / 2.0).exp() } else { mass };
    Ok(GaussianSource { map, radius, tail_bound })
}

fn enumerate_ball(
    h: &[f64],
    r2: f64,
    axis: usize,
    used: f64,
    z: &mut Vec<i32>,
    out: &mut Vec<Index>,
    cap: usize,
) -> Result<(), ProblemError> {
    if axis == h.len() {
        out.push(z.clone());
        if out.len() > cap {
            return Err(ProblemError::Atoms(crate::atoms::AtomError::Resource { requested: out.len(), cap }));
        }
        return Ok(());
    }
    let remaining = (r2 - used).max(0.0);
    let kmax = (remaining.sqrt() / h[axis]).floor() as i32;
    for k in -kmax..=kmax {
        let v = h[axis] * k as f64;
        let u = used + v * v;
        if u > r2 {
            continue;
        }
        z[axis] = k;
        enumerate_ball(h, r2, axis + 1, u, z, out, cap)?;
    }
    z[axis] = 0;
    Ok(())
}

/// Two-atom perturbation `η` whose `B^1` norm is `√2(1 + eps)` and with `1 + η(0) < 0`, so
/// `I + diag(η, 0, …, 0)` loses definiteness at the origin.
pub fn counterexample_eta(eps: f64, lattice: &Lattice) -> Result<AtomMap, ProblemError> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(ProblemError::Domain(format!("eps must be positive, got {eps}")));
    }
    let (axis, step) = lattice
        .steps()
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("lattice has at least one axis");
    let limit = (2.0 * eps).sqrt();
    if step > limit {
        return Err(ProblemError::Construction(format!(
            "no lattice frequency with 0 < |xi| <= sqrt(2 eps) = {limit}; smallest step is {step}, use a finer lattice step"
        )));
    }
    let mut z = vec![0; lattice.dim()];
    z[axis] = 1;
    let amp = -(1.0 + eps) / (2.0 * (1.0 + step * step).sqrt());
    Ok(AtomMap::from_half(lattice.clone(), [(z, Complex64::new(amp, 0.0))])?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticityVerdict {
    pub eps: f64,
    pub norm_b1: f64,
    pub eta_at_origin: f64,
    /// `1 + η(0)`, the (1,1) entry of `I + E(0)`.
    pub margin: f64,
    pub fails_ellipticity: bool,
}

pub fn ellipticity_verdict(eta: &AtomMap, eps: f64) -> EllipticityVerdict {
    let norm_b1 = eta.barron_norm(1.0).expect("order 1 is valid");
    let origin = vec![0.0; eta.dim()];
    let eta_at_origin = eta.eval(&origin).expect("origin is finite");
    let margin = 1.0 + eta_at_origin;
    EllipticityVerdict { eps, norm_b1, eta_at_origin, margin, fails_ellipticity: margin < 0.0 }
}
