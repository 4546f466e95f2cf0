//! Pointwise checks that never touch the frequency-domain convolution.
//!
//! Every quantity is evaluated at sample points from the folded cosine form of each atom
//! sum, so a bug in the solver's products or multipliers cannot cancel against the same bug
//! here.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atoms::random::random_points;
use crate::atoms::{AtomError, AtomMap, Lattice, RealAtomList, DEFAULT_ATOM_CAP};
use crate::problem::EllipticProblem;

/// Central-difference step for residuals.
pub const RESIDUAL_FD_STEP: f64 = 1e-4;
/// Central-difference step for first-derivative checks.
pub const PARTIAL_FD_STEP: f64 = 1e-5;
/// Upper limit on the half-width of the sampling box.
const MAX_HALF_WIDTH: f64 = 10.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualMode {
    #[default]
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub mode: ResidualMode,
    pub points: usize,
    pub linf: f64,
    pub l2_rms: f64,
    pub worst_point: Vec<f64>,
}

/// Half-width `min(π / h_min, 10)` of the sampling box `[-a, a]^d`.
pub fn sampling_half_width(lattice: &Lattice) -> f64 {
    (PI / lattice.min_step()).min(MAX_HALF_WIDTH)
}

/// Seeded sample points in the sampling box of `lattice`.
pub fn sample_points(lattice: &Lattice, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_points(&mut rng, lattice.dim(), count, sampling_half_width(lattice))
}

/// Value, gradient and Hessian of a folded cosine sum at one point.
struct Jet {
    value: f64,
    grad: Vec<f64>,
    hess: Vec<Vec<f64>>,
}

fn jet(g: &RealAtomList, x: &[f64], second: bool) -> Jet {
    let d = x.len();
    let mut out = Jet { value: 0.0, grad: vec![0.0; d], hess: vec![vec![0.0; if second { d } else { 0 }]; d] };
    for e in &g.entries {
        let xi = g.lattice.freq(&e.z);
        let theta: f64 = xi.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + e.phi;
        let (s, c) = theta.sin_cos();
        out.value += e.r * c;
        for i in 0..d {
            out.grad[i] -= e.r * xi[i] * s;
            if second {
                for j in 0..d {
                    out.hess[i][j] -= e.r * xi[i] * xi[j] * c;
                }
            }
        }
    }
    out
}

fn value(g: &RealAtomList, x: &[f64]) -> f64 {
    g.eval(x)
}

/// Folded coefficients of a problem, prepared once per residual run.
struct FoldedProblem<'a> {
    p: &'a EllipticProblem,
    e: Vec<Vec<RealAtomList>>,
    v: Vec<RealAtomList>,
    w: RealAtomList,
    f: RealAtomList,
}

impl<'a> FoldedProblem<'a> {
    fn new(p: &'a EllipticProblem) -> Self {
        Self {
            p,
            e: p.diffusion_perturbation().iter().map(|r| r.iter().map(AtomMap::fold_real).collect()).collect(),
            v: p.advection_perturbation().iter().map(AtomMap::fold_real).collect(),
            w: p.reaction_perturbation().fold_real(),
            f: p.source().fold_real(),
        }
    }

    /// `−Σ A_ij ∂_ij u − Σ ∂_i e_ij ∂_j u + b·∇u + c u − f` from supplied derivatives of `u`.
    fn residual(&self, x: &[f64], u: f64, grad: &[f64], hess: &[Vec<f64>]) -> f64 {
        let d = x.len();
        let m = self.p.diffusion();
        let beta = self.p.advection();
        let mut r = 0.0;
        for i in 0..d {
            for j in 0..d {
                let ej = &self.e[i][j];
                let (a_ij, de) = if ej.is_empty() {
                    (m[i][j], 0.0)
                } else {
                    let je = jet(ej, x, false);
                    (m[i][j] + je.value, je.grad[i])
                };
                r -= a_ij * hess[i][j] + de * grad[j];
            }
            let b_i = beta[i] + if self.v[i].is_empty() { 0.0 } else { value(&self.v[i], x) };
            r += b_i * grad[i];
        }
        let c = self.p.reaction() + if self.w.is_empty() { 0.0 } else { value(&self.w, x) };
        r + c * u - value(&self.f, x)
    }
}

fn fd_jet(u: &RealAtomList, x: &[f64], h: f64) -> Jet {
    let d = x.len();
    let at = |shifts: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(i, s) in shifts {
            y[i] += s;
        }
        u.eval(&y)
    };
    let u0 = u.eval(x);
    let mut grad = vec![0.0; d];
    let mut hess = vec![vec![0.0; d]; d];
    #[allow(clippy::needless_range_loop)] // symmetric fill touches both hess[i][j] and hess[j][i]
    for i in 0..d {
        let up = at(&[(i, h)]);
        let dn = at(&[(i, -h)]);
        grad[i] = (up - dn) / (2.0 * h);
        hess[i][i] = (up - 2.0 * u0 + dn) / (h * h);
        for j in (i + 1)..d {
            let v = (at(&[(i, h), (j, h)]) - at(&[(i, h), (j, -h)]) - at(&[(i, -h), (j, h)]) + at(&[(i, -h), (j, -h)]))
                / (4.0 * h * h);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    Jet { value: u0, grad, hess }
}

/// Signed residual `(L u − f)(x)` at each seeded sample point.
pub fn residual_values(
    u: &AtomMap,
    p: &EllipticProblem,
    points: usize,
    seed: u64,
    mode: ResidualMode,
) -> Vec<(Vec<f64>, f64)> {
    let xs = sample_points(p.lattice(), points, seed);
    let folded = FoldedProblem::new(p);
    let uf = u.fold_real();
    xs.into_par_iter()
        .map(|x| {
            let j = match mode {
                ResidualMode::Analytic => jet(&uf, &x, true),
                ResidualMode::FiniteDifference => fd_jet(&uf, &x, RESIDUAL_FD_STEP),
            };
            let r = folded.residual(&x, j.value, &j.grad, &j.hess);
            (x, r)
        })
        .collect()
}

/// Maximum and RMS of `|L u − f|` over `points` seeded samples.
pub fn residual_pointwise(
    u: &AtomMap,
    p: &EllipticProblem,
    points: usize,
    seed: u64,
    mode: ResidualMode,
) -> ResidualStats {
    let values = residual_values(u, p, points, seed, mode);
    let mut linf = 0.0;
    let mut worst = vec![0.0; p.dim()];
    let mut sq = 0.0;
    for (x, r) in &values {
        let a = r.abs();
        sq += a * a;
        if a > linf || (a.is_nan() && !linf.is_nan()) {
            linf = a;
            worst = x.clone();
        }
    }
    let l2_rms = if values.is_empty() { 0.0 } else { (sq / values.len() as f64).sqrt() };
    ResidualStats { mode, points: values.len(), linf, l2_rms: l2_rms.min(linf), worst_point: worst }
}

/// Largest `|∂_i g(x) − (g(x + h e_i) − g(x − h e_i)) / 2h|` over seeded points and axes.
pub fn fd_partial_check(g: &AtomMap, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = g.dim();
    let xs = random_points(&mut rng, d, samples, sampling_half_width(g.lattice()));
    let axes: Vec<usize> = {
        use rand::Rng;
        (0..samples).map(|_| rng.gen_range(0..d)).collect()
    };
    let derivs: Vec<AtomMap> = (0..d).map(|i| g.partial_axis(i)).collect();
    let h = PARTIAL_FD_STEP;
    xs.par_iter()
        .zip(axes.par_iter())
        .map(|(x, &i)| {
            let mut up = x.clone();
            up[i] += h;
            let mut dn = x.clone();
            dn[i] -= h;
            let fd = (g.eval_unchecked(&up) - g.eval_unchecked(&dn)) / (2.0 * h);
            (derivs[i].eval_unchecked(x) - fd).abs()
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max)
}

/// Largest `|(gh)(x) − g(x)h(x)| / (1 + |g(x)h(x)|)` with `gh` from the convolution.
pub fn pointwise_product_check(g: &AtomMap, h: &AtomMap, samples: usize, seed: u64) -> Result<f64, AtomError> {
    let prod = g.multiply_capped(h, DEFAULT_ATOM_CAP)?;
    let xs = sample_points(g.lattice(), samples, seed);
    let (gf, hf, pf) = (g.fold_real(), h.fold_real(), prod.fold_real());
    Ok(xs
        .par_iter()
        .map(|x| {
            let want = gf.eval(x) * hf.eval(x);
            (pf.eval(x) - want).abs() / (1.0 + want.abs())
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max))
}
