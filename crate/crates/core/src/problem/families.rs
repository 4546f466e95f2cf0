//! Ready-made problem families used by the examples, fixtures and acceptance suite.

use std::f64::consts::FRAC_PI_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{EllipticProblem, ProblemError};
use crate::atoms::random::random_atom_map;
use crate::atoms::{AtomMap, Lattice, DEFAULT_ATOM_CAP};
use crate::solver::{manufacture, SolveError};

fn identity(d: usize) -> Vec<Vec<f64>> {
    (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn axis_index(d: usize, axis: usize, k: i32) -> Vec<i32> {
    let mut z = vec![0; d];
    z[axis] = k;
    z
}

/// `−∇·((I + E)∇u) + (1 + v)·∇u + (1 + w)u = f` on `R^d` with `s = 0`,
/// `‖E‖_{B^1} = 0.2`, `‖v‖_{B^0} = 0.15`, `‖w‖_{B^0} = 0.15` (so `K = 1/2`, `α = m = 1`) and
/// `‖f‖_{B^0} = 1`.
///
/// All coefficients vary along `x_1` only, so the iterates for different `d` are the same
/// function embedded in higher dimensions.
pub fn reference_family(d: usize) -> Result<EllipticProblem, ProblemError> {
    let l = Lattice::unit(d);
    let e1 = axis_index(d, 0, 1);
    let e2 = axis_index(d, 0, 2);
    let e3 = axis_index(d, 0, 3);
    // ‖a cos x_1‖_{B^1} = 2a.
    let e11 = AtomMap::cosine(l.clone(), &e1, 0.1, 0.0)?;
    let v1 = AtomMap::cosine(l.clone(), &e2, 0.15, 0.3)?;
    let w = AtomMap::cosine(l.clone(), &e1, 0.15, 0.0)?;
    let f = AtomMap::cosine(l.clone(), &e1, 0.6, 0.0)?.add(&AtomMap::cosine(l.clone(), &e3, 0.4, -FRAC_PI_2)?)?;
    EllipticProblem::constant_coefficient(l, 0.0, 1.0, vec![1.0; d], identity(d), f)?
        .with_diffusion_perturbation(0, 0, e11)?
        .with_advection_perturbation(0, v1)?
        .with_reaction_perturbation(w)
}

/// Two-dimensional variable-diffusion problem with `‖E‖_{B^1} / min(α, m) = 1/2` and no
/// lower-order perturbations. The source is zero; callers manufacture one.
pub fn contraction_fixture() -> Result<EllipticProblem, ProblemError> {
    let d = 2;
    let l = Lattice::unit(d);
    // ‖a cos(x_i + c)‖_{B^1} = 2a; ‖b cos(x_1 + x_2)‖_{B^1} = √6 b per entry.
    let e11 = AtomMap::cosine(l.clone(), &[1, 0], 0.1, 0.0)?;
    let e22 = AtomMap::cosine(l.clone(), &[0, 1], 0.1, 0.5)?;
    let e12 = AtomMap::cosine(l.clone(), &[1, 1], 0.05 / 6f64.sqrt(), 0.0)?;
    EllipticProblem::constant_coefficient(l.clone(), 0.0, 1.0, vec![0.5, -0.25], identity(d), AtomMap::zero(l))?
        .with_diffusion_perturbation(0, 0, e11)?
        .with_diffusion_perturbation(1, 1, e22)?
        .with_diffusion_perturbation(0, 1, e12)
}

/// A genuinely multi-dimensional problem: every axis carries its own perturbation, scaled so
/// that `K = 0.45` independently of `d`.
pub fn coupled_family(d: usize) -> Result<EllipticProblem, ProblemError> {
    let l = Lattice::unit(d);
    let share = 1.0 / d as f64;
    let mut p = EllipticProblem::constant_coefficient(
        l.clone(),
        0.0,
        1.0,
        vec![0.5; d],
        identity(d),
        AtomMap::zero(l.clone()),
    )?;
    let mut f = AtomMap::zero(l.clone());
    let mut w = AtomMap::zero(l.clone());
    for i in 0..d {
        let ei = axis_index(d, i, 1);
        let e2i = axis_index(d, i, 2);
        p = p
            .with_diffusion_perturbation(i, i, AtomMap::cosine(l.clone(), &ei, 0.1 * share, 0.2 * i as f64)?)?
            .with_advection_perturbation(i, AtomMap::cosine(l.clone(), &e2i, 0.1 * share, 0.0)?)?;
        w = w.add(&AtomMap::cosine(l.clone(), &ei, 0.15 * share, 0.0)?)?;
        f = f.add(&AtomMap::cosine(l.clone(), &ei, share, 0.1 * i as f64)?)?;
    }
    p.with_reaction_perturbation(w)?.with_source(f)
}

/// [`contraction_fixture`] with source `L u_exact` for a fixed seeded `u_exact` of twelve
/// entries, so the exact solution is known.
pub fn manufactured_fixture() -> Result<(EllipticProblem, AtomMap), SolveError> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let u_exact = random_atom_map(&mut rng, &Lattice::unit(2), 12, 3, 0.5);
    let p = manufacture(&contraction_fixture()?, &u_exact, DEFAULT_ATOM_CAP)?;
    Ok((p, u_exact))
}

/// Constant coefficients only: `α = 1`, `M = diag(2, 3)`, `β = (0.5, 0)`, so `min(α, m) = 1`.
pub fn unperturbed_fixture() -> Result<EllipticProblem, ProblemError> {
    let l = Lattice::unit(2);
    let f =
        AtomMap::cosine(l.clone(), &[1, 0], 1.0, 0.0)?.add(&AtomMap::cosine(l.clone(), &[0, 1], 0.5, -FRAC_PI_2)?)?;
    EllipticProblem::constant_coefficient(l, 0.0, 1.0, vec![0.5, 0.0], vec![vec![2.0, 0.0], vec![0.0, 3.0]], f)
}

/// One-dimensional problem with `‖E‖_{B^1} = 2 min(α, m)`, violating even the weaker
/// smallness assumption.
pub fn oversized_diffusion_fixture() -> Result<EllipticProblem, ProblemError> {
    let l = Lattice::unit(1);
    let f = AtomMap::cosine(l.clone(), &[1], 1.0, 0.0)?;
    EllipticProblem::constant_coefficient(l.clone(), 0.0, 1.0, vec![0.0], identity(1), f)?.with_diffusion_perturbation(
        0,
        0,
        AtomMap::cosine(l, &[1], 1.0, 0.0)?,
    )
}

/// Seeded four-dimensional function with 50 canonical entries, the target of the network
/// rate experiments.
pub fn rate_target() -> AtomMap {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    random_atom_map(&mut rng, &Lattice::unit(4), 50, 2, 0.1)
}
