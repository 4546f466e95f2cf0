//! Frequency-domain solver for second-order elliptic equations
//! `−∇·(A∇u) + b·∇u + cu = f` on `R^d` whose data are spectral Barron functions, stored as
//! finite sums of Fourier atoms.
//!
//! The crate is organised bottom-up:
//!
//! - [`atoms`]: exact arithmetic on atom sums (norms, products, derivatives, pruning).
//! - [`problem`]: problem definition, assumption checks and every explicit constant.
//! - [`solver`]: Fourier-multiplier operators and the certified fixed-point solvers.
//! - [`netx`]: two-layer cosine network extraction and `H^k` error on boxes.
//! - [`oracle`]: pointwise verification paths that share no code with the solver.
//! - [`cli`]: the `barronpde` command-line surface and file formats.
//!
//! Runnable walkthroughs of each capability live in the crate's `examples/` directory.

pub mod atoms;
pub mod cli;
pub mod netx;
pub mod oracle;
pub mod problem;
pub mod solver;
pub mod sum;

/// Major version written into every JSON artifact as `"format"`.
pub const FORMAT_VERSION: u32 = 1;

pub use atoms::{AtomError, AtomMap, Lattice, RealAtomList};
pub use netx::{CosineNetwork, DomainBox};
pub use problem::{Constants, EllipticProblem, ValidationReport};
pub use solver::{SolveMode, SolveOptions, SolveReport};
