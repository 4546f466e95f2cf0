//! Seeded generators for randomized trigonometric test data.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;

use super::{is_canonical, is_zero_index, AtomMap, Index, Lattice};

/// Random real function with at most `max_entries` canonical entries (pairs or the zero
/// mode), index coordinates in `[-max_index, max_index]` and amplitude components uniform in
/// `[-amp, amp]`.
pub fn random_atom_map<R: Rng + ?Sized>(
    rng: &mut R,
    lattice: &Lattice,
    max_entries: usize,
    max_index: i32,
    amp: f64,
) -> AtomMap {
    let d = lattice.dim();
    let mut half: BTreeMap<Index, Complex64> = BTreeMap::new();
    let attempts = 4 * max_entries + 8;
    for _ in 0..attempts {
        if half.len() >= max_entries {
            break;
        }
        let z: Index = (0..d).map(|_| rng.gen_range(-max_index..=max_index)).collect();
        let c = if is_zero_index(&z) {
            Complex64::new(rng.gen_range(-amp..=amp), 0.0)
        } else if is_canonical(&z) {
            Complex64::new(rng.gen_range(-amp..=amp), rng.gen_range(-amp..=amp))
        } else {
            continue;
        };
        half.entry(z).or_insert(c);
    }
    AtomMap::from_half(lattice.clone(), half).expect("generated entries are canonical")
}

/// `count` points uniform in `[-half_width, half_width]^d`.
pub fn random_points<R: Rng + ?Sized>(rng: &mut R, d: usize, count: usize, half_width: f64) -> Vec<Vec<f64>> {
    (0..count).map(|_| (0..d).map(|_| rng.gen_range(-half_width..=half_width)).collect()).collect()
}
