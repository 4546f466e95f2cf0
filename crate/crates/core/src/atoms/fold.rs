use std::f64::consts::PI;

use super::{is_zero_index, AtomMap, Index, Lattice};
use crate::sum::NeumaierSum;

/// One folded term `r cos(x·ξ_z + φ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealAtom {
    pub z: Index,
    pub r: f64,
    pub phi: f64,
}

/// Real cosine form of an [`AtomMap`]: `g(x) = Σ_j r_j cos(x·ξ_{z_j} + φ_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealAtomList {
    pub lattice: Lattice,
    pub entries: Vec<RealAtom>,
}

/// Map an angle into `(-π, π]`.
pub fn normalize_phase(phi: f64) -> f64 {
    let mut p = phi % (2.0 * PI);
    if p <= -PI {
        p += 2.0 * PI;
    } else if p > PI {
        p -= 2.0 * PI;
    }
    p
}

impl RealAtomList {
    pub(super) fn from_map(g: &AtomMap) -> Self {
        let entries = g
            .half_atoms()
            .map(|(z, c)| {
                if is_zero_index(z) {
                    let phi = if c.re < 0.0 { PI } else { 0.0 };
                    RealAtom { z: z.clone(), r: c.re.abs(), phi }
                } else {
                    RealAtom { z: z.clone(), r: 2.0 * c.norm(), phi: normalize_phase(c.arg()) }
                }
            })
            .collect();
        Self { lattice: g.lattice().clone(), entries }
    }

    /// Direct cosine summation; independent of the complex evaluator in [`AtomMap::eval`].
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = NeumaierSum::new();
        for e in &self.entries {
            let xi = self.lattice.freq(&e.z);
            let theta: f64 = xi.iter().zip(x).map(|(a, b)| a * b).sum();
            acc += e.r * (theta + e.phi).cos();
        }
        acc.value()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
