//! Real-valued functions as finite sums of Fourier atoms on a scaled integer lattice.
//!
//! A function is stored as `g(x) = Σ_z c(z) e^{i x·ξ_z}` with `ξ_z = (h_1 z_1, …, h_d z_d)`.
//! Only the canonical half of the index set (first nonzero coordinate positive) and the
//! zero index are kept in memory; the partner `c(-z) = conj(c(z))` is implied. Conjugate
//! symmetry therefore holds bit-exactly for every value of [`AtomMap`], and the zero mode is
//! always real.
//!
//! All norms are ℓ¹ sums over atoms accumulated with [`NeumaierSum`](crate::sum::NeumaierSum).

mod fold;
mod io;
pub mod random;

pub use fold::{normalize_phase, RealAtom, RealAtomList};
pub use io::{AtomJson, AtomMapDoc};

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::sum::NeumaierSum;

/// Integer lattice index `z ∈ Z^d`.
pub type Index = Vec<i32>;

/// Default hard cap on pairwise products in a single convolution.
pub const DEFAULT_ATOM_CAP: usize = 2_000_000;

/// Number of left-operand atoms per parallel convolution chunk. Fixed so results do not
/// depend on the thread count.
const MUL_CHUNK: usize = 128;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AtomError {
    #[error("lattice mismatch: operands live on different frequency lattices")]
    LatticeMismatch,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("atom cap exceeded: {requested} atom products requested, cap is {cap}")]
    Resource { requested: usize, cap: usize },
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
}

/// Frequency lattice `ξ_z = (h_1 z_1, …, h_d z_d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    h: Vec<f64>,
}

impl Lattice {
    pub fn new(h: Vec<f64>) -> Result<Self, AtomError> {
        if h.is_empty() {
            return Err(AtomError::Domain("lattice dimension must be at least 1".into()));
        }
        if let Some(bad) = h.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(AtomError::Domain(format!("lattice step must be positive and finite, got {bad}")));
        }
        Ok(Self { h })
    }

    /// The unit lattice `h = (1, …, 1)`: frequencies are the integers, functions are 2π-periodic.
    pub fn unit(d: usize) -> Self {
        Self::new(vec![1.0; d]).expect("unit lattice with d >= 1")
    }

    pub fn isotropic(d: usize, h: f64) -> Result<Self, AtomError> {
        Self::new(vec![h; d])
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }

    pub fn steps(&self) -> &[f64] {
        &self.h
    }

    pub fn min_step(&self) -> f64 {
        self.h.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Physical frequency of an index.
    pub fn freq(&self, z: &[i32]) -> Vec<f64> {
        z.iter().zip(&self.h).map(|(&zi, &hi)| hi * zi as f64).collect()
    }

    /// `‖ξ_z‖²`.
    pub fn freq_norm_sq(&self, z: &[i32]) -> f64 {
        z.iter()
            .zip(&self.h)
            .map(|(&zi, &hi)| {
                let v = hi * zi as f64;
                v * v
            })
            .sum()
    }

    fn dot(&self, z: &[i32], x: &[f64]) -> f64 {
        z.iter().zip(&self.h).zip(x).map(|((&zi, &hi), &xi)| hi * zi as f64 * xi).sum()
    }
}

/// `true` iff the first nonzero coordinate of `z` is positive.
pub fn is_canonical(z: &[i32]) -> bool {
    z.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0)
}

pub fn is_zero_index(z: &[i32]) -> bool {
    z.iter().all(|&v| v == 0)
}

fn negate(z: &[i32]) -> Index {
    z.iter().map(|v| -v).collect()
}

/// `base^{s/2}` with exact integer/half-integer fast paths.
pub(crate) fn half_power(base: f64, s: f64) -> f64 {
    if s == 0.0 {
        return 1.0;
    }
    if s.fract() == 0.0 && s.abs() < 1e6 {
        let si = s as i64;
        let whole = base.powi((si / 2) as i32);
        return if si % 2 == 0 { whole } else { whole * base.sqrt() };
    }
    base.powf(s / 2.0)
}

/// Sobolev weight `(1 + ‖ξ‖²)^{s/2}`.
pub fn sobolev_weight(freq_norm_sq: f64, s: f64) -> f64 {
    half_power(1.0 + freq_norm_sq, s)
}

/// Barron prefactor `2^{s/2}`.
pub fn barron_prefactor(s: f64) -> f64 {
    half_power(2.0, s)
}

fn check_order(s: f64) -> Result<(), AtomError> {
    if s.is_finite() && s >= 0.0 {
        Ok(())
    } else {
        Err(AtomError::Domain(format!("Barron order must be finite and nonnegative, got {s}")))
    }
}

fn check_point(x: &[f64], d: usize) -> Result<(), AtomError> {
    if x.len() != d {
        return Err(AtomError::Domain(format!("point has dimension {}, expected {d}", x.len())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(AtomError::Domain("evaluation point must be finite".into()));
    }
    Ok(())
}

/// Multiply by `i^m`.
fn times_i_pow(c: Complex64, m: u32) -> Complex64 {
    match m % 4 {
        0 => c,
        1 => Complex64::new(-c.im, c.re),
        2 => -c,
        _ => Complex64::new(c.im, -c.re),
    }
}

/// A real-valued function `Σ_z c(z) e^{i x·ξ_z}` with conjugate-symmetric amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomMap {
    lattice: Lattice,
    /// Canonical half-space indices plus the zero index. No stored amplitude is exactly zero
    /// and the zero-index amplitude has zero imaginary part.
    half: BTreeMap<Index, Complex64>,
}

impl AtomMap {
    pub fn zero(lattice: Lattice) -> Self {
        Self { lattice, half: BTreeMap::new() }
    }

    pub fn constant(lattice: Lattice, value: f64) -> Self {
        let mut half = BTreeMap::new();
        if value != 0.0 {
            half.insert(vec![0; lattice.dim()], Complex64::new(value, 0.0));
        }
        Self { lattice, half }
    }

    /// `amp · cos(ξ_z·x + phase)`.
    pub fn cosine(lattice: Lattice, z: &[i32], amp: f64, phase: f64) -> Result<Self, AtomError> {
        if z.len() != lattice.dim() {
            return Err(AtomError::Domain("index dimension does not match lattice".into()));
        }
        if is_zero_index(z) {
            return Ok(Self::constant(lattice, amp * phase.cos()));
        }
        let (key, ph) = if is_canonical(z) { (z.to_vec(), phase) } else { (negate(z), -phase) };
        let c = Complex64::from_polar(amp / 2.0, ph);
        let mut half = BTreeMap::new();
        if c != Complex64::new(0.0, 0.0) {
            half.insert(key, c);
        }
        Ok(Self { lattice, half })
    }

    /// Build from canonical-half and zero indices only; the mirrored partners are implied.
    /// Exact-zero amplitudes are dropped.
    pub fn from_half<I>(lattice: Lattice, entries: I) -> Result<Self, AtomError>
    where
        I: IntoIterator<Item = (Index, Complex64)>,
    {
        let d = lattice.dim();
        let mut half = BTreeMap::new();
        for (z, c) in entries {
            if z.len() != d {
                return Err(AtomError::Domain(format!("index {z:?} has dimension {}, expected {d}", z.len())));
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(AtomError::Domain(format!("non-finite amplitude at {z:?}")));
            }
            if !is_zero_index(&z) && !is_canonical(&z) {
                return Err(AtomError::InvariantViolation(format!("index {z:?} is not in the canonical half-space")));
            }
            if is_zero_index(&z) && c.im != 0.0 {
                return Err(AtomError::InvariantViolation("zero-frequency amplitude must be real".into()));
            }
            if half.contains_key(&z) {
                return Err(AtomError::InvariantViolation(format!("duplicate index {z:?}")));
            }
            if c.re != 0.0 || c.im != 0.0 {
                half.insert(z, c);
            }
        }
        Ok(Self { lattice, half })
    }

    /// Build from a full (both halves) atom list, verifying conjugate symmetry bit-exactly.
    pub fn from_atoms<I>(lattice: Lattice, entries: I) -> Result<Self, AtomError>
    where
        I: IntoIterator<Item = (Index, Complex64)>,
    {
        let full: BTreeMap<Index, Complex64> =
            entries.into_iter().filter(|(_, c)| c.re != 0.0 || c.im != 0.0).collect();
        for (z, c) in &full {
            let partner = full
                .get(&negate(z))
                .ok_or_else(|| AtomError::InvariantViolation(format!("index {z:?} has no conjugate partner")))?;
            if *partner != c.conj() {
                return Err(AtomError::InvariantViolation(format!(
                    "amplitudes at {z:?} and its negation are not conjugate"
                )));
            }
        }
        Self::from_half(lattice, full.into_iter().filter(|(z, _)| is_zero_index(z) || is_canonical(z)))
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    /// Number of stored atoms, counting both members of each conjugate pair.
    pub fn len(&self) -> usize {
        let zero = self.zero_mode().is_some() as usize;
        2 * (self.half.len() - zero) + zero
    }

    pub fn is_empty(&self) -> bool {
        self.half.is_empty()
    }

    /// Number of canonical entries (one per conjugate pair, plus the zero mode).
    pub fn half_len(&self) -> usize {
        self.half.len()
    }

    pub fn zero_mode(&self) -> Option<f64> {
        self.half.get(&vec![0; self.dim()][..]).map(|c| c.re)
    }

    /// Canonical-half entries in lexicographic order.
    pub fn half_atoms(&self) -> impl Iterator<Item = (&Index, &Complex64)> {
        self.half.iter()
    }

    /// Every atom, mirrored partners included.
    pub fn atoms(&self) -> impl Iterator<Item = (Index, Complex64)> + '_ {
        self.half.iter().flat_map(|(z, c)| {
            let first = std::iter::once((z.clone(), *c));
            let mirror = (!is_zero_index(z)).then(|| (negate(z), c.conj()));
            first.chain(mirror)
        })
    }

    /// Amplitude at an arbitrary index.
    pub fn amplitude(&self, z: &[i32]) -> Complex64 {
        if is_zero_index(z) || is_canonical(z) {
            self.half.get(z).copied().unwrap_or_default()
        } else {
            self.half.get(&negate(z)).map(|c| c.conj()).unwrap_or_default()
        }
    }

    fn same_lattice(&self, other: &Self) -> Result<(), AtomError> {
        if self.lattice == other.lattice {
            Ok(())
        } else {
            Err(AtomError::LatticeMismatch)
        }
    }

    /// `Σ_z |c(z)|`, the sup-norm bound.
    pub fn l1_amplitude(&self) -> f64 {
        self.barron_norm(0.0).expect("order 0 is valid")
    }

    /// `‖g‖_{B^s} = 2^{s/2} Σ_z |c(z)| (1 + ‖ξ_z‖²)^{s/2}`.
    pub fn barron_norm(&self, s: f64) -> Result<f64, AtomError> {
        check_order(s)?;
        let mut acc = NeumaierSum::new();
        for (z, c) in &self.half {
            acc += self.pair_weight(z, s) * c.norm();
        }
        Ok(barron_prefactor(s) * acc.value())
    }

    /// Multiplicity-weighted Sobolev weight of a canonical entry (2 for a pair, 1 for zero).
    fn pair_weight(&self, z: &[i32], s: f64) -> f64 {
        let w = sobolev_weight(self.lattice.freq_norm_sq(z), s);
        if is_zero_index(z) {
            w
        } else {
            2.0 * w
        }
    }

    /// `Re Σ_z c(z) e^{i x·ξ_z}`, summed over the full atom set.
    pub fn eval(&self, x: &[f64]) -> Result<f64, AtomError> {
        check_point(x, self.dim())?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let mut re = NeumaierSum::new();
        for (z, c) in self.atoms() {
            let theta = self.lattice.dot(&z, x);
            let e = Complex64::from_polar(1.0, theta);
            re += (c * e).re;
        }
        re.value()
    }

    /// Pointwise value of `∂^a g` at `x`, evaluated atom by atom without building the
    /// derivative map.
    pub fn eval_derivative(&self, a: &[u32], x: &[f64]) -> Result<f64, AtomError> {
        check_point(x, self.dim())?;
        if a.len() != self.dim() {
            return Err(AtomError::Domain("multi-index dimension does not match".into()));
        }
        let order: u32 = a.iter().sum();
        let mut re = NeumaierSum::new();
        for (z, c) in self.atoms() {
            let xi = self.lattice.freq(&z);
            let mono: f64 = xi.iter().zip(a).map(|(v, &p)| v.powi(p as i32)).product();
            if mono == 0.0 {
                continue;
            }
            let theta = self.lattice.dot(&z, x);
            let term = times_i_pow(c * mono, order) * Complex64::from_polar(1.0, theta);
            re += term.re;
        }
        Ok(re.value())
    }

    pub fn add(&self, other: &Self) -> Result<Self, AtomError> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, AtomError> {
        self.combine(other, -1.0)
    }

    /// `self + sign·other`.
    fn combine(&self, other: &Self, sign: f64) -> Result<Self, AtomError> {
        self.same_lattice(other)?;
        let mut half = self.half.clone();
        for (z, c) in &other.half {
            let entry = half.entry(z.clone()).or_insert(Complex64::new(0.0, 0.0));
            *entry += c * sign;
        }
        half.retain(|_, c| c.re != 0.0 || c.im != 0.0);
        Ok(Self { lattice: self.lattice.clone(), half })
    }

    pub fn scale(&self, lambda: f64) -> Self {
        let mut half: BTreeMap<Index, Complex64> = self.half.iter().map(|(z, c)| (z.clone(), c * lambda)).collect();
        half.retain(|_, c| c.re != 0.0 || c.im != 0.0);
        Self { lattice: self.lattice.clone(), half }
    }

    /// Pointwise product, computed as the exact discrete convolution of amplitudes.
    pub fn multiply(&self, other: &Self) -> Result<Self, AtomError> {
        self.multiply_capped(other, DEFAULT_ATOM_CAP)
    }

    /// Like [`multiply`](Self::multiply) with an explicit cap on the number of atom products.
    pub fn multiply_capped(&self, other: &Self, cap: usize) -> Result<Self, AtomError> {
        self.same_lattice(other)?;
        if self.is_empty() || other.is_empty() {
            return Ok(Self::zero(self.lattice.clone()));
        }
        let left: Vec<(Index, Complex64)> = self.atoms().collect();
        let right: Vec<(Index, Complex64)> = other.atoms().collect();
        let requested = left.len().saturating_mul(right.len());
        if requested > cap {
            return Err(AtomError::Resource { requested, cap });
        }
        let d = self.dim();
        let partials: Vec<BTreeMap<Index, Complex64>> = left
            .par_chunks(MUL_CHUNK)
            .map(|chunk| {
                let mut acc: BTreeMap<Index, Complex64> = BTreeMap::new();
                let mut key = vec![0i32; d];
                for (zl, cl) in chunk {
                    for (zr, cr) in &right {
                        for i in 0..d {
                            key[i] = zl[i] + zr[i];
                        }
                        if !(is_zero_index(&key) || is_canonical(&key)) {
                            continue;
                        }
                        let prod = cl * cr;
                        match acc.get_mut(&key[..]) {
                            Some(v) => *v += prod,
                            None => {
                                acc.insert(key.clone(), prod);
                            }
                        }
                    }
                }
                acc
            })
            .collect();
        let mut half: BTreeMap<Index, Complex64> = BTreeMap::new();
        for part in partials {
            for (z, c) in part {
                *half.entry(z).or_insert(Complex64::new(0.0, 0.0)) += c;
            }
        }
        let zero = vec![0; d];
        if let Some(c) = half.get_mut(&zero) {
            // Conjugate pairs sum to a real number; drop the rounding residue.
            c.im = 0.0;
        }
        half.retain(|_, c| c.re != 0.0 || c.im != 0.0);
        if half.len() > cap {
            return Err(AtomError::Resource { requested: half.len(), cap });
        }
        Ok(Self { lattice: self.lattice.clone(), half })
    }

    /// `∂^a g`: amplitude at `z` becomes `c(z) Π_i (i ξ_{z,i})^{a_i}`.
    ///
    /// # Panics
    /// If `a.len()` differs from the lattice dimension.
    pub fn partial(&self, a: &[u32]) -> Self {
        assert_eq!(a.len(), self.dim(), "multi-index dimension must match the lattice");
        let order: u32 = a.iter().sum();
        if order == 0 {
            return self.clone();
        }
        let mut half = BTreeMap::new();
        for (z, c) in &self.half {
            let xi = self.lattice.freq(z);
            let mono: f64 = xi.iter().zip(a).map(|(v, &p)| v.powi(p as i32)).product();
            if mono == 0.0 {
                continue;
            }
            let v = times_i_pow(c * mono, order);
            if v.re != 0.0 || v.im != 0.0 {
                half.insert(z.clone(), v);
            }
        }
        Self { lattice: self.lattice.clone(), half }
    }

    /// First derivative along axis `i`.
    pub fn partial_axis(&self, i: usize) -> Self {
        let mut a = vec![0; self.dim()];
        a[i] = 1;
        self.partial(&a)
    }

    /// Multiply each canonical amplitude by a function of its frequency. The zero-frequency
    /// factor must be real.
    pub(crate) fn map_half<F>(&self, mut f: F) -> Self
    where
        F: FnMut(&[f64], Complex64) -> Complex64,
    {
        let mut half = BTreeMap::new();
        for (z, c) in &self.half {
            let xi = self.lattice.freq(z);
            let mut v = f(&xi, *c);
            if is_zero_index(z) {
                v.im = 0.0;
            }
            if v.re != 0.0 || v.im != 0.0 {
                half.insert(z.clone(), v);
            }
        }
        Self { lattice: self.lattice.clone(), half }
    }

    /// Greedy smallest-first removal of conjugate pairs whose `B^{s_acct}` contributions sum to
    /// at most `tau`. Returns the pruned map and the exact discarded norm `‖g − g'‖_{B^{s_acct}}`.
    pub fn prune(&self, s_acct: f64, tau: f64) -> Result<(Self, f64), AtomError> {
        check_order(s_acct)?;
        if tau.is_nan() || tau < 0.0 {
            return Err(AtomError::Domain(format!("prune budget must be nonnegative, got {tau}")));
        }
        if tau == 0.0 || self.is_empty() {
            return Ok((self.clone(), 0.0));
        }
        let total = self.barron_norm(s_acct)?;
        if tau >= total {
            return Ok((Self::zero(self.lattice.clone()), total));
        }
        let pre = barron_prefactor(s_acct);
        let mut contribs: Vec<(f64, &Index)> =
            self.half.iter().map(|(z, c)| (pre * self.pair_weight(z, s_acct) * c.norm(), z)).collect();
        contribs.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
        // Keep a relative margin so the independently recomputed discarded norm stays ≤ tau.
        let limit = tau * (1.0 - 16.0 * f64::EPSILON);
        let mut cum = NeumaierSum::new();
        let mut removed = BTreeMap::new();
        for (v, z) in contribs {
            if cum.value() + v > limit {
                break;
            }
            cum += v;
            removed.insert(z.clone(), self.half[z]);
        }
        if removed.is_empty() {
            return Ok((self.clone(), 0.0));
        }
        let mut kept = self.half.clone();
        kept.retain(|z, _| !removed.contains_key(z));
        let removed = Self { lattice: self.lattice.clone(), half: removed };
        let discarded = removed.barron_norm(s_acct)?;
        Ok((Self { lattice: self.lattice.clone(), half: kept }, discarded))
    }

    /// Fold conjugate pairs into `r cos(x·ξ + φ)` entries.
    pub fn fold_real(&self) -> RealAtomList {
        RealAtomList::from_map(self)
    }

    /// Largest `‖ξ_z‖` over stored atoms.
    pub fn max_freq_norm(&self) -> f64 {
        self.half.keys().map(|z| self.lattice.freq_norm_sq(z).sqrt()).fold(0.0, f64::max)
    }
}
