//! Two-layer cosine networks sampled from an atom sum, and their `H^k` error on boxes.
//!
//! `H^k(Ω)` uses `‖g‖² = Σ_{|a|≤k} ‖∂^a g‖²_{L²(Ω)}`, each multi-index counted once.

mod error;
mod sweep;

pub use error::{hk_error_box, hk_error_mc, multi_indices};
pub use sweep::{cell_seed, fit_loglog_slope, rate_sweep, SweepResult, SweepRow, SweepSummary};

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atoms::{barron_prefactor, sobolev_weight, AtomMap};
use crate::cli::RunManifest;
use crate::problem::parse_json;
use crate::sum::NeumaierSum;
use crate::FORMAT_VERSION;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("malformed network: {0}")]
    Format(String),
}

/// Axis-aligned box `Π [lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl DomainBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, NetError> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(NetError::Domain("box corners must have the same positive dimension".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
            return Err(NetError::Domain("box needs finite lo < hi on every axis".into()));
        }
        Ok(Self { lo, hi })
    }

    /// `[0, 1]^d`.
    pub fn unit(d: usize) -> Self {
        Self::new(vec![0.0; d], vec![1.0; d]).expect("unit box with d >= 1")
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
    pub fn lo(&self) -> &[f64] {
        &self.lo
    }
    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn vol(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }
}

/// One hidden unit `a cos(w·x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Neuron {
    pub a: f64,
    pub w: Vec<f64>,
    pub b: f64,
}

/// `u_n(x) = (1/n) Σ_i a_i cos(w_i·x + b_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CosineNetwork {
    pub format: u32,
    pub n: usize,
    /// Sobolev order of the sampling weights.
    pub k: u32,
    /// `‖u‖_{B^k}` of the sampled function.
    pub source_norm: f64,
    pub seed: u64,
    pub neurons: Vec<Neuron>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
}

impl CosineNetwork {
    pub fn dim(&self) -> usize {
        self.neurons.first().map_or(0, |n| n.w.len())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = NeumaierSum::new();
        for nr in &self.neurons {
            let t: f64 = nr.w.iter().zip(x).map(|(a, b)| a * b).sum();
            acc += nr.a * (t + nr.b).cos();
        }
        acc.value() / self.n as f64
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("networks always serialize")
    }

    pub fn from_json_str(text: &str) -> Result<Self, NetError> {
        let net: Self = parse_json(text).map_err(|e| NetError::Format(e.to_string()))?;
        if net.format != FORMAT_VERSION {
            return Err(NetError::Format(format!(
                "unsupported format {} (reader understands {FORMAT_VERSION})",
                net.format
            )));
        }
        if net.n != net.neurons.len() || net.n == 0 {
            return Err(NetError::Format(format!("n = {} but {} neurons listed", net.n, net.neurons.len())));
        }
        let d = net.dim();
        if net.neurons.iter().any(|nr| nr.w.len() != d) {
            return Err(NetError::Format("neurons disagree on input dimension".into()));
        }
        Ok(net)
    }
}

/// Sample `n` neurons i.i.d. from the folded entries of `u` with probability proportional to
/// their `B^k` contributions. Every neuron then satisfies
/// `|a_i| 2^{k/2} (1 + ‖w_i‖²)^{k/2} = ‖u‖_{B^k}` and `E[u_n(x)] = u(x)`.
pub fn extract(u: &AtomMap, k: u32, n: usize, seed: u64) -> Result<CosineNetwork, NetError> {
    if n == 0 {
        return Err(NetError::Domain("n must be positive".into()));
    }
    let d = u.dim();
    let folded = u.fold_real();
    if folded.is_empty() {
        return Ok(CosineNetwork {
            format: FORMAT_VERSION,
            n: 1,
            k,
            source_norm: 0.0,
            seed,
            neurons: vec![Neuron { a: 0.0, w: vec![0.0; d], b: 0.0 }],
            manifest: None,
        });
    }
    let kf = k as f64;
    let pre = barron_prefactor(kf);
    let freqs: Vec<Vec<f64>> = folded.entries.iter().map(|e| folded.lattice.freq(&e.z)).collect();
    let weights: Vec<f64> = folded
        .entries
        .iter()
        .zip(&freqs)
        .map(|(e, xi)| pre * sobolev_weight(xi.iter().map(|v| v * v).sum(), kf) * e.r)
        .collect();
    let total: f64 = weights.iter().copied().sum::<NeumaierSum>().value();
    if !total.is_finite() {
        return Err(NetError::Domain(format!("B^{k} norm is not finite")));
    }
    let dist = WeightedIndex::new(&weights).map_err(|e| NetError::Domain(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let neurons = (0..n)
        .map(|_| {
            let j = dist.sample(&mut rng);
            let e = &folded.entries[j];
            Neuron { a: e.r * (total / weights[j]), w: freqs[j].clone(), b: e.phi }
        })
        .collect();
    Ok(CosineNetwork { format: FORMAT_VERSION, n, k, source_norm: total, seed, neurons, manifest: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::random::{random_atom_map, random_points};
    use crate::atoms::Lattice;

    #[test]
    fn zero_function_gives_silent_neuron() {
        let net = extract(&AtomMap::zero(Lattice::unit(2)), 1, 10, 0).unwrap();
        assert_eq!(net.n, 1);
        assert_eq!(net.neurons[0], Neuron { a: 0.0, w: vec![0.0, 0.0], b: 0.0 });
    }

    #[test]
    fn single_entry_is_reproduced() {
        let l = Lattice::unit(2);
        let u = AtomMap::cosine(l, &[1, -2], 0.7, 0.4).unwrap();
        let net = extract(&u, 2, 17, 3).unwrap();
        let first = &net.neurons[0];
        assert!(net.neurons.iter().all(|nr| nr == first));
        assert_eq!(first.a, u.fold_real().entries[0].r);
        for x in [[0.0, 0.0], [0.3, -1.2], [2.0, 5.0]] {
            assert!((net.eval(&x) - u.eval(&x).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn uniform_magnitude_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let l = Lattice::new(vec![1.0, 0.5, 2.0]).unwrap();
        for k in 0..4u32 {
            let u = random_atom_map(&mut rng, &l, 25, 3, 1.0);
            let net = extract(&u, k, 200, 9).unwrap();
            let norm = u.barron_norm(k as f64).unwrap();
            assert!((net.source_norm - norm).abs() <= 4.0 * f64::EPSILON * norm);
            for nr in &net.neurons {
                let r2: f64 = nr.w.iter().map(|v| v * v).sum();
                let m = nr.a.abs() * barron_prefactor(k as f64) * sobolev_weight(r2, k as f64);
                assert!((m - net.source_norm).abs() <= 8.0 * f64::EPSILON * net.source_norm);
                assert!(nr.b > -std::f64::consts::PI && nr.b <= std::f64::consts::PI);
            }
        }
    }

    #[test]
    fn sampling_frequencies_follow_weights() {
        let l = Lattice::unit(1);
        let u = AtomMap::cosine(l.clone(), &[1], 1.0, 0.0)
            .unwrap()
            .add(&AtomMap::cosine(l, &[2], 1.0, 0.0).unwrap())
            .unwrap();
        let n = 40_000;
        let net = extract(&u, 0, n, 21).unwrap();
        let ones = net.neurons.iter().filter(|nr| nr.w[0] == 1.0).count() as f64;
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((ones - n as f64 / 2.0).abs() <= 3.0 * sigma);
    }

    #[test]
    fn unbiased_over_seeds() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let l = Lattice::unit(2);
        let u = random_atom_map(&mut rng, &l, 8, 2, 1.0);
        let xs = random_points(&mut rng, 2, 8, 3.0);
        let seeds = 200;
        let vals: Vec<Vec<f64>> = (0..seeds)
            .map(|s| {
                let net = extract(&u, 1, 16, s).unwrap();
                xs.iter().map(|x| net.eval(x)).collect()
            })
            .collect();
        for (i, x) in xs.iter().enumerate() {
            let col: Vec<f64> = vals.iter().map(|v| v[i]).collect();
            let mean = col.iter().sum::<f64>() / seeds as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (seeds as f64 - 1.0);
            let se = (var / seeds as f64).sqrt();
            assert!((mean - u.eval(x).unwrap()).abs() <= 3.0 * se + 1e-12);
        }
    }

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let u = random_atom_map(&mut rng, &Lattice::unit(3), 10, 3, 1.0);
        let net = extract(&u, 2, 33, 4).unwrap();
        let text = net.to_json_string();
        let back = CosineNetwork::from_json_str(&text).unwrap();
        assert_eq!(back, net);
        assert_eq!(back.to_json_string(), text);
        assert!(CosineNetwork::from_json_str(&text.replacen("\"n\": 33", "\"n\": 32", 1)).is_err());
    }

    #[test]
    fn box_validation() {
        assert!(DomainBox::new(vec![0.0], vec![0.0]).is_err());
        assert!(DomainBox::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert_eq!(DomainBox::new(vec![0.0, -1.0], vec![2.0, 1.0]).unwrap().vol(), 4.0);
    }
}
