//! `‖u_n − g‖_{H^k(Ω)}` in closed form and by Monte Carlo.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{CosineNetwork, DomainBox, NetError};
use crate::atoms::AtomMap;
use crate::sum::NeumaierSum;

/// Points per Monte-Carlo chunk; fixed so estimates do not depend on the thread count.
const MC_CHUNK: usize = 4096;

/// All multi-indices `a ∈ N^d` with `|a| ≤ k`, in graded lexicographic order.
pub fn multi_indices(d: usize, k: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for order in 0..=k {
        let mut cur = vec![0u32; d];
        fill(&mut cur, 0, order, &mut out);
    }
    out
}

fn fill(cur: &mut Vec<u32>, axis: usize, left: u32, out: &mut Vec<Vec<u32>>) {
    if axis + 1 == cur.len() {
        cur[axis] = left;
        out.push(cur.clone());
        cur[axis] = 0;
        return;
    }
    for v in (0..=left).rev() {
        cur[axis] = v;
        fill(cur, axis + 1, left - v, out);
    }
    cur[axis] = 0;
}

/// `D(x) = Σ_j A_j cos(ν_j·x + θ_j)`.
struct Term {
    amp: f64,
    freq: Vec<f64>,
    phase: f64,
}

/// `u_n − g` as a cosine list. Identical (frequency, phase) pairs are merged exactly, so a
/// network that reproduces `g` term by term yields the empty list.
fn difference(g: &AtomMap, net: &CosineNetwork) -> Result<Vec<Term>, NetError> {
    let d = g.dim();
    if net.dim() != d {
        return Err(NetError::Domain(format!("network has input dimension {}, function has {d}", net.dim())));
    }
    type Key = (Vec<u64>, u64);
    let key = |w: &[f64], b: f64| -> Key { (w.iter().map(|v| v.to_bits()).collect(), b.to_bits()) };
    // (w, b) → amplitude bits → multiplicity.
    let mut groups: BTreeMap<Key, BTreeMap<u64, usize>> = BTreeMap::new();
    for nr in &net.neurons {
        *groups.entry(key(&nr.w, nr.b)).or_default().entry(nr.a.to_bits()).or_default() += 1;
    }
    let n = net.n as f64;
    let mut merged: BTreeMap<Key, Term> = BTreeMap::new();
    for ((wk, bk), amps) in groups {
        let mut amp = NeumaierSum::new();
        for (a_bits, count) in amps {
            // count / n is exactly 1 when every neuron is identical.
            amp += f64::from_bits(a_bits) * (count as f64 / n);
        }
        let freq: Vec<f64> = wk.iter().map(|&b| f64::from_bits(b)).collect();
        merged.insert((wk, bk), Term { amp: amp.value(), freq, phase: f64::from_bits(bk) });
    }
    let folded = g.fold_real();
    for e in &folded.entries {
        let w = folded.lattice.freq(&e.z);
        let k = key(&w, e.phi);
        match merged.get_mut(&k) {
            Some(t) => t.amp -= e.r,
            None => {
                merged.insert(k, Term { amp: -e.r, freq: w, phase: e.phi });
            }
        }
    }
    Ok(merged.into_values().filter(|t| t.amp != 0.0).collect())
}

/// `∫_lo^hi e^{i v x} dx`, written through `sinc` so that `v → 0` is continuous.
fn axis_integral(v: f64, lo: f64, hi: f64) -> Complex64 {
    let len = hi - lo;
    let t = 0.5 * v * len;
    let sinc = if t == 0.0 { 1.0 } else { t.sin() / t };
    Complex64::from_polar(len * sinc, v * 0.5 * (lo + hi))
}

/// `∫_box cos(v·x + c) dx`.
fn box_cos_integral(v: &[f64], c: f64, bx: &DomainBox) -> f64 {
    let mut acc = Complex64::from_polar(1.0, c);
    for (i, &vi) in v.iter().enumerate() {
        acc *= axis_integral(vi, bx.lo()[i], bx.hi()[i]);
    }
    acc.re
}

/// Exact `‖u_n − g‖_{H^k(box)}` by product-to-sum expansion of every squared derivative.
pub fn hk_error_box(g: &AtomMap, net: &CosineNetwork, bx: &DomainBox, k: u32) -> Result<f64, NetError> {
    check_box(g, bx)?;
    let terms = difference(g, net)?;
    let alphas = multi_indices(g.dim(), k);
    let rows: Vec<f64> = (0..terms.len())
        .into_par_iter()
        .map(|j| {
            let tj = &terms[j];
            let mut acc = NeumaierSum::new();
            let mut diff = vec![0.0; tj.freq.len()];
            let mut sum = vec![0.0; tj.freq.len()];
            let mut prod = vec![0.0; tj.freq.len()];
            for tl in &terms[j..] {
                for i in 0..diff.len() {
                    diff[i] = tj.freq[i] - tl.freq[i];
                    sum[i] = tj.freq[i] + tl.freq[i];
                    prod[i] = tj.freq[i] * tl.freq[i];
                }
                let (mut w_minus, mut w_plus) = (0.0, 0.0);
                for a in &alphas {
                    let mono: f64 = prod.iter().zip(a).map(|(p, &e)| p.powi(e as i32)).product();
                    let order: u32 = a.iter().sum();
                    w_minus += mono;
                    w_plus += if order.is_multiple_of(2) { mono } else { -mono };
                }
                let i_minus = box_cos_integral(&diff, tj.phase - tl.phase, bx);
                let i_plus = box_cos_integral(&sum, tj.phase + tl.phase, bx);
                let pair = 0.5 * tj.amp * tl.amp * (w_minus * i_minus + w_plus * i_plus);
                acc += if std::ptr::eq(tj, tl) { pair } else { 2.0 * pair };
            }
            acc.value()
        })
        .collect();
    let total = rows.into_iter().sum::<NeumaierSum>().value();
    Ok(total.max(0.0).sqrt())
}

fn check_box(g: &AtomMap, bx: &DomainBox) -> Result<(), NetError> {
    if bx.dim() != g.dim() {
        return Err(NetError::Domain(format!("box has dimension {}, function has {}", bx.dim(), g.dim())));
    }
    Ok(())
}

/// Monte-Carlo estimate of `‖u_n − g‖_{H^k(box)}` from `points` uniform samples, with a
/// delta-method standard error.
pub fn hk_error_mc(
    g: &AtomMap,
    net: &CosineNetwork,
    bx: &DomainBox,
    k: u32,
    points: usize,
    seed: u64,
) -> Result<(f64, f64), NetError> {
    check_box(g, bx)?;
    if points < 2 {
        return Err(NetError::Domain("Monte-Carlo needs at least 2 points".into()));
    }
    let terms = difference(g, net)?;
    if terms.is_empty() {
        return Ok((0.0, 0.0));
    }
    let d = g.dim();
    let alphas = multi_indices(d, k);
    // coef[j][a] = A_j Π ν_j^a; shift[a] = |a| mod 4 quarter turns.
    let coef: Vec<Vec<f64>> = terms
        .iter()
        .map(|t| {
            alphas
                .iter()
                .map(|a| t.amp * t.freq.iter().zip(a).map(|(v, &e)| v.powi(e as i32)).product::<f64>())
                .collect()
        })
        .collect();
    let shifts: Vec<u32> = alphas.iter().map(|a| a.iter().sum::<u32>() % 4).collect();
    let chunks = points.div_ceil(MC_CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = MC_CHUNK.min(points - c * MC_CHUNK);
            let mut x = vec![0.0; d];
            let mut derivs = vec![0.0; alphas.len()];
            let (mut s1, mut s2) = (NeumaierSum::new(), NeumaierSum::new());
            for _ in 0..count {
                for (xi, (lo, hi)) in x.iter_mut().zip(bx.lo().iter().zip(bx.hi())) {
                    *xi = rng.gen_range(*lo..*hi);
                }
                derivs.iter_mut().for_each(|v| *v = 0.0);
                for (t, cj) in terms.iter().zip(&coef) {
                    let theta: f64 = t.freq.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + t.phase;
                    let (s, co) = theta.sin_cos();
                    // cos(θ + mπ/2) for m = 0..3.
                    let rot = [co, -s, -co, s];
                    for (a, v) in derivs.iter_mut().enumerate() {
                        *v += cj[a] * rot[shifts[a] as usize];
                    }
                }
                let q: f64 = derivs.iter().map(|v| v * v).sum();
                s1 += q;
                s2 += q * q;
            }
            (s1.value(), s2.value())
        })
        .collect();
    let (mut s1, mut s2) = (NeumaierSum::new(), NeumaierSum::new());
    for (a, b) in partial {
        s1 += a;
        s2 += b;
    }
    let m = points as f64;
    let mean = s1.value() / m;
    let var = ((s2.value() - m * mean * mean) / (m - 1.0)).max(0.0);
    let vol = bx.vol();
    let est_sq = vol * mean;
    let se_sq = vol * (var / m).sqrt();
    let est = est_sq.max(0.0).sqrt();
    let se = if est > 0.0 { se_sq / (2.0 * est) } else { se_sq.sqrt() };
    Ok((est, se))
}
