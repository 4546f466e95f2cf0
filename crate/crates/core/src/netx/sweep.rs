//! Error-versus-width sweeps over independent sampling replicates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{extract, hk_error_box, DomainBox, NetError};
use crate::atoms::AtomMap;

/// Seed of sweep cell `(n, replicate)`: a SplitMix64 finalizer over the three inputs.
pub fn cell_seed(seed: u64, n: usize, replicate: usize) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(mix(seed) ^ n as u64) ^ replicate as u64)
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub seed: u64,
    pub err: f64,
    /// `√|Ω| ‖u‖_{B^k} / √n`.
    pub bound: f64,
    /// Mean of `err²` over all replicates with this `n`.
    pub mean_sq_err: f64,
}

/// Per-width aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub n: usize,
    pub mean_sq_err: f64,
    /// `|Ω| ‖u‖²_{B^k} / n`.
    pub mean_sq_bound: f64,
    pub min_err: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub k: u32,
    pub source_norm: f64,
    pub vol: f64,
    pub rows: Vec<SweepRow>,
    pub summary: Vec<SweepSummary>,
    /// Least-squares slope of `log √(mean err²)` against `log n`.
    pub slope: Option<f64>,
}

/// Least-squares slope of `log y` against `log x`; `None` with fewer than two usable points.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Extract `replicates` networks for every width in `n_list` and measure each one's exact
/// `H^k(box)` error.
pub fn rate_sweep(
    u: &AtomMap,
    k: u32,
    bx: &DomainBox,
    n_list: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<SweepResult, NetError> {
    if n_list.is_empty() || replicates == 0 {
        return Err(NetError::Domain("sweep needs at least one width and one replicate".into()));
    }
    let source_norm = u.barron_norm(k as f64).map_err(|e| NetError::Domain(e.to_string()))?;
    let vol = bx.vol();
    let cells: Vec<(usize, usize)> = n_list.iter().flat_map(|&n| (0..replicates).map(move |r| (n, r))).collect();
    let errs: Vec<Result<(usize, u64, f64), NetError>> = cells
        .par_iter()
        .map(|&(n, r)| {
            let s = cell_seed(seed, n, r);
            let net = extract(u, k, n, s)?;
            Ok((n, s, hk_error_box(u, &net, bx, k)?))
        })
        .collect();
    let errs = errs.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::with_capacity(errs.len());
    let mut summary = Vec::with_capacity(n_list.len());
    for (i, &n) in n_list.iter().enumerate() {
        let block = &errs[i * replicates..(i + 1) * replicates];
        let mean_sq = block.iter().map(|c| c.2 * c.2).sum::<f64>() / replicates as f64;
        let bound = vol.sqrt() * source_norm / (n as f64).sqrt();
        for &(_, s, err) in block {
            rows.push(SweepRow { n, seed: s, err, bound, mean_sq_err: mean_sq });
        }
        summary.push(SweepSummary {
            n,
            mean_sq_err: mean_sq,
            mean_sq_bound: vol * source_norm * source_norm / n as f64,
            min_err: block.iter().map(|c| c.2).fold(f64::INFINITY, f64::min),
            bound,
        });
    }
    let slope = fit_loglog_slope(&summary.iter().map(|s| (s.n as f64, s.mean_sq_err.sqrt())).collect::<Vec<_>>());
    Ok(SweepResult { k, source_norm, vol, rows, summary, slope })
}
