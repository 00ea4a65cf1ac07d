use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::horseshoe::shortest_bridge;
use super::markovize::markovization_order;
use crate::error::{Error, Result};
use crate::numerics::component_lists;
use crate::symbolic::{
    decode, dstar_distance, encode, sample_orbit, CylinderMarginals, MarkovMeasure, SftGraph,
};

const ETA_START: f64 = 0.25;
const ETA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseCertificate {
    pub epsilon: f64,
    /// Markov order of the witness.
    pub order: usize,
    /// Bridge mass added to restore irreducibility; `0` if none was needed.
    pub eta: f64,
    /// `d*` on the levels both sides know, and the bound on the rest.
    pub dstar: f64,
    pub dstar_truncation: f64,
    pub dstar_bound: f64,
    pub entropy: f64,
    /// Target entropy, or the Markovization entropy (an upper bound for it).
    pub reference_entropy: f64,
    pub entropy_gap: f64,
    pub ergodic: bool,
    pub ambient: SftGraph,
    /// `d* < ε` and `h_ν > h_μ − ε` hold.
    pub satisfied: bool,
}

/// Smallest `k ≥ 1` with `2^{1−k} < ε/2`.
pub fn order_for(eps: f64) -> usize {
    let mut k = 1;
    while 2f64.powi(1 - k as i32) >= eps / 2.0 {
        k += 1;
    }
    k
}

/// Irreducible `η`-perturbation of a reducible chain: components are linked
/// in a cycle by shortest ambient block paths, every state on a path passes
/// an `η`-share of its mass along it, and exit rates are scaled so component
/// weights are kept as `η → 0`.
fn bridged_chain(base: &MarkovMeasure, sft: &SftGraph, eta: f64) -> Result<MarkovMeasure> {
    let a = base.alphabet_size();
    let k = base.block_len();
    let n = base.states().len();
    let succ: Vec<Vec<usize>> = base
        .transition()
        .iter()
        .map(|r| (0..n).filter(|&j| r[j] > 0.0).collect())
        .collect();
    let comps = component_lists(&succ);
    let mut codes: Vec<u64> = base.states().iter().map(|s| encode(s, a)).collect();
    let mut index: std::collections::HashMap<u64, usize> = codes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut bridges = Vec::new();
    for (i, comp) in comps.iter().enumerate() {
        let next = &comps[(i + 1) % comps.len()];
        let from: HashSet<u64> = comp.iter().map(|&s| codes[s]).collect();
        let to: HashSet<u64> = next.iter().map(|&s| codes[s]).collect();
        let path = shortest_bridge(sft, k, &from, &to).ok_or(Error::NoBridge)?;
        // time spent in a component scales like 1 / (rate · mass of its exit)
        let exit = index[&path[0]];
        bridges.push((path, base.stationary()[exit]));
    }
    let scale = bridges.iter().map(|b| b.1).fold(f64::INFINITY, f64::min);
    for (path, _) in &bridges {
        for &c in path {
            index.entry(c).or_insert_with(|| {
                codes.push(c);
                codes.len() - 1
            });
        }
    }
    let m = codes.len();
    let mut rows = vec![vec![0.0; m]; m];
    let mut pushed = vec![0.0; m];
    let mut forced = vec![Vec::new(); m];
    for (path, exit_mass) in &bridges {
        let rate = eta * scale / exit_mass;
        for w in path.windows(2) {
            let (u, v) = (index[&w[0]], index[&w[1]]);
            if u < n {
                rows[u][v] += rate;
                pushed[u] += rate;
            } else {
                forced[u].push(v);
            }
        }
    }
    for u in 0..m {
        if u < n {
            let keep = 1.0 - pushed[u].min(0.5);
            let total = pushed[u].max(1e-300);
            for v in 0..m {
                rows[u][v] *= pushed[u].min(0.5) / total;
            }
            for (v, &p) in base.transition()[u].iter().enumerate() {
                rows[u][v] += keep * p;
            }
        } else {
            let share = 1.0 / forced[u].len() as f64;
            for &v in &forced[u] {
                rows[u][v] += share;
            }
        }
    }
    let states = codes.iter().map(|&c| decode(c, k, a)).collect();
    MarkovMeasure::from_chain(a, base.order(), states, rows)
}

/// Ergodic Markov approximation of finite marginal data with a certificate
/// for `d*(μ, ν) < ε` and `h_ν > h_μ − ε`.
pub fn entropy_dense_approx(
    target: &CylinderMarginals,
    sft: &SftGraph,
    eps: f64,
    reference_entropy: Option<f64>,
) -> Result<(MarkovMeasure, DenseCertificate)> {
    if !sft.is_transitive() {
        return Err(Error::AmbientNotTransitive);
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("ε must be positive".into()));
    }
    if target.alphabet_size() != sft.alphabet_size() {
        return Err(Error::AlphabetMismatch {
            left: sft.alphabet_size(),
            right: target.alphabet_size(),
        });
    }
    let depth = target.depth();
    if depth < 2 {
        return Err(Error::InconsistentMarginals("need at least pair frequencies".into()));
    }
    let order = order_for(eps).min(depth - 1);
    let base = markovization_order(target, order)?;
    base.check_support(sft)?;
    let reference = reference_entropy.unwrap_or(base.entropy());
    let certify = |nu: &MarkovMeasure, eta: f64| -> Result<DenseCertificate> {
        let d = dstar_distance(target, &CylinderMarginals::from_measure(nu, depth)?)?;
        let entropy = nu.entropy();
        let dstar_bound = d.value + d.truncation_bound;
        Ok(DenseCertificate {
            epsilon: eps,
            order,
            eta,
            dstar: d.value,
            dstar_truncation: d.truncation_bound,
            dstar_bound,
            entropy,
            reference_entropy: reference,
            entropy_gap: reference - entropy,
            ergodic: nu.is_ergodic(),
            ambient: sft.clone(),
            satisfied: nu.is_ergodic() && dstar_bound < eps && entropy > reference - eps,
        })
    };
    if base.is_ergodic() {
        let cert = certify(&base, 0.0)?;
        return Ok((base, cert));
    }
    let mut eta = ETA_START;
    loop {
        let nu = bridged_chain(&base, sft, eta)?;
        let cert = certify(&nu, eta)?;
        if cert.satisfied || eta < ETA_FLOOR {
            return Ok((nu, cert));
        }
        eta /= 2.0;
    }
}

/// Sampled orbit of the witness and the `d*` between its empirical marginals
/// and the witness: a generic point in action.
pub fn generic_point_demo(nu: &MarkovMeasure, len: usize, depth: usize, seed: u64) -> Result<f64> {
    let orbit = sample_orbit(nu, len, seed)?;
    let emp = CylinderMarginals::from_sequence(&orbit, nu.alphabet_size(), depth)?;
    Ok(dstar_distance(&emp, &CylinderMarginals::from_measure(nu, depth)?)?.value)
}
