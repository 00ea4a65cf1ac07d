use super::transfer::EdgeGraph;
use crate::error::{Error, Result};
use crate::numerics;
use crate::symbolic::{LocallyConstantFunction, SftGraph};

/// Extremal cycle means of an observable and the largest entropy among
/// invariant measures realizing each extreme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleBounds {
    pub a_min: f64,
    pub a_max: f64,
    pub entropy_at_min: f64,
    pub entropy_at_max: f64,
}

/// Karp's maximum cycle mean over all cycles of the graph.
pub fn max_cycle_mean(n: usize, edges: &[(usize, usize, f64)]) -> Result<f64> {
    if n == 0 || edges.is_empty() {
        return Err(Error::InvalidInput("graph has no edges".into()));
    }
    let neg = f64::NEG_INFINITY;
    let mut d = vec![vec![neg; n]; n + 1];
    d[0].iter_mut().for_each(|x| *x = 0.0);
    for k in 1..=n {
        let (prev, cur) = d.split_at_mut(k);
        let (prev, cur) = (&prev[k - 1], &mut cur[0]);
        for &(u, v, w) in edges {
            if prev[u] > neg {
                cur[v] = cur[v].max(prev[u] + w);
            }
        }
    }
    let mut best = neg;
    for v in 0..n {
        if d[n][v] == neg {
            continue;
        }
        let worst = (0..n)
            .filter(|&k| d[k][v] > neg)
            .map(|k| (d[n][v] - d[k][v]) / (n - k) as f64)
            .fold(f64::INFINITY, f64::min);
        best = best.max(worst);
    }
    if best == neg {
        return Err(Error::InvalidInput("graph has no cycle".into()));
    }
    Ok(best)
}

/// Edges lying on cycles of mean `mean`, where `mean` is the maximum cycle
/// mean (found through longest-path potentials).
pub fn tight_edges(n: usize, edges: &[(usize, usize, f64)], mean: f64) -> Vec<bool> {
    let scale = edges.iter().map(|e| e.2.abs()).fold(1.0, f64::max);
    let tol = 1e-9 * scale;
    let mut h = vec![0.0_f64; n];
    for _ in 0..=n {
        let mut changed = false;
        for &(u, v, w) in edges {
            let cand = h[u] + w - mean;
            if cand > h[v] + tol * 1e-3 {
                h[v] = cand;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    edges.iter().map(|&(u, v, w)| h[u] + w - mean >= h[v] - tol).collect()
}

/// Log spectral radius of the tight subgraph: the largest entropy of an
/// invariant measure realizing the extreme mean.
fn tight_entropy(n: usize, edges: &[(usize, usize, f64)], mean: f64) -> Result<f64> {
    let mut adj = vec![vec![0.0; n]; n];
    for (&(u, v, _), tight) in edges.iter().zip(tight_edges(n, edges, mean)) {
        if tight {
            adj[u][v] = 1.0;
        }
    }
    Ok(numerics::log_spectral_radius(&adj)?.max(0.0))
}

pub fn cycle_bounds(sft: &SftGraph, g: &LocallyConstantFunction) -> Result<CycleBounds> {
    let eg = EdgeGraph::new(sft, g.order())?;
    let vals = eg.edge_values(g)?;
    let n = eg.blocks().len();
    let up: Vec<(usize, usize, f64)> = eg.edges().iter().zip(&vals).map(|(e, &w)| (e.from, e.to, w)).collect();
    let down: Vec<(usize, usize, f64)> = up.iter().map(|&(u, v, w)| (u, v, -w)).collect();
    let a_max = max_cycle_mean(n, &up)?;
    let a_min = -max_cycle_mean(n, &down)?;
    Ok(CycleBounds {
        a_min,
        a_max,
        entropy_at_min: tight_entropy(n, &down, -a_min)?,
        entropy_at_max: tight_entropy(n, &up, a_max)?,
    })
}
