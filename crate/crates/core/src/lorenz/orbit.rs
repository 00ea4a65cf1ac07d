use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{LorenzModel, PoincareState, SINGULAR_TOL};
use crate::error::{Error, Result};
use crate::numerics::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowAverage {
    pub value: f64,
    pub returns: usize,
    /// Times the orbit came within `SINGULAR_TOL` of `x = 0` and was nudged.
    pub perturbations: usize,
    pub roof_cap: f64,
}

/// Moves `x` one ulp away from the singular line; `0` goes right.
fn nudge(x: f64) -> f64 {
    if x == 0.0 {
        f64::from_bits(1)
    } else {
        f64::from_bits(x.to_bits() + 1)
    }
}

/// One Poincaré return that never aborts: near-singular points are nudged.
fn step_counted(m: &LorenzModel, s: PoincareState, perturbations: &mut usize) -> PoincareState {
    let mut x = s.x;
    if x.abs() < SINGULAR_TOL {
        x = nudge(x);
        *perturbations += 1;
    }
    PoincareState {
        x: m.f(x),
        y: m.h(x, s.y),
    }
}

/// `Σ g(s_k) ρ_M(s_k) / Σ ρ_M(s_k)` over `n` Poincaré returns; with
/// `use_roof = false` the plain average of the return map.
pub fn flow_average<G: Fn(f64, f64) -> f64>(
    m: &LorenzModel,
    s0: PoincareState,
    n_returns: usize,
    g: G,
    use_roof: bool,
) -> Result<FlowAverage> {
    if n_returns == 0 {
        return Err(Error::InvalidInput("need at least one return".into()));
    }
    let mut num = CompensatedSum::default();
    let mut den = CompensatedSum::default();
    let mut perturbations = 0;
    let mut s = s0;
    for _ in 0..n_returns {
        if s.x.abs() < SINGULAR_TOL {
            s.x = nudge(s.x);
            perturbations += 1;
        }
        let w = if use_roof { m.roof(s.x) } else { 1.0 };
        num.add(g(s.x, s.y) * w);
        den.add(w);
        s = step_counted(m, s, &mut perturbations);
    }
    Ok(FlowAverage {
        value: num.value() / den.value(),
        returns: n_returns,
        perturbations,
        roof_cap: m.roof_cap(),
    })
}

pub fn random_state(seed: u64, stream: u64) -> PoincareState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    PoincareState {
        x: rng.gen_range(-1.0..1.0),
        y: rng.gen_range(-1.0..1.0),
    }
}

/// Flow averages from independent random starts, one stream per start.
pub fn flow_average_sweep<G: Fn(f64, f64) -> f64 + Sync>(
    m: &LorenzModel,
    seed: u64,
    starts: usize,
    n_returns: usize,
    g: G,
) -> Result<Vec<FlowAverage>> {
    (0..starts as u64)
        .into_par_iter()
        .map(|k| flow_average(m, random_state(seed, k), n_returns, &g, true))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberAudit {
    /// `|y_k − y'_k| / |y_0 − y'_0|` for `k = 1..=n`.
    pub ratios: Vec<f64>,
    pub within_bound: bool,
}

/// Contraction of two fiber points over a common base orbit.
pub fn fiber_contraction_audit(m: &LorenzModel, x0: f64, y0: f64, y1: f64, n: usize) -> Result<FiberAudit> {
    if y0 == y1 {
        return Err(Error::InvalidInput("fiber points must differ".into()));
    }
    let d0 = (y0 - y1).abs();
    let mut perturbations = 0;
    let mut a = PoincareState { x: x0, y: y0 };
    let mut b = PoincareState { x: x0, y: y1 };
    let mut ratios = Vec::with_capacity(n);
    let mut within_bound = true;
    for k in 1..=n {
        a = step_counted(m, a, &mut perturbations);
        b = step_counted(m, PoincareState { x: b.x, y: b.y }, &mut perturbations);
        let r = (a.y - b.y).abs() / d0;
        within_bound &= r <= m.beta().powi(k as i32) * (1.0 + 1e-9) + 1e-15 / d0;
        ratios.push(r);
    }
    Ok(FiberAudit { ratios, within_bound })
}

/// Orbit dump with header `k,x,y,symbol,roof`.
pub fn orbit_csv(m: &LorenzModel, s0: PoincareState, n: usize) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidInput(e.to_string());
    w.write_record(["k", "x", "y", "symbol", "roof"]).map_err(io)?;
    let mut s = s0;
    let mut perturbations = 0;
    for k in 0..n {
        let sym = if s.x >= 0.0 { "R" } else { "L" };
        w.write_record([
            k.to_string(),
            crate::curve::fmt17(s.x),
            crate::curve::fmt17(s.y),
            sym.to_string(),
            crate::curve::fmt17(m.roof(s.x)),
        ])
        .map_err(io)?;
        s = step_counted(m, s, &mut perturbations);
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
