use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::error::Error;
use crate::symbolic::{word_space, LocallyConstantFunction, MarkovMeasure, SftGraph};
use crate::thermo::{eigenvector_bound, GibbsPaths};

/// Resolution at which equal values of `ln R_n` are merged.
const LOG_QUANTUM: f64 = 1e-9;
/// Cap on live `(state, ln R_n)` cells per horizon.
pub const AUDIT_BUDGET: usize = 5_000_000;
const SUBEXPONENTIAL_TOL: f64 = 0.01;
const DEFECT_TOL: f64 = 1e-9;

pub const EPSILON_SCALE: &str = "generating partition: Bowen balls are cylinders";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakGibbsRow {
    pub n: usize,
    /// `max_w ln C_n(w)` with `C_n = max(R_n, 1/R_n)`.
    pub max_log_constant: f64,
    /// `max_w (1/n) ln C_n(w)`.
    pub max_rate: f64,
    /// `(ln C_n, μ-mass)` pairs, sorted by the first entry.
    pub distribution: Vec<(f64, f64)>,
}

impl WeakGibbsRow {
    /// `μ{C_n > e^{δn}}`.
    pub fn exceedance(&self, delta: f64) -> f64 {
        let cut = delta * self.n as f64;
        self.distribution.iter().filter(|(l, _)| *l > cut + LOG_QUANTUM).map(|(_, m)| m).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakGibbsAudit {
    pub pressure: f64,
    pub epsilon_scale: String,
    /// `|h_μ + ∫ψ dμ − P(ψ)|`.
    pub variational_defect: f64,
    pub rows: Vec<WeakGibbsRow>,
    /// `max (1/n) ln C_n < 0.01` at the last horizon.
    pub subexponential: bool,
    /// Uniform bound on `C_n` when μ is the equilibrium state of ψ.
    pub strict_bound: Option<f64>,
}

/// Per-word Gibbs constants `C_n(w)` and their μ-distribution for
/// `n ≤ n_max`, by dynamic programming over blocks and merged values of
/// `ln R_n`.
pub fn weak_gibbs_audit(
    mu: &MarkovMeasure,
    psi: &LocallyConstantFunction,
    sft: &SftGraph,
    n_max: usize,
) -> Result<WeakGibbsAudit> {
    let paths = GibbsPaths::new(mu, psi, sft)?;
    let space = word_space(paths.alphabet, paths.w).unwrap() as usize;
    let key = |r: f64| (r / LOG_QUANTUM).round() as i64;
    let mut rows = Vec::new();
    for n in paths.b.max(1)..=n_max {
        let mut cells: Vec<BTreeMap<i64, (f64, f64)>> = vec![BTreeMap::new(); space];
        for &y in &paths.starts {
            let (r, m) = paths.init(y, n);
            if m > f64::NEG_INFINITY {
                cells[y as usize].insert(key(r), (r, m.exp()));
            }
        }
        for t in paths.w..paths.horizon(n) {
            let mut next: Vec<BTreeMap<i64, (f64, f64)>> = vec![BTreeMap::new(); space];
            let mut live = 0;
            for &y in &paths.starts {
                let last = (y % paths.alphabet as u64) as usize;
                for (&_, &(r, m)) in &cells[y as usize] {
                    for &s in paths.successors(last) {
                        let (ext, to) = paths.next_state(y, s);
                        let (dr, lp) = paths.step(t, ext, n);
                        if lp == f64::NEG_INFINITY {
                            continue;
                        }
                        let nr = r + dr;
                        let cell = next[to as usize].entry(key(nr)).or_insert((nr, 0.0));
                        cell.1 += m * lp.exp();
                    }
                }
            }
            for c in &next {
                live += c.len();
            }
            if live > AUDIT_BUDGET {
                return Err(Error::BudgetExceeded {
                    cells: live,
                    budget: AUDIT_BUDGET,
                });
            }
            cells = next;
        }
        let mut dist: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
        for (r, m) in cells.iter().flat_map(|c| c.values()) {
            let c = r.abs();
            dist.entry(key(c)).or_insert((c, 0.0)).1 += m;
        }
        let distribution: Vec<(f64, f64)> = dist.into_values().collect();
        let max_log_constant = distribution.iter().map(|d| d.0).fold(0.0, f64::max);
        rows.push(WeakGibbsRow {
            n,
            max_log_constant,
            max_rate: max_log_constant / n as f64,
            distribution,
        });
    }
    let variational_defect = (mu.entropy() + mu.integrate(psi)? - paths.pressure).abs();
    let strict_bound = if variational_defect <= DEFECT_TOL {
        eigenvector_bound(sft, psi)?
    } else {
        None
    };
    Ok(WeakGibbsAudit {
        pressure: paths.pressure,
        epsilon_scale: EPSILON_SCALE.into(),
        variational_defect,
        subexponential: rows.last().is_some_and(|r| r.max_rate < SUBEXPONENTIAL_TOL),
        rows,
        strict_bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CInfinityRow {
    pub delta: f64,
    /// `max` over the tail horizons of `(1/n) ln μ{C_n > e^{δn}}`.
    pub rate: f64,
    /// Horizon from which the exceedance set is empty, when known.
    pub empty_from: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CInfinity {
    /// Estimate at the smallest `δ`; `-inf` is the strict-Gibbs sentinel.
    pub value: f64,
    pub table: Vec<CInfinityRow>,
}

impl CInfinity {
    pub fn is_sentinel(&self) -> bool {
        self.value == f64::NEG_INFINITY
    }
}

/// Tail constant from an audit: for each `δ`, the exceedance exponent over
/// the last half of the audited horizons. A uniform Gibbs bound `B` empties
/// every exceedance set from `n > ln B / δ` on.
pub fn c_infinity_estimate(audit: &WeakGibbsAudit, delta_grid: &[f64]) -> Result<CInfinity> {
    if delta_grid.is_empty() || delta_grid.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::InvalidInput("δ grid must be non-empty and positive".into()));
    }
    if audit.rows.is_empty() {
        return Err(Error::InvalidInput("audit has no rows".into()));
    }
    let tail = &audit.rows[audit.rows.len() / 2..];
    let mut table = Vec::with_capacity(delta_grid.len());
    for &delta in delta_grid {
        let row = match audit.strict_bound {
            Some(bound) => CInfinityRow {
                delta,
                rate: f64::NEG_INFINITY,
                empty_from: Some((bound.ln() / delta).floor() as usize + 1),
            },
            None => {
                let rate = tail
                    .iter()
                    .map(|r| r.exceedance(delta).ln() / r.n as f64)
                    .fold(f64::NEG_INFINITY, f64::max);
                let empty_from = audit
                    .rows
                    .iter()
                    .rposition(|r| r.exceedance(delta) > 0.0)
                    .map_or(Some(audit.rows[0].n), |i| audit.rows.get(i + 1).map(|r| r.n));
                CInfinityRow { delta, rate, empty_from }
            }
        };
        table.push(row);
    }
    let smallest = table
        .iter()
        .min_by(|a, b| a.delta.total_cmp(&b.delta))
        .expect("non-empty grid");
    Ok(CInfinity {
        value: smallest.rate,
        table,
    })
}
