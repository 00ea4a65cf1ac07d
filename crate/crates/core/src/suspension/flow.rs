use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::SpectrumCurve;
use crate::error::{Error, Result};
use crate::numerics::{bisect, golden_section_min};
use crate::symbolic::{FunctionRole, LocallyConstantFunction, MarkovMeasure, SftGraph};
use crate::thermo::{max_cycle_mean, tight_edges, EdgeGraph, BOUNDARY_TOL, Q_CAP};

const ROOT_TOL: f64 = 1e-13;

/// A suspension flow over an SFT with a positive locally constant roof.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuspensionSystem {
    pub base: SftGraph,
    pub roof: LocallyConstantFunction,
    pub roof_min: f64,
}

impl SuspensionSystem {
    pub fn new(base: SftGraph, roof: LocallyConstantFunction) -> Result<Self> {
        if roof.alphabet_size() != base.alphabet_size() {
            return Err(Error::AlphabetMismatch {
                left: base.alphabet_size(),
                right: roof.alphabet_size(),
            });
        }
        let (roof_min, _) = roof.range_on(&base)?;
        if !(roof_min > 0.0) {
            return Err(Error::InvalidInput(format!("roof minimum {roof_min} is not positive")));
        }
        Ok(Self {
            base,
            roof: roof.with_role(FunctionRole::Roof),
            roof_min,
        })
    }

    pub fn constant_roof(base: SftGraph, c: f64) -> Result<Self> {
        let roof = LocallyConstantFunction::constant(&base, c, FunctionRole::Roof)?;
        Self::new(base, roof)
    }
}

/// `μ_ρ`, the flow-invariant measure built from a base measure.
#[derive(Debug, Clone)]
pub struct FlowMeasure {
    pub base: MarkovMeasure,
    pub normalizer: f64,
    pub entropy: f64,
}

impl FlowMeasure {
    pub fn new(base: MarkovMeasure, roof: &LocallyConstantFunction) -> Result<Self> {
        let normalizer = base.integrate(roof)?;
        if !(normalizer > 0.0) {
            return Err(Error::InvalidInput("roof integral must be positive".into()));
        }
        let entropy = base.entropy() / normalizer;
        Ok(Self {
            base,
            normalizer,
            entropy,
        })
    }
}

/// `h_μ / ∫ρ dμ`.
pub fn abramov_entropy(mu: &MarkovMeasure, roof: &LocallyConstantFunction) -> Result<f64> {
    Ok(FlowMeasure::new(mu.clone(), roof)?.entropy)
}

/// `∫φ_g dμ / ∫ρ dμ`.
pub fn flow_integral(mu: &MarkovMeasure, roof: &LocallyConstantFunction, phi: &LocallyConstantFunction) -> Result<f64> {
    Ok(mu.integrate(phi)? / mu.integrate(roof)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowEntropy {
    /// Root of `s ↦ P(−sρ)`.
    pub value: f64,
    /// Abramov entropy of the equilibrium state of `−s*ρ`.
    pub abramov: f64,
}

/// Potentials `q(φ − aρ) − sρ` on one block graph.
#[derive(Debug, Clone)]
struct FlowFamily {
    graph: EdgeGraph,
    phi: Vec<f64>,
    rho: Vec<f64>,
    rho_min: f64,
    rho_max: f64,
}

impl FlowFamily {
    fn new(susp: &SuspensionSystem, phi: &LocallyConstantFunction) -> Result<Self> {
        if !susp.base.is_transitive() {
            return Err(Error::NotTransitive);
        }
        let graph = EdgeGraph::new(&susp.base, phi.order().max(susp.roof.order()))?;
        let rho = graph.edge_values(&susp.roof)?;
        let phi = graph.edge_values(phi)?;
        let rho_min = rho.iter().copied().fold(f64::INFINITY, f64::min);
        let rho_max = rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            graph,
            phi,
            rho,
            rho_min,
            rho_max,
        })
    }

    fn weights(&self, q: f64, a: f64, s: f64) -> Vec<f64> {
        self.phi
            .iter()
            .zip(&self.rho)
            .map(|(p, r)| q * (p - a * r) - s * r)
            .collect()
    }

    /// Root in `s` of `P(q(φ − aρ) − sρ) = 0`.
    fn root(&self, q: f64, a: f64) -> Result<f64> {
        let p0 = self.graph.pressure(&self.weights(q, a, 0.0))?;
        let (lo, hi) = if p0 >= 0.0 {
            (p0 / self.rho_max, p0 / self.rho_min)
        } else {
            (p0 / self.rho_min, p0 / self.rho_max)
        };
        if hi - lo <= ROOT_TOL * (1.0 + hi.abs()) {
            return Ok(0.5 * (lo + hi));
        }
        let mut failure = None;
        let r = bisect(
            |s| match self.graph.pressure(&self.weights(q, a, s)) {
                Ok(p) => p,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            lo,
            hi,
            ROOT_TOL,
        )?;
        match failure {
            Some(e) => Err(e),
            None => Ok(r),
        }
    }

    /// `∫(φ − aρ) dμ` for the equilibrium state of `q(φ − aρ) − sρ`.
    fn constraint_mean(&self, q: f64, a: f64, s: f64) -> Result<f64> {
        let f: Vec<f64> = self.phi.iter().zip(&self.rho).map(|(p, r)| p - a * r).collect();
        Ok(self.graph.equilibrium_mean(&self.weights(q, a, s), &f)?.0)
    }

    /// Extreme flow levels `min/max Σφ/Σρ` over cycles, by bisection on `a`
    /// of the maximum cycle mean of `±(φ − aρ)`.
    fn level_range(&self) -> Result<(f64, f64)> {
        let n = self.graph.blocks().len();
        let ratio = |sign: f64| -> Result<f64> {
            let edges = |a: f64| -> Vec<(usize, usize, f64)> {
                self.graph
                    .edges()
                    .iter()
                    .zip(self.phi.iter().zip(&self.rho))
                    .map(|(e, (p, r))| (e.from, e.to, sign * (p - a * r)))
                    .collect()
            };
            let ratios = self.phi.iter().zip(&self.rho).map(|(p, r)| p / r);
            let lo = ratios.clone().fold(f64::INFINITY, f64::min);
            let hi = ratios.fold(f64::NEG_INFINITY, f64::max);
            if hi - lo < 1e-15 {
                return Ok(lo);
            }
            let mut failure = None;
            let root = bisect(
                |a| match max_cycle_mean(n, &edges(a)) {
                    Ok(m) => sign * m,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                },
                lo,
                hi,
                1e-15,
            )?;
            match failure {
                Some(e) => Err(e),
                None => Ok(root),
            }
        };
        Ok((ratio(-1.0)?, ratio(1.0)?))
    }

    /// Largest flow entropy among measures realizing the extreme level `a`.
    fn boundary_entropy(&self, a: f64, upper: bool) -> Result<f64> {
        let n = self.graph.blocks().len();
        let sign = if upper { 1.0 } else { -1.0 };
        let edges: Vec<(usize, usize, f64)> = self
            .graph
            .edges()
            .iter()
            .zip(self.phi.iter().zip(&self.rho))
            .map(|(e, (p, r))| (e.from, e.to, sign * (p - a * r)))
            .collect();
        let tight = tight_edges(n, &edges, 0.0);
        let weights = |s: f64| -> Vec<f64> {
            self.rho
                .iter()
                .zip(&tight)
                .map(|(r, &t)| if t { -s * r } else { f64::NEG_INFINITY })
                .collect()
        };
        let p0 = self.graph.pressure(&weights(0.0))?;
        if p0 <= 1e-14 {
            return Ok(0.0);
        }
        bisect(
            |s| self.graph.pressure(&weights(s)).unwrap_or(f64::NAN),
            0.0,
            p0 / self.rho_min,
            ROOT_TOL,
        )
    }
}

/// Topological entropy of the flow: the root of `s ↦ P(−sρ)`, cross-checked
/// against the Abramov entropy of the equilibrium state at the root.
pub fn flow_topological_entropy(susp: &SuspensionSystem) -> Result<FlowEntropy> {
    let zero = LocallyConstantFunction::constant(&susp.base, 0.0, FunctionRole::Observable)?;
    let fam = FlowFamily::new(susp, &zero)?;
    let s = fam.root(0.0, 0.0)?;
    let eq = fam.graph.equilibrium(&fam.weights(0.0, 0.0, s))?;
    let abramov = abramov_entropy(&eq.measure, &susp.roof)?;
    if (abramov - s).abs() > 1e-8 {
        return Err(Error::OracleDisagreement(format!(
            "Bowen root {s} vs Abramov value {abramov}"
        )));
    }
    Ok(FlowEntropy { value: s, abramov })
}

/// Flow level-set spectrum `a ↦ inf_q s(q, a)` for the flow observable whose
/// induced base function is `phi`.
pub fn flow_level_spectrum(
    susp: &SuspensionSystem,
    phi: &LocallyConstantFunction,
    a_grid: &[f64],
) -> Result<SpectrumCurve> {
    let fam = FlowFamily::new(susp, phi)?;
    let range = fam.level_range()?;
    let rows: Vec<(f64, f64)> = a_grid
        .par_iter()
        .map(|&a| flow_level_value(&fam, range, a))
        .collect::<Result<_>>()?;
    let mut curve = SpectrumCurve::new("a", "legendre", range);
    for (&a, (h, r)) in a_grid.iter().zip(rows) {
        curve.push(a, h, r);
    }
    Ok(curve)
}

fn check_level(fam: &FlowFamily, range: (f64, f64), a: f64) -> Result<Option<f64>> {
    if !(a >= range.0 - BOUNDARY_TOL && a <= range.1 + BOUNDARY_TOL) {
        return Err(Error::LevelOutOfRange {
            level: a,
            min: range.0,
            max: range.1,
        });
    }
    if (a - range.1).abs() <= BOUNDARY_TOL {
        return Ok(Some(fam.boundary_entropy(range.1, true)?));
    }
    if (a - range.0).abs() <= BOUNDARY_TOL {
        return Ok(Some(fam.boundary_entropy(range.0, false)?));
    }
    Ok(None)
}

fn flow_level_value(fam: &FlowFamily, range: (f64, f64), a: f64) -> Result<(f64, f64)> {
    if let Some(h) = check_level(fam, range, a)? {
        return Ok((h, 0.0));
    }
    // s(q, a) is convex in q with slope ∫(φ − aρ)dμ / ∫ρ dμ
    let slope = |q: f64| -> Result<f64> { fam.constraint_mean(q, a, fam.root(q, a)?) };
    let mut hi = 1.0;
    while slope(hi)? < 0.0 && hi < Q_CAP {
        hi *= 2.0;
    }
    let mut lo = -1.0;
    while slope(lo)? > 0.0 && lo > -Q_CAP {
        lo *= 2.0;
    }
    let mut failure = None;
    let (q, s) = golden_section_min(
        |q| match fam.root(q, a) {
            Ok(s) => s,
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        },
        lo,
        hi,
        1e-10,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let residual = slope(q)?.abs();
    Ok((s.max(0.0), residual))
}

/// Direct constrained maximum `sup{h_μ / ∫ρ dμ : ∫φ dμ / ∫ρ dμ = a}`:
/// for each trial flow entropy `s`, bisect the multiplier `q` so that the
/// equilibrium state of `q(φ − aρ) − sρ` meets the constraint, then solve
/// `h − s∫ρ = 0` in `s`.
pub fn flow_level_oracle(susp: &SuspensionSystem, phi: &LocallyConstantFunction, a: f64) -> Result<f64> {
    let fam = FlowFamily::new(susp, phi)?;
    let range = fam.level_range()?;
    if let Some(h) = check_level(&fam, range, a)? {
        return Ok(h);
    }
    let measure_at = |s: f64| -> Result<MarkovMeasure> {
        let mut hi = 1.0;
        while fam.constraint_mean(hi, a, s)? < 0.0 && hi < 4096.0 {
            hi *= 2.0;
        }
        let mut lo = -1.0;
        while fam.constraint_mean(lo, a, s)? > 0.0 && lo > -4096.0 {
            lo *= 2.0;
        }
        let q = bisect(|q| fam.constraint_mean(q, a, s).unwrap_or(f64::NAN), lo, hi, 1e-14)?;
        Ok(fam.graph.equilibrium(&fam.weights(q, a, s))?.measure)
    };
    let gap = |s: f64| -> f64 {
        match measure_at(s) {
            Ok(m) => {
                let r = m.integrate(&susp.roof).unwrap_or(f64::NAN);
                m.entropy() - s * r
            }
            Err(_) => f64::NAN,
        }
    };
    let h_top = fam.graph.pressure(&vec![0.0; fam.rho.len()])?;
    let s = bisect(gap, 0.0, h_top / fam.rho_min, 1e-13)?;
    let m = measure_at(s)?;
    abramov_entropy(&m, &susp.roof)
}
