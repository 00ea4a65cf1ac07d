use rayon::prelude::*;

use super::cycles::{cycle_bounds, CycleBounds};
use super::transfer::EdgeGraph;
use crate::curve::SpectrumCurve;
use crate::error::{Error, Result};
use crate::numerics::{bisect, golden_section_min};
use crate::symbolic::{LocallyConstantFunction, MarkovMeasure, SftGraph};

/// Bracket cap on the tilt parameter of the Legendre search.
pub const Q_CAP: f64 = 200.0;
/// Levels this close to an endpoint take the exact endpoint entropy.
pub const BOUNDARY_TOL: f64 = 1e-12;
const ORACLE_Q_CAP: f64 = 4096.0;
const WITNESS_STEPS: usize = 40;
const WITNESS_SLACK: f64 = 1e-3;

/// The one-parameter family `q ↦ q g` on a transitive SFT.
#[derive(Debug, Clone)]
pub struct TiltFamily {
    graph: EdgeGraph,
    g: Vec<f64>,
    pub bounds: CycleBounds,
}

impl TiltFamily {
    pub fn new(sft: &SftGraph, g: &LocallyConstantFunction) -> Result<Self> {
        if !sft.is_transitive() {
            return Err(Error::NotTransitive);
        }
        let graph = EdgeGraph::new(sft, g.order())?;
        let gv = graph.edge_values(g)?;
        Ok(Self {
            bounds: cycle_bounds(sft, g)?,
            graph,
            g: gv,
        })
    }

    fn weights(&self, q: f64) -> Vec<f64> {
        self.g.iter().map(|x| q * x).collect()
    }

    pub fn pressure(&self, q: f64) -> Result<f64> {
        self.graph.pressure(&self.weights(q))
    }

    /// `(∫ g dμ_q, P(q g))` for the equilibrium state `μ_q`.
    pub fn mean(&self, q: f64) -> Result<(f64, f64)> {
        self.graph.equilibrium_mean(&self.weights(q), &self.g)
    }

    pub fn equilibrium(&self, q: f64) -> Result<MarkovMeasure> {
        Ok(self.graph.equilibrium(&self.weights(q))?.measure)
    }

    fn check_level(&self, a: f64) -> Result<Option<f64>> {
        let b = self.bounds;
        if !(a >= b.a_min - BOUNDARY_TOL && a <= b.a_max + BOUNDARY_TOL) {
            return Err(Error::LevelOutOfRange {
                level: a,
                min: b.a_min,
                max: b.a_max,
            });
        }
        if (a - b.a_max).abs() <= BOUNDARY_TOL {
            return Ok(Some(b.entropy_at_max));
        }
        if (a - b.a_min).abs() <= BOUNDARY_TOL {
            return Ok(Some(b.entropy_at_min));
        }
        Ok(None)
    }

    /// Smallest symmetric-doubling bracket `[lo, hi]` with `mean(lo) ≤ a ≤ mean(hi)`.
    fn bracket(&self, a: f64, cap: f64) -> Result<(f64, f64)> {
        let mut hi = 1.0;
        while self.mean(hi)?.0 < a && hi < cap {
            hi *= 2.0;
        }
        let mut lo = -1.0;
        while self.mean(lo)?.0 > a && lo > -cap {
            lo *= 2.0;
        }
        Ok((lo, hi))
    }

    /// `inf_q P(q g) − q a` by golden-section search; returns `(h, q, residual)`.
    pub fn legendre(&self, a: f64) -> Result<(f64, f64, f64)> {
        if let Some(h) = self.check_level(a)? {
            return Ok((h, f64::NAN, 0.0));
        }
        let (lo, hi) = self.bracket(a, Q_CAP)?;
        let mut failure = None;
        let (q, v) = golden_section_min(
            |q| match self.pressure(q) {
                Ok(p) => p - q * a,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::INFINITY
                }
            },
            lo,
            hi,
            1e-11,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let residual = (self.mean(q)?.0 - a).abs();
        Ok((v.max(0.0), q, residual))
    }
}

pub fn legendre_spectrum(sft: &SftGraph, g: &LocallyConstantFunction, a_grid: &[f64]) -> Result<SpectrumCurve> {
    let fam = TiltFamily::new(sft, g)?;
    let rows: Vec<(f64, f64, f64)> = a_grid
        .par_iter()
        .map(|&a| fam.legendre(a).map(|(h, _, r)| (a, h, r)))
        .collect::<Result<_>>()?;
    let mut curve = SpectrumCurve::new("a", "legendre", (fam.bounds.a_min, fam.bounds.a_max));
    for (a, h, r) in rows {
        curve.push(a, h, r);
    }
    Ok(curve)
}

/// Level of the unconstrained maximum and the spectrum value there.
pub fn spectrum_peak(sft: &SftGraph, g: &LocallyConstantFunction) -> Result<(f64, f64)> {
    let fam = TiltFamily::new(sft, g)?;
    let (a_star, _) = fam.mean(0.0)?;
    let (h, _, _) = fam.legendre(a_star)?;
    Ok((a_star, h))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleValue {
    pub value: f64,
    /// Lagrange multiplier found by bisection (`NaN` at endpoints).
    pub multiplier: f64,
    pub residual: f64,
    /// Best penalized entropy over the coarse grid of 2-state chains.
    pub witness: Option<f64>,
}

/// Constrained entropy maximum by exponential tilting, sanity-checked by a
/// brute-force grid over two-state stochastic matrices.
pub fn constrained_entropy_oracle(sft: &SftGraph, g: &LocallyConstantFunction, a: f64) -> Result<OracleValue> {
    let fam = TiltFamily::new(sft, g)?;
    oracle_with(&fam, sft, g, a)
}

fn oracle_with(fam: &TiltFamily, sft: &SftGraph, g: &LocallyConstantFunction, a: f64) -> Result<OracleValue> {
    if let Some(h) = fam.check_level(a)? {
        return Ok(OracleValue {
            value: h,
            multiplier: f64::NAN,
            residual: 0.0,
            witness: None,
        });
    }
    let (lo, hi) = fam.bracket(a, ORACLE_Q_CAP)?;
    let mut failure = None;
    let q = bisect(
        |q| match fam.mean(q) {
            Ok((m, _)) => m - a,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        lo,
        hi,
        1e-14,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let mu = fam.equilibrium(q)?;
    let value = mu.entropy();
    let residual = (mu.integrate(g)? - a).abs();
    let witness = grid_witness(sft, g, a, q)?;
    if let Some(w) = witness {
        if w > value + WITNESS_SLACK {
            return Err(Error::OracleDisagreement(format!(
                "grid witness {w} exceeds tilting value {value} at level {a}"
            )));
        }
    }
    Ok(OracleValue {
        value,
        multiplier: q,
        residual,
        witness,
    })
}

/// `max_P h(P) + q (∫g dμ_P − a)` over 2-state chains with entries in
/// multiples of 1/40; never exceeds the constrained maximum at `a`.
fn grid_witness(sft: &SftGraph, g: &LocallyConstantFunction, a: f64, q: f64) -> Result<Option<f64>> {
    if sft.alphabet_size() != 2 {
        return Ok(None);
    }
    let steps = WITNESS_STEPS;
    let free = |from: usize| sft.allows(from, 0) && sft.allows(from, 1);
    let choices = |from: usize| -> Vec<f64> {
        if free(from) {
            (0..=steps).map(|i| i as f64 / steps as f64).collect()
        } else if sft.allows(from, 1 - from) {
            vec![1.0]
        } else {
            vec![0.0]
        }
    };
    let mut best: Option<f64> = None;
    for &x in &choices(0) {
        for &y in &choices(1) {
            // x = P(0→1), y = P(1→0)
            if x + y == 0.0 {
                continue;
            }
            let stationary = vec![y / (x + y), x / (x + y)];
            let m = MarkovMeasure::new(
                2,
                1,
                vec![vec![0], vec![1]],
                vec![vec![1.0 - x, x], vec![y, 1.0 - y]],
                stationary,
            )?;
            let score = m.entropy() + q * (m.integrate(g)? - a);
            best = Some(best.map_or(score, |b: f64| b.max(score)));
        }
    }
    Ok(best)
}

/// Oracle values on a grid, as a curve tagged `oracle`.
pub fn oracle_spectrum(sft: &SftGraph, g: &LocallyConstantFunction, a_grid: &[f64]) -> Result<SpectrumCurve> {
    let fam = TiltFamily::new(sft, g)?;
    let rows: Vec<OracleValue> = a_grid
        .par_iter()
        .map(|&a| oracle_with(&fam, sft, g, a))
        .collect::<Result<_>>()?;
    let mut curve = SpectrumCurve::new("a", "oracle", (fam.bounds.a_min, fam.bounds.a_max));
    for (&a, r) in a_grid.iter().zip(rows) {
        curve.push(a, r.value, r.residual);
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary_entropy(p: f64) -> f64 {
        -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
    }

    #[test]
    fn full_shift_closed_forms() {
        let s = SftGraph::full_shift(2);
        let g = LocallyConstantFunction::indicator(&s, 1).unwrap();
        let c = legendre_spectrum(&s, &g, &[0.25, 0.5, 1.0]).unwrap();
        assert!((c.points[0].value - binary_entropy(0.25)).abs() < 1e-12);
        assert!((c.points[0].value - 0.562_335_144_618_808_2).abs() < 1e-12);
        assert!((c.points[1].value - 2f64.ln()).abs() < 1e-12);
        assert_eq!(c.points[2].value, 0.0);
    }

    #[test]
    fn oracle_closed_forms() {
        let s = SftGraph::full_shift(2);
        let g = LocallyConstantFunction::indicator(&s, 1).unwrap();
        let half = constrained_entropy_oracle(&s, &g, 0.5).unwrap();
        assert!((half.value - 2f64.ln()).abs() < 1e-12);
        let tq = constrained_entropy_oracle(&s, &g, 0.75).unwrap();
        assert!((tq.value - binary_entropy(0.75)).abs() < 1e-12);
        assert!(tq.witness.unwrap() <= tq.value + 1e-12);
        let gm = SftGraph::golden_mean();
        let g1 = LocallyConstantFunction::indicator(&gm, 1).unwrap();
        assert_eq!(constrained_entropy_oracle(&gm, &g1, 0.0).unwrap().value, 0.0);
    }

    #[test]
    fn out_of_range_level() {
        let s = SftGraph::golden_mean();
        let g = LocallyConstantFunction::indicator(&s, 1).unwrap();
        assert!(matches!(
            legendre_spectrum(&s, &g, &[0.6]),
            Err(Error::LevelOutOfRange { .. })
        ));
        assert!(matches!(
            constrained_entropy_oracle(&s, &g, -0.1),
            Err(Error::LevelOutOfRange { .. })
        ));
    }

    #[test]
    fn golden_mean_legendre_matches_oracle_and_is_concave() {
        let s = SftGraph::golden_mean();
        let g = LocallyConstantFunction::indicator(&s, 1).unwrap();
        let grid: Vec<f64> = (0..=40).map(|i| 0.5 * i as f64 / 40.0).collect();
        let l = legendre_spectrum(&s, &g, &grid).unwrap();
        let o = oracle_spectrum(&s, &g, &grid).unwrap();
        assert!(l.sup_distance(&o).unwrap() < 1e-6);
        assert!(l.concavity_defect() < 1e-9);
        let (_, peak) = spectrum_peak(&s, &g).unwrap();
        assert!((peak - 0.481_211_825_059_603_4).abs() < 1e-10);
    }

    #[test]
    fn pressure_is_convex_in_q() {
        let s = SftGraph::golden_mean();
        let g = LocallyConstantFunction::indicator(&s, 0).unwrap();
        let fam = TiltFamily::new(&s, &g).unwrap();
        let p: Vec<f64> = (-20..=20).map(|i| fam.pressure(i as f64 * 0.25).unwrap()).collect();
        for w in p.windows(3) {
            assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-9);
            assert!(w[2] >= w[1]);
        }
    }
}
