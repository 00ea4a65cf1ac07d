use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chain::BlockChain;
use crate::curve::RateCurve;
use crate::error::{Error, Result};
use crate::numerics::{bisect, golden_section_min, log_spectral_radius};
use crate::symbolic::{LocallyConstantFunction, MarkovMeasure};
use crate::thermo::{max_cycle_mean, tight_edges, BOUNDARY_TOL, Q_CAP};

/// `(1/n) log E_μ[e^{q S_n g}]`, exactly, by `n`-fold tilted products with
/// per-step renormalization.
pub fn exact_cgf(mu: &MarkovMeasure, g: &LocallyConstantFunction, q: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("horizon must be positive".into()));
    }
    let chain = BlockChain::new(mu, g.order())?;
    let f = chain.state_values(g)?;
    let weight: Vec<f64> = f.iter().map(|v| q * v).collect();
    let shift = weight.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = weight.iter().map(|w| (w - shift).exp()).collect();
    let mut v: Vec<f64> = chain.pi().iter().zip(&e).map(|(p, e)| p * e).collect();
    let mut log_total = shift;
    for _ in 1..n {
        let s: f64 = v.iter().sum();
        log_total += s.ln() + shift;
        let mut next = vec![0.0; v.len()];
        for (u, row) in chain.p().iter().enumerate() {
            let vu = v[u] / s;
            if vu == 0.0 {
                continue;
            }
            for (j, &p) in row.iter().enumerate() {
                if p > 0.0 {
                    next[j] += vu * p * e[j];
                }
            }
        }
        v = next;
    }
    let s: f64 = v.iter().sum();
    Ok((log_total + s.ln()) / n as f64)
}

/// `Λ(q) = lim (1/n) log E_μ[e^{q S_n g}]`: the log Perron root of the
/// tilted transition matrix.
pub fn cgf(mu: &MarkovMeasure, g: &LocallyConstantFunction, q: f64) -> Result<f64> {
    RateContext::new(mu, g)?.lambda(q)
}

/// The tilted family `q ↦ P e^{q g}` of one chain and observable.
#[derive(Debug, Clone)]
pub(crate) struct RateContext {
    pub chain: BlockChain,
    pub f: Vec<f64>,
    pub mean: f64,
    pub range: (f64, f64),
}

impl RateContext {
    pub fn new(mu: &MarkovMeasure, g: &LocallyConstantFunction) -> Result<Self> {
        if !mu.is_ergodic() {
            return Err(Error::NotErgodic);
        }
        let chain = BlockChain::new(mu, g.order())?;
        let f = chain.state_values(g)?;
        Self::from_values(chain, f)
    }

    pub fn from_values(chain: BlockChain, f: Vec<f64>) -> Result<Self> {
        let mean = chain.pi().iter().zip(&f).map(|(p, v)| p * v).sum();
        let n = chain.len();
        let edges: Vec<(usize, usize, f64)> = chain.log_edges().iter().map(|&(u, v, _)| (u, v, f[v])).collect();
        let down: Vec<(usize, usize, f64)> = edges.iter().map(|&(u, v, w)| (u, v, -w)).collect();
        let range = (-max_cycle_mean(n, &down)?, max_cycle_mean(n, &edges)?);
        Ok(Self { chain, f, mean, range })
    }

    fn tilt(&self, q: f64) -> Vec<f64> {
        self.f.iter().map(|v| q * v).collect()
    }

    pub fn lambda(&self, q: f64) -> Result<f64> {
        self.chain.log_rho(&self.tilt(q))
    }

    /// Mean of `g` under the tilted chain, and `Λ(q)`.
    pub fn tilted_mean(&self, q: f64) -> Result<(f64, f64)> {
        let (pi, lr) = self.chain.tilted_stationary(&self.tilt(q))?;
        Ok((pi.iter().zip(&self.f).map(|(p, v)| p * v).sum(), lr))
    }

    /// `Λ''(q)` by a central difference.
    pub fn curvature(&self, q: f64) -> Result<f64> {
        let h = 1e-4 * (1.0 + q.abs());
        Ok((self.lambda(q + h)? - 2.0 * self.lambda(q)? + self.lambda(q - h)?) / (h * h))
    }

    /// `-log ρ(P restricted to cycles of extreme mean)`: the rate at an end
    /// of the range.
    fn boundary_rate(&self, upper: bool) -> Result<f64> {
        let n = self.chain.len();
        let sign = if upper { 1.0 } else { -1.0 };
        let level = if upper { self.range.1 } else { self.range.0 };
        let edges: Vec<(usize, usize, f64)> = self
            .chain
            .log_edges()
            .iter()
            .map(|&(u, v, _)| (u, v, sign * self.f[v]))
            .collect();
        let tight = tight_edges(n, &edges, sign * level);
        let mut m = vec![vec![0.0; n]; n];
        for (&(u, v, _), t) in edges.iter().zip(tight) {
            if t {
                m[u][v] = self.chain.p()[u][v];
            }
        }
        Ok(-log_spectral_radius(&m)?)
    }

    pub fn check(&self, s: f64) -> Result<()> {
        if s < self.range.0 - BOUNDARY_TOL || s > self.range.1 + BOUNDARY_TOL {
            return Err(Error::LevelOutOfRange {
                level: s,
                min: self.range.0,
                max: self.range.1,
            });
        }
        Ok(())
    }

    /// `(I(s), q*, |mean(q*) − s|)` with `I(s) = sup_q [qs − Λ(q)]`.
    pub fn rate(&self, s: f64) -> Result<(f64, f64, f64)> {
        self.check(s)?;
        if self.range.1 - self.range.0 <= BOUNDARY_TOL {
            return Ok((0.0, 0.0, 0.0));
        }
        if (s - self.range.1).abs() <= BOUNDARY_TOL {
            return Ok((self.boundary_rate(true)?, f64::INFINITY, 0.0));
        }
        if (s - self.range.0).abs() <= BOUNDARY_TOL {
            return Ok((self.boundary_rate(false)?, f64::NEG_INFINITY, 0.0));
        }
        let gap = |q: f64| self.tilted_mean(q).map(|(m, _)| m - s);
        let (mut lo, mut hi) = (-1.0, 1.0);
        while gap(hi)? < 0.0 && hi < Q_CAP {
            hi *= 2.0;
        }
        while gap(lo)? > 0.0 && lo > -Q_CAP {
            lo *= 2.0;
        }
        let q = if gap(hi)? < 0.0 {
            hi
        } else if gap(lo)? > 0.0 {
            lo
        } else {
            bisect(|q| gap(q).unwrap_or(f64::NAN), lo, hi, 1e-14)?
        };
        let (m, lam) = self.tilted_mean(q)?;
        Ok(((q * s - lam).max(0.0), q, (m - s).abs()))
    }

    /// `P(ψ) − min{∫ψ dη : ∫g dη = s}` with `ψ = log P`: the supremum of the
    /// rate functional over the constraint set, by LP duality on cycle means.
    pub fn sup_form(&self, s: f64) -> Result<f64> {
        self.check(s)?;
        let n = self.chain.len();
        let log_edges = self.chain.log_edges();
        let min_mean = |lam: f64| -> f64 {
            let edges: Vec<(usize, usize, f64)> = log_edges
                .iter()
                .map(|&(u, v, lp)| (u, v, -(lp - lam * (self.f[v] - s))))
                .collect();
            max_cycle_mean(n, &edges).unwrap_or(f64::NAN)
        };
        let (_, best) = golden_section_min(min_mean, -Q_CAP, Q_CAP, 1e-9);
        Ok(best)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level1Rate {
    pub curve: RateCurve,
    /// `s̄ = ∫g dμ`.
    pub mean: f64,
    pub range: (f64, f64),
    /// `(q*, Λ(q*))` at each grid point.
    pub cgf_samples: Vec<(f64, f64)>,
    /// `sup` of the rate functional over `{∫g dη = s}`, side by side with
    /// the curve (which is the `inf`).
    pub sup_form: Vec<f64>,
}

pub fn level1_rate(mu: &MarkovMeasure, g: &LocallyConstantFunction, s_grid: &[f64]) -> Result<Level1Rate> {
    let ctx = RateContext::new(mu, g)?;
    let rows: Vec<(f64, f64, f64, f64, f64)> = s_grid
        .par_iter()
        .map(|&s| {
            let (i, q, r) = ctx.rate(s)?;
            let lam = if q.is_finite() { ctx.lambda(q)? } else { f64::NAN };
            Ok((i, q, r, lam, ctx.sup_form(s)?))
        })
        .collect::<Result<_>>()?;
    let mut curve = RateCurve::new("s", "legendre", ctx.range);
    let mut cgf_samples = Vec::new();
    let mut sup_form = Vec::new();
    for (&s, (i, q, r, lam, sup)) in s_grid.iter().zip(rows) {
        curve.push(s, i, r);
        cgf_samples.push((q, lam));
        sup_form.push(sup);
    }
    Ok(Level1Rate {
        curve,
        mean: ctx.mean,
        range: ctx.range,
        cgf_samples,
        sup_form,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{FunctionRole, SftGraph};
    use crate::thermo::{equilibrium_state, pressure};

    fn h(p: f64) -> f64 {
        -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
    }

    fn coin() -> (MarkovMeasure, LocallyConstantFunction) {
        let mu = MarkovMeasure::bernoulli(&[0.5, 0.5]).unwrap();
        let g = LocallyConstantFunction::indicator(&SftGraph::full_shift(2), 1).unwrap();
        (mu, g)
    }

    #[test]
    fn bernoulli_cgf_is_exact() {
        let (mu, g) = coin();
        assert_eq!(exact_cgf(&mu, &g, 0.0, 17).unwrap(), 0.0);
        for q in [-2.0, -0.3, 0.5, 3.0] {
            let lim = ((1.0 + f64::exp(q)) / 2.0).ln();
            assert!((exact_cgf(&mu, &g, q, 30).unwrap() - lim).abs() < 1e-14);
            assert!((cgf(&mu, &g, q).unwrap() - lim).abs() < 1e-13);
        }
    }

    #[test]
    fn cgf_pressure_identity_on_golden_mean() {
        let sft = SftGraph::golden_mean();
        let psi = LocallyConstantFunction::from_fn(&sft, 2, FunctionRole::Potential, |w| 0.3 * w[0] as f64 - 0.2 * w[1] as f64)
            .unwrap();
        let g = LocallyConstantFunction::indicator(&sft, 1).unwrap();
        let mu = equilibrium_state(&sft, &psi).unwrap().measure;
        let p0 = pressure(&sft, &psi).unwrap();
        for q in [-3.0, -1.0, 0.0, 0.5, 2.0] {
            let pq = pressure(&sft, &psi.add_scaled(&g, q).unwrap()).unwrap();
            assert!((cgf(&mu, &g, q).unwrap() - (pq - p0)).abs() < 1e-8);
        }
    }

    #[test]
    fn coin_rate_values() {
        let (mu, g) = coin();
        let r = level1_rate(&mu, &g, &[0.5, 0.75, 1.0, 0.0]).unwrap();
        assert!(r.curve.points[0].value.abs() < 1e-12);
        assert!((r.curve.points[1].value - (2f64.ln() - h(0.75))).abs() < 1e-9);
        assert!((r.curve.points[2].value - 2f64.ln()).abs() < 1e-12);
        assert!((r.curve.points[3].value - 2f64.ln()).abs() < 1e-12);
        // the supremum over the constraint set is log 2 at every level
        assert!(r.sup_form.iter().all(|&v| (v - 2f64.ln()).abs() < 1e-8));
        assert!(matches!(level1_rate(&mu, &g, &[1.2]), Err(Error::LevelOutOfRange { .. })));
    }

    #[test]
    fn rate_is_convex_and_vanishes_at_mean() {
        let sft = SftGraph::golden_mean();
        let mu = MarkovMeasure::parry(&sft).unwrap();
        let g = LocallyConstantFunction::indicator(&sft, 1).unwrap();
        let grid: Vec<f64> = (0..=40).map(|i| 0.5 * i as f64 / 40.0).collect();
        let r = level1_rate(&mu, &g, &grid).unwrap();
        let mean = level1_rate(&mu, &g, &[r.mean]).unwrap();
        assert!(mean.curve.points[0].value.abs() < 1e-10);
        let neg = RateCurve {
            points: r
                .curve
                .points
                .iter()
                .map(|p| crate::curve::CurvePoint { value: -p.value, ..*p })
                .collect(),
            ..r.curve.clone()
        };
        assert!(neg.concavity_defect() < 1e-9);
        assert!(r.curve.points.iter().all(|p| p.value >= 0.0));
    }
}
