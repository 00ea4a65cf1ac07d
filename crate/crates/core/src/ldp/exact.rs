use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chain::BlockChain;
use super::level1::RateContext;
use crate::error::{Error, Result};
use crate::numerics::{compensated_sum, CompensatedSum};
use crate::symbolic::{LocallyConstantFunction, MarkovMeasure, OrbitSampler};

/// Cap on `states × attainable sums` in the exact recursion.
pub const DP_BUDGET: usize = 100_000_000;
pub const GENERATOR_ID: &str = "ChaCha8Rng(seed, stream = chunk index)";
const CHUNK: usize = 8192;
/// Relative guard for the strict inequality `S_n / n > c`.
const STRICT_GUARD: f64 = 1e-9;

/// Law of `S_n g` for integer-valued `g`: `probs[i] = P(S_n g = offset + i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumDistribution {
    pub n: usize,
    pub offset: i64,
    pub probs: Vec<f64>,
}

impl SumDistribution {
    pub fn sums(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs.iter().enumerate().map(|(i, &p)| (self.offset + i as i64, p))
    }

    /// `P(S_n / n > c)`.
    pub fn tail(&self, c: f64) -> f64 {
        let cut = c * self.n as f64;
        let guard = STRICT_GUARD * cut.abs().max(1.0);
        compensated_sum(self.sums().filter(|&(s, _)| s as f64 > cut + guard).map(|(_, p)| p))
    }

    /// `P(S_n / n ∈ (lo, hi))`, or the closed interval.
    pub fn window(&self, lo: f64, hi: f64, closed: bool) -> f64 {
        let n = self.n as f64;
        let guard = STRICT_GUARD * n.max(1.0);
        compensated_sum(
            self.sums()
                .filter(|&(s, _)| {
                    let s = s as f64;
                    if closed {
                        s >= lo * n - guard && s <= hi * n + guard
                    } else {
                        s > lo * n + guard && s < hi * n - guard
                    }
                })
                .map(|(_, p)| p),
        )
    }
}

pub(crate) fn integer_values(values: &[f64]) -> Result<Vec<i64>> {
    values
        .iter()
        .map(|&v| {
            let r = v.round();
            if (v - r).abs() > 1e-12 || r.abs() > 1e12 {
                Err(Error::InvalidInput(format!("observable value {v} is not an integer")))
            } else {
                Ok(r as i64)
            }
        })
        .collect()
}

/// Exact law of `S_n g` by dynamic programming over `(state, running sum)`
/// with Neumaier-compensated accumulation.
pub fn exact_sum_distribution(mu: &MarkovMeasure, g: &LocallyConstantFunction, n: usize) -> Result<SumDistribution> {
    let chain = BlockChain::new(mu, g.order())?;
    sum_distribution_on(&chain, &chain.state_values(g)?, n)
}

pub(crate) fn sum_distribution_on(chain: &BlockChain, values: &[f64], n: usize) -> Result<SumDistribution> {
    if n == 0 {
        return Err(Error::InvalidInput("horizon must be positive".into()));
    }
    let f = integer_values(values)?;
    let (gmin, gmax) = (*f.iter().min().unwrap(), *f.iter().max().unwrap());
    let width = (n as i64 * (gmax - gmin) + 1) as usize;
    let states = chain.len();
    let cells = states.saturating_mul(width);
    if cells > DP_BUDGET {
        return Err(Error::BudgetExceeded {
            cells,
            budget: DP_BUDGET,
        });
    }
    let shifted: Vec<usize> = f.iter().map(|&v| (v - gmin) as usize).collect();
    let mut cur = vec![CompensatedSum::default(); cells];
    for (u, &p) in chain.pi().iter().enumerate() {
        cur[u * width + shifted[u]].add(p);
    }
    for t in 1..n {
        let reach = t * (gmax - gmin) as usize + 1;
        let mut next = vec![CompensatedSum::default(); cells];
        for (u, row) in chain.p().iter().enumerate() {
            for s in 0..reach {
                let mass = cur[u * width + s].value();
                if mass == 0.0 {
                    continue;
                }
                for (v, &p) in row.iter().enumerate() {
                    if p > 0.0 {
                        next[v * width + s + shifted[v]].add(mass * p);
                    }
                }
            }
        }
        cur = next;
    }
    let mut probs = vec![CompensatedSum::default(); width];
    for u in 0..states {
        for s in 0..width {
            probs[s].add(cur[u * width + s].value());
        }
    }
    Ok(SumDistribution {
        n,
        offset: n as i64 * gmin,
        probs: probs.iter().map(|c| c.value()).collect(),
    })
}

/// `P_μ(S_n g / n > c)` exactly.
pub fn exact_deviation_prob(mu: &MarkovMeasure, g: &LocallyConstantFunction, n: usize, c: f64) -> Result<f64> {
    Ok(exact_sum_distribution(mu, g, n)?.tail(c))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub estimate: f64,
    pub hits: u64,
    pub trials: u64,
    pub seed: u64,
    pub generator: String,
    pub wilson95: (f64, f64),
    pub wilson99: (f64, f64),
    /// No hits: the exponent is only bounded above by `(1/n) log(3/trials)`.
    pub zero_hits: bool,
}

/// Wilson score interval for `hits / trials` at normal quantile `z`.
pub fn wilson_interval(hits: u64, trials: u64, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if hits == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if hits == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

pub const Z95: f64 = 1.959_963_984_540_054;
pub const Z99: f64 = 2.575_829_303_548_901;

impl MonteCarlo {
    pub fn new(hits: u64, trials: u64, seed: u64) -> Self {
        Self {
            estimate: hits as f64 / trials as f64,
            hits,
            trials,
            seed,
            generator: GENERATOR_ID.into(),
            wilson95: wilson_interval(hits, trials, Z95),
            wilson99: wilson_interval(hits, trials, Z99),
            zero_hits: hits == 0,
        }
    }

    pub fn exponent(&self, n: usize) -> Option<f64> {
        (!self.zero_hits).then(|| self.estimate.ln() / n as f64)
    }
}

/// Counts orbits of `n + extra` symbols satisfying `hit`, in fixed chunks
/// with one ChaCha stream per chunk, so results do not depend on the number
/// of worker threads.
pub(crate) fn count_hits<F>(mu: &MarkovMeasure, len: usize, trials: u64, seed: u64, hit: F) -> Result<u64>
where
    F: Fn(&[usize]) -> bool + Sync,
{
    let sampler = OrbitSampler::new(mu)?;
    let chunks = trials.div_ceil(CHUNK as u64);
    Ok((0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let todo = (trials - c * CHUNK as u64).min(CHUNK as u64);
            let mut orbit = Vec::with_capacity(len);
            let mut hits = 0u64;
            for _ in 0..todo {
                sampler.fill(&mut rng, len, &mut orbit);
                hits += hit(&orbit) as u64;
            }
            hits
        })
        .sum())
}

pub(crate) fn birkhoff_sum(g: &LocallyConstantFunction, orbit: &[usize], n: usize) -> f64 {
    let k = g.order();
    (0..n).map(|i| g.eval(&orbit[i..i + k])).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub horizon: usize,
    pub event: String,
    pub exact: Option<f64>,
    pub monte_carlo: Option<MonteCarlo>,
    /// `−inf I` over the event.
    pub predicted_exponent: f64,
    /// Finite-`n` prediction: lattice local-limit sum of `e^{−nI(m/n)}`
    /// over the attainable sums in the event.
    pub lattice_exponent: Option<f64>,
    /// `(1/n) log p`, from the exact probability when available.
    pub measured_exponent: Option<f64>,
}

/// `(1/n) log Σ_m span · e^{−n I(m/n)} / sqrt(2π n Λ''(q_m))`, with the bare
/// exponential at the ends of the range.
pub(crate) fn lattice_exponent(ctx: &RateContext, n: usize, sums: &[i64], span: i64) -> Result<f64> {
    let nf = n as f64;
    let mut terms = Vec::with_capacity(sums.len());
    for &m in sums {
        let s = m as f64 / nf;
        let (i, q, _) = ctx.rate(s)?;
        let log_term = if q.is_finite() {
            let var = ctx.curvature(q)?;
            -nf * i + (span as f64).ln() - 0.5 * (2.0 * std::f64::consts::PI * nf * var).ln()
        } else {
            -nf * i
        };
        terms.push(log_term);
    }
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let sum: f64 = terms.iter().map(|t| (t - top).exp()).sum();
    Ok((top + sum.ln()) / nf)
}

pub(crate) fn lattice_span(values: &[i64]) -> i64 {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    let base = values[0];
    values.iter().fold(0, |acc, &v| gcd(acc, v - base)).max(1)
}

/// Monte Carlo estimate of `P(S_n g / n > c)` next to the exact value, the
/// rate-function prediction and its finite-`n` lattice refinement.
pub fn mc_deviation_prob(
    mu: &MarkovMeasure,
    g: &LocallyConstantFunction,
    n: usize,
    c: f64,
    trials: u64,
    seed: u64,
) -> Result<DeviationReport> {
    if trials == 0 || n == 0 {
        return Err(Error::InvalidInput("need positive trials and horizon".into()));
    }
    let ctx = RateContext::new(mu, g)?;
    let k = g.order();
    let cut = c * n as f64;
    let guard = STRICT_GUARD * cut.abs().max(1.0);
    let hits = count_hits(mu, n + k - 1, trials, seed, |orbit| birkhoff_sum(g, orbit, n) > cut + guard)?;
    let mc = MonteCarlo::new(hits, trials, seed);

    let predicted_exponent = if c < ctx.mean {
        0.0
    } else if c >= ctx.range.1 {
        f64::NEG_INFINITY
    } else {
        -ctx.rate(c)?.0
    };
    let (exact, lattice) = match integer_values(&ctx.f) {
        Ok(ints) => {
            let dist = sum_distribution_on(&ctx.chain, &ctx.f, n);
            let exact = match dist {
                Ok(d) => Some(d.tail(c)),
                Err(Error::BudgetExceeded { .. }) => None,
                Err(e) => return Err(e),
            };
            let span = lattice_span(&ints);
            let lo = (n as f64 * ctx.range.0).round() as i64;
            let hi = (n as f64 * ctx.range.1).round() as i64;
            let sums: Vec<i64> = (lo..=hi)
                .filter(|m| (m - lo) % span == 0 && *m as f64 > cut + guard)
                .collect();
            let lattice = if c >= ctx.mean {
                Some(lattice_exponent(&ctx, n, &sums, span)?)
            } else {
                None
            };
            (exact, lattice)
        }
        Err(_) => (None, None),
    };
    let measured_exponent = match exact {
        Some(p) if p > 0.0 => Some(p.ln() / n as f64),
        Some(_) => Some(f64::NEG_INFINITY),
        None => mc.exponent(n),
    };
    Ok(DeviationReport {
        horizon: n,
        event: format!("S_n g / n > {c}"),
        exact,
        monte_carlo: Some(mc),
        predicted_exponent,
        lattice_exponent: lattice,
        measured_exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::SftGraph;

    fn binom(n: u64, k: u64) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    fn coin() -> (MarkovMeasure, LocallyConstantFunction) {
        let mu = MarkovMeasure::bernoulli(&[0.5, 0.5]).unwrap();
        let g = LocallyConstantFunction::indicator(&SftGraph::full_shift(2), 1).unwrap();
        (mu, g)
    }

    #[test]
    fn binomial_tail() {
        let (mu, g) = coin();
        let p = exact_deviation_prob(&mu, &g, 20, 0.7).unwrap();
        let expected = 21700.0 / 1_048_576.0;
        assert!((p - expected).abs() / expected < 1e-12);
        assert_eq!(exact_deviation_prob(&mu, &g, 20, 1.0).unwrap(), 0.0);
        assert!((exact_deviation_prob(&mu, &g, 20, -0.1).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn distribution_matches_binomial() {
        let (mu, g) = coin();
        let d = exact_sum_distribution(&mu, &g, 30).unwrap();
        for (s, p) in d.sums() {
            let b = binom(30, s as u64) / 2f64.powi(30);
            assert!((p - b).abs() / b < 1e-12);
        }
    }

    #[test]
    fn budget_guard() {
        let (mu, g) = coin();
        let big = g.scale(1e6);
        assert!(matches!(
            exact_sum_distribution(&mu, &big, 200),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn monte_carlo_agrees_with_exact() {
        let (mu, g) = coin();
        let r = mc_deviation_prob(&mu, &g, 20, 0.7, 200_000, 5).unwrap();
        let mc = r.monte_carlo.unwrap();
        let exact = r.exact.unwrap();
        assert!(mc.wilson99.0 <= exact && exact <= mc.wilson99.1);
        assert_eq!(mc.generator, GENERATOR_ID);
    }

    #[test]
    fn lln_side_has_zero_exponent() {
        let (mu, g) = coin();
        let r = mc_deviation_prob(&mu, &g, 200, 0.3, 2000, 1).unwrap();
        assert_eq!(r.predicted_exponent, 0.0);
        assert!(r.measured_exponent.unwrap().abs() < 1e-3);
    }

    #[test]
    fn lattice_prediction_tracks_exact_tail() {
        let (mu, g) = coin();
        let r = mc_deviation_prob(&mu, &g, 24, 0.75, 1000, 2).unwrap();
        let measured = r.measured_exponent.unwrap();
        assert!((measured - r.lattice_exponent.unwrap()).abs() < 0.01);
        assert!((r.predicted_exponent + 0.130812).abs() < 1e-5);
    }

    #[test]
    fn wilson_basics() {
        let (lo, hi) = wilson_interval(50, 100, Z95);
        assert!(lo < 0.5 && hi > 0.5 && (0.5 - lo - (hi - 0.5)).abs() < 1e-12);
        assert_eq!(wilson_interval(0, 100, Z95).0, 0.0);
    }
}
