use serde::{Deserialize, Serialize};

use super::chain::BlockChain;
use super::exact::{count_hits, lattice_span, sum_distribution_on, MonteCarlo, Z99};
use super::level1::RateContext;
use crate::error::{Error, Result};
use crate::numerics::bisect;
use crate::symbolic::{LocallyConstantFunction, MarkovMeasure, SftGraph};
use crate::thermo::{max_cycle_mean, Q_CAP};

const SWEEP_CAP: usize = 200;
const DUAL_TOL: f64 = 1e-8;

/// `|η[word] − center| < radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderConstraint {
    pub word: Vec<usize>,
    pub center: f64,
    pub radius: f64,
}

/// Finite intersection of cylinder-frequency slabs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub constraints: Vec<CylinderConstraint>,
}

impl Ball {
    pub fn single(word: Vec<usize>, center: f64, radius: f64) -> Self {
        Self {
            constraints: vec![CylinderConstraint { word, center, radius }],
        }
    }

    fn max_word(&self) -> usize {
        self.constraints.iter().map(|c| c.word.len()).max().unwrap_or(1)
    }

    /// Membership of empirical frequencies; strict for the open ball.
    pub fn contains(&self, freq: &[f64], open: bool) -> bool {
        self.constraints.iter().zip(freq).all(|(c, &f)| {
            let d = (f - c.center).abs();
            let guard = 1e-12;
            if open {
                d < c.radius - guard
            } else {
                d <= c.radius + guard
            }
        })
    }

    /// Depth-`|w|` frequencies of each constraint word over the first `n`
    /// positions of `orbit`.
    pub fn frequencies(&self, orbit: &[usize], n: usize) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|c| {
                let l = c.word.len();
                (0..n).filter(|&i| orbit[i..i + l] == c.word[..]).count() as f64 / n as f64
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallRate {
    /// `inf` of the rate functional over Markov measures in the ball.
    pub inf: f64,
    /// Minimizer: the tilt of μ by the optimal multipliers.
    #[serde(skip)]
    pub witness: Option<MarkovMeasure>,
    pub multipliers: Vec<f64>,
    /// Witness frequencies of the constraint words.
    pub frequencies: Vec<f64>,
    /// Dual objective at the multipliers; equals `inf` at convergence.
    pub dual_value: f64,
    pub iterations: usize,
}

struct BallProblem<'a> {
    chain: BlockChain,
    indicators: Vec<Vec<f64>>,
    ball: &'a Ball,
}

impl BallProblem<'_> {
    fn tilt(&self, lam: &[f64]) -> Vec<f64> {
        let mut t = vec![0.0; self.chain.len()];
        for (l, ind) in lam.iter().zip(&self.indicators) {
            for (ti, &v) in t.iter_mut().zip(ind) {
                *ti += l * v;
            }
        }
        t
    }

    fn frequencies(&self, lam: &[f64]) -> Result<(Vec<f64>, f64)> {
        let (pi, lr) = self.chain.tilted_stationary(&self.tilt(lam))?;
        let freq = self
            .indicators
            .iter()
            .map(|ind| pi.iter().zip(ind).map(|(p, v)| p * v).sum())
            .collect();
        Ok((freq, lr))
    }

    fn dual(&self, lam: &[f64]) -> Result<f64> {
        let lr = self.chain.log_rho(&self.tilt(lam))?;
        let lin: f64 = self
            .ball
            .constraints
            .iter()
            .zip(lam)
            .map(|(c, &l)| l * c.center - l.abs() * c.radius)
            .sum();
        Ok(lin - lr)
    }

    /// Attainable frequency range of constraint `i` over invariant measures.
    fn range(&self, i: usize) -> Result<(f64, f64)> {
        let n = self.chain.len();
        let ind = &self.indicators[i];
        let up: Vec<_> = self.chain.log_edges().iter().map(|&(u, v, _)| (u, v, ind[v])).collect();
        let down: Vec<_> = up.iter().map(|&(u, v, w)| (u, v, -w)).collect();
        Ok((-max_cycle_mean(n, &down)?, max_cycle_mean(n, &up)?))
    }

    /// Maximizes the dual in coordinate `i` with the others held fixed.
    fn update(&self, lam: &mut [f64], i: usize) -> Result<()> {
        let c = &self.ball.constraints[i];
        let freq_at = |x: f64, lam: &mut [f64]| -> Result<f64> {
            lam[i] = x;
            Ok(self.frequencies(lam)?.0[i])
        };
        let v0 = freq_at(0.0, lam)?;
        let (target, sign) = if v0 < c.center - c.radius {
            (c.center - c.radius, 1.0)
        } else if v0 > c.center + c.radius {
            (c.center + c.radius, -1.0)
        } else {
            lam[i] = 0.0;
            return Ok(());
        };
        let mut far = sign;
        while sign * (freq_at(far, lam)? - target) < 0.0 {
            if far.abs() >= Q_CAP {
                return Err(Error::Infeasible(format!(
                    "frequency {target} of {:?} not reached by tilting",
                    c.word
                )));
            }
            far *= 2.0;
        }
        let (lo, hi) = if sign > 0.0 { (0.0, far) } else { (far, 0.0) };
        let mut scratch = lam.to_vec();
        let x = bisect(
            |x| freq_at(x, &mut scratch).map(|f| f - target).unwrap_or(f64::NAN),
            lo,
            hi,
            1e-14,
        )?;
        lam[i] = x;
        Ok(())
    }

    /// Newton polish on the active constraints, held at their binding
    /// faces; kept only if it lowers the residual and keeps the signs.
    fn polish(&self, lam: &mut [f64]) -> Result<()> {
        let active: Vec<usize> = (0..lam.len()).filter(|&i| lam[i] != 0.0).collect();
        if active.len() < 2 {
            return Ok(());
        }
        let residual = |lam: &[f64]| -> Result<Vec<f64>> {
            let (freq, _) = self.frequencies(lam)?;
            Ok(active
                .iter()
                .map(|&i| {
                    let c = &self.ball.constraints[i];
                    freq[i] - (c.center - lam[i].signum() * c.radius)
                })
                .collect())
        };
        let r0 = residual(lam)?;
        let norm = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>().sqrt();
        let k = active.len();
        let mut jac = nalgebra::DMatrix::zeros(k, k);
        for (col, &j) in active.iter().enumerate() {
            let h = 1e-6 * (1.0 + lam[j].abs());
            let mut plus = lam.to_vec();
            plus[j] += h;
            let mut minus = lam.to_vec();
            minus[j] -= h;
            let (rp, rm) = (residual(&plus)?, residual(&minus)?);
            for row in 0..k {
                jac[(row, col)] = (rp[row] - rm[row]) / (2.0 * h);
            }
        }
        let Some(step) = jac.lu().solve(&nalgebra::DVector::from_vec(r0.clone())) else {
            return Ok(());
        };
        let trial: Vec<f64> = lam
            .iter()
            .enumerate()
            .map(|(i, &l)| match active.iter().position(|&a| a == i) {
                Some(p) => l - step[p],
                None => l,
            })
            .collect();
        if active.iter().all(|&i| trial[i].signum() == lam[i].signum()) && norm(&residual(&trial)?) < norm(&r0) {
            lam.copy_from_slice(&trial);
        }
        Ok(())
    }

    fn violation(&self, freq: &[f64]) -> f64 {
        self.ball
            .constraints
            .iter()
            .zip(freq)
            .map(|(c, &f)| ((f - c.center).abs() - c.radius).max(0.0))
            .fold(0.0, f64::max)
    }
}

/// `inf 𝔍_ψ` over order-`k` Markov measures in the ball, where `ψ` is the
/// potential of μ (so `𝔍_ψ` is the relative entropy rate to μ). Solved by
/// coordinate ascent on the box-constrained tilted-pressure dual.
pub fn level2_ball_rate(mu: &MarkovMeasure, ball: &Ball, k: usize) -> Result<BallRate> {
    if !mu.is_ergodic() {
        return Err(Error::NotErgodic);
    }
    if ball.constraints.is_empty() {
        return Err(Error::InvalidInput("ball has no constraints".into()));
    }
    if ball.constraints.iter().any(|c| !(c.radius >= 0.0)) {
        return Err(Error::InvalidInput("ball radii must be non-negative".into()));
    }
    let chain = BlockChain::new(mu, k.max(ball.max_word()))?;
    let indicators = ball
        .constraints
        .iter()
        .map(|c| chain.word_values(&c.word))
        .collect::<Result<Vec<_>>>()?;
    let problem = BallProblem { chain, indicators, ball };
    for (i, c) in ball.constraints.iter().enumerate() {
        let (lo, hi) = problem.range(i)?;
        if c.center + c.radius < lo - DUAL_TOL || c.center - c.radius > hi + DUAL_TOL {
            return Err(Error::Infeasible(format!(
                "frequency of {:?} ranges over [{lo}, {hi}]",
                c.word
            )));
        }
    }
    let m = ball.constraints.len();
    let mut lam = vec![0.0; m];
    let mut iterations = 0;
    loop {
        iterations += 1;
        let before = lam.clone();
        for i in 0..m {
            problem.update(&mut lam, i)?;
        }
        problem.polish(&mut lam)?;
        let (freq, _) = problem.frequencies(&lam)?;
        let moved = lam.iter().zip(&before).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if problem.violation(&freq) <= DUAL_TOL && (m == 1 || moved <= DUAL_TOL) {
            break;
        }
        if iterations >= SWEEP_CAP {
            return Err(Error::Infeasible(format!(
                "constraints not met after {SWEEP_CAP} sweeps (violation {})",
                problem.violation(&freq)
            )));
        }
    }
    let witness = problem.chain.tilted_measure(&problem.tilt(&lam))?;
    let (frequencies, _) = problem.frequencies(&lam)?;
    Ok(BallRate {
        inf: problem.chain.relative_entropy_rate(&witness)?,
        witness: Some(witness),
        dual_value: problem.dual(&lam)?,
        multipliers: lam,
        frequencies,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallReport {
    pub horizon: usize,
    pub event: String,
    /// Probability of the open ball, exact for single-constraint balls.
    pub exact: Option<f64>,
    pub monte_carlo: MonteCarlo,
    /// `−inf 𝔍_ψ` over the open and the closed ball.
    pub open_prediction: f64,
    pub closed_prediction: f64,
    /// Finite-`n` lattice refinements of the two predictions, for
    /// single-constraint balls.
    pub open_lattice: Option<f64>,
    pub closed_lattice: Option<f64>,
    pub measured_exponent: Option<f64>,
}

impl BallReport {
    fn gap(&self, a: f64, b: f64) -> Option<f64> {
        let m = self.measured_exponent?;
        let (lo, hi) = (a.min(b), a.max(b));
        Some((lo - m).max(m - hi).max(0.0))
    }

    /// Distance of the measured exponent from the interval spanned by the
    /// open- and closed-ball predictions.
    pub fn sandwich_gap(&self) -> Option<f64> {
        self.gap(self.open_prediction, self.closed_prediction)
    }

    pub fn lattice_sandwich_gap(&self) -> Option<f64> {
        self.gap(self.open_lattice?, self.closed_lattice?)
    }
}

fn ball_word_function(mu: &MarkovMeasure, word: &[usize]) -> Result<LocallyConstantFunction> {
    LocallyConstantFunction::word_indicator(&SftGraph::full_shift(mu.alphabet_size()), word)
}

/// Lattice prediction from point balls `{η[w] = m/n}` over the attainable
/// counts `m` in the window.
fn ball_lattice(ctx: &RateContext, mu: &MarkovMeasure, c: &CylinderConstraint, n: usize, open: bool) -> Result<f64> {
    let nf = n as f64;
    let (lo, hi) = (c.center - c.radius, c.center + c.radius);
    let guard = 1e-9 * nf.max(1.0);
    let r0 = (nf * ctx.range.0).round() as i64;
    let r1 = (nf * ctx.range.1).round() as i64;
    let span = lattice_span(&[0, 1]);
    let mut terms = Vec::new();
    for m in r0..=r1 {
        let x = m as f64;
        let inside = if open {
            x > lo * nf + guard && x < hi * nf - guard
        } else {
            x >= lo * nf - guard && x <= hi * nf + guard
        };
        if !inside {
            continue;
        }
        let s = x / nf;
        let at_edge = (s - ctx.range.0).abs() < 1e-12 || (s - ctx.range.1).abs() < 1e-12;
        let term = if at_edge {
            -nf * ctx.rate(s)?.0
        } else {
            let point = level2_ball_rate(mu, &Ball::single(c.word.clone(), s, 0.0), c.word.len())?;
            let var = ctx.curvature(point.multipliers[0])?;
            -nf * point.inf + (span as f64).ln() - 0.5 * (2.0 * std::f64::consts::PI * nf * var).ln()
        };
        terms.push(term);
    }
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    Ok((top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()) / nf)
}

/// Empirical-frequency ball test: Monte Carlo membership of the open ball,
/// its exact probability when the ball has a single constraint, and the
/// open/closed predictions.
pub fn level2_mc_test(mu: &MarkovMeasure, ball: &Ball, n: usize, trials: u64, seed: u64) -> Result<BallReport> {
    if n == 0 || trials == 0 {
        return Err(Error::InvalidInput("need positive trials and horizon".into()));
    }
    let k = ball.max_word();
    let open_rate = level2_ball_rate(mu, ball, k)?;
    let closed_prediction = -open_rate.inf;
    // the open-ball infimum is approached from inside: shrink radii
    let shrunk = Ball {
        constraints: ball
            .constraints
            .iter()
            .map(|c| CylinderConstraint {
                radius: (c.radius - 1e-9).max(0.0),
                ..c.clone()
            })
            .collect(),
    };
    let open_prediction = -level2_ball_rate(mu, &shrunk, k)?.inf;
    let hits = count_hits(mu, n + k - 1, trials, seed, |orbit| {
        ball.contains(&ball.frequencies(orbit, n), true)
    })?;
    let monte_carlo = MonteCarlo::new(hits, trials, seed);

    let (mut exact, mut open_lattice, mut closed_lattice) = (None, None, None);
    if let [c] = &ball.constraints[..] {
        let g = ball_word_function(mu, &c.word)?;
        let ctx = RateContext::new(mu, &g)?;
        match sum_distribution_on(&ctx.chain, &ctx.f, n) {
            Ok(d) => exact = Some(d.window(c.center - c.radius, c.center + c.radius, false)),
            Err(Error::BudgetExceeded { .. }) => {}
            Err(e) => return Err(e),
        }
        open_lattice = Some(ball_lattice(&ctx, mu, c, n, true)?);
        closed_lattice = Some(ball_lattice(&ctx, mu, c, n, false)?);
    }
    let measured_exponent = match exact {
        Some(p) if p > 0.0 => Some(p.ln() / n as f64),
        Some(_) => Some(f64::NEG_INFINITY),
        None => monte_carlo.exponent(n),
    };
    let event = ball
        .constraints
        .iter()
        .map(|c| format!("|η{:?} − {}| < {}", c.word, c.center, c.radius))
        .collect::<Vec<_>>()
        .join(" ∧ ");
    Ok(BallReport {
        horizon: n,
        event,
        exact,
        monte_carlo,
        open_prediction,
        closed_prediction,
        open_lattice,
        closed_lattice,
        measured_exponent,
    })
}

/// Hit counts of several open balls on common orbits, and of their union.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallHits {
    pub per_ball: Vec<u64>,
    pub union: u64,
    pub trials: u64,
}

impl BallHits {
    /// Whether the union count matches the sum of the parts within the
    /// 99% Wilson half-width of the union estimate.
    pub fn additive(&self) -> bool {
        let sum: u64 = self.per_ball.iter().sum();
        let (lo, hi) = super::exact::wilson_interval(self.union, self.trials, Z99);
        let p = sum as f64 / self.trials as f64;
        lo <= p && p <= hi
    }
}

pub fn mc_ball_hits(mu: &MarkovMeasure, balls: &[Ball], n: usize, trials: u64, seed: u64) -> Result<BallHits> {
    let k = balls.iter().map(Ball::max_word).max().unwrap_or(1);
    let mut per_ball = Vec::with_capacity(balls.len());
    for b in balls {
        per_ball.push(count_hits(mu, n + k - 1, trials, seed, |o| b.contains(&b.frequencies(o, n), true))?);
    }
    let union = count_hits(mu, n + k - 1, trials, seed, |o| {
        balls.iter().any(|b| b.contains(&b.frequencies(o, n), true))
    })?;
    Ok(BallHits { per_ball, union, trials })
}
