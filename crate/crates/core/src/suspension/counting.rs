use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbolic::SftGraph;

pub const ENUMERATION_BUDGET: f64 = 1e7;

/// Empirical statistics of one admissible word.
#[derive(Debug, Clone, Copy)]
pub struct WordStats<'a> {
    pub word: &'a [usize],
    pub symbol_counts: &'a [usize],
}

impl WordStats<'_> {
    pub fn frequency(&self, symbol: usize) -> f64 {
        self.symbol_counts[symbol] as f64 / self.word.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountingOptions {
    pub budget: f64,
    /// Number of uniform samples when enumeration exceeds the budget;
    /// `None` turns the budget into a hard error.
    pub samples: Option<usize>,
    pub seed: u64,
}

impl Default for CountingOptions {
    fn default() -> Self {
        Self {
            budget: ENUMERATION_BUDGET,
            samples: Some(200_000),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountingEntropy {
    /// `(1/n) log count`, `-inf` when nothing qualifies.
    pub value: f64,
    pub count: f64,
    pub total: f64,
    pub exact: bool,
    /// Standard error of `value` when sampled.
    pub std_error: f64,
}

/// `(1/n) log #{admissible n-words satisfying the predicate}`.
pub fn cylinder_counting_entropy<P>(sft: &SftGraph, n: usize, predicate: P, opts: CountingOptions) -> Result<CountingEntropy>
where
    P: Fn(&WordStats) -> bool,
{
    if n == 0 {
        return Err(Error::InvalidInput("word length must be positive".into()));
    }
    let succ = sft.successor_lists();
    let a = sft.alphabet_size();
    // paths[t][s]: admissible words of length n - t starting at s
    let mut paths = vec![vec![0.0_f64; a]; n];
    paths[n - 1].iter_mut().for_each(|c| *c = 1.0);
    for t in (0..n - 1).rev() {
        for s in 0..a {
            paths[t][s] = succ[s].iter().map(|&u| paths[t + 1][u]).sum();
        }
    }
    let total: f64 = paths[0].iter().sum();
    let finish = |count: f64, exact: bool, std_error: f64| CountingEntropy {
        value: if count > 0.0 { count.ln() / n as f64 } else { f64::NEG_INFINITY },
        count,
        total,
        exact,
        std_error,
    };
    let mut word = vec![0usize; n];
    let mut counts = vec![0usize; a];
    if total <= opts.budget {
        let mut hits = 0u64;
        for s in 0..a {
            word[0] = s;
            counts[s] += 1;
            enumerate(&succ, 1, &mut word, &mut counts, &predicate, &mut hits);
            counts[s] -= 1;
        }
        return Ok(finish(hits as f64, true, 0.0));
    }
    let samples = opts.samples.ok_or(Error::Overflow {
        words: total,
        budget: opts.budget,
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let all: Vec<usize> = (0..a).collect();
    let mut hits = 0usize;
    for _ in 0..samples {
        counts.iter_mut().for_each(|c| *c = 0);
        word[0] = pick(&mut rng, &paths[0], &all);
        for t in 1..n {
            word[t] = pick(&mut rng, &paths[t], &succ[word[t - 1]]);
        }
        word.iter().for_each(|&s| counts[s] += 1);
        if predicate(&WordStats {
            word: &word,
            symbol_counts: &counts,
        }) {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    let se = if hits > 0 {
        ((1.0 - p) / (p * samples as f64)).sqrt() / n as f64
    } else {
        f64::INFINITY
    };
    Ok(finish(p * total, false, se))
}

fn pick(rng: &mut ChaCha8Rng, weights: &[f64], options: &[usize]) -> usize {
    let total: f64 = options.iter().map(|&s| weights[s]).sum();
    let mut u = rng.gen::<f64>() * total;
    for &s in options {
        u -= weights[s];
        if u < 0.0 {
            return s;
        }
    }
    *options.iter().rev().find(|&&s| weights[s] > 0.0).unwrap_or(&options[0])
}

fn enumerate<P: Fn(&WordStats) -> bool>(
    succ: &[Vec<usize>],
    t: usize,
    word: &mut [usize],
    counts: &mut [usize],
    predicate: &P,
    hits: &mut u64,
) {
    if t == word.len() {
        if predicate(&WordStats {
            word,
            symbol_counts: counts,
        }) {
            *hits += 1;
        }
        return;
    }
    let options = &succ[word[t - 1]];
    for &s in options {
        word[t] = s;
        counts[s] += 1;
        enumerate(succ, t + 1, word, counts, predicate, hits);
        counts[s] -= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary_entropy(p: f64) -> f64 {
        -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
    }

    #[test]
    fn always_true_counts_everything() {
        let e = cylinder_counting_entropy(&SftGraph::full_shift(2), 12, |_| true, Default::default()).unwrap();
        assert!(e.exact);
        assert!((e.value - 2f64.ln()).abs() < 1e-15);
        let g = cylinder_counting_entropy(&SftGraph::golden_mean(), 10, |_| true, Default::default()).unwrap();
        assert_eq!(g.count, 144.0);
    }

    #[test]
    fn never_true_is_minus_infinity() {
        let e = cylinder_counting_entropy(&SftGraph::full_shift(2), 8, |_| false, Default::default()).unwrap();
        assert_eq!(e.value, f64::NEG_INFINITY);
    }

    #[test]
    fn frequency_window_exact_and_sampled() {
        let band = |w: &WordStats| (0.7..=0.8).contains(&w.frequency(1));
        let exact = cylinder_counting_entropy(
            &SftGraph::full_shift(2),
            24,
            band,
            CountingOptions {
                budget: 1e8,
                ..Default::default()
            },
        )
        .unwrap();
        // C(24,17) + C(24,18) + C(24,19)
        assert_eq!(exact.count, 346_104.0 + 134_596.0 + 42_504.0);
        assert!((exact.value - binary_entropy(0.75)).abs() < 0.05);
        let sampled = cylinder_counting_entropy(&SftGraph::full_shift(2), 24, band, Default::default()).unwrap();
        assert!(!sampled.exact);
        assert!((sampled.value - exact.value).abs() < 5.0 * sampled.std_error);
    }

    #[test]
    fn overflow_without_sampling() {
        let opts = CountingOptions {
            samples: None,
            ..Default::default()
        };
        let r = cylinder_counting_entropy(&SftGraph::full_shift(2), 30, |_| true, opts);
        assert!(matches!(r, Err(Error::Overflow { .. })));
    }

    #[test]
    fn golden_mean_sampler_stays_admissible() {
        let opts = CountingOptions {
            budget: 10.0,
            samples: Some(2000),
            seed: 3,
        };
        let e = cylinder_counting_entropy(
            &SftGraph::golden_mean(),
            12,
            |w| w.word.windows(2).all(|p| p != [1, 1]),
            opts,
        )
        .unwrap();
        assert_eq!(e.count, e.total);
    }
}
