use serde::{Deserialize, Serialize};

use super::{encode, word_space, MarkovMeasure, WORD_TABLE_BUDGET};
use crate::error::{Error, Result};
use crate::numerics::compensated_sum;

const SUM_TOL: f64 = 1e-12;
const CONSISTENCY_TOL: f64 = 1e-10;

/// Word frequencies of every length `1..=depth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderMarginals {
    alphabet_size: usize,
    freq: Vec<Vec<f64>>,
}

fn prefix_marginal(table: &[f64], alphabet: usize) -> Vec<f64> {
    let mut out = vec![0.0; table.len() / alphabet];
    for (c, &p) in table.iter().enumerate() {
        out[c / alphabet] += p;
    }
    out
}

fn suffix_marginal(table: &[f64], alphabet: usize) -> Vec<f64> {
    let m = table.len() / alphabet;
    let mut out = vec![0.0; m];
    for (c, &p) in table.iter().enumerate() {
        out[c % m] += p;
    }
    out
}

impl CylinderMarginals {
    pub fn new(alphabet_size: usize, freq: Vec<Vec<f64>>) -> Result<Self> {
        if freq.is_empty() {
            return Err(Error::InvalidInput("depth must be at least 1".into()));
        }
        for (k, t) in freq.iter().enumerate() {
            if word_space(alphabet_size, k + 1) != Some(t.len() as u64) {
                return Err(Error::InconsistentMarginals(format!("level {} has {} entries", k + 1, t.len())));
            }
            if t.iter().any(|&p| !(p >= 0.0)) {
                return Err(Error::InconsistentMarginals(format!("level {} has a negative entry", k + 1)));
            }
            let s = compensated_sum(t.iter().copied());
            if (s - 1.0).abs() > SUM_TOL {
                return Err(Error::InconsistentMarginals(format!("level {} sums to {s}", k + 1)));
            }
            if k > 0 {
                let m = prefix_marginal(t, alphabet_size);
                if m.iter().zip(&freq[k - 1]).any(|(x, y)| (x - y).abs() > CONSISTENCY_TOL) {
                    return Err(Error::InconsistentMarginals(format!(
                        "level {k} is not the marginal of level {}",
                        k + 1
                    )));
                }
            }
        }
        Ok(Self { alphabet_size, freq })
    }

    pub fn from_measure(m: &MarkovMeasure, depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidInput("depth must be at least 1".into()));
        }
        let a = m.alphabet_size();
        let mut freq = vec![m.word_table(depth)?];
        for _ in 1..depth {
            let next = prefix_marginal(freq.last().unwrap(), a);
            freq.push(next);
        }
        freq.reverse();
        Ok(Self { alphabet_size: a, freq })
    }

    /// Frequencies of the periodic sequence `seq seq seq …` (cyclic counts).
    pub fn from_sequence(seq: &[usize], alphabet_size: usize, depth: usize) -> Result<Self> {
        if seq.is_empty() || depth == 0 {
            return Err(Error::InvalidInput("sequence and depth must be nonempty".into()));
        }
        let space = word_space(alphabet_size, depth)
            .filter(|&s| s <= WORD_TABLE_BUDGET)
            .ok_or(Error::Overflow {
                words: (alphabet_size as f64).powi(depth as i32),
                budget: WORD_TABLE_BUDGET as f64,
            })?;
        let n = seq.len();
        let mut top = vec![0.0; space as usize];
        let w = 1.0 / n as f64;
        let mut window: Vec<usize> = Vec::with_capacity(depth);
        for i in 0..n {
            window.clear();
            window.extend((0..depth).map(|j| seq[(i + j) % n]));
            top[encode(&window, alphabet_size) as usize] += w;
        }
        let mut freq = vec![top];
        for _ in 1..depth {
            let next = prefix_marginal(freq.last().unwrap(), alphabet_size);
            freq.push(next);
        }
        freq.reverse();
        Ok(Self { alphabet_size, freq })
    }

    /// Convex combination `Σ w_i m_i`, truncated to the smallest depth.
    pub fn mixture(parts: &[(f64, &CylinderMarginals)]) -> Result<Self> {
        let (_, first) = parts.first().ok_or_else(|| Error::InvalidInput("empty mixture".into()))?;
        let a = first.alphabet_size;
        let depth = parts.iter().map(|(_, m)| m.depth()).min().unwrap();
        for (_, m) in parts {
            if m.alphabet_size != a {
                return Err(Error::AlphabetMismatch {
                    left: a,
                    right: m.alphabet_size,
                });
            }
        }
        let freq = (0..depth)
            .map(|k| {
                (0..first.freq[k].len())
                    .map(|c| parts.iter().map(|(w, m)| w * m.freq[k][c]).sum())
                    .collect()
            })
            .collect();
        Self::new(a, freq)
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn depth(&self) -> usize {
        self.freq.len()
    }

    /// Table of words of length `len` (1-based).
    pub fn level(&self, len: usize) -> &[f64] {
        &self.freq[len - 1]
    }

    pub fn prob(&self, word: &[usize]) -> f64 {
        self.freq[word.len() - 1][encode(word, self.alphabet_size) as usize]
    }

    /// Largest gap between each level's suffix marginal and the level below.
    pub fn shift_defect(&self) -> f64 {
        (1..self.depth())
            .map(|k| {
                suffix_marginal(&self.freq[k], self.alphabet_size)
                    .iter()
                    .zip(&self.freq[k - 1])
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

/// Weak* distance between finite marginal data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DStar {
    pub value: f64,
    pub depth: usize,
    /// Upper bound on the contribution of levels beyond `depth`.
    pub truncation_bound: f64,
}

pub fn dstar_distance(a: &CylinderMarginals, b: &CylinderMarginals) -> Result<DStar> {
    if a.alphabet_size != b.alphabet_size {
        return Err(Error::AlphabetMismatch {
            left: a.alphabet_size,
            right: b.alphabet_size,
        });
    }
    let depth = a.depth().min(b.depth());
    let alpha = a.alphabet_size as f64;
    let value = compensated_sum((0..depth).map(|k| {
        let l1 = compensated_sum(a.freq[k].iter().zip(&b.freq[k]).map(|(x, y)| (x - y).abs()));
        l1 / (2.0 * alpha).powi(k as i32 + 1)
    }));
    Ok(DStar {
        value,
        depth,
        truncation_bound: 2f64.powi(1 - depth as i32),
    })
}
