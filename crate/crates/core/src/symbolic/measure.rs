use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{decode, encode, word_space, LocallyConstantFunction, SftGraph, WORD_TABLE_BUDGET};
use crate::error::{Error, Result};
use crate::numerics::{self, compensated_sum, perron};

const ROW_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-10;

/// Stationary Markov chain on `b`-blocks, `b = max(order, 1)`.
///
/// Only blocks of positive stationary mass are kept as states.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawMarkov", into = "RawMarkov")]
pub struct MarkovMeasure {
    alphabet_size: usize,
    order: usize,
    states: Vec<Vec<usize>>,
    transition: Vec<Vec<f64>>,
    stationary: Vec<f64>,
    ergodic: bool,
    index: HashMap<u64, usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawMarkov {
    pub alphabet_size: usize,
    pub order: usize,
    pub states: Vec<Vec<usize>>,
    pub transition: Vec<Vec<f64>>,
    pub stationary: Vec<f64>,
}

impl TryFrom<RawMarkov> for MarkovMeasure {
    type Error = Error;
    fn try_from(r: RawMarkov) -> Result<Self> {
        MarkovMeasure::new(r.alphabet_size, r.order, r.states, r.transition, r.stationary)
    }
}

impl From<MarkovMeasure> for RawMarkov {
    fn from(m: MarkovMeasure) -> Self {
        RawMarkov {
            alphabet_size: m.alphabet_size,
            order: m.order,
            states: m.states,
            transition: m.transition,
            stationary: m.stationary,
        }
    }
}

impl PartialEq for MarkovMeasure {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet_size == other.alphabet_size
            && self.order == other.order
            && self.states == other.states
            && self.transition == other.transition
            && self.stationary == other.stationary
    }
}

fn overlaps(u: &[usize], v: &[usize]) -> bool {
    u[1..] == v[..v.len() - 1]
}

impl MarkovMeasure {
    pub fn new(
        alphabet_size: usize,
        order: usize,
        states: Vec<Vec<usize>>,
        transition: Vec<Vec<f64>>,
        stationary: Vec<f64>,
    ) -> Result<Self> {
        let b = order.max(1);
        let n = states.len();
        if n == 0 || transition.len() != n || stationary.len() != n || transition.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("states, transition and stationary sizes disagree".into()));
        }
        let mut index = HashMap::with_capacity(n);
        for (i, s) in states.iter().enumerate() {
            if s.len() != b || s.iter().any(|&x| x >= alphabet_size) {
                return Err(Error::InvalidInput(format!("state {s:?} is not a {b}-block over {alphabet_size} symbols")));
            }
            if index.insert(encode(s, alphabet_size), i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate state {s:?}")));
            }
        }
        for (i, row) in transition.iter().enumerate() {
            if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(Error::InvalidInput(format!("row {i} has a negative or non-finite entry")));
            }
            let sum: f64 = compensated_sum(row.iter().copied());
            if (sum - 1.0).abs() > ROW_TOL {
                return Err(Error::InvalidInput(format!("row {i} sums to {sum}")));
            }
            for (j, &p) in row.iter().enumerate() {
                if p > 0.0 && order >= 1 && !overlaps(&states[i], &states[j]) {
                    return Err(Error::InvalidInput(format!(
                        "transition {:?} -> {:?} does not shift blocks",
                        states[i], states[j]
                    )));
                }
            }
            if order == 0 && row != &transition[0] {
                return Err(Error::InvalidInput("Bernoulli rows must coincide".into()));
            }
        }
        if stationary.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidInput("stationary vector has a negative entry".into()));
        }
        let total = compensated_sum(stationary.iter().copied());
        if (total - 1.0).abs() > STATIONARY_TOL {
            return Err(Error::InvalidInput(format!("stationary vector sums to {total}")));
        }
        for j in 0..n {
            let pushed = compensated_sum((0..n).map(|i| stationary[i] * transition[i][j]));
            if (pushed - stationary[j]).abs() > STATIONARY_TOL {
                return Err(Error::InvalidInput(format!(
                    "stationarity fails at state {:?}: {pushed} vs {}",
                    states[j], stationary[j]
                )));
            }
        }

        // Drop states without mass.
        let keep: Vec<usize> = (0..n).filter(|&i| stationary[i] > 0.0).collect();
        let states: Vec<Vec<usize>> = keep.iter().map(|&i| states[i].clone()).collect();
        let transition: Vec<Vec<f64>> = keep
            .iter()
            .map(|&i| {
                let row: Vec<f64> = keep.iter().map(|&j| transition[i][j]).collect();
                let s = compensated_sum(row.iter().copied());
                row.into_iter().map(|p| p / s).collect()
            })
            .collect();
        let stationary: Vec<f64> = keep.iter().map(|&i| stationary[i] / total).collect();
        let index = states.iter().enumerate().map(|(i, s)| (encode(s, alphabet_size), i)).collect();
        let succ: Vec<Vec<usize>> = transition
            .iter()
            .map(|r| (0..r.len()).filter(|&j| r[j] > 0.0).collect())
            .collect();
        let ergodic = numerics::is_strongly_connected(&succ);
        Ok(Self {
            alphabet_size,
            order,
            states,
            transition,
            stationary,
            ergodic,
            index,
        })
    }

    /// Chain with stationary vector solved from an irreducible transition.
    pub fn from_chain(
        alphabet_size: usize,
        order: usize,
        states: Vec<Vec<usize>>,
        transition: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let succ: Vec<Vec<usize>> = transition
            .iter()
            .map(|r| (0..r.len()).filter(|&j| r[j] > 0.0).collect())
            .collect();
        if !numerics::is_strongly_connected(&succ) {
            return Err(Error::NotErgodic);
        }
        let transition: Vec<Vec<f64>> = transition
            .into_iter()
            .map(|r| {
                let s = compensated_sum(r.iter().copied());
                r.into_iter().map(|p| p / s).collect()
            })
            .collect();
        let stationary = numerics::stationary_distribution(&transition)?;
        Self::new(alphabet_size, order, states, transition, stationary)
    }

    /// Order-1 chain on symbols.
    pub fn markov1(transition: Vec<Vec<f64>>) -> Result<Self> {
        let n = transition.len();
        Self::from_chain(n, 1, (0..n).map(|i| vec![i]).collect(), transition)
    }

    pub fn bernoulli(probs: &[f64]) -> Result<Self> {
        let n = probs.len();
        let states = (0..n).map(|i| vec![i]).collect();
        Self::new(n, 0, states, vec![probs.to_vec(); n], probs.to_vec())
    }

    /// Measure of maximal entropy of a transitive SFT.
    pub fn parry(sft: &SftGraph) -> Result<Self> {
        if !sft.is_transitive() {
            return Err(Error::NotTransitive);
        }
        let a = sft.adjacency();
        let p = perron(&a)?;
        let lambda = p.value();
        let n = a.len();
        let transition: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let row: Vec<f64> = (0..n).map(|j| a[i][j] * p.right[j] / (lambda * p.right[i])).collect();
                let s = compensated_sum(row.iter().copied());
                row.into_iter().map(|x| x / s).collect()
            })
            .collect();
        let mut stationary: Vec<f64> = (0..n).map(|i| p.left[i] * p.right[i]).collect();
        let s: f64 = stationary.iter().sum();
        stationary.iter_mut().for_each(|x| *x /= s);
        Self::new(n, 1, (0..n).map(|i| vec![i]).collect(), transition, stationary)
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn block_len(&self) -> usize {
        self.order.max(1)
    }

    pub fn states(&self) -> &[Vec<usize>] {
        &self.states
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn is_ergodic(&self) -> bool {
        self.ergodic
    }

    pub fn state_index(&self, block: &[usize]) -> Option<usize> {
        self.index.get(&encode(block, self.alphabet_size)).copied()
    }

    pub fn state_index_of_code(&self, code: u64) -> Option<usize> {
        self.index.get(&code).copied()
    }

    /// Shannon–Markov entropy rate in nats.
    pub fn entropy(&self) -> f64 {
        compensated_sum(self.transition.iter().zip(&self.stationary).flat_map(|(row, &pi)| {
            row.iter()
                .filter(|&&p| p > 0.0)
                .map(move |&p| -pi * p * p.ln())
        }))
    }

    /// Symbol appended when moving into state `j`.
    pub fn emitted(&self, j: usize) -> usize {
        *self.states[j].last().expect("states are nonempty")
    }

    pub fn word_prob(&self, word: &[usize]) -> f64 {
        let b = self.block_len();
        if word.is_empty() {
            return 1.0;
        }
        if word.len() < b {
            return compensated_sum(
                self.states
                    .iter()
                    .zip(&self.stationary)
                    .filter(|(s, _)| s.starts_with(word))
                    .map(|(_, &p)| p),
            );
        }
        let Some(mut cur) = self.state_index(&word[..b]) else {
            return 0.0;
        };
        let mut p = self.stationary[cur];
        for end in b + 1..=word.len() {
            let Some(next) = self.state_index(&word[end - b..end]) else {
                return 0.0;
            };
            p *= self.transition[cur][next];
            if p == 0.0 {
                return 0.0;
            }
            cur = next;
        }
        p
    }

    /// Dense table of word probabilities indexed by word code.
    pub fn word_table(&self, len: usize) -> Result<Vec<f64>> {
        let a = self.alphabet_size as u64;
        let b = self.block_len();
        let space = word_space(self.alphabet_size, len.max(b))
            .filter(|&s| s <= WORD_TABLE_BUDGET)
            .ok_or(Error::Overflow {
                words: (self.alphabet_size as f64).powi(len.max(b) as i32),
                budget: WORD_TABLE_BUDGET as f64,
            })?;
        let mut table = vec![0.0; word_space(self.alphabet_size, b).unwrap() as usize];
        for (s, &p) in self.states.iter().zip(&self.stationary) {
            table[encode(s, self.alphabet_size) as usize] = p;
        }
        if len < b {
            let drop = word_space(self.alphabet_size, b - len).unwrap();
            let mut out = vec![0.0; word_space(self.alphabet_size, len).unwrap() as usize];
            for (c, &p) in table.iter().enumerate() {
                out[(c as u64 / drop) as usize] += p;
            }
            return Ok(out);
        }
        let block_space = word_space(self.alphabet_size, b).unwrap();
        for _ in b..len {
            let mut next = vec![0.0; table.len() * self.alphabet_size];
            for (c, &p) in table.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let i = self.index[&(c as u64 % block_space)];
                for (j, &t) in self.transition[i].iter().enumerate() {
                    if t > 0.0 {
                        next[(c as u64 * a + self.emitted(j) as u64) as usize] += p * t;
                    }
                }
            }
            table = next;
        }
        debug_assert_eq!(table.len() as u64, space);
        Ok(table)
    }

    pub fn integrate(&self, f: &LocallyConstantFunction) -> Result<f64> {
        if f.alphabet_size() != self.alphabet_size {
            return Err(Error::AlphabetMismatch {
                left: self.alphabet_size,
                right: f.alphabet_size(),
            });
        }
        let table = self
            .word_table(f.order())
            .map_err(|e| Error::OrderMismatch(format!("cannot evaluate order {} function: {e}", f.order())))?;
        Ok(compensated_sum(
            table
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(c, &p)| p * f.value_at(c as u64)),
        ))
    }

    /// Same measure presented on `block_len`-blocks.
    pub fn lift(&self, block_len: usize) -> Result<Self> {
        let b = self.block_len();
        if block_len < b {
            return Err(Error::OrderMismatch(format!("cannot lower block length {b} to {block_len}")));
        }
        if block_len == b && self.order >= 1 {
            return Ok(self.clone());
        }
        let a = self.alphabet_size;
        let words = self.word_table(block_len)?;
        let longer = self.word_table(block_len + 1)?;
        let codes: Vec<u64> = (0..words.len() as u64).filter(|&c| words[c as usize] > 0.0).collect();
        let idx: HashMap<u64, usize> = codes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let tail = word_space(a, block_len - 1).unwrap();
        let mut transition = vec![vec![0.0; codes.len()]; codes.len()];
        for (i, &c) in codes.iter().enumerate() {
            for s in 0..a as u64 {
                let p = longer[(c * a as u64 + s) as usize];
                if p > 0.0 {
                    let j = idx[&((c % tail) * a as u64 + s)];
                    transition[i][j] = p / words[c as usize];
                }
            }
            let sum = compensated_sum(transition[i].iter().copied());
            transition[i].iter_mut().for_each(|p| *p /= sum);
        }
        let states = codes.iter().map(|&c| decode(c, block_len, a)).collect();
        let stationary = codes.iter().map(|&c| words[c as usize]).collect();
        Self::new(a, block_len, states, transition, stationary)
    }

    /// Checks that every charged block and transition is admissible.
    pub fn check_support(&self, sft: &SftGraph) -> Result<()> {
        if sft.alphabet_size() != self.alphabet_size {
            return Err(Error::AlphabetMismatch {
                left: sft.alphabet_size(),
                right: self.alphabet_size,
            });
        }
        for (i, s) in self.states.iter().enumerate() {
            if !sft.is_admissible(s) {
                return Err(Error::SupportMismatch(format!("{s:?}")));
            }
            for (j, &p) in self.transition[i].iter().enumerate() {
                if p > 0.0 && !sft.allows(*s.last().unwrap(), self.emitted(j)) {
                    return Err(Error::SupportMismatch(format!("{s:?} -> {:?}", self.states[j])));
                }
            }
        }
        Ok(())
    }
}

pub fn markov_entropy(m: &MarkovMeasure) -> f64 {
    m.entropy()
}

#[cfg(test)]
mod tests {
    use super::*;

    const PHI: f64 = 1.618_033_988_749_895;

    #[test]
    fn parry_of_golden_mean() {
        let m = MarkovMeasure::parry(&SftGraph::golden_mean()).unwrap();
        let p = m.transition();
        assert!((p[0][0] - 1.0 / PHI).abs() < 1e-12);
        assert!((p[0][1] - 1.0 / (PHI * PHI)).abs() < 1e-12);
        assert!((p[1][0] - 1.0).abs() < 1e-12);
        assert!((m.stationary()[0] - 0.723_606_797_749_979).abs() < 1e-12);
        assert!((m.entropy() - PHI.ln()).abs() < 1e-10);
        assert!(m.check_support(&SftGraph::golden_mean()).is_ok());
    }

    #[test]
    fn parry_of_cycle_is_deterministic() {
        let m = MarkovMeasure::parry(&SftGraph::validate(&[vec![false, true], vec![true, false]]).unwrap()).unwrap();
        assert_eq!(m.entropy(), 0.0);
        assert!(m.is_ergodic());
    }

    #[test]
    fn parry_needs_transitivity() {
        let g = SftGraph::validate(&[vec![true, true], vec![false, true]]).unwrap();
        assert_eq!(MarkovMeasure::parry(&g).unwrap_err(), Error::NotTransitive);
    }

    #[test]
    fn bernoulli_entropies_and_integrals() {
        let half = MarkovMeasure::bernoulli(&[0.5, 0.5]).unwrap();
        assert!((half.entropy() - 2f64.ln()).abs() < 1e-15);
        let det = MarkovMeasure::bernoulli(&[1.0, 0.0]).unwrap();
        assert_eq!(det.entropy(), 0.0);
        assert_eq!(det.states().len(), 1);
        let g = SftGraph::full_shift(2);
        let ind = LocallyConstantFunction::indicator(&g, 1).unwrap();
        assert_eq!(half.integrate(&ind).unwrap(), 0.5);
        let p = MarkovMeasure::bernoulli(&[0.7, 0.3]).unwrap();
        assert!((p.integrate(&ind).unwrap() - 0.3).abs() < 1e-15);
        let parry = MarkovMeasure::parry(&SftGraph::golden_mean()).unwrap();
        let ind = LocallyConstantFunction::indicator(&SftGraph::golden_mean(), 1).unwrap();
        assert!((parry.integrate(&ind).unwrap() - 0.276_393_202_250_021).abs() < 1e-12);
    }

    #[test]
    fn lift_preserves_words_and_entropy() {
        let parry = MarkovMeasure::parry(&SftGraph::golden_mean()).unwrap();
        let l = parry.lift(3).unwrap();
        assert_eq!(l.states().len(), 5);
        assert!((l.entropy() - parry.entropy()).abs() < 1e-10);
        for w in [[0usize, 1, 0, 0, 1], [1, 0, 1, 0, 0]] {
            assert!((l.word_prob(&w) - parry.word_prob(&w)).abs() < 1e-14);
        }
        assert_eq!(parry.word_prob(&[1, 1]), 0.0);
        let b = MarkovMeasure::bernoulli(&[0.25, 0.75]).unwrap().lift(2).unwrap();
        assert!((b.word_prob(&[1, 1, 0]) - 0.75 * 0.75 * 0.25).abs() < 1e-15);
        assert!((b.word_prob(&[1]) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_stationary_vector() {
        let r = MarkovMeasure::new(
            2,
            1,
            vec![vec![0], vec![1]],
            vec![vec![0.5, 0.5], vec![1.0, 0.0]],
            vec![0.5, 0.5],
        );
        assert!(r.is_err());
    }

    #[test]
    fn reducible_mixture_is_not_ergodic() {
        let m = MarkovMeasure::new(
            2,
            1,
            vec![vec![0], vec![1]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.5, 0.5],
        )
        .unwrap();
        assert!(!m.is_ergodic());
    }

    #[test]
    fn json_roundtrip() {
        let m = MarkovMeasure::parry(&SftGraph::golden_mean()).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        let back: MarkovMeasure = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(back.is_ergodic());
    }
}
