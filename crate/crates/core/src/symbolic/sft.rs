use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{decode, encode, word_space};
use crate::error::{Error, Result};
use crate::numerics;

/// A one-step subshift of finite type on `alphabet_size` symbols.
///
/// Built only through [`SftGraph::validate`], which prunes symbols without an
/// admissible successor or predecessor and certifies the transitivity and
/// mixing flags from the transition digraph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSft", into = "RawSft")]
pub struct SftGraph {
    allowed: Vec<Vec<bool>>,
    /// Original symbol id of every surviving symbol.
    labels: Vec<usize>,
    transitive: bool,
    mixing: bool,
}

/// JSON form: `{"alphabet_size": n, "allowed": [[0|1; n]; n]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawSft {
    pub alphabet_size: usize,
    pub allowed: Vec<Vec<u8>>,
}

impl TryFrom<RawSft> for SftGraph {
    type Error = Error;

    fn try_from(raw: RawSft) -> Result<Self> {
        if raw.allowed.len() != raw.alphabet_size || raw.allowed.iter().any(|r| r.len() != raw.alphabet_size) {
            return Err(Error::InvalidInput(format!(
                "transition table must be {0}x{0}",
                raw.alphabet_size
            )));
        }
        let table: Vec<Vec<bool>> = raw
            .allowed
            .iter()
            .map(|r| r.iter().map(|&x| x != 0).collect())
            .collect();
        SftGraph::validate(&table)
    }
}

impl From<SftGraph> for RawSft {
    fn from(g: SftGraph) -> Self {
        RawSft {
            alphabet_size: g.alphabet_size(),
            allowed: g
                .allowed
                .iter()
                .map(|r| r.iter().map(|&b| u8::from(b)).collect())
                .collect(),
        }
    }
}

impl SftGraph {
    /// Prunes stranded symbols and computes the transitivity/mixing flags.
    pub fn validate(table: &[Vec<bool>]) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::InvalidInput("alphabet_size must be at least 1".into()));
        }
        if table.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("transition table must be square".into()));
        }
        let mut alive = vec![true; n];
        loop {
            let mut changed = false;
            for i in 0..n {
                if !alive[i] {
                    continue;
                }
                let has_succ = (0..n).any(|j| alive[j] && table[i][j]);
                let has_pred = (0..n).any(|j| alive[j] && table[j][i]);
                if !has_succ || !has_pred {
                    alive[i] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let labels: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
        if labels.is_empty() {
            return Err(Error::EmptySft);
        }
        let allowed: Vec<Vec<bool>> = labels
            .iter()
            .map(|&i| labels.iter().map(|&j| table[i][j]).collect())
            .collect();
        Ok(Self::from_pruned(allowed, labels))
    }

    fn from_pruned(allowed: Vec<Vec<bool>>, labels: Vec<usize>) -> Self {
        let succ: Vec<Vec<usize>> = allowed
            .iter()
            .map(|r| (0..r.len()).filter(|&j| r[j]).collect())
            .collect();
        let transitive = numerics::is_strongly_connected(&succ);
        let mixing = transitive && numerics::period(&succ) == 1;
        SftGraph {
            allowed,
            labels,
            transitive,
            mixing,
        }
    }

    pub fn full_shift(symbols: usize) -> Self {
        Self::validate(&vec![vec![true; symbols]; symbols]).expect("full shift is nonempty")
    }

    /// Binary sequences without two consecutive 1s.
    pub fn golden_mean() -> Self {
        Self::validate(&[vec![true, true], vec![true, false]]).expect("golden mean shift is nonempty")
    }

    /// The single periodic orbit `0 → 1 → … → p−1 → 0`.
    pub fn cycle(p: usize) -> Self {
        let table: Vec<Vec<bool>> = (0..p).map(|i| (0..p).map(|j| j == (i + 1) % p).collect()).collect();
        Self::validate(&table).expect("cycle is nonempty")
    }

    pub fn alphabet_size(&self) -> usize {
        self.allowed.len()
    }

    pub fn allows(&self, from: usize, to: usize) -> bool {
        self.allowed[from][to]
    }

    pub fn table(&self) -> &[Vec<bool>] {
        &self.allowed
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn is_transitive(&self) -> bool {
        self.transitive
    }

    pub fn is_mixing(&self) -> bool {
        self.mixing
    }

    pub fn successors(&self, from: usize) -> impl Iterator<Item = usize> + '_ {
        self.allowed[from]
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(j, _)| j)
    }

    pub fn successor_lists(&self) -> Vec<Vec<usize>> {
        (0..self.alphabet_size()).map(|i| self.successors(i).collect()).collect()
    }

    pub fn adjacency(&self) -> Vec<Vec<f64>> {
        self.allowed
            .iter()
            .map(|r| r.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())
            .collect()
    }

    pub fn is_admissible(&self, word: &[usize]) -> bool {
        word.iter().all(|&s| s < self.alphabet_size()) && word.windows(2).all(|w| self.allowed[w[0]][w[1]])
    }

    /// Log of the Perron root of the 0/1 transition matrix (nats).
    pub fn topological_entropy(&self) -> Result<f64> {
        numerics::log_spectral_radius(&self.adjacency())
    }

    /// Number of admissible words of length `n` (as `f64`; exact below 2^53).
    pub fn word_count(&self, n: usize) -> f64 {
        if n == 0 {
            return 1.0;
        }
        let a = self.alphabet_size();
        let mut v = vec![1.0; a];
        for _ in 1..n {
            v = (0..a).map(|i| self.successors(i).map(|j| v[j]).sum()).collect();
        }
        v.iter().sum()
    }

    /// Codes of all admissible words of length `n`, in increasing order.
    pub fn admissible_words(&self, n: usize, budget: u64) -> Result<Vec<u64>> {
        let count = self.word_count(n);
        if count > budget as f64 || word_space(self.alphabet_size(), n).is_none() {
            return Err(Error::Overflow {
                words: count,
                budget: budget as f64,
            });
        }
        let a = self.alphabet_size() as u64;
        let mut words: Vec<u64> = (0..a).collect();
        for _ in 1..n {
            let mut next = Vec::with_capacity(words.len() * 2);
            for &w in &words {
                let last = (w % a) as usize;
                for s in self.successors(last) {
                    next.push(w * a + s as u64);
                }
            }
            words = next;
        }
        Ok(words)
    }
}

/// Higher-block presentation: vertices are the admissible `k`-words, edges the
/// admissible `(k+1)`-words.
#[derive(Debug, Clone)]
pub struct BlockRecoding {
    pub graph: SftGraph,
    pub block_len: usize,
    pub blocks: Vec<Vec<usize>>,
    index: HashMap<u64, usize>,
    base_alphabet: usize,
}

impl BlockRecoding {
    pub fn index_of(&self, word: &[usize]) -> Option<usize> {
        self.index.get(&encode(word, self.base_alphabet)).copied()
    }

    pub fn index_of_code(&self, code: u64) -> Option<usize> {
        self.index.get(&code).copied()
    }

    pub fn base_alphabet(&self) -> usize {
        self.base_alphabet
    }
}

pub fn higher_block_recode(sft: &SftGraph, k: usize) -> Result<BlockRecoding> {
    if k == 0 {
        return Err(Error::InvalidInput("block length must be at least 1".into()));
    }
    let a = sft.alphabet_size();
    let codes = sft.admissible_words(k, super::WORD_TABLE_BUDGET)?;
    let blocks: Vec<Vec<usize>> = codes.iter().map(|&c| decode(c, k, a)).collect();
    let index: HashMap<u64, usize> = codes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let n = blocks.len();
    let mut table = vec![vec![false; n]; n];
    let tail_space = word_space(a, k - 1).unwrap_or(1);
    for (i, &c) in codes.iter().enumerate() {
        let last = (c % a as u64) as usize;
        let tail = c % tail_space;
        for s in sft.successors(last) {
            let next = tail * a as u64 + s as u64;
            if let Some(&j) = index.get(&next) {
                table[i][j] = true;
            }
        }
    }
    // Every admissible k-word extends both ways, so nothing is pruned.
    let graph = SftGraph::validate(&table)?;
    debug_assert_eq!(graph.alphabet_size(), n);
    Ok(BlockRecoding {
        graph,
        block_len: k,
        blocks,
        index,
        base_alphabet: a,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LOG_PHI: f64 = 0.481_211_825_059_603_4;

    #[test]
    fn flags_of_reference_shifts() {
        let full = SftGraph::full_shift(2);
        assert!(full.is_transitive() && full.is_mixing());
        let golden = SftGraph::golden_mean();
        assert!(golden.is_transitive() && golden.is_mixing());
        let two = SftGraph::validate(&[vec![false, true], vec![true, false]]).unwrap();
        assert!(two.is_transitive() && !two.is_mixing());
    }

    #[test]
    fn pruning_removes_stranded_symbols() {
        // symbol 2 has no predecessor
        let g = SftGraph::validate(&[
            vec![true, true, false],
            vec![true, false, false],
            vec![true, true, false],
        ])
        .unwrap();
        assert_eq!(g.alphabet_size(), 2);
        assert_eq!(g.labels(), &[0, 1]);
    }

    #[test]
    fn empty_after_pruning() {
        assert_eq!(
            SftGraph::validate(&[vec![false, true], vec![false, false]]),
            Err(Error::EmptySft)
        );
    }

    #[test]
    fn entropies() {
        assert!((SftGraph::full_shift(2).topological_entropy().unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!((SftGraph::golden_mean().topological_entropy().unwrap() - LOG_PHI).abs() < 1e-12);
        assert!(SftGraph::cycle(5).topological_entropy().unwrap().abs() < 1e-12);
    }

    #[test]
    fn recoding_preserves_entropy() {
        let full = higher_block_recode(&SftGraph::full_shift(2), 2).unwrap();
        assert_eq!(full.graph.alphabet_size(), 4);
        assert!((full.graph.topological_entropy().unwrap() - 2f64.ln()).abs() < 1e-10);
        let golden = higher_block_recode(&SftGraph::golden_mean(), 2).unwrap();
        assert_eq!(golden.graph.alphabet_size(), 3);
        assert!((golden.graph.topological_entropy().unwrap() - LOG_PHI).abs() < 1e-10);
        let id = higher_block_recode(&SftGraph::golden_mean(), 1).unwrap();
        assert_eq!(id.graph.table(), SftGraph::golden_mean().table());
    }

    #[test]
    fn word_counts_are_fibonacci() {
        let g = SftGraph::golden_mean();
        let counts: Vec<f64> = (1..=6).map(|n| g.word_count(n)).collect();
        assert_eq!(counts, vec![2.0, 3.0, 5.0, 8.0, 13.0, 21.0]);
        assert_eq!(g.admissible_words(3, 100).unwrap().len(), 5);
        assert!(g.admissible_words(40, 1000).is_err());
    }

    #[test]
    fn json_roundtrip_validates() {
        let g = SftGraph::golden_mean();
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"alphabet_size":2,"allowed":[[1,1],[1,0]]}"#);
        let back: SftGraph = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<SftGraph>(r#"{"alphabet_size":2,"allowed":[[0,1],[0,0]]}"#).is_err());
    }
}
