use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbolic::{decode, encode, word_space, SftGraph, WORD_TABLE_BUDGET};

/// Successors of an `m`-block in the higher-block graph of `sft`.
pub(crate) fn block_successors(sft: &SftGraph, m: usize, code: u64) -> impl Iterator<Item = u64> + '_ {
    let a = sft.alphabet_size() as u64;
    let tail = word_space(sft.alphabet_size(), m - 1).unwrap();
    let last = (code % a) as usize;
    sft.successors(last).map(move |s| (code % tail) * a + s as u64)
}

/// Shortest walk of `m`-blocks from `from` to `to`, endpoints included.
pub(crate) fn shortest_bridge(sft: &SftGraph, m: usize, from: &HashSet<u64>, to: &HashSet<u64>) -> Option<Vec<u64>> {
    let mut parent: HashMap<u64, Option<u64>> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut sources: Vec<u64> = from.iter().copied().collect();
    sources.sort_unstable();
    for c in sources {
        parent.insert(c, None);
        queue.push_back(c);
    }
    while let Some(u) = queue.pop_front() {
        if to.contains(&u) {
            let mut path = vec![u];
            let mut cur = u;
            while let Some(Some(p)) = parent.get(&cur) {
                path.push(*p);
                cur = *p;
            }
            path.reverse();
            return Some(path);
        }
        for v in block_successors(sft, m, u) {
            if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(v) {
                e.insert(Some(u));
                queue.push_back(v);
            }
        }
    }
    None
}

/// A transitive subshift of an ambient SFT, cut out by its allowed
/// `order`-words.
#[derive(Debug, Clone)]
pub struct SubSft {
    ambient: SftGraph,
    order: usize,
    /// Allowed words that occur in some point, sorted.
    words: Vec<u64>,
    induced: SftGraph,
}

impl PartialEq for SubSft {
    fn eq(&self, other: &Self) -> bool {
        self.ambient == other.ambient && self.contains(other) && other.contains(self)
    }
}

impl SubSft {
    /// Points of `ambient` all of whose `order`-words lie in `words`.
    pub fn new(ambient: &SftGraph, order: usize, words: impl IntoIterator<Item = u64>) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidInput("block order must be positive".into()));
        }
        if !ambient.is_transitive() {
            return Err(Error::AmbientNotTransitive);
        }
        let a = ambient.alphabet_size();
        let space = word_space(a, order)
            .filter(|&s| s <= WORD_TABLE_BUDGET)
            .ok_or(Error::Overflow {
                words: (a as f64).powi(order as i32),
                budget: WORD_TABLE_BUDGET as f64,
            })?;
        let set: BTreeSet<u64> = words.into_iter().collect();
        for &c in &set {
            if c >= space || !ambient.is_admissible(&decode(c, order, a)) {
                return Err(Error::InvalidInput(format!(
                    "word {:?} is not admissible in the ambient shift",
                    decode(c.min(space - 1), order, a)
                )));
            }
        }
        let vertices: Vec<u64> = set.into_iter().collect();
        if vertices.is_empty() {
            return Err(Error::EmptySft);
        }
        let index: HashMap<u64, usize> = vertices.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let mut table = vec![vec![false; vertices.len()]; vertices.len()];
        for (i, &c) in vertices.iter().enumerate() {
            for d in block_successors(ambient, order, c) {
                if let Some(&j) = index.get(&d) {
                    table[i][j] = true;
                }
            }
        }
        let induced = SftGraph::validate(&table)?;
        if !induced.is_transitive() {
            return Err(Error::NotTransitive);
        }
        let words = induced.labels().iter().map(|&i| vertices[i]).collect();
        Ok(Self {
            ambient: ambient.clone(),
            order,
            words,
            induced,
        })
    }

    /// The ambient shift itself, at block order `order`.
    pub fn full(ambient: &SftGraph, order: usize) -> Result<Self> {
        let words = ambient.admissible_words(order, WORD_TABLE_BUDGET)?;
        Self::new(ambient, order, words)
    }

    /// The periodic orbit of `word^∞`.
    pub fn periodic_orbit(ambient: &SftGraph, word: &[usize]) -> Result<Self> {
        let order = word.len().max(1);
        let cyc: Vec<usize> = word.iter().cycle().take(2 * word.len()).copied().collect();
        let words: Vec<u64> = (0..word.len())
            .map(|i| encode(&cyc[i..i + order], ambient.alphabet_size()))
            .collect();
        Self::new(ambient, order, words)
    }

    /// The ambient shift with one word forbidden.
    pub fn forbidding(ambient: &SftGraph, word: &[usize]) -> Result<Self> {
        let a = ambient.alphabet_size();
        let banned = encode(word, a);
        let words = ambient
            .admissible_words(word.len(), WORD_TABLE_BUDGET)?
            .into_iter()
            .filter(|&c| c != banned);
        Self::new(ambient, word.len(), words)
    }

    pub fn ambient(&self) -> &SftGraph {
        &self.ambient
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Higher-block graph on the allowed words; transitive.
    pub fn induced(&self) -> &SftGraph {
        &self.induced
    }

    pub fn entropy(&self) -> Result<f64> {
        self.induced.topological_entropy()
    }

    /// Language of length `len ≥ order`: walks in the induced graph.
    pub fn language(&self, len: usize) -> Result<Vec<u64>> {
        if len < self.order {
            return Err(Error::OrderMismatch(format!("length {len} below block order {}", self.order)));
        }
        let a = self.ambient.alphabet_size() as u64;
        let walks = self.induced.admissible_words(len - self.order + 1, WORD_TABLE_BUDGET)?;
        let k = self.induced.alphabet_size() as u64;
        let mut out: Vec<u64> = walks
            .into_iter()
            .map(|w| {
                let steps = decode(w, len - self.order + 1, k as usize);
                let mut code = self.words[steps[0]];
                for &s in &steps[1..] {
                    code = code * a + self.words[s] % a;
                }
                code
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Same subshift presented by its `order`-words, `order ≥ self.order`.
    pub fn lift(&self, order: usize) -> Result<Self> {
        if order == self.order {
            return Ok(self.clone());
        }
        Self::new(&self.ambient, order, self.language(order)?)
    }

    /// `other ⊆ self`.
    pub fn contains(&self, other: &SubSft) -> bool {
        if self.ambient != other.ambient {
            return false;
        }
        let m = self.order.max(other.order);
        match (self.language(m), other.language(m)) {
            (Ok(mine), Ok(theirs)) => {
                let mine: HashSet<u64> = mine.into_iter().collect();
                theirs.iter().all(|c| mine.contains(c))
            }
            _ => false,
        }
    }

    /// Strictly smaller than the ambient shift.
    pub fn is_proper(&self) -> bool {
        self.ambient
            .admissible_words(self.order, WORD_TABLE_BUDGET)
            .is_ok_and(|all| all.len() != self.words.len())
    }

    /// Whether the periodic point `word^∞` lies in the subshift.
    pub fn admits_periodic(&self, word: &[usize]) -> bool {
        if word.is_empty() {
            return false;
        }
        let a = self.ambient.alphabet_size();
        let cyc: Vec<usize> = word.iter().cycle().take(word.len() + self.order).copied().collect();
        (0..word.len()).all(|i| self.words.binary_search(&encode(&cyc[i..i + self.order], a)).is_ok())
    }
}

/// Smallest presentation containing both, joined by shortest ambient bridges
/// in each direction.
pub fn sub_sft_join(a: &SubSft, b: &SubSft) -> Result<SubSft> {
    if a.ambient != b.ambient {
        return Err(Error::InvalidInput("sub-shifts live in different ambient shifts".into()));
    }
    let m = a.order.max(b.order);
    let (la, lb) = (a.lift(m)?, b.lift(m)?);
    let wa: HashSet<u64> = la.words.iter().copied().collect();
    let wb: HashSet<u64> = lb.words.iter().copied().collect();
    let mut words: BTreeSet<u64> = wa.union(&wb).copied().collect();
    for (from, to) in [(&wa, &wb), (&wb, &wa)] {
        let path = shortest_bridge(&a.ambient, m, from, to).ok_or(Error::NoBridge)?;
        words.extend(path);
    }
    SubSft::new(&a.ambient, m, words)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorseshoeStage {
    pub n: usize,
    pub forbidden: Vec<usize>,
    pub entropy: f64,
    /// Ambient entropy minus stage entropy.
    pub gap: f64,
    #[serde(skip)]
    pub sub: Option<SubSft>,
}

/// First block order tried; shorter single-word deletions from the full
/// 2-shift are never transitive. The sequence starts at the first order with
/// an admissible deletion.
pub const HORSESHOE_START: usize = 4;

/// Whether `word` occurs in a periodic point of period `< word.len()`.
fn on_short_orbit(word: &[usize]) -> bool {
    let n = word.len();
    (1..n).any(|p| (p..n).all(|i| word[i] == word[i - p]))
}

/// Nested proper transitive sub-SFTs `Λ_{n_0} ⊂ … ⊂ Λ_{n_max}`: `Λ_n`
/// forbids one length-`n` word containing the previous forbidden word, so the
/// join with `Λ_{n−1}` stays proper.
pub fn nested_horseshoe_sequence(ambient: &SftGraph, n_max: usize) -> Result<Vec<HorseshoeStage>> {
    if !ambient.is_transitive() {
        return Err(Error::AmbientNotTransitive);
    }
    let h = ambient.topological_entropy()?;
    if h <= 0.0 {
        return Err(Error::InvalidInput("ambient shift has zero entropy".into()));
    }
    let a = ambient.alphabet_size();
    let mut stages: Vec<HorseshoeStage> = Vec::new();
    let mut prev: Option<(SubSft, Vec<usize>)> = None;
    for n in HORSESHOE_START..=n_max {
        let candidates: Vec<Vec<usize>> = match &prev {
            None => ambient
                .admissible_words(n, WORD_TABLE_BUDGET)?
                .into_iter()
                .map(|c| decode(c, n, a))
                .collect(),
            Some((_, w)) => (0..a)
                .flat_map(|s| {
                    let mut right = w.clone();
                    right.push(s);
                    let mut left = vec![s];
                    left.extend(w);
                    [right, left]
                })
                .filter(|c| ambient.is_admissible(c))
                .collect(),
        };
        let start = n % candidates.len().max(1);
        let mut chosen = None;
        for i in 0..candidates.len() {
            let w = &candidates[(start + i) % candidates.len()];
            if on_short_orbit(w) {
                continue;
            }
            let Ok(y) = SubSft::forbidding(ambient, w) else {
                continue;
            };
            let joined = match &prev {
                None => y,
                Some((p, _)) => match sub_sft_join(p, &y) {
                    Ok(j) => j,
                    Err(_) => continue,
                },
            };
            if joined.is_proper() && prev.as_ref().map_or(true, |(p, _)| joined.contains(p)) {
                chosen = Some((joined, w.clone()));
                break;
            }
        }
        let Some((sub, word)) = chosen else {
            if prev.is_none() {
                continue;
            }
            return Err(Error::NonConvergence {
                what: "horseshoe word search",
                iterations: candidates.len(),
            });
        };
        let entropy = sub.entropy()?;
        stages.push(HorseshoeStage {
            n,
            forbidden: word.clone(),
            entropy,
            gap: h - entropy,
            sub: Some(sub.clone()),
        });
        prev = Some((sub, word));
    }
    Ok(stages)
}
