use crate::error::{Error, Result};
use crate::numerics::{perron, Perron};
use crate::symbolic::{encode, word_space, LocallyConstantFunction, MarkovMeasure};

/// A Markov measure presented on `W`-blocks, so that functions of order at
/// most `W` become functions of the current state.
#[derive(Debug, Clone)]
pub(crate) struct BlockChain {
    pub alphabet: usize,
    pub w: usize,
    pub measure: MarkovMeasure,
    pub codes: Vec<u64>,
}

impl BlockChain {
    pub fn new(mu: &MarkovMeasure, w: usize) -> Result<Self> {
        let w = w.max(mu.block_len()).max(1);
        let measure = mu.lift(w)?;
        let a = measure.alphabet_size();
        let codes = measure.states().iter().map(|s| encode(s, a)).collect();
        Ok(Self {
            alphabet: a,
            w,
            measure,
            codes,
        })
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn pi(&self) -> &[f64] {
        self.measure.stationary()
    }

    pub fn p(&self) -> &[Vec<f64>] {
        self.measure.transition()
    }

    /// Value of `f` read at the start of each state block.
    pub fn state_values(&self, f: &LocallyConstantFunction) -> Result<Vec<f64>> {
        if f.alphabet_size() != self.alphabet {
            return Err(Error::AlphabetMismatch {
                left: self.alphabet,
                right: f.alphabet_size(),
            });
        }
        if f.order() > self.w {
            return Err(Error::OrderMismatch(format!(
                "function of order {} on {}-blocks",
                f.order(),
                self.w
            )));
        }
        let drop = word_space(self.alphabet, self.w - f.order()).unwrap();
        Ok(self.codes.iter().map(|&c| f.value_at(c / drop)).collect())
    }

    /// `1` on states whose block starts with `word`.
    pub fn word_values(&self, word: &[usize]) -> Result<Vec<f64>> {
        if word.is_empty() || word.len() > self.w || word.iter().any(|&s| s >= self.alphabet) {
            return Err(Error::InvalidInput(format!("word {word:?} does not fit {}-blocks", self.w)));
        }
        let drop = word_space(self.alphabet, self.w - word.len()).unwrap();
        let target = encode(word, self.alphabet);
        Ok(self.codes.iter().map(|&c| if c / drop == target { 1.0 } else { 0.0 }).collect())
    }

    /// Successor lists with `ln P`.
    pub fn log_edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (u, row) in self.p().iter().enumerate() {
            for (v, &p) in row.iter().enumerate() {
                if p > 0.0 {
                    out.push((u, v, p.ln()));
                }
            }
        }
        out
    }

    /// Perron data of `M_uv = P_uv e^{tilt_v}`; the log root includes the
    /// shift taken out for scaling.
    pub fn tilted_perron(&self, tilt: &[f64]) -> Result<Perron> {
        let shift = tilt.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let m: Vec<Vec<f64>> = self
            .p()
            .iter()
            .map(|row| row.iter().zip(tilt).map(|(&p, &t)| p * (t - shift).exp()).collect())
            .collect();
        let mut pf = perron(&m)?;
        pf.log_value += shift;
        Ok(pf)
    }

    /// `lim (1/n) log E[e^{S_n f}]` with `f` given per state.
    pub fn log_rho(&self, tilt: &[f64]) -> Result<f64> {
        Ok(self.tilted_perron(tilt)?.log_value)
    }

    /// Stationary law `l ⊙ r` of the tilted chain.
    pub fn tilted_stationary(&self, tilt: &[f64]) -> Result<(Vec<f64>, f64)> {
        let pf = self.tilted_perron(tilt)?;
        let pi = pf.left.iter().zip(&pf.right).map(|(l, r)| l * r).collect();
        Ok((pi, pf.log_value))
    }

    /// The tilted chain as a Markov measure on `W`-blocks.
    pub fn tilted_measure(&self, tilt: &[f64]) -> Result<MarkovMeasure> {
        let pf = self.tilted_perron(tilt)?;
        let n = self.len();
        let shift = tilt.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let rho = (pf.log_value - shift).exp();
        let mut q = vec![vec![0.0; n]; n];
        for u in 0..n {
            for v in 0..n {
                let p = self.p()[u][v];
                if p > 0.0 {
                    q[u][v] = p * (tilt[v] - shift).exp() * pf.right[v] / (rho * pf.right[u]);
                }
            }
            let s: f64 = q[u].iter().sum();
            q[u].iter_mut().for_each(|x| *x /= s);
        }
        let states = self.measure.states().to_vec();
        MarkovMeasure::from_chain(self.alphabet, self.w, states, q)
    }

    /// Relative entropy rate of a chain `Q` on the same states with respect
    /// to `P`, weighted by `Q`'s stationary law.
    pub fn relative_entropy_rate(&self, eta: &MarkovMeasure) -> Result<f64> {
        let eta = eta.lift(self.w)?;
        let mut total = 0.0;
        for (i, s) in eta.states().iter().enumerate() {
            let u = self
                .measure
                .state_index(s)
                .ok_or_else(|| Error::SupportMismatch(format!("{s:?}")))?;
            for (j, &q) in eta.transition()[i].iter().enumerate() {
                if q == 0.0 {
                    continue;
                }
                let v = self
                    .measure
                    .state_index(&eta.states()[j])
                    .ok_or_else(|| Error::SupportMismatch(format!("{:?}", eta.states()[j])))?;
                let p = self.p()[u][v];
                if p == 0.0 {
                    return Ok(f64::INFINITY);
                }
                total += eta.stationary()[i] * q * (q / p).ln();
            }
        }
        Ok(total.max(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::SftGraph;

    #[test]
    fn bernoulli_lift_and_tilt() {
        let mu = MarkovMeasure::bernoulli(&[0.5, 0.5]).unwrap();
        let chain = BlockChain::new(&mu, 2).unwrap();
        assert_eq!(chain.len(), 4);
        let g = LocallyConstantFunction::indicator(&SftGraph::full_shift(2), 1).unwrap();
        let vals = chain.state_values(&g).unwrap();
        assert_eq!(vals, vec![0.0, 0.0, 1.0, 1.0]);
        let q = 0.7;
        let tilt: Vec<f64> = vals.iter().map(|v| q * v).collect();
        let expected = ((1.0 + q.exp()) / 2.0).ln();
        assert!((chain.log_rho(&tilt).unwrap() - expected).abs() < 1e-13);
        let eta = chain.tilted_measure(&tilt).unwrap();
        let p1 = q.exp() / (1.0 + q.exp());
        assert!((eta.word_prob(&[1]) - p1).abs() < 1e-12);
        let kl = p1 * (2.0 * p1).ln() + (1.0 - p1) * (2.0 * (1.0 - p1)).ln();
        assert!((chain.relative_entropy_rate(&eta).unwrap() - kl).abs() < 1e-12);
    }
}
