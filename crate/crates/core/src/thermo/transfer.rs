use crate::error::{Error, Result};
use crate::numerics::{self, compensated_sum, perron, Perron};
use crate::symbolic::{higher_block_recode, word_space, LocallyConstantFunction, MarkovMeasure, SftGraph};

/// Edges of the `m`-block presentation of an SFT, each tagged with its
/// `(m+1)`-window so locally constant functions of order `≤ m+1` can be
/// read off edge by edge.
#[derive(Debug, Clone)]
pub struct EdgeGraph {
    alphabet_size: usize,
    block_len: usize,
    blocks: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    transitive: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// Code of the window `from ++ last(to)`.
    pub window: u64,
}

impl EdgeGraph {
    /// Block graph able to carry functions up to order `max_order`.
    pub fn new(sft: &SftGraph, max_order: usize) -> Result<Self> {
        let m = max_order.saturating_sub(1).max(1);
        let rec = higher_block_recode(sft, m)?;
        let a = sft.alphabet_size() as u64;
        let mut edges = Vec::new();
        for (i, b) in rec.blocks.iter().enumerate() {
            let base = crate::symbolic::encode(b, sft.alphabet_size());
            for j in rec.graph.successors(i) {
                let last = *rec.blocks[j].last().unwrap() as u64;
                edges.push(Edge {
                    from: i,
                    to: j,
                    window: base * a + last,
                });
            }
        }
        Ok(Self {
            alphabet_size: sft.alphabet_size(),
            block_len: m,
            transitive: rec.graph.is_transitive(),
            blocks: rec.blocks,
            edges,
        })
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn window_len(&self) -> usize {
        self.block_len + 1
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_transitive(&self) -> bool {
        self.transitive
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    /// Value of `f` on every edge window.
    pub fn edge_values(&self, f: &LocallyConstantFunction) -> Result<Vec<f64>> {
        if f.alphabet_size() != self.alphabet_size {
            return Err(Error::AlphabetMismatch {
                left: self.alphabet_size,
                right: f.alphabet_size(),
            });
        }
        if f.order() > self.window_len() {
            return Err(Error::OrderMismatch(format!(
                "function of order {} on windows of length {}",
                f.order(),
                self.window_len()
            )));
        }
        let drop = word_space(self.alphabet_size, self.window_len() - f.order()).unwrap();
        Ok(self.edges.iter().map(|e| f.value_at(e.window / drop)).collect())
    }

    /// Transfer matrix `e^{w - max w}` on blocks, with the shift `max w`.
    pub fn transfer(&self, log_weights: &[f64]) -> TransferMatrix {
        let n = self.blocks.len();
        let shift = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut matrix = vec![vec![0.0; n]; n];
        for (e, &w) in self.edges.iter().zip(log_weights) {
            matrix[e.from][e.to] = (w - shift).exp();
        }
        TransferMatrix {
            matrix,
            log_shift: shift,
        }
    }

    pub fn pressure(&self, log_weights: &[f64]) -> Result<f64> {
        let t = self.transfer(log_weights);
        Ok(t.log_shift + numerics::log_spectral_radius(&t.matrix)?)
    }

    pub fn perron(&self, log_weights: &[f64]) -> Result<(Perron, f64)> {
        if !self.transitive {
            return Err(Error::NotTransitive);
        }
        let t = self.transfer(log_weights);
        let p = perron(&t.matrix)?;
        let pressure = t.log_shift + p.log_value;
        Ok((p, pressure))
    }

    /// `∫ f dμ` for the equilibrium state of `log_weights`, straight from the
    /// Perron data: `Σ l_u L_uv r_v f_uv / λ`.
    pub fn equilibrium_mean(&self, log_weights: &[f64], f: &[f64]) -> Result<(f64, f64)> {
        let (p, pressure) = self.perron(log_weights)?;
        let lambda = p.value();
        let t_shift = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = compensated_sum(self.edges.iter().zip(log_weights).zip(f).map(|((e, &w), &fv)| {
            p.left[e.from] * (w - t_shift).exp() * p.right[e.to] * fv / lambda
        }));
        Ok((mean, pressure))
    }

    pub fn equilibrium(&self, log_weights: &[f64]) -> Result<EquilibriumState> {
        let (p, pressure) = self.perron(log_weights)?;
        let n = self.blocks.len();
        let lambda = p.value();
        let shift = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut transition = vec![vec![0.0; n]; n];
        for (e, &w) in self.edges.iter().zip(log_weights) {
            transition[e.from][e.to] = (w - shift).exp() * p.right[e.to] / (lambda * p.right[e.from]);
        }
        for row in &mut transition {
            let s = compensated_sum(row.iter().copied());
            row.iter_mut().for_each(|x| *x /= s);
        }
        let mut stationary: Vec<f64> = (0..n).map(|i| p.left[i] * p.right[i]).collect();
        let s = compensated_sum(stationary.iter().copied());
        stationary.iter_mut().for_each(|x| *x /= s);
        let measure = MarkovMeasure::new(self.alphabet_size, self.block_len, self.blocks.clone(), transition, stationary)?;
        Ok(EquilibriumState {
            measure,
            pressure,
            left: p.left,
            right: p.right,
            blocks: self.blocks.clone(),
        })
    }
}

/// `L_uv = [u→v admissible] e^{ψ(uv) - log_shift}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    pub matrix: Vec<Vec<f64>>,
    pub log_shift: f64,
}

#[derive(Debug, Clone)]
pub struct EquilibriumState {
    pub measure: MarkovMeasure,
    pub pressure: f64,
    /// Perron eigenvectors of the shifted transfer matrix, `l·r = 1`.
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub blocks: Vec<Vec<usize>>,
}

impl EquilibriumState {
    /// `h + ∫ψ − P`, zero up to rounding.
    pub fn variational_defect(&self, psi: &LocallyConstantFunction) -> Result<f64> {
        Ok(self.measure.entropy() + self.measure.integrate(psi)? - self.pressure)
    }
}

pub fn transfer_matrix(sft: &SftGraph, psi: &LocallyConstantFunction) -> Result<TransferMatrix> {
    let g = EdgeGraph::new(sft, psi.order())?;
    Ok(g.transfer(&g.edge_values(psi)?))
}

/// Log Perron root of the transfer matrix of `psi`.
pub fn pressure(sft: &SftGraph, psi: &LocallyConstantFunction) -> Result<f64> {
    let g = EdgeGraph::new(sft, psi.order())?;
    g.pressure(&g.edge_values(psi)?)
}

pub fn equilibrium_state(sft: &SftGraph, psi: &LocallyConstantFunction) -> Result<EquilibriumState> {
    if !sft.is_transitive() {
        return Err(Error::NotTransitive);
    }
    let g = EdgeGraph::new(sft, psi.order())?;
    g.equilibrium(&g.edge_values(psi)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{dstar_distance, CylinderMarginals, FunctionRole};

    const LOG_PHI: f64 = 0.481_211_825_059_603_4;

    #[test]
    fn constant_potential_shifts_pressure() {
        let g = SftGraph::full_shift(2);
        let c = LocallyConstantFunction::constant(&g, 0.37, FunctionRole::Potential).unwrap();
        assert!((pressure(&g, &c).unwrap() - (2f64.ln() + 0.37)).abs() < 1e-12);
    }

    #[test]
    fn tilted_indicator_pressure() {
        let g = SftGraph::full_shift(2);
        for q in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            let psi = LocallyConstantFunction::indicator(&g, 1).unwrap().scale(q);
            let p = pressure(&g, &psi).unwrap();
            assert!((p - (1.0 + f64::exp(q)).ln()).abs() < 1e-12);
            let eq = equilibrium_state(&g, &psi).unwrap();
            let want = q.exp() / (1.0 + q.exp());
            assert!((eq.measure.word_prob(&[1]) - want).abs() < 1e-12);
            assert!(eq.variational_defect(&psi).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn zero_potential_on_golden_mean_is_parry() {
        let g = SftGraph::golden_mean();
        let zero = LocallyConstantFunction::constant(&g, 0.0, FunctionRole::Potential).unwrap();
        assert!((pressure(&g, &zero).unwrap() - LOG_PHI).abs() < 1e-12);
        let eq = equilibrium_state(&g, &zero).unwrap();
        let parry = MarkovMeasure::parry(&g).unwrap();
        let d = dstar_distance(
            &CylinderMarginals::from_measure(&eq.measure, 10).unwrap(),
            &CylinderMarginals::from_measure(&parry, 10).unwrap(),
        )
        .unwrap();
        assert!(d.value <= 1e-10);
    }

    #[test]
    fn higher_order_potential_uses_block_graph() {
        let g = SftGraph::full_shift(2);
        // ψ(x) depends on x0 x1 x2
        let psi = LocallyConstantFunction::from_fn(&g, 3, FunctionRole::Potential, |w| {
            0.3 * w[0] as f64 - 0.7 * (w[1] * w[2]) as f64 + 0.1
        })
        .unwrap();
        let eq = equilibrium_state(&g, &psi).unwrap();
        assert_eq!(eq.measure.order(), 2);
        assert!(eq.variational_defect(&psi).unwrap().abs() < 1e-10);
        // agrees with the order-3 lift of the same potential
        let lifted = psi.lift(4).unwrap();
        assert!((pressure(&g, &lifted).unwrap() - eq.pressure).abs() < 1e-11);
    }

    #[test]
    fn non_transitive_pressure_is_max_over_components() {
        // {0} loop and {1,2} full shift, joined one way
        let g = SftGraph::validate(&[
            vec![true, true, false],
            vec![false, true, true],
            vec![false, true, true],
        ])
        .unwrap();
        let zero = LocallyConstantFunction::constant(&g, 0.0, FunctionRole::Potential).unwrap();
        assert!((pressure(&g, &zero).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert_eq!(equilibrium_state(&g, &zero).unwrap_err(), Error::NotTransitive);
    }
}
