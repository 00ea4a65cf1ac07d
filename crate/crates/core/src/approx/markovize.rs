use crate::error::{Error, Result};
use crate::numerics::compensated_sum;
use crate::symbolic::{decode, word_space, CylinderMarginals, MarkovMeasure};

/// Shift defect tolerated by Markovization.
pub const MARKOVIZATION_TOL: f64 = 1e-10;

/// Order-`D−1` Markov chain with the transition probabilities given by the
/// conditional frequencies of the deepest level of `marginals`.
pub fn markovization(marginals: &CylinderMarginals) -> Result<MarkovMeasure> {
    markovization_order(marginals, marginals.depth() - 1)
}

/// Order-`k` Markovization, reading the length-`k+1` level.
pub fn markovization_order(marginals: &CylinderMarginals, k: usize) -> Result<MarkovMeasure> {
    if k + 1 > marginals.depth() {
        return Err(Error::InconsistentMarginals(format!(
            "order {k} needs depth {}, have {}",
            k + 1,
            marginals.depth()
        )));
    }
    let defect = marginals.shift_defect();
    if defect > MARKOVIZATION_TOL {
        return Err(Error::InconsistentMarginals(format!("not shift invariant (defect {defect:e})")));
    }
    let a = marginals.alphabet_size();
    if k == 0 {
        return MarkovMeasure::bernoulli(marginals.level(1));
    }
    let blocks = marginals.level(k);
    let longer = marginals.level(k + 1);
    let codes: Vec<u64> = (0..blocks.len() as u64).filter(|&c| blocks[c as usize] > 0.0).collect();
    let mut index = vec![usize::MAX; blocks.len()];
    for (i, &c) in codes.iter().enumerate() {
        index[c as usize] = i;
    }
    let tail = word_space(a, k - 1).unwrap();
    let mut transition = vec![vec![0.0; codes.len()]; codes.len()];
    for (i, &c) in codes.iter().enumerate() {
        for s in 0..a as u64 {
            let p = longer[(c * a as u64 + s) as usize];
            if p > 0.0 {
                let j = index[((c % tail) * a as u64 + s) as usize];
                if j == usize::MAX {
                    return Err(Error::InconsistentMarginals("a charged word has an uncharged suffix".into()));
                }
                transition[i][j] = p;
            }
        }
        let row_sum = compensated_sum(transition[i].iter().copied());
        transition[i].iter_mut().for_each(|p| *p /= row_sum);
    }
    // Re-derive the stationary vector from the rows so the chain is exactly stationary.
    let mut stationary: Vec<f64> = codes.iter().map(|&c| blocks[c as usize]).collect();
    let total = compensated_sum(stationary.iter().copied());
    stationary.iter_mut().for_each(|p| *p /= total);
    let states = codes.iter().map(|&c| decode(c, k, a)).collect();
    MarkovMeasure::new(a, k, states, transition, stationary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{dstar_distance, SftGraph};

    fn half_dirac_half_coin(depth: usize) -> CylinderMarginals {
        let dirac = CylinderMarginals::from_sequence(&[0], 2, depth).unwrap();
        let coin = CylinderMarginals::from_measure(&MarkovMeasure::bernoulli(&[0.5, 0.5]).unwrap(), depth).unwrap();
        CylinderMarginals::mixture(&[(0.5, &dirac), (0.5, &coin)]).unwrap()
    }

    #[test]
    fn mixture_pair_frequencies() {
        let m = markovization(&half_dirac_half_coin(2)).unwrap();
        let p = m.transition();
        assert_eq!(p[0][0], 5.0 / 6.0);
        assert_eq!(p[0][1], 1.0 / 6.0);
        assert_eq!(p[1], vec![0.5, 0.5]);
        assert!(m.is_ergodic());
        assert!(m.entropy() >= 0.5 * 2f64.ln());
    }

    #[test]
    fn idempotent_on_markov_input() {
        let parry = MarkovMeasure::parry(&SftGraph::golden_mean()).unwrap();
        let c = CylinderMarginals::from_measure(&parry, 2).unwrap();
        let m = markovization(&c).unwrap();
        let d = dstar_distance(
            &CylinderMarginals::from_measure(&m, 12).unwrap(),
            &CylinderMarginals::from_measure(&parry, 12).unwrap(),
        )
        .unwrap();
        assert!(d.value <= 1e-12);
    }

    #[test]
    fn entropy_nonincreasing_in_order() {
        let c = half_dirac_half_coin(6);
        let hs: Vec<f64> = (0..6).map(|k| markovization_order(&c, k).unwrap().entropy()).collect();
        for w in hs.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        assert!(*hs.last().unwrap() >= 0.5 * 2f64.ln() - 1e-12);
    }

    #[test]
    fn matches_input_marginals() {
        let c = half_dirac_half_coin(4);
        let m = markovization(&c).unwrap();
        let back = CylinderMarginals::from_measure(&m, 4).unwrap();
        for len in 1..=4 {
            for (x, y) in back.level(len).iter().zip(c.level(len)) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
