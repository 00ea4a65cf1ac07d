use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::MarkovMeasure;
use crate::error::{Error, Result};

/// Precomputed cumulative tables for drawing orbits of an ergodic chain.
#[derive(Debug, Clone)]
pub struct OrbitSampler {
    states: Vec<Vec<usize>>,
    initial: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
    emitted: Vec<usize>,
}

fn draw(cum: &[f64], u: f64) -> usize {
    cum.partition_point(|&c| c <= u).min(cum.len() - 1)
}

impl OrbitSampler {
    pub fn new(m: &MarkovMeasure) -> Result<Self> {
        if !m.is_ergodic() {
            return Err(Error::NotErgodic);
        }
        let mut acc = 0.0;
        let initial = m
            .stationary()
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let rows = m
            .transition()
            .iter()
            .map(|row| {
                let mut acc = 0.0;
                row.iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(j, &p)| {
                        acc += p;
                        (j, acc)
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            states: m.states().to_vec(),
            initial,
            rows,
            emitted: (0..m.states().len()).map(|j| m.emitted(j)).collect(),
        })
    }

    /// Writes `n` symbols of a stationary orbit into `out`.
    pub fn fill<R: Rng>(&self, rng: &mut R, n: usize, out: &mut Vec<usize>) {
        out.clear();
        let mut state = draw(&self.initial, rng.gen::<f64>() * self.initial.last().unwrap());
        out.extend(self.states[state].iter().take(n));
        while out.len() < n {
            let row = &self.rows[state];
            let u = rng.gen::<f64>() * row.last().unwrap().1;
            let k = row.partition_point(|&(_, c)| c <= u).min(row.len() - 1);
            state = row[k].0;
            out.push(self.emitted[state]);
        }
    }
}

pub fn sample_orbit(m: &MarkovMeasure, n: usize, seed: u64) -> Result<Vec<usize>> {
    sample_orbit_stream(m, n, seed, 0)
}

/// Orbit drawn from ChaCha stream `stream` of `seed`; streams are independent.
pub fn sample_orbit_stream(m: &MarkovMeasure, n: usize, seed: u64, stream: u64) -> Result<Vec<usize>> {
    let sampler = OrbitSampler::new(m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut out = Vec::with_capacity(n);
    sampler.fill(&mut rng, n, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{CylinderMarginals, SftGraph};

    #[test]
    fn deterministic_measure_gives_constant_orbit() {
        let m = MarkovMeasure::bernoulli(&[1.0, 0.0]).unwrap();
        assert_eq!(sample_orbit(&m, 50, 3).unwrap(), vec![0; 50]);
    }

    #[test]
    fn seeded_reproducibility() {
        let m = MarkovMeasure::bernoulli(&[0.5, 0.5]).unwrap();
        assert_eq!(sample_orbit(&m, 100, 9).unwrap(), sample_orbit(&m, 100, 9).unwrap());
        assert_ne!(
            sample_orbit_stream(&m, 100, 9, 0).unwrap(),
            sample_orbit_stream(&m, 100, 9, 1).unwrap()
        );
    }

    #[test]
    fn fair_coin_frequency() {
        let m = MarkovMeasure::bernoulli(&[0.5, 0.5]).unwrap();
        let s = sample_orbit(&m, 1_000_000, 2024).unwrap();
        let f = s.iter().filter(|&&x| x == 1).count() as f64 / 1e6;
        assert!((f - 0.5).abs() < 0.002, "{f}");
    }

    #[test]
    fn golden_mean_never_emits_11() {
        let m = MarkovMeasure::parry(&SftGraph::golden_mean()).unwrap();
        let s = sample_orbit(&m, 100_000, 5).unwrap();
        assert!(s.windows(2).all(|w| w != [1, 1]));
    }

    #[test]
    fn depth_two_marginals_within_three_sigma() {
        let m = MarkovMeasure::parry(&SftGraph::golden_mean()).unwrap();
        let n = 400_000;
        let s = sample_orbit(&m, n, 77).unwrap();
        let emp = CylinderMarginals::from_sequence(&s, 2, 2).unwrap();
        let exact = CylinderMarginals::from_measure(&m, 2).unwrap();
        for c in 0..4 {
            let p = exact.level(2)[c];
            // correlated samples: inflate the iid variance generously
            let sigma = (4.0 * p * (1.0 - p) / n as f64).sqrt();
            assert!((emp.level(2)[c] - p).abs() <= 3.0 * sigma + 1e-12);
        }
    }

    #[test]
    fn not_ergodic_is_rejected() {
        let m = MarkovMeasure::new(
            2,
            1,
            vec![vec![0], vec![1]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.5, 0.5],
        )
        .unwrap();
        assert_eq!(sample_orbit(&m, 5, 1).unwrap_err(), Error::NotErgodic);
    }
}
