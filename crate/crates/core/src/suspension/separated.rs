use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A piecewise strictly monotone map of a closed interval.
pub trait IntervalMap: Sync {
    fn domain(&self) -> (f64, f64);
    /// Interior discontinuities, increasing.
    fn cuts(&self) -> Vec<f64>;
    /// Branch `j` extended continuously to the closure of its interval.
    fn branch(&self, j: usize, x: f64) -> f64;

    fn branch_index(&self, x: f64) -> usize {
        self.cuts().partition_point(|&c| c <= x)
    }

    fn apply(&self, x: f64) -> f64 {
        self.branch(self.branch_index(x), x)
    }
}

/// `x ↦ 2x mod 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DoublingMap;

impl IntervalMap for DoublingMap {
    fn domain(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
    fn cuts(&self) -> Vec<f64> {
        vec![0.5]
    }
    fn branch(&self, j: usize, x: f64) -> f64 {
        2.0 * x - j as f64
    }
}

/// `x ↦ x + 1/p mod 1`: every orbit is periodic.
#[derive(Debug, Clone, Copy)]
pub struct Rotation {
    pub period: u32,
}

impl IntervalMap for Rotation {
    fn domain(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
    fn cuts(&self) -> Vec<f64> {
        vec![1.0 - 1.0 / self.period as f64]
    }
    fn branch(&self, j: usize, x: f64) -> f64 {
        x + 1.0 / self.period as f64 - j as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparatedEstimate {
    pub t: usize,
    pub eps: f64,
    /// Maximal cardinality of a `(t, ε)`-separated set.
    pub count: f64,
    /// `(1/t) log N(t)`.
    pub value: f64,
    /// `log N(t) − log N(t − 1)`.
    pub increment: f64,
    /// Zero for maps, which need no time discretization.
    pub time_discretization_slack: f64,
}

fn ball_count(len: f64, eps: f64) -> f64 {
    (len / eps - 1e-9).ceil().max(1.0)
}

/// Exact sweep for a piecewise monotone map: pushes the monotonicity pieces
/// of `f^{t−1}` forward and packs each image with points `ε` apart.
/// Points in different pieces are separated one step after their itineraries
/// split, so the count is additive over pieces.
pub fn separated_set_entropy<M: IntervalMap + ?Sized>(map: &M, t: usize, eps: f64) -> Result<SeparatedEstimate> {
    let (lo, hi) = map.domain();
    if t == 0 {
        return Err(Error::InvalidInput("orbit length must be positive".into()));
    }
    if !(eps > 0.0) || eps >= hi - lo {
        return Err(Error::GridTooCoarse(format!("ε = {eps} outside (0, {})", hi - lo)));
    }
    let cuts = map.cuts();
    let mut pieces = vec![(lo, hi)];
    let mut prev = 1.0;
    for _ in 1..t {
        prev = pieces.iter().map(|&(a, b)| ball_count(b - a, eps)).sum();
        let mut next = Vec::with_capacity(pieces.len() * 2);
        for &(a, b) in &pieces {
            let mut left = a;
            let first = cuts.partition_point(|&c| c <= a);
            for (j, &c) in cuts.iter().enumerate().skip(first) {
                if c >= b {
                    break;
                }
                push_image(map, j, left, c, &mut next);
                left = c;
            }
            push_image(map, cuts.partition_point(|&c| c <= left), left, b, &mut next);
        }
        pieces = next;
    }
    let count: f64 = pieces.iter().map(|&(a, b)| ball_count(b - a, eps)).sum();
    Ok(SeparatedEstimate {
        t,
        eps,
        count,
        value: count.ln() / t as f64,
        increment: count.ln() - f64::ln(prev),
        time_discretization_slack: 0.0,
    })
}

fn push_image<M: IntervalMap + ?Sized>(map: &M, j: usize, a: f64, b: f64, out: &mut Vec<(f64, f64)>) {
    if b <= a {
        return;
    }
    let (u, v) = (map.branch(j, a), map.branch(j, b));
    out.push((u.min(v), u.max(v)));
}

/// Greedy `(t, ε)`-separated subset of the given initial points in the
/// max-over-orbit metric. Fails when every point is kept, since the grid
/// then cannot resolve the separation scale.
pub fn greedy_separated_count<M: IntervalMap + ?Sized>(map: &M, points: &[f64], t: usize, eps: f64) -> Result<usize> {
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for &x in points {
        let mut orbit = Vec::with_capacity(t);
        let mut y = x;
        for _ in 0..t {
            orbit.push(y);
            y = map.apply(y);
        }
        let separated = kept
            .iter()
            .all(|k| k.iter().zip(&orbit).any(|(a, b)| (a - b).abs() > eps));
        if separated {
            kept.push(orbit);
        }
    }
    if kept.len() == points.len() && points.len() > 1 {
        return Err(Error::GridTooCoarse(format!(
            "all {} grid points are ({t}, {eps})-separated",
            points.len()
        )));
    }
    Ok(kept.len())
}

pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_at_cylinder_scale() {
        let e = separated_set_entropy(&DoublingMap, 14, 0.5).unwrap();
        assert_eq!(e.count, 16384.0);
        assert!((e.value - 2f64.ln()).abs() < 1e-12);
        assert!((e.increment - 2f64.ln()).abs() < 1e-12);
        assert_eq!(e.time_discretization_slack, 0.0);
    }

    #[test]
    fn sweep_matches_greedy_on_a_fine_grid() {
        let sweep = separated_set_entropy(&DoublingMap, 4, 0.3).unwrap();
        assert_eq!(sweep.count, 32.0);
        let greedy = greedy_separated_count(&DoublingMap, &uniform_grid(0.0, 1.0, 4000), 4, 0.3).unwrap();
        assert_eq!(greedy as f64, sweep.count);
    }

    #[test]
    fn periodic_orbits_have_zero_entropy() {
        let rot = Rotation { period: 5 };
        let grid = uniform_grid(0.0, 1.0, 2000);
        let mut last = f64::INFINITY;
        for t in [4, 16, 64] {
            let n = greedy_separated_count(&rot, &grid, t, 0.05).unwrap();
            let v = (n as f64).ln() / t as f64;
            assert!(v < last);
            last = v;
        }
        assert!(last < 0.05);
    }

    #[test]
    fn coarse_grid_rejected() {
        let r = greedy_separated_count(&DoublingMap, &uniform_grid(0.0, 1.0, 8), 6, 0.01);
        assert!(matches!(r, Err(Error::GridTooCoarse(_))));
        assert!(matches!(separated_set_entropy(&DoublingMap, 3, 0.0), Err(Error::GridTooCoarse(_))));
    }
}
