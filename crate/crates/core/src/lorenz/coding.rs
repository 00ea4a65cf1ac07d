use serde::{Deserialize, Serialize};

use super::model::LorenzModel;
use crate::curve::SpectrumCurve;
use crate::error::{Error, Result};
use crate::symbolic::{decode, FunctionRole, LocallyConstantFunction, MarkovMeasure, SftGraph};
use crate::thermo::legendre_spectrum;

pub const SYMBOL_L: u8 = 0;
pub const SYMBOL_R: u8 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Itinerary {
    /// `0` for L (`x < 0`), `1` for R (`x ≥ 0`).
    pub word: Vec<u8>,
    /// Set when the orbit landed exactly on `x = 0` before `n` symbols.
    pub truncated: bool,
}

/// Sign coding of the quotient orbit; the boundary point `x = 0` gets R.
pub fn itinerary(m: &LorenzModel, x0: f64, n: usize) -> Itinerary {
    let mut word = Vec::with_capacity(n);
    let mut x = x0;
    for k in 0..n {
        word.push(if x >= 0.0 { SYMBOL_R } else { SYMBOL_L });
        if x == 0.0 && k + 1 < n {
            return Itinerary { word, truncated: true };
        }
        x = m.f(x);
    }
    Itinerary { word, truncated: false }
}

/// Closure `[lo, hi]` of the cylinder of `word`, by backward iteration of
/// the branch inverses from `[−1, 1]`.
pub fn inverse_branch(m: &LorenzModel, word: &[u8]) -> Result<(f64, f64)> {
    if (2.0 * m.alpha()).powi(-(word.len() as i32)) <= f64::EPSILON {
        return Err(Error::UnderflowDepth { depth: word.len() });
    }
    let (mut lo, mut hi) = (-1.0, 1.0);
    for &s in word.iter().rev() {
        if s > 1 {
            return Err(Error::InvalidInput(format!("symbol {s} is not L or R")));
        }
        lo = m.inverse(s, lo);
        hi = m.inverse(s, hi);
    }
    if !(lo < hi) {
        return Err(Error::UnderflowDepth { depth: word.len() });
    }
    Ok((lo, hi))
}

/// All `2^n` cylinders of depth `n`, indexed by word code (first symbol most
/// significant).
pub fn cylinders(m: &LorenzModel, n: usize) -> Result<Vec<(f64, f64)>> {
    (0..1u64 << n)
        .map(|code| {
            let word: Vec<u8> = decode(code, n, 2).into_iter().map(|s| s as u8).collect();
            inverse_branch(m, &word)
        })
        .collect()
}

/// Level-set spectrum of a branch-constant observable, computed on the full
/// 2-shift through the sign coding.
pub fn quotient_spectrum_transfer<G: Fn(f64) -> f64>(_model: &LorenzModel, g: G, a_grid: &[f64]) -> Result<SpectrumCurve> {
    let values = branch_values(&g)?;
    let shift = SftGraph::full_shift(2);
    let phi = LocallyConstantFunction::new(&shift, 1, FunctionRole::Observable, values.to_vec())?;
    let mut curve = legendre_spectrum(&shift, &phi, a_grid)?;
    curve.method = "legendre via symbolic conjugacy".into();
    Ok(curve)
}

/// `[g(L), g(R)]`, or `NotBranchConstant`.
pub fn branch_values<G: Fn(f64) -> f64>(g: &G) -> Result<[f64; 2]> {
    const SAMPLES: usize = 1000;
    let mut out = [0.0; 2];
    for (s, sign) in [(0, -1.0), (1, 1.0)] {
        let vals: Vec<f64> = (0..SAMPLES)
            .map(|i| g(sign * (i as f64 + 0.5) / SAMPLES as f64))
            .collect();
        let (lo, hi) = vals
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if !(hi - lo <= 1e-12) {
            return Err(Error::NotBranchConstant);
        }
        out[s] = vals[0];
    }
    Ok(out)
}

/// `∫_a^b ρ_M dx` for `0 ≤ a ≤ b ≤ 1`.
fn roof_integral_positive(m: &LorenzModel, a: f64, b: f64) -> f64 {
    let p = m.params();
    let xm = m.cap_radius();
    let prim = |x: f64| -> f64 {
        if x <= xm {
            p.roof_cap * x
        } else {
            let open = |t: f64| if t > 0.0 { p.roof_base * t - (t * t.ln() - t) / p.lambda3 } else { 0.0 };
            p.roof_cap * xm + open(x) - open(xm)
        }
    };
    prim(b) - prim(a)
}

/// Lebesgue average of the capped roof over `[a, b] ⊂ [−1, 1]`.
pub fn roof_average(m: &LorenzModel, a: f64, b: f64) -> f64 {
    let total = if a >= 0.0 {
        roof_integral_positive(m, a, b)
    } else if b <= 0.0 {
        roof_integral_positive(m, -b, -a)
    } else {
        roof_integral_positive(m, 0.0, -a) + roof_integral_positive(m, 0.0, b)
    };
    total / (b - a)
}

/// Markov proxy of the absolutely continuous invariant measure on depth-`n`
/// cylinders (Ulam's method on the Markov partition), together with the
/// capped roof averaged over each cylinder.
#[derive(Debug, Clone)]
pub struct AcimProxy {
    pub depth: usize,
    pub measure: MarkovMeasure,
    pub roof: LocallyConstantFunction,
}

pub fn acim_proxy(m: &LorenzModel, depth: usize) -> Result<AcimProxy> {
    if depth == 0 {
        return Err(Error::InvalidInput("depth must be positive".into()));
    }
    let shift = SftGraph::full_shift(2);
    let cells = cylinders(m, depth)?;
    let finer = cylinders(m, depth + 1)?;
    let n = cells.len();
    let mask = (n - 1) as u64;
    let mut transition = vec![vec![0.0; n]; n];
    for (w, &(lo, hi)) in cells.iter().enumerate() {
        for s in 0..2u64 {
            let child = (w as u64) << 1 | s;
            let (clo, chi) = finer[child as usize];
            transition[w][(child & mask) as usize] = (chi - clo) / (hi - lo);
        }
    }
    let states = (0..n as u64).map(|c| decode(c, depth, 2)).collect();
    let measure = MarkovMeasure::from_chain(2, depth, states, transition)?;
    let averages: Vec<f64> = cells.iter().map(|&(lo, hi)| roof_average(m, lo, hi)).collect();
    let roof = LocallyConstantFunction::new(&shift, depth, FunctionRole::Roof, averages)?;
    Ok(AcimProxy { depth, measure, roof })
}

/// Symbolic prediction of the roof-weighted average of a branch-constant
/// observable: `∫φ dμ / ∫ρ dμ` under the acim proxy.
pub fn symbolic_flow_prediction<G: Fn(f64) -> f64>(m: &LorenzModel, g: G, depth: usize) -> Result<f64> {
    let values = branch_values(&g)?;
    let proxy = acim_proxy(m, depth)?;
    let shift = SftGraph::full_shift(2);
    let phi = LocallyConstantFunction::new(&shift, 1, FunctionRole::Observable, values.to_vec())?
        .lift(depth)?;
    let weighted = LocallyConstantFunction::from_fn(&shift, depth, FunctionRole::Observable, |w| {
        phi.eval(w) * proxy.roof.eval(w)
    })?;
    crate::suspension::flow_integral(&proxy.measure, &proxy.roof, &weighted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fixed_and_period_two_itineraries() {
        let m = LorenzModel::reference();
        assert!(itinerary(&m, 1.0, 30).word.iter().all(|&s| s == SYMBOL_R));
        let x = m.period_two_point();
        let w = itinerary(&m, x, 20).word;
        assert!(w.iter().enumerate().all(|(k, &s)| s == if k % 2 == 0 { SYMBOL_R } else { SYMBOL_L }));
    }

    #[test]
    fn short_cylinders() {
        let m = LorenzModel::reference();
        assert_eq!(inverse_branch(&m, &[SYMBOL_R]).unwrap(), (0.0, 1.0));
        assert_eq!(inverse_branch(&m, &[SYMBOL_L]).unwrap(), (-1.0, 0.0));
        let (lo, hi) = inverse_branch(&m, &[SYMBOL_R, SYMBOL_R]).unwrap();
        assert!((lo - 0.5f64.powf(1.0 / 0.75)).abs() < 1e-15);
        assert_eq!(hi, 1.0);
        assert!(matches!(inverse_branch(&m, &[SYMBOL_R; 100]), Err(Error::UnderflowDepth { .. })));
    }

    #[test]
    fn itinerary_round_trip() {
        let m = LorenzModel::reference();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let x: f64 = rng.gen_range(-1.0..1.0);
            let it = itinerary(&m, x, 12);
            let (lo, hi) = inverse_branch(&m, &it.word).unwrap();
            assert!(lo <= x && x <= hi, "{x} not in [{lo}, {hi}]");
        }
    }

    #[test]
    fn cylinders_tile_the_interval() {
        let m = LorenzModel::reference();
        let cyl = cylinders(&m, 10).unwrap();
        assert_eq!(cyl[0].0, -1.0);
        assert_eq!(cyl[cyl.len() - 1].1, 1.0);
        let mut sorted = cyl.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in sorted.windows(2) {
            assert!((w[0].1 - w[1].0).abs() < 1e-14);
        }
        // f^{n−1} maps each cylinder onto a half interval with slope ≥ 2α
        let bound = (2.0 * m.alpha()).powi(-9);
        assert!(cyl.iter().all(|&(lo, hi)| hi - lo <= bound * (1.0 + 1e-12)));
    }

    #[test]
    fn spectrum_through_conjugacy() {
        let m = LorenzModel::reference();
        let g = |x: f64| if x > 0.0 { 1.0 } else { 0.0 };
        let c = quotient_spectrum_transfer(&m, g, &[0.25, 0.5, 1.0]).unwrap();
        let h = |p: f64| -(p * p.ln() + (1.0 - p) * (1.0 - p).ln());
        assert!((c.points[0].value - h(0.25)).abs() < 1e-9);
        assert!((c.points[1].value - 2f64.ln()).abs() < 1e-9);
        assert_eq!(c.points[2].value, 0.0);
        assert!(matches!(
            quotient_spectrum_transfer(&m, |x: f64| x, &[0.5]),
            Err(Error::NotBranchConstant)
        ));
    }

    #[test]
    fn roof_average_matches_quadrature() {
        let m = LorenzModel::reference();
        for &(a, b) in &[(0.1, 0.4), (-0.3, -0.05), (-0.2, 0.3)] {
            let n = 200_000;
            let h = (b - a) / n as f64;
            let quad: f64 = (0..n).map(|i| m.roof(a + (i as f64 + 0.5) * h)).sum::<f64>() * h / (b - a);
            assert!((roof_average(&m, a, b) - quad).abs() < 1e-4);
        }
        let capped = m.with_roof_cap(1.5).unwrap();
        let tiny = capped.cap_radius() / 2.0;
        assert!((roof_average(&capped, 0.0, tiny) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn acim_proxy_is_symmetric() {
        let m = LorenzModel::reference();
        let p = symbolic_flow_prediction(&m, |x: f64| if x > 0.0 { 1.0 } else { 0.0 }, 6).unwrap();
        assert!((p - 0.5).abs() < 1e-9);
    }
}
