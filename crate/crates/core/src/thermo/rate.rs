use super::transfer::pressure;
use crate::approx::markovization;
use crate::error::{Error, Result};
use crate::numerics::compensated_sum;
use crate::symbolic::{CylinderMarginals, LocallyConstantFunction, MarkovMeasure, SftGraph};

/// Marginals whose shift defect exceeds this are treated as non-invariant.
pub const INVARIANCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
pub enum RateInput<'a> {
    Measure(&'a MarkovMeasure),
    Marginals(&'a CylinderMarginals),
}

/// `P(ψ) − h − ∫ψ`, or `+∞` for marginals that are not shift invariant.
///
/// For marginal data the entropy is that of its Markovization, the largest
/// entropy compatible with the given frequencies.
pub fn rate_functional(input: RateInput<'_>, psi: &LocallyConstantFunction, sft: &SftGraph) -> Result<f64> {
    let p = pressure(sft, psi)?;
    let (h, integral) = match input {
        RateInput::Measure(m) => {
            m.check_support(sft)?;
            (m.entropy(), m.integrate(psi)?)
        }
        RateInput::Marginals(c) => {
            if c.shift_defect() > INVARIANCE_TOL {
                return Ok(f64::INFINITY);
            }
            if c.alphabet_size() != psi.alphabet_size() {
                return Err(Error::AlphabetMismatch {
                    left: c.alphabet_size(),
                    right: psi.alphabet_size(),
                });
            }
            if psi.order() > c.depth() {
                return Err(Error::OrderMismatch(format!(
                    "potential of order {} needs marginals of depth ≥ {}",
                    psi.order(),
                    psi.order()
                )));
            }
            let m = markovization(c)?;
            let level = c.level(psi.order());
            let integral = compensated_sum(level.iter().zip(psi.values()).map(|(p, v)| p * v));
            (m.entropy(), integral)
        }
    };
    Ok((p - h - integral).max(0.0))
}
