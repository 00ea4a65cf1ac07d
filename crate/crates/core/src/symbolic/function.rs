use serde::{Deserialize, Serialize};

use super::{decode, word_space, SftGraph, WORD_TABLE_BUDGET};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionRole {
    Observable,
    Potential,
    Roof,
}

/// A real function depending on the first `order` symbols.
///
/// Values are stored densely over all `A^order` words; entries of
/// inadmissible words are zero and never read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocallyConstantFunction {
    order: usize,
    alphabet_size: usize,
    role: FunctionRole,
    values: Vec<f64>,
}

impl LocallyConstantFunction {
    /// `values` is indexed by word code; inadmissible entries are zeroed.
    pub fn new(sft: &SftGraph, order: usize, role: FunctionRole, mut values: Vec<f64>) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidInput("function order must be at least 1".into()));
        }
        let a = sft.alphabet_size();
        let space = word_space(a, order)
            .filter(|&s| s <= WORD_TABLE_BUDGET)
            .ok_or_else(|| Error::InvalidInput(format!("order {order} too large for alphabet {a}")))?;
        if values.len() as u64 != space {
            return Err(Error::InvalidInput(format!(
                "expected {space} values for order {order}, got {}",
                values.len()
            )));
        }
        let mut admissible = vec![false; values.len()];
        for c in sft.admissible_words(order, WORD_TABLE_BUDGET)? {
            admissible[c as usize] = true;
        }
        for (v, &ok) in values.iter_mut().zip(&admissible) {
            if !ok {
                *v = 0.0;
            } else if !v.is_finite() {
                return Err(Error::InvalidInput("function values must be finite".into()));
            }
        }
        if role == FunctionRole::Roof {
            let min = values
                .iter()
                .zip(&admissible)
                .filter(|(_, &ok)| ok)
                .map(|(&v, _)| v)
                .fold(f64::INFINITY, f64::min);
            if min <= 0.0 {
                return Err(Error::InvalidInput(format!("roof minimum {min} is not positive")));
            }
        }
        Ok(Self {
            order,
            alphabet_size: a,
            role,
            values,
        })
    }

    pub fn from_fn(sft: &SftGraph, order: usize, role: FunctionRole, f: impl Fn(&[usize]) -> f64) -> Result<Self> {
        let a = sft.alphabet_size();
        let space = word_space(a, order)
            .filter(|&s| s <= WORD_TABLE_BUDGET)
            .ok_or_else(|| Error::InvalidInput(format!("order {order} too large for alphabet {a}")))?;
        let mut values = vec![0.0; space as usize];
        for c in sft.admissible_words(order, WORD_TABLE_BUDGET)? {
            values[c as usize] = f(&decode(c, order, a));
        }
        Self::new(sft, order, role, values)
    }

    pub fn constant(sft: &SftGraph, c: f64, role: FunctionRole) -> Result<Self> {
        Self::from_fn(sft, 1, role, |_| c)
    }

    /// `1` on the cylinder of `symbol`, else `0`.
    pub fn indicator(sft: &SftGraph, symbol: usize) -> Result<Self> {
        if symbol >= sft.alphabet_size() {
            return Err(Error::InvalidInput(format!("symbol {symbol} not in alphabet")));
        }
        Self::from_fn(sft, 1, FunctionRole::Observable, |w| f64::from(u8::from(w[0] == symbol)))
    }

    /// `1` on the cylinder of `word`, else `0`.
    pub fn word_indicator(sft: &SftGraph, word: &[usize]) -> Result<Self> {
        Self::from_fn(sft, word.len(), FunctionRole::Observable, |w| f64::from(u8::from(w == word)))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn role(&self) -> FunctionRole {
        self.role
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, code: u64) -> f64 {
        self.values[code as usize]
    }

    /// Evaluates on the first `order` symbols of `word`.
    pub fn eval(&self, word: &[usize]) -> f64 {
        let code = word[..self.order]
            .iter()
            .fold(0u64, |acc, &s| acc * self.alphabet_size as u64 + s as u64);
        self.values[code as usize]
    }

    pub fn with_role(mut self, role: FunctionRole) -> Self {
        self.role = role;
        self
    }

    /// Same function, written as depending on the first `order` symbols.
    pub fn lift(&self, order: usize) -> Result<Self> {
        if order < self.order {
            return Err(Error::OrderMismatch(format!(
                "cannot lower order {} to {order}",
                self.order
            )));
        }
        let drop = word_space(self.alphabet_size, order - self.order).unwrap_or(u64::MAX);
        let space = word_space(self.alphabet_size, order)
            .filter(|&s| s <= WORD_TABLE_BUDGET)
            .ok_or_else(|| Error::OrderMismatch(format!("order {order} too large")))?;
        let values = (0..space).map(|c| self.values[(c / drop) as usize]).collect();
        Ok(Self {
            order,
            alphabet_size: self.alphabet_size,
            role: self.role,
            values,
        })
    }

    /// Pointwise `self + c * other`, at the larger of the two orders.
    pub fn add_scaled(&self, other: &Self, c: f64) -> Result<Self> {
        if self.alphabet_size != other.alphabet_size {
            return Err(Error::AlphabetMismatch {
                left: self.alphabet_size,
                right: other.alphabet_size,
            });
        }
        let k = self.order.max(other.order);
        let a = self.lift(k)?;
        let b = other.lift(k)?;
        let values = a.values.iter().zip(&b.values).map(|(x, y)| x + c * y).collect();
        Ok(Self { values, ..a })
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| c * v).collect(),
            ..self.clone()
        }
    }

    pub fn offset(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v + c).collect(),
            ..self.clone()
        }
    }

    /// Minimum and maximum over admissible words of `sft`.
    pub fn range_on(&self, sft: &SftGraph) -> Result<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for c in sft.admissible_words(self.order, WORD_TABLE_BUDGET)? {
            let v = self.values[c as usize];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Ok((lo, hi))
    }
}
