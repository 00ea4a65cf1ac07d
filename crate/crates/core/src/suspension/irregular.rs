use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lengths of the alternating blocks `1^{n_1} 0^{n_2} 1^{n_3} …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSchedule {
    lengths: Vec<usize>,
    ratio: f64,
}

impl BlockSchedule {
    /// `n_k = round(r^k)` for `k = 1..=blocks`.
    pub fn geometric(ratio: f64, blocks: usize) -> Result<Self> {
        if !(ratio > 1.0) || !ratio.is_finite() {
            return Err(Error::BadSchedule(format!("growth ratio {ratio} must exceed 1")));
        }
        if blocks < 2 {
            return Err(Error::BadSchedule("need at least two blocks".into()));
        }
        let lengths = (1..=blocks as i32).map(|k| ratio.powi(k).round() as usize).collect();
        Self::checked(lengths, ratio)
    }

    /// Arbitrary lengths; the growth ratio is read off the last two blocks.
    pub fn from_lengths(lengths: Vec<usize>) -> Result<Self> {
        if lengths.len() < 2 {
            return Err(Error::BadSchedule("need at least two blocks".into()));
        }
        let n = lengths.len();
        let ratio = lengths[n - 1] as f64 / lengths[n - 2] as f64;
        Self::checked(lengths, ratio)
    }

    fn checked(lengths: Vec<usize>, ratio: f64) -> Result<Self> {
        if lengths[0] == 0 || lengths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::BadSchedule(format!(
                "block lengths must be positive and strictly increasing: {lengths:?}"
            )));
        }
        if !(ratio > 1.0) {
            return Err(Error::BadSchedule(format!("growth ratio {ratio} must exceed 1")));
        }
        Ok(Self { lengths, ratio })
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }
}

/// A point whose Birkhoff averages of `1_{[1]}` oscillate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrregularPoint {
    pub sequence: Vec<u8>,
    /// `(1/(r+1), r/(r+1))`.
    pub predicted: (f64, f64),
    /// Extremes of the running average over the last two blocks.
    pub measured: (f64, f64),
}

impl IrregularPoint {
    pub fn error(&self) -> f64 {
        (self.measured.0 - self.predicted.0)
            .abs()
            .max((self.measured.1 - self.predicted.1).abs())
    }

    /// One `0`/`1` character per symbol, newline terminated.
    pub fn to_symbol_text(&self) -> String {
        let mut s: String = self.sequence.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect();
        s.push('\n');
        s
    }

    pub fn parse_symbol_text(text: &str) -> Result<Vec<u8>> {
        text.trim_end()
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidInput(format!("unexpected symbol {other:?}"))),
            })
            .collect()
    }
}

pub fn irregular_point(schedule: &BlockSchedule) -> IrregularPoint {
    let total: usize = schedule.lengths.iter().sum();
    let mut sequence = Vec::with_capacity(total);
    for (k, &n) in schedule.lengths.iter().enumerate() {
        let sym = if k % 2 == 0 { 1 } else { 0 };
        sequence.extend(std::iter::repeat(sym).take(n));
    }
    let tail_start = total - schedule.lengths[schedule.lengths.len() - 2..].iter().sum::<usize>();
    let mut ones = 0usize;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (t, &s) in sequence.iter().enumerate() {
        ones += s as usize;
        if t + 1 > tail_start {
            let avg = ones as f64 / (t + 1) as f64;
            lo = lo.min(avg);
            hi = hi.max(avg);
        }
    }
    let r = schedule.ratio;
    IrregularPoint {
        sequence,
        predicted: (1.0 / (r + 1.0), r / (r + 1.0)),
        measured: (lo, hi),
    }
}
