//! Subshifts of finite type, Markov measures on them, locally constant
//! functions, finite cylinder marginals and the weak* metric built from them.
//!
//! Words over an alphabet of size `A` are encoded as base-`A` integers with
//! the first symbol most significant, so the code of the length-`j` suffix of
//! a word is `code % A^j` and its length-`j` prefix is `code / A^(len-j)`.

mod function;
mod marginals;
mod measure;
mod sample;
mod sft;

pub use function::{FunctionRole, LocallyConstantFunction};
pub use marginals::{dstar_distance, CylinderMarginals, DStar};
pub use measure::{markov_entropy, MarkovMeasure};
pub use sample::{sample_orbit, sample_orbit_stream, OrbitSampler};
pub use sft::{higher_block_recode, BlockRecoding, SftGraph};

/// Hard cap on dense word tables (`A^len` entries).
pub const WORD_TABLE_BUDGET: u64 = 1 << 27;

pub fn encode(word: &[usize], alphabet: usize) -> u64 {
    word.iter().fold(0u64, |acc, &s| acc * alphabet as u64 + s as u64)
}

pub fn decode(mut code: u64, len: usize, alphabet: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = (code % alphabet as u64) as usize;
        code /= alphabet as u64;
    }
    out
}

/// `alphabet^len`, or `None` if it does not fit in a `u64`.
pub fn word_space(alphabet: usize, len: usize) -> Option<u64> {
    (alphabet as u64).checked_pow(len as u32)
}
