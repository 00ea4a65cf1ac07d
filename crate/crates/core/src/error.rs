use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("subshift is empty after pruning stranded symbols")]
    EmptySft,
    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },
    #[error("subshift is not transitive")]
    NotTransitive,
    #[error("ambient subshift is not transitive")]
    AmbientNotTransitive,
    #[error("measure is not ergodic")]
    NotErgodic,
    #[error("order mismatch: {0}")]
    OrderMismatch(String),
    #[error("alphabet mismatch: {left} vs {right}")]
    AlphabetMismatch { left: usize, right: usize },
    #[error("level {level} outside [{min}, {max}]")]
    LevelOutOfRange { level: f64, min: f64, max: f64 },
    #[error("measure charges an inadmissible word: {0}")]
    SupportMismatch(String),
    #[error("bad block schedule: {0}")]
    BadSchedule(String),
    #[error("enumeration of {words} words exceeds budget {budget}")]
    Overflow { words: f64, budget: f64 },
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("parameter out of range ({clause}): {detail}")]
    ParamOutOfRange { clause: &'static str, detail: String },
    #[error("orbit hit the singular line at step {step}")]
    HitSingularLine { step: usize },
    #[error("cylinder depth {depth} underflows machine precision")]
    UnderflowDepth { depth: usize },
    #[error("observable is not constant on each branch")]
    NotBranchConstant,
    #[error("state table of {cells} cells exceeds budget {budget}")]
    BudgetExceeded { cells: usize, budget: usize },
    #[error("constraints are infeasible: {0}")]
    Infeasible(String),
    #[error("marginals are inconsistent: {0}")]
    InconsistentMarginals(String),
    #[error("no bridge between sub-shifts in the ambient graph")]
    NoBridge,
    #[error("independent check failed: {0}")]
    OracleDisagreement(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
