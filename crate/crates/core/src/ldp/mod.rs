//! Large deviations for Markov measures and locally constant observables:
//! cumulant generating functions, level-1 rate curves, exact and sampled
//! deviation probabilities, cylinder-frequency balls and weak-Gibbs audits.

mod chain;
mod exact;
mod level1;
mod level2;
mod weak;

pub use exact::{
    exact_deviation_prob, exact_sum_distribution, mc_deviation_prob, wilson_interval, DeviationReport, MonteCarlo,
    SumDistribution, DP_BUDGET, GENERATOR_ID, Z95, Z99,
};
pub use level1::{cgf, exact_cgf, level1_rate, Level1Rate};
pub use level2::{
    level2_ball_rate, level2_mc_test, mc_ball_hits, Ball, BallHits, BallRate, BallReport, CylinderConstraint,
};
pub use weak::{
    c_infinity_estimate, weak_gibbs_audit, CInfinity, CInfinityRow, WeakGibbsAudit, WeakGibbsRow, AUDIT_BUDGET,
    EPSILON_SCALE,
};
