//! Suspension flows over SFTs under locally constant roofs, irregular
//! points, and counting estimators of entropy.

mod counting;
mod flow;
mod irregular;
mod separated;

pub use counting::{cylinder_counting_entropy, CountingEntropy, CountingOptions, WordStats, ENUMERATION_BUDGET};
pub use flow::{
    abramov_entropy, flow_integral, flow_level_oracle, flow_level_spectrum, flow_topological_entropy, FlowEntropy,
    FlowMeasure, SuspensionSystem,
};
pub use irregular::{irregular_point, BlockSchedule, IrregularPoint};
pub use separated::{
    greedy_separated_count, separated_set_entropy, uniform_grid, DoublingMap, IntervalMap, Rotation,
    SeparatedEstimate,
};
