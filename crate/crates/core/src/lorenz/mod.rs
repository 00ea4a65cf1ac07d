//! A concrete geometric Lorenz model: Poincaré return map, sign coding of
//! the quotient map onto the full 2-shift, cylinder geometry, and the
//! capped singular roof.

mod coding;
mod model;
mod orbit;

pub use coding::{
    acim_proxy, branch_values, cylinders, inverse_branch, itinerary, quotient_spectrum_transfer, roof_average,
    symbolic_flow_prediction, AcimProxy, Itinerary, SYMBOL_L, SYMBOL_R,
};
pub use model::{validate_model, LorenzModel, LorenzParams, PoincareState, SINGULAR_TOL};
pub use orbit::{
    fiber_contraction_audit, flow_average, flow_average_sweep, orbit_csv, random_state, FiberAudit, FlowAverage,
};
