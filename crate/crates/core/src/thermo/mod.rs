//! Transfer matrices, pressure, equilibrium states, Birkhoff spectra and the
//! rate functional for locally constant potentials on SFTs.

mod cycles;
mod gibbs;
mod legendre;
mod rate;
mod transfer;

pub use cycles::{cycle_bounds, max_cycle_mean, tight_edges, CycleBounds};
pub use gibbs::{gibbs_constant_audit, GibbsAudit, GibbsRow};
pub(crate) use gibbs::{eigenvector_bound, GibbsPaths};
pub use legendre::{
    constrained_entropy_oracle, legendre_spectrum, oracle_spectrum, spectrum_peak, OracleValue, TiltFamily,
    BOUNDARY_TOL, Q_CAP,
};
pub use rate::{rate_functional, RateInput};
pub use transfer::{
    equilibrium_state, pressure, transfer_matrix, Edge, EdgeGraph, EquilibriumState, TransferMatrix,
};
