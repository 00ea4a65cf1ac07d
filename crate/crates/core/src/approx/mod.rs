//! Markovization of finite marginal data, ergodic approximation with
//! certificates, joins of sub-SFTs and nested horseshoe sequences.

mod dense;
mod horseshoe;
mod markovize;

pub use dense::{entropy_dense_approx, generic_point_demo, order_for, DenseCertificate};
pub use horseshoe::{nested_horseshoe_sequence, sub_sft_join, HorseshoeStage, SubSft, HORSESHOE_START};
pub use markovize::{markovization, markovization_order, MARKOVIZATION_TOL};
