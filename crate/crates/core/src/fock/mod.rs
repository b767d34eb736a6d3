//! Truncated Fock-space foundation: configuration, states, operators and
//! phase-space evaluation.

mod config;
pub(crate) mod linalg;
mod operators;
mod state;
mod wigner;

pub(crate) use config::check_amplitude_cutoff;
pub use config::{
    default_cutoff, HilbertConfig, Parity, SqueezeConvention, DEFAULT_ATOL, DEFAULT_TAIL_TOL,
    MIN_DIM,
};
pub use operators::{
    annihilation, cat_state, coherent_state, creation, displace_state, displacement,
    multi_headed_cat, number_parity_ops, photonic_approximation, squeeze, squeeze_state,
    PhotonicApprox, MAX_SQUEEZE,
};
pub(crate) use operators::{annihilation_matrix, annihilation_power, check_squeeze};
pub(crate) use state::check_dim;
pub use state::{expectation, fidelity_with_pure, DensityOperator, OperatorMatrix, StateVector};
#[cfg(test)]
pub(crate) use state::{max_abs_diff, trace_of_product};
pub use wigner::{wigner_grid, wigner_point};
