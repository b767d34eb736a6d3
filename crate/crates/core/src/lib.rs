//! Catability: a directly measurable, nonlinear-squeezing based figure of merit
//! for superposed coherent (cat) states.
//!
//! The crate is organized bottom-up:
//!
//! * [`fock`] - truncated number-basis states, operators and Wigner evaluation;
//! * [`loss`] - the pure-loss (amplitude damping) channel;
//! * [`gaussian`] - closed-form and numerical Gaussian benchmarks, lookup tables;
//! * [`witness`] - witness operators, their decomposition and spectrum;
//! * [`metrics`] - catability and normalized infidelity, local and global;
//! * [`measurement`] - Monte Carlo simulation of the displaced photon-counting
//!   measurement and the two-step protocol;
//! * [`approx`] - witness-optimal squeezed photonic approximations.
//!
//! ```
//! use catability::fock::cat_state;
//! use catability::gaussian::DirectBenchmark;
//! use catability::loss::{apply_loss, LossSpec};
//! use catability::metrics::{catability, GammaSearch};
//! use catability::{Complex64, HilbertConfig, Parity};
//!
//! let cfg = HilbertConfig::new(60)?;
//! let alpha = Complex64::new(1.5, 0.0);
//! let ideal = cat_state(&cfg, alpha, Parity::Odd)?.to_density();
//! let lossy = apply_loss(&ideal, &LossSpec::from_energy_loss_pct(20.0)?)?;
//! let bench = DirectBenchmark::default();
//! let xi = catability(&lossy, alpha, Parity::Odd, &GammaSearch::default(), &bench)?;
//! assert!(xi.value < 1.0);
//! # Ok::<(), catability::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod loss;
pub mod measurement;
pub mod metrics;
pub mod optimize;
pub mod witness;

pub use error::{Error, Result};
pub use fock::{DensityOperator, HilbertConfig, OperatorMatrix, Parity, StateVector};
pub use num_complex::Complex64;
