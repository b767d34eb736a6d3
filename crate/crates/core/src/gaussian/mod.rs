//! Gaussian benchmarks: closed-form witness expectations for pure Gaussian
//! states, their global extremization, and precomputed lookup tables.

mod params;
mod search;
mod table;

pub use params::{gaussian_expectation, quartic_expectation, Covariance, GaussianParams};
pub use search::{
    maximize_gaussian_fidelity, minimize_gaussian_expectation, minimize_multi_head_expectation,
    CatFamily, DirectBenchmark, Extremum, GaussianBenchmark, SearchBudget,
};
pub use table::{
    default_alpha_grid, default_gamma_grid, table_path, uniform_grid, BenchmarkTable,
    TableBenchmark, TABLE_DIR_ENV,
};
