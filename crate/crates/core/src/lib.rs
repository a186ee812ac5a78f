//! Nonlocal Fokker-Planck swarm model: closed-form steady states, a
//! positivity-preserving finite-volume solver, entropy diagnostics and an
//! interacting-particle approximation.

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod model;
pub mod particles;
pub mod quadrature;
pub mod solver;
pub mod tridiag;

pub use diagnostics::{
    balance_residual, balance_residual_series, fit_rate, BalanceKind, DiagnosticsContext, DiagnosticsRecord,
    EntropyDecomposition, RateFit, RateModel,
};
pub use error::{Error, Result};
pub use grid::{build_grid, default_domain, integrate, l1_distance, moment, project_density, DensityField, Grid1D};
pub use model::{
    attraction_center, center_closed_form, mean_closed_form, steady_masses, steady_profile, quasi_profile,
    ModelKind, ModelParams, SteadyMasses,
};
pub use particles::{em_step, empirical_mean, histogram_density, sample_initial, Histogram, ParticleEnsemble};
pub use solver::{run, run_from_field, step, FluxRule, RunOutput, SchemeConfig, SolverState};
