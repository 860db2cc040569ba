//! Simulation of single-photon generation by rephased amplified spontaneous
//! emission in an inhomogeneously broadened atomic ensemble.
//!
//! Units: `Γ = c = L = 1`. Position `z ∈ [0, L]`, detuning `Δ` in units of
//! the inhomogeneous width.

pub mod ase;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod oracles;
pub mod rase;
pub mod runner;
mod solver;
pub mod state;
pub mod table;

pub use config::RunConfig;
pub use ensemble::{coupling_for_depth, gaussian_density, peak_optical_depth, CouplingParams, Density, Distribution};
pub use error::{Error, Result};
pub use experiments::{ExperimentResult, Experiments, Orientation, ScanFailure, SolverSettings, TailoredCoupling};
pub use grid::{make_grid, Grid};
pub use rase::{emission_probability, invert_state, RaseResult};
pub use solver::Stepping;
pub use state::Amplitude;
pub use table::Table;
