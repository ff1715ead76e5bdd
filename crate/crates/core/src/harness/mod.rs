//! Experiment drivers, configuration and output writers.

pub mod config;
pub mod convergence;
pub mod run;
pub mod spectra;
pub mod vtk;

pub use config::{Experiment, RunConfig};
pub use convergence::{
    evolve, l2_relative_error, run_case, run_convergence, setup_case, temporal_study, CaseResult, ConvergenceCase,
    ConvergenceReport,
};
pub use run::{
    micro_heterogeneity_config, micro_heterogeneity_difference, run_converge, run_dispersion, run_materials,
    run_simulation, run_spectra, SimulationSummary,
};
pub use spectra::{assemble_global_operator, spectrum, SpectrumReport};
pub use vtk::write_snapshot;
