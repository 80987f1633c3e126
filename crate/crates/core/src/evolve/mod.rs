//! Nonlinear evolution of perturbed wave trains and extraction of their modulation.
mod config;
mod diagnostics;
mod extract;
mod io;
mod run;
mod stepper;

pub use config::{
    initial_perturbation, ExtractionMode, ExtractionSpec, PerturbationShape, PerturbationSpec, Scheme, SimulationConfig,
    TimeCutoff,
};
pub use diagnostics::{
    crossover_fit, damping_check, envelope, envelope_slope, phase_convergence, zeta, CrossoverReport, DampingReport,
    DampingRow, FitSummary, PhaseReport,
};
pub use extract::{
    field_derivative, fornberg_weights, nonlinear_residuals, series_derivative, DuhamelReport, Extractor, Modulation,
    ModulationTrace, Residuals,
};
pub use io::{read_snapshot, read_trace_csv, write_snapshot, write_trace_csv, TRACE_COLUMNS};
pub use run::{
    best_translate, integrate, resolve_profile, run_experiment, Agreement, Check, ExperimentOutput, ExperimentReport,
    Snapshot, TraceRow, REPORT_SCHEMA_VERSION,
};
pub use stepper::{step, Stepper};
