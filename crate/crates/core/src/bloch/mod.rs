//! Bloch-operator spectra: Hill matrices, the critical branch, stability verdicts and
//! subharmonic gaps.

mod critical;
mod gap;
mod operator;
mod spectrum;
mod stability;

pub use critical::{critical_curve, critical_index, critical_mode_data, fit_expansion, CriticalCurve};
pub use gap::{subharmonic_spectrum, SubharmonicGapReport, TaggedEigenvalue};
pub use operator::{assemble_bloch, derivative_vector, BlochMatrix, BlochOperator};
pub use spectrum::{
    angle_sine, bloch_spectrum, inner, norm, omega_grid, sort_spectrum, CriticalMode, EigenPair,
    SubharmonicFrequencyGrid,
};
pub use stability::{
    scan_frequencies, spectra, verify_diffusive_stability, ConditionDetails, ScanPoint, StabilityOptions,
    StabilityReport,
};
