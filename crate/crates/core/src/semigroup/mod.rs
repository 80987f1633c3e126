//! Linear semigroup on `N`-periodic grids: Bloch transform, propagator and decay checks.

mod decay;
mod grid;
mod propagator;
mod sums;
mod transform;

pub(crate) use decay::linear_fit;
pub use decay::{linear_decay_series, log_time_grid, measure_decay, DecayFit, DecayRow};
pub use grid::GridFunction;
pub use propagator::{
    apply_semigroup, decompose_semigroup, sp_apply, CutoffSpec, DuhamelIntegrals, LinearPropagator, PropagatorOptions, RemainderParts,
    SemigroupParts,
};
pub use sums::{
    continuum_integral, crossover_probe, lattice_sum, sum_bound_check, CrossoverProbe, SumBoundRow, SumBoundTable,
};
pub use transform::{bloch_layout, bloch_transform, inverse_bloch, parseval_gap, BlochDecomposition};
