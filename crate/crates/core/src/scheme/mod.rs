//! Discrete Lax-Oleinik semigroups.

mod evolve;
mod hamiltonian;
mod kernel;
mod params;
mod split;
mod step;

pub use evolve::{evolve, evolve_observed, EvolutionTrace, EvolveOptions, StepRecord, DEFAULT_SNAPSHOT_BUDGET};
pub use hamiltonian::{HamiltonianSpec, Harmonic, Kinetic, Potential, PotentialFn, TabulatedConjugate};
pub use kernel::{build_axis_kernel, build_kernel, Kernel};
pub use params::{CflMode, ConvEngine, PotentialTime, SchemeParams};
pub use split::{split_step_nd, split_step_nd_ordered};
pub use step::{step_fully_discrete, step_fully_discrete_with_stats, step_semidiscrete};
