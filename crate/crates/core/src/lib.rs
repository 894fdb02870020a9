//! Hamilton-Jacobi solver built on the fully discrete Lax-Oleinik semigroup.
//!
//! The equation `∂ₜu + K(∇u) + V(t,x) = 0` is advanced by one time step `τ`
//! through a (min,plus)-convolution of the grid solution with the kinetic cost
//! `x ↦ τ·K*(x/τ)`, followed by subtraction of `τ·V`. The convolution engine in
//! [`minplus`] splits its operand into maximal convex and concave runs and
//! convolves each run against the convex kernel in linear time, so one step
//! costs `O(c·N)` where `c` is the number of runs.
//!
//! Modules:
//!
//! * [`grid`]: sampled functions on uniform grids ([`GridFn`], [`GridTensor`]).
//! * [`minplus`]: naive, convex×convex, convex×concave and block-decomposed
//!   (min,plus)-convolutions.
//! * [`scheme`]: Hamiltonians, kernels, the discrete semigroup steps,
//!   multi-step evolution and dimensional splitting.
//! * [`weakkam`]: long-time analysis, effective Hamiltonian estimators and the
//!   min-plus period matrix.

pub mod error;
pub mod grid;
pub mod minplus;
pub mod scheme;
pub mod weakkam;

pub use error::{Error, Result};
pub use grid::{GridFn, GridTensor, Slope};
pub use minplus::{
    conv_convex_concave, conv_convex_convex, conv_fast, conv_naive, decompose, min_pointwise,
    Block, BlockDecomposition, BlockKind, FastConvolution,
};
pub use scheme::{
    build_kernel, evolve, evolve_observed, split_step_nd, step_fully_discrete, step_semidiscrete, CflMode,
    ConvEngine, EvolutionTrace, EvolveOptions, HamiltonianSpec, Harmonic, Kernel, Kinetic,
    Potential, PotentialTime, SchemeParams, StepRecord, TabulatedConjugate,
};
pub use weakkam::{
    build_period_matrix, detect_eventual_periodicity, eigenvalue_karp, estimate_hbar_drift,
    estimate_hbar_matrix, fixed_point_residual, EffectiveHEstimate, EstimateMethod, MinPlusMatrix,
};
