//! Resonance laboratory for half-line Schrödinger operators with
//! complex potentials supported in the unit interval.
//!
//! The crate covers the forward problem (Jost solutions and their
//! zeros), the factorized model built from a finite zero set, the
//! transformation-operator kernels linking two potentials, and the
//! inverse pipeline that rebuilds tail integrals of a potential from
//! resonance data. A small CLI (`resolab`) drives the same machinery
//! from config files.
//!
//! See the `book/` directory for a guided tour; every snippet there is
//! compiled and run as a doc-test of the companion guide crate.

pub mod bounds;
pub mod factorization;
pub mod harness;
pub mod jost;
pub mod kernels;
pub mod numerics;
pub mod potential;
pub mod reconstruction;
pub mod zeros;

pub use bounds::{
    fit_constant, jensen_bound, kappa, theorem31_envelope, theorem61_envelope, BoundParams,
};
pub use factorization::{
    elementary_factor, normalize, ratio_w, tail_bound_pi, truncated_product, FactorizedJost,
};
pub use harness::{StabilityReport, StabilityRow, SweepConfig};
pub use jost::{jost_eval, jost_function, ForwardJost, JostEvaluation, JostModel};
pub use kernels::{
    b_from_boundary, boundary_b0, compose_b, k_kernel, l_kernel, tail_integral, volterra_residual,
    KernelKind, KernelMeta, TriangularKernelGrid,
};
pub use potential::Potential;
pub use reconstruction::{
    band_split_diff, fourier_invert_diff, pv_tail_kernel, reconstruct_from_zeros,
    BoundaryKernelDiff, ReconstructionError, ReconstructionResult,
};
pub use zeros::{count_zeros, find_zeros, perturb_zeros, Zero, ZeroKind, ZeroSet};
