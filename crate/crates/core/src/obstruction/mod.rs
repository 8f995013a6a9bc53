//! Computable obstructions to lifting: the first Chern number of complex
//! line bundles over `S²`, the mod-2 criterion for line bundles on tori and
//! the holonomy profile that realises `w₁`.

mod chern;
mod torus;

pub use chern::{
    chern_raw, lattice_chern_number, plaquette_phases, pullback_invariance_report, ChernResult,
    PullbackInvarianceReport,
};
pub use torus::{
    nonzero_bit_vectors, subgroup_generators, torus_criterion, torus_sweep, w1_profile, SweepRecord,
    TorusCriterionResult,
};
