//! Numerical core for stability experiments on ternary Banach algebras.
//!
//! The algebra is the space of `k x k` complex matrices with the triple
//! product `[abc] = a * b * c` and the operator norm. Maps `A -> A` are
//! represented as small expression trees ([`EvaluableMap`]) so that the
//! dilation iterates `3^-n f(3^n x)` and `3^n f(x / 3^n)` can be evaluated
//! exactly at any point without storing function tables.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the ledger
//! writer and the command line live in the `ternlab` crate.
#![no_std]
#![deny(rust_2018_idioms, unused_must_use)]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod algebra;
pub mod error;
pub mod experiment;
pub mod maps;
pub mod perturbation;
pub mod rng;
pub mod selftest;
pub mod stabilizer;
pub mod verifier;

#[cfg(feature = "serde")]
mod serde_float;

pub use algebra::{operator_norm, random_element, ternary_product, AlgebraDescriptor, Element};
pub use error::{Error, Result};
pub use experiment::{run_experiment, Experiment, ProbeSpec, RunOutcome, RunStatus};
pub use maps::{
    generalized_distance, generalized_distance_capped, Arity, ControlFunction, DilationMode,
    EvaluableMap, ProbeSet,
};
pub use perturbation::{
    make_inner_derivation, make_perturbed_map, verify_premise, PerturbationSpec, PremiseReport,
};
pub use stabilizer::{
    apply_j, fixed_point_alternative_check, stabilize, AlternativeReport, StabilityCertificate,
    StabilizerConfig,
};
pub use verifier::{
    bound_check, corollary_check, derivation_residual, jensen_residual, jordan_residual,
    residual_report, substitution_check, BoundCheck, LedgerEntry, Residual, ResidualReport,
};

pub use num_complex::Complex64;
