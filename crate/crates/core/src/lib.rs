//! Skew braces on finite abelian p-groups.
//!
//! The additive side of every brace here is a finite abelian p-group given
//! in coordinate form; the multiplicative (circle) side is induced by a
//! gamma function, a map from the group into its automorphism group
//! satisfying the twisted cocycle equation. The crate builds such braces,
//! validates them, enumerates them through regular subgroups of the
//! holomorph, and constructs the truncated-cyclotomic family of examples
//! with maximal multiplicative order gap.

pub mod brace;
pub mod gamma;
pub mod holomorph;
pub mod morphism;
pub mod pgroup;
pub mod sweep;

pub use brace::{
    AxiomReport, Brace, BraceError, OmegaContainment, RankTransferReport, RankTransferVerdict,
    SweepMode, TriadReport,
};
pub use gamma::{GammaError, GammaFunction, GammaValidation};
pub use holomorph::{
    all_automorphisms, automorphism_count, enumerate_regular_subgroups, gamma_to_subgroup,
    naive_regular_subgroups, nu_of, Fingerprint, HolElement, HolError, RegularSubgroup,
};
pub use morphism::{Automorphism, EndoMatrix, MorphismError};
pub use pgroup::{
    abelian_invariants_from_histogram, all_subgroups, omega_set, order_histogram, parse_element,
    parse_spec, span, GroupElement, GroupError, GroupSpec, OrderHistogram, Subgroup,
};
pub use sweep::SweepCfg;

/// Umbrella error type: every fallible public operation in the crate maps
/// into one of these.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Morphism(#[from] MorphismError),
    #[error(transparent)]
    Gamma(#[from] GammaError),
    #[error(transparent)]
    Brace(#[from] BraceError),
    #[error(transparent)]
    Holomorph(#[from] HolError),
}
