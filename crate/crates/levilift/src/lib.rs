//! Exact-arithmetic machinery for lifting semisimple character data.
//!
//! Given a p-adic general linear group G = GL(n, F), a finite group Γ of
//! F-automorphisms of order prime to p, and the fixed-point group
//! H = G^[Γ], this crate constructs, for any character-datum for H, a
//! Γ-stable character-datum for G whose fixed point is a refactorization
//! of the input — and verifies every intermediate invariant exactly
//! (genericity, sharp/flat decomposition, Γ-stability, refactorization,
//! semisimple-character agreement).
//!
//! Everything is computed in exact arithmetic: field elements are digit
//! expansions in a tame extension tower of Q_p, depths and valuations are
//! rationals, and character values live in Q/Z. There is no floating
//! point anywhere in the data plane.
//!
//! The crate is organized along the pipeline:
//!
//! * [`local_field`] — digit-exact arithmetic in the splitting field E/F,
//!   its Galois action, traces, and the additive character ψ.
//! * [`root_datum`] — torus coordinates for GL(n), twisted Levi subgroups
//!   as Galois-stable partitions, dual elements, genericity, and the
//!   sharp/flat decomposition.
//! * [`characters`] — quasicharacters as graded realizer lists.
//! * [`datum`] — character-data, Γ-stability, restriction to the fixed
//!   point group, and refactorization checks.
//! * [`lifting`] — the constructive lifting loop and its audit trail.
//! * [`scenario`] / [`ops`] / [`report`] — the JSON scenario format and
//!   the verification commands and reports behind the `levi-lift` CLI.
//! * [`sampling`] — seeded generation of rational Γ-fixed test arguments.
//! * [`book`] — the user guide, whose code samples run as doctests.

pub mod book;
pub mod error;
pub mod rat;

pub mod local_field;
pub mod root_datum;
pub mod characters;
pub mod datum;
pub mod lifting;
#[cfg(test)]
pub(crate) mod test_fixtures;
pub mod ops;
pub mod report;
pub mod sampling;
pub mod scenario;

pub use error::{Error, Result};
pub use rat::{Rat, QZ};
