//! Exact-arithmetic toolkit for unipotent orbits on arithmetic quotients.
//!
//! Everything that feeds a verdict — heights, per-place norms, flag
//! envelopes, Diophantine tests, lift congruences — is computed in exact
//! rational (or p-adic) arithmetic. Floating point shows up only in
//! regression fits and human-readable report fields.
//!
//! Module map:
//! - [`exact`]: places, norms, the product size function, unit rescaling,
//!   exterior algebra, primitive integral vectors;
//! - [`lie`]: brackets, Killing forms, radicals, nilpotency, normalizers,
//!   and the parabolic-from-nilpotent construction inside `sl_N`;
//! - [`subgroups`]: rational subgroup descriptors, the orbit representation,
//!   stabilizers, Diophantine and tube tests, conjugate catalogs;
//! - [`lattice`]: adjoint-lattice minima, compact-part membership, reduction
//!   to small representatives, flag profiles, obstruction detection;
//! - [`measure`]: polynomial sublevel measures under Lebesgue and friendly
//!   measures, with certified brackets;
//! - [`certify`]: Nullstellensatz bound calculators and certificate checks,
//!   local lower bounds, p-adic Newton lifting;
//! - [`orbit`]: exact orbit scans, the trichotomy harness, obstruction and
//!   parabolic pipelines.

pub mod exact;
pub mod lie;
pub mod linalg;
pub mod rat;
pub mod subgroups;
pub mod lattice;
pub mod measure;
pub mod certify;
pub mod orbit;

pub use rat::Rat;

/// Crate version, embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
