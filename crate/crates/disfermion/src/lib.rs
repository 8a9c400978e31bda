// SPDX-License-Identifier: MIT OR Apache-2.0

//! Lattice fermions built from Kasteleyn matrices of dimer graphs on Z².
//!
//! The crate is layered bottom-up:
//!
//! * [`lattice`]: colours, domains, dual contours.
//! * [`dimers`]: induced graphs, Kasteleyn matrices, cover counting.
//! * [`observables`]: the path-sum definition of fermion pair observables.
//! * [`grassmann`]: exterior algebra and Berezin integration.
//! * [`correlators`]: inverse-Kasteleyn correlations and discrete derivatives.
//! * [`greens`]: sublattice Green's functions and the full-plane potential kernel.
//! * [`monomials`]: discrete Laurent monomials and contour integrals.
//! * [`fields`]: local fields, evaluation, probe-based nullity, current modes.
//! * [`virasoro`]: normal ordering, Sugawara modes and commutator checks.
//!
//! [`exact`] and [`linalg`] hold the shared exact rings and solvers;
//! [`suite`] runs the acceptance battery.

pub mod correlators;
pub mod dimers;
pub mod exact;
pub mod fields;
pub mod grassmann;
pub mod greens;
pub mod lattice;
pub mod linalg;
pub mod monomials;
pub mod observables;
pub mod suite;
pub mod virasoro;

pub use exact::{C64, Q, QI};
pub use lattice::{Color, Domain, DualContour, LatticePoint};
