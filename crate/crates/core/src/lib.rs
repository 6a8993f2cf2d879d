//! Reduction by invariants for symmetric Hamiltonian systems.
//!
//! The library is organised around a small pipeline:
//!
//! * [`poly`] — exact sparse multivariate polynomials over the rationals,
//!   with the expression grammar used by model documents and the CLI.
//! * [`poisson`] — Poisson structures (canonical or polynomial structure
//!   matrices), brackets and Hamiltonian vector fields.
//! * [`model`] — symmetry models: phase space, momentum generators, Hilbert
//!   basis of invariants, relations and inequalities, plus the symbolic
//!   verification of all identities a model asserts about itself.
//! * [`orbitmap`] — the orbit map, rewriting invariant polynomials in the
//!   Hilbert basis, and the induced Poisson structure on the orbit space.
//! * [`semialg`] — semi-algebraic orbit spaces and reduced phase spaces,
//!   membership, singular-point classification and surface sampling.
//! * [`strata`] — numerical rank diagnostics and stratum signatures.
//! * [`releq`] — relative equilibria and formal stability by the
//!   energy-momentum method.
//! * [`catalog`] — the built-in model catalog.

pub mod catalog;
pub mod error;
pub mod linalg;
pub mod model;
pub mod orbitmap;
pub mod poisson;
pub mod poly;
pub mod releq;
pub mod report;
pub mod rng;
pub mod semialg;
pub mod strata;

pub use error::{Error, Result};
pub use model::{SymmetryModel, VerifiedModel};
pub use poisson::PoissonStructure;
pub use poly::Polynomial;

/// Tool version embedded in every output document.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
