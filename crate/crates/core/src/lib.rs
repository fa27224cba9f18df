//! Numerical verification toolkit for a half-filled fermion chain coupled to
//! optical phonons on a periodic lattice Λ = {−ℓ, …, ℓ−1}.
//!
//! The crate builds every operator of the model as an explicit sparse matrix
//! at desk scale, realizes two self-dual cones (pointwise positivity of phonon
//! wavefunctions on a position grid, and per-sector matrix positivity after
//! the hole-particle transform), and checks the order-preserving operator
//! inequalities, ergodicity paths, energy/susceptibility/infrared bounds, and
//! the long-range-order threshold integral against independent oracles.
//!
//! Layout:
//! - [`linalg`]: dense/sparse kernels, eigensolvers, quadrature.
//! - [`model`]: parameters, interaction functions, hypothesis checks.
//! - [`fock`]: basis enumeration, charge sectors, phonon representations.
//! - [`operators`]: Jordan–Wigner matrices and Hamiltonian assembly.
//! - [`transforms`]: hole-particle and polaron unitaries, antiunitaries,
//!   per-sector vectorization.
//! - [`cones`]: cone membership and operator-inequality verdicts.
//! - [`spectral`]: ground states, semigroups, pseudo-resolvents, product
//!   integrals.
//! - [`paths`]: cluster decomposition, vacuum-connection words, Dyson terms.
//! - [`observables`]: correlators, string order, field inequalities.
//! - [`irbound`]: the momentum-space bound σ and its threshold t*.

pub mod cones;
pub mod fock;
pub mod irbound;
pub mod linalg;
pub mod model;
pub mod observables;
pub mod operators;
pub mod paths;
pub mod spectral;
pub mod transforms;

pub use linalg::{CMat, CVec, C64};
