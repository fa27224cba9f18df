//! Numeric kernels shared by every module: complex dense helpers, a CSR
//! sparse type with deterministic assembly, Lanczos/CG/Krylov iterations,
//! and scalar quadrature rules.

mod dense;
mod krylov;
mod quad;
mod sparse;

pub use dense::{
    expm, expm_hermitian, hermitian_eigen, hermiticity_residual, max_abs_entry, min_eig_hermitian,
    CMat, CVec, C64,
};
pub use krylov::{
    axpy, expv, lanczos_lowest, pinv_apply, vdot, vnorm, LanczosOutcome, LinOp, PinvOutcome,
};
pub use quad::{
    adaptive_simpson, gauss_hermite, gauss_legendre, richardson_trapezoid, trapezoid_sequence,
};
pub use sparse::{CooBuilder, CsMat};
