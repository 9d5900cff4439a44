//! Positivity-preserving operator exponentials and sum-of-squares
//! certificates for polynomials.
//!
//! The crate builds linear operators `A` on `ℝ[x₁,…,xₙ]`, evaluates
//! `e^{tA}` on finite invariant subspaces, and checks with Gram-matrix
//! certificates that `e^{tA}` maps given nonnegative polynomials into the
//! sum-of-squares cone.

pub mod builtin;
pub mod glab;
pub mod linalg;
pub mod linops;
pub mod moments;
pub mod poly;
pub mod sos;
pub mod transport;

pub use linops::{
    exp_apply, expm, op_apply, rank_one_exp, restrict_matrix, OperatorError, OperatorExpr, OperatorMatrix,
};
pub use moments::{
    functional_apply, gaussian_moment_full, gaussian_moment_orthant, riesz_apply, Domain, FunctionalError,
    FunctionalKind, LinearFunctional, MomentTable, Parity,
};
pub use poly::{basis_size, monomial_basis, Degree, GradedBasis, MultiIndex, PolyError, Polynomial};
pub use sos::{
    build_gram_problem, certify_sos, export_sdpa, interior_point, validate_certificate, CertifyConfig,
    CertifyOutcome, GramCertificate, GramProblem,
};
