//! Exact integer arithmetic for truncated Fourier expansions of scalar- and
//! vector-valued Siegel modular forms.
//!
//! The crate builds theta series of even lattices in arbitrary degree, stores
//! their Fourier coefficients on canonical representatives of half-integral
//! positive semidefinite matrices, detects mod p^m singularity and p-rank,
//! and re-executes the constructive congruence chain (Fourier-Jacobi slice,
//! partial twist, sublattice theta comparison, elementary-divisor scalar
//! extraction) as checkable identities on the truncated data.
//!
//! All arithmetic is exact: matrices and coefficients are integers, linear
//! algebra runs over `BigInt`/`BigRational`, and no verdict ever depends on
//! floating point (floats appear only as starting guesses for integer range
//! endpoints, which are then corrected exactly).

pub mod congruence;
pub mod expansion;
pub mod linalg;
pub mod poly;
pub mod rng;
pub mod symmat;
pub mod theta;
pub mod weylrep;

pub mod cli;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive semidefinite")]
    NotPsd,
    #[error("matrix is not positive definite")]
    NotDefinite,
    #[error("matrix does not have full rank")]
    NotFullRank,
    #[error("invalid highest weight: {0}")]
    InvalidWeight(String),
    #[error("non-integral coordinate in representation matrix (implementation bug)")]
    NonIntegralCoordinate,
    #[error("columns of sublattice basis are dependent")]
    DependentColumns,
    #[error("lattice rank must be even for an integral-weight theta series")]
    OddRank,
    #[error("polynomial coefficient is not pluriharmonic")]
    NotPluriharmonic,
    #[error("polynomial coefficient is not equivariant")]
    NotEquivariant,
    #[error("degenerate (singular) gram matrix for a q-series theta")]
    DegenerateR,
    #[error("unknown lattice name: {0}")]
    UnknownLattice(String),
    #[error("index trace {0} exceeds expansion trace bound {1}")]
    OutOfBound(i64, i64),
    #[error("coefficient at a key inside the bound is missing (strict mode): {0}")]
    MissingKey(String),
    #[error("expansion modulus {0} is incompatible with requested p^m = {1}")]
    IncompatibleModulus(u64, u64),
    #[error("no rank-{0} witness coefficient coprime to p within the trace bound")]
    NoWitness(usize),
    #[error("all elementary-divisor coordinates vanish mod p (truncation too small or bug)")]
    NoUnitCoordinate,
    #[error("operation requires an untwisted, canonically keyed expansion")]
    TwistedExpansion,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
