//! Dense linear algebra: decompositions, projectors, pencil index and
//! Matrix Market I/O.

pub mod eigen;
pub mod elimination;
pub mod mtx;
pub mod pencil;
pub mod projector;
pub mod svd;

use thiserror::Error;

pub use eigen::{is_positive_definite, DefinitenessCheck, SymmetricEigen};
pub use elimination::{row_reduce, Echelon, Lu};
pub use pencil::{is_regular, pencil_index, shuffle, PencilIndexResult, Shuffle};
pub use projector::{projector_along_kernel, projector_onto_kernel, Projector, ProjectorKind};
pub use svd::{null_space_basis, pseudo_inverse, rank_svd, Svd};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix contains NaN or infinite entries")]
    InvalidMatrix,
    #[error("tolerance must be a non-negative number")]
    InvalidTolerance,
    #[error("shape mismatch: expected {expected}, found {found:?}")]
    ShapeMismatch { expected: String, found: (usize, usize) },
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("matrix pencil is singular (det(λE+A) ≡ 0)")]
    SingularPencil,
    #[error("matrix market: {0}")]
    Parse(String),
}
