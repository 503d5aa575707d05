//! Finite integration on small Cartesian grids and the three field devices
//! (full-wave, electroquasistatic, eddy-current) as descriptor elements.

mod devices;
pub mod grid;
pub mod material;

use thiserror::Error;

use crate::linalg::LinalgError;

pub use devices::{
    boundary_split, build_em_device, build_eqs_device, build_mqs_device, tree_cotree, winding_from_coil, BoundarySplit,
    Device, DeviceChecks, EmChecks, EqsChecks, MqsChecks, MqsOptions,
};
pub use grid::{build_grid_operators, Boundary, FaceKind, GridOperators, StaggeredGrid, DESK_SCALE_CAP};
pub use material::{build_material_matrices, MaterialField, MaterialMatrices, Region};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("gauge error: {0}")]
    GaugeError(String),
    #[error("invalid material: {0}")]
    InvalidMaterial(String),
    #[error("build error: {0}")]
    BuildError(String),
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("degenerate device: {0}")]
    DegenerateDevice(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
