use thiserror::Error;

use crate::fit::FitError;
use crate::linalg::LinalgError;
use crate::mna::MnaError;
use crate::netlist::ParseError;
use crate::sim::SimError;
use crate::topology::TopologyError;

/// Top-level error with stable machine-readable codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
    #[error(transparent)]
    Model(#[from] MnaError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn linalg_code(e: &LinalgError) -> &'static str {
    match e {
        LinalgError::InvalidMatrix => "InvalidMatrix",
        LinalgError::InvalidTolerance => "InvalidTolerance",
        LinalgError::ShapeMismatch { .. } => "ShapeMismatch",
        LinalgError::Singular => "Singular",
        LinalgError::SingularPencil => "SingularPencil",
        LinalgError::Parse(..) => "MatrixParseError",
    }
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "ParseError",
            Error::Model(m) => match m {
                MnaError::IncompleteModel(_) => "IncompleteModel",
                MnaError::ShapeMismatch(_) => "ShapeMismatch",
                MnaError::ReductionUnavailable(_) => "ReductionUnavailable",
                MnaError::Topology(TopologyError::NotConnected(_)) => "NotConnected",
                MnaError::Topology(TopologyError::InvalidBranch { .. }) => "InvalidBranch",
                MnaError::Topology(TopologyError::Linalg(l)) | MnaError::Linalg(l) => linalg_code(l),
            },
            Error::Fit(f) => match f {
                FitError::InvalidGrid(_) => "InvalidGrid",
                FitError::GaugeError(_) => "GaugeError",
                FitError::InvalidMaterial(_) => "InvalidMaterial",
                FitError::BuildError(_) => "BuildError",
                FitError::AssumptionViolated(_) => "AssumptionViolated",
                FitError::DegenerateDevice(_) => "DegenerateDevice",
                FitError::Linalg(l) => linalg_code(l),
            },
            Error::Sim(s) => match s {
                SimError::StepFailure(_) => "StepFailure",
                SimError::InvalidInput(_) => "InvalidInput",
                SimError::Linalg(l) => linalg_code(l),
            },
            Error::Linalg(l) => linalg_code(l),
            Error::Usage(_) => "UsageError",
            Error::Io { .. } => "IoError",
            Error::Json(_) => "SerializationError",
        }
    }

    /// Process exit status: 2 input, 3 build/model, 4 numerics, 5 I/O.
    pub fn exit_status(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Usage(_) => 2,
            Error::Model(_) | Error::Fit(_) => 3,
            Error::Sim(_) | Error::Linalg(_) => 4,
            Error::Io { .. } | Error::Json(_) => 5,
        }
    }
}
