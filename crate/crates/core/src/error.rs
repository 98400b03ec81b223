// Copyright 2026 The gkp-lattice Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A grid or window does not hold enough of the state's probability.
    #[error("insufficient domain: {0}")]
    InsufficientDomain(String),

    #[error("propagation diverged at step {step}")]
    PropagationDiverged { step: usize },

    /// Population reached the outer edge of a multi-period grid.
    #[error("boundary flux {weight:.3e} exceeds tolerance at step {step}")]
    BoundaryFlux { step: usize, weight: f64 },

    /// Fewer bound states than requested.
    #[error("requested {requested} bound states but only {found} are bound")]
    BoundStateShortfall { requested: usize, found: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Wavelength at or outside the D1-D2 window.
    #[error("wavelength {wavelength:.6e} m outside the open window ({lo:.6e}, {hi:.6e}) m")]
    OutOfRange { wavelength: f64, lo: f64, hi: f64 },

    #[error("unreachable: {0}")]
    Unreachable(String),

    #[error("unknown species `{0}`")]
    UnknownSpecies(String),

    #[error("species data: {0}")]
    SpeciesData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
