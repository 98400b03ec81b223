// Copyright 2026 The gkp-lattice Authors
// SPDX-License-Identifier: Apache-2.0

//! Phase-modulation control of a single atom in a 1D optical lattice:
//! the site's vibrational spectrum, finitely squeezed GKP targets in that
//! basis, split-step propagation under a shaken lattice, GRAPE waveform
//! optimization, phase-space analysis and a dipole-trap feasibility model.
//!
//! Everything internal runs in lattice units: length `1/k_L`, energy `E_R`,
//! time `hbar/E_R`. [`units::UnitSystem`] converts at the edges.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod export;
pub mod feasibility;
pub mod gkp;
pub mod lattice;
pub mod optimizer;
pub mod propagator;
pub mod units;

pub use analysis::{PhaseAxes, PhaseWindow, RobustnessCurve, WignerMap};
pub use error::{Error, Result};
pub use feasibility::{FeasibilityMap, FeasibilitySpec};
pub use gkp::{GkpSpec, GkpWavefunction, LatticeTarget};
pub use lattice::{FockBasis, QuantumState, SimGrid};
pub use optimizer::{ControlProblem, OptimizationResult, OptimizerConfig};
pub use propagator::{ControlWaveform, SplitStep, Trajectory};
pub use units::{AtomSpecies, UnitSystem};
