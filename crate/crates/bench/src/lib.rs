// Copyright 2026 The gkp-lattice Authors
// SPDX-License-Identifier: Apache-2.0

//! Shared fixtures for the benchmarks.

use gkp_core::lattice::{build_grid, eigensolve};
use gkp_core::optimizer::{make_seed, ControlProblem, OptimizerConfig};
use gkp_core::units::{AtomSpecies, UnitSystem};
use gkp_core::FockBasis;

pub const DEPTH: f64 = 1500.0;

pub fn basis(periods: usize, points_per_period: usize, count: usize) -> FockBasis {
    eigensolve(
        &build_grid(periods, points_per_period).unwrap(),
        DEPTH,
        Some(count),
    )
    .unwrap()
}

/// Ground state to the first excited level over `duration` seconds at the
/// default sample rate and step.
pub fn problem(duration: f64) -> (ControlProblem, Vec<f64>) {
    let b = basis(1, 128, 4);
    let units = UnitSystem::new(&AtomSpecies::rubidium87(), 785e-9).unwrap();
    let cfg = OptimizerConfig {
        duration,
        n_samples: (duration / 0.5e-6) as usize,
        ..OptimizerConfig::default()
    };
    let p = ControlProblem::new(b.grid, DEPTH, units, &b.state(0), &b.state(1), &cfg).unwrap();
    let seed = make_seed(&cfg, 0).unwrap();
    (p, seed)
}
