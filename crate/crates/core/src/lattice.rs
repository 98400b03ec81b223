// Copyright 2026 The gkp-lattice Authors
// SPDX-License-Identifier: Apache-2.0

//! Spatial grid, lattice potential and the bound vibrational basis of one
//! lattice site.
//!
//! The grid is periodic with a spectral (plane-wave) kinetic operator, the
//! same discretization the split-step propagator uses, so the eigenstates
//! computed here are stationary under the undriven propagator up to the
//! splitting error.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Minimum probability inside the central period for a state of a
/// multi-period grid to count as a single-site state.
pub const CENTRAL_WEIGHT_MIN: f64 = 0.9;

/// Uniform periodic grid spanning an odd number of lattice periods (`pi` in
/// lattice units), centred on the potential minimum at `x = pi/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimGrid {
    pub n_points: usize,
    pub periods: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
}

/// Centre of the site the grid is built around.
pub const SITE_CENTER: f64 = PI / 2.0;

impl SimGrid {
    pub fn span(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points as i64;
        let dk = 2.0 * PI / self.span();
        (0..n)
            .map(|m| {
                let m = if m < (n + 1) / 2 { m } else { m - n };
                m as f64 * dk
            })
            .collect()
    }

    /// Index of the grid point mirrored through the site centre.
    pub fn mirror(&self, j: usize) -> usize {
        (self.n_points - j) % self.n_points
    }

    /// Whether `x` lies in the central lattice period.
    pub fn in_central_period(&self, x: f64) -> bool {
        (x - SITE_CENTER).abs() <= PI / 2.0 + 1e-12
    }

    /// Whether grid point `j` is in the outer 5% of the span on either side.
    pub fn in_outer_band(&self, j: usize) -> bool {
        let edge = (0.05 * self.n_points as f64).ceil() as usize;
        j < edge || j + edge >= self.n_points
    }
}

/// Builds a grid of `periods` lattice periods. The point count is
/// `periods * points_per_period` rounded up to a power of two.
pub fn build_grid(periods: usize, points_per_period: usize) -> Result<SimGrid> {
    if periods == 0 || periods % 2 == 0 {
        return Err(invalid(format!("periods must be odd, got {periods}")));
    }
    if points_per_period < 64 {
        return Err(invalid(format!(
            "points_per_period must be >= 64, got {points_per_period}"
        )));
    }
    let n_points = (periods * points_per_period).next_power_of_two();
    let span = periods as f64 * PI;
    let x_min = SITE_CENTER - span / 2.0;
    Ok(SimGrid {
        n_points,
        periods,
        x_min,
        x_max: x_min + span,
        dx: span / n_points as f64,
    })
}

/// Samples `(U_r/2) cos(2(x + u))`: the site centre sits at `-U_r/2` and
/// the barrier top at `+U_r/2`.
pub fn potential(grid: &SimGrid, depth: f64, shift: f64) -> Vec<f64> {
    (0..grid.n_points)
        .map(|j| 0.5 * depth * (2.0 * (grid.x(j) + shift)).cos())
        .collect()
}

/// Derivative of the potential with respect to the shift `u`.
pub fn potential_shift_derivative(grid: &SimGrid, depth: f64, shift: f64) -> Vec<f64> {
    (0..grid.n_points)
        .map(|j| -depth * (2.0 * (grid.x(j) + shift)).sin())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Representation {
    Grid(SimGrid),
    Fock { dim: usize },
}

/// A pure state, either sampled on a grid (`sum |psi|^2 dx = 1`) or given
/// by coefficients in a Fock basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumState {
    pub repr: Representation,
    pub amplitudes: Vec<Complex64>,
}

impl QuantumState {
    /// Normalizes the amplitudes. Fails on a zero vector.
    pub fn on_grid(grid: SimGrid, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.n_points {
            return Err(Error::GridMismatch(format!(
                "{} amplitudes for a {}-point grid",
                amplitudes.len(),
                grid.n_points
            )));
        }
        let mut s = Self {
            repr: Representation::Grid(grid),
            amplitudes,
        };
        s.normalize()?;
        Ok(s)
    }

    pub fn in_fock(amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        let mut s = Self {
            repr: Representation::Fock { dim },
            amplitudes,
        };
        s.normalize()?;
        Ok(s)
    }

    pub fn grid(&self) -> Option<&SimGrid> {
        match &self.repr {
            Representation::Grid(g) => Some(g),
            Representation::Fock { .. } => None,
        }
    }

    fn measure(&self) -> f64 {
        match &self.repr {
            Representation::Grid(g) => g.dx,
            Representation::Fock { .. } => 1.0,
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.measure()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sqr();
        if !(n > 0.0) || !n.is_finite() {
            return Err(invalid("cannot normalize a zero or non-finite state"));
        }
        let s = 1.0 / n.sqrt();
        self.amplitudes.iter_mut().for_each(|a| *a *= s);
        Ok(())
    }

    /// `<self|other>`; both states must share a representation.
    pub fn inner(&self, other: &QuantumState) -> Result<Complex64> {
        if self.repr != other.repr {
            return Err(invalid("inner product between different representations"));
        }
        let sum: Complex64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(sum * self.measure())
    }

    /// Probability density on the grid.
    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Bound vibrational eigenstates of a single site, ordered by energy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FockBasis {
    pub depth: f64,
    pub grid: SimGrid,
    /// Energies in `E_R`, ascending.
    pub energies: Vec<f64>,
    /// Real eigenfunctions on the grid, normalized with the `dx` measure.
    pub states: Vec<Vec<f64>>,
    /// Number of states of the site below the barrier top.
    pub n_bound: usize,
    /// Probability inside the central period, per state.
    pub central_weights: Vec<f64>,
}

impl FockBasis {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn barrier_top(&self) -> f64 {
        0.5 * self.depth
    }

    pub fn state(&self, n: usize) -> QuantumState {
        QuantumState {
            repr: Representation::Grid(self.grid),
            amplitudes: self.states[n]
                .iter()
                .map(|&v| Complex64::new(v, 0.0))
                .collect(),
        }
    }

    /// First `n` states of the basis.
    pub fn truncated(&self, n: usize) -> Result<FockBasis> {
        if n > self.len() {
            return Err(Error::BoundStateShortfall {
                requested: n,
                found: self.len(),
            });
        }
        Ok(FockBasis {
            depth: self.depth,
            grid: self.grid,
            energies: self.energies[..n].to_vec(),
            states: self.states[..n].to_vec(),
            n_bound: self.n_bound,
            central_weights: self.central_weights[..n].to_vec(),
        })
    }

    /// Synthesizes the grid state `sum_n c_n |n>`, normalized.
    pub fn to_grid(&self, coefficients: &[Complex64]) -> Result<QuantumState> {
        if coefficients.len() > self.len() {
            return Err(invalid(format!(
                "{} coefficients for a {}-state basis",
                coefficients.len(),
                self.len()
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); self.grid.n_points];
        for (c, phi) in coefficients.iter().zip(&self.states) {
            for (a, &p) in amps.iter_mut().zip(phi) {
                *a += c * p;
            }
        }
        QuantumState::on_grid(self.grid, amps)
    }

    /// Fock populations of a grid state.
    pub fn populations(&self, state: &QuantumState) -> Result<Vec<f64>> {
        let (c, _) = project_to_fock(state, self)?;
        Ok(c.iter().map(|c| c.norm_sqr()).collect())
    }
}

/// Periodic spectral kinetic matrix `-d^2/dx^2`; entry `(j, l)` depends only
/// on `(j - l) mod n`.
fn kinetic_kernel(grid: &SimGrid) -> Vec<f64> {
    let n = grid.n_points;
    let k = grid.wavenumbers();
    let mut buf: Vec<Complex64> = k.iter().map(|&k| Complex64::new(k * k, 0.0)).collect();
    let fft = FftPlanner::new().plan_fft_inverse(n);
    fft.process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

fn hamiltonian(grid: &SimGrid, depth: f64) -> DMatrix<f64> {
    let n = grid.n_points;
    let kernel = kinetic_kernel(grid);
    let v = potential(grid, depth, 0.0);
    DMatrix::from_fn(n, n, |j, l| {
        let d = (j + n - l) % n;
        kernel[d] + if j == l { v[j] } else { 0.0 }
    })
}

/// Eigenvalues of the grid Hamiltonian, ascending.
pub fn spectrum(grid: &SimGrid, depth: f64) -> Vec<f64> {
    let mut e: Vec<f64> = hamiltonian(grid, depth)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    e.sort_by(|a, b| a.total_cmp(b));
    e
}

/// Number of single-site states below the barrier top.
///
/// On a grid of `P` periods every band holds exactly `P` states, so the
/// count is the number of bands whose mean energy lies below the barrier.
pub fn count_bound(grid: &SimGrid, depth: f64) -> usize {
    let e = spectrum(grid, depth);
    e.chunks(grid.periods)
        .take_while(|band| band.iter().sum::<f64>() / (band.len() as f64) < 0.5 * depth)
        .count()
}

/// Fixes the overall sign so that the outermost lobe on the right of the
/// site is positive, matching the Hermite-function convention.
fn fix_sign(grid: &SimGrid, v: &mut [f64]) {
    let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let threshold = 1e-3 * peak;
    let center = grid.n_points / 2;
    let end = if grid.periods == 1 {
        grid.n_points
    } else {
        // right edge of the central period
        ((SITE_CENTER + PI / 2.0 - grid.x_min) / grid.dx).floor() as usize
    };
    if let Some(j) = (center..end.min(grid.n_points))
        .rev()
        .find(|&j| v[j].abs() > threshold)
    {
        if v[j] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Diagonalizes the undriven single-site Hamiltonian and returns its
/// vibrational states.
///
/// With `count = None` every bound state is returned; with `Some(n)` the
/// lowest `n` states are returned and `n > n_bound` is an error. On grids
/// of several periods each band is localized onto the central site by
/// diagonalizing the central-period projector within the band, and states
/// with less than [`CENTRAL_WEIGHT_MIN`] of their probability inside the
/// central period are dropped.
pub fn eigensolve(grid: &SimGrid, depth: f64, count: Option<usize>) -> Result<FockBasis> {
    if !(depth > 0.0) || !depth.is_finite() {
        return Err(invalid(format!("lattice depth must be > 0, got {depth}")));
    }
    let n = grid.n_points;
    let periods = grid.periods;
    let h = hamiltonian(grid, depth);
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let central: Vec<bool> = (0..n).map(|j| grid.in_central_period(grid.x(j))).collect();
    let barrier = 0.5 * depth;

    let mut energies = Vec::new();
    let mut states = Vec::new();
    let mut weights = Vec::new();
    let mut n_bound = 0;
    let wanted = count.unwrap_or(usize::MAX);

    for band in order.chunks(periods) {
        if band.len() < periods {
            break;
        }
        // Localize within the band: the dominant eigenvector of the central
        // projector restricted to the band subspace.
        let vecs: Vec<Vec<f64>> = band
            .iter()
            .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect();
        let mut local = if periods == 1 {
            vecs[0].clone()
        } else {
            let proj = DMatrix::from_fn(periods, periods, |a, b| {
                (0..n)
                    .filter(|&j| central[j])
                    .map(|j| vecs[a][j] * vecs[b][j])
                    .sum::<f64>()
            });
            let pe = SymmetricEigen::new(proj);
            let best = (0..periods)
                .max_by(|&a, &b| pe.eigenvalues[a].total_cmp(&pe.eigenvalues[b]))
                .unwrap_or(0);
            let mut w = vec![0.0; n];
            for (a, v) in vecs.iter().enumerate() {
                let c = pe.eigenvectors[(a, best)];
                w.iter_mut().zip(v).for_each(|(w, v)| *w += c * v);
            }
            w
        };
        let norm: f64 = local.iter().map(|v| v * v).sum::<f64>().sqrt();
        local.iter_mut().for_each(|v| *v /= norm);
        let energy = {
            let hv = &h * nalgebra::DVector::from_column_slice(&local);
            local.iter().zip(hv.iter()).map(|(a, b)| a * b).sum::<f64>()
        };
        let weight: f64 = (0..n)
            .filter(|&j| central[j])
            .map(|j| local[j] * local[j])
            .sum();

        let mean = band.iter().map(|&i| eig.eigenvalues[i]).sum::<f64>() / periods as f64;
        if mean >= barrier {
            break;
        }
        if weight < CENTRAL_WEIGHT_MIN {
            continue;
        }
        n_bound += 1;
        if states.len() < wanted {
            fix_sign(grid, &mut local);
            let scale = 1.0 / grid.dx.sqrt();
            local.iter_mut().for_each(|v| *v *= scale);
            energies.push(energy);
            states.push(local);
            weights.push(weight);
        }
    }

    if let Some(req) = count {
        if req > n_bound {
            return Err(Error::BoundStateShortfall {
                requested: req,
                found: n_bound,
            });
        }
    }

    Ok(FockBasis {
        depth,
        grid: *grid,
        energies,
        states,
        n_bound,
        central_weights: weights,
    })
}

/// Coefficients `c_n = <n|psi>` and the leakage `1 - sum |c_n|^2`.
pub fn project_to_fock(state: &QuantumState, basis: &FockBasis) -> Result<(Vec<Complex64>, f64)> {
    match state.grid() {
        Some(g) if *g == basis.grid => {}
        Some(_) => return Err(Error::GridMismatch("state and basis grids differ".into())),
        None => {
            return Err(Error::GridMismatch(
                "state is not in grid representation".into(),
            ))
        }
    }
    let dx = basis.grid.dx;
    let coeffs: Vec<Complex64> = basis
        .states
        .iter()
        .map(|phi| {
            phi.iter()
                .zip(&state.amplitudes)
                .map(|(p, a)| a * *p)
                .sum::<Complex64>()
                * dx
        })
        .collect();
    let captured: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    Ok((coeffs, (1.0 - captured).max(0.0)))
}
