// Copyright 2026 The gkp-lattice Authors
// SPDX-License-Identifier: Apache-2.0

//! Symmetrized split-step propagation under the shaken lattice Hamiltonian
//! `p^2 + (U_r/2) cos(2(x + u(t)))`.
//!
//! Each step is `K(h/2) P(u, h) K(h/2)` with the kinetic factor applied in
//! momentum space. Consecutive half kinetic factors are fused, so a run of
//! `n` steps costs `n + 1` FFT pairs.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{FockBasis, QuantumState, Representation, SimGrid};
use crate::units::harmonic_frequency;

/// Largest allowed `hbar omega dt` for the default step.
pub const DEFAULT_PHASE_PER_STEP: f64 = 0.05;
/// Outer-band probability that aborts a multi-period run.
pub const BOUNDARY_TOLERANCE: f64 = 1e-6;

/// Piecewise-constant lattice shift `u(t)` in lattice length units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlWaveform {
    pub samples: Vec<f64>,
    /// Sample period in lattice time units.
    pub dt: f64,
}

impl ControlWaveform {
    pub fn new(samples: Vec<f64>, dt: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid("waveform needs at least one sample"));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid(format!("sample period must be > 0, got {dt}")));
        }
        if samples.iter().any(|u| !u.is_finite()) {
            return Err(invalid("waveform samples must be finite"));
        }
        Ok(Self { samples, dt })
    }

    pub fn zeros(n: usize, dt: f64) -> Result<Self> {
        Self::new(vec![0.0; n], dt)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, u| m.max(u.abs()))
    }

    /// Sample start times.
    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|j| j as f64 * self.dt).collect()
    }
}

/// Integer substeps per sample so that `hbar omega h <= phase_per_step`.
pub fn substeps_for(depth: f64, sample_dt: f64, phase_per_step: f64) -> Result<usize> {
    let hw = harmonic_frequency(depth)?.max(1.0);
    Ok(((hw * sample_dt / phase_per_step).ceil() as usize).max(1))
}

/// Split-step integrator for one grid and depth.
#[derive(Clone)]
pub struct SplitStep {
    pub grid: SimGrid,
    pub depth: f64,
    /// Step size in lattice time units.
    pub h: f64,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    /// `exp(-i k^2 h/2) / n`
    half_kin: Vec<Complex64>,
    /// `exp(-i k^2 h) / n`
    full_kin: Vec<Complex64>,
    k2: Vec<f64>,
    cos2x: Vec<f64>,
    sin2x: Vec<f64>,
}

impl std::fmt::Debug for SplitStep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SplitStep")
            .field("grid", &self.grid)
            .field("depth", &self.depth)
            .field("h", &self.h)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KineticFactor {
    Half,
    Full,
    HalfAdjoint,
    FullAdjoint,
}

impl SplitStep {
    pub fn new(grid: SimGrid, depth: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(invalid(format!("time step must be > 0, got {h}")));
        }
        if !depth.is_finite() {
            return Err(invalid("depth must be finite"));
        }
        let n = grid.n_points;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let k2: Vec<f64> = grid.wavenumbers().iter().map(|k| k * k).collect();
        let inv_n = 1.0 / n as f64;
        let phase = |t: f64| -> Vec<Complex64> {
            k2.iter()
                .map(|&k2| Complex64::from_polar(inv_n, -k2 * t))
                .collect()
        };
        let x = grid.positions();
        Ok(Self {
            grid,
            depth,
            h,
            fft,
            ifft,
            half_kin: phase(0.5 * h),
            full_kin: phase(h),
            cos2x: x.iter().map(|x| (2.0 * x).cos()).collect(),
            sin2x: x.iter().map(|x| (2.0 * x).sin()).collect(),
            k2,
        })
    }

    pub fn n_points(&self) -> usize {
        self.grid.n_points
    }

    pub fn apply_kinetic(&self, psi: &mut [Complex64], which: KineticFactor) {
        self.fft.process(psi);
        match which {
            KineticFactor::Half => psi
                .iter_mut()
                .zip(&self.half_kin)
                .for_each(|(a, k)| *a *= k),
            KineticFactor::Full => psi
                .iter_mut()
                .zip(&self.full_kin)
                .for_each(|(a, k)| *a *= k),
            KineticFactor::HalfAdjoint => psi
                .iter_mut()
                .zip(&self.half_kin)
                .for_each(|(a, k)| *a *= k.conj()),
            KineticFactor::FullAdjoint => psi
                .iter_mut()
                .zip(&self.full_kin)
                .for_each(|(a, k)| *a *= k.conj()),
        }
        self.ifft.process(psi);
    }

    /// `(U_r/2) cos(2(x + u))` at every grid point.
    pub fn potential(&self, u: f64) -> Vec<f64> {
        let (s, c) = (2.0 * u).sin_cos();
        let a = 0.5 * self.depth;
        self.cos2x
            .iter()
            .zip(&self.sin2x)
            .map(|(cx, sx)| a * (cx * c - sx * s))
            .collect()
    }

    /// `dV/du = -U_r sin(2(x + u))`.
    pub fn potential_derivative(&self, u: f64) -> Vec<f64> {
        let (s, c) = (2.0 * u).sin_cos();
        self.sin2x
            .iter()
            .zip(&self.cos2x)
            .map(|(sx, cx)| -self.depth * (sx * c + cx * s))
            .collect()
    }

    /// `exp(-i h V(x, u))`.
    pub fn potential_phase(&self, u: f64) -> Vec<Complex64> {
        self.potential(u)
            .iter()
            .map(|v| Complex64::from_polar(1.0, -v * self.h))
            .collect()
    }

    /// One symmetric step with shift `u`.
    pub fn step(&self, psi: &mut [Complex64], u: f64) -> Result<()> {
        self.apply_kinetic(psi, KineticFactor::Half);
        let p = self.potential_phase(u);
        psi.iter_mut().zip(&p).for_each(|(a, p)| *a *= p);
        self.apply_kinetic(psi, KineticFactor::Half);
        check_finite(psi, 0)
    }

    /// Runs `substeps` steps per waveform sample, fusing adjacent half
    /// kinetic factors. Finiteness and boundary flux are checked once per
    /// sample.
    fn run(
        &self,
        psi: &mut [Complex64],
        waveform: &ControlWaveform,
        substeps: usize,
    ) -> Result<()> {
        if substeps == 0 {
            return Err(invalid("substeps must be >= 1"));
        }
        let total = waveform.len() * substeps;
        self.apply_kinetic(psi, KineticFactor::Half);
        let mut step = 0;
        for &u in &waveform.samples {
            let p = self.potential_phase(u);
            for _ in 0..substeps {
                psi.iter_mut().zip(&p).for_each(|(a, p)| *a *= p);
                step += 1;
                let which = if step == total {
                    KineticFactor::Half
                } else {
                    KineticFactor::Full
                };
                self.apply_kinetic(psi, which);
            }
            check_finite(psi, step)?;
            self.check_boundary(psi, step)?;
        }
        Ok(())
    }

    fn check_boundary(&self, psi: &[Complex64], step: usize) -> Result<()> {
        if self.grid.periods == 1 {
            return Ok(());
        }
        let weight: f64 = psi
            .iter()
            .enumerate()
            .filter(|(j, _)| self.grid.in_outer_band(*j))
            .map(|(_, a)| a.norm_sqr())
            .sum::<f64>()
            * self.grid.dx;
        if weight > BOUNDARY_TOLERANCE {
            return Err(Error::BoundaryFlux { step, weight });
        }
        Ok(())
    }

    /// Propagates `state` through `waveform`. With `stride = Some(s)` the
    /// state after every `s`-th sample is recorded (plus the initial one).
    pub fn evolve(
        &self,
        state: &QuantumState,
        waveform: &ControlWaveform,
        substeps: usize,
        stride: Option<usize>,
    ) -> Result<Evolution> {
        let h_expected = waveform.dt / substeps.max(1) as f64;
        if ((h_expected - self.h) / self.h).abs() > 1e-9 {
            return Err(invalid(format!(
                "waveform dt / substeps = {h_expected} does not match the step {}",
                self.h
            )));
        }
        let mut psi = self.grid_amplitudes(state)?;
        let mut snapshots = Vec::new();
        match stride {
            None => self.run(&mut psi, waveform, substeps)?,
            Some(s) => {
                let s = s.max(1);
                snapshots.push(Snapshot {
                    time: 0.0,
                    amplitudes: psi.clone(),
                });
                for (c, chunk) in waveform.samples.chunks(s).enumerate() {
                    let piece = ControlWaveform {
                        samples: chunk.to_vec(),
                        dt: waveform.dt,
                    };
                    self.run(&mut psi, &piece, substeps)?;
                    let time = ((c * s + chunk.len()) as f64) * waveform.dt;
                    snapshots.push(Snapshot {
                        time,
                        amplitudes: psi.clone(),
                    });
                }
            }
        }
        Ok(Evolution {
            final_state: QuantumState {
                repr: Representation::Grid(self.grid),
                amplitudes: psi,
            },
            snapshots,
        })
    }

    pub(crate) fn grid_amplitudes(&self, state: &QuantumState) -> Result<Vec<Complex64>> {
        match state.grid() {
            Some(g) if *g == self.grid => Ok(state.amplitudes.clone()),
            _ => Err(Error::GridMismatch(
                "state is not on the propagator grid".into(),
            )),
        }
    }

    /// `<psi|H(u)|psi>` for a state normalized with the `dx` measure.
    pub fn energy(&self, psi: &[Complex64], u: f64) -> f64 {
        let n = psi.len() as f64;
        let mut buf = psi.to_vec();
        self.fft.process(&mut buf);
        // Parseval: sum |psi_k|^2 = n sum |psi_j|^2
        let kinetic: f64 = buf
            .iter()
            .zip(&self.k2)
            .map(|(a, k2)| a.norm_sqr() * k2)
            .sum::<f64>()
            / n;
        let v = self.potential(u);
        let pot: f64 = psi.iter().zip(&v).map(|(a, v)| a.norm_sqr() * v).sum();
        (kinetic + pot) * self.grid.dx
    }

    /// Mean position and momentum.
    pub fn moments(&self, psi: &[Complex64]) -> (f64, f64) {
        let dx = self.grid.dx;
        let xm: f64 = psi
            .iter()
            .enumerate()
            .map(|(j, a)| a.norm_sqr() * self.grid.x(j))
            .sum::<f64>()
            * dx;
        let mut buf = psi.to_vec();
        self.fft.process(&mut buf);
        let k = self.grid.wavenumbers();
        let total: f64 = buf.iter().map(|a| a.norm_sqr()).sum();
        let pm: f64 = buf
            .iter()
            .zip(&k)
            .map(|(a, k)| a.norm_sqr() * k)
            .sum::<f64>()
            / total;
        (xm, pm)
    }
}

/// Fock populations and mean position/momentum sampled along a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Lattice time units.
    pub time: Vec<f64>,
    /// `populations[i][n]` at `time[i]`.
    pub populations: Vec<Vec<f64>>,
    /// Mean position, lattice length units.
    pub x_mean: Vec<f64>,
    /// Mean momentum, units of `hbar k_L`.
    pub p_mean: Vec<f64>,
}

impl SplitStep {
    /// Records the lowest `levels` populations of `basis` every `stride`
    /// samples.
    pub fn trajectory(
        &self,
        state: &QuantumState,
        waveform: &ControlWaveform,
        substeps: usize,
        stride: usize,
        basis: &FockBasis,
        levels: usize,
    ) -> Result<Trajectory> {
        let levels = levels.min(basis.len());
        let basis = basis.truncated(levels)?;
        let run = self.evolve(state, waveform, substeps, Some(stride))?;
        let mut out = Trajectory {
            time: vec![],
            populations: vec![],
            x_mean: vec![],
            p_mean: vec![],
        };
        for snap in run.snapshots {
            let s = QuantumState {
                repr: Representation::Grid(self.grid),
                amplitudes: snap.amplitudes,
            };
            let (x, p) = self.moments(&s.amplitudes);
            out.populations.push(basis.populations(&s)?);
            out.time.push(snap.time);
            out.x_mean.push(x);
            out.p_mean.push(p);
        }
        Ok(out)
    }
}

fn check_finite(psi: &[Complex64], step: usize) -> Result<()> {
    if psi.iter().all(|a| a.re.is_finite() && a.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::PropagationDiverged { step })
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub amplitudes: Vec<Complex64>,
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub final_state: QuantumState,
    pub snapshots: Vec<Snapshot>,
}
