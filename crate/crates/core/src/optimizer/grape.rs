// Copyright 2026 The gkp-lattice Authors
// SPDX-License-Identifier: Apache-2.0

//! State-transfer fidelity of a piecewise-constant shift waveform and its
//! exact gradient from one forward and one backward sweep.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::lattice::{QuantumState, Representation};
use crate::propagator::{KineticFactor, SplitStep};

/// `|<target|U(u)|initial>|^2` for a fixed stepper and substep count.
#[derive(Debug, Clone)]
pub struct TransferProblem {
    pub stepper: SplitStep,
    pub substeps: usize,
    initial: Vec<Complex64>,
    target: Vec<Complex64>,
}

impl TransferProblem {
    pub fn new(
        stepper: SplitStep,
        substeps: usize,
        initial: &QuantumState,
        target: &QuantumState,
    ) -> Result<Self> {
        if substeps == 0 {
            return Err(invalid("substeps must be >= 1"));
        }
        let mut initial = initial.clone();
        let mut target = target.clone();
        initial.normalize()?;
        target.normalize()?;
        let initial = stepper.grid_amplitudes(&initial)?;
        let target = stepper.grid_amplitudes(&target)?;
        Ok(Self {
            stepper,
            substeps,
            initial,
            target,
        })
    }

    /// Same states and step under a different lattice depth.
    pub fn with_depth(&self, depth: f64) -> Result<Self> {
        let stepper = SplitStep::new(self.stepper.grid, depth, self.stepper.h)?;
        Ok(Self {
            stepper,
            ..self.clone()
        })
    }

    pub fn initial_state(&self) -> QuantumState {
        QuantumState {
            repr: Representation::Grid(self.stepper.grid),
            amplitudes: self.initial.clone(),
        }
    }

    pub fn target_state(&self) -> QuantumState {
        QuantumState {
            repr: Representation::Grid(self.stepper.grid),
            amplitudes: self.target.clone(),
        }
    }

    /// State reached at the end of `samples`.
    pub fn final_state(&self, samples: &[f64]) -> Result<QuantumState> {
        let mut psi = self.initial.clone();
        self.sweep(&mut psi, samples, None)?;
        Ok(QuantumState {
            repr: Representation::Grid(self.stepper.grid),
            amplitudes: psi,
        })
    }

    /// Sample duration in lattice time units.
    pub fn sample_dt(&self) -> f64 {
        self.stepper.h * self.substeps as f64
    }

    fn overlap(&self, psi: &[Complex64]) -> Complex64 {
        self.target
            .iter()
            .zip(psi)
            .map(|(t, a)| t.conj() * a)
            .sum::<Complex64>()
            * self.stepper.grid.dx
    }

    /// Forward propagation only.
    pub fn fidelity(&self, samples: &[f64]) -> Result<f64> {
        let mut psi = self.initial.clone();
        self.sweep(&mut psi, samples, None)?;
        Ok(self.overlap(&psi).norm_sqr())
    }

    /// Fidelity and `dF/du_j` for every sample.
    pub fn fidelity_and_gradient(&self, samples: &[f64]) -> Result<(f64, Vec<f64>)> {
        let n = self.stepper.n_points();
        let steps = samples.len() * self.substeps;
        // state right after each potential kick
        let mut kicked = vec![Complex64::new(0.0, 0.0); steps * n];
        let mut psi = self.initial.clone();
        self.sweep(&mut psi, samples, Some(&mut kicked))?;
        let c = self.overlap(&psi);

        let s = &self.stepper;
        let mut a = self.target.clone();
        s.apply_kinetic(&mut a, KineticFactor::HalfAdjoint);
        let mut grad = vec![0.0; samples.len()];
        let mut step = steps;
        for (j, &u) in samples.iter().enumerate().rev() {
            let vu = s.potential_derivative(u);
            let phase = s.potential_phase(u);
            let mut dc = Complex64::new(0.0, 0.0);
            for _ in 0..self.substeps {
                step -= 1;
                let phi = &kicked[step * n..(step + 1) * n];
                let acc: Complex64 = a
                    .iter()
                    .zip(phi)
                    .zip(&vu)
                    .map(|((a, p), v)| a.conj() * p * *v)
                    .sum();
                dc += acc;
                a.iter_mut().zip(&phase).for_each(|(a, p)| *a *= p.conj());
                if step > 0 {
                    s.apply_kinetic(&mut a, KineticFactor::FullAdjoint);
                }
            }
            // d phi / du = -i h V_u phi
            dc *= Complex64::new(0.0, -s.h * s.grid.dx);
            grad[j] = 2.0 * (c.conj() * dc).re;
        }
        Ok((c.norm_sqr(), grad))
    }

    fn sweep(
        &self,
        psi: &mut [Complex64],
        samples: &[f64],
        mut store: Option<&mut [Complex64]>,
    ) -> Result<()> {
        let s = &self.stepper;
        let n = s.n_points();
        let total = samples.len() * self.substeps;
        s.apply_kinetic(psi, KineticFactor::Half);
        let mut step = 0;
        for &u in samples {
            let p = s.potential_phase(u);
            for _ in 0..self.substeps {
                psi.iter_mut().zip(&p).for_each(|(a, p)| *a *= p);
                if let Some(buf) = store.as_deref_mut() {
                    buf[step * n..(step + 1) * n].copy_from_slice(psi);
                }
                step += 1;
                let which = if step == total {
                    KineticFactor::Half
                } else {
                    KineticFactor::Full
                };
                s.apply_kinetic(psi, which);
            }
            if !psi.iter().all(|a| a.re.is_finite() && a.im.is_finite()) {
                return Err(Error::PropagationDiverged { step });
            }
        }
        if samples.is_empty() {
            s.apply_kinetic(psi, KineticFactor::HalfAdjoint);
        }
        Ok(())
    }
}
