// Copyright 2026 The gkp-lattice Authors
// SPDX-License-Identifier: Apache-2.0

//! Smooth low-pass window, the quadratic stop-band penalty built from it,
//! and control spectra.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::propagator::ControlWaveform;

/// Raised-cosine low-pass: 1 below `cutoff - softness/2`, 0 above
/// `cutoff + softness/2`, and exactly 1/2 at `cutoff`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowPass {
    /// Hz
    pub cutoff: f64,
    /// Width of the transition band, Hz.
    pub softness: f64,
}

impl LowPass {
    pub fn gain(&self, f: f64) -> f64 {
        let f = f.abs();
        let lo = self.cutoff - 0.5 * self.softness;
        let hi = self.cutoff + 0.5 * self.softness;
        if self.softness <= 0.0 {
            return if f < self.cutoff {
                1.0
            } else if f > self.cutoff {
                0.0
            } else {
                0.5
            };
        }
        if f <= lo {
            1.0
        } else if f >= hi {
            0.0
        } else {
            0.5 * (1.0 + (PI * (f - lo) / self.softness).cos())
        }
    }
}

/// Physical frequency of DFT bin `m` (two-sided, FFT order).
pub fn bin_frequency(m: usize, n: usize, sample_period_s: f64) -> f64 {
    let m = m as i64;
    let n = n as i64;
    let signed = if m <= n / 2 { m } else { m - n };
    signed as f64 / (n as f64 * sample_period_s)
}

/// Quadratic penalty `sum_m w_m |u_hat_m|^2` with `u_hat = DFT(u) / n` and
/// stop-band weights `w_m = 1 - L(f_m)`.
#[derive(Debug, Clone)]
pub struct SpectralPenalty {
    pub weights: Vec<f64>,
}

impl SpectralPenalty {
    pub fn new(filter: &LowPass, n: usize, sample_period_s: f64) -> Self {
        let weights = (0..n)
            .map(|m| 1.0 - filter.gain(bin_frequency(m, n, sample_period_s)))
            .collect();
        Self { weights }
    }

    fn transform(u: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new()
            .plan_fft_forward(u.len())
            .process(&mut buf);
        buf
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        let n = u.len() as f64;
        Self::transform(u)
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| w * c.norm_sqr())
            .sum::<f64>()
            / (n * n)
    }

    /// Value and gradient `(2/n^2) IDFT(w * DFT(u))`.
    pub fn value_and_gradient(&self, u: &[f64]) -> (f64, Vec<f64>) {
        let n = u.len();
        let nf = n as f64;
        let mut spec = Self::transform(u);
        let value = spec
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| w * c.norm_sqr())
            .sum::<f64>()
            / (nf * nf);
        spec.iter_mut()
            .zip(&self.weights)
            .for_each(|(c, w)| *c *= w);
        FftPlanner::new().plan_fft_inverse(n).process(&mut spec);
        let grad = spec.iter().map(|c| 2.0 * c.re / (nf * nf)).collect();
        (value, grad)
    }
}

/// One-sided magnitude spectrum of a control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSpectrum {
    /// Hz, bins `0..=n/2`.
    pub frequency: Vec<f64>,
    /// `|DFT(u)_m| / n`, lattice length units.
    pub magnitude: Vec<f64>,
    /// Filter gain at each bin, for overlays.
    pub window: Vec<f64>,
    pub n_samples: usize,
}

impl ControlSpectrum {
    /// Total power `sum_m |u_hat_m|^2` over both sides of the spectrum,
    /// equal to the mean square of the samples.
    pub fn power(&self) -> f64 {
        let n = self.n_samples;
        self.magnitude
            .iter()
            .enumerate()
            .map(|(m, a)| {
                let mult = if m == 0 || (n % 2 == 0 && m == n / 2) {
                    1.0
                } else {
                    2.0
                };
                mult * a * a
            })
            .sum()
    }

    /// Fraction of the power above `f`.
    pub fn fraction_above(&self, f: f64) -> f64 {
        let n = self.n_samples;
        let total = self.power();
        if total == 0.0 {
            return 0.0;
        }
        let above: f64 = self
            .magnitude
            .iter()
            .enumerate()
            .filter(|(m, _)| self.frequency[*m] > f)
            .map(|(m, a)| {
                let mult = if m == 0 || (n % 2 == 0 && m == n / 2) {
                    1.0
                } else {
                    2.0
                };
                mult * a * a
            })
            .sum();
        above / total
    }

    /// Bin with the largest magnitude, excluding DC.
    pub fn dominant_frequency(&self) -> f64 {
        let best = (1..self.magnitude.len())
            .max_by(|&a, &b| self.magnitude[a].total_cmp(&self.magnitude[b]))
            .unwrap_or(0);
        self.frequency[best]
    }
}

/// Spectrum of `waveform`, with `time_unit` seconds per lattice time unit.
pub fn spectrum(waveform: &ControlWaveform, time_unit: f64, filter: &LowPass) -> ControlSpectrum {
    let n = waveform.len();
    let period = waveform.dt * time_unit;
    let buf = SpectralPenalty::transform(&waveform.samples);
    let half = n / 2;
    let frequency: Vec<f64> = (0..=half).map(|m| m as f64 / (n as f64 * period)).collect();
    let magnitude = (0..=half).map(|m| buf[m].norm() / n as f64).collect();
    let window = frequency.iter().map(|&f| filter.gain(f)).collect();
    ControlSpectrum {
        frequency,
        magnitude,
        window,
        n_samples: n,
    }
}
