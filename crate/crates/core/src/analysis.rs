// Copyright 2026 The gkp-lattice Authors
// SPDX-License-Identifier: Apache-2.0

//! Fidelities, Wigner functions in oscillator quadratures, and depth
//! robustness of optimized controls.
//!
//! Phase space uses the dimensionless quadratures of the harmonic
//! approximation to a site: `x = center + sqrt(2) dX0 X` with vacuum
//! variance 1/2 in both `X` and `P`, so the vacuum Wigner function is
//! `exp(-X^2 - P^2) / pi`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gkp::lattice_vacuum_width;
use crate::lattice::{project_to_fock, FockBasis, QuantumState, SITE_CENTER};
use crate::optimizer::ControlProblem;
use crate::units::{harmonic_frequency, UnitSystem, HBAR};

/// Largest probability the Wigner window may clip.
pub const WIGNER_CLIP_TOLERANCE: f64 = 1e-6;

/// `|<a|b>|^2`.
pub fn fidelity(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    if a.repr != b.repr {
        return Err(invalid(
            "fidelity between states in different representations",
        ));
    }
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}

/// Harmonic vacuum widths `(dX0 [m], dP0 [kg m/s])` of a site.
pub fn vacuum_widths(depth: f64, units: &UnitSystem) -> Result<(f64, f64)> {
    if !(depth > 0.0) {
        return Err(invalid(format!("lattice depth must be > 0, got {depth}")));
    }
    let omega = harmonic_frequency(depth)? * units.recoil_energy / HBAR;
    let m = units.mass;
    Ok((
        (HBAR / (2.0 * m * omega)).sqrt(),
        (HBAR * m * omega / 2.0).sqrt(),
    ))
}

/// Affine map between lattice positions and the quadrature `X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseAxes {
    /// Lattice position of `X = 0`.
    pub center: f64,
    /// Lattice length per unit `X`.
    pub scale: f64,
}

impl PhaseAxes {
    pub fn for_depth(depth: f64) -> Result<Self> {
        Ok(Self {
            center: SITE_CENTER,
            scale: 2f64.sqrt() * lattice_vacuum_width(depth)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseWindow {
    pub x_max: f64,
    pub p_max: f64,
    /// Spectral upsampling of the position grid.
    pub oversample: usize,
    /// Zero padding of the per-row transform, refines the `P` axis.
    pub p_pad: usize,
}

impl Default for PhaseWindow {
    fn default() -> Self {
        Self {
            x_max: 8.0,
            p_max: 8.0,
            oversample: 2,
            p_pad: 2,
        }
    }
}

/// Wigner function sampled on a rectangular `(X, P)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerMap {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    /// Row-major, `values[i * p.len() + k] = W(x[i], p[k])`.
    pub values: Vec<f64>,
    pub dx: f64,
    pub dp: f64,
    /// Probability outside the window in either marginal.
    pub clipped: f64,
    /// Position-space density `|psi(X)|^2` on the `x` axis.
    pub density_x: Vec<f64>,
    /// Momentum-space density `|phi(P)|^2` on the `p` axis.
    pub density_p: Vec<f64>,
}

impl WignerMap {
    pub fn at(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.p.len() + k]
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dx * self.dp
    }

    /// `int W dP` on the `x` axis.
    pub fn marginal_x(&self) -> Vec<f64> {
        self.values
            .chunks(self.p.len())
            .map(|row| row.iter().sum::<f64>() * self.dp)
            .collect()
    }

    /// `int W dX` on the `p` axis.
    pub fn marginal_p(&self) -> Vec<f64> {
        let np = self.p.len();
        (0..np)
            .map(|k| {
                (0..self.x.len())
                    .map(|i| self.values[i * np + k])
                    .sum::<f64>()
                    * self.dx
            })
            .collect()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Value nearest the phase-space origin.
    pub fn at_origin(&self) -> f64 {
        let near = |axis: &[f64]| {
            (0..axis.len())
                .min_by(|&a, &b| axis[a].abs().total_cmp(&axis[b].abs()))
                .unwrap_or(0)
        };
        self.at(near(&self.x), near(&self.p))
    }

    /// Positions of local maxima of the `X` marginal above `threshold`
    /// times its peak, refined by parabolic interpolation.
    pub fn marginal_x_peaks(&self, threshold: f64) -> Vec<f64> {
        let m = self.marginal_x();
        let top = m.iter().copied().fold(0.0, f64::max);
        let mut peaks = Vec::new();
        for i in 1..m.len().saturating_sub(1) {
            if m[i] > m[i - 1] && m[i] >= m[i + 1] && m[i] > threshold * top {
                let denom = m[i - 1] - 2.0 * m[i] + m[i + 1];
                let offset = if denom != 0.0 {
                    0.5 * (m[i - 1] - m[i + 1]) / denom
                } else {
                    0.0
                };
                peaks.push(self.x[i] + offset * self.dx);
            }
        }
        peaks
    }
}

/// Spectral interpolation of a periodic grid function by `factor`.
fn upsample(psi: &[Complex64], factor: usize) -> Vec<Complex64> {
    let n = psi.len();
    if factor <= 1 {
        return psi.to_vec();
    }
    let m = n * factor;
    let mut planner = FftPlanner::new();
    let mut spec = psi.to_vec();
    planner.plan_fft_forward(n).process(&mut spec);
    let mut big = vec![Complex64::new(0.0, 0.0); m];
    let half = n / 2;
    for (k, &c) in spec.iter().enumerate() {
        let kk = if k < half {
            k
        } else if k == half {
            continue;
        } else {
            m - (n - k)
        };
        big[kk] = c;
    }
    // split the Nyquist bin symmetrically
    if n % 2 == 0 {
        big[half] = 0.5 * spec[half];
        big[m - half] = 0.5 * spec[half];
    }
    planner.plan_fft_inverse(m).process(&mut big);
    let s = 1.0 / n as f64;
    big.iter_mut().for_each(|a| *a *= s);
    big
}

/// `W(X, P) = (1/pi) int psi*(X + y) psi(X - y) exp(2 i P y) dy`, one FFT
/// per `X` row. The state is interpolated onto a finer grid first and is
/// taken as zero outside the simulation grid.
pub fn wigner(state: &QuantumState, axes: &PhaseAxes, window: &PhaseWindow) -> Result<WignerMap> {
    let grid = state
        .grid()
        .ok_or_else(|| invalid("Wigner map needs a grid-representation state"))?;
    if !(window.x_max > 0.0 && window.p_max > 0.0) || window.oversample == 0 || window.p_pad == 0 {
        return Err(invalid(
            "Wigner window extents and factors must be positive",
        ));
    }
    if !(axes.scale > 0.0) {
        return Err(invalid("phase-space scale must be > 0"));
    }
    let fine = upsample(&state.amplitudes, window.oversample);
    let n = fine.len();
    let dxl = grid.dx / window.oversample as f64;
    let dx = dxl / axes.scale;
    // amplitudes in the X representation
    let amp = axes.scale.sqrt();
    let psi: Vec<Complex64> = fine.iter().map(|a| a * amp).collect();
    let xq: Vec<f64> = (0..n)
        .map(|j| (grid.x_min + j as f64 * dxl - axes.center) / axes.scale)
        .collect();
    let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum::<f64>() * dx;
    if !(norm > 0.0) {
        return Err(invalid("cannot build a Wigner map of a zero state"));
    }

    let l = (2 * n * window.p_pad).next_power_of_two();
    let dp = PI / (l as f64 * dx);
    let nyquist = PI / (2.0 * dx);
    if window.p_max >= nyquist {
        return Err(Error::InsufficientDomain(format!(
            "p_max = {} exceeds the resolvable momentum {nyquist:.3}",
            window.p_max
        )));
    }
    let rows: Vec<usize> = (0..n).filter(|&j| xq[j].abs() <= window.x_max).collect();
    let kmax = (window.p_max / dp).floor() as i64;
    let bins: Vec<i64> = (-kmax..=kmax).collect();
    let p: Vec<f64> = bins.iter().map(|&k| k as f64 * dp).collect();
    let x: Vec<f64> = rows.iter().map(|&j| xq[j]).collect();

    let fft = FftPlanner::new().plan_fft_forward(l);
    let values: Vec<f64> = rows
        .par_iter()
        .flat_map_iter(|&j| {
            let mut buf = vec![Complex64::new(0.0, 0.0); l];
            let reach = j.min(n - 1 - j);
            for m in 0..=reach {
                // kernel at y = m dx and y = -m dx
                let v = psi[j + m].conj() * psi[j - m];
                buf[m] += v;
                if m > 0 {
                    buf[l - m] += psi[j - m].conj() * psi[j + m];
                }
            }
            fft.process(&mut buf);
            // sum_m f(m) e^{-2 pi i k m / l}: bin -k carries exp(+2 i P y)
            bins.iter()
                .map(|&k| buf[((l as i64 - k) % l as i64) as usize].re * dx / PI)
                .collect::<Vec<_>>()
        })
        .collect();

    let density_x: Vec<f64> = rows.iter().map(|&j| psi[j].norm_sqr() / norm).collect();
    let inside_x: f64 = density_x.iter().sum::<f64>() * dx;
    let density_p = momentum_density(&psi, &xq, dx, &p, norm);
    let inside_p = momentum_inside(&psi, dx, window.p_max);
    // a state cut off at the grid edge has a 1/P^2 momentum tail
    let edge = psi[0].norm_sqr().max(psi[n - 1].norm_sqr()) / norm;
    let tail = edge / (PI * window.p_max);
    let clipped = (1.0 - inside_x).max(1.0 - inside_p + tail).max(0.0);
    if clipped > WIGNER_CLIP_TOLERANCE {
        return Err(Error::InsufficientDomain(format!(
            "Wigner window clips {clipped:.3e} of the probability"
        )));
    }
    let values = values.into_iter().map(|w| w / norm).collect();
    Ok(WignerMap {
        x,
        p,
        values,
        dx,
        dp,
        clipped,
        density_x,
        density_p,
    })
}

/// `|phi(P)|^2` with `phi(P) = (2 pi)^{-1/2} int psi(X) e^{-i P X} dX`.
fn momentum_density(psi: &[Complex64], xq: &[f64], dx: f64, p: &[f64], norm: f64) -> Vec<f64> {
    p.par_iter()
        .map(|&pk| {
            let s: Complex64 = psi
                .iter()
                .zip(xq)
                .map(|(a, &x)| a * Complex64::from_polar(1.0, -pk * x))
                .sum();
            (s * dx).norm_sqr() / (2.0 * PI) / norm
        })
        .collect()
}

/// Momentum probability inside `|P| <= p_max`, from the DFT of the grid.
fn momentum_inside(psi: &[Complex64], dx: f64, p_max: f64) -> f64 {
    let n = psi.len();
    let mut buf = psi.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let total: f64 = buf.iter().map(|a| a.norm_sqr()).sum();
    let dk = 2.0 * PI / (n as f64 * dx);
    let inside: f64 = buf
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let kk = if *k <= n / 2 {
                *k as f64
            } else {
                *k as f64 - n as f64
            };
            (kk * dk).abs() <= p_max
        })
        .map(|(_, a)| a.norm_sqr())
        .sum();
    inside / total
}

/// Carries `state` over to another basis grid through its Fock content,
/// for instance onto several periods where the tails of the highest bound
/// states can decay before the grid edge. Returns the normalized state and
/// the probability left outside `from`.
pub fn resynthesize(
    state: &QuantumState,
    from: &FockBasis,
    to: &FockBasis,
) -> Result<(QuantumState, f64)> {
    let (mut coeffs, leaked) = project_to_fock(state, from)?;
    coeffs.truncate(to.len());
    let mut out = to.to_grid(&coeffs)?;
    out.normalize()?;
    Ok((out, leaked))
}

/// Fidelity against lattice-depth miscalibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessCurve {
    pub nominal_depth: f64,
    pub scales: Vec<f64>,
    pub fidelities: Vec<f64>,
}

/// Least-squares quadratic `F = a + b d + c d^2` in `d = scale - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r_squared: f64,
}

impl RobustnessCurve {
    /// Fit over points with `|scale - 1| <= half_width`.
    pub fn quadratic_fit(&self, half_width: f64) -> Result<QuadraticFit> {
        let pts: Vec<(f64, f64)> = self
            .scales
            .iter()
            .zip(&self.fidelities)
            .map(|(s, f)| (s - 1.0, *f))
            .filter(|(d, _)| d.abs() <= half_width * (1.0 + 1e-9))
            .collect();
        if pts.len() < 3 {
            return Err(invalid("quadratic fit needs at least 3 points"));
        }
        let mut ata = nalgebra::Matrix3::<f64>::zeros();
        let mut atb = nalgebra::Vector3::<f64>::zeros();
        for &(d, f) in &pts {
            let row = nalgebra::Vector3::new(1.0, d, d * d);
            ata += row * row.transpose();
            atb += row * f;
        }
        let coef = ata
            .lu()
            .solve(&atb)
            .ok_or_else(|| invalid("degenerate sample set for quadratic fit"))?;
        let mean = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
        let (mut ss_res, mut ss_tot) = (0.0, 0.0);
        for &(d, f) in &pts {
            let model = coef[0] + coef[1] * d + coef[2] * d * d;
            ss_res += (f - model).powi(2);
            ss_tot += (f - mean).powi(2);
        }
        let r_squared = if ss_tot > 0.0 {
            1.0 - ss_res / ss_tot
        } else {
            1.0
        };
        Ok(QuadraticFit {
            a: coef[0],
            b: coef[1],
            c: coef[2],
            r_squared,
        })
    }

    /// Fidelity at the sample closest to `scale`.
    pub fn fidelity_near(&self, scale: f64) -> Option<f64> {
        let i = (0..self.scales.len()).min_by(|&a, &b| {
            (self.scales[a] - scale)
                .abs()
                .total_cmp(&(self.scales[b] - scale).abs())
        })?;
        Some(self.fidelities[i])
    }
}

/// Re-evolves `samples` with the depth multiplied by each scale, keeping
/// the initial and target states of the problem.
pub fn depth_robustness(
    problem: &ControlProblem,
    samples: &[f64],
    scales: &[f64],
) -> Result<RobustnessCurve> {
    let base = &problem.transfer;
    let depth = base.stepper.depth;
    let fidelities = scales
        .par_iter()
        .map(|&s| {
            if !(s > 0.0) {
                return Err(invalid(format!("depth scale must be > 0, got {s}")));
            }
            base.with_depth(depth * s)?.fidelity(samples)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(RobustnessCurve {
        nominal_depth: depth,
        scales: scales.to_vec(),
        fidelities,
    })
}
