// Copyright 2026 The gkp-lattice Authors
// SPDX-License-Identifier: Apache-2.0

//! Finitely squeezed, quadrature-symmetric GKP code states.
//!
//! Conventions: the dimensionless quadrature `X` has vacuum variance 1/2,
//! and `S(r)` maps `psi(X) -> e^{r/2} psi(e^r X)`, so it contracts position
//! widths by `e^{-r}`. A codeword is a comb of displaced squeezed vacua
//! `X(x_t) S(Delta) |0>` at `x_t = sqrt(pi) (2s + k)` under the Gaussian
//! envelope `exp(-sigma^2 x_t^2 / 2)`, with the overall squeeze `S(r0)`
//! applied last. Everything is evaluated in closed form in position space.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{self, build_grid, eigensolve, FockBasis, QuantumState, SITE_CENTER};
use crate::units::harmonic_frequency;

/// Comb weight below which teeth are dropped.
pub const COMB_CUTOFF: f64 = 1e-12;
pub const DEFAULT_S_MAX: usize = 8;

/// `sigma = 10^(-zeta/20)`.
pub fn sigma_from_db(zeta: f64) -> Result<f64> {
    if !(zeta > 0.0) || !zeta.is_finite() {
        return Err(invalid(format!("squeezing must be > 0 dB, got {zeta}")));
    }
    Ok(10f64.powf(-zeta / 20.0))
}

/// Returns `(Delta, r0)` with `Delta = -ln sqrt(sigma^2 / (1 - sigma^4))`
/// and `r0 = ln sqrt(1 + sigma^2 Delta^2)`.
pub fn delta_from_sigma(sigma: f64) -> Result<(f64, f64)> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(invalid(format!("sigma must lie in (0, 1), got {sigma}")));
    }
    let s2 = sigma * sigma;
    let delta = -(s2 / (1.0 - s2 * s2)).sqrt().ln();
    let r0 = (1.0 + s2 * delta * delta).sqrt().ln();
    Ok((delta, r0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GkpSpec {
    /// Code index, 0 or 1.
    pub k: u8,
    /// Squeezing in dB.
    pub zeta: f64,
    pub sigma: f64,
    pub delta: f64,
    pub r0: f64,
    pub s_max: usize,
}

impl GkpSpec {
    pub fn new(k: u8, zeta: f64) -> Result<Self> {
        if k > 1 {
            return Err(invalid(format!("code index must be 0 or 1, got {k}")));
        }
        let sigma = sigma_from_db(zeta)?;
        let (delta, r0) = delta_from_sigma(sigma)?;
        let s_max = DEFAULT_S_MAX.max(Self::min_s_max(sigma));
        Ok(Self {
            k,
            zeta,
            sigma,
            delta,
            r0,
            s_max,
        })
    }

    /// Smallest `s_max` whose first dropped tooth has envelope weight
    /// `exp(-sigma^2 pi (2s)^2 / 2)` below [`COMB_CUTOFF`].
    pub fn min_s_max(sigma: f64) -> usize {
        let s = (-2.0 * COMB_CUTOFF.ln() / (4.0 * PI * sigma * sigma)).sqrt();
        s.ceil() as usize
    }

    pub fn with_s_max(mut self, s_max: usize) -> Self {
        self.s_max = s_max;
        self
    }

    /// Comb positions `x_t` and envelope weights, before the final squeeze.
    pub fn teeth(&self) -> Vec<(f64, f64)> {
        let s_max = self.s_max as i64;
        let s2 = self.sigma * self.sigma;
        (-s_max..=s_max)
            .map(|s| {
                let xt = PI.sqrt() * (2 * s + self.k as i64) as f64;
                (xt, (-0.5 * s2 * xt * xt).exp())
            })
            .collect()
    }

    /// Peak spacing after the final squeeze, `2 sqrt(pi) e^{-r0}`.
    pub fn peak_spacing(&self) -> f64 {
        2.0 * PI.sqrt() * (-self.r0).exp()
    }

    /// Unnormalized closed-form amplitude at `x`.
    pub fn amplitude(&self, x: f64) -> f64 {
        let a = (2.0 * self.delta).exp();
        let y = x * self.r0.exp();
        let comb: f64 = self
            .teeth()
            .iter()
            .map(|&(xt, w)| w * (-0.5 * a * (y - xt) * (y - xt)).exp())
            .sum();
        (0.5 * self.r0).exp() * comb
    }

    /// Exact squared norm of [`Self::amplitude`] over the real line.
    pub fn analytic_norm_sqr(&self) -> f64 {
        let a = (2.0 * self.delta).exp();
        let teeth = self.teeth();
        let mut total = 0.0;
        for &(p, wp) in &teeth {
            for &(q, wq) in &teeth {
                total += wp * wq * (-0.25 * a * (p - q) * (p - q)).exp();
            }
        }
        total * (PI / a).sqrt()
    }
}

/// A codeword sampled on a uniform quadrature grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GkpWavefunction {
    pub spec: GkpSpec,
    pub x: Vec<f64>,
    pub amplitudes: Vec<Complex64>,
}

impl GkpWavefunction {
    pub fn dx(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Uniform quadrature grid `[-half_width, half_width]` of `n` points.
pub fn quadrature_grid(half_width: f64, n: usize) -> Vec<f64> {
    let dx = 2.0 * half_width / (n - 1) as f64;
    (0..n).map(|j| -half_width + j as f64 * dx).collect()
}

/// Samples the codeword on `x` and normalizes on the grid. Fails when the
/// grid holds less than `1 - 1e-10` of the probability.
pub fn build_gkp(spec: &GkpSpec, x: &[f64]) -> Result<GkpWavefunction> {
    if x.len() < 2 {
        return Err(invalid("quadrature grid needs at least two points"));
    }
    let s2 = spec.sigma * spec.sigma;
    let dropped = (-0.5 * s2 * PI * (2.0 * (spec.s_max + 1) as f64).powi(2)).exp();
    if dropped >= COMB_CUTOFF {
        return Err(invalid(format!(
            "s_max = {} too small: next tooth weight {dropped:.2e}",
            spec.s_max
        )));
    }
    let dx = x[1] - x[0];
    let raw: Vec<f64> = x.iter().map(|&xi| spec.amplitude(xi)).collect();
    let on_grid: f64 = raw.iter().map(|v| v * v).sum::<f64>() * dx;
    let exact = spec.analytic_norm_sqr();
    if on_grid < (1.0 - 1e-10) * exact {
        return Err(Error::InsufficientDomain(format!(
            "grid holds {:.3e} of the probability",
            on_grid / exact
        )));
    }
    let scale = 1.0 / on_grid.sqrt();
    Ok(GkpWavefunction {
        spec: *spec,
        x: x.to_vec(),
        amplitudes: raw
            .iter()
            .map(|&v| Complex64::new(v * scale, 0.0))
            .collect(),
    })
}

/// A quadrature grid wide and fine enough for [`build_gkp`].
pub fn default_quadrature_grid(spec: &GkpSpec) -> Vec<f64> {
    let reach = PI.sqrt() * (2 * spec.s_max + 1) as f64 * (-spec.r0).exp();
    let half = reach + 8.0;
    let n = ((2.0 * half / 0.01).ceil() as usize) | 1;
    quadrature_grid(half, n)
}

/// Harmonic-oscillator eigenfunctions `h_0 .. h_{count-1}` at `x` (vacuum
/// variance 1/2), from the stable three-term recurrence.
pub fn hermite_functions(count: usize, x: &[f64]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    out.push(
        x.iter()
            .map(|&x| PI.powf(-0.25) * (-0.5 * x * x).exp())
            .collect(),
    );
    if count > 1 {
        out.push(
            x.iter()
                .zip(&out[0])
                .map(|(&x, &h)| 2f64.sqrt() * x * h)
                .collect(),
        );
    }
    for n in 2..count {
        let a = (2.0 / n as f64).sqrt();
        let b = ((n - 1) as f64 / n as f64).sqrt();
        let next = x
            .iter()
            .zip(out[n - 1].iter().zip(&out[n - 2]))
            .map(|(&x, (&h1, &h2))| a * x * h1 - b * h2)
            .collect();
        out.push(next);
    }
    out
}

/// Harmonic-oscillator Fock coefficients of a codeword.
pub fn harmonic_fock_coefficients(spec: &GkpSpec, count: usize) -> Vec<f64> {
    let x = default_quadrature_grid(spec);
    let dx = x[1] - x[0];
    let norm = spec.analytic_norm_sqr().sqrt();
    let psi: Vec<f64> = x.iter().map(|&x| spec.amplitude(x) / norm).collect();
    hermite_functions(count, &x)
        .iter()
        .map(|h| h.iter().zip(&psi).map(|(a, b)| a * b).sum::<f64>() * dx)
        .collect()
}

/// Harmonic vacuum width `sqrt(hbar / 2 m omega)` in lattice length units.
pub fn lattice_vacuum_width(depth: f64) -> Result<f64> {
    let hw = harmonic_frequency(depth)?;
    if hw <= 0.0 {
        return Err(invalid("vacuum width undefined at zero depth"));
    }
    // m = 1/2 and hbar = 1 in lattice units
    Ok(1.0 / hw.sqrt())
}

/// Codeword mapped into a lattice site.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeTarget {
    pub spec: GkpSpec,
    /// Renormalized Fock-representation target.
    pub fock: QuantumState,
    /// Same target synthesized on the basis grid.
    pub grid_state: QuantumState,
    /// Captured probability before renormalization.
    pub reconstruction_fidelity: f64,
}

impl LatticeTarget {
    pub fn meets(&self, threshold: f64) -> bool {
        self.reconstruction_fidelity >= threshold
    }
}

/// Maps the codeword into the site via `x = pi/2 + sqrt(2) dX0 X`, projects
/// onto the supplied basis and renormalizes. The squeeze `S(r0)` acts on
/// the dimensionless quadrature before the mapping.
pub fn gkp_in_lattice(spec: &GkpSpec, basis: &FockBasis) -> Result<LatticeTarget> {
    if basis.is_empty() {
        return Err(invalid("basis has no states"));
    }
    let width = lattice_vacuum_width(basis.depth)?;
    let scale = 2f64.sqrt() * width;
    let norm = (spec.analytic_norm_sqr() * scale).sqrt();
    let grid = basis.grid;
    let amps: Vec<Complex64> = (0..grid.n_points)
        .map(|j| {
            Complex64::new(
                spec.amplitude((grid.x(j) - SITE_CENTER) / scale) / norm,
                0.0,
            )
        })
        .collect();
    // analytic normalization: probability outside the grid counts as lost
    let raw = QuantumState {
        repr: lattice::Representation::Grid(grid),
        amplitudes: amps,
    };
    let (coeffs, leakage) = lattice::project_to_fock(&raw, basis)?;
    let fock = QuantumState::in_fock(coeffs.clone())?;
    let grid_state = basis.to_grid(&coeffs)?;
    Ok(LatticeTarget {
        spec: *spec,
        fock,
        grid_state,
        reconstruction_fidelity: 1.0 - leakage,
    })
}

/// One point of the squeezing -> (basis size, depth) curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisRequirement {
    pub zeta: f64,
    /// Number of bound lattice states used as the Fock basis.
    pub basis_size: usize,
    /// Reconstruction fidelity in that basis.
    pub fidelity: f64,
    /// Smallest depth on the search grid binding `basis_size` states, E_R.
    pub depth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthSearch {
    pub step: f64,
    pub max_depth: f64,
    pub points_per_period: usize,
    /// Largest basis considered.
    pub max_basis: usize,
}

impl Default for DepthSearch {
    fn default() -> Self {
        Self {
            step: 5.0,
            max_depth: 20_000.0,
            points_per_period: 256,
            max_basis: 120,
        }
    }
}

/// Bound-state bases of increasing size: rung `N` holds the `N` lowest
/// states at the smallest searched depth binding `N` states. Rungs are
/// built on demand and cached.
#[derive(Debug, Clone)]
pub struct BasisLadder {
    pub search: DepthSearch,
    grid: lattice::SimGrid,
    rungs: Vec<FockBasis>,
}

impl BasisLadder {
    pub fn new(search: DepthSearch) -> Result<Self> {
        if !(search.step > 0.0 && search.max_depth >= search.step) || search.max_basis == 0 {
            return Err(invalid(
                "depth search needs step > 0, max_depth >= step and max_basis >= 1",
            ));
        }
        let grid = build_grid(1, search.points_per_period)?;
        Ok(Self {
            search,
            grid,
            rungs: Vec::new(),
        })
    }

    /// Basis with `n` states (`n >= 1`).
    pub fn rung(&mut self, n: usize) -> Result<&FockBasis> {
        if n == 0 {
            return Err(invalid("basis size must be >= 1"));
        }
        while self.rungs.len() < n {
            let count = self.rungs.len() + 1;
            let floor = self.rungs.last().map_or(0.0, |b| b.depth);
            let depth = min_depth_binding_from(&self.grid, count, floor, &self.search)?;
            self.rungs.push(eigensolve(&self.grid, depth, Some(count))?);
        }
        Ok(&self.rungs[n - 1])
    }

    /// Smallest `N` whose rung reconstructs codeword `k` at `zeta` dB with
    /// at least `fidelity_target`.
    pub fn requirement(
        &mut self,
        zeta: f64,
        fidelity_target: f64,
        k: u8,
    ) -> Result<BasisRequirement> {
        if !(0.0..1.0).contains(&fidelity_target) {
            return Err(invalid(format!(
                "fidelity target must lie in [0, 1), got {fidelity_target}"
            )));
        }
        let spec = GkpSpec::new(k, zeta)?;
        for n in 1..=self.search.max_basis {
            let basis = match self.rung(n) {
                Ok(b) => b,
                Err(Error::Unreachable(msg)) => {
                    return Err(Error::Unreachable(format!(
                        "{zeta} dB not reached before {msg}"
                    )))
                }
                Err(e) => return Err(e),
            };
            let target = gkp_in_lattice(&spec, basis)?;
            if target.reconstruction_fidelity >= fidelity_target {
                return Ok(BasisRequirement {
                    zeta,
                    basis_size: n,
                    fidelity: target.reconstruction_fidelity,
                    depth: basis.depth,
                });
            }
        }
        Err(Error::Unreachable(format!(
            "{zeta} dB needs more than {} bound states for fidelity {fidelity_target}",
            self.search.max_basis
        )))
    }
}

/// Smallest basis of bound lattice states reconstructing codeword `k` at
/// `zeta` dB with the requested fidelity, and the depth binding it. The
/// codeword is mapped with the vacuum width of that depth, so basis size
/// and depth are determined together.
pub fn min_basis_for_squeezing(
    zeta: f64,
    fidelity_target: f64,
    k: u8,
    search: &DepthSearch,
) -> Result<BasisRequirement> {
    BasisLadder::new(*search)?.requirement(zeta, fidelity_target, k)
}

/// Smallest depth on `step, 2 step, ..., max_depth` with at least
/// `count` bound states. Bisection relies on the count being monotone.
pub fn min_depth_binding(count: usize, search: &DepthSearch) -> Result<f64> {
    let grid = build_grid(1, search.points_per_period)?;
    min_depth_binding_from(&grid, count, 0.0, search)
}

fn min_depth_binding_from(
    grid: &lattice::SimGrid,
    count: usize,
    floor: f64,
    search: &DepthSearch,
) -> Result<f64> {
    let n_steps = (search.max_depth / search.step).floor() as usize;
    let bound_at = |i: usize| lattice::count_bound(grid, i as f64 * search.step);
    if n_steps == 0 || bound_at(n_steps) < count {
        return Err(Error::Unreachable(format!(
            "{count} bound states need a depth above {} E_R",
            search.max_depth
        )));
    }
    // `floor` binds fewer states, so the answer lies above it
    let mut lo = ((floor / search.step).floor() as usize).min(n_steps - 1);
    if lo > 0 && bound_at(lo) >= count {
        lo = 0;
    }
    let mut hi = n_steps;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if bound_at(mid) >= count {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi as f64 * search.step)
}

/// Evaluates the basis requirement over several squeezing levels with a
/// shared ladder; output order follows `zetas`.
pub fn squeezing_curve(
    zetas: &[f64],
    fidelity_target: f64,
    k: u8,
    search: &DepthSearch,
) -> Result<Vec<BasisRequirement>> {
    let mut ladder = BasisLadder::new(*search)?;
    zetas
        .iter()
        .map(|&z| ladder.requirement(z, fidelity_target, k))
        .collect()
}
