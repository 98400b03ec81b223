// Copyright 2026 The gkp-lattice Authors
// SPDX-License-Identifier: Apache-2.0

//! Lattice depth and photon-scattering lifetime of an alkali atom in a 1D
//! lattice tuned between its D lines.
//!
//! Two-line rotating-wave model with D2:D1 strength 2:1:
//! `U = sum_i w_i (3 pi c^2 / 2 omega_i^3) (Gamma_i / Delta_i) I` and
//! `Gamma_sc = sum_i w_i (3 pi c^2 / 2 hbar omega_i^3) (Gamma_i / Delta_i)^2 I`
//! with `Delta_i = omega - omega_i`, evaluated at the peak lattice intensity.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::units::{recoil_energy, AtomSpecies, C_LIGHT, HBAR};

const D2_WEIGHT: f64 = 2.0 / 3.0;
const D1_WEIGHT: f64 = 1.0 / 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeasibilitySpec {
    pub species: AtomSpecies,
    /// Beam waist (1/e^2 intensity radius), m.
    pub waist: f64,
    /// Power range, W.
    pub power_min: f64,
    pub power_max: f64,
    /// Wavelength range, m, strictly between the D2 and D1 lines.
    pub wavelength_min: f64,
    pub wavelength_max: f64,
    /// Standing wave from a retro-reflected beam: peak intensity is four
    /// times the single-beam peak.
    pub retro_reflected: bool,
}

impl FeasibilitySpec {
    pub const DEFAULT_WAIST: f64 = 150e-6;

    /// Full D2-D1 window (shrunk by 0.1 nm at each end), 1 mW to 1 W.
    pub fn for_species(species: AtomSpecies) -> Self {
        let (lo, hi) = species.window();
        Self {
            species,
            waist: Self::DEFAULT_WAIST,
            power_min: 1e-3,
            power_max: 1.0,
            wavelength_min: lo + 0.1e-9,
            wavelength_max: hi - 0.1e-9,
            retro_reflected: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.species.validate()?;
        if !(self.waist > 0.0) {
            return Err(invalid(format!("waist must be > 0, got {}", self.waist)));
        }
        if !(self.power_min > 0.0 && self.power_max >= self.power_min)
            || !self.power_max.is_finite()
        {
            return Err(invalid("powers must satisfy 0 < power_min <= power_max"));
        }
        if !(self.wavelength_max >= self.wavelength_min) {
            return Err(invalid("wavelength_min must not exceed wavelength_max"));
        }
        self.check_wavelength(self.wavelength_min)?;
        self.check_wavelength(self.wavelength_max)
    }

    fn check_wavelength(&self, wavelength: f64) -> Result<()> {
        let (lo, hi) = self.species.window();
        if wavelength > lo && wavelength < hi {
            Ok(())
        } else {
            Err(Error::OutOfRange { wavelength, lo, hi })
        }
    }

    /// Peak lattice intensity, W/m^2.
    pub fn peak_intensity(&self, power: f64) -> f64 {
        let single = 2.0 * power / (PI * self.waist * self.waist);
        if self.retro_reflected {
            4.0 * single
        } else {
            single
        }
    }

    /// `(U [J], Gamma_sc [1/s])` per unit intensity.
    fn line_sums(&self, wavelength: f64) -> Result<(f64, f64)> {
        self.check_wavelength(wavelength)?;
        let s = &self.species;
        let omega = 2.0 * PI * C_LIGHT / wavelength;
        let mut u = 0.0;
        let mut g = 0.0;
        for (w, lambda_i, gamma) in [
            (D2_WEIGHT, s.d2_wavelength, s.d2_linewidth),
            (D1_WEIGHT, s.d1_wavelength, s.d1_linewidth),
        ] {
            let omega_i = 2.0 * PI * C_LIGHT / lambda_i;
            let delta = omega - omega_i;
            let pref = w * 3.0 * PI * C_LIGHT * C_LIGHT / (2.0 * omega_i.powi(3));
            u += pref * gamma / delta;
            g += pref / HBAR * (gamma / delta).powi(2);
        }
        Ok((u, g))
    }

    /// Signed dipole potential at peak intensity, J. Negative is attractive.
    pub fn dipole_potential(&self, power: f64, wavelength: f64) -> Result<f64> {
        let (u, _) = self.line_sums(wavelength)?;
        Ok(u * self.peak_intensity(power))
    }
}

fn check_power(power: f64) -> Result<()> {
    if power > 0.0 && power.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("power must be > 0, got {power}")))
    }
}

/// Lattice depth `|U| / E_R(lambda)`.
pub fn dipole_depth(power: f64, wavelength: f64, spec: &FeasibilitySpec) -> Result<f64> {
    check_power(power)?;
    let u = spec.dipole_potential(power, wavelength)?;
    Ok(u.abs() / recoil_energy(&spec.species, wavelength)?)
}

/// `1 / Gamma_sc` at peak intensity, s.
pub fn scattering_lifetime(power: f64, wavelength: f64, spec: &FeasibilitySpec) -> Result<f64> {
    check_power(power)?;
    let (_, g) = spec.line_sums(wavelength)?;
    Ok(1.0 / (g * spec.peak_intensity(power)))
}

/// Power giving `depth` at `wavelength`, W.
pub fn power_for_depth(depth: f64, wavelength: f64, spec: &FeasibilitySpec) -> Result<f64> {
    if !(depth > 0.0) {
        return Err(invalid(format!("depth must be > 0, got {depth}")));
    }
    Ok(depth / dipole_depth(1.0, wavelength, spec)?)
}

/// Lifetime at a fixed depth; independent of power because both the depth
/// and the scattering rate are linear in intensity.
pub fn lifetime_at_depth(depth: f64, wavelength: f64, spec: &FeasibilitySpec) -> Result<f64> {
    let p = power_for_depth(depth, wavelength, spec)?;
    scattering_lifetime(p, wavelength, spec)
}

/// Depth and lifetime sampled over power x wavelength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityMap {
    pub species: String,
    pub waist: f64,
    pub retro_reflected: bool,
    /// W
    pub powers: Vec<f64>,
    /// m
    pub wavelengths: Vec<f64>,
    /// `depth[i * powers.len() + j]` at `wavelengths[i]`, `powers[j]`, in E_R.
    pub depth: Vec<f64>,
    /// Same layout, s.
    pub lifetime: Vec<f64>,
    /// Depth traced as an iso-line.
    pub contour_depth: f64,
    /// Power reaching `contour_depth` at each wavelength, W.
    pub contour_power: Vec<f64>,
    /// Lifetime along the iso-depth line, s.
    pub contour_lifetime: Vec<f64>,
}

impl FeasibilityMap {
    pub fn depth_at(&self, i: usize, j: usize) -> f64 {
        self.depth[i * self.powers.len() + j]
    }

    pub fn lifetime_at(&self, i: usize, j: usize) -> f64 {
        self.lifetime[i * self.powers.len() + j]
    }
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Evaluates the map on `n_power x n_wavelength` points, plus the
/// iso-depth line at `contour_depth`.
pub fn feasibility_map(
    spec: &FeasibilitySpec,
    n_power: usize,
    n_wavelength: usize,
    contour_depth: f64,
) -> Result<FeasibilityMap> {
    spec.validate()?;
    if n_power == 0 || n_wavelength == 0 {
        return Err(invalid("map resolution must be >= 1"));
    }
    let powers = axis(spec.power_min, spec.power_max, n_power);
    let wavelengths = axis(spec.wavelength_min, spec.wavelength_max, n_wavelength);
    let rows = wavelengths
        .par_iter()
        .map(|&lam| {
            let d1 = dipole_depth(1.0, lam, spec)?;
            let t1 = scattering_lifetime(1.0, lam, spec)?;
            let d: Vec<f64> = powers.iter().map(|p| d1 * p).collect();
            let t: Vec<f64> = powers.iter().map(|p| t1 / p).collect();
            let cp = contour_depth / d1;
            Ok((d, t, cp, t1 / cp))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut map = FeasibilityMap {
        species: spec.species.name.clone(),
        waist: spec.waist,
        retro_reflected: spec.retro_reflected,
        powers,
        wavelengths,
        depth: Vec::new(),
        lifetime: Vec::new(),
        contour_depth,
        contour_power: Vec::new(),
        contour_lifetime: Vec::new(),
    };
    for (d, t, cp, ct) in rows {
        map.depth.extend(d);
        map.lifetime.extend(t);
        map.contour_power.push(cp);
        map.contour_lifetime.push(ct);
    }
    Ok(map)
}

/// Longest-lived operating point at a fixed depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub wavelength: f64,
    pub power: f64,
    pub depth: f64,
    pub lifetime: f64,
}

/// Maximizes the lifetime at `depth` over the wavelength range of `spec`,
/// subject to `power <= max_power`. A dense scan is refined by golden
/// section around the best feasible sample.
pub fn best_lifetime_at_depth(
    depth: f64,
    max_power: f64,
    spec: &FeasibilitySpec,
) -> Result<OperatingPoint> {
    spec.validate()?;
    check_power(max_power)?;
    let lams = axis(spec.wavelength_min, spec.wavelength_max, 4001);
    let score = |lam: f64| -> Result<Option<f64>> {
        let p = power_for_depth(depth, lam, spec)?;
        Ok(if p <= max_power {
            Some(lifetime_at_depth(depth, lam, spec)?)
        } else {
            None
        })
    };
    let mut best: Option<(usize, f64)> = None;
    for (i, &lam) in lams.iter().enumerate() {
        if let Some(t) = score(lam)? {
            if best.is_none_or(|(_, b)| t > b) {
                best = Some((i, t));
            }
        }
    }
    let (i, _) = best.ok_or_else(|| {
        Error::Unreachable(format!(
            "depth {depth} E_R needs more than {max_power} W everywhere in the window"
        ))
    })?;
    let mut a = lams[i.saturating_sub(1)];
    let mut b = lams[(i + 1).min(lams.len() - 1)];
    let f = |lam: f64| -> Result<f64> { Ok(score(lam)?.unwrap_or(f64::NEG_INFINITY)) };
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c)? >= f(d)? {
            b = d;
        } else {
            a = c;
        }
    }
    let mut lam = 0.5 * (a + b);
    if f(lam)? < f(lams[i])? {
        lam = lams[i];
    }
    let power = power_for_depth(depth, lam, spec)?;
    Ok(OperatingPoint {
        wavelength: lam,
        power,
        depth,
        lifetime: lifetime_at_depth(depth, lam, spec)?,
    })
}

/// Number of lattice sites (spacing `lambda/2`) along one axis through the
/// beam center whose depth `U0 exp(-2 x^2 / w0^2)` is within `tolerance`
/// of the central value.
pub fn sites_within_tolerance(waist: f64, wavelength: f64, tolerance: f64) -> Result<usize> {
    if !(waist > 0.0 && wavelength > 0.0) {
        return Err(invalid("waist and wavelength must be > 0"));
    }
    if !(tolerance > 0.0 && tolerance < 0.1) {
        return Err(invalid(format!(
            "tolerance must lie in (0, 0.1), got {tolerance}"
        )));
    }
    let x_max = waist * (-(1.0 - tolerance).ln() / 2.0).sqrt();
    let per_side = (x_max / (0.5 * wavelength)).floor() as usize;
    Ok(2 * per_side + 1)
}
