// Copyright 2026 The gkp-lattice Authors
// SPDX-License-Identifier: Apache-2.0

//! Physical constants, alkali species data and the dimensionless lattice
//! unit system.
//!
//! Lengths are measured in `1/k_L`, energies in the recoil energy
//! `E_R = hbar^2 k_L^2 / 2m` and times in `hbar / E_R`. In these units the
//! single-site Hamiltonian is `p^2 + (U_r/2) cos(2(x + u))` with `p = -i d/dx`,
//! where `U_r` is the full (peak-to-peak) lattice depth.

use std::f64::consts::PI;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light, m/s.
pub const C_LIGHT: f64 = 299_792_458.0;
/// Unified atomic mass unit, kg.
pub const AMU: f64 = 1.660_539_066_60e-27;

const SPECIES_DATA: &str = include_str!("../data/species.toml");

/// Fine-structure line data of an alkali atom, SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpecies {
    pub name: String,
    /// kg
    pub mass: f64,
    /// m
    pub d1_wavelength: f64,
    /// m
    pub d2_wavelength: f64,
    /// rad/s
    pub d1_linewidth: f64,
    /// rad/s
    pub d2_linewidth: f64,
}

#[derive(Deserialize)]
struct SpeciesFile {
    species: Vec<AtomSpecies>,
}

impl AtomSpecies {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.mass,
            self.d1_wavelength,
            self.d2_wavelength,
            self.d1_linewidth,
            self.d2_linewidth,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::SpeciesData(format!(
                "{}: non-finite field",
                self.name
            )));
        }
        if self.mass <= 0.0 {
            return Err(Error::SpeciesData(format!(
                "{}: mass must be > 0",
                self.name
            )));
        }
        if !(self.d1_wavelength > self.d2_wavelength && self.d2_wavelength > 0.0) {
            return Err(Error::SpeciesData(format!(
                "{}: expected d1_wavelength > d2_wavelength > 0",
                self.name
            )));
        }
        if self.d1_linewidth <= 0.0 || self.d2_linewidth <= 0.0 {
            return Err(Error::SpeciesData(format!(
                "{}: linewidths must be > 0",
                self.name
            )));
        }
        Ok(())
    }

    /// Looks up a species in the bundled data file. Matching ignores case,
    /// and the bare element symbol selects the bundled isotope.
    pub fn builtin(name: &str) -> Result<AtomSpecies> {
        let all = builtin_species()?;
        let lower = name.to_ascii_lowercase();
        all.iter()
            .find(|s| s.name.to_ascii_lowercase() == lower)
            .or_else(|| {
                all.iter().find(|s| {
                    let sym: String = s.name.chars().take_while(|c| c.is_alphabetic()).collect();
                    sym.to_ascii_lowercase() == lower
                })
            })
            .cloned()
            .ok_or_else(|| Error::UnknownSpecies(name.to_string()))
    }

    pub fn rubidium87() -> AtomSpecies {
        Self::builtin("Rb87").expect("bundled species data contains Rb87")
    }

    pub fn cesium133() -> AtomSpecies {
        Self::builtin("Cs133").expect("bundled species data contains Cs133")
    }

    /// Open wavelength window strictly between the D2 and D1 lines.
    pub fn window(&self) -> (f64, f64) {
        (self.d2_wavelength, self.d1_wavelength)
    }
}

/// Parses species records from TOML text (`[[species]]` tables).
pub fn parse_species(text: &str) -> Result<Vec<AtomSpecies>> {
    let file: SpeciesFile = toml::from_str(text).map_err(|e| Error::SpeciesData(e.to_string()))?;
    for s in &file.species {
        s.validate()?;
    }
    Ok(file.species)
}

pub fn builtin_species() -> Result<Vec<AtomSpecies>> {
    parse_species(SPECIES_DATA)
}

/// `hbar^2 (2 pi / lambda)^2 / 2m`, in joules.
pub fn recoil_energy(species: &AtomSpecies, wavelength: f64) -> Result<f64> {
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(invalid(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    let k = 2.0 * PI / wavelength;
    Ok(HBAR * HBAR * k * k / (2.0 * species.mass))
}

/// Conversion scales between SI and lattice units for one species and
/// lattice wavelength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    /// m
    pub wavelength: f64,
    /// 1/m
    pub wavenumber: f64,
    /// J
    pub recoil_energy: f64,
    /// m, equal to `1/k_L`
    pub length_unit: f64,
    /// s, equal to `hbar/E_R`
    pub time_unit: f64,
    /// kg
    pub mass: f64,
}

impl UnitSystem {
    pub fn new(species: &AtomSpecies, wavelength: f64) -> Result<Self> {
        let recoil = recoil_energy(species, wavelength)?;
        let k = 2.0 * PI / wavelength;
        Ok(Self {
            wavelength,
            wavenumber: k,
            recoil_energy: recoil,
            length_unit: 1.0 / k,
            time_unit: HBAR / recoil,
            mass: species.mass,
        })
    }

    /// Recoil frequency `E_R / h` in Hz.
    pub fn recoil_frequency(&self) -> f64 {
        self.recoil_energy / (2.0 * PI * HBAR)
    }

    pub fn scale(&self, kind: QuantityKind) -> f64 {
        match kind {
            QuantityKind::Length => self.length_unit,
            QuantityKind::Time => self.time_unit,
            QuantityKind::Energy => self.recoil_energy,
            QuantityKind::Frequency => 1.0 / self.time_unit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantityKind {
    Length,
    Time,
    Energy,
    /// Frequencies in Hz map to cycles per `hbar/E_R`.
    Frequency,
}

impl FromStr for QuantityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "length" => Ok(Self::Length),
            "time" => Ok(Self::Time),
            "energy" => Ok(Self::Energy),
            "frequency" => Ok(Self::Frequency),
            other => Err(invalid(format!("unknown quantity kind `{other}`"))),
        }
    }
}

pub fn to_lattice_units(value: f64, kind: QuantityKind, units: &UnitSystem) -> f64 {
    value / units.scale(kind)
}

pub fn from_lattice_units(value: f64, kind: QuantityKind, units: &UnitSystem) -> f64 {
    value * units.scale(kind)
}

/// Harmonic level spacing `hbar omega = 2 sqrt(U_r)` (in `E_R`) from the
/// quadratic expansion of the lattice about a potential minimum.
pub fn harmonic_frequency(depth: f64) -> Result<f64> {
    if !(depth >= 0.0) || !depth.is_finite() {
        return Err(invalid(format!("lattice depth must be >= 0, got {depth}")));
    }
    Ok(2.0 * depth.sqrt())
}
