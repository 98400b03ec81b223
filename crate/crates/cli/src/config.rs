// Copyright 2026 The gkp-lattice Authors
// SPDX-License-Identifier: Apache-2.0

//! Run configuration. Every section is optional and falls back to the Rb
//! defaults; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use gkp_core::analysis::PhaseWindow;
use gkp_core::feasibility::FeasibilitySpec;
use gkp_core::gkp::{DepthSearch, GkpSpec};
use gkp_core::lattice::build_grid;
use gkp_core::optimizer::OptimizerConfig;
use gkp_core::units::{AtomSpecies, UnitSystem};

use crate::CliError;

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "GKP_OUTPUT_ROOT";
const DEFAULT_OUTPUT_ROOT: &str = "gkp-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Output root. Precedence: `--out`, this key, `$GKP_OUTPUT_ROOT`,
    /// then `./gkp-out`.
    pub output_dir: Option<PathBuf>,
    /// Bundled species name, e.g. `Rb87` or `Cs`.
    pub species: String,
    pub lattice: LatticeConfig,
    pub target: TargetConfig,
    pub optimizer: OptimizerConfig,
    pub search: SearchConfig,
    pub analysis: AnalysisConfig,
    pub sweep: SweepConfig,
    pub feasibility: FeasibilityConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: None,
            species: "Rb87".into(),
            lattice: LatticeConfig::default(),
            target: TargetConfig::default(),
            optimizer: OptimizerConfig::default(),
            search: SearchConfig::default(),
            analysis: AnalysisConfig::default(),
            sweep: SweepConfig::default(),
            feasibility: FeasibilityConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeConfig {
    /// m
    pub wavelength: f64,
    /// `U_r` in `E_R`.
    pub depth: f64,
    pub periods: usize,
    pub points_per_period: usize,
    /// Basis size; 0 keeps every bound state.
    pub basis: usize,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self {
            wavelength: 785e-9,
            depth: 1500.0,
            periods: 1,
            points_per_period: 128,
            basis: 24,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Gkp,
    Fock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetConfig {
    /// Fock level the atom starts in.
    pub initial: usize,
    pub kind: TargetKind,
    /// Logical GKP state, 0 or 1.
    pub k: u8,
    pub zeta_db: f64,
    /// Fock level for `kind = "fock"`.
    pub level: usize,
    /// Smallest acceptable captured probability of the GKP state.
    pub min_reconstruction: f64,
}

impl Default for TargetConfig {
    fn default() -> Self {
        Self {
            initial: 0,
            kind: TargetKind::Gkp,
            k: 0,
            zeta_db: 10.0,
            level: 1,
            min_reconstruction: 0.99,
        }
    }
}

/// Durations for a time-optimal scan, s. Empty runs a single optimization
/// at `optimizer.duration`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub durations: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub x_max: f64,
    pub p_max: f64,
    pub oversample: usize,
    pub p_pad: usize,
    /// Periods of the grid the Wigner maps are drawn on.
    pub periods: usize,
    pub points_per_period: usize,
    /// Depth scale factors for the robustness curve.
    pub robustness_scales: Vec<f64>,
    /// Samples between trajectory rows.
    pub trajectory_stride: usize,
    pub trajectory_levels: usize,
    /// Wigner CSVs keep every n-th X row and P column.
    pub export_stride_x: usize,
    pub export_stride_p: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let offsets = [
            -1e-2, -5e-3, -3e-3, -2e-3, -1e-3, -5e-4, 0.0, 5e-4, 1e-3, 2e-3, 3e-3, 5e-3, 1e-2,
        ];
        Self {
            x_max: 30.0,
            p_max: 14.0,
            oversample: 2,
            p_pad: 2,
            periods: 3,
            points_per_period: 256,
            robustness_scales: offsets.iter().map(|d| 1.0 + d).collect(),
            trajectory_stride: 10,
            trajectory_levels: 8,
            export_stride_x: 4,
            export_stride_p: 8,
        }
    }
}

impl AnalysisConfig {
    pub fn window(&self) -> PhaseWindow {
        PhaseWindow {
            x_max: self.x_max,
            p_max: self.p_max,
            oversample: self.oversample,
            p_pad: self.p_pad,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub zeta_min: f64,
    pub zeta_max: f64,
    pub zeta_step: f64,
    pub fidelity: f64,
    pub depth_step: f64,
    pub max_depth: f64,
    pub points_per_period: usize,
    pub max_basis: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let d = DepthSearch::default();
        Self {
            zeta_min: 2.0,
            zeta_max: 12.0,
            zeta_step: 0.5,
            fidelity: 0.99,
            depth_step: d.step,
            max_depth: d.max_depth,
            points_per_period: d.points_per_period,
            max_basis: d.max_basis,
        }
    }
}

impl SweepConfig {
    pub fn search(&self) -> DepthSearch {
        DepthSearch {
            step: self.depth_step,
            max_depth: self.max_depth,
            points_per_period: self.points_per_period,
            max_basis: self.max_basis,
        }
    }

    pub fn zetas(&self) -> Vec<f64> {
        let n = ((self.zeta_max - self.zeta_min) / self.zeta_step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| self.zeta_min + i as f64 * self.zeta_step)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeasibilityConfig {
    pub species: Vec<String>,
    /// m
    pub waist: f64,
    /// W
    pub power_min: f64,
    pub power_max: f64,
    /// m; unset means the species' D2-D1 window less 0.1 nm at each end.
    pub wavelength_min: Option<f64>,
    pub wavelength_max: Option<f64>,
    pub n_power: usize,
    pub n_wavelength: usize,
    pub retro_reflected: bool,
    /// Iso-depth line and ratio depth, `E_R`; unset means `lattice.depth`.
    pub contour_depth: Option<f64>,
    /// Equal power budget for the lifetime ratio, W.
    pub ratio_power: f64,
}

impl Default for FeasibilityConfig {
    fn default() -> Self {
        Self {
            species: vec!["Rb87".into(), "Cs133".into()],
            waist: FeasibilitySpec::DEFAULT_WAIST,
            power_min: 1e-3,
            power_max: 1.0,
            wavelength_min: None,
            wavelength_max: None,
            n_power: 101,
            n_wavelength: 201,
            retro_reflected: true,
            contour_depth: None,
            ratio_power: 1.0,
        }
    }
}

impl FeasibilityConfig {
    pub fn spec(&self, species: AtomSpecies) -> FeasibilitySpec {
        let base = FeasibilitySpec::for_species(species);
        FeasibilitySpec {
            waist: self.waist,
            power_min: self.power_min,
            power_max: self.power_max,
            wavelength_min: self.wavelength_min.unwrap_or(base.wavelength_min),
            wavelength_max: self.wavelength_max.unwrap_or(base.wavelength_max),
            retro_reflected: self.retro_reflected,
            ..base
        }
    }
}

fn input(msg: impl std::fmt::Display) -> CliError {
    CliError::Input(msg.to_string())
}

impl RunConfig {
    /// Reads and validates a config file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| input(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| input(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Schema checks that need no heavy computation. Physics that turns out
    /// infeasible later is reported separately.
    pub fn validate(&self) -> Result<(), CliError> {
        let species = AtomSpecies::builtin(&self.species).map_err(input)?;
        UnitSystem::new(&species, self.lattice.wavelength).map_err(input)?;
        let l = &self.lattice;
        if !(l.depth >= 0.0) || !l.depth.is_finite() {
            return Err(input(format!(
                "lattice.depth must be >= 0, got {}",
                l.depth
            )));
        }
        build_grid(l.periods, l.points_per_period).map_err(input)?;
        let t = &self.target;
        GkpSpec::new(t.k, t.zeta_db).map_err(|e| input(format!("target: {e}")))?;
        if !(t.min_reconstruction > 0.0 && t.min_reconstruction <= 1.0) {
            return Err(input("target.min_reconstruction must lie in (0, 1]"));
        }
        if l.basis > 0
            && (t.initial >= l.basis || (t.kind == TargetKind::Fock && t.level >= l.basis))
        {
            return Err(input(
                "target.initial and target.level must be below lattice.basis",
            ));
        }
        self.optimizer
            .validate()
            .map_err(|e| input(format!("optimizer: {e}")))?;
        let d = &self.search.durations;
        if d.iter().any(|t| !(*t > 0.0 && t.is_finite())) || d.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(input(
                "search.durations must be positive and strictly ascending",
            ));
        }
        let a = &self.analysis;
        if !(a.x_max > 0.0 && a.p_max > 0.0) || a.oversample == 0 || a.p_pad == 0 {
            return Err(input(
                "analysis window extents and factors must be positive",
            ));
        }
        build_grid(a.periods, a.points_per_period).map_err(|e| input(format!("analysis: {e}")))?;
        if a.robustness_scales
            .iter()
            .any(|s| !(*s > 0.0 && s.is_finite()))
        {
            return Err(input("analysis.robustness_scales must be positive"));
        }
        if a.trajectory_stride == 0 || a.export_stride_x == 0 || a.export_stride_p == 0 {
            return Err(input("analysis strides must be >= 1"));
        }
        let s = &self.sweep;
        if !(s.zeta_step > 0.0 && s.zeta_max >= s.zeta_min && s.zeta_min > 0.0) {
            return Err(input(
                "sweep needs 0 < zeta_min <= zeta_max and zeta_step > 0",
            ));
        }
        if !(s.fidelity > 0.0 && s.fidelity < 1.0 && s.depth_step > 0.0 && s.max_depth > 0.0) {
            return Err(input(
                "sweep fidelity must lie in (0, 1); depth_step and max_depth > 0",
            ));
        }
        let f = &self.feasibility;
        if f.species.is_empty() {
            return Err(input("feasibility.species must name at least one species"));
        }
        for name in &f.species {
            AtomSpecies::builtin(name).map_err(input)?;
        }
        if f.n_power == 0 || f.n_wavelength == 0 {
            return Err(input("feasibility grids need at least one point"));
        }
        if !(f.ratio_power > 0.0) || f.contour_depth.is_some_and(|d| !(d > 0.0)) {
            return Err(input(
                "feasibility.ratio_power and contour_depth must be > 0",
            ));
        }
        Ok(())
    }

    pub fn species(&self) -> AtomSpecies {
        AtomSpecies::builtin(&self.species).expect("validated")
    }

    pub fn units(&self) -> UnitSystem {
        UnitSystem::new(&self.species(), self.lattice.wavelength).expect("validated")
    }

    /// Output root after applying the precedence rules.
    pub fn resolve_output(&mut self, flag: Option<PathBuf>) {
        let root = flag
            .or_else(|| self.output_dir.clone())
            .or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT));
        self.output_dir = Some(root);
    }

    pub fn output_root(&self) -> &Path {
        self.output_dir.as_deref().expect("resolved before use")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
