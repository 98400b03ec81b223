// Copyright 2026 The gkp-lattice Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use gkp_core::analysis::{depth_robustness, resynthesize, wigner, PhaseAxes, QuadraticFit};
use gkp_core::export;
use gkp_core::feasibility::{
    best_lifetime_at_depth, dipole_depth, feasibility_map, scattering_lifetime, OperatingPoint,
};
use gkp_core::gkp::{build_gkp, default_quadrature_grid, gkp_in_lattice, squeezing_curve, GkpSpec};
use gkp_core::lattice::{build_grid, eigensolve, FockBasis, QuantumState};
use gkp_core::optimizer::{
    time_optimal_search, ControlProblem, CostTerms, OptimizationResult, OptimizerConfig,
    Termination,
};
use gkp_core::units::{harmonic_frequency, AtomSpecies};

use crate::config::{RunConfig, TargetKind};
use crate::CliError;

/// Creates `<root>/<name>` and writes the resolved config into it. An
/// identical existing echo is left untouched, so rerunning from the echo
/// never rewrites its own input.
fn prepare(cfg: &RunConfig, name: &str) -> Result<PathBuf, CliError> {
    let dir = cfg.output_root().join(name);
    std::fs::create_dir_all(&dir)?;
    let echo = dir.join("config.toml");
    let text = cfg.to_toml();
    if std::fs::read_to_string(&echo).ok().as_deref() != Some(text.as_str()) {
        std::fs::write(&echo, text)?;
    }
    Ok(dir)
}

fn basis_for(cfg: &RunConfig) -> Result<FockBasis, CliError> {
    let l = &cfg.lattice;
    let grid = build_grid(l.periods, l.points_per_period)?;
    let count = if l.basis == 0 { None } else { Some(l.basis) };
    Ok(eigensolve(&grid, l.depth, count)?)
}

struct States {
    basis: FockBasis,
    initial: QuantumState,
    target: QuantumState,
    reconstruction: Option<f64>,
}

fn states(cfg: &RunConfig) -> Result<States, CliError> {
    let basis = basis_for(cfg)?;
    let t = &cfg.target;
    let initial = basis.state(t.initial);
    let (target, reconstruction) = match t.kind {
        TargetKind::Fock => (basis.state(t.level), None),
        TargetKind::Gkp => {
            let spec = GkpSpec::new(t.k, t.zeta_db)?;
            let lt = gkp_in_lattice(&spec, &basis)?;
            if lt.reconstruction_fidelity < t.min_reconstruction {
                return Err(unreachable_target(cfg, &basis, lt.reconstruction_fidelity));
            }
            (lt.grid_state, Some(lt.reconstruction_fidelity))
        }
    };
    Ok(States {
        basis,
        initial,
        target,
        reconstruction,
    })
}

fn unreachable_target(cfg: &RunConfig, basis: &FockBasis, captured: f64) -> CliError {
    CliError::Infeasible(format!(
        "a {}-state basis at U_r = {} E_R captures {captured:.4} of the {} dB GKP{} state, below target.min_reconstruction = {}",
        basis.len(),
        cfg.lattice.depth,
        cfg.target.zeta_db,
        cfg.target.k,
        cfg.target.min_reconstruction
    ))
}

#[derive(Serialize)]
struct SpectrumSummary {
    depth: f64,
    n_bound: usize,
    barrier_top: f64,
    /// `E_R`
    hbar_omega: f64,
    /// Hz
    harmonic_frequency_hz: f64,
    recoil_frequency_hz: f64,
    energies: Vec<f64>,
}

pub fn spectrum(cfg: &RunConfig) -> Result<(), CliError> {
    let dir = prepare(cfg, "spectrum")?;
    let l = &cfg.lattice;
    let grid = build_grid(l.periods, l.points_per_period)?;
    let basis = if l.depth > 0.0 {
        eigensolve(&grid, l.depth, None)?
    } else {
        FockBasis {
            depth: 0.0,
            grid,
            energies: vec![],
            states: vec![],
            n_bound: 0,
            central_weights: vec![],
        }
    };
    export::energies_csv(&dir.join("energies.csv"), &basis)?;
    export::eigenstates_csv(&dir.join("eigenstates.csv"), &basis)?;
    let units = cfg.units();
    let hw = harmonic_frequency(l.depth)?;
    let summary = SpectrumSummary {
        depth: l.depth,
        n_bound: basis.n_bound,
        barrier_top: 0.5 * l.depth,
        hbar_omega: hw,
        harmonic_frequency_hz: hw * units.recoil_frequency(),
        recoil_frequency_hz: units.recoil_frequency(),
        energies: basis.energies.clone(),
    };
    export::write_json(&dir.join("summary.json"), &summary)?;
    if basis.n_bound == 0 {
        println!("U_r = {} E_R: no bound states", l.depth);
    } else {
        println!(
            "U_r = {} E_R: {} bound states, hbar omega = {:.3} E_R ({:.1} kHz)",
            l.depth,
            basis.n_bound,
            hw,
            summary.harmonic_frequency_hz * 1e-3
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct TargetSummary {
    spec: GkpSpec,
    basis_size: usize,
    depth: f64,
    reconstruction_fidelity: f64,
    meets_threshold: bool,
}

pub fn target(cfg: &RunConfig, sweep: bool) -> Result<(), CliError> {
    let dir = prepare(cfg, "target")?;
    let t = &cfg.target;
    let spec = GkpSpec::new(t.k, t.zeta_db)?;
    let wf = build_gkp(&spec, &default_quadrature_grid(&spec))?;
    export::gkp_csv(&dir.join("gkp_wavefunction.csv"), &wf)?;
    if sweep {
        let s = &cfg.sweep;
        let curve = squeezing_curve(&s.zetas(), s.fidelity, t.k, &s.search())?;
        export::curve_csv(&dir.join("basis_curve.csv"), &curve)?;
        for r in &curve {
            println!(
                "zeta = {:>5.2} dB: N = {:>3}, U_r = {:>6} E_R, F = {:.4}",
                r.zeta, r.basis_size, r.depth, r.fidelity
            );
        }
    }
    let basis = basis_for(cfg)?;
    let lt = gkp_in_lattice(&spec, &basis)?;
    export::fock_csv(&dir.join("fock_coefficients.csv"), &lt)?;
    export::grid_state_csv(
        &dir.join("lattice_target.csv"),
        &basis,
        &lt.grid_state.amplitudes,
    )?;
    let summary = TargetSummary {
        spec,
        basis_size: basis.len(),
        depth: cfg.lattice.depth,
        reconstruction_fidelity: lt.reconstruction_fidelity,
        meets_threshold: lt.reconstruction_fidelity >= t.min_reconstruction,
    };
    export::write_json(&dir.join("summary.json"), &summary)?;
    println!(
        "GKP{} at {} dB in {} states at U_r = {} E_R: captured {:.5}",
        t.k,
        t.zeta_db,
        basis.len(),
        cfg.lattice.depth,
        lt.reconstruction_fidelity
    );
    if !summary.meets_threshold {
        return Err(unreachable_target(cfg, &basis, lt.reconstruction_fidelity));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScanEntry {
    duration_s: f64,
    fidelity: f64,
    reached_goal: bool,
    termination: Termination,
}

/// `result.json` of an optimization bundle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizeReport {
    reached_goal: bool,
    fidelity: f64,
    duration_s: f64,
    termination: Termination,
    iterations: usize,
    evaluations: usize,
    start: u64,
    cap_ratio: f64,
    terms: CostTerms,
    reconstruction_fidelity: Option<f64>,
    substeps: usize,
    /// Split step, lattice time units.
    step: f64,
    time_optimal_duration_s: Option<f64>,
    scan: Vec<ScanEntry>,
    /// Lattice length units, one per sample.
    samples: Vec<f64>,
}

fn problem_for(cfg: &RunConfig, st: &States, duration: f64) -> gkp_core::Result<ControlProblem> {
    let oc = OptimizerConfig {
        duration,
        ..cfg.optimizer.clone()
    };
    ControlProblem::new(
        st.basis.grid,
        cfg.lattice.depth,
        cfg.units(),
        &st.initial,
        &st.target,
        &oc,
    )
}

pub fn optimize(cfg: &RunConfig) -> Result<(), CliError> {
    let dir = prepare(cfg, "optimize")?;
    let st = states(cfg)?;
    let durations = if cfg.search.durations.is_empty() {
        vec![cfg.optimizer.duration]
    } else {
        cfg.search.durations.clone()
    };
    let scan = time_optimal_search(&durations, |t| problem_for(cfg, &st, t))?;
    let best: &OptimizationResult = match scan.best() {
        Some(b) => b,
        None => scan
            .results
            .iter()
            .max_by(|a, b| a.fidelity.total_cmp(&b.fidelity))
            .expect("at least one duration"),
    };
    let problem = problem_for(cfg, &st, best.duration)?;
    let units = cfg.units();
    export::waveform_csv(&dir.join("waveform.csv"), &best.waveform, &units)?;
    export::spectrum_csv(&dir.join("spectrum.csv"), &best.spectrum)?;
    export::history_csv(&dir.join("history.csv"), &best.history)?;
    let a = &cfg.analysis;
    let tr = problem.transfer.stepper.trajectory(
        &st.initial,
        &best.waveform,
        problem.transfer.substeps,
        a.trajectory_stride,
        &st.basis,
        a.trajectory_levels,
    )?;
    export::trajectory_csv(&dir.join("trajectory.csv"), &tr, &units)?;

    let goal = cfg.optimizer.fidelity_goal;
    let report = OptimizeReport {
        reached_goal: best.reached_goal(goal),
        fidelity: best.fidelity,
        duration_s: best.duration,
        termination: best.termination,
        iterations: best.iterations,
        evaluations: best.evaluations,
        start: best.start,
        cap_ratio: best.cap_ratio,
        terms: best.terms,
        reconstruction_fidelity: st.reconstruction,
        substeps: problem.transfer.substeps,
        step: problem.transfer.stepper.h,
        time_optimal_duration_s: scan.duration,
        scan: scan
            .results
            .iter()
            .map(|r| ScanEntry {
                duration_s: r.duration,
                fidelity: r.fidelity,
                reached_goal: r.reached_goal(goal),
                termination: r.termination,
            })
            .collect(),
        samples: best.waveform.samples.clone(),
    };
    export::write_json(&dir.join("result.json"), &report)?;
    for s in &report.scan {
        println!(
            "T = {:>7.2} us: F = {:.5} ({}){}",
            s.duration_s * 1e6,
            s.fidelity,
            s.termination,
            if s.reached_goal { ", goal reached" } else { "" }
        );
    }
    if !report.reached_goal {
        println!("goal F >= {goal} not reached; best result kept");
    }
    Ok(())
}

#[derive(Serialize)]
struct MapStats {
    integral: f64,
    min: f64,
    max: f64,
    leaked: f64,
}

#[derive(Serialize)]
struct AnalyzeReport {
    stored_fidelity: f64,
    recomputed_fidelity: f64,
    difference: f64,
    duration_s: f64,
    wigner_target: MapStats,
    wigner_achieved: MapStats,
    nominal_depth: f64,
    robustness_fit: Option<QuadraticFit>,
}

fn read_bundle(bundle: &Path) -> Result<(RunConfig, OptimizeReport), CliError> {
    let missing = |what: &str| CliError::Input(format!("no {what} in bundle {}", bundle.display()));
    let cfg_path = bundle.join("config.toml");
    let res_path = bundle.join("result.json");
    if !cfg_path.is_file() {
        return Err(missing("config.toml"));
    }
    if !res_path.is_file() {
        return Err(missing("result.json"));
    }
    let cfg = RunConfig::load(&cfg_path)?;
    let text = std::fs::read_to_string(&res_path)?;
    let report: OptimizeReport = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", res_path.display())))?;
    Ok((cfg, report))
}

pub fn analyze(cfg: &RunConfig, own_analysis: bool, bundle: &Path) -> Result<(), CliError> {
    let (mut run, report) = read_bundle(bundle)?;
    // an explicit config supplies the analysis settings and output root
    run.output_dir = cfg.output_dir.clone();
    if own_analysis {
        run.analysis = cfg.analysis.clone();
    }
    let dir = prepare(&run, "analyze")?;
    let st = states(&run)?;
    let problem = problem_for(&run, &st, report.duration_s)?;
    if report.samples.len() != problem.n_samples() {
        return Err(CliError::Input(
            "bundle waveform length does not match its config".into(),
        ));
    }
    let recomputed = problem.transfer.fidelity(&report.samples)?;
    let achieved = problem.transfer.final_state(&report.samples)?;

    let a = &run.analysis;
    let depth = run.lattice.depth;
    let src = eigensolve(&st.basis.grid, depth, None)?;
    let wide = eigensolve(&build_grid(a.periods, a.points_per_period)?, depth, None)?;
    let axes = PhaseAxes::for_depth(depth)?;
    let mut stats = Vec::new();
    for (name, state) in [("target", &st.target), ("achieved", &achieved)] {
        let (moved, leaked) = resynthesize(state, &src, &wide)?;
        let map = wigner(&moved, &axes, &a.window())?;
        export::wigner_csv(
            &dir.join(format!("wigner_{name}.csv")),
            &dir.join(format!("wigner_{name}.json")),
            &map,
            &axes,
            (a.export_stride_x, a.export_stride_p),
        )?;
        stats.push(MapStats {
            integral: map.integral(),
            min: map.min(),
            max: map.max(),
            leaked,
        });
    }

    let curve = depth_robustness(&problem, &report.samples, &a.robustness_scales)?;
    export::robustness_csv(&dir.join("robustness.csv"), &curve)?;
    let fit = curve.quadratic_fit(2e-3).ok();
    let achieved_stats = stats.pop().expect("two maps");
    let target_stats = stats.pop().expect("two maps");
    let out = AnalyzeReport {
        stored_fidelity: report.fidelity,
        recomputed_fidelity: recomputed,
        difference: (recomputed - report.fidelity).abs(),
        duration_s: report.duration_s,
        wigner_target: target_stats,
        wigner_achieved: achieved_stats,
        nominal_depth: depth,
        robustness_fit: fit,
    };
    export::write_json(&dir.join("report.json"), &out)?;
    println!(
        "F = {:.6} (stored {:.6}); Wigner min target {:.3}, achieved {:.3}",
        recomputed, report.fidelity, out.wigner_target.min, out.wigner_achieved.min
    );
    if let Some(f) = curve.fidelity_near(1.001) {
        println!("F at +0.1% depth: {f:.5}");
    }
    Ok(())
}

#[derive(Serialize)]
struct SpeciesSummary {
    species: String,
    /// Longest lifetime at the ratio depth within `ratio_power`.
    best: Option<OperatingPoint>,
    note: Option<String>,
}

#[derive(Serialize)]
struct FeasibilitySummary {
    depth: f64,
    ratio_power: f64,
    species: Vec<SpeciesSummary>,
    /// Lifetime of each species relative to the first.
    lifetime_ratio: Vec<Option<f64>>,
}

pub fn feasibility(cfg: &RunConfig) -> Result<(), CliError> {
    let f = &cfg.feasibility;
    let specs = f
        .species
        .iter()
        .map(|name| {
            let spec = f.spec(AtomSpecies::builtin(name)?);
            spec.validate()?;
            Ok(spec)
        })
        .collect::<gkp_core::Result<Vec<_>>>()?;
    let dir = prepare(cfg, "feasibility")?;
    let depth = f.contour_depth.unwrap_or(cfg.lattice.depth);
    let mut species = Vec::new();
    for spec in &specs {
        let map = feasibility_map(spec, f.n_power, f.n_wavelength, depth)?;
        let name = &spec.species.name;
        export::feasibility_csv(
            &dir.join(format!("{name}_map.csv")),
            &dir.join(format!("{name}_contour.csv")),
            &dir.join(format!("{name}_map.json")),
            &map,
        )?;
        let (best, note) = match best_lifetime_at_depth(depth, f.ratio_power, spec) {
            Ok(p) => (Some(p), None),
            Err(gkp_core::Error::Unreachable(m)) => (None, Some(m)),
            Err(e) => return Err(e.into()),
        };
        match &best {
            Some(p) => println!(
                "{name}: U_r = {depth} E_R within {} W: tau = {:.3} ms at {:.3} nm, {:.1} mW",
                f.ratio_power,
                p.lifetime * 1e3,
                p.wavelength * 1e9,
                p.power * 1e3
            ),
            None => println!(
                "{name}: U_r = {depth} E_R not reachable within {} W",
                f.ratio_power
            ),
        }
        species.push(SpeciesSummary {
            species: name.clone(),
            best,
            note,
        });
    }
    let first = species[0].best.map(|p| p.lifetime);
    let lifetime_ratio: Vec<Option<f64>> = species
        .iter()
        .map(|s| Some(s.best?.lifetime / first?))
        .collect();
    if species.len() > 1 {
        for (s, r) in species.iter().zip(&lifetime_ratio).skip(1) {
            if let Some(r) = r {
                println!("tau_{} / tau_{} = {r:.2}", s.species, species[0].species);
            }
        }
    }
    let summary = FeasibilitySummary {
        depth,
        ratio_power: f.ratio_power,
        species,
        lifetime_ratio,
    };
    export::write_json(&dir.join("summary.json"), &summary)?;
    Ok(())
}

pub fn feasibility_point(
    cfg: &RunConfig,
    species: Option<&str>,
    power: f64,
    wavelength: f64,
) -> Result<(), CliError> {
    let name = species.unwrap_or(&cfg.feasibility.species[0]);
    let spec = cfg.feasibility.spec(AtomSpecies::builtin(name)?);
    let depth = dipole_depth(power, wavelength, &spec)?;
    let tau = scattering_lifetime(power, wavelength, &spec)?;
    println!(
        "{} P = {power} W, lambda = {:.4} nm: U_r = {depth:.2} E_R, tau = {:.4} ms",
        spec.species.name,
        wavelength * 1e9,
        tau * 1e3
    );
    Ok(())
}
