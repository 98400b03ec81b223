// Copyright 2026 The gkp-lattice Authors
// SPDX-License-Identifier: Apache-2.0

//! Plot-ready CSV tables and JSON sidecars. Floats are written in Rust's
//! shortest round-trip form, so identical inputs give identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::analysis::{PhaseAxes, RobustnessCurve, WignerMap};
use crate::error::{Error, Result};
use crate::feasibility::FeasibilityMap;
use crate::gkp::{BasisRequirement, GkpWavefunction, LatticeTarget};
use crate::lattice::FockBasis;
use crate::optimizer::{ControlSpectrum, HistoryEntry};
use crate::propagator::{ControlWaveform, Trajectory};
use crate::units::{harmonic_frequency, UnitSystem};

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Writes `header` and one record per row.
pub fn write_table<I, R>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = f64>,
{
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    let mut buf = Vec::with_capacity(header.len());
    for row in rows {
        buf.clear();
        buf.extend(row.into_iter().map(|v| v.to_string()));
        w.write_record(&buf).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn names(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// `n, energy, harmonic, central_weight` in `E_R`; the harmonic column is
/// `(n + 1/2) hbar omega - U_r/2` on the same energy origin.
pub fn energies_csv(path: &Path, basis: &FockBasis) -> Result<()> {
    let hw = harmonic_frequency(basis.depth)?;
    let rows = basis.energies.iter().enumerate().map(|(n, &e)| {
        let harm = (n as f64 + 0.5) * hw - 0.5 * basis.depth;
        [n as f64, e, harm, basis.central_weights[n]]
    });
    write_table(
        path,
        &names(&["n", "energy", "harmonic", "central_weight"]),
        rows,
    )
}

/// `x` followed by one column per eigenfunction.
pub fn eigenstates_csv(path: &Path, basis: &FockBasis) -> Result<()> {
    let mut header = names(&["x"]);
    header.extend((0..basis.len()).map(|n| format!("psi_{n}")));
    let rows = (0..basis.grid.n_points)
        .map(|j| std::iter::once(basis.grid.x(j)).chain(basis.states.iter().map(move |s| s[j])));
    write_table(path, &header, rows)
}

/// `X, re, im` of a quadrature wavefunction.
pub fn gkp_csv(path: &Path, wf: &GkpWavefunction) -> Result<()> {
    let rows =
        wf.x.iter()
            .zip(&wf.amplitudes)
            .map(|(x, a)| [*x, a.re, a.im]);
    write_table(path, &names(&["X", "re", "im"]), rows)
}

/// `n, re, im, population` of the Fock-space target.
pub fn fock_csv(path: &Path, target: &LatticeTarget) -> Result<()> {
    let rows = target
        .fock
        .amplitudes
        .iter()
        .enumerate()
        .map(|(n, c)| [n as f64, c.re, c.im, c.norm_sqr()]);
    write_table(path, &names(&["n", "re", "im", "population"]), rows)
}

/// `x, re, im` of a grid state.
pub fn grid_state_csv(
    path: &Path,
    basis: &FockBasis,
    amplitudes: &[num_complex::Complex64],
) -> Result<()> {
    let rows = amplitudes
        .iter()
        .enumerate()
        .map(|(j, a)| [basis.grid.x(j), a.re, a.im]);
    write_table(path, &names(&["x", "re", "im"]), rows)
}

/// `zeta_db, basis_size, depth, fidelity`.
pub fn curve_csv(path: &Path, curve: &[BasisRequirement]) -> Result<()> {
    let rows = curve
        .iter()
        .map(|r| [r.zeta, r.basis_size as f64, r.depth, r.fidelity]);
    write_table(
        path,
        &names(&["zeta_db", "basis_size", "depth", "fidelity"]),
        rows,
    )
}

/// `t_s, t, u, u_nm`: time in seconds and lattice units, shift in lattice
/// length units and nanometres. One row per sample, at its start time.
pub fn waveform_csv(path: &Path, waveform: &ControlWaveform, units: &UnitSystem) -> Result<()> {
    let rows = waveform
        .times()
        .into_iter()
        .zip(&waveform.samples)
        .map(|(t, &u)| [t * units.time_unit, t, u, u * units.length_unit * 1e9]);
    write_table(path, &names(&["t_s", "t", "u", "u_nm"]), rows)
}

/// `frequency_hz, magnitude, filter_gain`.
pub fn spectrum_csv(path: &Path, spectrum: &ControlSpectrum) -> Result<()> {
    let rows = spectrum
        .frequency
        .iter()
        .zip(&spectrum.magnitude)
        .zip(&spectrum.window)
        .map(|((f, m), g)| [*f, *m, *g]);
    write_table(
        path,
        &names(&["frequency_hz", "magnitude", "filter_gain"]),
        rows,
    )
}

/// `iteration, cost, fidelity, gradient_norm`.
pub fn history_csv(path: &Path, history: &[HistoryEntry]) -> Result<()> {
    let rows = history
        .iter()
        .map(|h| [h.iteration as f64, h.cost, h.fidelity, h.gradient_norm]);
    write_table(
        path,
        &names(&["iteration", "cost", "fidelity", "gradient_norm"]),
        rows,
    )
}

/// `t_s, t, pop_0.., x_mean, p_mean`.
pub fn trajectory_csv(path: &Path, tr: &Trajectory, units: &UnitSystem) -> Result<()> {
    let levels = tr.populations.first().map_or(0, Vec::len);
    let mut header = names(&["t_s", "t"]);
    header.extend((0..levels).map(|n| format!("pop_{n}")));
    header.extend(names(&["x_mean", "p_mean"]));
    let rows = (0..tr.time.len()).map(|i| {
        let mut r = vec![tr.time[i] * units.time_unit, tr.time[i]];
        r.extend(&tr.populations[i]);
        r.push(tr.x_mean[i]);
        r.push(tr.p_mean[i]);
        r
    });
    write_table(path, &header, rows)
}

#[derive(Serialize)]
struct WignerHeader<'a> {
    columns: [&'a str; 3],
    quadrature: &'a str,
    center: f64,
    scale: f64,
    n_x: usize,
    n_p: usize,
    dx: f64,
    dp: f64,
    /// Rows and columns kept in the CSV.
    stride: (usize, usize),
    integral: f64,
    min: f64,
    max: f64,
    clipped: f64,
}

/// `X, P, W` in row-major order on every `stride.0`-th row and
/// `stride.1`-th column, plus a JSON header whose statistics cover the
/// full map.
pub fn wigner_csv(
    csv_path: &Path,
    json_path: &Path,
    map: &WignerMap,
    axes: &PhaseAxes,
    stride: (usize, usize),
) -> Result<()> {
    let np = map.p.len();
    let (sx, sp) = (stride.0.max(1), stride.1.max(1));
    let rows = (0..map.x.len()).step_by(sx).flat_map(|i| {
        (0..np)
            .step_by(sp)
            .map(move |k| [map.x[i], map.p[k], map.values[i * np + k]])
    });
    write_table(csv_path, &names(&["X", "P", "W"]), rows)?;
    let header = WignerHeader {
        columns: ["X", "P", "W"],
        quadrature: "X = (x - center) / scale with x in 1/k_L; [X, P] = i, vacuum variance 1/2",
        center: axes.center,
        scale: axes.scale,
        n_x: map.x.len(),
        n_p: np,
        dx: map.dx,
        dp: map.dp,
        stride: (sx, sp),
        integral: map.integral(),
        min: map.min(),
        max: map.max(),
        clipped: map.clipped,
    };
    write_json(json_path, &header)
}

/// `scale, depth, fidelity`.
pub fn robustness_csv(path: &Path, curve: &RobustnessCurve) -> Result<()> {
    let rows = curve
        .scales
        .iter()
        .zip(&curve.fidelities)
        .map(|(s, f)| [*s, s * curve.nominal_depth, *f]);
    write_table(path, &names(&["scale", "depth", "fidelity"]), rows)
}

#[derive(Serialize)]
struct MapHeader<'a> {
    columns: [&'a str; 4],
    units: [&'a str; 4],
    species: &'a str,
    waist: f64,
    retro_reflected: bool,
    n_power: usize,
    n_wavelength: usize,
    contour_depth: f64,
}

/// `power, wavelength, depth, lifetime` for every grid point, a contour
/// table `wavelength, power, lifetime` and a JSON header.
pub fn feasibility_csv(
    map_path: &Path,
    contour_path: &Path,
    json_path: &Path,
    map: &FeasibilityMap,
) -> Result<()> {
    let np = map.powers.len();
    let rows = (0..map.wavelengths.len() * np).map(|idx| {
        let (i, j) = (idx / np, idx % np);
        [
            map.powers[j],
            map.wavelengths[i],
            map.depth[idx],
            map.lifetime[idx],
        ]
    });
    write_table(
        map_path,
        &names(&["power", "wavelength", "depth", "lifetime"]),
        rows,
    )?;
    let rows = (0..map.wavelengths.len()).map(|i| {
        [
            map.wavelengths[i],
            map.contour_power[i],
            map.contour_lifetime[i],
        ]
    });
    write_table(
        contour_path,
        &names(&["wavelength", "power", "lifetime"]),
        rows,
    )?;
    let header = MapHeader {
        columns: ["power", "wavelength", "depth", "lifetime"],
        units: ["W", "m", "E_R", "s"],
        species: &map.species,
        waist: map.waist,
        retro_reflected: map.retro_reflected,
        n_power: np,
        n_wavelength: map.wavelengths.len(),
        contour_depth: map.contour_depth,
    };
    write_json(json_path, &header)
}
