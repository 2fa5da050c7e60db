//! End-to-end experiments: simulate, sample, analyze and write artifacts.
//!
//! Every (experiment, gradient) cell is independent and runs on its own
//! thread. Cells write their CSV to a temporary file and rename it into
//! place; the JSON summary is written last.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::analysis::{extract_peak, linear_fit, pearson, wsl_length_from_boundary, PeakEstimate};
use crate::config::{ExperimentConfig, ExperimentKind, HamiltonianKind, NoiseMode};
use crate::dynamics::{make_collapse_ops, LindbladOptions, QuantumState, SiteState};
use crate::error::{Error, Result};
use crate::freefermion::wsl_length_analytic;
use crate::measurement::{group_means, sample_shots, ConfusionMatrix, Estimator, GroupedEstimate};
use crate::model::{
    build_bose_hubbard_hamiltonian, build_observable, build_xy_hamiltonian, Axis, LatticeBasis,
    ObservableKind, PotentialSpec,
};
use crate::observables::{evolve, expectation, format_sig, EvolutionMode, TrajectoryTable};
use crate::units::angular_to_mhz;

/// Evolved snapshots of one cell together with what is needed to evaluate
/// observables on them.
struct Simulation {
    basis: LatticeBasis,
    potential: PotentialSpec,
    snapshots: Vec<QuantumState>,
}

impl Simulation {
    fn observable(&self, cfg: &ExperimentConfig, kind: ObservableKind) -> Result<crate::model::OperatorMatrix> {
        build_observable(kind, &cfg.device, &self.potential, &self.basis)
    }

    fn exact_column(&self, cfg: &ExperimentConfig, kind: ObservableKind) -> Result<Vec<f64>> {
        let op = self.observable(cfg, kind)?;
        self.snapshots.iter().map(|s| expectation(s, &op)).collect()
    }

    /// Snapshot `k` on the full 2^L space, as readout requires.
    fn full_state(&self, k: usize) -> Result<QuantumState> {
        match &self.basis {
            LatticeBasis::Sector(sector) => self.snapshots[k].embed_in_full(sector),
            LatticeBasis::Full { .. } => Ok(self.snapshots[k].clone()),
            LatticeBasis::Bosonic { .. } => Err(Error::domain("readout is not simulated for bosonic bases")),
        }
    }
}

fn simulate(cfg: &ExperimentConfig, gradient_mhz: f64, noise: NoiseMode) -> Result<Simulation> {
    let spec = cfg.state_spec()?;
    let n = cfg.n_sites();
    let potential = PotentialSpec::linear(gradient_mhz);
    let times = cfg.times();
    let (basis, h, initial) = match cfg.hamiltonian {
        HamiltonianKind::BoseHubbard { fock_cutoff } => {
            let basis = LatticeBasis::bosonic(n, fock_cutoff)?;
            let h = build_bose_hubbard_hamiltonian(&cfg.device, &potential, fock_cutoff)?;
            let occ: Vec<u8> = spec
                .sites()
                .iter()
                .map(|s| u8::from(*s == SiteState::One))
                .collect();
            let idx = basis
                .index_of(&occ)
                .ok_or_else(|| Error::domain("initial state not representable in the bosonic basis"))?;
            let mut psi = DVector::zeros(basis.dim());
            psi[idx] = C64::new(1.0, 0.0);
            let initial = QuantumState::pure(basis.tag(), psi)?;
            (basis, h, initial)
        }
        HamiltonianKind::Xy => {
            let full = spec.to_state();
            match (noise, spec.excitation_number()) {
                (NoiseMode::Ideal, Some(k)) => {
                    let basis = LatticeBasis::sector(n, k)?;
                    let LatticeBasis::Sector(sector) = &basis else {
                        unreachable!("sector constructor returns a sector basis");
                    };
                    let initial = full.project_to_sector(sector)?;
                    let h = build_xy_hamiltonian(&cfg.device, &potential, &basis)?;
                    (basis, h, initial)
                }
                _ => {
                    let basis = LatticeBasis::full(n);
                    let h = build_xy_hamiltonian(&cfg.device, &potential, &basis)?;
                    (basis, h, full)
                }
            }
        }
    };
    let mode = match noise {
        NoiseMode::Ideal => EvolutionMode::Unitary,
        NoiseMode::Lindblad => EvolutionMode::Lindblad {
            collapse: make_collapse_ops(&cfg.device, &basis, cfg.noise.dephasing)?,
            options: LindbladOptions {
                step_ns: cfg.noise.step_ns,
                ..LindbladOptions::default()
            },
        },
    };
    let snapshots = evolve(&h, &initial, &times, &mode)?;
    Ok(Simulation {
        basis,
        potential,
        snapshots,
    })
}

/// Seed for one readout batch, derived from the run seed and the batch's
/// coordinates so that batches never share a random stream.
pub fn derive_seed(base: u64, gradient_mhz: f64, time_index: usize, setting: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    hasher.update(gradient_mhz.to_bits().to_le_bytes());
    hasher.update((time_index as u64).to_le_bytes());
    hasher.update(setting.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

fn correction<'a>(cfg: &ExperimentConfig, confusion: &'a [ConfusionMatrix]) -> Option<&'a [ConfusionMatrix]> {
    cfg.readout_correction.then_some(confusion)
}

fn with_errors(table: &mut TrajectoryTable, name: String, estimates: Vec<GroupedEstimate>) -> Result<()> {
    let (means, stds): (Vec<f64>, Vec<f64>) = estimates.iter().map(|e| (e.mean, e.std)).unzip();
    table.push_column(name.clone(), means)?;
    table.set_errors(&name, stds)
}

/// Site populations P1..PL. With shots configured (Lindblad runs only) the
/// columns are grouped shot averages with grouped-std error columns.
pub fn density_trajectory(cfg: &ExperimentConfig, gradient_mhz: f64) -> Result<TrajectoryTable> {
    density_trajectory_as(cfg, gradient_mhz, cfg.noise.kind)
}

fn density_trajectory_as(cfg: &ExperimentConfig, gradient_mhz: f64, noise: NoiseMode) -> Result<TrajectoryTable> {
    let sim = simulate(cfg, gradient_mhz, noise)?;
    let n = cfg.n_sites();
    let mut table = TrajectoryTable::new(cfg.times());
    let shots = if noise == NoiseMode::Lindblad { cfg.active_shots() } else { None };
    match shots {
        None => {
            for j in 1..=n {
                table.push_column(format!("P{j}"), sim.exact_column(cfg, ObservableKind::Density(j))?)?;
            }
        }
        Some(shots) => {
            let confusion = cfg.confusion();
            let corr = correction(cfg, &confusion);
            let mut per_site = vec![Vec::with_capacity(sim.snapshots.len()); n];
            for k in 0..sim.snapshots.len() {
                let seed = derive_seed(shots.seed, gradient_mhz, k, 0);
                let rec = sample_shots(&sim.full_state(k)?, &confusion, &vec![Axis::Z; n], shots.n_shots, shots.n_groups, seed)?;
                for (j, col) in per_site.iter_mut().enumerate() {
                    let means = group_means(&rec, Estimator::SiteDensity(j + 1), corr)?;
                    col.push(GroupedEstimate::from_group_means(&means));
                }
            }
            for (j, col) in per_site.into_iter().enumerate() {
                with_errors(&mut table, format!("P{}", j + 1), col)?;
            }
        }
    }
    Ok(table)
}

/// Bond kinetic energies K1..K(L−1) in units of 2π·MHz.
pub fn kinetic_trajectory(cfg: &ExperimentConfig, gradient_mhz: f64) -> Result<TrajectoryTable> {
    let sim = simulate(cfg, gradient_mhz, cfg.noise.kind)?;
    let n = cfg.n_sites();
    let mut table = TrajectoryTable::new(cfg.times());
    match cfg.active_shots() {
        None => {
            for b in 1..n {
                let col = sim.exact_column(cfg, ObservableKind::Kinetic(b))?;
                table.push_column(format!("K{b}"), col.into_iter().map(angular_to_mhz).collect())?;
            }
        }
        Some(shots) => {
            let confusion = cfg.confusion();
            let corr = correction(cfg, &confusion);
            let half = shots.n_shots / 2;
            let mut per_bond = vec![Vec::with_capacity(sim.snapshots.len()); n - 1];
            for k in 0..sim.snapshots.len() {
                let state = sim.full_state(k)?;
                let xx = sample_shots(&state, &confusion, &vec![Axis::X; n], half, shots.n_groups, derive_seed(shots.seed, gradient_mhz, k, 1))?;
                let yy = sample_shots(&state, &confusion, &vec![Axis::Y; n], half, shots.n_groups, derive_seed(shots.seed, gradient_mhz, k, 2))?;
                for (i, col) in per_bond.iter_mut().enumerate() {
                    let b = i + 1;
                    let g = cfg.device.couplings_mhz[i];
                    col.push(crate::measurement::estimate_kinetic(&xx, &yy, b, g, corr)?);
                }
            }
            for (i, col) in per_bond.into_iter().enumerate() {
                with_errors(&mut table, format!("K{}", i + 1), col)?;
            }
        }
    }
    Ok(table)
}

/// Spin currents J1..J(L−1), dimensionless.
///
/// With shots, ⟨σˣ_nσʸ_{n+1}⟩ and ⟨σʸ_nσˣ_{n+1}⟩ come from two settings with
/// alternating axes (XYXY… and YXYX…), each taking half the shot budget.
pub fn current_trajectory(cfg: &ExperimentConfig, gradient_mhz: f64) -> Result<TrajectoryTable> {
    let sim = simulate(cfg, gradient_mhz, cfg.noise.kind)?;
    let n = cfg.n_sites();
    let mut table = TrajectoryTable::new(cfg.times());
    match cfg.active_shots() {
        None => {
            for b in 1..n {
                table.push_column(format!("J{b}"), sim.exact_column(cfg, ObservableKind::SpinCurrent(b))?)?;
            }
        }
        Some(shots) => {
            let confusion = cfg.confusion();
            let corr = correction(cfg, &confusion);
            let half = shots.n_shots / 2;
            let xy: Vec<Axis> = (0..n).map(|q| if q % 2 == 0 { Axis::X } else { Axis::Y }).collect();
            let yx: Vec<Axis> = (0..n).map(|q| if q % 2 == 0 { Axis::Y } else { Axis::X }).collect();
            let mut per_bond = vec![Vec::with_capacity(sim.snapshots.len()); n - 1];
            for k in 0..sim.snapshots.len() {
                let state = sim.full_state(k)?;
                let a = sample_shots(&state, &confusion, &xy, half, shots.n_groups, derive_seed(shots.seed, gradient_mhz, k, 3))?;
                let b = sample_shots(&state, &confusion, &yx, half, shots.n_groups, derive_seed(shots.seed, gradient_mhz, k, 4))?;
                for (i, col) in per_bond.iter_mut().enumerate() {
                    let est = Estimator::PauliProduct(i + 1, i + 2);
                    // setting `a` reads site i+1 along X when i is even
                    let (xy_rec, yx_rec) = if i % 2 == 0 { (&a, &b) } else { (&b, &a) };
                    let m_xy = group_means(xy_rec, est, corr)?;
                    let m_yx = group_means(yx_rec, est, corr)?;
                    let j: Vec<f64> = m_xy.iter().zip(&m_yx).map(|(p, q)| -0.5 * (p - q)).collect();
                    col.push(GroupedEstimate::from_group_means(&j));
                }
            }
            for (i, col) in per_bond.into_iter().enumerate() {
                with_errors(&mut table, format!("J{}", i + 1), col)?;
            }
        }
    }
    Ok(table)
}

/// Populations from unitary evolution next to the Lindblad (and, when
/// configured, shot-sampled) populations, as columns `Pj_ideal` and
/// `Pj_lindblad`.
pub fn decoherence_trajectory(cfg: &ExperimentConfig, gradient_mhz: f64) -> Result<TrajectoryTable> {
    let ideal = density_trajectory_as(cfg, gradient_mhz, NoiseMode::Ideal)?;
    let noisy = density_trajectory_as(cfg, gradient_mhz, NoiseMode::Lindblad)?;
    let mut table = TrajectoryTable::new(cfg.times());
    for j in 1..=cfg.n_sites() {
        let name = format!("P{j}");
        table.push_column(format!("{name}_ideal"), ideal.column(&name).expect("column").to_vec())?;
        let lname = format!("{name}_lindblad");
        table.push_column(lname.clone(), noisy.column(&name).expect("column").to_vec())?;
        if let Some(e) = noisy.errors(&name) {
            table.set_errors(&lname, e.to_vec())?;
        }
    }
    Ok(table)
}

/// Writes `contents` to `dir/name` through a uniquely named temporary file
/// and an atomic rename.
fn write_atomic(dir: &Path, name: &str, tag: usize, contents: &str) -> Result<PathBuf> {
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.{tag}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, &target)?;
    Ok(target)
}

fn cell_file(kind: ExperimentKind, gradient_mhz: f64) -> String {
    format!("{}_F{gradient_mhz}MHz.csv", kind.name())
}

/// Files and summary of a completed run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub summary_path: PathBuf,
    pub summary: Value,
}

fn cell_table(cfg: &ExperimentConfig, f: f64) -> Result<TrajectoryTable> {
    match cfg.experiment {
        ExperimentKind::SpinTransport | ExperimentKind::WslScan => density_trajectory(cfg, f),
        ExperimentKind::ThermalTransport => kinetic_trajectory(cfg, f),
        ExperimentKind::SpinCurrent => current_trajectory(cfg, f),
        ExperimentKind::DecoherenceCheck => decoherence_trajectory(cfg, f),
    }
}

fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Sign changes of `a − b` along the trajectory.
pub fn count_crossings(a: &[f64], b: &[f64]) -> usize {
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    diffs.windows(2).filter(|w| w[0].signum() != w[1].signum()).count()
}

fn cell_summary(cfg: &ExperimentConfig, f: f64, table: &TrajectoryTable) -> Result<Value> {
    let n = cfg.n_sites();
    let col = |name: &str| table.column(name).expect("column present");
    Ok(match cfg.experiment {
        ExperimentKind::SpinTransport => {
            let sums: Vec<f64> = (0..table.times().len())
                .map(|k| (1..=n).map(|j| col(&format!("P{j}"))[k]).sum())
                .collect();
            json!({
                "F_mhz": f,
                "max_abs_population_sum_deviation": max_abs(sums.iter().map(|s| s - 1.0)),
                format!("max_P{n}"): max_abs(col(&format!("P{n}")).iter().copied()),
            })
        }
        ExperimentKind::WslScan => Value::Null,
        ExperimentKind::ThermalTransport => {
            let k1 = col("K1");
            let kl = col(&format!("K{}", n - 1));
            json!({
                "F_mhz": f,
                format!("crossings_K1_K{}", n - 1): count_crossings(k1, kl),
                format!("K1_above_K{}_throughout", n - 1): k1.iter().zip(kl).all(|(a, b)| a > b),
            })
        }
        ExperimentKind::SpinCurrent => {
            let maxima: Vec<f64> = (1..n).map(|b| max_abs(col(&format!("J{b}")).iter().copied())).collect();
            json!({ "F_mhz": f, "max_abs_J": maxima })
        }
        ExperimentKind::DecoherenceCheck => {
            let dev: Vec<f64> = (1..=n)
                .map(|j| {
                    let a = col(&format!("P{j}_ideal"));
                    let b = col(&format!("P{j}_lindblad"));
                    max_abs(a.iter().zip(b).map(|(x, y)| x - y))
                })
                .collect();
            json!({ "F_mhz": f, "max_abs_deviation": dev })
        }
    })
}

fn scan_summary(cfg: &ExperimentConfig, peaks: &[(f64, PeakEstimate)], dir: &Path) -> Result<(Value, String, PathBuf)> {
    let n = cfg.n_sites();
    let distance = (n - 1) as f64;
    let g = cfg.device.mean_coupling_mhz();
    let mut csv = String::from("F_mhz,p_max,ln_p_max,stderr,peak_time_ns,xi_boundary,xi_analytic\n");
    let mut rows = Vec::new();
    for (f, peak) in peaks {
        let xi_b = wsl_length_from_boundary(peak.value, distance, cfg.analysis.alpha).ok();
        let xi_a = if *f > 0.0 { Some(wsl_length_analytic(g, *f)?) } else { None };
        let cells = [
            *f,
            peak.value,
            peak.value.ln(),
            peak.stderr,
            peak.peak_time_ns,
            xi_b.unwrap_or(f64::NAN),
            xi_a.unwrap_or(f64::INFINITY),
        ];
        csv.push_str(&cells.map(format_sig).join(","));
        csv.push('\n');
        rows.push(json!({
            "F_mhz": f,
            "p_max": peak.value,
            "ln_p_max": peak.value.ln(),
            "stderr": peak.stderr,
            "peak_time_ns": peak.peak_time_ns,
            "xi_boundary": xi_b,
            "xi_analytic": xi_a,
            "fit": peak.fit,
        }));
    }
    let path = write_atomic(dir, "wsl_scan.csv", usize::MAX, &csv)?;

    let mut block = String::new();
    let mut fit_json = Value::Null;
    let usable: Vec<&(f64, PeakEstimate)> = peaks.iter().filter(|(_, p)| p.value > 0.0).collect();
    let xs: Vec<f64> = usable.iter().map(|(f, _)| *f).collect();
    let ys: Vec<f64> = usable.iter().map(|(_, p)| p.value.ln()).collect();
    if let Ok(fit) = linear_fit(&xs, &ys) {
        block.push_str(&fit.to_kv_block("ln_p_max_vs_F"));
        fit_json = serde_json::to_value(&fit).expect("fit serializes");
    }
    let pairs: Vec<(f64, f64)> = peaks
        .iter()
        .filter(|(f, p)| *f > 0.0 && p.value > 0.0 && p.value < 1.0)
        .map(|(f, p)| {
            let xi_b = wsl_length_from_boundary(p.value, distance, cfg.analysis.alpha).expect("checked range");
            (xi_b, 2.0 * g / f)
        })
        .collect();
    let (xb, xa): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let r = pearson(&xb, &xa).ok();
    if let Some(r) = r {
        block.push_str(&format!("xi_boundary_vs_analytic.pearson_r = {r:.9e}\n"));
    }
    let summary = json!({
        "rows": rows,
        "linear_fit": fit_json,
        "xi_pearson_r": r,
        "extraction": cfg.analysis.extraction,
        "alpha": cfg.analysis.alpha,
        "boundary_distance_sites": distance,
        "mean_coupling_mhz": g,
    });
    Ok((summary, block, path))
}

/// Runs the configured experiment and writes its artifacts into
/// `cfg.output_dir`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir)?;
    let gradients = cfg.gradients_mhz.clone();
    let tables: Vec<Result<TrajectoryTable>> = std::thread::scope(|scope| {
        let handles: Vec<_> = gradients
            .iter()
            .map(|&f| scope.spawn(move || cell_table(cfg, f)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Numerical("simulation thread panicked".into()))))
            .collect()
    });

    let mut files = Vec::new();
    let mut cells = Vec::new();
    let mut peaks = Vec::new();
    for (idx, (f, table)) in gradients.iter().zip(tables).enumerate() {
        let table = table?;
        let name = cell_file(cfg.experiment, *f);
        files.push(write_atomic(&dir, &name, idx, &table.to_csv())?);
        if cfg.experiment == ExperimentKind::WslScan {
            let last = format!("P{}", cfg.n_sites());
            let values = table.column(&last).expect("boundary column");
            peaks.push((*f, extract_peak(table.times(), values, table.errors(&last), cfg.analysis.extraction)?));
        } else {
            let mut summary = cell_summary(cfg, *f, &table)?;
            summary["file"] = json!(name);
            cells.push(summary);
        }
    }

    let mut results = json!({ "cells": cells });
    let mut fit_block = String::new();
    if cfg.experiment == ExperimentKind::WslScan {
        let (scan, block, path) = scan_summary(cfg, &peaks, &dir)?;
        results = scan;
        fit_block = block;
        files.push(path);
    }
    files.sort();
    files.dedup();
    let file_names: Vec<String> = files
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    let shots = cfg.active_shots();
    let summary = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": cfg.experiment,
        "config_sha256": cfg.hash(),
        "config": cfg,
        "seed": shots.map(|s| s.seed),
        "shots": shots,
        "readout": if shots.is_none() {
            "exact"
        } else if cfg.readout_correction {
            "readout-corrected"
        } else {
            "raw"
        },
        "files": file_names,
        "results": results,
        "fit_block": fit_block,
    });
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    let summary_path = write_atomic(&dir, "summary.json", 0, &text)?;
    Ok(RunReport {
        files,
        summary_path,
        summary,
    })
}
