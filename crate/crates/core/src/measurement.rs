//! Simulated multiplexed single-shot readout.
//!
//! Each shot rotates the measured qubits into the requested basis, draws an
//! ideal outcome from the Born distribution, then flips every bit
//! independently according to that qubit's assignment fidelities. There is
//! no readout crosstalk.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{QuantumState, StateData};
use crate::error::{Error, Result};
use crate::model::{Axis, BasisTag, DeviceParams};

/// Per-qubit assignment matrix; column = prepared state, row = reported
/// state: `[[F0, 1−F1], [1−F0, F1]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub f0: f64,
    pub f1: f64,
}

impl ConfusionMatrix {
    pub fn new(f0: f64, f1: f64) -> Result<Self> {
        for (name, v) in [("F0", f0), ("F1", f1)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(ConfusionMatrix { f0, f1 })
    }

    pub fn perfect() -> Self {
        ConfusionMatrix { f0: 1.0, f1: 1.0 }
    }

    pub fn perfect_set(n: usize) -> Vec<Self> {
        vec![Self::perfect(); n]
    }

    pub fn from_device(params: &DeviceParams) -> Vec<Self> {
        params
            .readout_f0
            .iter()
            .zip(&params.readout_f1)
            .map(|(&f0, &f1)| ConfusionMatrix { f0, f1 })
            .collect()
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.f0, 1.0 - self.f1], [1.0 - self.f0, self.f1]]
    }

    pub fn inverse(&self) -> Result<[[f64; 2]; 2]> {
        let det = self.f0 + self.f1 - 1.0;
        if det.abs() < 1e-12 {
            return Err(Error::domain(format!(
                "confusion matrix singular (F0 + F1 = {})",
                self.f0 + self.f1
            )));
        }
        let m = self.matrix();
        Ok([
            [m[1][1] / det, -m[0][1] / det],
            [-m[1][0] / det, m[0][0] / det],
        ])
    }

    /// Probability of reporting 1 given the probability `p1` of |1⟩.
    pub fn reported_one(&self, p1: f64) -> f64 {
        (1.0 - self.f0) * (1.0 - p1) + self.f1 * p1
    }
}

/// Outcomes of a batch of shots, site 1 first in each bit string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotRecord {
    pub bitstrings: Vec<Vec<u8>>,
    pub n_groups: usize,
    pub seed: u64,
    pub basis: Vec<Axis>,
}

impl ShotRecord {
    pub fn n_shots(&self) -> usize {
        self.bitstrings.len()
    }

    pub fn n_sites(&self) -> usize {
        self.basis.len()
    }

    fn validate(&self) -> Result<()> {
        if self.n_groups == 0 {
            return Err(Error::domain("group count must be positive"));
        }
        if !self.n_shots().is_multiple_of(self.n_groups) {
            return Err(Error::domain(format!(
                "{} shots do not split into {} equal groups",
                self.n_shots(),
                self.n_groups
            )));
        }
        for (k, b) in self.bitstrings.iter().enumerate() {
            if b.len() != self.basis.len() || b.iter().any(|&x| x > 1) {
                return Err(Error::domain(format!("shot {k} is not a {}-bit outcome", self.basis.len())));
            }
        }
        Ok(())
    }

    /// Line-per-shot text: a header `basis <axes> groups <n> seed <s>`, then
    /// one bit string per line.
    pub fn to_text(&self) -> String {
        let axes: String = self.basis.iter().map(|a| a.as_char()).collect();
        let mut out = String::with_capacity(self.n_shots() * (self.n_sites() + 1) + 64);
        let _ = writeln!(out, "basis {axes} groups {} seed {}", self.n_groups, self.seed);
        for b in &self.bitstrings {
            out.extend(b.iter().map(|&x| if x == 1 { '1' } else { '0' }));
            out.push('\n');
        }
        out
    }

    /// Parses the text form written by [`to_text`](Self::to_text). Blank
    /// lines are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("shot record is empty".into()))?;
        let mut tokens = header.split_whitespace();
        if tokens.next() != Some("basis") {
            return Err(Error::Parse("shot record must start with `basis`".into()));
        }
        let axes = tokens
            .next()
            .ok_or_else(|| Error::Parse("missing basis axes".into()))?;
        let basis = axes
            .chars()
            .map(|c| Axis::from_char(c).map_err(|e| Error::Parse(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let mut n_groups = 1;
        let mut seed = 0;
        while let Some(key) = tokens.next() {
            let value = tokens
                .next()
                .ok_or_else(|| Error::Parse(format!("header key `{key}` has no value")))?;
            let parse = |v: &str| {
                v.parse::<u64>()
                    .map_err(|_| Error::Parse(format!("header value `{v}` for `{key}` is not an integer")))
            };
            match key {
                "groups" => n_groups = parse(value)? as usize,
                "seed" => seed = parse(value)?,
                other => return Err(Error::Parse(format!("unknown header key `{other}`"))),
            }
        }
        let bitstrings = lines
            .enumerate()
            .map(|(k, line)| {
                line.chars()
                    .map(|c| match c {
                        '0' => Ok(0),
                        '1' => Ok(1),
                        other => Err(Error::Parse(format!("shot {k}: unexpected `{other}`"))),
                    })
                    .collect::<Result<Vec<u8>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let record = ShotRecord {
            bitstrings,
            n_groups,
            seed,
            basis,
        };
        record.validate().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(record)
    }
}

/// Unitary that maps the +1 eigenstate of σᵃ to |0⟩: R_y(−π/2) for X,
/// R_x(π/2) for Y.
fn pre_rotation(axis: Axis) -> Option<[[C64; 2]; 2]> {
    let c = C64::new(FRAC_1_SQRT_2, 0.0);
    let s = FRAC_1_SQRT_2;
    match axis {
        Axis::Z => None,
        Axis::X => Some([[c, C64::new(s, 0.0)], [C64::new(-s, 0.0), c]]),
        Axis::Y => Some([[c, C64::new(0.0, -s)], [C64::new(0.0, -s), c]]),
    }
}

fn apply_1q_vec(psi: &mut DVector<C64>, u: &[[C64; 2]; 2], bit: usize) {
    for i in 0..psi.len() {
        if i & bit == 0 {
            let (a, b) = (psi[i], psi[i | bit]);
            psi[i] = u[0][0] * a + u[0][1] * b;
            psi[i | bit] = u[1][0] * a + u[1][1] * b;
        }
    }
}

fn apply_1q_density(rho: &mut DMatrix<C64>, u: &[[C64; 2]; 2], bit: usize) {
    let n = rho.nrows();
    for col in 0..n {
        for i in 0..n {
            if i & bit == 0 {
                let (a, b) = (rho[(i, col)], rho[(i | bit, col)]);
                rho[(i, col)] = u[0][0] * a + u[0][1] * b;
                rho[(i | bit, col)] = u[1][0] * a + u[1][1] * b;
            }
        }
    }
    for row in 0..n {
        for j in 0..n {
            if j & bit == 0 {
                let (a, b) = (rho[(row, j)], rho[(row, j | bit)]);
                rho[(row, j)] = a * u[0][0].conj() + b * u[0][1].conj();
                rho[(row, j | bit)] = a * u[1][0].conj() + b * u[1][1].conj();
            }
        }
    }
}

/// Born distribution over the full computational basis after the basis
/// pre-rotations.
pub fn rotated_probabilities(state: &QuantumState, basis: &[Axis]) -> Result<Vec<f64>> {
    let BasisTag::Full { n_sites } = state.basis() else {
        return Err(Error::domain(format!(
            "readout needs a full-space state, got {}",
            state.basis()
        )));
    };
    if basis.len() != n_sites {
        return Err(Error::domain(format!(
            "{} measurement axes for {n_sites} qubits",
            basis.len()
        )));
    }
    let bit_of = |q: usize| 1usize << (n_sites - 1 - q);
    let probs = match state.data() {
        StateData::Pure(psi) => {
            let mut psi = psi.clone();
            for (q, &axis) in basis.iter().enumerate() {
                if let Some(u) = pre_rotation(axis) {
                    apply_1q_vec(&mut psi, &u, bit_of(q));
                }
            }
            psi.iter().map(|a| a.norm_sqr()).collect::<Vec<_>>()
        }
        StateData::Density(rho) => {
            let mut rho = rho.clone();
            for (q, &axis) in basis.iter().enumerate() {
                if let Some(u) = pre_rotation(axis) {
                    apply_1q_density(&mut rho, &u, bit_of(q));
                }
            }
            (0..rho.nrows()).map(|i| rho[(i, i)].re.max(0.0)).collect()
        }
    };
    Ok(probs)
}

/// Draws `n_shots` noisy outcomes.
///
/// The RNG for shot `k` is ChaCha8 seeded with `seed` on stream `k`; its
/// first draw selects the ideal outcome and draw `1 + q` decides the flip of
/// qubit `q`. Any shot is thus reproducible on its own, independent of how
/// shots are scheduled.
pub fn sample_shots(
    state: &QuantumState,
    confusion: &[ConfusionMatrix],
    basis: &[Axis],
    n_shots: usize,
    n_groups: usize,
    seed: u64,
) -> Result<ShotRecord> {
    let n_sites = basis.len();
    if confusion.len() != n_sites {
        return Err(Error::domain(format!(
            "{} confusion matrices for {n_sites} qubits",
            confusion.len()
        )));
    }
    if n_groups == 0 || !n_shots.is_multiple_of(n_groups) {
        return Err(Error::domain(format!(
            "{n_shots} shots do not split into {n_groups} equal groups"
        )));
    }
    let probs = rotated_probabilities(state, basis)?;
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p;
        cumulative.push(acc);
    }
    let total = acc;
    let bitstrings = (0..n_shots)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let u: f64 = rng.random::<f64>() * total;
            let idx = cumulative
                .partition_point(|&c| c <= u)
                .min(probs.len() - 1);
            (0..n_sites)
                .map(|q| {
                    let ideal = (idx >> (n_sites - 1 - q) & 1) as u8;
                    let r: f64 = rng.random();
                    let cm = confusion[q];
                    match ideal {
                        0 if r >= cm.f0 => 1,
                        1 if r >= cm.f1 => 0,
                        b => b,
                    }
                })
                .collect()
        })
        .collect();
    Ok(ShotRecord {
        bitstrings,
        n_groups,
        seed,
        basis: basis.to_vec(),
    })
}

/// Single-shot estimators, sites 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    /// Fraction of shots reporting 1 on the site; requires Z readout.
    SiteDensity(usize),
    /// Parity (−1)^{b_i ⊕ b_j}: ⟨σᵃ_iσᵇ_j⟩ for the axes the two qubits were
    /// read in.
    PauliProduct(usize, usize),
}

impl Estimator {
    fn sites(&self) -> Vec<usize> {
        match *self {
            Estimator::SiteDensity(i) => vec![i],
            Estimator::PauliProduct(i, j) => vec![i, j],
        }
    }

    fn check(&self, record: &ShotRecord) -> Result<Vec<usize>> {
        let l = record.n_sites();
        let sites = self.sites();
        for &s in &sites {
            if s == 0 || s > l {
                return Err(Error::domain(format!("estimator site {s} outside 1..={l}")));
            }
        }
        if let Estimator::PauliProduct(i, j) = *self {
            if i == j {
                return Err(Error::domain("Pauli product needs two distinct sites"));
            }
        }
        if let Estimator::SiteDensity(i) = *self {
            if record.basis[i - 1] != Axis::Z {
                return Err(Error::domain(format!("site density of qubit {i} needs Z readout")));
            }
        }
        Ok(sites.into_iter().map(|s| s - 1).collect())
    }

    /// Value of the estimator on the joint outcome distribution of its sites,
    /// indexed with the first site most significant.
    fn on_distribution(&self, p: &[f64]) -> f64 {
        match self {
            Estimator::SiteDensity(_) => p[1],
            Estimator::PauliProduct(..) => p[0] - p[1] - p[2] + p[3],
        }
    }
}

/// Grand mean and spread of per-group means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupedEstimate {
    pub mean: f64,
    /// Sample standard deviation (n − 1) of the group means.
    pub std: f64,
}

impl GroupedEstimate {
    pub fn from_group_means(means: &[f64]) -> Self {
        let n = means.len() as f64;
        let mean = means.iter().sum::<f64>() / n;
        let std = if means.len() > 1 {
            (means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        GroupedEstimate { mean, std }
    }
}

fn groups(record: &ShotRecord) -> Result<std::slice::Chunks<'_, Vec<u8>>> {
    if record.n_groups == 0 {
        return Err(Error::domain("group count must be positive"));
    }
    let size = record.n_shots() / record.n_groups;
    if size == 0 {
        return Err(Error::domain("group size is zero"));
    }
    if !record.n_shots().is_multiple_of(record.n_groups) {
        return Err(Error::domain("shots do not split into equal groups"));
    }
    Ok(record.bitstrings.chunks(size))
}

fn group_histogram(group: &[Vec<u8>], sites: &[usize]) -> Vec<f64> {
    let mut hist = vec![0.0; 1 << sites.len()];
    for shot in group {
        let idx = sites.iter().fold(0usize, |a, &s| a << 1 | shot[s] as usize);
        hist[idx] += 1.0;
    }
    let n = group.len() as f64;
    hist.iter_mut().for_each(|h| *h /= n);
    hist
}

/// Estimator value in each of the record's groups, optionally after
/// correcting each group's outcome histogram with the inverse confusion
/// matrices of the qubits involved.
pub fn group_means(
    record: &ShotRecord,
    estimator: Estimator,
    confusion: Option<&[ConfusionMatrix]>,
) -> Result<Vec<f64>> {
    let sites = estimator.check(record)?;
    let local = match confusion {
        Some(c) if c.len() != record.n_sites() => {
            return Err(Error::domain("one confusion matrix per qubit required"))
        }
        Some(c) => Some(sites.iter().map(|&s| c[s]).collect::<Vec<_>>()),
        None => None,
    };
    groups(record)?
        .map(|g| {
            let hist = group_histogram(g, &sites);
            let hist = match &local {
                Some(l) => correct_histogram(&hist, l)?,
                None => hist,
            };
            Ok(estimator.on_distribution(&hist))
        })
        .collect()
}

/// Splits the shots into `n_groups` consecutive equal groups and reports the
/// mean of the group estimates and their standard deviation.
pub fn grouped_statistics(record: &ShotRecord, estimator: Estimator) -> Result<GroupedEstimate> {
    group_means(record, estimator, None).map(|m| GroupedEstimate::from_group_means(&m))
}

/// As [`grouped_statistics`], with readout correction applied per group.
pub fn grouped_statistics_corrected(
    record: &ShotRecord,
    estimator: Estimator,
    confusion: &[ConfusionMatrix],
) -> Result<GroupedEstimate> {
    group_means(record, estimator, Some(confusion)).map(|m| GroupedEstimate::from_group_means(&m))
}

/// Kinetic energy (g/2)(⟨σˣσˣ⟩ + ⟨σʸσʸ⟩) on `bond` from an XX-basis and a
/// YY-basis record with the same grouping; the spread is taken over the
/// per-group sums. `coupling` sets the output unit.
pub fn estimate_kinetic(
    xx: &ShotRecord,
    yy: &ShotRecord,
    bond: usize,
    coupling: f64,
    confusion: Option<&[ConfusionMatrix]>,
) -> Result<GroupedEstimate> {
    if xx.n_groups != yy.n_groups {
        return Err(Error::domain("XX and YY records must have the same group count"));
    }
    let est = Estimator::PauliProduct(bond, bond + 1);
    let gx = group_means(xx, est, confusion)?;
    let gy = group_means(yy, est, confusion)?;
    let sums: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| 0.5 * coupling * (a + b)).collect();
    Ok(GroupedEstimate::from_group_means(&sums))
}

fn apply_per_qubit(hist: &[f64], mats: &[[[f64; 2]; 2]]) -> Result<Vec<f64>> {
    let n = mats.len();
    if hist.len() != 1 << n {
        return Err(Error::domain(format!(
            "histogram of length {} does not match {n} qubits",
            hist.len()
        )));
    }
    let mut out = hist.to_vec();
    for (q, m) in mats.iter().enumerate() {
        let bit = 1usize << (n - 1 - q);
        for i in 0..out.len() {
            if i & bit == 0 {
                let (a, b) = (out[i], out[i | bit]);
                out[i] = m[0][0] * a + m[0][1] * b;
                out[i | bit] = m[1][0] * a + m[1][1] * b;
            }
        }
    }
    Ok(out)
}

/// Forward model: true outcome distribution to reported distribution.
pub fn apply_confusion_histogram(hist: &[f64], confusion: &[ConfusionMatrix]) -> Result<Vec<f64>> {
    let mats: Vec<_> = confusion.iter().map(ConfusionMatrix::matrix).collect();
    apply_per_qubit(hist, &mats)
}

/// Applies the per-qubit inverse confusion matrices to a full outcome
/// histogram, clamps to [0, 1] and renormalizes to the input's total mass.
pub fn correct_histogram(hist: &[f64], confusion: &[ConfusionMatrix]) -> Result<Vec<f64>> {
    let inv = confusion
        .iter()
        .map(ConfusionMatrix::inverse)
        .collect::<Result<Vec<_>>>()?;
    let raw = apply_per_qubit(hist, &inv)?;
    let total: f64 = hist.iter().sum();
    let clamped: Vec<f64> = raw.iter().map(|p| p.clamp(0.0, 1.0)).collect();
    let sum: f64 = clamped.iter().sum();
    if sum <= 0.0 {
        return Ok(clamped);
    }
    Ok(clamped.into_iter().map(|p| p * total / sum).collect())
}

/// Corrects per-qubit marginals P(report 1) into estimates of P(|1⟩).
pub fn correct_marginals(reported_one: &[f64], confusion: &[ConfusionMatrix]) -> Result<Vec<f64>> {
    if reported_one.len() != confusion.len() {
        return Err(Error::domain("one confusion matrix per marginal required"));
    }
    reported_one
        .iter()
        .zip(confusion)
        .map(|(&m, c)| {
            let inv = c.inverse()?;
            let p1 = inv[1][0] * (1.0 - m) + inv[1][1] * m;
            Ok(p1.clamp(0.0, 1.0))
        })
        .collect()
}
