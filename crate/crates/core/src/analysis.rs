//! Post-processing of boundary-arrival trajectories: first-wavefront
//! detection, Gaussian peak fits, straight-line fits and the localization
//! length estimate derived from the boundary peak.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::runner::density_trajectory;

pub const GAUSS_NEWTON_MAX_ITER: usize = 200;
pub const GAUSS_NEWTON_REL_TOL: f64 = 1e-8;
/// Fraction of the global maximum the smoothed series must exceed before a
/// decrease counts as the end of the first wavefront.
pub const WAVEFRONT_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParameter {
    pub name: String,
    pub value: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: String,
    pub parameters: Vec<FitParameter>,
    pub rss: f64,
    pub r_squared: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// First and last abscissa used by the fit.
    pub window: (f64, f64),
}

impl FitResult {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.parameters.iter().find(|p| p.name == name).map(|p| p.value)
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.parameters.iter().find(|p| p.name == name).map(|p| p.std_error)
    }

    /// `prefix.key = value` lines, one per field.
    pub fn to_kv_block(&self, prefix: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{prefix}.model = {}", self.model);
        for p in &self.parameters {
            let _ = writeln!(out, "{prefix}.{} = {:.9e}", p.name, p.value);
            let _ = writeln!(out, "{prefix}.{}_se = {:.9e}", p.name, p.std_error);
        }
        let _ = writeln!(out, "{prefix}.rss = {:.9e}", self.rss);
        if let Some(r2) = self.r_squared {
            let _ = writeln!(out, "{prefix}.r_squared = {r2:.9e}");
        }
        let _ = writeln!(out, "{prefix}.converged = {}", self.converged);
        let _ = writeln!(out, "{prefix}.iterations = {}", self.iterations);
        let _ = writeln!(out, "{prefix}.window = {:.9e} {:.9e}", self.window.0, self.window.1);
        out
    }
}

fn smooth3(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            values[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// Index of the first-wavefront peak: the smoothed series must have reached
/// 10% of its global maximum and then fall on two consecutive samples. The
/// returned index is the largest raw sample next to that turning point.
pub fn first_wavefront_index(values: &[f64]) -> Result<usize> {
    if values.len() < 3 {
        return Err(Error::NoWavefront(format!("{} samples are too few", values.len())));
    }
    let s = smooth3(values);
    let peak = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(peak > 0.0) {
        return Err(Error::NoWavefront("series never rises above zero".into()));
    }
    let threshold = WAVEFRONT_THRESHOLD * peak;
    let mut armed = false;
    for i in 0..s.len() - 2 {
        armed |= s[i] >= threshold;
        if armed && s[i + 1] < s[i] && s[i + 2] < s[i + 1] {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(values.len() - 1);
            let best = (lo..=hi)
                .max_by(|&a, &b| values[a].total_cmp(&values[b]))
                .expect("non-empty range");
            return Ok(best);
        }
    }
    Err(Error::NoWavefront("series has no local maximum followed by a decrease".into()))
}

fn gaussian(p: &Vector3<f64>, t: f64) -> f64 {
    let z = (t - p[1]) / p[2];
    p[0] * (-0.5 * z * z).exp()
}

fn rss_of(p: &Vector3<f64>, t: &[f64], y: &[f64]) -> f64 {
    t.iter().zip(y).map(|(&t, &y)| (y - gaussian(p, t)).powi(2)).sum()
}

fn jacobian(p: &Vector3<f64>, t: &[f64]) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(t.len(), 3);
    for k in 0..3 {
        let h = 1e-6 * p[k].abs().max(1e-3);
        let mut up = *p;
        let mut down = *p;
        up[k] += h;
        down[k] -= h;
        for (i, &ti) in t.iter().enumerate() {
            j[(i, k)] = (gaussian(&up, ti) - gaussian(&down, ti)) / (2.0 * h);
        }
    }
    j
}

/// Least-squares fit of `A·exp(−(t−t0)²/(2σ²))` by damped Gauss-Newton.
/// Non-convergence is reported through the `converged` flag.
pub fn fit_gaussian(times: &[f64], values: &[f64], initial: [f64; 3]) -> Result<FitResult> {
    if times.len() != values.len() {
        return Err(Error::domain("times and values differ in length"));
    }
    if times.len() < 5 {
        return Err(Error::Fit(format!("{} points are too few for a Gaussian", times.len())));
    }
    let mut p = Vector3::from(initial);
    if !(p[2] > 0.0) {
        return Err(Error::domain("initial width must be positive"));
    }
    let mut rss = rss_of(&p, times, values);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < GAUSS_NEWTON_MAX_ITER {
        iterations += 1;
        let j = jacobian(&p, times);
        let r = DVector::from_iterator(
            times.len(),
            times.iter().zip(values).map(|(&t, &y)| y - gaussian(&p, t)),
        );
        let jtj: Matrix3<f64> = (j.transpose() * &j).fixed_view::<3, 3>(0, 0).into_owned();
        let jtr: Vector3<f64> = (j.transpose() * r).fixed_view::<3, 1>(0, 0).into_owned();
        let Some(delta) = jtj.cholesky().map(|c| c.solve(&jtr)) else {
            break;
        };
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial = p + delta * lambda;
            if trial[2] > 0.0 {
                let trial_rss = rss_of(&trial, times, values);
                if trial_rss <= rss {
                    accepted = Some((trial, trial_rss));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((next, next_rss)) = accepted else {
            // no step reduces the residual: already at the minimum to
            // machine precision
            converged = delta.iter().zip(p.iter()).all(|(d, v)| d.abs() <= 1e-6 * v.abs().max(1e-12));
            break;
        };
        let rel = (next - p)
            .iter()
            .zip(p.iter())
            .map(|(d, v)| d.abs() / v.abs().max(1e-12))
            .fold(0.0, f64::max);
        p = next;
        rss = next_rss;
        if rel < GAUSS_NEWTON_REL_TOL {
            converged = true;
            break;
        }
    }
    let dof = times.len().saturating_sub(3);
    let j = jacobian(&p, times);
    let jtj: Matrix3<f64> = (j.transpose() * &j).fixed_view::<3, 3>(0, 0).into_owned();
    let se = match (jtj.try_inverse(), dof) {
        (Some(cov), d) if d > 0 => {
            let s2 = rss / d as f64;
            [0, 1, 2].map(|k| (cov[(k, k)] * s2).max(0.0).sqrt())
        }
        _ => [0.0; 3],
    };
    let names = ["A", "t0", "sigma"];
    Ok(FitResult {
        model: "gaussian".into(),
        parameters: (0..3)
            .map(|k| FitParameter {
                name: names[k].into(),
                value: p[k],
                std_error: se[k],
            })
            .collect(),
        rss,
        r_squared: None,
        converged,
        iterations,
        window: (times[0], times[times.len() - 1]),
    })
}

/// Gaussian fit of the first wavefront. The window runs from the first
/// sample to the wavefront peak plus one half-width at half maximum of the
/// rising edge.
pub fn gaussian_fit_wavefront(times: &[f64], values: &[f64]) -> Result<FitResult> {
    if times.len() != values.len() {
        return Err(Error::domain("times and values differ in length"));
    }
    let peak = first_wavefront_index(values)?;
    let s = smooth3(values);
    let half = 0.5 * s[peak];
    let below = (0..peak).rev().find(|&i| s[i] < half);
    let half_width = below.map_or(peak, |i| peak - i).max(1);
    let end = (peak + half_width).min(times.len() - 1);
    let (t, y) = (&times[..=end], &values[..=end]);
    if t.len() < 5 {
        return Err(Error::Fit(format!("wavefront window holds only {} samples", t.len())));
    }
    let (arg, amp) = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, &v)| (i, v))
        .expect("non-empty window");
    let width = (t[t.len() - 1] - t[0]) / 6.0;
    fit_gaussian(t, y, [amp, t[arg], width])
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<FitResult> {
    if x.len() != y.len() {
        return Err(Error::domain("x and y differ in length"));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::domain(format!("{n} points cannot determine a line")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 1e-300 * nf || sxx <= f64::EPSILON * x.iter().map(|v| v * v).sum::<f64>() {
        return Err(Error::domain("x values are all equal"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - rss / syy } else { 1.0 };
    let (se_slope, se_intercept) = if n > 2 {
        let s2 = rss / (nf - 2.0);
        ((s2 / sxx).sqrt(), (s2 * (1.0 / nf + mx * mx / sxx)).sqrt())
    } else {
        (0.0, 0.0)
    };
    Ok(FitResult {
        model: "linear".into(),
        parameters: vec![
            FitParameter {
                name: "slope".into(),
                value: slope,
                std_error: se_slope,
            },
            FitParameter {
                name: "intercept".into(),
                value: intercept,
                std_error: se_intercept,
            },
        ],
        rss,
        r_squared: Some(r_squared),
        converged: true,
        iterations: 1,
        window: (
            x.iter().cloned().fold(f64::INFINITY, f64::min),
            x.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        ),
    })
}

/// Localization length implied by the boundary peak: −α·d / ln P. Only
/// proportional to the true length; α sets the scale.
pub fn wsl_length_from_boundary(p_max: f64, distance: f64, alpha: f64) -> Result<f64> {
    if !(p_max > 0.0 && p_max < 1.0) {
        return Err(Error::domain(format!("boundary peak {p_max} outside (0, 1)")));
    }
    Ok(-alpha * distance / p_max.ln())
}

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::domain("need two equally long series of length ≥ 2"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::domain("constant series has no correlation"));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Mean spacing of the prominent maxima of an oscillating series, with each
/// maximum refined by a parabola through its neighbours. Maxima must rise
/// above the midpoint between the series' minimum and maximum.
pub fn oscillation_period(times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() != values.len() || times.len() < 3 {
        return Err(Error::domain("need matching times and values, at least 3 samples"));
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mid = 0.5 * (lo + hi);
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < values.len() {
        let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
        if b > a && b >= c && b > mid {
            let denom = a - 2.0 * b + c;
            let shift = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
            let dt = times[i + 1] - times[i];
            peaks.push(times[i] + shift * dt);
            i += 2;
        } else {
            i += 1;
        }
    }
    if peaks.len() < 2 {
        return Err(Error::Fit(format!("found {} maxima; need at least 2", peaks.len())));
    }
    Ok((peaks[peaks.len() - 1] - peaks[0]) / (peaks.len() - 1) as f64)
}

/// How the boundary peak is read off a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtractionMode {
    /// Amplitude of a Gaussian fitted to the first wavefront.
    GaussianFit,
    /// Largest sample of the first wavefront.
    RawWavefront,
}

/// Boundary peak of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakEstimate {
    pub value: f64,
    pub stderr: f64,
    pub peak_time_ns: f64,
    pub fit: Option<FitResult>,
}

/// Extracts the first-wavefront peak. In Gaussian mode the reported error is
/// the fit's standard error of A. In raw mode it is the grouped standard
/// deviation at the peak sample when shot errors are given, otherwise zero.
pub fn extract_peak(
    times: &[f64],
    values: &[f64],
    errors: Option<&[f64]>,
    mode: ExtractionMode,
) -> Result<PeakEstimate> {
    match mode {
        ExtractionMode::RawWavefront => {
            let i = first_wavefront_index(values)?;
            Ok(PeakEstimate {
                value: values[i],
                stderr: errors.map_or(0.0, |e| e[i]),
                peak_time_ns: times[i],
                fit: None,
            })
        }
        ExtractionMode::GaussianFit => {
            let fit = gaussian_fit_wavefront(times, values)?;
            let a = fit.value("A").expect("gaussian has A");
            let t0 = fit.value("t0").expect("gaussian has t0");
            let stderr = fit.std_error("A").unwrap_or(0.0);
            Ok(PeakEstimate {
                value: a,
                stderr,
                peak_time_ns: t0,
                fit: Some(fit),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub gradient_mhz: f64,
    pub p_max: f64,
    pub ln_p_max: f64,
    pub stderr: f64,
    pub peak_time_ns: f64,
    pub fit: Option<FitResult>,
}

/// Runs the transport simulation described by `settings` at each gradient
/// and extracts the boundary-site peak.
pub fn p5max_scan(gradients_mhz: &[f64], settings: &ExperimentConfig, mode: ExtractionMode) -> Result<Vec<ScanRow>> {
    let last = format!("P{}", settings.n_sites());
    gradients_mhz
        .iter()
        .map(|&f| {
            if !(f.is_finite() && f >= 0.0) {
                return Err(Error::domain(format!("gradient {f} must be finite and ≥ 0")));
            }
            let table = density_trajectory(settings, f)?;
            let values = table.column(&last).expect("density table has every site");
            let peak = extract_peak(table.times(), values, table.errors(&last), mode)?;
            Ok(ScanRow {
                gradient_mhz: f,
                p_max: peak.value,
                ln_p_max: peak.value.ln(),
                stderr: peak.stderr,
                peak_time_ns: peak.peak_time_ns,
                fit: peak.fit,
            })
        })
        .collect()
}
