//! Empirical mode decomposition baseline (plain and ensemble).
//!
//! Only used for comparing how decomposers spread variance across their
//! components; the forecasting pipeline can also run on it through the
//! moving-front builder.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::{imf_labels, ModeMatrix};
use crate::series::{sd_population, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiftConfig {
    pub max_imfs: usize,
    /// Cauchy-type stopping threshold on the normalized squared change
    /// between sifting passes.
    pub sift_sd_threshold: f64,
    pub max_sift_iterations: usize,
    pub ensemble_size: usize,
    /// Added white-noise SD as a fraction of the signal SD.
    pub noise_amplitude: f64,
    pub seed: u64,
}

impl Default for SiftConfig {
    fn default() -> Self {
        Self {
            max_imfs: 10,
            sift_sd_threshold: 0.2,
            max_sift_iterations: 100,
            ensemble_size: 100,
            noise_amplitude: 0.2,
            seed: 0,
        }
    }
}

impl SiftConfig {
    fn validate(&self) -> Result<()> {
        if self.max_imfs == 0 || self.max_sift_iterations == 0 || self.ensemble_size == 0 {
            return Err(Error::Config(
                "max_imfs, max_sift_iterations and ensemble_size must be positive".into(),
            ));
        }
        if !(self.sift_sd_threshold > 0.0 && self.sift_sd_threshold < 1.0) {
            return Err(Error::Config("sift_sd_threshold must lie in (0, 1)".into()));
        }
        if !(self.noise_amplitude >= 0.0 && self.noise_amplitude.is_finite()) {
            return Err(Error::Config("noise_amplitude must be non-negative".into()));
        }
        Ok(())
    }
}

/// Natural cubic spline through `(xs, ys)`, evaluated at `0..n`.
/// `xs` must be strictly increasing with at least two knots.
fn natural_spline(xs: &[f64], ys: &[f64], n: usize) -> Vec<f64> {
    let m = xs.len();
    debug_assert!(m >= 2);
    if m == 2 {
        let slope = (ys[1] - ys[0]) / (xs[1] - xs[0]);
        return (0..n).map(|t| ys[0] + slope * (t as f64 - xs[0])).collect();
    }
    // second derivatives via the tridiagonal system (Thomas algorithm)
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let mut diag = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    let mut upper = vec![0.0; m];
    diag[0] = 1.0;
    diag[m - 1] = 1.0;
    for i in 1..m - 1 {
        diag[i] = 2.0 * (h[i - 1] + h[i]);
        upper[i] = h[i];
        rhs[i] = 6.0 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1]);
    }
    // forward sweep; sub-diagonal entry of row i is h[i-1]
    for i in 1..m {
        let sub = if i == m - 1 { 0.0 } else { h[i - 1] };
        let w = sub / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    let mut second = vec![0.0; m];
    second[m - 1] = rhs[m - 1] / diag[m - 1];
    for i in (0..m - 1).rev() {
        second[i] = (rhs[i] - upper[i] * second[i + 1]) / diag[i];
    }

    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for t in 0..n {
        let x = t as f64;
        while seg + 2 < m && x > xs[seg + 1] {
            seg += 1;
        }
        let (x0, x1) = (xs[seg], xs[seg + 1]);
        let hh = x1 - x0;
        let a = (x1 - x) / hh;
        let b = (x - x0) / hh;
        out.push(
            a * ys[seg]
                + b * ys[seg + 1]
                + ((a * a * a - a) * second[seg] + (b * b * b - b) * second[seg + 1]) * hh * hh
                    / 6.0,
        );
    }
    out
}

fn extrema(x: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    for i in 1..x.len().saturating_sub(1) {
        if x[i] > x[i - 1] && x[i] >= x[i + 1] {
            maxima.push(i);
        } else if x[i] < x[i - 1] && x[i] <= x[i + 1] {
            minima.push(i);
        }
    }
    (maxima, minima)
}

fn zero_crossings(x: &[f64]) -> usize {
    x.windows(2)
        .filter(|w| (w[0] < 0.0 && w[1] >= 0.0) || (w[0] > 0.0 && w[1] <= 0.0))
        .count()
}

/// Number of extrema minus number of zero crossings; an IMF keeps this
/// within one.
pub fn imf_balance(x: &[f64]) -> i64 {
    let (mx, mn) = extrema(x);
    (mx.len() + mn.len()) as i64 - zero_crossings(x) as i64
}

/// Knots for one envelope: the extrema plus up to two reflected extrema
/// beyond each end of the signal.
fn envelope_knots(x: &[f64], idx: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let last = (x.len() - 1) as f64;
    let mut xs = Vec::with_capacity(idx.len() + 4);
    let mut ys = Vec::with_capacity(idx.len() + 4);
    for &i in idx.iter().take(2).rev() {
        xs.push(-(i as f64));
        ys.push(x[i]);
    }
    for &i in idx {
        xs.push(i as f64);
        ys.push(x[i]);
    }
    for &i in idx.iter().rev().take(2) {
        xs.push(2.0 * last - i as f64);
        ys.push(x[i]);
    }
    (xs, ys)
}

fn mean_envelope(x: &[f64], maxima: &[usize], minima: &[usize]) -> Vec<f64> {
    let (ux, uy) = envelope_knots(x, maxima);
    let (lx, ly) = envelope_knots(x, minima);
    let upper = natural_spline(&ux, &uy, x.len());
    let lower = natural_spline(&lx, &ly, x.len());
    upper.iter().zip(&lower).map(|(u, l)| 0.5 * (u + l)).collect()
}

fn can_sift(x: &[f64]) -> bool {
    let (mx, mn) = extrema(x);
    !mx.is_empty() && !mn.is_empty() && mx.len() + mn.len() >= 2
}

fn sift(x: &[f64], cfg: &SiftConfig) -> Vec<f64> {
    let mut h = x.to_vec();
    for _ in 0..cfg.max_sift_iterations {
        let (mx, mn) = extrema(&h);
        if mx.is_empty() || mn.is_empty() {
            break;
        }
        let m = mean_envelope(&h, &mx, &mn);
        let next: Vec<f64> = h.iter().zip(&m).map(|(a, b)| a - b).collect();
        let num: f64 = m.iter().map(|v| v * v).sum();
        let den: f64 = h.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
        h = next;
        if num / den < cfg.sift_sd_threshold && imf_balance(&h).abs() <= 1 {
            break;
        }
    }
    h
}

/// Returns the IMFs (fastest first) and the final residue. The residue is
/// the signal minus the running IMF sum, so the parts add back exactly up to
/// rounding.
fn emd_parts(signal: &[f64], cfg: &SiftConfig) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut residue = signal.to_vec();
    let mut imfs = Vec::new();
    while imfs.len() < cfg.max_imfs && can_sift(&residue) {
        let imf = sift(&residue, cfg);
        for (r, v) in residue.iter_mut().zip(&imf) {
            *r -= v;
        }
        imfs.push(imf);
    }
    (imfs, residue)
}

fn check_signal(signal: &[f64]) -> Result<()> {
    if signal.len() < 8 {
        return Err(Error::Config(format!(
            "EMD needs at least 8 samples, got {}",
            signal.len()
        )));
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("signal".into()));
    }
    Ok(())
}

/// IMFs plus residue of a plain slice.
pub fn emd_values(signal: &[f64], cfg: &SiftConfig) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    cfg.validate()?;
    check_signal(signal)?;
    Ok(emd_parts(signal, cfg))
}

pub fn emd(ts: &TimeSeries, cfg: &SiftConfig) -> Result<ModeMatrix> {
    let (mut imfs, residue) = emd_values(ts.values(), cfg)?;
    let labels = imf_labels(imfs.len());
    imfs.push(residue);
    ModeMatrix::new(ts.start_year(), labels, imfs)
}

/// Ensemble EMD of a plain slice. The averaged IMFs are returned with a
/// residue equal to the signal minus their sum.
pub fn eemd_values(signal: &[f64], cfg: &SiftConfig) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    cfg.validate()?;
    check_signal(signal)?;
    if cfg.ensemble_size < 2 {
        return Err(Error::Config("ensemble_size must be at least 2".into()));
    }
    if cfg.noise_amplitude == 0.0 {
        // every realization is the plain decomposition
        return Ok(emd_parts(signal, cfg));
    }
    let noise_sd = cfg.noise_amplitude * sd_population(signal);
    let normal = Normal::new(0.0, noise_sd.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::Config(e.to_string()))?;
    let realizations: Vec<Vec<Vec<f64>>> = (0..cfg.ensemble_size)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(r as u64));
            let noisy: Vec<f64> = signal.iter().map(|v| v + normal.sample(&mut rng)).collect();
            emd_parts(&noisy, cfg).0
        })
        .collect();
    let n_modes = realizations.iter().map(Vec::len).max().unwrap_or(0);
    let mut avg = vec![vec![0.0; signal.len()]; n_modes];
    for imfs in &realizations {
        for (acc, imf) in avg.iter_mut().zip(imfs) {
            for (a, v) in acc.iter_mut().zip(imf) {
                *a += v;
            }
        }
    }
    let inv = 1.0 / cfg.ensemble_size as f64;
    for acc in &mut avg {
        acc.iter_mut().for_each(|a| *a *= inv);
    }
    let mut residue = signal.to_vec();
    for imf in &avg {
        for (r, v) in residue.iter_mut().zip(imf) {
            *r -= v;
        }
    }
    Ok((avg, residue))
}

pub fn eemd(ts: &TimeSeries, cfg: &SiftConfig) -> Result<ModeMatrix> {
    let (mut imfs, residue) = eemd_values(ts.values(), cfg)?;
    let labels = imf_labels(imfs.len());
    imfs.push(residue);
    ModeMatrix::new(ts.start_year(), labels, imfs)
}
