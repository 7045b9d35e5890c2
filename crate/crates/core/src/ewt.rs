//! Empirical wavelet transform.
//!
//! The magnitude spectrum of the (mirror-extended) signal is segmented at the
//! midpoints between its largest local maxima. Each segment gets a
//! Meyer-type band filter, and every mode is the inverse FFT of the signal
//! spectrum times its filter. Filters are built as differences of smooth
//! step functions, so at every frequency bin they sum to exactly one and the
//! modes add back up to the input.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::{wavelet_labels, ModeMatrix};
use crate::series::TimeSeries;

pub const DEFAULT_GAMMA: f64 = 0.2;

/// How the signal is extended before the FFT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    /// No extension: the FFT treats the signal as periodic.
    None,
    /// Append the time-reversed signal, doubling the length.
    #[default]
    MirrorFull,
    /// Reflect `n` samples at each end.
    Mirror(usize),
}

impl Extension {
    fn extend(&self, x: &[f64]) -> (Vec<f64>, usize) {
        match *self {
            Extension::None => (x.to_vec(), 0),
            Extension::MirrorFull => {
                let mut v = x.to_vec();
                v.extend(x.iter().rev());
                (v, 0)
            }
            Extension::Mirror(n) => {
                let n = n.min(x.len());
                let mut v = Vec::with_capacity(x.len() + 2 * n);
                v.extend(x[..n].iter().rev());
                v.extend_from_slice(x);
                v.extend(x[x.len() - n..].iter().rev());
                (v, n)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EwtConfig {
    pub n_modes: usize,
    pub gamma: f64,
    #[serde(default)]
    pub extension: Extension,
}

impl EwtConfig {
    pub fn new(n_modes: usize) -> Self {
        Self {
            n_modes,
            gamma: DEFAULT_GAMMA,
            extension: Extension::MirrorFull,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryDetection {
    /// Normalized frequencies in (0, pi), strictly increasing.
    pub boundaries: Vec<f64>,
    /// Spectrum bins of the retained maxima, ascending.
    pub maxima: Vec<usize>,
    pub requested_modes: usize,
    /// Mode count actually supported by the spectrum.
    pub n_modes: usize,
}

impl BoundaryDetection {
    pub fn reduced(&self) -> bool {
        self.n_modes < self.requested_modes
    }
}

/// Local maxima of `spec`, end bins included against their single neighbour.
/// Plateaus contribute their first bin.
fn local_maxima(spec: &[f64]) -> Vec<usize> {
    let n = spec.len();
    (0..n)
        .filter(|&i| {
            let left_ok = i == 0 || spec[i] > spec[i - 1];
            let right_ok = if i + 1 == n {
                i > 0 && spec[i] > spec[i - 1]
            } else {
                spec[i] >= spec[i + 1] && (i > 0 || spec[i] > spec[i + 1])
            };
            left_ok && right_ok
        })
        .collect()
}

/// Boundaries in bin units, with the same reduction semantics as
/// [`detect_boundaries`].
fn detect_boundary_bins(spec: &[f64], n_modes: usize) -> Result<(Vec<f64>, Vec<usize>, usize)> {
    if n_modes == 0 {
        return Err(Error::Config("n_modes must be at least 1".into()));
    }
    if spec.len() < 4 {
        return Err(Error::Config(format!(
            "spectrum needs at least 4 bins, got {}",
            spec.len()
        )));
    }
    if spec.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("magnitude spectrum".into()));
    }
    if n_modes == 1 {
        return Ok((Vec::new(), Vec::new(), 1));
    }
    let mut maxima = local_maxima(spec);
    // Largest first; equal magnitudes keep the lower frequency.
    maxima.sort_by(|&a, &b| spec[b].total_cmp(&spec[a]).then(a.cmp(&b)));
    maxima.truncate(n_modes);
    maxima.sort_unstable();
    let effective = maxima.len().max(1);
    if effective < n_modes {
        log::warn!(
            "spectrum has only {} local maxima; reducing mode count from {} to {}",
            maxima.len(),
            n_modes,
            effective
        );
    }
    let bins = maxima
        .windows(2)
        .map(|w| 0.5 * (w[0] as f64 + w[1] as f64))
        .collect();
    Ok((bins, maxima, effective))
}

/// Segment a magnitude spectrum sampled uniformly on `[0, pi]` (bin `i` is
/// frequency `i * pi / (len - 1)`) into `n_modes` bands. Boundaries sit
/// midway between consecutive retained maxima, where the retained maxima are
/// the `n_modes` largest local maxima. If the spectrum has fewer maxima the
/// mode count is reduced and a warning is logged.
pub fn detect_boundaries(spectrum: &[f64], n_modes: usize) -> Result<BoundaryDetection> {
    let (bins, maxima, effective) = detect_boundary_bins(spectrum, n_modes)?;
    let scale = PI / (spectrum.len() - 1) as f64;
    Ok(BoundaryDetection {
        boundaries: bins.iter().map(|b| b * scale).collect(),
        maxima,
        requested_modes: n_modes,
        n_modes: effective,
    })
}

/// Meyer transition polynomial, rising from 0 at x = 0 to 1 at x = 1.
pub fn meyer_beta(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        x.powi(4) * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x.powi(3))
    }
}

/// Smooth step down around boundary `b`: 1 below `(1 - gamma) b`, 0 above
/// `(1 + gamma) b`.
fn step_down(omega: f64, b: f64, gamma: f64) -> f64 {
    let lo = (1.0 - gamma) * b;
    let hi = (1.0 + gamma) * b;
    if omega <= lo {
        1.0
    } else if omega >= hi {
        0.0
    } else {
        let c = (0.5 * PI * meyer_beta((omega - lo) / (2.0 * gamma * b))).cos();
        c * c
    }
}

/// Frequency-domain filters over a length-`len` FFT grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Filterbank {
    pub boundaries: Vec<f64>,
    pub transition_ratio: f64,
    /// `filters[0]` is the low-pass scaling filter; the last one is high-pass.
    pub filters: Vec<Vec<f64>>,
}

impl Filterbank {
    pub fn n_filters(&self) -> usize {
        self.filters.len()
    }

    pub fn grid_len(&self) -> usize {
        self.filters.first().map_or(0, Vec::len)
    }
}

/// Largest transition ratio for which neighbouring transition bands do not
/// overlap, including the band against pi. Infinite when there are no
/// boundaries.
pub fn max_admissible_gamma(boundaries: &[f64]) -> f64 {
    let mut g = f64::INFINITY;
    for w in boundaries.windows(2) {
        g = g.min((w[1] - w[0]) / (w[1] + w[0]));
    }
    if let Some(&last) = boundaries.last() {
        g = g.min((PI - last) / (PI + last));
    }
    g
}

/// |omega| for FFT bin `j` of a length-`len` transform.
fn bin_omega(j: usize, len: usize) -> f64 {
    let jj = j.min(len - j);
    2.0 * PI * jj as f64 / len as f64
}

pub fn build_filterbank(boundaries: &[f64], signal_length: usize, gamma: f64) -> Result<Filterbank> {
    if signal_length == 0 {
        return Err(Error::Config("filterbank grid must be non-empty".into()));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Config(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    for (i, &b) in boundaries.iter().enumerate() {
        if !(b > 0.0 && b < PI) {
            return Err(Error::Config(format!("boundary {b} outside (0, pi)")));
        }
        if i > 0 && b <= boundaries[i - 1] {
            return Err(Error::Config("boundaries must be strictly increasing".into()));
        }
    }
    let g_max = max_admissible_gamma(boundaries);
    let gamma = if gamma > g_max {
        log::debug!("transition bands overlap at gamma={gamma}; shrinking to {g_max}");
        g_max
    } else {
        gamma
    };

    let omegas: Vec<f64> = (0..signal_length).map(|j| bin_omega(j, signal_length)).collect();
    // steps[n] = low-pass at boundary n; prepend 0 and append 1 so each band
    // is a difference of neighbours.
    let mut steps: Vec<Vec<f64>> = Vec::with_capacity(boundaries.len() + 2);
    steps.push(vec![0.0; signal_length]);
    for &b in boundaries {
        steps.push(omegas.iter().map(|&w| step_down(w, b, gamma)).collect());
    }
    steps.push(vec![1.0; signal_length]);
    let filters = steps
        .windows(2)
        .map(|w| w[1].iter().zip(&w[0]).map(|(hi, lo)| hi - lo).collect())
        .collect();
    Ok(Filterbank {
        boundaries: boundaries.to_vec(),
        transition_ratio: gamma,
        filters,
    })
}

/// Raw decomposition of a value slice.
#[derive(Debug, Clone, PartialEq)]
pub struct EwtOutput {
    /// Lowest band first.
    pub modes: Vec<Vec<f64>>,
    pub boundaries: Vec<f64>,
    pub gamma: f64,
    pub requested_modes: usize,
}

impl EwtOutput {
    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }
}

fn fft_forward(x: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

fn filter_inverse(spectrum: &[Complex<f64>], filter: &[f64]) -> Vec<f64> {
    let n = spectrum.len();
    let mut buf: Vec<Complex<f64>> = spectrum.iter().zip(filter).map(|(s, f)| s * f).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(n).process(&mut buf);
    let norm = 1.0 / n as f64;
    buf.iter().map(|c| c.re * norm).collect()
}

/// Relative level below which non-DC spectral content counts as rounding
/// noise.
const FLAT_SPECTRUM_TOL: f64 = 1e-12;

/// Boundary detection used by [`ewt_decompose`]. A spectrum with nothing
/// above rounding noise outside DC (constant or zero signals) has no
/// meaningful maxima; it gets `n_modes` equal-width bands instead, so the
/// residue still carries the whole signal.
fn signal_boundaries(half: &[f64], n_modes: usize, fft_len: usize) -> Result<(Vec<f64>, usize)> {
    let scale = 2.0 * PI / fft_len as f64;
    let dc = half[0];
    let rest = half[1..].iter().copied().fold(0.0, f64::max);
    if rest <= FLAT_SPECTRUM_TOL * dc.max(f64::MIN_POSITIVE) || rest == 0.0 {
        let bounds = (1..n_modes).map(|i| i as f64 * PI / n_modes as f64).collect();
        return Ok((bounds, n_modes));
    }
    let (bins, _, effective) = detect_boundary_bins(half, n_modes)?;
    Ok((bins.iter().map(|b| b * scale).collect(), effective))
}

/// Decompose with boundaries detected from the signal's own spectrum.
pub fn ewt_decompose_values(signal: &[f64], cfg: &EwtConfig) -> Result<EwtOutput> {
    if cfg.n_modes == 0 {
        return Err(Error::Config("n_modes must be at least 1".into()));
    }
    if signal.len() < 2 * cfg.n_modes {
        return Err(Error::Config(format!(
            "signal of length {} is too short for {} modes (need {})",
            signal.len(),
            cfg.n_modes,
            2 * cfg.n_modes
        )));
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("signal".into()));
    }
    let (ext, _) = cfg.extension.extend(signal);
    let spectrum = fft_forward(&ext);
    let half: Vec<f64> = spectrum[..ext.len() / 2 + 1].iter().map(|c| c.norm()).collect();
    let (boundaries, _) = signal_boundaries(&half, cfg.n_modes, ext.len())?;
    let mut out = decompose_with_spectrum(signal.len(), cfg, &spectrum, &boundaries)?;
    out.requested_modes = cfg.n_modes;
    Ok(out)
}

/// Decompose with caller-fixed boundaries. Linear in `signal`.
pub fn ewt_decompose_with_boundaries(
    signal: &[f64],
    boundaries: &[f64],
    cfg: &EwtConfig,
) -> Result<EwtOutput> {
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("signal".into()));
    }
    let (ext, _) = cfg.extension.extend(signal);
    let spectrum = fft_forward(&ext);
    decompose_with_spectrum(signal.len(), cfg, &spectrum, boundaries)
}

fn decompose_with_spectrum(
    n: usize,
    cfg: &EwtConfig,
    spectrum: &[Complex<f64>],
    boundaries: &[f64],
) -> Result<EwtOutput> {
    let offset = match cfg.extension {
        Extension::Mirror(m) => m.min(n),
        _ => 0,
    };
    let fb = build_filterbank(boundaries, spectrum.len(), cfg.gamma)?;
    let modes = fb
        .filters
        .iter()
        .map(|f| filter_inverse(spectrum, f)[offset..offset + n].to_vec())
        .collect();
    Ok(EwtOutput {
        modes,
        boundaries: fb.boundaries,
        gamma: fb.transition_ratio,
        requested_modes: boundaries.len() + 1,
    })
}

/// Decompose a series into `cfg.n_modes` components labelled
/// `residue, WL1, ...` in order of increasing frequency. If the spectrum
/// supports fewer modes the result is smaller and `requested_modes` records
/// the original request.
pub fn ewt_decompose(ts: &TimeSeries, cfg: &EwtConfig) -> Result<ModeMatrix> {
    let out = ewt_decompose_values(ts.values(), cfg)?;
    let k = out.n_modes();
    let mut m = ModeMatrix::new(ts.start_year(), wavelet_labels(k), out.modes)?;
    if k < cfg.n_modes {
        m.requested_modes = Some(cfg.n_modes);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_mode_has_no_boundaries() {
        let d = detect_boundaries(&[1.0, 3.0, 2.0, 5.0, 1.0], 1).unwrap();
        assert!(d.boundaries.is_empty());
        assert_eq!(d.n_modes, 1);
    }

    #[test]
    fn two_isolated_peaks() {
        // 33 bins span [0, pi] for a length-64 signal, so bin 16 is pi/2.
        let mut spec = vec![0.0; 33];
        spec[8] = 1.0;
        spec[24] = 0.7;
        let d = detect_boundaries(&spec, 2).unwrap();
        assert_eq!(d.maxima, vec![8, 24]);
        assert_eq!(d.boundaries.len(), 1);
        assert!((d.boundaries[0] - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn peak_scan_matches_brute_force() {
        // brute force: every bin strictly above both neighbours
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let spec: Vec<f64> = (0..40).map(|_| rng.random::<f64>()).collect();
            let mut brute: Vec<usize> = (1..39)
                .filter(|&i| spec[i] > spec[i - 1] && spec[i] > spec[i + 1])
                .collect();
            if spec[0] > spec[1] {
                brute.insert(0, 0);
            }
            if spec[39] > spec[38] {
                brute.push(39);
            }
            assert_eq!(local_maxima(&spec), brute);
            let d = detect_boundaries(&spec, 3).unwrap();
            brute.sort_by(|&a, &b| spec[b].partial_cmp(&spec[a]).unwrap());
            let mut top: Vec<usize> = brute[..3].to_vec();
            top.sort();
            assert_eq!(d.maxima, top);
            let expect: Vec<f64> = top
                .windows(2)
                .map(|w| (w[0] + w[1]) as f64 / 2.0 * PI / 39.0)
                .collect();
            for (a, b) in d.boundaries.iter().zip(&expect) {
                assert!((a - b).abs() < 1e-14);
            }
            assert_eq!(d.boundaries.len(), expect.len());
        }
    }

    #[test]
    fn tie_keeps_lower_frequency() {
        let spec = [0.0, 1.0, 0.0, 2.0, 0.0, 1.0, 0.0];
        let d = detect_boundaries(&spec, 2).unwrap();
        assert_eq!(d.maxima, vec![1, 3]);
    }

    #[test]
    fn monotone_spectrum_reduces() {
        let spec: Vec<f64> = (0..32).map(|i| 100.0 - i as f64).collect();
        let d = detect_boundaries(&spec, 3).unwrap();
        assert!(d.reduced());
        assert_eq!(d.n_modes, 1);
        assert!(d.boundaries.is_empty());
    }

    #[test]
    fn detect_rejects_bad_input() {
        assert!(detect_boundaries(&[1.0, 2.0, 1.0], 2).is_err());
        assert!(detect_boundaries(&[1.0, 2.0, 1.0, 0.0], 0).is_err());
    }

    #[test]
    fn all_pass_without_boundaries() {
        let fb = build_filterbank(&[], 16, 0.2).unwrap();
        assert_eq!(fb.n_filters(), 1);
        assert!(fb.filters[0].iter().all(|&v| v == 1.0));
    }

    #[test]
    fn single_boundary_transition() {
        let n = 4000;
        let b = PI / 2.0;
        let fb = build_filterbank(&[b], n, 0.1).unwrap();
        let low = &fb.filters[0];
        for j in 0..n {
            let w = bin_omega(j, n);
            if w <= 0.9 * b {
                assert_eq!(low[j], 1.0);
            } else if w >= 1.1 * b {
                assert_eq!(low[j], 0.0);
            } else {
                // independent evaluation of the transition
                let x = (w - 0.9 * b) / (0.2 * b);
                let beta = x.powi(4) * (35.0 - 84.0 * x + 70.0 * x.powi(2) - 20.0 * x.powi(3));
                let expect = (PI / 2.0 * beta).cos().powi(2);
                assert!((low[j] - expect).abs() < 1e-14);
                assert!(low[j] > 0.0 && low[j] < 1.0 || (low[j] - 1.0).abs() < 1e-9);
            }
        }
        // bin 1000 of 4000 sits exactly on pi/2: halfway through the transition
        assert!((low[1000] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn beta_endpoints() {
        assert_eq!(meyer_beta(0.0), 0.0);
        assert_eq!(meyer_beta(1.0), 1.0);
        assert!((meyer_beta(0.5) - 0.5).abs() < 1e-15);
        for i in 1..100 {
            let x = i as f64 / 100.0;
            assert!((meyer_beta(x) + meyer_beta(1.0 - x) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn gamma_shrinks_when_bands_overlap() {
        let fb = build_filterbank(&[1.0, 1.1], 64, 0.5).unwrap();
        let g = (0.1f64) / 2.1;
        assert!((fb.transition_ratio - g).abs() < 1e-15);
    }

    #[test]
    fn completeness_random_boundaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..200 {
            let nb = rng.random_range(0..8);
            let mut b: Vec<f64> = (0..nb).map(|_| rng.random_range(0.05..3.0)).collect();
            b.sort_by(f64::total_cmp);
            b.dedup_by(|x, y| (*x - *y).abs() < 1e-3);
            let len = rng.random_range(8..300);
            let fb = build_filterbank(&b, len, rng.random_range(0.01..0.9)).unwrap();
            for j in 0..len {
                let s: f64 = fb.filters.iter().map(|f| f[j]).sum();
                assert!((s - 1.0).abs() <= 1e-10, "trial {trial} bin {j}: {s}");
                for f in &fb.filters {
                    assert!(f[j] >= -1e-12 && f[j] <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn constant_signal_all_in_residue() {
        let x = vec![850.0; 40];
        let out = ewt_decompose_values(&x, &EwtConfig::new(5)).unwrap();
        assert_eq!(out.n_modes(), 5);
        let norm = (x.iter().map(|v| v * v).sum::<f64>()).sqrt();
        for (r, v) in out.modes[0].iter().zip(&x) {
            assert!((r - v).abs() <= 1e-8 * norm);
        }
        for m in &out.modes[1..] {
            let e = m.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(e <= 1e-8 * norm, "{e}");
        }
    }

    /// Phase chosen so the mirrored signal continues smoothly; the line
    /// then occupies a single bin of the extended spectrum.
    #[test]
    fn sinusoid_lands_in_one_mode() {
        let n = 128;
        let x: Vec<f64> = (0..n)
            .map(|t| (2.0 * PI * (t as f64 + 0.5) / 8.0).cos())
            .collect();
        let out = ewt_decompose_values(&x, &EwtConfig::new(2)).unwrap();
        let total: f64 = x.iter().map(|v| v * v).sum();
        let best = out
            .modes
            .iter()
            .map(|m| m.iter().map(|v| v * v).sum::<f64>())
            .fold(0.0, f64::max);
        assert!(best / total >= 0.99, "ratio {}", best / total);
    }

    #[test]
    fn generic_phase_line_splits_under_mirroring() {
        // sin has a phase reversal at the mirror seam, which turns the
        // period-8 line into a doublet at bins 31 and 33 of the 256-point
        // extended spectrum; both members are the two largest maxima
        let n = 128;
        let x: Vec<f64> = (0..n).map(|t| (2.0 * PI * t as f64 / 8.0).sin()).collect();
        let mut ext = x.clone();
        ext.extend(x.iter().rev());
        let spec = fft_forward(&ext);
        let half: Vec<f64> = spec[..=n].iter().map(|c| c.norm()).collect();
        let d = detect_boundaries(&half, 2).unwrap();
        assert_eq!(d.maxima, vec![31, 33]);
    }

    #[test]
    fn two_tone_sd_ratio() {
        // amplitudes 1 (period 32) and 3 (period 4); sampled SD = A / sqrt(2)
        let n = 256;
        let x: Vec<f64> = (0..n)
            .map(|t| {
                let t = t as f64;
                (2.0 * PI * (t + 0.5) / 32.0).cos() + 3.0 * (2.0 * PI * (t + 0.5) / 4.0).cos()
            })
            .collect();
        let ts = TimeSeries::new(0, x).unwrap();
        let m = ewt_decompose(&ts, &EwtConfig::new(2)).unwrap();
        let p = crate::modes::mode_sd_profile(&m);
        let ratio = p.mode_sd[1] / p.mode_sd[0];
        assert!((ratio - 3.0).abs() < 0.15, "ratio {ratio}");
        assert!((p.mode_sd[0] - 1.0 / 2f64.sqrt()).abs() < 0.05);
    }

    #[test]
    fn reconstruction_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let n = rng.random_range(20..200);
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..900.0)).collect();
            for ext in [Extension::MirrorFull, Extension::None, Extension::Mirror(7)] {
                let cfg = EwtConfig {
                    n_modes: 6,
                    gamma: 0.2,
                    extension: ext,
                };
                let a = ewt_decompose_values(&x, &cfg).unwrap();
                let scale = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
                for i in 0..n {
                    let s: f64 = a.modes.iter().map(|m| m[i]).sum();
                    assert!((s - x[i]).abs() <= 1e-8 * scale);
                }
                let b = ewt_decompose_values(&x, &cfg).unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn linear_with_fixed_boundaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<f64> = (0..90).map(|_| rng.random_range(-1.0..1.0)).collect();
        let cfg = EwtConfig::new(4);
        let base = ewt_decompose_values(&x, &cfg).unwrap();
        let a = -3.7;
        let ax: Vec<f64> = x.iter().map(|v| a * v).collect();
        let scaled = ewt_decompose_with_boundaries(&ax, &base.boundaries, &cfg).unwrap();
        for (m0, m1) in base.modes.iter().zip(&scaled.modes) {
            for (u, v) in m0.iter().zip(m1) {
                assert!((a * u - v).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn too_short_signal() {
        assert!(ewt_decompose_values(&[1.0, 2.0, 3.0], &EwtConfig::new(2)).is_err());
    }
}
