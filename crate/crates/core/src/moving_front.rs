//! Moving-front progressive decomposition.
//!
//! For every front year `y` from the warmup year onwards the series prefix
//! `[y_1, y]` is decomposed from scratch and only the final row of that
//! decomposition is kept. A kept row depends on data up to `y` alone, so
//! rows never change when later years are appended or revised; that is what
//! makes the resulting endpoint matrix safe to split into train/test ranges.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::emd::{eemd_values, emd_values, SiftConfig};
use crate::error::{Error, Result};
use crate::ewt::{ewt_decompose_values, EwtConfig, Extension, DEFAULT_GAMMA};
use crate::modes::wavelet_labels;
use crate::series::TimeSeries;

pub const ENDPOINT_FORMAT_VERSION: u32 = 1;

/// Default warmup span in samples (the first front is the 31st year).
pub const DEFAULT_WARMUP_SAMPLES: usize = 31;

/// Decomposer used at every front.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum DecomposerConfig {
    Ewt {
        gamma: f64,
        #[serde(default)]
        extension: Extension,
    },
    Emd {
        sift: SiftConfig,
    },
    Eemd {
        sift: SiftConfig,
    },
}

impl Default for DecomposerConfig {
    fn default() -> Self {
        DecomposerConfig::Ewt {
            gamma: DEFAULT_GAMMA,
            extension: Extension::MirrorFull,
        }
    }
}

/// Components of one decomposition in the fixed `k`-column layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Components {
    pub modes: Vec<Vec<f64>>,
    /// Mode count the data supported; below `k` means the layout could not
    /// be filled.
    pub found: usize,
}

impl DecomposerConfig {
    pub fn id(&self) -> String {
        match self {
            DecomposerConfig::Ewt { gamma, extension } => {
                format!("ewt(gamma={gamma},extension={extension:?})")
            }
            DecomposerConfig::Emd { sift } => format!(
                "emd(sd={},iters={})",
                sift.sift_sd_threshold, sift.max_sift_iterations
            ),
            DecomposerConfig::Eemd { sift } => format!(
                "eemd(sd={},iters={},ensemble={},noise={},seed={})",
                sift.sift_sd_threshold,
                sift.max_sift_iterations,
                sift.ensemble_size,
                sift.noise_amplitude,
                sift.seed
            ),
        }
    }

    /// Column labels for a `k`-component layout.
    pub fn labels(&self, k: usize) -> Vec<String> {
        match self {
            DecomposerConfig::Ewt { .. } => wavelet_labels(k),
            _ => crate::modes::imf_labels(k.saturating_sub(1)),
        }
    }

    /// Minimum signal length this decomposer accepts for `k` components.
    pub fn min_length(&self, k: usize) -> usize {
        match self {
            DecomposerConfig::Ewt { .. } => 2 * k,
            _ => (2 * k).max(8),
        }
    }

    /// Decompose into exactly `k` columns. EWT columns run from the residue
    /// up in frequency. EMD-family columns are `IMF1..IMF{k-1}` (fastest
    /// first) then the residue, with IMFs the data did not produce left as
    /// zeros.
    pub fn components(&self, values: &[f64], k: usize) -> Result<Components> {
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        match *self {
            DecomposerConfig::Ewt { gamma, extension } => {
                let out = ewt_decompose_values(
                    values,
                    &EwtConfig {
                        n_modes: k,
                        gamma,
                        extension,
                    },
                )?;
                let found = out.n_modes();
                Ok(Components {
                    modes: out.modes,
                    found,
                })
            }
            DecomposerConfig::Emd { sift } | DecomposerConfig::Eemd { sift } => {
                let sift = SiftConfig {
                    max_imfs: k.saturating_sub(1).max(1),
                    ..sift
                };
                let (mut imfs, residue) = if matches!(self, DecomposerConfig::Emd { .. }) {
                    emd_values(values, &sift)?
                } else {
                    eemd_values(values, &sift)?
                };
                if k == 1 {
                    return Ok(Components {
                        modes: vec![values.to_vec()],
                        found: 1,
                    });
                }
                imfs.truncate(k - 1);
                while imfs.len() < k - 1 {
                    imfs.push(vec![0.0; values.len()]);
                }
                imfs.push(residue);
                Ok(Components { modes: imfs, found: k })
            }
        }
    }
}

/// Rows of moving-front endpoints, one per front year, paired with the
/// observed value of that year.
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointMatrix {
    start_year: i32,
    warmup_year: i32,
    k: usize,
    labels: Vec<String>,
    decomposer: DecomposerConfig,
    rows: Vec<Vec<f64>>,
    targets: Vec<f64>,
    /// Series values before the warmup year; with `targets` this is the
    /// full history the rows were built from.
    pre_warmup: Vec<f64>,
}

fn front_row(
    decomposer: &DecomposerConfig,
    values: &[f64],
    k: usize,
    year: i32,
) -> Result<Vec<f64>> {
    let comps = decomposer.components(values, k)?;
    if comps.found < k {
        return Err(Error::ModeCountReduced {
            year,
            requested: k,
            found: comps.found,
        });
    }
    Ok(comps.modes.iter().map(|m| *m.last().unwrap()).collect())
}

fn compute_rows(
    ts: &TimeSeries,
    years: std::ops::RangeInclusive<i32>,
    k: usize,
    decomposer: &DecomposerConfig,
) -> Result<Vec<Vec<f64>>> {
    let years: Vec<i32> = years.collect();
    let rows: Vec<Result<Vec<f64>>> = years
        .par_iter()
        .map(|&y| front_row(decomposer, ts.prefix_through(y)?, k, y))
        .collect();
    rows.into_iter().collect()
}

/// Build the endpoint matrix for fronts `warmup_year ..= ts.end_year()`.
///
/// Every front must support all `k` components; a front whose spectrum
/// yields fewer aborts the build, since a column has to mean the same thing
/// in every row.
pub fn build_endpoint_matrix(
    ts: &TimeSeries,
    warmup_year: i32,
    k: usize,
    decomposer: &DecomposerConfig,
) -> Result<EndpointMatrix> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if warmup_year < ts.start_year() || warmup_year > ts.end_year() {
        return Err(Error::Config(format!(
            "warmup year {warmup_year} outside series range {}-{}",
            ts.start_year(),
            ts.end_year()
        )));
    }
    let span = (warmup_year - ts.start_year() + 1) as usize;
    let need = decomposer.min_length(k);
    if span < need {
        return Err(Error::Config(format!(
            "warmup span of {span} samples is too short for k={k} (need at least {need})"
        )));
    }
    let rows = compute_rows(ts, warmup_year..=ts.end_year(), k, decomposer)?;
    let split = (warmup_year - ts.start_year()) as usize;
    Ok(EndpointMatrix {
        start_year: ts.start_year(),
        warmup_year,
        k,
        labels: decomposer.labels(k),
        decomposer: *decomposer,
        rows,
        targets: ts.values()[split..].to_vec(),
        pre_warmup: ts.values()[..split].to_vec(),
    })
}

/// Append rows for the years `ts_extended` adds beyond `e`. Existing rows
/// are copied untouched. The supplied history must agree bit-for-bit with
/// the one `e` was built from.
pub fn extend_endpoint_matrix(e: &EndpointMatrix, ts_extended: &TimeSeries) -> Result<EndpointMatrix> {
    if ts_extended.start_year() != e.start_year {
        return Err(Error::Config(format!(
            "extended series starts in {}, matrix history starts in {}",
            ts_extended.start_year(),
            e.start_year
        )));
    }
    if ts_extended.end_year() < e.end_year() {
        return Err(Error::Config(format!(
            "extended series ends in {}, before the matrix end {}",
            ts_extended.end_year(),
            e.end_year()
        )));
    }
    for (i, stored) in e.history().enumerate() {
        let supplied = ts_extended.values()[i];
        if supplied.to_bits() != stored.to_bits() {
            return Err(Error::HistoryMismatch {
                year: e.start_year + i as i32,
                stored,
                supplied,
            });
        }
    }
    let mut out = e.clone();
    if ts_extended.end_year() == e.end_year() {
        return Ok(out);
    }
    let first_new = e.end_year() + 1;
    let new_rows = compute_rows(ts_extended, first_new..=ts_extended.end_year(), e.k, &e.decomposer)?;
    out.rows.extend(new_rows);
    let from = (first_new - e.start_year) as usize;
    out.targets.extend_from_slice(&ts_extended.values()[from..]);
    Ok(out)
}

impl EndpointMatrix {
    pub fn start_year(&self) -> i32 {
        self.start_year
    }

    pub fn warmup_year(&self) -> i32 {
        self.warmup_year
    }

    pub fn end_year(&self) -> i32 {
        self.warmup_year + self.rows.len() as i32 - 1
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn decomposer(&self) -> &DecomposerConfig {
        &self.decomposer
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        (0..self.rows.len()).map(move |i| self.warmup_year + i as i32)
    }

    pub fn row_index(&self, year: i32) -> Option<usize> {
        if year < self.warmup_year || year > self.end_year() {
            None
        } else {
            Some((year - self.warmup_year) as usize)
        }
    }

    pub fn row_for_year(&self, year: i32) -> Option<&[f64]> {
        self.row_index(year).map(|i| self.rows[i].as_slice())
    }

    /// Every series value the rows were built from, oldest first.
    pub fn history(&self) -> impl Iterator<Item = f64> + '_ {
        self.pre_warmup.iter().chain(&self.targets).copied()
    }

    pub fn history_series(&self) -> Result<TimeSeries> {
        TimeSeries::new(self.start_year, self.history().collect())
    }

    /// The matrix as it stood when `year` was the latest front.
    pub fn truncated_through(&self, year: i32) -> Result<EndpointMatrix> {
        let idx = self.row_index(year).ok_or_else(|| {
            Error::Config(format!(
                "year {year} outside matrix range {}-{}",
                self.warmup_year,
                self.end_year()
            ))
        })?;
        let mut out = self.clone();
        out.rows.truncate(idx + 1);
        out.targets.truncate(idx + 1);
        Ok(out)
    }

    /// Largest relative violation of `sum(row) == target` over all rows.
    pub fn max_reconstruction_error(&self) -> f64 {
        self.rows
            .iter()
            .zip(&self.targets)
            .map(|(r, t)| {
                let s: f64 = r.iter().sum();
                (s - t).abs() / t.abs().max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["year".to_string()];
        header.extend((1..=self.k).map(|l| format!("c{l}")));
        header.push("target".into());
        wr.write_record(&header)?;
        for (i, row) in self.rows.iter().enumerate() {
            let mut rec = vec![(self.warmup_year + i as i32).to_string()];
            rec.extend(row.iter().map(f64::to_string));
            rec.push(self.targets[i].to_string());
            wr.write_record(&rec)?;
        }
        wr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn meta(&self) -> EndpointMeta {
        EndpointMeta {
            format_version: ENDPOINT_FORMAT_VERSION,
            decomposer_id: self.decomposer.id(),
            decomposer: self.decomposer,
            k: self.k,
            start_year: self.start_year,
            warmup_year: self.warmup_year,
            labels: self.labels.clone(),
            pre_warmup_values: self.pre_warmup.clone(),
        }
    }

    /// Write `path` (CSV) and its metadata sidecar.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))?;
        let meta_path = sidecar_path(path);
        let json = serde_json::to_string_pretty(&self.meta())?;
        std::fs::write(&meta_path, json).map_err(|e| Error::io(&meta_path, e))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let meta_path = sidecar_path(path);
        let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: EndpointMeta = serde_json::from_str(&text)?;
        if meta.format_version != ENDPOINT_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "endpoint matrix format version {} is not supported (expected {})",
                meta.format_version, ENDPOINT_FORMAT_VERSION
            )));
        }
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::Reader::from_reader(f);
        let width = meta.k + 2;
        let mut rows = Vec::new();
        let mut targets = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| Error::DataRow {
                row,
                message: e.to_string(),
            })?;
            if rec.len() != width {
                return Err(Error::DataRow {
                    row,
                    message: format!("expected {width} columns, found {}", rec.len()),
                });
            }
            let year: i32 = rec[0].parse().map_err(|_| Error::DataRow {
                row,
                message: format!("non-numeric year `{}`", &rec[0]),
            })?;
            if year != meta.warmup_year + i as i32 {
                return Err(Error::DataRow {
                    row,
                    message: format!("expected year {}, found {year}", meta.warmup_year + i as i32),
                });
            }
            let mut vals = Vec::with_capacity(width - 1);
            for cell in rec.iter().skip(1) {
                vals.push(cell.parse::<f64>().map_err(|_| Error::DataRow {
                    row,
                    message: format!("non-numeric cell `{cell}`"),
                })?);
            }
            targets.push(vals.pop().unwrap());
            rows.push(vals);
        }
        if rows.is_empty() {
            return Err(Error::Data("no data rows".into()));
        }
        if meta.pre_warmup_values.len() != (meta.warmup_year - meta.start_year) as usize {
            return Err(Error::Data("sidecar pre-warmup history has the wrong length".into()));
        }
        Ok(EndpointMatrix {
            start_year: meta.start_year,
            warmup_year: meta.warmup_year,
            k: meta.k,
            labels: meta.labels,
            decomposer: meta.decomposer,
            rows,
            targets,
            pre_warmup: meta.pre_warmup_values,
        })
    }
}

/// Sidecar metadata stored next to a persisted endpoint matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointMeta {
    pub format_version: u32,
    pub decomposer_id: String,
    pub decomposer: DecomposerConfig,
    pub k: usize,
    pub start_year: i32,
    pub warmup_year: i32,
    pub labels: Vec<String>,
    pub pre_warmup_values: Vec<f64>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// How much one component of a one-time decomposition moves when a single
/// year is appended to the decomposed range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakReport {
    pub component_index: usize,
    pub label: String,
    /// First and last year compared (the shared range `[y_1, y_m]`).
    pub first_year: i32,
    pub last_year: i32,
    /// Component over `[y_1, y_m]`.
    pub before: Vec<f64>,
    /// Component over `[y_1, y_{m+1}]`.
    pub after: Vec<f64>,
    /// `|before - after|` per shared year.
    pub changes: Vec<f64>,
    pub max_change: f64,
    pub num_changed: usize,
    pub tolerance: f64,
}

/// Changes below this fraction of the series' largest magnitude count as
/// rounding.
pub const LEAK_REL_TOL: f64 = 1e-9;

/// Decompose `[y_1, front_year]` and `[y_1, front_year + 1]` and report the
/// per-year change of one component over the shared years.
pub fn leak_demo(
    ts: &TimeSeries,
    front_year: i32,
    component_index: usize,
    k: usize,
    decomposer: &DecomposerConfig,
) -> Result<LeakReport> {
    if component_index >= k {
        return Err(Error::Config(format!(
            "component index {component_index} out of range for k={k}"
        )));
    }
    if front_year >= ts.end_year() || front_year < ts.start_year() {
        return Err(Error::Config(format!(
            "front year {front_year} must lie in {}-{}",
            ts.start_year(),
            ts.end_year() - 1
        )));
    }
    let short = ts.prefix_through(front_year)?;
    let long = ts.prefix_through(front_year + 1)?;
    let a = decomposer.components(short, k)?;
    let b = decomposer.components(long, k)?;
    for (c, y) in [(&a, front_year), (&b, front_year + 1)] {
        if c.found < k {
            return Err(Error::ModeCountReduced {
                year: y,
                requested: k,
                found: c.found,
            });
        }
    }
    let before = a.modes[component_index].clone();
    let after = b.modes[component_index].clone();
    let changes: Vec<f64> = before
        .iter()
        .zip(&after)
        .map(|(x, y)| (x - y).abs())
        .collect();
    let scale = long.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let tolerance = LEAK_REL_TOL * scale;
    Ok(LeakReport {
        component_index,
        label: decomposer.labels(k)[component_index].clone(),
        first_year: ts.start_year(),
        last_year: front_year,
        max_change: changes.iter().copied().fold(0.0, f64::max),
        num_changed: changes.iter().filter(|&&c| c > tolerance).count(),
        changes,
        before,
        after,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_series(seed: u64, n: usize) -> TimeSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TimeSeries::new(1900, (0..n).map(|_| rng.random_range(600.0..1000.0)).collect()).unwrap()
    }

    #[test]
    fn constant_series_rows() {
        let ts = TimeSeries::new(1871, vec![850.0; 60]).unwrap();
        let e = build_endpoint_matrix(&ts, 1901, 9, &DecomposerConfig::default()).unwrap();
        assert_eq!(e.n_rows(), 30);
        for row in e.rows() {
            assert!((row[0] - 850.0).abs() < 1e-9);
            for v in &row[1..] {
                assert!(v.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn row_sums_match_independent_summation() {
        let ts = random_series(1, 80);
        let e = build_endpoint_matrix(&ts, 1930, 5, &DecomposerConfig::default()).unwrap();
        for (year, row) in e.years().zip(e.rows()) {
            let mut s = 0.0;
            for v in row {
                s += v;
            }
            let j = ts.value_at(year).unwrap();
            assert!((s - j).abs() <= 1e-6 * j.abs());
        }
        assert_eq!(e.targets(), &ts.values()[30..]);
    }

    #[test]
    fn warmup_too_short() {
        let ts = random_series(2, 40);
        let err = build_endpoint_matrix(&ts, 1905, 9, &DecomposerConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn extend_zero_years_is_identity() {
        let ts = random_series(3, 50);
        let e = build_endpoint_matrix(&ts, 1925, 4, &DecomposerConfig::default()).unwrap();
        assert_eq!(extend_endpoint_matrix(&e, &ts).unwrap(), e);
    }

    #[test]
    fn extend_matches_full_build() {
        let ts = random_series(4, 60);
        let prefix = ts.slice(1900, 1950).unwrap();
        let d = DecomposerConfig::default();
        let e = build_endpoint_matrix(&prefix, 1925, 4, &d).unwrap();
        let ext = extend_endpoint_matrix(&e, &ts).unwrap();
        let full = build_endpoint_matrix(&ts, 1925, 4, &d).unwrap();
        assert_eq!(ext, full);
        assert_eq!(ext.n_rows(), e.n_rows() + 9);
        for (a, b) in e.rows().iter().zip(ext.rows()) {
            assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn extend_refuses_tampered_history() {
        let ts = random_series(5, 50);
        let prefix = ts.slice(1900, 1940).unwrap();
        let e = build_endpoint_matrix(&prefix, 1925, 4, &DecomposerConfig::default()).unwrap();
        let mut vals = ts.values().to_vec();
        vals[3] += 1e-9;
        let tampered = TimeSeries::new(1900, vals).unwrap();
        let err = extend_endpoint_matrix(&e, &tampered).unwrap_err();
        assert!(matches!(err, Error::HistoryMismatch { year: 1903, .. }), "{err}");
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        let ts = random_series(6, 45);
        let e = build_endpoint_matrix(&ts, 1920, 3, &DecomposerConfig::default()).unwrap();
        e.save(&path).unwrap();
        let back = EndpointMatrix::load(&path).unwrap();
        assert_eq!(back, e);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("year,c1,c2,c3,target\n1920,"));
    }

    #[test]
    fn leak_on_constant_and_random() {
        let c = TimeSeries::new(1871, vec![850.0; 40]).unwrap();
        let r = leak_demo(&c, 1901, 8, 9, &DecomposerConfig::default()).unwrap();
        assert!(r.max_change <= 1e-10, "{}", r.max_change);
        assert_eq!(r.num_changed, 0);

        let ts = random_series(7, 40);
        let r = leak_demo(&ts, 1930, 2, 5, &DecomposerConfig::default()).unwrap();
        // direct recomputation of both decompositions
        let d = DecomposerConfig::default();
        let a = d.components(&ts.values()[..31], 5).unwrap();
        let b = d.components(&ts.values()[..32], 5).unwrap();
        let direct = (0..31)
            .map(|i| (a.modes[2][i] - b.modes[2][i]).abs())
            .fold(0.0, f64::max);
        assert_eq!(r.max_change, direct);
        assert!(r.max_change > 0.0);
        assert!(r.num_changed > 0 && r.num_changed <= 31);
        assert_eq!(r.label, "WL2");
    }

    #[test]
    fn emd_layout_is_fixed_width() {
        let ts = random_series(8, 60);
        let d = DecomposerConfig::Emd {
            sift: SiftConfig::default(),
        };
        let e = build_endpoint_matrix(&ts, 1930, 4, &d).unwrap();
        assert!(e.rows().iter().all(|r| r.len() == 4));
        assert!(e.max_reconstruction_error() < 1e-9);
        assert_eq!(e.labels(), &["IMF1", "IMF2", "IMF3", "residue"]);
    }
}
