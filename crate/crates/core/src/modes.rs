//! Decomposition output shared by every decomposer: a bundle of component
//! series over one year range, with a CSV interchange format.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{sd_population, TimeSeries};

/// `k` component series over `[start_year, start_year + len - 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeMatrix {
    start_year: i32,
    labels: Vec<String>,
    modes: Vec<Vec<f64>>,
    /// Mode count the caller asked for, when the decomposer had to settle
    /// for fewer.
    pub requested_modes: Option<usize>,
}

impl ModeMatrix {
    pub fn new(start_year: i32, labels: Vec<String>, modes: Vec<Vec<f64>>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::Data("mode matrix needs at least one mode".into()));
        }
        if labels.len() != modes.len() {
            return Err(Error::LengthMismatch {
                left: labels.len(),
                right: modes.len(),
            });
        }
        let n = modes[0].len();
        if n == 0 {
            return Err(Error::Data("mode matrix has no rows".into()));
        }
        if let Some(bad) = modes.iter().find(|m| m.len() != n) {
            return Err(Error::LengthMismatch {
                left: n,
                right: bad.len(),
            });
        }
        Ok(Self {
            start_year,
            labels,
            modes,
            requested_modes: None,
        })
    }

    pub fn start_year(&self) -> i32 {
        self.start_year
    }

    pub fn end_year(&self) -> i32 {
        self.start_year + self.len() as i32 - 1
    }

    pub fn k(&self) -> usize {
        self.modes.len()
    }

    /// Number of years.
    pub fn len(&self) -> usize {
        self.modes[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn modes(&self) -> &[Vec<f64>] {
        &self.modes
    }

    pub fn mode(&self, l: usize) -> &[f64] {
        &self.modes[l]
    }

    /// Component values for one time index, in mode order.
    pub fn row(&self, idx: usize) -> Vec<f64> {
        self.modes.iter().map(|m| m[idx]).collect()
    }

    pub fn last_row(&self) -> Vec<f64> {
        self.row(self.len() - 1)
    }

    /// Pointwise sum of all modes.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for m in &self.modes {
            for (o, v) in out.iter_mut().zip(m) {
                *o += v;
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["year".to_string()];
        header.extend(self.labels.iter().cloned());
        wr.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec = vec![(self.start_year + i as i32).to_string()];
            rec.extend(self.modes.iter().map(|m| m[i].to_string()));
            wr.write_record(&rec)?;
        }
        wr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    /// Read the CSV layout written by [`ModeMatrix::write_csv`]; also the
    /// import path for externally computed components.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(r);
        let headers = rdr.headers()?.clone();
        if headers.len() < 2 || !headers[0].eq_ignore_ascii_case("year") {
            return Err(Error::DataRow {
                row: 0,
                message: "expected header `year,<mode labels...>`".into(),
            });
        }
        let labels: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut modes = vec![Vec::new(); labels.len()];
        let mut start_year = None;
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| Error::DataRow {
                row,
                message: e.to_string(),
            })?;
            if rec.len() != labels.len() + 1 {
                return Err(Error::DataRow {
                    row,
                    message: format!("expected {} columns, found {}", labels.len() + 1, rec.len()),
                });
            }
            let year: i32 = rec[0].parse().map_err(|_| Error::DataRow {
                row,
                message: format!("non-numeric year `{}`", &rec[0]),
            })?;
            let start = *start_year.get_or_insert(year);
            if year != start + i as i32 {
                return Err(Error::DataRow {
                    row,
                    message: format!("gap at {}", start + i as i32),
                });
            }
            for (l, cell) in rec.iter().skip(1).enumerate() {
                let v: f64 = cell.parse().map_err(|_| Error::DataRow {
                    row,
                    message: format!("non-numeric cell `{cell}`"),
                })?;
                modes[l].push(v);
            }
        }
        let start_year = start_year.ok_or_else(|| Error::Data("no data rows".into()))?;
        ModeMatrix::new(start_year, labels, modes)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(f)
    }

    /// Reconstructed signal as a series.
    pub fn to_series(&self) -> Result<TimeSeries> {
        TimeSeries::new(self.start_year, self.reconstruct())
    }
}

/// Labels `residue, WL1, ..., WL{k-1}` for wavelet decompositions.
pub fn wavelet_labels(k: usize) -> Vec<String> {
    std::iter::once("residue".to_string())
        .chain((1..k).map(|i| format!("WL{i}")))
        .collect()
}

/// Labels `IMF1, ..., IMF{n}, residue` for EMD-family decompositions.
pub fn imf_labels(n_imfs: usize) -> Vec<String> {
    (1..=n_imfs)
        .map(|i| format!("IMF{i}"))
        .chain(std::iter::once("residue".to_string()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdProfile {
    pub labels: Vec<String>,
    pub mode_sd: Vec<f64>,
    /// SD of the reconstructed signal.
    pub signal_sd: f64,
}

impl SdProfile {
    /// Max mode SD over mean mode SD. 1 means perfectly even spread;
    /// 0 for an all-zero profile.
    pub fn flatness(&self) -> f64 {
        let mean = self.mode_sd.iter().sum::<f64>() / self.mode_sd.len() as f64;
        if mean == 0.0 {
            return 0.0;
        }
        self.mode_sd.iter().copied().fold(0.0, f64::max) / mean
    }
}

pub fn mode_sd_profile(m: &ModeMatrix) -> SdProfile {
    SdProfile {
        labels: m.labels.clone(),
        mode_sd: m.modes.iter().map(|x| sd_population(x)).collect(),
        signal_sd: sd_population(&m.reconstruct()),
    }
}
