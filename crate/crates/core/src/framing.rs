//! Supervised framing of an endpoint matrix and year-range splits.
//!
//! The input window for target year `y` is the `L` endpoint rows of years
//! `y-L ..= y-1`; the target is the observed value of `y`. The row of `y`
//! itself never enters its own window.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moving_front::EndpointMatrix;

/// `L` rows of `k` features, oldest first.
pub type Window = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SupervisedSet {
    pub lag: usize,
    pub k: usize,
    pub inputs: Vec<Window>,
    pub targets: Vec<f64>,
    pub target_years: Vec<i32>,
}

impl SupervisedSet {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Pairs whose target year lies in `range`.
    pub fn select(&self, range: YearRange) -> SupervisedSet {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| range.contains(self.target_years[i]))
            .collect();
        self.pick(&keep)
    }

    pub fn pick(&self, idx: &[usize]) -> SupervisedSet {
        SupervisedSet {
            lag: self.lag,
            k: self.k,
            inputs: idx.iter().map(|&i| self.inputs[i].clone()).collect(),
            targets: idx.iter().map(|&i| self.targets[i]).collect(),
            target_years: idx.iter().map(|&i| self.target_years[i]).collect(),
        }
    }

    /// Split off the last `fraction` of pairs (at least one when the set has
    /// two or more) as a hold-out.
    pub fn holdout_tail(&self, fraction: f64) -> (SupervisedSet, SupervisedSet) {
        let n = self.len();
        let mut n_val = (fraction * n as f64).round() as usize;
        if fraction > 0.0 && n >= 2 {
            n_val = n_val.max(1);
        }
        n_val = n_val.min(n.saturating_sub(1));
        let cut = n - n_val;
        let head: Vec<usize> = (0..cut).collect();
        let tail: Vec<usize> = (cut..n).collect();
        (self.pick(&head), self.pick(&tail))
    }

    pub fn first_year(&self) -> Option<i32> {
        self.target_years.first().copied()
    }

    pub fn last_year(&self) -> Option<i32> {
        self.target_years.last().copied()
    }

    /// Flat debug layout: one row per pair, columns `c{l}_t-{j}` then
    /// `target,target_year`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = Vec::new();
        for j in (1..=self.lag).rev() {
            for l in 1..=self.k {
                header.push(format!("c{l}_t-{j}"));
            }
        }
        header.push("target".into());
        header.push("target_year".into());
        wr.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.inputs[i]
                .iter()
                .flat_map(|row| row.iter().map(f64::to_string))
                .collect();
            rec.push(self.targets[i].to_string());
            rec.push(self.target_years[i].to_string());
            wr.write_record(&rec)?;
        }
        wr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Frame every target year that has a full window of earlier rows.
pub fn frame(e: &EndpointMatrix, lag: usize) -> Result<SupervisedSet> {
    if lag == 0 {
        return Err(Error::Config("lag must be at least 1".into()));
    }
    let n = e.n_rows();
    let mut out = SupervisedSet {
        lag,
        k: e.k(),
        ..Default::default()
    };
    for t in lag..n {
        out.inputs.push(e.rows()[t - lag..t].to_vec());
        out.targets.push(e.targets()[t]);
        out.target_years.push(e.warmup_year() + t as i32);
    }
    Ok(out)
}

/// The window that predicts the year after the matrix ends.
pub fn last_window(e: &EndpointMatrix, lag: usize) -> Result<Window> {
    window_for(e, e.end_year() + 1, lag)
}

/// Window of rows `year-lag ..= year-1`.
pub fn window_for(e: &EndpointMatrix, year: i32, lag: usize) -> Result<Window> {
    let first = year - lag as i32;
    let (Some(a), Some(b)) = (e.row_index(first), e.row_index(year - 1)) else {
        return Err(Error::Config(format!(
            "no full window of {lag} rows before {year} (matrix covers {}-{})",
            e.warmup_year(),
            e.end_year()
        )));
    };
    Ok(e.rows()[a..=b].to_vec())
}

/// Inclusive year range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearRange {
    pub first: i32,
    pub last: i32,
}

impl YearRange {
    pub fn new(first: i32, last: i32) -> Result<Self> {
        if last < first {
            return Err(Error::Config(format!("empty year range {first}-{last}")));
        }
        Ok(Self { first, last })
    }

    pub fn contains(&self, year: i32) -> bool {
        year >= self.first && year <= self.last
    }

    pub fn len(&self) -> usize {
        (self.last - self.first + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn years(&self) -> std::ops::RangeInclusive<i32> {
        self.first..=self.last
    }
}

impl std::fmt::Display for YearRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", self.first, self.last)
    }
}

impl std::str::FromStr for YearRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad year range `{s}` (expected FIRST-LAST)"));
        let (a, b) = s.split_once(['-', ':']).ok_or_else(bad)?;
        let first = a.trim().parse().map_err(|_| bad())?;
        let last = b.trim().parse().map_err(|_| bad())?;
        YearRange::new(first, last)
    }
}

/// Ordered, contiguous train / test / forecast ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: YearRange,
    pub test: YearRange,
    #[serde(default)]
    pub forecast: Option<YearRange>,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.test.first != self.train.last + 1 {
            return Err(Error::Config(format!(
                "test range {} must start right after train range {}",
                self.test, self.train
            )));
        }
        if let Some(f) = self.forecast {
            if f.first != self.test.last + 1 {
                return Err(Error::Config(format!(
                    "forecast range {f} must start right after test range {}",
                    self.test
                )));
            }
        }
        Ok(())
    }

    /// Train through the end of the test range; the data the final model
    /// sees.
    pub fn final_train(&self) -> YearRange {
        YearRange {
            first: self.train.first,
            last: self.test.last,
        }
    }
}

/// Pairs of a framed set falling in each range.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSets {
    pub train: SupervisedSet,
    pub test: SupervisedSet,
    pub forecast: Option<SupervisedSet>,
}

/// Split a framed set. The head of the train range may be lost to warmup
/// and lag; the test and forecast ranges must be fully covered.
pub fn split(set: &SupervisedSet, spec: &SplitSpec) -> Result<SplitSets> {
    spec.validate()?;
    let train = set.select(spec.train);
    if train.is_empty() {
        return Err(Error::Config(format!(
            "train range {} has no framed pairs (data starts at {:?})",
            spec.train,
            set.first_year()
        )));
    }
    let covered = |r: YearRange, s: &SupervisedSet| -> Result<()> {
        if s.len() != r.len() {
            return Err(Error::Config(format!(
                "range {r} is only partly covered by the data ({} of {} years)",
                s.len(),
                r.len()
            )));
        }
        Ok(())
    };
    let test = set.select(spec.test);
    covered(spec.test, &test)?;
    let forecast = match spec.forecast {
        Some(r) => {
            let f = set.select(r);
            covered(r, &f)?;
            Some(f)
        }
        None => None,
    };
    Ok(SplitSets { train, test, forecast })
}
