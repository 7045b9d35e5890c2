//! Annual series ingestion, descriptive statistics, forecast metrics and
//! standardization.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A univariate annual series with consecutive integer years.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    start_year: i32,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(start_year: i32, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Data("no data rows".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite value for year {}",
                start_year + i as i32
            )));
        }
        Ok(Self { start_year, values })
    }

    pub fn start_year(&self) -> i32 {
        self.start_year
    }

    pub fn end_year(&self) -> i32 {
        self.start_year + self.values.len() as i32 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        (0..self.values.len()).map(move |i| self.start_year + i as i32)
    }

    pub fn index_of(&self, year: i32) -> Option<usize> {
        if year < self.start_year || year > self.end_year() {
            None
        } else {
            Some((year - self.start_year) as usize)
        }
    }

    pub fn value_at(&self, year: i32) -> Option<f64> {
        self.index_of(year).map(|i| self.values[i])
    }

    /// Values from the first year through `year` inclusive.
    pub fn prefix_through(&self, year: i32) -> Result<&[f64]> {
        let idx = self.index_of(year).ok_or_else(|| {
            Error::Config(format!(
                "year {year} outside series range {}-{}",
                self.start_year,
                self.end_year()
            ))
        })?;
        Ok(&self.values[..=idx])
    }

    /// Sub-series restricted to `[first, last]`.
    pub fn slice(&self, first: i32, last: i32) -> Result<TimeSeries> {
        let (a, b) = match (self.index_of(first), self.index_of(last)) {
            (Some(a), Some(b)) if a <= b => (a, b),
            _ => {
                return Err(Error::Config(format!(
                    "range {first}-{last} outside series range {}-{}",
                    self.start_year,
                    self.end_year()
                )))
            }
        };
        TimeSeries::new(first, self.values[a..=b].to_vec())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["year", "value"])?;
        for (year, v) in self.years().zip(&self.values) {
            wr.write_record([year.to_string(), v.to_string()])?;
        }
        wr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Load a `year,value` CSV file.
pub fn load_csv(path: impl AsRef<Path>) -> Result<TimeSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file)
}

/// Parse a `year,value` CSV stream. Rows may be in any order; the years
/// must form a consecutive run once sorted. Row numbers in errors count
/// data rows from 1 (the header is row 0).
pub fn read_csv<R: Read>(reader: R) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let names: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
    if names.len() != 2 || names[0] != "year" || names[1] != "value" {
        if headers.is_empty() {
            return Err(Error::Data("no data rows".into()));
        }
        return Err(Error::DataRow {
            row: 0,
            message: format!("expected header `year,value`, found `{}`", names.join(",")),
        });
    }

    let mut rows: BTreeMap<i32, f64> = BTreeMap::new();
    let mut first_row_of: BTreeMap<i32, usize> = BTreeMap::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::DataRow {
            row,
            message: e.to_string(),
        })?;
        if record.len() != 2 {
            return Err(Error::DataRow {
                row,
                message: format!("expected 2 columns, found {}", record.len()),
            });
        }
        let year: i32 = record[0].parse().map_err(|_| Error::DataRow {
            row,
            message: format!("non-numeric year `{}`", &record[0]),
        })?;
        let value: f64 = record[1].parse().map_err(|_| Error::DataRow {
            row,
            message: format!("non-numeric value `{}`", &record[1]),
        })?;
        if !value.is_finite() {
            return Err(Error::DataRow {
                row,
                message: format!("non-finite value `{}`", &record[1]),
            });
        }
        if let Some(prev) = first_row_of.get(&year) {
            return Err(Error::DataRow {
                row,
                message: format!("duplicate year {year} (first seen at row {prev})"),
            });
        }
        first_row_of.insert(year, row);
        rows.insert(year, value);
    }
    if rows.is_empty() {
        return Err(Error::Data("no data rows".into()));
    }

    let start_year = *rows.keys().next().unwrap();
    let mut expected = start_year;
    let mut values = Vec::with_capacity(rows.len());
    for (&year, &v) in &rows {
        if year != expected {
            return Err(Error::DataRow {
                row: first_row_of[&year],
                message: format!("gap at {expected}"),
            });
        }
        values.push(v);
        expected += 1;
    }
    TimeSeries::new(start_year, values)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation (divisor n).
pub fn sd_population(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Sample standard deviation (divisor n - 1); zero for fewer than two values.
pub fn sd_sample(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    pub sd_population: f64,
    pub sd_sample: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn to_kv(&self) -> String {
        format!(
            "count={}\nmean={:.4}\nsd_population={:.4}\nsd_sample={:.4}\nmin={}\nmax={}\n",
            self.count, self.mean, self.sd_population, self.sd_sample, self.min, self.max
        )
    }

    pub const CSV_HEADER: &'static str = "count,mean,sd_population,sd_sample,min,max";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.count, self.mean, self.sd_population, self.sd_sample, self.min, self.max
        )
    }
}

pub fn descriptive_stats(ts: &TimeSeries) -> Stats {
    let xs = ts.values();
    Stats {
        count: xs.len(),
        mean: mean(xs),
        sd_population: sd_population(xs),
        sd_sample: sd_sample(xs),
        min: xs.iter().copied().fold(f64::INFINITY, f64::min),
        max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Forecast-quality metrics. `pp` is the performance parameter
/// `1 - (rmse / sd)^2` with the population SD of the observations, so the
/// constant-mean predictor scores exactly 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n: usize,
    pub rmse: f64,
    pub pp: f64,
    pub nrmse: f64,
    pub mape: f64,
    pub r: f64,
}

impl Metrics {
    pub const CSV_HEADER: &'static str = "n,rmse,pp,nrmse,mape,r";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.n, self.rmse, self.pp, self.nrmse, self.mape, self.r
        )
    }
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={} rmse={:.4} pp={:.4} nrmse={:.5} mape={:.5} r={:.4}",
            self.n, self.rmse, self.pp, self.nrmse, self.mape, self.r
        )
    }
}

pub fn compute_metrics(predicted: &[f64], observed: &[f64]) -> Result<Metrics> {
    if predicted.len() != observed.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: observed.len(),
        });
    }
    if observed.is_empty() {
        return Err(Error::Data("metrics need at least one observation".into()));
    }
    if predicted.iter().chain(observed).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("metric inputs".into()));
    }
    let n = observed.len();
    let sd_obs = sd_population(observed);
    if sd_obs == 0.0 {
        return Err(Error::ZeroSd(
            "observed values are constant; PP is undefined".into(),
        ));
    }
    let mse = predicted
        .iter()
        .zip(observed)
        .map(|(p, o)| (p - o) * (p - o))
        .sum::<f64>()
        / n as f64;
    let rmse = mse.sqrt();
    let ratio = rmse / sd_obs;
    let pp = 1.0 - ratio * ratio;
    let mean_obs = mean(observed);

    let mut ape_sum = 0.0;
    let mut ape_n = 0usize;
    for (p, o) in predicted.iter().zip(observed) {
        if *o == 0.0 {
            continue;
        }
        ape_sum += ((p - o) / o).abs();
        ape_n += 1;
    }
    if ape_n < n {
        log::warn!(
            "MAPE: skipped {} zero observation(s) out of {n}",
            n - ape_n
        );
    }
    let mape = if ape_n == 0 {
        f64::NAN
    } else {
        ape_sum / ape_n as f64
    };

    let mean_pred = mean(predicted);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (p, o) in predicted.iter().zip(observed) {
        let dp = p - mean_pred;
        let d_o = o - mean_obs;
        sxy += dp * d_o;
        sxx += dp * dp;
        syy += d_o * d_o;
    }
    // A constant prediction has no defined correlation; report 0.
    let r = if sxx == 0.0 {
        0.0
    } else {
        (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)
    };

    Ok(Metrics {
        n,
        rmse,
        pp,
        nrmse: rmse / mean_obs,
        mape,
        r,
    })
}

/// Mean/SD standardization with the population SD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: f64,
    pub sd: f64,
}

impl Scaler {
    pub fn fit(values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::ZeroSd(format!(
                "scaler needs at least 2 values, got {}",
                values.len()
            )));
        }
        let sd = sd_population(values);
        if sd == 0.0 || !sd.is_finite() {
            return Err(Error::ZeroSd("cannot fit scaler on constant values".into()));
        }
        Ok(Self {
            mean: mean(values),
            sd,
        })
    }

    pub fn apply_one(&self, x: f64) -> f64 {
        (x - self.mean) / self.sd
    }

    pub fn invert_one(&self, z: f64) -> f64 {
        z * self.sd + self.mean
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&x| self.apply_one(x)).collect()
    }

    pub fn invert(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&z| self.invert_one(z)).collect()
    }
}

pub fn fit_scaler(values: &[f64]) -> Result<Scaler> {
    Scaler::fit(values)
}

pub fn apply_scaler(s: &Scaler, values: &[f64]) -> Vec<f64> {
    s.apply(values)
}

pub fn invert_scaler(s: &Scaler, values: &[f64]) -> Vec<f64> {
    s.invert(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn parse(s: &str) -> Result<TimeSeries> {
        read_csv(s.as_bytes())
    }

    #[test]
    fn csv_sorts_rows() {
        let ts = parse("year,value\n1902,2.0\n1900,0.5\n1901,1.0\n").unwrap();
        assert_eq!(ts.start_year(), 1900);
        assert_eq!(ts.values(), &[0.5, 1.0, 2.0]);
        assert_eq!(ts.end_year(), 1902);
    }

    #[test]
    fn csv_empty_file() {
        let err = parse("").unwrap_err();
        assert!(err.to_string().contains("no data rows"), "{err}");
        let err = parse("year,value\n").unwrap_err();
        assert!(err.to_string().contains("no data rows"), "{err}");
    }

    #[test]
    fn csv_gap_reported() {
        let err = parse("year,value\n1901,5.0\n1903,6.0\n").unwrap_err();
        assert!(err.to_string().contains("gap at 1902"), "{err}");
    }

    #[test]
    fn csv_duplicate_and_non_numeric() {
        let err = parse("year,value\n1901,5.0\n1901,6.0\n").unwrap_err();
        match err {
            Error::DataRow { row, message } => {
                assert_eq!(row, 2);
                assert!(message.contains("duplicate year 1901"));
            }
            other => panic!("unexpected {other}"),
        }
        let err = parse("year,value\n1901,5.0\n1902,abc\n").unwrap_err();
        assert!(matches!(err, Error::DataRow { row: 2, .. }), "{err}");
    }

    #[test]
    fn csv_bad_header() {
        assert!(parse("yr,val\n1901,1\n").is_err());
    }

    #[test]
    fn csv_missing_file() {
        let err = load_csv("/definitely/not/here.csv").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn stats_small_cases() {
        let s = descriptive_stats(&TimeSeries::new(2000, vec![5.0, 5.0, 5.0]).unwrap());
        assert_eq!(s.sd_population, 0.0);
        let s = descriptive_stats(&TimeSeries::new(2000, vec![0.0, 2.0]).unwrap());
        assert_eq!(s.mean, 1.0);
        assert_eq!(s.sd_population, 1.0);
        assert_relative_eq!(s.sd_sample, 2f64.sqrt(), max_relative = 1e-15);
        assert_eq!((s.min, s.max, s.count), (0.0, 2.0, 2));
    }

    #[test]
    fn metrics_worked_example() {
        let m = compute_metrics(&[1.0, 2.0, 4.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_relative_eq!(m.rmse, (1.0f64 / 3.0).sqrt(), max_relative = 1e-14);
        assert!((m.pp - 0.5).abs() < 1e-12);
    }

    #[test]
    fn metrics_perfect_and_mean_predictor() {
        let obs = [3.0, 7.0, 1.0, 9.0, 4.0];
        let m = compute_metrics(&obs, &obs).unwrap();
        assert_eq!(m.rmse, 0.0);
        assert_eq!(m.pp, 1.0);
        assert!((m.r - 1.0).abs() < 1e-15);
        let mu = obs.iter().sum::<f64>() / obs.len() as f64;
        let m = compute_metrics(&[mu; 5], &obs).unwrap();
        assert!(m.pp.abs() < 1e-12, "{}", m.pp);
    }

    #[test]
    fn metrics_errors() {
        assert!(matches!(
            compute_metrics(&[1.0], &[1.0, 2.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            compute_metrics(&[1.0, 2.0], &[3.0, 3.0]),
            Err(Error::ZeroSd(_))
        ));
        // zero observation: MAPE term skipped, other metrics still defined
        let m = compute_metrics(&[1.0, 2.0, 3.0], &[0.0, 2.0, 4.0]).unwrap();
        assert_relative_eq!(m.mape, 0.125, max_relative = 1e-15);
    }

    #[test]
    fn scaler_examples() {
        let s = Scaler::fit(&[0.0, 2.0]).unwrap();
        assert_eq!(s.apply(&[0.0, 2.0]), vec![-1.0, 1.0]);
        assert!(matches!(Scaler::fit(&[4.0, 4.0]), Err(Error::ZeroSd(_))));

        let train = [1.0, 2.0, 3.0, 4.0];
        let test = [10.0, 11.0];
        let s = Scaler::fit(&train).unwrap();
        let z = s.apply(&test);
        assert!(z.iter().sum::<f64>().abs() > 1.0);
        let zt = s.apply(&train);
        assert!(zt.iter().sum::<f64>().abs() < 1e-12);
        assert_relative_eq!(sd_population(&zt), 1.0, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn scaler_round_trip(xs in prop::collection::vec(-1e4f64..1e4, 2..64)) {
            prop_assume!(sd_population(&xs) > 1e-6);
            let s = Scaler::fit(&xs).unwrap();
            let back = s.invert(&s.apply(&xs));
            for (a, b) in xs.iter().zip(&back) {
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(s.sd).max(s.mean.abs()));
            }
        }

        #[test]
        fn metrics_affine_behaviour(
            obs in prop::collection::vec(-100f64..100.0, 3..40),
            noise in prop::collection::vec(-5f64..5.0, 40),
            scale in 0.1f64..10.0,
            shift in -50f64..50.0,
        ) {
            prop_assume!(sd_population(&obs) > 1e-3);
            let pred: Vec<f64> = obs.iter().zip(&noise).map(|(o, e)| o + e).collect();
            let base = compute_metrics(&pred, &obs).unwrap();
            let t = |v: &[f64]| v.iter().map(|x| scale * x + shift).collect::<Vec<_>>();
            let m = compute_metrics(&t(&pred), &t(&obs)).unwrap();
            prop_assert!((m.r - base.r).abs() < 1e-9);
            prop_assert!((m.rmse - scale * base.rmse).abs() <= 1e-9 * (1.0 + scale * base.rmse));
            prop_assert!(m.pp <= 1.0 && m.rmse >= 0.0 && m.r.abs() <= 1.0);
        }
    }
}
