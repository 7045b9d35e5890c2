//! End-to-end runs: endpoint matrix, framing, scaling, ensemble training,
//! batch forecasts and walk-forward validation.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::emd::{eemd, emd, SiftConfig};
use crate::error::{Error, Result};
use crate::ewt::{ewt_decompose, EwtConfig};
use crate::framing::{frame, last_window, split, SplitSpec, SupervisedSet, Window, YearRange};
use crate::lstm::{
    load_ensemble, retrain_ensemble, save_ensemble, train_ensemble, Ensemble, LstmModel, RunSummary, TrainConfig,
};
use crate::modes::{mode_sd_profile, ModeMatrix, SdProfile};
use crate::moving_front::{build_endpoint_matrix, extend_endpoint_matrix, DecomposerConfig, EndpointMatrix};
use crate::series::{compute_metrics, load_csv, Metrics, Scaler, TimeSeries};

/// Walk-forward retraining options.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct WfvConfig {
    /// Retrain every ensemble member each year instead of the first one only.
    pub ensemble: bool,
    /// Re-initialize from fresh seeded weights each year instead of
    /// continuing from the previous year's weights.
    pub cold_start: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub data_path: Option<PathBuf>,
    /// First front year; defaults to the 31st year of the series.
    pub warmup_year: Option<i32>,
    pub k: usize,
    pub lag: usize,
    pub decomposer: DecomposerConfig,
    pub split: SplitSpec,
    pub train: TrainConfig,
    pub wfv: WfvConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            data_path: None,
            warmup_year: None,
            k: 9,
            lag: 4,
            decomposer: DecomposerConfig::default(),
            split: SplitSpec {
                train: YearRange { first: 1871, last: 1980 },
                test: YearRange { first: 1981, last: 1999 },
                forecast: Some(YearRange { first: 2000, last: 2022 }),
            },
            train: TrainConfig::default(),
            wfv: WfvConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.lag == 0 {
            return Err(Error::Config("lag must be at least 1".into()));
        }
        if let DecomposerConfig::Ewt { gamma, .. } = self.decomposer {
            if !(gamma > 0.0 && gamma < 1.0) {
                return Err(Error::Config(format!("gamma {gamma} must lie in (0, 1)")));
            }
        }
        self.split.validate()?;
        self.train.validate()
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn warmup_for(&self, ts: &TimeSeries) -> i32 {
        self.warmup_year
            .unwrap_or(ts.start_year() + crate::moving_front::DEFAULT_WARMUP_SAMPLES as i32 - 1)
    }

    pub fn load_series(&self) -> Result<TimeSeries> {
        let path = self
            .data_path
            .as_ref()
            .ok_or_else(|| Error::Config("no data path configured".into()))?;
        load_csv(path)
    }
}

/// Standardization fitted on training-range endpoint rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataScalers {
    pub features: Vec<Scaler>,
    pub target: Scaler,
    /// Last year whose row contributed to the fit.
    pub fitted_through: i32,
}

impl DataScalers {
    /// Fit on the rows of `e` for years `..= through`. A constant feature
    /// column is centred but not rescaled.
    pub fn fit(e: &EndpointMatrix, through: i32) -> Result<Self> {
        let n = e.row_index(through).map(|i| i + 1).ok_or_else(|| {
            Error::Config(format!(
                "training range ends in {through}, outside the matrix {}-{}",
                e.warmup_year(),
                e.end_year()
            ))
        })?;
        let rows = &e.rows()[..n];
        let mut features = Vec::with_capacity(e.k());
        for l in 0..e.k() {
            let col: Vec<f64> = rows.iter().map(|r| r[l]).collect();
            features.push(match Scaler::fit(&col) {
                Ok(s) => s,
                Err(Error::ZeroSd(_)) => {
                    log::warn!("feature column {} is constant on the training rows", e.labels()[l]);
                    Scaler {
                        mean: col[0],
                        sd: 1.0,
                    }
                }
                Err(err) => return Err(err),
            });
        }
        let target = Scaler::fit(&e.targets()[..n])?;
        Ok(Self {
            features,
            target,
            fitted_through: through,
        })
    }

    pub fn scale_window(&self, w: &Window) -> Window {
        w.iter()
            .map(|row| row.iter().zip(&self.features).map(|(v, s)| s.apply_one(*v)).collect())
            .collect()
    }

    pub fn scale_set(&self, s: &SupervisedSet) -> SupervisedSet {
        SupervisedSet {
            lag: s.lag,
            k: s.k,
            inputs: s.inputs.iter().map(|w| self.scale_window(w)).collect(),
            targets: self.target.apply(&s.targets),
            target_years: s.target_years.clone(),
        }
    }
}

/// Per-year predictions of one phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseResult {
    pub phase: String,
    pub years: Vec<i32>,
    pub observed: Vec<f64>,
    pub predicted: Vec<f64>,
    pub metrics: Option<Metrics>,
    pub seconds: f64,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl PhaseResult {
    fn new(phase: &str, years: Vec<i32>, observed: Vec<f64>, predicted: Vec<f64>, started: Instant) -> Result<Self> {
        let mut notes = Vec::new();
        let metrics = if years.is_empty() {
            None
        } else {
            match compute_metrics(&predicted, &observed) {
                Ok(m) => Some(m),
                Err(Error::ZeroSd(msg)) if observed.len() == 1 => {
                    notes.push(format!("no metrics for a single year: {msg}"));
                    None
                }
                Err(e) => return Err(e),
            }
        };
        Ok(Self {
            phase: phase.into(),
            years,
            observed,
            predicted,
            metrics,
            seconds: started.elapsed().as_secs_f64(),
            notes,
        })
    }

    pub fn pp(&self) -> Option<f64> {
        self.metrics.map(|m| m.pp)
    }

    /// `year,observed,predicted`
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["year", "observed", "predicted"])?;
        for i in 0..self.years.len() {
            wr.write_record(&[
                self.years[i].to_string(),
                self.observed[i].to_string(),
                self.predicted[i].to_string(),
            ])?;
        }
        wr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

/// Read a `year,observed,predicted` file back.
pub fn read_predictions_csv(path: impl AsRef<Path>) -> Result<(Vec<i32>, Vec<f64>, Vec<f64>)> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(f);
    let (mut y, mut o, mut p) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |c: usize| -> Result<f64> {
            rec.get(c)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::DataRow {
                    row: i + 1,
                    message: format!("bad cell in column {c}"),
                })
        };
        y.push(parse(0)? as i32);
        o.push(parse(1)?);
        p.push(parse(2)?);
    }
    Ok((y, o, p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config_hash: String,
    pub config: PipelineConfig,
    /// Train pairs actually available after warmup and lag truncation.
    pub effective_train: Option<YearRange>,
    pub seeds: Vec<u64>,
    pub runs: Vec<RunSummary>,
    pub phases: Vec<PhaseResult>,
    pub notes: Vec<String>,
}

impl RunReport {
    pub fn new(cfg: &PipelineConfig) -> Self {
        Self {
            config_hash: cfg.hash(),
            config: cfg.clone(),
            effective_train: None,
            seeds: Vec::new(),
            runs: Vec::new(),
            phases: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn phase(&self, name: &str) -> Option<&PhaseResult> {
        self.phases.iter().find(|p| p.phase == name)
    }

    /// `phase,n,rmse,pp,nrmse,mape,r,seconds`
    pub fn write_metrics_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<metrics writer>", e);
        writeln!(w, "phase,{},seconds", Metrics::CSV_HEADER).map_err(io)?;
        for p in &self.phases {
            if let Some(m) = p.metrics {
                writeln!(w, "{},{},{}", p.phase, m.to_csv_row(), p.seconds).map_err(io)?;
            }
        }
        Ok(())
    }

    /// Write the JSON report, metrics CSV and one prediction CSV per phase
    /// into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json = serde_json::to_string_pretty(self)?;
        let p = dir.join("report.json");
        std::fs::write(&p, json).map_err(|e| Error::io(&p, e))?;
        let p = dir.join("metrics.csv");
        let f = std::fs::File::create(&p).map_err(|e| Error::io(&p, e))?;
        self.write_metrics_csv(std::io::BufWriter::new(f))?;
        for ph in &self.phases {
            ph.save_csv(dir.join(format!("predictions_{}.csv", ph.phase)))?;
        }
        Ok(())
    }
}

/// Series, endpoint matrix, framed pairs and scalers for one config.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub ts: TimeSeries,
    pub matrix: EndpointMatrix,
    /// Unscaled pairs for every target year the matrix supports.
    pub framed: SupervisedSet,
    pub scalers: DataScalers,
}

pub fn prepare(cfg: &PipelineConfig, ts: &TimeSeries) -> Result<Prepared> {
    cfg.validate()?;
    let warmup = cfg.warmup_for(ts);
    let matrix = build_endpoint_matrix(ts, warmup, cfg.k, &cfg.decomposer)?;
    prepare_with_matrix(cfg, ts, matrix)
}

pub fn prepare_with_matrix(cfg: &PipelineConfig, ts: &TimeSeries, matrix: EndpointMatrix) -> Result<Prepared> {
    cfg.validate()?;
    if matrix.k() != cfg.k {
        return Err(Error::Config(format!(
            "endpoint matrix has k={}, config asks for k={}",
            matrix.k(),
            cfg.k
        )));
    }
    let framed = frame(&matrix, cfg.lag)?;
    let scalers = DataScalers::fit(&matrix, cfg.split.train.last)?;
    Ok(Prepared {
        ts: ts.clone(),
        matrix,
        framed,
        scalers,
    })
}

fn holdout(cfg: &TrainConfig, set: &SupervisedSet) -> (SupervisedSet, SupervisedSet) {
    set.holdout_tail(cfg.validation_fraction)
}

fn predict_scaled(ens: &Ensemble, scalers: &DataScalers, windows: &[Window]) -> Result<Vec<f64>> {
    let scaled: Vec<Window> = windows.iter().map(|w| scalers.scale_window(w)).collect();
    Ok(scalers.target.invert(&ens.predict(&scaled)?))
}

/// Train on the train range and evaluate on train and test.
pub fn run_train_test(cfg: &PipelineConfig, prep: &Prepared) -> Result<(RunReport, Ensemble)> {
    let parts = split(&prep.framed, &cfg.split)?;
    let mut report = RunReport::new(cfg);
    report.effective_train = Some(YearRange {
        first: parts.train.first_year().unwrap(),
        last: parts.train.last_year().unwrap(),
    });
    let started = Instant::now();
    let scaled = prep.scalers.scale_set(&parts.train);
    let (tr, va) = holdout(&cfg.train, &scaled);
    let ens = train_ensemble(&cfg.train, &tr, &va)?;
    report.seeds = ens.seeds.clone();
    report.runs = ens.runs.clone();
    let train_pred = predict_scaled(&ens, &prep.scalers, &parts.train.inputs)?;
    let mut ph = PhaseResult::new(
        "train",
        parts.train.target_years.clone(),
        parts.train.targets.clone(),
        train_pred,
        started,
    )?;
    ph.notes.push(format!(
        "{} ensemble members; last {} pairs held out for early stopping",
        ens.len(),
        va.len()
    ));
    report.phases.push(ph);
    let t = Instant::now();
    let test_pred = predict_scaled(&ens, &prep.scalers, &parts.test.inputs)?;
    report.phases.push(PhaseResult::new(
        "test",
        parts.test.target_years.clone(),
        parts.test.targets.clone(),
        test_pred,
        t,
    )?);
    Ok((report, ens))
}

/// Ensemble trained on train + test with the train-range scalers.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalModel {
    pub ensemble: Ensemble,
    pub scalers: DataScalers,
    pub lag: usize,
    pub k: usize,
    pub trained_through: i32,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FinalMeta {
    format_version: u32,
    scalers: DataScalers,
    lag: usize,
    k: usize,
    trained_through: i32,
    config_hash: String,
}

impl FinalModel {
    pub fn predict_windows(&self, windows: &[Window]) -> Result<Vec<f64>> {
        predict_scaled(&self.ensemble, &self.scalers, windows)
    }

    /// Writes the ensemble weights to `path` and scalers and framing
    /// metadata to `<path>.json`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        save_ensemble(&self.ensemble, path)?;
        let meta = FinalMeta {
            format_version: 1,
            scalers: self.scalers.clone(),
            lag: self.lag,
            k: self.k,
            trained_through: self.trained_through,
            config_hash: self.config_hash.clone(),
        };
        let mp = meta_path(path);
        std::fs::write(&mp, serde_json::to_string_pretty(&meta)?).map_err(|e| Error::io(&mp, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let ensemble = load_ensemble(path)?;
        let mp = meta_path(path);
        let text = std::fs::read_to_string(&mp).map_err(|e| Error::io(&mp, e))?;
        let meta: FinalMeta = serde_json::from_str(&text)?;
        if meta.format_version != 1 {
            return Err(Error::ModelFormat(format!(
                "model metadata version {} is not supported",
                meta.format_version
            )));
        }
        if ensemble.members[0].input_dim() != meta.k || meta.scalers.features.len() != meta.k {
            return Err(Error::ModelFormat("model and metadata disagree on k".into()));
        }
        Ok(Self {
            ensemble,
            scalers: meta.scalers,
            lag: meta.lag,
            k: meta.k,
            trained_through: meta.trained_through,
            config_hash: meta.config_hash,
        })
    }
}

fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Retrain on every pair with target year in the train or test range.
pub fn finalize_model(cfg: &PipelineConfig, prep: &Prepared) -> Result<FinalModel> {
    let range = cfg.split.final_train();
    let pairs = prep.framed.select(range);
    if pairs.is_empty() {
        return Err(Error::Config(format!("no pairs in final training range {range}")));
    }
    let scaled = prep.scalers.scale_set(&pairs);
    let (tr, va) = holdout(&cfg.train, &scaled);
    let ensemble = train_ensemble(&cfg.train, &tr, &va)?;
    Ok(FinalModel {
        ensemble,
        scalers: prep.scalers.clone(),
        lag: cfg.lag,
        k: cfg.k,
        trained_through: range.last,
        config_hash: cfg.hash(),
    })
}

fn observed_in(e: &EndpointMatrix, years: &[i32]) -> Result<Vec<f64>> {
    years
        .iter()
        .map(|&y| {
            e.row_index(y).map(|i| e.targets()[i]).ok_or_else(|| {
                Error::Config(format!("no observation for {y} (matrix ends {})", e.end_year()))
            })
        })
        .collect()
}

/// All windows of `range` predicted in one pass. These are in-sample
/// forecasts: every window's rows exist before the pass starts.
pub fn forecast_batch(model: &FinalModel, e: &EndpointMatrix, range: Option<YearRange>) -> Result<PhaseResult> {
    let started = Instant::now();
    let Some(range) = range else {
        return PhaseResult::new("forecast_batch", vec![], vec![], vec![], started);
    };
    let years: Vec<i32> = range.years().collect();
    let windows = years
        .iter()
        .map(|&y| crate::framing::window_for(e, y, model.lag))
        .collect::<Result<Vec<_>>>()?;
    let observed = observed_in(e, &years)?;
    let predicted = model.predict_windows(&windows)?;
    let mut ph = PhaseResult::new("forecast_batch", years, observed, predicted, started)?;
    ph.notes.push("in-sample batch forecast from a frozen model".into());
    Ok(ph)
}

/// Year-by-year forecasts from a frozen model, each from the matrix as it
/// stood at the end of the previous year.
pub fn wfv_no_retrain(model: &FinalModel, e: &EndpointMatrix, range: Option<YearRange>) -> Result<PhaseResult> {
    let started = Instant::now();
    let Some(range) = range else {
        return PhaseResult::new("wfv_no_retrain", vec![], vec![], vec![], started);
    };
    let mut years = Vec::new();
    let mut predicted = Vec::new();
    for y in range.years() {
        let known = e.truncated_through(y - 1)?;
        let w = last_window(&known, model.lag)?;
        predicted.push(model.predict_windows(&[w])?[0]);
        years.push(y);
    }
    let observed = observed_in(e, &years)?;
    PhaseResult::new("wfv_no_retrain", years, observed, predicted, started)
}

/// Per-year walk-forward with retraining: extend the matrix through `y-1`,
/// retrain on every pair up to `y-1` with unchanged hyperparameters and
/// scalers, then forecast `y`.
pub fn wfv_retrain(cfg: &PipelineConfig, prep: &Prepared, model: &FinalModel, range: Option<YearRange>) -> Result<PhaseResult> {
    let started = Instant::now();
    let name = "wfv_retrain";
    let Some(range) = range else {
        return PhaseResult::new(name, vec![], vec![], vec![], started);
    };
    let ts = &prep.ts;
    let mut current = if cfg.wfv.ensemble {
        model.ensemble.clone()
    } else {
        model.ensemble.first_member()
    };
    let mut matrix = prep.matrix.truncated_through(range.first - 1)?;
    let mut years = Vec::new();
    let mut predicted = Vec::new();
    let mut notes = vec![format!(
        "{} model(s) per step, {}",
        current.len(),
        if cfg.wfv.cold_start { "cold start" } else { "warm start" }
    )];
    for y in range.years() {
        if matrix.end_year() < y - 1 {
            matrix = extend_endpoint_matrix(&matrix, &ts.slice(ts.start_year(), y - 1)?)?;
        }
        let pairs = frame(&matrix, cfg.lag)?.select(YearRange {
            first: cfg.split.train.first,
            last: y - 1,
        });
        let scaled = model.scalers.scale_set(&pairs);
        let (tr, va) = holdout(&cfg.train, &scaled);
        let start_from = if cfg.wfv.cold_start {
            let fresh: Vec<LstmModel> = current
                .seeds
                .iter()
                .map(|&s| {
                    LstmModel::init_uniform(cfg.k, cfg.train.hidden_dim, cfg.train.candidate_activation, cfg.train.use_bias, s)
                })
                .collect();
            Ensemble {
                members: fresh,
                ..current.clone()
            }
        } else {
            current.clone()
        };
        let next = retrain_ensemble(&cfg.train, &start_from, &tr, &va)?;
        for r in &next.runs {
            if let Some(ep) = r.diverged_at {
                notes.push(format!("{y}: seed {} diverged at epoch {ep}; prior weights kept", r.seed));
            }
        }
        current = next;
        let w = last_window(&matrix, cfg.lag)?;
        predicted.push(predict_scaled(&current, &model.scalers, &[w])?[0]);
        years.push(y);
    }
    let observed = observed_in(&prep.matrix, &years)?;
    let mut ph = PhaseResult::new(name, years, observed, predicted, started)?;
    ph.notes = notes;
    Ok(ph)
}

/// Train/test, finalize, batch forecast and both walk-forward variants.
pub fn run_full(cfg: &PipelineConfig, ts: &TimeSeries) -> Result<(RunReport, FinalModel)> {
    let prep = prepare(cfg, ts)?;
    let (mut report, _) = run_train_test(cfg, &prep)?;
    let t = Instant::now();
    let model = finalize_model(cfg, &prep)?;
    report
        .notes
        .push(format!("final model trained in {:.1}s", t.elapsed().as_secs_f64()));
    let f = cfg.split.forecast;
    report.phases.push(forecast_batch(&model, &prep.matrix, f)?);
    report.phases.push(wfv_no_retrain(&model, &prep.matrix, f)?);
    report.phases.push(wfv_retrain(cfg, &prep, &model, f)?);
    Ok((report, model))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub method: String,
    pub profile: SdProfile,
    pub flatness: f64,
}

/// Per-mode SD profiles of one-time decompositions of the whole series.
pub fn compare_decomposers(
    ts: &TimeSeries,
    k: usize,
    gamma: f64,
    sift: &SiftConfig,
    imported: &[(String, ModeMatrix)],
) -> Result<Vec<ProfileRow>> {
    let row = |method: &str, m: &ModeMatrix| {
        let profile = mode_sd_profile(m);
        ProfileRow {
            method: method.into(),
            flatness: profile.flatness(),
            profile,
        }
    };
    let mut out = vec![
        row("ewt", &ewt_decompose(ts, &EwtConfig::new(k).with_gamma(gamma))?),
        row("emd", &emd(ts, sift)?),
        row("eemd", &eemd(ts, sift)?),
    ];
    for (name, m) in imported {
        out.push(row(name, m));
    }
    Ok(out)
}

pub fn write_profiles_csv<W: Write>(rows: &[ProfileRow], mut w: W) -> Result<()> {
    let io = |e| Error::io("<profile writer>", e);
    writeln!(w, "method,mode,sd").map_err(io)?;
    for r in rows {
        for (l, sd) in r.profile.labels.iter().zip(&r.profile.mode_sd) {
            writeln!(w, "{},{},{}", r.method, l, sd).map_err(io)?;
        }
        writeln!(w, "{},signal,{}", r.method, r.profile.signal_sd).map_err(io)?;
        writeln!(w, "{},flatness,{}", r.method, r.flatness).map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::SyntheticSpec;

    fn quick_cfg() -> PipelineConfig {
        PipelineConfig {
            k: 4,
            lag: 3,
            split: SplitSpec {
                train: YearRange { first: 1900, last: 1959 },
                test: YearRange { first: 1960, last: 1969 },
                forecast: Some(YearRange { first: 1970, last: 1974 }),
            },
            train: TrainConfig {
                hidden_dim: 4,
                max_epochs: 30,
                patience: 5,
                n_runs: 2,
                learning_rate: 0.01,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    fn series() -> TimeSeries {
        SyntheticSpec {
            start_year: 1900,
            len: 75,
            ..Default::default()
        }
        .generate()
        .unwrap()
    }

    #[test]
    fn batch_equals_wfv_without_retraining() {
        let cfg = quick_cfg();
        let prep = prepare(&cfg, &series()).unwrap();
        let model = finalize_model(&cfg, &prep).unwrap();
        let b = forecast_batch(&model, &prep.matrix, cfg.split.forecast).unwrap();
        let w = wfv_no_retrain(&model, &prep.matrix, cfg.split.forecast).unwrap();
        assert_eq!(b.years, w.years);
        assert!(b.predicted.iter().zip(&w.predicted).all(|(a, c)| a.to_bits() == c.to_bits()));
        let one = wfv_no_retrain(&model, &prep.matrix, Some(YearRange { first: 1971, last: 1971 })).unwrap();
        assert_eq!(one.predicted, vec![b.predicted[1]]);
        assert!(forecast_batch(&model, &prep.matrix, None).unwrap().years.is_empty());
    }

    #[test]
    fn zero_learning_rate_retrain_matches_frozen_model() {
        let mut cfg = quick_cfg();
        let prep = prepare(&cfg, &series()).unwrap();
        let model = finalize_model(&cfg, &prep).unwrap();
        cfg.train.learning_rate = 0.0;
        cfg.wfv.ensemble = true;
        let r = wfv_retrain(&cfg, &prep, &model, cfg.split.forecast).unwrap();
        let b = forecast_batch(&model, &prep.matrix, cfg.split.forecast).unwrap();
        assert_eq!(r.predicted, b.predicted);
        assert!(wfv_retrain(&cfg, &prep, &model, None).unwrap().years.is_empty());
    }

    #[test]
    fn final_training_range_is_train_plus_test() {
        let cfg = quick_cfg();
        assert_eq!(cfg.split.final_train(), YearRange { first: 1900, last: 1969 });
        let prep = prepare(&cfg, &series()).unwrap();
        let pairs = prep.framed.select(cfg.split.final_train());
        assert_eq!(pairs.first_year(), Some(1900 + 30 + 3));
        assert_eq!(pairs.last_year(), Some(1969));
    }

    #[test]
    fn final_model_round_trip() {
        let cfg = quick_cfg();
        let prep = prepare(&cfg, &series()).unwrap();
        let model = finalize_model(&cfg, &prep).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("final.bin");
        model.save(&p).unwrap();
        let back = FinalModel::load(&p).unwrap();
        let a = forecast_batch(&model, &prep.matrix, cfg.split.forecast).unwrap();
        let b = forecast_batch(&back, &prep.matrix, cfg.split.forecast).unwrap();
        assert_eq!(a.predicted, b.predicted);
    }

    #[test]
    fn scalers_ignore_later_rows() {
        let cfg = quick_cfg();
        let ts = series();
        let prep = prepare(&cfg, &ts).unwrap();
        let mut vals = ts.values().to_vec();
        for v in &mut vals[62..] {
            *v += 500.0;
        }
        let bumped = TimeSeries::new(ts.start_year(), vals).unwrap();
        let prep2 = prepare(&cfg, &bumped).unwrap();
        assert_eq!(prep.scalers, prep2.scalers);
    }

    #[test]
    fn constant_series_surfaces_zero_sd() {
        let cfg = quick_cfg();
        let ts = TimeSeries::new(1900, vec![850.0; 75]).unwrap();
        let err = prepare(&cfg, &ts).unwrap_err();
        assert!(matches!(err, Error::ZeroSd(_)), "{err}");
    }

    #[test]
    fn config_json_round_trip_and_hash() {
        let cfg = quick_cfg();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: PipelineConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_ne!(PipelineConfig::default().hash(), cfg.hash());
        let partial: PipelineConfig = serde_json::from_str(r#"{"k": 5}"#).unwrap();
        assert_eq!(partial.k, 5);
        assert_eq!(partial.lag, 4);
    }

    #[test]
    fn compare_flags_constant_series() {
        let ts = TimeSeries::new(1900, vec![3.0; 64]).unwrap();
        let rows = compare_decomposers(&ts, 4, 0.2, &SiftConfig { ensemble_size: 4, ..Default::default() }, &[]).unwrap();
        for r in rows {
            assert!(r.profile.mode_sd.iter().all(|&s| s < 1e-9), "{}", r.method);
        }
    }
}
