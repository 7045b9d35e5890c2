mod svg;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use mfront::emd::{eemd, emd, SiftConfig};
use mfront::ewt::{ewt_decompose, EwtConfig, DEFAULT_GAMMA};
use mfront::pipeline::{
    compare_decomposers, finalize_model, forecast_batch, prepare, prepare_with_matrix, read_predictions_csv,
    run_train_test, wfv_no_retrain, wfv_retrain, write_profiles_csv, FinalModel, Prepared,
};
use mfront::{
    build_endpoint_matrix, descriptive_stats, leak_demo, DecomposerConfig, EndpointMatrix, Error, ErrorClass,
    ModeMatrix, PipelineConfig, Result, RunReport, Stats, TimeSeries, YearRange,
};

#[derive(Parser)]
#[command(name = "mfront", version, about = "Leak-free decomposition and LSTM forecasting of annual series")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Descriptive statistics of the input series.
    Stats {
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Also write a one-row CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One-time decomposition of the whole series (exploration only).
    Decompose {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the moving-front endpoint matrix.
    BuildMf {
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// CSV output; metadata goes to `<out>.meta.json`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Show how one component of a one-time decomposition moves when a
    /// single year is appended.
    LeakDemo {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long, default_value_t = 1901)]
        front_year: i32,
        /// Zero-based component index.
        #[arg(long, default_value_t = 8)]
        component: usize,
        /// Write the full report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train on the train range and evaluate on train and test.
    Train {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[command(flatten)]
        matrix: MatrixArg,
        /// Directory for report.json, metrics.csv and prediction CSVs.
        #[arg(long)]
        out: PathBuf,
    },
    /// Retrain on train + test and save the final model.
    Finalize {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[command(flatten)]
        matrix: MatrixArg,
        /// Weights file; scalers and framing go to `<model>.json`.
        #[arg(long)]
        model: PathBuf,
    },
    /// Batch forecast of a year range from a frozen model.
    Forecast {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[command(flatten)]
        matrix: MatrixArg,
        #[arg(long)]
        model: PathBuf,
        /// Years to forecast; defaults to the configured forecast range.
        #[arg(long)]
        range: Option<YearRange>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Walk-forward validation, frozen and optionally with retraining.
    Wfv {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[command(flatten)]
        matrix: MatrixArg,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        range: Option<YearRange>,
        /// Also run the yearly retraining variant.
        #[arg(long)]
        retrain: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-mode SD profiles of EWT, EMD, EEMD and imported decompositions.
    Compare {
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Externally computed components as `name=path.csv` (mode CSV layout).
        #[arg(long = "import", value_name = "NAME=PATH")]
        imports: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render an SVG line plot from a CSV written by another subcommand.
    Plot {
        #[arg(value_enum)]
        kind: PlotKind,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        title: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotKind {
    /// `year,value` series.
    Series,
    /// `year,observed,predicted` predictions.
    Predictions,
    /// Mode CSV, one panel per mode.
    Modes,
    /// Saved endpoint matrix, one panel per component plus the target.
    Endpoint,
    /// Profiles CSV from `compare`, one line per method.
    Profiles,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Ewt,
    Emd,
    Eemd,
}

/// Options mirroring the pipeline configuration. Flags override values
/// from `--config`.
#[derive(Args, Default)]
struct PipelineArgs {
    /// JSON pipeline configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `year,value` CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// First front year.
    #[arg(long)]
    warmup_year: Option<i32>,
    /// Components per front.
    #[arg(long)]
    k: Option<usize>,
    /// Window length in years.
    #[arg(long)]
    lag: Option<usize>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// EWT transition width.
    #[arg(long)]
    gamma: Option<f64>,
    /// Target years for training, as `FIRST-LAST`.
    #[arg(long)]
    train_range: Option<YearRange>,
    #[arg(long)]
    test_range: Option<YearRange>,
    #[arg(long)]
    forecast_range: Option<YearRange>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    /// Ensemble size.
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Retrain every ensemble member in walk-forward validation.
    #[arg(long)]
    wfv_ensemble: bool,
    /// Re-initialize weights at every walk-forward step.
    #[arg(long)]
    cold_start: bool,
}

#[derive(Args)]
struct MatrixArg {
    /// Reuse an endpoint matrix saved by `build-mf` instead of rebuilding it.
    #[arg(long)]
    matrix: Option<PathBuf>,
}

impl PipelineArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(d) = &self.data {
            cfg.data_path = Some(d.clone());
        }
        if self.warmup_year.is_some() {
            cfg.warmup_year = self.warmup_year;
        }
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if let Some(l) = self.lag {
            cfg.lag = l;
        }
        if let Some(m) = self.method {
            cfg.decomposer = match (m, cfg.decomposer) {
                (Method::Ewt, d @ DecomposerConfig::Ewt { .. }) => d,
                (Method::Ewt, _) => DecomposerConfig::default(),
                (Method::Emd, d @ DecomposerConfig::Emd { .. }) => d,
                (Method::Emd, _) => DecomposerConfig::Emd { sift: SiftConfig::default() },
                (Method::Eemd, d @ DecomposerConfig::Eemd { .. }) => d,
                (Method::Eemd, _) => DecomposerConfig::Eemd { sift: SiftConfig::default() },
            };
        }
        if let Some(g) = self.gamma {
            match &mut cfg.decomposer {
                DecomposerConfig::Ewt { gamma, .. } => *gamma = g,
                _ => return Err(Error::Config("--gamma applies to the ewt method only".into())),
            }
        }
        if let Some(r) = self.train_range {
            cfg.split.train = r;
        }
        if let Some(r) = self.test_range {
            cfg.split.test = r;
        }
        if self.forecast_range.is_some() {
            cfg.split.forecast = self.forecast_range;
        }
        let t = &mut cfg.train;
        if let Some(h) = self.hidden {
            t.hidden_dim = h;
        }
        if let Some(lr) = self.lr {
            t.learning_rate = lr;
        }
        if let Some(e) = self.epochs {
            t.max_epochs = e;
        }
        if let Some(p) = self.patience {
            t.patience = p;
        }
        if let Some(r) = self.runs {
            t.n_runs = r;
        }
        if let Some(s) = self.seed {
            t.seed = s;
        }
        cfg.wfv.ensemble |= self.wfv_ensemble;
        cfg.wfv.cold_start |= self.cold_start;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn prepared(cfg: &PipelineConfig, matrix: &MatrixArg) -> Result<Prepared> {
    let ts = cfg.load_series()?;
    match &matrix.matrix {
        Some(p) => {
            let m = EndpointMatrix::load(p)?;
            info!("loaded endpoint matrix {} ({} rows)", p.display(), m.n_rows());
            prepare_with_matrix(cfg, &ts, m)
        }
        None => prepare(cfg, &ts),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent().filter(|d| !d.as_os_str().is_empty()) {
        Some(dir) => std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        None => Ok(()),
    }
}

fn print_phases(report: &RunReport) {
    for p in &report.phases {
        match p.metrics {
            Some(m) => println!(
                "{:<16} n={:<4} rmse={:.3} pp={:.4} mape={:.3} r={:.4} ({:.1}s)",
                p.phase, m.n, m.rmse, m.pp, m.mape, m.r, p.seconds
            ),
            None => println!("{:<16} n={:<4} no metrics", p.phase, p.years.len()),
        }
        for n in &p.notes {
            println!("  note: {n}");
        }
    }
}

fn check_model(model: &FinalModel, cfg: &PipelineConfig) -> Result<()> {
    if model.k != cfg.k || model.lag != cfg.lag {
        return Err(Error::Config(format!(
            "model was trained with k={} lag={}, configuration has k={} lag={}",
            model.k, model.lag, cfg.k, cfg.lag
        )));
    }
    if model.config_hash != cfg.hash() {
        warn!("model config hash {} differs from the current configuration", model.config_hash);
    }
    Ok(())
}

fn frozen_report(cfg: &PipelineConfig, model: &FinalModel) -> RunReport {
    let mut report = RunReport::new(cfg);
    report.seeds = model.ensemble.seeds.clone();
    report.runs = model.ensemble.runs.clone();
    report
        .notes
        .push(format!("model trained through {} ({})", model.trained_through, model.config_hash));
    report
}

fn decompose_whole(cfg: &PipelineConfig, ts: &TimeSeries) -> Result<ModeMatrix> {
    match cfg.decomposer {
        DecomposerConfig::Ewt { gamma, extension } => ewt_decompose(
            ts,
            &EwtConfig {
                n_modes: cfg.k,
                gamma,
                extension,
            },
        ),
        DecomposerConfig::Emd { sift } => emd(ts, &sift),
        DecomposerConfig::Eemd { sift } => eemd(ts, &sift),
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Stats { pipeline, out } => {
            let ts = pipeline.resolve()?.load_series()?;
            let s = descriptive_stats(&ts);
            print!("first_year={}\nlast_year={}\n{}", ts.start_year(), ts.end_year(), s.to_kv());
            if let Some(out) = out {
                write_file(&out, &format!("{}\n{}\n", Stats::CSV_HEADER, s.to_csv_row()))?;
            }
        }
        Command::Decompose { pipeline, out } => {
            let cfg = pipeline.resolve()?;
            let ts = cfg.load_series()?;
            let m = decompose_whole(&cfg, &ts)?;
            create_parent(&out)?;
            m.save_csv(&out)?;
            println!("{} components over {}-{} -> {}", m.k(), m.start_year(), m.end_year(), out.display());
        }
        Command::BuildMf { pipeline, out } => {
            let cfg = pipeline.resolve()?;
            let ts = cfg.load_series()?;
            let e = build_endpoint_matrix(&ts, cfg.warmup_for(&ts), cfg.k, &cfg.decomposer)?;
            create_parent(&out)?;
            e.save(&out)?;
            println!(
                "{} fronts {}-{}, k={}, max reconstruction error {:.2e} -> {}",
                e.n_rows(),
                e.warmup_year(),
                e.end_year(),
                e.k(),
                e.max_reconstruction_error(),
                out.display()
            );
        }
        Command::LeakDemo {
            pipeline,
            front_year,
            component,
            out,
        } => {
            let cfg = pipeline.resolve()?;
            let ts = cfg.load_series()?;
            let r = leak_demo(&ts, front_year, component, cfg.k, &cfg.decomposer)?;
            println!(
                "{} over {}-{}: {} of {} years changed, max change {:.4}",
                r.label,
                r.first_year,
                r.last_year,
                r.num_changed,
                r.changes.len(),
                r.max_change
            );
            if let Some(out) = out {
                write_file(&out, &serde_json::to_string_pretty(&r)?)?;
            }
        }
        Command::Train { pipeline, matrix, out } => {
            let cfg = pipeline.resolve()?;
            let prep = prepared(&cfg, &matrix)?;
            let (report, _) = run_train_test(&cfg, &prep)?;
            report.save(&out)?;
            print_phases(&report);
        }
        Command::Finalize { pipeline, matrix, model } => {
            let cfg = pipeline.resolve()?;
            let prep = prepared(&cfg, &matrix)?;
            let m = finalize_model(&cfg, &prep)?;
            create_parent(&model)?;
            m.save(&model)?;
            println!(
                "{} member(s) trained through {} -> {}",
                m.ensemble.len(),
                m.trained_through,
                model.display()
            );
        }
        Command::Forecast {
            pipeline,
            matrix,
            model,
            range,
            out,
        } => {
            let cfg = pipeline.resolve()?;
            let prep = prepared(&cfg, &matrix)?;
            let m = FinalModel::load(&model)?;
            check_model(&m, &cfg)?;
            let mut report = frozen_report(&cfg, &m);
            report.phases.push(forecast_batch(&m, &prep.matrix, range.or(cfg.split.forecast))?);
            report.save(&out)?;
            print_phases(&report);
        }
        Command::Wfv {
            pipeline,
            matrix,
            model,
            range,
            retrain,
            out,
        } => {
            let cfg = pipeline.resolve()?;
            let prep = prepared(&cfg, &matrix)?;
            let m = FinalModel::load(&model)?;
            check_model(&m, &cfg)?;
            let range = range.or(cfg.split.forecast);
            let mut report = frozen_report(&cfg, &m);
            report.phases.push(wfv_no_retrain(&m, &prep.matrix, range)?);
            if retrain {
                report.phases.push(wfv_retrain(&cfg, &prep, &m, range)?);
            }
            report.save(&out)?;
            print_phases(&report);
        }
        Command::Compare { pipeline, imports, out } => {
            let cfg = pipeline.resolve()?;
            let ts = cfg.load_series()?;
            let (gamma, sift) = match cfg.decomposer {
                DecomposerConfig::Ewt { gamma, .. } => (gamma, SiftConfig::default()),
                DecomposerConfig::Emd { sift } | DecomposerConfig::Eemd { sift } => (DEFAULT_GAMMA, sift),
            };
            let mut imported = Vec::new();
            for spec in &imports {
                let (name, path) = spec
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("--import `{spec}` is not NAME=PATH")))?;
                imported.push((name.to_string(), ModeMatrix::load_csv(path)?));
            }
            let rows = compare_decomposers(&ts, cfg.k, gamma, &sift, &imported)?;
            create_parent(&out)?;
            let f = std::fs::File::create(&out).map_err(|e| Error::io(&out, e))?;
            write_profiles_csv(&rows, std::io::BufWriter::new(f))?;
            for r in &rows {
                println!("{:<8} modes={:<3} flatness={:.3}", r.method, r.profile.mode_sd.len(), r.flatness);
            }
        }
        Command::Plot { kind, input, out, title } => {
            let panels = plot_panels(kind, &input, title)?;
            write_file(&out, &svg::render(&panels))?;
            println!("{} panel(s) -> {}", panels.len(), out.display());
        }
    }
    Ok(())
}

fn years_f64(first: i32, n: usize) -> Vec<f64> {
    (0..n).map(|i| (first + i as i32) as f64).collect()
}

fn plot_panels(kind: PlotKind, input: &Path, title: Option<String>) -> Result<Vec<svg::Panel>> {
    let title = title.unwrap_or_else(|| input.display().to_string());
    let panels = match kind {
        PlotKind::Series => {
            let ts = mfront::load_csv(input)?;
            vec![svg::Panel {
                title,
                lines: vec![svg::Line {
                    label: "value".into(),
                    x: years_f64(ts.start_year(), ts.len()),
                    y: ts.values().to_vec(),
                }],
            }]
        }
        PlotKind::Predictions => {
            let (years, observed, predicted) = read_predictions_csv(input)?;
            let x: Vec<f64> = years.iter().map(|&y| y as f64).collect();
            vec![svg::Panel {
                title,
                lines: vec![
                    svg::Line { label: "observed".into(), x: x.clone(), y: observed },
                    svg::Line { label: "predicted".into(), x, y: predicted },
                ],
            }]
        }
        PlotKind::Modes => {
            let m = ModeMatrix::load_csv(input)?;
            let x = years_f64(m.start_year(), m.len());
            let mut panels = vec![svg::Panel {
                title: format!("{title}: sum of components"),
                lines: vec![svg::Line { label: "sum".into(), x: x.clone(), y: m.reconstruct() }],
            }];
            for (label, mode) in m.labels().iter().zip(m.modes()) {
                panels.push(svg::Panel {
                    title: label.clone(),
                    lines: vec![svg::Line { label: label.clone(), x: x.clone(), y: mode.clone() }],
                });
            }
            panels
        }
        PlotKind::Endpoint => {
            let e = EndpointMatrix::load(input)?;
            let x = years_f64(e.warmup_year(), e.n_rows());
            let mut panels = vec![svg::Panel {
                title: format!("{title}: target"),
                lines: vec![svg::Line { label: "target".into(), x: x.clone(), y: e.targets().to_vec() }],
            }];
            for (l, label) in e.labels().iter().enumerate() {
                panels.push(svg::Panel {
                    title: label.clone(),
                    lines: vec![svg::Line {
                        label: label.clone(),
                        x: x.clone(),
                        y: e.rows().iter().map(|r| r[l]).collect(),
                    }],
                });
            }
            panels
        }
        PlotKind::Profiles => vec![svg::Panel { title, lines: read_profiles(input)? }],
    };
    Ok(panels)
}

/// Per-method mode SD lines from a `method,mode,sd` CSV, skipping the
/// summary rows.
fn read_profiles(path: &Path) -> Result<Vec<svg::Line>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines: Vec<svg::Line> = Vec::new();
    for (i, row) in text.lines().enumerate().skip(1) {
        let cells: Vec<&str> = row.split(',').collect();
        let [method, mode, sd] = cells[..] else {
            return Err(Error::DataRow {
                row: i,
                message: format!("expected 3 columns, found {}", cells.len()),
            });
        };
        if mode == "signal" || mode == "flatness" {
            continue;
        }
        let sd: f64 = sd.trim().parse().map_err(|_| Error::DataRow {
            row: i,
            message: format!("non-numeric sd `{sd}`"),
        })?;
        match lines.iter_mut().find(|l| l.label == method) {
            Some(l) => {
                l.x.push(l.x.len() as f64);
                l.y.push(sd);
            }
            None => lines.push(svg::Line { label: method.to_string(), x: vec![0.0], y: vec![sd] }),
        }
    }
    if lines.is_empty() {
        return Err(Error::Data(format!("{}: no profile rows", path.display())));
    }
    Ok(lines)
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Config => 2,
        ErrorClass::Data => 3,
        ErrorClass::Numeric => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => {
            let _ = std::io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
