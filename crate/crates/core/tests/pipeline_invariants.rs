use mfront::framing::{split, YearRange};
use mfront::lstm::TrainConfig;
use mfront::pipeline::{prepare, read_predictions_csv, run_full, PipelineConfig};
use mfront::series::compute_metrics;
use mfront::synthetic::{benchmark_series, SyntheticSpec};
use mfront::{SplitSpec, TimeSeries};

fn bits(xs: &[f64]) -> Vec<u64> {
    xs.iter().map(|v| v.to_bits()).collect()
}

#[test]
fn training_frame_ignores_forecast_range_values() {
    let cfg = PipelineConfig::default();
    let ts = benchmark_series();
    let mut vals = ts.values().to_vec();
    let from = ts.index_of(2000).unwrap();
    for (i, v) in vals[from..].iter_mut().enumerate() {
        *v += if i % 2 == 0 { 250.0 } else { -180.0 };
    }
    let perturbed = TimeSeries::new(ts.start_year(), vals).unwrap();

    let a = prepare(&cfg, &ts).unwrap();
    let b = prepare(&cfg, &perturbed).unwrap();
    let seen = YearRange::new(1871, 1999).unwrap();
    let (fa, fb) = (a.framed.select(seen), b.framed.select(seen));
    assert!(!fa.is_empty());
    assert_eq!(fa.target_years, fb.target_years);
    assert_eq!(bits(&fa.targets), bits(&fb.targets));
    for (wa, wb) in fa.inputs.iter().zip(&fb.inputs) {
        for (ra, rb) in wa.iter().zip(wb) {
            assert_eq!(bits(ra), bits(rb));
        }
    }
    assert_eq!(a.scalers, b.scalers);
    // the forecast-range rows do move
    let y = a.matrix.row_for_year(2010).unwrap();
    assert_ne!(bits(y), bits(b.matrix.row_for_year(2010).unwrap()));
}

#[test]
fn frame_and_split_cover_train_and_test_without_loss() {
    let cfg = PipelineConfig::default();
    let prep = prepare(&cfg, &benchmark_series()).unwrap();
    let parts = split(&prep.framed, &cfg.split).unwrap();
    let lag = cfg.lag as i32;
    let first_target = prep.matrix.warmup_year() + lag;
    let train_years: Vec<i32> = (first_target..=1980).collect();
    let test_years: Vec<i32> = (1981..=1999).collect();
    assert_eq!(parts.train.target_years, train_years);
    assert_eq!(parts.test.target_years, test_years);
    for set in [&parts.train, &parts.test] {
        for (i, &y) in set.target_years.iter().enumerate() {
            assert_eq!(set.targets[i], prep.ts.value_at(y).unwrap());
            for (j, row) in set.inputs[i].iter().enumerate() {
                let src = y - lag + j as i32;
                assert_eq!(row.as_slice(), prep.matrix.row_for_year(src).unwrap());
            }
        }
    }
}

#[test]
fn reported_metrics_recompute_from_prediction_csvs() {
    let cfg = PipelineConfig {
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
    };
    let ts = SyntheticSpec {
        start_year: 1900,
        len: 75,
        ..Default::default()
    }
    .generate()
    .unwrap();
    let (report, _) = run_full(&cfg, &ts).unwrap();
    let dir = tempfile::tempdir().unwrap();
    report.save(dir.path()).unwrap();

    let metrics = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let mut checked = 0;
    for line in metrics.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let phase = cells[0];
        let (years, observed, predicted) =
            read_predictions_csv(dir.path().join(format!("predictions_{phase}.csv"))).unwrap();
        assert_eq!(years, report.phase(phase).unwrap().years);
        let m = compute_metrics(&predicted, &observed).unwrap();
        let stored: Vec<f64> = cells[1..7].iter().map(|c| c.parse().unwrap()).collect();
        let fresh = [m.n as f64, m.rmse, m.pp, m.nrmse, m.mape, m.r];
        for (s, f) in stored.iter().zip(fresh) {
            assert!((s - f).abs() <= 1e-12 * f.abs().max(1.0), "{phase}: {s} vs {f}");
        }
        checked += 1;
    }
    assert_eq!(checked, 5);
}
