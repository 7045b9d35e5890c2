use mfront::{build_endpoint_matrix, extend_endpoint_matrix, DecomposerConfig, EndpointMatrix, Error, TimeSeries};
use proptest::prelude::*;

fn serialized(e: &EndpointMatrix) -> (Vec<u8>, String) {
    let mut csv = Vec::new();
    e.write_csv(&mut csv).unwrap();
    (csv, serde_json::to_string(&e.meta()).unwrap())
}

fn series() -> impl Strategy<Value = (TimeSeries, usize)> {
    (prop::collection::vec(-500.0f64..500.0, 40..90), 2usize..=5, 1800i32..1900)
        .prop_map(|(v, k, start)| (TimeSeries::new(start, v).unwrap(), k))
}

fn build(ts: &TimeSeries, k: usize) -> Option<EndpointMatrix> {
    match build_endpoint_matrix(ts, ts.start_year() + 30, k, &DecomposerConfig::default()) {
        Ok(e) => Some(e),
        Err(Error::ModeCountReduced { .. }) => None,
        Err(e) => panic!("{e}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn extending_by_one_year_matches_a_fresh_build((ts, k) in series()) {
        let Some(full) = build(&ts, k) else { return Ok(()) };
        let head = ts.slice(ts.start_year(), ts.end_year() - 1).unwrap();
        let short = build(&head, k).unwrap();
        let extended = extend_endpoint_matrix(&short, &ts).unwrap();
        prop_assert_eq!(serialized(&extended), serialized(&full));
    }

    #[test]
    fn rows_reconstruct_their_target((ts, k) in series()) {
        let Some(e) = build(&ts, k) else { return Ok(()) };
        for (row, &j) in e.rows().iter().zip(e.targets()) {
            let s: f64 = row.iter().sum();
            prop_assert!((s - j).abs() <= 1e-9 * j.abs().max(1.0), "{} vs {}", s, j);
        }
    }

    #[test]
    fn save_and_load_round_trip_exactly((ts, k) in series()) {
        let Some(e) = build(&ts, k) else { return Ok(()) };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("mf.csv");
        e.save(&p).unwrap();
        let back = EndpointMatrix::load(&p).unwrap();
        prop_assert_eq!(serialized(&back), serialized(&e));
        prop_assert_eq!(back.history_series().unwrap(), ts);
    }
}

#[test]
fn extension_rejects_revised_history() {
    let vals: Vec<f64> = (0..50).map(|t| (t as f64 * 0.7).sin() * 100.0 + 800.0).collect();
    let ts = TimeSeries::new(1900, vals.clone()).unwrap();
    let e = build(&ts.slice(1900, 1945).unwrap(), 3).unwrap();
    let mut revised = vals;
    revised[10] += 1.0;
    let err = extend_endpoint_matrix(&e, &TimeSeries::new(1900, revised).unwrap()).unwrap_err();
    assert!(matches!(err, Error::HistoryMismatch { year: 1910, .. }), "{err}");
}
