use std::io::Write;

use mbsts::io::{export_draws_csv, load_draws, read_csv, save_draws, write_csv};
use mbsts::statespace::{ModelSpec, SeriesSpec};
use mbsts::trainer::{train, McmcDraws, PriorConfig, TrainOptions};
use mbsts::{simulate_dataset, Error, PredictorLaw, RngStream, SimConfig};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn trained(keep_states: bool) -> McmcDraws {
    let spec = ModelSpec::new(vec![
        SeriesSpec { trend: true, learning_rate: 0.4, long_run_slope: 0.1, seasons: 3, ..SeriesSpec::empty() },
        SeriesSpec { trend: true, damping: 0.7, frequency: 1.1, ..SeriesSpec::empty() },
    ]);
    let cfg = SimConfig {
        n: 40,
        obs_cov: DMatrix::identity(2, 2),
        spec: spec.clone(),
        component_sd: 0.3,
        coefficients: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]),
        predictors: vec![
            PredictorLaw::Normal { mean: 0.0, sd: 1.0 },
            PredictorLaw::Poisson { rate: 2.0 },
        ],
        pool: Default::default(),
    };
    let sim = simulate_dataset(&cfg, &mut RngStream::new(5, 0)).unwrap();
    let prior = PriorConfig::uniform(sim.ki(), 0.5, 5.0);
    let opts = TrainOptions { mc: 25, burn: 5, keep_states, ..Default::default() };
    train(&sim.y, &sim.x, &spec, &prior, &opts, &mut RngStream::new(5, 1)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn csv_round_trips_bit_for_bit(
        rows in 0usize..6,
        cols in 1usize..5,
        seed in any::<u64>(),
    ) {
        let mut rng = RngStream::new(seed, 0);
        let data = DMatrix::from_fn(rows, cols, |_, _| rng.normal(0.0, 1e3) * 10f64.powi((rng.uniform() * 40.0) as i32 - 20));
        let headers: Vec<String> = (0..cols).map(|j| format!("c{j}")).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(&path, &headers, &data).unwrap();
        let table = read_csv(&path).unwrap();
        prop_assert_eq!(table.headers, headers);
        prop_assert_eq!(table.data.shape(), data.shape());
        for (a, b) in table.data.iter().zip(data.iter()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

#[test]
fn csv_errors_name_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "a,b\n1,2\n3,oops\n").unwrap();
    match read_csv(&path) {
        Err(Error::Format(msg)) => {
            assert!(msg.contains("line 3"), "{msg}");
            assert!(msg.contains("'b'"), "{msg}");
        }
        other => panic!("{other:?}"),
    }
    std::fs::write(&path, "a,b\n1,2\n3\n").unwrap();
    assert!(matches!(read_csv(&path), Err(Error::Format(_))));
    assert!(matches!(read_csv(&dir.path().join("missing.csv")), Err(Error::Io(_))));
    let headers = vec!["a".to_string()];
    assert!(matches!(write_csv(&path, &headers, &DMatrix::zeros(1, 2)), Err(Error::Validation(_))));
}

#[test]
fn draws_round_trip_exactly() {
    for keep_states in [true, false] {
        let draws = trained(keep_states);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("draws.bin");
        save_draws(&path, &draws, "[train]\nmc = 25\n").unwrap();
        let (back, header) = load_draws(&path).unwrap();
        assert_eq!(back, draws);
        assert_eq!(header.config, "[train]\nmc = 25\n");
        assert_eq!(header.has_states, keep_states);
        assert_eq!((header.seed, header.stream), (5, 1));
    }
}

#[test]
fn damaged_draw_files_are_rejected() {
    let draws = trained(true);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("draws.bin");
    save_draws(&path, &draws, "").unwrap();
    let bytes = std::fs::read(&path).unwrap();

    let bad = dir.path().join("bad.bin");
    std::fs::write(&bad, &bytes[..bytes.len() - 5]).unwrap();
    assert!(matches!(load_draws(&bad), Err(Error::Format(m)) if m.contains("truncated")));

    let mut extra = bytes.clone();
    extra.extend_from_slice(&[0u8; 8]);
    std::fs::write(&bad, &extra).unwrap();
    assert!(matches!(load_draws(&bad), Err(Error::Format(m)) if m.contains("trailing")));

    let mut magic = bytes.clone();
    magic[0] = b'X';
    std::fs::write(&bad, &magic).unwrap();
    assert!(matches!(load_draws(&bad), Err(Error::Format(_))));

    let mut version = bytes.clone();
    version[8] = 99;
    std::fs::write(&bad, &version).unwrap();
    assert!(matches!(load_draws(&bad), Err(Error::Format(m)) if m.contains("version")));

    let mut header = bytes.clone();
    header[21] = b'#';
    std::fs::write(&bad, &header).unwrap();
    assert!(matches!(load_draws(&bad), Err(Error::Format(_))));

    let mut f = std::fs::File::create(&bad).unwrap();
    f.write_all(b"MBSTS").unwrap();
    drop(f);
    assert!(matches!(load_draws(&bad), Err(Error::Format(_))));
}

#[test]
fn csv_export_has_one_row_per_draw() {
    let draws = trained(true);
    let dir = tempfile::tempdir().unwrap();
    let files = export_draws_csv(dir.path(), &draws).unwrap();
    let names: Vec<String> =
        files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(names, ["ind.csv", "beta_hat.csv", "ob_sig2.csv", "st_sig2.csv", "states.csv"]);
    let beta = read_csv(&dir.path().join("beta_hat.csv")).unwrap();
    assert_eq!(beta.data, draws.beta_hat.transpose());
    let cov = read_csv(&dir.path().join("ob_sig2.csv")).unwrap();
    assert_eq!(cov.data.shape(), (draws.n_keep(), 4));
    assert_eq!(cov.data[(3, 1)], draws.ob_sig2[3][(0, 1)]);
    let states = std::fs::read_to_string(dir.path().join("states.csv")).unwrap();
    let lines = states.lines().count();
    assert_eq!(lines, 1 + draws.n_keep() * draws.ntrain * draws.signals().len());
}
