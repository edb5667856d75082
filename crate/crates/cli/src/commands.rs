//! The four subcommands. Each one resolves its config (file values, then flag
//! overrides, then defaults), validates it, writes the resolved config to
//! `<out>/<command>.resolved.toml` and only then does its work.
//!
//! Random streams: for a seed `s`, simulation draws from stream 0, training
//! chain `c` (0-based) from stream `1 + c`, and forecasting from stream 1000.

use std::path::{Path, PathBuf};

use mbsts::io::{export_draws_csv, format_float, load_draws, read_csv, save_draws, write_csv, Table};
use mbsts::reporting::{component_decomposition, emit_plots, error_metrics, inclusion_probabilities, parameter_estimates};
use mbsts::statespace::ModelSpec;
use mbsts::trainer::{train as run_chain, McmcDraws, PriorConfig, TrainOptions};
use mbsts::{forecast as run_forecast, simulate_dataset, RngStream, StateSpaceSystem};
use nalgebra::DMatrix;

use crate::config::{read_pii_file, LoadedConfig, Pii, RunConfig, resolved_name};
use crate::error::CliError;

pub const SIMULATE_STREAM: u64 = 0;
pub const TRAIN_STREAM: u64 = 1;
pub const FORECAST_STREAM: u64 = 1000;

/// Flag values that override the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub steps: Option<usize>,
    pub train_rows: Option<usize>,
    pub threshold: Option<f64>,
    pub chains: Option<usize>,
    pub no_states: bool,
    pub data: Option<PathBuf>,
    pub draws: Option<PathBuf>,
    pub newdata: Option<PathBuf>,
    pub truth: Option<PathBuf>,
}

fn absolute(path: &Path) -> Result<PathBuf, CliError> {
    std::fs::canonicalize(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_resolved(out: &Path, command: &str, cfg: &RunConfig) -> Result<String, CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let text = cfg.to_toml();
    std::fs::write(out.join(resolved_name(command)), &text)?;
    Ok(text)
}

/// Validates the model section, pointing errors at the offending series field.
fn check_model(loaded: &LoadedConfig, spec: &ModelSpec) -> Result<(), CliError> {
    match spec.validate() {
        Ok(()) => Ok(()),
        Err(mbsts::Error::Validation(msg)) => {
            // messages look like "series 2: frequency (lambda) = 4 must ..."
            let mut index = None;
            let mut keys = Vec::new();
            if let Some(rest) = msg.strip_prefix("series ") {
                let (num, tail) = rest.split_once(':').unwrap_or((rest, ""));
                index = num.trim().parse::<usize>().ok().map(|i| i - 1);
                let mut words = tail.split_whitespace();
                if let Some(field) = words.next() {
                    keys.push(field.to_string());
                }
                if let Some(alias) = words.next().and_then(|w| w.strip_prefix('(')).and_then(|w| w.strip_suffix(')')) {
                    keys.push(alias.to_string());
                }
            }
            let keys: Vec<&str> = keys.iter().map(String::as_str).collect();
            Err(loaded.invalid("model.series", index, &keys, msg))
        }
        Err(e) => Err(e.into()),
    }
}

/// Points a library validation message at the key it starts with.
fn anchor_first_word(loaded: &LoadedConfig, section: &str, e: mbsts::Error) -> CliError {
    match e {
        mbsts::Error::Validation(msg) => {
            let first = msg
                .split(|c: char| !(c.is_alphanumeric() || c == '_'))
                .next()
                .unwrap_or("")
                .to_lowercase();
            loaded.invalid(section, None, &[first.as_str()], msg)
        }
        other => other.into(),
    }
}

/// Generates a dataset: `data.csv` (targets then stacked predictors),
/// `truth.csv` (component paths) and `coefficients.csv` (stacked true
/// coefficients).
pub fn simulate(loaded: &LoadedConfig, ov: &Overrides, out: &Path) -> Result<(), CliError> {
    let mut cfg = loaded.config.clone();
    if let Some(seed) = ov.seed {
        cfg.simulate.seed = seed;
    }
    let spec = cfg.model_spec();
    check_model(loaded, &spec)?;
    let sim_cfg = cfg.sim_config().map_err(|msg| {
        let key = msg.split(':').next().unwrap_or("").to_string();
        loaded.invalid("simulate", None, &[key.as_str()], msg)
    })?;
    sim_cfg.validate().map_err(|e| anchor_first_word(loaded, "simulate", e))?;
    write_resolved(out, "simulate", &cfg)?;

    let sim = simulate_dataset(&sim_cfg, &mut RngStream::new(cfg.simulate.seed, SIMULATE_STREAM))?;
    let m = sim.y.ncols();
    let k_total = sim.x.ncols();
    let mut headers: Vec<String> = (1..=m).map(|i| format!("y{i}")).collect();
    headers.extend((1..=k_total).map(|j| format!("x{j}")));
    let mut data = DMatrix::zeros(sim.y.nrows(), m + k_total);
    data.columns_mut(0, m).copy_from(&sim.y);
    data.columns_mut(m, k_total).copy_from(&sim.x);
    write_csv(&out.join("data.csv"), &headers, &data)?;

    let t = &sim.truth;
    let parts = [
        ("trend", &t.trend),
        ("slope", &t.slope),
        ("seasonal", &t.seasonal),
        ("cycle", &t.cycle),
        ("cycle_star", &t.cycle_star),
        ("regression", &t.regression),
        ("error", &t.error),
    ];
    let mut truth_headers = Vec::new();
    let mut truth = DMatrix::zeros(sim.y.nrows(), parts.len() * m);
    for (p, (name, values)) in parts.iter().enumerate() {
        for i in 0..m {
            truth_headers.push(format!("{name}_{}", i + 1));
            truth.column_mut(p * m + i).copy_from(&values.column(i));
        }
    }
    write_csv(&out.join("truth.csv"), &truth_headers, &truth)?;

    let stacked = DMatrix::from_column_slice(sim_cfg.coefficients.len(), 1, sim_cfg.coefficients.as_slice());
    write_csv(&out.join("coefficients.csv"), &["beta".to_string()], &stacked)?;
    println!("simulated {} rows x {} series, {} predictor columns", sim.y.nrows(), m, k_total);
    Ok(())
}

/// Resolves spike probabilities to one value per predictor.
fn resolve_pii(loaded: &LoadedConfig, cfg: &RunConfig, k_total: usize) -> Result<Vec<f64>, CliError> {
    let pii = match (&cfg.prior.pii_file, &cfg.prior.pii) {
        (Some(path), _) => read_pii_file(path)?,
        (None, Pii::All(p)) => vec![*p; k_total],
        (None, Pii::Each(v)) => v.clone(),
    };
    if let Some((j, p)) = pii.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
        return Err(loaded.invalid("prior", None, &["pii"], format!("pii entry {} = {p} must lie in [0, 1]", j + 1)));
    }
    if pii.len() != k_total {
        let key = if cfg.prior.pii_file.is_some() { "pii_file" } else { "pii" };
        return Err(loaded.invalid(
            "prior",
            None,
            &[key],
            format!("{} spike probabilities for {k_total} predictors", pii.len()),
        ));
    }
    Ok(pii)
}

/// Everything `train` needs once the config and data are resolved.
pub struct TrainPlan {
    pub config: RunConfig,
    pub y: DMatrix<f64>,
    pub x: DMatrix<f64>,
    pub prior: PriorConfig,
    pub names: Vec<String>,
    pub holdout: Option<Table>,
}

pub fn plan_train(loaded: &LoadedConfig, ov: &Overrides) -> Result<TrainPlan, CliError> {
    let mut cfg = loaded.config.clone();
    let tr = &mut cfg.train;
    if let Some(seed) = ov.seed {
        tr.seed = seed;
    }
    if let Some(rows) = ov.train_rows {
        tr.train_rows = Some(rows);
    }
    if let Some(chains) = ov.chains {
        tr.chains = chains;
    }
    if let Some(t) = ov.threshold {
        tr.threshold = t;
    }
    if ov.no_states {
        tr.keep_states = false;
    }
    if let Some(d) = &ov.data {
        tr.data = Some(d.clone());
    }

    let spec = cfg.model_spec();
    check_model(loaded, &spec)?;
    if cfg.train.chains == 0 {
        return Err(loaded.invalid("train", None, &["chains"], "chains must be at least 1"));
    }
    if !(0.0..=1.0).contains(&cfg.train.threshold) {
        return Err(loaded.invalid("train", None, &["threshold"], "threshold must lie in [0, 1]"));
    }
    let opts = TrainOptions { mc: cfg.train.mc, burn: cfg.train.burn, ..Default::default() };
    opts.validate().map_err(|e| loaded.invalid("train", None, &["burn", "mc"], e.to_string()))?;

    let data_path = cfg.train.data.clone().ok_or_else(|| {
        CliError::Validation("no dataset given: pass --data or set data in [train]".into())
    })?;
    let data_path = absolute(&data_path)?;
    cfg.train.data = Some(data_path.clone());
    let table = read_csv(&data_path)?;

    let m = spec.m();
    if table.data.ncols() <= m {
        return Err(CliError::Validation(format!(
            "{}: {} columns, but {m} target columns plus at least one predictor are needed",
            data_path.display(),
            table.data.ncols()
        )));
    }
    let k_total = table.data.ncols() - m;
    let ki = cfg.ki(k_total).map_err(|msg| loaded.invalid("prior", None, &["ki"], msg))?;
    if ki.last() != Some(&k_total) {
        return Err(loaded.invalid(
            "prior",
            None,
            &["ki"],
            format!("ki = {ki:?} does not end at the {k_total} predictor columns of {}", data_path.display()),
        ));
    }
    let pii = resolve_pii(loaded, &cfg, k_total)?;
    let prior = cfg
        .prior_config(ki.clone(), pii.clone())
        .map_err(|msg| loaded.invalid("prior", None, &["sigma_y"], msg))?;
    prior.validate(m).map_err(|e| anchor_first_word(loaded, "prior", e))?;

    let n = table.data.nrows();
    let rows = cfg.train.train_rows.unwrap_or(n);
    if rows == 0 || rows > n {
        return Err(loaded.invalid(
            "train",
            None,
            &["train_rows"],
            format!("train_rows = {rows} must lie in 1..={n} (rows in the dataset)"),
        ));
    }
    cfg.train.train_rows = Some(rows);
    cfg.prior.ki = Some(ki);
    cfg.prior.pii = Pii::Each(pii);
    cfg.prior.pii_file = None;
    cfg.prior.v0 = Some(cfg.v0());

    let y = table.data.view((0, 0), (rows, m)).into_owned();
    let x = table.data.view((0, m), (rows, k_total)).into_owned();
    let names = table.headers[m..].to_vec();
    let holdout = (rows < n).then(|| Table {
        headers: table.headers.clone(),
        data: table.data.rows(rows, n - rows).into_owned(),
    });
    Ok(TrainPlan { config: cfg, y, x, prior, names, holdout })
}

/// Output directory of chain `c`: `out` itself for a single chain,
/// `out/chain<c+1>` otherwise.
pub fn chain_dir(out: &Path, chains: usize, c: usize) -> PathBuf {
    if chains == 1 {
        out.to_path_buf()
    } else {
        out.join(format!("chain{}", c + 1))
    }
}

/// Trains one or more chains and writes, per chain, `draws.bin` plus the
/// summaries of [`write_summaries`]. Rows after `train_rows` go to
/// `holdout.csv`.
pub fn train(loaded: &LoadedConfig, ov: &Overrides, out: &Path) -> Result<Vec<McmcDraws>, CliError> {
    let plan = plan_train(loaded, ov)?;
    let cfg = &plan.config;
    let echo = write_resolved(out, "train", cfg)?;
    if let Some(h) = &plan.holdout {
        write_csv(&out.join("holdout.csv"), &h.headers, &h.data)?;
    }

    let spec = cfg.model_spec();
    let prior = &plan.prior;
    let opts = TrainOptions {
        mc: cfg.train.mc,
        burn: cfg.train.burn,
        keep_states: cfg.train.keep_states,
        ..Default::default()
    };
    let chains = cfg.train.chains;
    let results: Vec<mbsts::Result<McmcDraws>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..chains)
            .map(|c| {
                let (spec, opts, y, x) = (&spec, &opts, &plan.y, &plan.x);
                s.spawn(move || {
                    let mut rng = RngStream::new(cfg.train.seed, TRAIN_STREAM + c as u64);
                    run_chain(y, x, spec, prior, opts, &mut rng)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("training thread panicked")).collect()
    });

    let mut all = Vec::with_capacity(chains);
    for (c, result) in results.into_iter().enumerate() {
        let draws = result?;
        let dir = chain_dir(out, chains, c);
        std::fs::create_dir_all(&dir)?;
        save_draws(&dir.join("draws.bin"), &draws, &echo)?;
        let selected = write_summaries(&dir, &draws, cfg.train.threshold, &plan.names)?;
        println!(
            "chain {}: {} retained draws, selected predictors {:?} at threshold {}",
            c + 1,
            draws.n_keep(),
            selected,
            cfg.train.threshold
        );
        all.push(draws);
    }
    Ok(all)
}

/// Writes `inclusion.csv`, `estimates.csv`, `components.csv` (long form,
/// when states were kept) and plots under `plots/`. Returns the selected 1-based indices.
pub fn write_summaries(dir: &Path, draws: &McmcDraws, threshold: f64, names: &[String]) -> Result<Vec<usize>, CliError> {
    let report = inclusion_probabilities(draws, threshold, names)?;
    let mut lines = String::from("index,name,series,count,probability,sign,selected\n");
    for (j, e) in report.entries.iter().enumerate() {
        lines.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            j + 1,
            e.name,
            e.series,
            e.count,
            format_float(e.probability),
            e.sign,
            u8::from(e.selected)
        ));
    }
    std::fs::write(dir.join("inclusion.csv"), lines)?;

    let est = parameter_estimates(draws, threshold)?;
    let mut lines = String::from("index,name,mean,sd\n");
    for ((j, mean), sd) in est.index.iter().zip(&est.mean).zip(&est.sd) {
        lines.push_str(&format!("{j},{},{},{}\n", report.entries[j - 1].name, format_float(*mean), format_float(*sd)));
    }
    std::fs::write(dir.join("estimates.csv"), lines)?;

    let paths = component_decomposition(draws, &draws.spec)?;
    if !paths.is_empty() {
        let mut lines = String::from("t,series,component,value\n");
        for p in &paths {
            for (t, v) in p.values.iter().enumerate() {
                lines.push_str(&format!("{},{},{},{}\n", t + 1, p.series + 1, p.component.name(), format_float(*v)));
            }
        }
        std::fs::write(dir.join("components.csv"), lines)?;
    }
    emit_plots(&report, &paths, Some(&draws.y_train), &dir.join("plots"))?;
    Ok(report.selected_indices())
}

/// Predictor columns of `table`: either exactly `k` columns or a dataset
/// with `m` leading target columns.
fn predictor_block(table: &Table, m: usize, k: usize, what: &Path) -> Result<DMatrix<f64>, CliError> {
    match table.data.ncols() {
        c if c == k => Ok(table.data.clone()),
        c if c == m + k => Ok(table.data.columns(m, k).into_owned()),
        c => Err(CliError::Validation(format!(
            "{}: {c} columns; expected {k} predictors or {} dataset columns",
            what.display(),
            m + k
        ))),
    }
}

pub struct ForecastOutputs {
    pub pred_mean: DMatrix<f64>,
    pub error_ratio: Option<DMatrix<f64>>,
}

/// Writes `pred_mean.csv`, `pred_distribution.csv` (long form) and, with a
/// truth file, `abs_error.csv` and `error_ratio.csv`.
pub fn forecast(loaded: &LoadedConfig, ov: &Overrides, out: &Path) -> Result<ForecastOutputs, CliError> {
    let mut cfg = loaded.config.clone();
    let fc = &mut cfg.forecast;
    if let Some(seed) = ov.seed {
        fc.seed = seed;
    }
    if let Some(steps) = ov.steps {
        fc.steps = steps;
    }
    for (slot, flag) in [(&mut fc.draws, &ov.draws), (&mut fc.newdata, &ov.newdata), (&mut fc.truth, &ov.truth)] {
        if let Some(p) = flag {
            *slot = Some(p.clone());
        }
    }
    let draws_path = absolute(
        &fc.draws.clone().ok_or_else(|| CliError::Validation("no draw file given: pass --draws".into()))?,
    )?;
    fc.draws = Some(draws_path.clone());
    let newdata_path = absolute(
        &fc.newdata.clone().ok_or_else(|| CliError::Validation("no predictors given: pass --newdata".into()))?,
    )?;
    fc.newdata = Some(newdata_path.clone());
    if let Some(t) = fc.truth.clone() {
        fc.truth = Some(absolute(&t)?);
    }
    let steps = fc.steps;
    let seed = fc.seed;
    let truth_path = fc.truth.clone();

    let (draws, _) = load_draws(&draws_path)?;
    let m = draws.mtrain;
    let newdata = predictor_block(&read_csv(&newdata_path)?, m, draws.k(), &newdata_path)?;
    let truth = match &truth_path {
        Some(p) => {
            let t = read_csv(p)?;
            if t.data.ncols() != m && t.data.ncols() != m + draws.k() {
                return Err(CliError::Validation(format!(
                    "{}: {} columns; expected {m} targets or {} dataset columns",
                    p.display(),
                    t.data.ncols(),
                    m + draws.k()
                )));
            }
            if t.data.nrows() < steps {
                return Err(CliError::Validation(format!(
                    "{}: {} rows, but {steps} forecast steps need as many truth rows",
                    p.display(),
                    t.data.nrows()
                )));
            }
            Some(t.data.view((0, 0), (steps, m)).into_owned())
        }
        None => None,
    };
    let sys = StateSpaceSystem::with_defaults(&draws.spec)?;
    // check shapes before anything is written
    if newdata.nrows() < steps {
        return Err(CliError::Validation(format!(
            "{steps} forecast steps need at least {steps} rows of new predictors, got {}",
            newdata.nrows()
        )));
    }
    write_resolved(out, "forecast", &cfg)?;

    let result = run_forecast(&draws, &sys, &newdata, steps, &mut RngStream::new(seed, FORECAST_STREAM))?;
    let headers: Vec<String> = (1..=m).map(|i| format!("y{i}")).collect();
    write_csv(&out.join("pred_mean.csv"), &headers, &result.pred_mean)?;
    let long = DMatrix::from_fn(result.pred_distribution.len() * steps * m, 4, |r, c| {
        let (d, rest) = (r / (steps * m), r % (steps * m));
        let (s, i) = (rest / m, rest % m);
        match c {
            0 => (d + 1) as f64,
            1 => (s + 1) as f64,
            2 => (i + 1) as f64,
            _ => result.pred_distribution[d][(s, i)],
        }
    });
    write_csv(
        &out.join("pred_distribution.csv"),
        &["draw".into(), "step".into(), "series".into(), "value".into()],
        &long,
    )?;

    let mut error_ratio = None;
    if let Some(truth) = truth {
        let metrics = error_metrics(&result.pred_mean, &truth)?;
        write_csv(&out.join("abs_error.csv"), &headers, &metrics.absolute)?;
        write_csv(&out.join("error_ratio.csv"), &headers, &metrics.ratio)?;
        for (s, i) in &metrics.flagged {
            eprintln!("warning: true value of y{} at step {} is zero; its error ratio is undefined", i + 1, s + 1);
        }
        error_ratio = Some(metrics.ratio);
    }
    println!("forecast {steps} steps from {} draws", draws.n_keep());
    Ok(ForecastOutputs { pred_mean: result.pred_mean, error_ratio })
}

/// Re-derives the training summaries from a draw file and exports every
/// draw array as CSV under `draws_csv/`.
pub fn report(loaded: &LoadedConfig, ov: &Overrides, out: &Path) -> Result<(), CliError> {
    let mut cfg = loaded.config.clone();
    if let Some(t) = ov.threshold {
        cfg.train.threshold = t;
    }
    if !(0.0..=1.0).contains(&cfg.train.threshold) {
        return Err(loaded.invalid("train", None, &["threshold"], "threshold must lie in [0, 1]"));
    }
    let draws_path = ov
        .draws
        .clone()
        .or_else(|| cfg.forecast.draws.clone())
        .ok_or_else(|| CliError::Validation("no draw file given: pass --draws".into()))?;
    let draws_path = absolute(&draws_path)?;
    cfg.forecast.draws = Some(draws_path.clone());
    let (draws, header) = load_draws(&draws_path)?;
    write_resolved(out, "report", &cfg)?;

    let names = predictor_names(&header.config, draws.mtrain, draws.k());
    let selected = write_summaries(out, &draws, cfg.train.threshold, &names)?;
    export_draws_csv(&out.join("draws_csv"), &draws)?;
    println!("selected predictors {selected:?} at threshold {}", cfg.train.threshold);
    Ok(())
}

/// Predictor names from the header of the training dataset named in a
/// config echo, when that file is still readable; empty otherwise.
fn predictor_names(echo: &str, m: usize, k: usize) -> Vec<String> {
    let Ok(cfg) = toml::from_str::<RunConfig>(echo) else {
        return Vec::new();
    };
    let Some(path) = cfg.train.data else {
        return Vec::new();
    };
    let Ok(mut reader) = csv::Reader::from_path(path) else {
        return Vec::new();
    };
    match reader.headers() {
        Ok(h) if h.len() == m + k => h.iter().skip(m).map(str::to_string).collect(),
        _ => Vec::new(),
    }
}
