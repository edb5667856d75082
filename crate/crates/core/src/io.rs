//! CSV matrices and persisted posterior draws.
//!
//! CSV files are comma-separated with a header row; floats are written with
//! 17 significant digits so they round-trip exactly.
//!
//! The draw file is a single self-describing binary: the magic bytes
//! `MBSTSDRW`, a little-endian `u32` format version, a `u64` header length,
//! a JSON header (dimensions, model spec, prior, seed, RNG algorithm and a
//! free-form config echo), then every array as little-endian `f64`s in
//! column-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statespace::ModelSpec;
use crate::stochastics::RNG_ALGORITHM;
use crate::trainer::{McmcDraws, PriorConfig};

const MAGIC: &[u8; 8] = b"MBSTSDRW";
const VERSION: u32 = 1;

/// Formats a float with 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// A matrix with column names, as read from or written to CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub data: DMatrix<f64>,
}

impl Table {
    /// Contiguous column range as a new matrix.
    pub fn columns(&self, start: usize, len: usize) -> Result<DMatrix<f64>> {
        if start + len > self.data.ncols() {
            return Err(Error::validation(format!(
                "need columns {}..{} but the table has {}",
                start + 1,
                start + len,
                self.data.ncols()
            )));
        }
        Ok(self.data.columns(start, len).into_owned())
    }
}

/// Reads a numeric CSV with a header row.
pub fn read_csv(path: &Path) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| with_path(e.into(), path))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| with_path(e.into(), path))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut values = Vec::new();
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| with_path(e.into(), path))?;
        if record.len() != headers.len() {
            return Err(Error::Format(format!(
                "{}: line {}: expected {} fields, found {}",
                path.display(),
                i + 2,
                headers.len(),
                record.len()
            )));
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::Format(format!(
                    "{}: line {}: column '{}' is not a number: '{field}'",
                    path.display(),
                    i + 2,
                    headers[j]
                ))
            })?;
            values.push(v);
        }
        rows += 1;
    }
    let data = DMatrix::from_row_slice(rows, headers.len(), &values);
    Ok(Table { headers, data })
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    }
}

/// Writes `data` with the given column names.
pub fn write_csv(path: &Path, headers: &[String], data: &DMatrix<f64>) -> Result<()> {
    if headers.len() != data.ncols() {
        return Err(Error::validation(format!(
            "{} headers for {} columns",
            headers.len(),
            data.ncols()
        )));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| with_path(e.into(), path))?;
    w.write_record(headers)?;
    for i in 0..data.nrows() {
        w.write_record((0..data.ncols()).map(|j| format_float(data[(i, j)])))?;
    }
    w.flush()?;
    Ok(())
}

/// Metadata stored in front of the arrays of a draw file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrawHeader {
    pub version: u32,
    pub rng_algorithm: String,
    pub seed: u64,
    pub stream: u64,
    pub n_keep: usize,
    pub ntrain: usize,
    pub mtrain: usize,
    pub k: usize,
    pub n_states: usize,
    pub n_errors: usize,
    pub n_signals: usize,
    pub has_states: bool,
    pub spec: ModelSpec,
    pub prior: PriorConfig,
    /// Resolved configuration of the run that produced the draws.
    pub config: String,
}

fn put(w: &mut impl Write, m: &DMatrix<f64>) -> Result<()> {
    for v in m.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn take(r: &mut impl Read, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
    let mut buf = vec![0u8; rows * cols * 8];
    r.read_exact(&mut buf).map_err(truncated)?;
    let values: Vec<f64> = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok(DMatrix::from_vec(rows, cols, values))
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("draw file is truncated".into())
    } else {
        Error::Io(e)
    }
}

/// Persists `draws` together with a config echo.
pub fn save_draws(path: &Path, draws: &McmcDraws, config: &str) -> Result<()> {
    let layout = draws.spec.layout();
    let header = DrawHeader {
        version: VERSION,
        rng_algorithm: RNG_ALGORITHM.to_string(),
        seed: draws.seed,
        stream: draws.stream,
        n_keep: draws.n_keep(),
        ntrain: draws.ntrain,
        mtrain: draws.mtrain,
        k: draws.k(),
        n_states: layout.n_states,
        n_errors: layout.n_errors,
        n_signals: layout.signals().len(),
        has_states: draws.states.is_some(),
        spec: draws.spec.clone(),
        prior: draws.prior.clone(),
        config: config.to_string(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Format(e.to_string()))?;
    let mut w = BufWriter::new(File::create(path).map_err(|e| with_path(e.into(), path))?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    put(&mut w, &draws.x_train)?;
    put(&mut w, &draws.y_train)?;
    put(&mut w, &draws.ind.map(|b| if b { 1.0 } else { 0.0 }))?;
    put(&mut w, &draws.beta_hat)?;
    for s in &draws.ob_sig2 {
        put(&mut w, s)?;
    }
    put(&mut w, &draws.st_sig2)?;
    put(&mut w, &draws.final_states)?;
    if let Some(states) = &draws.states {
        for s in states {
            put(&mut w, s)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Loads a draw file written by [`save_draws`].
pub fn load_draws(path: &Path) -> Result<(McmcDraws, DrawHeader)> {
    let mut r = BufReader::new(File::open(path).map_err(|e| with_path(e.into(), path))?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("{} is not a draw file", path.display())));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word).map_err(truncated)?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported draw file version {version}")));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len).map_err(truncated)?;
    let len = u64::from_le_bytes(len);
    if len > 1 << 32 {
        return Err(Error::Format("draw file header is implausibly large".into()));
    }
    let mut json = vec![0u8; len as usize];
    r.read_exact(&mut json).map_err(truncated)?;
    let h: DrawHeader =
        serde_json::from_slice(&json).map_err(|e| Error::Format(format!("draw file header: {e}")))?;
    let layout = h.spec.layout();
    if layout.n_states != h.n_states || layout.n_errors != h.n_errors || layout.signals().len() != h.n_signals {
        return Err(Error::Format("draw file header is inconsistent with its model spec".into()));
    }

    let (n, m, k, nk) = (h.ntrain, h.mtrain, h.k, h.n_keep);
    let x_train = take(&mut r, n, k)?;
    let y_train = take(&mut r, n, m)?;
    let ind_raw = take(&mut r, k, nk)?;
    if ind_raw.iter().any(|v| *v != 0.0 && *v != 1.0) {
        return Err(Error::Format("indicator block contains values other than 0 and 1".into()));
    }
    let ind = ind_raw.map(|v| v == 1.0);
    let beta_hat = take(&mut r, k, nk)?;
    let ob_sig2 = (0..nk).map(|_| take(&mut r, m, m)).collect::<Result<Vec<_>>>()?;
    let st_sig2 = take(&mut r, h.n_errors, nk)?;
    let final_states = take(&mut r, h.n_states, nk)?;
    let states = if h.has_states {
        Some((0..nk).map(|_| take(&mut r, n, h.n_signals)).collect::<Result<Vec<_>>>()?)
    } else {
        None
    };
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes after draw arrays", rest.len())));
    }
    let draws = McmcDraws {
        spec: h.spec.clone(),
        prior: h.prior.clone(),
        ntrain: n,
        mtrain: m,
        x_train,
        y_train,
        ind,
        beta_hat,
        ob_sig2,
        st_sig2,
        states,
        final_states,
        seed: h.seed,
        stream: h.stream,
    };
    Ok((draws, h))
}

/// Writes one CSV per draw array into `dir` and returns the paths.
///
/// Files: `ind.csv`, `beta_hat.csv` (one row per draw, one column per
/// predictor), `ob_sig2.csv` (one row per draw, entries `s<i>_<j>`),
/// `st_sig2.csv` and, when retained, `states.csv` in long form
/// (`draw, t, signal, value`).
pub fn export_draws_csv(dir: &Path, draws: &McmcDraws) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let k = draws.k();
    let m = draws.mtrain;
    let pred_names: Vec<String> = (1..=k).map(|j| format!("x{j}")).collect();
    let mut out = Vec::new();

    let p = dir.join("ind.csv");
    write_csv(&p, &pred_names, &draws.ind.map(|b| if b { 1.0 } else { 0.0 }).transpose())?;
    out.push(p);
    let p = dir.join("beta_hat.csv");
    write_csv(&p, &pred_names, &draws.beta_hat.transpose())?;
    out.push(p);

    let cov_names: Vec<String> =
        (1..=m).flat_map(|i| (1..=m).map(move |j| format!("s{i}_{j}"))).collect();
    let cov = DMatrix::from_fn(draws.n_keep(), m * m, |d, c| draws.ob_sig2[d][(c / m, c % m)]);
    let p = dir.join("ob_sig2.csv");
    write_csv(&p, &cov_names, &cov)?;
    out.push(p);

    let st_names: Vec<String> = (1..=draws.st_sig2.nrows()).map(|e| format!("var{e}")).collect();
    let p = dir.join("st_sig2.csv");
    write_csv(&p, &st_names, &draws.st_sig2.transpose())?;
    out.push(p);

    if let Some(states) = &draws.states {
        let signals = draws.signals();
        let p = dir.join("states.csv");
        let mut w = csv::Writer::from_path(&p)?;
        w.write_record(["draw", "t", "series", "component", "value"])?;
        for (d, s) in states.iter().enumerate() {
            for (c, (series, comp, _)) in signals.iter().enumerate() {
                for t in 0..s.nrows() {
                    w.write_record([
                        (d + 1).to_string(),
                        (t + 1).to_string(),
                        (series + 1).to_string(),
                        comp.name().to_string(),
                        format_float(s[(t, c)]),
                    ])?;
                }
            }
        }
        w.flush()?;
        out.push(p);
    }
    Ok(out)
}
