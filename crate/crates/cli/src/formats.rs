//! On-disk formats.
//!
//! | file    | header                                |
//! |---------|---------------------------------------|
//! | dataset | `t,i_obs`                             |
//! | chain   | `iter,beta,gamma,log_post,accepted`   |
//! | samples | `beta,gamma,r0`                       |
//! | band    | `t,q_min,q025,q50,q975,q_max`         |
//! | draws   | `draw,beta,gamma,t,i`                 |
//!
//! Floats are written in the shortest decimal form that parses back to the
//! same bits, so every file round-trips exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sirfit_core::summary::ParameterSummary;
use sirfit_core::{ChainSample, Dataset, PredictiveCheck, SirParams};

use crate::error::{CliError, Result};

pub const DATASET_HEADER: [&str; 2] = ["t", "i_obs"];
pub const CHAIN_HEADER: [&str; 5] = ["iter", "beta", "gamma", "log_post", "accepted"];
pub const SAMPLES_HEADER: [&str; 3] = ["beta", "gamma", "r0"];
pub const BAND_HEADER: [&str; 6] = ["t", "q_min", "q025", "q50", "q975", "q_max"];
pub const DRAWS_HEADER: [&str; 5] = ["draw", "beta", "gamma", "t", "i"];

/// Summary JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub beta: ParameterSummary,
    pub gamma: ParameterSummary,
    pub r0: ParameterSummary,
    pub acceptance_rate: f64,
    pub n_samples: usize,
}

fn num(x: f64) -> String {
    x.to_string()
}

struct CsvOut<'a> {
    path: &'a Path,
    writer: csv::Writer<BufWriter<File>>,
}

impl<'a> CsvOut<'a> {
    fn create(path: &'a Path, header: &[&str]) -> Result<Self> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut out = Self {
            path,
            writer: csv::Writer::from_writer(BufWriter::new(file)),
        };
        out.row(header)?;
        Ok(out)
    }

    fn row<I, T>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        self.writer
            .write_record(fields)
            .map_err(|e| csv_error(self.path, e))
    }

    fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(|e| CliError::io(self.path, e))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map(|p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => match line {
            Some(l) => CliError::data(path, format!("line {l}: {other:?}")),
            None => CliError::data(path, format!("{other:?}")),
        },
    }
}

/// Reads a headed CSV, checking the header and returning numbered rows.
fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let found = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(CliError::data(
            path,
            format!(
                "line 1: expected header `{}`, found `{}`",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push((line, rec));
    }
    Ok(rows)
}

fn field<T: std::str::FromStr>(
    path: &Path,
    line: u64,
    rec: &csv::StringRecord,
    idx: usize,
    name: &str,
) -> Result<T> {
    let raw = rec.get(idx).unwrap_or("");
    raw.parse().map_err(|_| {
        CliError::data(path, format!("line {line}: cannot parse {name} `{raw}`"))
    })
}

pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let mut out = CsvOut::create(path, &DATASET_HEADER)?;
    for (t, y) in data.times().iter().zip(data.observed_i()) {
        out.row([num(*t), num(*y)])?;
    }
    out.finish()
}

/// Reads a dataset; the noise scale is not stored in the file.
pub fn read_dataset(path: &Path, sigma: f64) -> Result<Dataset> {
    let mut times = Vec::new();
    let mut obs = Vec::new();
    for (line, rec) in read_rows(path, &DATASET_HEADER)? {
        times.push(field::<f64>(path, line, &rec, 0, "t")?);
        obs.push(field::<f64>(path, line, &rec, 1, "i_obs")?);
    }
    Dataset::new(times, obs, sigma).map_err(|e| CliError::data(path, e.to_string()))
}

pub fn write_chain(path: &Path, samples: &[ChainSample]) -> Result<()> {
    let mut out = CsvOut::create(path, &CHAIN_HEADER)?;
    for (k, s) in samples.iter().enumerate() {
        out.row([
            k.to_string(),
            num(s.params.beta),
            num(s.params.gamma),
            num(s.log_post),
            u8::from(s.accepted).to_string(),
        ])?;
    }
    out.finish()
}

pub fn read_chain(path: &Path) -> Result<Vec<ChainSample>> {
    let rows = read_rows(path, &CHAIN_HEADER)?;
    let mut samples = Vec::with_capacity(rows.len());
    for (k, (line, rec)) in rows.iter().enumerate() {
        let iter: usize = field(path, *line, rec, 0, "iter")?;
        if iter != k {
            return Err(CliError::data(
                path,
                format!("line {line}: expected iter {k}, found {iter}"),
            ));
        }
        let accepted = match rec.get(4).unwrap_or("") {
            "0" => false,
            "1" => true,
            other => {
                return Err(CliError::data(
                    path,
                    format!("line {line}: accepted must be 0 or 1, found `{other}`"),
                ))
            }
        };
        samples.push(ChainSample {
            params: SirParams {
                beta: field(path, *line, rec, 1, "beta")?,
                gamma: field(path, *line, rec, 2, "gamma")?,
            },
            log_post: field(path, *line, rec, 3, "log_post")?,
            accepted,
        });
    }
    if samples.len() < 2 {
        return Err(CliError::data(
            path,
            "a chain needs the initial state and at least one iteration",
        ));
    }
    Ok(samples)
}

pub fn write_samples(path: &Path, params: &[SirParams], r0: &[f64]) -> Result<()> {
    let mut out = CsvOut::create(path, &SAMPLES_HEADER)?;
    for (p, r) in params.iter().zip(r0) {
        out.row([num(p.beta), num(p.gamma), num(*r)])?;
    }
    out.finish()
}

pub fn write_band(path: &Path, ppc: &PredictiveCheck) -> Result<()> {
    let mut out = CsvOut::create(path, &BAND_HEADER)?;
    for b in &ppc.band {
        out.row([b.t, b.q_min, b.q025, b.q50, b.q975, b.q_max].map(num))?;
    }
    out.finish()
}

pub fn write_draws(path: &Path, ppc: &PredictiveCheck) -> Result<()> {
    let mut out = CsvOut::create(path, &DRAWS_HEADER)?;
    for (d, (p, curve)) in ppc.drawn.iter().zip(&ppc.curves).enumerate() {
        for (t, i) in ppc.times.iter().zip(curve) {
            out.row([d.to_string(), num(p.beta), num(p.gamma), num(*t), num(*i)])?;
        }
    }
    out.finish()
}

pub fn write_summary(path: &Path, report: &SummaryReport) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::Numerical(format!("cannot encode summary: {e}")))?;
    text.push('\n');
    let mut file = File::create(path).map_err(|e| CliError::io(path, e))?;
    file.write_all(text.as_bytes())
        .map_err(|e| CliError::io(path, e))
}

pub fn read_summary(path: &Path) -> Result<SummaryReport> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::data(path, e.to_string()))
}
