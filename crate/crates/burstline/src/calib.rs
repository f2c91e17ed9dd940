//! Calibration CSVs: header `cores,elapsed_seconds` for the log law or
//! `gamma,elapsed_seconds` for the split law.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use burstline_core::perfmodel::CalibrationSample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Kind {
    #[value(name = "loglaw")]
    LogLaw,
    Split,
}

impl Kind {
    pub fn count_column(self) -> &'static str {
        match self {
            Kind::LogLaw => "cores",
            Kind::Split => "gamma",
        }
    }
}

pub fn read<R: Read>(
    input: R,
    kind: Kind,
    origin: &str,
) -> Result<Vec<CalibrationSample>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let expected = [kind.count_column(), "elapsed_seconds"];
    let header = rdr
        .headers()
        .map_err(|e| CliError::Parse(format!("{origin}: line 1: {e}")))?;
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(CliError::Parse(format!(
            "{origin}: line 1: expected header `{}`",
            expected.join(",")
        )));
    }
    let mut samples = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::Parse(format!("{origin}: line {line}: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let at = |msg: String| CliError::Parse(format!("{origin}: line {line}: {msg}"));
        let count: u32 = record[0]
            .parse()
            .map_err(|_| at(format!("`{}` is not a non-negative integer", &record[0])))?;
        let elapsed: f64 = record[1]
            .parse()
            .map_err(|_| at(format!("`{}` is not a number", &record[1])))?;
        if !(elapsed.is_finite() && elapsed > 0.0) || (kind == Kind::LogLaw && count == 0) {
            return Err(CliError::Data(format!(
                "{origin}: line {line}: counts and times must be positive"
            )));
        }
        samples.push(CalibrationSample::new(count, elapsed));
    }
    Ok(samples)
}

pub fn load(path: &Path, kind: Kind) -> Result<Vec<CalibrationSample>, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read(file, kind, &path.display().to_string())
}

pub fn write<W: Write>(out: W, kind: Kind, samples: &[CalibrationSample]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let fail = |e: csv::Error| CliError::Data(e.to_string());
    w.write_record([kind.count_column(), "elapsed_seconds"])
        .map_err(fail)?;
    for s in samples {
        w.write_record([s.count.to_string(), s.elapsed_seconds.to_string()])
            .map_err(fail)?;
    }
    w.flush().map_err(|e| CliError::Data(e.to_string()))
}

/// Samples from a model with uniform multiplicative noise in
/// `[1 - noise, 1 + noise]`.
pub fn synthesize(
    counts: &[u32],
    time_for: impl Fn(u32) -> f64,
    noise: f64,
    seed: u64,
) -> Vec<CalibrationSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    counts
        .iter()
        .map(|&c| {
            let jitter = if noise > 0.0 {
                rng.random_range(-noise..=noise)
            } else {
                0.0
            };
            CalibrationSample::new(c, time_for(c) * (1.0 + jitter))
        })
        .collect()
}
