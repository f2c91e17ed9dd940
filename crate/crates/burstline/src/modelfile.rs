//! Flat `key=value` model files.
//!
//! ```text
//! slope=0.65
//! intercept=6.5
//! label=cluster
//! ```
//!
//! `label` is `cluster` or `cloud` for a log law and `split` for the column
//! law. Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use burstline_core::perfmodel::{LogLawModel, SplitModel};
use burstline_core::Environment;

use crate::error::CliError;

pub const SPLIT_LABEL: &str = "split";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelFile {
    LogLaw(LogLawModel),
    Split(SplitModel),
}

impl ModelFile {
    pub fn render(&self) -> String {
        let (slope, intercept, label) = match self {
            ModelFile::LogLaw(m) => (m.slope(), m.intercept(), m.label().as_str()),
            ModelFile::Split(m) => (m.slope_a(), m.intercept_b(), SPLIT_LABEL),
        };
        let mut out = String::new();
        let _ = writeln!(out, "slope={slope}");
        let _ = writeln!(out, "intercept={intercept}");
        let _ = writeln!(out, "label={label}");
        out
    }
}

pub fn parse(text: &str, origin: &str) -> Result<ModelFile, CliError> {
    let (mut slope, mut intercept, mut label) = (None, None, None);
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = |msg: String| CliError::Parse(format!("{origin}: line {}: {msg}", i + 1));
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| at(format!("expected key=value, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let number = || {
            value
                .parse::<f64>()
                .map_err(|_| at(format!("`{value}` is not a number")))
        };
        match key {
            "slope" => slope = Some(number()?),
            "intercept" => intercept = Some(number()?),
            "label" => label = Some(value.to_string()),
            other => return Err(at(format!("unknown key `{other}`"))),
        }
    }
    let missing = |k: &str| CliError::Parse(format!("{origin}: missing `{k}`"));
    let slope = slope.ok_or_else(|| missing("slope"))?;
    let intercept = intercept.ok_or_else(|| missing("intercept"))?;
    let label = label.ok_or_else(|| missing("label"))?;
    if label == SPLIT_LABEL {
        return Ok(ModelFile::Split(SplitModel::new(slope, intercept)?));
    }
    let env: Environment = label
        .parse()
        .map_err(|_| CliError::Parse(format!("{origin}: unknown label `{label}`")))?;
    Ok(ModelFile::LogLaw(LogLawModel::new(slope, intercept, env)?))
}

pub fn load(path: &Path) -> Result<ModelFile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text, &path.display().to_string())
}

pub fn save(path: &Path, model: &ModelFile) -> Result<(), CliError> {
    fs::write(path, model.render()).map_err(|e| CliError::io(path, e))
}
