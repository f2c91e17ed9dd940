//! Bundled presets. Setting `BURSTLINE_PRESET_DIR` reads `<name>.toml` or
//! `<name>.model` from that directory instead of the built-in copies.

use std::env;
use std::path::PathBuf;

use burstline_core::sim::Scenario;

use crate::error::CliError;
use crate::{modelfile, scenario};

pub const DIR_VAR: &str = "BURSTLINE_PRESET_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetKind {
    Scenario,
    Model,
}

struct Builtin {
    name: &'static str,
    kind: PresetKind,
    text: &'static str,
}

const BUILTIN: [Builtin; 3] = [
    Builtin {
        name: "paper-cluster",
        kind: PresetKind::Model,
        text: include_str!("../presets/paper-cluster.model"),
    },
    Builtin {
        name: "paper-cloud",
        kind: PresetKind::Model,
        text: include_str!("../presets/paper-cloud.model"),
    },
    Builtin {
        name: "table2",
        kind: PresetKind::Scenario,
        text: include_str!("../presets/table2.toml"),
    },
];

pub fn names() -> impl Iterator<Item = &'static str> {
    BUILTIN.iter().map(|b| b.name)
}

/// Preset text and where it came from.
pub fn text(name: &str) -> Result<(PresetKind, String, String), CliError> {
    let builtin = BUILTIN.iter().find(|b| b.name == name).ok_or_else(|| {
        CliError::Parse(format!(
            "unknown preset `{name}`, expected one of: {}",
            names().collect::<Vec<_>>().join(", ")
        ))
    })?;
    match env::var_os(DIR_VAR) {
        Some(dir) => {
            let ext = match builtin.kind {
                PresetKind::Scenario => "toml",
                PresetKind::Model => "model",
            };
            let path = PathBuf::from(dir).join(format!("{name}.{ext}"));
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            Ok((builtin.kind, text, path.display().to_string()))
        }
        None => Ok((
            builtin.kind,
            builtin.text.to_string(),
            format!("preset {name}"),
        )),
    }
}

pub fn scenario(name: &str) -> Result<Scenario, CliError> {
    let (kind, text, origin) = text(name)?;
    if kind != PresetKind::Scenario {
        return Err(CliError::Parse(format!(
            "preset `{name}` is a model, not a scenario"
        )));
    }
    let file = scenario::parse_str(&text, &origin)?;
    let base = env::var_os(DIR_VAR).map(PathBuf::from);
    scenario::build(&file, base.as_deref())
}

pub fn model(name: &str) -> Result<modelfile::ModelFile, CliError> {
    let (kind, text, origin) = text(name)?;
    if kind != PresetKind::Model {
        return Err(CliError::Parse(format!(
            "preset `{name}` is a scenario, not a model"
        )));
    }
    modelfile::parse(&text, &origin)
}
