//! TOML scenario files.
//!
//! Parsing is strict: unknown keys are errors. Syntax and shape problems map
//! to [`CliError::Parse`], values that parse but fail validation to
//! [`CliError::Data`].

use std::fs;
use std::path::{Path, PathBuf};

use burstline_core::burst::OverheadParams;
use burstline_core::domain::DomainSpec;
use burstline_core::perfmodel::{LogLawModel, SplitModel};
use burstline_core::sim::{
    CloudCapacity, EnvironmentState, Event, EventKind, Policy, Scenario, SplitSource,
};
use burstline_core::Environment;
use serde::Deserialize;

use crate::error::CliError;
use crate::modelfile::{self, ModelFile};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub domain: DomainSection,
    pub cluster: ClusterSection,
    pub cloud: CloudSection,
    pub models: Option<ModelsSection>,
    #[serde(default)]
    pub overheads: OverheadsSection,
    pub deadline: DeadlineSection,
    #[serde(default, rename = "event")]
    pub events: Vec<EventEntry>,
    #[serde(default)]
    pub policy: PolicySection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub nx: u32,
    pub ny: u32,
    pub px: u32,
    pub py: u32,
    pub width: f64,
    pub height: f64,
    pub timesteps: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSection {
    pub nodes: u32,
    pub cores_per_node: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudSection {
    pub max_nodes: u32,
    pub cores_per_node: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelsSection {
    pub cluster: Option<ModelEntry>,
    pub cloud: Option<ModelEntry>,
    pub split: Option<ModelEntry>,
}

/// Inline coefficients, or a model file written by `calibrate`. Relative
/// paths resolve against the scenario file's directory.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEntry {
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub file: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverheadsSection {
    pub checkpoint_block_bytes: u64,
    pub disk_bytes_per_second: f64,
    pub network_bits_per_second: f64,
    pub provisioning_seconds: f64,
    pub sync_payload_bytes: u64,
}

impl Default for OverheadsSection {
    fn default() -> Self {
        let d = Scenario::DEFAULT_OVERHEADS;
        Self {
            checkpoint_block_bytes: d.checkpoint_block_bytes,
            disk_bytes_per_second: d.disk_bytes_per_second,
            network_bits_per_second: d.network_bits_per_second,
            provisioning_seconds: d.provisioning_seconds,
            sync_payload_bytes: d.sync_payload_bytes,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeadlineSection {
    pub seconds: Option<f64>,
    /// Multiple of the unperturbed all-cluster runtime.
    pub baseline_factor: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventEntry {
    pub at_step: u32,
    pub kind: String,
    pub factor: Option<f64>,
    pub node: Option<u32>,
    pub seconds: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicySection {
    pub burst: bool,
    pub repeat: bool,
    pub window: usize,
    pub warmup: usize,
    pub slack: f64,
    pub split_model: String,
    pub seed: u64,
}

impl Default for PolicySection {
    fn default() -> Self {
        let p = Policy::default();
        Self {
            burst: p.burst_enabled,
            repeat: p.repeat,
            window: p.window,
            warmup: p.warmup,
            slack: p.slack_fraction,
            split_model: "calibrated".into(),
            seed: 0,
        }
    }
}

pub fn parse_str(text: &str, origin: &str) -> Result<ScenarioFile, CliError> {
    toml::from_str(text).map_err(|e| CliError::Parse(format!("{origin}: {e}")))
}

/// Reads and validates a scenario file.
pub fn load(path: &Path) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file = parse_str(&text, &path.display().to_string())?;
    build(&file, path.parent())
}

fn log_law(
    entry: Option<&ModelEntry>,
    label: Environment,
    base: Option<&Path>,
) -> Result<LogLawModel, CliError> {
    let entry = entry.ok_or_else(|| CliError::Data(format!("missing {label} model")))?;
    if let Some(path) = resolve(entry, base)? {
        return match modelfile::load(&path)? {
            ModelFile::LogLaw(m) => Ok(m.with_label(label)),
            ModelFile::Split(_) => Err(CliError::Data(format!(
                "{}: expected a {label} log-law model, found a split model",
                path.display()
            ))),
        };
    }
    let (slope, intercept) = coefficients(entry, label.as_str())?;
    Ok(LogLawModel::new(slope, intercept, label)?)
}

fn split_law(entry: Option<&ModelEntry>, base: Option<&Path>) -> Result<SplitModel, CliError> {
    let entry = entry.ok_or_else(|| CliError::Data("missing split model".into()))?;
    if let Some(path) = resolve(entry, base)? {
        return match modelfile::load(&path)? {
            ModelFile::Split(m) => Ok(m),
            ModelFile::LogLaw(_) => Err(CliError::Data(format!(
                "{}: expected a split model",
                path.display()
            ))),
        };
    }
    let (slope, intercept) = coefficients(entry, "split")?;
    Ok(SplitModel::new(slope, intercept)?)
}

fn resolve(entry: &ModelEntry, base: Option<&Path>) -> Result<Option<PathBuf>, CliError> {
    match (&entry.file, entry.slope, entry.intercept) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => Err(CliError::Parse(
            "a model takes either a file or inline coefficients, not both".into(),
        )),
        (Some(f), None, None) => Ok(Some(match base {
            Some(dir) if f.is_relative() => dir.join(f),
            _ => f.clone(),
        })),
        _ => Ok(None),
    }
}

fn coefficients(entry: &ModelEntry, what: &str) -> Result<(f64, f64), CliError> {
    match (entry.slope, entry.intercept) {
        (Some(s), Some(i)) => Ok((s, i)),
        _ => Err(CliError::Data(format!(
            "{what} model needs slope and intercept"
        ))),
    }
}

fn event_kind(e: &EventEntry) -> Result<EventKind, CliError> {
    let need = |v: Option<f64>, key: &str| {
        v.ok_or_else(|| {
            CliError::Parse(format!(
                "{} event at step {} needs `{key}`",
                e.kind, e.at_step
            ))
        })
    };
    let node = || {
        e.node.ok_or_else(|| {
            CliError::Parse(format!(
                "{} event at step {} needs `node`",
                e.kind, e.at_step
            ))
        })
    };
    Ok(match e.kind.as_str() {
        "contention" => EventKind::Contention(need(e.factor, "factor")?),
        "deadline_change" => EventKind::DeadlineChange(need(e.seconds, "seconds")?),
        "node_down" => EventKind::NodeDown(node()?),
        "node_up" => EventKind::NodeUp(node()?),
        other => return Err(CliError::Parse(format!("unknown event kind `{other}`"))),
    })
}

/// Converts a parsed file into a validated scenario. `base` is the directory
/// model file paths are relative to.
pub fn build(file: &ScenarioFile, base: Option<&Path>) -> Result<Scenario, CliError> {
    let no_models = ModelsSection {
        cluster: None,
        cloud: None,
        split: None,
    };
    let models = file.models.as_ref().unwrap_or(&no_models);
    let cluster_model = log_law(models.cluster.as_ref(), Environment::Cluster, base)?;
    let cloud_model = log_law(models.cloud.as_ref(), Environment::Cloud, base)?;
    let split = split_law(models.split.as_ref(), base)?;

    let d = &file.domain;
    let domain = DomainSpec {
        nx: d.nx,
        ny: d.ny,
        px: d.px,
        py: d.py,
        width: d.width,
        height: d.height,
        timesteps: d.timesteps,
    };
    let o = &file.overheads;
    let overheads = OverheadParams {
        checkpoint_block_bytes: o.checkpoint_block_bytes,
        disk_bytes_per_second: o.disk_bytes_per_second,
        network_bits_per_second: o.network_bits_per_second,
        provisioning_seconds: o.provisioning_seconds,
        sync_payload_bytes: o.sync_payload_bytes,
    };
    let p = &file.policy;
    let split_source = match p.split_model.as_str() {
        "calibrated" => SplitSource::Calibrated,
        "static" => SplitSource::Static,
        other => {
            return Err(CliError::Parse(format!(
                "unknown split_model `{other}`, expected calibrated or static"
            )))
        }
    };
    let events = file
        .events
        .iter()
        .map(|e| {
            Ok(Event {
                at_step: e.at_step,
                kind: event_kind(e)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut scenario = Scenario {
        domain,
        cluster: EnvironmentState::uniform(
            Environment::Cluster,
            file.cluster.nodes,
            file.cluster.cores_per_node,
            cluster_model,
        ),
        cloud: EnvironmentState::uniform(
            Environment::Cloud,
            0,
            file.cloud.cores_per_node,
            cloud_model,
        ),
        cloud_capacity: CloudCapacity {
            cores_per_node: file.cloud.cores_per_node,
            max_nodes: file.cloud.max_nodes,
        },
        split,
        deadline_seconds: 1.0,
        overheads,
        events,
        seed: p.seed,
        policy: Policy {
            burst_enabled: p.burst,
            repeat: p.repeat,
            window: p.window,
            warmup: p.warmup,
            slack_fraction: p.slack,
            split_source,
        },
    };
    scenario.deadline_seconds = match (file.deadline.seconds, file.deadline.baseline_factor) {
        (Some(s), None) => s,
        (None, Some(f)) => f * scenario.baseline_runtime()?,
        _ => {
            return Err(CliError::Parse(
                "[deadline] takes exactly one of `seconds` or `baseline_factor`".into(),
            ))
        }
    };
    scenario.validate()?;
    Ok(scenario)
}
