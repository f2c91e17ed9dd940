//! Plot-ready series extracted from a trace: one CSV per series, step rows
//! only.

use std::fs;
use std::path::Path;

use crate::error::CliError;
use crate::trace::TraceFile;

pub const TIME_FILE: &str = "time_vs_step.csv";
pub const ESTIMATE_FILE: &str = "estimate_vs_step.csv";
pub const OWNERSHIP_FILE: &str = "ownership_vs_step.csv";

/// File name and contents for each series.
pub fn series(trace: &TraceFile) -> [(&'static str, String); 3] {
    let mut time = String::from("step,step_seconds,clock_seconds\n");
    let mut estimate = String::from("step,estimate_seconds\n");
    let mut owner = String::from("step,cluster_cols,cloud_cols\n");
    for r in trace.rows.iter().filter(|r| r.is_step()) {
        time.push_str(&format!(
            "{},{},{}\n",
            r.step, r.step_seconds, r.clock_seconds
        ));
        let est = r
            .estimate_seconds
            .map_or_else(String::new, |e| e.to_string());
        estimate.push_str(&format!("{},{}\n", r.step, est));
        owner.push_str(&format!("{},{},{}\n", r.step, r.cluster_cols, r.cloud_cols));
    }
    [
        (TIME_FILE, time),
        (ESTIMATE_FILE, estimate),
        (OWNERSHIP_FILE, owner),
    ]
}

pub fn write(trace: &TraceFile, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for (name, body) in series(trace) {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}
