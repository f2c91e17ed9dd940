//! Trace CSV and monitor log files.
//!
//! Rows follow the header below; the run summary is appended as `# key=value`
//! footer lines. Floats use shortest round-trip formatting so identical runs
//! give identical bytes.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use burstline_core::burst::{BurstPlan, Phase};
use burstline_core::sim::{Annotation, EventKind, RowDecision, Trace};

use crate::error::CliError;

pub const HEADER: &str =
    "step,phase,cluster_cols,cloud_cols,step_seconds,clock_seconds,estimate_seconds,decision,event";
pub const MONITOR_HEADER: &str =
    "step_index,duration_seconds,environment,estimate_seconds,decision";

pub fn decision_str(d: &RowDecision) -> &'static str {
    match d {
        RowDecision::Warmup => "warmup",
        RowDecision::Ok => "ok",
        RowDecision::BurstNeeded { .. } => "burst_needed",
        RowDecision::Burst => "burst",
        RowDecision::Overhead => "overhead",
    }
}

/// `key=value` pairs for a plan, `;`-separated.
pub fn plan_fields(p: &BurstPlan) -> String {
    format!(
        "gamma={};c_n={};c_n_formula={};c_required={};k={};surplus_seconds={};split_a={};split_b={};\
         checkpoint_bytes={};checkpoint_seconds={};provisioning_seconds={};transfer_seconds={};trigger_step={}",
        p.gamma,
        p.c_n,
        p.c_n_formula,
        p.c_required,
        p.correction_factor,
        p.surplus_seconds,
        p.split.slope_a(),
        p.split.intercept_b(),
        p.checkpoint_bytes,
        p.checkpoint_seconds,
        p.provisioning_seconds,
        p.transfer_seconds,
        p.trigger_step,
    )
}

fn annotation(a: &Annotation) -> String {
    match a {
        Annotation::Event(EventKind::Contention(f)) => format!("contention={f}"),
        Annotation::Event(EventKind::NodeDown(n)) => format!("node_down={n}"),
        Annotation::Event(EventKind::NodeUp(n)) => format!("node_up={n}"),
        Annotation::Event(EventKind::DeadlineChange(d)) => format!("deadline={d}"),
        Annotation::Plan(p) => plan_fields(p),
        Annotation::PlanInfeasible {
            constraint,
            required,
            limit,
        } => format!("infeasible={constraint};required={required};limit={limit}"),
        Annotation::PlanNoop => "plan_noop".into(),
        Annotation::Provisioned { cloud_cores } => format!("cloud_cores={cloud_cores}"),
        Annotation::Migrated { cloud_columns } => format!("cloud_cols={cloud_columns}"),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn opt_u64(v: Option<u64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

pub fn render(trace: &Trace) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    for row in &trace.rows {
        let event = row
            .annotations
            .iter()
            .map(annotation)
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            row.step.to_string(),
            row.phase.as_str().to_string(),
            row.cluster_cols.to_string(),
            row.cloud_cols.to_string(),
            row.step_seconds.to_string(),
            row.clock_seconds.to_string(),
            opt(row.estimate_seconds),
            decision_str(&row.decision).to_string(),
            event,
        ])
        .expect("writing to memory");
    }
    let body = String::from_utf8(w.into_inner().expect("writing to memory")).expect("utf-8 fields");

    let s = &trace.summary;
    let mut out = String::with_capacity(body.len() + 512);
    out.push_str(HEADER);
    out.push('\n');
    out.push_str(&body);
    let _ = writeln!(out, "# finished_at={}", s.finished_at);
    let _ = writeln!(out, "# deadline_seconds={}", s.deadline_seconds);
    let _ = writeln!(out, "# deadline_met={}", s.deadline_met);
    let _ = writeln!(out, "# burst_step={}", opt_u64(s.burst_step));
    let _ = writeln!(out, "# stalled_at={}", opt_u64(s.stalled_at));
    let phases: Vec<_> = trace.phase_sequence().iter().map(|p| p.as_str()).collect();
    let _ = writeln!(out, "# phases={}", phases.join(","));
    for p in &s.plans {
        let _ = writeln!(out, "# plan={}", plan_fields(p));
    }
    out
}

pub fn write<W: Write>(mut out: W, trace: &Trace) -> std::io::Result<()> {
    out.write_all(render(trace).as_bytes())
}

/// One data row of a trace file.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub step: u64,
    pub phase: Phase,
    pub cluster_cols: u32,
    pub cloud_cols: u32,
    pub step_seconds: f64,
    pub clock_seconds: f64,
    pub estimate_seconds: Option<f64>,
    pub decision: String,
    pub event: String,
}

impl TraceRecord {
    pub fn is_step(&self) -> bool {
        matches!(self.phase, Phase::Running | Phase::RunningHybrid)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    pub rows: Vec<TraceRecord>,
    /// Footer `key=value` pairs in file order.
    pub footer: Vec<(String, String)>,
}

impl TraceFile {
    pub fn footer_value(&self, key: &str) -> Option<&str> {
        self.footer
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

pub fn read<R: BufRead>(input: R, origin: &str) -> Result<TraceFile, CliError> {
    let mut body = String::new();
    let mut footer = Vec::new();
    let mut header_seen = false;
    let mut first_data_line = 0;
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| CliError::Parse(format!("{origin}: {e}")))?;
        if let Some(rest) = line.strip_prefix('#') {
            let (k, v) = rest.trim().split_once('=').ok_or_else(|| {
                CliError::Parse(format!("{origin}: line {}: malformed footer", i + 1))
            })?;
            footer.push((k.to_string(), v.to_string()));
            continue;
        }
        if !header_seen {
            if line != HEADER {
                return Err(CliError::Parse(format!(
                    "{origin}: line {}: expected trace header",
                    i + 1
                )));
            }
            header_seen = true;
            first_data_line = i + 2;
            continue;
        }
        if !footer.is_empty() {
            return Err(CliError::Parse(format!(
                "{origin}: line {}: data after footer",
                i + 1
            )));
        }
        body.push_str(&line);
        body.push('\n');
    }
    if !header_seen {
        return Err(CliError::Parse(format!("{origin}: empty trace")));
    }

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(body.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = first_data_line + i;
        let at = |msg: String| CliError::Parse(format!("{origin}: line {line}: {msg}"));
        let rec = rec.map_err(|e| at(e.to_string()))?;
        if rec.len() != 9 {
            return Err(at(format!("expected 9 fields, found {}", rec.len())));
        }
        fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, String> {
            s.parse().map_err(|_| format!("bad {what} `{s}`"))
        }
        let parsed = (|| -> Result<TraceRecord, String> {
            Ok(TraceRecord {
                step: num(&rec[0], "step")?,
                phase: Phase::parse(&rec[1])
                    .ok_or_else(|| format!("unknown phase `{}`", &rec[1]))?,
                cluster_cols: num(&rec[2], "cluster_cols")?,
                cloud_cols: num(&rec[3], "cloud_cols")?,
                step_seconds: num(&rec[4], "step_seconds")?,
                clock_seconds: num(&rec[5], "clock_seconds")?,
                estimate_seconds: match &rec[6] {
                    "" => None,
                    s => Some(num(s, "estimate_seconds")?),
                },
                decision: rec[7].to_string(),
                event: rec[8].to_string(),
            })
        })();
        rows.push(parsed.map_err(at)?);
    }
    Ok(TraceFile { rows, footer })
}

/// Monitor log: one line per executed step.
pub fn render_monitor_log(trace: &Trace) -> String {
    let mut out = String::from(MONITOR_HEADER);
    out.push('\n');
    for row in trace.rows.iter().filter(|r| r.is_step()) {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            row.step,
            row.step_seconds,
            row.site(),
            opt(row.estimate_seconds),
            decision_str(&row.decision)
        );
    }
    out
}
