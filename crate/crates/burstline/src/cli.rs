use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use burstline_core::burst::{
    plan_burst, read_checkpoint, write_checkpoint, BurstError, BurstPlan, PlanRequest, SimSnapshot,
};
use burstline_core::perfmodel::{
    calibrate_log_law, calibrate_split_model, LogLawModel, SplitModel,
};
use burstline_core::sim::{run as simulate, Scenario};
use burstline_core::Environment;
use clap::{Args, Parser, Subcommand};

use crate::calib::{self, Kind};
use crate::error::{exit, CliError};
use crate::modelfile::ModelFile;
use crate::{checkpoint, modelfile, presets, report, scenario, trace};

#[derive(Debug, Parser)]
#[command(
    name = "burstline",
    version,
    about = "Deadline-aware cloud-bursting planner and simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model to calibration timings.
    Calibrate(CalibrateArgs),
    /// Write synthetic calibration timings from known coefficients.
    Generate(GenerateArgs),
    /// Size a burst for a given surplus or estimate.
    Plan(PlanArgs),
    /// Run a scenario and write its trace.
    Simulate(SimulateArgs),
    /// Extract plot-ready series from a trace.
    Report(ReportArgs),
    /// Print or save a bundled preset.
    Preset(PresetArgs),
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Environment label for a log-law fit.
    #[arg(long, default_value = "cluster")]
    pub label: Environment,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long, allow_negative_numbers = true)]
    pub slope: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub intercept: f64,
    /// Core counts (log law) or column counts (split law).
    #[arg(long, value_delimiter = ',', required = true)]
    pub counts: Vec<u32>,
    /// Relative amplitude of uniform multiplicative noise.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub preset: Option<String>,
}

impl Source {
    fn load(&self) -> Result<Scenario, CliError> {
        match (&self.scenario, &self.preset) {
            (Some(path), _) => scenario::load(path),
            (None, Some(name)) => presets::scenario(name),
            (None, None) => unreachable!("clap requires one source"),
        }
    }
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct PlanInput {
    /// Seconds by which the run is expected to overshoot its deadline.
    #[arg(long, allow_negative_numbers = true)]
    pub surplus: Option<f64>,
    /// Estimated total runtime; the surplus is this minus the deadline.
    #[arg(long)]
    pub estimate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub input: PlanInput,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Disable bursting regardless of the scenario policy.
    #[arg(long)]
    pub no_burst: bool,
    #[arg(long)]
    pub monitor_log: Option<PathBuf>,
    /// Write each burst's checkpoint here as `checkpoint_<step>.brst`.
    #[arg(long)]
    pub checkpoint_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct PresetArgs {
    pub name: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs a parsed command line and returns the exit status.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Calibrate(a) => calibrate(a, out),
        Command::Generate(a) => generate(a),
        Command::Plan(a) => plan(a, out),
        Command::Simulate(a) => run_simulation(a, out),
        Command::Report(a) => run_report(a, out),
        Command::Preset(a) => preset(a, out),
    }
}

fn put(out: &mut dyn Write, line: impl AsRef<str>) -> Result<(), CliError> {
    writeln!(out, "{}", line.as_ref()).map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

fn calibrate(a: CalibrateArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let samples = calib::load(&a.input, a.kind)?;
    let (model, rss) = match a.kind {
        Kind::LogLaw => {
            let r = calibrate_log_law(&samples, a.label)?;
            (ModelFile::LogLaw(r.model), r.residual_sum_squares)
        }
        Kind::Split => {
            let r = calibrate_split_model(&samples)?;
            (ModelFile::Split(r.model), r.residual_sum_squares)
        }
    };
    modelfile::save(&a.out, &model)?;
    put(out, format!("samples={} rss={}", samples.len(), rss))?;
    out.write_all(model.render().as_bytes())
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
    Ok(exit::OK)
}

fn generate(a: GenerateArgs) -> Result<i32, CliError> {
    if !(a.noise.is_finite() && (0.0..1.0).contains(&a.noise)) {
        return Err(CliError::Data("noise must be in [0, 1)".into()));
    }
    let samples = match a.kind {
        Kind::LogLaw => {
            let m = LogLawModel::new(a.slope, a.intercept, Environment::Cluster)?;
            if a.counts.contains(&0) {
                return Err(CliError::Data("core counts must be at least 1".into()));
            }
            calib::synthesize(
                &a.counts,
                |c| m.predicted_seconds(c).expect("c >= 1"),
                a.noise,
                a.seed,
            )
        }
        Kind::Split => {
            let m = SplitModel::new(a.slope, a.intercept)?;
            calib::synthesize(&a.counts, |g| m.time_for(g), a.noise, a.seed)
        }
    };
    let file = File::create(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    calib::write(file, a.kind, &samples)?;
    Ok(exit::OK)
}

fn plan_lines(p: &BurstPlan) -> Vec<String> {
    vec![
        format!("surplus_seconds={}", p.surplus_seconds),
        format!("c_required={}", p.c_required),
        format!("correction_factor={}", p.correction_factor),
        format!("c_n={}", p.c_n),
        format!("gamma={}", p.gamma),
        format!("checkpoint_bytes={}", p.checkpoint_bytes),
        format!("checkpoint_seconds={}", p.checkpoint_seconds),
        format!("provisioning_seconds={}", p.provisioning_seconds),
        format!("transfer_seconds={}", p.transfer_seconds),
        format!("total_overhead_seconds={}", p.total_overhead_seconds()),
    ]
}

/// Applies the planning formulas as they stand, with the scenario's own
/// split model and no simulation context.
fn plan(a: PlanArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let s = a.source.load()?;
    let surplus = match (a.input.surplus, a.input.estimate) {
        (Some(x), _) => x,
        (None, Some(e)) => e - s.deadline_seconds,
        (None, None) => unreachable!("clap requires one input"),
    };
    if !surplus.is_finite() {
        return Err(CliError::Data("surplus must be finite".into()));
    }
    put(out, format!("deadline_seconds={}", s.deadline_seconds))?;
    if surplus <= 0.0 {
        put(out, "verdict=no burst needed")?;
        put(out, format!("surplus_seconds={surplus}"))?;
        put(out, "c_n=0")?;
        put(out, "gamma=0")?;
        return Ok(exit::OK);
    }
    let req = PlanRequest {
        trigger_step: 0,
        surplus_seconds: surplus,
        cluster: &s.cluster.model,
        cloud: &s.cloud.model,
        split: &s.split,
        cluster_cores: s.cluster.available_cores(),
        deadline_seconds: s.deadline_seconds,
        nx: s.domain.nx,
        cloud_columns: 0,
        cloud_cores_in_use: 0,
        cloud_max_cores: s.cloud_capacity.max_cores(),
        overheads: &s.overheads,
    };
    match plan_burst(&req) {
        Ok(p) => {
            put(out, "verdict=feasible")?;
            for line in plan_lines(&p) {
                put(out, line)?;
            }
            Ok(exit::OK)
        }
        Err(BurstError::Infeasible {
            constraint,
            required,
            limit,
        }) => {
            put(out, "verdict=infeasible")?;
            put(out, format!("constraint={constraint}"))?;
            put(out, format!("required={required}"))?;
            put(out, format!("limit={limit}"))?;
            Ok(exit::INFEASIBLE)
        }
        Err(e) => Err(e.into()),
    }
}

fn run_simulation(a: SimulateArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut s = a.source.load()?;
    if let Some(seed) = a.seed {
        s.seed = seed;
    }
    if a.no_burst {
        s.policy.burst_enabled = false;
    }
    let t = simulate(&s)?;
    fs::write(&a.trace, trace::render(&t)).map_err(|e| CliError::io(&a.trace, e))?;
    if let Some(path) = &a.monitor_log {
        fs::write(path, trace::render_monitor_log(&t)).map_err(|e| CliError::io(path, e))?;
    }
    if let Some(dir) = &a.checkpoint_dir {
        write_checkpoints(&s, &t.summary.plans, dir)?;
    }
    let sum = &t.summary;
    let burst_step = sum
        .burst_step
        .map_or_else(|| "none".to_string(), |k| k.to_string());
    put(
        out,
        format!(
            "deadline_met={} finished_at={} burst_step={}",
            sum.deadline_met, sum.finished_at, burst_step
        ),
    )?;
    if let Some(step) = sum.stalled_at {
        eprintln!("warning: run stalled at step {step}: an environment had work but no cores");
    }
    Ok(if sum.deadline_met {
        exit::OK
    } else {
        exit::DEADLINE_MISSED
    })
}

/// Recreates each burst's checkpoint, writes it and reads it back.
fn write_checkpoints(s: &Scenario, plans: &[BurstPlan], dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut cloud_columns = 0;
    for p in plans {
        let step = p.trigger_step + 1;
        let snap = SimSnapshot::synthetic(
            s.seed,
            step,
            s.domain,
            cloud_columns,
            s.overheads.checkpoint_block_bytes,
        );
        let path = dir.join(format!("checkpoint_{step}.brst"));
        checkpoint::save(&path, &write_checkpoint(&snap))?;
        let back = read_checkpoint(&checkpoint::load(&path)?, &s.domain)?;
        if back != snap {
            return Err(CliError::Data(format!(
                "{}: read-back mismatch",
                path.display()
            )));
        }
        cloud_columns += p.gamma;
    }
    Ok(())
}

fn run_report(a: ReportArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let f = File::open(&a.trace).map_err(|e| CliError::io(&a.trace, e))?;
    let t = trace::read(BufReader::new(f), &a.trace.display().to_string())?;
    report::write(&t, &a.out_dir)?;
    put(
        out,
        format!(
            "step_rows={} out_dir={}",
            t.rows.iter().filter(|r| r.is_step()).count(),
            a.out_dir.display()
        ),
    )?;
    Ok(exit::OK)
}

fn preset(a: PresetArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let (_, text, _) = presets::text(&a.name)?;
    match &a.out {
        Some(path) => fs::write(path, &text).map_err(|e| CliError::io(path, e))?,
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io(Path::new("<stdout>"), e))?,
    }
    Ok(exit::OK)
}
