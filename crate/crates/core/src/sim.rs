//! Deterministic discrete-event simulation of a hybrid cluster/cloud run.
//!
//! Step cost is the full-domain predicted runtime of an environment, divided by
//! the number of timesteps, scaled by the share of columns it owns and by its
//! contention factor. Hybrid steps are barrier-synchronised: the slower side
//! sets the pace and the boundary exchange is added on top.
//!
//! [`run`] drives the monitor and the burst controller step by step.
//! [`brute_force_min_gamma`] is an exhaustive oracle over every column split
//! and cloud size that shares only the step cost model with the planner.

use alloc::vec::Vec;
use core::ops::Range;

use crate::burst::{
    apply_burst, plan_burst, raise_cloud_cores, read_checkpoint, write_checkpoint, BurstError,
    BurstPlan, Constraint, ControllerState, ExecutionState, OverheadParams, Phase, PlanRequest,
    SimSnapshot,
};
use crate::domain::{DomainError, DomainSpec, NodeCapacity, DEFAULT_BOUNDARY_PAYLOAD_BYTES};
use crate::monitor::{Decision, MonitorConfig, MonitorError, MonitorState, Site, StepRecord};
use crate::perfmodel::{LogLawModel, ModelError, SplitModel};
use crate::Environment;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("{0} has work but no available cores")]
    Stall(Environment),
    #[error("invalid scenario: {0}")]
    InvalidScenario(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error(transparent)]
    Burst(#[from] BurstError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Node {
    pub id: u32,
    pub cores: u32,
    pub up: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentState {
    pub label: Environment,
    pub nodes: Vec<Node>,
    /// Multiplies step cost; 1 means no interference.
    pub contention_factor: f64,
    pub model: LogLawModel,
}

impl EnvironmentState {
    /// `count` identical nodes, all up.
    pub fn uniform(
        label: Environment,
        count: u32,
        cores_per_node: u32,
        model: LogLawModel,
    ) -> Self {
        Self {
            label,
            nodes: (0..count)
                .map(|id| Node {
                    id,
                    cores: cores_per_node,
                    up: true,
                })
                .collect(),
            contention_factor: 1.0,
            model,
        }
    }

    pub fn available_cores(&self) -> u32 {
        self.nodes.iter().filter(|n| n.up).map(|n| n.cores).sum()
    }

    pub fn up_nodes(&self) -> Vec<NodeCapacity> {
        self.nodes
            .iter()
            .filter(|n| n.up)
            .map(|n| NodeCapacity {
                id: n.id,
                cores: n.cores,
            })
            .collect()
    }

    fn provision(&mut self, total_cores: u32, cores_per_node: u32) {
        self.nodes.clear();
        let mut left = total_cores;
        let mut id = 0;
        while left > 0 {
            let cores = left.min(cores_per_node);
            self.nodes.push(Node {
                id,
                cores,
                up: true,
            });
            left -= cores;
            id += 1;
        }
    }
}

/// Upper bound on the cloud allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CloudCapacity {
    pub cores_per_node: u32,
    pub max_nodes: u32,
}

impl CloudCapacity {
    pub fn max_cores(&self) -> u32 {
        self.cores_per_node.saturating_mul(self.max_nodes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    NodeDown(u32),
    NodeUp(u32),
    /// Sets the cluster contention factor.
    Contention(f64),
    DeadlineChange(f64),
}

/// A perturbation applied before step `at_step` executes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub at_step: u32,
    pub kind: EventKind,
}

/// Where the planner's column law comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitSource {
    /// The scenario's fixed split model, fed the monitor's surplus.
    Static,
    /// Refit at trigger time from the current per-column cost over the
    /// remaining steps, with burst overheads folded into the surplus.
    Calibrated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Policy {
    pub burst_enabled: bool,
    pub repeat: bool,
    pub window: usize,
    pub warmup: usize,
    pub slack_fraction: f64,
    pub split_source: SplitSource,
}

impl Default for Policy {
    fn default() -> Self {
        Self {
            burst_enabled: true,
            repeat: false,
            window: 10,
            warmup: 5,
            slack_fraction: 0.0,
            split_source: SplitSource::Calibrated,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub domain: DomainSpec,
    pub cluster: EnvironmentState,
    /// Starts with no nodes; bursts provision them.
    pub cloud: EnvironmentState,
    pub cloud_capacity: CloudCapacity,
    pub split: SplitModel,
    pub deadline_seconds: f64,
    pub overheads: OverheadParams,
    pub events: Vec<Event>,
    pub seed: u64,
    pub policy: Policy,
}

impl Scenario {
    pub const DEFAULT_OVERHEADS: OverheadParams = OverheadParams {
        checkpoint_block_bytes: 16 * 1024,
        disk_bytes_per_second: 2.0e8,
        network_bits_per_second: 1.0e9,
        provisioning_seconds: 120.0,
        sync_payload_bytes: DEFAULT_BOUNDARY_PAYLOAD_BYTES,
    };

    /// The 600 x 600 grid on two 10-core cluster nodes, up to sixteen 4-core
    /// cloud nodes, the published laws, and a deadline of 1.2x the
    /// unperturbed runtime.
    pub fn table2() -> Self {
        let mut s = Self {
            domain: DomainSpec::TABLE2,
            cluster: EnvironmentState::uniform(
                Environment::Cluster,
                2,
                10,
                LogLawModel::REFERENCE_CLUSTER,
            ),
            cloud: EnvironmentState::uniform(Environment::Cloud, 0, 4, LogLawModel::REFERENCE_CLOUD),
            cloud_capacity: CloudCapacity {
                cores_per_node: 4,
                max_nodes: 16,
            },
            split: SplitModel::REFERENCE,
            deadline_seconds: 1.0,
            overheads: Self::DEFAULT_OVERHEADS,
            events: Vec::new(),
            seed: 0,
            policy: Policy::default(),
        };
        s.deadline_seconds = 1.2 * s.baseline_runtime().expect("preset is valid");
        s
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.domain.validate()?;
        self.overheads.validate()?;
        if !(self.deadline_seconds.is_finite() && self.deadline_seconds > 0.0) {
            return Err(SimError::InvalidScenario("deadline must be positive"));
        }
        if self.cluster.label != Environment::Cluster || self.cloud.label != Environment::Cloud {
            return Err(SimError::InvalidScenario(
                "need exactly one cluster and one cloud environment",
            ));
        }
        for env in [&self.cluster, &self.cloud] {
            if !(env.contention_factor.is_finite() && env.contention_factor >= 1.0) {
                return Err(SimError::InvalidScenario(
                    "contention factor must be at least 1",
                ));
            }
        }
        if self.cloud_capacity.cores_per_node == 0 {
            return Err(SimError::InvalidScenario(
                "cloud nodes need at least one core",
            ));
        }
        if self.policy.window == 0 {
            return Err(SimError::InvalidScenario("window must be at least 1"));
        }
        if !(self.policy.slack_fraction.is_finite() && self.policy.slack_fraction >= 0.0) {
            return Err(SimError::InvalidScenario(
                "slack fraction must be non-negative",
            ));
        }
        for e in &self.events {
            if e.at_step >= self.domain.timesteps {
                return Err(SimError::InvalidScenario("event scheduled outside the run"));
            }
            match e.kind {
                EventKind::NodeDown(id) | EventKind::NodeUp(id) => {
                    if !self.cluster.nodes.iter().any(|n| n.id == id) {
                        return Err(SimError::InvalidScenario(
                            "event names an unknown cluster node",
                        ));
                    }
                }
                EventKind::Contention(f) => {
                    if !(f.is_finite() && f >= 1.0) {
                        return Err(SimError::InvalidScenario(
                            "contention factor must be at least 1",
                        ));
                    }
                }
                EventKind::DeadlineChange(d) => {
                    if !(d.is_finite() && d > 0.0) {
                        return Err(SimError::InvalidScenario("deadline must be positive"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Closed-form runtime with every column on the initial cluster and no
    /// events.
    pub fn baseline_runtime(&self) -> Result<f64, SimError> {
        Ok(self.domain.timesteps as f64 * step_time(self.domain.nx, &self.cluster, self)?)
    }

    fn sorted_events(&self) -> Vec<Event> {
        let mut events = self.events.clone();
        // stable: same-step events keep file order
        events.sort_by_key(|e| e.at_step);
        events
    }
}

/// Per-step seconds for an environment owning `columns_owned` columns.
pub fn step_time(
    columns_owned: u32,
    env: &EnvironmentState,
    scenario: &Scenario,
) -> Result<f64, SimError> {
    if columns_owned == 0 {
        return Ok(0.0);
    }
    let cores = env.available_cores();
    if cores == 0 {
        return Err(SimError::Stall(env.label));
    }
    share_time(
        &env.model,
        cores,
        columns_owned,
        env.contention_factor,
        &scenario.domain,
    )
}

fn share_time(
    model: &LogLawModel,
    cores: u32,
    columns: u32,
    contention: f64,
    domain: &DomainSpec,
) -> Result<f64, SimError> {
    let full = model.predicted_seconds(cores)? / domain.timesteps as f64;
    Ok(full * (columns as f64 / domain.nx as f64) * contention)
}

/// Barrier-synchronised hybrid step: the slower side plus the boundary
/// exchange when both sides own columns.
pub fn hybrid_step_time(
    cluster_cols: u32,
    cloud_cols: u32,
    cluster: &EnvironmentState,
    cloud: &EnvironmentState,
    scenario: &Scenario,
) -> Result<f64, SimError> {
    if cluster_cols as u64 + cloud_cols as u64 != scenario.domain.nx as u64 {
        return Err(SimError::InvalidScenario(
            "column shares must sum to the domain width",
        ));
    }
    let left = step_time(cluster_cols, cluster, scenario)?;
    let right = step_time(cloud_cols, cloud, scenario)?;
    let sync = if cluster_cols > 0 && cloud_cols > 0 {
        scenario.overheads.sync_seconds()
    } else {
        0.0
    };
    Ok(left.max(right) + sync)
}

/// How a trace row's step was judged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RowDecision {
    Warmup,
    Ok,
    BurstNeeded {
        surplus_seconds: f64,
    },
    /// First overhead row of a burst.
    Burst,
    /// Remaining overhead rows.
    Overhead,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Annotation {
    Event(EventKind),
    Plan(BurstPlan),
    PlanInfeasible {
        constraint: Constraint,
        required: u64,
        limit: u64,
    },
    /// Burst needed but the plan migrates nothing.
    PlanNoop,
    Provisioned {
        cloud_cores: u32,
    },
    Migrated {
        cloud_columns: u32,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: u64,
    pub phase: Phase,
    pub cluster_cols: u32,
    pub cloud_cols: u32,
    pub step_seconds: f64,
    pub clock_seconds: f64,
    pub estimate_seconds: Option<f64>,
    pub decision: RowDecision,
    pub annotations: Vec<Annotation>,
}

impl TraceRow {
    pub fn is_step(&self) -> bool {
        matches!(self.phase, Phase::Running | Phase::RunningHybrid)
    }

    pub fn site(&self) -> Site {
        match (self.cluster_cols, self.cloud_cols) {
            (_, 0) => Site::Cluster,
            (0, _) => Site::Cloud,
            _ => Site::Hybrid,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSummary {
    pub finished_at: f64,
    /// Deadline in force at the end of the run.
    pub deadline_seconds: f64,
    pub deadline_met: bool,
    /// Last step executed before the first burst.
    pub burst_step: Option<u64>,
    pub plans: Vec<BurstPlan>,
    /// Step that could not run because an environment had work but no cores.
    pub stalled_at: Option<u64>,
    pub final_phase: Phase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub summary: TraceSummary,
}

impl Trace {
    pub fn step_rows(&self) -> impl Iterator<Item = &TraceRow> {
        self.rows.iter().filter(|r| r.is_step())
    }

    /// Phases in order with consecutive repeats collapsed, ending in the final
    /// phase.
    pub fn phase_sequence(&self) -> Vec<Phase> {
        let mut seq: Vec<Phase> = Vec::new();
        for row in &self.rows {
            if seq.last() != Some(&row.phase) {
                seq.push(row.phase);
            }
        }
        if seq.last() != Some(&self.summary.final_phase) {
            seq.push(self.summary.final_phase);
        }
        seq
    }
}

/// Mutable run state shared by [`run`] and the oracle.
#[derive(Clone)]
struct Exec<'s> {
    scenario: &'s Scenario,
    events: &'s [Event],
    next_event: usize,
    cluster: EnvironmentState,
    cloud: EnvironmentState,
    cloud_columns: u32,
    clock: f64,
    deadline: f64,
    cached_step: Option<f64>,
}

impl<'s> Exec<'s> {
    fn new(scenario: &'s Scenario, events: &'s [Event]) -> Self {
        Self {
            scenario,
            events,
            next_event: 0,
            cluster: scenario.cluster.clone(),
            cloud: scenario.cloud.clone(),
            cloud_columns: 0,
            clock: 0.0,
            deadline: scenario.deadline_seconds,
            cached_step: None,
        }
    }

    fn nx(&self) -> u32 {
        self.scenario.domain.nx
    }

    fn cluster_columns(&self) -> u32 {
        self.nx() - self.cloud_columns
    }

    /// Applies events due before `step`; returns the indices applied.
    fn apply_events(&mut self, step: u64) -> Range<usize> {
        let first = self.next_event;
        while let Some(e) = self.events.get(self.next_event) {
            if e.at_step as u64 > step {
                break;
            }
            match e.kind {
                EventKind::NodeDown(id) | EventKind::NodeUp(id) => {
                    let up = matches!(e.kind, EventKind::NodeUp(_));
                    if let Some(n) = self.cluster.nodes.iter_mut().find(|n| n.id == id) {
                        n.up = up;
                    }
                }
                EventKind::Contention(f) => self.cluster.contention_factor = f,
                EventKind::DeadlineChange(d) => self.deadline = d,
            }
            self.cached_step = None;
            self.next_event += 1;
        }
        first..self.next_event
    }

    fn step_seconds(&mut self) -> Result<f64, SimError> {
        if let Some(t) = self.cached_step {
            return Ok(t);
        }
        let t = hybrid_step_time(
            self.cluster_columns(),
            self.cloud_columns,
            &self.cluster,
            &self.cloud,
            self.scenario,
        )?;
        self.cached_step = Some(t);
        Ok(t)
    }

    fn set_cloud(&mut self, cloud_columns: u32, cloud_cores: u32) {
        self.cloud_columns = cloud_columns;
        self.cloud
            .provision(cloud_cores, self.scenario.cloud_capacity.cores_per_node);
        self.cached_step = None;
    }

    /// Largest deadline that can still be in force at the end of the run.
    fn deadline_bound(&self) -> f64 {
        self.events[self.next_event..]
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::DeadlineChange(d) => Some(d),
                _ => None,
            })
            .fold(self.deadline, f64::max)
    }

    /// Runs steps `from..timesteps` with no controller. Gives up early once
    /// the clock passes `give_up_after`.
    fn finish_from(&mut self, from: u64, give_up_after: f64) -> Result<Option<f64>, SimError> {
        for step in from..self.scenario.domain.timesteps as u64 {
            self.apply_events(step);
            self.clock += self.step_seconds()?;
            if self.clock > give_up_after {
                return Ok(None);
            }
        }
        Ok(Some(self.clock))
    }
}

/// Runs a scenario to completion with the monitor and controller in the loop.
pub fn run(scenario: &Scenario) -> Result<Trace, SimError> {
    scenario.validate()?;
    let events = scenario.sorted_events();
    let mut exec = Exec::new(scenario, &events);
    let policy = scenario.policy;
    let total = scenario.domain.timesteps as u64;
    let mut monitor = MonitorState::new(MonitorConfig {
        window: policy.window,
        deadline_seconds: scenario.deadline_seconds,
        slack_fraction: policy.slack_fraction,
        warmup: policy.warmup,
    })?;
    let mut controller = ControllerState::new(policy.repeat);
    let mut rows: Vec<TraceRow> = Vec::with_capacity(total as usize + 8);
    let mut plans = Vec::new();
    let mut burst_step = None;
    let mut stalled_at = None;
    let mut quiet_until = 0u64;

    for step in 0..total {
        controller.set_current_step(step);
        let mut annotations: Vec<Annotation> = exec
            .apply_events(step)
            .map(|i| Annotation::Event(events[i].kind))
            .collect();
        monitor.set_deadline(exec.deadline)?;

        let dt = match exec.step_seconds() {
            Ok(dt) => dt,
            Err(SimError::Stall(_)) => {
                stalled_at = Some(step);
                break;
            }
            Err(e) => return Err(e),
        };
        exec.clock += dt;
        let site = site_of(exec.cluster_columns(), exec.cloud_columns);
        monitor.record_step(StepRecord {
            step_index: step,
            duration_seconds: dt,
            environment: site,
        })?;
        let estimate = monitor.estimate_total(total)?;
        let decision = if monitor.armed() {
            monitor.check_deadline(estimate)
        } else {
            Decision::Ok
        };
        let row_decision = match decision {
            _ if !monitor.armed() => RowDecision::Warmup,
            Decision::Ok => RowDecision::Ok,
            Decision::BurstNeeded { surplus_seconds } => {
                RowDecision::BurstNeeded { surplus_seconds }
            }
        };

        let wants_burst = decision.is_burst()
            && policy.burst_enabled
            && controller.can_burst()
            && step + 1 < total
            && step >= quiet_until;
        let planned = if wants_burst {
            Some(plan_for(&exec, &monitor, step, decision))
        } else {
            None
        };
        match &planned {
            Some(Err(SimError::Burst(BurstError::Infeasible {
                constraint,
                required,
                limit,
            }))) => {
                annotations.push(Annotation::PlanInfeasible {
                    constraint: *constraint,
                    required: *required,
                    limit: *limit,
                });
                quiet_until = step + policy.window as u64;
            }
            Some(Ok(None)) => {
                annotations.push(Annotation::PlanNoop);
                quiet_until = step + policy.window as u64;
            }
            Some(Err(e)) => return Err(e.clone()),
            _ => {}
        }

        rows.push(TraceRow {
            step,
            phase: controller.phase(),
            cluster_cols: exec.cluster_columns(),
            cloud_cols: exec.cloud_columns,
            step_seconds: dt,
            clock_seconds: exec.clock,
            estimate_seconds: Some(estimate),
            decision: row_decision,
            annotations,
        });

        if let Some(Ok(Some(plan))) = planned {
            execute_burst(&mut exec, &mut controller, &plan, step + 1, &mut rows)?;
            burst_step.get_or_insert(step);
            plans.push(plan);
            quiet_until = step + 1 + policy.window as u64;
        }
    }

    if stalled_at.is_none() {
        controller.transition(Phase::Done)?;
    }
    let finished_at = exec.clock;
    let summary = TraceSummary {
        finished_at,
        deadline_seconds: exec.deadline,
        deadline_met: stalled_at.is_none() && finished_at <= exec.deadline,
        burst_step,
        plans,
        stalled_at,
        final_phase: controller.phase(),
    };
    Ok(Trace { rows, summary })
}

fn site_of(cluster_cols: u32, cloud_cols: u32) -> Site {
    match (cluster_cols, cloud_cols) {
        (_, 0) => Site::Cluster,
        (0, _) => Site::Cloud,
        _ => Site::Hybrid,
    }
}

/// Sizes a burst after `trigger_step`. `Ok(None)` means nothing to migrate.
fn plan_for(
    exec: &Exec<'_>,
    monitor: &MonitorState,
    trigger_step: u64,
    decision: Decision,
) -> Result<Option<BurstPlan>, SimError> {
    let scenario = exec.scenario;
    let oh = &scenario.overheads;
    let nx = exec.nx();
    let total = scenario.domain.timesteps as u64;
    let remaining = total - (trigger_step + 1);
    let deadline = exec.deadline;
    let rolling_surplus = match decision {
        Decision::BurstNeeded { surplus_seconds } => surplus_seconds,
        Decision::Ok => return Ok(None),
    };

    let (surplus, split) = match scenario.policy.split_source {
        SplitSource::Static => (rolling_surplus, scenario.split),
        SplitSource::Calibrated => {
            // Size against the newest step: a window straddling a slowdown
            // underestimates the rate the burst has to absorb.
            let estimate = monitor.estimate_with_window(total, 1)?;
            let per_column = step_time(1, &exec.cluster, scenario)?;
            let saving = remaining as f64 * per_column - oh.transfer_seconds(1);
            if saving <= 0.0 {
                return Err(BurstError::Infeasible {
                    constraint: Constraint::RemainingSteps,
                    required: 1,
                    limit: remaining,
                }
                .into());
            }
            let sync = if exec.cloud_columns == 0 {
                remaining as f64 * oh.sync_seconds()
            } else {
                0.0
            };
            let fixed = oh.checkpoint_seconds(nx) + oh.provisioning_seconds + sync;
            let surplus = estimate - deadline + fixed;
            if surplus <= 0.0 {
                return Ok(None);
            }
            (surplus, SplitModel::new(saving, 0.0)?)
        }
    };

    let cloud_cores_in_use = exec.cloud.available_cores();
    let cloud_max = scenario.cloud_capacity.max_cores();
    let plan = plan_burst(&PlanRequest {
        trigger_step,
        surplus_seconds: surplus,
        cluster: &exec.cluster.model,
        cloud: &exec.cloud.model,
        split: &split,
        cluster_cores: exec.cluster.available_cores(),
        deadline_seconds: deadline,
        nx,
        cloud_columns: exec.cloud_columns,
        cloud_cores_in_use,
        cloud_max_cores: cloud_max,
        overheads: oh,
    })?;
    if plan.is_noop() {
        return Ok(None);
    }

    // The cloud must not become the bottleneck: per step it gets whatever the
    // deadline leaves after overheads, or at least the cluster's own pace.
    let cloud_columns = exec.cloud_columns + plan.gamma;
    let cluster_side = step_time(nx - cloud_columns, &exec.cluster, scenario)?;
    let budget = (deadline - exec.clock - plan.total_overhead_seconds()) / remaining as f64
        - oh.sync_seconds();
    let limit = budget.max(cluster_side);
    let cloud_model = exec.cloud.model;
    let contention = exec.cloud.contention_factor;
    let plan = raise_cloud_cores(plan, cloud_cores_in_use, cloud_max, |cores| {
        share_time(
            &cloud_model,
            cores,
            cloud_columns,
            contention,
            &scenario.domain,
        )
        .is_ok_and(|t| t <= limit)
    })?;
    Ok(Some(plan))
}

fn execute_burst(
    exec: &mut Exec<'_>,
    controller: &mut ControllerState,
    plan: &BurstPlan,
    restart_step: u64,
    rows: &mut Vec<TraceRow>,
) -> Result<(), SimError> {
    let scenario = exec.scenario;
    let spec = scenario.domain;
    let before = ExecutionState {
        step: restart_step,
        clock_seconds: exec.clock,
        spec,
        cloud_columns: exec.cloud_columns,
        cloud_cores: exec.cloud.available_cores(),
    };
    let (old_cluster, old_cloud) = (exec.cluster_columns(), exec.cloud_columns);
    let row = |phase, secs: f64, clock, cols: (u32, u32), decision, annotation| TraceRow {
        step: restart_step,
        phase,
        cluster_cols: cols.0,
        cloud_cols: cols.1,
        step_seconds: secs,
        clock_seconds: clock,
        estimate_seconds: None,
        decision,
        annotations: alloc::vec![annotation],
    };

    controller.transition(Phase::Checkpointing)?;
    let snapshot = SimSnapshot::synthetic(
        scenario.seed,
        restart_step,
        spec,
        exec.cloud_columns,
        scenario.overheads.checkpoint_block_bytes,
    );
    let checkpoint = write_checkpoint(&snapshot);
    let mut clock = exec.clock + plan.checkpoint_seconds;
    rows.push(row(
        Phase::Checkpointing,
        plan.checkpoint_seconds,
        clock,
        (old_cluster, old_cloud),
        RowDecision::Burst,
        Annotation::Plan(*plan),
    ));

    controller.transition(Phase::Provisioning)?;
    clock += plan.provisioning_seconds;
    let cloud_cores = before.cloud_cores + plan.c_n;
    rows.push(row(
        Phase::Provisioning,
        plan.provisioning_seconds,
        clock,
        (old_cluster, old_cloud),
        RowDecision::Overhead,
        Annotation::Provisioned { cloud_cores },
    ));

    controller.transition(Phase::Migrating)?;
    let restored = read_checkpoint(&checkpoint, &spec)?;
    if restored != snapshot {
        return Err(BurstError::Corrupt("restored state differs from the checkpoint").into());
    }
    let after = apply_burst(controller, &before, plan)?;
    clock += plan.transfer_seconds;
    debug_assert_eq!(clock, after.clock_seconds);
    rows.push(row(
        Phase::Migrating,
        plan.transfer_seconds,
        after.clock_seconds,
        (spec.nx - after.cloud_columns, after.cloud_columns),
        RowDecision::Overhead,
        Annotation::Migrated {
            cloud_columns: after.cloud_columns,
        },
    ));

    exec.clock = after.clock_seconds;
    exec.set_cloud(after.cloud_columns, after.cloud_cores);
    Ok(())
}

/// Simulated runtime of the whole domain on one environment with `cores`
/// cores, no events and no controller.
pub fn standalone_runtime(
    scenario: &Scenario,
    environment: Environment,
    cores: u32,
) -> Result<f64, SimError> {
    let mut solo = scenario.clone();
    solo.events.clear();
    let mut exec = Exec::new(&solo, &[]);
    match environment {
        Environment::Cluster => {
            exec.cluster.nodes = alloc::vec![Node {
                id: 0,
                cores,
                up: true
            }];
            exec.cluster.contention_factor = 1.0;
        }
        Environment::Cloud => exec.set_cloud(solo.domain.nx, cores),
    }
    exec.cached_step = None;
    Ok(exec
        .finish_from(0, f64::INFINITY)?
        .expect("no early exit without a bound"))
}

/// Smallest migrated column count that meets the deadline, with the smallest
/// cloud core count that achieves it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub gamma: u32,
    pub cloud_cores: u32,
    pub finished_at: f64,
}

/// Exhaustive search over every split `gamma` in `[0, nx]` and every cloud
/// size up to the maximum, bursting right after `trigger_step`. The run up to
/// the trigger replays the scenario with bursting disabled, and `gamma = 0`
/// means no burst at all. Overheads are charged exactly as a real burst
/// charges them.
pub fn brute_force_min_gamma(
    scenario: &Scenario,
    trigger_step: u64,
) -> Result<Option<OracleResult>, SimError> {
    scenario.validate()?;
    let total = scenario.domain.timesteps as u64;
    if trigger_step >= total {
        return Err(SimError::InvalidScenario("trigger step outside the run"));
    }
    let events = scenario.sorted_events();
    let mut prefix = Exec::new(scenario, &events);
    for step in 0..=trigger_step {
        prefix.apply_events(step);
        match prefix.step_seconds() {
            Ok(dt) => prefix.clock += dt,
            Err(SimError::Stall(_)) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    let restart = trigger_step + 1;
    let give_up = prefix.deadline_bound();
    let nx = scenario.domain.nx;
    let oh = &scenario.overheads;
    let max_cores = scenario.cloud_capacity.max_cores();

    let attempt = |gamma: u32, cores: u32| -> Result<Option<f64>, SimError> {
        let mut e = prefix.clone();
        if gamma > 0 {
            e.clock += oh.checkpoint_seconds(nx);
            e.clock += oh.provisioning_seconds;
            e.clock += oh.transfer_seconds(gamma);
            e.set_cloud(gamma, cores);
        }
        let finished = match e.finish_from(restart, give_up) {
            Ok(f) => f,
            Err(SimError::Stall(_)) => None,
            Err(err) => return Err(err),
        };
        Ok(finished.filter(|&t| t <= e.deadline))
    };

    if let Some(finished_at) = attempt(0, 0)? {
        return Ok(Some(OracleResult {
            gamma: 0,
            cloud_cores: 0,
            finished_at,
        }));
    }
    for gamma in 1..=nx {
        // Cloud step cost only falls as cores grow, so if the largest
        // allocation misses, every smaller one does too.
        if attempt(gamma, max_cores)?.is_none() {
            continue;
        }
        for cores in 1..=max_cores {
            if let Some(finished_at) = attempt(gamma, cores)? {
                return Ok(Some(OracleResult {
                    gamma,
                    cloud_cores: cores,
                    finished_at,
                }));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{ln, pow10};

    fn preset() -> Scenario {
        Scenario::table2()
    }

    #[test]
    fn step_time_examples() {
        let s = preset();
        assert_eq!(step_time(0, &s.cluster, &s).unwrap(), 0.0);
        let full = step_time(600, &s.cluster, &s).unwrap();
        let expected = pow10(6.5 - 0.65 * ln(20.0)) / 3000.0;
        assert!((full - expected).abs() < 1e-12);
        assert!((full - 11.902_899_520_404_862).abs() < 1e-9);
        assert_eq!(step_time(300, &s.cluster, &s).unwrap(), full / 2.0);
    }

    #[test]
    fn step_time_stalls_without_cores() {
        let s = preset();
        assert_eq!(
            step_time(1, &s.cloud, &s),
            Err(SimError::Stall(Environment::Cloud))
        );
        assert_eq!(step_time(0, &s.cloud, &s).unwrap(), 0.0);
    }

    #[test]
    fn hybrid_examples() {
        let s = preset();
        let full = step_time(600, &s.cluster, &s).unwrap();
        assert_eq!(
            hybrid_step_time(600, 0, &s.cluster, &s.cloud, &s).unwrap(),
            full
        );

        let mut twin = s.cluster.clone();
        twin.label = Environment::Cloud;
        let t = hybrid_step_time(300, 300, &s.cluster, &twin, &s).unwrap();
        assert!((t - (full / 2.0 + 0.000_172_032)).abs() < 1e-12);

        let slow = EnvironmentState::uniform(Environment::Cloud, 1, 4, LogLawModel::REFERENCE_CLOUD);
        let cloud_side = step_time(300, &slow, &s).unwrap();
        assert!(cloud_side > full / 2.0);
        let t = hybrid_step_time(300, 300, &s.cluster, &slow, &s).unwrap();
        assert_eq!(t, cloud_side + s.overheads.sync_seconds());

        assert!(hybrid_step_time(300, 200, &s.cluster, &twin, &s).is_err());
    }

    #[test]
    fn generous_deadline_matches_closed_form() {
        let s = preset();
        let trace = run(&s).unwrap();
        assert_eq!(trace.summary.burst_step, None);
        assert!(trace.summary.deadline_met);
        let closed = s.baseline_runtime().unwrap();
        assert!((trace.summary.finished_at - closed).abs() / closed < 1e-9);
        assert_eq!(trace.rows.len(), 3000);
        assert_eq!(trace.phase_sequence(), [Phase::Running, Phase::Done]);
    }

    fn contended() -> Scenario {
        let mut s = preset();
        s.events.push(Event {
            at_step: 500,
            kind: EventKind::Contention(2.0),
        });
        s
    }

    #[test]
    fn contention_triggers_a_burst_that_meets_the_deadline() {
        let s = contended();
        let trace = run(&s).unwrap();
        let k = trace.summary.burst_step.expect("burst fired");
        assert!((500..=510).contains(&k), "burst at {k}");
        assert!(trace.summary.deadline_met);
        let plan = trace.summary.plans[0];
        let oracle = brute_force_min_gamma(&s, k).unwrap().expect("feasible");
        assert!(plan.gamma >= oracle.gamma);
        let a = plan.split.slope_a();
        let b = plan.split.intercept_b();
        assert!(plan.gamma as f64 <= oracle.gamma as f64 + libm::ceil(b / a) + 1.0);
        assert_eq!(
            trace.phase_sequence(),
            [
                Phase::Running,
                Phase::Checkpointing,
                Phase::Provisioning,
                Phase::Migrating,
                Phase::RunningHybrid,
                Phase::Done
            ]
        );

        let mut off = s.clone();
        off.policy.burst_enabled = false;
        let trace = run(&off).unwrap();
        assert!(!trace.summary.deadline_met);
    }

    #[test]
    fn deadline_change_flips_the_decision_not_the_estimate() {
        let base = preset();
        let mut halved = base.clone();
        halved.events.push(Event {
            at_step: 100,
            kind: EventKind::DeadlineChange(base.deadline_seconds / 2.0),
        });
        halved.policy.burst_enabled = false;
        let a = run(&base).unwrap();
        let b = run(&halved).unwrap();
        assert_eq!(a.rows[100].estimate_seconds, b.rows[100].estimate_seconds);
        assert_eq!(a.rows[100].decision, RowDecision::Ok);
        assert!(matches!(
            b.rows[100].decision,
            RowDecision::BurstNeeded { .. }
        ));
        assert!(matches!(b.rows[99].decision, RowDecision::Ok));
    }

    #[test]
    fn standalone_matches_closed_form() {
        let s = preset();
        for env in [Environment::Cluster, Environment::Cloud] {
            let model = if env == Environment::Cluster {
                LogLawModel::REFERENCE_CLUSTER
            } else {
                LogLawModel::REFERENCE_CLOUD
            };
            for cores in [1, 10, 40] {
                let t = standalone_runtime(&s, env, cores).unwrap();
                let closed = model.predicted_seconds(cores).unwrap();
                assert!((t - closed).abs() / closed < 1e-9, "{env} {cores}");
            }
        }
    }

    #[test]
    fn oracle_edge_cases() {
        let s = preset();
        assert_eq!(brute_force_min_gamma(&s, 100).unwrap().unwrap().gamma, 0);
        let mut tight = preset();
        tight.deadline_seconds = 10.0;
        assert_eq!(brute_force_min_gamma(&tight, 100).unwrap(), None);
    }

    #[test]
    fn stall_ends_the_run() {
        let mut s = preset();
        for id in 0..2 {
            s.events.push(Event {
                at_step: 10,
                kind: EventKind::NodeDown(id),
            });
        }
        let trace = run(&s).unwrap();
        assert_eq!(trace.summary.stalled_at, Some(10));
        assert!(!trace.summary.deadline_met);
        assert_eq!(trace.rows.len(), 10);
    }

    #[test]
    fn node_down_slows_the_cluster() {
        let mut s = preset();
        s.policy.burst_enabled = false;
        s.events.push(Event {
            at_step: 10,
            kind: EventKind::NodeDown(1),
        });
        let trace = run(&s).unwrap();
        let before = trace.rows[9].step_seconds;
        let after = trace.rows[10].step_seconds;
        let ratio = pow10(0.65 * ln(2.0));
        assert!((after / before - ratio).abs() < 1e-9);
    }

    #[test]
    fn invalid_scenarios_are_rejected() {
        let mut s = preset();
        s.events.push(Event {
            at_step: 3000,
            kind: EventKind::Contention(2.0),
        });
        assert!(run(&s).is_err());
        let mut s = preset();
        s.events.push(Event {
            at_step: 1,
            kind: EventKind::NodeDown(9),
        });
        assert!(run(&s).is_err());
        let mut s = preset();
        s.deadline_seconds = 0.0;
        assert!(run(&s).is_err());
    }
}
