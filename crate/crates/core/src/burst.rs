//! The burst controller.
//!
//! A burst walks `Running -> Checkpointing -> Provisioning -> Migrating ->
//! RunningHybrid`; a run ends in `Done`. [`plan_burst`] sizes the cloud
//! allocation and the migrated column block, [`write_checkpoint`] and
//! [`read_checkpoint`] capture and restore the state that moves, and
//! [`apply_burst`] installs the new configuration and charges the overheads.

use alloc::vec::Vec;
use core::fmt;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::domain::{DomainError, DomainSpec};
use crate::perfmodel::{
    cloud_cores, correction_factor, gamma_for_time, required_cores, LogLawModel, ModelError,
    SplitModel,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BurstError {
    #[error("surplus must be positive, got {0} s")]
    NonPositiveSurplus(f64),
    #[error("infeasible burst: {constraint} needs {required}, limit is {limit}")]
    Infeasible {
        constraint: Constraint,
        required: u64,
        limit: u64,
    },
    #[error("illegal controller transition {from} -> {to}")]
    PhaseViolation { from: Phase, to: Phase },
    #[error("corrupt checkpoint: {0}")]
    Corrupt(&'static str),
    #[error("invalid overhead parameters: {0}")]
    Overheads(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// The limit a plan ran into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// Migrated columns would exceed the domain width.
    Gamma,
    /// Cloud cores would exceed the configured maximum.
    CloudCores,
    /// Not enough steps remain for migration to pay off.
    RemainingSteps,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Constraint::Gamma => "gamma",
            Constraint::CloudCores => "cloud_cores",
            Constraint::RemainingSteps => "remaining_steps",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Running,
    Checkpointing,
    Provisioning,
    Migrating,
    RunningHybrid,
    Done,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Running => "Running",
            Phase::Checkpointing => "Checkpointing",
            Phase::Provisioning => "Provisioning",
            Phase::Migrating => "Migrating",
            Phase::RunningHybrid => "RunningHybrid",
            Phase::Done => "Done",
        }
    }

    pub fn parse(s: &str) -> Option<Phase> {
        Some(match s {
            "Running" => Phase::Running,
            "Checkpointing" => Phase::Checkpointing,
            "Provisioning" => Phase::Provisioning,
            "Migrating" => Phase::Migrating,
            "RunningHybrid" => Phase::RunningHybrid,
            "Done" => Phase::Done,
            _ => return None,
        })
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    phase: Phase,
    current_step: u64,
    active_plan: Option<BurstPlan>,
    bursts: u32,
    repeat: bool,
}

impl ControllerState {
    /// `repeat` allows `RunningHybrid -> Checkpointing`, i.e. more than one
    /// burst per run.
    pub fn new(repeat: bool) -> Self {
        Self {
            phase: Phase::Running,
            current_step: 0,
            active_plan: None,
            bursts: 0,
            repeat,
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn current_step(&self) -> u64 {
        self.current_step
    }

    pub fn set_current_step(&mut self, step: u64) {
        self.current_step = step;
    }

    pub fn active_plan(&self) -> Option<&BurstPlan> {
        self.active_plan.as_ref()
    }

    pub fn bursts(&self) -> u32 {
        self.bursts
    }

    pub fn can_burst(&self) -> bool {
        match self.phase {
            Phase::Running => true,
            Phase::RunningHybrid => self.repeat,
            _ => false,
        }
    }

    pub fn transition(&mut self, to: Phase) -> Result<(), BurstError> {
        use Phase::*;
        let legal = matches!(
            (self.phase, to),
            (Running, Checkpointing)
                | (Running, Done)
                | (Checkpointing, Provisioning)
                | (Provisioning, Migrating)
                | (Migrating, RunningHybrid)
                | (RunningHybrid, Done)
        ) || (self.repeat && self.phase == RunningHybrid && to == Checkpointing);
        if !legal {
            return Err(BurstError::PhaseViolation {
                from: self.phase,
                to,
            });
        }
        self.phase = to;
        Ok(())
    }
}

/// Fixed costs of moving part of the run to the cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverheadParams {
    /// Checkpointed state per element column.
    pub checkpoint_block_bytes: u64,
    pub disk_bytes_per_second: f64,
    pub network_bits_per_second: f64,
    pub provisioning_seconds: f64,
    /// Boundary exchange per hybrid step.
    pub sync_payload_bytes: u64,
}

impl OverheadParams {
    pub fn validate(&self) -> Result<(), BurstError> {
        if self.checkpoint_block_bytes == 0 {
            return Err(BurstError::Overheads(
                "checkpoint block size must be at least 1 byte",
            ));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.disk_bytes_per_second) {
            return Err(BurstError::Overheads("disk rate must be positive"));
        }
        if !positive(self.network_bits_per_second) {
            return Err(BurstError::Overheads("network bandwidth must be positive"));
        }
        if !positive(self.provisioning_seconds) {
            return Err(BurstError::Overheads("provisioning delay must be positive"));
        }
        Ok(())
    }

    pub fn checkpoint_bytes(&self, nx: u32) -> u64 {
        self.checkpoint_block_bytes * nx as u64
    }

    pub fn checkpoint_seconds(&self, nx: u32) -> f64 {
        self.checkpoint_bytes(nx) as f64 / self.disk_bytes_per_second
    }

    /// Shipping the state of `gamma` columns: `checkpoint_bytes * gamma / nx`
    /// over the network.
    pub fn transfer_seconds(&self, gamma: u32) -> f64 {
        (self.checkpoint_block_bytes as f64 * gamma as f64 * 8.0) / self.network_bits_per_second
    }

    pub fn sync_seconds(&self) -> f64 {
        self.sync_payload_bytes as f64 * 8.0 / self.network_bits_per_second
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurstPlan {
    /// Last step executed before the burst.
    pub trigger_step: u64,
    pub surplus_seconds: f64,
    pub split: SplitModel,
    pub c_required: u32,
    pub correction_factor: f64,
    /// Cloud cores from the core-deficit formula alone.
    pub c_n_formula: u32,
    /// Cloud cores to add in this burst.
    pub c_n: u32,
    /// Columns to migrate in this burst.
    pub gamma: u32,
    pub checkpoint_bytes: u64,
    pub checkpoint_seconds: f64,
    pub provisioning_seconds: f64,
    pub transfer_seconds: f64,
}

impl BurstPlan {
    pub fn is_noop(&self) -> bool {
        self.gamma == 0
    }

    pub fn total_overhead_seconds(&self) -> f64 {
        self.checkpoint_seconds + self.provisioning_seconds + self.transfer_seconds
    }
}

/// Everything [`plan_burst`] needs.
#[derive(Debug, Clone, Copy)]
pub struct PlanRequest<'a> {
    pub trigger_step: u64,
    pub surplus_seconds: f64,
    pub cluster: &'a LogLawModel,
    pub cloud: &'a LogLawModel,
    pub split: &'a SplitModel,
    pub cluster_cores: u32,
    pub deadline_seconds: f64,
    pub nx: u32,
    /// Columns already in the cloud from earlier bursts.
    pub cloud_columns: u32,
    /// Cloud cores already provisioned by earlier bursts.
    pub cloud_cores_in_use: u32,
    pub cloud_max_cores: u32,
    pub overheads: &'a OverheadParams,
}

/// Sizes a burst: required cores from the cluster law, the correction factor
/// at that core count, cloud cores from the core deficit, and migrated
/// columns from the split law applied to the surplus.
pub fn plan_burst(req: &PlanRequest<'_>) -> Result<BurstPlan, BurstError> {
    if !(req.surplus_seconds.is_finite() && req.surplus_seconds > 0.0) {
        return Err(BurstError::NonPositiveSurplus(req.surplus_seconds));
    }
    req.overheads.validate()?;
    let c_required = required_cores(req.cluster, req.deadline_seconds)?;
    let k = correction_factor(req.cloud, req.cluster, c_required)?;
    let c_n_formula = cloud_cores(c_required, req.cluster_cores, k)?;
    let gamma = gamma_for_time(req.split, req.surplus_seconds);

    let free_columns = req.nx.saturating_sub(req.cloud_columns);
    if gamma > free_columns {
        return Err(BurstError::Infeasible {
            constraint: Constraint::Gamma,
            required: req.cloud_columns as u64 + gamma as u64,
            limit: req.nx as u64,
        });
    }

    let checkpoint_bytes = req.overheads.checkpoint_bytes(req.nx);
    let checkpoint_seconds = req.overheads.checkpoint_seconds(req.nx);
    let (c_n, provisioning_seconds, transfer_seconds) = if gamma == 0 {
        (0, 0.0, 0.0)
    } else {
        (
            c_n_formula,
            req.overheads.provisioning_seconds,
            req.overheads.transfer_seconds(gamma),
        )
    };
    let total_cloud = req.cloud_cores_in_use as u64 + c_n as u64;
    if total_cloud > req.cloud_max_cores as u64 {
        return Err(BurstError::Infeasible {
            constraint: Constraint::CloudCores,
            required: total_cloud,
            limit: req.cloud_max_cores as u64,
        });
    }

    Ok(BurstPlan {
        trigger_step: req.trigger_step,
        surplus_seconds: req.surplus_seconds,
        split: *req.split,
        c_required,
        correction_factor: k,
        c_n_formula,
        c_n,
        gamma,
        checkpoint_bytes,
        checkpoint_seconds,
        provisioning_seconds,
        transfer_seconds,
    })
}

/// Grows the plan's cloud cores to the smallest total for which `keeps_pace`
/// holds, never shrinking below what the plan already asks for.
///
/// `keeps_pace` receives the total cloud core count after the burst.
pub fn raise_cloud_cores(
    mut plan: BurstPlan,
    cloud_cores_in_use: u32,
    cloud_max_cores: u32,
    mut keeps_pace: impl FnMut(u32) -> bool,
) -> Result<BurstPlan, BurstError> {
    if plan.is_noop() {
        return Ok(plan);
    }
    let floor = cloud_cores_in_use
        .saturating_add(plan.c_n)
        .max(cloud_cores_in_use.saturating_add(1));
    let total =
        (floor..=cloud_max_cores)
            .find(|&c| keeps_pace(c))
            .ok_or(BurstError::Infeasible {
                constraint: Constraint::CloudCores,
                required: floor.max(cloud_max_cores.saturating_add(1)) as u64,
                limit: cloud_max_cores as u64,
            })?;
    plan.c_n = total - cloud_cores_in_use;
    Ok(plan)
}

/// The parts of a run that a burst changes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExecutionState {
    /// Next step to execute.
    pub step: u64,
    pub clock_seconds: f64,
    pub spec: DomainSpec,
    pub cloud_columns: u32,
    pub cloud_cores: u32,
}

/// Installs a plan: re-splits the domain, adds the cloud cores and charges
/// checkpoint, provisioning and transfer time. The step counter is untouched
/// so the run restarts at the step where it stopped.
pub fn apply_burst(
    controller: &mut ControllerState,
    state: &ExecutionState,
    plan: &BurstPlan,
) -> Result<ExecutionState, BurstError> {
    if controller.phase != Phase::Migrating {
        return Err(BurstError::PhaseViolation {
            from: controller.phase,
            to: Phase::RunningHybrid,
        });
    }
    let cloud_columns = state.cloud_columns + plan.gamma;
    if cloud_columns > state.spec.nx {
        return Err(BurstError::Infeasible {
            constraint: Constraint::Gamma,
            required: cloud_columns as u64,
            limit: state.spec.nx as u64,
        });
    }
    controller.transition(Phase::RunningHybrid)?;
    controller.active_plan = Some(*plan);
    controller.bursts += 1;
    let mut clock = state.clock_seconds;
    clock += plan.checkpoint_seconds;
    clock += plan.provisioning_seconds;
    clock += plan.transfer_seconds;
    Ok(ExecutionState {
        step: state.step,
        clock_seconds: clock,
        spec: state.spec,
        cloud_columns,
        cloud_cores: state.cloud_cores + plan.c_n,
    })
}

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckpointHeader {
    pub version: u32,
    pub step_index: u64,
    pub nx: u32,
    pub ny: u32,
    /// Cloud-owned columns at the time of the checkpoint.
    pub gamma: u32,
    pub payload_block_size: u64,
}

/// Header plus one state block per element column, stored contiguously.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub payload: Vec<u8>,
}

impl Checkpoint {
    pub fn validate(&self) -> Result<(), BurstError> {
        let h = &self.header;
        if h.version != CHECKPOINT_VERSION {
            return Err(BurstError::Corrupt("unsupported version"));
        }
        if h.payload_block_size == 0 {
            return Err(BurstError::Corrupt("zero block size"));
        }
        if h.gamma > h.nx {
            return Err(BurstError::Corrupt("gamma exceeds column count"));
        }
        let expected = (h.nx as u64)
            .checked_mul(h.payload_block_size)
            .ok_or(BurstError::Corrupt("payload size overflows"))?;
        if self.payload.len() as u64 != expected {
            return Err(BurstError::Corrupt(
                "payload block count does not match column count",
            ));
        }
        Ok(())
    }

    pub fn block_count(&self) -> u64 {
        self.payload.len() as u64 / self.header.payload_block_size.max(1)
    }

    pub fn block(&self, column: u32) -> Option<&[u8]> {
        let size = self.header.payload_block_size as usize;
        let start = column as usize * size;
        self.payload.get(start..start + size)
    }
}

/// What a checkpoint captures: the restart step, ownership and per-column state.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSnapshot {
    pub step_index: u64,
    pub spec: DomainSpec,
    pub gamma: u32,
    pub block_size: u64,
    pub payload: Vec<u8>,
}

impl SimSnapshot {
    /// Snapshot with deterministic synthetic column blocks derived from `seed`
    /// and the step.
    pub fn synthetic(
        seed: u64,
        step_index: u64,
        spec: DomainSpec,
        gamma: u32,
        block_size: u64,
    ) -> Self {
        Self {
            step_index,
            spec,
            gamma,
            block_size,
            payload: synthetic_payload(seed, step_index, spec.nx, block_size),
        }
    }
}

/// One ChaCha stream per column so blocks are independent of each other.
pub fn synthetic_payload(seed: u64, step: u64, nx: u32, block_size: u64) -> Vec<u8> {
    let mut payload = alloc::vec![0u8; nx as usize * block_size as usize];
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ step.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    for (column, block) in payload
        .chunks_exact_mut(block_size.max(1) as usize)
        .enumerate()
    {
        rng.set_stream(column as u64);
        rng.set_word_pos(0);
        rng.fill_bytes(block);
    }
    payload
}

pub fn write_checkpoint(state: &SimSnapshot) -> Checkpoint {
    Checkpoint {
        header: CheckpointHeader {
            version: CHECKPOINT_VERSION,
            step_index: state.step_index,
            nx: state.spec.nx,
            ny: state.spec.ny,
            gamma: state.gamma,
            payload_block_size: state.block_size,
        },
        payload: state.payload.clone(),
    }
}

/// Restores a snapshot. The checkpoint carries only the grid dimensions, so
/// the full domain description is supplied by the caller and must agree.
pub fn read_checkpoint(
    checkpoint: &Checkpoint,
    spec: &DomainSpec,
) -> Result<SimSnapshot, BurstError> {
    checkpoint.validate()?;
    let h = &checkpoint.header;
    if h.nx != spec.nx || h.ny != spec.ny {
        return Err(BurstError::Corrupt(
            "grid dimensions do not match the domain",
        ));
    }
    Ok(SimSnapshot {
        step_index: h.step_index,
        spec: *spec,
        gamma: h.gamma,
        block_size: h.payload_block_size,
        payload: checkpoint.payload.clone(),
    })
}
