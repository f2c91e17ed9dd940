//! Per-step timing records and the rolling total-time estimate.

use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MonitorError {
    #[error("step {got} recorded out of order, expected {expected}")]
    Sequencing { expected: u64, got: u64 },
    #[error("step duration must be positive and finite, got {0}")]
    InvalidDuration(f64),
    #[error("no steps recorded yet")]
    InsufficientData,
    #[error("total steps {total} is less than the {recorded} already recorded")]
    TotalTooSmall { total: u64, recorded: u64 },
    #[error("invalid monitor configuration: {0}")]
    Configuration(&'static str),
}

/// Where a step ran.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Site {
    Cluster,
    Cloud,
    Hybrid,
}

impl Site {
    pub fn as_str(self) -> &'static str {
        match self {
            Site::Cluster => "cluster",
            Site::Cloud => "cloud",
            Site::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step_index: u64,
    pub duration_seconds: f64,
    pub environment: Site,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decision {
    Ok,
    BurstNeeded { surplus_seconds: f64 },
}

impl Decision {
    pub fn is_burst(&self) -> bool {
        matches!(self, Decision::BurstNeeded { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorConfig {
    /// Width of the rolling mean over recent step durations.
    pub window: usize,
    pub deadline_seconds: f64,
    /// Hysteresis: fire only above `deadline * (1 + slack_fraction)`.
    pub slack_fraction: f64,
    /// Steps that must be observed before the deadline check may fire.
    pub warmup: usize,
}

impl MonitorConfig {
    pub fn new(deadline_seconds: f64) -> Self {
        Self {
            window: 10,
            deadline_seconds,
            slack_fraction: 0.0,
            warmup: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorState {
    records: Vec<StepRecord>,
    elapsed: f64,
    config: MonitorConfig,
}

impl MonitorState {
    pub fn new(config: MonitorConfig) -> Result<Self, MonitorError> {
        if config.window == 0 {
            return Err(MonitorError::Configuration("window must be at least 1"));
        }
        check_deadline_value(config.deadline_seconds)?;
        if !(config.slack_fraction.is_finite() && config.slack_fraction >= 0.0) {
            return Err(MonitorError::Configuration(
                "slack fraction must be non-negative",
            ));
        }
        Ok(Self {
            records: Vec::new(),
            elapsed: 0.0,
            config,
        })
    }

    pub fn config(&self) -> &MonitorConfig {
        &self.config
    }

    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    pub fn deadline_seconds(&self) -> f64 {
        self.config.deadline_seconds
    }

    pub fn set_deadline(&mut self, deadline_seconds: f64) -> Result<(), MonitorError> {
        check_deadline_value(deadline_seconds)?;
        self.config.deadline_seconds = deadline_seconds;
        Ok(())
    }

    /// Sum of all recorded durations.
    pub fn elapsed_seconds(&self) -> f64 {
        self.elapsed
    }

    /// True once the warm-up steps have been observed.
    pub fn armed(&self) -> bool {
        self.records.len() >= self.config.warmup
    }

    pub fn record_step(&mut self, record: StepRecord) -> Result<(), MonitorError> {
        let expected = self.records.last().map_or(0, |r| r.step_index + 1);
        if record.step_index != expected {
            return Err(MonitorError::Sequencing {
                expected,
                got: record.step_index,
            });
        }
        if !(record.duration_seconds.is_finite() && record.duration_seconds > 0.0) {
            return Err(MonitorError::InvalidDuration(record.duration_seconds));
        }
        self.elapsed += record.duration_seconds;
        self.records.push(record);
        Ok(())
    }

    /// Mean of the last `window` durations.
    pub fn recent_mean(&self, window: usize) -> Result<f64, MonitorError> {
        if self.records.is_empty() {
            return Err(MonitorError::InsufficientData);
        }
        let take = window.max(1).min(self.records.len());
        let tail = &self.records[self.records.len() - take..];
        Ok(tail.iter().map(|r| r.duration_seconds).sum::<f64>() / take as f64)
    }

    /// Elapsed time plus the rolling mean times the steps still to run.
    pub fn estimate_total(&self, total_steps: u64) -> Result<f64, MonitorError> {
        self.estimate_with_window(total_steps, self.config.window)
    }

    /// [`estimate_total`](Self::estimate_total) with an explicit window;
    /// `window = 1` extrapolates the most recent step.
    pub fn estimate_with_window(
        &self,
        total_steps: u64,
        window: usize,
    ) -> Result<f64, MonitorError> {
        let recorded = self.records.len() as u64;
        if recorded == 0 {
            return Err(MonitorError::InsufficientData);
        }
        if total_steps < recorded {
            return Err(MonitorError::TotalTooSmall {
                total: total_steps,
                recorded,
            });
        }
        let remaining = total_steps - recorded;
        if remaining == 0 {
            return Ok(self.elapsed);
        }
        Ok(self.elapsed + self.recent_mean(window)? * remaining as f64)
    }

    pub fn check_deadline(&self, estimate: f64) -> Decision {
        check_deadline(&self.config, estimate)
    }
}

fn check_deadline_value(deadline: f64) -> Result<(), MonitorError> {
    if deadline.is_finite() && deadline > 0.0 {
        Ok(())
    } else {
        Err(MonitorError::Configuration("deadline must be positive"))
    }
}

/// Fires when the estimate strictly exceeds the deadline plus slack. The
/// surplus is measured against the bare deadline.
pub fn check_deadline(config: &MonitorConfig, estimate: f64) -> Decision {
    let threshold = config.deadline_seconds * (1.0 + config.slack_fraction);
    if estimate > threshold {
        Decision::BurstNeeded {
            surplus_seconds: estimate - config.deadline_seconds,
        }
    } else {
        Decision::Ok
    }
}
