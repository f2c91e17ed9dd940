//! Deadline-aware cloud bursting for timestep-parallel solvers.
//!
//! The crate is split along the control loop it models:
//!
//! - [`perfmodel`]: the logarithmic runtime law, its least-squares calibration,
//!   the cloud/cluster correction factor and the inversions that yield core
//!   counts and the migrated column count.
//! - [`domain`]: the 2D element grid, its column split between the cluster and
//!   the cloud, and greedy stripe-to-core assignment.
//! - [`monitor`]: per-step timing records and the rolling total-time estimate.
//! - [`burst`]: the burst controller state machine, plans and checkpoints.
//! - [`sim`]: a deterministic discrete-event simulator with the monitor and the
//!   controller in the loop, plus an exhaustive search oracle.
//!
//! Everything here is pure computation over `alloc`; file formats, IO and the
//! command line live in the `burstline` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod burst;
pub mod domain;
pub mod monitor;
pub mod perfmodel;
pub mod sim;

mod math;

use core::fmt;
use core::str::FromStr;

/// Execution environment tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Environment {
    Cluster,
    Cloud,
}

impl Environment {
    pub fn as_str(self) -> &'static str {
        match self {
            Environment::Cluster => "cluster",
            Environment::Cloud => "cloud",
        }
    }
}

impl fmt::Display for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Error returned when parsing an [`Environment`] tag.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown environment tag `{0}` (expected `cluster` or `cloud`)")]
pub struct UnknownEnvironment(pub alloc::string::String);

impl FromStr for Environment {
    type Err = UnknownEnvironment;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cluster" => Ok(Environment::Cluster),
            "cloud" => Ok(Environment::Cloud),
            other => Err(UnknownEnvironment(other.into())),
        }
    }
}
