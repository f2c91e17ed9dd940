//! The 2D spectral-element grid and its column decomposition.
//!
//! The height axis is fixed and the grid is cut along element columns: the
//! cloud owns the rightmost `gamma` columns and the cluster owns the rest.
//! Inside an environment every column is a stripe that is greedily packed onto
//! the cores of one node before spilling onto the next.

use alloc::vec::Vec;
use core::ops::Range;

use crate::Environment;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DomainError {
    #[error("invalid domain: {0}")]
    InvalidSpec(&'static str),
    #[error("gamma {gamma} outside [0, {nx}]")]
    GammaOutOfRange { gamma: u32, nx: u32 },
    #[error("partitions are inconsistent: {0}")]
    Inconsistent(&'static str),
    #[error("configuration error: {0}")]
    Configuration(&'static str),
    #[error("partitions are not adjacent")]
    NotAdjacent,
}

/// Grid description: element counts, polynomial orders, physical extent and
/// run length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    pub nx: u32,
    pub ny: u32,
    pub px: u32,
    pub py: u32,
    pub width: f64,
    pub height: f64,
    pub timesteps: u32,
}

impl DomainSpec {
    /// 600 x 600 elements of order 4 over 9000 x 6000, 3000 steps.
    pub const TABLE2: DomainSpec = DomainSpec {
        nx: 600,
        ny: 600,
        px: 4,
        py: 4,
        width: 9000.0,
        height: 6000.0,
        timesteps: 3000,
    };

    pub fn validate(&self) -> Result<(), DomainError> {
        if self.nx == 0 || self.ny == 0 {
            return Err(DomainError::InvalidSpec(
                "element counts must be at least 1",
            ));
        }
        if self.px == 0 || self.py == 0 {
            return Err(DomainError::InvalidSpec(
                "polynomial orders must be at least 1",
            ));
        }
        if self.timesteps == 0 {
            return Err(DomainError::InvalidSpec("timesteps must be at least 1"));
        }
        if !(self.width.is_finite()
            && self.width > 0.0
            && self.height.is_finite()
            && self.height > 0.0)
        {
            return Err(DomainError::InvalidSpec("physical size must be positive"));
        }
        Ok(())
    }

    pub fn degrees_of_freedom(&self) -> u64 {
        degrees_of_freedom(self)
    }
}

/// Grid points of a tensor-product element mesh, `(nx*px + 1) * (ny*py + 1)`.
pub fn degrees_of_freedom(spec: &DomainSpec) -> u64 {
    (spec.nx as u64 * spec.px as u64 + 1) * (spec.ny as u64 * spec.py as u64 + 1)
}

/// A contiguous block of element columns owned by one environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partition {
    pub owner: Environment,
    pub start: u32,
    pub end: u32,
    pub spec: DomainSpec,
}

impl Partition {
    pub fn columns(&self) -> Range<u32> {
        self.start..self.end
    }

    pub fn width(&self) -> u32 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Splits off the rightmost `gamma` columns for the cloud.
pub fn split_domain(spec: &DomainSpec, gamma: u32) -> Result<(Partition, Partition), DomainError> {
    if gamma > spec.nx {
        return Err(DomainError::GammaOutOfRange { gamma, nx: spec.nx });
    }
    let cut = spec.nx - gamma;
    let cluster = Partition {
        owner: Environment::Cluster,
        start: 0,
        end: cut,
        spec: *spec,
    };
    let cloud = Partition {
        owner: Environment::Cloud,
        start: cut,
        end: spec.nx,
        spec: *spec,
    };
    Ok((cluster, cloud))
}

/// Inverse of [`split_domain`].
pub fn merge_partitions(cluster: &Partition, cloud: &Partition) -> Result<DomainSpec, DomainError> {
    if cluster.spec != cloud.spec {
        return Err(DomainError::Inconsistent(
            "partitions refer to different domains",
        ));
    }
    if cluster.owner != Environment::Cluster || cloud.owner != Environment::Cloud {
        return Err(DomainError::Inconsistent("partition owners are swapped"));
    }
    let nx = cluster.spec.nx;
    if cluster.start > cluster.end || cloud.start > cloud.end || cloud.end > nx {
        return Err(DomainError::Inconsistent("column range out of bounds"));
    }
    if cluster.start != 0 || cloud.end != nx {
        return Err(DomainError::Inconsistent(
            "partitions do not cover the domain",
        ));
    }
    if cluster.end < cloud.start {
        return Err(DomainError::Inconsistent("gap between partitions"));
    }
    if cluster.end > cloud.start {
        return Err(DomainError::Inconsistent("partitions overlap"));
    }
    Ok(cluster.spec)
}

/// A compute node and how many cores it offers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeCapacity {
    pub id: u32,
    pub cores: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoreSlot {
    pub node: u32,
    pub core: u32,
}

/// Column-to-core map for one partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StripeAssignment {
    first_column: u32,
    slots: Vec<CoreSlot>,
}

impl StripeAssignment {
    pub fn first_column(&self) -> u32 {
        self.first_column
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn get(&self, column: u32) -> Option<CoreSlot> {
        let offset = column.checked_sub(self.first_column)? as usize;
        self.slots.get(offset).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, CoreSlot)> + '_ {
        self.slots
            .iter()
            .enumerate()
            .map(move |(i, s)| (self.first_column + i as u32, *s))
    }

    /// Adjacent column pairs that sit on different nodes.
    pub fn inter_node_boundaries(&self) -> usize {
        self.slots
            .windows(2)
            .filter(|w| w[0].node != w[1].node)
            .count()
    }

    pub fn nodes_used(&self) -> usize {
        let mut nodes: Vec<u32> = self.slots.iter().map(|s| s.node).collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes.len()
    }
}

/// Greedy contiguous stripe assignment.
///
/// Cores are numbered node by node in the order given. When there are at least
/// as many columns as cores, column `i` of `n` goes to global core
/// `floor(i * cores / n)`, so every core gets an even contiguous chunk. With
/// fewer columns than cores only the first `n` cores are used, one column each.
/// Either way a node's cores are filled before the next node is touched.
pub fn assign_stripes(
    partition: &Partition,
    nodes: &[NodeCapacity],
) -> Result<StripeAssignment, DomainError> {
    if nodes.is_empty() {
        return Err(DomainError::Configuration("no nodes to assign stripes to"));
    }
    let total: u64 = nodes.iter().map(|n| n.cores as u64).sum();
    if total == 0 {
        return Err(DomainError::Configuration("nodes offer no cores"));
    }
    let columns = partition.width() as u64;
    let used = total.min(columns.max(1));

    // Global core index -> (node, core) via running prefix of node capacities.
    let mut slots = Vec::with_capacity(columns as usize);
    let mut node_idx = 0usize;
    let mut node_base = 0u64;
    for i in 0..columns {
        let global = i * used / columns;
        while global >= node_base + nodes[node_idx].cores as u64 {
            node_base += nodes[node_idx].cores as u64;
            node_idx += 1;
        }
        slots.push(CoreSlot {
            node: nodes[node_idx].id,
            core: (global - node_base) as u32,
        });
    }
    Ok(StripeAssignment {
        first_column: partition.start,
        slots,
    })
}

/// Default per-step boundary payload: 21 KiB.
pub const DEFAULT_BOUNDARY_PAYLOAD_BYTES: u64 = 21 * 1024;

/// Bytes exchanged per step across the cluster/cloud boundary. Zero when either
/// side owns no columns.
pub fn boundary_message_bytes(
    cluster: &Partition,
    cloud: &Partition,
    per_step_payload: u64,
) -> Result<u64, DomainError> {
    if cluster.spec != cloud.spec {
        return Err(DomainError::Inconsistent(
            "partitions refer to different domains",
        ));
    }
    if cluster.is_empty() || cloud.is_empty() {
        return Ok(0);
    }
    if cluster.end != cloud.start && cloud.end != cluster.start {
        return Err(DomainError::NotAdjacent);
    }
    Ok(per_step_payload)
}
