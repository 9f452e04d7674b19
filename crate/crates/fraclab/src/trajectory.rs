//! Sampled trajectories and their provenance.

use crate::process::{ProcessKind, ProcessParams};

/// Where a trajectory came from. `true_params` is `None` for ingested
/// real-world series; synthetic trajectories always carry their generating
/// parameters so evaluation can recover the true Hurst exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMeta {
    pub kind: ProcessKind,
    pub true_params: Option<ProcessParams>,
    pub master_seed: u64,
    pub stream_index: u64,
}

/// A uniformly sampled path. `values[k]` is the level at time `k * dt`;
/// `values[0]` is the initial value of the process.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub values: Vec<f64>,
    pub dt: f64,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn duration(&self) -> f64 {
        (self.values.len().saturating_sub(1)) as f64 * self.dt
    }

    pub fn true_hurst(&self) -> Option<f64> {
        self.meta.true_params.as_ref().map(|p| p.hurst())
    }

    /// First differences, `values[k+1] - values[k]`.
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }
}
