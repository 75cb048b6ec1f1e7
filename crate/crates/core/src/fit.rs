use serde::{Deserialize, Serialize};

use crate::partition::Partition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    MapDp,
    Gibbs,
    DpMeans,
}

/// Outcome of a point-estimate fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub engine: Engine,
    pub partition: Partition,
    /// Objective after each sweep: the complete-data NLL for MAP-DPM, the
    /// DP-means objective for DP-means.
    pub nll_trace: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    pub empty_cluster_events: usize,
    /// Seconds.
    pub wall_time: f64,
    /// Index of the selected run when restarts were used (0 is the default
    /// initialization).
    pub restart: usize,
}

impl FitResult {
    pub fn final_objective(&self) -> f64 {
        self.nll_trace.last().copied().unwrap_or(f64::NAN)
    }

    pub fn num_clusters(&self) -> usize {
        self.partition.num_clusters()
    }
}
