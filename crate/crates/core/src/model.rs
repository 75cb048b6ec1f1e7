use serde::{Deserialize, Serialize};

use crate::crp::check_alpha;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::stats::{NGPrior, SufficientStats};

/// Everything the collapsed model needs for prediction: the prior, the
/// concentration and each cluster's sufficient statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub prior: NGPrior,
    pub alpha: f64,
    pub clusters: Vec<SufficientStats>,
}

impl FittedModel {
    pub fn from_partition(dataset: &Dataset, partition: &Partition, prior: NGPrior, alpha: f64) -> Result<Self> {
        if partition.len() != dataset.len() {
            return Err(Error::invalid(format!(
                "partition covers {} items, dataset has {}",
                partition.len(),
                dataset.len()
            )));
        }
        prior.check_dim(dataset.dim())?;
        let mut clusters = vec![SufficientStats::empty(dataset.dim()); partition.num_clusters()];
        for (row, &k) in dataset.rows().zip(partition.labels()) {
            clusters[k].add(row)?;
        }
        let model = FittedModel { prior, alpha, clusters };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        self.prior.validate()?;
        for (k, c) in self.clusters.iter().enumerate() {
            self.prior.check_dim(c.dim())?;
            if c.count == 0 {
                return Err(Error::invalid(format!("cluster {k} is empty")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.prior.dim()
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    /// Number of training observations.
    pub fn n_observations(&self) -> usize {
        self.clusters.iter().map(|c| c.count).sum()
    }
}
