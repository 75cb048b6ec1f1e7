//! Nonparametric Bayesian clustering with collapsed Dirichlet-process
//! mixtures of diagonal Gaussians under a normal-Gamma prior.
//!
//! Three engines share one model:
//!
//! * [`mapdp`]: MAP-DPM, iterated conditional modes on the cluster
//!   indicators with O(D) sufficient-statistic updates;
//! * [`gibbs`]: the collapsed CRP Gibbs sampler with a Raftery–Lewis
//!   stopping rule;
//! * [`dpmeans`]: the small-variance DP-means baseline.
//!
//! [`crp`] generates synthetic CRP mixtures, [`alpha`] learns the
//! concentration, and [`eval`] holds NMI/AMI and out-of-sample prediction.

pub mod alpha;
pub mod crp;
pub mod dataset;
pub mod dpmeans;
pub mod error;
pub mod eval;
pub mod fit;
pub mod gibbs;
pub mod mapdp;
pub mod model;
pub mod partition;
pub mod predictive;
pub mod raftery;
pub mod rng;
pub mod special;
pub mod state;
pub mod stats;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use fit::{Engine, FitResult};
pub use model::FittedModel;
pub use partition::Partition;
pub use stats::{ng_posterior, NGPosterior, NGPrior, RateFromData, SufficientStats};
