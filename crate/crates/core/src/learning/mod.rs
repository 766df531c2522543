//! Distributed generative exchange with empirical per-condition learners.

mod metrics;
mod model;
mod protocol;
mod space;

pub use metrics::{floored_pair, jsd_metric, model_divergence, symmetric_kl, value_function};
pub use model::{mix_tables, mixture_distribution, mixture_weights, normalize, CondTable, Discriminator, GenerativeModel, MixtureWeights};
pub use protocol::{
    allocate_counts, equilibrium_check, iteration_metrics, train_iteration, BatchPart, EquilibriumReport, IterationMetrics, LearningParams,
    LearningState, SampleBatch, Tolerances, UavEquilibrium, UavLearner,
};
pub use space::{AxisBins, Cell, SampleSpace, AXES};
