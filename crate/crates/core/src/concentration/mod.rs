//! Experiments around critical norms near the initial time: the data split,
//! Navier-Stokes rescaling, the Type I statistic, local smallness of the
//! perturbation, concentration on shrinking balls and the near-initial
//! decay of Besov data.

mod besov_decay;
mod scaling;
mod smallness;
mod split;

pub use besov_decay::{near_initial_decay_besov, BesovDecayParams, BesovDecayReport, BesovDecayRow};
pub use scaling::{
    concentration_diagnostic, critical_ball_identity, fine_ball_norm, rescale, rescale_run, scaling_covariance, t_star,
    type_one_monitor, ConcentrationParams, ConcentrationRow, ConcentrationSeries, TypeIParams, TypeIRecord,
};
pub use smallness::{local_smallness_experiment, SmallnessExperiment, SmallnessParams, SmallnessReport, SmallnessRow};
pub use split::{split_initial_data, DataSplit, SplitNorms, SplitParams};
