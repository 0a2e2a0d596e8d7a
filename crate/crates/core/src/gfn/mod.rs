//! Balance losses, rollouts and the transition-based training loop.

mod config;
mod loss;
mod rollout;
mod trainer;

pub use config::{Anneal, LossVariant, Objective, TrainConfig};
pub use loss::{
    balance_loss, db_loss, fl_loss, loss_and_grads, records_from_trajectory, tb_loss, trajectory_loss, GraphSource,
    TransitionRecord,
};
pub use rollout::{rollout, rollout_many, sample_best_of_k, Trajectory, TrajectoryStep};
pub use trainer::{plan_batches, train, LogRow, TrainOutcome, Trainer};
