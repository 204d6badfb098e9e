//! Losses, the Adam optimizer and the epoch loop with per-epoch validation
//! and checkpointing.

pub mod adam;
pub mod loss;
pub mod trainer;

pub use adam::{AdamConfig, OptimizerState, adam_step, adam_update};
pub use loss::{BCE_CLAMP, average_ground_truth, bce_loss, mse_loss};
pub use trainer::{
    BestRecord, EpochRecord, TrainConfig, TrainOutcome, TrainReport, checkpoint_name,
    sample_gradients, train_run,
};
