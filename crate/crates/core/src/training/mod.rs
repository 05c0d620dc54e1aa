//! Joint training of two KGs' embeddings: objective construction for the
//! four interaction modes, the optimization loop with early stopping, and
//! self-training.

mod config;
mod objective;
mod optimizer;
mod self_train;
mod trainer;

pub use config::{Editing, GcnConfig, Interaction, ModelKind, OptimizerKind, RunConfig, SelfTrainConfig, TrainingConfig};
pub use objective::{build_objective, calibration_loss, transformation_loss, Objective, RowAttr, RowGrads};
pub use optimizer::Optimizer;
pub use self_train::{self_train_augment, AugmentedPair, ProposalLog};
pub use trainer::{train, LogRow, TrainOutput, TrainingLog};
