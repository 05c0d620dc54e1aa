use serde::{Deserialize, Serialize};

use crate::embedding::{Activation, CharOp, LossConfig, Norm, PathOp, DEFAULT_DEPTH};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Translational triple embedding.
    #[default]
    TransE,
    /// Translational embedding plus two-hop relation path composition.
    Path,
    /// Graph convolution over the relation structure, trained on seed pairs.
    Gcn,
}

/// How the two KGs' embeddings are tied together.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interaction {
    /// Separate spaces and a learned linear map from KG1 into KG2.
    Transformation,
    /// One space with a distance penalty on seed pairs.
    Calibration,
    /// Each seed pair shares a single entity vector.
    #[default]
    Sharing,
    /// Seed entities swapped into each other's triples.
    Swapping,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    AdaGrad,
    Sgd,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Editing {
    None,
    /// Conflicting proposals keep the more similar pair.
    #[default]
    OneToOneRepair,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GcnConfig {
    pub layers: usize,
    pub activation: Activation,
}

impl Default for GcnConfig {
    fn default() -> Self {
        Self {
            layers: DEFAULT_DEPTH,
            activation: Activation::Tanh,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub model: ModelKind,
    pub interaction: Interaction,
    pub dim: usize,
    pub norm: Norm,
    pub loss: LossConfig,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    /// Relation triples per mini-batch.
    pub batch_size_rel: usize,
    pub max_epochs: usize,
    /// Validation Hits@1 is checked every this many epochs.
    pub eval_every: usize,
    /// Consecutive checks below the best score before stopping; 1 stops at
    /// the first drop.
    pub patience: usize,
    /// Keep entity vectors on the unit sphere.
    pub normalize: bool,
    /// Epochs between nearest-neighbour refreshes for truncated sampling.
    pub refresh_every: usize,
    pub alignment_weight: f64,
    /// Attribute co-occurrence channel.
    pub attributes: bool,
    pub attribute_weight: f64,
    /// Character-level literal channel.
    pub literals: bool,
    pub literal_weight: f64,
    pub char_op: CharOp,
    pub path_op: PathOp,
    pub path_weight: f64,
    pub max_paths: usize,
    pub gcn: GcnConfig,
    pub rng_seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::TransE,
            interaction: Interaction::Sharing,
            dim: 50,
            norm: Norm::L2,
            loss: LossConfig::default(),
            optimizer: OptimizerKind::AdaGrad,
            learning_rate: 0.05,
            batch_size_rel: 5000,
            max_epochs: 2000,
            eval_every: 10,
            patience: 1,
            normalize: true,
            refresh_every: 10,
            alignment_weight: 1.0,
            attributes: false,
            attribute_weight: 1.0,
            literals: false,
            literal_weight: 1.0,
            char_op: CharOp::Mean,
            path_op: PathOp::Sum,
            path_weight: 1.0,
            max_paths: 10_000,
            gcn: GcnConfig::default(),
            rng_seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dim", self.dim),
            ("batch_size_rel", self.batch_size_rel),
            ("eval_every", self.eval_every),
            ("patience", self.patience),
            ("refresh_every", self.refresh_every),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        for (name, w) in [
            ("alignment_weight", self.alignment_weight),
            ("attribute_weight", self.attribute_weight),
            ("literal_weight", self.literal_weight),
            ("path_weight", self.path_weight),
        ] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::Config(format!("{name} must be non-negative")));
            }
        }
        if self.model == ModelKind::Gcn {
            if self.gcn.layers == 0 {
                return Err(Error::Config("gcn.layers must be positive".into()));
            }
            if matches!(self.interaction, Interaction::Transformation | Interaction::Swapping) {
                return Err(Error::Config(format!(
                    "the gcn model supports calibration or sharing, not {:?}",
                    self.interaction
                )));
            }
        }
        self.loss.validate()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelfTrainConfig {
    pub start_epoch: usize,
    pub propose_every: usize,
    /// Minimum cosine similarity of a proposed pair.
    pub threshold: f64,
    pub editing: Editing,
}

impl Default for SelfTrainConfig {
    fn default() -> Self {
        Self {
            start_epoch: 50,
            propose_every: 10,
            threshold: 0.75,
            editing: Editing::OneToOneRepair,
        }
    }
}

impl SelfTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.propose_every == 0 {
            return Err(Error::Config("propose_every must be positive".into()));
        }
        if !(self.threshold > -1.0 && self.threshold <= 1.0) {
            return Err(Error::Config(format!("threshold {} outside (-1, 1]", self.threshold)));
        }
        Ok(())
    }
}

/// A full run configuration as read from a TOML file: `[training]`, an
/// optional `[self_training]` table, and `[inference]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub training: TrainingConfig,
    pub self_training: Option<SelfTrainConfig>,
    pub inference: crate::inference::InferenceConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.training.validate()?;
        if let Some(st) = &self.self_training {
            st.validate()?;
        }
        self.inference.similarity.validate()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }
}
