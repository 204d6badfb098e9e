//! The script-driven summarization network and its ablation variants.

pub mod checkpoint;
pub mod config;
pub mod forward;
pub mod weights;

use std::path::Path;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use config::{ModelConfig, ScorerHead, TextRep, Variant};
pub use forward::{BoundParams, CrossModal, ForwardOutput, forward, positional_encoding};
pub use weights::{ModelWeights, init_weights, layout, parameter_count};

use crate::error::{Error, Result};
use crate::numkit::{Matrix, Real, Rng, Tape};

/// Frame importance scores, each strictly inside (0, 1).
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreVector(Vec<f32>);

impl ScoreVector {
    /// Accepts scores in (0, 1). Values that rounded onto 0 or 1 (sigmoid
    /// saturation) are moved to the nearest interior float.
    pub fn new(values: Vec<f32>) -> Result<Self> {
        const LO: f32 = f32::MIN_POSITIVE;
        const HI: f32 = 1.0 - f32::EPSILON / 2.0;
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument("scores must lie in (0, 1)".into()));
        }
        Ok(Self(values.into_iter().map(|v| v.clamp(LO, HI)).collect()))
    }

    pub fn from_column<T: Real>(m: &Matrix<T>) -> Result<Self> {
        Self::new(m.data().iter().map(|v| v.as_f64() as f32).collect())
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.0
    }
}

/// Runs the network once. In inference mode (`training == false`) the result
/// is deterministic and `rng` is not consumed.
pub fn model_forward<T: Real>(
    x: &Matrix<T>,
    y: &Matrix<T>,
    weights: &ModelWeights<T>,
    config: &ModelConfig,
    rng: &mut Rng,
    training: bool,
) -> Result<ScoreVector> {
    let mut tape = Tape::new();
    let params = BoundParams::bind(&mut tape, weights, false);
    let xv = tape.constant(x.clone());
    let yv = tape.constant(y.clone());
    let out = forward(&mut tape, &params, xv, yv, config, rng, training)?;
    ScoreVector::from_column(tape.value(out.scores))
}

/// A configuration with its trained weights.
#[derive(Clone, Debug)]
pub struct Model {
    pub config: ModelConfig,
    pub weights: ModelWeights,
}

impl Model {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        let weights = init_weights(&config, &mut Rng::derive(seed, crate::numkit::rng::INIT))?;
        Ok(Self { config, weights })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let (config, weights) = load_checkpoint(path, None)?;
        Ok(Self { config, weights })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        save_checkpoint(&self.config, &self.weights, path)
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.parameter_count()
    }

    /// Inference-mode scores for frames `x` (`N x D`) under script `y` (`M x D`).
    pub fn score(&self, x: &Matrix, y: &Matrix) -> Result<ScoreVector> {
        // inference draws nothing from the stream
        let mut rng = Rng::from_seed(0);
        model_forward(x, y, &self.weights, &self.config, &mut rng, false)
    }
}
