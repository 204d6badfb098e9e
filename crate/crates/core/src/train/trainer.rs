use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datakit::{Dataset, Split, SummaryLabels, VideoData, epoch_rng};
use crate::error::{Error, Result};
use crate::metrics::{Mode, evaluate};
use crate::model::{BoundParams, Model, ModelConfig, ModelWeights, forward};
use crate::numkit::rng::DROPOUT;
use crate::numkit::{Matrix, Rng, Tape};
use crate::train::adam::{AdamConfig, OptimizerState, adam_step};
use crate::train::loss::{average_ground_truth, bce_loss, mse_loss};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub l2: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub mode: Mode,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            lr: adam.lr,
            l2: adam.l2,
            batch_size: 4,
            epochs: 50,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.eps,
            mode: Mode::ScriptDriven,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            l2: self.l2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Config("batch_size and epochs must be positive".into()));
        }
        if !(self.lr > 0.0) || self.l2 < 0.0 || !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("optimizer settings out of range".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_fscore: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestRecord {
    pub best_epoch: usize,
    pub best_val_fscore: f64,
    pub checkpoint: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub best: BestRecord,
}

impl TrainReport {
    /// One JSON object per epoch, then the best-epoch record.
    pub fn to_json_lines(&self) -> Result<String> {
        let mut out = String::new();
        for e in &self.epochs {
            out.push_str(&serde_json::to_string(e)?);
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&self.best)?);
        out.push('\n');
        Ok(out)
    }
}

pub struct TrainOutcome {
    pub report: TrainReport,
    /// Weights of the best validation epoch.
    pub best: Model,
    /// Optimizer updates applied over the whole run.
    pub steps: usize,
}

/// One training example: a script with its ground truth, or a description
/// with the averaged ground truth.
struct TrainSample<'a> {
    video: &'a VideoData,
    summary: Option<usize>,
}

impl TrainSample<'_> {
    fn id(&self) -> String {
        match self.summary {
            Some(j) => format!("{}#{j}", self.video.id),
            None => self.video.id.clone(),
        }
    }
}

pub fn checkpoint_name(epoch: usize) -> String {
    format!("epoch_{epoch:03}.sdvc")
}

/// Loss and per-tensor gradients for one sample, dropout active.
pub fn sample_gradients(
    weights: &ModelWeights,
    config: &ModelConfig,
    frames: &Matrix,
    text: &Matrix,
    target: &SummaryLabels,
    mode: Mode,
    rng: &mut Rng,
) -> Result<(f64, Vec<Matrix>)> {
    let mut tape = Tape::new();
    let params = BoundParams::bind(&mut tape, weights, true);
    let x = tape.constant(frames.clone());
    let y = tape.constant(text.clone());
    let out = forward(&mut tape, &params, x, y, config, rng, true)?;
    let loss = match mode {
        Mode::ScriptDriven => bce_loss(&mut tape, out.scores, target)?,
        Mode::Generic => mse_loss(&mut tape, out.scores, target)?,
    };
    let value = tape.scalar(loss) as f64;
    if !value.is_finite() {
        return Err(Error::NonFinite("loss"));
    }
    let grads = tape.backward(loss)?;
    let per_tensor = params
        .vars()
        .iter()
        .zip(weights.tensors())
        .map(|(&v, w)| grads.get_or_zeros(v, w.shape()))
        .collect();
    Ok((value, per_tensor))
}

fn train_samples<'a>(dataset: &'a Dataset, mode: Mode, rng: &mut Rng) -> Vec<TrainSample<'a>> {
    match mode {
        Mode::ScriptDriven => dataset
            .samples(Split::Train, Some(rng))
            .into_iter()
            .map(|s| TrainSample {
                video: s.video,
                summary: Some(s.summary),
            })
            .collect(),
        Mode::Generic => {
            let mut v: Vec<TrainSample<'a>> = dataset
                .split(Split::Train)
                .map(|video| TrainSample { video, summary: None })
                .collect();
            rng.shuffle(&mut v);
            v
        }
    }
}

fn check_dataset(dataset: &Dataset, config: &ModelConfig, mode: Mode) -> Result<Vec<Option<SummaryLabels>>> {
    for split in [Split::Train, Split::Validation] {
        if dataset.split(split).next().is_none() {
            return Err(Error::InvalidArgument(format!("split {split} has no videos")));
        }
    }
    if dataset.dimension != config.dim {
        return Err(Error::Config(format!(
            "dataset dimension {} differs from model dimension {}",
            dataset.dimension, config.dim
        )));
    }
    // averaged targets for generic mode, indexed like dataset.videos
    dataset
        .videos
        .iter()
        .map(|v| match mode {
            Mode::ScriptDriven => Ok(None),
            Mode::Generic => {
                if v.description.is_none() {
                    return Err(Error::video(&v.id, "no description embedding"));
                }
                average_ground_truth(&v.ground_truths()).map(Some)
            }
        })
        .collect()
}

/// Trains from the seed's initialisation, writing `epoch_XXX.sdvc` into
/// `out_dir` after every epoch when given. `on_epoch` sees each record as
/// soon as its validation pass is done.
pub fn train_run(
    dataset: &Dataset,
    config: &ModelConfig,
    cfg: &TrainConfig,
    out_dir: Option<&Path>,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    config.validate()?;
    cfg.validate()?;
    let targets = check_dataset(dataset, config, cfg.mode)?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let adam = cfg.adam();
    let mut model = Model::new(config.clone(), cfg.seed)?;
    let mut state = OptimizerState::for_weights(&model.weights);
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, ModelWeights)> = None;
    let mut steps = 0;

    for epoch in 1..=cfg.epochs {
        let samples = train_samples(dataset, cfg.mode, &mut epoch_rng(cfg.seed, epoch));
        let mut dropout = Rng::derive_indexed(cfg.seed, DROPOUT, epoch as u64);
        let mut loss_sum = 0.0;
        for group in samples.chunks(cfg.batch_size) {
            let scale = 1.0 / group.len() as f32;
            let mut acc: Vec<Matrix> = model
                .weights
                .tensors()
                .iter()
                .map(|t| Matrix::zeros(t.rows(), t.cols()))
                .collect();
            for s in group {
                let (text, target) = match s.summary {
                    Some(j) => (&s.video.summaries[j].script, &s.video.summaries[j].labels),
                    None => {
                        let pos = dataset.videos.iter().position(|v| v.id == s.video.id).unwrap();
                        (
                            s.video.description.as_ref().unwrap(),
                            targets[pos].as_ref().unwrap(),
                        )
                    }
                };
                let (loss, grads) = sample_gradients(
                    &model.weights,
                    config,
                    &s.video.frames,
                    text,
                    target,
                    cfg.mode,
                    &mut dropout,
                )
                .map_err(|e| {
                    if e.is_numeric() {
                        Error::NonFiniteLoss {
                            epoch,
                            sample: s.id(),
                        }
                    } else {
                        e
                    }
                })?;
                loss_sum += loss;
                for (a, g) in acc.iter_mut().zip(&grads) {
                    for (x, y) in a.data_mut().iter_mut().zip(g.data()) {
                        *x += scale * y;
                    }
                }
            }
            adam_step(&mut model.weights, &acc, &mut state, &adam)?;
            steps += 1;
        }
        if !model.weights.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                sample: "parameter update".into(),
            });
        }

        let val = evaluate(&model, dataset, Split::Validation, cfg.mode)?.fscore;
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / samples.len() as f64,
            val_fscore: val,
        };
        on_epoch(&record);
        epochs.push(record);
        if let Some(dir) = out_dir {
            model.save(dir.join(checkpoint_name(epoch)))?;
        }
        if best.as_ref().is_none_or(|b| val > b.1) {
            best = Some((epoch, val, model.weights.clone()));
        }
    }

    let (best_epoch, best_val_fscore, weights) = best.expect("at least one epoch");
    let checkpoint = out_dir.map(|d| path_string(&d.join(checkpoint_name(best_epoch))));
    Ok(TrainOutcome {
        report: TrainReport {
            epochs,
            best: BestRecord {
                best_epoch,
                best_val_fscore,
                checkpoint,
            },
        },
        best: Model {
            config: config.clone(),
            weights,
        },
        steps,
    })
}

fn path_string(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}
