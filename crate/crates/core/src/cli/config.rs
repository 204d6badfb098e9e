//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Every key is optional; unknown
//! keys are rejected.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::datakit::SynthSpec;
use crate::error::{Error, Result};
use crate::metrics::Mode;
use crate::model::{ModelConfig, ScorerHead, TextRep};
use crate::train::TrainConfig;

/// Keys understood by [`parse_config_str`], with their defaults.
pub const KEYS: &[(&str, &str)] = &[
    ("dim", "512"),
    ("heads", "8"),
    ("use_scaling", "false"),
    ("text_rep", "multi_vector"),
    ("single_vector_t", "8"),
    ("dropout", "0.5"),
    ("encoder_layers", "1"),
    ("ffn_dim", "4 * dim"),
    ("scorer_head", "direct"),
    ("lr", "5e-5"),
    ("l2", "1e-4"),
    ("batch_size", "4"),
    ("epochs", "50"),
    ("beta1", "0.9"),
    ("beta2", "0.999"),
    ("adam_eps", "1e-8"),
    ("mode", "script_driven"),
    ("seed", "42"),
    ("topics", "8"),
    ("train_videos", "200"),
    ("validation_videos", "50"),
    ("test_videos", "50"),
    ("frames_min", "60"),
    ("frames_max", "60"),
    ("sentences_min", "3"),
    ("sentences_max", "6"),
    ("noise", "0.1"),
    ("positive_fraction", "0.15"),
    ("summaries_per_video", "10"),
    ("exact_positives", "false"),
    ("manifest", "(none)"),
    ("checkpoint", "(none)"),
    ("out_dir", "(none)"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// `synth.dimension` follows `dim`.
    pub synth: SynthSpec,
    pub manifest: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config_str("").expect("defaults are valid")
    }
}

impl RunConfig {
    /// Overrides the seed everywhere it is used.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.train.seed = seed;
        self.synth.seed = seed;
        self
    }
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn take<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.map.remove(key) {
            None => Ok(default),
            Some((line, raw)) => raw
                .parse()
                .map_err(|_| Error::Config(format!("line {line}: malformed value {raw:?} for {key}"))),
        }
    }

    fn take_with<T>(&mut self, key: &str, default: T, parse: impl Fn(&str) -> Result<T>) -> Result<T> {
        match self.map.remove(key) {
            None => Ok(default),
            Some((line, raw)) => parse(&raw).map_err(|e| Error::Config(format!("line {line}: {key}: {e}"))),
        }
    }
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
        let key = key.trim().to_string();
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(Error::Config(format!("line {}: unknown key {key:?}", i + 1)));
        }
        if map.insert(key.clone(), (i + 1, value.trim().to_string())).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key {key:?}", i + 1)));
        }
    }
    let mut e = Entries { map };

    let base = ModelConfig::with_dim(e.take("dim", 512usize)?);
    let model = ModelConfig {
        heads: e.take("heads", base.heads)?,
        use_scaling: e.take("use_scaling", base.use_scaling)?,
        text_rep: e.take_with("text_rep", base.text_rep, TextRep::from_str)?,
        single_vector_t: e.take("single_vector_t", base.single_vector_t)?,
        dropout_rate: e.take("dropout", base.dropout_rate)?,
        encoder_layers: e.take("encoder_layers", base.encoder_layers)?,
        ffn_dim: e.take("ffn_dim", base.ffn_dim)?,
        scorer_head: e.take_with("scorer_head", base.scorer_head, ScorerHead::from_str)?,
        ..base
    };
    model.validate()?;

    let t = TrainConfig::default();
    let train = TrainConfig {
        lr: e.take("lr", t.lr)?,
        l2: e.take("l2", t.l2)?,
        batch_size: e.take("batch_size", t.batch_size)?,
        epochs: e.take("epochs", t.epochs)?,
        beta1: e.take("beta1", t.beta1)?,
        beta2: e.take("beta2", t.beta2)?,
        eps: e.take("adam_eps", t.eps)?,
        mode: e.take_with("mode", t.mode, Mode::from_str)?,
        seed: e.take("seed", t.seed)?,
    };
    train.validate()?;

    let s = SynthSpec::default();
    let synth = SynthSpec {
        topics: e.take("topics", s.topics)?,
        train_videos: e.take("train_videos", s.train_videos)?,
        validation_videos: e.take("validation_videos", s.validation_videos)?,
        test_videos: e.take("test_videos", s.test_videos)?,
        frames: (e.take("frames_min", s.frames.0)?, e.take("frames_max", s.frames.1)?),
        sentences: (
            e.take("sentences_min", s.sentences.0)?,
            e.take("sentences_max", s.sentences.1)?,
        ),
        dimension: model.dim,
        noise: e.take("noise", s.noise)?,
        positive_fraction: e.take("positive_fraction", s.positive_fraction)?,
        summaries_per_video: e.take("summaries_per_video", s.summaries_per_video)?,
        exact_positives: e.take("exact_positives", s.exact_positives)?,
        seed: train.seed,
    };

    let path = |e: &mut Entries, key: &str| -> Result<Option<PathBuf>> {
        e.take_with(key, None, |v| Ok(Some(PathBuf::from(v))))
    };
    let manifest = path(&mut e, "manifest")?;
    let checkpoint = path(&mut e, "checkpoint")?;
    let out_dir = path(&mut e, "out_dir")?;
    debug_assert!(e.map.is_empty());

    Ok(RunConfig {
        model,
        train,
        synth,
        manifest,
        checkpoint,
        out_dir,
    })
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
