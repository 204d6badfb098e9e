use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the script reaches the cross-modal attention.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextRep {
    /// One key/value row per sentence (an N x M attention matrix).
    MultiVector,
    /// Sentences condensed into a single 1 x D vector first.
    SingleVector,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerHead {
    /// linear D -> 1
    Direct,
    /// linear D -> D, ReLU, linear D -> 1
    Hidden,
}

impl FromStr for TextRep {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multi_vector" => Ok(TextRep::MultiVector),
            "single_vector" => Ok(TextRep::SingleVector),
            _ => Err(Error::Config(format!("unknown text representation '{s}'"))),
        }
    }
}

impl fmt::Display for TextRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TextRep::MultiVector => "multi_vector",
            TextRep::SingleVector => "single_vector",
        })
    }
}

impl FromStr for ScorerHead {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(ScorerHead::Direct),
            "hidden" => Ok(ScorerHead::Hidden),
            _ => Err(Error::Config(format!("unknown scorer head '{s}'"))),
        }
    }
}

impl fmt::Display for ScorerHead {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScorerHead::Direct => "direct",
            ScorerHead::Hidden => "hidden",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub dim: usize,
    pub heads: usize,
    /// Divide the cross-modal attention logits by √D.
    pub use_scaling: bool,
    pub text_rep: TextRep,
    /// Sentences sampled by the single-vector condenser.
    pub single_vector_t: usize,
    pub dropout_rate: f64,
    pub encoder_layers: usize,
    pub ffn_dim: usize,
    pub scorer_head: ScorerHead,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::with_dim(512)
    }
}

impl ModelConfig {
    /// Default configuration at embedding size `dim` (feed-forward width 4·dim).
    pub fn with_dim(dim: usize) -> Self {
        Self {
            dim,
            heads: 8,
            use_scaling: false,
            text_rep: TextRep::MultiVector,
            single_vector_t: 8,
            dropout_rate: 0.5,
            encoder_layers: 1,
            ffn_dim: 4 * dim,
            scorer_head: ScorerHead::Direct,
        }
    }

    pub fn head_dim(&self) -> usize {
        self.dim / self.heads
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.heads == 0 {
            return Err(Error::Config("dim and heads must be positive".into()));
        }
        if !self.dim.is_multiple_of(self.heads) {
            return Err(Error::Config(format!(
                "dim {} is not divisible by heads {}",
                self.dim, self.heads
            )));
        }
        if !self.dim.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "positional encoding needs an even dim, got {}",
                self.dim
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        if self.encoder_layers == 0 {
            return Err(Error::Config("at least one encoder layer".into()));
        }
        if self.ffn_dim == 0 || self.single_vector_t == 0 {
            return Err(Error::Config("ffn_dim and single_vector_t must be positive".into()));
        }
        Ok(())
    }

    pub fn variant(variant: Variant, dim: usize) -> Self {
        let base = Self::with_dim(dim);
        let (text_rep, heads, use_scaling) = variant.settings();
        Self {
            text_rep,
            heads,
            use_scaling,
            ..base
        }
    }
}

/// The architecture rows of the ablation table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Sentence-level keys, 8 heads, no scaling.
    SdVsum,
    /// Single-vector text, 8 heads, no scaling.
    Variant1,
    /// Single-vector text, 8 heads, √D scaling.
    Variant2,
    /// Single-vector text, 4 heads, √D scaling (CLIP-It-like).
    Variant3,
    /// Sentence-level keys, 8 heads, √D scaling.
    Variant4,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::SdVsum,
        Variant::Variant1,
        Variant::Variant2,
        Variant::Variant3,
        Variant::Variant4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::SdVsum => "SD-VSum",
            Variant::Variant1 => "Variant1",
            Variant::Variant2 => "Variant2",
            Variant::Variant3 => "Variant3",
            Variant::Variant4 => "Variant4",
        }
    }

    fn settings(self) -> (TextRep, usize, bool) {
        match self {
            Variant::SdVsum => (TextRep::MultiVector, 8, false),
            Variant::Variant1 => (TextRep::SingleVector, 8, false),
            Variant::Variant2 => (TextRep::SingleVector, 8, true),
            Variant::Variant3 => (TextRep::SingleVector, 4, true),
            Variant::Variant4 => (TextRep::MultiVector, 8, true),
        }
    }

    /// Applies this row's switches to an existing configuration.
    pub fn apply(self, base: &ModelConfig) -> ModelConfig {
        let (text_rep, heads, use_scaling) = self.settings();
        ModelConfig {
            text_rep,
            heads,
            use_scaling,
            ..base.clone()
        }
    }
}
