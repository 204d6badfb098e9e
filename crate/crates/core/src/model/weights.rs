//! Parameter layout and initialisation.
//!
//! Tensor names, in checkpoint order:
//!
//! | name | shape | present when |
//! |------|-------|--------------|
//! | `text.condense.w` / `.b` | (T·D)×D / 1×D | single-vector text |
//! | `attn.h{h}.wq` `.bq` `.wk` `.bk` `.wv` `.bv` | D×(D/H) / 1×(D/H) | always |
//! | `attn.out.w` / `.b` | D×D / 1×D | always |
//! | `attn.norm.gain` / `.bias` | 1×D | always |
//! | `enc.l{l}.h{h}.wq` ... `.bv` | D×(D/H) / 1×(D/H) | per encoder layer |
//! | `enc.l{l}.out.w` / `.b` | D×D / 1×D | per encoder layer |
//! | `enc.l{l}.norm1.gain` / `.bias` | 1×D | per encoder layer |
//! | `enc.l{l}.ffn1.w` / `.b` | D×F / 1×F | per encoder layer |
//! | `enc.l{l}.ffn2.w` / `.b` | F×D / 1×D | per encoder layer |
//! | `enc.l{l}.norm2.gain` / `.bias` | 1×D | per encoder layer |
//! | `scorer.hidden.w` / `.b` | D×D / 1×D | hidden scorer head |
//! | `scorer.head.w` / `.b` | D×1 / 1×1 | always |

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::config::{ModelConfig, ScorerHead, TextRep};
use crate::numkit::{Matrix, Real, Rng};

/// Xavier-uniform gain.
pub const INIT_GAIN: f64 = std::f64::consts::SQRT_2;
pub const INIT_BIAS: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    Weight,
    Bias,
    NormGain,
    NormBias,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub kind: ParamKind,
}

/// Xavier-uniform bound for a `fan_in x fan_out` weight.
pub fn xavier_bound(fan_in: usize, fan_out: usize) -> f64 {
    INIT_GAIN * (6.0 / (fan_in + fan_out) as f64).sqrt()
}

fn linear(out: &mut Vec<ParamSpec>, prefix: &str, w: &str, b: &str, rows: usize, cols: usize) {
    out.push(ParamSpec {
        name: format!("{prefix}.{w}"),
        rows,
        cols,
        kind: ParamKind::Weight,
    });
    out.push(ParamSpec {
        name: format!("{prefix}.{b}"),
        rows: 1,
        cols,
        kind: ParamKind::Bias,
    });
}

fn norm(out: &mut Vec<ParamSpec>, prefix: &str, d: usize) {
    out.push(ParamSpec {
        name: format!("{prefix}.gain"),
        rows: 1,
        cols: d,
        kind: ParamKind::NormGain,
    });
    out.push(ParamSpec {
        name: format!("{prefix}.bias"),
        rows: 1,
        cols: d,
        kind: ParamKind::NormBias,
    });
}

fn attention_heads(out: &mut Vec<ParamSpec>, prefix: &str, config: &ModelConfig) {
    let (d, hd) = (config.dim, config.head_dim());
    for h in 0..config.heads {
        let p = format!("{prefix}.h{h}");
        linear(out, &p, "wq", "bq", d, hd);
        linear(out, &p, "wk", "bk", d, hd);
        linear(out, &p, "wv", "bv", d, hd);
    }
    linear(out, &format!("{prefix}.out"), "w", "b", d, d);
}

/// Every trainable tensor of `config`, in canonical order.
pub fn layout(config: &ModelConfig) -> Vec<ParamSpec> {
    let d = config.dim;
    let mut out = Vec::new();
    if config.text_rep == TextRep::SingleVector {
        linear(&mut out, "text.condense", "w", "b", config.single_vector_t * d, d);
    }
    attention_heads(&mut out, "attn", config);
    norm(&mut out, "attn.norm", d);
    for l in 0..config.encoder_layers {
        let p = format!("enc.l{l}");
        attention_heads(&mut out, &p, config);
        norm(&mut out, &format!("{p}.norm1"), d);
        linear(&mut out, &format!("{p}.ffn1"), "w", "b", d, config.ffn_dim);
        linear(&mut out, &format!("{p}.ffn2"), "w", "b", config.ffn_dim, d);
        norm(&mut out, &format!("{p}.norm2"), d);
    }
    if config.scorer_head == ScorerHead::Hidden {
        linear(&mut out, "scorer.hidden", "w", "b", d, d);
    }
    linear(&mut out, "scorer.head", "w", "b", d, 1);
    out
}

pub fn parameter_count(config: &ModelConfig) -> usize {
    layout(config).iter().map(|p| p.rows * p.cols).sum()
}

/// Named tensors of one model, in [`layout`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelWeights<T = f32> {
    names: Vec<String>,
    tensors: Vec<Matrix<T>>,
    index: HashMap<String, usize>,
}

impl<T: Real> ModelWeights<T> {
    /// Pairs tensors with the layout of `config`, checking names and shapes.
    pub fn from_tensors(config: &ModelConfig, tensors: Vec<(String, Matrix<T>)>) -> Result<Self> {
        let specs = layout(config);
        if specs.len() != tensors.len() {
            return Err(Error::ConfigMismatch(format!(
                "{} tensors supplied, configuration needs {}",
                tensors.len(),
                specs.len()
            )));
        }
        for (spec, (name, m)) in specs.iter().zip(&tensors) {
            if &spec.name != name {
                return Err(Error::TensorName {
                    expected: spec.name.clone(),
                    found: name.clone(),
                });
            }
            if m.shape() != (spec.rows, spec.cols) {
                return Err(Error::TensorShape {
                    name: name.clone(),
                    expected: (spec.rows, spec.cols),
                    found: m.shape(),
                });
            }
        }
        Ok(Self::assemble(tensors))
    }

    fn assemble(tensors: Vec<(String, Matrix<T>)>) -> Self {
        let (names, tensors): (Vec<_>, Vec<_>) = tensors.into_iter().unzip();
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        Self {
            names,
            tensors,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Matrix<T>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Matrix<T>] {
        &mut self.tensors
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Option<&Matrix<T>> {
        self.position(name).map(|i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Matrix<T>> {
        self.position(name).map(move |i| &mut self.tensors[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Matrix<T>)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors.iter().map(|t| t.data().len()).sum()
    }

    pub fn cast<U: Real>(&self) -> ModelWeights<U> {
        ModelWeights {
            names: self.names.clone(),
            tensors: self.tensors.iter().map(Matrix::cast).collect(),
            index: self.index.clone(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(Matrix::is_finite)
    }
}

/// Xavier-uniform weights with gain √2, biases 0.1, normalisation gains 1
/// and normalisation biases 0. Draws from `rng` in layout order.
pub fn init_weights(config: &ModelConfig, rng: &mut Rng) -> Result<ModelWeights<f32>> {
    config.validate()?;
    let tensors = layout(config)
        .into_iter()
        .map(|spec| {
            let m = match spec.kind {
                ParamKind::Weight => {
                    let bound = xavier_bound(spec.rows, spec.cols);
                    Matrix::from_fn(spec.rows, spec.cols, |_, _| {
                        rng.uniform_range(-bound, bound) as f32
                    })
                }
                ParamKind::Bias => Matrix::filled(spec.rows, spec.cols, INIT_BIAS as f32),
                ParamKind::NormGain => Matrix::filled(spec.rows, spec.cols, 1.0),
                ParamKind::NormBias => Matrix::zeros(spec.rows, spec.cols),
            };
            (spec.name, m)
        })
        .collect();
    Ok(ModelWeights::assemble(tensors))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_follows_layout() {
        let config = ModelConfig {
            heads: 8,
            ..ModelConfig::with_dim(64)
        };
        let w = init_weights(&config, &mut Rng::from_seed(1)).unwrap();
        let wq = w.get("attn.h3.wq").unwrap();
        assert_eq!(wq.shape(), (64, 8));
        let bound = xavier_bound(64, 8);
        assert!((bound - 0.408_248).abs() < 1e-5);
        assert!(wq.data().iter().all(|v| (v.abs() as f64) <= bound));
        // the sample should come reasonably close to the bound
        assert!(wq.max_abs() as f64 > 0.9 * bound);

        for (name, t) in w.iter() {
            if name.ends_with(".b") || name.ends_with(".bq") || name.ends_with(".bk") || name.ends_with(".bv") {
                assert!(t.data().iter().all(|&v| v == 0.1f32), "{name}");
            }
            if name.ends_with(".gain") {
                assert!(t.data().iter().all(|&v| v == 1.0), "{name}");
            }
            if name.ends_with("norm.bias") || name.ends_with("norm1.bias") || name.ends_with("norm2.bias") {
                assert!(t.data().iter().all(|&v| v == 0.0), "{name}");
            }
        }
        assert_eq!(w.parameter_count(), parameter_count(&config));
    }

    #[test]
    fn init_is_seeded() {
        let c = ModelConfig::with_dim(16);
        let a = init_weights(&c, &mut Rng::from_seed(5)).unwrap();
        let b = init_weights(&c, &mut Rng::from_seed(5)).unwrap();
        let other = init_weights(&c, &mut Rng::from_seed(6)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, other);
    }

    #[test]
    fn single_vector_adds_condenser() {
        let multi = ModelConfig::with_dim(64);
        let single = ModelConfig {
            text_rep: TextRep::SingleVector,
            ..multi.clone()
        };
        assert_eq!(
            parameter_count(&single) - parameter_count(&multi),
            8 * 64 * 64 + 64
        );
        assert_eq!(layout(&single)[0].name, "text.condense.w");
    }
}
