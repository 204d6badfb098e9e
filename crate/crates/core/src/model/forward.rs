//! Forward pass on an autodiff tape.
//!
//! ```text
//! Y ──(condense, single-vector only)──► Y'
//! X, Y' ──► per head: softmax(Q·Kᵀ [/√D]) ─dropout─► ·V ──► concat ──► W_o ──► + PE ──► Z
//! Z ──► dropout ──► layer norm ──► encoder layer(s) ──► scoring head ──► sigmoid ──► f
//! ```

use crate::error::{Error, Result};
use crate::model::config::{ModelConfig, ScorerHead, TextRep};
use crate::model::weights::ModelWeights;
use crate::numkit::{Matrix, Real, Rng, Tape, Var};

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Weights registered on a tape.
pub struct BoundParams<'w, T> {
    weights: &'w ModelWeights<T>,
    vars: Vec<Var>,
}

impl<'w, T: Real> BoundParams<'w, T> {
    /// Registers every tensor as a trainable leaf (`trainable`) or as a
    /// constant.
    pub fn bind(tape: &mut Tape<T>, weights: &'w ModelWeights<T>, trainable: bool) -> Self {
        let vars = weights
            .tensors()
            .iter()
            .map(|t| {
                if trainable {
                    tape.param(t.clone())
                } else {
                    tape.constant(t.clone())
                }
            })
            .collect();
        Self { weights, vars }
    }

    /// Wraps vars that were registered elsewhere, in layout order.
    pub fn from_vars(weights: &'w ModelWeights<T>, vars: Vec<Var>) -> Self {
        assert_eq!(weights.len(), vars.len());
        Self { weights, vars }
    }

    pub fn var(&self, name: &str) -> Var {
        let i = self
            .weights
            .position(name)
            .unwrap_or_else(|| panic!("tensor {name} missing from weights"));
        self.vars[i]
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }
}

/// Sinusoidal encoding: `PE[p, 2i] = sin(p / 10000^(2i/D))`,
/// `PE[p, 2i+1] = cos(p / 10000^(2i/D))`.
pub fn positional_encoding<T: Real>(n: usize, d: usize) -> Result<Matrix<T>> {
    if !d.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "positional encoding needs an even dimension, got {d}"
        )));
    }
    Ok(Matrix::from_fn(n, d, |pos, col| {
        let i2 = (col - col % 2) as f64;
        let angle = pos as f64 / 10000f64.powf(i2 / d as f64);
        T::from_f64(if col % 2 == 0 { angle.sin() } else { angle.cos() })
    }))
}

/// Row indices the condenser samples: `⌊t·M/T⌋` for `t` in `0..T`, evenly
/// spaced and repeating rows when `M < T`.
pub fn condense_indices(m: usize, t: usize) -> Vec<usize> {
    (0..t).map(|k| k * m / t).collect()
}

fn affine<T: Real>(tape: &mut Tape<T>, x: Var, w: Var, b: Var) -> Result<Var> {
    let xw = tape.matmul(x, w)?;
    tape.add(xw, b)
}

/// Condenses `M` sentence rows into one `1 x D` row.
pub fn condense_text<T: Real>(
    tape: &mut Tape<T>,
    params: &BoundParams<'_, T>,
    y: Var,
    config: &ModelConfig,
) -> Result<Var> {
    if config.text_rep != TextRep::SingleVector {
        return Err(Error::InvalidArgument(
            "condense_text is only defined for the single-vector text representation".into(),
        ));
    }
    let m = tape.value(y).rows();
    let flat = tape.gather_flat(y, &condense_indices(m, config.single_vector_t))?;
    affine(
        tape,
        flat,
        params.var("text.condense.w"),
        params.var("text.condense.b"),
    )
}

/// Output of the cross-modal block.
pub struct CrossModal {
    /// `N x D` fused frame representations, positional encoding included.
    pub z: Var,
    /// Per-head attention matrices `A_h` (`N x M'`), before dropout.
    pub attention: Vec<Var>,
    /// `Z` before the positional encoding was added.
    pub z_before_pe: Var,
}

fn multi_head<T: Real>(
    tape: &mut Tape<T>,
    params: &BoundParams<'_, T>,
    prefix: &str,
    queries: Var,
    keys: Var,
    config: &ModelConfig,
    logit_scale: Option<f64>,
    attn_dropout: Option<(&mut Rng, bool)>,
) -> Result<(Var, Vec<Var>)> {
    let mut heads = Vec::with_capacity(config.heads);
    let mut attention = Vec::with_capacity(config.heads);
    let mut attn_dropout = attn_dropout;
    for h in 0..config.heads {
        let p = |s: &str| params.var(&format!("{prefix}.h{h}.{s}"));
        let q = affine(tape, queries, p("wq"), p("bq"))?;
        let k = affine(tape, keys, p("wk"), p("bk"))?;
        let v = affine(tape, keys, p("wv"), p("bv"))?;
        let mut logits = tape.matmul_bt(q, k)?;
        if let Some(s) = logit_scale {
            logits = tape.scale(logits, T::from_f64(s))?;
        }
        let a = tape.softmax_rows(logits);
        attention.push(a);
        let a_used = match attn_dropout.as_mut() {
            Some((rng, training)) => tape.dropout(a, config.dropout_rate, rng, *training)?,
            None => a,
        };
        heads.push(tape.matmul(a_used, v)?);
    }
    let cat = tape.concat_cols(&heads)?;
    let out = affine(
        tape,
        cat,
        params.var(&format!("{prefix}.out.w")),
        params.var(&format!("{prefix}.out.b")),
    )?;
    Ok((out, attention))
}

fn check_dim<T: Real>(tape: &Tape<T>, v: Var, d: usize, what: &'static str) -> Result<()> {
    let shape = tape.value(v).shape();
    if shape.1 != d {
        return Err(Error::Shape {
            op: what,
            left: shape,
            right: (shape.0, d),
        });
    }
    Ok(())
}

/// Frames attend over the (possibly condensed) script rows.
pub fn cross_modal_attention<T: Real>(
    tape: &mut Tape<T>,
    params: &BoundParams<'_, T>,
    x: Var,
    y_prime: Var,
    config: &ModelConfig,
    rng: &mut Rng,
    training: bool,
) -> Result<CrossModal> {
    check_dim(tape, x, config.dim, "cross_modal_attention frames")?;
    check_dim(tape, y_prime, config.dim, "cross_modal_attention script")?;
    let scale = config.use_scaling.then(|| 1.0 / (config.dim as f64).sqrt());
    let (z_before_pe, attention) = multi_head(
        tape,
        params,
        "attn",
        x,
        y_prime,
        config,
        scale,
        Some((rng, training)),
    )?;
    let n = tape.value(x).rows();
    let pe = tape.constant(positional_encoding(n, config.dim)?);
    let z = tape.add(z_before_pe, pe)?;
    Ok(CrossModal {
        z,
        attention,
        z_before_pe,
    })
}

fn encoder_layer<T: Real>(
    tape: &mut Tape<T>,
    params: &BoundParams<'_, T>,
    layer: usize,
    x: Var,
    config: &ModelConfig,
) -> Result<Var> {
    let p = format!("enc.l{layer}");
    let scale = 1.0 / (config.head_dim() as f64).sqrt();
    let (attn, _) = multi_head(tape, params, &p, x, x, config, Some(scale), None)?;
    let res1 = tape.add(x, attn)?;
    let eps = T::from_f64(LAYER_NORM_EPS);
    let h1 = tape.layer_norm(
        res1,
        params.var(&format!("{p}.norm1.gain")),
        params.var(&format!("{p}.norm1.bias")),
        eps,
    )?;
    let f1 = affine(
        tape,
        h1,
        params.var(&format!("{p}.ffn1.w")),
        params.var(&format!("{p}.ffn1.b")),
    )?;
    let f1 = tape.relu(f1);
    let f2 = affine(
        tape,
        f1,
        params.var(&format!("{p}.ffn2.w")),
        params.var(&format!("{p}.ffn2.b")),
    )?;
    let res2 = tape.add(h1, f2)?;
    tape.layer_norm(
        res2,
        params.var(&format!("{p}.norm2.gain")),
        params.var(&format!("{p}.norm2.bias")),
        eps,
    )
}

/// Encoder layer(s), scoring head and sigmoid; returns an `N x 1` var of
/// scores in (0, 1).
pub fn scorer_forward<T: Real>(
    tape: &mut Tape<T>,
    params: &BoundParams<'_, T>,
    z: Var,
    config: &ModelConfig,
) -> Result<Var> {
    let mut h = z;
    for l in 0..config.encoder_layers {
        h = encoder_layer(tape, params, l, h, config)?;
    }
    if config.scorer_head == ScorerHead::Hidden {
        h = affine(
            tape,
            h,
            params.var("scorer.hidden.w"),
            params.var("scorer.hidden.b"),
        )?;
        h = tape.relu(h);
    }
    let logits = affine(
        tape,
        h,
        params.var("scorer.head.w"),
        params.var("scorer.head.b"),
    )?;
    Ok(tape.sigmoid(logits))
}

pub struct ForwardOutput {
    /// `N x 1` frame scores.
    pub scores: Var,
    pub cross: CrossModal,
}

/// Full network on registered inputs.
pub fn forward<T: Real>(
    tape: &mut Tape<T>,
    params: &BoundParams<'_, T>,
    x: Var,
    y: Var,
    config: &ModelConfig,
    rng: &mut Rng,
    training: bool,
) -> Result<ForwardOutput> {
    check_dim(tape, y, config.dim, "model_forward script")?;
    let y_prime = match config.text_rep {
        TextRep::MultiVector => y,
        TextRep::SingleVector => condense_text(tape, params, y, config)?,
    };
    let cross = cross_modal_attention(tape, params, x, y_prime, config, rng, training)?;
    let dropped = tape.dropout(cross.z, config.dropout_rate, rng, training)?;
    let normed = tape.layer_norm(
        dropped,
        params.var("attn.norm.gain"),
        params.var("attn.norm.bias"),
        T::from_f64(LAYER_NORM_EPS),
    )?;
    let scores = scorer_forward(tape, params, normed, config)?;
    Ok(ForwardOutput { scores, cross })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::weights::init_weights;

    #[test]
    fn positional_encoding_values() {
        let pe = positional_encoding::<f64>(4, 8).unwrap();
        for c in 0..8 {
            assert_eq!(pe.get(0, c), if c % 2 == 0 { 0.0 } else { 1.0 });
        }
        assert!((pe.get(1, 0) - 1f64.sin()).abs() < 1e-12);
        assert!((pe.get(1, 0) - 0.8415).abs() < 1e-4);
        assert!((pe.get(3, 3) - (3.0 / 10000f64.powf(2.0 / 8.0)).cos()).abs() < 1e-12);
        assert!(pe.data().iter().all(|v| v.abs() <= 1.0));
        assert!(positional_encoding::<f32>(2, 7).is_err());
    }

    #[test]
    fn condense_sampling() {
        assert_eq!(condense_indices(8, 8), (0..8).collect::<Vec<_>>());
        assert_eq!(condense_indices(1, 8), vec![0; 8]);
        assert_eq!(condense_indices(16, 8), vec![0, 2, 4, 6, 8, 10, 12, 14]);
        assert_eq!(condense_indices(3, 8), vec![0, 0, 0, 1, 1, 1, 2, 2]);
    }

    #[test]
    fn condense_rejected_in_multi_vector_mode() {
        let config = ModelConfig::with_dim(16);
        let w = init_weights(&config, &mut Rng::from_seed(0)).unwrap();
        let mut tape = Tape::<f32>::new();
        let params = BoundParams::bind(&mut tape, &w, false);
        let y = tape.constant(Matrix::zeros(2, 16));
        assert!(condense_text(&mut tape, &params, y, &config).is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let config = ModelConfig::with_dim(16);
        let w = init_weights(&config, &mut Rng::from_seed(0)).unwrap();
        let mut tape = Tape::<f32>::new();
        let params = BoundParams::bind(&mut tape, &w, false);
        let x = tape.constant(Matrix::zeros(3, 16));
        let y = tape.constant(Matrix::zeros(2, 8));
        let mut rng = Rng::from_seed(0);
        assert!(matches!(
            forward(&mut tape, &params, x, y, &config, &mut rng, false),
            Err(Error::Shape { .. })
        ));
    }
}
