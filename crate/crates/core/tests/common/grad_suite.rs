//! Gradient checks shared by the gradient tests and the acceptance run:
//! reverse-mode gradients against central finite differences for every
//! differentiable operation, the losses, and the full forward pass.

use sdvsum::Result;
use sdvsum::datakit::SummaryLabels;
use sdvsum::model::{BoundParams, ModelConfig, Variant, forward, init_weights};
use sdvsum::numkit::{Matrix, Rng, Tape, Var, grad_check};
use sdvsum::train::{bce_loss, mse_loss};

pub const EPS: f64 = 1e-3;
pub const TOL: f64 = 1e-3;

pub struct Checked {
    pub name: String,
    pub max_rel_error: f64,
}

impl Checked {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= TOL
    }
}

/// Every check at `EPS`, in a fixed order.
pub fn all() -> Vec<Checked> {
    [linear_algebra_ops(), elementwise_ops(), structural_ops(), losses(), full_model_every_variant()]
        .into_iter()
        .flatten()
        .collect()
}

pub fn random(rows: usize, cols: usize, rng: &mut Rng) -> Matrix<f64> {
    Matrix::from_fn(rows, cols, |_, _| rng.normal())
}

/// Values kept away from 0 so kinks and the logarithm stay smooth.
fn away_from_zero(rows: usize, cols: usize, rng: &mut Rng) -> Matrix<f64> {
    Matrix::from_fn(rows, cols, |_, _| {
        let v = rng.uniform_range(0.2, 1.5);
        if rng.uniform() < 0.5 { -v } else { v }
    })
}

/// Reduces a matrix var to a scalar with fixed random weights, so every
/// output entry gets a distinct upstream gradient.
pub fn weighted_sum(tape: &mut Tape<f64>, v: Var) -> Result<Var> {
    let (r, c) = tape.value(v).shape();
    let mut rng = Rng::from_seed(99);
    let w = tape.constant(Matrix::from_fn(r, c, |_, _| rng.normal()));
    let p = tape.mul(v, w)?;
    Ok(tape.sum(p))
}

fn check<F>(out: &mut Vec<Checked>, name: &str, f: F, params: &[Matrix<f64>])
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
{
    let report = grad_check(f, params, EPS, TOL).unwrap();
    out.push(Checked {
        name: name.to_string(),
        max_rel_error: report.max_rel_error,
    });
}

pub fn linear_algebra_ops() -> Vec<Checked> {
    let mut out = Vec::new();
    let mut rng = Rng::from_seed(1);
    let a = random(3, 4, &mut rng);
    let b = random(4, 2, &mut rng);
    let c = random(5, 4, &mut rng);
    check(&mut out, "matmul", |t, v| { let m = t.matmul(v[0], v[1])?; weighted_sum(t, m) }, &[a.clone(), b.clone()]);
    check(&mut out, "matmul_bt", |t, v| { let m = t.matmul_bt(v[0], v[1])?; weighted_sum(t, m) }, &[a.clone(), c]);
    check(&mut out, "transpose", |t, v| { let m = t.transpose(v[0]); weighted_sum(t, m) }, std::slice::from_ref(&a));
    // wide enough to take the narrow-output kernel path
    let wide = random(6, 40, &mut rng);
    let narrow = random(40, 3, &mut rng);
    check(&mut out, "matmul narrow", |t, v| { let m = t.matmul(v[0], v[1])?; weighted_sum(t, m) }, &[wide, narrow]);
    out
}

pub fn elementwise_ops() -> Vec<Checked> {
    let mut out = Vec::new();
    let mut rng = Rng::from_seed(2);
    let a = random(3, 4, &mut rng);
    let b = random(3, 4, &mut rng);
    let row = random(1, 4, &mut rng);
    let pos = Matrix::from_fn(3, 4, |_, _| rng.uniform_range(0.2, 2.0));
    let nz = away_from_zero(3, 4, &mut rng);
    check(&mut out, "add", |t, v| { let m = t.add(v[0], v[1])?; weighted_sum(t, m) }, &[a.clone(), b.clone()]);
    check(&mut out, "add broadcast", |t, v| { let m = t.add(v[0], v[1])?; weighted_sum(t, m) }, &[a.clone(), row]);
    check(&mut out, "sub", |t, v| { let m = t.sub(v[0], v[1])?; weighted_sum(t, m) }, &[a.clone(), b.clone()]);
    check(&mut out, "mul", |t, v| { let m = t.mul(v[0], v[1])?; weighted_sum(t, m) }, &[a.clone(), b.clone()]);
    check(&mut out, "scale", |t, v| { let m = t.scale(v[0], -2.5)?; weighted_sum(t, m) }, std::slice::from_ref(&a));
    check(&mut out, "add_scalar", |t, v| { let m = t.add_scalar(v[0], 0.7)?; weighted_sum(t, m) }, std::slice::from_ref(&a));
    check(&mut out, "relu", |t, v| { let m = t.relu(v[0]); weighted_sum(t, m) }, std::slice::from_ref(&nz));
    check(&mut out, "sigmoid", |t, v| { let m = t.sigmoid(v[0]); weighted_sum(t, m) }, std::slice::from_ref(&a));
    check(&mut out, "ln", |t, v| { let m = t.ln(v[0])?; weighted_sum(t, m) }, &[pos]);
    // interior and saturated entries, none within eps of a bound
    check(&mut out, "clamp", |t, v| { let m = t.clamp(v[0], -0.1, 0.1); weighted_sum(t, m) }, &[nz]);
    check(&mut out, "sum", |t, v| { let m = t.sum(v[0]); t.scale(m, 3.0) }, std::slice::from_ref(&a));
    check(&mut out, "mean", |t, v| { let m = t.mean(v[0]); t.scale(m, 3.0) }, &[a]);
    out
}

pub fn structural_ops() -> Vec<Checked> {
    let mut out = Vec::new();
    let mut rng = Rng::from_seed(3);
    let a = random(4, 5, &mut rng);
    let b = random(4, 2, &mut rng);
    let gain = random(1, 5, &mut rng);
    let bias = random(1, 5, &mut rng);
    check(&mut out, "softmax_rows", |t, v| { let m = t.softmax_rows(v[0]); weighted_sum(t, m) }, std::slice::from_ref(&a));
    check(
        &mut out,
        "layer_norm",
        |t, v| { let m = t.layer_norm(v[0], v[1], v[2], 1e-5)?; weighted_sum(t, m) },
        &[a.clone(), gain, bias],
    );
    check(&mut out, "concat_cols", |t, v| { let m = t.concat_cols(&[v[0], v[1], v[0]])?; weighted_sum(t, m) }, &[a.clone(), b]);
    check(&mut out, "gather_flat", |t, v| { let m = t.gather_flat(v[0], &[3, 0, 0, 2])?; weighted_sum(t, m) }, std::slice::from_ref(&a));
    // the mask is frozen by re-seeding inside the closure
    check(
        &mut out,
        "dropout",
        |t, v| { let m = t.dropout(v[0], 0.3, &mut Rng::from_seed(7), true)?; weighted_sum(t, m) },
        &[a],
    );
    out
}

pub fn losses() -> Vec<Checked> {
    let mut out = Vec::new();
    let mut rng = Rng::from_seed(4);
    let logits = random(6, 1, &mut rng);
    let labels = SummaryLabels::binary(vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
    let target = SummaryLabels::averaged(vec![0.2, 0.9, 0.5, 0.0, 1.0, 0.3]).unwrap();
    check(&mut out, "bce", |t, v| { let s = t.sigmoid(v[0]); bce_loss(t, s, &labels) }, std::slice::from_ref(&logits));
    check(&mut out, "mse", |t, v| { let s = t.sigmoid(v[0]); mse_loss(t, s, &target) }, &[logits]);
    out
}

pub fn model_check(config: &ModelConfig, m: usize, seed: u64, eps: f64) -> f64 {
    let mut rng = Rng::from_seed(seed);
    let weights = init_weights(config, &mut rng).unwrap().cast::<f64>();
    let x = Matrix::from_fn(4, config.dim, |_, _| rng.normal() * 0.5);
    let y = Matrix::from_fn(m, config.dim, |_, _| rng.normal() * 0.5);
    let labels = SummaryLabels::binary(vec![1.0, 0.0, 1.0, 0.0]).unwrap();
    let report = grad_check(
        |tape, vars| {
            let params = BoundParams::from_vars(&weights, vars.to_vec());
            let xv = tape.constant(x.clone());
            let yv = tape.constant(y.clone());
            let out = forward(tape, &params, xv, yv, config, &mut Rng::from_seed(0), false)?;
            bce_loss(tape, out.scores, &labels)
        },
        weights.tensors(),
        eps,
        TOL,
    )
    .unwrap();
    report.max_rel_error
}

pub fn full_model_every_variant() -> Vec<Checked> {
    let mut out = Vec::new();
    for variant in Variant::ALL {
        let base = ModelConfig {
            heads: 4,
            dropout_rate: 0.0,
            single_vector_t: 3,
            ..ModelConfig::with_dim(16)
        };
        let config = ModelConfig {
            heads: variant.apply(&base).heads.min(4),
            ..variant.apply(&base)
        };
        out.push(Checked {
            name: format!("forward + BCE, {}", variant.name()),
            max_rel_error: model_check(&config, 2, 11, EPS),
        });
    }
    out
}

