//! Finite-difference check of the full SD-VSum forward pass and BCE loss
//! (dropout off) against the tape's reverse-mode gradients.

use sdvsum::datakit::SummaryLabels;
use sdvsum::model::{BoundParams, ModelConfig, forward, init_weights};
use sdvsum::numkit::{Matrix, Rng, grad_check};
use sdvsum::train::bce_loss;

fn main() -> sdvsum::Result<()> {
    let config = ModelConfig {
        heads: 4,
        dropout_rate: 0.0,
        ..ModelConfig::with_dim(16)
    };
    let mut rng = Rng::from_seed(1);
    let weights = init_weights(&config, &mut rng)?.cast::<f64>();
    let x = Matrix::from_fn(4, 16, |_, _| rng.normal() * 0.5);
    let y = Matrix::from_fn(2, 16, |_, _| rng.normal() * 0.5);
    let labels = SummaryLabels::binary(vec![1.0, 0.0, 0.0, 1.0])?;

    let report = grad_check(
        |tape, vars| {
            let params = BoundParams::from_vars(&weights, vars.to_vec());
            let xv = tape.constant(x.clone());
            let yv = tape.constant(y.clone());
            let out = forward(tape, &params, xv, yv, &config, &mut Rng::from_seed(0), false)?;
            bce_loss(tape, out.scores, &labels)
        },
        weights.tensors(),
        1e-3,
        1e-3,
    )?;
    for (p, name) in report.params.iter().zip(weights.names()) {
        println!("{name:<20} max rel error {:.2e}", p.max_rel_error);
    }
    println!("overall {:.2e} (tolerance {:.0e}): {}", report.max_rel_error, report.tol, if report.passed() { "pass" } else { "FAIL" });
    Ok(())
}
