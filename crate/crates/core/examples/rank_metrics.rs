//! F-Score and tie-aware rank correlations on small hand-made inputs.

use sdvsum::metrics::{average_ranks, fscore_masks, kendall_tau_b, spearman_rho};

fn main() -> sdvsum::Result<()> {
    let pred = [true, true, true, false, false];
    let gt = [false, true, true, true, false];
    println!("F(pred, gt) = {:.2}", fscore_masks(&pred, &gt)?);

    let scores = [0.9, 0.4, 0.4, 0.1, 0.7];
    let averaged = [0.8, 0.3, 0.5, 0.0, 0.8];
    println!("ranks of scores: {:?}", average_ranks(&scores));
    println!("tau-b = {:.4}", kendall_tau_b(&scores, &averaged)?.unwrap());
    println!("rho   = {:.4}", spearman_rho(&scores, &averaged)?.unwrap());
    match kendall_tau_b(&[0.5, 0.5, 0.5], &[1.0, 2.0, 3.0])? {
        Some(t) => println!("tau-b = {t}"),
        None => println!("constant input: correlation undefined"),
    }
    Ok(())
}
