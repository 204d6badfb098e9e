//! Trains SD-VSum on an in-memory synthetic dataset and reports test F-Score.
//!
//! cargo run --release --example train_sdvsum -- [epochs] [lr] [seed] [dropout] [train_videos]

use std::time::Instant;

use sdvsum::datakit::{Split, SynthSpec, synthesize};
use sdvsum::metrics::evaluate_script_driven;
use sdvsum::model::ModelConfig;
use sdvsum::train::{TrainConfig, train_run};

fn main() -> sdvsum::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let epochs = args.first().map_or(Ok(10), |s| s.parse()).expect("epochs");
    let lr = args.get(1).map_or(Ok(5e-5), |s| s.parse()).expect("lr");
    let seed = args.get(2).map_or(Ok(42), |s| s.parse()).expect("seed");
    let dropout = args.get(3).map_or(Ok(0.5), |s| s.parse()).expect("dropout");
    let train_videos = args.get(4).map_or(Ok(200), |s| s.parse()).expect("train_videos");

    let spec = SynthSpec {
        train_videos,
        ..SynthSpec::default()
    };
    let data = synthesize(&spec)?.to_dataset()?;
    let model = ModelConfig {
        dropout_rate: dropout,
        ..ModelConfig::with_dim(data.dimension)
    };
    let cfg = TrainConfig {
        epochs,
        lr,
        seed,
        ..TrainConfig::default()
    };
    let start = Instant::now();
    let outcome = train_run(&data, &model, &cfg, None, &mut |e| {
        println!(
            "epoch {:3}  loss {:.4}  val F {:.2}  ({:.0?})",
            e.epoch,
            e.train_loss,
            e.val_fscore,
            start.elapsed()
        );
    })?;
    let test = evaluate_script_driven(&outcome.best, &data, Split::Test)?;
    println!(
        "best epoch {}  test F {:.2}  params {}",
        outcome.report.best.best_epoch,
        test.fscore,
        outcome.best.parameter_count()
    );
    Ok(())
}
