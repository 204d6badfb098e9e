//! A small ablation sweep: SD-VSum and Variants 1-4 trained on the
//! same synthetic data with the same seed.
//!
//! cargo run --release --example ablation -- [epochs]

use sdvsum::cli::{ablate, ablation_table};
use sdvsum::datakit::{SynthSpec, synthesize};
use sdvsum::model::ModelConfig;
use sdvsum::train::TrainConfig;

fn main() -> sdvsum::Result<()> {
    let epochs = std::env::args().nth(1).map_or(3, |s| s.parse().expect("epochs"));
    let data = synthesize(&SynthSpec {
        train_videos: 40,
        validation_videos: 10,
        test_videos: 10,
        ..SynthSpec::default()
    })?
    .to_dataset()?;
    let train = TrainConfig {
        epochs,
        lr: 1e-3,
        ..TrainConfig::default()
    };
    let rows = ablate(&data, &ModelConfig::with_dim(data.dimension), &train, None)?;
    print!("{}", ablation_table(&rows));
    Ok(())
}
