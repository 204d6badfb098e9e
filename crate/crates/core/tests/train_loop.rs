mod common;

use common::tiny_spec;
use sdvsum::Error;
use sdvsum::datakit::{Dataset, Split, SynthSpec, synthesize};
use sdvsum::metrics::{Mode, evaluate};
use sdvsum::model::ModelConfig;
use sdvsum::train::{TrainConfig, train_run};

fn dataset(train_videos: usize) -> Dataset {
    let spec = SynthSpec {
        train_videos,
        ..tiny_spec(3)
    };
    synthesize(&spec).unwrap().to_dataset().unwrap()
}

fn config(epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        lr: 1e-3,
        ..TrainConfig::default()
    }
}

#[test]
fn step_count_follows_batching() {
    // 10 videos with 3 scripts each: 30 samples, groups of 4 with a remainder of 2
    let data = dataset(10);
    let out = train_run(&data, &ModelConfig::with_dim(16), &config(2), None, &mut |_| {}).unwrap();
    assert_eq!(out.steps, 2 * 8);
    let single = TrainConfig {
        batch_size: 1,
        ..config(1)
    };
    let out = train_run(&data, &ModelConfig::with_dim(16), &single, None, &mut |_| {}).unwrap();
    assert_eq!(out.steps, 30);
}

#[test]
fn loss_falls_and_best_epoch_is_the_first_maximum() {
    let data = dataset(10);
    let mut seen = Vec::new();
    let out = train_run(&data, &ModelConfig::with_dim(16), &config(10), None, &mut |e| seen.push(e.clone())).unwrap();
    let epochs = &out.report.epochs;
    assert_eq!(&seen, epochs);
    assert_eq!(epochs.iter().map(|e| e.epoch).collect::<Vec<_>>(), (1..=10).collect::<Vec<_>>());
    assert!(epochs[9].train_loss < epochs[0].train_loss, "{epochs:?}");

    let max = epochs.iter().map(|e| e.val_fscore).fold(f64::MIN, f64::max);
    let first = epochs.iter().find(|e| e.val_fscore == max).unwrap().epoch;
    assert_eq!(out.report.best.best_val_fscore, max);
    assert_eq!(out.report.best.best_epoch, first);
    assert_eq!(out.report.best.checkpoint, None);

    let again = evaluate(&out.best, &data, Split::Validation, Mode::ScriptDriven).unwrap();
    assert_eq!(again.fscore, max);
}

#[test]
fn divergence_names_epoch_and_sample() {
    let mut data = dataset(4);
    let target = data.videos.iter_mut().find(|v| v.split == Split::Train).unwrap();
    let id = target.id.clone();
    target.frames = sdvsum::Matrix::filled(target.frames.rows(), target.frames.cols(), 3e38);
    let err = train_run(&data, &ModelConfig::with_dim(16), &config(1), None, &mut |_| {})
        .err()
        .expect("training must fail");
    match err {
        Error::NonFiniteLoss { epoch, sample } => {
            assert_eq!(epoch, 1);
            assert!(sample.starts_with(&format!("{id}#")), "{sample}");
        }
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn generic_mode_trains_one_sample_per_video() {
    let data = dataset(10);
    let cfg = TrainConfig {
        mode: Mode::Generic,
        ..config(2)
    };
    let out = train_run(&data, &ModelConfig::with_dim(16), &cfg, None, &mut |_| {}).unwrap();
    assert_eq!(out.steps, 2 * 3);
    assert!(out.report.epochs.iter().all(|e| e.train_loss.is_finite()));
}

#[test]
fn invalid_settings_are_rejected() {
    let data = dataset(2);
    let bad = TrainConfig {
        batch_size: 0,
        ..config(1)
    };
    assert!(train_run(&data, &ModelConfig::with_dim(16), &bad, None, &mut |_| {}).is_err());
    let wrong_dim = ModelConfig::with_dim(32);
    assert!(matches!(
        train_run(&data, &wrong_dim, &config(1), None, &mut |_| {}),
        Err(Error::Config(_))
    ));
}
