mod common;

use std::fs;

use common::{tiny_dataset, tiny_spec};
use sdvsum::datakit::{Dataset, Split, generate_synthetic, read_embeddings, sdve, synthesize, write_embeddings};
use sdvsum::metrics::{Mode, evaluate};
use sdvsum::model::{Model, ModelConfig, Variant, checkpoint};
use sdvsum::train::{TrainConfig, train_run};
use sdvsum::{Matrix, Rng};

fn bits(values: &[f32]) -> Vec<u32> {
    values.iter().map(|v| v.to_bits()).collect()
}

#[test]
fn sdve_round_trip_is_byte_exact() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = Rng::from_seed(1);
    for i in 0..20 {
        let rows = rng.int_inclusive(1, 30);
        let cols = rng.int_inclusive(1, 70);
        let mut m = Matrix::from_fn(rows, cols, |_, _| rng.normal() as f32 * 1e3);
        if i == 0 {
            m = Matrix::new(1, 4, vec![-0.0, f32::MIN_POSITIVE / 4.0, f32::MAX, f32::MIN]).unwrap();
        }
        let path = dir.path().join(format!("m{i}.sdve"));
        write_embeddings(&m, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 16 + 4 * m.rows() * m.cols());
        let back = read_embeddings(&path).unwrap();
        assert_eq!(back.shape(), m.shape());
        assert_eq!(bits(back.data()), bits(m.data()));
        assert_eq!(sdve::encode(&back), bytes);
    }
}

#[test]
fn sdve_rejects_damaged_files() {
    let dir = tempfile::tempdir().unwrap();
    let bytes = sdve::encode(&Matrix::filled(3, 4, 0.5));
    let p = dir.path().join("x.sdve");
    for cut in [0, 8, 15, 16, bytes.len() - 1] {
        fs::write(&p, &bytes[..cut]).unwrap();
        assert!(read_embeddings(&p).is_err(), "cut at {cut}");
    }
    let mut bad_magic = bytes.clone();
    bad_magic[0] ^= 0xff;
    fs::write(&p, &bad_magic).unwrap();
    assert!(read_embeddings(&p).is_err());
    let mut long = bytes;
    long.push(0);
    fs::write(&p, &long).unwrap();
    assert!(read_embeddings(&p).is_err());
}

#[test]
fn checkpoint_round_trip_is_byte_exact_and_scores_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let data = tiny_dataset(4);
    let video = &data.videos[0];
    for variant in Variant::ALL {
        let config = variant.apply(&ModelConfig::with_dim(16));
        let model = Model::new(config, 9).unwrap();
        let path = dir.path().join(format!("{}.sdvc", variant.name()));
        model.save(&path).unwrap();
        let bytes = fs::read(&path).unwrap();
        let loaded = Model::load(&path).unwrap();
        assert_eq!(loaded.config, model.config);
        assert_eq!(checkpoint::encode(&loaded.config, &loaded.weights).unwrap(), bytes);
        let script = &video.summaries[0].script;
        let a = model.score(&video.frames, script).unwrap();
        let b = loaded.score(&video.frames, script).unwrap();
        assert_eq!(bits(a.values()), bits(b.values()));
    }
}

#[test]
fn checkpoint_rejects_damage_and_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let model = Model::new(ModelConfig::with_dim(16), 1).unwrap();
    let path = dir.path().join("m.sdvc");
    model.save(&path).unwrap();
    let bytes = fs::read(&path).unwrap();
    fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(Model::load(&path).is_err());
    let other = ModelConfig::with_dim(32);
    assert!(checkpoint::decode(&bytes, &path, Some(&other)).is_err());
    assert!(checkpoint::decode(&bytes, &path, Some(&model.config)).is_ok());
}

#[test]
fn written_dataset_reads_back_identically() {
    let dir = tempfile::tempdir().unwrap();
    let spec = tiny_spec(6);
    let manifest = generate_synthetic(&spec, dir.path()).unwrap();
    let from_disk = Dataset::load(&manifest).unwrap();
    let in_memory = synthesize(&spec).unwrap().to_dataset().unwrap();
    assert_eq!(from_disk.videos.len(), in_memory.videos.len());
    for (a, b) in from_disk.videos.iter().zip(&in_memory.videos) {
        assert_eq!(a.id, b.id);
        assert_eq!(a.split, b.split);
        assert_eq!(bits(a.frames.data()), bits(b.frames.data()));
        assert_eq!(a.summaries.len(), b.summaries.len());
        for (x, y) in a.summaries.iter().zip(&b.summaries) {
            assert_eq!(bits(x.script.data()), bits(y.script.data()));
            assert_eq!(x.labels, y.labels);
        }
    }
    // same spec, same bytes
    let again = tempfile::tempdir().unwrap();
    generate_synthetic(&spec, again.path()).unwrap();
    let frames = &manifest.videos_in(Split::Train).next().unwrap().frames;
    let relative = frames.strip_prefix(dir.path()).unwrap();
    assert_eq!(fs::read(frames).unwrap(), fs::read(again.path().join(relative)).unwrap());
}

#[test]
fn identical_seeds_give_identical_reports() {
    let data = tiny_dataset(8);
    let cfg = TrainConfig {
        epochs: 3,
        lr: 1e-3,
        seed: 17,
        ..TrainConfig::default()
    };
    let config = ModelConfig::with_dim(16);
    let a = train_run(&data, &config, &cfg, None, &mut |_| {}).unwrap();
    let b = train_run(&data, &config, &cfg, None, &mut |_| {}).unwrap();
    assert_eq!(a.report, b.report);
    assert_eq!(a.report.to_json_lines().unwrap(), b.report.to_json_lines().unwrap());
    for (x, y) in a.best.weights.tensors().iter().zip(b.best.weights.tensors()) {
        assert_eq!(bits(x.data()), bits(y.data()));
    }
    let other = TrainConfig { seed: 18, ..cfg };
    let c = train_run(&data, &config, &other, None, &mut |_| {}).unwrap();
    assert_ne!(a.report.epochs, c.report.epochs);
}

#[test]
fn best_checkpoint_reproduces_best_validation_score() {
    let dir = tempfile::tempdir().unwrap();
    let data = tiny_dataset(8);
    let cfg = TrainConfig {
        epochs: 4,
        lr: 1e-3,
        ..TrainConfig::default()
    };
    let out = train_run(&data, &ModelConfig::with_dim(16), &cfg, Some(dir.path()), &mut |_| {}).unwrap();
    for e in 1..=4 {
        assert!(dir.path().join(format!("epoch_{e:03}.sdvc")).exists());
    }
    let path = out.report.best.checkpoint.clone().expect("checkpoint path");
    let model = Model::load(&path).unwrap();
    let report = evaluate(&model, &data, Split::Validation, Mode::ScriptDriven).unwrap();
    assert_eq!(report.fscore, out.report.best.best_val_fscore);
}
