//! Synthetic topic-planted datasets.
//!
//! `K` random unit topic vectors are planted in `D` dimensions. A video is a
//! timeline of contiguous segments, each showing one topic; a frame embedding
//! is its topic vector plus isotropic Gaussian noise of total norm ≈ σ
//! (per-coordinate deviation σ/√D), renormalised. Each script picks a topic
//! subset `S` and emits `M` sentence embeddings drawn the same way from the
//! topics of `S`; its ground truth marks the frames whose topic is in `S`.
//! `|S|` ranges over `1..=K/2`: among the sizes whose subsets keep the
//! positive fraction within `[p/2, min(2p, 0.9)]`, one is drawn with weight
//! `|S|²`, then a subset of that size uniformly.
//!
//! With `exact_positives`, every video is laid out in blocks of exactly
//! `max(1, ⌊p·N⌋)` frames per topic plus one filler block, and each script
//! names one block's topic, so every ground truth has exactly that many
//! positives.
//!
//! Segment boundaries are written as the video's fragments. All randomness
//! comes from the `data` stream of the master seed: index 0 for the topics,
//! `1 + i` for video `i`, and `u64::MAX` for the split assignment.

use std::fs;
use std::path::Path;

use crate::datakit::manifest::{
    DatasetManifest, ManifestFile, Split, SummaryRecord, VideoRecord, load_manifest, write_manifest,
};
use crate::datakit::dataset::{Dataset, SummaryData, VideoData};
use crate::datakit::labels::SummaryLabels;
use crate::datakit::sdve::write_embeddings;
use crate::error::{Error, Result};
use crate::numkit::Matrix;
use crate::numkit::rng::{DATA, Rng};

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub topics: usize,
    pub train_videos: usize,
    pub validation_videos: usize,
    pub test_videos: usize,
    /// Inclusive range of frames per video.
    pub frames: (usize, usize),
    /// Inclusive range of sentences per script.
    pub sentences: (usize, usize),
    pub dimension: usize,
    pub noise: f64,
    pub positive_fraction: f64,
    pub summaries_per_video: usize,
    pub exact_positives: bool,
    pub seed: u64,
}

impl Default for SynthSpec {
    /// The reference desk-scale dataset.
    fn default() -> Self {
        Self {
            topics: 8,
            train_videos: 200,
            validation_videos: 50,
            test_videos: 50,
            frames: (60, 60),
            sentences: (3, 6),
            dimension: 64,
            noise: 0.1,
            positive_fraction: 0.15,
            summaries_per_video: 10,
            exact_positives: false,
            seed: 42,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(format!("synthetic spec: {m}")));
        if self.topics < 2 {
            return fail("at least 2 topics are required");
        }
        if self.dimension < 8 {
            return fail("dimension must be at least 8");
        }
        if !(self.positive_fraction > 0.0 && self.positive_fraction < 1.0) {
            return fail("positive fraction must lie in (0, 1)");
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return fail("noise must be non-negative");
        }
        if self.frames.0 < 2 || self.frames.0 > self.frames.1 {
            return fail("frame range must satisfy 2 <= min <= max");
        }
        if self.sentences.0 < 1 || self.sentences.0 > self.sentences.1 {
            return fail("sentence range must satisfy 1 <= min <= max");
        }
        if self.summaries_per_video < 1 {
            return fail("at least one summary per video");
        }
        if self.train_videos + self.validation_videos + self.test_videos == 0 {
            return fail("no videos requested");
        }
        Ok(())
    }

    pub fn total_videos(&self) -> usize {
        self.train_videos + self.validation_videos + self.test_videos
    }

    /// Allowed positive-label fraction per ground truth.
    pub fn fraction_bounds(&self) -> (f64, f64) {
        let p = self.positive_fraction;
        (p / 2.0, (2.0 * p).min(0.9))
    }
}

#[derive(Clone, Debug)]
pub struct SynthScript {
    pub topics: Vec<usize>,
    pub sentences: Matrix,
    pub labels: Vec<f32>,
}

#[derive(Clone, Debug)]
pub struct SynthVideo {
    pub id: String,
    pub split: Split,
    pub frame_topics: Vec<usize>,
    pub frames: Matrix,
    pub segments: Vec<(usize, usize)>,
    pub description: Matrix,
    pub scripts: Vec<SynthScript>,
}

#[derive(Clone, Debug)]
pub struct SynthDataset {
    pub spec: SynthSpec,
    /// `K x D`, one unit topic vector per row.
    pub topics: Matrix,
    pub videos: Vec<SynthVideo>,
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

fn noisy_unit(topic: &[f32], noise: f64, rng: &mut Rng) -> Vec<f64> {
    let scale = noise / (topic.len() as f64).sqrt();
    let mut v: Vec<f64> = topic.iter().map(|&t| t as f64 + scale * rng.normal()).collect();
    normalize(&mut v);
    v
}

fn to_matrix(rows: Vec<Vec<f64>>) -> Matrix {
    let r = rows.len();
    let c = rows[0].len();
    Matrix::new(r, c, rows.into_iter().flatten().map(|x| x as f32).collect())
        .expect("synthetic values are finite")
}

struct Layout {
    frame_topics: Vec<usize>,
    segments: Vec<(usize, usize)>,
}

fn random_layout(spec: &SynthSpec, n: usize, rng: &mut Rng) -> Layout {
    let lo = (n / 20).max(1);
    let hi = (n / 6).max(lo);
    let mut frame_topics = Vec::with_capacity(n);
    let mut segments = Vec::new();
    let mut prev = usize::MAX;
    while frame_topics.len() < n {
        let start = frame_topics.len();
        let len = rng.int_inclusive(lo, hi).min(n - start);
        let mut topic = rng.int_inclusive(0, spec.topics - 1);
        while topic == prev {
            topic = rng.int_inclusive(0, spec.topics - 1);
        }
        prev = topic;
        frame_topics.extend(std::iter::repeat_n(topic, len));
        segments.push((start, start + len));
    }
    Layout {
        frame_topics,
        segments,
    }
}

fn exact_layout(spec: &SynthSpec, n: usize, rng: &mut Rng) -> (Layout, Vec<usize>) {
    let block = exact_positive_count(spec.positive_fraction, n);
    let full = (n / block).min(spec.topics - 1);
    let mut order: Vec<usize> = (0..spec.topics).collect();
    rng.shuffle(&mut order);
    let named = order[..full].to_vec();
    let filler = order[full];
    let mut blocks: Vec<(usize, usize)> = named.iter().map(|&t| (t, block)).collect();
    if n > full * block {
        blocks.push((filler, n - full * block));
    }
    rng.shuffle(&mut blocks);
    let mut frame_topics = Vec::with_capacity(n);
    let mut segments = Vec::new();
    for (topic, len) in blocks {
        segments.push((frame_topics.len(), frame_topics.len() + len));
        frame_topics.extend(std::iter::repeat_n(topic, len));
    }
    (
        Layout {
            frame_topics,
            segments,
        },
        named,
    )
}

/// Positive frames per ground truth in exact mode.
pub fn exact_positive_count(p: f64, n: usize) -> usize {
    ((p * n as f64 + 1e-9).floor() as usize).max(1)
}

/// Subsets of the present topics with at most `max_size` members whose frame
/// share lies within `bounds`, grouped by size.
fn feasible_subsets(counts: &[(usize, usize)], n: usize, max_size: usize, bounds: (f64, f64)) -> Vec<Vec<Vec<usize>>> {
    let mut by_size = vec![Vec::new(); max_size + 1];
    let k = counts.len();
    let enumerate = |mask: u32| -> Option<(usize, Vec<usize>)> {
        let size = mask.count_ones() as usize;
        if size == 0 || size > max_size {
            return None;
        }
        let mut total = 0;
        let mut topics = Vec::with_capacity(size);
        for (i, &(t, c)) in counts.iter().enumerate() {
            if mask & (1 << i) != 0 {
                total += c;
                topics.push(t);
            }
        }
        let frac = total as f64 / n as f64;
        (frac >= bounds.0 && frac <= bounds.1).then_some((size, topics))
    };
    // topic counts are small at desk scale; cap the enumeration anyway
    let k = k.min(16);
    for mask in 1u32..(1u32 << k) {
        if let Some((size, topics)) = enumerate(mask) {
            by_size[size].push(topics);
        }
    }
    by_size
}

/// Draws a subset size with probability proportional to its square.
/// Single-topic scripts give every frame the same attention output, so they
/// are kept rare.
fn weighted_size(sizes: &[usize], rng: &mut Rng) -> usize {
    let total: usize = sizes.iter().map(|s| s * s).sum();
    let mut u = rng.int_inclusive(0, total - 1);
    for &s in sizes {
        if u < s * s {
            return s;
        }
        u -= s * s;
    }
    unreachable!("u < total")
}

fn topic_counts(frame_topics: &[usize], k: usize) -> Vec<(usize, usize)> {
    let mut counts = vec![0; k];
    for &t in frame_topics {
        counts[t] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .collect()
}

fn sentences_for(topics: &[usize], m: usize, topic_vecs: &Matrix, noise: f64, rng: &mut Rng) -> Matrix {
    // every topic of the script is mentioned at least once
    let mut assignment: Vec<usize> = topics.to_vec();
    while assignment.len() < m {
        assignment.push(topics[rng.int_inclusive(0, topics.len() - 1)]);
    }
    rng.shuffle(&mut assignment);
    to_matrix(
        assignment
            .iter()
            .map(|&t| noisy_unit(topic_vecs.row(t), noise, rng))
            .collect(),
    )
}

fn synth_video(spec: &SynthSpec, topic_vecs: &Matrix, index: usize, split: Split) -> Result<SynthVideo> {
    let mut rng = Rng::derive_indexed(spec.seed, DATA, 1 + index as u64);
    let n = rng.int_inclusive(spec.frames.0, spec.frames.1);
    let bounds = spec.fraction_bounds();
    let max_size = (spec.topics / 2).max(1);

    let (layout, exact_topics) = if spec.exact_positives {
        let (layout, named) = exact_layout(spec, n, &mut rng);
        (layout, Some(named))
    } else {
        let mut attempt = 0;
        loop {
            let layout = random_layout(spec, n, &mut rng);
            let counts = topic_counts(&layout.frame_topics, spec.topics);
            let feasible = feasible_subsets(&counts, n, max_size.min(spec.sentences.0), bounds);
            if feasible.iter().any(|s| !s.is_empty()) {
                break (layout, None);
            }
            attempt += 1;
            if attempt > 1000 {
                return Err(Error::Config(format!(
                    "cannot lay out a {n}-frame video with positive fraction within {bounds:?}"
                )));
            }
        }
    };

    let frames = to_matrix(
        layout
            .frame_topics
            .iter()
            .map(|&t| noisy_unit(topic_vecs.row(t), spec.noise, &mut rng))
            .collect(),
    );

    let counts = topic_counts(&layout.frame_topics, spec.topics);
    let mut mean = vec![0.0f64; spec.dimension];
    for &(t, _) in &counts {
        for (m, &x) in mean.iter_mut().zip(topic_vecs.row(t)) {
            *m += x as f64 / counts.len() as f64;
        }
    }
    let mean: Vec<f32> = mean.into_iter().map(|x| x as f32).collect();
    let description = to_matrix(vec![noisy_unit(&mean, spec.noise, &mut rng)]);

    let mut scripts = Vec::with_capacity(spec.summaries_per_video);
    for _ in 0..spec.summaries_per_video {
        let m = rng.int_inclusive(spec.sentences.0, spec.sentences.1);
        let chosen: Vec<usize> = match &exact_topics {
            Some(named) => vec![named[rng.int_inclusive(0, named.len() - 1)]],
            None => {
                let feasible = feasible_subsets(&counts, n, max_size.min(m), bounds);
                let sizes: Vec<usize> = (1..feasible.len()).filter(|&s| !feasible[s].is_empty()).collect();
                let size = weighted_size(&sizes, &mut rng);
                let options = &feasible[size];
                options[rng.int_inclusive(0, options.len() - 1)].clone()
            }
        };
        let labels: Vec<f32> = layout
            .frame_topics
            .iter()
            .map(|t| if chosen.contains(t) { 1.0 } else { 0.0 })
            .collect();
        let sentences = sentences_for(&chosen, m, topic_vecs, spec.noise, &mut rng);
        scripts.push(SynthScript {
            topics: chosen,
            sentences,
            labels,
        });
    }

    Ok(SynthVideo {
        id: format!("vid{index:05}"),
        split,
        frame_topics: layout.frame_topics,
        frames,
        segments: layout.segments,
        description,
        scripts,
    })
}

/// Builds the whole dataset in memory.
pub fn synthesize(spec: &SynthSpec) -> Result<SynthDataset> {
    spec.validate()?;
    let mut rng = Rng::derive_indexed(spec.seed, DATA, 0);
    let topics = to_matrix(
        (0..spec.topics)
            .map(|_| {
                let mut v: Vec<f64> = (0..spec.dimension).map(|_| rng.normal()).collect();
                normalize(&mut v);
                v
            })
            .collect(),
    );

    let mut splits: Vec<Split> = std::iter::repeat_n(Split::Train, spec.train_videos)
        .chain(std::iter::repeat_n(Split::Validation, spec.validation_videos))
        .chain(std::iter::repeat_n(Split::Test, spec.test_videos))
        .collect();
    Rng::derive_indexed(spec.seed, DATA, u64::MAX).shuffle(&mut splits);

    let videos = splits
        .iter()
        .enumerate()
        .map(|(i, &split)| synth_video(spec, &topics, i, split))
        .collect::<Result<Vec<_>>>()?;
    Ok(SynthDataset {
        spec: spec.clone(),
        topics,
        videos,
    })
}

impl SynthDataset {
    /// The same data as an in-memory [`Dataset`], without touching disk.
    pub fn to_dataset(&self) -> Result<Dataset> {
        let videos = self
            .videos
            .iter()
            .map(|v| {
                let summaries = v
                    .scripts
                    .iter()
                    .map(|s| {
                        Ok(SummaryData {
                            labels: SummaryLabels::binary(s.labels.clone())?,
                            script: s.sentences.clone(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(VideoData {
                    id: v.id.clone(),
                    split: v.split,
                    frames: v.frames.clone(),
                    summaries,
                    description: Some(v.description.clone()),
                    fragments: Some(v.segments.clone()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            dimension: self.spec.dimension,
            videos,
        })
    }

    /// Writes embeddings, labels and `manifest.json` under `out_dir`.
    pub fn write(&self, out_dir: impl AsRef<Path>) -> Result<DatasetManifest> {
        let out = out_dir.as_ref();
        for sub in ["frames", "scripts", "labels", "descriptions"] {
            let dir = out.join(sub);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        let mut records = Vec::with_capacity(self.videos.len());
        for v in &self.videos {
            let frames = format!("frames/{}.sdve", v.id);
            write_embeddings(&v.frames, out.join(&frames))?;
            let description = format!("descriptions/{}.sdve", v.id);
            write_embeddings(&v.description, out.join(&description))?;
            let mut summaries = Vec::with_capacity(v.scripts.len());
            for (j, s) in v.scripts.iter().enumerate() {
                let labels = format!("labels/{}_{j:02}.sdve", v.id);
                let script = format!("scripts/{}_{j:02}.sdve", v.id);
                let lm = Matrix::new(s.labels.len(), 1, s.labels.clone())?;
                write_embeddings(&lm, out.join(&labels))?;
                write_embeddings(&s.sentences, out.join(&script))?;
                summaries.push(SummaryRecord { labels, script });
            }
            records.push(VideoRecord {
                id: v.id.clone(),
                split: v.split.as_str().to_string(),
                frames,
                summaries,
                description: Some(description),
                fragments: Some(v.segments.iter().map(|&(s, e)| [s, e]).collect()),
            });
        }
        let manifest_path = out.join("manifest.json");
        write_manifest(
            &ManifestFile {
                dimension: self.spec.dimension,
                videos: records,
            },
            &manifest_path,
        )?;
        load_manifest(&manifest_path)
    }
}

/// Generates the dataset described by `spec` into `out_dir` and returns its
/// validated manifest.
pub fn generate_synthetic(spec: &SynthSpec, out_dir: impl AsRef<Path>) -> Result<DatasetManifest> {
    synthesize(spec)?.write(out_dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthSpec {
        SynthSpec {
            train_videos: 6,
            validation_videos: 2,
            test_videos: 2,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn invalid_specs() {
        for bad in [
            SynthSpec { topics: 1, ..small() },
            SynthSpec { dimension: 4, ..small() },
            SynthSpec { positive_fraction: 1.0, ..small() },
            SynthSpec { noise: -0.1, ..small() },
        ] {
            assert!(synthesize(&bad).is_err());
        }
    }

    #[test]
    fn split_sizes_and_fraction_bounds() {
        let d = synthesize(&small()).unwrap();
        let count = |s| d.videos.iter().filter(|v| v.split == s).count();
        assert_eq!((count(Split::Train), count(Split::Validation), count(Split::Test)), (6, 2, 2));
        let (lo, hi) = d.spec.fraction_bounds();
        for v in &d.videos {
            assert_eq!(v.scripts.len(), 10);
            for s in &v.scripts {
                let frac = s.labels.iter().sum::<f32>() as f64 / v.frame_topics.len() as f64;
                assert!(frac >= lo && frac <= hi, "{frac}");
                assert!(s.topics.len() <= 4 && s.topics.len() <= s.sentences.rows());
                assert!((3..=6).contains(&s.sentences.rows()));
            }
        }
    }

    #[test]
    fn zero_noise_frames_are_topics() {
        let d = synthesize(&SynthSpec { noise: 0.0, ..small() }).unwrap();
        for v in &d.videos {
            for (r, &t) in v.frame_topics.iter().enumerate() {
                for (a, b) in v.frames.row(r).iter().zip(d.topics.row(t)) {
                    assert!((a - b).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn exact_mode_positive_counts() {
        let spec = SynthSpec { exact_positives: true, ..small() };
        let d = synthesize(&spec).unwrap();
        for v in &d.videos {
            let want = exact_positive_count(0.15, v.frame_topics.len());
            assert_eq!(want, 9);
            for s in &v.scripts {
                assert_eq!(s.labels.iter().filter(|&&x| x == 1.0).count(), want);
            }
        }
    }
}
