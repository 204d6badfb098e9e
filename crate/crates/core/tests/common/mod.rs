#![allow(dead_code)]

pub mod grad_suite;

use sdvsum::Result;
use sdvsum::model::{BoundParams, ModelConfig, TextRep, forward, init_weights};
use sdvsum::numkit::{Rng, Tape};
use sdvsum::datakit::{Dataset, SynthSpec, VideoData, synthesize};
use sdvsum::metrics::FrameScorer;
use sdvsum::model::ScoreVector;
use sdvsum::numkit::Matrix;
use sdvsum::train::average_ground_truth;

/// Scores each frame with its ground-truth label (the averaged ground truth
/// for description queries).
pub struct Oracle;

impl FrameScorer for Oracle {
    fn score(&self, video: &VideoData, _text: &Matrix, summary: Option<usize>) -> Result<ScoreVector> {
        match summary {
            Some(j) => ScoreVector::new(video.summaries[j].labels.values().to_vec()),
            None => ScoreVector::new(average_ground_truth(&video.ground_truths())?.values().to_vec()),
        }
    }
}

/// A few-video dataset in the reference shape, cheap enough for unit-style
/// training runs.
pub fn tiny_spec(seed: u64) -> SynthSpec {
    SynthSpec {
        train_videos: 6,
        validation_videos: 2,
        test_videos: 2,
        frames: (12, 20),
        sentences: (2, 4),
        dimension: 16,
        summaries_per_video: 3,
        seed,
        ..SynthSpec::default()
    }
}

pub fn tiny_dataset(seed: u64) -> Dataset {
    synthesize(&tiny_spec(seed)).unwrap().to_dataset().unwrap()
}

/// Kendall τ-b by counting every pair.
pub fn tau_b_pairs(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len();
    let (mut c, mut d, mut ta, mut tb) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let da = a[i] - a[j];
            let db = b[i] - b[j];
            if da == 0.0 {
                ta += 1;
            }
            if db == 0.0 {
                tb += 1;
            }
            if da != 0.0 && db != 0.0 {
                if (da > 0.0) == (db > 0.0) {
                    c += 1;
                } else {
                    d += 1;
                }
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    if ta == n0 || tb == n0 {
        return None;
    }
    Some((c - d) as f64 / (((n0 - ta) * (n0 - tb)) as f64).sqrt())
}

/// Average ranks by counting, then Pearson's formula written out directly.
pub fn spearman_direct(a: &[f64], b: &[f64]) -> Option<f64> {
    let rank = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|&x| {
                let below = v.iter().filter(|&&y| y < x).count() as f64;
                let equal = v.iter().filter(|&&y| y == x).count() as f64;
                below + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let (ra, rb) = (rank(a), rank(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some(cov / (va * vb).sqrt())
}

/// Best knapsack value over all 2^n subsets.
pub fn knapsack_brute(items: &[(f64, usize)], budget: usize) -> f64 {
    let n = items.len();
    let mut best = 0.0f64;
    for mask in 0u32..(1u32 << n) {
        let (mut v, mut w) = (0.0, 0);
        for (i, &(vi, wi)) in items.iter().enumerate() {
            if mask & (1 << i) != 0 {
                v += vi;
                w += wi;
            }
        }
        if w <= budget && v > best {
            best = v;
        }
    }
    best
}

/// Random sorted disjoint fragments tiling `[0, n)`.
pub fn random_fragments(n: usize, count: usize, rng: &mut sdvsum::Rng) -> Vec<(usize, usize)> {
    let count = count.clamp(1, n);
    let mut cuts: Vec<usize> = Vec::new();
    while cuts.len() < count - 1 {
        let c = rng.int_inclusive(1, n - 1);
        if !cuts.contains(&c) {
            cuts.push(c);
        }
    }
    cuts.sort_unstable();
    let mut bounds = vec![0];
    bounds.extend(cuts);
    bounds.push(n);
    bounds.windows(2).map(|w| (w[0], w[1])).collect()
}

/// A random model configuration with frame and sentence counts.
pub struct Case {
    pub config: ModelConfig,
    pub n: usize,
    pub m: usize,
}

pub fn random_case(rng: &mut Rng) -> Case {
    let dim = [8, 16, 32][rng.int_inclusive(0, 2)];
    let heads = [1, 2, 4, 8][rng.int_inclusive(0, 3)];
    let config = ModelConfig {
        heads,
        use_scaling: rng.uniform() < 0.5,
        text_rep: if rng.uniform() < 0.5 { TextRep::MultiVector } else { TextRep::SingleVector },
        single_vector_t: rng.int_inclusive(1, 8),
        ..ModelConfig::with_dim(dim)
    };
    Case {
        config,
        n: rng.int_inclusive(1, 12),
        m: rng.int_inclusive(1, 8),
    }
}

/// Per-head attention matrices of one forward pass.
pub fn attention(case: &Case, seed: u64, training: bool) -> Vec<Matrix> {
    let mut rng = Rng::from_seed(seed);
    let weights = init_weights(&case.config, &mut rng).unwrap();
    let x = Matrix::from_fn(case.n, case.config.dim, |_, _| rng.normal() as f32);
    let y = Matrix::from_fn(case.m, case.config.dim, |_, _| rng.normal() as f32 * 3.0);
    let mut tape = Tape::new();
    let params = BoundParams::bind(&mut tape, &weights, false);
    let xv = tape.constant(x);
    let yv = tape.constant(y);
    let out = forward(&mut tape, &params, xv, yv, &case.config, &mut rng, training).unwrap();
    out.cross.attention.iter().map(|&a| tape.value(a).clone()).collect()
}
