//! In-memory dataset loaded from a manifest, and per-epoch sample streams.

use std::path::Path;

use crate::datakit::labels::SummaryLabels;
use crate::datakit::manifest::{DatasetManifest, Split, load_manifest};
use crate::datakit::sdve::read_embeddings;
use crate::error::{Error, Result};
use crate::numkit::{Matrix, Rng};

#[derive(Clone, Debug)]
pub struct SummaryData {
    pub labels: SummaryLabels,
    pub script: Matrix,
}

#[derive(Clone, Debug)]
pub struct VideoData {
    pub id: String,
    pub split: Split,
    pub frames: Matrix,
    pub summaries: Vec<SummaryData>,
    pub description: Option<Matrix>,
    pub fragments: Option<Vec<(usize, usize)>>,
}

impl VideoData {
    pub fn frame_count(&self) -> usize {
        self.frames.rows()
    }

    pub fn ground_truths(&self) -> Vec<&SummaryLabels> {
        self.summaries.iter().map(|s| &s.labels).collect()
    }
}

/// One (video, summary) training or evaluation pair.
#[derive(Clone, Copy, Debug)]
pub struct Sample<'a> {
    pub video: &'a VideoData,
    pub summary: usize,
}

impl<'a> Sample<'a> {
    pub fn video_id(&self) -> &'a str {
        &self.video.id
    }

    pub fn frames(&self) -> &'a Matrix {
        &self.video.frames
    }

    pub fn script(&self) -> &'a Matrix {
        &self.video.summaries[self.summary].script
    }

    pub fn labels(&self) -> &'a SummaryLabels {
        &self.video.summaries[self.summary].labels
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub dimension: usize,
    pub videos: Vec<VideoData>,
}

impl Dataset {
    pub fn open(manifest_path: impl AsRef<Path>) -> Result<Self> {
        Self::load(&load_manifest(manifest_path)?)
    }

    /// Reads every file the manifest references.
    pub fn load(manifest: &DatasetManifest) -> Result<Self> {
        let mut videos = Vec::with_capacity(manifest.videos.len());
        for entry in &manifest.videos {
            let wrap = |e: Error| Error::video(&entry.id, e.to_string());
            let frames = read_embeddings(&entry.frames).map_err(wrap)?;
            let mut summaries = Vec::with_capacity(entry.summaries.len());
            for s in &entry.summaries {
                let labels = SummaryLabels::from_matrix(&read_embeddings(&s.labels).map_err(wrap)?)
                    .map_err(wrap)?;
                let script = read_embeddings(&s.script).map_err(wrap)?;
                summaries.push(SummaryData { labels, script });
            }
            let description = entry
                .description
                .as_ref()
                .map(read_embeddings)
                .transpose()
                .map_err(wrap)?;
            videos.push(VideoData {
                id: entry.id.clone(),
                split: entry.split,
                frames,
                summaries,
                description,
                fragments: entry.fragments.clone(),
            });
        }
        Ok(Self {
            dimension: manifest.dimension,
            videos,
        })
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &VideoData> {
        self.videos.iter().filter(move |v| v.split == split)
    }

    pub fn video(&self, id: &str) -> Option<&VideoData> {
        self.videos.iter().find(|v| v.id == id)
    }

    /// Every (video, summary) pair of `split` exactly once, in manifest order,
    /// or permuted by `shuffle` when given. Callers derive the shuffle stream
    /// from the master seed and the epoch index.
    pub fn samples(&self, split: Split, shuffle: Option<&mut Rng>) -> Vec<Sample<'_>> {
        let mut out: Vec<Sample<'_>> = self
            .split(split)
            .flat_map(|video| (0..video.summaries.len()).map(move |summary| Sample { video, summary }))
            .collect();
        if let Some(rng) = shuffle {
            rng.shuffle(&mut out);
        }
        out
    }
}

/// Shuffle stream for `epoch` under `seed`.
pub fn epoch_rng(seed: u64, epoch: usize) -> Rng {
    Rng::derive_indexed(seed, crate::numkit::rng::SHUFFLE, epoch as u64)
}
