//! Dataset manifest: a JSON index of videos, their splits and the embedding
//! and label files that belong to each ground-truth summary.
//!
//! ```json
//! {
//!   "dimension": 512,
//!   "videos": [
//!     {
//!       "id": "v0001",
//!       "split": "train",
//!       "frames": "frames/v0001.sdve",
//!       "summaries": [{ "labels": "labels/v0001_00.sdve", "script": "scripts/v0001_00.sdve" }],
//!       "description": "descriptions/v0001.sdve",
//!       "fragments": [[0, 5], [5, 12]]
//!     }
//!   ]
//! }
//! ```
//! Paths are relative to the manifest file; `description` and `fragments`
//! are optional.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datakit::sdve;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidArgument(format!("invalid split '{other}'"))),
        }
    }
}

/// On-disk form of the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFile {
    pub dimension: usize,
    pub videos: Vec<VideoRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoRecord {
    pub id: String,
    pub split: String,
    pub frames: String,
    pub summaries: Vec<SummaryRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fragments: Option<Vec<[usize; 2]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryRecord {
    pub labels: String,
    pub script: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryEntry {
    pub labels: PathBuf,
    pub script: PathBuf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VideoEntry {
    pub id: String,
    pub split: Split,
    pub frames: PathBuf,
    pub frame_count: usize,
    pub summaries: Vec<SummaryEntry>,
    pub description: Option<PathBuf>,
    pub fragments: Option<Vec<(usize, usize)>>,
}

/// A validated manifest with resolved paths.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub dimension: usize,
    pub base_dir: PathBuf,
    pub videos: Vec<VideoEntry>,
}

impl DatasetManifest {
    pub fn videos_in(&self, split: Split) -> impl Iterator<Item = &VideoEntry> {
        self.videos.iter().filter(move |v| v.split == split)
    }

    pub fn count(&self, split: Split) -> usize {
        self.videos_in(split).count()
    }

    pub fn video(&self, id: &str) -> Option<&VideoEntry> {
        self.videos.iter().find(|v| v.id == id)
    }
}

/// Checks that fragments are non-empty, sorted, disjoint and tile [0, n).
pub fn validate_fragments(fragments: &[(usize, usize)], n: usize) -> std::result::Result<(), String> {
    let mut cursor = 0;
    for &(start, end) in fragments {
        if start >= end {
            return Err(format!("empty fragment [{start}, {end})"));
        }
        if start < cursor {
            return Err(format!("fragment [{start}, {end}) overlaps its predecessor"));
        }
        if start > cursor {
            return Err(format!("frames [{cursor}, {start}) are not covered by any fragment"));
        }
        cursor = end;
    }
    if cursor != n {
        return Err(format!("fragments cover [0, {cursor}) but the video has {n} frames"));
    }
    Ok(())
}

fn checked_shape(video: &str, what: &str, path: &Path) -> Result<(usize, usize)> {
    if !path.exists() {
        return Err(Error::video(video, format!("{what} file {} does not exist", path.display())));
    }
    sdve::read_shape(path).map_err(|e| Error::video(video, format!("{what}: {e}")))
}

pub fn parse_manifest(text: &str, base_dir: &Path) -> Result<DatasetManifest> {
    let file: ManifestFile = serde_json::from_str(text)?;
    resolve(file, base_dir)
}

fn resolve(file: ManifestFile, base_dir: &Path) -> Result<DatasetManifest> {
    let d = file.dimension;
    if d == 0 {
        return Err(Error::Config("manifest dimension must be positive".into()));
    }
    let mut seen = HashSet::new();
    let mut videos = Vec::with_capacity(file.videos.len());
    for rec in file.videos {
        let id = rec.id;
        if !seen.insert(id.clone()) {
            return Err(Error::video(&id, "duplicate video id"));
        }
        let split: Split = rec
            .split
            .parse()
            .map_err(|e: Error| Error::video(&id, e.to_string()))?;
        if rec.summaries.is_empty() {
            return Err(Error::video(&id, "no summaries"));
        }
        let frames = base_dir.join(&rec.frames);
        let (n, cols) = checked_shape(&id, "frames", &frames)?;
        if cols != d {
            return Err(Error::video(&id, format!("frames have dimension {cols}, manifest says {d}")));
        }
        let mut summaries = Vec::with_capacity(rec.summaries.len());
        for (j, s) in rec.summaries.iter().enumerate() {
            let labels = base_dir.join(&s.labels);
            let script = base_dir.join(&s.script);
            let (lr, lc) = checked_shape(&id, "labels", &labels)?;
            if (lr, lc) != (n, 1) {
                return Err(Error::video(
                    &id,
                    format!("summary {j}: labels are {lr}x{lc}, expected {n}x1"),
                ));
            }
            let (_, sc) = checked_shape(&id, "script", &script)?;
            if sc != d {
                return Err(Error::video(
                    &id,
                    format!("summary {j}: script has dimension {sc}, manifest says {d}"),
                ));
            }
            summaries.push(SummaryEntry { labels, script });
        }
        let description = match rec.description {
            Some(p) => {
                let path = base_dir.join(p);
                let (_, c) = checked_shape(&id, "description", &path)?;
                if c != d {
                    return Err(Error::video(&id, format!("description has dimension {c}, manifest says {d}")));
                }
                Some(path)
            }
            None => None,
        };
        let fragments = match rec.fragments {
            Some(list) => {
                let list: Vec<(usize, usize)> = list.into_iter().map(|[s, e]| (s, e)).collect();
                validate_fragments(&list, n).map_err(|r| Error::video(&id, r))?;
                Some(list)
            }
            None => None,
        };
        videos.push(VideoEntry {
            id,
            split,
            frames,
            frame_count: n,
            summaries,
            description,
            fragments,
        });
    }
    Ok(DatasetManifest {
        dimension: d,
        base_dir: base_dir.to_path_buf(),
        videos,
    })
}

/// Reads and validates a manifest, checking every referenced file's header
/// against the declared dimension.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_manifest(&text, base)
}

pub fn write_manifest(file: &ManifestFile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(file)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
