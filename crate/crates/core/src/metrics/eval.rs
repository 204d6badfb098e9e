use std::fmt::{self, Display, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datakit::{Dataset, Split, VideoData};
use crate::error::{Error, Result};
use crate::metrics::fscore::fscore_binary;
use crate::metrics::rank::{kendall_tau_b, spearman_rho};
use crate::model::{Model, ScoreVector};
use crate::numkit::Matrix;
use crate::summarize::{DEFAULT_FRACTION, select_top_fraction};
use crate::train::loss::average_ground_truth;

/// What the text input describes: one annotator's script, or the whole video.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    ScriptDriven,
    Generic,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::ScriptDriven => "script_driven",
            Mode::Generic => "generic",
        }
    }
}

impl Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "script" | "script_driven" => Ok(Mode::ScriptDriven),
            "generic" => Ok(Mode::Generic),
            _ => Err(Error::Config(format!("unknown mode {s:?} (script_driven|generic)"))),
        }
    }
}

/// Anything that maps a video and a text input to frame scores.
/// `summary` names the ground truth whose script is `text`, or `None` for
/// the video description.
pub trait FrameScorer {
    fn score(&self, video: &VideoData, text: &Matrix, summary: Option<usize>) -> Result<ScoreVector>;
}

impl FrameScorer for Model {
    fn score(&self, video: &VideoData, text: &Matrix, _summary: Option<usize>) -> Result<ScoreVector> {
        Model::score(self, &video.frames, text).map_err(|e| Error::video(&video.id, e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalRecord {
    pub video_id: String,
    pub fscores: Vec<f64>,
    pub fscore: f64,
    pub tau: Option<f64>,
    pub rho: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub split: String,
    pub mode: Mode,
    pub fscore: f64,
    pub tau: Option<f64>,
    pub rho: Option<f64>,
    /// Videos left out of the τ/ρ means because a ranking was constant.
    pub degenerate: usize,
    pub videos: Vec<EvalRecord>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn mean_defined(v: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let vals: Vec<f64> = v.flatten().collect();
    (!vals.is_empty()).then(|| mean(&vals))
}

fn description(video: &VideoData) -> Result<&Matrix> {
    video
        .description
        .as_ref()
        .ok_or_else(|| Error::video(&video.id, "no description embedding"))
}

/// F-Score (%) of the top-15% selection of `scores` against each ground truth.
fn fscores_against_all(scores: &ScoreVector, video: &VideoData) -> Result<Vec<f64>> {
    let pred = select_top_fraction(scores.values(), DEFAULT_FRACTION)?;
    video
        .summaries
        .iter()
        .map(|s| fscore_binary(&pred, &s.labels))
        .collect()
}

fn split_videos(dataset: &Dataset, split: Split) -> Result<Vec<&VideoData>> {
    let videos: Vec<&VideoData> = dataset.split(split).collect();
    if videos.is_empty() {
        return Err(Error::InvalidArgument(format!("split {split} has no videos")));
    }
    Ok(videos)
}

fn script_record(scorer: &dyn FrameScorer, video: &VideoData) -> Result<EvalRecord> {
    if video.summaries.is_empty() {
        return Err(Error::video(&video.id, "no summaries"));
    }
    let mut fscores = Vec::with_capacity(video.summaries.len());
    for (j, s) in video.summaries.iter().enumerate() {
        let scores = scorer.score(video, &s.script, Some(j))?;
        let pred = select_top_fraction(scores.values(), DEFAULT_FRACTION)?;
        fscores.push(fscore_binary(&pred, &s.labels)?);
    }
    Ok(EvalRecord {
        video_id: video.id.clone(),
        fscore: mean(&fscores),
        fscores,
        tau: None,
        rho: None,
    })
}

fn generic_record(scorer: &dyn FrameScorer, video: &VideoData) -> Result<EvalRecord> {
    if video.summaries.is_empty() {
        return Err(Error::video(&video.id, "no summaries"));
    }
    let scores = scorer.score(video, description(video)?, None)?;
    let fscores = fscores_against_all(&scores, video)?;
    let avg = average_ground_truth(&video.ground_truths())?;
    let a: Vec<f64> = scores.values().iter().map(|&v| v as f64).collect();
    let b: Vec<f64> = avg.values().iter().map(|&v| v as f64).collect();
    let (tau, rho) = if a.len() < 2 {
        (None, None)
    } else {
        (kendall_tau_b(&a, &b)?, spearman_rho(&a, &b)?)
    };
    Ok(EvalRecord {
        video_id: video.id.clone(),
        fscore: mean(&fscores),
        fscores,
        tau,
        rho,
    })
}

/// Each (script, ground truth) pair is scored on its own; the video score is
/// the mean over pairs and the dataset score the mean over videos.
pub fn evaluate_script_driven(scorer: &dyn FrameScorer, dataset: &Dataset, split: Split) -> Result<EvalReport> {
    let records = split_videos(dataset, split)?
        .into_iter()
        .map(|v| script_record(scorer, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport {
        split: split.to_string(),
        mode: Mode::ScriptDriven,
        fscore: mean(&records.iter().map(|r| r.fscore).collect::<Vec<_>>()),
        tau: None,
        rho: None,
        degenerate: 0,
        videos: records,
    })
}

/// One description-conditioned prediction per video, compared with every
/// ground truth for F and with the averaged ground truth for τ-b and ρ.
pub fn evaluate_generic(scorer: &dyn FrameScorer, dataset: &Dataset, split: Split) -> Result<EvalReport> {
    let records = split_videos(dataset, split)?
        .into_iter()
        .map(|v| generic_record(scorer, v))
        .collect::<Result<Vec<_>>>()?;
    let degenerate = records.iter().filter(|r| r.tau.is_none() || r.rho.is_none()).count();
    Ok(EvalReport {
        split: split.to_string(),
        mode: Mode::Generic,
        fscore: mean(&records.iter().map(|r| r.fscore).collect::<Vec<_>>()),
        tau: mean_defined(records.iter().map(|r| r.tau)),
        rho: mean_defined(records.iter().map(|r| r.rho)),
        degenerate,
        videos: records,
    })
}

pub fn evaluate(scorer: &dyn FrameScorer, dataset: &Dataset, split: Split, mode: Mode) -> Result<EvalReport> {
    match mode {
        Mode::ScriptDriven => evaluate_script_driven(scorer, dataset, split),
        Mode::Generic => evaluate_generic(scorer, dataset, split),
    }
}

/// Per-video, per-annotator F-Scores (%).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverlapMatrix {
    pub mode: Mode,
    pub video_ids: Vec<String>,
    pub entries: Vec<Vec<f64>>,
}

impl OverlapMatrix {
    pub fn annotators(&self) -> usize {
        self.entries.first().map_or(0, Vec::len)
    }

    pub fn mean(&self) -> f64 {
        let all: Vec<f64> = self.entries.iter().flatten().copied().collect();
        mean(&all)
    }

    /// Header `video_id,1,..,S`, then one row per video with two decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("video_id");
        for j in 1..=self.annotators() {
            write!(out, ",{j}").unwrap();
        }
        out.push('\n');
        for (id, row) in self.video_ids.iter().zip(&self.entries) {
            out.push_str(id);
            for v in row {
                write!(out, ",{v:.2}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Script-driven entries score the summary generated from script `j`
/// against ground truth `j`; generic entries compare one description-driven
/// summary with every ground truth.
pub fn overlap_matrix(
    scorer: &dyn FrameScorer,
    dataset: &Dataset,
    video_ids: &[String],
    mode: Mode,
) -> Result<OverlapMatrix> {
    let mut entries = Vec::with_capacity(video_ids.len());
    let mut width = None;
    for id in video_ids {
        let video = dataset
            .video(id)
            .ok_or_else(|| Error::video(id, "not in the manifest"))?;
        let expected = *width.get_or_insert(video.summaries.len());
        if video.summaries.is_empty() || video.summaries.len() != expected {
            return Err(Error::video(
                id,
                format!("has {} summaries, expected {expected}", video.summaries.len()),
            ));
        }
        let row = match mode {
            Mode::ScriptDriven => script_record(scorer, video)?.fscores,
            Mode::Generic => generic_record(scorer, video)?.fscores,
        };
        entries.push(row);
    }
    Ok(OverlapMatrix {
        mode,
        video_ids: video_ids.to_vec(),
        entries,
    })
}
