//! From frame scores to summaries: the top-fraction rule used by the
//! evaluation protocol and knapsack fragment selection under a length
//! budget.

use serde::Serialize;

use crate::datakit::manifest::validate_fragments;
use crate::error::{Error, Result};

/// Fraction of frames kept by the evaluation protocol.
pub const DEFAULT_FRACTION: f64 = 0.15;
/// Fallback fragment length, in frames, when no fragmentation is supplied.
pub const DEFAULT_SEGMENT_LEN: usize = 5;

/// Per-frame 0/1 selection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinarySelection {
    mask: Vec<bool>,
    count: usize,
}

impl BinarySelection {
    pub fn from_mask(mask: Vec<bool>) -> Self {
        let count = mask.iter().filter(|&&b| b).count();
        Self { mask, count }
    }

    pub fn from_indices(n: usize, indices: &[usize]) -> Self {
        let mut mask = vec![false; n];
        for &i in indices {
            mask[i] = true;
        }
        Self::from_mask(mask)
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn indices(&self) -> Vec<usize> {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }
}

/// Frames kept for `fraction` of `n`: `max(1, ⌊fraction·n⌋)`. A 1e-9 slack
/// absorbs products such as 0.15·60 landing just below an integer.
pub fn selection_size(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64 + 1e-9).floor() as usize).clamp(1, n.max(1))
}

/// Keeps the `max(1, ⌊fraction·N⌋)` highest-scoring frames; equal scores go
/// to the earlier frame.
pub fn select_top_fraction(scores: &[f32], fraction: f64) -> Result<BinarySelection> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "selection fraction {fraction} outside (0, 1]"
        )));
    }
    if scores.is_empty() {
        return Err(Error::InvalidArgument("no frames to select from".into()));
    }
    let k = selection_size(fraction, scores.len());
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok(BinarySelection::from_indices(scores.len(), &order[..k]))
}

/// Half-open `[start, end)` frame intervals tiling a video.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FragmentSet {
    fragments: Vec<(usize, usize)>,
}

impl FragmentSet {
    pub fn new(fragments: Vec<(usize, usize)>, n: usize) -> Result<Self> {
        validate_fragments(&fragments, n).map_err(Error::InvalidArgument)?;
        Ok(Self { fragments })
    }

    pub fn fragments(&self) -> &[(usize, usize)] {
        &self.fragments
    }

    pub fn len(&self) -> usize {
        self.fragments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fragments.is_empty()
    }

    /// Sum of frame scores and frame count of each fragment.
    pub fn totals(&self, scores: &[f32]) -> Vec<(f64, usize)> {
        self.fragments
            .iter()
            .map(|&(s, e)| (scores[s..e].iter().map(|&v| v as f64).sum(), e - s))
            .collect()
    }
}

/// Consecutive fragments of `segment_len` frames; the last may be shorter.
pub fn fixed_fragmentation(n: usize, segment_len: usize) -> Result<FragmentSet> {
    if segment_len == 0 {
        return Err(Error::InvalidArgument("segment length must be positive".into()));
    }
    let fragments = (0..n)
        .step_by(segment_len)
        .map(|s| (s, (s + segment_len).min(n)))
        .collect();
    Ok(FragmentSet { fragments })
}

/// 0/1 knapsack over fragments: value is the summed frame score, weight the
/// frame count, capacity `budget_frames`. Returns the indices of a
/// maximum-value subset, preferring earlier fragments among equal-value
/// optima.
pub fn fragment_knapsack(scores: &[f32], fragments: &FragmentSet, budget_frames: usize) -> Result<Vec<usize>> {
    if let Some(&(_, end)) = fragments.fragments.last()
        && end > scores.len() {
            return Err(Error::InvalidArgument(format!(
                "fragments reach frame {end} but only {} scores were given",
                scores.len()
            )));
        }
    let items = fragments.totals(scores);
    let n = items.len();
    let cap = budget_frames.min(items.iter().map(|i| i.1).sum());
    // best[i][c]: best value from fragments i.. with capacity c
    let mut best = vec![vec![0.0f64; cap + 1]; n + 1];
    for i in (0..n).rev() {
        let (value, weight) = items[i];
        for c in 0..=cap {
            let skip = best[i + 1][c];
            best[i][c] = if weight <= c {
                skip.max(value + best[i + 1][c - weight])
            } else {
                skip
            };
        }
    }
    let tol = 1e-12 * (1.0 + best[0][cap].abs());
    let mut chosen = Vec::new();
    let mut c = cap;
    for (i, &(value, weight)) in items.iter().enumerate() {
        if weight <= c && value + best[i + 1][c - weight] >= best[i][c] - tol {
            chosen.push(i);
            c -= weight;
        }
    }
    Ok(chosen)
}

/// Frames covered by the selected fragments.
pub fn fragments_to_selection(n: usize, fragments: &FragmentSet, chosen: &[usize]) -> BinarySelection {
    let mut mask = vec![false; n];
    for &i in chosen {
        let (s, e) = fragments.fragments[i];
        mask[s..e].iter_mut().for_each(|m| *m = true);
    }
    BinarySelection::from_mask(mask)
}

/// Summary output of the `summarize` subcommand.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryOutput {
    pub video_id: String,
    pub selected_frames: Vec<usize>,
    pub selected_fragments: Vec<[usize; 2]>,
}

/// Knapsack summary under `budget_fraction` of the video length.
pub fn summarize_video(
    video_id: &str,
    scores: &[f32],
    fragments: &FragmentSet,
    budget_fraction: f64,
) -> Result<SummaryOutput> {
    if !(0.0..=1.0).contains(&budget_fraction) {
        return Err(Error::InvalidArgument(format!(
            "budget fraction {budget_fraction} outside [0, 1]"
        )));
    }
    let budget = (budget_fraction * scores.len() as f64 + 1e-9).floor() as usize;
    let chosen = fragment_knapsack(scores, fragments, budget)?;
    let selection = fragments_to_selection(scores.len(), fragments, &chosen);
    Ok(SummaryOutput {
        video_id: video_id.to_string(),
        selected_frames: selection.indices(),
        selected_fragments: chosen
            .iter()
            .map(|&i| {
                let (s, e) = fragments.fragments[i];
                [s, e]
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_fraction_counts() {
        let scores: Vec<f32> = (0..100).map(|i| (i as f32 * 0.37).sin().abs()).collect();
        assert_eq!(select_top_fraction(&scores, 0.15).unwrap().count(), 15);
        assert_eq!(select_top_fraction(&scores[..7], 0.15).unwrap().count(), 1);
        assert_eq!(selection_size(0.15, 60), 9);
        assert!(select_top_fraction(&scores, 0.0).is_err());
        assert!(select_top_fraction(&scores, 1.5).is_err());
    }

    #[test]
    fn ties_prefer_earlier_frames() {
        let sel = select_top_fraction(&[0.5, 0.5, 0.1], 0.34).unwrap();
        assert_eq!(sel.indices(), vec![0]);
    }

    #[test]
    fn fixed_fragments() {
        assert_eq!(
            fixed_fragmentation(10, 4).unwrap().fragments(),
            &[(0, 4), (4, 8), (8, 10)]
        );
        assert_eq!(fixed_fragmentation(3, 5).unwrap().fragments(), &[(0, 3)]);
        assert!(fixed_fragmentation(3, 0).is_err());
    }

    #[test]
    fn knapsack_edges() {
        let scores = vec![0.2f32, 0.9, 0.4, 0.8, 0.1, 0.3];
        let frags = fixed_fragmentation(6, 2).unwrap();
        assert_eq!(fragment_knapsack(&scores, &frags, 6).unwrap(), vec![0, 1, 2]);
        assert!(fragment_knapsack(&scores, &frags, 0).unwrap().is_empty());
        assert_eq!(fragment_knapsack(&scores, &frags, 2).unwrap(), vec![1]);
    }

    #[test]
    fn summary_output() {
        let scores = vec![0.1f32, 0.1, 0.9, 0.9, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1];
        let frags = fixed_fragmentation(10, 2).unwrap();
        let out = summarize_video("v", &scores, &frags, 0.2).unwrap();
        assert_eq!(out.selected_fragments, vec![[2, 4]]);
        assert_eq!(out.selected_frames, vec![2, 3]);
    }
}
