//! The evaluation protocol with an oracle scorer that returns the ground
//! truth itself: F-Score is 100 when every ground truth has exactly 15%
//! positives, and τ = ρ = 1 in generic mode.

use sdvsum::Result;
use sdvsum::datakit::{Split, SynthSpec, VideoData, synthesize};
use sdvsum::metrics::{FrameScorer, Mode, evaluate, overlap_matrix};
use sdvsum::model::ScoreVector;
use sdvsum::numkit::Matrix;
use sdvsum::train::average_ground_truth;

struct Oracle;

impl FrameScorer for Oracle {
    fn score(&self, video: &VideoData, _text: &Matrix, summary: Option<usize>) -> Result<ScoreVector> {
        match summary {
            Some(j) => ScoreVector::new(video.summaries[j].labels.values().to_vec()),
            None => ScoreVector::new(average_ground_truth(&video.ground_truths())?.values().to_vec()),
        }
    }
}

fn main() -> Result<()> {
    let spec = SynthSpec {
        exact_positives: true,
        ..SynthSpec::default()
    };
    let data = synthesize(&spec)?.to_dataset()?;

    let script = evaluate(&Oracle, &data, Split::Test, Mode::ScriptDriven)?;
    println!("script-driven oracle F = {:.2}", script.fscore);

    let generic = evaluate(&Oracle, &data, Split::Test, Mode::Generic)?;
    println!(
        "generic oracle F = {:.2}, tau = {:.3}, rho = {:.3} ({} degenerate videos)",
        generic.fscore,
        generic.tau.unwrap_or(f64::NAN),
        generic.rho.unwrap_or(f64::NAN),
        generic.degenerate
    );

    let ids: Vec<String> = data.split(Split::Test).take(3).map(|v| v.id.clone()).collect();
    print!("{}", overlap_matrix(&Oracle, &data, &ids, Mode::Generic)?.to_csv());
    Ok(())
}
