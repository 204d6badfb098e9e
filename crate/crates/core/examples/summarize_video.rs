//! Scores one synthetic test video against one of its scripts and selects
//! fragments under a 15% budget with the knapsack.

use sdvsum::datakit::{Split, SynthSpec, synthesize};
use sdvsum::model::{Model, ModelConfig};
use sdvsum::summarize::{DEFAULT_FRACTION, FragmentSet, summarize_video};

fn main() -> sdvsum::Result<()> {
    let data = synthesize(&SynthSpec {
        train_videos: 1,
        validation_videos: 1,
        test_videos: 1,
        ..SynthSpec::default()
    })?
    .to_dataset()?;
    let video = data.split(Split::Test).next().expect("one test video");
    // an untrained model; load a checkpoint with Model::load for real use
    let model = Model::new(ModelConfig::with_dim(data.dimension), 7)?;

    let script = &video.summaries[0].script;
    let scores = model.score(&video.frames, script)?;
    let fragments = FragmentSet::new(video.fragments.clone().unwrap(), video.frame_count())?;
    let summary = summarize_video(&video.id, scores.values(), &fragments, DEFAULT_FRACTION)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
