//! Writes the reference synthetic dataset and prints its label statistics.
//!
//! cargo run --release --example synth_dataset -- [out_dir]

use sdvsum::datakit::{Split, SynthSpec, generate_synthetic, synthesize};

fn main() -> sdvsum::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "target/synth_reference".into());
    let spec = SynthSpec::default();
    let data = synthesize(&spec)?;

    let mut sizes = vec![0usize; spec.topics / 2 + 1];
    let mut fractions = Vec::new();
    for v in &data.videos {
        for s in &v.scripts {
            sizes[s.topics.len()] += 1;
            let pos = s.labels.iter().filter(|&&l| l > 0.5).count();
            fractions.push(pos as f64 / s.labels.len() as f64);
        }
    }
    let mean = fractions.iter().sum::<f64>() / fractions.len() as f64;
    let (lo, hi) = fractions
        .iter()
        .fold((1.0f64, 0.0f64), |(a, b), &f| (a.min(f), b.max(f)));
    println!("scripts by |S|: {:?}", &sizes[1..]);
    println!("positive fraction: mean {mean:.3}, range [{lo:.3}, {hi:.3}]");

    let manifest = generate_synthetic(&spec, &out)?;
    for split in Split::ALL {
        println!("{split}: {} videos", manifest.count(split));
    }
    println!("manifest: {out}/manifest.json");
    Ok(())
}
