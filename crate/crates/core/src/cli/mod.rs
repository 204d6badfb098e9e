//! The `sdvsum` command line: synth, train, eval, summarize, ablate.

pub mod config;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{RunConfig, parse_config, parse_config_str};

use crate::datakit::{Dataset, Split, generate_synthetic, load_manifest, read_embeddings};
use crate::error::{Error, Result};
use crate::metrics::{Mode, evaluate, overlap_matrix};
use crate::model::{Model, ModelConfig, Variant};
use crate::summarize::{DEFAULT_FRACTION, DEFAULT_SEGMENT_LEN, FragmentSet, fixed_fragmentation, summarize_video};
use crate::train::{TrainConfig, train_run};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "sdvsum", about = "Script-driven video summarization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train a model, writing a checkpoint per epoch and a JSON-lines report.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a checkpoint on a split.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value = "test")]
        split: Split,
        #[arg(long, default_value = "script")]
        mode: Mode,
        /// File of video ids, one per line, for the annotator-overlap matrix.
        #[arg(long)]
        overlap: Option<PathBuf>,
        /// Where to write the overlap CSV (default: the ids file with `.csv`).
        #[arg(long)]
        overlap_out: Option<PathBuf>,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score one video against a script and pick fragments under a budget.
    Summarize {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        script: PathBuf,
        #[arg(long, default_value_t = DEFAULT_FRACTION)]
        budget_frac: f64,
        /// `from-manifest` or `fixed:<len>`.
        #[arg(long, default_value = "fixed:5")]
        fragments: String,
        /// Needed with `--fragments from-manifest`.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Video id in the manifest (default: the frames file stem).
        #[arg(long)]
        video: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train and test SD-VSum and Variants 1-4 on one dataset.
    Ablate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Exit status for an error: configuration and argument problems are usage
/// errors, numeric blow-ups are 3, everything else is a data error.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numeric() {
        EXIT_NUMERIC
    } else if matches!(e, Error::Config(_) | Error::InvalidArgument(_)) {
        EXIT_USAGE
    } else {
        EXIT_DATA
    }
}

/// Parses `args` (program name first) and runs the subcommand, printing
/// results to `out` and diagnostics to standard error.
pub fn run<I, T>(args: I, out: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn seed_or(flag: Option<u64>, config: u64) -> u64 {
    flag.unwrap_or(config)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn emit(out: &mut dyn std::io::Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io("<stdout>", e))
}

fn execute(command: Command, out: &mut dyn std::io::Write) -> Result<()> {
    match command {
        Command::Synth { spec, out: dir, seed } => {
            let cfg = parse_config(&spec)?;
            let seed = seed_or(seed, cfg.synth.seed);
            let synth = crate::datakit::SynthSpec { seed, ..cfg.synth };
            let manifest = generate_synthetic(&synth, &dir)?;
            let counts: Vec<String> = Split::ALL
                .iter()
                .map(|&s| format!("{} {}", manifest.count(s), s))
                .collect();
            emit(
                out,
                &format!(
                    "wrote {} videos ({}) to {}\n",
                    manifest.videos.len(),
                    counts.join(", "),
                    dir.join("manifest.json").display()
                ),
            )
        }
        Command::Train {
            manifest,
            config,
            out: dir,
            seed,
        } => {
            let cfg = parse_config(&config)?;
            let train = TrainConfig {
                seed: seed_or(seed, cfg.train.seed),
                ..cfg.train
            };
            let dataset = Dataset::open(&manifest)?;
            let mut io_err = None;
            let outcome = train_run(&dataset, &cfg.model, &train, Some(&dir), &mut |rec| {
                let line = serde_json::to_string(rec).expect("records serialise");
                if let Err(e) = writeln!(out, "{line}") {
                    io_err.get_or_insert(e);
                }
            })?;
            if let Some(e) = io_err {
                return Err(Error::io("<stdout>", e));
            }
            let report = outcome.report.to_json_lines()?;
            write_text(&dir.join("train_report.jsonl"), &report)?;
            emit(out, &format!("{}\n", serde_json::to_string(&outcome.report.best)?))
        }
        Command::Eval {
            manifest,
            checkpoint,
            split,
            mode,
            overlap,
            overlap_out,
            out: report_path,
            seed: _,
        } => {
            let dataset = Dataset::open(&manifest)?;
            let model = Model::load(&checkpoint)?;
            let report = evaluate(&model, &dataset, split, mode)?;
            let text = serde_json::to_string_pretty(&report)? + "\n";
            match report_path {
                Some(p) => write_text(&p, &text)?,
                None => emit(out, &text)?,
            }
            if let Some(ids_path) = overlap {
                let ids: Vec<String> = fs::read_to_string(&ids_path)
                    .map_err(|e| Error::io(&ids_path, e))?
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty() && !l.starts_with('#'))
                    .map(String::from)
                    .collect();
                let matrix = overlap_matrix(&model, &dataset, &ids, mode)?;
                let csv_path = overlap_out.unwrap_or_else(|| ids_path.with_extension("csv"));
                write_text(&csv_path, &matrix.to_csv())?;
            }
            Ok(())
        }
        Command::Summarize {
            checkpoint,
            frames,
            script,
            budget_frac,
            fragments,
            manifest,
            video,
            out: summary_path,
            seed: _,
        } => {
            let model = Model::load(&checkpoint)?;
            let x = read_embeddings(&frames)?;
            let y = read_embeddings(&script)?;
            let video_id = video.unwrap_or_else(|| {
                frames
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default()
            });
            let scores = model.score(&x, &y)?;
            let fragment_set = resolve_fragments(&fragments, manifest.as_deref(), &video_id, x.rows())?;
            let summary = summarize_video(&video_id, scores.values(), &fragment_set, budget_frac)?;
            let text = serde_json::to_string(&summary)? + "\n";
            match summary_path {
                Some(p) => write_text(&p, &text),
                None => emit(out, &text),
            }
        }
        Command::Ablate {
            manifest,
            config,
            out: dir,
            seed,
        } => {
            let cfg = parse_config(&config)?;
            let train = TrainConfig {
                seed: seed_or(seed, cfg.train.seed),
                ..cfg.train
            };
            let dataset = Dataset::open(&manifest)?;
            let rows = ablate(&dataset, &cfg.model, &train, Some(&dir))?;
            let table = ablation_table(&rows);
            write_text(&dir.join("ablation.csv"), &ablation_csv(&rows))?;
            emit(out, &table)
        }
    }
}

fn resolve_fragments(spec: &str, manifest: Option<&Path>, video_id: &str, n: usize) -> Result<FragmentSet> {
    if spec == "from-manifest" {
        let path = manifest.ok_or_else(|| {
            Error::InvalidArgument("--fragments from-manifest needs --manifest".into())
        })?;
        let m = load_manifest(path)?;
        let entry = m
            .video(video_id)
            .ok_or_else(|| Error::video(video_id, "not in the manifest"))?;
        return match &entry.fragments {
            Some(f) => FragmentSet::new(f.clone(), n),
            None => fixed_fragmentation(n, DEFAULT_SEGMENT_LEN),
        };
    }
    let len = spec
        .strip_prefix("fixed:")
        .and_then(|l| l.parse().ok())
        .ok_or_else(|| Error::InvalidArgument(format!("bad --fragments {spec:?}")))?;
    fixed_fragmentation(n, len)
}

/// One line of the ablation comparison.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct AblationRow {
    pub name: &'static str,
    pub text_rep: String,
    pub heads: usize,
    pub use_scaling: bool,
    pub parameters: usize,
    pub best_epoch: usize,
    pub val_fscore: f64,
    pub test_fscore: f64,
}

/// Trains SD-VSum and Variants 1-4 with the same data and seed. Only
/// the text representation, head count and scaling differ from `base`.
pub fn ablate(dataset: &Dataset, base: &ModelConfig, train: &TrainConfig, out_dir: Option<&Path>) -> Result<Vec<AblationRow>> {
    Variant::ALL
        .iter()
        .map(|&variant| {
            let config = variant.apply(base);
            let dir = out_dir.map(|d| d.join(variant.name()));
            let outcome = train_run(dataset, &config, train, dir.as_deref(), &mut |_| {})?;
            let test = evaluate(&outcome.best, dataset, Split::Test, train.mode)?;
            Ok(AblationRow {
                name: variant.name(),
                text_rep: config.text_rep.to_string(),
                heads: config.heads,
                use_scaling: config.use_scaling,
                parameters: outcome.best.parameter_count(),
                best_epoch: outcome.report.best.best_epoch,
                val_fscore: outcome.report.best.best_val_fscore,
                test_fscore: test.fscore,
            })
        })
        .collect()
}

pub fn ablation_table(rows: &[AblationRow]) -> String {
    let mut s = format!(
        "{:<10} {:<14} {:>5} {:>7} {:>10} {:>6} {:>8} {:>8}\n",
        "model", "text", "heads", "scaling", "params", "epoch", "val F", "test F"
    );
    for r in rows {
        s.push_str(&format!(
            "{:<10} {:<14} {:>5} {:>7} {:>10} {:>6} {:>8.2} {:>8.2}\n",
            r.name,
            r.text_rep,
            r.heads,
            if r.use_scaling { "yes" } else { "no" },
            r.parameters,
            r.best_epoch,
            r.val_fscore,
            r.test_fscore
        ));
    }
    s
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut s = String::from("model,text_rep,heads,use_scaling,parameters,best_epoch,val_fscore,test_fscore\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{:.2},{:.2}\n",
            r.name, r.text_rep, r.heads, r.use_scaling, r.parameters, r.best_epoch, r.val_fscore, r.test_fscore
        ));
    }
    s
}
