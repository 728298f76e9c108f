use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use vcrop::harness::{
    build_random_subset, build_text_subset, failure_intersection, read_jsonl, render_overlay, run_crop_batch,
    write_jsonl, BatchOptions, CropConfig, CropMethod, DatasetManifest, PredictionRecord, ScorerFactory,
};
use vcrop::imagecore::{load_image, save_image};
use vcrop::metrics::{evaluate_dataset, QARecord, StrSimiReference};
use vcrop::simcrop::{Scorer, ScorerSession};
use vcrop::{BBox, Error, Result};

#[derive(Parser, Debug)]
#[command(name = "vcrop", version, about = "Saliency-guided cropping and VQA evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct BatchArgs {
    /// Input manifest (JSONL).
    #[arg(long)]
    manifest: PathBuf,
    /// Output predictions (JSONL).
    #[arg(long)]
    out: PathBuf,
    /// Keyed TOML config with [grad], [window] and [recursive] tables.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write each crop as <question_id>.png into this directory.
    #[arg(long)]
    crops_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Progress file for resuming an aborted run.
    #[arg(long)]
    progress: Option<PathBuf>,
    /// Exit 0 even if some entries failed; the error count is still reported.
    #[arg(long)]
    keep_going: bool,
}

#[derive(Args, Debug)]
struct ScorerArgs {
    /// Command line of a scorer speaking the line-delimited JSON protocol.
    #[arg(long)]
    scorer_cmd: String,
    /// Seconds to wait for each scorer reply.
    #[arg(long, default_value_t = 60)]
    timeout_secs: u64,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum BaselineMethod {
    None,
    Human,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum SimiRef {
    Modal,
    Max,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Gradient-based crops from VCGB bundles (<bundles-dir>/<question_id>.vcgb).
    GradCrop {
        #[command(flatten)]
        batch: BatchArgs,
        #[arg(long)]
        bundles_dir: PathBuf,
    },
    /// Sliding-window similarity crops.
    ClipWCrop {
        #[command(flatten)]
        batch: BatchArgs,
        #[command(flatten)]
        scorer: ScorerArgs,
    },
    /// Recursive directional similarity crops.
    ClipRCrop {
        #[command(flatten)]
        batch: BatchArgs,
        #[command(flatten)]
        scorer: ScorerArgs,
    },
    /// Full-image boxes (`none`) or the manifest's human boxes (`human`).
    Baseline {
        #[command(flatten)]
        batch: BatchArgs,
        #[arg(long, value_enum, default_value_t = BaselineMethod::None)]
        method: BaselineMethod,
    },
    /// Accuracy, str-simi and IoU of predictions against a manifest.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        /// Report (JSONL): one row per question, then a summary line.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = SimiRef::Modal)]
        str_simi_ref: SimiRef,
        #[arg(long)]
        keep_going: bool,
    },
    /// Entries whose answer appears in exactly one OCR box.
    BuildTextSubset {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Down-sample the matches to this many entries.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Seeded uniform sample without replacement.
    BuildRandomSubset {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Entries both prediction sets fail under the majority test.
    FailureIntersection {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        preds_a: PathBuf,
        #[arg(long)]
        preds_b: PathBuf,
        /// Candidate manifest for manual review.
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw labelled boxes on an image.
    Overlay {
        #[arg(long)]
        image: PathBuf,
        /// `x0,y0,x1,y1` or `x0,y0,x1,y1=label`; repeatable, drawn in order.
        #[arg(long = "box", value_name = "BOX")]
        boxes: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<CropConfig> {
    path.map_or_else(|| Ok(CropConfig::default()), CropConfig::load)
}

fn run_batch(
    args: &BatchArgs,
    method: CropMethod,
    scorer: Option<&ScorerArgs>,
    bundles_dir: Option<&Path>,
) -> Result<ExitCode> {
    let manifest = DatasetManifest::load(&args.manifest)?;
    let config = load_config(args.config.as_deref())?;
    let opts = BatchOptions {
        workers: args.workers,
        crops_dir: args.crops_dir.clone(),
        progress: args.progress.clone(),
    };
    let factory = scorer.map(|s| {
        let cmd = s.scorer_cmd.clone();
        let timeout = Duration::from_secs(s.timeout_secs);
        move || -> Result<Box<dyn Scorer + Send>> { Ok(Box::new(ScorerSession::spawn(&cmd, timeout)?)) }
    });
    let factory_ref = factory.as_ref().map(|f| f as &ScorerFactory<'_>);
    let out = run_crop_batch(&manifest, method, &config, factory_ref, bundles_dir, &opts)?;
    write_jsonl(&args.out, &out.records)?;
    for r in out.records.iter().filter(|r| r.error.is_some()) {
        eprintln!("{}: {}", r.question_id, r.error.as_deref().unwrap_or_default());
    }
    eprintln!("{} records, {} errors", out.records.len(), out.errors);
    Ok(exit_for(out.errors, args.keep_going))
}

fn exit_for(errors: usize, keep_going: bool) -> ExitCode {
    if errors > 0 && !keep_going {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn evaluate(manifest: &Path, predictions: &Path, out: &Path, reference: SimiRef, keep_going: bool) -> Result<ExitCode> {
    let manifest = DatasetManifest::load(manifest)?;
    let preds: Vec<PredictionRecord> = read_jsonl(predictions)?;
    let by_id: HashMap<_, _> = preds.iter().map(|p| (&p.question_id, p)).collect();
    let records: Vec<QARecord> = manifest
        .entries()
        .iter()
        .map(|e| {
            let p = by_id.get(&e.question_id);
            QARecord {
                question_id: e.question_id.clone(),
                image_id: e.image_id.clone(),
                question: e.question.clone(),
                human_answers: e.human_answers.clone(),
                model_answer: p.and_then(|p| p.answer.clone()),
                human_box: e.human_box,
                predicted_box: p.and_then(|p| p.bbox),
            }
        })
        .collect();
    let reference = match reference {
        SimiRef::Modal => StrSimiReference::Modal,
        SimiRef::Max => StrSimiReference::Max,
    };
    let report = evaluate_dataset(&records, reference)?;
    let summary = json!({
        "summary": {
            "mean_acc": report.mean_acc,
            "mean_str_simi": report.mean_str_simi,
            "mean_iou": report.mean_iou,
            "evaluated": report.evaluated,
            "excluded": report.excluded,
        }
    });
    let lines = report
        .rows
        .iter()
        .map(serde_json::to_value)
        .chain(std::iter::once(Ok(summary.clone())))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    write_jsonl(out, lines)?;
    println!("{}", summary["summary"]);
    for r in report.rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("{}: {}", r.question_id, r.error.as_deref().unwrap_or_default());
    }
    Ok(exit_for(report.excluded, keep_going))
}

fn parse_box_arg(s: &str) -> Result<(BBox, String)> {
    let (coords, label) = s.split_once('=').unwrap_or((s, ""));
    Ok((coords.parse()?, label.to_string()))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::GradCrop { batch, bundles_dir } => run_batch(&batch, CropMethod::Grad, None, Some(&bundles_dir)),
        Command::ClipWCrop { batch, scorer } => run_batch(&batch, CropMethod::ClipW, Some(&scorer), None),
        Command::ClipRCrop { batch, scorer } => run_batch(&batch, CropMethod::ClipR, Some(&scorer), None),
        Command::Baseline { batch, method } => {
            let method = match method {
                BaselineMethod::None => CropMethod::None,
                BaselineMethod::Human => CropMethod::Human,
            };
            run_batch(&batch, method, None, None)
        }
        Command::Evaluate { manifest, predictions, out, str_simi_ref, keep_going } => {
            evaluate(&manifest, &predictions, &out, str_simi_ref, keep_going)
        }
        Command::BuildTextSubset { manifest, out, count, seed } => {
            let m = DatasetManifest::load(&manifest)?;
            let mut subset = build_text_subset(&m)?;
            if let Some(n) = count {
                subset = build_random_subset(&subset, n.min(subset.len()), seed)?;
            }
            subset.save(&out)?;
            eprintln!("kept {} of {} entries", subset.len(), m.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::BuildRandomSubset { manifest, out, n, seed } => {
            let m = DatasetManifest::load(&manifest)?;
            build_random_subset(&m, n, seed)?.save(&out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::FailureIntersection { manifest, preds_a, preds_b, out } => {
            let m = DatasetManifest::load(&manifest)?;
            let a: Vec<PredictionRecord> = read_jsonl(&preds_a)?;
            let b: Vec<PredictionRecord> = read_jsonl(&preds_b)?;
            let ids = failure_intersection(&a, &b, &m)?;
            let entries = m.sorted().into_iter().filter(|e| ids.contains(&e.question_id)).cloned().collect();
            DatasetManifest::new(entries)?.save(&out)?;
            eprintln!("{} candidates", ids.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::Overlay { image, boxes, out } => {
            let img = load_image(&image)?;
            let boxes = boxes.iter().map(|b| parse_box_arg(b)).collect::<Result<Vec<_>>>()?;
            save_image(&render_overlay(&img, &boxes)?, &out)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("vcrop: {e}");
            match e {
                Error::InvalidArgument(_) | Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
