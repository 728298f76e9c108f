//! Scorer protocol server that needs no model.
//!
//! Scores a region by its IoU with a target box. The target comes from a
//! `target=x0,y0,x1,y1` token in the prompt, falling back to `--target`.

use std::io::{self, BufReader};
use std::process::ExitCode;

use clap::Parser;
use vcrop::simcrop::{serve, OverlapScorer, ScoreQuery};
use vcrop::BBox;

#[derive(Parser, Debug)]
#[command(name = "vcrop-mock-scorer", about = "Line-delimited JSON scorer for tests")]
struct Opt {
    /// Default target box `x0,y0,x1,y1`.
    #[arg(long)]
    target: Option<BBox>,

    /// Return this score for every region instead of an overlap.
    #[arg(long, conflicts_with = "target")]
    constant: Option<f64>,

    /// Advertise pipelining in the handshake.
    #[arg(long)]
    pipeline: bool,

    /// Answer this request id with an error.
    #[arg(long)]
    fail_id: Option<u64>,
}

fn prompt_target(prompt: &str) -> Option<BBox> {
    prompt
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix("target="))
        .and_then(|s| s.parse().ok())
}

fn score(opt: &Opt, q: &ScoreQuery) -> Result<f64, String> {
    if opt.fail_id == Some(q.id) {
        return Err(format!("injected failure for {}", q.id));
    }
    if let Some(c) = opt.constant {
        return Ok(c);
    }
    let target = prompt_target(&q.prompt)
        .or(opt.target)
        .ok_or_else(|| "no target in prompt and no --target".to_string())?;
    Ok(OverlapScorer { target }.score(&q.bbox))
}

fn main() -> ExitCode {
    let opt = Opt::parse();
    let stdin = io::stdin();
    let stdout = io::stdout();
    match serve(BufReader::new(stdin.lock()), stdout.lock(), opt.pipeline, |q| score(&opt, q)) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vcrop-mock-scorer: {e}");
            ExitCode::FAILURE
        }
    }
}
