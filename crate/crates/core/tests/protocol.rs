mod common;

use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use vcrop::imagecore::save_image;
use vcrop::simcrop::{
    clip_r_trace, clip_w_crop, clip_w_crop_sized, enumerate_windows, serve, OverlapScorer, RecursiveConfig,
    ScorerSession, WindowConfig,
};
use vcrop::{clip_r_crop, BBox, Error, ImageTensor, Scorer};

const TIMEOUT: Duration = Duration::from_secs(10);

fn mock(args: &str) -> ScorerSession {
    let cmd = format!("{} {args}", env!("CARGO_BIN_EXE_vcrop-mock-scorer"));
    ScorerSession::spawn(&cmd, TIMEOUT).unwrap()
}

fn test_image(dir: &Path, w: u32, h: u32) -> PathBuf {
    let path = dir.join("img.png");
    save_image(&ImageTensor::filled(w, h, [0.2, 0.4, 0.6]).unwrap(), &path).unwrap();
    path
}

#[test]
fn spawned_clip_w_matches_in_process_scorer() {
    let dir = tempfile::tempdir().unwrap();
    let img = test_image(dir.path(), 224, 224);
    let target = BBox::new(30, 100, 150, 210).unwrap();
    let cfg = WindowConfig::default();
    let local = clip_w_crop_sized(&img, 224, 224, "q", &mut OverlapScorer { target }, &cfg).unwrap().bbox;
    for flags in ["", "--pipeline"] {
        let mut session = mock(flags);
        let prompt = format!("where? target={},{},{},{}", target.x0, target.y0, target.x1, target.y1);
        assert_eq!(clip_w_crop(&img, &prompt, &mut session, &cfg).unwrap(), local, "flags {flags:?}");
        assert_eq!(session.requests_sent(), enumerate_windows(224, 224, &cfg).unwrap().len() as u64);
        session.shutdown().unwrap();
    }
}

#[test]
fn clip_r_issues_at_most_four_requests_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let img = test_image(dir.path(), 160, 120);
    let cfg = RecursiveConfig::default();
    let mut session = mock("--target 100,10,150,60");
    let got = clip_r_crop(&img, "q", &mut session, &cfg).unwrap();
    assert!(session.requests_sent() <= 4 * cfg.iterations as u64);
    let target = BBox::new(100, 10, 150, 60).unwrap();
    let trace = clip_r_trace(&img, 160, 120, "q", &mut OverlapScorer { target }, &cfg).unwrap();
    assert_eq!(got, *trace.last().unwrap());
    session.shutdown().unwrap();
}

#[test]
fn error_reply_surfaces_as_scorer_error_and_session_survives() {
    let mut session = mock("--constant 0.3 --fail-id 1");
    let b = BBox::new(0, 0, 4, 4).unwrap();
    let err = session.score_regions(Path::new("a.png"), "p", &[b]).unwrap_err();
    assert!(matches!(err, Error::Scorer { id: 1, .. }), "{err:?}");
    assert!(err.is_transport());
    assert_eq!(session.score_regions(Path::new("a.png"), "p", &[b]).unwrap(), vec![0.3]);
    session.shutdown().unwrap();
}

#[test]
fn missing_target_is_reported_per_request() {
    let mut session = mock("");
    let err = session.score_regions(Path::new("a.png"), "no target here", &[BBox::full(4, 4)]).unwrap_err();
    assert!(matches!(err, Error::Scorer { .. }), "{err:?}");
}

#[test]
fn silent_scorer_times_out() {
    let mut session = ScorerSession::connect(
        Cursor::new("{\"op\":\"hello\",\"version\":1,\"pipeline\":false}\n".to_string()),
        std::io::sink(),
        Duration::from_millis(200),
    )
    .unwrap();
    // the canned stream ends right after the hello, so the reader sees EOF
    let err = session.score_regions(Path::new("a.png"), "p", &[BBox::full(2, 2)]).unwrap_err();
    assert!(matches!(err, Error::Transport(_)), "{err:?}");

    let start = Instant::now();
    let err = ScorerSession::spawn("sleep 5", Duration::from_millis(200)).map(|_| ()).unwrap_err();
    assert!(matches!(err, Error::Transport(_)), "{err:?}");
    assert!(start.elapsed() < Duration::from_secs(4));
}

#[test]
fn unspawnable_command_is_an_error() {
    assert!(ScorerSession::spawn("/nonexistent/scorer --flag", TIMEOUT).is_err());
    assert!(matches!(ScorerSession::spawn("", TIMEOUT), Err(Error::InvalidArgument(_))));
    assert!(matches!(ScorerSession::spawn("'unterminated", TIMEOUT), Err(Error::InvalidArgument(_))));
}

#[test]
fn server_rejects_version_mismatch_after_replying() {
    let mut out = Vec::new();
    let res = serve(Cursor::new("{\"op\":\"hello\",\"version\":9}\n"), &mut out, true, |_| Ok(1.0));
    assert!(matches!(res, Err(Error::Protocol(_))), "{res:?}");
    let hello: serde_json::Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(hello["version"], 1);
    assert_eq!(hello["pipeline"], true);
}

#[test]
fn server_answers_score_before_hello_with_error() {
    let input = concat!(
        "{\"id\":3,\"op\":\"score\",\"image\":\"a.png\",\"bbox\":[0,0,1,1],\"prompt\":\"p\"}\n",
        "{\"op\":\"hello\",\"version\":1}\n",
        "{\"id\":4,\"op\":\"score\",\"image\":\"a.png\",\"bbox\":[0,0,1,1],\"prompt\":\"p\"}\n",
        "{\"op\":\"shutdown\"}\n",
    );
    let mut out = Vec::new();
    let stats = serve(Cursor::new(input), &mut out, false, |_| Ok(0.5)).unwrap();
    assert_eq!((stats.scored, stats.errors, stats.shutdown), (1, 1, true));
    let lines: Vec<serde_json::Value> =
        String::from_utf8(out).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[0]["id"], 3);
    assert!(lines[0]["error"].is_string());
    assert_eq!(lines[2], serde_json::json!({"id": 4, "score": 0.5}));
}

#[test]
fn server_aborts_on_unknown_op_without_id() {
    let input = "{\"op\":\"hello\",\"version\":1}\n{\"op\":\"dance\"}\n";
    let res = serve(Cursor::new(input), Vec::new(), false, |_| Ok(0.0));
    assert!(matches!(res, Err(Error::Protocol(_))), "{res:?}");
}

#[test]
fn out_of_order_or_foreign_reply_ids_are_protocol_errors() {
    let canned = "{\"op\":\"hello\",\"version\":1,\"pipeline\":false}\n{\"id\":99,\"score\":0.5}\n";
    let mut s = ScorerSession::connect(Cursor::new(canned.to_string()), std::io::sink(), TIMEOUT).unwrap();
    let res = s.score_regions(Path::new("a.png"), "p", &[BBox::full(2, 2)]);
    assert!(matches!(res, Err(Error::Protocol(_))), "{res:?}");
}
