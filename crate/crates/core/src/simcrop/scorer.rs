//! Similarity scorers and the line-delimited JSON scorer protocol.
//!
//! ```text
//! → {"op":"hello","version":1}            ← {"op":"hello","version":1,"pipeline":bool}
//! → {"id":7,"op":"score","image":"a.jpg","bbox":[x0,y0,x1,y1],"prompt":"..."}
//! ← {"id":7,"score":0.31}   or   {"id":7,"error":"..."}
//! → {"op":"shutdown"}                      ← stream close
//! ```
//!
//! Unknown fields are ignored on both sides. A version mismatch aborts the
//! session.

use std::collections::HashMap;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::BBox;

pub const PROTOCOL_VERSION: u32 = 1;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

/// Anything that can rate image regions against a text prompt.
pub trait Scorer {
    /// One score per box, in the order given.
    fn score_regions(&mut self, image: &Path, prompt: &str, boxes: &[BBox]) -> Result<Vec<f64>>;
}

impl<S: Scorer + ?Sized> Scorer for Box<S> {
    fn score_regions(&mut self, image: &Path, prompt: &str, boxes: &[BBox]) -> Result<Vec<f64>> {
        (**self).score_regions(image, prompt, boxes)
    }
}

impl<S: Scorer + ?Sized> Scorer for &mut S {
    fn score_regions(&mut self, image: &Path, prompt: &str, boxes: &[BBox]) -> Result<Vec<f64>> {
        (**self).score_regions(image, prompt, boxes)
    }
}

/// Region-vs-target IoU. Stands in for a similarity model in tests and in
/// the mock scorer binary.
#[derive(Debug, Clone, Copy)]
pub struct OverlapScorer {
    pub target: BBox,
}

impl OverlapScorer {
    pub fn score(&self, region: &BBox) -> f64 {
        let inter = self.target.intersection_area(region) as f64;
        let union = (self.target.area() + region.area()) as f64 - inter;
        inter / union
    }
}

impl Scorer for OverlapScorer {
    fn score_regions(&mut self, _image: &Path, _prompt: &str, boxes: &[BBox]) -> Result<Vec<f64>> {
        Ok(boxes.iter().map(|b| self.score(b)).collect())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantScorer(pub f64);

impl Scorer for ConstantScorer {
    fn score_regions(&mut self, _image: &Path, _prompt: &str, boxes: &[BBox]) -> Result<Vec<f64>> {
        Ok(vec![self.0; boxes.len()])
    }
}

/// Adapts a closure `(region, prompt) -> score`.
pub struct FnScorer<F>(pub F);

impl<F: FnMut(&BBox, &str) -> f64> Scorer for FnScorer<F> {
    fn score_regions(&mut self, _image: &Path, prompt: &str, boxes: &[BBox]) -> Result<Vec<f64>> {
        Ok(boxes.iter().map(|b| (self.0)(b, prompt)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum ClientMessage {
    Hello { version: u32 },
    Score { id: u64, image: PathBuf, bbox: BBox, prompt: String },
    Shutdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HelloReply {
    pub op: String,
    pub version: u32,
    #[serde(default)]
    pub pipeline: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScoreReply {
    Score { id: u64, score: f64 },
    Error { id: u64, error: String },
}

impl ScoreReply {
    pub fn id(&self) -> u64 {
        match self {
            ScoreReply::Score { id, .. } | ScoreReply::Error { id, .. } => *id,
        }
    }
}

/// Client side of a scorer session over any byte stream pair.
pub struct ScorerSession {
    writer: Box<dyn Write + Send>,
    lines: Receiver<io::Result<String>>,
    pipeline: bool,
    next_id: u64,
    timeout: Duration,
    child: Option<Child>,
    closed: bool,
}

impl ScorerSession {
    /// Performs the hello handshake over `reader`/`writer`.
    pub fn connect<R, W>(reader: R, writer: W, timeout: Duration) -> Result<Self>
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(reader).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        let mut session = Self {
            writer: Box::new(writer),
            lines: rx,
            pipeline: false,
            next_id: 1,
            timeout,
            child: None,
            closed: false,
        };
        session.handshake()?;
        Ok(session)
    }

    /// Spawns `cmd` (shell-style quoting, no shell) and talks over its stdio.
    pub fn spawn(cmd: &str, timeout: Duration) -> Result<Self> {
        let argv = shlex::split(cmd)
            .filter(|a| !a.is_empty())
            .ok_or_else(|| Error::invalid(format!("cannot parse scorer command {cmd:?}")))?;
        let mut child = Command::new(&argv[0])
            .args(&argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Transport(format!("spawning {:?}: {e}", argv[0])))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        match Self::connect(stdout, stdin, timeout) {
            Ok(mut s) => {
                s.child = Some(child);
                Ok(s)
            }
            Err(e) => {
                let _ = child.kill();
                let _ = child.wait();
                Err(e)
            }
        }
    }

    /// Whether the server allows several outstanding requests.
    pub fn pipelined(&self) -> bool {
        self.pipeline
    }

    /// Number of score requests issued so far.
    pub fn requests_sent(&self) -> u64 {
        self.next_id - 1
    }

    fn send(&mut self, msg: &ClientMessage) -> Result<()> {
        let mut line = serde_json::to_vec(msg)?;
        line.push(b'\n');
        self.writer
            .write_all(&line)
            .and_then(|_| self.writer.flush())
            .map_err(|e| Error::Transport(format!("write failed: {e}")))
    }

    fn recv_line(&mut self) -> Result<String> {
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(Error::Transport(format!("read failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => {
                Err(Error::Transport(format!("no response within {:?}", self.timeout)))
            }
            Err(RecvTimeoutError::Disconnected) => Err(Error::Transport("scorer closed the stream".into())),
        }
    }

    fn handshake(&mut self) -> Result<()> {
        self.send(&ClientMessage::Hello { version: PROTOCOL_VERSION })?;
        let line = self.recv_line()?;
        let hello: HelloReply = serde_json::from_str(&line)
            .map_err(|e| Error::Protocol(format!("bad hello reply {line:?}: {e}")))?;
        if hello.op != "hello" {
            return Err(Error::Protocol(format!("expected hello, got op {:?}", hello.op)));
        }
        if hello.version != PROTOCOL_VERSION {
            return Err(Error::Protocol(format!(
                "scorer speaks version {}, need {PROTOCOL_VERSION}",
                hello.version
            )));
        }
        self.pipeline = hello.pipeline;
        Ok(())
    }

    fn recv_reply(&mut self) -> Result<ScoreReply> {
        let line = self.recv_line()?;
        serde_json::from_str(&line).map_err(|e| Error::Protocol(format!("bad reply {line:?}: {e}")))
    }

    fn settle(reply: ScoreReply) -> Result<f64> {
        match reply {
            ScoreReply::Score { id, score } if !score.is_finite() => {
                Err(Error::Protocol(format!("non-finite score for request {id}")))
            }
            ScoreReply::Score { score, .. } => Ok(score),
            ScoreReply::Error { id, error } => Err(Error::Scorer { id, message: error }),
        }
    }

    fn issue(&mut self, image: &Path, prompt: &str, bbox: BBox) -> Result<u64> {
        let id = self.next_id;
        self.next_id += 1;
        self.send(&ClientMessage::Score {
            id,
            image: image.to_path_buf(),
            bbox,
            prompt: prompt.to_string(),
        })?;
        Ok(id)
    }

    /// Sends `{"op":"shutdown"}` and waits for the stream to close.
    pub fn shutdown(mut self) -> Result<()> {
        self.close()
    }

    fn close(&mut self) -> Result<()> {
        if self.closed {
            return Ok(());
        }
        self.closed = true;
        let sent = self.send(&ClientMessage::Shutdown);
        let drained = match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => Err(Error::Protocol(format!("unexpected line after shutdown: {line:?}"))),
            Ok(Err(e)) => Err(Error::Transport(format!("read failed: {e}"))),
            Err(RecvTimeoutError::Disconnected) => Ok(()),
            Err(RecvTimeoutError::Timeout) => Err(Error::Transport("scorer did not close after shutdown".into())),
        };
        if let Some(mut child) = self.child.take() {
            if drained.is_err() {
                let _ = child.kill();
            }
            let _ = child.wait();
        }
        sent.and(drained)
    }
}

impl Scorer for ScorerSession {
    fn score_regions(&mut self, image: &Path, prompt: &str, boxes: &[BBox]) -> Result<Vec<f64>> {
        if self.closed {
            return Err(Error::Transport("session already shut down".into()));
        }
        if !self.pipeline {
            let mut out = Vec::with_capacity(boxes.len());
            for b in boxes {
                let id = self.issue(image, prompt, *b)?;
                let reply = self.recv_reply()?;
                if reply.id() != id {
                    return Err(Error::Protocol(format!("expected reply to {id}, got {}", reply.id())));
                }
                out.push(Self::settle(reply)?);
            }
            return Ok(out);
        }

        let mut pending = HashMap::with_capacity(boxes.len());
        for (slot, b) in boxes.iter().enumerate() {
            pending.insert(self.issue(image, prompt, *b)?, slot);
        }
        let mut out = vec![0.0; boxes.len()];
        let mut first_err = None;
        while !pending.is_empty() {
            let reply = self.recv_reply()?;
            let slot = pending
                .remove(&reply.id())
                .ok_or_else(|| Error::Protocol(format!("reply for unknown request {}", reply.id())))?;
            match Self::settle(reply) {
                Ok(s) => out[slot] = s,
                Err(e) => {
                    first_err.get_or_insert(e);
                }
            }
        }
        match first_err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }
}

impl Drop for ScorerSession {
    fn drop(&mut self) {
        if let Some(mut child) = self.child.take() {
            if !self.closed {
                let _ = self.send(&ClientMessage::Shutdown);
            }
            // give a well-behaved server a moment, then make sure it is gone
            let _ = self.lines.recv_timeout(Duration::from_millis(200));
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// A score request as seen by a server.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreQuery {
    pub id: u64,
    pub image: PathBuf,
    pub bbox: BBox,
    pub prompt: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ServeStats {
    pub scored: u64,
    pub errors: u64,
    pub shutdown: bool,
}

fn write_json(w: &mut impl Write, v: &impl Serialize) -> Result<()> {
    let mut line = serde_json::to_vec(v)?;
    line.push(b'\n');
    w.write_all(&line)?;
    w.flush()?;
    Ok(())
}

/// Server side of the protocol, used by the mock scorer binary and tests.
///
/// Requests are answered in arrival order. A malformed line whose `id` can
/// still be read gets an error reply; anything else aborts the session with
/// [`Error::Protocol`].
pub fn serve<R: BufRead, W: Write>(
    reader: R,
    mut writer: W,
    pipeline: bool,
    mut handler: impl FnMut(&ScoreQuery) -> std::result::Result<f64, String>,
) -> Result<ServeStats> {
    let mut stats = ServeStats::default();
    let mut greeted = false;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(e) => return Err(Error::Protocol(format!("unparseable line {line:?}: {e}"))),
        };
        let id = value.get("id").and_then(serde_json::Value::as_u64);
        let msg = match serde_json::from_value::<ClientMessage>(value) {
            Ok(m) => m,
            Err(e) => match id {
                Some(id) => {
                    stats.errors += 1;
                    write_json(&mut writer, &ScoreReply::Error { id, error: format!("malformed request: {e}") })?;
                    continue;
                }
                None => return Err(Error::Protocol(format!("malformed line {line:?}: {e}"))),
            },
        };
        match msg {
            ClientMessage::Hello { version } => {
                write_json(
                    &mut writer,
                    &HelloReply { op: "hello".into(), version: PROTOCOL_VERSION, pipeline },
                )?;
                if version != PROTOCOL_VERSION {
                    return Err(Error::Protocol(format!("client speaks version {version}")));
                }
                greeted = true;
            }
            ClientMessage::Score { id, image, bbox, prompt } => {
                let reply = if !greeted {
                    Err("handshake required before scoring".to_string())
                } else {
                    handler(&ScoreQuery { id, image, bbox, prompt })
                };
                let reply = match reply {
                    Ok(score) if score.is_finite() => {
                        stats.scored += 1;
                        ScoreReply::Score { id, score }
                    }
                    Ok(score) => {
                        stats.errors += 1;
                        ScoreReply::Error { id, error: format!("non-finite score {score}") }
                    }
                    Err(error) => {
                        stats.errors += 1;
                        ScoreReply::Error { id, error }
                    }
                };
                write_json(&mut writer, &reply)?;
            }
            ClientMessage::Shutdown => {
                stats.shutdown = true;
                break;
            }
        }
    }
    Ok(stats)
}
