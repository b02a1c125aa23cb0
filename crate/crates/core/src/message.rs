//! Utterances, resolution scores and the JSON-lines transcript format.

use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::strategy::Strategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sender {
    User,
    Simulation,
}

impl Sender {
    pub fn label(self) -> &'static str {
        match self {
            Sender::User => "User",
            Sender::Simulation => "Simulation",
        }
    }
}

impl fmt::Display for Sender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("resolution score {0} is outside 1..=5")]
pub struct ScoreOutOfRange(pub i64);

/// Predicted likelihood that the conflict de-escalates: 1 is most likely to
/// escalate, 5 least likely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub struct ResolutionScore(u8);

impl ResolutionScore {
    pub const MIN: ResolutionScore = ResolutionScore(1);
    pub const MAX: ResolutionScore = ResolutionScore(5);

    pub fn new(value: i64) -> Result<Self, ScoreOutOfRange> {
        if (1..=5).contains(&value) {
            Ok(ResolutionScore(value as u8))
        } else {
            Err(ScoreOutOfRange(value))
        }
    }

    pub fn clamped(value: i64) -> Self {
        ResolutionScore(value.clamp(1, 5) as u8)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn is_max(self) -> bool {
        self == Self::MAX
    }
}

impl Default for ResolutionScore {
    fn default() -> Self {
        Self::MIN
    }
}

impl TryFrom<i64> for ResolutionScore {
    type Error = ScoreOutOfRange;

    fn try_from(value: i64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<ResolutionScore> for i64 {
    fn from(score: ResolutionScore) -> i64 {
        score.0 as i64
    }
}

impl fmt::Display for ResolutionScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One utterance. Wire form: `{turn, sender, text, strategy?, score?}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    #[serde(rename = "turn")]
    pub turn_index: usize,
    pub sender: Sender,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<ResolutionScore>,
}

impl Message {
    pub fn new(turn_index: usize, sender: Sender, text: impl Into<String>) -> Self {
        Message {
            turn_index,
            sender,
            text: text.into(),
            strategy: None,
            score: None,
        }
    }

    pub fn user(turn_index: usize, text: impl Into<String>) -> Self {
        Self::new(turn_index, Sender::User, text)
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = Some(strategy);
        self
    }

    pub fn with_score(mut self, score: ResolutionScore) -> Self {
        self.score = Some(score);
        self
    }

    pub fn is_user(&self) -> bool {
        self.sender == Sender::User
    }
}

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// Writes one JSON object per line.
pub fn write_jsonl<W: Write>(mut out: W, messages: &[Message]) -> Result<(), TranscriptError> {
    for m in messages {
        serde_json::to_writer(&mut out, m).map_err(|e| TranscriptError::Json {
            line: m.turn_index,
            source: e,
        })?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn to_jsonl(messages: &[Message]) -> String {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, messages).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Reads a transcript, skipping blank lines.
pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<Message>, TranscriptError> {
    let mut messages = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let m = serde_json::from_str(&line).map_err(|e| TranscriptError::Json {
            line: i + 1,
            source: e,
        })?;
        messages.push(m);
    }
    Ok(messages)
}
