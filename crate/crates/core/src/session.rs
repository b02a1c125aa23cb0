//! The interaction state machine: turn alternation, counterfactual
//! selection, the recall and recognition gate, cooperative termination and
//! restart.

use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::info;
use uuid::Uuid;

use crate::message::{self, Message, ResolutionScore, Sender, TranscriptError};
use crate::pipeline::{
    BundleOption, ConversationContext, CounterfactualBundle, Pipeline, PipelineError, PipelineMode,
    ALTERNATIVE_COUNT,
};
use crate::scenario::Premise;
use crate::strategy::{parse_strategy, Strategy};

pub const MAX_RECALL_FAILURES: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    AwaitingUser,
    AwaitingRecall,
    AwaitingRecognition,
    AwaitingSelection,
    Cooperative,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::AwaitingUser => "awaiting_user",
            Phase::AwaitingRecall => "awaiting_recall",
            Phase::AwaitingRecognition => "awaiting_recognition",
            Phase::AwaitingSelection => "awaiting_selection",
            Phase::Cooperative => "cooperative",
        }
    }

    /// Whether the latest simulated strategy is still hidden.
    pub fn gated(self) -> bool {
        matches!(self, Phase::AwaitingRecall | Phase::AwaitingRecognition)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecallMode {
    FreeText,
    MultipleChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecallOutcome {
    pub correct: bool,
    pub mode: RecallMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub revealed_strategy: Option<Strategy>,
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("command needs phase {expected} but the session is in {actual}")]
    WrongPhase { expected: Phase, actual: Phase },
    #[error("message text is empty")]
    EmptyMessage,
    #[error("alternative {index} does not exist (there are {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

pub type Result<T, E = SessionError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: Uuid,
    pub premise: Premise,
    pub transcript: Vec<Message>,
    pub phase: Phase,
    pub recall_failures: u8,
    pub pending_response: Option<Message>,
    pub pending_bundle: Option<CounterfactualBundle>,
    pub current_score: ResolutionScore,
}

impl SessionState {
    /// Opens a session: the simulated party sends the first message at
    /// score 1 and its strategy is hidden behind the recall gate.
    pub fn start(pipeline: &Pipeline, premise: Premise) -> Result<Self> {
        Self::start_with_id(pipeline, premise, Uuid::new_v4())
    }

    pub fn start_with_id(pipeline: &Pipeline, premise: Premise, session_id: Uuid) -> Result<Self> {
        let ctx = ConversationContext::new(premise);
        let mut opening = pipeline.respond(&ctx, PipelineMode::Full)?;
        opening.score = Some(ResolutionScore::MIN);
        info!(%session_id, premise = %ctx.premise.premise_id, "session started");
        Ok(SessionState {
            session_id,
            premise: ctx.premise,
            transcript: vec![opening],
            phase: Phase::AwaitingRecall,
            recall_failures: 0,
            pending_response: None,
            pending_bundle: None,
            current_score: ResolutionScore::MIN,
        })
    }

    pub fn context(&self) -> ConversationContext {
        ConversationContext {
            premise: self.premise.clone(),
            history: self.transcript.clone(),
        }
    }

    fn expect(&self, expected: Phase) -> Result<()> {
        if self.phase == expected {
            Ok(())
        } else {
            Err(SessionError::WrongPhase {
                expected,
                actual: self.phase,
            })
        }
    }

    fn latest_simulated(&self) -> Option<&Message> {
        self.transcript
            .iter()
            .rev()
            .find(|m| m.sender == Sender::Simulation)
    }

    /// The strategy the learner has to identify, if any.
    pub fn hidden_strategy(&self) -> Option<Strategy> {
        if self.phase.gated() {
            self.latest_simulated().and_then(|m| m.strategy)
        } else {
            None
        }
    }

    fn reveal(&mut self) -> Option<Strategy> {
        let strategy = self.hidden_strategy();
        self.phase = Phase::AwaitingUser;
        strategy
    }

    /// Free-text recall of the latest simulated strategy. Unparsable answers
    /// count as misses; the second consecutive miss unlocks recognition.
    pub fn attempt_recall(&mut self, answer_text: &str) -> Result<RecallOutcome> {
        self.expect(Phase::AwaitingRecall)?;
        let hidden = self.hidden_strategy();
        let correct = hidden.is_some() && parse_strategy(answer_text).ok() == hidden;
        if correct {
            self.recall_failures = 0;
            return Ok(RecallOutcome {
                correct,
                mode: RecallMode::FreeText,
                revealed_strategy: self.reveal(),
            });
        }
        self.recall_failures = (self.recall_failures + 1).min(MAX_RECALL_FAILURES);
        let mode = if self.recall_failures == MAX_RECALL_FAILURES {
            self.phase = Phase::AwaitingRecognition;
            RecallMode::MultipleChoice
        } else {
            RecallMode::FreeText
        };
        Ok(RecallOutcome {
            correct,
            mode,
            revealed_strategy: None,
        })
    }

    /// Multiple-choice recognition; retried until correct.
    pub fn choose_recognition(&mut self, choice: Strategy) -> Result<RecallOutcome> {
        self.expect(Phase::AwaitingRecognition)?;
        let correct = self.hidden_strategy() == Some(choice);
        let revealed_strategy = if correct { self.reveal() } else { None };
        Ok(RecallOutcome {
            correct,
            mode: RecallMode::MultipleChoice,
            revealed_strategy,
        })
    }

    /// Classifies the message and stages its counterfactual bundle.
    pub fn submit_user_message(
        &mut self,
        pipeline: &Pipeline,
        text: &str,
    ) -> Result<&CounterfactualBundle> {
        self.expect(Phase::AwaitingUser)?;
        if text.trim().is_empty() {
            return Err(SessionError::EmptyMessage);
        }
        let ctx = self.context();
        let bundle =
            pipeline.counterfactuals(&ctx, &Message::user(ctx.next_turn(), text.trim()))?;
        self.pending_response = Some(bundle.user_reply.clone());
        self.phase = Phase::AwaitingSelection;
        Ok(self.pending_bundle.insert(bundle))
    }

    fn staged(&self, option: BundleOption) -> Result<(Message, Message)> {
        self.expect(Phase::AwaitingSelection)?;
        let bundle = self
            .pending_bundle
            .as_ref()
            .expect("awaiting selection implies a staged bundle");
        bundle.option(option).ok_or(SessionError::IndexOutOfRange {
            index: match option {
                BundleOption::Alternative(i) => i,
                BundleOption::Original => 0,
            },
            len: ALTERNATIVE_COUNT,
        })
    }

    /// Commits the chosen message and its predicted reply.
    pub fn select_option(&mut self, option: BundleOption) -> Result<&Self> {
        let (user, reply) = self.staged(option)?;
        let score = reply.score.unwrap_or(self.current_score);
        self.transcript.push(user);
        self.transcript.push(reply);
        self.pending_bundle = None;
        self.pending_response = None;
        self.recall_failures = 0;
        self.current_score = score;
        self.phase = if score.is_max() {
            info!(session_id = %self.session_id, "cooperative state reached");
            Phase::Cooperative
        } else {
            Phase::AwaitingRecall
        };
        Ok(self)
    }

    /// Projects a reply to a staged option without committing anything.
    pub fn fast_forward(
        &self,
        pipeline: &Pipeline,
        option: BundleOption,
        variation_index: u64,
    ) -> Result<Message> {
        let (user, _) = self.staged(option)?;
        Ok(pipeline.fast_forward(&self.context(), &user, variation_index)?)
    }

    /// Starts over on the same premise, keeping the session id.
    pub fn restart(&mut self, pipeline: &Pipeline) -> Result<&Self> {
        *self = Self::start_with_id(pipeline, self.premise.clone(), self.session_id)?;
        Ok(self)
    }

    /// The transcript as the learner may see it.
    pub fn public_transcript(&self) -> Vec<Message> {
        let mut out = self.transcript.clone();
        if self.phase.gated() {
            if let Some(m) = out
                .iter_mut()
                .rev()
                .find(|m| m.sender == Sender::Simulation)
            {
                m.strategy = None;
            }
        }
        out
    }

    /// The staged bundle with predicted-reply strategies removed, since each
    /// of them becomes a recall question once committed.
    pub fn public_bundle(&self) -> Option<CounterfactualBundle> {
        self.pending_bundle.as_ref().map(mask_bundle)
    }

    pub fn header(&self) -> SnapshotHeader {
        SnapshotHeader {
            session_id: self.session_id,
            premise_id: self.premise.premise_id.clone(),
            phase: self.phase,
            current_score: self.current_score,
        }
    }

    /// Header line followed by one line per committed message.
    pub fn write_snapshot<W: Write>(
        &self,
        mut writer: W,
    ) -> std::result::Result<(), TranscriptError> {
        serde_json::to_writer(&mut writer, &self.header())
            .map_err(|source| TranscriptError::Json { line: 1, source })?;
        writer.write_all(b"\n")?;
        message::write_jsonl(writer, &self.transcript)
    }

    pub fn snapshot_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_snapshot(&mut buf)
            .expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }
}

pub fn mask_bundle(bundle: &CounterfactualBundle) -> CounterfactualBundle {
    let mut out = bundle.clone();
    out.user_reply.strategy = None;
    for alt in &mut out.alternatives {
        alt.predicted_reply.strategy = None;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub session_id: Uuid,
    pub premise_id: String,
    pub phase: Phase,
    pub current_score: ResolutionScore,
}

pub fn read_snapshot<R: BufRead>(
    mut reader: R,
) -> std::result::Result<(SnapshotHeader, Vec<Message>), TranscriptError> {
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let header = serde_json::from_str(first.trim())
        .map_err(|source| TranscriptError::Json { line: 1, source })?;
    Ok((header, message::read_jsonl(reader)?))
}
