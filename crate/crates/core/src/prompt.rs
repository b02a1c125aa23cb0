//! Text fragments bound into prompt templates: premise block, history lines,
//! score trace, strategy definitions and few-shot examples.
//!
//! History lines have the shape
//! `[turn 3] Simulation (Power, score 1): text` where the parenthesized
//! annotation is optional and never contains `:`. The mock provider parses
//! this shape back, so keep `history_line` and `parse_history_line` in sync.

use crate::message::{Message, ResolutionScore, Sender};
use crate::scenario::Premise;
use crate::strategy::strategy_catalog;

pub const EMPTY_HISTORY: &str = "(no messages yet)";
pub const EXCERPT_SCORE_PREFIX: &str = "Score before this excerpt: ";

/// Which annotations a rendered history line carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Annotations {
    pub strategies: bool,
    pub scores: bool,
}

impl Annotations {
    pub const ALL: Annotations = Annotations {
        strategies: true,
        scores: true,
    };
    pub const NONE: Annotations = Annotations {
        strategies: false,
        scores: false,
    };
}

/// Collapses all whitespace runs (including newlines) to single spaces.
pub fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn history_line(message: &Message, annotations: Annotations) -> String {
    let mut notes = Vec::new();
    if annotations.strategies {
        if let Some(s) = message.strategy {
            notes.push(s.display_name().to_string());
        }
    }
    if annotations.scores {
        if let Some(score) = message.score {
            notes.push(format!("score {score}"));
        }
    }
    let annot = if notes.is_empty() {
        String::new()
    } else {
        format!(" ({})", notes.join(", "))
    };
    format!(
        "[turn {}] {}{}: {}",
        message.turn_index,
        message.sender.label(),
        annot,
        one_line(&message.text)
    )
}

/// Inverse of [`history_line`] for the sender and text.
pub fn parse_history_line(line: &str) -> Option<(Sender, &str)> {
    let rest = line.strip_prefix("[turn ")?;
    let (_, rest) = rest.split_once("] ")?;
    let sender = if rest.starts_with("User") {
        Sender::User
    } else if rest.starts_with("Simulation") {
        Sender::Simulation
    } else {
        return None;
    };
    let (_, text) = rest.split_once(": ")?;
    Some((sender, text))
}

pub fn history_block(messages: &[Message], annotations: Annotations) -> String {
    if messages.is_empty() {
        return EMPTY_HISTORY.to_string();
    }
    messages
        .iter()
        .map(|m| history_line(m, annotations))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Contextualization of the premise. `omitted` summarizes turns dropped from
/// the rendered history: their count and, when scores are in play, the score
/// reached before the excerpt.
pub fn premise_block(
    premise: &Premise,
    omitted: Option<(usize, Option<ResolutionScore>)>,
) -> String {
    let mut out = format!(
        "Premise: {}\nThe user plays: {}. The simulation plays: {}.",
        one_line(&premise.body),
        one_line(&premise.party_user),
        one_line(&premise.party_sim)
    );
    if let Some((count, score)) = omitted {
        out.push_str(&format!(
            "\nEarlier in this conversation, {count} messages were exchanged and are omitted here."
        ));
        if let Some(score) = score {
            out.push_str(&format!("\n{EXCERPT_SCORE_PREFIX}{score}"));
        }
    }
    out
}

pub fn score_history_block(scores: &[ResolutionScore]) -> String {
    if scores.is_empty() {
        "Conflict resolution scores so far: none yet (the conversation starts at 1).\n".to_string()
    } else {
        let list: Vec<String> = scores.iter().map(|s| s.to_string()).collect();
        format!("Conflict resolution scores so far: {}\n", list.join(", "))
    }
}

pub fn definitions_block() -> String {
    strategy_catalog()
        .iter()
        .map(|d| format!("- {}: {}", d.strategy.display_name(), d.definition))
        .collect::<Vec<_>>()
        .join("\n")
}

/// One labeled example per strategy, from the catalog's example column.
pub fn few_shot_block() -> String {
    strategy_catalog()
        .iter()
        .map(|d| {
            format!(
                "Message: {}\nStrategy: {}",
                d.example_utterance,
                d.strategy.display_name()
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}
