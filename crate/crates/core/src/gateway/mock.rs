//! Deterministic rule-based provider for offline runs and tests.
//!
//! The mock reads the prompt shape from the template's first line
//! (`Task: classify ...`, `Task: plan ...`, ...), recovers the conversation
//! from the rendered history lines, and answers from fixed rules:
//!
//! * classify: ordered keyword lexicon, first match wins.
//! * score: start at 1 (or the excerpt score), +1 for every user turn the
//!   lexicon labels cooperative, -1 for competitive, clamped to 1..=5.
//! * plan: competitive reciprocation at score <= 2, a cooperative strategy
//!   at score >= 4, Facts otherwise.
//! * generate: a canned utterance for the strategy, indexed by seed.
//!
//! Output depends only on `(prompt_text, seed)`.

use super::{CompletionProvider, CompletionRequest, GatewayError};
use crate::message::{ResolutionScore, Sender};
use crate::prompt::{parse_history_line, EXCERPT_SCORE_PREFIX};
use crate::strategy::{parse_strategy, Strategy, StrategyCategory};

/// Ordered `(keyword, strategy)` rules; lowercase substring match.
const LEXICON: &[(&[&str], Strategy)] = &[
    (
        &[
            "that makes sense",
            "you're right",
            "i can accept",
            "i'm willing to change",
            "i can live with",
        ],
        Strategy::Concession,
    ),
    (
        &[
            "i'm going to",
            "ridiculous",
            "report you",
            "destroy",
            "or else",
            "tell everyone",
            "you'll regret",
            "i'll make sure",
        ],
        Strategy::Power,
    ),
    (
        &[
            "fair",
            "policy",
            "allow",
            "agree to",
            "rules",
            "entitled",
            "contract",
            "agreement",
        ],
        Strategy::Rights,
    ),
    (
        &[
            "hi!",
            "how are you",
            "do you have time",
            "talk about",
            "let's start",
            "agenda",
        ],
        Strategy::Procedural,
    ),
    (
        &[
            "why don't we",
            "how about",
            "how does that sound",
            "i suggest",
            "instead",
            "what if we",
        ],
        Strategy::Proposal,
    ),
    (
        &[
            "work together",
            "excellent",
            "common goal",
            "both want",
            "i know you're",
            "confident we",
        ],
        Strategy::PositiveExpectations,
    ),
    (
        &[
            "understand",
            "wanted",
            "concern",
            "feel",
            "what do you need",
            "why do you",
        ],
        Strategy::Interests,
    ),
    (
        &[
            "unfortunately",
            "hours",
            "weeks",
            "days",
            "records",
            "receipt",
            "i put in",
            "for the record",
            "what happened",
        ],
        Strategy::Facts,
    ),
];

/// Strategy assigned when no lexicon rule fires.
pub const LEXICON_FALLBACK: Strategy = Strategy::Facts;

fn fold_text(text: &str) -> String {
    text.replace(['\u{2019}', '\u{2018}'], "'").to_lowercase()
}

/// Keyword classification used by the mock.
pub fn lexicon_classify(text: &str) -> Strategy {
    let folded = fold_text(text);
    LEXICON
        .iter()
        .find(|(keys, _)| keys.iter().any(|k| folded.contains(k)))
        .map(|(_, s)| *s)
        .unwrap_or(LEXICON_FALLBACK)
}

/// Canned utterances per strategy. Each one classifies back to its own
/// strategy under [`lexicon_classify`].
pub fn utterances(strategy: Strategy) -> &'static [&'static str] {
    match strategy {
        Strategy::Interests => &[
            "I understand this matters to you. What do you need most right now?",
            "Help me understand what worries you most about this.",
            "I hear your concern, and I can see why you feel frustrated.",
        ],
        Strategy::PositiveExpectations => &[
            "If we work together, we can figure this out.",
            "We both want the same thing here, and I'm sure we'll get there.",
            "You've always been excellent to deal with, so I'm hopeful we can sort this out.",
        ],
        Strategy::Proposal => &[
            "How about we split the difference and settle this today?",
            "Why don't we try a different approach instead?",
            "I suggest we set up a short follow-up next week. How does that sound?",
        ],
        Strategy::Concession => &[
            "That makes sense. I'm willing to change my position on this.",
            "You're right, I can accept that.",
            "Okay, I can live with your suggestion.",
        ],
        Strategy::Facts => &[
            "Unfortunately, this has happened three times in the last few weeks.",
            "For the record, this started over a week ago.",
            "Can you tell me exactly what happened, step by step?",
        ],
        Strategy::Procedural => &[
            "Hi! Do you have time to talk about this properly?",
            "Let's start by agreeing on what we're discussing.",
            "Before we go further, can we set an agenda for this conversation?",
        ],
        Strategy::Power => &[
            "I'm going to report this to your manager if you don't fix it now.",
            "This is ridiculous. Fix it or you'll regret it.",
            "Do what I ask or else I'll make sure everyone hears about this.",
        ],
        Strategy::Rights => &[
            "That's not fair. I'm entitled to better than this.",
            "Rules are rules, and this clearly breaks them.",
            "We had an agreement and you broke it.",
        ],
    }
}

/// Replies for direct (unplanned) generation.
const UNPLANNED: &[&str] = &[
    "I don't know what else to say about this.",
    "Just tell me what happens now.",
    "Look, I came here to get this sorted.",
    "Well? I'm still waiting for an answer.",
];

/// Applies the per-turn score rule to a sequence of user strategies.
/// Returns the score after each turn.
pub fn score_trajectory(start: ResolutionScore, user_turns: &[Strategy]) -> Vec<ResolutionScore> {
    let mut score = i64::from(start);
    user_turns
        .iter()
        .map(|s| {
            score = match s.category() {
                StrategyCategory::Cooperative => (score + 1).min(5),
                StrategyCategory::Competitive => (score - 1).max(1),
                StrategyCategory::Neutral => score,
            };
            ResolutionScore::clamped(score)
        })
        .collect()
}

/// Strategy the simulated party plans at `score`, reacting to the user's
/// last strategy. `turn` breaks ties between Power and Rights.
pub fn plan_policy(score: ResolutionScore, last_user: Option<Strategy>, turn: usize) -> Strategy {
    match score.value() {
        0..=2 => match last_user {
            Some(s) if s.is_competitive() => s,
            _ if turn % 2 == 0 => Strategy::Power,
            _ => Strategy::Rights,
        },
        3 => Strategy::Facts,
        _ => match last_user {
            Some(Strategy::Proposal) => Strategy::Concession,
            Some(Strategy::Concession) => Strategy::PositiveExpectations,
            Some(s) if s.is_cooperative() => s,
            _ => Strategy::Interests,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Task {
    Classify,
    Plan,
    Generate,
    Respond,
    Score,
}

fn task_of(prompt: &str) -> Option<Task> {
    let first = prompt.lines().next()?.trim();
    let rest = first.strip_prefix("Task: ")?;
    let word = rest.split_whitespace().next()?;
    match word {
        "classify" => Some(Task::Classify),
        "plan" => Some(Task::Plan),
        "generate" => Some(Task::Generate),
        "respond" => Some(Task::Respond),
        "score" => Some(Task::Score),
        _ => None,
    }
}

/// What the mock recovers from a rendered prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptSummary {
    pub start_score: ResolutionScore,
    pub user_strategies: Vec<Strategy>,
    pub history_len: usize,
}

impl TranscriptSummary {
    pub fn from_prompt(prompt: &str) -> Self {
        let mut start_score = ResolutionScore::MIN;
        let mut user_strategies = Vec::new();
        let mut history_len = 0;
        for line in prompt.lines() {
            if let Some(v) = line.strip_prefix(EXCERPT_SCORE_PREFIX) {
                if let Ok(n) = v.trim().parse::<i64>() {
                    start_score = ResolutionScore::clamped(n);
                }
            } else if let Some((sender, text)) = parse_history_line(line) {
                history_len += 1;
                if sender == Sender::User {
                    user_strategies.push(lexicon_classify(text));
                }
            }
        }
        TranscriptSummary {
            start_score,
            user_strategies,
            history_len,
        }
    }

    pub fn current_score(&self) -> ResolutionScore {
        score_trajectory(self.start_score, &self.user_strategies)
            .last()
            .copied()
            .unwrap_or(self.start_score)
    }
}

fn last_line_value<'a>(prompt: &'a str, prefix: &str) -> Option<&'a str> {
    prompt
        .lines()
        .rev()
        .find_map(|l| l.strip_prefix(prefix))
        .map(str::trim)
        .filter(|v| !v.is_empty())
}

fn miss(reason: &str) -> GatewayError {
    GatewayError::MockRuleMiss(reason.to_string())
}

/// Answers a prompt according to the mock rules. Pure in `(prompt, seed)`.
pub fn mock_policy(prompt: &str, seed: u64) -> Result<String, GatewayError> {
    let task = task_of(prompt).ok_or_else(|| miss("prompt has no recognizable `Task:` header"))?;
    let summary = TranscriptSummary::from_prompt(prompt);
    let pick = |n: usize| ((seed as usize).wrapping_add(summary.history_len)) % n;
    match task {
        Task::Classify => {
            let text = last_line_value(prompt, "Message:")
                .ok_or_else(|| miss("classification prompt without a `Message:` line"))?;
            Ok(lexicon_classify(text).display_name().to_string())
        }
        Task::Score => Ok(summary.current_score().to_string()),
        Task::Plan => Ok(plan_policy(
            summary.current_score(),
            summary.user_strategies.last().copied(),
            summary.history_len,
        )
        .display_name()
        .to_string()),
        Task::Generate => {
            let name = last_line_value(prompt, "Strategy:")
                .ok_or_else(|| miss("generation prompt without a `Strategy:` line"))?;
            let strategy = parse_strategy(name)
                .map_err(|_| miss("generation prompt names an unknown strategy"))?;
            let options = utterances(strategy);
            Ok(options[pick(options.len())].to_string())
        }
        Task::Respond => Ok(UNPLANNED[pick(UNPLANNED.len())].to_string()),
    }
}

#[derive(Debug, Clone, Default)]
pub struct MockProvider;

impl CompletionProvider for MockProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        mock_policy(&request.prompt_text, request.seed.unwrap_or(0))
    }

    fn name(&self) -> &str {
        "mock"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::quiz_items;
    use crate::strategy::strategy_catalog;

    fn classify_prompt(message: &str) -> String {
        format!("Task: classify the strategy.\n\nExamples:\nMessage: I'm going to fire you.\nStrategy: Power\n\nSender: User\nMessage: {message}\nStrategy:")
    }

    #[test]
    fn classifies_table_examples() {
        for def in strategy_catalog() {
            assert_eq!(
                lexicon_classify(def.example_utterance),
                def.strategy,
                "{}",
                def.example_utterance
            );
        }
    }

    #[test]
    fn classifies_quiz_items() {
        for item in quiz_items() {
            assert_eq!(lexicon_classify(item.text), item.gold, "{}", item.text);
        }
        assert_eq!(lexicon_classify("That's not fair!"), Strategy::Rights);
        assert_eq!(
            lexicon_classify("You're being ridiculous."),
            Strategy::Power
        );
        assert_eq!(
            lexicon_classify("If we work together, we can figure this out."),
            Strategy::PositiveExpectations
        );
    }

    #[test]
    fn canned_utterances_classify_back() {
        for s in Strategy::ALL {
            let options = utterances(s);
            assert!(options.len() >= 2);
            for u in options {
                assert_eq!(lexicon_classify(u), s, "{u}");
            }
        }
    }

    #[test]
    fn classification_reads_only_the_final_message() {
        let p = classify_prompt("I'm going to tell everyone you've been missing deadlines.");
        assert_eq!(mock_policy(&p, 0).unwrap(), "Power");
        let p = classify_prompt("I put in 60 hours for the last 4 weeks.");
        assert_eq!(mock_policy(&p, 0).unwrap(), "Facts");
    }

    #[test]
    fn deterministic_in_prompt_and_seed() {
        let p = classify_prompt("How about we try again?");
        assert_eq!(mock_policy(&p, 3).unwrap(), mock_policy(&p, 3).unwrap());
    }

    #[test]
    fn unknown_prompt_shape_is_a_rule_miss() {
        assert!(matches!(
            mock_policy("hello there", 0),
            Err(GatewayError::MockRuleMiss(_))
        ));
        assert!(matches!(
            mock_policy("Task: juggle\nStrategy:", 0),
            Err(GatewayError::MockRuleMiss(_))
        ));
        assert!(matches!(
            mock_policy("Task: generate a message\nMessage:", 0),
            Err(GatewayError::MockRuleMiss(_))
        ));
    }

    #[test]
    fn score_steps() {
        use Strategy::*;
        let path = score_trajectory(ResolutionScore::MIN, &[Power, Interests, Proposal]);
        let values: Vec<u8> = path.iter().map(|s| s.value()).collect();
        assert_eq!(values, vec![1, 2, 3]);
        let up: Vec<u8> = score_trajectory(ResolutionScore::MIN, &[Interests; 6])
            .iter()
            .map(|s| s.value())
            .collect();
        assert_eq!(up, vec![2, 3, 4, 5, 5, 5]);
    }

    #[test]
    fn plan_policy_branches() {
        let s = |v| ResolutionScore::new(v).unwrap();
        assert!(plan_policy(s(5), None, 7).is_cooperative());
        assert!(plan_policy(s(4), Some(Strategy::Facts), 7).is_cooperative());
        assert_eq!(
            plan_policy(s(3), Some(Strategy::Interests), 4),
            Strategy::Facts
        );
        assert_eq!(
            plan_policy(s(1), Some(Strategy::Rights), 2),
            Strategy::Rights
        );
        assert!(plan_policy(s(1), None, 0).is_competitive());
        assert!(plan_policy(s(2), Some(Strategy::Facts), 3).is_competitive());
    }

    #[test]
    fn summary_reads_excerpt_score() {
        let prompt = format!(
            "Task: score it\n{EXCERPT_SCORE_PREFIX}3\n[turn 41] User (Interests): I understand you.\n[turn 42] Simulation: ok\nScore:"
        );
        let summary = TranscriptSummary::from_prompt(&prompt);
        assert_eq!(summary.history_len, 2);
        assert_eq!(summary.current_score().value(), 4);
    }
}
