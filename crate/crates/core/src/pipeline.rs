//! The prompting pipeline: contextualization, strategy classification,
//! strategy planning, strategy-conditioned generation, resolution scoring,
//! and the counterfactual bundles built from them.

use std::fmt;
use std::str::FromStr;
use std::thread;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::gateway::{Bindings, CompletionRequest, Gateway, GatewayError, TemplateKind};
use crate::message::{Message, ResolutionScore, Sender};
use crate::prompt::{self, Annotations};
use crate::scenario::Premise;
use crate::strategy::{parse_strategy, Strategy, StrategyCategory};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("could not parse a strategy from completion {completion:?}")]
    UnparsableStrategy { completion: String },
    #[error("could not parse a score from completion {completion:?}")]
    UnparsableScore { completion: String },
    #[error("provider returned an empty message")]
    EmptyCompletion,
    #[error("invalid pipeline input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;

/// The four pipeline variants compared in the ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineMode {
    /// Contextualization only: unconstrained generation.
    Standard,
    /// Strategy planning, no scoring and no score history.
    PlanningOnly,
    /// Scores generated and fed back, no strategy planning.
    ScoringOnly,
    /// Planning and scoring.
    Full,
}

impl PipelineMode {
    pub const ALL: [PipelineMode; 4] = [
        PipelineMode::Standard,
        PipelineMode::PlanningOnly,
        PipelineMode::ScoringOnly,
        PipelineMode::Full,
    ];

    pub fn plans(self) -> bool {
        matches!(self, PipelineMode::PlanningOnly | PipelineMode::Full)
    }

    pub fn scores(self) -> bool {
        matches!(self, PipelineMode::ScoringOnly | PipelineMode::Full)
    }

    pub fn name(self) -> &'static str {
        match self {
            PipelineMode::Standard => "standard",
            PipelineMode::PlanningOnly => "planning_only",
            PipelineMode::ScoringOnly => "scoring_only",
            PipelineMode::Full => "full",
        }
    }

    fn annotations(self) -> Annotations {
        Annotations {
            strategies: self.plans(),
            scores: self.scores(),
        }
    }
}

impl fmt::Display for PipelineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PipelineMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        PipelineMode::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| format!("unknown pipeline mode {s:?}"))
    }
}

/// Premise plus everything said so far, in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversationContext {
    pub premise: Premise,
    pub history: Vec<Message>,
}

impl ConversationContext {
    pub fn new(premise: Premise) -> Self {
        ConversationContext {
            premise,
            history: Vec::new(),
        }
    }

    pub fn next_turn(&self) -> usize {
        self.history.last().map_or(0, |m| m.turn_index + 1)
    }

    pub fn with_message(&self, message: Message) -> Self {
        let mut next = self.clone();
        next.history.push(message);
        next
    }

    pub fn score_history(&self) -> Vec<ResolutionScore> {
        self.history
            .iter()
            .filter(|m| m.sender == Sender::Simulation)
            .filter_map(|m| m.score)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterfactual {
    pub strategy: Strategy,
    pub message_text: String,
    pub predicted_reply: Message,
    pub score: ResolutionScore,
}

/// The user's classified message, the predicted reply to it, and three
/// alternatives in catalog order of strategy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterfactualBundle {
    pub user_message: Message,
    pub user_reply: Message,
    pub alternatives: Vec<Counterfactual>,
}

impl CounterfactualBundle {
    /// The user-side message and predicted reply for an option.
    pub fn option(&self, option: BundleOption) -> Option<(Message, Message)> {
        match option {
            BundleOption::Original => Some((self.user_message.clone(), self.user_reply.clone())),
            BundleOption::Alternative(i) => self.alternatives.get(i).map(|alt| {
                (
                    Message::user(self.user_message.turn_index, alt.message_text.clone())
                        .with_strategy(alt.strategy),
                    alt.predicted_reply.clone(),
                )
            }),
        }
    }
}

/// A choice within a staged bundle. JSON: `"original"` or `{"alternative": 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BundleOption {
    Original,
    Alternative(usize),
}

pub const ALTERNATIVE_COUNT: usize = 3;
pub const DEFAULT_HISTORY_CAP: usize = 40;

/// Cooperative strategies other than `used`, in catalog order, topped up
/// with Facts then Procedural; the first three are taken.
pub fn select_alternatives(used: Strategy) -> [Strategy; ALTERNATIVE_COUNT] {
    let picked: Vec<Strategy> = StrategyCategory::Cooperative
        .members()
        .chain([Strategy::Facts, Strategy::Procedural])
        .filter(|s| *s != used)
        .take(ALTERNATIVE_COUNT)
        .collect();
    [picked[0], picked[1], picked[2]]
}

fn first_line(completion: &str) -> &str {
    completion.trim().lines().next().unwrap_or("").trim()
}

fn parse_label(completion: &str) -> Option<Strategy> {
    let line = first_line(completion);
    let line = line.strip_prefix("Strategy:").unwrap_or(line);
    let line = line.trim_matches(|c: char| c == '"' || c == '*' || c == '\'' || c.is_whitespace());
    parse_strategy(line).ok()
}

fn parse_score_value(completion: &str) -> Option<i64> {
    let line = first_line(completion);
    let line = line.strip_prefix("Score:").unwrap_or(line).trim();
    let start = line.find(|c: char| c.is_ascii_digit())?;
    let negative = line[..start].ends_with('-');
    let digits: String = line[start..]
        .chars()
        .take_while(|c| c.is_ascii_digit())
        .collect();
    let value: i64 = digits.parse().ok()?;
    Some(if negative { -value } else { value })
}

fn clean_generation(completion: &str) -> String {
    let text = completion.trim();
    let text = text.strip_prefix("Message:").unwrap_or(text).trim();
    let text = text
        .strip_prefix('"')
        .and_then(|t| t.strip_suffix('"'))
        .unwrap_or(text);
    prompt::one_line(text)
}

const STRATEGY_REASK: &str = "\n\nAnswer with exactly one of: Interests, Positive Expectations, Proposal, Concession, Facts, Procedural, Power, Rights.\nStrategy:";
const SCORE_REASK: &str = "\n\nAnswer with a single integer from 1 to 5.\nScore:";

/// Stateless orchestration over a [`Gateway`].
#[derive(Clone)]
pub struct Pipeline {
    gateway: Gateway,
    history_cap: usize,
}

impl Pipeline {
    pub fn new(gateway: Gateway) -> Self {
        Pipeline {
            gateway,
            history_cap: DEFAULT_HISTORY_CAP,
        }
    }

    pub fn mock() -> Self {
        Self::new(Gateway::mock())
    }

    pub fn with_history_cap(mut self, cap: usize) -> Self {
        self.history_cap = cap.max(1);
        self
    }

    pub fn gateway(&self) -> &Gateway {
        &self.gateway
    }

    fn context_bindings(
        &self,
        ctx: &ConversationContext,
        annotations: Annotations,
        with_scores: bool,
    ) -> Bindings {
        let len = ctx.history.len();
        let mut cut = len.saturating_sub(self.history_cap);
        while cut > 0 && cut < len && ctx.history[cut - 1].sender == Sender::User {
            cut += 1;
        }
        let (omitted, shown) = ctx.history.split_at(cut);
        let summary = (!omitted.is_empty()).then(|| {
            let score = with_scores.then(|| {
                omitted
                    .iter()
                    .rev()
                    .find_map(|m| m.score.filter(|_| m.sender == Sender::Simulation))
                    .unwrap_or_default()
            });
            (omitted.len(), score)
        });
        let mut b = Bindings::new();
        b.insert(
            "premise".into(),
            prompt::premise_block(&ctx.premise, summary),
        );
        b.insert("history".into(), prompt::history_block(shown, annotations));
        b.insert(
            "score_history".into(),
            if with_scores {
                prompt::score_history_block(&ctx.score_history())
            } else {
                String::new()
            },
        );
        b.insert("definitions".into(), prompt::definitions_block());
        b.insert("few_shot".into(), String::new());
        b
    }

    fn label_completion(&self, prompt_text: String) -> Result<Strategy> {
        let first = self
            .gateway
            .complete(&CompletionRequest::deterministic(prompt_text.clone()))?;
        if let Some(s) = parse_label(&first) {
            return Ok(s);
        }
        warn!(completion = %first, "unparsable strategy, asking again");
        let second = self.gateway.complete(&CompletionRequest::deterministic(
            prompt_text + STRATEGY_REASK,
        ))?;
        parse_label(&second).ok_or(PipelineError::UnparsableStrategy { completion: second })
    }

    /// Labels `message` with a strategy, conditioned on the conversation.
    pub fn classify(&self, ctx: &ConversationContext, message: &Message) -> Result<Strategy> {
        if message.text.trim().is_empty() {
            return Err(PipelineError::InvalidInput(
                "cannot classify an empty message".into(),
            ));
        }
        let mut b = self.context_bindings(ctx, Annotations::ALL, true);
        b.insert("few_shot".into(), prompt::few_shot_block());
        b.insert("sender".into(), message.sender.label().into());
        b.insert("message".into(), prompt::one_line(&message.text));
        let text = self.gateway.render(TemplateKind::Classify, &b)?;
        self.label_completion(text)
    }

    /// Predicts the strategy `role` uses next.
    fn plan(
        &self,
        ctx: &ConversationContext,
        role: Sender,
        mode: PipelineMode,
        seed: u64,
    ) -> Result<Strategy> {
        let mut b = self.context_bindings(ctx, mode.annotations(), mode.scores());
        b.insert("sender".into(), role.label().into());
        let text = self.gateway.render(TemplateKind::Plan, &b)?;
        let completion = self
            .gateway
            .complete(&CompletionRequest::sampled(text.clone(), seed))?;
        if let Some(s) = parse_label(&completion) {
            return Ok(s);
        }
        warn!(completion = %completion, "unparsable plan, asking again");
        let second = self
            .gateway
            .complete(&CompletionRequest::deterministic(text + STRATEGY_REASK))?;
        parse_label(&second).ok_or(PipelineError::UnparsableStrategy { completion: second })
    }

    fn generate(
        &self,
        ctx: &ConversationContext,
        role: Sender,
        strategy: Strategy,
        mode: PipelineMode,
        seed: u64,
    ) -> Result<String> {
        let mut b = self.context_bindings(ctx, mode.annotations(), mode.scores());
        b.insert("sender".into(), role.label().into());
        b.insert("strategy".into(), strategy.display_name().into());
        let text = self.gateway.render(TemplateKind::Generate, &b)?;
        let out = clean_generation(
            &self
                .gateway
                .complete(&CompletionRequest::sampled(text, seed))?,
        );
        if out.is_empty() {
            return Err(PipelineError::EmptyCompletion);
        }
        Ok(out)
    }

    /// A message for `role` that uses `strategy`.
    pub fn generate_with_strategy(
        &self,
        ctx: &ConversationContext,
        role: Sender,
        strategy: Strategy,
    ) -> Result<String> {
        self.generate(ctx, role, strategy, PipelineMode::Full, 0)
    }

    fn generate_direct(
        &self,
        ctx: &ConversationContext,
        mode: PipelineMode,
        seed: u64,
    ) -> Result<String> {
        let mut b = self.context_bindings(ctx, mode.annotations(), mode.scores());
        b.insert("sender".into(), Sender::Simulation.label().into());
        let text = self.gateway.render(TemplateKind::Respond, &b)?;
        let out = clean_generation(
            &self
                .gateway
                .complete(&CompletionRequest::sampled(text, seed))?,
        );
        if out.is_empty() {
            return Err(PipelineError::EmptyCompletion);
        }
        Ok(out)
    }

    fn score_in_mode(
        &self,
        ctx: &ConversationContext,
        candidate_reply: &str,
        mode: PipelineMode,
    ) -> Result<ResolutionScore> {
        let mut b = self.context_bindings(ctx, mode.annotations(), true);
        if !mode.plans() {
            b.insert("definitions".into(), String::new());
        } else {
            let defs = format!(
                "Conflict resolution strategies:\n{}\n",
                prompt::definitions_block()
            );
            b.insert("definitions".into(), defs);
        }
        b.insert("sender".into(), Sender::Simulation.label().into());
        b.insert("message".into(), prompt::one_line(candidate_reply));
        let text = self.gateway.render(TemplateKind::Score, &b)?;
        let first = self
            .gateway
            .complete(&CompletionRequest::deterministic(text.clone()))?;
        let value = match parse_score_value(&first) {
            Some(v) => v,
            None => {
                warn!(completion = %first, "unparsable score, asking again");
                let second = self
                    .gateway
                    .complete(&CompletionRequest::deterministic(text + SCORE_REASK))?;
                parse_score_value(&second)
                    .ok_or(PipelineError::UnparsableScore { completion: second })?
            }
        };
        if !(1..=5).contains(&value) {
            warn!(value, "score outside 1..=5, clamping");
        }
        Ok(ResolutionScore::clamped(value))
    }

    /// Resolution score of the conversation once `candidate_reply` is sent.
    pub fn score(
        &self,
        ctx: &ConversationContext,
        candidate_reply: &str,
    ) -> Result<ResolutionScore> {
        self.score_in_mode(ctx, candidate_reply, PipelineMode::Full)
    }

    /// The simulated party's next message under `mode`.
    pub fn respond(&self, ctx: &ConversationContext, mode: PipelineMode) -> Result<Message> {
        self.respond_with_variation(ctx, mode, 0)
    }

    pub fn respond_with_variation(
        &self,
        ctx: &ConversationContext,
        mode: PipelineMode,
        variation: u64,
    ) -> Result<Message> {
        if ctx.history.last().is_some_and(|m| m.sender != Sender::User) {
            return Err(PipelineError::InvalidInput(
                "the simulated party can only respond to a user message".into(),
            ));
        }
        let turn = ctx.next_turn();
        let (text, strategy) = if mode.plans() {
            let strategy = self.plan(ctx, Sender::Simulation, mode, variation)?;
            (
                self.generate(ctx, Sender::Simulation, strategy, mode, variation)?,
                Some(strategy),
            )
        } else {
            (self.generate_direct(ctx, mode, variation)?, None)
        };
        let score = if mode.scores() {
            Some(self.score_in_mode(ctx, &text, mode)?)
        } else {
            None
        };
        Ok(Message {
            turn_index: turn,
            sender: Sender::Simulation,
            text,
            strategy,
            score,
        })
    }

    /// Classifies the user's message and builds three scored alternatives.
    /// Branches run concurrently; output order is catalog order.
    pub fn counterfactuals(
        &self,
        ctx: &ConversationContext,
        user_message: &Message,
    ) -> Result<CounterfactualBundle> {
        if user_message.sender != Sender::User {
            return Err(PipelineError::InvalidInput(
                "counterfactuals need a user message".into(),
            ));
        }
        let strategy = self.classify(ctx, user_message)?;
        let mut user_message = user_message.clone().with_strategy(strategy);
        user_message.turn_index = ctx.next_turn();
        let turn = user_message.turn_index;

        let (user_reply, alternatives) = thread::scope(|scope| {
            let actual = {
                let ctx = ctx.with_message(user_message.clone());
                scope.spawn(move || self.respond(&ctx, PipelineMode::Full))
            };
            let branches: Vec<_> = select_alternatives(strategy)
                .into_iter()
                .map(|alt| {
                    scope.spawn(move || -> Result<Counterfactual> {
                        let text = self.generate(ctx, Sender::User, alt, PipelineMode::Full, 0)?;
                        let candidate = Message::user(turn, text.clone()).with_strategy(alt);
                        let reply =
                            self.respond(&ctx.with_message(candidate), PipelineMode::Full)?;
                        let score = reply.score.expect("full mode scores every reply");
                        Ok(Counterfactual {
                            strategy: alt,
                            message_text: text,
                            predicted_reply: reply,
                            score,
                        })
                    })
                })
                .collect();
            let user_reply = actual.join().expect("reply branch panicked");
            let alternatives: Vec<Result<Counterfactual>> = branches
                .into_iter()
                .map(|h| h.join().expect("alternative branch panicked"))
                .collect();
            (user_reply, alternatives)
        });
        let user_reply = user_reply?;
        let alternatives = alternatives.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(CounterfactualBundle {
            user_message,
            user_reply,
            alternatives,
        })
    }

    /// A predicted reply to `candidate` that is not committed anywhere.
    /// Different `variation_index` values request different samples.
    pub fn fast_forward(
        &self,
        ctx: &ConversationContext,
        candidate: &Message,
        variation_index: u64,
    ) -> Result<Message> {
        if candidate.sender != Sender::User {
            return Err(PipelineError::InvalidInput(
                "fast-forward projects a reply to a user message".into(),
            ));
        }
        let mut candidate = candidate.clone();
        candidate.turn_index = ctx.next_turn();
        self.respond_with_variation(
            &ctx.with_message(candidate),
            PipelineMode::Full,
            variation_index,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{CompletionProvider, GatewayError};
    use crate::scenario::{builtin_premises, REFUND_PREMISE_ID};
    use std::sync::{Arc, Mutex};

    fn refund() -> ConversationContext {
        let premise = builtin_premises()
            .into_iter()
            .find(|p| p.premise_id == REFUND_PREMISE_ID)
            .unwrap();
        ConversationContext::new(premise)
    }

    /// Replays canned completions in order.
    struct Scripted(Mutex<Vec<&'static str>>);

    impl CompletionProvider for Scripted {
        fn complete(&self, _: &CompletionRequest) -> Result<String, GatewayError> {
            let mut q = self.0.lock().unwrap();
            Ok(if q.is_empty() {
                "".into()
            } else {
                q.remove(0).into()
            })
        }
        fn name(&self) -> &str {
            "scripted"
        }
    }

    fn scripted(answers: Vec<&'static str>) -> Pipeline {
        Pipeline::new(Gateway::new(Arc::new(Scripted(Mutex::new(answers)))))
    }

    #[test]
    fn alternative_selection() {
        assert_eq!(
            select_alternatives(Strategy::Rights),
            [
                Strategy::Interests,
                Strategy::PositiveExpectations,
                Strategy::Proposal
            ]
        );
        assert_eq!(
            select_alternatives(Strategy::Interests),
            [
                Strategy::PositiveExpectations,
                Strategy::Proposal,
                Strategy::Concession
            ]
        );
        for s in Strategy::ALL {
            let alts = select_alternatives(s);
            assert!(!alts.contains(&s));
            assert!(alts[0] < alts[1] && alts[1] < alts[2]);
        }
    }

    #[test]
    fn classify_examples_on_mock() {
        let p = Pipeline::mock();
        let ctx = refund();
        let cases = [
            ("You're being ridiculous.", Strategy::Power),
            (
                "How about we spend more time working on the scheduling process instead?",
                Strategy::Proposal,
            ),
            ("I put in 60 hours for the last 4 weeks.", Strategy::Facts),
        ];
        for (text, want) in cases {
            assert_eq!(p.classify(&ctx, &Message::user(0, text)).unwrap(), want);
        }
    }

    #[test]
    fn classification_reasks_once() {
        let p = scripted(vec!["I think it's threatening", "Power"]);
        assert_eq!(
            p.classify(&refund(), &Message::user(0, "x")).unwrap(),
            Strategy::Power
        );
        let p = scripted(vec!["hmm", "still no idea"]);
        assert!(matches!(
            p.classify(&refund(), &Message::user(0, "x")),
            Err(PipelineError::UnparsableStrategy { .. })
        ));
        let p = scripted(vec!["Strategy: Positive Expectations."]);
        assert_eq!(
            p.classify(&refund(), &Message::user(0, "x")).unwrap(),
            Strategy::PositiveExpectations
        );
    }

    #[test]
    fn score_parsing_and_clamping() {
        assert_eq!(
            scripted(vec!["7"]).score(&refund(), "x").unwrap().value(),
            5
        );
        assert_eq!(
            scripted(vec!["0"]).score(&refund(), "x").unwrap().value(),
            1
        );
        assert_eq!(
            scripted(vec!["Score: 4\nbecause"])
                .score(&refund(), "x")
                .unwrap()
                .value(),
            4
        );
        assert_eq!(
            scripted(vec!["n/a", "3"])
                .score(&refund(), "x")
                .unwrap()
                .value(),
            3
        );
        assert!(matches!(
            scripted(vec!["n/a", "none"]).score(&refund(), "x"),
            Err(PipelineError::UnparsableScore { .. })
        ));
    }

    #[test]
    fn score_starts_at_one_and_climbs_on_mock() {
        let p = Pipeline::mock();
        let mut ctx = refund();
        assert_eq!(p.score(&ctx, "anything").unwrap().value(), 1);
        for i in 0..4 {
            ctx.history
                .push(Message::user(i, "I understand how frustrating this is."));
        }
        assert_eq!(p.score(&ctx, "anything").unwrap().value(), 5);
    }

    #[test]
    fn generated_messages_classify_back_on_mock() {
        let p = Pipeline::mock();
        let ctx = refund();
        for s in Strategy::ALL {
            let text = p.generate_with_strategy(&ctx, Sender::User, s).unwrap();
            assert_eq!(p.classify(&ctx, &Message::user(0, text)).unwrap(), s);
        }
        let proposal = p
            .generate_with_strategy(&ctx, Sender::User, Strategy::Proposal)
            .unwrap();
        assert!(["how about", "why don't we", "i suggest"]
            .iter()
            .any(|k| proposal.to_lowercase().contains(k)));
    }

    #[test]
    fn opening_turn_is_competitive_at_score_one() {
        let m = Pipeline::mock()
            .respond(&refund(), PipelineMode::Full)
            .unwrap();
        assert_eq!(m.sender, Sender::Simulation);
        assert!(matches!(
            m.strategy,
            Some(Strategy::Power | Strategy::Rights)
        ));
        assert_eq!(m.score.map(|s| s.value()), Some(1));
        assert_eq!(m.turn_index, 0);
    }

    #[test]
    fn mode_annotations() {
        let p = Pipeline::mock();
        let ctx = refund();
        let standard = p.respond(&ctx, PipelineMode::Standard).unwrap();
        assert_eq!((standard.strategy, standard.score), (None, None));
        let planning = p.respond(&ctx, PipelineMode::PlanningOnly).unwrap();
        assert!(planning.strategy.is_some() && planning.score.is_none());
        let scoring = p.respond(&ctx, PipelineMode::ScoringOnly).unwrap();
        assert!(scoring.strategy.is_none() && scoring.score.is_some());
    }

    #[test]
    fn full_mode_after_two_cooperative_turns_plans_facts() {
        let p = Pipeline::mock();
        let mut ctx = refund();
        ctx.history
            .push(p.respond(&ctx, PipelineMode::Full).unwrap());
        ctx.history.push(
            Message::user(1, "I understand why you're upset.").with_strategy(Strategy::Interests),
        );
        ctx.history
            .push(p.respond(&ctx, PipelineMode::Full).unwrap());
        ctx.history.push(
            Message::user(3, "If we work together, we can fix it.")
                .with_strategy(Strategy::PositiveExpectations),
        );
        let reply = p.respond(&ctx, PipelineMode::Full).unwrap();
        assert_eq!(reply.strategy, Some(Strategy::Facts));
        assert_eq!(reply.score.unwrap().value(), 3);
    }

    #[test]
    fn respond_requires_users_turn() {
        let p = Pipeline::mock();
        let mut ctx = refund();
        ctx.history
            .push(p.respond(&ctx, PipelineMode::Full).unwrap());
        assert!(matches!(
            p.respond(&ctx, PipelineMode::Full),
            Err(PipelineError::InvalidInput(_))
        ));
    }

    #[test]
    fn bundle_for_rights_message() {
        let p = Pipeline::mock();
        let mut ctx = refund();
        ctx.history
            .push(p.respond(&ctx, PipelineMode::Full).unwrap());
        let bundle = p
            .counterfactuals(&ctx, &Message::user(0, "That's not fair!"))
            .unwrap();
        assert_eq!(bundle.user_message.strategy, Some(Strategy::Rights));
        assert_eq!(bundle.user_message.turn_index, 1);
        let strategies: Vec<Strategy> = bundle.alternatives.iter().map(|a| a.strategy).collect();
        assert_eq!(
            strategies,
            vec![
                Strategy::Interests,
                Strategy::PositiveExpectations,
                Strategy::Proposal
            ]
        );
        for alt in &bundle.alternatives {
            assert_eq!(alt.predicted_reply.turn_index, 2);
            assert_eq!(Some(alt.score), alt.predicted_reply.score);
            // one cooperative user turn from score 1
            assert_eq!(alt.score.value(), 2);
        }
        assert_eq!(bundle.user_reply.score.unwrap().value(), 1);
        let json = serde_json::to_string(&bundle).unwrap();
        let back: CounterfactualBundle = serde_json::from_str(&json).unwrap();
        assert_eq!(back, bundle);
    }

    #[test]
    fn counterfactuals_reject_simulated_messages() {
        let p = Pipeline::mock();
        let m = Message::new(0, Sender::Simulation, "hello");
        assert!(p.counterfactuals(&refund(), &m).is_err());
    }

    #[test]
    fn fast_forward_is_non_committing_and_varies() {
        let p = Pipeline::mock();
        let mut ctx = refund();
        ctx.history
            .push(p.respond(&ctx, PipelineMode::Full).unwrap());
        let before = ctx.clone();
        let candidate = Message::user(0, "I understand, that sounds frustrating.");
        let a = p.fast_forward(&ctx, &candidate, 0).unwrap();
        let b = p.fast_forward(&ctx, &candidate, 0).unwrap();
        let c = p.fast_forward(&ctx, &candidate, 1).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.text, c.text);
        assert_eq!(ctx, before);
    }

    #[test]
    fn long_histories_are_summarized() {
        let (gateway, _) = Gateway::mock().instrumented();
        let p = Pipeline::new(gateway).with_history_cap(4);
        let mut ctx = refund();
        let mut score = 1;
        for i in 0..10 {
            if i % 2 == 0 {
                ctx.history.push(
                    Message::new(i, Sender::Simulation, "Rules are rules.")
                        .with_strategy(Strategy::Rights)
                        .with_score(ResolutionScore::new(score).unwrap()),
                );
            } else {
                ctx.history
                    .push(Message::user(i, "I understand your concern."));
                score = (score + 1).min(5);
            }
        }
        // the excerpt begins right after a simulated reply so its score is current
        let b = p.context_bindings(&ctx, Annotations::ALL, true);
        assert!(b["premise"].contains("7 messages were exchanged"));
        assert!(b["premise"].contains(&format!("{}4", prompt::EXCERPT_SCORE_PREFIX)));
        assert_eq!(b["history"].lines().count(), 3);
        // mock reads the excerpt score, so the full-history score is preserved
        assert_eq!(p.score(&ctx, "ok").unwrap().value(), 5);
    }

    #[test]
    fn mode_names_parse() {
        for m in PipelineMode::ALL {
            assert_eq!(m.name().parse::<PipelineMode>().unwrap(), m);
        }
        assert_eq!(
            "planning-only".parse::<PipelineMode>().unwrap(),
            PipelineMode::PlanningOnly
        );
    }
}
