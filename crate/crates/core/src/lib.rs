//! Conflict-resolution roleplay engine: strategy taxonomy, prompting
//! pipeline, session state machine, scenario store and evaluation statistics.

pub mod ablation;
pub mod fixtures;
pub mod gateway;
pub mod message;
pub mod pipeline;
pub mod prompt;
pub mod scenario;
pub mod session;
pub mod stats;
pub mod strategy;

pub use message::{Message, ResolutionScore, Sender};
pub use pipeline::{
    BundleOption, ConversationContext, Counterfactual, CounterfactualBundle, Pipeline,
    PipelineError, PipelineMode,
};
pub use scenario::{Premise, ScenarioStore, StoreError};
pub use session::{Phase, RecallMode, RecallOutcome, SessionError, SessionState};
pub use strategy::{Strategy, StrategyCategory};
pub use stats::{RankRecord, Rating, StatsError, TrueSkillParams};
