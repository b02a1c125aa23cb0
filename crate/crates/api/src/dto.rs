//! Versioned request and response bodies.

use rehearsal_core::session::mask_bundle;
use rehearsal_core::strategy::strategy_catalog;
use rehearsal_core::{
    BundleOption, CounterfactualBundle, Message, Phase, Premise, RecallOutcome, ResolutionScore,
    SessionState, Strategy,
};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::error::ApiError;

pub const API_VERSION: u32 = 1;

/// Request bodies may omit `v`; any other version is rejected.
pub trait Versioned {
    fn version(&self) -> Option<u32>;

    fn check_version(&self) -> Result<(), ApiError> {
        match self.version() {
            None | Some(API_VERSION) => Ok(()),
            Some(v) => Err(ApiError::bad_request(format!(
                "unsupported body version {v}, expected {API_VERSION}"
            ))),
        }
    }
}

macro_rules! versioned {
    ($($t:ty),*) => {
        $(impl Versioned for $t {
            fn version(&self) -> Option<u32> {
                self.v
            }
        })*
    };
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateScenarioRequest {
    #[serde(default)]
    pub v: Option<u32>,
    pub title: String,
    pub body: String,
    pub party_user: String,
    pub party_sim: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateSessionRequest {
    #[serde(default)]
    pub v: Option<u32>,
    pub premise_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MessageRequest {
    #[serde(default)]
    pub v: Option<u32>,
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectRequest {
    #[serde(default)]
    pub v: Option<u32>,
    pub option: BundleOption,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecallRequest {
    #[serde(default)]
    pub v: Option<u32>,
    pub answer: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecognizeRequest {
    #[serde(default)]
    pub v: Option<u32>,
    /// Strategy name in any accepted spelling.
    pub strategy: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FastForwardRequest {
    #[serde(default)]
    pub v: Option<u32>,
    pub option: BundleOption,
    #[serde(default)]
    pub variation_index: u64,
}

versioned!(
    CreateScenarioRequest,
    CreateSessionRequest,
    MessageRequest,
    SelectRequest,
    RecallRequest,
    RecognizeRequest,
    FastForwardRequest
);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Health {
    pub v: u32,
    pub status: String,
    pub provider: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioList {
    pub v: u32,
    pub scenarios: Vec<Premise>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioResponse {
    pub v: u32,
    pub scenario: Premise,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecognitionChoice {
    pub strategy: Strategy,
    pub name: String,
    pub definition: String,
}

/// The learner-visible view of a session. The strategy of the latest
/// simulated message and of every predicted reply stays hidden until the
/// learner has identified it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub v: u32,
    pub session_id: Uuid,
    pub premise_id: String,
    pub premise_title: String,
    pub phase: Phase,
    pub current_score: ResolutionScore,
    pub recall_failures: u8,
    pub transcript: Vec<Message>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pending_bundle: Option<CounterfactualBundle>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub recognition_choices: Option<Vec<RecognitionChoice>>,
}

impl SessionSnapshot {
    pub fn of(state: &SessionState) -> Self {
        let recognition_choices = (state.phase == Phase::AwaitingRecognition).then(|| {
            strategy_catalog()
                .iter()
                .map(|d| RecognitionChoice {
                    strategy: d.strategy,
                    name: d.strategy.display_name().to_string(),
                    definition: d.definition.to_string(),
                })
                .collect()
        });
        SessionSnapshot {
            v: API_VERSION,
            session_id: state.session_id,
            premise_id: state.premise.premise_id.clone(),
            premise_title: state.premise.title.clone(),
            phase: state.phase,
            current_score: state.current_score,
            recall_failures: state.recall_failures,
            transcript: state.public_transcript(),
            pending_bundle: state.public_bundle(),
            recognition_choices,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleResponse {
    pub v: u32,
    #[serde(flatten)]
    pub bundle: CounterfactualBundle,
}

impl BundleResponse {
    pub fn masked(bundle: &CounterfactualBundle) -> Self {
        BundleResponse {
            v: API_VERSION,
            bundle: mask_bundle(bundle),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecallResponse {
    pub v: u32,
    #[serde(flatten)]
    pub outcome: RecallOutcome,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageResponse {
    pub v: u32,
    #[serde(flatten)]
    pub message: Message,
}
