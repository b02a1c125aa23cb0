//! Conflict premises: the built-in case studies plus user-authored customs
//! persisted as one JSON file per premise.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("invalid premise: {0}")]
    ValidationFailure(String),
    #[error("premise not found: {0}")]
    NotFound(String),
    #[error("premise store io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed premise file {path}: {source}")]
    Malformed {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// A two-party conflict setting. File form:
/// `{id, title, body, party_user, party_sim, builtin, held_out}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Premise {
    #[serde(rename = "id")]
    pub premise_id: String,
    pub title: String,
    pub body: String,
    pub party_user: String,
    pub party_sim: String,
    pub builtin: bool,
    #[serde(default)]
    pub held_out: bool,
}

impl Premise {
    fn validate(&self) -> Result<(), StoreError> {
        if self.title.trim().is_empty() {
            return Err(StoreError::ValidationFailure("title is empty".into()));
        }
        if self.body.trim().is_empty() {
            return Err(StoreError::ValidationFailure("body is empty".into()));
        }
        if self.party_user.trim().is_empty() || self.party_sim.trim().is_empty() {
            return Err(StoreError::ValidationFailure(
                "both party labels are required".into(),
            ));
        }
        if self.party_user.trim() == self.party_sim.trim() {
            return Err(StoreError::ValidationFailure(
                "the two parties must be distinct".into(),
            ));
        }
        Ok(())
    }
}

fn builtin(id: &str, title: &str, body: &str, user: &str, sim: &str, held_out: bool) -> Premise {
    Premise {
        premise_id: id.to_string(),
        title: title.to_string(),
        body: body.to_string(),
        party_user: user.to_string(),
        party_sim: sim.to_string(),
        builtin: true,
        held_out,
    }
}

pub const REFUND_PREMISE_ID: &str = "wheres-my-refund";

/// The published case studies, verbatim. To add another built-in, append a
/// `builtin(id, title, body, party_user, party_sim, held_out)` entry here.
pub fn builtin_premises() -> Vec<Premise> {
    vec![
        builtin(
            "undercooked-meal",
            "Undercooked meal",
            "You just tried a meal your partner cooked for you, but it's slightly undercooked. You mention this to your partner, and they're visibly unhappy that you brought this up.",
            "You",
            "Your partner",
            false,
        ),
        builtin(
            REFUND_PREMISE_ID,
            "Where's my refund?",
            "The complaints clerk (you) in a department store sees a customer (Casey) coming with a blender. The store cannot return these items to the manufacturer. You have a small weekly budget to absorb the cost of such items, if returned, and the department head has instructed that it be used sparingly. The budget for this week is overspent. Casey, having used the blender for over a week, believes it is either defective or an inadequate appliance, and has therefore decided to return it, and is angrily demanding a refund.",
            "Complaints clerk",
            "Casey (customer)",
            false,
        ),
        builtin(
            "work-performance",
            "Work Performance",
            "Jerry has been a steady employee for four years. Recently, Jerry's work and attitude have taken a turn for the worse. Jerry's supervisor (Casey) does not know why, but the situation has come to the point where the supervisor is prepared to fire Jerry, and is under considerable pressure from management to do so. The two are about to meet to discuss this situation.",
            "Casey (supervisor)",
            "Jerry (employee)",
            false,
        ),
        builtin(
            "unwanted-promotion",
            "The Unwanted Promotion",
            "Your boss Chris keeps telling you that you'd make a great supervisor. You don't want the promotion. You like what you do. Chris said team players take promotions. You've heard that Chris is submitting the paperwork to have you promoted. Yesterday Chris said you'd soon be getting a big surprise. This morning he asked you to be sure to go to the afternoon team meeting. You don't want him to spring the announcement in the meeting and pressure you. You're now in a 1:1 meeting with him, and he's annoyed that you're planning on turning this down.",
            "You",
            "Chris (boss)",
            true,
        ),
    ]
}

/// Built-ins plus file-backed custom premises.
///
/// Custom ids are `custom-NNNNNN` with a monotonically increasing counter, so
/// lexical id order is creation order.
pub struct ScenarioStore {
    dir: Option<PathBuf>,
    builtins: Vec<Premise>,
    customs: RwLock<Vec<Premise>>,
}

impl ScenarioStore {
    /// Store with no persistence; customs live only as long as the value.
    pub fn in_memory() -> Self {
        ScenarioStore {
            dir: None,
            builtins: builtin_premises(),
            customs: RwLock::new(Vec::new()),
        }
    }

    /// Opens (creating if needed) a data directory and loads its customs.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| StoreError::Io {
            path: dir.clone(),
            source: e,
        })?;
        let mut customs = Vec::new();
        let entries = fs::read_dir(&dir).map_err(|e| StoreError::Io {
            path: dir.clone(),
            source: e,
        })?;
        for entry in entries {
            let path = entry
                .map_err(|e| StoreError::Io {
                    path: dir.clone(),
                    source: e,
                })?
                .path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let raw = fs::read_to_string(&path).map_err(|e| StoreError::Io {
                path: path.clone(),
                source: e,
            })?;
            let mut premise: Premise =
                serde_json::from_str(&raw).map_err(|e| StoreError::Malformed {
                    path: path.clone(),
                    source: e,
                })?;
            premise.builtin = false;
            customs.push(premise);
        }
        customs.sort_by(|a, b| a.premise_id.cmp(&b.premise_id));
        Ok(ScenarioStore {
            dir: Some(dir),
            builtins: builtin_premises(),
            customs: RwLock::new(customs),
        })
    }

    /// Built-ins in fixed order, then customs in creation order.
    pub fn list(&self) -> Vec<Premise> {
        let customs = self.customs.read().unwrap();
        self.builtins
            .iter()
            .chain(customs.iter())
            .cloned()
            .collect()
    }

    pub fn get(&self, premise_id: &str) -> Result<Premise, StoreError> {
        if let Some(p) = self.builtins.iter().find(|p| p.premise_id == premise_id) {
            return Ok(p.clone());
        }
        self.customs
            .read()
            .unwrap()
            .iter()
            .find(|p| p.premise_id == premise_id)
            .cloned()
            .ok_or_else(|| StoreError::NotFound(premise_id.to_string()))
    }

    pub fn create_custom(
        &self,
        title: &str,
        body: &str,
        party_user: &str,
        party_sim: &str,
    ) -> Result<Premise, StoreError> {
        let mut customs = self.customs.write().unwrap();
        let next = customs
            .iter()
            .filter_map(|p| p.premise_id.strip_prefix("custom-")?.parse::<u64>().ok())
            .max()
            .map_or(1, |n| n + 1);
        let premise = Premise {
            premise_id: format!("custom-{next:06}"),
            title: title.trim().to_string(),
            body: body.trim().to_string(),
            party_user: party_user.trim().to_string(),
            party_sim: party_sim.trim().to_string(),
            builtin: false,
            held_out: false,
        };
        premise.validate()?;
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("{}.json", premise.premise_id));
            let json = serde_json::to_string_pretty(&premise).expect("premise serializes");
            let tmp = path.with_extension("json.tmp");
            fs::write(&tmp, json).map_err(|e| StoreError::Io {
                path: tmp.clone(),
                source: e,
            })?;
            fs::rename(&tmp, &path).map_err(|e| StoreError::Io {
                path: path.clone(),
                source: e,
            })?;
        }
        customs.push(premise.clone());
        Ok(premise)
    }

    /// Removes a custom premise. Built-ins cannot be deleted.
    pub fn delete_custom(&self, premise_id: &str) -> Result<(), StoreError> {
        if self.builtins.iter().any(|p| p.premise_id == premise_id) {
            return Err(StoreError::ValidationFailure(format!(
                "{premise_id} is built in and cannot be deleted"
            )));
        }
        let mut customs = self.customs.write().unwrap();
        let idx = customs
            .iter()
            .position(|p| p.premise_id == premise_id)
            .ok_or_else(|| StoreError::NotFound(premise_id.to_string()))?;
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("{premise_id}.json"));
            fs::remove_file(&path).map_err(|e| StoreError::Io { path, source: e })?;
        }
        customs.remove(idx);
        Ok(())
    }
}
