//! The eight-strategy conflict resolution taxonomy and its three-way
//! cooperative / neutral / competitive partition.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown strategy: {0:?}")]
pub struct UnknownStrategy(pub String);

/// A conflict resolution strategy.
///
/// Serialized as a lower-snake-case name (`"positive_expectations"`) in
/// every file and wire format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Interests,
    PositiveExpectations,
    Proposal,
    Concession,
    Facts,
    Procedural,
    Power,
    Rights,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyCategory {
    Cooperative,
    Neutral,
    Competitive,
}

impl Strategy {
    /// All strategies in catalog order.
    pub const ALL: [Strategy; 8] = [
        Strategy::Interests,
        Strategy::PositiveExpectations,
        Strategy::Proposal,
        Strategy::Concession,
        Strategy::Facts,
        Strategy::Procedural,
        Strategy::Power,
        Strategy::Rights,
    ];

    pub fn category(self) -> StrategyCategory {
        categorize(self)
    }

    /// Human-readable name used in prompts and tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Strategy::Interests => "Interests",
            Strategy::PositiveExpectations => "Positive Expectations",
            Strategy::Proposal => "Proposal",
            Strategy::Concession => "Concession",
            Strategy::Facts => "Facts",
            Strategy::Procedural => "Procedural",
            Strategy::Power => "Power",
            Strategy::Rights => "Rights",
        }
    }

    /// Wire name, e.g. `positive_expectations`.
    pub fn canonical_name(self) -> &'static str {
        match self {
            Strategy::Interests => "interests",
            Strategy::PositiveExpectations => "positive_expectations",
            Strategy::Proposal => "proposal",
            Strategy::Concession => "concession",
            Strategy::Facts => "facts",
            Strategy::Procedural => "procedural",
            Strategy::Power => "power",
            Strategy::Rights => "rights",
        }
    }

    /// Position in catalog order.
    pub fn catalog_index(self) -> usize {
        Strategy::ALL.iter().position(|s| *s == self).unwrap()
    }

    pub fn is_cooperative(self) -> bool {
        self.category() == StrategyCategory::Cooperative
    }

    pub fn is_competitive(self) -> bool {
        self.category() == StrategyCategory::Competitive
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl FromStr for Strategy {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_strategy(s)
    }
}

impl StrategyCategory {
    pub const ALL: [StrategyCategory; 3] = [
        StrategyCategory::Cooperative,
        StrategyCategory::Neutral,
        StrategyCategory::Competitive,
    ];

    pub fn members(self) -> impl Iterator<Item = Strategy> {
        Strategy::ALL
            .into_iter()
            .filter(move |s| s.category() == self)
    }

    pub fn display_name(self) -> &'static str {
        match self {
            StrategyCategory::Cooperative => "Cooperative",
            StrategyCategory::Neutral => "Neutral",
            StrategyCategory::Competitive => "Competitive",
        }
    }
}

impl fmt::Display for StrategyCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

pub fn categorize(strategy: Strategy) -> StrategyCategory {
    use Strategy::*;
    match strategy {
        Interests | PositiveExpectations | Proposal | Concession => StrategyCategory::Cooperative,
        Facts | Procedural => StrategyCategory::Neutral,
        Power | Rights => StrategyCategory::Competitive,
    }
}

// Alias table, version 1. Keys are normalized (see `normalize`): lowercase,
// `-`/`_` folded to spaces, whitespace collapsed, trailing punctuation removed.
const ALIASES: &[(&str, Strategy)] = &[
    ("interests", Strategy::Interests),
    ("interest", Strategy::Interests),
    ("positive expectations", Strategy::PositiveExpectations),
    ("positive expectation", Strategy::PositiveExpectations),
    ("positiveexpectations", Strategy::PositiveExpectations),
    ("proposal", Strategy::Proposal),
    ("proposals", Strategy::Proposal),
    ("concession", Strategy::Concession),
    ("concessions", Strategy::Concession),
    ("facts", Strategy::Facts),
    ("fact", Strategy::Facts),
    ("procedural", Strategy::Procedural),
    ("procedural remarks", Strategy::Procedural),
    ("procedural remark", Strategy::Procedural),
    ("power", Strategy::Power),
    ("rights", Strategy::Rights),
    ("right", Strategy::Rights),
];

fn normalize(text: &str) -> String {
    let folded: String = text
        .trim()
        .trim_end_matches(['.', '!', '?', ',', ';', ':'])
        .chars()
        .map(|c| match c {
            '-' | '_' => ' ',
            c => c.to_ascii_lowercase(),
        })
        .collect();
    folded.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parses a strategy name, accepting canonical names and the registered
/// aliases regardless of case, surrounding whitespace and `-`/`_` separators.
pub fn parse_strategy(text: &str) -> Result<Strategy, UnknownStrategy> {
    let key = normalize(text);
    ALIASES
        .iter()
        .find(|(alias, _)| *alias == key)
        .map(|(_, s)| *s)
        .ok_or_else(|| UnknownStrategy(text.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StrategyDefinition {
    pub strategy: Strategy,
    pub definition: &'static str,
    pub example_utterance: &'static str,
}

static CATALOG: [StrategyDefinition; 8] = [
    StrategyDefinition {
        strategy: Strategy::Interests,
        definition: "Reference to the wants, needs, or concerns of one or both parties. This may include questions about why the negotiator wants or feels the way they do.",
        example_utterance: "We can figure this out---I understand that you've been really busy lately.",
    },
    StrategyDefinition {
        strategy: Strategy::PositiveExpectations,
        definition: "Communicating positive expectations through the recognition of similarities and common goals",
        example_utterance: "I know you're an excellent employee and I want to make sure you get a promotion.",
    },
    StrategyDefinition {
        strategy: Strategy::Proposal,
        definition: "Proposing concrete recommendations that may help resolve the conflict",
        example_utterance: "Why don't we record your progress weekly instead of monthly, so we can stay on track?",
    },
    StrategyDefinition {
        strategy: Strategy::Concession,
        definition: "Changing an initial view or position (in response to a proposal) to resolve a conflict",
        example_utterance: "That makes sense---I'll try recording my weekly progress instead of doing it monthly.",
    },
    StrategyDefinition {
        strategy: Strategy::Facts,
        definition: "Providing information on the situation or history of the dispute, including requests for information, clarification, or summaries.",
        example_utterance: "Unfortunately, I haven't been able to keep track of your progress over the last several weeks.",
    },
    StrategyDefinition {
        strategy: Strategy::Procedural,
        definition: "Introductory messages, including discussion about discussion topics, procedures, etc.",
        example_utterance: "Hi! How are you? Do you have time today to talk about a promotion?",
    },
    StrategyDefinition {
        strategy: Strategy::Power,
        definition: "Using threats and coercion to try to force the conversation into a resolution.",
        example_utterance: "I'm going to tell everyone you've been missing deadlines.",
    },
    StrategyDefinition {
        strategy: Strategy::Rights,
        definition: "Appealing to fixed norms and standards to guide a resolution.",
        example_utterance: "Sorry, I can't do anything---company policy doesn't allow that.",
    },
];

/// The built-in strategy catalog, one entry per strategy in catalog order.
pub fn strategy_catalog() -> &'static [StrategyDefinition] {
    &CATALOG
}

pub fn definition_of(strategy: Strategy) -> &'static StrategyDefinition {
    &CATALOG[strategy.catalog_index()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest};

    #[test]
    fn categories_follow_the_taxonomy() {
        assert_eq!(
            categorize(Strategy::Interests),
            StrategyCategory::Cooperative
        );
        assert_eq!(categorize(Strategy::Power), StrategyCategory::Competitive);
        assert_eq!(categorize(Strategy::Facts), StrategyCategory::Neutral);
    }

    #[test]
    fn partition_sizes() {
        let sizes: Vec<usize> = StrategyCategory::ALL
            .iter()
            .map(|c| c.members().count())
            .collect();
        assert_eq!(sizes, vec![4, 2, 2]);
    }

    #[test]
    fn parse_examples() {
        assert_eq!(parse_strategy("Power"), Ok(Strategy::Power));
        assert_eq!(
            parse_strategy("  positive expectations "),
            Ok(Strategy::PositiveExpectations)
        );
        assert_eq!(
            parse_strategy("positive-expectations"),
            Ok(Strategy::PositiveExpectations)
        );
        assert_eq!(
            parse_strategy("Procedural Remarks"),
            Ok(Strategy::Procedural)
        );
        assert_eq!(parse_strategy("Power."), Ok(Strategy::Power));
        assert_eq!(
            parse_strategy("Rites"),
            Err(UnknownStrategy("Rites".to_string()))
        );
        assert!(parse_strategy("").is_err());
    }

    #[test]
    fn round_trips_through_every_name_form() {
        for s in Strategy::ALL {
            assert_eq!(parse_strategy(s.canonical_name()), Ok(s));
            assert_eq!(parse_strategy(s.display_name()), Ok(s));
            let json = serde_json::to_string(&s).unwrap();
            assert_eq!(json, format!("\"{}\"", s.canonical_name()));
        }
    }

    #[test]
    fn catalog_matches_table_order() {
        let catalog = strategy_catalog();
        assert_eq!(catalog.len(), 8);
        assert_eq!(catalog[0].strategy, Strategy::Interests);
        for (entry, s) in catalog.iter().zip(Strategy::ALL) {
            assert_eq!(entry.strategy, s);
        }
        assert!(definition_of(Strategy::Rights)
            .definition
            .contains("Appealing to fixed norms"));
    }

    proptest! {
        #[test]
        fn parsing_is_case_and_space_insensitive(idx in 0usize..8, upper in any::<bool>(), pad in 0usize..4) {
            let s = Strategy::ALL[idx];
            let mut name = s.display_name().to_string();
            if upper { name = name.to_uppercase(); }
            let padded = format!("{}{}{}", " ".repeat(pad), name, "\t".repeat(pad));
            prop_assert_eq!(parse_strategy(&padded), Ok(s));
        }

        #[test]
        fn parse_never_escapes_the_taxonomy(text in "\\PC{0,20}") {
            if let Ok(s) = parse_strategy(&text) {
                prop_assert!(Strategy::ALL.contains(&s));
            }
        }
    }
}
