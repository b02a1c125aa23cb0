//! Labeled knowledge-quiz utterances, held out from the prompt few-shot
//! examples and used as classification fixtures.

use crate::strategy::Strategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuizSection {
    Recall,
    Recognition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuizItem {
    pub section: QuizSection,
    pub text: &'static str,
    pub gold: Strategy,
}

const fn item(section: QuizSection, text: &'static str, gold: Strategy) -> QuizItem {
    QuizItem {
        section,
        text,
        gold,
    }
}

static QUIZ: [QuizItem; 10] = [
    item(
        QuizSection::Recall,
        "I'm going to have to report you to your manager.",
        Strategy::Power,
    ),
    item(
        QuizSection::Recall,
        "How about we spend more time working on the scheduling process instead?",
        Strategy::Proposal,
    ),
    item(
        QuizSection::Recall,
        "I totally understand where you're coming from.",
        Strategy::Interests,
    ),
    item(
        QuizSection::Recall,
        "If we work together, I'm sure we can figure out what's wrong.",
        Strategy::PositiveExpectations,
    ),
    item(
        QuizSection::Recall,
        "I think you're breaking company policy here...",
        Strategy::Rights,
    ),
    item(
        QuizSection::Recognition,
        "I'll destroy your career if you come in here complaining again.",
        Strategy::Power,
    ),
    item(
        QuizSection::Recognition,
        "I put in 60 hours for the last 4 weeks.",
        Strategy::Facts,
    ),
    item(
        QuizSection::Recognition,
        "I really wanted a promotion this year.",
        Strategy::Interests,
    ),
    item(
        QuizSection::Recognition,
        "Didn't we agree to this? This is so unfair.",
        Strategy::Rights,
    ),
    item(
        QuizSection::Recognition,
        "I can get that to you tommorow. How does that sound?",
        Strategy::Proposal,
    ),
];

pub fn quiz_items() -> &'static [QuizItem] {
    &QUIZ
}
