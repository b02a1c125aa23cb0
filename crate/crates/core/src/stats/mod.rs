//! Evaluation statistics: classification accuracy, rank agreement,
//! nonparametric tests, multiple-comparison control and TrueSkill.

mod accuracy;
mod nonparam;
mod rank;
mod trueskill;

use thiserror::Error;

pub use accuracy::{accuracy, AccuracyReport, LabeledUtterance};
pub use nonparam::{
    cohen_kappa, dunn_posthoc, holm_bonferroni, kolmogorov_sf, kruskal_wallis,
    kruskal_wallis_exact_p, ks_exact_p, ks_two_sample, mrr, spearman, spearman_per_set_mean,
    DunnPair, KruskalWallis, KsResult, EXACT_LIMIT,
};
pub use rank::{midranks, tie_term};
pub use trueskill::{
    draw_margin, rate_records, trueskill_update, v_draw, v_win, w_draw, w_win, RankRecord, Rating,
    TrueSkillParams,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("input is empty")]
    EmptyInput,
    #[error("inputs have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("need at least two non-empty groups")]
    TooFewGroups,
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("invalid p-value {0}")]
    InvalidP(f64),
    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    InvalidAlpha(f64),
    #[error("ranks must be positive integers")]
    InvalidRank,
    #[error("item {index} has no prediction")]
    MissingPredictions { index: usize },
    #[error("exact permutation test supports at most {limit} observations per sample")]
    TooLargeForExact { limit: usize },
    #[error("non-finite value in input")]
    NonFinite,
}

pub type Result<T, E = StatsError> = std::result::Result<T, E>;

fn check_finite(xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}
