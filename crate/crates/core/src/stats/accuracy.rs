use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Result, StatsError};
use crate::strategy::{Strategy, StrategyCategory};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledUtterance {
    pub text: String,
    pub gold: Strategy,
    pub predicted: Option<Strategy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub per_strategy: BTreeMap<Strategy, f64>,
    pub per_category: BTreeMap<StrategyCategory, f64>,
    /// Mean per-strategy accuracy over the strategies present.
    pub overall: f64,
    /// Mean per-category accuracy over the categories present.
    pub category_overall: f64,
    pub n: usize,
}

fn proportions<K: Ord + Copy>(tallies: BTreeMap<K, (usize, usize)>) -> BTreeMap<K, f64> {
    tallies
        .into_iter()
        .map(|(k, (hit, total))| (k, hit as f64 / total as f64))
        .collect()
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len() as f64;
    values.sum::<f64>() / n
}

pub fn accuracy(data: &[LabeledUtterance]) -> Result<AccuracyReport> {
    if data.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut by_strategy: BTreeMap<Strategy, (usize, usize)> = BTreeMap::new();
    let mut by_category: BTreeMap<StrategyCategory, (usize, usize)> = BTreeMap::new();
    for (index, item) in data.iter().enumerate() {
        let predicted = item
            .predicted
            .ok_or(StatsError::MissingPredictions { index })?;
        let s = by_strategy.entry(item.gold).or_default();
        s.0 += usize::from(predicted == item.gold);
        s.1 += 1;
        let c = by_category.entry(item.gold.category()).or_default();
        c.0 += usize::from(predicted.category() == item.gold.category());
        c.1 += 1;
    }
    let per_strategy = proportions(by_strategy);
    let per_category = proportions(by_category);
    Ok(AccuracyReport {
        overall: mean(per_strategy.values().copied()),
        category_overall: mean(per_category.values().copied()),
        per_strategy,
        per_category,
        n: data.len(),
    })
}
