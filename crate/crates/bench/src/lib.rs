//! Deterministic inputs shared by the benchmarks.

use rehearsal_core::stats::RankRecord;

/// `n` pseudo-random values from a fixed linear congruential sequence.
pub fn values(n: usize, seed: u64) -> Vec<f64> {
    let mut state = seed.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1);
    (0..n)
        .map(|_| {
            state = state
                .wrapping_mul(6_364_136_223_846_793_005)
                .wrapping_add(1_442_695_040_888_963_407);
            (state >> 40) as f64 / (1u64 << 24) as f64
        })
        .collect()
}

/// `n` four-way rankings over the ablation conditions.
pub fn rank_records(n: usize) -> Vec<RankRecord> {
    const ORDERS: [[u32; 4]; 4] = [[1, 2, 3, 4], [2, 1, 4, 3], [4, 3, 1, 2], [3, 4, 2, 1]];
    (0..n)
        .map(|i| RankRecord {
            item_ids: ["standard", "planning_only", "scoring_only", "full"]
                .map(String::from)
                .to_vec(),
            ranks: ORDERS[i % 4].to_vec(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inputs_are_deterministic_and_bounded() {
        let v = values(100, 3);
        assert_eq!(v, values(100, 3));
        assert!(v.iter().all(|x| (0.0..1.0).contains(x)));
        assert_eq!(rank_records(5).len(), 5);
    }
}
