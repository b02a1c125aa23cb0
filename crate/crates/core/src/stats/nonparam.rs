use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use super::rank::{midranks, tie_term};
use super::{check_finite, Result, StatsError};

/// Largest per-sample size accepted by the exact permutation tests.
pub const EXACT_LIMIT: usize = 10;

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal parameters are valid")
}

/// Mean reciprocal rank, optionally over the last `window` entries only.
pub fn mrr(ranks: &[u32], window: Option<usize>) -> Result<f64> {
    let tail = match window {
        Some(w) => &ranks[ranks.len().saturating_sub(w)..],
        None => ranks,
    };
    if tail.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if tail.contains(&0) {
        return Err(StatsError::InvalidRank);
    }
    Ok(tail.iter().map(|&r| 1.0 / f64::from(r)).sum::<f64>() / tail.len() as f64)
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::DegenerateInput("zero rank variance"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho: Pearson correlation of midranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(StatsError::TooFewObservations {
            needed: 2,
            got: x.len(),
        });
    }
    check_finite(x)?;
    check_finite(y)?;
    pearson(&midranks(x), &midranks(y))
}

/// Mean of per-set rho over the sets where rho is defined, with the
/// number of sets used.
pub fn spearman_per_set_mean(sets: &[(Vec<f64>, Vec<f64>)]) -> Result<(f64, usize)> {
    let mut values = Vec::new();
    for (x, y) in sets {
        match spearman(x, y) {
            Ok(rho) => values.push(rho),
            Err(StatsError::DegenerateInput(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if values.is_empty() {
        return Err(StatsError::DegenerateInput(
            "no set has rank variance in both raters",
        ));
    }
    Ok((
        values.iter().sum::<f64>() / values.len() as f64,
        values.len(),
    ))
}

/// Cohen's kappa for two raters over the same items.
pub fn cohen_kappa<T: Ord>(a: &[T], b: &[T]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let n = a.len() as f64;
    let mut marginals: BTreeMap<&T, (f64, f64)> = BTreeMap::new();
    let mut agree = 0.0;
    for (x, y) in a.iter().zip(b) {
        marginals.entry(x).or_default().0 += 1.0;
        marginals.entry(y).or_default().1 += 1.0;
        if x == y {
            agree += 1.0;
        }
    }
    let p_o = agree / n;
    let p_e: f64 = marginals.values().map(|(ca, cb)| (ca / n) * (cb / n)).sum();
    if (1.0 - p_e).abs() < 1e-12 {
        return Err(StatsError::DegenerateInput("chance agreement is 1"));
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub d: f64,
    pub p: f64,
}

/// Survival function of the Kolmogorov distribution, P(K > lambda).
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let p = if lambda < 1.18 {
        let pi = std::f64::consts::PI;
        let base = -pi * pi / (8.0 * lambda * lambda);
        let cdf: f64 = (1..=20)
            .map(|k| {
                let odd = (2 * k - 1) as f64;
                (base * odd * odd).exp()
            })
            .sum::<f64>()
            * (2.0 * pi).sqrt()
            / lambda;
        1.0 - cdf
    } else {
        2.0 * (1..=100)
            .map(|k| {
                let k = k as f64;
                let sign = if k as u64 % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * k * k * lambda * lambda).exp()
            })
            .sum::<f64>()
    };
    p.clamp(0.0, 1.0)
}

/// Sup distance between empirical CDFs, given the pooled values sorted and
/// a membership flag per pooled value.
fn ks_distance(sorted: &[(f64, bool)], n: usize, m: usize) -> f64 {
    let (mut cx, mut cy, mut d) = (0usize, 0usize, 0.0f64);
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == v {
            if sorted[i].1 {
                cx += 1;
            } else {
                cy += 1;
            }
            i += 1;
        }
        d = d.max((cx as f64 / n as f64 - cy as f64 / m as f64).abs());
    }
    d
}

fn pooled_sorted(x: &[f64], y: &[f64]) -> Vec<(f64, bool)> {
    let mut pooled: Vec<(f64, bool)> = x
        .iter()
        .map(|&v| (v, true))
        .chain(y.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    pooled
}

/// Two-sample Kolmogorov-Smirnov statistic with the asymptotic p-value.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<KsResult> {
    if x.is_empty() || y.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    check_finite(x)?;
    check_finite(y)?;
    let (n, m) = (x.len(), y.len());
    let d = ks_distance(&pooled_sorted(x, y), n, m);
    let effective = (n * m) as f64 / (n + m) as f64;
    Ok(KsResult {
        d,
        p: kolmogorov_sf(effective.sqrt() * d),
    })
}

/// Calls `visit` with every way of choosing `k` of `0..n`, as a membership mask.
fn for_each_subset(n: usize, k: usize, visit: &mut impl FnMut(&[bool])) {
    fn go(pos: usize, left: usize, mask: &mut Vec<bool>, visit: &mut impl FnMut(&[bool])) {
        let n = mask.len();
        if left == 0 {
            visit(mask);
            return;
        }
        if n - pos < left {
            return;
        }
        mask[pos] = true;
        go(pos + 1, left - 1, mask, visit);
        mask[pos] = false;
        go(pos + 1, left, mask, visit);
    }
    let mut mask = vec![false; n];
    go(0, k, &mut mask, visit);
}

/// Exact permutation p-value for the KS statistic: the share of all
/// relabelings of the pooled sample with D at least the observed one.
pub fn ks_exact_p(x: &[f64], y: &[f64]) -> Result<f64> {
    let observed = ks_two_sample(x, y)?.d;
    if x.len() > EXACT_LIMIT || y.len() > EXACT_LIMIT {
        return Err(StatsError::TooLargeForExact { limit: EXACT_LIMIT });
    }
    let (n, m) = (x.len(), y.len());
    let values: Vec<f64> = pooled_sorted(x, y).into_iter().map(|(v, _)| v).collect();
    let (mut hits, mut total) = (0u64, 0u64);
    let mut labeled: Vec<(f64, bool)> = values.iter().map(|&v| (v, false)).collect();
    for_each_subset(n + m, n, &mut |mask| {
        for (slot, &flag) in labeled.iter_mut().zip(mask) {
            slot.1 = flag;
        }
        total += 1;
        if ks_distance(&labeled, n, m) >= observed - 1e-12 {
            hits += 1;
        }
    });
    Ok(hits as f64 / total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KruskalWallis {
    pub h: f64,
    pub df: usize,
    pub p: f64,
}

struct Pooled {
    ranks: Vec<f64>,
    sizes: Vec<usize>,
    ties: f64,
}

fn pool(groups: &[Vec<f64>]) -> Result<Pooled> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups);
    }
    if groups.iter().any(Vec::is_empty) {
        return Err(StatsError::EmptyInput);
    }
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    check_finite(&all)?;
    let n = all.len() as f64;
    let ties = tie_term(&all);
    if n * n * n - n - ties <= 0.0 {
        return Err(StatsError::DegenerateInput("all values are tied"));
    }
    Ok(Pooled {
        ranks: midranks(&all),
        sizes: groups.iter().map(Vec::len).collect(),
        ties,
    })
}

fn h_statistic(rank_sums: &[f64], sizes: &[usize], ties: f64) -> f64 {
    let n: f64 = sizes.iter().sum::<usize>() as f64;
    let s: f64 = rank_sums
        .iter()
        .zip(sizes)
        .map(|(r, &k)| r * r / k as f64)
        .sum();
    let h = 12.0 / (n * (n + 1.0)) * s - 3.0 * (n + 1.0);
    (h / (1.0 - ties / (n * n * n - n))).max(0.0)
}

fn rank_sums(ranks: &[f64], sizes: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for &k in sizes {
        out.push(ranks[start..start + k].iter().sum());
        start += k;
    }
    out
}

/// Kruskal-Wallis H with tie correction and the chi-square p-value.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<KruskalWallis> {
    let pooled = pool(groups)?;
    let h = h_statistic(
        &rank_sums(&pooled.ranks, &pooled.sizes),
        &pooled.sizes,
        pooled.ties,
    );
    let df = groups.len() - 1;
    let chi = ChiSquared::new(df as f64).expect("df is positive");
    Ok(KruskalWallis {
        h,
        df,
        p: chi.sf(h),
    })
}

/// Exact permutation p-value for H over all assignments of the pooled
/// ranks to groups of the observed sizes.
pub fn kruskal_wallis_exact_p(groups: &[Vec<f64>]) -> Result<f64> {
    let observed = kruskal_wallis(groups)?.h;
    let pooled = pool(groups)?;
    if pooled.ranks.len() > EXACT_LIMIT + 2 {
        return Err(StatsError::TooLargeForExact {
            limit: EXACT_LIMIT + 2,
        });
    }

    fn assign(
        remaining: &[f64],
        sizes: &[usize],
        sums: &mut Vec<f64>,
        ties: f64,
        all_sizes: &[usize],
        observed: f64,
        tally: &mut (u64, u64),
    ) {
        let Some((&size, rest)) = sizes.split_first() else {
            tally.1 += 1;
            if h_statistic(sums, all_sizes, ties) >= observed - 1e-9 {
                tally.0 += 1;
            }
            return;
        };
        if rest.is_empty() {
            sums.push(remaining.iter().sum());
            assign(&[], rest, sums, ties, all_sizes, observed, tally);
            sums.pop();
            return;
        }
        for_each_subset(remaining.len(), size, &mut |mask| {
            let (mut chosen, mut left) = (0.0, Vec::with_capacity(remaining.len() - size));
            for (&r, &m) in remaining.iter().zip(mask) {
                if m {
                    chosen += r;
                } else {
                    left.push(r);
                }
            }
            sums.push(chosen);
            assign(&left, rest, sums, ties, all_sizes, observed, tally);
            sums.pop();
        });
    }

    let mut tally = (0u64, 0u64);
    assign(
        &pooled.ranks,
        &pooled.sizes,
        &mut Vec::new(),
        pooled.ties,
        &pooled.sizes,
        observed,
        &mut tally,
    );
    Ok(tally.0 as f64 / tally.1 as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DunnPair {
    pub a: usize,
    pub b: usize,
    pub z: f64,
    pub p: f64,
}

/// Dunn's pairwise comparisons of mean pooled ranks, two-sided, unadjusted.
pub fn dunn_posthoc(groups: &[Vec<f64>]) -> Result<Vec<DunnPair>> {
    let pooled = pool(groups)?;
    let n = pooled.ranks.len() as f64;
    let variance = n * (n + 1.0) / 12.0 - pooled.ties / (12.0 * (n - 1.0));
    let means: Vec<f64> = rank_sums(&pooled.ranks, &pooled.sizes)
        .iter()
        .zip(&pooled.sizes)
        .map(|(s, &k)| s / k as f64)
        .collect();
    let normal = std_normal();
    let mut out = Vec::new();
    for a in 0..groups.len() {
        for b in a + 1..groups.len() {
            let se =
                (variance * (1.0 / pooled.sizes[a] as f64 + 1.0 / pooled.sizes[b] as f64)).sqrt();
            let z = (means[a] - means[b]) / se;
            out.push(DunnPair {
                a,
                b,
                z,
                p: (2.0 * normal.sf(z.abs())).min(1.0),
            });
        }
    }
    Ok(out)
}

/// Holm's step-down procedure; returns rejections in input order.
pub fn holm_bonferroni(pvals: &[f64], alpha: f64) -> Result<Vec<bool>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::InvalidAlpha(alpha));
    }
    if let Some(&p) = pvals.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(StatsError::InvalidP(p));
    }
    let m = pvals.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]));
    let mut reject = vec![false; m];
    for (i, &idx) in order.iter().enumerate() {
        if pvals[idx] <= alpha / (m - i) as f64 {
            reject[idx] = true;
        } else {
            break;
        }
    }
    Ok(reject)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn mrr_examples() {
        assert_eq!(mrr(&[1, 1, 1], None).unwrap(), 1.0);
        assert_eq!(mrr(&[1, 2], None).unwrap(), 0.75);
        assert!(close(mrr(&[2, 4, 1], None).unwrap(), 0.5833333333333334));
        assert_eq!(mrr(&[4, 4, 1, 1, 1], Some(3)).unwrap(), 1.0);
        assert_eq!(mrr(&[], None), Err(StatsError::EmptyInput));
        assert_eq!(mrr(&[0], None), Err(StatsError::InvalidRank));
    }

    #[test]
    fn spearman_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!(close(spearman(&x, &x).unwrap(), 1.0));
        assert!(close(spearman(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0));
        assert!(close(
            spearman(&[1.0, 2.0, 2.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap(),
            0.9f64.sqrt()
        ));
        assert!(matches!(
            spearman(&x, &[1.0, 1.0, 1.0, 1.0]),
            Err(StatsError::DegenerateInput(_))
        ));
        assert!(matches!(
            spearman(&x, &[1.0]),
            Err(StatsError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn per_set_mean_skips_degenerate_sets() {
        let sets = vec![
            (vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]),
            (vec![1.0, 2.0, 3.0], vec![3.0, 2.0, 1.0]),
            (vec![1.0, 1.0, 1.0], vec![3.0, 2.0, 1.0]),
        ];
        assert_eq!(spearman_per_set_mean(&sets).unwrap(), (0.0, 2));
    }

    #[test]
    fn kappa_examples() {
        assert!(close(
            cohen_kappa(&["x", "x", "y", "y"], &["x", "y", "x", "y"]).unwrap(),
            0.0
        ));
        assert!(close(
            cohen_kappa(&["x", "x", "x", "y"], &["x", "x", "y", "y"]).unwrap(),
            0.5
        ));
        assert!(close(cohen_kappa(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0));
        assert!(matches!(
            cohen_kappa(&[1, 1], &[1, 1]),
            Err(StatsError::DegenerateInput(_))
        ));
    }

    #[test]
    fn ks_examples() {
        let r = ks_two_sample(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
        assert!(close(r.d, 1.0 / 3.0));
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]).unwrap().d, 0.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]).unwrap().d, 1.0);
        assert!(close(
            ks_exact_p(&[1.0, 2.0], &[3.0, 4.0]).unwrap(),
            2.0 / 6.0
        ));
        assert!(close(ks_exact_p(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 1.0));
        assert_eq!(kolmogorov_sf(0.0), 1.0);
        assert!(kolmogorov_sf(3.0) < 1e-6);
    }

    #[test]
    fn kolmogorov_branches_agree() {
        for lambda in [1.1, 1.15, 1.18, 1.2, 1.25] {
            let theta = {
                let pi = std::f64::consts::PI;
                1.0 - (2.0 * pi).sqrt() / lambda
                    * (1..=20)
                        .map(|k| {
                            let odd = (2 * k - 1) as f64;
                            (-(odd * pi).powi(2) / (8.0 * lambda * lambda)).exp()
                        })
                        .sum::<f64>()
            };
            assert!((kolmogorov_sf(lambda) - theta).abs() < 1e-12);
        }
    }

    #[test]
    fn kruskal_wallis_examples() {
        let r = kruskal_wallis(&[vec![1.0, 2.0, 3.0], vec![10.0, 11.0, 12.0]]).unwrap();
        assert!(close(r.h, 27.0 / 7.0));
        assert_eq!(r.df, 1);
        let same = kruskal_wallis(&[vec![1.0, 2.0, 3.0], vec![3.0, 2.0, 1.0]]).unwrap();
        assert!(close(same.h, 0.0));
        assert!(close(same.p, 1.0));
        assert_eq!(kruskal_wallis(&[vec![1.0]]), Err(StatsError::TooFewGroups));
        assert!(matches!(
            kruskal_wallis(&[vec![1.0], vec![1.0]]),
            Err(StatsError::DegenerateInput(_))
        ));
        let exact = kruskal_wallis_exact_p(&[vec![1.0, 2.0, 3.0], vec![10.0, 11.0, 12.0]]).unwrap();
        assert!(close(exact, 2.0 / 20.0));
    }

    #[test]
    fn dunn_examples() {
        let g = vec![
            vec![1.0, 2.0, 3.0],
            vec![1.0, 2.0, 3.0],
            vec![7.0, 8.0, 9.0],
        ];
        let pairs = dunn_posthoc(&g).unwrap();
        assert_eq!(pairs.len(), 3);
        assert!(close(pairs[0].z, 0.0));
        assert!(close(pairs[0].p, 1.0));
        assert!(pairs[0].p > pairs[1].p && pairs[0].p > pairs[2].p);
        let four = vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]];
        assert_eq!(dunn_posthoc(&four).unwrap().len(), 6);
    }

    #[test]
    fn holm_examples() {
        assert_eq!(holm_bonferroni(&[0.001], 0.05).unwrap(), vec![true]);
        assert_eq!(
            holm_bonferroni(&[0.01, 0.03, 0.04], 0.05).unwrap(),
            vec![true, false, false]
        );
        assert_eq!(
            holm_bonferroni(&[0.04, 0.01, 0.03], 0.05).unwrap(),
            vec![false, true, false]
        );
        assert_eq!(
            holm_bonferroni(&[1.5], 0.05),
            Err(StatsError::InvalidP(1.5))
        );
        assert_eq!(
            holm_bonferroni(&[0.5], 1.0),
            Err(StatsError::InvalidAlpha(1.0))
        );
    }
}
