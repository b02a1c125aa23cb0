//! Brute-force reference implementations and exhaustive sweeps comparing
//! them with the library statistics.

#![allow(dead_code)]

use rehearsal_core::stats;

pub const TOLERANCE: f64 = 1e-9;
pub const ALPHABET: [f64; 4] = [1.0, 2.0, 3.0, 4.0];
pub const MAX_SIZE: usize = 6;

#[derive(Debug, Default, Clone, Copy)]
pub struct Sweep {
    pub checks: u64,
    pub violations: u64,
    pub worst: f64,
}

impl Sweep {
    fn compare(&mut self, got: f64, want: f64) {
        self.checks += 1;
        let err = (got - want).abs();
        if err.is_nan() || err > TOLERANCE {
            self.violations += 1;
        }
        if err > self.worst || err.is_nan() {
            self.worst = err;
        }
    }

    fn check(&mut self, ok: bool) {
        self.checks += 1;
        if !ok {
            self.violations += 1;
        }
    }

    pub fn clean(&self) -> bool {
        self.violations == 0 && self.checks > 0
    }
}

/// All sequences of length `n` over the alphabet.
pub fn sequences(n: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|s| {
                ALPHABET.iter().map(move |&a| {
                    let mut t = s.clone();
                    t.push(a);
                    t
                })
            })
            .collect();
    }
    out
}

/// All non-decreasing sequences (multisets) of length `n`.
pub fn multisets(n: usize) -> Vec<Vec<f64>> {
    sequences(n)
        .into_iter()
        .filter(|s| s.windows(2).all(|w| w[0] <= w[1]))
        .collect()
}

pub fn ranks(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let below = xs.iter().filter(|&&y| y < x).count() as f64;
            let equal = xs.iter().filter(|&&y| y == x).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let (mx, my) = (mean(x), mean(y));
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx.sqrt() * vy.sqrt()))
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&ranks(x), &ranks(y))
}

pub fn kappa(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let p_o = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let mut p_e = 0.0;
    for x in a {
        for y in b {
            if x == y {
                p_e += 1.0;
            }
        }
    }
    p_e /= n * n;
    (p_e < 1.0).then(|| (p_o - p_e) / (1.0 - p_e))
}

pub fn ks_d(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .chain(y)
        .map(|&t| {
            let fx = x.iter().filter(|&&v| v <= t).count() as f64 / x.len() as f64;
            let fy = y.iter().filter(|&&v| v <= t).count() as f64 / y.len() as f64;
            (fx - fy).abs()
        })
        .fold(0.0, f64::max)
}

/// Kolmogorov survival function by its alternating series.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let k = k as f64;
        let sign = if k as u64 % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * (-2.0 * k * k * lambda * lambda).exp();
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// erf by the series (2/√π) e^{−x²} Σ 2ⁿ x^{2n+1} / (2n+1)!!, all terms positive.
pub fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    while term > 1e-18 * sum {
        n += 1.0;
        term *= 2.0 * x * x / (2.0 * n + 1.0);
        sum += term;
    }
    2.0 / std::f64::consts::PI.sqrt() * (-x * x).exp() * sum
}

pub fn erfc(x: f64) -> f64 {
    1.0 - erf(x)
}

pub fn phi(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

pub fn pdf(x: f64) -> f64 {
    (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Φ⁻¹ by bisection on the series cdf.
pub fn phi_inv(p: f64) -> f64 {
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..200 {
        let mid = (lo + hi) / 2.0;
        if phi(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / 2.0
}

/// Chi-square upper tail for 1, 2 or 3 degrees of freedom.
pub fn chi2_sf(x: f64, df: usize) -> f64 {
    match df {
        1 => erfc((x / 2.0).sqrt()),
        2 => (-x / 2.0).exp(),
        3 => erfc((x / 2.0).sqrt()) + (2.0 * x / std::f64::consts::PI).sqrt() * (-x / 2.0).exp(),
        _ => panic!("closed form only for df 1..=3"),
    }
}

fn pooled_ranks(groups: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let r = ranks(&all);
    let mut out = Vec::new();
    let mut i = 0;
    for g in groups {
        out.push(r[i..i + g.len()].to_vec());
        i += g.len();
    }
    (out, r)
}

/// H = (N−1) Σ nᵢ(r̄ᵢ − r̄)² / Σ (r − r̄)², which carries the tie correction.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Option<(f64, f64)> {
    let (grouped, all) = pooled_ranks(groups);
    let n = all.len() as f64;
    let rbar = mean(&all);
    let denom: f64 = all.iter().map(|r| (r - rbar).powi(2)).sum();
    if denom == 0.0 {
        return None;
    }
    let numer: f64 = grouped
        .iter()
        .map(|g| g.len() as f64 * (mean(g) - rbar).powi(2))
        .sum();
    let h = (n - 1.0) * numer / denom;
    Some((h, chi2_sf(h, groups.len() - 1)))
}

/// Pairwise (z, p) with the pooled-rank sample variance.
pub fn dunn(groups: &[Vec<f64>]) -> Option<Vec<(f64, f64)>> {
    let (grouped, all) = pooled_ranks(groups);
    let n = all.len() as f64;
    let rbar = mean(&all);
    let s2 = all.iter().map(|r| (r - rbar).powi(2)).sum::<f64>() / (n - 1.0);
    if s2 == 0.0 {
        return None;
    }
    let mut out = Vec::new();
    for a in 0..groups.len() {
        for b in a + 1..groups.len() {
            let se = (s2 * (1.0 / grouped[a].len() as f64 + 1.0 / grouped[b].len() as f64)).sqrt();
            let z = (mean(&grouped[a]) - mean(&grouped[b])) / se;
            out.push((z, erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)));
        }
    }
    Some(out)
}

/// Holm by closed testing with Bonferroni local tests: Hᵢ is rejected iff
/// every intersection containing i is rejected.
pub fn holm(p: &[f64], alpha: f64) -> Vec<bool> {
    let m = p.len();
    (0..m)
        .map(|i| {
            (0u32..1 << m)
                .filter(|set| set & (1 << i) != 0)
                .all(|set| {
                    let size = set.count_ones() as f64;
                    (0..m)
                        .filter(|j| set & (1 << j) != 0)
                        .any(|j| p[j] <= alpha / size)
                })
        })
        .collect()
}

pub fn mrr(ranks: &[u32]) -> f64 {
    let mut total = 0.0;
    for &r in ranks {
        total += 1.0 / r as f64;
    }
    total / ranks.len() as f64
}

/// Ways to split `n` into `k` positive group sizes, in order.
fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 1 {
        return vec![vec![n]];
    }
    (1..n)
        .filter(|&first| n - first >= k - 1)
        .flat_map(|first| {
            compositions(n - first, k - 1).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

/// Every list of ≥ 2 groups with total size ≤ 6, each group a multiset.
pub fn group_lists() -> Vec<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for total in 2..=MAX_SIZE {
        for k in 2..=total.min(4) {
            for sizes in compositions(total, k) {
                let mut lists: Vec<Vec<Vec<f64>>> = vec![Vec::new()];
                for &s in &sizes {
                    let options = multisets(s);
                    lists = lists
                        .into_iter()
                        .flat_map(|l| {
                            options.iter().map(move |o| {
                                let mut l = l.clone();
                                l.push(o.clone());
                                l
                            })
                        })
                        .collect();
                }
                out.extend(lists);
            }
        }
    }
    out
}

pub fn sweep_spearman() -> Sweep {
    let mut s = Sweep::default();
    for n in 2..=MAX_SIZE {
        let ys = sequences(n);
        for x in multisets(n) {
            for y in &ys {
                match (stats::spearman(&x, y), spearman(&x, y)) {
                    (Ok(got), Some(want)) => s.compare(got, want),
                    (Err(stats::StatsError::DegenerateInput(_)), None) => s.check(true),
                    _ => s.check(false),
                }
            }
        }
    }
    s
}

pub fn sweep_kappa() -> Sweep {
    let mut s = Sweep::default();
    let key = |v: &[f64]| v.iter().map(|&x| x as u8).collect::<Vec<u8>>();
    for n in 1..=MAX_SIZE {
        let ys = sequences(n);
        for x in multisets(n) {
            for y in &ys {
                match (stats::cohen_kappa(&key(&x), &key(y)), kappa(&x, y)) {
                    (Ok(got), Some(want)) => s.compare(got, want),
                    (Err(stats::StatsError::DegenerateInput(_)), None) => s.check(true),
                    _ => s.check(false),
                }
            }
        }
    }
    s
}

pub fn sweep_mrr() -> Sweep {
    let mut s = Sweep::default();
    for n in 1..=MAX_SIZE {
        for seq in sequences(n) {
            let ranks: Vec<u32> = seq.iter().map(|&v| v as u32).collect();
            s.compare(stats::mrr(&ranks, None).unwrap(), mrr(&ranks));
            for w in 1..=n {
                s.compare(stats::mrr(&ranks, Some(w)).unwrap(), mrr(&ranks[n - w..]));
            }
        }
    }
    s
}

pub fn sweep_ks() -> Sweep {
    let mut s = Sweep::default();
    let samples: Vec<Vec<f64>> = (1..=MAX_SIZE).flat_map(multisets).collect();
    for x in &samples {
        for y in &samples {
            let got = stats::ks_two_sample(x, y).unwrap();
            let d = ks_d(x, y);
            s.compare(got.d, d);
            let ne = (x.len() * y.len()) as f64 / (x.len() + y.len()) as f64;
            s.compare(got.p, kolmogorov_sf(ne.sqrt() * d));
        }
    }
    s
}

pub fn sweep_kruskal_wallis() -> Sweep {
    let mut s = Sweep::default();
    for groups in group_lists() {
        match (stats::kruskal_wallis(&groups), kruskal_wallis(&groups)) {
            (Ok(got), Some((h, p))) => {
                s.compare(got.h, h);
                s.compare(got.p, p);
            }
            (Err(stats::StatsError::DegenerateInput(_)), None) => s.check(true),
            _ => s.check(false),
        }
    }
    s
}

pub fn sweep_dunn() -> Sweep {
    let mut s = Sweep::default();
    for groups in group_lists() {
        match (stats::dunn_posthoc(&groups), dunn(&groups)) {
            (Ok(got), Some(want)) => {
                s.check(got.len() == want.len());
                for (g, (z, p)) in got.iter().zip(want) {
                    s.compare(g.z, z);
                    s.compare(g.p, p);
                }
            }
            (Err(stats::StatsError::DegenerateInput(_)), None) => s.check(true),
            _ => s.check(false),
        }
    }
    s
}

pub fn sweep_holm() -> Sweep {
    let mut s = Sweep::default();
    let alpha = 1.0 / 16.0;
    for n in 1..=MAX_SIZE {
        for seq in sequences(n) {
            // dyadic p-values make every threshold comparison exact
            let p: Vec<f64> = seq.iter().map(|v| v / 64.0).collect();
            s.check(stats::holm_bonferroni(&p, alpha).unwrap() == holm(&p, alpha));
        }
    }
    s
}

/// Posterior (mu, sigma) for the winner and loser of a two-player game by
/// direct evaluation of the truncated-Gaussian corrections.
pub fn trueskill_two_player(
    winner: (f64, f64),
    loser: (f64, f64),
    beta: f64,
    tau: f64,
    draw_probability: f64,
) -> ((f64, f64), (f64, f64)) {
    let margin = phi_inv((draw_probability + 1.0) / 2.0) * 2f64.sqrt() * beta;
    let var_w = winner.1.powi(2) + tau * tau;
    let var_l = loser.1.powi(2) + tau * tau;
    let c = (2.0 * beta * beta + var_w + var_l).sqrt();
    let t = (winner.0 - loser.0) / c;
    let e = margin / c;
    let v = pdf(t - e) / phi(t - e);
    let w = v * (v + t - e);
    let mu_w = winner.0 + var_w / c * v;
    let mu_l = loser.0 - var_l / c * v;
    let sigma_w = (var_w * (1.0 - var_w / (c * c) * w)).sqrt();
    let sigma_l = (var_l * (1.0 - var_l / (c * c) * w)).sqrt();
    ((mu_w, sigma_w), (mu_l, sigma_l))
}
