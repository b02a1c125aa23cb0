//! TrueSkill for free-for-all games between single players, run as message
//! passing on the factor graph with ties treated as draws.

use std::collections::BTreeMap;
use std::ops::{Div, Mul};

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::{Result, StatsError};

pub const DEFAULT_MU: f64 = 25.0;
pub const DEFAULT_SIGMA: f64 = DEFAULT_MU / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub mu: f64,
    pub sigma: f64,
}

impl Default for Rating {
    fn default() -> Self {
        Rating {
            mu: DEFAULT_MU,
            sigma: DEFAULT_SIGMA,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueSkillParams {
    pub beta: f64,
    pub tau: f64,
    pub draw_probability: f64,
}

impl Default for TrueSkillParams {
    fn default() -> Self {
        TrueSkillParams {
            beta: DEFAULT_SIGMA / 2.0,
            tau: DEFAULT_SIGMA / 100.0,
            draw_probability: 0.1,
        }
    }
}

/// One ranked comparison: condition ids and their ranks, 1 = best.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankRecord {
    pub item_ids: Vec<String>,
    pub ranks: Vec<u32>,
}

fn normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal parameters are valid")
}

/// Performance-difference margin inside which a game counts as a draw.
pub fn draw_margin(draw_probability: f64, beta: f64, players: usize) -> f64 {
    normal().inverse_cdf((draw_probability + 1.0) / 2.0) * (players as f64).sqrt() * beta
}

pub fn v_win(diff: f64, margin: f64) -> f64 {
    let n = normal();
    let x = diff - margin;
    let denom = n.cdf(x);
    if denom > 2.222758749e-162 {
        n.pdf(x) / denom
    } else {
        -x
    }
}

pub fn w_win(diff: f64, margin: f64) -> f64 {
    let x = diff - margin;
    let v = v_win(diff, margin);
    let w = v * (v + x);
    if 0.0 < w && w < 1.0 {
        w
    } else if diff < 0.0 {
        1.0
    } else {
        0.0
    }
}

pub fn v_draw(diff: f64, margin: f64) -> f64 {
    let n = normal();
    let abs = diff.abs();
    let (a, b) = (margin - abs, -margin - abs);
    let denom = n.cdf(a) - n.cdf(b);
    let numer = n.pdf(b) - n.pdf(a);
    let v = if denom > 2.222758749e-162 {
        numer / denom
    } else {
        a
    };
    if diff < 0.0 {
        -v
    } else {
        v
    }
}

pub fn w_draw(diff: f64, margin: f64) -> f64 {
    let n = normal();
    let abs = diff.abs();
    let (a, b) = (margin - abs, -margin - abs);
    let denom = n.cdf(a) - n.cdf(b);
    if denom <= 2.222758749e-162 {
        return 1.0;
    }
    let v = v_draw(abs, margin);
    v * v + (a * n.pdf(a) - b * n.pdf(b)) / denom
}

/// A Gaussian in natural parameters: precision and precision-adjusted mean.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Gaussian {
    pi: f64,
    tau: f64,
}

impl Gaussian {
    fn from_moments(mu: f64, sigma: f64) -> Self {
        let pi = sigma.powi(-2);
        Gaussian { pi, tau: pi * mu }
    }

    fn mu(self) -> f64 {
        if self.pi == 0.0 {
            0.0
        } else {
            self.tau / self.pi
        }
    }

    fn sigma(self) -> f64 {
        if self.pi == 0.0 {
            f64::INFINITY
        } else {
            self.pi.powf(-0.5)
        }
    }

    fn delta(self, other: Gaussian) -> f64 {
        (self.tau - other.tau)
            .abs()
            .max((self.pi - other.pi).abs().sqrt())
    }
}

impl Mul for Gaussian {
    type Output = Gaussian;
    fn mul(self, o: Gaussian) -> Gaussian {
        Gaussian {
            pi: self.pi + o.pi,
            tau: self.tau + o.tau,
        }
    }
}

impl Div for Gaussian {
    type Output = Gaussian;
    fn div(self, o: Gaussian) -> Gaussian {
        Gaussian {
            pi: self.pi - o.pi,
            tau: self.tau - o.tau,
        }
    }
}

/// A variable's marginal plus the last message each adjacent factor sent.
#[derive(Debug, Default)]
struct Variable {
    value: Gaussian,
    messages: BTreeMap<usize, Gaussian>,
}

impl Variable {
    fn message(&self, factor: usize) -> Gaussian {
        self.messages.get(&factor).copied().unwrap_or_default()
    }

    fn set(&mut self, value: Gaussian) -> f64 {
        let delta = self.value.delta(value);
        self.value = value;
        delta
    }

    fn update_message(&mut self, factor: usize, message: Gaussian) -> f64 {
        let old = self.messages.insert(factor, message).unwrap_or_default();
        self.set(self.value / old * message)
    }

    fn update_value(&mut self, factor: usize, value: Gaussian) -> f64 {
        let old = self.message(factor);
        self.messages.insert(factor, value * old / self.value);
        self.set(value)
    }
}

struct Graph {
    vars: Vec<Variable>,
}

impl Graph {
    /// Message from `var` toward `factor`: marginal without the factor's own message.
    fn cavity(&self, var: usize, factor: usize) -> Gaussian {
        self.vars[var].value / self.vars[var].message(factor)
    }

    fn likelihood(&mut self, factor: usize, from: usize, to: usize, variance: f64) -> f64 {
        let msg = self.cavity(from, factor);
        let a = 1.0 / (1.0 + variance * msg.pi);
        self.vars[to].update_message(
            factor,
            Gaussian {
                pi: a * msg.pi,
                tau: a * msg.tau,
            },
        )
    }

    /// Sum factor `target = Σ coeff_i · term_i`, solved for `target`.
    fn sum(&mut self, factor: usize, target: usize, terms: &[(usize, f64)]) -> f64 {
        let (mut mu, mut pi_inv) = (0.0, 0.0);
        for &(var, coeff) in terms {
            let div = self.cavity(var, factor);
            mu += coeff * div.mu();
            pi_inv += if div.pi == 0.0 {
                f64::INFINITY
            } else {
                coeff * coeff / div.pi
            };
        }
        let pi = 1.0 / pi_inv;
        self.vars[target].update_message(factor, Gaussian { pi, tau: pi * mu })
    }

    fn truncate(&mut self, factor: usize, var: usize, margin: f64, draw: bool) -> f64 {
        let div = self.cavity(var, factor);
        let sqrt_pi = div.pi.sqrt();
        let (t, e) = (div.tau / sqrt_pi, margin * sqrt_pi);
        let (v, w) = if draw {
            (v_draw(t, e), w_draw(t, e))
        } else {
            (v_win(t, e), w_win(t, e))
        };
        let denom = 1.0 - w;
        let value = Gaussian {
            pi: div.pi / denom,
            tau: (div.tau + sqrt_pi * v) / denom,
        };
        self.vars[var].update_value(factor, value)
    }
}

const MIN_DELTA: f64 = 1e-4;
const MAX_ITERATIONS: usize = 10;

/// One full-game update; `ranks` are 1 = best and equal ranks are draws.
pub fn trueskill_update(
    ratings: &[Rating],
    ranks: &[u32],
    params: TrueSkillParams,
) -> Result<Vec<Rating>> {
    if ratings.len() != ranks.len() {
        return Err(StatsError::LengthMismatch {
            left: ratings.len(),
            right: ranks.len(),
        });
    }
    if ratings.len() < 2 {
        return Err(StatsError::TooFewObservations {
            needed: 2,
            got: ratings.len(),
        });
    }
    if ratings
        .iter()
        .any(|r| r.sigma.is_nan() || r.sigma <= 0.0 || !r.mu.is_finite())
    {
        return Err(StatsError::DegenerateInput(
            "ratings need finite mu and positive sigma",
        ));
    }
    let k = ratings.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&i| ranks[i]);
    let margin = draw_margin(params.draw_probability, params.beta, 2);

    // Variables: skills 0..k, performances k..2k, differences 2k..3k-1.
    let (skill, perf, diff) = (|i: usize| i, |i: usize| k + i, |i: usize| 2 * k + i);
    // Factors: priors 0..k, likelihoods k..2k, sums 2k..3k-1, truncations 3k-1..4k-2.
    let (prior_f, like_f, sum_f, trunc_f) = (
        |i: usize| i,
        |i: usize| k + i,
        |i: usize| 2 * k + i,
        |i: usize| 3 * k - 1 + i,
    );
    let mut g = Graph {
        vars: (0..3 * k - 1).map(|_| Variable::default()).collect(),
    };

    for (pos, &player) in order.iter().enumerate() {
        let r = ratings[player];
        let prior = Gaussian::from_moments(r.mu, (r.sigma.powi(2) + params.tau.powi(2)).sqrt());
        g.vars[skill(pos)].update_value(prior_f(pos), prior);
    }
    let beta_sq = params.beta * params.beta;
    for pos in 0..k {
        g.likelihood(like_f(pos), skill(pos), perf(pos), beta_sq);
    }

    let draws: Vec<bool> = (0..k - 1)
        .map(|i| ranks[order[i]] == ranks[order[i + 1]])
        .collect();
    let down =
        |g: &mut Graph, i: usize| g.sum(sum_f(i), diff(i), &[(perf(i), 1.0), (perf(i + 1), -1.0)]);
    // Solve d = p_l − p_r for p_l (which = 0) or p_r (which = 1).
    let up = |g: &mut Graph, i: usize, which: usize| {
        if which == 0 {
            g.sum(sum_f(i), perf(i), &[(diff(i), 1.0), (perf(i + 1), 1.0)])
        } else {
            g.sum(sum_f(i), perf(i + 1), &[(perf(i), 1.0), (diff(i), -1.0)])
        }
    };

    let diffs = k - 1;
    for _ in 0..MAX_ITERATIONS {
        let mut delta = 0.0f64;
        if diffs == 1 {
            down(&mut g, 0);
            delta = g.truncate(trunc_f(0), diff(0), margin, draws[0]);
        } else {
            for (i, &draw) in draws.iter().enumerate().take(diffs - 1) {
                down(&mut g, i);
                delta = delta.max(g.truncate(trunc_f(i), diff(i), margin, draw));
                up(&mut g, i, 1);
            }
            for i in (1..diffs).rev() {
                down(&mut g, i);
                delta = delta.max(g.truncate(trunc_f(i), diff(i), margin, draws[i]));
                up(&mut g, i, 0);
            }
        }
        if delta <= MIN_DELTA {
            break;
        }
    }
    up(&mut g, 0, 0);
    up(&mut g, diffs - 1, 1);
    for pos in 0..k {
        g.likelihood(like_f(pos), perf(pos), skill(pos), beta_sq);
    }

    let mut out = vec![Rating::default(); k];
    for (pos, &player) in order.iter().enumerate() {
        let v = g.vars[skill(pos)].value;
        out[player] = Rating {
            mu: v.mu(),
            sigma: v.sigma(),
        };
    }
    Ok(out)
}

/// Rates every condition id over a sequence of ranked comparisons, starting
/// from default ratings.
pub fn rate_records(
    records: &[RankRecord],
    params: TrueSkillParams,
) -> Result<BTreeMap<String, Rating>> {
    if records.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut ratings: BTreeMap<String, Rating> = BTreeMap::new();
    for record in records {
        if record.ranks.contains(&0) {
            return Err(StatsError::InvalidRank);
        }
        let current: Vec<Rating> = record
            .item_ids
            .iter()
            .map(|id| ratings.get(id).copied().unwrap_or_default())
            .collect();
        let updated = trueskill_update(&current, &record.ranks, params)?;
        for (id, r) in record.item_ids.iter().zip(updated) {
            ratings.insert(id.clone(), r);
        }
    }
    Ok(ratings)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_priors_strict_win_is_symmetric() {
        let r =
            trueskill_update(&[Rating::default(); 2], &[1, 2], TrueSkillParams::default()).unwrap();
        let gain = r[0].mu - DEFAULT_MU;
        let loss = DEFAULT_MU - r[1].mu;
        assert!(gain > 0.0);
        assert!((gain - loss).abs() < 1e-9);
        assert!(r[0].sigma < DEFAULT_SIGMA && r[1].sigma < DEFAULT_SIGMA);
        assert!((r[0].mu - 29.396).abs() < 1e-3, "{r:?}");
        assert!((r[0].sigma - 7.171).abs() < 1e-3, "{r:?}");
    }

    #[test]
    fn draw_keeps_equal_means() {
        let r =
            trueskill_update(&[Rating::default(); 2], &[1, 1], TrueSkillParams::default()).unwrap();
        assert!((r[0].mu - DEFAULT_MU).abs() < 1e-9);
        assert!((r[0].mu - r[1].mu).abs() < 1e-9);
        assert!(r[0].sigma < DEFAULT_SIGMA);
    }

    #[test]
    fn input_order_does_not_matter() {
        let p = TrueSkillParams::default();
        let a = trueskill_update(&[Rating::default(); 3], &[2, 1, 3], p).unwrap();
        let b = trueskill_update(&[Rating::default(); 3], &[1, 2, 3], p).unwrap();
        assert!((a[1].mu - b[0].mu).abs() < 1e-12);
        assert!((a[0].mu - b[1].mu).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let p = TrueSkillParams::default();
        assert!(matches!(
            trueskill_update(&[Rating::default()], &[1, 2], p),
            Err(StatsError::LengthMismatch { .. })
        ));
        assert!(matches!(rate_records(&[], p), Err(StatsError::EmptyInput)));
    }

    #[test]
    fn records_accumulate_by_id() {
        let rec = RankRecord {
            item_ids: vec!["full".into(), "standard".into()],
            ranks: vec![1, 2],
        };
        let out = rate_records(&[rec.clone(), rec], TrueSkillParams::default()).unwrap();
        assert!(out["full"].mu > 29.396);
        assert!(out["standard"].mu < 20.604);
    }
}
