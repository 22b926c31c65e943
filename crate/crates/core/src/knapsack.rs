//! Multiple-choice knapsack over periods: choose at most one period per arm,
//! maximize `Σ reward(d)/d` subject to `Σ 1/d <= k'`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::RecoveryInstance;

/// Slack on the frequency budget for floating-point loads.
pub const LOAD_TOL: f64 = 1e-12;

/// Largest integer capacity the exact dynamic programs will allocate.
pub const MAX_EXACT_CAPACITY: u64 = 4_000_000;

/// Largest number of joint choices the brute-force oracle will enumerate.
pub const MAX_BRUTE_FORCE_STATES: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CandidateItem {
    pub arm: usize,
    pub d: u64,
    /// Reward per period, `R(d)/d`.
    pub reward_rate: f64,
    /// Frequency, `1/d`.
    pub weight: f64,
}

impl CandidateItem {
    /// Builds the item for pulling `arm` every `d` periods at mean `reward`.
    pub fn new(arm: usize, d: u64, reward: f64) -> Self {
        Self {
            arm,
            d,
            reward_rate: reward / d as f64,
            weight: 1.0 / d as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnapsackSolution {
    /// `(arm, period)` pairs in arm order.
    pub chosen: Vec<(usize, u64)>,
    pub value: f64,
    pub load: f64,
}

impl KnapsackSolution {
    pub fn empty() -> Self {
        Self {
            chosen: Vec::new(),
            value: 0.0,
            load: 0.0,
        }
    }

    fn from_items(mut picked: Vec<CandidateItem>) -> Self {
        picked.sort_by_key(|it| it.arm);
        Self {
            value: picked.iter().map(|it| it.reward_rate).sum(),
            load: picked.iter().map(|it| it.weight).sum(),
            chosen: picked.iter().map(|it| (it.arm, it.d)).collect(),
        }
    }

    /// Chosen period per arm for an instance with `n_arms` arms.
    pub fn periods(&self, n_arms: usize) -> Vec<Option<u64>> {
        let mut out = vec![None; n_arms];
        for &(arm, d) in &self.chosen {
            out[arm] = Some(d);
        }
        out
    }
}

fn validate_items(items: &[CandidateItem], k_prime: f64) -> Result<()> {
    if !k_prime.is_finite() || k_prime < 0.0 {
        return Err(Error::arg(format!(
            "frequency budget {k_prime} must be finite and non-negative"
        )));
    }
    for it in items {
        if it.d == 0 {
            return Err(Error::arg(format!(
                "arm {}: period must be positive",
                it.arm
            )));
        }
        if !it.reward_rate.is_finite() || it.reward_rate < 0.0 {
            return Err(Error::arg(format!(
                "arm {}: reward rate {} must be finite and non-negative",
                it.arm, it.reward_rate
            )));
        }
    }
    Ok(())
}

/// Items grouped by arm, arms ascending; within an arm, larger `d` first so
/// that earlier options win ties.
fn group_by_arm(items: &[CandidateItem]) -> Vec<Vec<CandidateItem>> {
    let mut by_arm: BTreeMap<usize, Vec<CandidateItem>> = BTreeMap::new();
    for it in items {
        by_arm.entry(it.arm).or_default().push(*it);
    }
    by_arm
        .into_values()
        .map(|mut v| {
            v.sort_by_key(|it| std::cmp::Reverse(it.d));
            v.dedup_by_key(|it| it.d);
            v
        })
        .collect()
}

/// `(1 - epsilon)`-optimal solution by rounding rewards down to multiples of
/// `epsilon·r_max/N` and computing the minimum load for every scaled reward.
pub fn solve_fptas(
    items: &[CandidateItem],
    k_prime: f64,
    epsilon: f64,
) -> Result<KnapsackSolution> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::arg(format!("epsilon {epsilon} outside (0, 1]")));
    }
    validate_items(items, k_prime)?;
    // Items that cannot fit on their own never matter, and dropping them
    // keeps `r_max` a lower bound on the optimum.
    let fitting: Vec<CandidateItem> = items
        .iter()
        .filter(|it| it.weight <= k_prime + LOAD_TOL)
        .copied()
        .collect();
    let groups = group_by_arm(&fitting);
    let r_max = fitting.iter().map(|it| it.reward_rate).fold(0.0, f64::max);
    if groups.is_empty() || r_max <= 0.0 {
        return Ok(KnapsackSolution::empty());
    }
    let n = groups.len() as f64;
    let scale = epsilon * r_max / n;
    let scaled: Vec<Vec<usize>> = groups
        .iter()
        .map(|g| {
            g.iter()
                .map(|it| (it.reward_rate / scale).floor() as usize)
                .collect()
        })
        .collect();
    let total: usize = scaled
        .iter()
        .map(|s| s.iter().copied().max().unwrap_or(0))
        .sum();

    // min_load[r]: least load reaching scaled reward exactly r.
    let mut min_load = vec![f64::INFINITY; total + 1];
    min_load[0] = 0.0;
    let mut choice: Vec<Vec<u32>> = Vec::with_capacity(groups.len());
    let mut reach = 0usize;
    for (g, s) in groups.iter().zip(&scaled) {
        let mut next = min_load.clone();
        let mut pick = vec![u32::MAX; total + 1];
        for (idx, (it, &r)) in g.iter().zip(s).enumerate() {
            for base in 0..=reach {
                let w = min_load[base];
                if !w.is_finite() {
                    continue;
                }
                let cand = w + it.weight;
                if cand < next[base + r] {
                    next[base + r] = cand;
                    pick[base + r] = idx as u32;
                }
            }
        }
        reach += s.iter().copied().max().unwrap_or(0);
        min_load = next;
        choice.push(pick);
    }
    let best = (0..=total)
        .rev()
        .find(|&r| min_load[r] <= k_prime + LOAD_TOL)
        .unwrap_or(0);

    let mut picked = Vec::new();
    let mut r = best;
    for (gi, g) in groups.iter().enumerate().rev() {
        let idx = choice[gi][r];
        if idx != u32::MAX {
            picked.push(g[idx as usize]);
            r -= scaled[gi][idx as usize];
        }
    }
    Ok(KnapsackSolution::from_items(picked))
}

/// Exact DP with integer weights `scale/d` and capacity `⌊k'·scale⌋`.
fn solve_integer_weights(
    groups: &[Vec<CandidateItem>],
    k_prime: f64,
    scale: u64,
) -> Result<KnapsackSolution> {
    let cap_f = (k_prime * scale as f64 + 1e-9).floor();
    if cap_f > MAX_EXACT_CAPACITY as f64 {
        return Err(Error::Capacity(format!(
            "knapsack capacity {cap_f} exceeds {MAX_EXACT_CAPACITY}"
        )));
    }
    let cap = cap_f as usize;
    let mut best = vec![0.0f64; cap + 1];
    let mut choice: Vec<Vec<u32>> = Vec::with_capacity(groups.len());
    for g in groups {
        let mut next = best.clone();
        let mut pick = vec![u32::MAX; cap + 1];
        for (idx, it) in g.iter().enumerate() {
            let w = (scale / it.d) as usize;
            for c in w..=cap {
                let cand = best[c - w] + it.reward_rate;
                if cand > next[c] {
                    next[c] = cand;
                    pick[c] = idx as u32;
                }
            }
        }
        best = next;
        choice.push(pick);
    }
    let mut picked = Vec::new();
    let mut c = cap;
    for (gi, g) in groups.iter().enumerate().rev() {
        let idx = choice[gi][c];
        if idx != u32::MAX {
            let it = g[idx as usize];
            picked.push(it);
            c -= (scale / it.d) as usize;
        }
    }
    Ok(KnapsackSolution::from_items(picked))
}

/// Exact optimum when every period divides the largest one, which holds for
/// a chain `{(2a-1)·2^l}` and for that chain together with period 1.
pub fn solve_exact_pow2(items: &[CandidateItem], k_prime: f64) -> Result<KnapsackSolution> {
    validate_items(items, k_prime)?;
    let Some(max_d) = items.iter().map(|it| it.d).max() else {
        return Ok(KnapsackSolution::empty());
    };
    if let Some(bad) = items.iter().find(|it| max_d % it.d != 0) {
        return Err(Error::arg(format!(
            "period {} does not divide {max_d}: periods mix odd parts",
            bad.d
        )));
    }
    solve_integer_weights(&group_by_arm(items), k_prime, max_d)
}

fn lcm_of_periods(items: &[CandidateItem]) -> Option<u64> {
    let mut l = 1u64;
    for it in items {
        let g = gcd(l, it.d);
        l = (l / g).checked_mul(it.d)?;
    }
    Some(l)
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Exhaustive enumeration of every per-arm choice.
pub fn brute_force(items: &[CandidateItem], k_prime: f64) -> Result<KnapsackSolution> {
    validate_items(items, k_prime)?;
    let groups = group_by_arm(items);
    let states = groups
        .iter()
        .try_fold(1u128, |acc, g| acc.checked_mul(g.len() as u128 + 1))
        .filter(|&s| s <= MAX_BRUTE_FORCE_STATES);
    if states.is_none() {
        return Err(Error::arg(format!(
            "brute force over {} arms exceeds {MAX_BRUTE_FORCE_STATES} joint choices",
            groups.len()
        )));
    }
    let mut best: Option<(f64, Vec<CandidateItem>)> = None;
    let mut current = Vec::with_capacity(groups.len());
    enumerate(&groups, 0, 0.0, k_prime, &mut current, &mut best);
    Ok(best.map_or_else(KnapsackSolution::empty, |(_, picked)| {
        KnapsackSolution::from_items(picked)
    }))
}

fn enumerate(
    groups: &[Vec<CandidateItem>],
    depth: usize,
    load: f64,
    k_prime: f64,
    current: &mut Vec<CandidateItem>,
    best: &mut Option<(f64, Vec<CandidateItem>)>,
) {
    if depth == groups.len() {
        let value: f64 = current.iter().map(|it| it.reward_rate).sum();
        if best.as_ref().is_none_or(|(v, _)| value > *v) {
            *best = Some((value, current.clone()));
        }
        return;
    }
    enumerate(groups, depth + 1, load, k_prime, current, best);
    for it in &groups[depth] {
        if load + it.weight <= k_prime + LOAD_TOL {
            current.push(*it);
            enumerate(groups, depth + 1, load + it.weight, k_prime, current, best);
            current.pop();
        }
    }
}

/// Exact optimum by the cheapest applicable method: the chain DP, then the
/// lcm-scaled DP, then enumeration.
pub fn solve_exact(items: &[CandidateItem], k_prime: f64) -> Result<KnapsackSolution> {
    validate_items(items, k_prime)?;
    let Some(max_d) = items.iter().map(|it| it.d).max() else {
        return Ok(KnapsackSolution::empty());
    };
    if items.iter().all(|it| max_d % it.d == 0) {
        return solve_exact_pow2(items, k_prime);
    }
    if let Some(l) = lcm_of_periods(items) {
        if k_prime * (l as f64) <= MAX_EXACT_CAPACITY as f64 {
            return solve_integer_weights(&group_by_arm(items), k_prime, l);
        }
    }
    match brute_force(items, k_prime) {
        Err(Error::InvalidArgument(msg)) => Err(Error::Capacity(msg)),
        other => other,
    }
}

/// Candidate items for every arm and period, scored by true mean rewards.
pub fn items_from_means(instance: &RecoveryInstance, periods: &[u64]) -> Vec<CandidateItem> {
    instance
        .arms
        .iter()
        .enumerate()
        .flat_map(|(arm, curve)| {
            periods
                .iter()
                .map(move |&d| CandidateItem::new(arm, d, curve.mean(d)))
        })
        .collect()
}

/// Optimal knapsack value when the coefficients are the true means.
pub fn val(instance: &RecoveryInstance, k_prime: f64, candidate_periods: &[u64]) -> Result<f64> {
    Ok(solve_exact(&items_from_means(instance, candidate_periods), k_prime)?.value)
}
