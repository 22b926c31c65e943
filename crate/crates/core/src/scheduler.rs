//! Rounding frequencies to structured periods and packing the resulting arms
//! into a purely periodic policy that never pulls more than `k` arms at once.
//!
//! Periods are drawn from `D[a]`, the numbers `(2j-1)·2^l` with `j <= a`.
//! Arms whose periods share an odd part can be interleaved without
//! collisions as long as their total frequency is at most one, so each odd
//! class is cut into unit-load groups and every group occupies one pull slot.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::RecoveryInstance;
use crate::relaxation::{solve_upper_bound, RelaxationSolution};

/// Relative slack when comparing `1/x` to an integer period, so that
/// `x = 1/d` computed in floating point still rounds to `d`.
const ROUND_TOL: f64 = 1e-9;

/// Largest verification window (lcm of the finite periods) we will scan.
pub const MAX_VERIFY_WINDOW: u64 = 1_000_000;

/// Splits `d` into its odd part and the exponent of two.
pub fn odd_part(d: u64) -> (u64, u32) {
    assert!(d > 0, "period must be positive");
    let shift = d.trailing_zeros();
    (d >> shift, shift)
}

/// Smallest `odd·2^l` that is at least `target`.
fn smallest_in_chain(odd: u64, target: f64) -> Option<u64> {
    let mut d = odd;
    while (d as f64) < target * (1.0 - ROUND_TOL) {
        d = d.checked_mul(2)?;
    }
    Some(d)
}

/// The period set `D[a]`: every `(2j-1)·2^l` with `1 <= j <= a`, plus `∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeriodClass {
    pub a: u64,
}

impl PeriodClass {
    pub fn new(a: u64) -> Result<Self> {
        if a == 0 {
            return Err(Error::arg("period class parameter a must be at least 1"));
        }
        Ok(Self { a })
    }

    pub fn contains(&self, d: u64) -> bool {
        d > 0 && odd_part(d).0 < 2 * self.a
    }

    /// `min{d >= 1/x : d ∈ D[a]}`, with `None` standing for `∞`.
    pub fn round(&self, x: f64) -> Option<u64> {
        if x <= 0.0 {
            return None;
        }
        let target = 1.0 / x;
        (1..=self.a)
            .filter_map(|j| smallest_in_chain(2 * j - 1, target))
            .min()
    }

    /// Every member of `D[a]` no larger than `limit`, ascending.
    pub fn members_up_to(&self, limit: u64) -> Vec<u64> {
        let mut out: Vec<u64> = (1..=limit).filter(|&d| self.contains(d)).collect();
        out.sort_unstable();
        out
    }
}

/// Rounds inside the single chain `{(2a-1)·2^l} ∪ {1}`.
pub fn round_single_class(x: f64, a: u64) -> Option<u64> {
    if x <= 0.0 {
        return None;
    }
    let target = 1.0 / x;
    if target <= 1.0 + ROUND_TOL {
        return Some(1);
    }
    smallest_in_chain(2 * a - 1, target)
}

/// Members of `{1} ∪ {(2a-1)·2^l}` no larger than `limit`, ascending.
pub fn single_class_members(a: u64, limit: u64) -> Vec<u64> {
    let mut out = Vec::new();
    if limit >= 1 {
        out.push(1);
    }
    let mut d = 2 * a - 1;
    while d <= limit {
        if d != 1 {
            out.push(d);
        }
        d *= 2;
    }
    out
}

pub fn round_frequencies(x: &[f64], a: u64) -> Result<Vec<Option<u64>>> {
    let class = PeriodClass::new(a)?;
    if let Some(bad) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::arg(format!("frequency {bad} outside [0, 1]")));
    }
    Ok(x.iter().map(|&v| class.round(v)).collect())
}

/// One arm of a policy: pulled at every `t >= 1` with `t ≡ offset (mod d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyEntry {
    #[serde(with = "period_repr")]
    pub d: Option<u64>,
    pub t: i64,
}

impl PolicyEntry {
    pub const IDLE: PolicyEntry = PolicyEntry { d: None, t: 0 };

    pub fn periodic(d: u64, t: i64) -> Self {
        Self { d: Some(d), t }
    }

    pub fn pulls_at(&self, time: u64) -> bool {
        match self.d {
            Some(d) => (i128::from(time) - i128::from(self.t)).rem_euclid(i128::from(d)) == 0,
            None => false,
        }
    }

    /// First pull time, in `1..=d`.
    pub fn first_pull(&self) -> Option<u64> {
        self.d.map(|d| (i128::from(self.t) + i128::from(d)) as u64)
    }
}

mod period_repr {
    use serde::de::{self, Deserializer};
    use serde::{Deserialize, Serializer};

    pub fn serialize<S: Serializer>(d: &Option<u64>, s: S) -> Result<S::Ok, S::Error> {
        match d {
            Some(v) => s.serialize_u64(*v),
            None => s.serialize_str("inf"),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Finite(u64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Option<u64>, D::Error> {
        match Repr::deserialize(de)? {
            Repr::Finite(0) => Err(de::Error::custom("period must be positive")),
            Repr::Finite(v) => Ok(Some(v)),
            Repr::Text(s) if s == "inf" => Ok(None),
            Repr::Text(s) => Err(de::Error::custom(format!(
                "period must be a positive integer or \"inf\", got {s:?}"
            ))),
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// A `k`-purely-periodic policy: per-arm periods and offsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PurelyPeriodicPolicy {
    pub k: usize,
    pub entries: Vec<PolicyEntry>,
}

impl PurelyPeriodicPolicy {
    pub fn idle(n_arms: usize, k: usize) -> Self {
        Self {
            k,
            entries: vec![PolicyEntry::IDLE; n_arms],
        }
    }

    pub fn periods(&self) -> Vec<Option<u64>> {
        self.entries.iter().map(|e| e.d).collect()
    }

    pub fn pulled_at(&self, time: u64) -> impl Iterator<Item = usize> + '_ {
        self.entries
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.pulls_at(time))
            .map(|(i, _)| i)
    }

    /// Offsets must lie in `(-d, 0]`.
    pub fn check_offsets(&self) -> Result<()> {
        for (i, e) in self.entries.iter().enumerate() {
            if let Some(d) = e.d {
                if e.t > 0 || i128::from(e.t) <= -i128::from(d) {
                    return Err(Error::arg(format!(
                        "arm {i}: offset {} outside (-{d}, 0]",
                        e.t
                    )));
                }
            } else if e.t != 0 {
                return Err(Error::arg(format!("arm {i}: idle arm with offset {}", e.t)));
            }
        }
        Ok(())
    }

    /// Length of one full cycle: the lcm of the finite periods.
    pub fn verification_window(&self) -> Result<u64> {
        let mut window = 1u64;
        for d in self.entries.iter().filter_map(|e| e.d) {
            window = (window / gcd(window, d))
                .checked_mul(d)
                .filter(|&w| w <= MAX_VERIFY_WINDOW)
                .ok_or_else(|| {
                    Error::Capacity(format!(
                        "verification window exceeds {MAX_VERIFY_WINDOW} steps"
                    ))
                })?;
        }
        Ok(window)
    }

    /// Checks that no step of a full cycle pulls more than `k` arms.
    pub fn verify_budget(&self) -> Result<()> {
        self.check_offsets()?;
        let window = self.verification_window()?;
        let mut counts = vec![0usize; window as usize];
        for e in &self.entries {
            let (Some(d), Some(first)) = (e.d, e.first_pull()) else {
                continue;
            };
            let mut t = first;
            while t <= window {
                counts[(t - 1) as usize] += 1;
                t += d;
            }
        }
        match counts.iter().position(|&c| c > self.k) {
            Some(pos) => Err(Error::BudgetExceeded {
                time: pos as u64 + 1,
                pulled: counts[pos],
                budget: self.k,
            }),
            None => Ok(()),
        }
    }

    /// `Σ R_i(d_i)/d_i` over the arms with a finite period.
    pub fn long_run_average(&self, instance: &RecoveryInstance) -> Result<f64> {
        if self.entries.len() != instance.n_arms() {
            return Err(Error::arg(format!(
                "policy has {} entries for {} arms",
                self.entries.len(),
                instance.n_arms()
            )));
        }
        Ok(self
            .entries
            .iter()
            .zip(&instance.arms)
            .filter_map(|(e, arm)| e.d.map(|d| arm.mean(d) / d as f64))
            .sum())
    }
}

/// `achieved / ub`, or 1 when the bound itself is zero.
pub fn ratio(achieved: f64, ub: f64) -> f64 {
    if ub > 0.0 {
        achieved / ub
    } else {
        1.0
    }
}

/// The policy file: a policy plus its value and the relaxation bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyDocument {
    pub k: usize,
    pub entries: Vec<PolicyEntry>,
    pub long_run_average: f64,
    pub ub: f64,
    pub ratio: f64,
}

impl PolicyDocument {
    pub fn new(
        policy: &PurelyPeriodicPolicy,
        instance: &RecoveryInstance,
        ub: f64,
    ) -> Result<Self> {
        let lra = policy.long_run_average(instance)?;
        Ok(Self {
            k: policy.k,
            entries: policy.entries.clone(),
            long_run_average: lra,
            ub,
            ratio: ratio(lra, ub),
        })
    }

    pub fn policy(&self) -> PurelyPeriodicPolicy {
        PurelyPeriodicPolicy {
            k: self.k,
            entries: self.entries.clone(),
        }
    }
}

pub fn parse_policy(bytes: &[u8]) -> Result<PolicyDocument> {
    let doc: PolicyDocument = serde_json::from_slice(bytes).map_err(|e| Error::from_json(&e))?;
    doc.policy().check_offsets()?;
    Ok(doc)
}

pub fn serialize_policy(doc: &PolicyDocument) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(doc).expect("policy documents always serialize");
    out.push(b'\n');
    out
}

/// Checks that every period is finite and shares one odd part; returns it.
fn common_odd_part(items: &[(usize, u64)]) -> Result<u64> {
    let mut odd = None;
    for &(arm, d) in items {
        if d == 0 {
            return Err(Error::arg(format!("arm {arm} has period 0")));
        }
        let o = odd_part(d).0;
        match odd {
            None => odd = Some(o),
            Some(prev) if prev != o => {
                return Err(Error::arg(format!("periods mix odd parts {prev} and {o}")))
            }
            _ => {}
        }
    }
    Ok(odd.unwrap_or(1))
}

/// Cuts arms sharing one odd part into groups of frequency load at most one.
/// Sorting by period makes the frequencies powers of two in decreasing order,
/// so the running load hits exactly one at every cut.
pub fn split_groups(items: &[(usize, u64)]) -> Result<Vec<Vec<(usize, u64)>>> {
    common_odd_part(items)?;
    let mut sorted = items.to_vec();
    sorted.sort_by_key(|&(arm, d)| (d, arm));
    let Some(&(_, max_d)) = sorted.last() else {
        return Ok(Vec::new());
    };
    let mut groups = Vec::new();
    let mut current = Vec::new();
    let mut load = 0u64;
    for (arm, d) in sorted {
        let w = max_d / d;
        if load + w > max_d {
            return Err(Error::Invariant(format!(
                "group load overshoots one at arm {arm} (period {d})"
            )));
        }
        load += w;
        current.push((arm, d));
        if load == max_d {
            groups.push(std::mem::take(&mut current));
            load = 0;
        }
    }
    if !current.is_empty() {
        groups.push(current);
    }
    Ok(groups)
}

/// Prefix of `items` (sorted by period) whose load in units of `1/unit`
/// reaches exactly `unit`; the rest follows.
fn cut_unit_prefix(items: &[(usize, u64)], unit: u64) -> Result<usize> {
    let mut load = 0u64;
    for (idx, &(arm, d)) in items.iter().enumerate() {
        load += unit / d;
        if load == unit {
            return Ok(idx + 1);
        }
        if load > unit {
            return Err(Error::Invariant(format!(
                "prefix load overshoots one at arm {arm}"
            )));
        }
    }
    Ok(items.len())
}

/// First pull times in `1..=p` for power-of-two periods with load at most
/// one: halve every period, split into two half-load sets, and interleave
/// them on odd and even steps.
fn pow2_first_pulls(items: &[(usize, u64)]) -> Result<Vec<(usize, u64)>> {
    match items {
        [] => return Ok(Vec::new()),
        [(arm, _)] => return Ok(vec![(*arm, 1)]),
        _ => {}
    }
    let max_p = items.iter().map(|&(_, p)| p).max().unwrap();
    let load: u64 = items.iter().map(|&(_, p)| max_p / p).sum();
    if load > max_p {
        return Err(Error::Invariant("group load exceeds one".into()));
    }
    let halved: Vec<(usize, u64)> = items.iter().map(|&(arm, p)| (arm, p / 2)).collect();
    let half_unit = max_p / 2;
    if 2 * load <= max_p {
        let inner = pow2_first_pulls(&halved)?;
        return Ok(inner.into_iter().map(|(arm, s)| (arm, 2 * s)).collect());
    }
    let cut = cut_unit_prefix(&halved, half_unit)?;
    let mut out = Vec::with_capacity(items.len());
    for (arm, s) in pow2_first_pulls(&halved[..cut])? {
        out.push((arm, 2 * s - 1));
    }
    for (arm, s) in pow2_first_pulls(&halved[cut..])? {
        out.push((arm, 2 * s));
    }
    Ok(out)
}

/// Offsets in `(-d, 0]` making a unit-load group collision-free.
pub fn schedule_single_group(items: &[(usize, u64)]) -> Result<Vec<(usize, i64)>> {
    let odd = common_odd_part(items)?;
    let mut sorted = items.to_vec();
    sorted.sort_by_key(|&(arm, d)| (d, arm));
    let Some(&(_, max_d)) = sorted.last() else {
        return Ok(Vec::new());
    };
    if let [(arm, _)] = sorted[..] {
        return Ok(vec![(arm, 0)]);
    }
    let load: u64 = sorted.iter().map(|&(_, d)| max_d / d).sum();
    if load > max_d {
        return Err(Error::arg(format!(
            "group load {} exceeds one",
            sorted.iter().map(|&(_, d)| 1.0 / d as f64).sum::<f64>()
        )));
    }
    let reduced: Vec<(usize, u64)> = sorted.iter().map(|&(arm, d)| (arm, d / odd)).collect();
    let period: BTreeMap<usize, u64> = sorted.iter().copied().collect();

    let mut first_pulls = Vec::with_capacity(sorted.len());
    if odd == 1 {
        first_pulls = pow2_first_pulls(&reduced)?;
    } else {
        // The reduced periods have load at most `odd`: cut into unit-load
        // subsets and give subset `s` the residue `s mod odd`.
        let unit = max_d / odd;
        let mut rest = &reduced[..];
        let mut subset = 0u64;
        while !rest.is_empty() {
            subset += 1;
            if subset > odd {
                return Err(Error::Invariant("more subsets than the odd part".into()));
            }
            let cut = cut_unit_prefix(rest, unit)?;
            for (arm, s) in pow2_first_pulls(&rest[..cut])? {
                first_pulls.push((arm, odd * (s - 1) + subset));
            }
            rest = &rest[cut..];
        }
    }
    Ok(first_pulls
        .into_iter()
        .map(|(arm, s)| (arm, s as i64 - period[&arm] as i64))
        .collect())
}

/// A scheduled group: arms with their periods and offsets, and the group's
/// long-run value under the scoring used to select it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledGroup {
    pub members: Vec<(usize, u64, i64)>,
    pub load: f64,
    pub value: f64,
}

impl ScheduledGroup {
    fn smallest_arm(&self) -> usize {
        self.members.iter().map(|m| m.0).min().unwrap_or(usize::MAX)
    }
}

/// Partitions the finite periods by odd part, splits every class into
/// unit-load groups and schedules each group.
pub fn build_groups(
    periods: &[Option<u64>],
    reward: impl Fn(usize, u64) -> f64,
) -> Result<Vec<ScheduledGroup>> {
    let mut classes: BTreeMap<u64, Vec<(usize, u64)>> = BTreeMap::new();
    for (arm, d) in periods.iter().enumerate() {
        if let Some(d) = *d {
            if d == 0 {
                return Err(Error::arg(format!("arm {arm} has period 0")));
            }
            classes.entry(odd_part(d).0).or_default().push((arm, d));
        }
    }
    let mut groups = Vec::new();
    for items in classes.values() {
        for group in split_groups(items)? {
            let offsets: BTreeMap<usize, i64> =
                schedule_single_group(&group)?.into_iter().collect();
            let members: Vec<(usize, u64, i64)> = group
                .iter()
                .map(|&(arm, d)| (arm, d, offsets[&arm]))
                .collect();
            let load = members.iter().map(|m| 1.0 / m.1 as f64).sum();
            let value = members
                .iter()
                .map(|&(arm, d, _)| reward(arm, d) / d as f64)
                .sum();
            groups.push(ScheduledGroup {
                members,
                load,
                value,
            });
        }
    }
    Ok(groups)
}

/// Keeps the `k` most valuable groups (ties: higher load, then lower
/// smallest arm) and merges them into one policy.
pub fn schedule_periods(
    periods: &[Option<u64>],
    k: usize,
    reward: impl Fn(usize, u64) -> f64,
) -> Result<PurelyPeriodicPolicy> {
    let mut groups = build_groups(periods, reward)?;
    groups.sort_by(|a, b| {
        b.value
            .total_cmp(&a.value)
            .then(b.load.total_cmp(&a.load))
            .then(a.smallest_arm().cmp(&b.smallest_arm()))
    });
    let mut policy = PurelyPeriodicPolicy::idle(periods.len(), k);
    for group in groups.iter().take(k) {
        for &(arm, d, t) in &group.members {
            policy.entries[arm] = PolicyEntry::periodic(d, t);
        }
    }
    Ok(policy)
}

/// Rounds `x` into `D[a]` and schedules the result, scoring groups by the
/// instance's true mean rewards.
pub fn rs_procedure(
    instance: &RecoveryInstance,
    x: &[f64],
    k: usize,
    a: u64,
) -> Result<PurelyPeriodicPolicy> {
    if x.len() != instance.n_arms() {
        return Err(Error::arg(format!(
            "frequency vector has {} entries for {} arms",
            x.len(),
            instance.n_arms()
        )));
    }
    let periods = round_frequencies(x, a)?;
    schedule_periods(&periods, k, |arm, d| instance.arms[arm].mean(d))
}

/// `a/(a+1) · k/(k+a)`.
pub fn class_ratio(a: u64, k: u64) -> f64 {
    (a as f64 * k as f64) / ((a + 1) as f64 * (k + a) as f64)
}

/// Integer comparison of `class_ratio(a1, k)` against `class_ratio(a2, k)`.
fn cmp_class_ratio(a1: u64, a2: u64, k: u64) -> Ordering {
    let lhs = a1 as u128 * (a2 + 1) as u128 * (k + a2) as u128;
    let rhs = a2 as u128 * (a1 + 1) as u128 * (k + a1) as u128;
    lhs.cmp(&rhs)
}

/// The class parameter maximizing `a/(a+1) · k/(k+a)`, searched near `√k`;
/// ties go to the smaller `a`.
pub fn best_class(k: u64) -> Result<u64> {
    if k == 0 {
        return Err(Error::arg("budget k must be at least 1"));
    }
    let root = (k as f64).sqrt();
    let lo = (root.floor() as u64).saturating_sub(1).max(1);
    let hi = root.ceil() as u64 + 1;
    let mut best = lo;
    for a in lo + 1..=hi {
        if cmp_class_ratio(a, best, k) == Ordering::Greater {
            best = a;
        }
    }
    Ok(best)
}

/// Approximation ratio of the basic offline planner.
pub fn gamma_k(k: u64) -> Result<f64> {
    Ok(class_ratio(best_class(k)?, k))
}

/// How the fractional component of the relaxation is treated before rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Treatment {
    /// Lift to the reciprocal of the shorter bracketing support period.
    Lift,
    Keep,
    /// Lower to the reciprocal of the longer bracketing support period.
    Shrink,
}

impl Treatment {
    pub const ALL: [Treatment; 3] = [Treatment::Lift, Treatment::Keep, Treatment::Shrink];

    pub fn apply(self, sol: &RelaxationSolution) -> Vec<f64> {
        let mut x = sol.x_star.clone();
        if let Some(f) = sol.fractional {
            x[f.arm] = match self {
                Treatment::Lift => 1.0 / f.shorter as f64,
                Treatment::Keep => x[f.arm],
                Treatment::Shrink => 1.0 / f.longer as f64,
            };
        }
        x
    }
}

/// An offline plan with the choices that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct OfflinePlan {
    pub policy: PurelyPeriodicPolicy,
    pub a: u64,
    pub treatment: Treatment,
    pub long_run_average: f64,
    pub ub: f64,
}

impl OfflinePlan {
    pub fn ratio(&self) -> f64 {
        ratio(self.long_run_average, self.ub)
    }
}

fn check_budget(instance: &RecoveryInstance, k: usize) -> Result<()> {
    let n = instance.n_arms();
    if k == 0 || k > n {
        return Err(Error::arg(format!("budget k={k} outside 1..={n}")));
    }
    Ok(())
}

/// Lifts the relaxation optimum onto supporting reciprocals and runs R-S
/// with the class parameter that maximizes the worst-case ratio.
pub fn offline_plan(instance: &RecoveryInstance, k: usize) -> Result<OfflinePlan> {
    check_budget(instance, k)?;
    let sol = solve_upper_bound(instance, k)?;
    let a = best_class(k as u64)?;
    let x = Treatment::Lift.apply(&sol);
    let policy = rs_procedure(instance, &x, k, a)?;
    let long_run_average = policy.long_run_average(instance)?;
    Ok(OfflinePlan {
        policy,
        a,
        treatment: Treatment::Lift,
        long_run_average,
        ub: sol.ub,
    })
}

/// Candidate parameters tried by the refined planner, in tie-break order.
pub const REFINED_CLASSES: [u64; 3] = [1, 2, 3];

/// Tries every single period chain `{1} ∪ {(2a-1)·2^l}` for `a ≤ 3` against
/// every treatment of the fractional component and keeps the best policy.
pub fn offline_plan_refined(instance: &RecoveryInstance, k: usize) -> Result<OfflinePlan> {
    check_budget(instance, k)?;
    let sol = solve_upper_bound(instance, k)?;
    let candidates: Vec<(u64, Treatment)> = REFINED_CLASSES
        .iter()
        .flat_map(|&a| Treatment::ALL.iter().map(move |&m| (a, m)))
        .collect();
    let plans = candidates
        .par_iter()
        .map(|&(a, treatment)| {
            let periods: Vec<Option<u64>> = treatment
                .apply(&sol)
                .iter()
                .map(|&x| round_single_class(x, a))
                .collect();
            let policy = schedule_periods(&periods, k, |arm, d| instance.arms[arm].mean(d))?;
            let long_run_average = policy.long_run_average(instance)?;
            Ok(OfflinePlan {
                policy,
                a,
                treatment,
                long_run_average,
                ub: sol.ub,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<OfflinePlan> = None;
    for plan in plans {
        if best
            .as_ref()
            .is_none_or(|b| plan.long_run_average > b.long_run_average)
        {
            best = Some(plan);
        }
    }
    Ok(best.expect("nine candidates"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::ArmCurve;

    fn inst(curves: Vec<Vec<f64>>) -> RecoveryInstance {
        RecoveryInstance::new(curves.into_iter().map(ArmCurve::new).collect(), 100.0)
    }

    fn collision_free(items: &[(usize, u64)], offsets: &[(usize, i64)]) -> bool {
        let period: BTreeMap<usize, u64> = items.iter().copied().collect();
        let policy_entries: Vec<PolicyEntry> = offsets
            .iter()
            .map(|&(arm, t)| PolicyEntry::periodic(period[&arm], t))
            .collect();
        let policy = PurelyPeriodicPolicy {
            k: 1,
            entries: policy_entries,
        };
        policy.verify_budget().is_ok()
    }

    #[test]
    fn rounding_examples() {
        assert_eq!(PeriodClass::new(1).unwrap().round(1.0 / 3.0), Some(4));
        assert_eq!(PeriodClass::new(2).unwrap().round(1.0 / 3.0), Some(3));
        assert_eq!(PeriodClass::new(2).unwrap().round(0.0), None);
        assert_eq!(PeriodClass::new(3).unwrap().round(1.0 / 7.0), Some(8));
        assert_eq!(PeriodClass::new(3).unwrap().round(1.0 / 6.0), Some(6));
        assert_eq!(PeriodClass::new(1).unwrap().round(1.0), Some(1));
        assert_eq!(round_single_class(1.0 / 3.0, 3), Some(5));
        assert_eq!(round_single_class(0.9, 3), Some(5));
        assert_eq!(round_single_class(1.0, 3), Some(1));
        assert_eq!(round_single_class(1.0 / 11.0, 3), Some(20));
        assert_eq!(single_class_members(2, 30), vec![1, 3, 6, 12, 24]);
        assert!(PeriodClass::new(0).is_err());
    }

    #[test]
    fn split_groups_examples() {
        let g = split_groups(&[(0, 2), (1, 4), (2, 4)]).unwrap();
        assert_eq!(g.len(), 1);
        let g = split_groups(&[(0, 2), (1, 2), (2, 4), (3, 4), (4, 8), (5, 8)]).unwrap();
        assert_eq!(
            g,
            vec![vec![(0, 2), (1, 2)], vec![(2, 4), (3, 4), (4, 8), (5, 8)]]
        );
        assert_eq!(split_groups(&[(0, 8)]).unwrap(), vec![vec![(0, 8)]]);
        assert!(matches!(
            split_groups(&[(0, 2), (1, 3)]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn single_group_examples() {
        let items = [(0, 2), (1, 4), (2, 4)];
        let offsets = schedule_single_group(&items).unwrap();
        assert!(collision_free(&items, &offsets));
        assert_eq!(schedule_single_group(&[(0, 7)]).unwrap(), vec![(0, 0)]);
        assert!(schedule_single_group(&[(0, 2), (1, 3)]).is_err());
        assert!(schedule_single_group(&[(0, 2), (1, 2), (2, 4)]).is_err());
    }

    #[test]
    fn odd_class_groups_are_collision_free() {
        let items = [(0, 3), (1, 6), (2, 12), (3, 12), (4, 6)];
        let offsets = schedule_single_group(&items).unwrap();
        assert!(collision_free(&items, &offsets));
        let items = [(0, 5), (1, 5), (2, 10), (3, 20), (4, 20), (5, 40), (6, 40)];
        let offsets = schedule_single_group(&items).unwrap();
        assert!(collision_free(&items, &offsets));
        for &(arm, t) in &offsets {
            let d = items[arm].1 as i64;
            assert!(t <= 0 && t > -d);
        }
    }

    #[test]
    fn policy_json_round_trip() {
        let i = inst(vec![vec![1.0, 4.0], vec![2.0]]);
        let policy = PurelyPeriodicPolicy {
            k: 1,
            entries: vec![PolicyEntry::periodic(2, -1), PolicyEntry::IDLE],
        };
        let doc = PolicyDocument::new(&policy, &i, 2.5).unwrap();
        let bytes = serialize_policy(&doc);
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.contains("\"inf\""));
        assert_eq!(parse_policy(&bytes).unwrap(), doc);
        assert!(matches!(
            parse_policy(
                br#"{"k":1,"entries":[{"d":0,"t":0}],"long_run_average":0,"ub":0,"ratio":1}"#
            ),
            Err(Error::Parse { .. })
        ));
        assert!(parse_policy(
            br#"{"k":1,"entries":[{"d":2,"t":1}],"long_run_average":0,"ub":0,"ratio":1}"#
        )
        .is_err());
    }

    #[test]
    fn long_run_average_examples() {
        let i = inst(vec![vec![1.0, 2.0, 6.0]]);
        let idle = PurelyPeriodicPolicy::idle(1, 1);
        assert_eq!(idle.long_run_average(&i).unwrap(), 0.0);
        let p = PurelyPeriodicPolicy {
            k: 1,
            entries: vec![PolicyEntry::periodic(3, 0)],
        };
        assert_eq!(p.long_run_average(&i).unwrap(), 2.0);
    }

    #[test]
    fn budget_violation_is_reported() {
        let p = PurelyPeriodicPolicy {
            k: 1,
            entries: vec![PolicyEntry::periodic(2, 0), PolicyEntry::periodic(4, 0)],
        };
        assert!(matches!(
            p.verify_budget(),
            Err(Error::BudgetExceeded {
                time: 4,
                pulled: 2,
                budget: 1
            })
        ));
        let huge = PurelyPeriodicPolicy {
            k: 3,
            entries: vec![
                PolicyEntry::periodic(999_983, 0),
                PolicyEntry::periodic(999_979, 0),
            ],
        };
        assert!(matches!(huge.verify_budget(), Err(Error::Capacity(_))));
    }

    #[test]
    fn gamma_values() {
        assert_eq!(gamma_k(1).unwrap(), 0.25);
        assert!((gamma_k(4).unwrap() - 4.0 / 9.0).abs() < 1e-15);
        assert_eq!(best_class(4).unwrap(), 2);
        assert!(gamma_k(0).is_err());
        let mut prev = 0.0;
        for k in 1..=10_000u64 {
            let g = gamma_k(k).unwrap();
            let exhaustive = (1..=k + 1).map(|a| class_ratio(a, k)).fold(0.0, f64::max);
            assert!((g - exhaustive).abs() < 1e-15, "k={k}");
            assert!(g >= prev - 1e-15);
            assert!((1.0 - g) * (k as f64).sqrt() <= 2.0);
            prev = g;
        }
    }

    #[test]
    fn greedy_trap_plan() {
        let i = inst(vec![vec![0.5], vec![1.0, 10.0]]);
        let plan = offline_plan(&i, 1).unwrap();
        assert_eq!(plan.policy.periods(), vec![Some(2), Some(2)]);
        assert!((plan.long_run_average - 5.25).abs() < 1e-12);
        plan.policy.verify_budget().unwrap();
    }

    #[test]
    fn single_constant_arm_is_pulled_every_period() {
        let i = inst(vec![vec![3.0]]);
        for plan in [
            offline_plan(&i, 1).unwrap(),
            offline_plan_refined(&i, 1).unwrap(),
        ] {
            assert_eq!(plan.policy.entries, vec![PolicyEntry::periodic(1, 0)]);
            assert_eq!(plan.long_run_average, 3.0);
        }
    }

    #[test]
    fn rs_keeps_everything_when_groups_fit() {
        let i = inst(vec![vec![1.0, 2.0], vec![1.0, 2.0], vec![3.0]]);
        let policy = rs_procedure(&i, &[0.5, 0.5, 1.0], 2, 1).unwrap();
        assert_eq!(policy.periods(), vec![Some(2), Some(2), Some(1)]);
        policy.verify_budget().unwrap();
    }
}
