//! Phased learning with optimistic estimates. Each phase plans a periodic
//! policy from upper confidence bounds on `R_i(d)`, runs it for `phi` steps
//! and folds the observed rewards back into the table.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::RecoveryInstance;
use crate::knapsack::{solve_exact, solve_exact_pow2, solve_fptas, CandidateItem};
use crate::relaxation::ub_value;
use crate::scheduler::{
    best_class, schedule_periods, single_class_members, PeriodClass, PurelyPeriodicPolicy,
    REFINED_CLASSES,
};
use crate::sim::{Environment, Noise};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Stat {
    n: u64,
    mean: f64,
}

/// Sample counts and running means per `(arm, gap)`, with optimistic reads.
#[derive(Debug, Clone, PartialEq)]
pub struct UcbTable {
    r_max: f64,
    log_term: f64,
    bonus_scale: f64,
    stats: HashMap<(usize, u64), Stat>,
}

impl UcbTable {
    /// Table for budget `k` over horizon `horizon`; the confidence radius is
    /// `r_max·√(2·ln(k·T)/n)`.
    pub fn new(r_max: f64, k: usize, horizon: u64) -> Self {
        Self {
            r_max,
            log_term: 2.0 * ((k as f64) * (horizon as f64)).max(1.0).ln(),
            bonus_scale: 1.0,
            stats: HashMap::new(),
        }
    }

    /// Multiplies the confidence radius; zero turns the table into plain
    /// empirical means (unseen pairs still read as `r_max`).
    pub fn with_bonus_scale(mut self, scale: f64) -> Self {
        self.bonus_scale = scale;
        self
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn count(&self, arm: usize, gap: u64) -> u64 {
        self.stats.get(&(arm, gap)).map_or(0, |s| s.n)
    }

    pub fn mean(&self, arm: usize, gap: u64) -> f64 {
        self.stats.get(&(arm, gap)).map_or(0.0, |s| s.mean)
    }

    pub fn ucb(&self, arm: usize, gap: u64) -> f64 {
        match self.stats.get(&(arm, gap)) {
            None => self.r_max,
            Some(s) if s.n == 0 => self.r_max,
            Some(s) => {
                let bonus = self.r_max * self.bonus_scale * (self.log_term / s.n as f64).sqrt();
                (s.mean + bonus).min(self.r_max)
            }
        }
    }

    pub fn record_sample(&mut self, arm: usize, gap: u64, reward: f64) -> Result<()> {
        if gap == 0 {
            return Err(Error::arg("samples need a gap of at least 1"));
        }
        if !(0.0..=self.r_max).contains(&reward) {
            return Err(Error::arg(format!(
                "reward {reward} outside [0, {}]",
                self.r_max
            )));
        }
        let s = self.stats.entry((arm, gap)).or_default();
        s.n += 1;
        s.mean += (reward - s.mean) / s.n as f64;
        Ok(())
    }

    pub fn total_samples(&self) -> u64 {
        self.stats.values().map(|s| s.n).sum()
    }

    /// Every `(arm, gap)` pair with at least one sample.
    pub fn tracked(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.stats
            .iter()
            .filter(|(_, s)| s.n > 0)
            .map(|(&key, _)| key)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Knapsack over `D[a]` with budget `k'`, then R-S in `D[a]`.
    Basic,
    /// Exact knapsack over each chain `{1} ∪ {(2a-1)·2^l}`, `a ≤ 3`, with
    /// budget `k`; the best chain is scheduled.
    Refined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseConfig {
    pub phi: u64,
    /// Knapsack accuracy; zero requests an exact solve.
    pub epsilon: f64,
    pub a: u64,
    pub k_prime: f64,
    pub variant: Variant,
    pub bonus_scale: f64,
}

impl PhaseConfig {
    /// Defaults: `a` maximizing `a/(a+1)·k/(k+a)`, `k' = k + 1`, exact
    /// knapsack and `phi = round(√(T/ln(k+1)))`.
    pub fn standard(k: usize, horizon: u64, variant: Variant) -> Result<Self> {
        let a = best_class(k as u64)?;
        let phi = ((horizon as f64) / ((k + 1) as f64).ln()).sqrt().round() as u64;
        Ok(Self {
            phi: phi.max(2),
            epsilon: 0.0,
            a,
            k_prime: (k + 1) as f64,
            variant,
            bonus_scale: 1.0,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.phi < 2 {
            return Err(Error::arg(format!(
                "phase length {} must be at least 2",
                self.phi
            )));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::arg(format!(
                "epsilon {} outside [0, 1]",
                self.epsilon
            )));
        }
        if self.a == 0 {
            return Err(Error::arg("class parameter a must be at least 1"));
        }
        Ok(())
    }

    /// Candidate periods of the basic learner: members `d` of `D[a]` with
    /// `2d <= phi`.
    pub fn basic_candidates(&self) -> Vec<u64> {
        PeriodClass { a: self.a }.members_up_to(self.phi / 2)
    }
}

/// A planned phase: the policy, the class it was scheduled in and its
/// optimistic long-run value.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePlan {
    pub policy: PurelyPeriodicPolicy,
    pub a: u64,
    pub knapsack_value: f64,
    pub planned_value: f64,
}

fn optimistic_value(table: &UcbTable, policy: &PurelyPeriodicPolicy) -> f64 {
    policy
        .entries
        .iter()
        .enumerate()
        .filter_map(|(arm, e)| e.d.map(|d| table.ucb(arm, d) / d as f64))
        .sum()
}

fn ucb_items(table: &UcbTable, n_arms: usize, periods: &[u64]) -> Vec<CandidateItem> {
    (0..n_arms)
        .flat_map(|arm| {
            periods
                .iter()
                .map(move |&d| CandidateItem::new(arm, d, table.ucb(arm, d)))
        })
        .collect()
}

/// Basic phase planning: knapsack over `D[a]` capped at `phi/2`, then the
/// chosen periods are scheduled as they are (they already lie in `D[a]`).
pub fn plan_phase(
    table: &UcbTable,
    config: &PhaseConfig,
    n_arms: usize,
    k: usize,
) -> Result<PhasePlan> {
    config.validate()?;
    let items = ucb_items(table, n_arms, &config.basic_candidates());
    let solution = if config.epsilon > 0.0 {
        solve_fptas(&items, config.k_prime, config.epsilon)?
    } else {
        solve_exact(&items, config.k_prime)?
    };
    let periods = solution.periods(n_arms);
    let policy = schedule_periods(&periods, k, |arm, d| table.ucb(arm, d))?;
    Ok(PhasePlan {
        planned_value: optimistic_value(table, &policy),
        policy,
        a: config.a,
        knapsack_value: solution.value,
    })
}

/// Refined phase planning: exact knapsack with budget `k` in each chain
/// `{1} ∪ {(2a-1)·2^l <= phi/2}` for `a ≤ 3`; the best chain wins, ties to
/// the smaller `a`.
pub fn plan_phase_refined(
    table: &UcbTable,
    phi: u64,
    n_arms: usize,
    k: usize,
) -> Result<PhasePlan> {
    if phi < 2 {
        return Err(Error::arg(format!("phase length {phi} must be at least 2")));
    }
    let mut best: Option<(u64, crate::knapsack::KnapsackSolution)> = None;
    for a in REFINED_CLASSES {
        let items = ucb_items(table, n_arms, &single_class_members(a, phi / 2));
        let sol = solve_exact_pow2(&items, k as f64)?;
        if best.as_ref().is_none_or(|(_, b)| sol.value > b.value) {
            best = Some((a, sol));
        }
    }
    let (a, solution) = best.expect("three classes");
    let periods = solution.periods(n_arms);
    let policy = schedule_periods(&periods, k, |arm, d| table.ucb(arm, d))?;
    Ok(PhasePlan {
        planned_value: optimistic_value(table, &policy),
        policy,
        a,
        knapsack_value: solution.value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerParams {
    pub horizon: u64,
    pub k: usize,
    pub phase: PhaseConfig,
    pub seed: u64,
    pub noise: Noise,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRecord {
    pub index: usize,
    /// First step of the phase.
    pub start: u64,
    pub length: u64,
    pub a: u64,
    pub planned_value: f64,
    pub realized_reward: f64,
    pub max_pulls: usize,
    /// Cumulative reward so far over `ub·t`.
    pub cumulative_ratio: f64,
    pub policy: PurelyPeriodicPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerReport {
    pub cumulative_reward: f64,
    pub ub: f64,
    /// `cumulative_reward / (ub·T)`.
    pub ratio: f64,
    pub total_pulls: u64,
    pub phases: Vec<PhaseRecord>,
    pub table: UcbTable,
}

pub fn run_learner(instance: &RecoveryInstance, params: &LearnerParams) -> Result<LearnerReport> {
    run_learner_observed(instance, params, |_, _| {})
}

/// Runs the learner and calls `observe` with every finished phase and the
/// table as it stands at the end of that phase.
pub fn run_learner_observed(
    instance: &RecoveryInstance,
    params: &LearnerParams,
    mut observe: impl FnMut(&PhaseRecord, &UcbTable),
) -> Result<LearnerReport> {
    if params.horizon == 0 {
        return Err(Error::arg("horizon must be at least 1"));
    }
    instance.ensure_valid()?;
    params.phase.validate()?;
    let n = instance.n_arms();
    let k = params.k;
    let ub = ub_value(instance, k)?;
    let mut table =
        UcbTable::new(instance.r_max, k, params.horizon).with_bonus_scale(params.phase.bonus_scale);
    let mut env = Environment::new(instance, k, params.seed, params.noise);
    let mut cumulative = 0.0;
    let mut total_pulls = 0u64;
    let mut phases = Vec::new();
    let mut start = 0u64;
    let mut pulled = Vec::with_capacity(k);
    while start < params.horizon {
        let length = params.phase.phi.min(params.horizon - start);
        let plan = match params.phase.variant {
            Variant::Basic => plan_phase(&table, &params.phase, n, k)?,
            Variant::Refined => plan_phase_refined(&table, params.phase.phi, n, k)?,
        };
        let mut realized = 0.0;
        let mut max_pulls = 0;
        for s in 1..=length {
            pulled.clear();
            pulled.extend(plan.policy.pulled_at(s));
            max_pulls = max_pulls.max(pulled.len());
            for pull in env.step(&pulled)? {
                table.record_sample(pull.arm, pull.gap, pull.reward)?;
                realized += pull.reward;
                total_pulls += 1;
            }
        }
        cumulative += realized;
        start += length;
        let record = PhaseRecord {
            index: phases.len(),
            start: start - length + 1,
            length,
            a: plan.a,
            planned_value: plan.planned_value,
            realized_reward: realized,
            max_pulls,
            cumulative_ratio: crate::scheduler::ratio(cumulative, ub * start as f64),
            policy: plan.policy,
        };
        observe(&record, &table);
        phases.push(record);
    }
    Ok(LearnerReport {
        cumulative_reward: cumulative,
        ub,
        ratio: crate::scheduler::ratio(cumulative, ub * params.horizon as f64),
        total_pulls,
        phases,
        table,
    })
}
