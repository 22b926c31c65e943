//! Seeded environment, greedy baseline, exact finite-horizon optimum for tiny
//! instances, adversarial fixtures and the experiment harness.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{
    generate_random_instance, parse_instance, reward_bound_for, ArmCurve, RecoveryInstance,
    DEFAULT_DMAX_CAP,
};
use crate::online::{run_learner, LearnerParams, PhaseConfig, Variant};
use crate::relaxation::ub_value;
use crate::scheduler::{offline_plan, offline_plan_refined, ratio, PurelyPeriodicPolicy};

/// How realized rewards scatter around the mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Noise {
    /// Symmetric triangular on `[0, 2R]` with mode `R`.
    #[default]
    Triangular,
    /// The mean itself.
    None,
}

/// Inverse CDF of the symmetric triangular distribution on `[0, 2m]`.
pub fn triangular_inverse_cdf(mean: f64, u: f64) -> f64 {
    if u < 0.5 {
        mean * (2.0 * u).sqrt()
    } else {
        2.0 * mean - mean * (2.0 * (1.0 - u)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pull {
    pub arm: usize,
    pub gap: u64,
    pub reward: f64,
}

/// The world the policies act in. Every arm counts as last pulled at time 0.
#[derive(Debug, Clone)]
pub struct Environment<'a> {
    instance: &'a RecoveryInstance,
    last_pull: Vec<u64>,
    now: u64,
    budget: usize,
    noise: Noise,
    rng: ChaCha8Rng,
    pulled_flags: Vec<bool>,
}

impl<'a> Environment<'a> {
    pub fn new(instance: &'a RecoveryInstance, budget: usize, seed: u64, noise: Noise) -> Self {
        Self {
            instance,
            last_pull: vec![0; instance.n_arms()],
            now: 0,
            budget,
            noise,
            rng: ChaCha8Rng::seed_from_u64(seed),
            pulled_flags: vec![false; instance.n_arms()],
        }
    }

    /// Number of completed steps.
    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn last_pull(&self, arm: usize) -> u64 {
        self.last_pull[arm]
    }

    /// Pulls `arms` at time `now + 1` and advances the clock.
    pub fn step(&mut self, arms: &[usize]) -> Result<Vec<Pull>> {
        let time = self.now + 1;
        if arms.len() > self.budget {
            return Err(Error::BudgetExceeded {
                time,
                pulled: arms.len(),
                budget: self.budget,
            });
        }
        for &arm in arms {
            if arm >= self.last_pull.len() {
                return Err(Error::ArmOutOfRange {
                    index: arm,
                    len: self.last_pull.len(),
                });
            }
            if std::mem::replace(&mut self.pulled_flags[arm], true) {
                for &a in arms {
                    self.pulled_flags[a] = false;
                }
                return Err(Error::arg(format!("arm {arm} pulled twice at t={time}")));
            }
        }
        let mut out = Vec::with_capacity(arms.len());
        for &arm in arms {
            self.pulled_flags[arm] = false;
            let gap = time - self.last_pull[arm];
            debug_assert!(gap >= 1);
            let mean = self.instance.arms[arm].mean(gap);
            // One uniform per pull keeps the stream aligned across noise modes.
            let u: f64 = self.rng.gen();
            let reward = match self.noise {
                Noise::Triangular => triangular_inverse_cdf(mean, u),
                Noise::None => mean,
            };
            self.last_pull[arm] = time;
            out.push(Pull { arm, gap, reward });
        }
        self.now = time;
        Ok(out)
    }
}

/// Arms pulled at each step `1..=T`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct Schedule {
    pub steps: Vec<Vec<usize>>,
}

impl Schedule {
    pub fn horizon(&self) -> u64 {
        self.steps.len() as u64
    }

    /// Follows a periodic policy for `horizon` steps.
    pub fn from_policy(policy: &PurelyPeriodicPolicy, horizon: u64) -> Self {
        Self {
            steps: (1..=horizon)
                .map(|t| policy.pulled_at(t).collect())
                .collect(),
        }
    }

    /// Expected total reward, with every arm last pulled at time 0.
    pub fn expected_total(&self, instance: &RecoveryInstance) -> Result<f64> {
        let mut last = vec![0u64; instance.n_arms()];
        let mut total = 0.0;
        for (idx, arms) in self.steps.iter().enumerate() {
            let t = idx as u64 + 1;
            for &arm in arms {
                let curve = instance.arm(arm)?;
                total += curve.mean(t - last[arm]);
                last[arm] = t;
            }
        }
        Ok(total)
    }

    pub fn max_pulls_per_step(&self) -> usize {
        self.steps.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Runs a schedule against the stochastic environment and returns the
/// realized total.
pub fn simulate_schedule(
    instance: &RecoveryInstance,
    schedule: &Schedule,
    budget: usize,
    seed: u64,
    noise: Noise,
) -> Result<f64> {
    let mut env = Environment::new(instance, budget, seed, noise);
    let mut total = 0.0;
    for arms in &schedule.steps {
        total += env.step(arms)?.iter().map(|p| p.reward).sum::<f64>();
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreedyRun {
    pub schedule: Schedule,
    pub total: f64,
}

/// Pulls the `k` arms with the highest current mean at every step, ties to
/// the lower index; the total is the expected reward.
pub fn greedy_policy(instance: &RecoveryInstance, k: usize, horizon: u64) -> Result<GreedyRun> {
    let n = instance.n_arms();
    if k > n {
        return Err(Error::arg(format!("budget k={k} exceeds {n} arms")));
    }
    let mut last = vec![0u64; n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut steps = Vec::with_capacity(horizon as usize);
    let mut total = 0.0;
    for t in 1..=horizon {
        let means: Vec<f64> = (0..n).map(|i| instance.arms[i].mean(t - last[i])).collect();
        order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(a.cmp(&b)));
        let mut chosen: Vec<usize> = order[..k].to_vec();
        chosen.sort_unstable();
        for &arm in &chosen {
            total += means[arm];
            last[arm] = t;
        }
        steps.push(chosen);
    }
    Ok(GreedyRun {
        schedule: Schedule { steps },
        total,
    })
}

/// Largest number of (time, state, action) triples the exact optimum explores.
pub const MAX_OPT_WORK: u128 = 20_000_000;

/// Optimal expected total over `horizon` steps by dynamic programming over
/// the per-arm gaps, each capped at its curve length.
pub fn brute_force_opt(instance: &RecoveryInstance, k: usize, horizon: u64) -> Result<f64> {
    let n = instance.n_arms();
    if k == 0 || k > n {
        return Err(Error::arg(format!("budget k={k} outside 1..={n}")));
    }
    let caps: Vec<u64> = instance
        .arms
        .iter()
        .map(|a| a.d_max().max(1) as u64)
        .collect();
    let states = caps.iter().map(|&c| c as u128).product::<u128>();
    let actions: u128 = (0..=k as u32).map(|j| binomial(n as u32, j)).sum();
    let work = states
        .saturating_mul(actions)
        .saturating_mul(horizon as u128);
    if n > 16 || work > MAX_OPT_WORK {
        return Err(Error::Capacity(format!(
            "exact optimum needs about {work} transitions, above {MAX_OPT_WORK}"
        )));
    }
    let subsets: Vec<u32> = (0u32..1 << n)
        .filter(|s| s.count_ones() as usize <= k)
        .collect();

    // State: gap each arm would have if pulled at the next step.
    let mut frontier: HashMap<Vec<u64>, f64> = HashMap::new();
    frontier.insert(caps.iter().map(|&c| 1.min(c)).collect(), 0.0);
    for _ in 0..horizon {
        let mut next: HashMap<Vec<u64>, f64> = HashMap::with_capacity(frontier.len());
        for (state, value) in &frontier {
            for &mask in &subsets {
                let mut gained = 0.0;
                let mut succ = Vec::with_capacity(n);
                for i in 0..n {
                    if mask & (1 << i) != 0 {
                        gained += instance.arms[i].mean(state[i]);
                        succ.push(1);
                    } else {
                        succ.push((state[i] + 1).min(caps[i]));
                    }
                }
                let v = value + gained;
                let slot = next.entry(succ).or_insert(f64::NEG_INFINITY);
                if v > *slot {
                    *slot = v;
                }
            }
        }
        frontier = next;
    }
    Ok(frontier.into_values().fold(0.0, f64::max))
}

fn binomial(n: u32, k: u32) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Adversarial instances with known optimal values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureKind {
    /// Small constant arms plus a few prime-periodic big arms.
    Theorem2,
    /// Two arms on which single-chain policies lose half the bound.
    HalfRatio,
}

/// A fixture instance with its budget and the closed-form relaxation bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub instance: RecoveryInstance,
    pub k: usize,
    pub ub: f64,
}

pub fn tightness_fixture(kind: FixtureKind, param: u64) -> Result<Fixture> {
    match kind {
        FixtureKind::Theorem2 => theorem2_fixture(param),
        FixtureKind::HalfRatio => half_ratio_fixture(param),
    }
}

fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

/// The `count` smallest primes that are at least `from`.
pub fn primes_from(from: u64, count: usize) -> Vec<u64> {
    (from.max(2)..)
        .filter(|&p| is_prime(p))
        .take(count)
        .collect()
}

fn indicator_curve(p: u64) -> ArmCurve {
    let mut rewards = vec![0.0; p as usize];
    rewards[p as usize - 1] = p as f64;
    ArmCurve::new(rewards)
}

fn theorem2_fixture(k: u64) -> Result<Fixture> {
    if k < 2 {
        return Err(Error::arg("theorem2 fixture needs K >= 2"));
    }
    let kf = k as f64;
    let small = 1.0 / (kf * kf.ln()).sqrt();
    let big_count = (kf / kf.ln()).sqrt().floor() as usize;
    let primes = primes_from(big_count as u64, big_count);
    let mut arms: Vec<ArmCurve> = (0..k - 1).map(|_| ArmCurve::constant(small)).collect();
    arms.extend(primes.iter().map(|&p| indicator_curve(p)));
    let max = primes.last().map_or(small, |&p| p as f64);
    let instance = RecoveryInstance::new(arms, reward_bound_for(max)).with_default_k(k as usize);
    Ok(Fixture {
        instance,
        k: k as usize,
        ub: (kf - 1.0) * small + big_count as f64,
    })
}

fn half_ratio_fixture(ell: u64) -> Result<Fixture> {
    if ell > 20 {
        return Err(Error::arg(format!("half_ratio exponent {ell} too large")));
    }
    let p = (1u64 << ell) + 1;
    let arms = vec![ArmCurve::constant(1.0), indicator_curve(p)];
    let instance = RecoveryInstance::new(arms, reward_bound_for(p as f64)).with_default_k(1);
    Ok(Fixture {
        instance,
        k: 1,
        ub: 2.0 - 1.0 / p as f64,
    })
}

/// Arm 0 is constant at `r`; arm 1 yields 1 right after a pull and `big`
/// after any longer rest. Greedy keeps pulling arm 1 for reward 1 per step.
pub fn greedy_trap(r: f64, big: f64) -> RecoveryInstance {
    let arms = vec![ArmCurve::constant(r), ArmCurve::new(vec![1.0, big])];
    RecoveryInstance::new(arms, reward_bound_for(big.max(r))).with_default_k(1)
}

/// Alternates arm 0 on odd steps and arm 1 on even steps.
pub fn alternating_schedule(horizon: u64) -> Schedule {
    Schedule {
        steps: (1..=horizon)
            .map(|t| vec![((t + 1) % 2) as usize])
            .collect(),
    }
}

/// Policies the harness can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Offline,
    Refined,
    Greedy,
    OnlineBasic,
    OnlineRefined,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Offline => "offline",
            PolicyKind::Refined => "refined",
            PolicyKind::Greedy => "greedy",
            PolicyKind::OnlineBasic => "online_basic",
            PolicyKind::OnlineRefined => "online_refined",
        }
    }

    fn is_online(self) -> bool {
        matches!(self, PolicyKind::OnlineBasic | PolicyKind::OnlineRefined)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSource {
    Generate {
        count: usize,
        n: usize,
        seed: u64,
        #[serde(default = "default_dmax_cap")]
        dmax_cap: usize,
    },
    Files(Vec<PathBuf>),
}

fn default_dmax_cap() -> usize {
    DEFAULT_DMAX_CAP
}

fn default_trials() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instances: InstanceSource,
    pub k_values: Vec<usize>,
    pub policies: Vec<PolicyKind>,
    pub horizon: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Phase lengths for the online policies; empty means the default.
    #[serde(default)]
    pub phi: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::arg("trials must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(Error::arg("horizon must be at least 1"));
        }
        if self.k_values.is_empty() || self.k_values.contains(&0) {
            return Err(Error::arg("k_values must be non-empty and positive"));
        }
        if self.policies.is_empty() {
            return Err(Error::arg("policies must be non-empty"));
        }
        if self.phi.iter().any(|&p| p < 2) {
            return Err(Error::arg("every phase length must be at least 2"));
        }
        if let InstanceSource::Generate {
            count, n, dmax_cap, ..
        } = self.instances
        {
            if count == 0 || n == 0 || dmax_cap == 0 {
                return Err(Error::arg(
                    "generated instances need count, n and dmax_cap >= 1",
                ));
            }
        }
        Ok(())
    }

    pub fn load_instances(&self) -> Result<Vec<RecoveryInstance>> {
        match &self.instances {
            InstanceSource::Generate {
                count,
                n,
                seed,
                dmax_cap,
            } => (0..*count as u64)
                .map(|i| generate_random_instance(*n, seed.wrapping_add(i), *dmax_cap))
                .collect(),
            InstanceSource::Files(paths) => paths.iter().map(|p| read_instance(p)).collect(),
        }
    }
}

pub fn read_instance(path: &Path) -> Result<RecoveryInstance> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_instance(&bytes)
}

pub fn parse_experiment_config(bytes: &[u8]) -> Result<ExperimentConfig> {
    let config: ExperimentConfig =
        serde_json::from_slice(bytes).map_err(|e| Error::from_json(&e))?;
    config.validate()?;
    Ok(config)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub instance_id: usize,
    pub n: usize,
    pub k: usize,
    pub policy: &'static str,
    pub phi: Option<u64>,
    pub trial_mean_ratio: f64,
    pub trial_std: f64,
    pub runtime_ms: f64,
}

struct Cell {
    instance_id: usize,
    k: usize,
    policy: PolicyKind,
    phi: Option<u64>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Seed for one online trial, distinct across cells and trials.
fn trial_seed(base: u64, instance_id: usize, k: usize, trial: usize) -> u64 {
    base ^ (instance_id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (k as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ (trial as u64).wrapping_mul(0x1656_67B1_9E37_79F9)
}

fn run_cell(
    config: &ExperimentConfig,
    instance: &RecoveryInstance,
    cell: &Cell,
) -> Result<ExperimentRow> {
    let start = Instant::now();
    let k = cell.k;
    let ratios: Vec<f64> = match cell.policy {
        PolicyKind::Offline => vec![offline_plan(instance, k)?.ratio()],
        PolicyKind::Refined => vec![offline_plan_refined(instance, k)?.ratio()],
        PolicyKind::Greedy => {
            let ub = ub_value(instance, k)?;
            let run = greedy_policy(instance, k, config.horizon)?;
            vec![ratio(run.total, ub * config.horizon as f64)]
        }
        PolicyKind::OnlineBasic | PolicyKind::OnlineRefined => {
            let variant = if cell.policy == PolicyKind::OnlineBasic {
                Variant::Basic
            } else {
                Variant::Refined
            };
            let mut phase = PhaseConfig::standard(k, config.horizon, variant)?;
            if let Some(phi) = cell.phi {
                phase.phi = phi;
            }
            (0..config.trials)
                .into_par_iter()
                .map(|trial| {
                    let params = LearnerParams {
                        horizon: config.horizon,
                        k,
                        phase,
                        seed: trial_seed(config.seed, cell.instance_id, k, trial),
                        noise: Noise::Triangular,
                    };
                    Ok(run_learner(instance, &params)?.ratio)
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let (mean, std) = mean_std(&ratios);
    Ok(ExperimentRow {
        instance_id: cell.instance_id,
        n: instance.n_arms(),
        k,
        policy: cell.policy.name(),
        phi: cell.phi,
        trial_mean_ratio: mean,
        trial_std: std,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Evaluates every (instance, k, policy, phase length) cell in parallel and
/// returns rows sorted by those keys.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    config.validate()?;
    let instances = config.load_instances()?;
    for (id, inst) in instances.iter().enumerate() {
        inst.ensure_valid()?;
        if let Some(&k) = config.k_values.iter().find(|&&k| k > inst.n_arms()) {
            return Err(Error::arg(format!(
                "k={k} exceeds the {} arms of instance {id}",
                inst.n_arms()
            )));
        }
    }
    let mut cells = Vec::new();
    for instance_id in 0..instances.len() {
        for &k in &config.k_values {
            for &policy in &config.policies {
                if policy.is_online() && !config.phi.is_empty() {
                    for &phi in &config.phi {
                        cells.push(Cell {
                            instance_id,
                            k,
                            policy,
                            phi: Some(phi),
                        });
                    }
                } else {
                    cells.push(Cell {
                        instance_id,
                        k,
                        policy,
                        phi: None,
                    });
                }
            }
        }
    }
    let mut rows = cells
        .par_iter()
        .map(|cell| run_cell(config, &instances[cell.instance_id], cell))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        (a.instance_id, a.k, a.policy, a.phi).cmp(&(b.instance_id, b.k, b.policy, b.phi))
    });
    Ok(rows)
}

#[derive(Serialize)]
struct CsvRow<'a> {
    instance_id: usize,
    n: usize,
    k: usize,
    policy: &'a str,
    phi: Option<u64>,
    trial_mean_ratio: f64,
    trial_std: f64,
    runtime_ms: f64,
}

pub fn write_rows_csv<W: std::io::Write>(rows: &[ExperimentRow], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for r in rows {
        writer.serialize(CsvRow {
            instance_id: r.instance_id,
            n: r.n,
            k: r.k,
            policy: r.policy,
            phi: r.phi,
            trial_mean_ratio: r.trial_mean_ratio,
            trial_std: r.trial_std,
            runtime_ms: r.runtime_ms,
        })?;
    }
    writer.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_mean_gives_zero_reward() {
        let inst = RecoveryInstance::new(vec![ArmCurve::new(vec![0.0, 1.0])], 100.0);
        let mut env = Environment::new(&inst, 1, 3, Noise::Triangular);
        let pulls = env.step(&[0]).unwrap();
        assert_eq!(
            pulls[0],
            Pull {
                arm: 0,
                gap: 1,
                reward: 0.0
            }
        );
        let pulls = env.step(&[0]).unwrap();
        assert_eq!(pulls[0].gap, 1);
    }

    #[test]
    fn environment_rejects_bad_pulls() {
        let inst = RecoveryInstance::new(vec![ArmCurve::constant(1.0); 3], 100.0);
        let mut env = Environment::new(&inst, 1, 0, Noise::None);
        assert!(matches!(
            env.step(&[0, 1]),
            Err(Error::BudgetExceeded { .. })
        ));
        assert!(matches!(env.step(&[5]), Err(Error::ArmOutOfRange { .. })));
        let mut env = Environment::new(&inst, 2, 0, Noise::None);
        assert!(env.step(&[1, 1]).is_err());
        assert_eq!(env.step(&[1, 2]).unwrap().len(), 2);
        assert_eq!(env.now(), 1);
    }

    #[test]
    fn triangular_inverse_cdf_endpoints() {
        assert_eq!(triangular_inverse_cdf(2.0, 0.0), 0.0);
        assert_eq!(triangular_inverse_cdf(2.0, 0.5), 2.0);
        assert!((triangular_inverse_cdf(2.0, 1.0 - 1e-16) - 4.0).abs() < 1e-6);
    }

    #[test]
    fn greedy_trap_totals() {
        let inst = greedy_trap(0.1, 100.0);
        let run = greedy_policy(&inst, 1, 1000).unwrap();
        assert_eq!(run.total, 1000.0);
        assert!(run.schedule.steps.iter().all(|s| s == &vec![1]));
        let alt = alternating_schedule(1000).expected_total(&inst).unwrap();
        assert!((alt - 50_050.0).abs() < 1e-6);
    }

    #[test]
    fn single_arm_greedy_pulls_every_step() {
        let inst = RecoveryInstance::new(vec![ArmCurve::new(vec![1.0, 2.0])], 100.0);
        let run = greedy_policy(&inst, 1, 5).unwrap();
        assert_eq!(run.total, 5.0);
    }

    #[test]
    fn brute_force_opt_examples() {
        let inst = RecoveryInstance::new(vec![ArmCurve::constant(0.7)], 100.0);
        assert!((brute_force_opt(&inst, 1, 5).unwrap() - 3.5).abs() < 1e-12);
        // Periods 2 and 3 cannot both be kept with one pull per step; the DP
        // must find the best free-form interleaving.
        let inst = RecoveryInstance::new(
            vec![
                ArmCurve::new(vec![0.0, 2.0]),
                ArmCurve::new(vec![0.0, 0.0, 3.0]),
            ],
            100.0,
        );
        let opt = brute_force_opt(&inst, 1, 6).unwrap();
        let mut best = 0.0f64;
        for code in 0..3u32.pow(6) {
            let mut c = code;
            let steps: Vec<Vec<usize>> = (0..6)
                .map(|_| {
                    let s = c % 3;
                    c /= 3;
                    if s == 2 {
                        vec![]
                    } else {
                        vec![s as usize]
                    }
                })
                .collect();
            best = best.max(Schedule { steps }.expected_total(&inst).unwrap());
        }
        assert_eq!(opt, best);
        assert_eq!(opt, 10.0);
    }

    #[test]
    fn fixtures() {
        let f = tightness_fixture(FixtureKind::HalfRatio, 5).unwrap();
        assert_eq!(f.instance.n_arms(), 2);
        assert_eq!(f.instance.arms[1].rewards.len(), 33);
        let f = tightness_fixture(FixtureKind::Theorem2, 25).unwrap();
        assert_eq!(f.instance.n_arms(), 26);
        assert_eq!(f.instance.arms[24].rewards, vec![0.0, 2.0]);
        assert_eq!(primes_from(4, 3), vec![5, 7, 11]);
        assert!(tightness_fixture(FixtureKind::Theorem2, 1).is_err());
    }

    #[test]
    fn experiment_config_parsing() {
        let cfg = parse_experiment_config(
            br#"{"instances":{"generate":{"count":2,"n":4,"seed":1}},
                 "k_values":[1,2],"policies":["offline","greedy"],"horizon":50}"#,
        )
        .unwrap();
        assert_eq!(cfg.trials, 1);
        let rows = run_experiment(&cfg).unwrap();
        assert_eq!(rows.len(), 8);
        let mut buf = Vec::new();
        write_rows_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(
            text.starts_with("instance_id,n,k,policy,phi,trial_mean_ratio,trial_std,runtime_ms\n")
        );
        assert!(
            text.lines().nth(1).unwrap().starts_with("0,4,1,greedy,,"),
            "{text}"
        );
        assert!(text.lines().nth(2).unwrap().starts_with("0,4,1,offline,,"));
        assert!(matches!(
            parse_experiment_config(br#"{"k_values":[1]}"#),
            Err(Error::Parse { .. })
        ));
        assert!(parse_experiment_config(
            br#"{"instances":{"files":[]},"k_values":[1],"policies":["greedy"],"horizon":5,"trials":0}"#
        )
        .is_err());
    }
}
