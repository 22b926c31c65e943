//! Recovery-reward problem instances.
//!
//! An instance holds one recovery curve per arm. A curve stores the mean
//! reward `R(d)` for gaps `d = 1..=d_max`; `R(0) = 0` is implicit and every
//! gap beyond `d_max` sees the plateau value `R(d_max)`. All arms are treated
//! as last pulled at time 0.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the sampled recovery horizon of generated arms.
pub const DEFAULT_DMAX_CAP: usize = 25;

/// Mean rewards of one arm indexed by gap `1..=d_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmCurve {
    pub rewards: Vec<f64>,
}

impl ArmCurve {
    pub fn new(rewards: Vec<f64>) -> Self {
        Self { rewards }
    }

    /// A curve with the same reward at every gap.
    pub fn constant(value: f64) -> Self {
        Self {
            rewards: vec![value],
        }
    }

    pub fn d_max(&self) -> usize {
        self.rewards.len()
    }

    /// Mean reward for a pull `gap` periods after the previous one.
    pub fn mean(&self, gap: u64) -> f64 {
        if gap == 0 || self.rewards.is_empty() {
            return 0.0;
        }
        let idx = (gap as usize).min(self.rewards.len());
        self.rewards[idx - 1]
    }

    /// The plateau value `R(d_max)`.
    pub fn plateau(&self) -> f64 {
        self.rewards.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoveryInstance {
    pub r_max: f64,
    pub arms: Vec<ArmCurve>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_k: Option<usize>,
}

impl RecoveryInstance {
    pub fn new(arms: Vec<ArmCurve>, r_max: f64) -> Self {
        Self {
            r_max,
            arms,
            default_k: None,
        }
    }

    pub fn with_default_k(mut self, k: usize) -> Self {
        self.default_k = Some(k);
        self
    }

    pub fn n_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn arm(&self, index: usize) -> Result<&ArmCurve> {
        self.arms.get(index).ok_or(Error::ArmOutOfRange {
            index,
            len: self.arms.len(),
        })
    }

    pub fn mean_reward(&self, arm: usize, gap: u64) -> Result<f64> {
        Ok(self.arm(arm)?.mean(gap))
    }

    /// Largest `R(d)` over all arms and gaps.
    pub fn max_mean(&self) -> f64 {
        self.arms
            .iter()
            .flat_map(|c| c.rewards.iter().copied())
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if !(self.r_max.is_finite() && self.r_max > 0.0) {
            violations.push(Violation::new(
                None,
                None,
                ViolationKind::BadRewardBound(self.r_max),
            ));
        }
        if self.arms.is_empty() {
            violations.push(Violation::new(None, None, ViolationKind::NoArms));
        }
        if let Some(k) = self.default_k {
            if k == 0 || k > self.arms.len() {
                violations.push(Violation::new(None, None, ViolationKind::BadBudget(k)));
            }
        }
        for (i, curve) in self.arms.iter().enumerate() {
            if curve.rewards.is_empty() {
                violations.push(Violation::new(Some(i), None, ViolationKind::EmptyCurve));
                continue;
            }
            for (j, &r) in curve.rewards.iter().enumerate() {
                let d = j + 1;
                if !r.is_finite() {
                    violations.push(Violation::new(Some(i), Some(d), ViolationKind::NotFinite));
                    continue;
                }
                if r < 0.0 {
                    violations.push(Violation::new(Some(i), Some(d), ViolationKind::Negative));
                }
                if self.r_max.is_finite() && r > self.r_max {
                    violations.push(Violation::new(
                        Some(i),
                        Some(d),
                        ViolationKind::ExceedsBound,
                    ));
                }
                if j > 0 && curve.rewards[j - 1].is_finite() && r < curve.rewards[j - 1] {
                    violations.push(Violation::new(Some(i), Some(d), ViolationKind::Decreasing));
                }
            }
        }
        ValidationReport { violations }
    }

    /// Fails with [`Error::Validation`] unless every invariant holds.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_ok() {
            Ok(())
        } else {
            Err(Error::Validation(report))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ViolationKind {
    NoArms,
    BadRewardBound(f64),
    BadBudget(usize),
    EmptyCurve,
    NotFinite,
    Negative,
    ExceedsBound,
    Decreasing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub arm: Option<usize>,
    pub gap: Option<usize>,
    pub kind: ViolationKind,
}

impl Violation {
    fn new(arm: Option<usize>, gap: Option<usize>, kind: ViolationKind) -> Self {
        Self { arm, gap, kind }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arm = self.arm.unwrap_or(0);
        let d = self.gap.unwrap_or(0);
        match self.kind {
            ViolationKind::NoArms => write!(f, "instance has no arms"),
            ViolationKind::BadRewardBound(r) => {
                write!(f, "r_max must be positive and finite, got {r}")
            }
            ViolationKind::BadBudget(k) => write!(f, "default k={k} outside 1..=N"),
            ViolationKind::EmptyCurve => write!(f, "arm {arm} has an empty reward curve"),
            ViolationKind::NotFinite => write!(f, "arm {arm} has a non-finite reward at d={d}"),
            ViolationKind::Negative => write!(f, "arm {arm} has a negative reward at d={d}"),
            ViolationKind::ExceedsBound => write!(f, "arm {arm} exceeds r_max at d={d}"),
            ViolationKind::Decreasing => write!(f, "arm {arm} not non-decreasing at d={d}"),
        }
    }
}

/// Every invariant violation found in an instance.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(ToString::to_string).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        write!(f, "{}", self.messages().join("; "))
    }
}

/// Smallest multiple of 100 that bounds every triangular reward sample, i.e.
/// every value up to twice the largest mean.
pub fn reward_bound_for(max_mean: f64) -> f64 {
    let steps = (max_mean / 50.0).ceil().max(1.0);
    100.0 * steps
}

/// Draws a random instance: per arm a horizon `d_max ~ U{1..dmax_cap}`,
/// sorted uniforms `u_1 <= .. <= u_dmax`, a scale `a = |Logistic(0, 1)|`,
/// and rewards `R(d) = (1 + a) u_d`.
pub fn generate_random_instance(n: usize, seed: u64, dmax_cap: usize) -> Result<RecoveryInstance> {
    if n == 0 {
        return Err(Error::arg("number of arms must be at least 1"));
    }
    if dmax_cap == 0 {
        return Err(Error::arg("dmax_cap must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let arms: Vec<ArmCurve> = (0..n)
        .map(|_| {
            let d_max = rng.gen_range(1..=dmax_cap);
            let mut u: Vec<f64> = (0..d_max).map(|_| rng.gen::<f64>()).collect();
            u.sort_by(f64::total_cmp);
            let scale = 1.0 + logistic_abs(&mut rng);
            ArmCurve::new(u.into_iter().map(|v| scale * v).collect())
        })
        .collect();
    let mut inst = RecoveryInstance::new(arms, 1.0);
    inst.r_max = reward_bound_for(inst.max_mean());
    Ok(inst)
}

fn logistic_abs<R: Rng>(rng: &mut R) -> f64 {
    let u: f64 = loop {
        let u = rng.gen::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    (u / (1.0 - u)).ln().abs()
}

/// Decodes the JSON instance document and validates it.
pub fn parse_instance(bytes: &[u8]) -> Result<RecoveryInstance> {
    let inst: RecoveryInstance = serde_json::from_slice(bytes).map_err(|e| Error::from_json(&e))?;
    inst.ensure_valid()?;
    Ok(inst)
}

pub fn serialize_instance(instance: &RecoveryInstance) -> Vec<u8> {
    serde_json::to_vec_pretty(instance).expect("instance serialization is infallible")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(rewards: Vec<f64>, r_max: f64) -> RecoveryInstance {
        RecoveryInstance::new(vec![ArmCurve::new(rewards)], r_max)
    }

    #[test]
    fn monotone_curve_is_valid() {
        assert!(single(vec![1.0, 2.0, 3.0], 10.0).validate().is_ok());
    }

    #[test]
    fn decreasing_curve_reports_gap() {
        let report = single(vec![2.0, 1.0], 10.0).validate();
        assert_eq!(report.messages(), vec!["arm 0 not non-decreasing at d=2"]);
    }

    #[test]
    fn reward_above_bound_is_reported() {
        let report = single(vec![0.5], 0.4).validate();
        assert_eq!(report.messages(), vec!["arm 0 exceeds r_max at d=1"]);
    }

    #[test]
    fn mean_reward_plateau_and_zero_gap() {
        let inst = single(vec![1.0, 3.0], 10.0);
        assert_eq!(inst.mean_reward(0, 0).unwrap(), 0.0);
        assert_eq!(inst.mean_reward(0, 2).unwrap(), 3.0);
        assert_eq!(inst.mean_reward(0, 7).unwrap(), 3.0);
        assert!(matches!(
            inst.mean_reward(1, 1),
            Err(Error::ArmOutOfRange { .. })
        ));
    }

    #[test]
    fn generator_rejects_zero_arms() {
        assert!(matches!(
            generate_random_instance(0, 1, 25),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn generator_is_deterministic() {
        let a = generate_random_instance(5, 42, 25).unwrap();
        let b = generate_random_instance(5, 42, 25).unwrap();
        assert_eq!(a, b);
        let c = generate_random_instance(5, 43, 25).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn generated_curves_are_positive_monotone_and_bounded() {
        for seed in 0..50 {
            let inst = generate_random_instance(8, seed, 25).unwrap();
            assert!(inst.validate().is_ok(), "{}", inst.validate());
            for curve in &inst.arms {
                assert!((1..=25).contains(&curve.d_max()));
                assert!(curve.rewards.iter().all(|&r| r > 0.0));
                assert!(curve.rewards.windows(2).all(|w| w[0] <= w[1]));
                assert!(2.0 * inst.max_mean() <= inst.r_max);
                assert_eq!(inst.r_max % 100.0, 0.0);
            }
        }
    }

    #[test]
    fn generated_rewards_respect_logistic_scale() {
        // Replay the generator stream and check R(d) <= 1 + a per arm.
        let inst = generate_random_instance(6, 9, 25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for curve in &inst.arms {
            let d_max = rng.gen_range(1..=25usize);
            for _ in 0..d_max {
                let _: f64 = rng.gen();
            }
            let scale = 1.0 + logistic_abs(&mut rng);
            assert_eq!(curve.d_max(), d_max);
            assert!(curve.rewards.iter().all(|&r| r <= scale));
        }
    }

    #[test]
    fn round_trip_and_schema_errors() {
        let inst = generate_random_instance(4, 3, 10)
            .unwrap()
            .with_default_k(2);
        let bytes = serialize_instance(&inst);
        assert_eq!(parse_instance(&bytes).unwrap(), inst);

        let err = parse_instance(br#"{"r_max": 1.0}"#).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");

        let err =
            parse_instance(br#"{"r_max": 5.0, "arms": [{"rewards": [2.0, 1.0]}]}"#).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn reward_bound_rounds_to_hundreds() {
        assert_eq!(reward_bound_for(0.0), 100.0);
        assert_eq!(reward_bound_for(3.2), 100.0);
        assert_eq!(reward_bound_for(50.0), 100.0);
        assert_eq!(reward_bound_for(50.5), 200.0);
    }
}
