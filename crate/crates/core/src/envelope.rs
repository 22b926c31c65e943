//! Upper concave envelopes of recovery curves and the long-run average
//! reward functions they induce.
//!
//! The supporting points of a curve are the gaps where `R` touches its upper
//! concave envelope. Every gap at or beyond the plateau start `p` (the first
//! `d` with `R(d) = R(d_max)`) is also a supporting point; those all lie on
//! the line through the origin with slope `R(p)`, so [`SupportSet`] stores the
//! sequence only up to `p` and answers queries about the tail analytically.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::ArmCurve;

const EXACT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportPoint {
    pub d: u64,
    pub r: f64,
}

/// Supporting points `d(1) < d(2) < ... < p` with their rewards.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportSet {
    pub points: Vec<SupportPoint>,
}

/// Position of a frequency relative to the supporting reciprocals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bracket {
    Zero,
    /// `x = 1/d` for a supporting period `d`.
    Support(u64),
    /// `x = alpha/shorter + (1 - alpha)/longer` strictly between two
    /// consecutive supporting periods.
    Between {
        shorter: u64,
        longer: u64,
        alpha: f64,
    },
}

impl SupportSet {
    /// Supporting points by the inductive rule: from the previous point,
    /// take the smallest gap maximizing the chord slope. Stops at the
    /// plateau start.
    pub fn from_curve(curve: &ArmCurve) -> Self {
        let rewards = &curve.rewards;
        if rewards.is_empty() {
            return Self {
                points: vec![SupportPoint { d: 1, r: 0.0 }],
            };
        }
        let plateau_value = curve.plateau();
        let plateau = rewards.iter().position(|&r| r == plateau_value).unwrap() + 1;

        let mut points = Vec::new();
        let (mut prev_d, mut prev_r) = (0usize, 0.0f64);
        while prev_d < plateau {
            let mut best_d = prev_d + 1;
            let mut best_slope = f64::NEG_INFINITY;
            for d in prev_d + 1..=plateau {
                let slope = (rewards[d - 1] - prev_r) / (d - prev_d) as f64;
                if slope > best_slope {
                    best_slope = slope;
                    best_d = d;
                }
            }
            prev_d = best_d;
            prev_r = rewards[best_d - 1];
            points.push(SupportPoint {
                d: prev_d as u64,
                r: prev_r,
            });
        }
        Self { points }
    }

    /// Smallest supporting period `d(1)`.
    pub fn first_period(&self) -> u64 {
        self.points[0].d
    }

    /// Plateau start `p`; every period `>= p` is supporting.
    pub fn plateau_period(&self) -> u64 {
        self.points.last().unwrap().d
    }

    pub fn plateau_reward(&self) -> f64 {
        self.points.last().unwrap().r
    }

    pub fn is_support_period(&self, d: u64) -> bool {
        d >= self.plateau_period() || self.points.iter().any(|p| p.d == d)
    }

    /// `R(d)` at a supporting period.
    pub fn reward_at(&self, d: u64) -> Option<f64> {
        if d >= self.plateau_period() {
            return Some(self.plateau_reward());
        }
        self.points.iter().find(|p| p.d == d).map(|p| p.r)
    }

    /// Value of the upper concave envelope at gap `d >= 1`.
    pub fn envelope_value(&self, d: u64) -> f64 {
        if d >= self.plateau_period() {
            return self.plateau_reward();
        }
        let (mut lo_d, mut lo_r) = (0u64, 0.0);
        for p in &self.points {
            if p.d == d {
                return p.r;
            }
            if p.d > d {
                let t = (d - lo_d) as f64 / (p.d - lo_d) as f64;
                return lo_r + t * (p.r - lo_r);
            }
            lo_d = p.d;
            lo_r = p.r;
        }
        unreachable!("d below the plateau is bracketed by the support")
    }

    /// Locates `x` among `{0} ∪ {1/d : d supporting}`. Values above
    /// `1/d(1)` are reported as `Support(d(1))`.
    pub fn bracket(&self, x: f64) -> Bracket {
        if x <= 0.0 {
            return Bracket::Zero;
        }
        let first = self.first_period();
        if x * first as f64 >= 1.0 - EXACT_TOL {
            return Bracket::Support(first);
        }
        let plateau = self.plateau_period();
        let m = 1.0 / x;
        if m > plateau as f64 * (1.0 - EXACT_TOL) {
            let nearest = m.round();
            if nearest >= plateau as f64 && (m - nearest).abs() <= EXACT_TOL * m {
                return Bracket::Support(nearest as u64);
            }
            let shorter = (m.floor() as u64).max(plateau);
            return between(x, shorter, shorter + 1);
        }
        // 1/d(k+1) < x < 1/d(k) for consecutive points below the plateau.
        for w in self.points.windows(2) {
            let (shorter, longer) = (w[0].d, w[1].d);
            if (x * longer as f64 - 1.0).abs() <= EXACT_TOL {
                return Bracket::Support(longer);
            }
            if x > 1.0 / longer as f64 {
                return between(x, shorter, longer);
            }
        }
        Bracket::Support(plateau)
    }
}

fn between(x: f64, shorter: u64, longer: u64) -> Bracket {
    let hi = 1.0 / shorter as f64;
    let lo = 1.0 / longer as f64;
    let alpha = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
    Bracket::Between {
        shorter,
        longer,
        alpha,
    }
}

/// Concave piecewise-linear long-run average reward as a function of pull
/// frequency. Breakpoints start at `(0, 0)` and end at `(1, F(1))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseLinearF {
    pub breakpoints: Vec<(f64, f64)>,
}

impl PiecewiseLinearF {
    pub fn from_support(support: &SupportSet) -> Self {
        let mut breakpoints = vec![(0.0, 0.0)];
        for p in support.points.iter().rev() {
            breakpoints.push((1.0 / p.d as f64, p.r / p.d as f64));
        }
        let last = *breakpoints.last().unwrap();
        if last.0 < 1.0 {
            breakpoints.push((1.0, last.1));
        }
        Self { breakpoints }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::arg(format!("frequency {x} outside [0, 1]")));
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        let bp = &self.breakpoints;
        let idx = bp.partition_point(|&(bx, _)| bx < x);
        if idx == 0 {
            return bp[0].1;
        }
        if idx == bp.len() {
            return bp[bp.len() - 1].1;
        }
        let (x1, f1) = bp[idx];
        if x1 == x {
            return f1;
        }
        let (x0, f0) = bp[idx - 1];
        f0 + (x - x0) * (f1 - f0) / (x1 - x0)
    }
}

/// Support and average-reward function of one arm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmEnvelope {
    pub support: SupportSet,
    pub f: PiecewiseLinearF,
}

impl ArmEnvelope {
    pub fn new(curve: &ArmCurve) -> Self {
        let support = SupportSet::from_curve(curve);
        let f = PiecewiseLinearF::from_support(&support);
        Self { support, f }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(s: &SupportSet) -> Vec<(u64, f64)> {
        s.points.iter().map(|p| (p.d, p.r)).collect()
    }

    #[test]
    fn two_point_curve() {
        let s = SupportSet::from_curve(&ArmCurve::new(vec![1.0, 4.0]));
        assert_eq!(pts(&s), vec![(2, 4.0)]);
    }

    #[test]
    fn constant_curve_supports_at_one() {
        let s = SupportSet::from_curve(&ArmCurve::new(vec![2.5, 2.5, 2.5]));
        assert_eq!(pts(&s), vec![(1, 2.5)]);
    }

    #[test]
    fn slope_ties_take_smallest_gap() {
        let s = SupportSet::from_curve(&ArmCurve::new(vec![1.0, 1.5, 3.0]));
        assert_eq!(pts(&s), vec![(1, 1.0), (3, 3.0)]);
    }

    #[test]
    fn envelope_interpolates() {
        let s = SupportSet::from_curve(&ArmCurve::new(vec![1.0, 1.5, 3.0]));
        assert_eq!(s.envelope_value(2), 2.0);
        let s = SupportSet::from_curve(&ArmCurve::new(vec![1.0, 4.0]));
        assert_eq!(s.envelope_value(1), 2.0);
        assert_eq!(s.envelope_value(9), 4.0);
    }

    #[test]
    fn f_for_single_point() {
        let s = SupportSet::from_curve(&ArmCurve::new(vec![1.0, 4.0]));
        let f = PiecewiseLinearF::from_support(&s);
        assert_eq!(f.eval(0.5).unwrap(), 2.0);
        assert_eq!(f.eval(0.75).unwrap(), 2.0);
        assert_eq!(f.eval(1.0).unwrap(), 2.0);
        assert_eq!(f.eval(0.25).unwrap(), 1.0);
        assert_eq!(f.eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn f_for_two_points() {
        let s = SupportSet::from_curve(&ArmCurve::new(vec![1.0, 1.5, 3.0]));
        let f = PiecewiseLinearF::from_support(&s);
        assert_eq!(f.eval(1.0 / 3.0).unwrap(), 1.0);
        assert_eq!(f.eval(1.0).unwrap(), 1.0);
        assert!((f.eval(2.0 / 3.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((f.eval(0.1).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn f_rejects_out_of_range() {
        let f = PiecewiseLinearF::from_support(&SupportSet::from_curve(&ArmCurve::constant(1.0)));
        assert!(f.eval(-0.1).is_err());
        assert!(f.eval(1.5).is_err());
        assert!(f.eval(f64::NAN).is_err());
    }

    #[test]
    fn bracket_positions() {
        let s = SupportSet::from_curve(&ArmCurve::new(vec![1.0, 1.5, 3.0]));
        assert_eq!(s.bracket(0.0), Bracket::Zero);
        assert_eq!(s.bracket(1.0), Bracket::Support(1));
        assert_eq!(s.bracket(1.0 / 3.0), Bracket::Support(3));
        assert_eq!(s.bracket(0.2), Bracket::Support(5));
        match s.bracket(0.5) {
            Bracket::Between {
                shorter,
                longer,
                alpha,
            } => {
                assert_eq!((shorter, longer), (1, 3));
                assert!((alpha - 0.25).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        match s.bracket(0.22) {
            Bracket::Between {
                shorter, longer, ..
            } => assert_eq!((shorter, longer), (4, 5)),
            other => panic!("{other:?}"),
        }
    }

    /// Upper hull of (0,0),(1,R1),..,(n,Rn) by a monotone-chain scan.
    fn hull_touching(rewards: &[f64]) -> Vec<u64> {
        let pts: Vec<(f64, f64)> = std::iter::once((0.0, 0.0))
            .chain(
                rewards
                    .iter()
                    .enumerate()
                    .map(|(i, &r)| ((i + 1) as f64, r)),
            )
            .collect();
        let mut hull: Vec<(f64, f64)> = Vec::new();
        for &p in &pts {
            while hull.len() >= 2 {
                let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
                if cross >= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        let value = |x: f64| -> f64 {
            for w in hull.windows(2) {
                if x >= w[0].0 && x <= w[1].0 {
                    return w[0].1 + (x - w[0].0) * (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                }
            }
            hull.last().unwrap().1
        };
        (1..=rewards.len())
            .filter(|&d| (rewards[d - 1] - value(d as f64)).abs() <= 1e-9)
            .map(|d| d as u64)
            .collect()
    }

    fn curve_strategy(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0u32..20, 1..=max_len).prop_map(|mut v| {
            v.sort_unstable();
            v.into_iter().map(f64::from).collect()
        })
    }

    proptest! {
        #[test]
        fn support_matches_hull_oracle(rewards in curve_strategy(8)) {
            let s = SupportSet::from_curve(&ArmCurve::new(rewards.clone()));
            let p = s.plateau_period();
            let oracle: Vec<u64> = hull_touching(&rewards).into_iter().filter(|&d| d <= p).collect();
            let ours: Vec<u64> = s.points.iter().map(|q| q.d).collect();
            prop_assert_eq!(ours, oracle);
        }

        #[test]
        fn envelope_dominates_curve(rewards in curve_strategy(12)) {
            let curve = ArmCurve::new(rewards.clone());
            let s = SupportSet::from_curve(&curve);
            for d in 1..=(rewards.len() as u64 + 3) {
                let env = s.envelope_value(d);
                prop_assert!(env >= curve.mean(d) - 1e-12);
                if s.points.iter().any(|q| q.d == d) {
                    prop_assert_eq!(env, curve.mean(d));
                }
            }
            let slopes: Vec<f64> = std::iter::once((0u64, 0.0))
                .chain(s.points.iter().map(|q| (q.d, q.r)))
                .collect::<Vec<_>>()
                .windows(2)
                .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0) as f64)
                .collect();
            prop_assert!(slopes.windows(2).all(|w| w[0] >= w[1] - 1e-12));
            prop_assert_eq!(s.plateau_period() as usize, rewards.iter().position(|&r| r == curve.plateau()).unwrap() + 1);
        }

        #[test]
        fn f_is_concave_monotone_and_hits_breakpoints(rewards in curve_strategy(12), x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
            let s = SupportSet::from_curve(&ArmCurve::new(rewards));
            let f = PiecewiseLinearF::from_support(&s);
            for q in &s.points {
                prop_assert_eq!(f.eval(1.0 / q.d as f64).unwrap(), q.r / q.d as f64);
            }
            let (fx, fy) = (f.eval(x).unwrap(), f.eval(y).unwrap());
            prop_assert!(f.eval((x + y) / 2.0).unwrap() >= (fx + fy) / 2.0 - 1e-9);
            let grid: Vec<f64> = (0..=200).map(|i| f.eval(i as f64 / 200.0).unwrap()).collect();
            prop_assert!(grid.windows(2).all(|w| w[1] >= w[0] - 1e-12));
            prop_assert_eq!(f.eval(0.0).unwrap(), 0.0);
        }
    }
}
