//! The frequency relaxation: maximize `sum_i F_i(x_i)` subject to
//! `sum_i x_i <= k`, `0 <= x_i <= 1`.
//!
//! Each `F_i` is concave and piecewise linear, so pouring budget into
//! segments in order of decreasing slope is exact. At most one segment ends
//! up partially filled, which gives the normal form directly: every component
//! is `0` or the reciprocal of a supporting period, except possibly one.

use serde::Serialize;

use crate::envelope::{ArmEnvelope, Bracket};
use crate::error::{Error, Result};
use crate::instance::RecoveryInstance;

const BUDGET_TOL: f64 = 1e-12;

/// The single component that is not the reciprocal of a supporting period:
/// `x = alpha/shorter + (1 - alpha)/longer`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FractionalArm {
    pub arm: usize,
    pub alpha: f64,
    /// Supporting period `d(k1)` just below `1/x`.
    pub shorter: u64,
    /// Supporting period `d(k1+1)` just above `1/x`.
    pub longer: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelaxationSolution {
    pub x_star: Vec<f64>,
    pub ub: f64,
    pub fractional: Option<FractionalArm>,
}

impl RelaxationSolution {
    /// Supporting period behind component `i`, if it is one.
    pub fn support_period(&self, i: usize) -> Option<u64> {
        if self.fractional.is_some_and(|f| f.arm == i) || self.x_star[i] <= 0.0 {
            return None;
        }
        Some((1.0 / self.x_star[i]).round() as u64)
    }
}

pub fn envelopes(instance: &RecoveryInstance) -> Vec<ArmEnvelope> {
    instance.arms.iter().map(ArmEnvelope::new).collect()
}

struct Segment {
    arm: usize,
    slope: f64,
    /// Period at the segment's low-frequency end (`None` for the origin).
    longer: Option<u64>,
    /// Period at the high-frequency end.
    shorter: u64,
}

fn segments(envs: &[ArmEnvelope]) -> Vec<Segment> {
    let mut segs = Vec::new();
    for (arm, env) in envs.iter().enumerate() {
        let pts = &env.support.points;
        let plateau = pts.last().unwrap();
        segs.push(Segment {
            arm,
            slope: plateau.r,
            longer: None,
            shorter: plateau.d,
        });
        for w in pts.windows(2).rev() {
            let (s, l) = (w[0], w[1]);
            let slope = (s.r * l.d as f64 - l.r * s.d as f64) / (l.d - s.d) as f64;
            segs.push(Segment {
                arm,
                slope,
                longer: Some(l.d),
                shorter: s.d,
            });
        }
    }
    segs.retain(|s| s.slope > 0.0);
    // Slope descending, then lower arm, then larger period (the segment nearer
    // the origin), which also keeps each arm's segments in order.
    segs.sort_by(|a, b| {
        b.slope
            .total_cmp(&a.slope)
            .then(a.arm.cmp(&b.arm))
            .then(b.shorter.cmp(&a.shorter))
    });
    segs
}

/// Optimal solution of the relaxation in normal form.
pub fn solve_upper_bound(instance: &RecoveryInstance, k: usize) -> Result<RelaxationSolution> {
    let envs = envelopes(instance);
    solve_with_envelopes(&envs, k)
}

pub fn solve_with_envelopes(envs: &[ArmEnvelope], k: usize) -> Result<RelaxationSolution> {
    let n = envs.len();
    if k == 0 || k > n {
        return Err(Error::arg(format!("budget k={k} outside 1..={n}")));
    }
    let mut x = vec![0.0; n];
    let mut fractional = None;
    let mut remaining = k as f64;
    for seg in segments(envs) {
        if remaining <= BUDGET_TOL {
            break;
        }
        let lo = seg.longer.map_or(0.0, |d| 1.0 / d as f64);
        let hi = 1.0 / seg.shorter as f64;
        let len = hi - lo;
        if remaining >= len - BUDGET_TOL {
            x[seg.arm] = hi;
            remaining -= len;
        } else {
            let value = lo + remaining;
            remaining = 0.0;
            match envs[seg.arm].support.bracket(value) {
                Bracket::Zero => x[seg.arm] = 0.0,
                Bracket::Support(d) => x[seg.arm] = 1.0 / d as f64,
                Bracket::Between {
                    shorter,
                    longer,
                    alpha,
                } => {
                    x[seg.arm] = value;
                    fractional = Some(FractionalArm {
                        arm: seg.arm,
                        alpha,
                        shorter,
                        longer,
                    });
                }
            }
        }
    }
    let ub = objective(envs, &x);
    Ok(RelaxationSolution {
        x_star: x,
        ub,
        fractional,
    })
}

/// `sum_i F_i(x_i)` summed in arm order.
pub fn objective(envs: &[ArmEnvelope], x: &[f64]) -> f64 {
    envs.iter()
        .zip(x)
        .map(|(e, &xi)| e.f.eval_unchecked(xi.clamp(0.0, 1.0)))
        .sum()
}

pub fn ub_value(instance: &RecoveryInstance, k: usize) -> Result<f64> {
    Ok(solve_upper_bound(instance, k)?.ub)
}

/// Moves a feasible point into normal form without lowering the objective:
/// caps every `x_i` at `1/d_i(1)`, then repeatedly shifts mass between two
/// fractional components along their linear pieces until one reaches a
/// breakpoint.
pub fn normalize_to_lemma2(x: &[f64], envs: &[ArmEnvelope], k: f64) -> Result<Vec<f64>> {
    if x.len() != envs.len() {
        return Err(Error::arg(format!(
            "frequency vector has {} entries for {} arms",
            x.len(),
            envs.len()
        )));
    }
    if let Some(bad) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::arg(format!("frequency {bad} outside [0, 1]")));
    }
    let total: f64 = x.iter().sum();
    if total > k + 1e-9 {
        return Err(Error::arg(format!(
            "frequencies sum to {total} > budget {k}"
        )));
    }
    let mut out: Vec<f64> = x
        .iter()
        .zip(envs)
        .map(|(&xi, e)| xi.min(1.0 / e.support.first_period() as f64))
        .collect();

    // Snap components that already sit on a breakpoint.
    let mut open: Vec<usize> = Vec::new();
    for (i, e) in envs.iter().enumerate() {
        match e.support.bracket(out[i]) {
            Bracket::Zero => out[i] = 0.0,
            Bracket::Support(d) => out[i] = 1.0 / d as f64,
            Bracket::Between { .. } => open.push(i),
        }
    }

    while open.len() >= 2 {
        let i = open[open.len() - 1];
        let j = open[open.len() - 2];
        let (si, lo_i, hi_i) = piece(&envs[i], out[i]);
        let (sj, lo_j, hi_j) = piece(&envs[j], out[j]);
        // Move mass toward the steeper piece.
        let (up, down, up_hi, down_lo) = if si >= sj {
            (i, j, hi_i, lo_j)
        } else {
            (j, i, hi_j, lo_i)
        };
        let room_up = up_hi - out[up];
        let room_down = out[down] - down_lo;
        if room_up <= room_down {
            out[up] = up_hi;
            out[down] -= room_up;
            open.retain(|&v| v != up);
        } else {
            out[down] = down_lo;
            out[up] += room_down;
            open.retain(|&v| v != down);
        }
        for &v in &[up, down] {
            if open.contains(&v) {
                match envs[v].support.bracket(out[v]) {
                    Bracket::Zero => {
                        out[v] = 0.0;
                        open.retain(|&w| w != v);
                    }
                    Bracket::Support(d) => {
                        out[v] = 1.0 / d as f64;
                        open.retain(|&w| w != v);
                    }
                    Bracket::Between { .. } => {}
                }
            }
        }
    }
    Ok(out)
}

/// Slope and frequency interval of the linear piece of `F` containing `x`.
fn piece(env: &ArmEnvelope, x: f64) -> (f64, f64, f64) {
    match env.support.bracket(x) {
        Bracket::Between {
            shorter, longer, ..
        } => {
            let hi = 1.0 / shorter as f64;
            let lo = 1.0 / longer as f64;
            let f_hi = env.f.eval_unchecked(hi);
            let f_lo = env.f.eval_unchecked(lo);
            ((f_hi - f_lo) / (hi - lo), lo, hi)
        }
        _ => (0.0, x, x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_random_instance, ArmCurve};

    fn inst(curves: Vec<Vec<f64>>) -> RecoveryInstance {
        RecoveryInstance::new(curves.into_iter().map(ArmCurve::new).collect(), 100.0)
    }

    #[test]
    fn single_arm_stops_at_flat_region() {
        let sol = solve_upper_bound(&inst(vec![vec![1.0, 4.0]]), 1).unwrap();
        assert_eq!(sol.x_star, vec![0.5]);
        assert_eq!(sol.ub, 2.0);
        assert!(sol.fractional.is_none());
    }

    #[test]
    fn greedy_trap_instance() {
        let sol = solve_upper_bound(&inst(vec![vec![0.5], vec![1.0, 10.0]]), 1).unwrap();
        assert_eq!(sol.x_star, vec![0.5, 0.5]);
        assert_eq!(sol.ub, 5.25);
        // 1/2 is a supporting reciprocal for a constant arm (every d >= 1 is).
        assert!(sol.fractional.is_none());
    }

    #[test]
    fn constant_arm_full_budget() {
        assert_eq!(ub_value(&inst(vec![vec![3.0]]), 1).unwrap(), 3.0);
    }

    #[test]
    fn full_budget_takes_first_support_everywhere() {
        for seed in 0..20 {
            let instance = generate_random_instance(6, seed, 25).unwrap();
            let envs = envelopes(&instance);
            let sol = solve_upper_bound(&instance, 6).unwrap();
            let expect: f64 = envs
                .iter()
                .map(|e| e.support.points[0].r / e.support.points[0].d as f64)
                .sum();
            for (x, e) in sol.x_star.iter().zip(&envs) {
                assert_eq!(*x, 1.0 / e.support.first_period() as f64);
            }
            assert!((sol.ub - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_budget() {
        let i = inst(vec![vec![1.0]]);
        assert!(solve_upper_bound(&i, 0).is_err());
        assert!(solve_upper_bound(&i, 2).is_err());
    }

    #[test]
    fn fractional_component_is_described() {
        // Arm 0: slope 10 up to 1/2. Arm 1: R=[2,2,3] has pieces of slope 3 and 1.5.
        let sol = solve_upper_bound(&inst(vec![vec![1.0, 10.0], vec![2.0, 2.0, 3.0]]), 1).unwrap();
        // Budget 1: arm 0 takes 1/2, arm 1 takes 1/3 then 1/6 of the next piece.
        let f = sol.fractional.expect("one fractional arm");
        assert_eq!((f.arm, f.shorter, f.longer), (1, 1, 3));
        assert!((sol.x_star[1] - 0.5).abs() < 1e-12);
        assert!((f.alpha - 0.25).abs() < 1e-12);
        assert!((sol.ub - 6.25).abs() < 1e-12);
    }

    #[test]
    fn normalize_fixpoint_and_cap() {
        let i = inst(vec![vec![1.0, 4.0], vec![1.0, 1.5, 3.0]]);
        let envs = envelopes(&i);
        let x = vec![0.5, 1.0 / 3.0];
        assert_eq!(normalize_to_lemma2(&x, &envs, 1.0).unwrap(), x);
        // Above 1/d(1): capped, objective unchanged.
        let capped = normalize_to_lemma2(&[0.9, 0.0], &envs, 1.0).unwrap();
        assert_eq!(capped, vec![0.5, 0.0]);
        assert_eq!(objective(&envs, &capped), objective(&envs, &[0.9, 0.0]));
    }

    #[test]
    fn normalize_merges_two_fractional_components() {
        let i = inst(vec![vec![2.0, 2.0, 3.0], vec![1.0, 4.0, 4.5]]);
        let envs = envelopes(&i);
        let x = vec![0.5, 0.4];
        let before = objective(&envs, &x);
        let out = normalize_to_lemma2(&x, &envs, 2.0).unwrap();
        let after = objective(&envs, &out);
        assert!(after >= before - 1e-12, "{after} < {before}");
        assert!((before - 2.95).abs() < 1e-12 && (after - 3.1).abs() < 1e-12);
        let open = out
            .iter()
            .zip(&envs)
            .filter(|(v, e)| matches!(e.support.bracket(**v), Bracket::Between { .. }))
            .count();
        assert!(open <= 1);
        assert!(out.iter().sum::<f64>() <= x.iter().sum::<f64>() + 1e-12);
    }

    #[test]
    fn normalize_rejects_infeasible() {
        let envs = envelopes(&inst(vec![vec![1.0], vec![1.0]]));
        assert!(normalize_to_lemma2(&[0.8, 0.8], &envs, 1.0).is_err());
        assert!(normalize_to_lemma2(&[1.2, 0.0], &envs, 2.0).is_err());
        assert!(normalize_to_lemma2(&[0.1], &envs, 2.0).is_err());
    }
}
