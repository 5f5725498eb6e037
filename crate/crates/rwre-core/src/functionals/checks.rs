use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::QuenchedFunctionals;
use crate::env::Environment;
use crate::error::{invalid, Result};
use crate::math::{exp, log, log_p, log_q, LN_2};

/// Worst relative residuals of the one-step identities
/// `E[f(X_1) - f(x)] = p_0 1{x = 0}` and `E[T(X_1) - T(x)] = 1`.
///
/// Each site's identity is divided by its largest term before evaluation.
/// A site enters only while the functionals it involves are representable
/// as `f64` (`|log| <= ln f64::MAX`): beyond that, a log value of size `L`
/// carries an absolute error near `L * eps`, which bounds the attainable
/// relative residual from below.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub max_residual_f: f64,
    pub max_residual_t: f64,
    pub worst_site_f: usize,
    pub worst_site_t: usize,
    pub sites_checked_f: usize,
    pub sites_checked_t: usize,
}

/// `ln f64::MAX`.
const LOG_REPRESENTABLE: f64 = 709.782712893384;

fn representable(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.abs() <= LOG_REPRESENTABLE)
}

/// `sum(sign_i * exp(l_i)) / max_i exp(l_i)`.
fn scaled(terms: &[(f64, f64)]) -> f64 {
    let m = terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    terms.iter().map(|&(sign, l)| sign * exp(l - m)).sum::<f64>().abs()
}

/// Residuals at sites `0..n`; `fns` must cover at least `n` sites.
pub fn martingale_residuals(
    env: &Environment,
    fns: &QuenchedFunctionals,
    n: usize,
) -> Result<MartingaleReport> {
    if n == 0 {
        return Err(invalid("martingale residuals need n >= 1"));
    }
    if fns.len() < n || env.len() < n {
        return Err(invalid("functionals do not cover the requested range"));
    }
    let lam = env.lambda();
    let (lf, lt) = (&fns.log_f, &fns.log_t);
    let mut rep = MartingaleReport {
        max_residual_f: 0.0,
        max_residual_t: 0.0,
        worst_site_f: 0,
        worst_site_t: 0,
        sites_checked_f: 0,
        sites_checked_t: 0,
    };
    let record_f = |k: usize, r: f64, rep: &mut MartingaleReport| {
        rep.sites_checked_f += 1;
        if r > rep.max_residual_f {
            rep.max_residual_f = r;
            rep.worst_site_f = k;
        }
    };
    let record_t = |k: usize, r: f64, rep: &mut MartingaleReport| {
        rep.sites_checked_t += 1;
        if r > rep.max_residual_t {
            rep.max_residual_t = r;
            rep.worst_site_t = k;
        }
    };
    let (lp0, lq0) = (log_p(lam[0]), log_q(lam[0]));
    if representable(&lf[..2]) {
        // q_0 (f(1) - f(0)) = p_0.
        record_f(0, scaled(&[(1.0, lq0 + lf[1]), (-1.0, lq0 + lf[0]), (-1.0, lp0)]), &mut rep);
    }
    if representable(&lt[1..2]) {
        // q_0 T(1) = 1.
        record_t(0, scaled(&[(1.0, lq0 + lt[1]), (-1.0, 0.0)]), &mut rep);
    }
    for k in 1..n {
        let (lp, lq) = (log_p(lam[k]), log_q(lam[k]));
        if representable(&lf[k - 1..k + 2]) {
            let r = scaled(&[(1.0, lp + lf[k - 1]), (1.0, lq + lf[k + 1]), (-1.0, lf[k])]);
            record_f(k, r, &mut rep);
        }
        // T(0) = 0 has log -inf, which is exact.
        if representable(&lt[k.max(2) - 1..k + 2]) {
            let r = scaled(&[(1.0, lp + lt[k - 1]), (1.0, lq + lt[k + 1]), (-1.0, lt[k]), (-1.0, 0.0)]);
            record_t(k, r, &mut rep);
        }
    }
    Ok(rep)
}

/// The bounds checked by [`bound_sandwich`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// `log f(i) >= max_{k <= i} S_{k-1}`.
    FLower,
    /// `log T(i) >= max_{k <= i} S_{k-1}`, `i >= 1`.
    TLower,
    /// `log T(i) <= log 2 + 2 log i + max_{k < i} S_k + max(0, max_{k < i} -S_k)`.
    TUpperSplit,
    /// `log T(i) <= log 2 + 2 log i + 2 max_{k < i} |S_k|`.
    TUpperAbs,
    /// The split upper bound never exceeds the absolute one.
    SplitBelowAbs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub bound: Bound,
    pub index: usize,
    pub slack: f64,
}

/// Smallest slack (bound side minus value side, in log units) per bound and
/// every violation found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub min_slack_f_lower: f64,
    pub min_slack_t_lower: f64,
    pub min_slack_t_upper_split: f64,
    pub min_slack_t_upper_abs: f64,
    pub violations: Vec<BoundViolation>,
    /// The bounds at the last index checked.
    pub at_n: BoundValues,
}

/// Values (in log space) of the bounds at one index. The `T` bounds are
/// `NaN` at index 0, where `T(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValues {
    pub index: usize,
    pub f_lower: f64,
    pub t_lower: f64,
    pub t_upper_split: f64,
    pub t_upper_abs: f64,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Relative allowance for rounding in cases where a bound is attained
/// exactly (e.g. `log f(0) = S_{-1}`).
const ROUNDING: f64 = 1e-12;

/// Slack tracker for one bound.
struct Tracker<'a> {
    violations: &'a mut Vec<BoundViolation>,
}

impl Tracker<'_> {
    fn check(&mut self, bound: Bound, index: usize, slack: f64, scale: f64, min: &mut f64) {
        *min = min.min(slack);
        if slack.is_nan() || slack < -ROUNDING * scale.abs().max(1.0) {
            self.violations.push(BoundViolation { bound, index, slack });
        }
    }
}

/// Check the lower and upper bounds on `f` and `T` for `i = 0..=n`.
pub fn bound_sandwich(fns: &QuenchedFunctionals, n: usize) -> Result<SandwichReport> {
    if fns.len() < n {
        return Err(invalid("functionals do not cover the requested range"));
    }
    let mut rep = SandwichReport {
        min_slack_f_lower: f64::INFINITY,
        min_slack_t_lower: f64::INFINITY,
        min_slack_t_upper_split: f64::INFINITY,
        min_slack_t_upper_abs: f64::INFINITY,
        violations: Vec::new(),
        at_n: BoundValues { index: n, f_lower: f64::NAN, t_lower: f64::NAN, t_upper_split: f64::NAN, t_upper_abs: f64::NAN },
    };
    let mut at_n = rep.at_n;
    let mut tr = Tracker { violations: &mut rep.violations };
    // Running maxima over k < i of S_k and of -S_k, the latter floored at 0
    // because the second-term path sum may be empty.
    let (mut max_s, mut max_neg) = (f64::NEG_INFINITY, 0.0f64);
    let mut split_vs_abs = f64::INFINITY;
    for i in 0..=n {
        let lf = fns.log_f[i];
        let mp = fns.max_prefix[i];
        tr.check(Bound::FLower, i, lf - mp, lf, &mut rep.min_slack_f_lower);
        at_n.f_lower = mp;
        if i == 0 {
            continue;
        }
        let lt = fns.log_t[i];
        let s = fns.s[i - 1];
        max_s = max_s.max(s);
        max_neg = max_neg.max(-s);
        let base = LN_2 + 2.0 * log(i as f64);
        let split = base + max_s + max_neg;
        let abs = base + 2.0 * max_s.max(max_neg);
        tr.check(Bound::TLower, i, lt - mp, lt, &mut rep.min_slack_t_lower);
        tr.check(Bound::TUpperSplit, i, split - lt, lt, &mut rep.min_slack_t_upper_split);
        tr.check(Bound::TUpperAbs, i, abs - lt, lt, &mut rep.min_slack_t_upper_abs);
        tr.check(Bound::SplitBelowAbs, i, abs - split, abs, &mut split_vs_abs);
        (at_n.t_lower, at_n.t_upper_split, at_n.t_upper_abs) = (mp, split, abs);
    }
    rep.at_n = at_n;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::compute;
    use alloc::vec;

    fn env(l: Vec<f64>) -> Environment {
        Environment::from_lambdas(l).unwrap()
    }

    #[test]
    fn fair_walk_identities_are_tight() {
        let e = env(vec![0.0; 51]);
        let f = compute(&e, 51).unwrap();
        let r = martingale_residuals(&e, &f, 50).unwrap();
        assert!(r.max_residual_f <= 1e-12 && r.max_residual_t <= 1e-12, "{r:?}");
        assert_eq!((r.sites_checked_f, r.sites_checked_t), (50, 50));
    }

    #[test]
    fn single_site_residual_vanishes() {
        for l in [-4.0, 0.3, 9.0] {
            let e = env(vec![l, 0.0]);
            let f = compute(&e, 1).unwrap();
            let r = martingale_residuals(&e, &f, 1).unwrap();
            assert!(r.max_residual_t <= 1e-15 && r.max_residual_f <= 1e-15, "{r:?}");
        }
    }

    #[test]
    fn wrong_functionals_are_detected() {
        let e = env(vec![0.5, -0.2, 1.0, 0.0]);
        let mut f = compute(&e, 4).unwrap();
        f.log_t[2] += 1e-6;
        let r = martingale_residuals(&e, &f, 3).unwrap();
        assert!(r.max_residual_t > 1e-8);
    }

    #[test]
    fn unrepresentable_sites_are_skipped() {
        let e = env(vec![0.0, 800.0, 0.0, 0.0]);
        let f = compute(&e, 4).unwrap();
        let r = martingale_residuals(&e, &f, 3).unwrap();
        // log f(2) = 800 leaves only site 0 for f; log T(2) > 800 likewise.
        assert_eq!((r.sites_checked_f, r.sites_checked_t), (1, 1));
    }

    #[test]
    fn fair_walk_upper_slack_matches_closed_form() {
        // T(i) = i(i+1), bound 2 i^2, so the slack is log(2i / (i+1)).
        let f = compute(&env(vec![0.0; 20]), 20).unwrap();
        let r = bound_sandwich(&f, 20).unwrap();
        assert!(r.holds());
        assert!(r.min_slack_t_upper_abs.abs() < 1e-14);
        for i in 1..=20usize {
            let slack = LN_2 + 2.0 * log(i as f64) - f.log_t[i];
            let expect = log(2.0 * i as f64 / (i as f64 + 1.0));
            assert!((slack - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn first_site_lower_bound() {
        let f = compute(&env(vec![-3.0]), 1).unwrap();
        let r = bound_sandwich(&f, 1).unwrap();
        assert!(r.holds());
        assert!((r.min_slack_t_lower - (-log_q(-3.0))).abs() < 1e-14);
    }

    #[test]
    fn single_positive_site_respects_split_bound() {
        // T(1) = 4 here; the split bound must allow it.
        let f = compute(&env(vec![log(3.0)]), 1).unwrap();
        assert!((f.log_t[1] - log(4.0)).abs() < 1e-14);
        assert!(bound_sandwich(&f, 1).unwrap().holds());
    }

    #[test]
    fn violations_are_reported_with_index() {
        let mut f = compute(&env(vec![0.0; 5]), 5).unwrap();
        f.log_t[3] = 10.0;
        let r = bound_sandwich(&f, 5).unwrap();
        assert!(r.violations.iter().any(|v| v.index == 3 && v.bound == Bound::TUpperAbs));
    }
}
