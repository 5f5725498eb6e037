//! Quenched trajectory simulation and envelope fits.

use alloc::vec::Vec;
use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::env::{DopeProfile, Environment, EnvironmentSpec};
use crate::error::{invalid, Error, Result};
use crate::math::{ceil, exp, linear_fit, log, p_q, pow};
use crate::rng::walk_rng;

const TWO64: f64 = 18_446_744_073_709_551_616.0;

/// Threshold `t` such that a uniform `u64` word `u < t` means "step left"
/// (or stay, at the origin) with probability `p`. The smaller of `p`, `q`
/// is the one converted, so tiny probabilities keep their resolution.
#[inline]
pub fn left_threshold(lambda: f64) -> u64 {
    let (p, q) = p_q(lambda);
    if lambda >= 0.0 {
        u64::MAX - (q * TWO64) as u64
    } else {
        (p * TWO64) as u64
    }
}

/// One step from `x`: left (stay at 0) when `u < thr[x]`, else right.
#[inline(always)]
pub fn step(x: usize, u: u64, thr: &[u64]) -> usize {
    let left = (u < thr[x]) as usize;
    (x + 1).saturating_sub(2 * left)
}

/// `t_0 = 1`, `t_k = max(t_{k-1} + 1, ceil(t_{k-1} * ratio))`, truncated at
/// and always ending with `max_steps`.
pub fn checkpoint_grid(max_steps: u64, ratio: f64) -> Result<Vec<u64>> {
    if !(ratio > 1.0) || !ratio.is_finite() {
        return Err(invalid("checkpoint ratio must exceed 1"));
    }
    if max_steps == 0 {
        return Err(invalid("max steps must be positive"));
    }
    let mut grid = Vec::new();
    let mut t = 1u64;
    while t < max_steps {
        grid.push(t);
        t = (t + 1).max(ceil(t as f64 * ratio) as u64);
    }
    grid.push(max_steps);
    Ok(grid)
}

/// Checkpointed record of one run from `X_0 = 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryStats {
    pub checkpoints: Vec<u64>,
    /// `M(t_k) = max_{s <= t_k} X_s`.
    pub running_max: Vec<u64>,
    /// `X_{t_k}`.
    pub position: Vec<u64>,
    /// `first_hit[n] = tau_n` for every level `n <= max`.
    pub first_hit: Vec<u64>,
    pub steps: u64,
    pub seed: u64,
}

/// Run against a materialised environment.
pub fn run_trajectory(
    env: &Environment,
    max_steps: u64,
    ratio: f64,
    seed: u64,
) -> Result<TrajectoryStats> {
    run(env.lambda().iter().copied(), env.len() as u64, max_steps, ratio, seed)
}

/// Run against an environment generated site by site as the walk first
/// reaches each level. Identical to sampling the environment first.
pub fn run_trajectory_lazy(
    spec: &EnvironmentSpec,
    max_steps: u64,
    ratio: f64,
    seed: u64,
) -> Result<TrajectoryStats> {
    run(spec.sites().map(|s| s.lambda), spec.length(), max_steps, ratio, seed)
}

fn run<I: Iterator<Item = f64>>(
    mut lambdas: I,
    n_sites: u64,
    max_steps: u64,
    ratio: f64,
    seed: u64,
) -> Result<TrajectoryStats> {
    let grid = checkpoint_grid(max_steps, ratio)?;
    if n_sites < 2 {
        return Err(invalid("the walk needs at least two sites"));
    }
    let mut rng = walk_rng(seed);
    let mut thr: Vec<u64> = Vec::with_capacity(1024);
    thr.push(left_threshold(lambdas.next().expect("site 0")));
    let mut first_hit = alloc::vec![0u64];
    let (mut x, mut m, mut t) = (0usize, 0usize, 0u64);
    let mut running_max = Vec::with_capacity(grid.len());
    let mut position = Vec::with_capacity(grid.len());
    for &target in &grid {
        while t < target {
            x = step(x, rng.next_u64(), &thr);
            t += 1;
            if x > m {
                m = x;
                first_hit.push(t);
                if m as u64 >= n_sites - 1 {
                    return Err(Error::EnvironmentExhausted { time: t, level: m as u64 });
                }
                thr.push(left_threshold(lambdas.next().expect("site within length")));
            }
        }
        running_max.push(m as u64);
        position.push(x as u64);
    }
    Ok(TrajectoryStats { checkpoints: grid, running_max, position, first_hit, steps: t, seed })
}

/// Walk simulation against a fixed threshold table until `target` is hit or
/// `budget` steps are used; returns the hitting time if reached.
pub(crate) fn hit_time(rng: &mut impl RngCore, thr: &[u64], target: usize, budget: u64) -> Option<u64> {
    let mut x = 0usize;
    let mut t = 0u64;
    while x != target {
        if t == budget {
            return None;
        }
        x = step(x, rng.next_u64(), thr);
        t += 1;
    }
    Some(t)
}

/// Fit options. `min_time` and the top-half rule follow the defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Only checkpoints with `t >= min_time` are usable.
    pub min_time: u64,
    /// Fraction of the usable checkpoints (the latest ones) that enter the fit.
    pub top_fraction: f64,
    pub min_points: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { min_time: 10_000, top_fraction: 0.5, min_points: 8 }
    }
}

/// `log M(t) ~ log(prefactor) + theta * log log t` over the fit window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub theta: f64,
    pub prefactor: f64,
    /// Checkpoint index range `[start, end)` used.
    pub window: (usize, usize),
    pub r_squared: f64,
    /// `M` was constant over the window; `theta` is reported as 0.
    pub degenerate: bool,
}

/// Fit the envelope exponent. At least `min_points` checkpoints with
/// `t >= min_time` must exist; the fit then uses the later half of them (but
/// never fewer than `min_points`).
pub fn fit_envelope(stats: &TrajectoryStats, opts: &FitOptions) -> Result<EnvelopeFit> {
    let usable: Vec<usize> = (0..stats.checkpoints.len())
        .filter(|&k| stats.checkpoints[k] >= opts.min_time.max(3) && stats.running_max[k] > 0)
        .collect();
    if usable.len() < opts.min_points {
        return Err(Error::InsufficientCheckpoints { needed: opts.min_points, found: usable.len() });
    }
    let take = ((usable.len() as f64 * opts.top_fraction) as usize).max(opts.min_points);
    let idx = &usable[usable.len() - take..];
    let window = (idx[0], idx[idx.len() - 1] + 1);
    let first = stats.running_max[idx[0]];
    if idx.iter().all(|&k| stats.running_max[k] == first) {
        return Ok(EnvelopeFit { theta: 0.0, prefactor: first as f64, window, r_squared: 0.0, degenerate: true });
    }
    let x: Vec<f64> = idx.iter().map(|&k| log(log(stats.checkpoints[k] as f64))).collect();
    let y: Vec<f64> = idx.iter().map(|&k| log(stats.running_max[k] as f64)).collect();
    let (theta, intercept, r_squared) = linear_fit(&x, &y);
    Ok(EnvelopeFit { theta, prefactor: exp(intercept), window, r_squared, degenerate: false })
}

/// The almost-sure limsup constant `((1 - beta)/rho)^(1/(1 - beta))` of
/// `X_t / (log t)^(1/(1 - beta))` for power-law doping with `delta < 0`
/// below the critical exponent.
pub fn limsup_target(spec: &EnvironmentSpec) -> Result<f64> {
    let beta = match spec.dope() {
        DopeProfile::PowerLaw { beta } => beta,
        _ => return Err(Error::NotApplicable("limsup constant needs power-law doping".into())),
    };
    if spec.delta() >= 0.0 {
        return Err(Error::NotApplicable("limsup constant needs delta < 0 (rho > 0)".into()));
    }
    let below = match spec.zeta() {
        z if z.sigma().is_some() => beta < 0.5,
        crate::env::ZetaRegime::HeavySymmetric { alpha, .. } if alpha > 1.0 => beta < 1.0 - 1.0 / alpha,
        _ => false,
    };
    if !below {
        return Err(Error::NotApplicable("dope exponent is not below the critical value".into()));
    }
    Ok(limsup_constant(beta, spec.rho()))
}

/// `((1 - beta)/rho)^(1/(1 - beta))`.
pub fn limsup_constant(beta: f64, rho: f64) -> f64 {
    pow((1.0 - beta) / rho, 1.0 / (1.0 - beta))
}

/// `M(T) / (log T)^(1/(1 - beta))` for a finished run.
pub fn limsup_ratio(stats: &TrajectoryStats, beta: f64) -> f64 {
    let m = *stats.running_max.last().expect("non-empty run") as f64;
    m / pow(log(stats.steps as f64), 1.0 / (1.0 - beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::ZetaRegime;
    use alloc::vec;

    #[test]
    fn thresholds_match_probabilities() {
        assert_eq!(left_threshold(0.0), u64::MAX - (1u64 << 63));
        let t = left_threshold(-log(3.0));
        assert!(((t as f64 / TWO64) - 0.25).abs() < 1e-15);
        let t = left_threshold(log(3.0));
        assert!(((t as f64 / TWO64) - 0.75).abs() < 1e-15);
        assert_eq!(left_threshold(1e300), u64::MAX);
        assert_eq!(left_threshold(-1e300), 0);
    }

    #[test]
    fn step_rule_including_the_origin() {
        let thr = [1u64 << 63, 1 << 63];
        assert_eq!(step(0, 0, &thr), 0);
        assert_eq!(step(0, u64::MAX, &thr), 1);
        assert_eq!(step(1, 0, &thr), 0);
        assert_eq!(step(1, u64::MAX, &thr), 2);
    }

    #[test]
    fn grid_is_logarithmic() {
        let g = checkpoint_grid(1_000_000_000, 1.6).unwrap();
        assert!(g.len() <= 60, "{}", g.len());
        assert_eq!(*g.last().unwrap(), 1_000_000_000);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(&checkpoint_grid(10, 1.3).unwrap()[..4], &[1, 2, 3, 4]);
        assert!(checkpoint_grid(10, 1.0).is_err());
    }

    #[test]
    fn strong_left_drift_stays_near_origin() {
        let spec = EnvironmentSpec::new(-0.99, DopeProfile::One, ZetaRegime::Rademacher, 100, 1).unwrap();
        let env = Environment::sample(&spec);
        let st = run_trajectory(&env, 1_000_000, 1.3, 5).unwrap();
        assert!(*st.running_max.last().unwrap() <= 6);
        assert_eq!(st.steps, 1_000_000);
    }

    #[test]
    fn exhaustion_is_reported() {
        let spec = EnvironmentSpec::new(0.9, DopeProfile::One, ZetaRegime::Rademacher, 50, 1).unwrap();
        let env = Environment::sample(&spec);
        match run_trajectory(&env, 1_000_000, 1.3, 2) {
            Err(Error::EnvironmentExhausted { level, time }) => {
                assert_eq!(level, 49);
                assert!(time >= 49);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lazy_and_materialised_runs_agree() {
        let spec = EnvironmentSpec::new(-0.5, DopeProfile::PowerLaw { beta: 0.2 }, ZetaRegime::Rademacher, 5000, 9)
            .unwrap();
        let a = run_trajectory(&Environment::sample(&spec), 200_000, 1.3, 3).unwrap();
        let b = run_trajectory_lazy(&spec, 200_000, 1.3, 3).unwrap();
        assert_eq!(a, b);
    }

    fn synthetic(f: impl Fn(f64) -> u64) -> TrajectoryStats {
        let checkpoints = checkpoint_grid(1_000_000_000, 1.3).unwrap();
        let running_max: Vec<u64> = checkpoints.iter().map(|&t| f(t as f64)).collect();
        TrajectoryStats {
            position: running_max.clone(),
            running_max,
            first_hit: vec![0],
            steps: *checkpoints.last().unwrap(),
            checkpoints,
            seed: 0,
        }
    }

    #[test]
    fn fit_recovers_its_generator() {
        let st = synthetic(|t| ceil(pow(log(t), 1.25)) as u64);
        let fit = fit_envelope(&st, &FitOptions::default()).unwrap();
        assert!(fit.theta >= 1.15 && fit.theta <= 1.35, "{fit:?}");
        assert!(st.checkpoints[fit.window.0] >= 10_000);
    }

    #[test]
    fn constant_max_is_flagged() {
        let fit = fit_envelope(&synthetic(|_| 7), &FitOptions::default()).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.theta, 0.0);
    }

    #[test]
    fn too_few_checkpoints() {
        let st = synthetic(|t| t as u64);
        let opts = FitOptions { min_time: 500_000_000, ..FitOptions::default() };
        assert!(matches!(fit_envelope(&st, &opts), Err(Error::InsufficientCheckpoints { .. })));
    }

    #[test]
    fn limsup_targets() {
        let s = |beta, delta| {
            EnvironmentSpec::new(delta, DopeProfile::PowerLaw { beta }, ZetaRegime::Rademacher, 10, 0).unwrap()
        };
        assert!((limsup_constant(0.5, log(3.0)) - 0.2071).abs() < 1e-4);
        assert!(limsup_target(&s(0.5, -0.5)).is_err());
        assert!((limsup_target(&s(0.2, -0.5)).unwrap() - 0.672).abs() < 1e-3);
        assert!(limsup_target(&s(0.2, 0.0)).is_err());
        assert!(limsup_target(&s(0.7, -0.5)).is_err());
    }
}
