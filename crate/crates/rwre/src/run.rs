//! Parallel drivers. Work units are mapped with rayon and collected in input
//! order, and every unit derives its randomness from the root seed and its
//! own index, so results do not depend on the number of threads.

use anyhow::Context;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rwre_core::env::{EnvironmentSpec, ZetaRegime};
use rwre_core::limit_laws::{self, Check, EnvelopeReport, KsReport};
use rwre_core::math::median;
use rwre_core::phase::{classify_spec, replica_spec, summarize_cell, CellResult, ClassifierConfig, Empirical};
use rwre_core::rng::{derive_seed, tag};
use rwre_core::walk::{fit_envelope, limsup_target, run_trajectory_lazy, FitOptions, TrajectoryStats};

use crate::grid::{Cell, GridConfig};

/// Run `f` on a pool of `threads` workers (all cores when `None`).
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> anyhow::Result<R> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.unwrap_or(0)).build()?;
    Ok(pool.install(f))
}

pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.par_iter().map(f).collect()
}

/// Classify `k` environments in every cell of the grid.
pub fn sweep(grid: &GridConfig, cfg: &ClassifierConfig) -> anyhow::Result<Vec<(Cell, CellResult)>> {
    let cells = grid.cells()?;
    let units: Vec<(usize, u64)> = (0..cells.len()).flat_map(|c| (0..grid.k).map(move |r| (c, r))).collect();
    let verdicts = par_map(&units, |&(c, r)| -> anyhow::Result<Empirical> {
        let spec = replica_spec(&cells[c].spec, c as u64, r, grid.n, grid.seed)?;
        Ok(classify_spec(&spec, cfg).empirical)
    })
    .into_iter()
    .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(cells
        .iter()
        .zip(verdicts.chunks(grid.k as usize))
        .map(|(cell, v)| (*cell, summarize_cell(&cell.spec, v)))
        .collect())
}

/// Environment and walk seeds of simulation replica `r`.
pub fn simulation_seeds(root: u64, r: u64) -> (u64, u64) {
    (derive_seed(root, tag::ENVIRONMENT, r), derive_seed(root, tag::WALK, r))
}

/// `replicas` independent (environment, walk) pairs from the law of `spec`.
/// The environment of each is generated lazily as the walk reaches new sites.
pub fn simulate(
    spec: &EnvironmentSpec,
    root: u64,
    steps: u64,
    replicas: u64,
    ratio: f64,
) -> anyhow::Result<Vec<TrajectoryStats>> {
    let idx: Vec<u64> = (0..replicas).collect();
    par_map(&idx, |&r| {
        let (env_seed, walk_seed) = simulation_seeds(root, r);
        run_trajectory_lazy(&spec.with_seed(env_seed), steps, ratio, walk_seed)
            .with_context(|| format!("replica {r}"))
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaFit {
    pub replica: usize,
    pub theta: f64,
    pub prefactor: f64,
    #[serde(rename = "rSquared")]
    pub r_squared: f64,
    pub degenerate: bool,
    #[serde(rename = "finalMax")]
    pub final_max: u64,
}

/// `M(T) / (log T)^(1/(1-beta))` against its almost-sure limsup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimsupProbe {
    pub target: f64,
    #[serde(rename = "maxRatio")]
    pub max_ratio: f64,
    #[serde(rename = "medianRatio")]
    pub median_ratio: f64,
}

/// Medians over replicas of the envelope fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub theta: f64,
    pub prefactor: f64,
    /// Checkpoint times `[t_start, t_end]` of the first replica's fit window.
    pub window: (u64, u64),
    #[serde(rename = "rSquared")]
    pub r_squared: f64,
    pub replicas: usize,
    /// Replicas with too few usable checkpoints.
    pub unfit: usize,
    #[serde(rename = "perReplica")]
    pub per_replica: Vec<ReplicaFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limsup: Option<LimsupProbe>,
}

pub fn fit_replicas(stats: &[TrajectoryStats], opts: &FitOptions, spec: Option<&EnvironmentSpec>) -> FitSummary {
    let mut per_replica = Vec::new();
    let mut window = (0, 0);
    for (r, s) in stats.iter().enumerate() {
        if let Ok(f) = fit_envelope(s, opts) {
            if per_replica.is_empty() {
                window = (s.checkpoints[f.window.0], s.checkpoints[f.window.1 - 1]);
            }
            per_replica.push(ReplicaFit {
                replica: r,
                theta: f.theta,
                prefactor: f.prefactor,
                r_squared: f.r_squared,
                degenerate: f.degenerate,
                final_max: *s.running_max.last().unwrap_or(&0),
            });
        }
    }
    let med = |g: fn(&ReplicaFit) -> f64| median(&per_replica.iter().map(g).collect::<Vec<_>>()).unwrap_or(f64::NAN);
    let limsup = spec.and_then(|sp| {
        let target = limsup_target(sp).ok()?;
        let beta = sp.dope().beta()?;
        let ratios: Vec<f64> = stats.iter().map(|s| rwre_core::walk::limsup_ratio(s, beta)).collect();
        Some(LimsupProbe {
            target,
            max_ratio: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            median_ratio: median(&ratios)?,
        })
    });
    FitSummary {
        theta: med(|f| f.theta),
        prefactor: med(|f| f.prefactor),
        window,
        r_squared: med(|f| f.r_squared),
        replicas: stats.len(),
        unfit: stats.len() - per_replica.len(),
        per_replica,
        limsup,
    }
}

/// [`limit_laws::run_check`] with replicas in parallel.
pub fn limit_check(check: Check, regime: &ZetaRegime, n: u64, replicas: u64, root: u64) -> anyhow::Result<EnvelopeReport> {
    let idx: Vec<u64> = (0..replicas).collect();
    let outcomes = par_map(&idx, |&r| check.evaluate(&limit_laws::sum_path(regime, n, limit_laws::replica_seed(root, r))?))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok(limit_laws::summarize(check, regime, n, &outcomes))
}

/// [`limit_laws::symmetry_ks`] with replicas in parallel.
pub fn symmetry(regime: &ZetaRegime, n: u64, replicas: u64, root: u64) -> anyhow::Result<KsReport> {
    let idx: Vec<u64> = (0..replicas).collect();
    let finals = par_map(&idx, |&r| {
        limit_laws::sum_path(regime, n, limit_laws::replica_seed(root, r)).map(|p| *p.s.last().expect("n >= 1"))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    Ok(limit_laws::ks_against_mirror(&finals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rwre_core::env::DopeProfile;
    use rwre_core::phase::phase_sweep;

    #[test]
    fn parallel_sweep_matches_the_sequential_one() {
        let grid = GridConfig {
            k: 3,
            n: 2000,
            ..GridConfig::theorem_table(3, 2000, 9)
        };
        let cfg = ClassifierConfig::default();
        let par = with_threads(Some(3), || sweep(&grid, &cfg)).unwrap().unwrap();
        let specs: Vec<EnvironmentSpec> = grid.cells().unwrap().iter().map(|c| c.spec).collect();
        let seq = phase_sweep(&specs, 3, 2000, 9, &cfg).unwrap();
        assert_eq!(par.into_iter().map(|p| p.1).collect::<Vec<_>>(), seq);
    }

    #[test]
    fn parallel_limit_check_matches_the_sequential_one() {
        let z = ZetaRegime::Rademacher;
        let a = with_threads(Some(2), || limit_check(Check::Lil, &z, 20_000, 6, 4)).unwrap().unwrap();
        let b = limit_laws::check_lil(&z, 20_000, 6, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn simulation_is_thread_count_invariant() {
        let spec = EnvironmentSpec::new(-0.5, DopeProfile::PowerLaw { beta: 0.2 }, ZetaRegime::Rademacher, 100_000, 0)
            .unwrap();
        let a = with_threads(Some(1), || simulate(&spec, 5, 50_000, 4, 1.3)).unwrap().unwrap();
        let b = with_threads(Some(3), || simulate(&spec, 5, 50_000, 4, 1.3)).unwrap().unwrap();
        assert_eq!(a, b);
        let f = fit_replicas(&a, &FitOptions::default(), Some(&spec));
        assert_eq!(f.replicas, 4);
        assert!(f.limsup.is_some());
    }
}
