//! Validation suites. Each reproduces one acceptance experiment at its
//! declared scale (overridable through [`SuiteScale`]) and reports a verdict.

use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use rwre_core::env::{DopeProfile, Environment, EnvironmentSpec, ZetaRegime};
use rwre_core::functionals::{
    bound_sandwich, compute, hitting_time_oracle, martingale_residuals, monte_carlo_hitting,
};
use rwre_core::limit_laws::{check_sums_decomposition, Check};
use rwre_core::phase::ClassifierConfig;
use rwre_core::rng::{derive_seed, tag, unit_closed0};
use rwre_core::walk::{limsup_constant, FitOptions};

use crate::config::{Format, Header, RunConfig, Suite, SuiteScale};
use crate::grid::GridConfig;
use crate::output;
use crate::run::{self, fit_replicas, par_map, with_threads};

#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub passed: bool,
    /// One line: the measured quantity against its envelope.
    pub summary: String,
    pub details: Value,
    #[serde(skip)]
    pub seconds: f64,
}

pub const ALL: [Suite; 10] = [
    Suite::Oracle,
    Suite::Martingale,
    Suite::Bounds,
    Suite::MonteCarlo,
    Suite::Phase,
    Suite::Envelope,
    Suite::HeavyEnvelope,
    Suite::LimitLaws,
    Suite::Decomposition,
    Suite::Determinism,
];

/// Run one suite, or every suite for [`Suite::All`].
pub fn run_suite(suite: Suite, seed: u64, scale: &SuiteScale) -> anyhow::Result<Vec<SuiteOutcome>> {
    if suite == Suite::All {
        return ALL.iter().map(|&s| run_one(s, seed, scale)).collect();
    }
    Ok(vec![run_one(suite, seed, scale)?])
}

pub fn run_one(suite: Suite, seed: u64, scale: &SuiteScale) -> anyhow::Result<SuiteOutcome> {
    let t0 = Instant::now();
    let (passed, summary, details) = match suite {
        Suite::Oracle => oracle(seed, scale)?,
        Suite::Martingale => martingale(seed, scale)?,
        Suite::Bounds => bounds(seed, scale)?,
        Suite::MonteCarlo => monte_carlo(seed, scale)?,
        Suite::Phase => phase(seed, scale)?,
        Suite::Envelope => envelope(seed, scale, false)?,
        Suite::HeavyEnvelope => envelope(seed, scale, true)?,
        Suite::LimitLaws => limit_laws(seed, scale)?,
        Suite::Decomposition => decomposition(seed, scale)?,
        Suite::Determinism => determinism(seed)?,
        Suite::All => unreachable!("expanded by run_suite"),
    };
    Ok(SuiteOutcome { suite, passed, summary, details, seconds: t0.elapsed().as_secs_f64() })
}

/// Estimated work of a suite in elementary updates (sites or steps), for
/// dry runs.
pub fn planned_work(suite: Suite, scale: &SuiteScale) -> u64 {
    let s = |x: Option<u64>, d: u64| x.unwrap_or(d);
    match suite {
        Suite::Oracle => 8 * s(scale.replicas, 100) * s(scale.sites, 200).pow(2),
        Suite::Martingale => 8 * s(scale.replicas, 125) * s(scale.sites, 2000),
        Suite::Bounds => 8 * s(scale.replicas, 125) * s(scale.sites, 100_000),
        Suite::MonteCarlo => s(scale.replicas, 20) * s(scale.trials, 100_000) * 100,
        Suite::Phase => 28 * s(scale.replicas, 20) * s(scale.sites, 1_000_000),
        Suite::Envelope | Suite::HeavyEnvelope => s(scale.replicas, 50) * s(scale.steps, 100_000_000),
        Suite::LimitLaws => s(scale.replicas, 50) * s(scale.sites, 1_000_000) * 14,
        Suite::Decomposition => 3 * s(scale.sites, 10_000_000),
        Suite::Determinism => 2_000_000,
        Suite::All => ALL.iter().map(|&x| planned_work(x, scale)).sum(),
    }
}

type Verdict = (bool, String, Value);

/// Laws exercised by the exact-identity suites.
fn identity_laws() -> Vec<(&'static str, DopeProfile, ZetaRegime)> {
    let mut v = vec![
        ("rademacher", DopeProfile::Zero, ZetaRegime::Rademacher),
        ("gaussian", DopeProfile::Zero, ZetaRegime::Gaussian { sigma: 1.0 }),
    ];
    for (name, a) in [("heavy-1.2", 1.2), ("heavy-1.5", 1.5), ("heavy-1.8", 1.8)] {
        v.push((name, DopeProfile::Zero, ZetaRegime::heavy(a)));
    }
    for (name, b) in [("doped-0.2", 0.2), ("doped-0.5", 0.5), ("doped-0.8", 0.8)] {
        v.push((name, DopeProfile::PowerLaw { beta: b }, ZetaRegime::Rademacher));
    }
    v
}

/// Environment `i` of law `law`: `delta` uniform on `[-0.9, 0.9)`.
fn identity_spec(root: u64, law: usize, i: u64, length: u64) -> anyhow::Result<EnvironmentSpec> {
    let (_, dope, zeta) = identity_laws()[law];
    let cell = derive_seed(root, tag::CELL, law as u64);
    let delta = -0.9 + 1.8 * unit_closed0(derive_seed(cell, tag::TRIAL, i));
    Ok(EnvironmentSpec::new(delta, dope, zeta, length, derive_seed(cell, tag::ENVIRONMENT, i))?)
}

fn identity_units(per_law: u64) -> Vec<(usize, u64)> {
    (0..identity_laws().len()).flat_map(|l| (0..per_law).map(move |i| (l, i))).collect()
}

fn oracle(root: u64, scale: &SuiteScale) -> anyhow::Result<Verdict> {
    let per_law = scale.replicas.unwrap_or(100);
    let n = scale.sites.unwrap_or(200) as usize;
    let worst = par_map(&identity_units(per_law), |&(l, i)| -> anyhow::Result<(f64, usize, usize, u64)> {
        let env = Environment::sample(&identity_spec(root, l, i, n as u64)?);
        let fns = compute(&env, n)?;
        let mut w = (0.0f64, 0usize);
        for k in 1..=n {
            let o = hitting_time_oracle(&env, k, Some(n))?;
            let err = (fns.log_t[k] - o).abs() / fns.log_t[k].abs().max(o.abs()).max(1.0);
            if err > w.0 {
                w = (err, k);
            }
        }
        Ok((w.0, w.1, l, i))
    })
    .into_iter()
    .collect::<anyhow::Result<Vec<_>>>()?;
    let per_law_max: Vec<Value> = identity_laws()
        .iter()
        .enumerate()
        .map(|(l, law)| {
            let m = worst.iter().filter(|w| w.2 == l).map(|w| w.0).fold(0.0, f64::max);
            json!({ "law": law.0, "maxRelativeError": m })
        })
        .collect();
    let max = worst.iter().max_by(|a, b| a.0.total_cmp(&b.0)).copied().unwrap_or((0.0, 0, 0, 0));
    Ok((
        max.0 <= 1e-8,
        format!("max relative |logT formula - logT oracle| = {:.2e} (<= 1e-8) over {} environments, n <= {n}", max.0, worst.len()),
        json!({ "perLaw": per_law_max, "worst": { "error": max.0, "n": max.1, "law": identity_laws()[max.2].0, "index": max.3 } }),
    ))
}

fn martingale(root: u64, scale: &SuiteScale) -> anyhow::Result<Verdict> {
    let per_law = scale.replicas.unwrap_or(125);
    let n = scale.sites.unwrap_or(2000);
    let reps = par_map(&identity_units(per_law), |&(l, i)| -> anyhow::Result<_> {
        let env = Environment::sample(&identity_spec(root, l, i, n + 1)?);
        let fns = compute(&env, n as usize)?;
        Ok(martingale_residuals(&env, &fns, n as usize)?)
    })
    .into_iter()
    .collect::<anyhow::Result<Vec<_>>>()?;
    let max_f = reps.iter().map(|r| r.max_residual_f).fold(0.0, f64::max);
    let max_t = reps.iter().map(|r| r.max_residual_t).fold(0.0, f64::max);
    let checked: usize = reps.iter().map(|r| r.sites_checked_f + r.sites_checked_t).sum();
    Ok((
        max_f <= 1e-9 && max_t <= 1e-9,
        format!(
            "max residual f {max_f:.2e}, T {max_t:.2e} (<= 1e-9) over {} environments, {checked} site identities",
            reps.len()
        ),
        json!({ "maxResidualF": max_f, "maxResidualT": max_t, "environments": reps.len(), "identitiesChecked": checked }),
    ))
}

fn bounds(root: u64, scale: &SuiteScale) -> anyhow::Result<Verdict> {
    let per_law = scale.replicas.unwrap_or(125);
    let n = scale.sites.unwrap_or(100_000);
    let reps = par_map(&identity_units(per_law), |&(l, i)| -> anyhow::Result<_> {
        let env = Environment::sample(&identity_spec(root, l, i, n)?);
        let fns = compute(&env, n as usize)?;
        Ok(bound_sandwich(&fns, n as usize)?)
    })
    .into_iter()
    .collect::<anyhow::Result<Vec<_>>>()?;
    let violations: usize = reps.iter().map(|r| r.violations.len()).sum();
    let first = reps.iter().flat_map(|r| r.violations.first()).next();
    let min = |g: fn(&rwre_core::functionals::SandwichReport) -> f64| reps.iter().map(g).fold(f64::INFINITY, f64::min);
    Ok((
        violations == 0,
        format!("{violations} violations (need 0) over {} environments x n = {n}", reps.len()),
        json!({
            "violations": violations,
            "firstViolation": first,
            "minSlack": {
                "fLower": min(|r| r.min_slack_f_lower),
                "tLower": min(|r| r.min_slack_t_lower),
                "tUpperSplit": min(|r| r.min_slack_t_upper_split),
                "tUpperAbs": min(|r| r.min_slack_t_upper_abs),
            }
        }),
    ))
}

fn monte_carlo(root: u64, scale: &SuiteScale) -> anyhow::Result<Verdict> {
    let pairs = scale.replicas.unwrap_or(20) as usize;
    let trials = scale.trials.unwrap_or(100_000);
    let max_n = scale.sites.unwrap_or(10).max(1);
    let laws = identity_laws().len();
    // Candidates in a fixed order; the first `pairs` with T(n) <= 1e4 are used.
    let mut chosen = Vec::new();
    for c in 0u64.. {
        if chosen.len() == pairs {
            break;
        }
        anyhow::ensure!(c < 100_000, "could not find {pairs} environments with T(n) <= 1e4");
        let spec = identity_spec(root, c as usize % laws, c, max_n + 1)?;
        let env = Environment::sample(&spec);
        let n = 1 + (derive_seed(root, tag::TRIAL, c) % max_n) as usize;
        let log_t = compute(&env, n)?.log_t[n];
        if log_t <= 1e4f64.ln() {
            chosen.push((c, env, n, log_t));
        }
    }
    let results = par_map(&chosen, |(c, env, n, log_t)| -> anyhow::Result<Value> {
        let est = monte_carlo_hitting(env, *n, trials, derive_seed(root, tag::WALK, *c), u64::MAX)?;
        let exact = log_t.exp();
        let z = (est.mean - exact) / est.stderr;
        Ok(json!({ "candidate": c, "n": n, "exact": exact, "mean": est.mean, "stderr": est.stderr, "z": z }))
    })
    .into_iter()
    .collect::<anyhow::Result<Vec<_>>>()?;
    let zs: Vec<f64> = results.iter().map(|r| r["z"].as_f64().unwrap_or(f64::INFINITY)).collect();
    let within = zs.iter().filter(|z| z.abs() <= 3.0).count();
    let max_z = zs.iter().map(|z| z.abs()).fold(0.0, f64::max);
    Ok((
        within == zs.len(),
        format!("{within}/{} pairs within 3 standard errors (max |z| = {max_z:.2}), {trials} trials each", zs.len()),
        json!({ "pairs": results }),
    ))
}

fn phase(root: u64, scale: &SuiteScale) -> anyhow::Result<Verdict> {
    let grid = GridConfig::theorem_table(scale.replicas.unwrap_or(20), scale.sites.unwrap_or(1_000_000), root);
    let rows = run::sweep(&grid, &ClassifierConfig::default())?;
    let scored: Vec<f64> = rows.iter().filter(|r| r.0.scored).filter_map(|r| r.1.agreement).collect();
    let good = scored.iter().filter(|&&a| a >= 0.9).count();
    let frac = good as f64 / scored.len().max(1) as f64;
    let cells: Vec<Value> = rows
        .iter()
        .map(|(c, r)| json!({ "spec": c.spec, "predicted": r.predicted, "counts": r.counts, "agreement": r.agreement }))
        .collect();
    Ok((
        !scored.is_empty() && frac >= 0.9,
        format!(
            "{good}/{} scored cells with agreement >= 0.9 ({:.0}%, need 90%), K = {}, N = {}",
            scored.len(),
            100.0 * frac,
            grid.k,
            grid.n
        ),
        json!({ "cells": cells }),
    ))
}

fn envelope(root: u64, scale: &SuiteScale, heavy: bool) -> anyhow::Result<Verdict> {
    let steps = scale.steps.unwrap_or(100_000_000);
    let replicas = scale.replicas.unwrap_or(50);
    let (beta, zeta) = if heavy { (0.8, ZetaRegime::heavy(1.5)) } else { (0.2, ZetaRegime::Rademacher) };
    let spec = EnvironmentSpec::new(-0.5, DopeProfile::PowerLaw { beta }, zeta, 10_000_000, 0)?;
    let stats = run::simulate(&spec, root, steps, replicas, 1.3)?;
    let fit = fit_replicas(&stats, &FitOptions::default(), Some(&spec));
    let details = serde_json::to_value(&fit)?;
    if heavy {
        let ok = (1.1..=1.9).contains(&fit.theta);
        return Ok((
            ok,
            format!("median theta {:.3} in [1.1, 1.9] (alpha = 1.5; finite variance would give 2), {replicas} replicas, T = {steps}", fit.theta),
            details,
        ));
    }
    let target = limsup_constant(beta, spec.rho());
    let ratio = fit.prefactor / target;
    let ok = (1.0..=1.6).contains(&fit.theta) && (1.0 / 3.0..=3.0).contains(&ratio);
    Ok((
        ok,
        format!(
            "median theta {:.3} in [1.0, 1.6]; median prefactor {:.3} vs {target:.3} (ratio {ratio:.2}, need within 3x), {replicas} replicas, T = {steps}",
            fit.theta, fit.prefactor
        ),
        details,
    ))
}

fn limit_laws(root: u64, scale: &SuiteScale) -> anyhow::Result<Verdict> {
    let n = scale.sites.unwrap_or(1_000_000);
    let k = scale.replicas.unwrap_or(50);
    let rad = ZetaRegime::Rademacher;
    let heavy = ZetaRegime::heavy(1.5);
    let scored = [
        run::limit_check(Check::Lil, &rad, n, k, root)?,
        run::limit_check(Check::Feller { eps: 0.5 }, &heavy, n, k, root)?,
        run::limit_check(Check::Hirsch { eps: 0.5 }, &rad, n, k, root)?,
        run::limit_check(Check::Kz { eps: 0.5 }, &heavy, n, k, root)?,
        run::limit_check(Check::Chung, &rad, 10 * n, k, root)?,
    ];
    let em = run::limit_check(Check::Em, &heavy, n, k, root)?;
    let ks = run::symmetry(&rad, 1000, 10_000, root)?;
    let parts: Vec<String> = scored
        .iter()
        .map(|r| {
            let v = match (r.passing_fraction, r.median_envelope) {
                (Some(p), _) => format!("{:.0}%", 100.0 * p),
                (_, Some(_)) => format!("median {:.3}", r.statistic.median),
                _ => String::new(),
            };
            format!("{} {} {}", r.check.name(), v, if r.passed == Some(true) { "ok" } else { "FAIL" })
        })
        .collect();
    Ok((
        scored.iter().all(|r| r.passed == Some(true)),
        format!("{}; {k} replicas", parts.join(", ")),
        json!({ "checks": scored, "em": em, "symmetry": ks }),
    ))
}

fn decomposition(root: u64, scale: &SuiteScale) -> anyhow::Result<Verdict> {
    let n = scale.sites.unwrap_or(10_000_000);
    let cases = [DopeProfile::PowerLaw { beta: 0.2 }, DopeProfile::PowerLaw { beta: 0.7 }, DopeProfile::Zero];
    let reports = par_map(&[0usize, 1, 2], |&i| -> anyhow::Result<_> {
        let seed = derive_seed(root, tag::ENVIRONMENT, i as u64);
        let spec = EnvironmentSpec::new(-0.5, cases[i], ZetaRegime::Rademacher, n, seed)?;
        Ok(check_sums_decomposition(&spec, n)?)
    })
    .into_iter()
    .collect::<anyhow::Result<Vec<_>>>()?;
    let r = &reports;
    Ok((
        r.iter().all(|x| x.passed),
        format!(
            "leading exponent {:.3} in [0.7, 0.9], coefficient {:.2} vs {:.2}; residual slope {:.3} <= 0.4; undoped residual {}; n = {n}",
            r[0].slope,
            r[0].coefficient.unwrap_or(f64::NAN),
            r[0].coefficient_target.unwrap_or(f64::NAN),
            r[1].slope,
            r[2].max_abs_residual
        ),
        serde_json::to_value(&reports)?,
    ))
}

/// Render the primary output of small runs of each parallel command under
/// one and three worker threads, and compare the bytes.
fn determinism(root: u64) -> anyhow::Result<Verdict> {
    let spec = EnvironmentSpec::new(-0.5, DopeProfile::PowerLaw { beta: 0.2 }, ZetaRegime::Rademacher, 100_000, root)?;
    let grid = GridConfig::theorem_table(3, 3000, root);
    let render = |threads: usize| -> anyhow::Result<Vec<String>> {
        with_threads(Some(threads), || -> anyhow::Result<Vec<String>> {
            let cfg = ClassifierConfig::default();
            let sweep_cfg = RunConfig::Sweep { grid: grid.clone(), classifier: cfg, format: Format::Csv };
            let rows = run::sweep(&grid, &cfg)?;
            let sweep = output::sweep_csv(&Header::new("sweep", &sweep_cfg), grid.k, grid.n, &rows);
            let sim_cfg = RunConfig::Simulate {
                spec,
                seed: root,
                steps: 200_000,
                replicas: 6,
                ratio: 1.3,
                fit: Some(FitOptions::default()),
                format: Format::Json,
            };
            let stats = run::simulate(&spec, root, 200_000, 6, 1.3)?;
            let fit = fit_replicas(&stats, &FitOptions::default(), Some(&spec));
            let sim = output::json_with_header(&Header::new("fit", &sim_cfg), &fit);
            let lil = run::limit_check(Check::Lil, &ZetaRegime::Rademacher, 20_000, 8, root)?;
            Ok(vec![sweep, sim, serde_json::to_string(&lil)?])
        })?
    };
    let (a, b) = (render(1)?, render(3)?);
    let names = ["sweep", "simulate", "limit-laws"];
    let differing: Vec<&str> = names.iter().zip(a.iter().zip(&b)).filter(|(_, (x, y))| x != y).map(|(n, _)| *n).collect();
    Ok((
        differing.is_empty(),
        if differing.is_empty() {
            "sweep, simulate+fit and limit-law outputs byte-identical under 1 and 3 threads".to_string()
        } else {
            format!("outputs differ between 1 and 3 threads: {}", differing.join(", "))
        },
        json!({ "compared": names, "differing": differing }),
    ))
}
