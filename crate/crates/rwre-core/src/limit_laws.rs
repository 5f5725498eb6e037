//! Finite-horizon envelope checks of almost-sure laws for i.i.d. partial
//! sums `S_k = zeta_0 + ... + zeta_{k-1}`, and of the doped-sum expansions.
//!
//! An almost-sure statement is tested as "at least a fraction `q` of `K`
//! replicas satisfy the bound at horizon `n`". All statistics are functions
//! of `(regime, n, seed)` only.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::env::{partial_sums, DopeProfile, Environment, EnvironmentSpec, ZetaRegime};
use crate::error::{invalid, Error, Result};
use crate::math::{fabs, linear_fit, log, pow, quantile, sqrt};
use crate::rng::derive_seed;

/// Tag for partial-sum replica seeds. Every check on the same regime and root
/// seed sees the same paths.
const SUM_TAG: u64 = 0x7375_6d73;

/// Smallest horizon accepted by the iterated-logarithm checks.
pub const MIN_HORIZON: u64 = 10_000;

/// First checkpoint entering the liminf statistics.
pub const LIMINF_FIRST_CHECKPOINT: u64 = 1 << 10;

/// `1, 2, 4, ..., 2^k <= n`, then `n` itself if it is not a power of two.
pub fn dyadic_checkpoints(n: u64) -> Vec<u64> {
    let mut v = Vec::new();
    let mut c = 1u64;
    while c <= n {
        v.push(c);
        match c.checked_mul(2) {
            Some(d) => c = d,
            None => break,
        }
    }
    if v.last() != Some(&n) && n > 0 {
        v.push(n);
    }
    v
}

/// Partial sums observed at dyadic checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumPathStats {
    pub n: u64,
    pub checkpoints: Vec<u64>,
    pub s: Vec<f64>,
    pub running_max_s: Vec<f64>,
    pub running_max_abs_s: Vec<f64>,
    pub regime: ZetaRegime,
    pub seed: u64,
}

/// The i.i.d. sequence behind seed `seed`: the undoped environment with that
/// seed, so `zeta_j` here equals `zeta_j` of any environment with the same
/// seed and law.
pub fn sum_path(regime: &ZetaRegime, n: u64, seed: u64) -> Result<SumPathStats> {
    let spec = EnvironmentSpec::new(0.0, DopeProfile::Zero, *regime, n, seed)?;
    let checkpoints = dyadic_checkpoints(n);
    let mut out = SumPathStats {
        n,
        s: Vec::with_capacity(checkpoints.len()),
        running_max_s: Vec::with_capacity(checkpoints.len()),
        running_max_abs_s: Vec::with_capacity(checkpoints.len()),
        checkpoints,
        regime: *regime,
        seed,
    };
    let (mut s, mut mx, mut mabs) = (0.0f64, f64::NEG_INFINITY, 0.0f64);
    let mut next = 0usize;
    for (k, site) in spec.sites().enumerate() {
        s += site.lambda;
        mx = mx.max(s);
        mabs = mabs.max(fabs(s));
        if k as u64 + 1 == out.checkpoints[next] {
            out.s.push(s);
            out.running_max_s.push(mx);
            out.running_max_abs_s.push(mabs);
            next += 1;
        }
    }
    Ok(out)
}

/// Seed of replica `r` under `root`.
pub fn replica_seed(root: u64, r: u64) -> u64 {
    derive_seed(root, SUM_TAG, r)
}

fn log_log(k: f64) -> f64 {
    log(log(k))
}

/// Checks in the suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum Check {
    /// `max |S_k| / (sigma sqrt(2 k log log k))` over the last ten
    /// checkpoints, in `[0.5, 1.3]` for 80% of replicas.
    Lil,
    /// Exceedances of `|S_k| > k^(1/alpha) (log k)^(1/alpha + eps)` over
    /// checkpoints in `[n/10, n]`; none for 90% of replicas.
    Feller { eps: f64 },
    /// `max_{i<=n} S_i / (n^(1/2) (log n)^(-1-eps)) >= 1` for 90% of replicas.
    Hirsch { eps: f64 },
    /// `max_{i<=n} S_i / (n^(1/alpha) (log n)^(-2/alpha-eps)) >= 1` for 90%.
    Kz { eps: f64 },
    /// `min_k k^(-1/2) (log log k)^(1/2) max_{i<=k} |S_i|`; median within
    /// `[0.5, 2] * pi sigma / sqrt 8`.
    Chung,
    /// `min_k k^(-1/alpha) (log log k)^(1/alpha) max_{i<=k} |S_i|`; reported.
    Em,
}

impl Check {
    pub fn name(&self) -> &'static str {
        match self {
            Check::Lil => "lil",
            Check::Feller { .. } => "feller",
            Check::Hirsch { .. } => "hirsch",
            Check::Kz { .. } => "kz",
            Check::Chung => "chung",
            Check::Em => "em",
        }
    }

    fn validate(&self, regime: &ZetaRegime, n: u64) -> Result<()> {
        let finite = regime.sigma().is_some();
        let heavy = regime.alpha().is_some();
        let ok = match self {
            Check::Lil | Check::Hirsch { .. } | Check::Chung => finite,
            Check::Feller { .. } | Check::Kz { .. } | Check::Em => heavy,
        };
        if !ok {
            return Err(invalid(alloc::format!("{} check does not apply to {regime:?}", self.name())));
        }
        if matches!(self, Check::Lil | Check::Chung | Check::Em) && n < MIN_HORIZON {
            return Err(Error::HorizonTooShort { n, min: MIN_HORIZON });
        }
        if n < 16 {
            return Err(Error::HorizonTooShort { n, min: 16 });
        }
        Ok(())
    }

    /// Per-replica statistic and whether the replica satisfies its bound
    /// (`None` where there is no per-replica bound).
    pub fn evaluate(&self, path: &SumPathStats) -> Result<(f64, Option<bool>)> {
        self.validate(&path.regime, path.n)?;
        let cps = &path.checkpoints;
        let nf = path.n as f64;
        let last = path.s.len() - 1;
        Ok(match *self {
            Check::Lil => {
                let sigma = path.regime.sigma().expect("validated");
                let from = cps.len().saturating_sub(10);
                let v = (from..cps.len())
                    .map(|i| {
                        let k = cps[i] as f64;
                        fabs(path.s[i]) / (sigma * sqrt(2.0 * k * log_log(k)))
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                (v, Some((0.5..=1.3).contains(&v)))
            }
            Check::Feller { eps } => {
                let alpha = path.regime.alpha().expect("validated");
                let count = (0..cps.len())
                    .filter(|&i| cps[i] as f64 >= nf / 10.0 && cps[i] >= 3)
                    .filter(|&i| {
                        let k = cps[i] as f64;
                        fabs(path.s[i]) > pow(k, 1.0 / alpha) * pow(log(k), 1.0 / alpha + eps)
                    })
                    .count() as f64;
                (count, (eps > 0.0).then_some(count == 0.0))
            }
            Check::Hirsch { eps } => {
                let v = path.running_max_s[last] / (sqrt(nf) * pow(log(nf), -1.0 - eps));
                (v, (eps > 0.0).then_some(v >= 1.0))
            }
            Check::Kz { eps } => {
                let alpha = path.regime.alpha().expect("validated");
                let v = path.running_max_s[last] / (pow(nf, 1.0 / alpha) * pow(log(nf), -2.0 / alpha - eps));
                (v, (eps > 0.0).then_some(v >= 1.0))
            }
            Check::Chung | Check::Em => {
                let a = match *self {
                    Check::Chung => 2.0,
                    _ => path.regime.alpha().expect("validated"),
                };
                let v = (0..cps.len())
                    .filter(|&i| cps[i] >= LIMINF_FIRST_CHECKPOINT)
                    .map(|i| {
                        let k = cps[i] as f64;
                        pow(k, -1.0 / a) * pow(log_log(k), 1.0 / a) * path.running_max_abs_s[i]
                    })
                    .fold(f64::INFINITY, f64::min);
                (v, None)
            }
        })
    }

    /// Required fraction of passing replicas, where applicable.
    pub fn required_fraction(&self) -> Option<f64> {
        match self {
            Check::Lil => Some(0.8),
            Check::Feller { eps } | Check::Hirsch { eps } | Check::Kz { eps } => (*eps > 0.0).then_some(0.9),
            Check::Chung | Check::Em => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: f64,
    pub q10: f64,
    pub median: f64,
    pub q90: f64,
    pub max: f64,
}

impl Quantiles {
    pub fn of(xs: &[f64]) -> Quantiles {
        let q = |p| quantile(xs, p).unwrap_or(f64::NAN);
        Quantiles { min: q(0.0), q10: q(0.1), median: q(0.5), q90: q(0.9), max: q(1.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub check: Check,
    pub regime: ZetaRegime,
    pub n: u64,
    pub replicas: u64,
    pub statistic: Quantiles,
    /// Fraction of replicas within their bound.
    pub passing_fraction: Option<f64>,
    pub required_fraction: Option<f64>,
    /// Target interval for the median, for the liminf checks.
    pub median_envelope: Option<(f64, f64)>,
    /// `None` for report-only checks.
    pub passed: Option<bool>,
}

/// Combine per-replica outcomes into the check's verdict.
pub fn summarize(check: Check, regime: &ZetaRegime, n: u64, outcomes: &[(f64, Option<bool>)]) -> EnvelopeReport {
    let values: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let statistic = Quantiles::of(&values);
    let scored: Vec<bool> = outcomes.iter().filter_map(|o| o.1).collect();
    let passing_fraction = (!scored.is_empty() && scored.len() == outcomes.len())
        .then(|| scored.iter().filter(|&&b| b).count() as f64 / scored.len() as f64);
    let required_fraction = check.required_fraction();
    let median_envelope = match check {
        Check::Chung => {
            let target = core::f64::consts::PI * regime.sigma().unwrap_or(f64::NAN) / sqrt(8.0);
            Some((0.5 * target, 2.0 * target))
        }
        _ => None,
    };
    let passed = match (passing_fraction, required_fraction, median_envelope) {
        (Some(p), Some(q), _) => Some(p >= q),
        (_, _, Some((lo, hi))) => Some(statistic.median >= lo && statistic.median <= hi),
        _ => None,
    };
    EnvelopeReport {
        check,
        regime: *regime,
        n,
        replicas: outcomes.len() as u64,
        statistic,
        passing_fraction,
        required_fraction,
        median_envelope,
        passed,
    }
}

/// Run `check` over `replicas` paths sequentially.
pub fn run_check(check: Check, regime: &ZetaRegime, n: u64, replicas: u64, root: u64) -> Result<EnvelopeReport> {
    check.validate(regime, n)?;
    let outcomes = (0..replicas)
        .map(|r| check.evaluate(&sum_path(regime, n, replica_seed(root, r))?))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(check, regime, n, &outcomes))
}

pub fn check_lil(regime: &ZetaRegime, n: u64, replicas: u64, root: u64) -> Result<EnvelopeReport> {
    run_check(Check::Lil, regime, n, replicas, root)
}

pub fn check_feller(regime: &ZetaRegime, n: u64, eps: f64, replicas: u64, root: u64) -> Result<EnvelopeReport> {
    run_check(Check::Feller { eps }, regime, n, replicas, root)
}

pub fn check_hirsch(regime: &ZetaRegime, n: u64, eps: f64, replicas: u64, root: u64) -> Result<EnvelopeReport> {
    run_check(Check::Hirsch { eps }, regime, n, replicas, root)
}

pub fn check_kz(regime: &ZetaRegime, n: u64, eps: f64, replicas: u64, root: u64) -> Result<EnvelopeReport> {
    run_check(Check::Kz { eps }, regime, n, replicas, root)
}

pub fn check_chung(regime: &ZetaRegime, n: u64, replicas: u64, root: u64) -> Result<EnvelopeReport> {
    run_check(Check::Chung, regime, n, replicas, root)
}

pub fn check_em(regime: &ZetaRegime, n: u64, replicas: u64, root: u64) -> Result<EnvelopeReport> {
    run_check(Check::Em, regime, n, replicas, root)
}

/// Two-sample Kolmogorov-Smirnov comparison of `S_n` against `-S_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub statistic: f64,
    /// Asymptotic 1% critical value `1.628 sqrt(2/m)`.
    pub critical: f64,
    pub passed: bool,
}

/// KS distance between the empirical laws of `xs` and `-xs`.
pub fn ks_against_mirror(xs: &[f64]) -> KsReport {
    let mut a: Vec<f64> = xs.to_vec();
    a.sort_by(f64::total_cmp);
    let mut b: Vec<f64> = a.iter().rev().map(|x| -x).collect();
    b.sort_by(f64::total_cmp);
    let m = a.len();
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < m && j < m {
        let x = a[i].min(b[j]);
        while i < m && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max(fabs(i as f64 - j as f64) / m as f64);
    }
    let critical = 1.628 * sqrt(2.0 / m as f64);
    KsReport { statistic: d, critical, passed: d < critical }
}

/// `S_n` for `replicas` independent paths, tested for symmetry.
pub fn symmetry_ks(regime: &ZetaRegime, n: u64, replicas: u64, root: u64) -> Result<KsReport> {
    let finals = (0..replicas)
        .map(|r| Ok(*sum_path(regime, n, replica_seed(root, r))?.s.last().expect("n >= 1")))
        .collect::<Result<Vec<f64>>>()?;
    Ok(ks_against_mirror(&finals))
}

/// Which expansion of `S_n` applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expansion {
    /// `S_n = (rho c_beta + o(1)) n^(1-beta)`.
    LeadingTerm,
    /// `S_n - sum zeta_j = O(n^(1-beta))`, finite variance.
    FiniteVarianceResidual,
    /// `S_n - sum zeta_j = O(n^(1/alpha - eps))`, heavy tails.
    HeavyResidual,
    /// No doping: `S_n - sum zeta_j = 0`.
    Undoped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub expansion: Expansion,
    pub n: u64,
    pub checkpoints: Vec<u64>,
    /// Slope of `log |S_k|` (leading term) or `log |S_k - Z_k|` (residuals)
    /// against `log k`.
    pub slope: f64,
    pub slope_envelope: (f64, f64),
    /// `S_n / n^(1-beta)`, for the leading term.
    pub coefficient: Option<f64>,
    pub coefficient_target: Option<f64>,
    pub max_abs_residual: f64,
    pub passed: bool,
    pub note: String,
}

/// Compare `S_k` (the environment's partial sums) with `Z_k = zeta_0 + ... +
/// zeta_{k-1}` over dyadic checkpoints `k >= 2^10`, and test the expansion
/// the parameters call for.
pub fn check_sums_decomposition(spec: &EnvironmentSpec, n: u64) -> Result<DecompositionReport> {
    let spec = spec.with_length(n)?;
    let expansion = match (spec.dope(), spec.zeta()) {
        (DopeProfile::Zero, _) => Expansion::Undoped,
        (DopeProfile::PowerLaw { beta }, z) if z.sigma().is_some() => {
            if beta < 0.5 && spec.delta() != 0.0 {
                Expansion::LeadingTerm
            } else if beta > 0.5 {
                Expansion::FiniteVarianceResidual
            } else {
                return Err(Error::NotApplicable("no expansion at this dope exponent".to_string()));
            }
        }
        (DopeProfile::PowerLaw { beta }, ZetaRegime::HeavySymmetric { alpha, .. }) if alpha > 1.0 => {
            let crit = 1.0 - 1.0 / alpha;
            if beta < crit && spec.delta() != 0.0 {
                Expansion::LeadingTerm
            } else if beta > crit {
                Expansion::HeavyResidual
            } else {
                return Err(Error::NotApplicable("no expansion at this dope exponent".to_string()));
            }
        }
        _ => return Err(Error::NotApplicable("no partial-sum expansion for this law".to_string())),
    };
    let all = dyadic_checkpoints(n);
    let checkpoints: Vec<u64> = all.into_iter().filter(|&k| k >= 1 << 10).collect();
    if checkpoints.len() < 3 {
        return Err(Error::HorizonTooShort { n, min: 1 << 12 });
    }
    let mut s_at = Vec::with_capacity(checkpoints.len());
    let mut r_at = Vec::with_capacity(checkpoints.len());
    let (mut s, mut z, mut max_abs_residual) = (0.0f64, 0.0f64, 0.0f64);
    let mut next = 0usize;
    for (k, (site, zeta)) in spec.sites().with_zeta().enumerate() {
        s += site.lambda;
        z += zeta;
        max_abs_residual = max_abs_residual.max(fabs(s - z));
        if next < checkpoints.len() && k as u64 + 1 == checkpoints[next] {
            s_at.push(s);
            r_at.push(s - z);
            next += 1;
        }
    }
    let fit = |vals: &[f64]| -> f64 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = checkpoints
            .iter()
            .zip(vals)
            .filter(|(_, v)| **v != 0.0)
            .map(|(&k, v)| (log(k as f64), log(fabs(*v))))
            .unzip();
        if xs.len() < 2 {
            return f64::NEG_INFINITY;
        }
        linear_fit(&xs, &ys).0
    };
    let beta = spec.dope().beta();
    let mut rep = DecompositionReport {
        expansion,
        n,
        checkpoints: checkpoints.clone(),
        slope: 0.0,
        slope_envelope: (f64::NEG_INFINITY, f64::INFINITY),
        coefficient: None,
        coefficient_target: None,
        max_abs_residual,
        passed: false,
        note: String::new(),
    };
    match expansion {
        Expansion::Undoped => {
            rep.slope = f64::NEG_INFINITY;
            rep.passed = max_abs_residual == 0.0;
            rep.note = "residual must vanish identically".to_string();
        }
        Expansion::LeadingTerm => {
            let b = beta.expect("power law");
            let target = spec.rho() / (1.0 - b);
            rep.slope = fit(&s_at);
            rep.slope_envelope = (1.0 - b - 0.1, 1.0 - b + 0.1);
            let c = s_at.last().copied().expect("checkpoints") / pow(n as f64, 1.0 - b);
            rep.coefficient = Some(c);
            rep.coefficient_target = Some(target);
            rep.passed = rep.slope >= rep.slope_envelope.0
                && rep.slope <= rep.slope_envelope.1
                && fabs(c - target) <= 0.2 * fabs(target);
            rep.note = "exponent within 0.1 of 1-beta, coefficient within 20% of rho/(1-beta)".to_string();
        }
        Expansion::FiniteVarianceResidual => {
            let b = beta.expect("power law");
            rep.slope = fit(&r_at);
            rep.slope_envelope = (f64::NEG_INFINITY, 1.0 - b + 0.1);
            rep.passed = rep.slope <= rep.slope_envelope.1;
            rep.note = "residual slope at most 1-beta+0.1".to_string();
        }
        Expansion::HeavyResidual => {
            let alpha = spec.zeta().alpha().expect("heavy");
            rep.slope = fit(&r_at);
            rep.slope_envelope = (f64::NEG_INFINITY, 1.0 / alpha);
            rep.passed = rep.slope <= rep.slope_envelope.1;
            rep.note = "residual slope at most 1/alpha".to_string();
        }
    }
    Ok(rep)
}

/// `S_n` of an environment split as `rho N_1(n)` plus the undoped sum; the
/// two parts add up to [`partial_sums`] within summation rounding.
pub fn decomposition_gap(env: &Environment, n: u64) -> Result<f64> {
    let (doped, undoped) = crate::env::decompose_sum(env, n)?;
    Ok(fabs(partial_sums(env)[n as usize] - (doped + undoped)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_grid() {
        assert_eq!(dyadic_checkpoints(1), alloc::vec![1]);
        assert_eq!(dyadic_checkpoints(8), alloc::vec![1, 2, 4, 8]);
        assert_eq!(dyadic_checkpoints(10), alloc::vec![1, 2, 4, 8, 10]);
        assert_eq!(dyadic_checkpoints(1_000_000).len(), 21);
    }

    #[test]
    fn path_stats_are_consistent() {
        let p = sum_path(&ZetaRegime::Rademacher, 5000, 3).unwrap();
        assert_eq!(p.s.len(), p.checkpoints.len());
        for i in 0..p.s.len() {
            assert!(p.running_max_abs_s[i] >= fabs(p.s[i]));
            assert!(p.running_max_s[i] >= p.s[i]);
            if i > 0 {
                assert!(p.running_max_abs_s[i] >= p.running_max_abs_s[i - 1]);
            }
            // Parity of a +-1 walk.
            assert_eq!((p.s[i] as i64 - p.checkpoints[i] as i64).rem_euclid(2), 0);
        }
    }

    #[test]
    fn short_horizons_are_flagged() {
        let r = ZetaRegime::Rademacher;
        assert!(matches!(check_lil(&r, 100, 2, 1), Err(Error::HorizonTooShort { .. })));
        assert!(matches!(check_chung(&r, 1000, 2, 1), Err(Error::HorizonTooShort { .. })));
        assert!(check_feller(&r, 100_000, 0.5, 1, 1).is_err());
    }

    #[test]
    fn lil_is_scale_equivariant() {
        let one = ZetaRegime::Gaussian { sigma: 1.0 };
        let two = ZetaRegime::Gaussian { sigma: 2.0 };
        for r in 0..3 {
            let a = Check::Lil.evaluate(&sum_path(&one, 20_000, r).unwrap()).unwrap().0;
            let b = Check::Lil.evaluate(&sum_path(&two, 20_000, r).unwrap()).unwrap().0;
            assert!((a - b).abs() < 1e-12 * a.max(1.0));
        }
    }

    #[test]
    fn feller_without_eps_is_not_scored() {
        let rep = check_feller(&ZetaRegime::heavy(1.5), 20_000, 0.0, 5, 9).unwrap();
        assert_eq!(rep.passed, None);
        assert_eq!(rep.passing_fraction, None);
    }

    #[test]
    fn ks_of_a_symmetric_sample_is_zero() {
        let r = ks_against_mirror(&[-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(r.statistic, 0.0);
        let r = ks_against_mirror(&[1.0, 2.0, 3.0]);
        assert_eq!(r.statistic, 1.0);
    }

    #[test]
    fn undoped_residual_vanishes() {
        let spec = EnvironmentSpec::new(-0.5, DopeProfile::Zero, ZetaRegime::heavy(1.5), 10, 4).unwrap();
        let rep = check_sums_decomposition(&spec, 50_000).unwrap();
        assert_eq!(rep.expansion, Expansion::Undoped);
        assert_eq!(rep.max_abs_residual, 0.0);
        assert!(rep.passed);
    }

    #[test]
    fn not_applicable_families() {
        let spec = EnvironmentSpec::new(-0.5, DopeProfile::PowerLaw { beta: 0.5 }, ZetaRegime::Rademacher, 10, 4)
            .unwrap();
        assert!(matches!(check_sums_decomposition(&spec, 50_000), Err(Error::NotApplicable(_))));
    }
}
