//! Recurrence classification at finite truncation and the theorem-predicted
//! regime of an environment law.
//!
//! The chain is recurrent iff `f(n) -> inf` and positive recurrent iff
//! `sum_n 1/D_n < inf`. At truncation `N` both series are compared between a
//! start index `L` and `N`: growth by less than `eps` over that stretch counts
//! as convergence.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::env::{DopeProfile, EnvironmentSpec, ZetaRegime};
use crate::error::{invalid, Result};
use crate::functionals::QuenchedFunctionals;
use crate::math::{floor, log, log_add_exp, pow};
use crate::rng::{derive_seed, tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Empirical {
    Transient,
    NullRecurrent,
    PositiveRecurrent,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicted {
    Transient,
    Recurrent,
    RecurrentNull,
    Boundary,
    NotCovered,
}

impl Predicted {
    /// Whether `e` counts as agreement. `None` for predictions that are not
    /// scored.
    pub fn agrees(self, e: Empirical) -> Option<bool> {
        use Empirical as E;
        match self {
            Predicted::Transient => Some(e == E::Transient),
            Predicted::Recurrent => Some(matches!(e, E::NullRecurrent | E::PositiveRecurrent)),
            Predicted::RecurrentNull => Some(e == E::NullRecurrent),
            Predicted::Boundary | Predicted::NotCovered => None,
        }
    }
}

/// Where the comparison window starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WindowStart {
    /// `L = floor(N / 2)`.
    Half,
    /// `L = floor(N^exponent)`.
    Power { exponent: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub window: WindowStart,
    /// Growth of `log f` below this means the series converged.
    pub eps_f: f64,
    /// Growth of `log sum exp(-S)` below this means it converged.
    pub eps_pr: f64,
    /// Truncations below this are always `Indeterminate`.
    pub min_truncation: u64,
}

impl Default for ClassifierConfig {
    /// Window from `sqrt(N)`: the second half on a logarithmic scale. The
    /// linear second half `[N/2, N]` sees a fresh excursion of the potential
    /// in only about half of the recurrent environments driven by
    /// fluctuations (arcsine law), which makes it useless for those cells.
    fn default() -> Self {
        ClassifierConfig {
            window: WindowStart::Power { exponent: 0.5 },
            eps_f: log(1.05),
            eps_pr: log(1.05),
            min_truncation: 1000,
        }
    }
}

impl ClassifierConfig {
    /// The plain rule: compare at `N/2` and `N`.
    pub fn second_half() -> Self {
        ClassifierConfig { window: WindowStart::Half, ..Self::default() }
    }

    pub fn window_start(&self, n: u64) -> u64 {
        let l = match self.window {
            WindowStart::Half => n / 2,
            // Exact integer square root for the default exponent.
            WindowStart::Power { exponent } if exponent == 0.5 => n.isqrt(),
            WindowStart::Power { exponent } => floor(pow(n as f64, exponent)) as u64,
        };
        l.clamp(1, n.saturating_sub(1).max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    /// `log f(N-1) - log f(L-1)`.
    pub log_f_growth: f64,
    /// `max_{i<N} S_i - max_{i<L} S_i`.
    pub max_prefix_growth: f64,
    /// `log sum_{L <= i < N} exp(-S_{i-1})`.
    pub inv_d_tail_sum: f64,
    /// `log sum_{i<N} exp(-S_{i-1}) - log sum_{i<L} exp(-S_{i-1})`.
    pub inv_d_growth: f64,
    /// `L`.
    pub window_start: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseVerdict {
    pub empirical: Empirical,
    pub predicted: Predicted,
    pub evidence: Evidence,
    pub truncation: u64,
}

/// Single pass over `lambda_0 .. lambda_{N-2}`, snapshotting at `L`.
struct Accumulator {
    n: u64,
    l: u64,
    i: u64,
    s: f64,
    log_f: f64,
    log_inv_d: f64,
    max_s: f64,
    at_l: (f64, f64, f64),
}

impl Accumulator {
    fn new(n: u64, l: u64) -> Self {
        // i = 0: f(0) = 1, 1/D_0 = 1, no S_i seen yet.
        let mut a = Accumulator {
            n,
            l,
            i: 0,
            s: 0.0,
            log_f: 0.0,
            log_inv_d: 0.0,
            max_s: f64::NEG_INFINITY,
            at_l: (0.0, 0.0, f64::NEG_INFINITY),
        };
        a.snapshot();
        a
    }

    /// State now describes index `i`: `log f(i)`, `log sum_{k<=i} 1/D_k`,
    /// `max_{k<i} S_k`.
    fn snapshot(&mut self) {
        if self.i + 1 == self.l {
            self.at_l = (self.log_f, self.log_inv_d, self.max_s);
        }
    }

    /// Feed `lambda_i`; returns false once nothing more is needed.
    #[inline]
    fn push(&mut self, lambda: f64) -> bool {
        if self.i + 1 >= self.n {
            // The last needed index is N-1; lambda_{N-1} only enters max S.
            self.max_s = self.max_s.max(self.s + lambda);
            return false;
        }
        self.s += lambda;
        self.max_s = self.max_s.max(self.s);
        self.log_f = log_add_exp(self.log_f, self.s);
        self.log_inv_d = log_add_exp(self.log_inv_d, -self.s);
        self.i += 1;
        self.snapshot();
        true
    }

    fn evidence(&self, max_s_before_l: f64) -> Evidence {
        let (lf_l, linv_l, _) = self.at_l;
        let tail = log_sub_exp(self.log_inv_d, linv_l);
        Evidence {
            log_f_growth: self.log_f - lf_l,
            max_prefix_growth: self.max_s - max_s_before_l,
            inv_d_tail_sum: tail,
            inv_d_growth: self.log_inv_d - linv_l,
            window_start: self.l,
        }
    }
}

/// `log(e^a - e^b)` for `a >= b`; `-inf` when equal.
fn log_sub_exp(a: f64, b: f64) -> f64 {
    if a <= b {
        return f64::NEG_INFINITY;
    }
    a + libm::log1p(-libm::exp(b - a))
}

fn decide(ev: &Evidence, n: u64, cfg: &ClassifierConfig) -> Empirical {
    if n < cfg.min_truncation {
        return Empirical::Indeterminate;
    }
    let f_converges = ev.log_f_growth < cfg.eps_f;
    let inv_d_converges = ev.inv_d_growth < cfg.eps_pr;
    match (f_converges, inv_d_converges) {
        (true, true) => Empirical::Indeterminate,
        (true, false) => Empirical::Transient,
        (false, true) => Empirical::PositiveRecurrent,
        (false, false) => Empirical::NullRecurrent,
    }
}

/// Evidence from a sequence of log-odds of length at least `n`.
fn evidence_from<I: Iterator<Item = f64>>(lambdas: I, n: u64, cfg: &ClassifierConfig) -> Evidence {
    let l = cfg.window_start(n);
    let mut acc = Accumulator::new(n, l);
    // max_{i<L} S_i is the running max right after S_{L-1} is added.
    let mut max_before_l = f64::NEG_INFINITY;
    for (j, lam) in lambdas.enumerate() {
        let more = acc.push(lam);
        if j as u64 + 1 == l {
            max_before_l = acc.max_s;
        }
        if !more {
            break;
        }
    }
    acc.evidence(max_before_l)
}

/// Classify using functionals computed to truncation `N = fns.len()`.
pub fn classify(fns: &QuenchedFunctionals, cfg: &ClassifierConfig) -> (Empirical, Evidence) {
    let n = fns.len() as u64;
    // Rebuild the log-odds from the stored partial sums would lose bits, so
    // the evidence is read directly from the arrays.
    let l = cfg.window_start(n);
    if n < 2 {
        let ev = Evidence {
            log_f_growth: 0.0,
            max_prefix_growth: 0.0,
            inv_d_tail_sum: f64::NEG_INFINITY,
            inv_d_growth: 0.0,
            window_start: l,
        };
        return (Empirical::Indeterminate, ev);
    }
    let (n_us, l_us) = (n as usize, l as usize);
    let mut log_inv_d = 0.0;
    let mut log_inv_d_l = 0.0;
    for i in 1..n_us {
        log_inv_d = log_add_exp(log_inv_d, -fns.log_d[i]);
        if i + 1 == l_us {
            log_inv_d_l = log_inv_d;
        }
    }
    let max_all = fns.s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_l = fns.s[..l_us].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ev = Evidence {
        log_f_growth: fns.log_f[n_us - 1] - fns.log_f[l_us - 1],
        max_prefix_growth: max_all - max_l,
        inv_d_tail_sum: log_sub_exp(log_inv_d, log_inv_d_l),
        inv_d_growth: log_inv_d - log_inv_d_l,
        window_start: l,
    };
    (decide(&ev, n, cfg), ev)
}

/// Classify a spec's environment at truncation `spec.length()` without
/// materialising it. Agrees exactly with [`classify`] on the sampled
/// environment.
pub fn classify_spec(spec: &EnvironmentSpec, cfg: &ClassifierConfig) -> PhaseVerdict {
    let n = spec.length();
    let predicted = predicted_regime(spec);
    if n < 2 {
        let (empirical, evidence) = classify(&empty_functionals(), cfg);
        return PhaseVerdict { empirical, predicted, evidence, truncation: n };
    }
    let ev = evidence_from(spec.sites().map(|s| s.lambda), n, cfg);
    PhaseVerdict { empirical: decide(&ev, n, cfg), predicted, evidence: ev, truncation: n }
}

fn empty_functionals() -> QuenchedFunctionals {
    QuenchedFunctionals {
        s: Vec::new(),
        log_d: alloc::vec![0.0],
        log_f: alloc::vec![0.0],
        log_delta: Vec::new(),
        log_t: alloc::vec![f64::NEG_INFINITY],
        max_prefix: alloc::vec![0.0],
    }
}

/// Tolerance for sitting on a critical surface.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// The regime the theorems assign to `spec`.
///
/// | dope | zeta | critical `beta` | below | above |
/// |---|---|---|---|---|
/// | power law | finite variance | 1/2 | sign of `delta` | recurrent |
/// | power law | symmetric, `alpha` in (1,2) | `1 - 1/alpha` | sign of `delta` | recurrent |
/// | `1 -` power law | symmetric, `alpha` in (0,1) | `1 - alpha` | recurrent | sign of `delta` |
///
/// With no doping, a symmetric law is recurrent. For the asymmetric law the
/// heavier tail decides: heavier on the negative side is transient, heavier
/// on the positive side recurrent. Full doping is the deterministic
/// birth-death chain.
pub fn predicted_regime(spec: &EnvironmentSpec) -> Predicted {
    let delta = spec.delta();
    let by_sign = || {
        if delta < 0.0 {
            Predicted::Recurrent
        } else if delta > 0.0 {
            Predicted::Transient
        } else {
            Predicted::NotCovered
        }
    };
    let split = |beta: f64, critical: f64, below: Predicted, above: Predicted| {
        if (beta - critical).abs() <= BOUNDARY_TOL {
            Predicted::Boundary
        } else if beta < critical {
            below
        } else {
            above
        }
    };
    match (spec.dope(), spec.zeta()) {
        (DopeProfile::Zero, z) if z.is_symmetric() => Predicted::Recurrent,
        (DopeProfile::Zero, ZetaRegime::HeavyAsymmetric { alpha_plus, alpha_minus }) => {
            if alpha_minus < alpha_plus.min(1.0) {
                Predicted::Transient
            } else if alpha_plus < alpha_minus.min(1.0) {
                Predicted::Recurrent
            } else {
                Predicted::NotCovered
            }
        }
        (DopeProfile::One, _) => {
            if delta < 0.0 {
                Predicted::Recurrent
            } else if delta > 0.0 {
                Predicted::Transient
            } else {
                Predicted::RecurrentNull
            }
        }
        (DopeProfile::PowerLaw { beta }, z) if z.sigma().is_some() => {
            split(beta, 0.5, by_sign(), Predicted::Recurrent)
        }
        (DopeProfile::PowerLaw { beta }, ZetaRegime::HeavySymmetric { alpha, .. })
            if alpha > 1.0 && alpha < 2.0 =>
        {
            split(beta, 1.0 - 1.0 / alpha, by_sign(), Predicted::Recurrent)
        }
        (DopeProfile::OneMinusPowerLaw { beta }, ZetaRegime::HeavySymmetric { alpha, .. })
            if alpha > 0.0 && alpha < 1.0 =>
        {
            split(beta, 1.0 - alpha, Predicted::Recurrent, by_sign())
        }
        _ => Predicted::NotCovered,
    }
}

/// Distance from the nearest critical surface of the theorem table that
/// bears on this cell's prediction: `|beta - beta_c|`, and `|delta|` where
/// the sign of `delta` decides. `None` when no prediction is made.
pub fn critical_distance(spec: &EnvironmentSpec) -> Option<f64> {
    let delta = spec.delta().abs();
    let (beta, critical, sign_below) = match (spec.dope(), spec.zeta()) {
        (DopeProfile::Zero, z) if z.is_symmetric() => return Some(f64::INFINITY),
        (DopeProfile::Zero, ZetaRegime::HeavyAsymmetric { alpha_plus, alpha_minus }) => {
            let (lo, hi) = (alpha_plus.min(alpha_minus), alpha_plus.max(alpha_minus));
            return (lo < 1.0).then(|| (hi.min(1.0) - lo).min(1.0 - lo));
        }
        (DopeProfile::One, _) => return Some(delta),
        (DopeProfile::PowerLaw { beta }, z) if z.sigma().is_some() => (beta, 0.5, true),
        (DopeProfile::PowerLaw { beta }, ZetaRegime::HeavySymmetric { alpha, .. }) if alpha > 1.0 && alpha < 2.0 => {
            (beta, 1.0 - 1.0 / alpha, true)
        }
        (DopeProfile::OneMinusPowerLaw { beta }, ZetaRegime::HeavySymmetric { alpha, .. })
            if alpha > 0.0 && alpha < 1.0 =>
        {
            (beta, 1.0 - alpha, false)
        }
        _ => return None,
    };
    let d = (beta - critical).abs();
    let sign_decides = (beta < critical) == sign_below;
    Some(if sign_decides { d.min(delta) } else { d })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub transient: u32,
    pub null_recurrent: u32,
    pub positive_recurrent: u32,
    pub indeterminate: u32,
}

impl VerdictCounts {
    pub fn add(&mut self, e: Empirical) {
        match e {
            Empirical::Transient => self.transient += 1,
            Empirical::NullRecurrent => self.null_recurrent += 1,
            Empirical::PositiveRecurrent => self.positive_recurrent += 1,
            Empirical::Indeterminate => self.indeterminate += 1,
        }
    }

    pub fn total(&self) -> u32 {
        self.transient + self.null_recurrent + self.positive_recurrent + self.indeterminate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub spec: EnvironmentSpec,
    pub predicted: Predicted,
    pub counts: VerdictCounts,
    /// Fraction of replicas agreeing with the prediction; absent when the
    /// prediction is not scored.
    pub agreement: Option<f64>,
}

/// Spec of replica `k` in cell `cell`: the cell's law at truncation `n` with
/// a seed derived from `root`.
pub fn replica_spec(cell: &EnvironmentSpec, cell_index: u64, k: u64, n: u64, root: u64) -> Result<EnvironmentSpec> {
    let seed = derive_seed(derive_seed(root, tag::CELL, cell_index), tag::ENVIRONMENT, k);
    Ok(cell.with_length(n)?.with_seed(seed))
}

/// Tally verdicts for one cell.
pub fn summarize_cell(cell: &EnvironmentSpec, verdicts: &[Empirical]) -> CellResult {
    let predicted = predicted_regime(cell);
    let mut counts = VerdictCounts::default();
    let mut agree = 0u32;
    for &v in verdicts {
        counts.add(v);
        if predicted.agrees(v) == Some(true) {
            agree += 1;
        }
    }
    let agreement = predicted.agrees(Empirical::Transient).map(|_| agree as f64 / verdicts.len() as f64);
    CellResult { spec: *cell, predicted, counts, agreement }
}

/// Classify `k` environments per cell at truncation `n`. Sequential; results
/// depend only on the arguments.
pub fn phase_sweep(
    cells: &[EnvironmentSpec],
    k: u64,
    n: u64,
    root: u64,
    cfg: &ClassifierConfig,
) -> Result<Vec<CellResult>> {
    if k == 0 {
        return Err(invalid("need at least one environment per cell"));
    }
    cells
        .iter()
        .enumerate()
        .map(|(c, cell)| {
            let verdicts = (0..k)
                .map(|r| Ok(classify_spec(&replica_spec(cell, c as u64, r, n, root)?, cfg).empirical))
                .collect::<Result<Vec<_>>>()?;
            Ok(summarize_cell(cell, &verdicts))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Environment;
    use crate::functionals::compute;
    use alloc::vec;

    fn classify_const(lambda: f64, n: usize) -> (Empirical, Evidence) {
        let env = Environment::from_lambdas(vec![lambda; n]).unwrap();
        classify(&compute(&env, n).unwrap(), &ClassifierConfig::default())
    }

    #[test]
    fn constant_environments() {
        for n in [1000, 10_000] {
            let (e, ev) = classify_const(-log(2.0), n);
            assert_eq!(e, Empirical::Transient);
            assert!(ev.log_f_growth < 1e-6);
            assert_eq!(classify_const(log(2.0), n).0, Empirical::PositiveRecurrent);
            assert_eq!(classify_const(0.0, n).0, Empirical::NullRecurrent);
        }
    }

    #[test]
    fn second_half_rule_on_constant_environments() {
        let cfg = ClassifierConfig::second_half();
        let env = Environment::from_lambdas(vec![0.0; 4000]).unwrap();
        let (e, ev) = classify(&compute(&env, 4000).unwrap(), &cfg);
        assert_eq!(e, Empirical::NullRecurrent);
        assert_eq!(ev.window_start, 2000);
        assert!((ev.log_f_growth - log(2.0)).abs() < 1e-12);
    }

    #[test]
    fn short_truncation_is_indeterminate() {
        assert_eq!(classify_const(log(2.0), 999).0, Empirical::Indeterminate);
    }

    #[test]
    fn window_start_is_integer_sqrt() {
        let cfg = ClassifierConfig::default();
        assert_eq!(cfg.window_start(1_000_000), 1000);
        assert_eq!(cfg.window_start(999_999), 999);
        assert_eq!(cfg.window_start(10_000), 100);
    }

    #[test]
    fn streaming_matches_materialised() {
        let spec = EnvironmentSpec::new(0.3, DopeProfile::PowerLaw { beta: 0.4 }, ZetaRegime::heavy(1.5), 5000, 17)
            .unwrap();
        let cfg = ClassifierConfig::default();
        let env = Environment::sample(&spec);
        let (e, ev) = classify(&compute(&env, 5000).unwrap(), &cfg);
        let v = classify_spec(&spec, &cfg);
        assert_eq!(v.empirical, e);
        assert_eq!(v.evidence, ev);
    }

    fn spec(delta: f64, dope: DopeProfile, zeta: ZetaRegime) -> EnvironmentSpec {
        EnvironmentSpec::new(delta, dope, zeta, 10, 0).unwrap()
    }

    #[test]
    fn theorem_table() {
        use DopeProfile::*;
        let r = ZetaRegime::Rademacher;
        assert_eq!(predicted_regime(&spec(0.5, PowerLaw { beta: 0.3 }, r)), Predicted::Transient);
        assert_eq!(predicted_regime(&spec(-0.5, PowerLaw { beta: 0.3 }, r)), Predicted::Recurrent);
        assert_eq!(predicted_regime(&spec(0.5, PowerLaw { beta: 0.7 }, r)), Predicted::Recurrent);
        assert_eq!(predicted_regime(&spec(0.5, PowerLaw { beta: 0.5 }, r)), Predicted::Boundary);
        assert_eq!(
            predicted_regime(&spec(0.9, PowerLaw { beta: 0.6 }, ZetaRegime::heavy(1.5))),
            Predicted::Recurrent
        );
        assert_eq!(
            predicted_regime(&spec(0.9, PowerLaw { beta: 0.2 }, ZetaRegime::heavy(1.5))),
            Predicted::Transient
        );
        assert_eq!(
            predicted_regime(&spec(0.9, PowerLaw { beta: 1.0 / 3.0 }, ZetaRegime::heavy(1.5))),
            Predicted::Boundary
        );
        assert_eq!(
            predicted_regime(&spec(-0.5, OneMinusPowerLaw { beta: 0.2 }, ZetaRegime::heavy(0.5))),
            Predicted::Recurrent
        );
        assert_eq!(
            predicted_regime(&spec(0.5, OneMinusPowerLaw { beta: 0.2 }, ZetaRegime::heavy(0.5))),
            Predicted::Recurrent
        );
        assert_eq!(
            predicted_regime(&spec(0.5, OneMinusPowerLaw { beta: 0.7 }, ZetaRegime::heavy(0.5))),
            Predicted::Transient
        );
        assert_eq!(predicted_regime(&spec(0.5, Zero, ZetaRegime::heavy(0.5))), Predicted::Recurrent);
        let heavy_neg = ZetaRegime::HeavyAsymmetric { alpha_plus: 0.9, alpha_minus: 0.5 };
        let heavy_pos = ZetaRegime::HeavyAsymmetric { alpha_plus: 0.5, alpha_minus: 0.9 };
        assert_eq!(predicted_regime(&spec(0.0, Zero, heavy_neg)), Predicted::Transient);
        assert_eq!(predicted_regime(&spec(0.0, Zero, heavy_pos)), Predicted::Recurrent);
        assert_eq!(predicted_regime(&spec(0.0, One, r)), Predicted::RecurrentNull);
        assert_eq!(predicted_regime(&spec(0.2, Constant { phi: 0.5 }, r)), Predicted::NotCovered);
        assert_eq!(predicted_regime(&spec(0.2, PowerLaw { beta: 0.3 }, ZetaRegime::heavy(0.8))), Predicted::NotCovered);
        assert_eq!(predicted_regime(&spec(0.0, PowerLaw { beta: 0.3 }, r)), Predicted::NotCovered);
    }

    #[test]
    fn distances_to_critical_surfaces() {
        let sp = |delta, dope, zeta| EnvironmentSpec::new(delta, dope, zeta, 10, 0).unwrap();
        let d = critical_distance(&sp(0.05, DopeProfile::PowerLaw { beta: 0.2 }, ZetaRegime::Rademacher)).unwrap();
        assert!((d - 0.05).abs() < 1e-12);
        let d = critical_distance(&sp(0.05, DopeProfile::PowerLaw { beta: 0.8 }, ZetaRegime::Rademacher)).unwrap();
        assert!((d - 0.3).abs() < 1e-12);
        let d = critical_distance(&sp(-0.5, DopeProfile::OneMinusPowerLaw { beta: 0.3 }, ZetaRegime::heavy(0.5)))
            .unwrap();
        assert!((d - 0.2).abs() < 1e-12);
        assert_eq!(critical_distance(&sp(0.5, DopeProfile::Constant { phi: 0.3 }, ZetaRegime::Rademacher)), None);
    }

    #[test]
    fn cell_scoring() {
        let s = spec(0.0, DopeProfile::Constant { phi: 0.5 }, ZetaRegime::Rademacher);
        assert_eq!(summarize_cell(&s, &[Empirical::Transient]).agreement, None);
        let s = spec(-0.5, DopeProfile::PowerLaw { beta: 0.2 }, ZetaRegime::Rademacher);
        let r = summarize_cell(
            &s,
            &[Empirical::NullRecurrent, Empirical::PositiveRecurrent, Empirical::Indeterminate, Empirical::Transient],
        );
        assert_eq!(r.agreement, Some(0.5));
        assert_eq!(r.counts.total(), 4);
    }
}
