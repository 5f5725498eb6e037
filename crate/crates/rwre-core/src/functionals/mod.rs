//! Quenched hitting-time functionals in log space.
//!
//! With `S_i = lambda_0 + ... + lambda_i` and `S_{-1} = 0`:
//!
//! * `D_i = exp(S_{i-1})`, `f(n) = D_0 + ... + D_n`;
//! * `Delta_i = 1/q_i + (p_i/q_i) Delta_{i-1}`, `Delta_0 = 1/q_0`;
//! * `T(n) = Delta_0 + ... + Delta_{n-1} = E[tau_n]` from the origin.
//!
//! Everything is carried as logarithms so that `|S|` in the thousands is fine.

mod checks;
mod monte_carlo;
mod oracle;

pub use checks::{
    bound_sandwich, martingale_residuals, Bound, BoundValues, BoundViolation, MartingaleReport, SandwichReport,
};
pub use monte_carlo::{monte_carlo_hitting, McEstimate};
pub use oracle::{hitting_time_oracle, DEFAULT_ORACLE_CAP};

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::math::{log_add_exp, softplus};

/// O(1)-memory accumulator: feed `lambda_0, lambda_1, ...` in order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalStream {
    sites: u64,
    s: f64,
    log_f: f64,
    log_delta: f64,
    log_t: f64,
    max_prefix: f64,
    min_prefix: f64,
}

impl Default for FunctionalStream {
    fn default() -> Self {
        Self::new()
    }
}

impl FunctionalStream {
    pub fn new() -> Self {
        FunctionalStream {
            sites: 0,
            s: 0.0,
            log_f: 0.0,
            log_delta: f64::NEG_INFINITY,
            log_t: f64::NEG_INFINITY,
            max_prefix: 0.0,
            min_prefix: 0.0,
        }
    }

    #[inline]
    pub fn push(&mut self, lambda: f64) {
        self.log_delta = log_add_exp(softplus(lambda), lambda + self.log_delta);
        self.log_t = log_add_exp(self.log_t, self.log_delta);
        self.s += lambda;
        self.log_f = log_add_exp(self.log_f, self.s);
        self.max_prefix = self.max_prefix.max(self.s);
        self.min_prefix = self.min_prefix.min(self.s);
        self.sites += 1;
    }

    /// Number of sites consumed, `i`.
    pub fn sites(&self) -> u64 {
        self.sites
    }

    /// `S_{i-1}`.
    pub fn s(&self) -> f64 {
        self.s
    }
    /// `log f(i)`.
    pub fn log_f(&self) -> f64 {
        self.log_f
    }
    /// `log Delta_{i-1}`; `-inf` before the first site.
    pub fn log_delta(&self) -> f64 {
        self.log_delta
    }
    /// `log T(i)`; `-inf` at `i = 0`.
    pub fn log_t(&self) -> f64 {
        self.log_t
    }
    /// `max_{k <= i} S_{k-1}` (includes `S_{-1} = 0`).
    pub fn max_prefix(&self) -> f64 {
        self.max_prefix
    }
    /// `min_{k <= i} S_{k-1}`.
    pub fn min_prefix(&self) -> f64 {
        self.min_prefix
    }
}

/// Prefix data for the first `n` sites.
///
/// Index conventions: `s[i] = S_i` for `i < n`; `log_d`, `log_f`, `log_t` and
/// `max_prefix` are indexed by `i = 0..=n`; `log_delta[i]` for `i < n`.
/// `log_t[0] = -inf` since `T(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuenchedFunctionals {
    pub s: Vec<f64>,
    pub log_d: Vec<f64>,
    pub log_f: Vec<f64>,
    pub log_delta: Vec<f64>,
    pub log_t: Vec<f64>,
    /// `max_{k <= i} S_{k-1}`.
    pub max_prefix: Vec<f64>,
}

impl QuenchedFunctionals {
    /// `n`, the number of sites covered.
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// `S_{i-1}` for `i >= 0`.
    pub fn s_prev(&self, i: usize) -> f64 {
        self.log_d[i]
    }
}

/// Functionals over sites `0..n` of `env`.
pub fn compute(env: &Environment, n: usize) -> Result<QuenchedFunctionals> {
    if n > env.len() {
        return Err(Error::OutOfRange { index: n as u64, available: env.len() as u64 });
    }
    let mut out = QuenchedFunctionals {
        s: Vec::with_capacity(n),
        log_d: Vec::with_capacity(n + 1),
        log_f: Vec::with_capacity(n + 1),
        log_delta: Vec::with_capacity(n),
        log_t: Vec::with_capacity(n + 1),
        max_prefix: Vec::with_capacity(n + 1),
    };
    let mut st = FunctionalStream::new();
    let record = |st: &FunctionalStream, out: &mut QuenchedFunctionals| {
        out.log_d.push(st.s());
        out.log_f.push(st.log_f());
        out.log_t.push(st.log_t());
        out.max_prefix.push(st.max_prefix());
    };
    record(&st, &mut out);
    for &l in &env.lambda()[..n] {
        st.push(l);
        out.s.push(st.s());
        out.log_delta.push(st.log_delta());
        record(&st, &mut out);
    }
    Ok(out)
}

/// Rough number of walk steps a Monte Carlo estimate of `T(n)` would take.
pub fn expected_cost(fns: &QuenchedFunctionals, n: usize, trials: u64) -> f64 {
    libm::exp(fns.log_t[n]) * trials as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::log;
    use alloc::vec;

    fn env(l: Vec<f64>) -> Environment {
        Environment::from_lambdas(l).unwrap()
    }

    #[test]
    fn fair_walk_closed_forms() {
        let f = compute(&env(vec![0.0; 3]), 3).unwrap();
        for i in 0..3 {
            assert!((f.log_delta[i] - log(2.0 * (i as f64 + 1.0))).abs() < 1e-14);
        }
        assert!((f.log_t[3] - log(12.0)).abs() < 1e-14);
        assert!((f.log_f[3] - log(4.0)).abs() < 1e-14);
        assert_eq!(f.log_d[0], 0.0);
        assert_eq!(f.log_t[0], f64::NEG_INFINITY);
    }

    #[test]
    fn drift_right_closed_form() {
        let f = compute(&env(vec![-log(2.0); 2]), 2).unwrap();
        assert!((f.log_delta[0] - log(1.5)).abs() < 1e-14);
        assert!((f.log_delta[1] - log(2.25)).abs() < 1e-14);
        assert!((f.log_t[2] - log(3.75)).abs() < 1e-14);
    }

    #[test]
    fn f_by_direct_evaluation() {
        let f = compute(&env(vec![log(2.0), log(3.0)]), 2).unwrap();
        assert!((f.log_f[2] - log(9.0)).abs() < 1e-14);
        assert!((f.max_prefix[2] - log(6.0)).abs() < 1e-15);
    }

    #[test]
    fn first_delta_is_inverse_q0() {
        for l in [-3.0, 0.25, 7.0] {
            let f = compute(&env(vec![l]), 1).unwrap();
            assert!((f.log_delta[0] + crate::math::log_q(l)).abs() < 1e-14);
        }
    }

    #[test]
    fn n_beyond_length_is_an_error() {
        assert!(matches!(compute(&env(vec![0.0; 2]), 3), Err(Error::OutOfRange { .. })));
        assert_eq!(compute(&env(vec![0.0; 2]), 0).unwrap().log_f, vec![0.0]);
    }

    #[test]
    fn huge_potentials_stay_finite() {
        let f = compute(&env(vec![50.0; 400]), 400).unwrap();
        assert!(f.log_t[400].is_finite() && f.log_t[400] > 19_000.0);
        let f = compute(&env(vec![-50.0; 400]), 400).unwrap();
        assert!(f.log_t[400].is_finite());
        assert!(f.log_f.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn stream_matches_arrays() {
        let e = env((0..50).map(|i| ((i * 7) % 5) as f64 - 2.0).collect());
        let f = compute(&e, 50).unwrap();
        let mut st = FunctionalStream::new();
        for &l in e.lambda() {
            st.push(l);
        }
        assert_eq!(st.sites(), 50);
        assert_eq!(st.log_t(), f.log_t[50]);
        assert_eq!(st.log_f(), f.log_f[50]);
        assert_eq!(st.max_prefix(), f.max_prefix[50]);
    }
}
