use crate::env::Environment;
use crate::error::{Error, Result};
use crate::math::{log_p, log_q, ExtFloat};

/// Largest `n` accepted by [`hitting_time_oracle`] unless a cap is given.
pub const DEFAULT_ORACLE_CAP: usize = 2000;

/// Exponent magnitude (base 2) beyond which the oracle gives up.
const EXPONENT_LIMIT: i64 = 1 << 60;

/// `log E[tau_n]` from the first-step equations
/// `u_k = 1 + p_k u_{k-1} + q_k u_{k+1}` (`1 <= k < n`),
/// `u_0 = 1 + p_0 u_0 + q_0 u_1`, `u_n = 0`, solved by tridiagonal
/// elimination from the top.
///
/// Writing `u_{k+1} = a_{k+1} + b_{k+1} u_k`, the elimination is carried in
/// terms of `g_k = 1 - b_k`, which obeys `g_k = q_k g_{k+1} / (p_k + q_k g_{k+1})`.
/// No step subtracts, so the solve is accurate for arbitrarily skewed
/// environments; magnitudes live in [`ExtFloat`].
///
/// `cap` defaults to [`DEFAULT_ORACLE_CAP`].
pub fn hitting_time_oracle(env: &Environment, n: usize, cap: Option<usize>) -> Result<f64> {
    let cap = cap.unwrap_or(DEFAULT_ORACLE_CAP);
    if n > cap {
        return Err(Error::OracleTooLarge { n, cap });
    }
    if n > env.len() {
        return Err(Error::OutOfRange { index: n as u64, available: env.len() as u64 });
    }
    if n == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    let lam = env.lambda();
    let pq = |k: usize| (ExtFloat::from_ln(log_p(lam[k])), ExtFloat::from_ln(log_q(lam[k])));
    let check = |x: ExtFloat| match x.exponent() {
        Some(e) if e.abs() > EXPONENT_LIMIT => Err(Error::RangeExceeded),
        _ => Ok(x),
    };

    let mut a = ExtFloat::ZERO;
    let mut g = ExtFloat::ONE;
    for k in (1..n).rev() {
        let (p, q) = pq(k);
        let d = p.add(q.mul(g));
        a = check(ExtFloat::ONE.add(q.mul(a)).div(d))?;
        g = check(q.mul(g).div(d))?;
    }
    let (_, q0) = pq(0);
    let u0 = ExtFloat::ONE.add(q0.mul(a)).div(q0.mul(g));
    Ok(check(u0)?.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::compute;
    use crate::math::log;
    use alloc::vec;
    use alloc::vec::Vec;

    fn env(l: Vec<f64>) -> Environment {
        Environment::from_lambdas(l).unwrap()
    }

    #[test]
    fn closed_forms() {
        assert!((hitting_time_oracle(&env(vec![0.0; 3]), 3, None).unwrap() - log(12.0)).abs() < 1e-14);
        let e = env(vec![-log(2.0); 2]);
        assert!((hitting_time_oracle(&e, 2, None).unwrap() - log(3.75)).abs() < 1e-14);
        for l in [-2.0, 0.0, 3.5] {
            let v = hitting_time_oracle(&env(vec![l, 1.0]), 1, None).unwrap();
            assert!((v + log_q(l)).abs() < 1e-14);
        }
    }

    /// Dense Gaussian elimination with partial pivoting on the full
    /// `n x n` first-step system, in plain `f64`.
    fn dense_solve(lam: &[f64], n: usize) -> f64 {
        let m = n;
        let mut a = vec![vec![0.0f64; m + 1]; m];
        for k in 0..m {
            let (p, q) = crate::math::p_q(lam[k]);
            if k == 0 {
                a[0][0] = 1.0 - p;
            } else {
                a[k][k] = 1.0;
                a[k][k - 1] = -p;
            }
            if k + 1 < m {
                a[k][k + 1] = -q;
            }
            a[k][m] = 1.0;
        }
        for c in 0..m {
            let piv = (c..m).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
            a.swap(c, piv);
            for r in 0..m {
                if r != c {
                    let f = a[r][c] / a[c][c];
                    for k in c..=m {
                        a[r][k] -= f * a[c][k];
                    }
                }
            }
        }
        log(a[0][m] / a[0][0])
    }

    #[test]
    fn agrees_with_dense_elimination_on_mild_environments() {
        let lam: Vec<f64> = (0..12).map(|i| 0.6 * libm::sin(i as f64 * 1.7)).collect();
        let e = env(lam.clone());
        for n in 1..=12 {
            let o = hitting_time_oracle(&e, n, None).unwrap();
            assert!((o - dense_solve(&lam, n)).abs() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn agrees_with_the_formula_far_outside_f64_range() {
        let lam: Vec<f64> = (0..300).map(|i| if i % 3 == 0 { -9.0 } else { 12.0 }).collect();
        let e = env(lam);
        let f = compute(&e, 300).unwrap();
        let o = hitting_time_oracle(&e, 300, None).unwrap();
        assert!(o > 1400.0);
        assert!((o - f.log_t[300]).abs() <= 1e-10 * o);
    }

    #[test]
    fn cap_is_enforced() {
        let e = env(vec![0.0; 10]);
        assert_eq!(hitting_time_oracle(&e, 10, Some(5)), Err(Error::OracleTooLarge { n: 10, cap: 5 }));
        assert!(matches!(hitting_time_oracle(&e, 11, None), Err(Error::OutOfRange { .. })));
    }
}
