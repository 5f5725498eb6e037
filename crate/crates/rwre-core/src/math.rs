//! Log-space arithmetic, an extended-exponent float, and small statistics
//! helpers. Everything here is `no_std`; transcendental functions come from
//! `libm`.

use alloc::vec::Vec;

pub use libm::{ceil, cos, exp, expm1, fabs, floor, log, log1p, pow, sqrt};

pub const LN_2: f64 = core::f64::consts::LN_2;

/// `log(e^a + e^b)` without overflow. Either argument may be `-inf`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    // Below this gap the correction is under 5e-18.
    if lo - hi < -40.0 {
        return hi;
    }
    hi + log1p(exp(lo - hi))
}

/// `log(1 + e^x)`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + log1p(exp(-x))
    } else {
        log1p(exp(x))
    }
}

/// `log p` for a site with log-odds `lambda = log(p/q)`.
#[inline]
pub fn log_p(lambda: f64) -> f64 {
    -softplus(-lambda)
}

/// `log q` for a site with log-odds `lambda = log(p/q)`.
#[inline]
pub fn log_q(lambda: f64) -> f64 {
    -softplus(lambda)
}

/// `(p, q)` from the log-odds. The smaller of the two is computed directly so
/// it keeps full relative precision.
#[inline]
pub fn p_q(lambda: f64) -> (f64, f64) {
    if lambda >= 0.0 {
        let q = 1.0 / (1.0 + exp(lambda));
        (1.0 - q, q)
    } else {
        let p = 1.0 / (1.0 + exp(-lambda));
        (p, 1.0 - p)
    }
}

/// Positive real number with an `f64` mantissa in `[0.5, 1)` and an `i64`
/// binary exponent. Used where products of many probabilities over- or
/// underflow `f64`. Only the operations needed on nonnegative values exist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtFloat {
    m: f64,
    e: i64,
}

impl ExtFloat {
    pub const ZERO: ExtFloat = ExtFloat { m: 0.0, e: 0 };
    pub const ONE: ExtFloat = ExtFloat { m: 0.5, e: 1 };

    /// Panics on negative or non-finite input.
    pub fn from_f64(x: f64) -> Self {
        assert!(x >= 0.0 && x.is_finite(), "ExtFloat holds finite nonnegative values");
        if x == 0.0 {
            return Self::ZERO;
        }
        let (m, e) = libm::frexp(x);
        ExtFloat { m, e: e as i64 }
    }

    /// `e^x` for any finite `x`.
    pub fn from_ln(x: f64) -> Self {
        if x == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        let k = floor(x / LN_2);
        let r = x - k * LN_2;
        let mut v = Self::from_f64(exp(r));
        v.e += k as i64;
        v
    }

    pub fn is_zero(self) -> bool {
        self.m == 0.0
    }

    pub fn ln(self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        log(self.m) + self.e as f64 * LN_2
    }

    /// Plain `f64` value; saturates to `inf` or `0`.
    pub fn to_f64(self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        if self.e > 1100 {
            return f64::INFINITY;
        }
        if self.e < -1100 {
            return 0.0;
        }
        libm::ldexp(self.m, self.e as i32)
    }

    /// Binary exponent; `None` for zero.
    pub fn exponent(self) -> Option<i64> {
        (!self.is_zero()).then_some(self.e)
    }

    #[inline]
    fn norm(m: f64, e: i64) -> Self {
        if m == 0.0 {
            return Self::ZERO;
        }
        let (mm, de) = libm::frexp(m);
        ExtFloat { m: mm, e: e + de as i64 }
    }

    #[inline]
    pub fn mul(self, o: Self) -> Self {
        Self::norm(self.m * o.m, self.e + o.e)
    }

    /// Panics when dividing by zero.
    #[inline]
    pub fn div(self, o: Self) -> Self {
        assert!(!o.is_zero(), "ExtFloat division by zero");
        Self::norm(self.m / o.m, self.e - o.e)
    }

    #[inline]
    pub fn add(self, o: Self) -> Self {
        if self.is_zero() {
            return o;
        }
        if o.is_zero() {
            return self;
        }
        let (hi, lo) = if self.e >= o.e { (self, o) } else { (o, self) };
        let shift = hi.e - lo.e;
        if shift > 60 {
            return hi;
        }
        Self::norm(hi.m + libm::ldexp(lo.m, -(shift as i32)), hi.e)
    }
}

/// Ordinary least squares of `y` on `x`. Returns `(slope, intercept, r2)`;
/// `r2` is 1 when `y` is constant along the fit.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, intercept, r2)
}

/// Median of a sample (mean of the middle pair for even sizes). NaN-free
/// input is assumed; `None` for an empty sample.
pub fn median(xs: &[f64]) -> Option<f64> {
    quantile(xs, 0.5)
}

/// Linear-interpolation quantile (type 7). `None` for an empty sample.
pub fn quantile(xs: &[f64], q: f64) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = floor(h) as usize;
    let hi = ceil(h) as usize;
    Some(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, sqrt(var / n))
}
