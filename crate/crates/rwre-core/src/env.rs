//! Environment law and sampled environments.
//!
//! Site `j` has log-odds `lambda_j = log(p_j / q_j)`, where `p_j` is the
//! probability of stepping left. With probability `phi(j)` the site is doped
//! (`chi_j = 1`) and `lambda_j = rho`; otherwise `lambda_j = zeta_j`, drawn from
//! the configured tail regime.

use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::math::{cos, log, pow, sqrt};
use crate::rng::{unit_closed0, unit_open0, SiteBlocks, WORDS_PER_SITE};

/// Law of the undoped log-odds `zeta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ZetaRegime {
    /// `±1` with equal probability.
    Rademacher,
    /// Centred normal with standard deviation `sigma`.
    Gaussian { sigma: f64 },
    /// `sign * x_m * U^(-1/alpha)` with a fair sign and `x_m = (2c)^(1/alpha)`,
    /// so that `P(zeta > r) = c r^(-alpha)` exactly for `r >= x_m`.
    HeavySymmetric {
        alpha: f64,
        #[serde(default = "half")]
        c: f64,
    },
    /// `B U^(-1/alpha_plus) - (1-B) U'^(-1/alpha_minus)` with a fair coin `B`:
    /// `P(zeta > x) = x^(-alpha_plus)/2`, `P(zeta < -x) = x^(-alpha_minus)/2`.
    HeavyAsymmetric { alpha_plus: f64, alpha_minus: f64 },
}

fn half() -> f64 {
    0.5
}

impl ZetaRegime {
    pub fn heavy(alpha: f64) -> Self {
        ZetaRegime::HeavySymmetric { alpha, c: 0.5 }
    }

    pub fn validate(&self) -> Result<()> {
        let in02 = |a: f64| a > 0.0 && a < 2.0;
        match *self {
            ZetaRegime::Rademacher => Ok(()),
            ZetaRegime::Gaussian { sigma } if sigma > 0.0 && sigma.is_finite() => Ok(()),
            ZetaRegime::Gaussian { .. } => Err(invalid("gaussian sigma must be positive")),
            ZetaRegime::HeavySymmetric { alpha, c } => {
                if !in02(alpha) {
                    return Err(invalid("heavy alpha must lie in (0, 2)"));
                }
                if !(c > 0.0 && c.is_finite()) {
                    return Err(invalid("heavy tail constant c must be positive"));
                }
                Ok(())
            }
            ZetaRegime::HeavyAsymmetric { alpha_plus, alpha_minus } => {
                if !in02(alpha_plus) || !in02(alpha_minus) {
                    return Err(invalid("asymmetric tail exponents must lie in (0, 2)"));
                }
                if alpha_plus == alpha_minus {
                    return Err(invalid("asymmetric tail exponents must differ"));
                }
                if alpha_plus.min(alpha_minus) >= 1.0 {
                    return Err(invalid("the heavier asymmetric tail needs exponent below 1"));
                }
                Ok(())
            }
        }
    }

    /// Law symmetric about zero.
    pub fn is_symmetric(&self) -> bool {
        !matches!(self, ZetaRegime::HeavyAsymmetric { .. })
    }

    /// Standard deviation for the finite-variance laws.
    pub fn sigma(&self) -> Option<f64> {
        match *self {
            ZetaRegime::Rademacher => Some(1.0),
            ZetaRegime::Gaussian { sigma } => Some(sigma),
            _ => None,
        }
    }

    /// Tail exponent of the symmetric heavy law.
    pub fn alpha(&self) -> Option<f64> {
        match *self {
            ZetaRegime::HeavySymmetric { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    /// One draw from three random words. Only words 1..=3 of a site block are
    /// used here; word 0 belongs to the dope indicator.
    #[inline]
    pub fn sample(&self, w: &[u64; 3]) -> f64 {
        let coin = w[0] >> 63 == 1;
        match *self {
            ZetaRegime::Rademacher => {
                if coin {
                    1.0
                } else {
                    -1.0
                }
            }
            ZetaRegime::Gaussian { sigma } => {
                let r = sqrt(-2.0 * log(unit_open0(w[1])));
                sigma * r * cos(core::f64::consts::TAU * unit_closed0(w[2]))
            }
            ZetaRegime::HeavySymmetric { alpha, c } => {
                // (2c)^(1/alpha) * u^(-1/alpha) with one pow.
                let mag = pow(unit_open0(w[1]) / (2.0 * c), -1.0 / alpha).min(f64::MAX);
                if coin {
                    mag
                } else {
                    -mag
                }
            }
            ZetaRegime::HeavyAsymmetric { alpha_plus, alpha_minus } => {
                let u = unit_open0(w[1]);
                if coin {
                    pow(u, -1.0 / alpha_plus).min(f64::MAX)
                } else {
                    -pow(u, -1.0 / alpha_minus).min(f64::MAX)
                }
            }
        }
    }
}

/// Dope profile `phi(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DopeProfile {
    Zero,
    One,
    /// `n^(-beta)`, with `phi(0) = 1`.
    PowerLaw { beta: f64 },
    /// `1 - n^(-beta)`, with `phi(0) = 0`.
    OneMinusPowerLaw { beta: f64 },
    Constant { phi: f64 },
}

impl DopeProfile {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DopeProfile::PowerLaw { beta } | DopeProfile::OneMinusPowerLaw { beta }
                if !(beta > 0.0 && beta < 1.0) =>
            {
                Err(invalid("dope exponent beta must lie in (0, 1)"))
            }
            DopeProfile::Constant { phi } if !(0.0..=1.0).contains(&phi) => {
                Err(invalid("constant dope probability must lie in [0, 1]"))
            }
            _ => Ok(()),
        }
    }

    pub fn beta(&self) -> Option<f64> {
        match *self {
            DopeProfile::PowerLaw { beta } | DopeProfile::OneMinusPowerLaw { beta } => Some(beta),
            _ => None,
        }
    }
}

/// `phi(n)`.
#[inline]
pub fn phi_at(profile: &DopeProfile, n: u64) -> f64 {
    match *profile {
        DopeProfile::Zero => 0.0,
        DopeProfile::One => 1.0,
        DopeProfile::PowerLaw { beta } => {
            if n == 0 {
                1.0
            } else {
                pow(n as f64, -beta)
            }
        }
        DopeProfile::OneMinusPowerLaw { beta } => {
            if n == 0 {
                0.0
            } else {
                1.0 - pow(n as f64, -beta)
            }
        }
        DopeProfile::Constant { phi } => phi,
    }
}

/// `log((1 - delta) / (1 + delta))`.
pub fn rho_of(delta: f64) -> f64 {
    // `+ 0.0` maps -0 to 0.
    libm::log1p(-delta) - libm::log1p(delta) + 0.0
}

/// Full parameterisation of an environment law plus length and seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecFields", into = "SpecFields")]
pub struct EnvironmentSpec {
    delta: f64,
    rho: f64,
    dope: DopeProfile,
    zeta: ZetaRegime,
    length: u64,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFields {
    delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
    dope: DopeProfile,
    zeta: ZetaRegime,
    length: u64,
    seed: u64,
}

impl TryFrom<SpecFields> for EnvironmentSpec {
    type Error = Error;
    fn try_from(f: SpecFields) -> Result<Self> {
        let spec = EnvironmentSpec::new(f.delta, f.dope, f.zeta, f.length, f.seed)?;
        if let Some(r) = f.rho {
            if (r - spec.rho).abs() > 1e-12 * spec.rho.abs().max(1.0) {
                return Err(invalid(format!(
                    "rho {r} is inconsistent with delta {} (expected {})",
                    spec.delta, spec.rho
                )));
            }
        }
        Ok(spec)
    }
}

impl From<EnvironmentSpec> for SpecFields {
    fn from(s: EnvironmentSpec) -> Self {
        SpecFields {
            delta: s.delta,
            rho: Some(s.rho),
            dope: s.dope,
            zeta: s.zeta,
            length: s.length,
            seed: s.seed,
        }
    }
}

impl EnvironmentSpec {
    pub fn new(
        delta: f64,
        dope: DopeProfile,
        zeta: ZetaRegime,
        length: u64,
        seed: u64,
    ) -> Result<Self> {
        if !(delta > -1.0 && delta < 1.0) {
            return Err(invalid("delta must lie in (-1, 1)"));
        }
        if length == 0 {
            return Err(invalid("length must be positive"));
        }
        dope.validate()?;
        zeta.validate()?;
        Ok(EnvironmentSpec { delta, rho: rho_of(delta), dope, zeta, length, seed })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn dope(&self) -> DopeProfile {
        self.dope
    }
    pub fn zeta(&self) -> ZetaRegime {
        self.zeta
    }
    pub fn length(&self) -> u64 {
        self.length
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_length(mut self, length: u64) -> Result<Self> {
        if length == 0 {
            return Err(invalid("length must be positive"));
        }
        self.length = length;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Streaming generator over the sites `0..length`.
    pub fn sites(&self) -> SiteStream {
        SiteStream { spec: *self, blocks: SiteBlocks::new(self.seed), next: 0 }
    }

    /// Site `j` regardless of `length`.
    pub fn site_at(&self, j: u64) -> Site {
        site_from_words(self, j, &SiteBlocks::new(self.seed).site(j))
    }

    /// `zeta_j`, defined for every site including doped ones (where it is not
    /// used by the environment).
    pub fn zeta_at(&self, j: u64) -> f64 {
        let w = SiteBlocks::new(self.seed).site(j);
        self.zeta.sample(&[w[1], w[2], w[3]])
    }
}

/// One generated site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    pub index: u64,
    pub chi: bool,
    pub lambda: f64,
}

#[inline]
fn site_from_words(spec: &EnvironmentSpec, j: u64, w: &[u64; WORDS_PER_SITE]) -> Site {
    let phi = phi_at(&spec.dope, j);
    let chi = unit_closed0(w[0]) < phi;
    let lambda = if chi { spec.rho } else { spec.zeta.sample(&[w[1], w[2], w[3]]) };
    Site { index: j, chi, lambda }
}

/// Iterator over the sites of an environment, generated on the fly.
#[derive(Clone, Debug)]
pub struct SiteStream {
    spec: EnvironmentSpec,
    blocks: SiteBlocks,
    next: u64,
}

impl SiteStream {
    /// Pair each site with its `zeta_j` (sampled even at doped sites).
    pub fn with_zeta(self) -> impl Iterator<Item = (Site, f64)> {
        let SiteStream { spec, mut blocks, next } = self;
        (next..spec.length).map(move |j| {
            let w = blocks.site(j);
            let zeta = spec.zeta.sample(&[w[1], w[2], w[3]]);
            let chi = unit_closed0(w[0]) < phi_at(&spec.dope, j);
            (Site { index: j, chi, lambda: if chi { spec.rho } else { zeta } }, zeta)
        })
    }
}

impl Iterator for SiteStream {
    type Item = Site;
    #[inline]
    fn next(&mut self) -> Option<Site> {
        if self.next >= self.spec.length {
            return None;
        }
        let j = self.next;
        self.next += 1;
        Some(site_from_words(&self.spec, j, &self.blocks.site(j)))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = (self.spec.length - self.next) as usize;
        (r, Some(r))
    }
}

impl ExactSizeIterator for SiteStream {}

/// Packed bit vector for the dope indicators.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Bits {
    words: Vec<u64>,
    len: usize,
}

impl Bits {
    pub fn with_capacity(n: usize) -> Self {
        Bits { words: Vec::with_capacity(n.div_ceil(64)), len: 0 }
    }

    pub fn push(&mut self, b: bool) {
        if self.len % 64 == 0 {
            self.words.push(0);
        }
        if b {
            self.words[self.len / 64] |= 1 << (self.len % 64);
        }
        self.len += 1;
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index out of range");
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Little-endian bytes, bit `i` at byte `i/8`, position `i%8`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        out.truncate(self.len.div_ceil(8));
        out
    }

    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        if bytes.len() != len.div_ceil(8) {
            return Err(invalid("packed bit array has the wrong size"));
        }
        let mut b = Bits::with_capacity(len);
        for i in 0..len {
            b.push((bytes[i / 8] >> (i % 8)) & 1 == 1);
        }
        Ok(b)
    }

    pub fn count_ones_prefix(&self, n: usize) -> u64 {
        let full = n / 64;
        let mut c: u64 = self.words[..full].iter().map(|w| w.count_ones() as u64).sum();
        if n % 64 != 0 {
            c += (self.words[full] & ((1u64 << (n % 64)) - 1)).count_ones() as u64;
        }
        c
    }
}

/// A realised environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    lambda: Vec<f64>,
    chi: Bits,
    spec: EnvironmentSpec,
}

impl Environment {
    /// Materialise `spec.length()` sites.
    pub fn sample(spec: &EnvironmentSpec) -> Self {
        let n = spec.length as usize;
        let mut lambda = Vec::with_capacity(n);
        let mut chi = Bits::with_capacity(n);
        for s in spec.sites() {
            lambda.push(s.lambda);
            chi.push(s.chi);
        }
        Environment { lambda, chi, spec: *spec }
    }

    /// Build from explicit arrays. Checks finiteness, the doped-site value
    /// and that the length matches the spec.
    pub fn from_parts(spec: EnvironmentSpec, lambda: Vec<f64>, chi: Bits) -> Result<Self> {
        if lambda.len() as u64 != spec.length || chi.len() != lambda.len() {
            return Err(invalid("array lengths do not match the spec length"));
        }
        for (j, &l) in lambda.iter().enumerate() {
            if !l.is_finite() {
                return Err(invalid(format!("lambda[{j}] is not finite")));
            }
            if chi.get(j) && l != spec.rho {
                return Err(invalid(format!("doped site {j} has lambda != rho")));
            }
        }
        Ok(Environment { lambda, chi, spec })
    }

    /// Undoped environment with the given log-odds. Handy for hand-built
    /// cases; the attached spec is a zero-drift Rademacher placeholder with
    /// matching length.
    pub fn from_lambdas(lambda: Vec<f64>) -> Result<Self> {
        let spec = EnvironmentSpec::new(
            0.0,
            DopeProfile::Zero,
            ZetaRegime::Rademacher,
            lambda.len() as u64,
            0,
        )?;
        let mut chi = Bits::with_capacity(lambda.len());
        for _ in 0..lambda.len() {
            chi.push(false);
        }
        Environment::from_parts(spec, lambda, chi)
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn chi(&self) -> &Bits {
        &self.chi
    }

    pub fn spec(&self) -> &EnvironmentSpec {
        &self.spec
    }
}

/// `S_i = sum_{j <= i} lambda_j` for `i = 0..N-1`, accumulated left to right.
pub fn partial_sums(env: &Environment) -> Vec<f64> {
    let mut s = 0.0;
    env.lambda
        .iter()
        .map(|&l| {
            s += l;
            s
        })
        .collect()
}

/// `(N_0(n), N_1(n))`: undoped and doped sites among `0..=n`.
pub fn dope_counts(env: &Environment, n: u64) -> Result<(u64, u64)> {
    if n >= env.len() as u64 {
        return Err(Error::OutOfRange { index: n, available: env.len() as u64 });
    }
    let n1 = env.chi.count_ones_prefix(n as usize + 1);
    Ok((n + 1 - n1, n1))
}

/// The two parts of `S_n`: `rho * N_1(n)` and the sum of the undoped
/// log-odds, each accumulated left to right.
pub fn decompose_sum(env: &Environment, n: u64) -> Result<(f64, f64)> {
    let (_, n1) = dope_counts(env, n)?;
    let undoped: f64 = (0..=n as usize).filter(|&j| !env.chi.get(j)).map(|j| env.lambda[j]).sum();
    Ok((env.spec.rho * n1 as f64, undoped))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(delta: f64, dope: DopeProfile, zeta: ZetaRegime, n: u64, seed: u64) -> EnvironmentSpec {
        EnvironmentSpec::new(delta, dope, zeta, n, seed).unwrap()
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi_at(&DopeProfile::Zero, 17), 0.0);
        assert_eq!(phi_at(&DopeProfile::PowerLaw { beta: 0.5 }, 4), 0.5);
        assert_eq!(phi_at(&DopeProfile::OneMinusPowerLaw { beta: 0.5 }, 4), 0.5);
        assert_eq!(phi_at(&DopeProfile::PowerLaw { beta: 0.5 }, 0), 1.0);
        assert_eq!(phi_at(&DopeProfile::OneMinusPowerLaw { beta: 0.5 }, 0), 0.0);
    }

    #[test]
    fn rho_has_the_opposite_sign_of_delta() {
        assert_eq!(rho_of(0.0), 0.0);
        assert!((rho_of(-0.5) - log(3.0)).abs() < 1e-15);
        assert!(rho_of(0.3) < 0.0 && rho_of(-0.3) > 0.0);
    }

    #[test]
    fn fully_doped_environment_is_constant() {
        let env = Environment::sample(&spec(-0.5, DopeProfile::One, ZetaRegime::Rademacher, 3, 1));
        for &l in env.lambda() {
            assert!((l - log(3.0)).abs() < 1e-15);
        }
        assert!((0..3).all(|j| env.chi().get(j)));
        let env4 = Environment::sample(&spec(-0.5, DopeProfile::One, ZetaRegime::Rademacher, 4, 1));
        assert!((partial_sums(&env4)[3] - 4.0 * log(3.0)).abs() < 1e-14);
    }

    #[test]
    fn zero_dope_rademacher_is_plus_minus_one() {
        let env = Environment::sample(&spec(0.2, DopeProfile::Zero, ZetaRegime::Rademacher, 5, 3));
        assert!(env.lambda().iter().all(|&l| l == 1.0 || l == -1.0));
        assert_eq!(dope_counts(&env, 4).unwrap(), (5, 0));
    }

    #[test]
    fn sampling_is_deterministic_and_prefix_stable() {
        let s = spec(-0.3, DopeProfile::PowerLaw { beta: 0.4 }, ZetaRegime::heavy(1.5), 1000, 99);
        let a = Environment::sample(&s);
        assert_eq!(a, Environment::sample(&s));
        let long = Environment::sample(&s.with_length(5000).unwrap());
        assert_eq!(&long.lambda()[..1000], a.lambda());
        assert_eq!(s.site_at(777).lambda, a.lambda()[777]);
        let b = Environment::sample(&s.with_seed(100));
        assert_ne!(a.lambda(), b.lambda());
    }

    #[test]
    fn zeta_at_agrees_with_undoped_sites() {
        let s = spec(-0.3, DopeProfile::Constant { phi: 0.5 }, ZetaRegime::heavy(0.7), 200, 5);
        let env = Environment::sample(&s);
        for (j, (site, z)) in s.sites().with_zeta().enumerate() {
            assert_eq!(site.lambda, env.lambda()[j]);
            assert_eq!(z, s.zeta_at(j as u64));
            if !site.chi {
                assert_eq!(z, site.lambda);
            }
        }
    }

    #[test]
    fn dope_counts_direct() {
        let s = spec(-0.5, DopeProfile::Zero, ZetaRegime::Rademacher, 3, 0);
        let mut chi = Bits::default();
        for b in [true, false, true] {
            chi.push(b);
        }
        let r = s.rho();
        let env = Environment::from_parts(s, alloc::vec![r, 0.5, r], chi).unwrap();
        assert_eq!(dope_counts(&env, 2).unwrap(), (1, 2));
        assert_eq!(dope_counts(&env, 0).unwrap(), (0, 1));
        assert!(matches!(dope_counts(&env, 3), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn partial_sum_examples() {
        let env = Environment::from_lambdas(alloc::vec![0.0, 0.0, 0.0]).unwrap();
        assert_eq!(partial_sums(&env), alloc::vec![0.0, 0.0, 0.0]);
        let env = Environment::from_lambdas(alloc::vec![log(2.0), log(3.0)]).unwrap();
        let s = partial_sums(&env);
        assert_eq!(s[0], log(2.0));
        assert!((s[1] - log(6.0)).abs() < 1e-15);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let z = ZetaRegime::Rademacher;
        assert!(EnvironmentSpec::new(1.0, DopeProfile::Zero, z, 1, 0).is_err());
        assert!(EnvironmentSpec::new(0.0, DopeProfile::Zero, z, 0, 0).is_err());
        assert!(EnvironmentSpec::new(0.0, DopeProfile::PowerLaw { beta: 1.0 }, z, 1, 0).is_err());
        assert!(EnvironmentSpec::new(0.0, DopeProfile::Constant { phi: 1.5 }, z, 1, 0).is_err());
        assert!(EnvironmentSpec::new(0.0, DopeProfile::Zero, ZetaRegime::heavy(2.0), 1, 0).is_err());
        let bad = ZetaRegime::HeavyAsymmetric { alpha_plus: 1.2, alpha_minus: 1.5 };
        assert!(EnvironmentSpec::new(0.0, DopeProfile::Zero, bad, 1, 0).is_err());
        let ok = ZetaRegime::HeavyAsymmetric { alpha_plus: 0.9, alpha_minus: 0.5 };
        assert!(EnvironmentSpec::new(0.0, DopeProfile::Zero, ok, 1, 0).is_ok());
    }
}
