//! Sweep grids: parameter families expanded into environment laws.

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use rwre_core::env::{DopeProfile, EnvironmentSpec, ZetaRegime};
use rwre_core::phase::critical_distance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DopeKind {
    Zero,
    One,
    PowerLaw,
    OneMinusPowerLaw,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZetaKind {
    Rademacher,
    Gaussian,
    HeavySymmetric,
    HeavyAsymmetric,
}

/// The Cartesian product of the listed values for one (dope, zeta) pair.
/// `betas` feed the power-law exponents (or `phi` for constant doping),
/// `alphas` the symmetric heavy tails, `alpha_pairs` the `(alpha_plus,
/// alpha_minus)` of the asymmetric law, `sigmas` the Gaussian scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Family {
    pub dope: DopeKind,
    pub zeta: ZetaKind,
    #[serde(default = "zero_list")]
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub betas: Vec<f64>,
    #[serde(default)]
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub alpha_pairs: Vec<(f64, f64)>,
    #[serde(default = "one_list")]
    pub sigmas: Vec<f64>,
}

fn zero_list() -> Vec<f64> {
    vec![0.0]
}

fn one_list() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "schema")]
    pub version: u32,
    pub families: Vec<Family>,
    /// Environments per cell.
    pub k: u64,
    /// Truncation.
    pub n: u64,
    pub seed: u64,
    /// Cells closer than this to a critical surface are reported unscored.
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn schema() -> u32 {
    crate::config::SCHEMA_VERSION
}

fn default_margin() -> f64 {
    0.1
}

/// A grid cell with its scoring status.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub spec: EnvironmentSpec,
    pub critical_distance: Option<f64>,
    pub scored: bool,
}

impl Family {
    fn dopes(&self) -> anyhow::Result<Vec<DopeProfile>> {
        let need_betas = |what: &str| -> anyhow::Result<()> {
            if self.betas.is_empty() {
                bail!("{what} doping needs a non-empty `betas` list");
            }
            Ok(())
        };
        Ok(match self.dope {
            DopeKind::Zero => vec![DopeProfile::Zero],
            DopeKind::One => vec![DopeProfile::One],
            DopeKind::PowerLaw => {
                need_betas("power-law")?;
                self.betas.iter().map(|&beta| DopeProfile::PowerLaw { beta }).collect()
            }
            DopeKind::OneMinusPowerLaw => {
                need_betas("one-minus-power-law")?;
                self.betas.iter().map(|&beta| DopeProfile::OneMinusPowerLaw { beta }).collect()
            }
            DopeKind::Constant => {
                need_betas("constant")?;
                self.betas.iter().map(|&phi| DopeProfile::Constant { phi }).collect()
            }
        })
    }

    fn zetas(&self) -> anyhow::Result<Vec<ZetaRegime>> {
        let v: Vec<ZetaRegime> = match self.zeta {
            ZetaKind::Rademacher => vec![ZetaRegime::Rademacher],
            ZetaKind::Gaussian => self.sigmas.iter().map(|&sigma| ZetaRegime::Gaussian { sigma }).collect(),
            ZetaKind::HeavySymmetric => self.alphas.iter().map(|&a| ZetaRegime::heavy(a)).collect(),
            ZetaKind::HeavyAsymmetric => self
                .alpha_pairs
                .iter()
                .map(|&(alpha_plus, alpha_minus)| ZetaRegime::HeavyAsymmetric { alpha_plus, alpha_minus })
                .collect(),
        };
        if v.is_empty() {
            bail!("family {:?}/{:?} lists no tail parameters", self.dope, self.zeta);
        }
        Ok(v)
    }
}

impl GridConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.version != crate::config::SCHEMA_VERSION {
            bail!("unsupported grid version {}", self.version);
        }
        if self.k == 0 || self.n == 0 {
            bail!("k and n must be positive");
        }
        if self.families.is_empty() {
            bail!("grid has no families");
        }
        Ok(())
    }

    /// Cells in family order, then zeta, dope, delta. Lengths and seeds of
    /// the returned specs are placeholders; replicas derive their own.
    pub fn cells(&self) -> anyhow::Result<Vec<Cell>> {
        self.validate()?;
        let mut out = Vec::new();
        for (i, fam) in self.families.iter().enumerate() {
            for zeta in fam.zetas()? {
                for dope in fam.dopes()? {
                    for &delta in &fam.deltas {
                        let spec = EnvironmentSpec::new(delta, dope, zeta, self.n, self.seed)
                            .with_context(|| format!("family {i}"))?;
                        let d = critical_distance(&spec);
                        out.push(Cell { spec, critical_distance: d, scored: d.is_some_and(|d| d >= self.margin) });
                    }
                }
            }
        }
        Ok(out)
    }

    /// The grid behind the phase-diagram acceptance run: every family of the
    /// theorem table, with cells at distance at least 0.1 from the critical
    /// surfaces.
    pub fn theorem_table(k: u64, n: u64, seed: u64) -> GridConfig {
        let fam = |dope, zeta, deltas: &[f64], betas: &[f64], alphas: &[f64]| Family {
            dope,
            zeta,
            deltas: deltas.to_vec(),
            betas: betas.to_vec(),
            alphas: alphas.to_vec(),
            alpha_pairs: vec![],
            sigmas: vec![1.0],
        };
        let pm = [-0.5, 0.5];
        GridConfig {
            version: crate::config::SCHEMA_VERSION,
            families: vec![
                fam(DopeKind::Zero, ZetaKind::Rademacher, &[0.0], &[], &[]),
                fam(DopeKind::Zero, ZetaKind::Gaussian, &[0.0], &[], &[]),
                fam(DopeKind::Zero, ZetaKind::HeavySymmetric, &[0.0], &[], &[0.5, 1.5]),
                Family {
                    alpha_pairs: vec![(1.5, 0.5), (0.5, 1.5)],
                    ..fam(DopeKind::Zero, ZetaKind::HeavyAsymmetric, &[0.0], &[], &[])
                },
                fam(DopeKind::PowerLaw, ZetaKind::Rademacher, &pm, &[0.2, 0.3, 0.7, 0.8], &[]),
                fam(DopeKind::PowerLaw, ZetaKind::HeavySymmetric, &pm, &[0.2, 0.6, 0.8], &[1.5]),
                fam(DopeKind::OneMinusPowerLaw, ZetaKind::HeavySymmetric, &pm, &[0.2, 0.3, 0.7, 0.8], &[0.5]),
            ],
            k,
            n,
            seed,
            margin: 0.1,
        }
    }
}
