//! Resolved run configurations and the header every output carries.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rwre_core::env::EnvironmentSpec;
use rwre_core::phase::ClassifierConfig;
use rwre_core::walk::FitOptions;

use crate::grid::GridConfig;

pub const ARTIFACT: &str = "rwre";
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Version of every file layout and JSON schema written by this crate.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EnvFormat {
    Bin,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Oracle,
    Martingale,
    Bounds,
    MonteCarlo,
    Phase,
    Envelope,
    HeavyEnvelope,
    LimitLaws,
    Decomposition,
    Determinism,
    All,
}

/// Horizons a suite may be rescaled with; `None` keeps the suite's default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteScale {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<u64>,
}

/// Everything that determines a command's output. Thread counts and output
/// paths are deliberately absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    GenEnv {
        spec: EnvironmentSpec,
        format: EnvFormat,
    },
    Functionals {
        spec: EnvironmentSpec,
        /// Truncation `n`: rows `0..=n`.
        sites: u64,
        format: Format,
        /// Also solve the first-step equations directly.
        oracle: bool,
        /// Monte Carlo trials for `E[tau_n]` and their total step budget.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        trials: Option<(u64, u64)>,
    },
    Classify {
        spec: EnvironmentSpec,
        classifier: ClassifierConfig,
        format: Format,
    },
    Sweep {
        grid: GridConfig,
        classifier: ClassifierConfig,
        format: Format,
    },
    Simulate {
        spec: EnvironmentSpec,
        seed: u64,
        steps: u64,
        replicas: u64,
        ratio: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fit: Option<FitOptions>,
        format: Format,
    },
    Fit {
        input: String,
        input_sha256: String,
        options: FitOptions,
    },
    Validate {
        suite: Suite,
        seed: u64,
        scale: SuiteScale,
    },
}

impl RunConfig {
    pub fn name(&self) -> &'static str {
        match self {
            RunConfig::GenEnv { .. } => "gen-env",
            RunConfig::Functionals { .. } => "functionals",
            RunConfig::Classify { .. } => "classify",
            RunConfig::Sweep { .. } => "sweep",
            RunConfig::Simulate { .. } => "simulate",
            RunConfig::Fit { .. } => "fit",
            RunConfig::Validate { .. } => "validate",
        }
    }

    /// The root seed all randomness of the run flows from.
    pub fn seed(&self) -> u64 {
        match self {
            RunConfig::GenEnv { spec, .. } | RunConfig::Functionals { spec, .. } | RunConfig::Classify { spec, .. } => {
                spec.seed()
            }
            RunConfig::Sweep { grid, .. } => grid.seed,
            RunConfig::Simulate { seed, .. } | RunConfig::Validate { seed, .. } => *seed,
            RunConfig::Fit { .. } => 0,
        }
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("configs serialise");
        format!("{:x}", Sha256::digest(bytes))
    }
}

/// Provenance embedded at the top of every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub artifact: String,
    pub version: String,
    pub schema: u32,
    /// What the file holds, e.g. `functionals` or `sweep`.
    pub kind: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: RunConfig,
}

const CSV_PREFIX: &str = "# rwre ";

impl Header {
    pub fn new(kind: &str, config: &RunConfig) -> Header {
        Header {
            artifact: ARTIFACT.to_string(),
            version: ARTIFACT_VERSION.to_string(),
            schema: SCHEMA_VERSION,
            kind: kind.to_string(),
            seed: config.seed(),
            config_hash: config.hash(),
            config: config.clone(),
        }
    }

    /// One comment line: `# rwre {json}`.
    pub fn csv_line(&self) -> String {
        format!("{CSV_PREFIX}{}\n", serde_json::to_string(self).expect("headers serialise"))
    }

    /// The header of a CSV file written by this crate, if its first line is one.
    pub fn from_csv(text: &str) -> anyhow::Result<Option<Header>> {
        let first = text.lines().next().unwrap_or("");
        match first.strip_prefix(CSV_PREFIX) {
            Some(json) => Ok(Some(serde_json::from_str(json)?)),
            None => Ok(None),
        }
    }

    /// Check that the stored hash matches the stored config.
    pub fn verify(&self) -> anyhow::Result<()> {
        anyhow::ensure!(self.artifact == ARTIFACT, "not an {ARTIFACT} file");
        anyhow::ensure!(self.schema == SCHEMA_VERSION, "unsupported schema version {}", self.schema);
        anyhow::ensure!(self.config.hash() == self.config_hash, "config hash mismatch");
        Ok(())
    }
}

/// Extract the header of any output file: CSV comment line, JSON `header`
/// member, or binary environment header.
pub fn read_header(bytes: &[u8]) -> anyhow::Result<Header> {
    if bytes.starts_with(crate::envio::MAGIC) {
        return Ok(crate::envio::read_env_bin(bytes)?.0);
    }
    let text = std::str::from_utf8(bytes)?;
    if let Some(h) = Header::from_csv(text)? {
        return Ok(h);
    }
    #[derive(Deserialize)]
    struct WithHeader {
        header: Header,
    }
    Ok(serde_json::from_str::<WithHeader>(text)?.header)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rwre_core::env::{DopeProfile, ZetaRegime};

    fn cfg() -> RunConfig {
        let spec = EnvironmentSpec::new(-0.5, DopeProfile::PowerLaw { beta: 0.2 }, ZetaRegime::Rademacher, 100, 7)
            .unwrap();
        RunConfig::Functionals { spec, sites: 99, format: Format::Csv, oracle: false, trials: None }
    }

    #[test]
    fn header_round_trips_through_csv() {
        let h = Header::new("functionals", &cfg());
        let text = format!("{}i,S\n0,1\n", h.csv_line());
        let back = Header::from_csv(&text).unwrap().unwrap();
        assert_eq!(back, h);
        back.verify().unwrap();
        assert_eq!(back.seed, 7);
    }

    #[test]
    fn hash_tracks_the_config() {
        let a = cfg();
        let mut b = cfg();
        if let RunConfig::Functionals { sites, .. } = &mut b {
            *sites = 98;
        }
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), cfg().hash());
        assert_eq!(a.hash().len(), 64);
    }
}
