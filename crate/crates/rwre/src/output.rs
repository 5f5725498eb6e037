//! Tabular and JSON renderings of results. Every rendering starts with the
//! run header. Floats use the shortest representation that round-trips;
//! non-finite values print as `inf`, `-inf`, `NaN` in CSV and `null` in JSON.

use std::fmt::Write as _;

use anyhow::{bail, ensure, Context};
use serde::{Deserialize, Serialize};
use serde_json::json;

use rwre_core::functionals::{MartingaleReport, McEstimate, QuenchedFunctionals, SandwichReport};
use rwre_core::phase::{CellResult, PhaseVerdict};
use rwre_core::walk::TrajectoryStats;

use crate::config::Header;
use crate::grid::Cell;

/// `{:?}` of an `f64` is its shortest round-trip form.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Columns `i,S,logD,logF,logDelta,logT` for `i = 0..=n`; `S` and `logDelta`
/// are empty at `i = n`.
pub fn functionals_csv(header: &Header, fns: &QuenchedFunctionals) -> String {
    let n = fns.len();
    let mut out = header.csv_line();
    out.push_str("i,S,logD,logF,logDelta,logT\n");
    for i in 0..=n {
        let _ = writeln!(
            out,
            "{i},{},{},{},{},{}",
            opt(fns.s.get(i).copied()),
            num(fns.log_d[i]),
            num(fns.log_f[i]),
            opt(fns.log_delta.get(i).copied()),
            num(fns.log_t[i]),
        );
    }
    out
}

/// Summary at truncation `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalsSummary {
    pub n: usize,
    #[serde(rename = "logT")]
    pub log_t: f64,
    #[serde(rename = "logF")]
    pub log_f: f64,
    pub bounds: rwre_core::functionals::BoundValues,
    pub slacks: SandwichReport,
    pub martingale: MartingaleReport,
    #[serde(rename = "logTOracle", skip_serializing_if = "Option::is_none")]
    pub log_t_oracle: Option<f64>,
    #[serde(rename = "monteCarlo", skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<McEstimate>,
}

pub fn json_with_header<T: Serialize>(header: &Header, body: &T) -> String {
    let mut v = serde_json::to_value(body).expect("outputs serialise");
    let obj = match v.as_object_mut() {
        Some(o) => o,
        None => {
            v = json!({ "data": v });
            v.as_object_mut().unwrap()
        }
    };
    obj.insert("header".into(), serde_json::to_value(header).unwrap());
    let mut s = serde_json::to_string_pretty(&v).expect("outputs serialise");
    s.push('\n');
    s
}

/// Columns of the verdict CSV.
pub fn classify_csv(header: &Header, v: &PhaseVerdict) -> String {
    let mut out = header.csv_line();
    out.push_str("truncation,empirical,predicted,window_start,log_f_growth,max_prefix_growth,inv_d_tail_sum,inv_d_growth\n");
    let e = &v.evidence;
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{},{}",
        v.truncation,
        tag(&v.empirical),
        tag(&v.predicted),
        e.window_start,
        num(e.log_f_growth),
        num(e.max_prefix_growth),
        num(e.inv_d_tail_sum),
        num(e.inv_d_growth)
    );
    out
}

/// The serde tag of a unit enum variant.
fn tag<T: Serialize>(x: &T) -> String {
    match serde_json::to_value(x) {
        Ok(serde_json::Value::String(s)) => s,
        other => panic!("not a unit variant: {other:?}"),
    }
}

/// Columns of the sweep CSV, one row per cell.
pub const SWEEP_COLUMNS: &str = "cell,delta,rho,dope,beta,phi,zeta,sigma,alpha,alpha_plus,alpha_minus,\
predicted,critical_distance,scored,k,n,transient,null_recurrent,positive_recurrent,indeterminate,agreement";

pub fn sweep_csv(header: &Header, k: u64, n: u64, rows: &[(Cell, CellResult)]) -> String {
    use rwre_core::env::{DopeProfile as D, ZetaRegime as Z};
    let mut out = header.csv_line();
    out.push_str(SWEEP_COLUMNS);
    out.push('\n');
    for (i, (cell, res)) in rows.iter().enumerate() {
        let s = &cell.spec;
        let (dope, beta, phi) = match s.dope() {
            D::Zero => ("zero", None, None),
            D::One => ("one", None, None),
            D::PowerLaw { beta } => ("power_law", Some(beta), None),
            D::OneMinusPowerLaw { beta } => ("one_minus_power_law", Some(beta), None),
            D::Constant { phi } => ("constant", None, Some(phi)),
        };
        let (zeta, sigma, alpha, ap, am) = match s.zeta() {
            Z::Rademacher => ("rademacher", Some(1.0), None, None, None),
            Z::Gaussian { sigma } => ("gaussian", Some(sigma), None, None, None),
            Z::HeavySymmetric { alpha, .. } => ("heavy_symmetric", None, Some(alpha), None, None),
            Z::HeavyAsymmetric { alpha_plus, alpha_minus } => {
                ("heavy_asymmetric", None, None, Some(alpha_plus), Some(alpha_minus))
            }
        };
        let c = &res.counts;
        let _ = writeln!(
            out,
            "{i},{},{},{dope},{},{},{zeta},{},{},{},{},{},{},{},{k},{n},{},{},{},{},{}",
            num(s.delta()),
            num(s.rho()),
            opt(beta),
            opt(phi),
            opt(sigma),
            opt(alpha),
            opt(ap),
            opt(am),
            tag(&res.predicted),
            opt(cell.critical_distance),
            cell.scored,
            c.transient,
            c.null_recurrent,
            c.positive_recurrent,
            c.indeterminate,
            opt(res.agreement),
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell: Cell,
    pub result: CellResult,
}

/// Stats CSV: `replica,t,running_max,position` rows, then a line
/// `# first_hit` and `replica,level,tau` rows.
pub fn stats_csv(header: &Header, stats: &[TrajectoryStats]) -> String {
    let mut out = header.csv_line();
    out.push_str("replica,t,running_max,position\n");
    for (r, s) in stats.iter().enumerate() {
        for k in 0..s.checkpoints.len() {
            let _ = writeln!(out, "{r},{},{},{}", s.checkpoints[k], s.running_max[k], s.position[k]);
        }
    }
    out.push_str(FIRST_HIT_MARKER);
    out.push_str("replica,level,tau\n");
    for (r, s) in stats.iter().enumerate() {
        for (level, tau) in s.first_hit.iter().enumerate() {
            let _ = writeln!(out, "{r},{level},{tau}");
        }
    }
    out
}

const FIRST_HIT_MARKER: &str = "# first_hit\n";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsFile {
    pub replicas: Vec<TrajectoryStats>,
}

/// Read trajectory stats written as CSV or JSON. CSV does not carry the walk
/// seeds (they are derivable from the header); they read back as 0.
pub fn read_stats(text: &str) -> anyhow::Result<Vec<TrajectoryStats>> {
    if text.trim_start().starts_with('{') {
        let f: StatsFile = serde_json::from_str(text).context("stats JSON")?;
        return Ok(f.replicas);
    }
    let (main, hits) = text.split_once(FIRST_HIT_MARKER).context("stats CSV lacks the first_hit section")?;
    let mut out: Vec<TrajectoryStats> = Vec::new();
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(main.as_bytes());
    ensure!(rdr.headers()?.iter().eq(["replica", "t", "running_max", "position"]), "unexpected stats columns");
    for rec in rdr.deserialize::<(usize, u64, u64, u64)>() {
        let (r, t, m, x) = rec?;
        if r == out.len() {
            out.push(TrajectoryStats {
                checkpoints: vec![],
                running_max: vec![],
                position: vec![],
                first_hit: vec![],
                steps: 0,
                seed: 0,
            });
        }
        ensure!(r + 1 == out.len(), "replicas out of order");
        let s = &mut out[r];
        s.checkpoints.push(t);
        s.running_max.push(m);
        s.position.push(x);
        s.steps = t;
    }
    let mut rdr = csv::ReaderBuilder::new().from_reader(hits.as_bytes());
    ensure!(rdr.headers()?.iter().eq(["replica", "level", "tau"]), "unexpected first_hit columns");
    for rec in rdr.deserialize::<(usize, usize, u64)>() {
        let (r, level, tau) = rec?;
        let Some(s) = out.get_mut(r) else { bail!("first_hit for unknown replica {r}") };
        ensure!(level == s.first_hit.len(), "first_hit levels out of order");
        s.first_hit.push(tau);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Format, RunConfig};
    use rwre_core::env::{DopeProfile, EnvironmentSpec, ZetaRegime};

    fn header() -> Header {
        let spec = EnvironmentSpec::new(-0.5, DopeProfile::PowerLaw { beta: 0.2 }, ZetaRegime::Rademacher, 100, 7)
            .unwrap();
        Header::new(
            "stats",
            &RunConfig::Simulate { spec, seed: 1, steps: 1000, replicas: 2, ratio: 1.3, fit: None, format: Format::Csv },
        )
    }

    #[test]
    fn stats_csv_round_trip() {
        let spec = EnvironmentSpec::new(-0.2, DopeProfile::Zero, ZetaRegime::Rademacher, 10_000, 3).unwrap();
        let stats: Vec<TrajectoryStats> = (0..2)
            .map(|r| rwre_core::walk::run_trajectory_lazy(&spec, 20_000, 1.3, r).unwrap())
            .collect();
        let back = read_stats(&stats_csv(&header(), &stats)).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in stats.iter().zip(&back) {
            assert_eq!(a.checkpoints, b.checkpoints);
            assert_eq!(a.running_max, b.running_max);
            assert_eq!(a.position, b.position);
            assert_eq!(a.first_hit, b.first_hit);
            assert_eq!(a.steps, b.steps);
        }
    }

    #[test]
    fn functionals_csv_layout() {
        let env = rwre_core::env::Environment::from_lambdas(vec![0.0; 3]).unwrap();
        let fns = rwre_core::functionals::compute(&env, 3).unwrap();
        let csv = functionals_csv(&header(), &fns);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "i,S,logD,logF,logDelta,logT");
        assert_eq!(lines.len(), 6);
        assert!(lines[2].starts_with("0,0.0,0.0,0.0,"));
        assert!(lines[2].ends_with(",-inf"));
        let last: Vec<&str> = lines[5].split(',').collect();
        assert_eq!((last[1], last[4]), ("", ""));
        assert!((last[5].parse::<f64>().unwrap() - 12f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn json_bodies_carry_the_header() {
        let s = json_with_header(&header(), &vec![1, 2]);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["data"][1], 2);
        assert_eq!(crate::config::read_header(s.as_bytes()).unwrap(), header());
    }
}
