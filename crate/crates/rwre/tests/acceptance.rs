//! Acceptance criteria, one pass/fail line each. Runs every suite at its
//! declared scale with a fixed root seed; exits nonzero if any fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rwre::config::{Suite, SuiteScale};
use rwre::suites::run_one;

const SEED: u64 = 20261016;

struct Criterion {
    id: u32,
    name: &'static str,
    suite: Suite,
    /// Declared wall-clock budget in seconds.
    budget: f64,
}

const CRITERIA: [Criterion; 9] = [
    Criterion { id: 1, name: "oracle equivalence", suite: Suite::Oracle, budget: 5.0 },
    Criterion { id: 2, name: "martingale identities", suite: Suite::Martingale, budget: 5.0 },
    Criterion { id: 3, name: "bound sandwiches", suite: Suite::Bounds, budget: 30.0 },
    Criterion { id: 4, name: "monte carlo vs exact", suite: Suite::MonteCarlo, budget: 60.0 },
    Criterion { id: 5, name: "phase diagram", suite: Suite::Phase, budget: 600.0 },
    Criterion { id: 6, name: "envelope exponent", suite: Suite::Envelope, budget: 900.0 },
    Criterion { id: 7, name: "heavy envelope", suite: Suite::HeavyEnvelope, budget: 900.0 },
    Criterion { id: 8, name: "limit laws", suite: Suite::LimitLaws, budget: 300.0 },
    Criterion { id: 9, name: "decomposition", suite: Suite::Decomposition, budget: 120.0 },
];

fn line(ok: bool, id: u32, name: &str, msg: &str) {
    println!("{} [{id}] {name}: {msg}", if ok { "PASS" } else { "FAIL" });
}

/// Every command, rendered by the binary under `threads` workers.
fn render_all(dir: &Path, threads: &str) -> Result<Vec<(String, Vec<u8>)>, String> {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let spec = cfg.join("pert0_recurrent.json");
    let spec = spec.to_str().unwrap();
    let grid = cfg.join("small_grid.json");
    // Same path for every thread count: `fit` records its input path.
    let stats = dir.join("stats.csv");
    let stats = stats.to_str().unwrap();
    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("gen-env bin", vec!["gen-env", "--spec", spec, "--sites", "5000", "--format", "bin"]),
        ("gen-env csv", vec!["gen-env", "--spec", spec, "--sites", "5000", "--format", "csv"]),
        ("gen-env json", vec!["gen-env", "--spec", spec, "--sites", "5000", "--format", "json"]),
        ("functionals csv", vec!["functionals", "--spec", spec, "--sites", "2000"]),
        (
            "functionals json",
            vec!["functionals", "--spec", spec, "--sites", "8", "--format", "json", "--oracle", "--trials", "1e4"],
        ),
        ("classify", vec!["classify", "--spec", spec, "--sites", "1e5"]),
        ("sweep", vec!["sweep", "--grid", grid.to_str().unwrap(), "--replicas", "4", "--sites", "2e4"]),
        ("simulate csv", vec!["simulate", "--spec", spec, "--steps", "2e5", "--replicas", "6", "--out", stats]),
        ("simulate fit", vec!["simulate", "--spec", spec, "--steps", "2e5", "--replicas", "6", "--fit", "--format", "json"]),
        ("fit", vec!["fit", "--stats", stats]),
        ("validate", vec!["validate", "--suite", "martingale", "--seed", "3", "--replicas", "10"]),
    ];
    let mut out = Vec::new();
    for (name, args) in runs {
        let o = Command::new(env!("CARGO_BIN_EXE_rwre"))
            .args(&args)
            .args(["--threads", threads])
            .output()
            .map_err(|e| format!("{name}: {e}"))?;
        if !o.status.success() {
            return Err(format!("{name} exited with {}: {}", o.status, String::from_utf8_lossy(&o.stderr).trim()));
        }
        let bytes = if args.contains(&"--out") {
            std::fs::read(stats).map_err(|e| format!("{name}: {e}"))?
        } else {
            o.stdout
        };
        out.push((name.to_string(), bytes));
    }
    Ok(out)
}

fn determinism() -> (bool, String) {
    let t0 = Instant::now();
    let suite = match run_one(Suite::Determinism, SEED, &SuiteScale::default()) {
        Ok(o) => o,
        Err(e) => return (false, format!("error: {e:#}")),
    };
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return (false, format!("tempdir: {e}")),
    };
    let (a, b) = match (render_all(dir.path(), "1"), render_all(dir.path(), "3")) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return (false, e),
    };
    let differing: Vec<&str> = a.iter().zip(&b).filter(|(x, y)| x.1 != y.1).map(|(x, _)| x.0.as_str()).collect();
    let ok = suite.passed && differing.is_empty();
    let cli = if differing.is_empty() {
        format!("all {} CLI outputs byte-identical under --threads 1 and 3", a.len())
    } else {
        format!("CLI outputs differ: {}", differing.join(", "))
    };
    (ok, format!("{}; {cli} ({:.1} s)", suite.summary, t0.elapsed().as_secs_f64()))
}

fn main() -> ExitCode {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    println!("acceptance: root seed {SEED}, {threads} thread(s)");
    let mut failed = 0;
    for c in &CRITERIA {
        match run_one(c.suite, SEED, &SuiteScale::default()) {
            Ok(o) => {
                let in_time = o.seconds <= c.budget;
                let ok = o.passed && in_time;
                let time = format!("{:.1} s of {:.0} s budget{}", o.seconds, c.budget, if in_time { "" } else { " EXCEEDED" });
                line(ok, c.id, c.name, &format!("{} ({time})", o.summary));
                failed += usize::from(!ok);
            }
            Err(e) => {
                line(false, c.id, c.name, &format!("error: {e:#}"));
                failed += 1;
            }
        }
    }
    let (ok, msg) = determinism();
    line(ok, 10, "determinism", &msg);
    failed += usize::from(!ok);
    println!("acceptance: {}/{} criteria passed", CRITERIA.len() + 1 - failed, CRITERIA.len() + 1);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
