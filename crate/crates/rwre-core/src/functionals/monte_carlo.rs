use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::error::{invalid, Result};
use crate::math::mean_and_stderr;
use crate::rng::walk_rng;
use crate::walk::{hit_time, left_threshold};

/// Sample mean of `tau_n` over independent runs from the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials_requested: u64,
    pub trials_completed: u64,
    pub steps_used: u64,
    /// The step budget ran out; the statistics cover completed trials only.
    pub truncated: bool,
}

/// Estimate `E[tau_n]` by direct simulation. `step_budget` caps the total
/// number of steps across all trials.
pub fn monte_carlo_hitting(
    env: &Environment,
    n: usize,
    trials: u64,
    seed: u64,
    step_budget: u64,
) -> Result<McEstimate> {
    if n == 0 || n > env.len() {
        return Err(invalid("target must lie in 1..=environment length"));
    }
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    let thr: Vec<u64> = env.lambda()[..n].iter().map(|&l| left_threshold(l)).collect();
    let mut rng = walk_rng(seed);
    let mut taus = Vec::with_capacity(trials as usize);
    let mut used = 0u64;
    let mut truncated = false;
    for _ in 0..trials {
        match hit_time(&mut rng, &thr, n, step_budget - used) {
            Some(t) => {
                used += t;
                taus.push(t as f64);
            }
            None => {
                truncated = true;
                used = step_budget;
                break;
            }
        }
    }
    let (mean, stderr) = if taus.is_empty() { (f64::NAN, f64::NAN) } else { mean_and_stderr(&taus) };
    Ok(McEstimate {
        mean,
        stderr,
        trials_requested: trials,
        trials_completed: taus.len() as u64,
        steps_used: used,
        truncated,
    })
}
