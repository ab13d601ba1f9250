//! Percentile bootstrap intervals and Monte-Carlo convergence tables.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::game::Game;
use crate::leverage::skill_rollouts;
use crate::rng::stream;
use crate::solvers::{Depth, Heuristic, SolveError};

pub const DEFAULT_RESAMPLES: usize = 1000;
pub const DEFAULT_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapResult {
    /// Mean of the observed sample.
    pub point: f64,
    pub ci: (f64, f64),
    pub level: f64,
    pub n_resamples: usize,
    pub seed: u64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Percentile bootstrap interval for the mean. Resample `i` draws from
/// random stream `(seed, i)`.
pub fn bootstrap_ci(samples: &[f64], n_resamples: usize, level: f64, seed: u64) -> Result<BootstrapResult, SolveError> {
    if samples.is_empty() {
        return Err(SolveError::Contract("bootstrap needs a nonempty sample".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(SolveError::Contract(format!("confidence level {level} must lie in (0, 1)")));
    }
    if n_resamples == 0 {
        return Err(SolveError::Contract("bootstrap needs at least one resample".into()));
    }
    let n = samples.len();
    let point = samples.iter().sum::<f64>() / n as f64;
    let mut means: Vec<f64> = (0..n_resamples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            (0..n).map(|_| samples[rng.random_range(0..n)]).sum::<f64>() / n as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    let lo = quantile(&means, alpha).min(point);
    let hi = quantile(&means, 1.0 - alpha).max(point);
    Ok(BootstrapResult { point, ci: (lo, hi), level, n_resamples, seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: u64,
    pub estimate: f64,
    pub standard_error: f64,
}

/// Skill-leverage estimates at each sample size of `n_schedule`. All rows
/// come from one seeded run: the row for `n` uses its first `n` rollouts.
pub fn convergence_report(
    game: &dyn Game,
    n_schedule: &[u64],
    seed: u64,
    depth: Depth,
    heuristic: &dyn Heuristic,
) -> Result<Vec<ConvergenceRow>, SolveError> {
    if n_schedule.windows(2).any(|w| w[0] > w[1]) {
        return Err(SolveError::Contract("sample-size schedule must be nondecreasing".into()));
    }
    let Some(&largest) = n_schedule.last() else {
        return Ok(Vec::new());
    };
    if n_schedule[0] == 0 {
        return Err(SolveError::Contract("sample sizes must be positive".into()));
    }
    let run = skill_rollouts(game, largest, seed, depth, heuristic)?;
    Ok(n_schedule
        .iter()
        .map(|&n| {
            let e = run.prefix(n as usize).estimate();
            ConvergenceRow { n, estimate: e.point, standard_error: e.standard_error }
        })
        .collect())
}
