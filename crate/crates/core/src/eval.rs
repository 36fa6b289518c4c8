//! Belief downsampling and trial-based policy evaluation.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::ShortestPaths;
use crate::error::Result;
use crate::fsc::{simulate, Fsc, TrialOutcome};
use crate::model::{Belief, DetPomdp, StateRef};

/// Stream of the RNG used by [`downsample`], kept apart from the solver's.
const DOWNSAMPLE_STREAM: u64 = 0x5eed;

fn sample_from(b: &Belief, rng: &mut dyn RngCore) -> StateRef {
    let mut u: f64 = rng.gen();
    for (s, p) in b.iter() {
        if u < p {
            return s;
        }
        u -= p;
    }
    b.entries().last().expect("belief is non-empty").0
}

/// Planning belief with at most `n` states.
///
/// An enumerable initial belief with support at most `n` is returned as is.
/// Otherwise `10n` states are drawn from the initial distribution; if fewer
/// than `n` distinct states come up, their empirical distribution is
/// returned. Else `n` of them are picked by weighted sampling without
/// replacement, proportional to their empirical counts, and the counts of
/// the picked states are renormalized.
pub fn downsample(model: &dyn DetPomdp, n: usize, seed: u64) -> Belief {
    assert!(n >= 1, "support limit must be at least 1");
    let exact = model.initial_belief();
    if let Some(b) = &exact {
        if b.support_len() <= n {
            return b.clone();
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(DOWNSAMPLE_STREAM);
    let mut counts: BTreeMap<StateRef, f64> = BTreeMap::new();
    for _ in 0..10 * n {
        let s = match &exact {
            Some(b) => sample_from(b, &mut rng),
            None => model.sample_initial_state(&mut rng),
        };
        *counts.entry(s).or_default() += 1.0;
    }
    let empirical: Vec<(StateRef, f64)> = counts.into_iter().collect();
    if empirical.len() <= n {
        return Belief::from_weights(empirical).expect("counts are positive");
    }
    let chosen = empirical
        .choose_multiple_weighted(&mut rng, n, |e| e.1)
        .expect("counts are valid weights");
    Belief::from_weights(chosen.copied()).expect("counts are positive")
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(self) -> f64 {
        self.sum + self.carry
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut acc = CompensatedSum::default();
    let mut count = 0usize;
    for v in values {
        acc.add(v);
        count += 1;
    }
    (count > 0).then(|| acc.total() / count as f64)
}

/// Outcome and metrics of one evaluation trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub outcome: TrialOutcome,
    /// Accumulated cost `R`.
    pub cost: f64,
    /// `R - dist(s0)`, present unless the policy ran out of edges.
    pub regret: Option<f64>,
    /// `R / dist(s0)` for successful trials with `dist(s0) > 0`.
    #[serde(rename = "cr")]
    pub competitive_ratio: Option<f64>,
    pub steps: usize,
}

/// Aggregate metrics over a batch of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub trials: usize,
    pub success_rate_percent: f64,
    /// Mean regret over all trials where the policy stayed defined.
    pub mean_regret: Option<f64>,
    /// Mean regret over successful trials only.
    pub mean_regret_success: Option<f64>,
    pub mean_competitive_ratio: Option<f64>,
    pub horizon_reached: usize,
    pub policy_undefined: usize,
    pub policy_size: usize,
    pub plan_time_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub trials: Vec<TrialResult>,
    pub summary: MetricsSummary,
}

/// Settings for [`run_trials`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialConfig {
    pub trials: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Worker threads; 0 uses the global pool.
    pub jobs: usize,
}

/// Initial state of trial `index`: drawn from the true initial distribution
/// with an RNG stream keyed by `(seed, index)`.
pub fn trial_start(model: &dyn DetPomdp, seed: u64, index: usize) -> StateRef {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    model.sample_initial_state(&mut rng)
}

/// Evaluate `policy` on `config.trials` trials.
pub fn run_trials(policy: &Fsc, model: &dyn DetPomdp, config: TrialConfig) -> Evaluation {
    assert!(config.horizon >= 1, "horizon must be at least 1");
    let starts: Vec<StateRef> = (0..config.trials)
        .map(|i| trial_start(model, config.seed, i))
        .collect();
    let mut paths = ShortestPaths::new(config.horizon);
    let dists: Vec<f64> = starts.iter().map(|&s| paths.dist(model, s)).collect();

    let run = |i: usize| {
        let t = simulate(policy, model, starts[i], config.horizon);
        let d = dists[i];
        let regret = (t.outcome != TrialOutcome::PolicyUndefined && d.is_finite()).then(|| t.cost - d);
        let competitive_ratio =
            (t.outcome == TrialOutcome::Success && d > 0.0 && d.is_finite()).then(|| t.cost / d);
        TrialResult {
            trial: i,
            outcome: t.outcome,
            cost: t.cost,
            regret,
            competitive_ratio,
            steps: t.steps(),
        }
    };
    let trials: Vec<TrialResult> = if config.jobs == 1 {
        (0..config.trials).map(run).collect()
    } else if config.jobs == 0 {
        (0..config.trials).into_par_iter().map(run).collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .expect("thread pool")
            .install(|| (0..config.trials).into_par_iter().map(run).collect())
    };
    let summary = summarize(&trials, policy.len(), None);
    Evaluation { trials, summary }
}

/// Aggregate trial records.
pub fn summarize(
    trials: &[TrialResult],
    policy_size: usize,
    plan_time_seconds: Option<f64>,
) -> MetricsSummary {
    let count = |o| trials.iter().filter(|t| t.outcome == o).count();
    let successes = count(TrialOutcome::Success);
    MetricsSummary {
        trials: trials.len(),
        success_rate_percent: if trials.is_empty() {
            0.0
        } else {
            100.0 * successes as f64 / trials.len() as f64
        },
        mean_regret: mean(trials.iter().filter_map(|t| t.regret)),
        mean_regret_success: mean(
            trials
                .iter()
                .filter(|t| t.outcome == TrialOutcome::Success)
                .filter_map(|t| t.regret),
        ),
        mean_competitive_ratio: mean(trials.iter().filter_map(|t| t.competitive_ratio)),
        horizon_reached: count(TrialOutcome::HorizonReached),
        policy_undefined: count(TrialOutcome::PolicyUndefined),
        policy_size,
        plan_time_seconds,
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v}")).unwrap_or_default()
}

/// Per-trial CSV: `trial,outcome,cost,regret,cr,steps`.
pub fn write_trials_csv<W: Write>(trials: &[TrialResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["trial", "outcome", "cost", "regret", "cr", "steps"])?;
    for t in trials {
        w.write_record([
            t.trial.to_string(),
            t.outcome.as_str().to_string(),
            format!("{}", t.cost),
            opt(t.regret),
            opt(t.competitive_ratio),
            t.steps.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const SUMMARY_HEADER: [&str; 9] = [
    "sr",
    "regret",
    "regret_success",
    "competitive_ratio",
    "t_plan",
    "policy_size",
    "trials",
    "horizon_reached",
    "policy_undefined",
];

/// One summary row in the column order of [`SUMMARY_HEADER`].
pub fn summary_record(s: &MetricsSummary) -> Vec<String> {
    vec![
        format!("{}", s.success_rate_percent),
        opt(s.mean_regret),
        opt(s.mean_regret_success),
        opt(s.mean_competitive_ratio),
        opt(s.plan_time_seconds),
        s.policy_size.to_string(),
        s.trials.to_string(),
        s.horizon_reached.to_string(),
        s.policy_undefined.to_string(),
    ]
}

/// Summary CSV with a header row and one data row.
pub fn write_summary_csv<W: Write>(summary: &MetricsSummary, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    w.write_record(summary_record(summary))?;
    w.flush()?;
    Ok(())
}
