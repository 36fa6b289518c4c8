//! Sort a hidden permutation by inspecting positions and swapping items.
//!
//! Planning stops once the controller reaches the goal in every one of 1000
//! check trials. The example prints the solve summary, the success rate over
//! 10,000 fresh trials at horizon `2n` and one annotated execution.
//!
//! Usage: `cargo run --release --example sort_domain -- [n]`

use detmcvi::domains::{SortInstance, SortModel};
use detmcvi::eval::{run_trials, trial_start, TrialConfig};
use detmcvi::fsc::simulate;
use detmcvi::model::DetPomdp;
use detmcvi::solver::{solve, SolverConfig, SuccessCheck};

fn main() -> detmcvi::Result<()> {
    let n: usize = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("n must be a number"))
        .unwrap_or(5);
    let model = SortModel::new(SortInstance::new(n)?)?;
    let horizon = 2 * n;

    let result = solve(
        &model,
        &SolverConfig {
            time_budget: Some(120.0),
            eval_interval: 1.0,
            success_check: Some(SuccessCheck {
                trials: 1000,
                horizon,
                seed: 99,
            }),
            ..SolverConfig::default()
        },
    );
    println!(
        "sort n={n}: {:?} in {:.2?}, bounds [{:.4}, {:.4}], {} controller nodes",
        result.status,
        result.elapsed,
        result.lower,
        result.upper,
        result.policy_size()
    );

    let eval = run_trials(
        &result.fsc,
        &model,
        TrialConfig {
            trials: 10_000,
            horizon,
            seed: 7,
            jobs: 0,
        },
    );
    println!(
        "success {:.2}% over {} trials, mean cost above optimal {:.4}",
        eval.summary.success_rate_percent,
        eval.summary.trials,
        eval.summary.mean_regret.unwrap_or(f64::NAN)
    );

    let s0 = trial_start(&model, 7, 0);
    let trial = simulate(&result.fsc, &model, s0, horizon);
    println!("example run from {:?}:", model.unpack(s0));
    for (a, s) in trial.actions.iter().zip(&trial.states[1..]) {
        println!("  {:<12} -> {:?}", model.action_label(*a), model.unpack(*s));
    }
    println!("  {} after {} steps", trial.outcome.as_str(), trial.steps());
    Ok(())
}
