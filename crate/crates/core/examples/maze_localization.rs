//! Localize and navigate in a random perfect maze.
//!
//! The agent starts in an unknown cell and only senses the walls around it,
//! so it has to move to tell cells apart before heading for the goal.
//!
//! Usage: `cargo run --release --example maze_localization -- [size] [seed]`

use detmcvi::domains::{maze, MazeModel};
use detmcvi::eval::{run_trials, TrialConfig};
use detmcvi::solver::{solve, SolverConfig, SuccessCheck};

fn main() -> detmcvi::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<u64>().expect("numeric argument"));
    let n = args.next().unwrap_or(5) as usize;
    let seed = args.next().unwrap_or(0);

    let instance = maze::generate(n, seed)?;
    print!("{}", instance.to_ascii());
    let model = MazeModel::new(instance)?;
    let horizon = 4 * n * n + 2 * n;

    let result = solve(
        &model,
        &SolverConfig {
            time_budget: Some(60.0),
            eval_interval: 1.0,
            success_check: Some(SuccessCheck {
                trials: 1000,
                horizon,
                seed: 5,
            }),
            ..SolverConfig::default()
        },
    );
    println!(
        "{:?} after {:.2?}: upper {:.3}, lower {:.3}, {} controller nodes for {} cells",
        result.status,
        result.elapsed,
        result.upper,
        result.lower,
        result.policy_size(),
        n * n
    );

    let eval = run_trials(
        &result.fsc,
        &model,
        TrialConfig {
            trials: 10_000,
            horizon,
            seed: 11,
            jobs: 0,
        },
    );
    println!(
        "success {:.2}%, mean regret {:.3}",
        eval.summary.success_rate_percent,
        eval.summary.mean_regret.unwrap_or(f64::NAN)
    );
    Ok(())
}
