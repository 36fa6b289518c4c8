//! Solve a random Canadian Traveller instance with DetMCVI and evaluate the
//! controller by simulation.
//!
//! Usage: `cargo run --release --example ctp_detmcvi -- [nodes] [uncertain edges] [seed]`

use detmcvi::domains::{ctp, CtpModel, CtpParams};
use detmcvi::eval::{run_trials, TrialConfig};
use detmcvi::model::DetPomdp;
use detmcvi::solver::{solve, SolverConfig};

fn arg(i: usize, default: u64) -> u64 {
    std::env::args()
        .nth(i)
        .map(|s| s.parse().expect("numeric argument"))
        .unwrap_or(default)
}

fn main() -> detmcvi::Result<()> {
    let n = arg(1, 20) as usize;
    let stochastic = arg(2, 12) as usize;
    let seed = arg(3, 0);

    let instance = ctp::generate(n, CtpParams::default().with_stochastic_edges(stochastic), seed)?;
    let model = CtpModel::new(instance)?;
    let support = model.initial_belief().map_or(0, |b| b.support_len());
    println!(
        "CTP with {n} nodes, {stochastic} uncertain edges, {} actions, initial support {support}",
        model.action_count()
    );

    let config = SolverConfig {
        time_budget: Some(120.0),
        seed,
        ..SolverConfig::default()
    };
    let result = solve(&model, &config);
    println!(
        "{:?} after {:.2?}: upper {:.4}, lower {:.4}, {} controller nodes, {} iterations, {} tree nodes",
        result.status,
        result.elapsed,
        result.upper,
        result.lower,
        result.policy_size(),
        result.stats.iterations,
        result.stats.tree_nodes,
    );

    let eval = run_trials(
        &result.fsc,
        &model,
        TrialConfig {
            trials: 10_000,
            horizon: 2 * n,
            seed: seed + 1,
            jobs: 0,
        },
    );
    let s = &eval.summary;
    println!(
        "success {:.2}%, mean regret {:.4}, mean competitive ratio {:.4}",
        s.success_rate_percent,
        s.mean_regret.unwrap_or(f64::NAN),
        s.mean_competitive_ratio.unwrap_or(f64::NAN),
    );
    Ok(())
}
