//! Success rate as a function of the planning support size `N`.
//!
//! The solver plans for a belief downsampled to at most `N` states while
//! every evaluation trial starts from the true initial distribution, so small
//! `N` leaves some worlds unplanned for. Output is CSV with columns
//! `instance,support_limit,planning_support,status,t_plan,policy_size,sr,regret`.
//!
//! Usage: `cargo run --release --example downsampling_sweep -- [instances] > sweep.csv`

use detmcvi::domains::{ctp, CtpModel, CtpParams};
use detmcvi::eval::{run_trials, TrialConfig};
use detmcvi::solver::{solve, SolverConfig};

const SUPPORT_LIMITS: [usize; 7] = [1, 4, 16, 64, 256, 1024, 4096];

fn main() -> detmcvi::Result<()> {
    let instances: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("numeric argument"))
        .unwrap_or(3);
    let mut out = csv::Writer::from_writer(std::io::stdout().lock());
    out.write_record([
        "instance",
        "support_limit",
        "planning_support",
        "status",
        "t_plan",
        "policy_size",
        "sr",
        "regret",
    ])?;
    for seed in 0..instances {
        let model = CtpModel::new(ctp::generate(20, CtpParams::default().with_stochastic_edges(11), seed)?)?;
        for limit in SUPPORT_LIMITS {
            let result = solve(
                &model,
                &SolverConfig {
                    max_belief_support: limit,
                    time_budget: Some(60.0),
                    seed,
                    ..SolverConfig::default()
                },
            );
            let eval = run_trials(
                &result.fsc,
                &model,
                TrialConfig {
                    trials: 10_000,
                    horizon: 40,
                    seed: 1000 + seed,
                    jobs: 0,
                },
            );
            let s = &eval.summary;
            out.write_record([
                seed.to_string(),
                limit.to_string(),
                result.planning_support.to_string(),
                format!("{:?}", result.status),
                format!("{:.3}", result.elapsed.as_secs_f64()),
                result.policy_size().to_string(),
                format!("{:.2}", s.success_rate_percent),
                s.mean_regret.map_or(String::new(), |r| format!("{r:.4}")),
            ])?;
            out.flush()?;
        }
    }
    Ok(())
}
