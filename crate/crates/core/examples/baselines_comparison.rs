//! Compare DetMCVI with the AO* and QMDP-tree baselines on one CTP instance:
//! planning time, policy size and simulated performance.
//!
//! Usage: `cargo run --release --example baselines_comparison -- [nodes] [uncertain edges] [seed]`

use std::time::Instant;

use detmcvi::baselines::{solve_aostar, solve_qmdp_tree, AoStarConfig, QmdpConfig};
use detmcvi::domains::{ctp, CtpModel, CtpParams};
use detmcvi::eval::{downsample, run_trials, TrialConfig};
use detmcvi::fsc::Fsc;
use detmcvi::solver::{solve, SolverConfig};

fn arg(i: usize, default: u64) -> u64 {
    std::env::args()
        .nth(i)
        .map(|s| s.parse().expect("numeric argument"))
        .unwrap_or(default)
}

fn report(name: &str, fsc: &Fsc, seconds: f64, model: &CtpModel, horizon: usize) {
    let eval = run_trials(
        fsc,
        model,
        TrialConfig {
            trials: 10_000,
            horizon,
            seed: 1,
            jobs: 0,
        },
    );
    let s = eval.summary;
    println!(
        "{name:<10} {seconds:>9.3} {:>8} {:>8.2} {:>10.4}",
        fsc.len(),
        s.success_rate_percent,
        s.mean_regret.unwrap_or(f64::NAN)
    );
}

fn main() -> detmcvi::Result<()> {
    let n = arg(1, 20) as usize;
    let stochastic = arg(2, 12) as usize;
    let seed = arg(3, 0);
    let model = CtpModel::new(ctp::generate(n, CtpParams::default().with_stochastic_edges(stochastic), seed)?)?;
    let horizon = 2 * n;
    println!("{:<10} {:>9} {:>8} {:>8} {:>10}", "planner", "t_plan", "size", "sr", "regret");

    let config = SolverConfig {
        time_budget: Some(120.0),
        ..SolverConfig::default()
    };
    let r = solve(&model, &config);
    report("detmcvi", &r.fsc, r.elapsed.as_secs_f64(), &model, horizon);

    let b0 = downsample(&model, config.max_belief_support, config.seed);
    let ao = solve_aostar(
        &model,
        &b0,
        &AoStarConfig {
            time_budget: Some(120.0),
            ..AoStarConfig::default()
        },
    );
    report("ao*", &ao.policy, ao.elapsed.as_secs_f64(), &model, horizon);

    let t = Instant::now();
    let q = solve_qmdp_tree(&model, &b0, &QmdpConfig::default());
    report("qmdp-tree", &q, t.elapsed().as_secs_f64(), &model, horizon);
    Ok(())
}
