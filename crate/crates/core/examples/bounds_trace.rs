//! Record how the root bounds close over time and print them as CSV, one row
//! per sample (`t_seconds,upper,lower,fsc_nodes`).
//!
//! Usage: `cargo run --release --example bounds_trace -- [nodes] [uncertain edges] [seed] > trace.csv`

use detmcvi::domains::{ctp, CtpModel, CtpParams};
use detmcvi::solver::{solve, SolverConfig};

fn main() -> detmcvi::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<u64>().expect("numeric argument"));
    let n = args.next().unwrap_or(20) as usize;
    let stochastic = args.next().unwrap_or(12) as usize;
    let seed = args.next().unwrap_or(9);

    let model = CtpModel::new(ctp::generate(n, CtpParams::default().with_stochastic_edges(stochastic), seed)?)?;
    let result = solve(
        &model,
        &SolverConfig {
            eval_interval: 0.05,
            time_budget: Some(120.0),
            seed,
            ..SolverConfig::default()
        },
    );
    eprintln!(
        "{:?} after {:.2?} and {} iterations; {} trace points",
        result.status,
        result.elapsed,
        result.stats.iterations,
        result.trace.points.len()
    );
    result.trace.write_csv(std::io::stdout().lock())
}
