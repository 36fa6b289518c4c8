//! Solve a small Canadian Traveller instance and write the controller as
//! JSON and as a Graphviz graph with domain labels.
//!
//! Usage: `cargo run --release --example export_policy -- [out dir]`
//! then e.g. `dot -Tsvg out/policy.dot > policy.svg`.

use std::fs;
use std::path::PathBuf;

use detmcvi::domains::{ctp, CtpModel, CtpParams};
use detmcvi::fsc::{to_dot_labelled, Fsc};
use detmcvi::solver::{solve, SolverConfig};

fn main() -> detmcvi::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "policy_out".into()));
    fs::create_dir_all(&dir)?;

    let model = CtpModel::new(ctp::generate(8, CtpParams::default().with_stochastic_edges(4), 3)?)?;
    let result = solve(&model, &SolverConfig::default());
    println!(
        "{:?}: value {:.3}, {} controller nodes",
        result.status,
        result.upper,
        result.policy_size()
    );

    let json = result.fsc.to_json();
    fs::write(dir.join("policy.json"), &json)?;
    fs::write(dir.join("policy.dot"), to_dot_labelled(&result.fsc, &model))?;

    let reloaded = Fsc::from_json(&json)?;
    assert_eq!(reloaded, result.fsc);
    println!("wrote {} and {}", dir.join("policy.json").display(), dir.join("policy.dot").display());
    Ok(())
}
