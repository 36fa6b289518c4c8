//! Baseline planners that output policy trees: AO* search over the AND/OR
//! belief graph and recursive QMDP trees.

pub mod aostar;
pub mod qmdp;

pub use aostar::{solve_aostar, AoStarConfig, AoStarResult};
pub use qmdp::{solve_qmdp_tree, QmdpConfig};
