//! Benchmark domains and their file formats.
//!
//! | domain | file format                         | default horizon |
//! |--------|-------------------------------------|-----------------|
//! | CTP    | JSON object with `nodes` and `edges` | `2n`            |
//! | Maze   | ASCII grid                          | `4n² + 2n`      |
//! | Sort   | JSON object `{"n": k}`              | `2n`            |

pub mod ctp;
pub mod maze;
pub mod sort;
pub mod tabular;

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::DetPomdp;

pub use ctp::{CtpInstance, CtpModel, CtpParams, ObserveMode};
pub use maze::{MazeInstance, MazeModel};
pub use sort::{SortInstance, SortModel};
pub use tabular::{random_tabular, RandomTabularParams, TabularModel};

/// A problem instance of any supported domain.
#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Ctp(CtpInstance),
    Maze(MazeInstance),
    Sort(SortInstance),
}

impl Instance {
    pub fn domain(&self) -> &'static str {
        match self {
            Instance::Ctp(_) => "ctp",
            Instance::Maze(_) => "maze",
            Instance::Sort(_) => "sort",
        }
    }

    /// Parse an instance file. JSON with an `edges` key is a CTP instance,
    /// JSON with an `n` key a Sort instance; anything else is read as an
    /// ASCII maze.
    pub fn parse(text: &str) -> Result<Instance> {
        if text.trim_start().starts_with('{') {
            let value: serde_json::Value = serde_json::from_str(text)?;
            if value.get("edges").is_some() {
                return Ok(Instance::Ctp(CtpInstance::from_json(text)?));
            }
            if let Some(n) = value.get("n") {
                let n = n.as_u64().ok_or_else(|| {
                    Error::InvalidInstance(format!("sort size {n} is not an integer"))
                })?;
                return Ok(Instance::Sort(SortInstance::new(n as usize)?));
            }
            return Err(Error::InvalidInstance(
                "JSON instance has neither \"edges\" nor \"n\"".into(),
            ));
        }
        Ok(Instance::Maze(MazeInstance::from_ascii(text)?))
    }

    pub fn load(path: &Path) -> Result<Instance> {
        Instance::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        match self {
            Instance::Ctp(c) => c.to_json() + "\n",
            Instance::Maze(m) => m.to_ascii(),
            Instance::Sort(s) => serde_json::to_string(s).expect("serializes") + "\n",
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn model(&self) -> Result<Box<dyn DetPomdp>> {
        Ok(match self {
            Instance::Ctp(c) => Box::new(CtpModel::new(c.clone())?),
            Instance::Maze(m) => Box::new(MazeModel::new(m.clone())?),
            Instance::Sort(s) => Box::new(SortModel::new(*s)?),
        })
    }

    /// Evaluation horizon used for the benchmark tables.
    pub fn default_horizon(&self) -> usize {
        match self {
            Instance::Ctp(c) => 2 * c.node_count(),
            Instance::Maze(m) => {
                let n = m.width.max(m.height);
                4 * n * n + 2 * n
            }
            Instance::Sort(s) => 2 * s.n,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_each_format() {
        let ctp = Instance::Ctp(ctp::generate(5, CtpParams::default(), 1).unwrap());
        let maze = Instance::Maze(maze::generate(4, 1).unwrap());
        let sort = Instance::Sort(SortInstance::new(5).unwrap());
        for inst in [ctp, maze, sort] {
            let back = Instance::parse(&inst.to_text()).unwrap();
            assert_eq!(back, inst);
        }
        assert_eq!(Instance::parse("{\"n\": 5}").unwrap().default_horizon(), 10);
    }

    #[test]
    fn default_horizons() {
        let ctp = Instance::Ctp(ctp::generate(20, CtpParams::default(), 1).unwrap());
        assert_eq!(ctp.default_horizon(), 40);
        let maze = Instance::Maze(maze::generate(10, 1).unwrap());
        assert_eq!(maze.default_horizon(), 420);
    }

    #[test]
    fn rejects_unknown_json() {
        assert!(Instance::parse("{\"foo\": 1}").is_err());
        assert!(Instance::parse("{\"n\": 1}").is_err());
        assert!(Instance::parse("{\"n\": \"x\"}").is_err());
    }
}
