//! Maze localization: an agent dropped at an unknown cell of a known perfect
//! maze must reach the goal cell. It senses the walls around its cell and
//! whether it stands on the goal.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{ActionId, Belief, DetPomdp, Observation, StateRef};

/// Compass directions, also the action order.
pub const DIRECTIONS: [&str; 4] = ["N", "E", "S", "W"];
const GOAL_FLAG: u64 = 1 << 4;

/// Rectangular maze on a cell grid. `walls[c]` holds one bit per direction
/// (N = 1, E = 2, S = 4, W = 8); cells are numbered row-major from the top
/// left.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MazeInstance {
    pub width: usize,
    pub height: usize,
    pub walls: Vec<u8>,
    pub goal: usize,
}

fn delta(dir: usize) -> (isize, isize) {
    [(0, -1), (1, 0), (0, 1), (-1, 0)][dir]
}

impl MazeInstance {
    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    pub fn cell(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn coords(&self, c: usize) -> (usize, usize) {
        (c % self.width, c / self.width)
    }

    /// Neighbouring cell in `dir`, ignoring walls.
    fn offset(&self, c: usize, dir: usize) -> Option<usize> {
        let (x, y) = self.coords(c);
        let (dx, dy) = delta(dir);
        let nx = x.checked_add_signed(dx)?;
        let ny = y.checked_add_signed(dy)?;
        (nx < self.width && ny < self.height).then(|| self.cell(nx, ny))
    }

    /// Cell reached by moving in `dir`; a wall keeps the agent in place.
    pub fn step(&self, c: usize, dir: usize) -> usize {
        if self.walls[c] >> dir & 1 == 1 {
            c
        } else {
            self.offset(c, dir).unwrap_or(c)
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInstance(msg.into()));
        if self.width == 0 || self.height == 0 || self.walls.len() != self.cell_count() {
            return bad("maze dimensions disagree with the wall table");
        }
        if self.goal >= self.cell_count() {
            return bad("goal cell out of range");
        }
        for c in 0..self.cell_count() {
            for dir in 0..4 {
                let closed = self.walls[c] >> dir & 1 == 1;
                match self.offset(c, dir) {
                    None if !closed => return bad("maze border must be walled"),
                    Some(n) if closed != (self.walls[n] >> ((dir + 2) % 4) & 1 == 1) => {
                        return bad("inconsistent wall between neighbouring cells")
                    }
                    _ => {}
                }
            }
        }
        let mut seen = vec![false; self.cell_count()];
        let mut stack = vec![self.goal];
        seen[self.goal] = true;
        while let Some(c) = stack.pop() {
            for dir in 0..4 {
                let n = self.step(c, dir);
                if !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return bad("some cells cannot reach the goal");
        }
        Ok(())
    }

    /// ASCII rendering on a `(2h+1) x (2w+1)` character grid: `#` walls,
    /// spaces for open cells and passages, `G` for the goal cell.
    pub fn to_ascii(&self) -> String {
        let (w, h) = (2 * self.width + 1, 2 * self.height + 1);
        let mut grid = vec![vec!['#'; w]; h];
        for c in 0..self.cell_count() {
            let (x, y) = self.coords(c);
            let (gx, gy) = (2 * x + 1, 2 * y + 1);
            grid[gy][gx] = if c == self.goal { 'G' } else { ' ' };
            if self.walls[c] & 2 == 0 {
                grid[gy][gx + 1] = ' ';
            }
            if self.walls[c] & 4 == 0 {
                grid[gy + 1][gx] = ' ';
            }
        }
        let mut out = String::with_capacity(h * (w + 1));
        for row in grid {
            out.extend(row);
            out.push('\n');
        }
        out
    }

    pub fn from_ascii(text: &str) -> Result<Self> {
        let rows: Vec<Vec<char>> = text
            .lines()
            .map(|l| l.trim_end_matches('\r').chars().collect())
            .filter(|r: &Vec<char>| !r.is_empty())
            .collect();
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        let h = rows.len();
        let w = rows.first().map_or(0, Vec::len);
        if h < 3 || w < 3 || h % 2 == 0 || w % 2 == 0 {
            return bad(format!("maze grid must have odd size at least 3x3, got {w}x{h}"));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != w) {
            return bad(format!("line {} has length {} instead of {w}", i + 1, rows[i].len()));
        }
        let (width, height) = ((w - 1) / 2, (h - 1) / 2);
        let mut walls = vec![0u8; width * height];
        let mut goal = None;
        for y in 0..height {
            for x in 0..width {
                let (gx, gy) = (2 * x + 1, 2 * y + 1);
                let c = y * width + x;
                match rows[gy][gx] {
                    'G' => goal = Some(c),
                    ' ' => {}
                    ch => return bad(format!("unexpected {ch:?} in cell ({x}, {y})")),
                }
                let neighbours = [(gx, gy - 1), (gx + 1, gy), (gx, gy + 1), (gx - 1, gy)];
                for (dir, &(nx, ny)) in neighbours.iter().enumerate() {
                    match rows[ny][nx] {
                        '#' => walls[c] |= 1 << dir,
                        ' ' => {}
                        ch => return bad(format!("unexpected {ch:?} in wall at ({nx}, {ny})")),
                    }
                }
            }
        }
        let Some(goal) = goal else {
            return bad("maze has no goal cell".into());
        };
        let maze = MazeInstance {
            width,
            height,
            walls,
            goal,
        };
        maze.validate()?;
        Ok(maze)
    }
}

/// Perfect `n x n` maze carved by a randomized depth-first search, with the
/// goal placed at a random cell.
pub fn generate(n: usize, seed: u64) -> Result<MazeInstance> {
    if n < 2 {
        return Err(Error::InvalidInstance(format!("maze size must be at least 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut maze = MazeInstance {
        width: n,
        height: n,
        walls: vec![0b1111; n * n],
        goal: 0,
    };
    let mut visited = vec![false; n * n];
    let start = rng.gen_range(0..n * n);
    visited[start] = true;
    let mut stack = vec![start];
    while let Some(&c) = stack.last() {
        let mut options: Vec<(usize, usize)> = (0..4)
            .filter_map(|dir| maze.offset(c, dir).map(|m| (dir, m)))
            .filter(|&(_, m)| !visited[m])
            .collect();
        if options.is_empty() {
            stack.pop();
            continue;
        }
        options.shuffle(&mut rng);
        let (dir, m) = options[0];
        maze.walls[c] &= !(1 << dir);
        maze.walls[m] &= !(1 << ((dir + 2) % 4));
        visited[m] = true;
        stack.push(m);
    }
    maze.goal = rng.gen_range(0..n * n);
    maze.validate()?;
    Ok(maze)
}

/// The localization DetPOMDP of a maze.
#[derive(Debug, Clone)]
pub struct MazeModel {
    maze: MazeInstance,
}

impl MazeModel {
    pub fn new(maze: MazeInstance) -> Result<Self> {
        maze.validate()?;
        Ok(MazeModel { maze })
    }

    pub fn maze(&self) -> &MazeInstance {
        &self.maze
    }
}

impl DetPomdp for MazeModel {
    fn action_count(&self) -> usize {
        4
    }

    fn transition(&self, s: StateRef, a: ActionId) -> StateRef {
        let c = s.0 as usize;
        if c == self.maze.goal {
            return s;
        }
        StateRef(self.maze.step(c, a.0) as u64)
    }

    fn observe(&self, next: StateRef, _a: ActionId) -> Observation {
        let c = next.0 as usize;
        let goal = if c == self.maze.goal { GOAL_FLAG } else { 0 };
        Observation(self.maze.walls[c] as u64 | goal)
    }

    fn cost(&self, s: StateRef, _a: ActionId) -> f64 {
        if s.0 as usize == self.maze.goal {
            0.0
        } else {
            1.0
        }
    }

    fn is_goal(&self, s: StateRef) -> bool {
        s.0 as usize == self.maze.goal
    }

    fn max_step_cost(&self) -> f64 {
        1.0
    }

    fn initial_belief(&self) -> Option<Belief> {
        let cells = (0..self.maze.cell_count())
            .filter(|&c| c != self.maze.goal)
            .map(|c| StateRef(c as u64));
        Some(Belief::uniform(cells).expect("maze has a non-goal cell"))
    }

    fn sample_initial_state(&self, rng: &mut dyn RngCore) -> StateRef {
        let k = rng.gen_range(0..self.maze.cell_count() - 1);
        StateRef((if k >= self.maze.goal { k + 1 } else { k }) as u64)
    }

    fn action_label(&self, a: ActionId) -> String {
        DIRECTIONS.get(a.0).map_or_else(|| a.to_string(), |d| d.to_string())
    }

    fn observation_label(&self, o: Observation) -> String {
        let walls: String = (0..4)
            .filter(|d| o.0 >> d & 1 == 1)
            .map(|d| DIRECTIONS[d])
            .collect();
        let walls = if walls.is_empty() { "-".to_string() } else { walls };
        if o.0 & GOAL_FLAG != 0 {
            format!("{walls} goal")
        } else {
            walls
        }
    }
}
