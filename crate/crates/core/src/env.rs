//! Deterministic gridworld with scheduled obstacle changes.
//!
//! Obstacles come in three kinds: permanent, `closes_at(e)` (passable for
//! episodes < e, blocked from e on) and `opens_at(e)` (blocked before e,
//! passable from e on). The shipped default layout puts a wall row across
//! the grid with one gap that closes at episode 15 and one that opens at
//! episode 30, so the agent has to re-route twice per 50-episode run.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::path::Path;

use thiserror::Error;

/// Errors raised by layout loading, validation and environment usage.
#[derive(Debug, Error)]
pub enum EnvError {
    #[error("layout i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("layout parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid grid: {0}")]
    Invalid(String),
    #[error("no unobstructed path from start to goal at episode {0}")]
    NoPath(u32),
    #[error("step called on a terminal state (position == goal)")]
    SteppedTerminal,
}

/// Grid cell coordinate; `x` grows rightward, `y` grows downward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coord {
    pub x: u32,
    pub y: u32,
}

impl Coord {
    pub fn new(x: u32, y: u32) -> Self {
        Coord { x, y }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// The four cardinal moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Up, Action::Down, Action::Left, Action::Right];

    /// Index in `0..4`, stable across the crate (Q-table layout relies on it).
    pub fn index(self) -> usize {
        match self {
            Action::Up => 0,
            Action::Down => 1,
            Action::Left => 2,
            Action::Right => 3,
        }
    }

    pub fn from_index(i: usize) -> Action {
        Action::ALL[i]
    }
}

/// Obstacle schedule for one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObstacleKind {
    Permanent,
    /// Passable for episodes < e, blocked for episodes >= e.
    ClosesAt(u32),
    /// Blocked for episodes < e, passable for episodes >= e.
    OpensAt(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObstacleRule {
    pub cell: Coord,
    pub kind: ObstacleKind,
}

impl ObstacleRule {
    /// Whether this rule blocks its cell at the given episode.
    pub fn blocks(&self, episode: u32) -> bool {
        match self.kind {
            ObstacleKind::Permanent => true,
            ObstacleKind::ClosesAt(e) => episode >= e,
            ObstacleKind::OpensAt(e) => episode < e,
        }
    }
}

/// Static description of a gridworld layout.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub width: u32,
    pub height: u32,
    pub start: Coord,
    pub goal: Coord,
    pub obstacles: Vec<ObstacleRule>,
    /// Episode indices at which the active obstacle set changes,
    /// derived from the rules; strictly increasing, each >= 1.
    pub change_episodes: Vec<u32>,
}

/// Live simulation state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnvState {
    pub position: Coord,
    pub episode_index: u32,
    pub step_count: u32,
}

impl GridSpec {
    /// Parse a layout from the plain-text map format.
    ///
    /// Comment lines (starting with `#`) may precede the header. The header
    /// is `width height`, followed by exactly `height` rows of
    /// whitespace-separated tokens using the legend `S G # . C<e> O<e>`.
    /// Since `#` is also the permanent-obstacle token, comments are only
    /// recognized before the header.
    pub fn parse(text: &str) -> Result<GridSpec, EnvError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .skip_while(|(_, l)| l.trim_start().starts_with('#'));

        let (header_ln, header) = lines.next().ok_or(EnvError::Parse {
            line: 0,
            msg: "empty layout".into(),
        })?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        if dims.len() != 2 {
            return Err(EnvError::Parse {
                line: header_ln + 1,
                msg: format!("expected header `width height`, got `{header}`"),
            });
        }
        let width: u32 = dims[0].parse().map_err(|_| EnvError::Parse {
            line: header_ln + 1,
            msg: format!("bad width `{}`", dims[0]),
        })?;
        let height: u32 = dims[1].parse().map_err(|_| EnvError::Parse {
            line: header_ln + 1,
            msg: format!("bad height `{}`", dims[1]),
        })?;
        if width == 0 || height == 0 {
            return Err(EnvError::Invalid("width and height must be positive".into()));
        }

        let mut start = None;
        let mut goal = None;
        let mut obstacles = Vec::new();

        for y in 0..height {
            let (ln, row) = lines.next().ok_or(EnvError::Parse {
                line: 0,
                msg: format!("expected {height} rows, got {y}"),
            })?;
            let tokens: Vec<&str> = row.split_whitespace().collect();
            if tokens.len() != width as usize {
                return Err(EnvError::Parse {
                    line: ln + 1,
                    msg: format!("expected {width} cells, got {}", tokens.len()),
                });
            }
            for (x, tok) in tokens.iter().enumerate() {
                let cell = Coord::new(x as u32, y);
                match *tok {
                    "." => {}
                    "S" => {
                        if start.replace(cell).is_some() {
                            return Err(EnvError::Invalid("multiple start cells".into()));
                        }
                    }
                    "G" => {
                        if goal.replace(cell).is_some() {
                            return Err(EnvError::Invalid("multiple goal cells".into()));
                        }
                    }
                    "#" => obstacles.push(ObstacleRule {
                        cell,
                        kind: ObstacleKind::Permanent,
                    }),
                    t if t.starts_with('C') || t.starts_with('O') => {
                        let e: u32 = t[1..].parse().map_err(|_| EnvError::Parse {
                            line: ln + 1,
                            msg: format!("bad episode index in `{t}`"),
                        })?;
                        let kind = if t.starts_with('C') {
                            ObstacleKind::ClosesAt(e)
                        } else {
                            ObstacleKind::OpensAt(e)
                        };
                        obstacles.push(ObstacleRule { cell, kind });
                    }
                    t => {
                        return Err(EnvError::Parse {
                            line: ln + 1,
                            msg: format!("unknown cell token `{t}`"),
                        })
                    }
                }
            }
        }

        let start = start.ok_or_else(|| EnvError::Invalid("no start cell".into()))?;
        let goal = goal.ok_or_else(|| EnvError::Invalid("no goal cell".into()))?;

        let mut change_episodes: Vec<u32> = obstacles
            .iter()
            .filter_map(|r| match r.kind {
                ObstacleKind::ClosesAt(e) | ObstacleKind::OpensAt(e) => Some(e),
                ObstacleKind::Permanent => None,
            })
            .collect();
        change_episodes.sort_unstable();
        change_episodes.dedup();

        let spec = GridSpec {
            width,
            height,
            start,
            goal,
            obstacles,
            change_episodes,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<GridSpec, EnvError> {
        let text = std::fs::read_to_string(path)?;
        GridSpec::parse(&text)
    }

    /// The layout shipped with the crate: a 12×9 serpentine with two wall
    /// rows; the upper wall's middle gap closes at episode 15 and a direct
    /// gap on its right opens at episode 30.
    pub fn default_layout() -> GridSpec {
        GridSpec::parse(include_str!("../layouts/default.grid"))
            .expect("shipped default layout must validate")
    }

    /// Checks all structural invariants, including path existence at every
    /// schedule phase (breadth-first search).
    pub fn validate(&self) -> Result<(), EnvError> {
        if !self.in_bounds(self.start) || !self.in_bounds(self.goal) {
            return Err(EnvError::Invalid("start or goal out of bounds".into()));
        }
        if self.start == self.goal {
            return Err(EnvError::Invalid("start equals goal".into()));
        }
        for r in &self.obstacles {
            if !self.in_bounds(r.cell) {
                return Err(EnvError::Invalid(format!("obstacle {} out of bounds", r.cell)));
            }
            if r.cell == self.start || r.cell == self.goal {
                return Err(EnvError::Invalid(format!(
                    "obstacle {} sits on start or goal",
                    r.cell
                )));
            }
            if let ObstacleKind::ClosesAt(e) | ObstacleKind::OpensAt(e) = r.kind {
                if e < 1 {
                    return Err(EnvError::Invalid(format!(
                        "schedule episode for {} must be >= 1",
                        r.cell
                    )));
                }
            }
        }
        if self.change_episodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(EnvError::Invalid(
                "change_episodes must be strictly increasing".into(),
            ));
        }
        // One representative episode per schedule phase covers all indices.
        let mut phases = vec![0u32];
        phases.extend_from_slice(&self.change_episodes);
        for ep in phases {
            if !self.path_exists(ep) {
                return Err(EnvError::NoPath(ep));
            }
        }
        Ok(())
    }

    pub fn in_bounds(&self, c: Coord) -> bool {
        c.x < self.width && c.y < self.height
    }

    /// Exactly the cells blocked at `episode`. Pure in (self, episode).
    pub fn active_obstacles(&self, episode: u32) -> BTreeSet<Coord> {
        self.obstacles
            .iter()
            .filter(|r| r.blocks(episode))
            .map(|r| r.cell)
            .collect()
    }

    fn path_exists(&self, episode: u32) -> bool {
        let blocked = self.active_obstacles(episode);
        let mut seen = vec![false; (self.width * self.height) as usize];
        let idx = |c: Coord| (c.y * self.width + c.x) as usize;
        let mut queue = VecDeque::new();
        queue.push_back(self.start);
        seen[idx(self.start)] = true;
        while let Some(c) = queue.pop_front() {
            if c == self.goal {
                return true;
            }
            for a in Action::ALL {
                if let Some(n) = self.neighbor(c, a) {
                    if !blocked.contains(&n) && !seen[idx(n)] {
                        seen[idx(n)] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        false
    }

    fn neighbor(&self, c: Coord, a: Action) -> Option<Coord> {
        let (dx, dy): (i64, i64) = match a {
            Action::Up => (0, -1),
            Action::Down => (0, 1),
            Action::Left => (-1, 0),
            Action::Right => (1, 0),
        };
        let nx = c.x as i64 + dx;
        let ny = c.y as i64 + dy;
        if nx < 0 || ny < 0 || nx >= self.width as i64 || ny >= self.height as i64 {
            None
        } else {
            Some(Coord::new(nx as u32, ny as u32))
        }
    }

    /// Number of distinct (x, y) cells; the tabular state-space size.
    pub fn n_states(&self) -> usize {
        (self.width * self.height) as usize
    }

    /// Flat state index of a coordinate.
    pub fn state_index(&self, c: Coord) -> usize {
        (c.y * self.width + c.x) as usize
    }
}

/// Place the agent at the start cell for a given episode index.
pub fn reset(spec: &GridSpec, episode: u32) -> EnvState {
    EnvState {
        position: spec.start,
        episode_index: episode,
        step_count: 0,
    }
}

/// One environment transition.
///
/// Moves into walls, out-of-bounds cells or active obstacles leave the
/// position unchanged; `step_count` always increments. Reward is 1 exactly
/// when the move enters the goal, 0 otherwise.
pub fn step(
    spec: &GridSpec,
    state: &EnvState,
    action: Action,
) -> Result<(EnvState, f64, bool), EnvError> {
    if state.position == spec.goal {
        return Err(EnvError::SteppedTerminal);
    }
    let next_pos = match spec.neighbor(state.position, action) {
        Some(n) => {
            // BTreeSet rebuild per step would dominate runtime; check rules directly.
            let blocked = spec
                .obstacles
                .iter()
                .any(|r| r.cell == n && r.blocks(state.episode_index));
            if blocked {
                state.position
            } else {
                n
            }
        }
        None => state.position,
    };
    let terminal = next_pos == spec.goal;
    let reward = if terminal { 1.0 } else { 0.0 };
    Ok((
        EnvState {
            position: next_pos,
            episode_index: state.episode_index,
            step_count: state.step_count + 1,
        },
        reward,
        terminal,
    ))
}
