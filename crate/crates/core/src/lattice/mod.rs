//! Finite patches of the square lattice.
//!
//! A [`Grid`] stores two disjoint bit-planes, one for occupied cells and one
//! for closed cells; every other cell is open. Coordinates are `(x, y)` with
//! `x` the column (east is `+x`) and `y` the row (north is `+y`), so row 0 is
//! the southern edge. Cells outside the grid are permanently open.

mod bitplane;
mod clusters;
mod rect;
mod text;

use std::fmt;

pub use bitplane::BitPlane;
pub use clusters::{occupied_clusters, Cluster, ClusterSummary, UnionFind};
pub use rect::Rect;

use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum CellState {
    Open,
    Occupied,
    Closed,
}

impl CellState {
    pub fn symbol(self) -> char {
        match self {
            CellState::Open => '.',
            CellState::Occupied => '#',
            CellState::Closed => 'x',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            '.' => Some(CellState::Open),
            '#' => Some(CellState::Occupied),
            'x' => Some(CellState::Closed),
            _ => None,
        }
    }
}

/// The four axis directions, `e1`/`e2` and their negatives.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Direction {
    East,
    West,
    North,
    South,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::East,
        Direction::West,
        Direction::North,
        Direction::South,
    ];

    pub fn delta(self) -> (i64, i64) {
        match self {
            Direction::East => (1, 0),
            Direction::West => (-1, 0),
            Direction::North => (0, 1),
            Direction::South => (0, -1),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::East => "east",
            Direction::West => "west",
            Direction::North => "north",
            Direction::South => "south",
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "east" | "e" => Ok(Direction::East),
            "west" | "w" => Ok(Direction::West),
            "north" | "n" => Ok(Direction::North),
            "south" | "s" => Ok(Direction::South),
            other => Err(Error::Argument(format!("unknown side {other:?}"))),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Grid {
    width: usize,
    height: usize,
    occupied: BitPlane,
    closed: BitPlane,
}

impl Grid {
    /// An all-open grid.
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParams(format!(
                "grid dimensions must be positive, got {width}x{height}"
            )));
        }
        Ok(Grid {
            width,
            height,
            occupied: BitPlane::new(width, height),
            closed: BitPlane::new(width, height),
        })
    }

    pub fn from_planes(occupied: BitPlane, closed: BitPlane) -> Result<Self> {
        if (occupied.width(), occupied.height()) != (closed.width(), closed.height()) {
            return Err(Error::Argument("bit-plane dimensions differ".into()));
        }
        if !occupied.is_disjoint(&closed) {
            return Err(Error::Argument(
                "occupied and closed planes overlap".into(),
            ));
        }
        let mut g = Grid::new(occupied.width(), occupied.height())?;
        g.occupied = occupied;
        g.closed = closed;
        Ok(g)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn area(&self) -> usize {
        self.width * self.height
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(0, 0, self.width as i64, self.height as i64)
    }

    #[inline]
    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as u64) < self.width as u64 && (y as u64) < self.height as u64
    }

    fn check(&self, x: usize, y: usize) -> Result<()> {
        if x < self.width && y < self.height {
            Ok(())
        } else {
            Err(self.oob(x as i64, y as i64))
        }
    }

    pub(crate) fn oob(&self, x: i64, y: i64) -> Error {
        Error::OutOfBounds {
            x,
            y,
            width: self.width,
            height: self.height,
        }
    }

    pub fn get(&self, x: usize, y: usize) -> Result<CellState> {
        self.check(x, y)?;
        Ok(self.state(x, y))
    }

    /// Sets the state of one cell; the other plane's bit is cleared.
    pub fn set(&mut self, x: usize, y: usize, state: CellState) -> Result<()> {
        self.check(x, y)?;
        self.put(x, y, state);
        Ok(())
    }

    /// Builder-style [`Grid::set`].
    pub fn with(mut self, x: usize, y: usize, state: CellState) -> Result<Self> {
        self.set(x, y, state)?;
        Ok(self)
    }

    /// Unchecked read; panics (in debug) when out of bounds.
    #[inline]
    pub fn state(&self, x: usize, y: usize) -> CellState {
        if self.occupied.get(x, y) {
            CellState::Occupied
        } else if self.closed.get(x, y) {
            CellState::Closed
        } else {
            CellState::Open
        }
    }

    #[inline]
    pub(crate) fn put(&mut self, x: usize, y: usize, state: CellState) {
        self.occupied.set(x, y, state == CellState::Occupied);
        self.closed.set(x, y, state == CellState::Closed);
    }

    #[inline]
    pub fn is_occupied(&self, x: usize, y: usize) -> bool {
        self.occupied.get(x, y)
    }

    #[inline]
    pub fn is_closed(&self, x: usize, y: usize) -> bool {
        self.closed.get(x, y)
    }

    /// Occupancy with the free-boundary convention: off-grid cells are never occupied.
    #[inline]
    pub fn occupied_at(&self, x: i64, y: i64) -> bool {
        self.contains(x, y) && self.occupied.get(x as usize, y as usize)
    }

    #[inline]
    pub fn closed_at(&self, x: i64, y: i64) -> bool {
        self.contains(x, y) && self.closed.get(x as usize, y as usize)
    }

    pub fn occupied(&self) -> &BitPlane {
        &self.occupied
    }

    pub fn closed(&self) -> &BitPlane {
        &self.closed
    }

    pub(crate) fn occupied_mut(&mut self) -> &mut BitPlane {
        &mut self.occupied
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.count_ones()
    }

    pub fn closed_count(&self) -> usize {
        self.closed.count_ones()
    }

    /// Sets every in-grid cell of `rect` to `state`; off-grid parts are ignored.
    pub fn fill_rect(&mut self, rect: Rect, state: CellState) {
        for (x, y) in rect.intersect(&self.bounds()).cells() {
            self.put(x as usize, y as usize, state);
        }
    }

    pub fn count_in_rect(&self, rect: Rect, state: CellState) -> usize {
        rect.intersect(&self.bounds())
            .cells()
            .filter(|&(x, y)| self.state(x as usize, y as usize) == state)
            .count()
    }

    /// Copy of `rect` (which must lie inside the grid) as a new grid.
    pub fn crop(&self, rect: Rect) -> Result<Grid> {
        if rect.is_empty() || !self.bounds().contains_rect(&rect) {
            return Err(Error::Argument(format!("crop rect {rect} not inside grid")));
        }
        let mut g = Grid::new(rect.w as usize, rect.h as usize)?;
        for (x, y) in rect.cells() {
            let s = self.state(x as usize, y as usize);
            g.put((x - rect.x0) as usize, (y - rect.y0) as usize, s);
        }
        Ok(g)
    }

    /// Applies a cell map `(x, y) -> (x', y')` into a grid of the given size.
    fn remap(&self, width: usize, height: usize, f: impl Fn(usize, usize) -> (usize, usize)) -> Grid {
        let mut g = Grid::new(width, height).expect("positive dimensions");
        for y in 0..self.height {
            for x in 0..self.width {
                let (nx, ny) = f(x, y);
                g.put(nx, ny, self.state(x, y));
            }
        }
        g
    }

    /// Mirror east-west.
    pub fn reflect_x(&self) -> Grid {
        let w = self.width;
        self.remap(w, self.height, |x, y| (w - 1 - x, y))
    }

    /// Mirror north-south.
    pub fn reflect_y(&self) -> Grid {
        let h = self.height;
        self.remap(self.width, h, |x, y| (x, h - 1 - y))
    }

    /// Quarter turn counter-clockwise.
    pub fn rotate90(&self) -> Grid {
        let h = self.height;
        self.remap(h, self.width, |x, y| (h - 1 - y, x))
    }

    pub fn transpose(&self) -> Grid {
        self.remap(self.height, self.width, |x, y| (y, x))
    }

    /// The eight symmetries of the square applied to this grid.
    pub fn dihedral_images(&self) -> Vec<Grid> {
        let mut out = Vec::with_capacity(8);
        let mut g = self.clone();
        for _ in 0..4 {
            out.push(g.reflect_x());
            let next = g.rotate90();
            out.push(g);
            g = next;
        }
        out
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Grid {}x{}", self.width, self.height)?;
        f.write_str(&self.to_text())
    }
}
