//! Bootstrap update rules and their fixpoints.
//!
//! Closed and occupied cells never change; an open cell becomes occupied when
//! its rule predicate holds on the current configuration. All rules are
//! monotone, so the final configuration does not depend on update order. The
//! production engine ([`closure`]) still advances in synchronous generations
//! so that `steps_to_fixpoint` matches plain iteration of [`step`].

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lattice::{BitPlane, CellState, Grid};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Rule {
    /// At least two of the four nearest neighbours occupied.
    Standard,
    /// An occupied east-or-west neighbour and an occupied north-or-south neighbour.
    Modified,
    /// [`Rule::Modified`], or both north and south occupied.
    ModifiedPlusVertical,
}

impl Rule {
    pub const ALL: [Rule; 3] = [Rule::Standard, Rule::Modified, Rule::ModifiedPlusVertical];

    #[inline]
    pub fn fires(self, east: bool, west: bool, north: bool, south: bool) -> bool {
        let horiz = east | west;
        let vert = north | south;
        match self {
            Rule::Standard => (east & west) | (north & south) | (horiz & vert),
            Rule::Modified => horiz & vert,
            Rule::ModifiedPlusVertical => (horiz & vert) | (north & south),
        }
    }

    /// [`Rule::fires`] on 64 cells at once.
    #[inline]
    fn fires_word(self, east: u64, west: u64, north: u64, south: u64) -> u64 {
        let horiz = east | west;
        let vert = north | south;
        match self {
            Rule::Standard => (east & west) | (north & south) | (horiz & vert),
            Rule::Modified => horiz & vert,
            Rule::ModifiedPlusVertical => (horiz & vert) | (north & south),
        }
    }

    #[inline]
    fn fires_at(self, g: &Grid, x: usize, y: usize) -> bool {
        let occ = g.occupied();
        let east = x + 1 < g.width() && occ.get(x + 1, y);
        let west = x > 0 && occ.get(x - 1, y);
        let north = y + 1 < g.height() && occ.get(x, y + 1);
        let south = y > 0 && occ.get(x, y - 1);
        self.fires(east, west, north, south)
    }

    pub fn name(self) -> &'static str {
        match self {
            Rule::Standard => "standard",
            Rule::Modified => "modified",
            Rule::ModifiedPlusVertical => "modified-plus-vertical",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "standard" | "std" => Ok(Rule::Standard),
            "modified" | "mod" => Ok(Rule::Modified),
            "modified-plus-vertical" | "mpv" | "modified+vertical" => {
                Ok(Rule::ModifiedPlusVertical)
            }
            other => Err(Error::Argument(format!("unknown rule {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinalGrid {
    pub grid: Grid,
    pub steps_to_fixpoint: usize,
}

/// One synchronous update, evaluated 64 cells per word.
pub fn step(g: &Grid, rule: Rule) -> Grid {
    let mut out = g.clone();
    step_into(g, rule, &mut out);
    out
}

fn step_into(g: &Grid, rule: Rule, out: &mut Grid) -> bool {
    let occ = g.occupied();
    let closed = g.closed();
    let stride = occ.stride();
    let tail = occ.tail_mask();
    let zeros = vec![0u64; stride];
    let mut changed = false;
    let mut next_row = vec![0u64; stride];
    for y in 0..g.height() {
        let row = occ.row(y);
        let north = if y + 1 < g.height() { occ.row(y + 1) } else { &zeros[..] };
        let south = if y > 0 { occ.row(y - 1) } else { &zeros[..] };
        let shut = closed.row(y);
        for i in 0..stride {
            let c = row[i];
            let from_east = (c >> 1) | row.get(i + 1).map_or(0, |n| n << 63);
            let from_west = (c << 1) | if i > 0 { row[i - 1] >> 63 } else { 0 };
            let mut fire = rule.fires_word(from_east, from_west, north[i], south[i]) & !shut[i];
            if i + 1 == stride {
                fire &= tail;
            }
            let n = c | fire;
            changed |= n != c;
            next_row[i] = n;
        }
        out.occupied_mut().row_mut(y).copy_from_slice(&next_row);
    }
    changed
}

/// Least fixpoint above `g` under `rule`.
///
/// Each generation re-examines only the open neighbours of cells occupied in
/// the previous generation, so total work is linear in the grid area.
pub fn closure(g: &Grid, rule: Rule) -> FinalGrid {
    let mut grid = g.clone();
    let (w, h) = (g.width(), g.height());
    let mut queued = BitPlane::new(w, h);
    let mut frontier: Vec<(u32, u32)> = grid
        .occupied()
        .iter_ones()
        .map(|(x, y)| (x as u32, y as u32))
        .collect();
    let mut candidates: Vec<(u32, u32)> = Vec::new();
    let mut fired: Vec<(u32, u32)> = Vec::new();
    let mut steps = 0;

    loop {
        candidates.clear();
        for &(x, y) in &frontier {
            let (x, y) = (x as usize, y as usize);
            let mut consider = |nx: usize, ny: usize| {
                if !grid.is_occupied(nx, ny) && !grid.is_closed(nx, ny) && !queued.get(nx, ny) {
                    queued.set(nx, ny, true);
                    candidates.push((nx as u32, ny as u32));
                }
            };
            if x + 1 < w {
                consider(x + 1, y);
            }
            if x > 0 {
                consider(x - 1, y);
            }
            if y + 1 < h {
                consider(x, y + 1);
            }
            if y > 0 {
                consider(x, y - 1);
            }
        }

        fired.clear();
        for &(x, y) in &candidates {
            let (x, y) = (x as usize, y as usize);
            queued.set(x, y, false);
            if rule.fires_at(&grid, x, y) {
                fired.push((x as u32, y as u32));
            }
        }
        if fired.is_empty() {
            break;
        }
        let occ = grid.occupied_mut();
        for &(x, y) in &fired {
            occ.set(x as usize, y as usize, true);
        }
        steps += 1;
        std::mem::swap(&mut frontier, &mut fired);
    }

    FinalGrid {
        grid,
        steps_to_fixpoint: steps,
    }
}

/// Reference synchronous step, one cell at a time.
pub fn step_naive(g: &Grid, rule: Rule) -> Grid {
    let mut out = g.clone();
    for y in 0..g.height() {
        for x in 0..g.width() {
            if g.state(x, y) != CellState::Open {
                continue;
            }
            let (xi, yi) = (x as i64, y as i64);
            let fires = rule.fires(
                g.occupied_at(xi + 1, yi),
                g.occupied_at(xi - 1, yi),
                g.occupied_at(xi, yi + 1),
                g.occupied_at(xi, yi - 1),
            );
            if fires {
                out.put(x, y, CellState::Occupied);
            }
        }
    }
    out
}

/// Iterates [`step_naive`] until nothing changes.
pub fn closure_naive(g: &Grid, rule: Rule) -> FinalGrid {
    let mut grid = g.clone();
    let mut steps = 0;
    loop {
        let next = step_naive(&grid, rule);
        if next == grid {
            break;
        }
        grid = next;
        steps += 1;
    }
    FinalGrid {
        grid,
        steps_to_fixpoint: steps,
    }
}

/// Iterates the word-parallel [`step`] until nothing changes.
pub fn closure_sweep(g: &Grid, rule: Rule) -> FinalGrid {
    let mut grid = g.clone();
    let mut scratch = g.clone();
    let mut steps = 0;
    while step_into(&grid, rule, &mut scratch) {
        std::mem::swap(&mut grid, &mut scratch);
        steps += 1;
    }
    FinalGrid {
        grid,
        steps_to_fixpoint: steps,
    }
}

pub fn eventually_occupied(g: &Grid, rule: Rule, x: usize, y: usize) -> Result<bool> {
    g.get(x, y)?;
    match g.state(x, y) {
        CellState::Occupied => Ok(true),
        CellState::Closed => Ok(false),
        CellState::Open => Ok(closure(g, rule).grid.is_occupied(x, y)),
    }
}

fn check_elimination_site(g: &Grid, x: usize, y: usize) -> Result<()> {
    let state = g.get(x, y)?;
    if state != CellState::Closed {
        return Err(Error::Argument(format!(
            "site ({x}, {y}) is {state:?}, not closed"
        )));
    }
    if x == 0 || y == 0 || x + 1 >= g.width() || y + 1 >= g.height() {
        return Err(Error::Argument(format!(
            "site ({x}, {y}) has a neighbour outside the grid"
        )));
    }
    Ok(())
}

/// All four neighbours of `(x, y)` occupied in `fin`.
fn neighbours_occupied(fin: &Grid, x: usize, y: usize) -> bool {
    fin.is_occupied(x + 1, y)
        && fin.is_occupied(x - 1, y)
        && fin.is_occupied(x, y + 1)
        && fin.is_occupied(x, y - 1)
}

/// Whether the closed site `(x, y)` ends up enclosed by occupied neighbours.
pub fn is_eliminable(g: &Grid, rule: Rule, x: usize, y: usize) -> Result<bool> {
    check_elimination_site(g, x, y)?;
    Ok(neighbours_occupied(&closure(g, rule).grid, x, y))
}

/// Every interior closed site that [`is_eliminable`] accepts, from one closure.
pub fn eliminable_sites(g: &Grid, rule: Rule) -> Vec<(usize, usize)> {
    let fin = closure(g, rule).grid;
    g.closed()
        .iter_ones()
        .filter(|&(x, y)| x > 0 && y > 0 && x + 1 < g.width() && y + 1 < g.height())
        .filter(|&(x, y)| neighbours_occupied(&fin, x, y))
        .collect()
}

/// Converts an eliminable closed site to occupied.
pub fn eliminate(g: &Grid, rule: Rule, x: usize, y: usize) -> Result<Grid> {
    if !is_eliminable(g, rule, x, y)? {
        return Err(Error::Contract(format!(
            "closed site ({x}, {y}) is not eliminable under the {rule} rule"
        )));
    }
    let mut out = g.clone();
    out.put(x, y, CellState::Occupied);
    Ok(out)
}

/// Whether two grids agree on every cell except `(x, y)`.
pub fn agree_off(a: &Grid, b: &Grid, x: usize, y: usize) -> bool {
    let mut a = a.clone();
    let mut b = b.clone();
    a.put(x, y, CellState::Open);
    b.put(x, y, CellState::Open);
    a == b
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(s: &str) -> Grid {
        s.parse().unwrap()
    }

    #[test]
    fn modified_needs_both_axes() {
        // east and north occupied
        let g = grid(".#.\n..#\n...\n");
        assert!(step(&g, Rule::Modified).is_occupied(1, 1));

        // east and west only
        let g = grid("...\n#.#\n...\n");
        assert!(!step(&g, Rule::Modified).is_occupied(1, 1));
        assert!(step(&g, Rule::Standard).is_occupied(1, 1));
        assert!(!step(&g, Rule::ModifiedPlusVertical).is_occupied(1, 1));

        // north and south only
        let g = grid(".#.\n...\n.#.\n");
        assert!(!step(&g, Rule::Modified).is_occupied(1, 1));
        assert!(step(&g, Rule::ModifiedPlusVertical).is_occupied(1, 1));
    }

    #[test]
    fn closed_never_changes() {
        let g = grid(".#.\n#x#\n.#.\n");
        for rule in Rule::ALL {
            let f = closure(&g, rule);
            assert_eq!(f.grid.state(1, 1), CellState::Closed);
        }
    }

    #[test]
    fn all_open_grid_is_fixed() {
        let g = Grid::new(7, 4).unwrap();
        let f = closure(&g, Rule::Standard);
        assert_eq!(f.grid, g);
        assert_eq!(f.steps_to_fixpoint, 0);
    }

    #[test]
    fn single_seed_never_grows() {
        let mut g = Grid::new(5, 5).unwrap();
        g.set(2, 2, CellState::Occupied).unwrap();
        for rule in Rule::ALL {
            assert_eq!(closure_naive(&g, rule).grid, g);
            assert_eq!(closure(&g, rule).grid, g);
        }
    }

    #[test]
    fn full_grid_is_fixed() {
        let mut g = Grid::new(3, 3).unwrap();
        g.fill_rect(g.bounds(), CellState::Occupied);
        assert_eq!(closure_naive(&g, Rule::Modified).grid, g);
    }

    #[test]
    fn engines_agree_on_step_count() {
        // occupied south row and west column fill the whole grid
        let g = grid("#.....\n#.....\n#.....\n#.....\n######\n");
        for rule in Rule::ALL {
            let a = closure(&g, rule);
            let b = closure_naive(&g, rule);
            let c = closure_sweep(&g, rule);
            assert_eq!(a, b);
            assert_eq!(a, c);
            assert_eq!(a.grid.occupied_count(), 30);
        }
    }

    #[test]
    fn word_boundaries_in_step() {
        let mut g = Grid::new(130, 3).unwrap();
        for x in [63usize, 64, 127, 128] {
            g.set(x, 2, CellState::Occupied).unwrap();
        }
        g.set(65, 1, CellState::Occupied).unwrap();
        g.set(129, 1, CellState::Occupied).unwrap();
        for rule in Rule::ALL {
            assert_eq!(step(&g, rule), step_naive(&g, rule), "{rule}");
        }
    }

    #[test]
    fn elimination_contract() {
        let g = grid(".#.\n#x#\n.#.\n");
        assert!(is_eliminable(&g, Rule::Modified, 1, 1).unwrap());
        let e = eliminate(&g, Rule::Modified, 1, 1).unwrap();
        assert_eq!(e.state(1, 1), CellState::Occupied);
        assert!(agree_off(&e, &g, 1, 1));

        let g = grid(".#.\n#xx\n.#.\n");
        assert!(!is_eliminable(&g, Rule::Standard, 1, 1).unwrap());
        assert!(matches!(
            eliminate(&g, Rule::Standard, 1, 1),
            Err(Error::Contract(_))
        ));
        // precondition failures
        assert!(matches!(
            is_eliminable(&g, Rule::Standard, 0, 1),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            is_eliminable(&g, Rule::Standard, 1, 2),
            Err(Error::Argument(_))
        ));
        assert!(is_eliminable(&g, Rule::Standard, 5, 5).is_err());
    }

    #[test]
    fn eventually_occupied_basics() {
        let g = grid("#x.\n...\n");
        assert!(eventually_occupied(&g, Rule::Modified, 0, 1).unwrap());
        assert!(!eventually_occupied(&g, Rule::Modified, 1, 1).unwrap());
        assert!(eventually_occupied(&g, Rule::Modified, 3, 0).is_err());
    }

    #[test]
    fn rule_names_round_trip() {
        for rule in Rule::ALL {
            assert_eq!(rule.name().parse::<Rule>().unwrap(), rule);
        }
        assert!("conway".parse::<Rule>().is_err());
    }
}
