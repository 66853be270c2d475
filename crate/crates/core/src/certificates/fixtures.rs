//! Seeded configurations with planted structure, shared by the CLI
//! self-tests and the test suites.
//!
//! Neither fixture is selected on the property it is used to test: staircase
//! grids are resampled only until the closed-completion cluster bound holds,
//! and good boxes are built to satisfy the six conditions by construction.

use super::blocking::{
    build_blocking_structure, closed_completion_diameter, cluster_bound_holds, find_blocking_path, run_ends,
    BlockingPath, BlockingStructure,
};
use super::good::GoodBoxParams;
use super::safe::{safe_block_field, BlockField, BlockGeometry};
use crate::error::{Error, Result};
use crate::lattice::{CellState, Grid, Rect};
use crate::random::{derive_seed, CounterRng};

const STAIRCASE_EXPERIMENT: u64 = 0x57A1;
const GOOD_FIXTURE_EXPERIMENT: u64 = 0x600F;
const MAX_ATTEMPTS: u64 = 1000;

/// Desk geometry for staircase fixtures: the chimney spans three block
/// rows and the bar three block columns, so consecutive run ends overlap.
pub fn staircase_geometry() -> BlockGeometry {
    BlockGeometry::desk(9, 16, 18, 54, 48).expect("valid desk geometry")
}

/// Block columns and rows of a staircase window.
pub const STAIRCASE_BLOCKS: (usize, usize) = (6, 8);

#[derive(Clone, Debug)]
pub struct StaircaseFixture {
    pub grid: Grid,
    pub geom: BlockGeometry,
    /// Window in block coordinates; the cell window is the whole grid.
    pub block_window: Rect,
    pub planted: BlockingPath,
    pub field: BlockField,
    pub path: BlockingPath,
    pub structure: BlockingStructure,
    /// Resampling attempts needed before the cluster bound held.
    pub attempts: u64,
}

impl StaircaseFixture {
    /// A copy of the grid with one occupied cell just below the pivot of a
    /// run-end block, on the vertical core.
    pub fn sabotaged(&self, seed: u64) -> Result<Grid> {
        let ends = run_ends(&self.path);
        let mut rng = CounterRng::new(seed);
        let pick = ends[rng.range(0, ends.len() as i64 - 1) as usize];
        let (zx, zy) = self.path.blocks[pick];
        let cert = self
            .field
            .certificate(zx, zy)
            .ok_or_else(|| Error::Contract("path block without certificate".into()))?;
        let (px, py) = cert.pivot;
        let mut g = self.grid.clone();
        g.set(px as usize, (py - 1) as usize, CellState::Occupied)?;
        Ok(g)
    }
}

/// Monotone east/north block path from `(0, 0)` to the rightmost block
/// column, with runs of one or two steps, inside `blocks` rows.
fn random_staircase(rng: &mut CounterRng, cols: usize, rows: usize) -> Option<Vec<(i64, i64)>> {
    let (mut i, mut j) = (0i64, 0i64);
    let mut path = vec![(0, 0)];
    let lead = rng.range(0, 2);
    for _ in 0..lead {
        j += 1;
        path.push((i, j));
    }
    loop {
        let east = rng.range(1, 2).min(cols as i64 - 1 - i);
        for _ in 0..east {
            i += 1;
            path.push((i, j));
        }
        if i == cols as i64 - 1 {
            break;
        }
        for _ in 0..rng.range(1, 2) {
            j += 1;
            path.push((i, j));
        }
    }
    (j < rows as i64).then_some(path)
}

fn plant_staircase(seed: u64, geom: &BlockGeometry) -> Result<(Grid, Vec<(i64, i64)>)> {
    let (cols, rows) = STAIRCASE_BLOCKS;
    let mut rng = CounterRng::new(seed);
    let blocks = loop {
        if let Some(b) = random_staircase(&mut rng, cols, rows) {
            break b;
        }
    };
    let mut g = Grid::new(cols * geom.block_w, rows * geom.block_h)?;
    for y in 0..g.height() {
        for x in 0..g.width() {
            let u = rng.uniform();
            if u < 0.01 {
                g.put(x, y, CellState::Closed);
            } else if u >= 0.97 {
                g.put(x, y, CellState::Occupied);
            }
        }
    }
    let margin = ((geom.m - 1) / 2) as i64;
    let mut pivots = Vec::new();
    for &(zx, zy) in &blocks {
        let block = geom.block_rect(zx as usize, zy as usize);
        let px = rng.range(block.x0 + margin, block.x1() - 1 - margin);
        let py = rng.range(block.y0 + geom.upper_half_start() as i64, block.y1() - 1);
        let vrect = Rect::new(px - margin, block.y1() - geom.chimney_h as i64, geom.m as i64, geom.chimney_h as i64);
        let hrect = Rect::new(block.x0, block.y0, geom.bar_w as i64, geom.m as i64);
        for r in [vrect, hrect] {
            for (x, y) in r.intersect(&g.bounds()).cells() {
                if g.occupied_at(x, y) {
                    g.put(x as usize, y as usize, CellState::Open);
                }
            }
        }
        pivots.push((px, py));
    }
    for (px, py) in pivots {
        g.put(px as usize, py as usize, CellState::Closed);
    }
    Ok((g, blocks))
}

/// Staircase of safe blocks on a background of 3% occupied and 1% closed
/// cells. Certificates come from the safe-block detector and the path from
/// the longest-path search.
pub fn staircase_fixture(seed: u64) -> Result<StaircaseFixture> {
    let geom = staircase_geometry();
    let (cols, rows) = STAIRCASE_BLOCKS;
    let block_window = Rect::new(0, 0, cols as i64, rows as i64);
    for attempt in 0..MAX_ATTEMPTS {
        let (grid, planted) = plant_staircase(derive_seed(seed, STAIRCASE_EXPERIMENT, attempt), &geom)?;
        let field = safe_block_field(&grid, &geom, block_window)?;
        let Some(path) = find_blocking_path(&field, block_window)? else {
            continue;
        };
        let certs: Vec<_> = field.certificates().copied().collect();
        let structure = build_blocking_structure(&path, &certs, grid.bounds())?;
        if !cluster_bound_holds(closed_completion_diameter(&grid, &structure), geom.m) {
            continue;
        }
        return Ok(StaircaseFixture {
            grid,
            geom,
            block_window,
            planted: BlockingPath { blocks: planted },
            field,
            path,
            structure,
            attempts: attempt + 1,
        });
    }
    Err(Error::Contract(format!("no staircase fixture for seed {seed} satisfied the cluster bound")))
}

/// Desk thresholds for good-box fixtures.
pub fn good_fixture_params() -> GoodBoxParams {
    GoodBoxParams {
        side: 96,
        reach: 8,
        interval: 8,
        strip_w: 96,
        strip_h: 16,
        closed_cap: 1,
        margin: 16,
    }
}

#[derive(Clone, Debug)]
pub struct GoodFixture {
    /// The box plus a closed frame one cell wide.
    pub grid: Grid,
    pub boxed: Rect,
    pub params: GoodBoxParams,
    pub closed: Vec<(i64, i64)>,
}

impl GoodFixture {
    /// A copy with every occupied cell removed from the column above the
    /// first closed cell, leaving it without a northern guard.
    pub fn without_north_guard(&self) -> Grid {
        let mut g = self.grid.clone();
        let (x, y) = self.closed[0];
        for yy in y + 1..self.boxed.y1() {
            if g.occupied_at(x, yy) {
                g.put(x as usize, yy as usize, CellState::Open);
            }
        }
        g
    }
}

/// A good box: a sheared occupied mesh `(x + s y) mod P = c` with
/// `P` in {5, 7} and `s` not in {0, 1, -1}, and one to four closed cells
/// separated by the margin, in distinct rows and columns, off the mesh.
pub fn good_box_fixture(seed: u64) -> Result<GoodFixture> {
    let gp = good_fixture_params();
    let side = gp.side as i64;
    let mut rng = CounterRng::new(derive_seed(seed, GOOD_FIXTURE_EXPERIMENT, 0));
    let period = if rng.chance(0.5) { 5 } else { 7 };
    let shear = rng.range(2, period - 2);
    let phase = rng.range(0, period - 1);
    let on_mesh = |x: i64, y: i64| (x + shear * y - phase).rem_euclid(period) == 0;

    let mut g = Grid::new(gp.side + 2, gp.side + 2)?;
    g.fill_rect(g.bounds(), CellState::Closed);
    let boxed = Rect::new(1, 1, side, side);
    g.fill_rect(boxed, CellState::Open);
    for (x, y) in boxed.cells() {
        if on_mesh(x - 1, y - 1) {
            g.put(x as usize, y as usize, CellState::Occupied);
        }
    }

    let margin = gp.margin as i64;
    let (lo, hi) = (boxed.x0 + margin, boxed.x1() - 1 - margin);
    let count = rng.range(1, 4);
    let mut closed: Vec<(i64, i64)> = Vec::new();
    let mut y = lo + rng.range(0, 4);
    while closed.len() < count as usize && y <= hi {
        let mut x = rng.range(lo, hi);
        while on_mesh(x - 1, y - 1) || closed.iter().any(|c| c.0 == x) {
            x = rng.range(lo, hi);
        }
        closed.push((x, y));
        y += margin + rng.range(0, 3);
    }
    for &(x, y) in &closed {
        g.put(x as usize, y as usize, CellState::Closed);
    }
    Ok(GoodFixture {
        grid: g,
        boxed,
        params: gp,
        closed,
    })
}
