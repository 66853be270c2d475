//! Good boxes: square boxes whose closed cells are sparse, well separated
//! and surrounded by occupied cells, so that an occupied boundary side
//! spreads over the whole box under Modified dynamics.
//!
//! Conditions checked on box `S`:
//!
//! * G1: closed cells are pairwise at l-infinity distance at least `margin`;
//! * G2: every closed cell has an occupied cell at distance `1..=reach` in
//!   each of the four axis directions, inside `S`;
//! * G3: every run of `interval` consecutive cells in a row or column of `S`
//!   holds an occupied cell;
//! * G4: every `strip_w x strip_h` sub-rectangle of `S` holds at most
//!   `closed_cap` closed cells;
//! * G5: closed cells are at distance at least `margin` from the boundary of
//!   `S` (distance 0 for cells on the boundary);
//! * G6: no row or column of `S` holds two closed cells.

use std::fmt;

use rayon::prelude::*;

use super::counter::RectCounter;
use crate::dynamics::{closure, Rule};
use crate::error::{Error, Result};
use crate::lattice::{CellState, Direction, Grid, Rect};
use crate::random::{derive_seed, sample, BoundaryCondition, PollutionParams};
use crate::stats::Proportion;

/// Experiment id used when deriving per-trial seeds for the good-box estimator.
pub const GOOD_EXPERIMENT: u64 = 0x600D;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct GoodBoxParams {
    pub side: usize,
    pub reach: usize,
    pub interval: usize,
    pub strip_w: usize,
    pub strip_h: usize,
    pub closed_cap: usize,
    pub margin: usize,
}

impl GoodBoxParams {
    /// Thresholds derived from `n` and `p`: side `n/p ln(1/p)`, reach `n/p`,
    /// interval `3/p ln(1/p)`, strips `n/p ln(1/p)` by `n^2/p`, cap `n/4`,
    /// margin `2 ceil(n/p)`.
    pub fn from_params(n: usize, p: f64) -> Result<Self> {
        if n == 0 || !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParams(format!("need n >= 1 and 0 < p < 1, got n={n}, p={p}")));
        }
        let nf = n as f64;
        let log = (1.0 / p).ln();
        let gp = GoodBoxParams {
            side: (nf / p * log + 1e-9).floor() as usize,
            reach: (nf / p - 1e-9).ceil() as usize,
            interval: (3.0 / p * log + 1e-9).floor() as usize,
            strip_w: (nf / p * log + 1e-9).floor() as usize,
            strip_h: (nf * nf / p + 1e-9).floor() as usize,
            closed_cap: n / 4,
            margin: 2 * (nf / p - 1e-9).ceil() as usize,
        };
        gp.check()?;
        Ok(gp)
    }

    pub fn check(&self) -> Result<()> {
        if self.side == 0 || self.reach == 0 || self.interval == 0 || self.strip_w == 0 || self.strip_h == 0 {
            return Err(Error::InvalidParams(format!("good-box thresholds must be positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GoodWitness {
    /// G1: two closed cells closer than the margin.
    CloseClosed { a: (i64, i64), b: (i64, i64) },
    /// G2: no occupied cell within reach of `cell` towards `dir`.
    Unguarded { cell: (i64, i64), dir: Direction },
    /// G3: an occupied-free run of `len` cells starting at `start`.
    EmptyRun { start: (i64, i64), vertical: bool, len: usize },
    /// G4: a strip holding too many closed cells.
    CrowdedStrip { strip: Rect, count: usize },
    /// G5: a closed cell too close to the boundary.
    NearBoundary { cell: (i64, i64), distance: i64 },
    /// G6: two closed cells sharing a row or a column.
    SharedLine { a: (i64, i64), b: (i64, i64) },
}

impl GoodWitness {
    /// Zero-based condition index (G1 is 0).
    pub fn condition(&self) -> usize {
        match self {
            GoodWitness::CloseClosed { .. } => 0,
            GoodWitness::Unguarded { .. } => 1,
            GoodWitness::EmptyRun { .. } => 2,
            GoodWitness::CrowdedStrip { .. } => 3,
            GoodWitness::NearBoundary { .. } => 4,
            GoodWitness::SharedLine { .. } => 5,
        }
    }
}

impl fmt::Display for GoodWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GoodWitness::CloseClosed { a, b } => write!(f, "G1: closed {a:?} and {b:?} too close"),
            GoodWitness::Unguarded { cell, dir } => write!(f, "G2: closed {cell:?} unguarded towards {}", dir.name()),
            GoodWitness::EmptyRun { start, vertical, len } => {
                let axis = if *vertical { "column" } else { "row" };
                write!(f, "G3: {len} cells without occupied in {axis} from {start:?}")
            }
            GoodWitness::CrowdedStrip { strip, count } => write!(f, "G4: {count} closed in strip {strip}"),
            GoodWitness::NearBoundary { cell, distance } => {
                write!(f, "G5: closed {cell:?} at distance {distance} from the boundary")
            }
            GoodWitness::SharedLine { a, b } => write!(f, "G6: closed {a:?} and {b:?} share a line"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GoodReport {
    pub conditions: [bool; 6],
    /// At most one witness per failed condition, in condition order.
    pub witnesses: Vec<GoodWitness>,
}

impl GoodReport {
    pub fn good(&self) -> bool {
        self.conditions.iter().all(|&c| c)
    }

    pub fn witness(&self, condition: usize) -> Option<&GoodWitness> {
        self.witnesses.iter().find(|w| w.condition() == condition)
    }
}

fn closed_cells(g: &Grid, b: Rect) -> Vec<(i64, i64)> {
    b.cells().filter(|&(x, y)| g.closed_at(x, y)).collect()
}

fn check_g1(closed: &[(i64, i64)], gp: &GoodBoxParams) -> Option<GoodWitness> {
    let margin = gp.margin as i64;
    for (i, &a) in closed.iter().enumerate() {
        for &b in &closed[i + 1..] {
            if (a.0 - b.0).abs().max((a.1 - b.1).abs()) < margin {
                return Some(GoodWitness::CloseClosed { a, b });
            }
        }
    }
    None
}

fn check_g2(g: &Grid, b: Rect, closed: &[(i64, i64)], gp: &GoodBoxParams) -> Option<GoodWitness> {
    for &cell in closed {
        for dir in Direction::ALL {
            let (dx, dy) = dir.delta();
            let guarded = (1..=gp.reach as i64)
                .map(|d| (cell.0 + d * dx, cell.1 + d * dy))
                .take_while(|&(x, y)| b.contains(x, y))
                .any(|(x, y)| g.occupied_at(x, y));
            if !guarded {
                return Some(GoodWitness::Unguarded { cell, dir });
            }
        }
    }
    None
}

fn check_g3(g: &Grid, b: Rect, gp: &GoodBoxParams) -> Option<GoodWitness> {
    let len = gp.interval;
    let scan = |cells: &mut dyn Iterator<Item = (i64, i64)>, vertical: bool| {
        let mut run = 0;
        for (x, y) in cells {
            run = if g.occupied_at(x, y) { 0 } else { run + 1 };
            if run == len {
                let back = (len - 1) as i64;
                let start = if vertical { (x, y - back) } else { (x - back, y) };
                return Some(GoodWitness::EmptyRun { start, vertical, len });
            }
        }
        None
    };
    for y in b.y0..b.y1() {
        if let Some(w) = scan(&mut (b.x0..b.x1()).map(|x| (x, y)), false) {
            return Some(w);
        }
    }
    for x in b.x0..b.x1() {
        if let Some(w) = scan(&mut (b.y0..b.y1()).map(|y| (x, y)), true) {
            return Some(w);
        }
    }
    None
}

fn check_g4(closed_index: &RectCounter, b: Rect, gp: &GoodBoxParams) -> Option<GoodWitness> {
    let (sw, sh) = (gp.strip_w as i64, gp.strip_h as i64);
    if sw > b.w || sh > b.h {
        return None;
    }
    for y in b.y0..=b.y1() - sh {
        for x in b.x0..=b.x1() - sw {
            let strip = Rect::new(x, y, sw, sh);
            let count = closed_index.count(strip) as usize;
            if count > gp.closed_cap {
                return Some(GoodWitness::CrowdedStrip { strip, count });
            }
        }
    }
    None
}

/// Distance from `cell` to the boundary of `b`; zero on the boundary itself.
pub fn boundary_distance(b: Rect, cell: (i64, i64)) -> i64 {
    let (x, y) = cell;
    (x - b.x0).min(b.x1() - 1 - x).min(y - b.y0).min(b.y1() - 1 - y)
}

fn check_g5(b: Rect, closed: &[(i64, i64)], gp: &GoodBoxParams) -> Option<GoodWitness> {
    closed.iter().find_map(|&cell| {
        let distance = boundary_distance(b, cell);
        (distance < gp.margin as i64).then_some(GoodWitness::NearBoundary { cell, distance })
    })
}

fn check_g6(closed: &[(i64, i64)]) -> Option<GoodWitness> {
    for (i, &a) in closed.iter().enumerate() {
        if let Some(&b) = closed[i + 1..].iter().find(|b| b.0 == a.0 || b.1 == a.1) {
            return Some(GoodWitness::SharedLine { a, b });
        }
    }
    None
}

pub(crate) fn good_report_with(g: &Grid, closed_index: &RectCounter, b: Rect, gp: &GoodBoxParams) -> GoodReport {
    let closed = closed_cells(g, b);
    let found = [
        check_g1(&closed, gp),
        check_g2(g, b, &closed, gp),
        check_g3(g, b, gp),
        check_g4(closed_index, b, gp),
        check_g5(b, &closed, gp),
        check_g6(&closed),
    ];
    GoodReport {
        conditions: found.map(|w| w.is_none()),
        witnesses: found.into_iter().flatten().collect(),
    }
}

/// Evaluates all six conditions on box `b`, which must lie inside `g`.
pub fn is_good_box(g: &Grid, b: Rect, gp: &GoodBoxParams) -> Result<GoodReport> {
    gp.check()?;
    if b.is_empty() {
        return Err(Error::Argument("empty box".into()));
    }
    if !g.bounds().contains_rect(&b) {
        return Err(g.oob(b.x1() - 1, b.y1() - 1));
    }
    Ok(good_report_with(g, &RectCounter::new(g.closed()), b, gp))
}

/// Boundary cells just outside `b` on side `side`, corners excluded.
pub fn outside_interval(b: Rect, side: Direction) -> Rect {
    match side {
        Direction::South => Rect::new(b.x0, b.y0 - 1, b.w, 1),
        Direction::North => Rect::new(b.x0, b.y1(), b.w, 1),
        Direction::West => Rect::new(b.x0 - 1, b.y0, 1, b.h),
        Direction::East => Rect::new(b.x1(), b.y0, 1, b.h),
    }
}

/// Occupies the outside interval on `side`, runs Modified dynamics, and
/// reports whether every non-closed cell of `b` ends occupied. No goodness
/// check is made.
pub fn spread_fills_box(g: &Grid, b: Rect, side: Direction) -> Result<bool> {
    let line = outside_interval(b, side);
    if !g.bounds().contains_rect(&line) || !g.bounds().contains_rect(&b) {
        return Err(Error::Argument(format!(
            "box {b} and its {} boundary interval must lie inside the grid",
            side.name()
        )));
    }
    let mut start = g.clone();
    start.fill_rect(line, CellState::Occupied);
    let end = closure(&start, Rule::Modified).grid;
    Ok(b.cells().all(|(x, y)| end.closed_at(x, y) || end.occupied_at(x, y)))
}

/// Spreading check for a box known to be good; a bad box is a contract error.
pub fn verify_spread(g: &Grid, b: Rect, gp: &GoodBoxParams, side: Direction) -> Result<bool> {
    let report = is_good_box(g, b, gp)?;
    if !report.good() {
        let why = report.witnesses.first().map(|w| w.to_string()).unwrap_or_default();
        return Err(Error::Contract(format!("box {b} is not good ({why})")));
    }
    spread_fills_box(g, b, side)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GoodEstimate {
    pub good: Proportion,
    /// Fraction of trials failing each condition.
    pub failure_fractions: [f64; 6],
}

/// Monte Carlo probability that a `side x side` sampled box is good.
pub fn estimate_good_prob(gp: &GoodBoxParams, params: PollutionParams, trials: usize) -> Result<GoodEstimate> {
    gp.check()?;
    params.validate()?;
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be at least 1".into()));
    }
    let failures = (0..trials as u64)
        .into_par_iter()
        .map(|t| -> Result<[u64; 7]> {
            let seed = derive_seed(params.seed, GOOD_EXPERIMENT, t);
            let g = sample(gp.side, gp.side, PollutionParams { seed, ..params }, BoundaryCondition::Free)?;
            let r = is_good_box(&g, g.bounds(), gp)?;
            let mut out = [0u64; 7];
            for (o, c) in out.iter_mut().zip(r.conditions) {
                *o = (!c) as u64;
            }
            out[6] = r.good() as u64;
            Ok(out)
        })
        .try_reduce(
            || [0u64; 7],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                Ok(a)
            },
        )?;
    let n = trials as f64;
    let mut failure_fractions = [0.0; 6];
    for (f, c) in failure_fractions.iter_mut().zip(failures) {
        *f = c as f64 / n;
    }
    Ok(GoodEstimate {
        good: Proportion::wilson(failures[6], trials as u64),
        failure_fractions,
    })
}
