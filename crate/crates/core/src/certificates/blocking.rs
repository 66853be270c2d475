//! Blocking paths of safe blocks and the structures built along them.
//!
//! A blocking path moves only east or north through safe blocks, never takes
//! three consecutive steps in the same direction, starts on the left or
//! bottom edge of its window and ends on the right or top edge.
//!
//! Its structure is a union of segments: for the last block of every
//! horizontal run, the chimney core from the pivot down to the chimney's
//! bottom, and the bar core from the pivot's column eastwards. Region `A` is
//! what the window's top row can reach without crossing a segment. With
//! Modified dynamics, making `A` occupied or making it closed should leave
//! everything outside `A` unchanged.

use std::collections::HashMap;
use std::fmt;

use super::safe::{BlockField, SafeCertificate};
use crate::dynamics::{closure, Rule};
use crate::error::{Error, Result};
use crate::lattice::{occupied_clusters, BitPlane, CellState, Grid, Rect};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Step {
    East,
    North,
}

impl Step {
    pub fn delta(self) -> (i64, i64) {
        match self {
            Step::East => (1, 0),
            Step::North => (0, 1),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BlockingPath {
    /// Block coordinates, in path order.
    pub blocks: Vec<(i64, i64)>,
}

impl BlockingPath {
    pub fn steps(&self) -> Vec<Step> {
        self.blocks
            .windows(2)
            .map(|w| if w[1].0 > w[0].0 { Step::East } else { Step::North })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Checks the path against `field` and `window` (block coordinates).
    pub fn validate(&self, field: &BlockField, window: Rect) -> Result<()> {
        let fail = |why: String| Err(Error::Contract(format!("blocking path: {why}")));
        let (Some(&first), Some(&last)) = (self.blocks.first(), self.blocks.last()) else {
            return fail("empty".into());
        };
        for &(x, y) in &self.blocks {
            if !window.contains(x, y) || !field.is_safe(x, y) {
                return fail(format!("block ({x}, {y}) is not a safe block of the window"));
            }
        }
        for w in self.blocks.windows(2) {
            let d = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            if d != (1, 0) && d != (0, 1) {
                return fail(format!("illegal step {:?} -> {:?}", w[0], w[1]));
            }
        }
        if self.steps().windows(3).any(|s| s[0] == s[1] && s[1] == s[2]) {
            return fail("three consecutive steps in one direction".into());
        }
        if first.0 != window.x0 && first.1 != window.y0 {
            return fail("does not start on the left or bottom edge".into());
        }
        if last.0 != window.x1() - 1 && last.1 != window.y1() - 1 {
            return fail("does not end on the right or top edge".into());
        }
        Ok(())
    }
}

/// Dynamic-programming state: how the path entered the block.
const START: usize = 0;
const EAST1: usize = 1;
const EAST2: usize = 2;
const NORTH1: usize = 3;
const NORTH2: usize = 4;
const STATES: usize = 5;

/// Longest blocking path in `window` (block coordinates), if any.
///
/// Ties are broken deterministically: earlier start blocks (row-major) and
/// east moves win.
pub fn find_blocking_path(field: &BlockField, window: Rect) -> Result<Option<BlockingPath>> {
    if !field.window.contains_rect(&window) {
        return Err(Error::Argument(format!(
            "window {window} is not inside the block field {}",
            field.window
        )));
    }
    if window.is_empty() {
        return Ok(None);
    }
    let (w, h) = (window.w as usize, window.h as usize);
    let idx = |i: usize, j: usize, s: usize| (j * w + i) * STATES + s;
    // best[idx] = (length, predecessor index)
    let mut best: Vec<Option<(usize, usize)>> = vec![None; w * h * STATES];
    for j in 0..h {
        for i in 0..w {
            if !field.is_safe(window.x0 + i as i64, window.y0 + j as i64) {
                continue;
            }
            if i == 0 || j == 0 {
                best[idx(i, j, START)] = Some((1, usize::MAX));
            }
            let relax = |state: usize, from: usize, best: &mut Vec<Option<(usize, usize)>>| {
                if let Some((len, _)) = best[from] {
                    let slot = idx(i, j, state);
                    if best[slot].is_none_or(|(l, _)| len + 1 > l) {
                        best[slot] = Some((len + 1, from));
                    }
                }
            };
            if i > 0 {
                for s in [START, NORTH1, NORTH2] {
                    relax(EAST1, idx(i - 1, j, s), &mut best);
                }
                relax(EAST2, idx(i - 1, j, EAST1), &mut best);
            }
            if j > 0 {
                for s in [START, EAST1, EAST2] {
                    relax(NORTH1, idx(i, j - 1, s), &mut best);
                }
                relax(NORTH2, idx(i, j - 1, NORTH1), &mut best);
            }
        }
    }
    let mut end: Option<(usize, usize)> = None;
    for j in 0..h {
        for i in 0..w {
            if i != w - 1 && j != h - 1 {
                continue;
            }
            for s in 0..STATES {
                if let Some((len, _)) = best[idx(i, j, s)] {
                    if end.is_none_or(|(l, _)| len > l) {
                        end = Some((len, idx(i, j, s)));
                    }
                }
            }
        }
    }
    let Some((_, mut at)) = end else {
        return Ok(None);
    };
    let mut blocks = Vec::new();
    loop {
        let cell = at / STATES;
        blocks.push((window.x0 + (cell % w) as i64, window.y0 + (cell / w) as i64));
        let (_, prev) = best[at].expect("reconstructed state is reachable");
        if prev == usize::MAX {
            break;
        }
        at = prev;
    }
    blocks.reverse();
    Ok(Some(BlockingPath { blocks }))
}

/// Indices of path blocks that close a horizontal run.
///
/// A run counts only if it contains at least one east step; a path with no
/// steps at all is a single degenerate run.
pub fn run_ends(path: &BlockingPath) -> Vec<usize> {
    if path.len() == 1 {
        return vec![0];
    }
    let steps = path.steps();
    (1..path.len())
        .filter(|&i| steps[i - 1] == Step::East && steps.get(i) != Some(&Step::East))
        .collect()
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BlockingStructure {
    /// Cell window the structure lives in.
    pub window: Rect,
    /// One-cell-wide rectangles, clipped to the window.
    pub segments: Vec<Rect>,
    segment_mask: BitPlane,
    region_a: BitPlane,
}

impl BlockingStructure {
    fn local(&self, x: i64, y: i64) -> Option<(usize, usize)> {
        self.window
            .contains(x, y)
            .then(|| ((x - self.window.x0) as usize, (y - self.window.y0) as usize))
    }

    pub fn in_segments(&self, x: i64, y: i64) -> bool {
        self.local(x, y).is_some_and(|(i, j)| self.segment_mask.get(i, j))
    }

    pub fn in_region_a(&self, x: i64, y: i64) -> bool {
        self.local(x, y).is_some_and(|(i, j)| self.region_a.get(i, j))
    }

    pub fn region_a_size(&self) -> usize {
        self.region_a.count_ones()
    }

    /// Cells of region `A` in global coordinates, row-major.
    pub fn region_a_cells(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        let (x0, y0) = (self.window.x0, self.window.y0);
        self.region_a.iter_ones().map(move |(x, y)| (x0 + x as i64, y0 + y as i64))
    }
}

/// Builds segments and region `A` inside the cell window `window`.
pub fn build_blocking_structure(path: &BlockingPath, certs: &[SafeCertificate], window: Rect) -> Result<BlockingStructure> {
    if window.is_empty() || window.x0 < 0 || window.y0 < 0 {
        return Err(Error::Argument(format!("invalid cell window {window}")));
    }
    if path.is_empty() {
        return Err(Error::Argument("empty blocking path".into()));
    }
    let by_block: HashMap<(i64, i64), &SafeCertificate> = certs
        .iter()
        .map(|c| ((c.block.0 as i64, c.block.1 as i64), c))
        .collect();
    let mut segments = Vec::new();
    for i in run_ends(path) {
        let z = path.blocks[i];
        let cert = by_block
            .get(&z)
            .ok_or_else(|| Error::Argument(format!("no certificate for block ({}, {})", z.0, z.1)))?;
        let (px, py) = cert.pivot;
        let vertical = Rect::from_corners(px, cert.vrect.y0, px, py);
        let hy = cert.hrect.middle_row();
        let horizontal = Rect::from_corners(px, hy, cert.hrect.x1() - 1, hy);
        for seg in [vertical, horizontal] {
            let clipped = seg.intersect(&window);
            if !clipped.is_empty() {
                segments.push(clipped);
            }
        }
    }

    let (w, h) = (window.w as usize, window.h as usize);
    let mut segment_mask = BitPlane::new(w, h);
    for seg in &segments {
        for (x, y) in seg.cells() {
            segment_mask.set((x - window.x0) as usize, (y - window.y0) as usize, true);
        }
    }
    let mut region_a = BitPlane::new(w, h);
    let mut stack: Vec<(usize, usize)> = (0..w).map(|x| (x, h - 1)).collect();
    while let Some((x, y)) = stack.pop() {
        if segment_mask.get(x, y) || region_a.get(x, y) {
            continue;
        }
        region_a.set(x, y, true);
        if x > 0 {
            stack.push((x - 1, y));
        }
        if x + 1 < w {
            stack.push((x + 1, y));
        }
        if y > 0 {
            stack.push((x, y - 1));
        }
        if y + 1 < h {
            stack.push((x, y + 1));
        }
    }
    Ok(BlockingStructure {
        window,
        segments,
        segment_mask,
        region_a,
    })
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub enum BlockingVerdict {
    /// Both completions agree on every cell outside `A`.
    Holds,
    /// The closed completion grew a cluster wider than `m / 4`.
    ClusterPreconditionFailed { max_diameter: usize },
    /// First disagreeing cell outside `A`; non-segment cells are reported first.
    Violated { witness: (usize, usize) },
}

impl fmt::Display for BlockingVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockingVerdict::Holds => f.write_str("holds"),
            BlockingVerdict::ClusterPreconditionFailed { max_diameter } => {
                write!(f, "cluster precondition failed (diameter {max_diameter})")
            }
            BlockingVerdict::Violated { witness } => write!(f, "violated at ({}, {})", witness.0, witness.1),
        }
    }
}

/// Whether clusters of l-infinity diameter `d` are at most `m / 4` wide.
pub fn cluster_bound_holds(d: usize, m: usize) -> bool {
    4 * d <= m
}

/// Largest cluster diameter in the Modified closure of `g` with `A` closed.
pub fn closed_completion_diameter(g: &Grid, s: &BlockingStructure) -> usize {
    let xi_c = closure(&with_region(g, s, CellState::Closed), Rule::Modified).grid;
    occupied_clusters(&xi_c).max_linf_diameter
}

fn with_region(g: &Grid, s: &BlockingStructure, state: CellState) -> Grid {
    let mut out = g.clone();
    for (x, y) in s.region_a_cells() {
        out.put(x as usize, y as usize, state);
    }
    out
}

/// Compares the Modified closures of `A`-occupied and `A`-closed completions.
pub fn verify_blocking(g: &Grid, s: &BlockingStructure, m: usize) -> Result<BlockingVerdict> {
    if !g.bounds().contains_rect(&s.window) {
        return Err(Error::Argument(format!(
            "structure window {} is not inside the {}x{} grid",
            s.window,
            g.width(),
            g.height()
        )));
    }
    let xi_o = closure(&with_region(g, s, CellState::Occupied), Rule::Modified).grid;
    let xi_c = closure(&with_region(g, s, CellState::Closed), Rule::Modified).grid;
    let max_diameter = occupied_clusters(&xi_c).max_linf_diameter;
    if !cluster_bound_holds(max_diameter, m) {
        return Ok(BlockingVerdict::ClusterPreconditionFailed { max_diameter });
    }
    let mut on_segment = None;
    for y in 0..g.height() {
        for x in 0..g.width() {
            let (xi, yi) = (x as i64, y as i64);
            if s.in_region_a(xi, yi) || xi_o.state(x, y) == xi_c.state(x, y) {
                continue;
            }
            if !s.in_segments(xi, yi) {
                return Ok(BlockingVerdict::Violated { witness: (x, y) });
            }
            on_segment.get_or_insert((x, y));
        }
    }
    Ok(match on_segment {
        Some(witness) => BlockingVerdict::Violated { witness },
        None => BlockingVerdict::Holds,
    })
}
