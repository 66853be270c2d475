//! Safe blocks: a closed pivot capping an occupied-free vertical chimney,
//! plus an occupied-free horizontal bar along the block's lower half.
//!
//! Block `R_z` is the `M x N` rectangle with lower-left corner `(M*z1, N*z2)`.
//! It is safe when some closed `x` in its upper half (rows at or above
//! `floor(N/2)` within the block) satisfies:
//!
//! * the `m x v_h` rectangle whose top edge lies in the block's top edge and
//!   whose middle column passes through `x` holds no occupied cell, and
//! * some `h_w x m` rectangle whose left edge lies in the lower half of the
//!   block's left edge holds no occupied cell.
//!
//! Both rectangles may extend past the block. Off-grid cells count as open.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::counter::RectCounter;
use crate::error::{Error, Result};
use crate::lattice::{Grid, Rect};
use crate::random::{derive_seed, sample, BoundaryCondition, PollutionParams};
use crate::stats::Proportion;

/// Experiment id used when deriving per-trial seeds for the safe-block estimator.
pub const SAFE_EXPERIMENT: u64 = 0x5AFE;

/// Floor/ceil that forgive the last-ulp error of `eps / p` style quotients.
fn floor_tol(x: f64) -> f64 {
    (x + 1e-9).floor()
}

fn ceil_tol(x: f64) -> f64 {
    (x - 1e-9).ceil()
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct BlockGeometry {
    /// Width of the chimney rectangle and height of the bar rectangle; odd.
    pub m: usize,
    /// Block width `M`.
    pub block_w: usize,
    /// Block height `N`.
    pub block_h: usize,
    /// Chimney rectangle height `v_h`.
    pub chimney_h: usize,
    /// Bar rectangle width `h_w`.
    pub bar_w: usize,
}

impl BlockGeometry {
    /// Dimensions derived from `(m, k, eps, delta, p)`:
    /// `M = floor(delta/p * ln(1/p))`, `N = 2m * ceil(eps/(m p))`,
    /// `v_h = k * ceil(eps/p)`, `h_w = k * M`.
    pub fn from_params(m: usize, k: usize, eps: f64, delta: f64, p: f64) -> Result<Self> {
        if m % 2 == 0 || m < 5 {
            return Err(Error::InvalidParams(format!("m must be odd and at least 5, got {m}")));
        }
        if k < 3 {
            return Err(Error::InvalidParams(format!("k must be at least 3, got {k}")));
        }
        if !(eps > 0.0 && delta > 0.0 && p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParams(format!(
                "need eps, delta > 0 and 0 < p < 1, got eps={eps}, delta={delta}, p={p}"
            )));
        }
        let block_w = floor_tol(delta / p * (1.0 / p).ln()) as usize;
        let block_h = 2 * m * ceil_tol(eps / (m as f64 * p)) as usize;
        let chimney_h = k * ceil_tol(eps / p) as usize;
        let geom = BlockGeometry {
            m,
            block_w,
            block_h,
            chimney_h,
            bar_w: k * block_w,
        };
        geom.check_positive()?;
        Ok(geom)
    }

    /// Explicit dimensions for desk-scale experiments.
    pub fn desk(m: usize, block_w: usize, block_h: usize, chimney_h: usize, bar_w: usize) -> Result<Self> {
        if m % 2 == 0 {
            return Err(Error::InvalidParams(format!("m must be odd, got {m}")));
        }
        let geom = BlockGeometry {
            m,
            block_w,
            block_h,
            chimney_h,
            bar_w,
        };
        geom.check_positive()?;
        Ok(geom)
    }

    fn check_positive(&self) -> Result<()> {
        if self.m == 0 || self.block_w == 0 || self.block_h == 0 || self.chimney_h == 0 || self.bar_w == 0 {
            return Err(Error::InvalidParams(format!("all block dimensions must be positive: {self:?}")));
        }
        Ok(())
    }

    pub fn block_rect(&self, zx: usize, zy: usize) -> Rect {
        Rect::new(
            (zx * self.block_w) as i64,
            (zy * self.block_h) as i64,
            self.block_w as i64,
            self.block_h as i64,
        )
    }

    /// First row of the block's upper half, relative to the block.
    pub fn upper_half_start(&self) -> usize {
        self.block_h / 2
    }

    fn chimney_rect(&self, block: Rect, pivot_x: i64) -> Rect {
        let half = ((self.m - 1) / 2) as i64;
        Rect::new(
            pivot_x - half,
            block.y1() - self.chimney_h as i64,
            self.m as i64,
            self.chimney_h as i64,
        )
    }

    fn bar_rect(&self, block: Rect, offset: usize) -> Rect {
        Rect::new(
            block.x0,
            block.y0 + offset as i64,
            self.bar_w as i64,
            self.m as i64,
        )
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct SafeCertificate {
    pub block: (usize, usize),
    pub pivot: (i64, i64),
    /// Chimney rectangle (width `m`, height `v_h`).
    pub vrect: Rect,
    /// Bar rectangle (width `h_w`, height `m`).
    pub hrect: Rect,
}

impl SafeCertificate {
    /// Middle column of the chimney rectangle.
    pub fn vertical_core(&self) -> Rect {
        Rect::new(self.vrect.middle_column(), self.vrect.y0, 1, self.vrect.h)
    }

    /// Middle row of the bar rectangle.
    pub fn horizontal_core(&self) -> Rect {
        Rect::new(self.hrect.x0, self.hrect.middle_row(), self.hrect.w, 1)
    }

    /// Re-checks every defining condition against `g` and `geom`.
    pub fn validate(&self, g: &Grid, geom: &BlockGeometry) -> Result<()> {
        let fail = |why: &str| Err(Error::Contract(format!("certificate {self}: {why}")));
        let block = geom.block_rect(self.block.0, self.block.1);
        let (px, py) = self.pivot;
        if !block.contains(px, py) || py < block.y0 + geom.upper_half_start() as i64 {
            return fail("pivot not in the block's upper half");
        }
        if !g.closed_at(px, py) {
            return fail("pivot is not closed");
        }
        if self.vrect != geom.chimney_rect(block, px) || self.vrect.x0 < block.x0 || self.vrect.x1() > block.x1() {
            return fail("chimney rectangle misplaced");
        }
        if !self.vrect.contains(px, py) {
            return fail("pivot outside chimney rectangle");
        }
        let lower_half = Rect::new(block.x0, block.y0, 1, geom.upper_half_start() as i64);
        if self.hrect.x0 != block.x0
            || self.hrect.w != geom.bar_w as i64
            || self.hrect.h != geom.m as i64
            || !lower_half.contains_rect(&Rect::new(self.hrect.x0, self.hrect.y0, 1, self.hrect.h))
        {
            return fail("bar rectangle misplaced");
        }
        for rect in [self.vrect, self.hrect] {
            if rect.cells().any(|(x, y)| g.occupied_at(x, y)) {
                return fail("protective rectangle holds an occupied cell");
            }
        }
        Ok(())
    }
}

impl fmt::Display for SafeCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = |r: Rect| format!("{},{},{},{}", r.x0, r.y0, r.w, r.h);
        write!(
            f,
            "safe-block z={},{} pivot={},{} vrect={} hrect={}",
            self.block.0,
            self.block.1,
            self.pivot.0,
            self.pivot.1,
            r(self.vrect),
            r(self.hrect)
        )
    }
}

fn parse_ints(s: &str, n: usize) -> Result<Vec<i64>> {
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<i64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Parse { line: 1, msg: format!("{s:?}: {e}") })?;
    if v.len() != n {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected {n} integers in {s:?}"),
        });
    }
    Ok(v)
}

impl FromStr for SafeCertificate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut words = s.split_whitespace();
        if words.next() != Some("safe-block") {
            return Err(Error::Parse { line: 1, msg: "expected 'safe-block'".into() });
        }
        let (mut block, mut pivot, mut vrect, mut hrect) = (None, None, None, None);
        for w in words {
            let (k, v) = w.split_once('=').ok_or_else(|| Error::Parse {
                line: 1,
                msg: format!("expected key=value, got {w:?}"),
            })?;
            match k {
                "z" => {
                    let v = parse_ints(v, 2)?;
                    if v.iter().any(|&c| c < 0) {
                        return Err(Error::Parse { line: 1, msg: "negative block index".into() });
                    }
                    block = Some((v[0] as usize, v[1] as usize));
                }
                "pivot" => {
                    let v = parse_ints(v, 2)?;
                    pivot = Some((v[0], v[1]));
                }
                "vrect" | "hrect" => {
                    let v = parse_ints(v, 4)?;
                    let r = Rect::new(v[0], v[1], v[2], v[3]);
                    if k == "vrect" {
                        vrect = Some(r);
                    } else {
                        hrect = Some(r);
                    }
                }
                other => {
                    return Err(Error::Parse { line: 1, msg: format!("unknown key {other:?}") });
                }
            }
        }
        let missing = |what: &str| Error::Parse { line: 1, msg: format!("missing {what}") };
        Ok(SafeCertificate {
            block: block.ok_or_else(|| missing("z"))?,
            pivot: pivot.ok_or_else(|| missing("pivot"))?,
            vrect: vrect.ok_or_else(|| missing("vrect"))?,
            hrect: hrect.ok_or_else(|| missing("hrect"))?,
        })
    }
}

/// Writes one certificate per line.
pub fn format_certificates(certs: &[SafeCertificate]) -> String {
    certs.iter().map(|c| format!("{c}\n")).collect()
}

pub fn parse_certificates(text: &str) -> Result<Vec<SafeCertificate>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            l.parse().map_err(|e| match e {
                Error::Parse { msg, .. } => Error::Parse { line: i + 1, msg },
                other => other,
            })
        })
        .collect()
}

fn safe_block_with(g: &Grid, occupied: &RectCounter, zx: usize, zy: usize, geom: &BlockGeometry) -> Option<SafeCertificate> {
    let block = geom.block_rect(zx, zy);
    let half = geom.upper_half_start();
    let m = geom.m;

    // the bar does not depend on the pivot; take the lowest admissible one
    let hrect = (0..(half + 1).saturating_sub(m))
        .map(|off| geom.bar_rect(block, off))
        .find(|r| occupied.count(*r) == 0)?;

    let margin = ((m - 1) / 2) as i64;
    let xs = (block.x0 + margin)..(block.x1() - margin);
    let clear: Vec<(i64, Rect)> = xs
        .map(|x| (x, geom.chimney_rect(block, x)))
        .filter(|(_, r)| occupied.count(*r) == 0)
        .collect();
    if clear.is_empty() {
        return None;
    }
    let lowest = block.y0 + half as i64;
    for y in (lowest..block.y1()).rev() {
        for &(x, vrect) in &clear {
            if y >= vrect.y0 && g.closed_at(x, y) {
                return Some(SafeCertificate {
                    block: (zx, zy),
                    pivot: (x, y),
                    vrect,
                    hrect,
                });
            }
        }
    }
    None
}

fn check_block_inside(g: &Grid, geom: &BlockGeometry, zx: usize, zy: usize) -> Result<()> {
    let block = geom.block_rect(zx, zy);
    if !g.bounds().contains_rect(&block) {
        return Err(g.oob(block.x1() - 1, block.y1() - 1));
    }
    Ok(())
}

/// Certificate for the topmost, then leftmost, admissible pivot of block `z`.
pub fn is_safe_block(g: &Grid, z: (usize, usize), geom: &BlockGeometry) -> Result<Option<SafeCertificate>> {
    check_block_inside(g, geom, z.0, z.1)?;
    let occupied = RectCounter::new(g.occupied());
    Ok(safe_block_with(g, &occupied, z.0, z.1, geom))
}

/// Safe/unsafe verdicts (with certificates) over a window of block indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockField {
    /// In block coordinates.
    pub window: Rect,
    certs: Vec<Option<SafeCertificate>>,
}

impl BlockField {
    /// Field from explicit flags; certificates are absent.
    pub fn from_flags(window: Rect, flags: &[bool]) -> Result<Self> {
        if flags.len() as i64 != window.area() {
            return Err(Error::Argument("flag count does not match window".into()));
        }
        let certs = flags
            .iter()
            .enumerate()
            .map(|(i, &f)| {
                f.then(|| SafeCertificate {
                    block: (
                        (window.x0 + i as i64 % window.w) as usize,
                        (window.y0 + i as i64 / window.w) as usize,
                    ),
                    pivot: (0, 0),
                    vrect: Rect::EMPTY,
                    hrect: Rect::EMPTY,
                })
            })
            .collect();
        Ok(BlockField { window, certs })
    }

    fn slot(&self, zx: i64, zy: i64) -> Option<usize> {
        self.window
            .contains(zx, zy)
            .then(|| ((zy - self.window.y0) * self.window.w + (zx - self.window.x0)) as usize)
    }

    pub fn is_safe(&self, zx: i64, zy: i64) -> bool {
        self.slot(zx, zy).is_some_and(|i| self.certs[i].is_some())
    }

    pub fn certificate(&self, zx: i64, zy: i64) -> Option<&SafeCertificate> {
        self.slot(zx, zy).and_then(|i| self.certs[i].as_ref())
    }

    pub fn certificates(&self) -> impl Iterator<Item = &SafeCertificate> {
        self.certs.iter().flatten()
    }

    pub fn safe_count(&self) -> usize {
        self.certs.iter().filter(|c| c.is_some()).count()
    }
}

/// Evaluates every block of `window` (block coordinates, non-negative).
pub fn safe_block_field(g: &Grid, geom: &BlockGeometry, window: Rect) -> Result<BlockField> {
    if window.x0 < 0 || window.y0 < 0 {
        return Err(Error::Argument(format!("block window {window} has negative origin")));
    }
    if !window.is_empty() {
        check_block_inside(g, geom, (window.x1() - 1) as usize, (window.y1() - 1) as usize)?;
    }
    let occupied = RectCounter::new(g.occupied());
    let certs = window
        .cells()
        .map(|(zx, zy)| safe_block_with(g, &occupied, zx as usize, zy as usize, geom))
        .collect();
    Ok(BlockField { window, certs })
}

/// Grid size and block index such that one block plus both protective
/// rectangles fit inside the sampled grid.
pub fn estimation_layout(geom: &BlockGeometry) -> (usize, usize, (usize, usize)) {
    let below = geom.chimney_h.saturating_sub(geom.block_h);
    let zy = below.div_ceil(geom.block_h);
    let width = geom.block_w.max(geom.bar_w);
    let height = geom.block_h * (zy + 1);
    (width, height, (0, zy))
}

/// Monte Carlo probability that a single block is safe.
pub fn estimate_safe_prob(geom: &BlockGeometry, params: PollutionParams, trials: usize) -> Result<Proportion> {
    params.validate()?;
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be at least 1".into()));
    }
    let (w, h, z) = estimation_layout(geom);
    let hits = (0..trials as u64)
        .into_par_iter()
        .map(|t| -> Result<u64> {
            let seed = derive_seed(params.seed, SAFE_EXPERIMENT, t);
            let g = sample(w, h, PollutionParams { seed, ..params }, BoundaryCondition::Free)?;
            Ok(is_safe_block(&g, z, geom)?.is_some() as u64)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(Proportion::wilson(hits, trials as u64))
}
