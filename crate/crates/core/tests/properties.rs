//! Property tests against small, deliberately naive oracles written here.

use std::collections::VecDeque;

use bootperc::certificates::blocking::{
    build_blocking_structure, find_blocking_path, verify_blocking, BlockingPath, BlockingVerdict,
};
use bootperc::certificates::fixtures::{good_box_fixture, staircase_fixture};
use bootperc::certificates::good::{boundary_distance, GoodWitness};
use bootperc::certificates::safe::safe_block_field;
use bootperc::certificates::{is_good_box, is_safe_block, BlockField, BlockGeometry, GoodBoxParams};
use bootperc::dynamics::{eliminable_sites, eliminate, agree_off};
use bootperc::lattice::{occupied_clusters, Direction};
use bootperc::random::counter_uniform;
use bootperc::{closure, sample, BoundaryCondition, CellState, Grid, PollutionParams, Rect, Rule};
use proptest::prelude::*;

const OPEN: u8 = 0;
const OCC: u8 = 1;
const CLOSED: u8 = 2;

fn cells_of(g: &Grid) -> Vec<Vec<u8>> {
    (0..g.height())
        .map(|y| {
            (0..g.width())
                .map(|x| match g.state(x, y) {
                    CellState::Open => OPEN,
                    CellState::Occupied => OCC,
                    CellState::Closed => CLOSED,
                })
                .collect()
        })
        .collect()
}

fn grid_of(cells: &[Vec<u8>]) -> Grid {
    let mut g = Grid::new(cells[0].len(), cells.len()).unwrap();
    for (y, row) in cells.iter().enumerate() {
        for (x, &c) in row.iter().enumerate() {
            let s = match c {
                OCC => CellState::Occupied,
                CLOSED => CellState::Closed,
                _ => CellState::Open,
            };
            g.set(x, y, s).unwrap();
        }
    }
    g
}

/// Plain synchronous iteration on a byte array; returns the fixpoint and
/// the number of generations that changed something.
fn oracle_closure(cells: &[Vec<u8>], rule: Rule) -> (Vec<Vec<u8>>, usize) {
    let (h, w) = (cells.len(), cells[0].len());
    let mut cur = cells.to_vec();
    let mut gens = 0;
    loop {
        let occ = |x: i64, y: i64| {
            x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && cur[y as usize][x as usize] == OCC
        };
        let mut next = cur.clone();
        let mut changed = false;
        for y in 0..h {
            for x in 0..w {
                if cur[y][x] != OPEN {
                    continue;
                }
                let (xi, yi) = (x as i64, y as i64);
                let (e, wst, n, s) = (occ(xi + 1, yi), occ(xi - 1, yi), occ(xi, yi + 1), occ(xi, yi - 1));
                let count = [e, wst, n, s].iter().filter(|&&b| b).count();
                let fire = match rule {
                    Rule::Standard => count >= 2,
                    Rule::Modified => (e || wst) && (n || s),
                    Rule::ModifiedPlusVertical => ((e || wst) && (n || s)) || (n && s),
                };
                if fire {
                    next[y][x] = OCC;
                    changed = true;
                }
            }
        }
        if !changed {
            return (cur, gens);
        }
        gens += 1;
        cur = next;
    }
}

prop_compose! {
    fn arb_cells(max: usize)(w in 1..=max, h in 1..=max)
        (row in proptest::collection::vec(proptest::collection::vec(0u8..10, w), h)) -> Vec<Vec<u8>> {
        // open 60%, occupied 30%, closed 10%
        row.into_iter()
            .map(|r| r.into_iter().map(|v| if v < 6 { OPEN } else if v < 9 { OCC } else { CLOSED }).collect())
            .collect()
    }
}

fn arb_rule() -> impl Strategy<Value = Rule> {
    prop_oneof![Just(Rule::Standard), Just(Rule::Modified), Just(Rule::ModifiedPlusVertical)]
}

fn reflect_cells_x(c: &[Vec<u8>]) -> Vec<Vec<u8>> {
    c.iter().map(|r| r.iter().rev().copied().collect()).collect()
}

fn reflect_cells_y(c: &[Vec<u8>]) -> Vec<Vec<u8>> {
    c.iter().rev().cloned().collect()
}

fn transpose_cells(c: &[Vec<u8>]) -> Vec<Vec<u8>> {
    (0..c[0].len()).map(|x| c.iter().map(|r| r[x]).collect()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn closure_matches_byte_oracle(cells in arb_cells(40), rule in arb_rule()) {
        let f = closure(&grid_of(&cells), rule);
        let (expect, gens) = oracle_closure(&cells, rule);
        prop_assert_eq!(cells_of(&f.grid), expect);
        prop_assert_eq!(f.steps_to_fixpoint, gens);
    }

    #[test]
    fn closure_is_idempotent_and_keeps_states(cells in arb_cells(40), rule in arb_rule()) {
        let g = grid_of(&cells);
        let f = closure(&g, rule);
        let again = closure(&f.grid, rule);
        prop_assert_eq!(&again.grid, &f.grid);
        prop_assert_eq!(again.steps_to_fixpoint, 0);
        prop_assert!(g.occupied().is_subset_of(f.grid.occupied()));
        prop_assert_eq!(g.closed(), f.grid.closed());
    }

    #[test]
    fn closure_commutes_with_reflections(cells in arb_cells(30), rule in arb_rule()) {
        let (base, _) = oracle_closure(&cells, rule);
        let fx = closure(&grid_of(&reflect_cells_x(&cells)), rule).grid;
        prop_assert_eq!(cells_of(&fx), reflect_cells_x(&base));
        let fy = closure(&grid_of(&reflect_cells_y(&cells)), rule).grid;
        prop_assert_eq!(cells_of(&fy), reflect_cells_y(&base));
        // the vertical extra breaks the swap of axes
        if rule != Rule::ModifiedPlusVertical {
            let ft = closure(&grid_of(&transpose_cells(&cells)), rule).grid;
            prop_assert_eq!(cells_of(&ft), transpose_cells(&base));
        }
    }

    #[test]
    fn adding_occupied_cells_is_monotone(cells in arb_cells(30), rule in arb_rule(), extra in any::<u64>()) {
        let mut more = cells.clone();
        for (y, row) in more.iter_mut().enumerate() {
            for (x, c) in row.iter_mut().enumerate() {
                if *c == OPEN && counter_uniform(extra, (y * 64 + x) as u64) < 0.2 {
                    *c = OCC;
                }
            }
        }
        let a = closure(&grid_of(&cells), rule).grid;
        let b = closure(&grid_of(&more), rule).grid;
        prop_assert!(a.occupied().is_subset_of(b.occupied()));
    }

    #[test]
    fn clusters_match_flood_fill(cells in arb_cells(40)) {
        let (h, w) = (cells.len(), cells[0].len());
        let mut seen = vec![vec![false; w]; h];
        let mut sizes = Vec::new();
        let mut diam = 0;
        for y0 in 0..h {
            for x0 in 0..w {
                if cells[y0][x0] != OCC || seen[y0][x0] {
                    continue;
                }
                let (mut size, mut lo, mut hi) = (0, (x0, y0), (x0, y0));
                let mut queue = VecDeque::from([(x0, y0)]);
                seen[y0][x0] = true;
                while let Some((x, y)) = queue.pop_front() {
                    size += 1;
                    lo = (lo.0.min(x), lo.1.min(y));
                    hi = (hi.0.max(x), hi.1.max(y));
                    let nbrs = [(x + 1, y), (x.wrapping_sub(1), y), (x, y + 1), (x, y.wrapping_sub(1))];
                    for (nx, ny) in nbrs {
                        if nx < w && ny < h && cells[ny][nx] == OCC && !seen[ny][nx] {
                            seen[ny][nx] = true;
                            queue.push_back((nx, ny));
                        }
                    }
                }
                sizes.push(size);
                diam = diam.max((hi.0 - lo.0).max(hi.1 - lo.1));
            }
        }
        let s = occupied_clusters(&grid_of(&cells));
        prop_assert_eq!(s.cluster_count, sizes.len());
        prop_assert_eq!(s.clusters.iter().map(|c| c.size).collect::<Vec<_>>(), sizes);
        prop_assert_eq!(s.max_linf_diameter, diam);
    }

    #[test]
    fn elimination_keeps_finals_off_site(cells in arb_cells(24), rule in arb_rule()) {
        let g = grid_of(&cells);
        let base = closure(&g, rule).grid;
        for (x, y) in eliminable_sites(&g, rule) {
            let e = eliminate(&g, rule, x, y).unwrap();
            prop_assert!(agree_off(&closure(&e, rule).grid, &base, x, y));
        }
    }

    #[test]
    fn sampled_counts_are_binomial(p in 0.01f64..0.5, q in 0.0f64..0.2, seed in any::<u64>()) {
        let (w, h) = (128usize, 128usize);
        let g = sample(w, h, PollutionParams::new(p, q, seed).unwrap(), BoundaryCondition::Free).unwrap();
        let n = (w * h) as f64;
        for (count, prob) in [(g.occupied_count(), p), (g.closed_count(), q)] {
            let sd = (n * prob * (1.0 - prob)).sqrt();
            prop_assert!((count as f64 - n * prob).abs() <= 4.0 * sd + 1.0, "count {} for prob {}", count, prob);
        }
    }
}

/// Safe-block predicate straight from its definition: topmost, then
/// leftmost pivot; bar at the lowest clear offset.
fn naive_safe(g: &Grid, z: (usize, usize), geom: &BlockGeometry) -> Option<((i64, i64), i64)> {
    let bx = (z.0 * geom.block_w) as i64;
    let by = (z.1 * geom.block_h) as i64;
    let (bw, bh) = (geom.block_w as i64, geom.block_h as i64);
    let (m, half) = (geom.m as i64, (geom.block_h / 2) as i64);
    let occupied_free = |x0: i64, y0: i64, w: i64, h: i64| {
        (y0..y0 + h).all(|y| (x0..x0 + w).all(|x| !g.occupied_at(x, y)))
    };
    let bar = (0..=half - m).find(|&off| occupied_free(bx, by + off, geom.bar_w as i64, m))?;
    let chimney_y0 = by + bh - geom.chimney_h as i64;
    for y in (by + half..by + bh).rev() {
        for x in bx..bx + bw {
            let x0 = x - (m - 1) / 2;
            let inside = x0 >= bx && x0 + m <= bx + bw && y >= chimney_y0;
            if inside && g.closed_at(x, y) && occupied_free(x0, chimney_y0, m, geom.chimney_h as i64) {
                return Some(((x, y), by + bar));
            }
        }
    }
    None
}

prop_compose! {
    fn arb_safe_case()(m in prop_oneof![Just(5usize), Just(7)], bw in 7usize..20, bh in 10usize..24,
                       ch in 3usize..30, bar in 1usize..40, occ in 0.0f64..0.05, closed in 0.0f64..0.1,
                       seed in any::<u64>())
        -> Option<(Grid, BlockGeometry)> {
        let geom = BlockGeometry::desk(m, bw.max(m), bh.max(2 * m), ch, bar).ok()?;
        let g = sample(3 * geom.block_w, 3 * geom.block_h, PollutionParams::new(occ, closed, seed).ok()?, BoundaryCondition::Free).ok()?;
        Some((g, geom))
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn safe_blocks_match_definition(case in arb_safe_case()) {
        let Some((g, geom)) = case else { return Ok(()); };
        for zy in 0..3 {
            for zx in 0..3 {
                let got = is_safe_block(&g, (zx, zy), &geom).unwrap();
                let want = naive_safe(&g, (zx, zy), &geom);
                prop_assert_eq!(got.map(|c| (c.pivot, c.hrect.y0)), want);
                if let Some(c) = got {
                    prop_assert!(c.validate(&g, &geom).is_ok());
                }
            }
        }
    }
}

#[test]
fn safe_oracle_sees_both_outcomes() {
    let geom = BlockGeometry::desk(5, 12, 16, 10, 20).unwrap();
    let (mut safe, mut unsafe_) = (0, 0);
    for seed in 0..200 {
        let g = sample(36, 48, PollutionParams::new(0.02, 0.03, seed).unwrap(), BoundaryCondition::Free).unwrap();
        for z in [(0, 0), (1, 1), (2, 2)] {
            let got = is_safe_block(&g, z, &geom).unwrap();
            assert_eq!(got.map(|c| (c.pivot, c.hrect.y0)), naive_safe(&g, z, &geom));
            if got.is_some() { safe += 1 } else { unsafe_ += 1 }
        }
    }
    assert!(safe > 50 && unsafe_ > 50, "safe {safe}, unsafe {unsafe_}");
}

/// Every legal path from a start block, by depth-first enumeration.
fn longest_by_enumeration(safe: &[Vec<bool>]) -> Option<usize> {
    let (h, w) = (safe.len() as i64, safe[0].len() as i64);
    fn walk(safe: &[Vec<bool>], w: i64, h: i64, at: (i64, i64), last: Option<((i64, i64), u8)>, len: usize, best: &mut Option<usize>) {
        if at.0 == w - 1 || at.1 == h - 1 {
            *best = Some(best.map_or(len, |b| b.max(len)));
        }
        for d in [(1, 0), (0, 1)] {
            let next = (at.0 + d.0, at.1 + d.1);
            if next.0 >= w || next.1 >= h || !safe[next.1 as usize][next.0 as usize] {
                continue;
            }
            let run = match last {
                Some((ld, r)) if ld == d => r + 1,
                _ => 1,
            };
            if run <= 2 {
                walk(safe, w, h, next, Some((d, run)), len + 1, best);
            }
        }
    }
    let mut best = None;
    for y in 0..h {
        for x in 0..w {
            if (x == 0 || y == 0) && safe[y as usize][x as usize] {
                walk(safe, w, h, (x, y), None, 1, &mut best);
            }
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn blocking_path_matches_enumeration(w in 1usize..=6, h in 1usize..=6, density in 0.3f64..0.95, seed in any::<u64>()) {
        let flags: Vec<bool> = (0..w * h).map(|i| counter_uniform(seed, i as u64) < density).collect();
        let window = Rect::new(2, 3, w as i64, h as i64);
        let field = BlockField::from_flags(window, &flags).unwrap();
        let rows: Vec<Vec<bool>> = flags.chunks(w).map(|r| r.to_vec()).collect();
        let got = find_blocking_path(&field, window).unwrap();
        prop_assert_eq!(got.as_ref().map(BlockingPath::len), longest_by_enumeration(&rows));
        if let Some(path) = got {
            prop_assert!(path.validate(&field, window).is_ok());
        }
    }
}

/// The six good-box conditions by brute force.
fn naive_conditions(g: &Grid, b: Rect, gp: &GoodBoxParams) -> [bool; 6] {
    let closed: Vec<(i64, i64)> = b.cells().filter(|&(x, y)| g.closed_at(x, y)).collect();
    let pairs = || closed.iter().enumerate().flat_map(|(i, a)| closed[i + 1..].iter().map(move |c| (*a, *c)));
    let g1 = pairs().all(|(a, c)| (a.0 - c.0).abs().max((a.1 - c.1).abs()) >= gp.margin as i64);
    let g2 = closed.iter().all(|&(x, y)| {
        Direction::ALL.iter().all(|d| {
            let (dx, dy) = d.delta();
            (1..=gp.reach as i64).any(|k| b.contains(x + k * dx, y + k * dy) && g.occupied_at(x + k * dx, y + k * dy))
        })
    });
    let len = gp.interval as i64;
    let runs_ok = |cells: Vec<(i64, i64)>| cells.windows(len as usize).all(|win| win.iter().any(|&(x, y)| g.occupied_at(x, y)));
    let g3 = (b.y0..b.y1()).all(|y| runs_ok((b.x0..b.x1()).map(|x| (x, y)).collect()))
        && (b.x0..b.x1()).all(|x| runs_ok((b.y0..b.y1()).map(|y| (x, y)).collect()));
    let (sw, sh) = (gp.strip_w as i64, gp.strip_h as i64);
    let mut g4 = true;
    for y in b.y0..=b.y1() - sh {
        for x in b.x0..=b.x1() - sw {
            let n = closed.iter().filter(|c| c.0 >= x && c.0 < x + sw && c.1 >= y && c.1 < y + sh).count();
            g4 &= n <= gp.closed_cap;
        }
    }
    let g5 = closed.iter().all(|&(x, y)| {
        let d = (x - b.x0).min(b.x1() - 1 - x).min(y - b.y0).min(b.y1() - 1 - y);
        d >= gp.margin as i64
    });
    let g6 = pairs().all(|(a, c)| a.0 != c.0 && a.1 != c.1);
    [g1, g2, g3, g4, g5, g6]
}

fn witness_is_genuine(g: &Grid, b: Rect, gp: &GoodBoxParams, w: &GoodWitness) -> bool {
    match *w {
        GoodWitness::CloseClosed { a, b: c } => {
            g.closed_at(a.0, a.1) && g.closed_at(c.0, c.1) && (a.0 - c.0).abs().max((a.1 - c.1).abs()) < gp.margin as i64
        }
        GoodWitness::Unguarded { cell, dir } => {
            let (dx, dy) = dir.delta();
            g.closed_at(cell.0, cell.1)
                && (1..=gp.reach as i64).all(|k| {
                    let (x, y) = (cell.0 + k * dx, cell.1 + k * dy);
                    !b.contains(x, y) || !g.occupied_at(x, y)
                })
        }
        GoodWitness::EmptyRun { start, vertical, len } => (0..len as i64).all(|k| {
            let (x, y) = if vertical { (start.0, start.1 + k) } else { (start.0 + k, start.1) };
            b.contains(x, y) && !g.occupied_at(x, y)
        }),
        GoodWitness::CrowdedStrip { strip, count } => {
            b.contains_rect(&strip) && count > gp.closed_cap && strip.cells().filter(|&(x, y)| g.closed_at(x, y)).count() == count
        }
        GoodWitness::NearBoundary { cell, distance } => {
            g.closed_at(cell.0, cell.1) && distance == boundary_distance(b, cell) && distance < gp.margin as i64
        }
        GoodWitness::SharedLine { a, b: c } => {
            a != c && g.closed_at(a.0, a.1) && g.closed_at(c.0, c.1) && (a.0 == c.0 || a.1 == c.1)
        }
    }
}

prop_compose! {
    fn arb_good_case()(side in 6i64..24, reach in 1usize..6, interval in 2usize..8, strip_w in 2usize..8,
                       strip_h in 2usize..8, cap in 0usize..3, margin in 0usize..5,
                       p in 0.1f64..0.7, q in 0.0f64..0.08, seed in any::<u64>())
        -> (Grid, Rect, GoodBoxParams) {
        let g = sample(side as usize + 4, side as usize + 4, PollutionParams::new(p, q, seed).unwrap(), BoundaryCondition::Free).unwrap();
        let gp = GoodBoxParams { side: side as usize, reach, interval, strip_w, strip_h, closed_cap: cap, margin };
        (g, Rect::new(2, 2, side, side), gp)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn good_report_matches_brute_force(case in arb_good_case()) {
        let (g, b, gp) = case;
        let r = is_good_box(&g, b, &gp).unwrap();
        prop_assert_eq!(r.conditions, naive_conditions(&g, b, &gp));
        for (i, ok) in r.conditions.iter().enumerate() {
            prop_assert_eq!(r.witness(i).is_some(), !ok);
        }
        for w in &r.witnesses {
            prop_assert!(witness_is_genuine(&g, b, &gp, w), "bogus witness {}", w);
        }
    }
}

#[test]
fn good_fixtures_stay_good_when_closed_cells_are_occupied() {
    for seed in 0..40 {
        let fix = good_box_fixture(seed).unwrap();
        assert!(is_good_box(&fix.grid, fix.boxed, &fix.params).unwrap().good());
        for &(x, y) in &fix.closed {
            let g = fix.grid.clone().with(x as usize, y as usize, CellState::Occupied).unwrap();
            let r = is_good_box(&g, fix.boxed, &fix.params).unwrap();
            assert!(r.good(), "seed {seed}, ({x}, {y}): {:?}", r.witnesses);
        }
    }
}

#[test]
fn certificates_from_fixtures_revalidate() {
    for seed in 0..10 {
        let fix = staircase_fixture(seed).unwrap();
        let field = safe_block_field(&fix.grid, &fix.geom, fix.block_window).unwrap();
        for c in field.certificates() {
            c.validate(&fix.grid, &fix.geom).unwrap();
        }
        fix.path.validate(&field, fix.block_window).unwrap();
    }
}

#[test]
fn structure_over_an_empty_lower_region_holds() {
    // no occupied cells anywhere: both completions must agree trivially
    for seed in 0..5 {
        let fix = staircase_fixture(seed).unwrap();
        let mut g = fix.grid.clone();
        for (x, y) in fix.grid.occupied().iter_ones().collect::<Vec<_>>() {
            g.set(x, y, CellState::Open).unwrap();
        }
        let certs: Vec<_> = fix.field.certificates().copied().collect();
        let s = build_blocking_structure(&fix.path, &certs, fix.structure.window).unwrap();
        assert_eq!(s, fix.structure);
        assert_eq!(verify_blocking(&g, &s, fix.geom.m).unwrap(), BlockingVerdict::Holds);
    }
}

#[test]
fn region_a_and_segments_are_disjoint() {
    for seed in 0..10 {
        let s = staircase_fixture(seed).unwrap().structure;
        assert!(s.region_a_size() > 0);
        for (x, y) in s.region_a_cells() {
            assert!(!s.in_segments(x, y));
        }
        // the top row lies in A unless a segment sits on it
        let top = s.window.y1() - 1;
        for x in s.window.x0..s.window.x1() {
            assert!(s.in_region_a(x, top) || s.in_segments(x, top));
        }
    }
}
