//! Seeded invariant suites. The CLI runs them at small counts; the
//! acceptance tests run them at full size.

use std::fmt;

use crate::certificates::blocking::{verify_blocking, BlockingVerdict};
use crate::certificates::fixtures::{good_box_fixture, staircase_fixture};
use crate::certificates::good::{spread_fills_box, verify_spread};
use crate::dynamics::{agree_off, closure, closure_naive, eliminable_sites, eliminate, Rule};
use crate::error::Result;
use crate::lattice::{CellState, Direction, Grid, Rect};
use crate::random::{derive_seed, sample, BoundaryCondition, CounterRng, PollutionParams};

const MAX_EXAMPLES: usize = 5;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub checks: usize,
    pub failed: usize,
    /// The first few failures.
    pub examples: Vec<String>,
}

impl SuiteReport {
    fn new(name: &'static str) -> Self {
        SuiteReport {
            name,
            checks: 0,
            failed: 0,
            examples: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failed += 1;
            if self.examples.len() < MAX_EXAMPLES {
                self.examples.push(what());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failed == 0 && self.checks > 0
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}: {}/{} checks passed", self.name, self.checks - self.failed, self.checks)?;
        for e in &self.examples {
            write!(f, "\n    {e}")?;
        }
        Ok(())
    }
}

/// Random configuration with side in `8..=64`, `p` in `[0.01, 0.5]`,
/// `q` in `[0, 0.2]`.
pub fn random_grid(seed: u64) -> (Grid, PollutionParams) {
    let mut rng = CounterRng::new(seed);
    let w = rng.range(8, 64) as usize;
    let h = rng.range(8, 64) as usize;
    let p = 0.01 + 0.49 * rng.uniform();
    let q = 0.2 * rng.uniform();
    let params = PollutionParams::new(p, q, rng.next_u64()).expect("p + q <= 0.7");
    let g = sample(w, h, params, BoundaryCondition::Free).expect("valid size");
    (g, params)
}

const CONFLUENCE: u64 = 1;
const MONOTONICITY: u64 = 2;
const DOMINATION: u64 = 3;
const ELIMINATION: u64 = 4;
const SPREAD: u64 = 5;
const BLOCKING: u64 = 6;

/// Frontier closure equals the naive synchronous sweep, grids and step counts.
pub fn confluence_suite(grids: usize, seed: u64) -> SuiteReport {
    let mut r = SuiteReport::new("confluence");
    for i in 0..grids as u64 {
        let (g, params) = random_grid(derive_seed(seed, CONFLUENCE, i));
        for rule in Rule::ALL {
            let fast = closure(&g, rule);
            let slow = closure_naive(&g, rule);
            r.check(fast == slow, || format!("grid {i} ({params:?}), {rule}"));
        }
    }
    r
}

/// Adding occupied cells never removes final occupation; adding closed
/// cells never adds it. Pairs share their uniforms.
pub fn monotonicity_suite(pairs: usize, seed: u64) -> SuiteReport {
    let mut r = SuiteReport::new("monotonicity");
    for i in 0..pairs as u64 {
        let mut rng = CounterRng::new(derive_seed(seed, MONOTONICITY, i));
        let (w, h) = (rng.range(8, 64) as usize, rng.range(8, 64) as usize);
        let q = 0.2 * rng.uniform();
        let p1 = 0.01 + 0.3 * rng.uniform();
        let p2 = p1 + 0.2 * rng.uniform();
        let q2 = q + 0.1 * rng.uniform();
        let s = rng.next_u64();
        let grid = |p, q| sample(w, h, PollutionParams::new(p, q, s).unwrap(), BoundaryCondition::Free).unwrap();
        let (base, more_occ, more_closed) = (grid(p1, q), grid(p2, q), grid(p1, q2));
        for rule in Rule::ALL {
            let f = closure(&base, rule).grid;
            let up = closure(&more_occ, rule).grid;
            let down = closure(&more_closed, rule).grid;
            r.check(f.occupied().is_subset_of(up.occupied()), || format!("pair {i}, {rule}: raising p lost occupation"));
            r.check(down.occupied().is_subset_of(f.occupied()), || format!("pair {i}, {rule}: raising q added occupation"));
        }
    }
    r
}

/// Final occupied sets nest: Modified, then Modified-plus-vertical, then Standard.
pub fn domination_suite(grids: usize, seed: u64) -> SuiteReport {
    let mut r = SuiteReport::new("domination");
    for i in 0..grids as u64 {
        let (g, _) = random_grid(derive_seed(seed, DOMINATION, i));
        let m = closure(&g, Rule::Modified).grid;
        let v = closure(&g, Rule::ModifiedPlusVertical).grid;
        let s = closure(&g, Rule::Standard).grid;
        r.check(m.occupied().is_subset_of(v.occupied()), || format!("grid {i}: modified not inside plus-vertical"));
        r.check(v.occupied().is_subset_of(s.occupied()), || format!("grid {i}: plus-vertical not inside standard"));
    }
    r
}

/// Three columns: occupied flanks, and an open middle column capped by
/// closed cells at both ends.
pub fn chimney_fixture(height: usize) -> Grid {
    let mut g = Grid::new(3, height).expect("height >= 1");
    let h = height as i64;
    g.fill_rect(Rect::new(0, 0, 1, h), CellState::Occupied);
    g.fill_rect(Rect::new(2, 0, 1, h), CellState::Occupied);
    g.put(1, 0, CellState::Closed);
    g.put(1, height - 1, CellState::Closed);
    g
}

/// Modified leaves the chimney open; Standard and Modified-plus-vertical
/// fill it.
pub fn chimney_suite() -> SuiteReport {
    let mut r = SuiteReport::new("chimney");
    for h in [3, 4, 10, 65, 130] {
        let g = chimney_fixture(h);
        let inner = 1..h - 1;
        let m = closure(&g, Rule::Modified).grid;
        r.check(inner.clone().all(|y| m.state(1, y) == CellState::Open), || format!("height {h}: modified entered"));
        let s = closure(&g, Rule::Standard).grid;
        r.check(inner.clone().all(|y| s.is_occupied(1, y)), || format!("height {h}: standard did not fill"));
        let v = closure(&g, Rule::ModifiedPlusVertical).grid;
        r.check(inner.clone().all(|y| v.state(1, y) == CellState::Open), || {
            format!("height {h}: plus-vertical entered")
        });
    }
    r
}

/// Every eliminable closed cell can be made occupied without changing the
/// final configuration anywhere else.
pub fn elimination_suite(grids: usize, seed: u64) -> SuiteReport {
    let mut r = SuiteReport::new("elimination");
    for i in 0..grids as u64 {
        let (g, _) = random_grid(derive_seed(seed, ELIMINATION, i));
        for rule in Rule::ALL {
            let base = closure(&g, rule).grid;
            for (x, y) in eliminable_sites(&g, rule) {
                let ok = eliminate(&g, rule, x, y)
                    .map(|e| agree_off(&closure(&e, rule).grid, &base, x, y))
                    .unwrap_or(false);
                r.check(ok, || format!("grid {i}, {rule}: finals differ off ({x}, {y})"));
            }
        }
    }
    r
}

/// Good boxes fill from every side; boxes with a broken northern guard do
/// not fill from the south.
pub fn spread_suite(good: usize, broken: usize, seed: u64) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("spread");
    for i in 0..good.max(broken) as u64 {
        let fix = good_box_fixture(derive_seed(seed, SPREAD, i))?;
        if (i as usize) < good {
            for side in Direction::ALL {
                let ok = verify_spread(&fix.grid, fix.boxed, &fix.params, side)?;
                r.check(ok, || format!("fixture {i}: no spread from {}", side.name()));
            }
        }
        if (i as usize) < broken {
            let ok = !spread_fills_box(&fix.without_north_guard(), fix.boxed, Direction::South)?;
            r.check(ok, || format!("fixture {i}: spread despite the broken guard"));
        }
    }
    Ok(r)
}

/// Staircases satisfying the cluster bound hold; sabotaged copies are caught.
pub fn blocking_suite(staircases: usize, sabotaged: usize, seed: u64) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("blocking");
    for i in 0..staircases.max(sabotaged) as u64 {
        let fix = staircase_fixture(derive_seed(seed, BLOCKING, i))?;
        let m = fix.geom.m;
        if (i as usize) < staircases {
            let v = verify_blocking(&fix.grid, &fix.structure, m)?;
            r.check(v == BlockingVerdict::Holds, || format!("staircase {i}: {v}"));
        }
        if (i as usize) < sabotaged {
            let g = fix.sabotaged(i)?;
            let v = verify_blocking(&g, &fix.structure, m)?;
            r.check(matches!(v, BlockingVerdict::Violated { .. }), || format!("sabotaged staircase {i}: {v}"));
        }
    }
    Ok(r)
}

/// Every suite at the given scale (1 = full size).
pub fn run_all(divisor: usize, seed: u64) -> Result<Vec<SuiteReport>> {
    let n = |full: usize| (full / divisor.max(1)).max(1);
    Ok(vec![
        confluence_suite(n(1000), seed),
        monotonicity_suite(n(500), seed),
        domination_suite(n(500), seed),
        chimney_suite(),
        elimination_suite(n(500), seed),
        spread_suite(n(100), n(20), seed)?,
        blocking_suite(n(50), n(10), seed)?,
    ])
}
