//! Seeded polluted initial configurations.
//!
//! Every cell draws one uniform `u` from a counter-based generator keyed by
//! `(seed, cell index)`: the SplitMix64 output function applied to
//! `seed + (index + 1) * GOLDEN_GAMMA`. The cell is closed iff `u < q` and
//! occupied iff `u >= 1 - p`, so raising `q` only adds closed cells and
//! raising `p` only adds occupied ones. Grids are bit-identical across
//! platforms and thread schedules.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lattice::{CellState, Grid, Rect};

/// SplitMix64 increment (the odd integer closest to 2^64 / phi).
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function (Stafford variant 13); a bijection on `u64`.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Word `counter` of the stream keyed by `seed`.
#[inline]
pub fn counter_u64(seed: u64, counter: u64) -> u64 {
    mix64(seed.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Uniform in `[0, 1)` with 53 random bits.
#[inline]
pub fn counter_uniform(seed: u64, counter: u64) -> f64 {
    (counter_u64(seed, counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Seed for trial `trial` of experiment `experiment`.
///
/// For fixed `(master, experiment)` the map `trial -> seed` is a bijection on
/// `u64`, so no two trials share a seed.
pub fn derive_seed(master: u64, experiment: u64, trial: u64) -> u64 {
    let base = mix64(master ^ mix64(experiment.wrapping_add(GOLDEN_GAMMA)));
    mix64(base.wrapping_add(trial.wrapping_mul(GOLDEN_GAMMA)))
}

/// Sequential stream over the counter generator, for fixture construction.
#[derive(Clone, Debug)]
pub struct CounterRng {
    seed: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed, counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = counter_u64(self.seed, self.counter);
        self.counter += 1;
        v
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn range(&mut self, lo: i64, hi: i64) -> i64 {
        assert!(lo <= hi);
        let span = (hi - lo) as u64 + 1;
        lo + (self.next_u64() % span) as i64
    }

    pub fn chance(&mut self, prob: f64) -> bool {
        self.uniform() < prob
    }
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct PollutionParams {
    pub p: f64,
    pub q: f64,
    pub seed: u64,
}

impl PollutionParams {
    pub fn new(p: f64, q: f64, seed: u64) -> Result<Self> {
        let params = PollutionParams { p, q, seed };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        validate_pq(self.p, self.q)
    }
}

/// Rounding slack allowed on `p + q <= 1`.
const SUM_SLACK: f64 = 1e-12;

pub fn validate_pq(p: f64, q: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParams(format!(
            "probabilities must lie in [0, 1], got p={p}, q={q}"
        )));
    }
    if p + q > 1.0 + SUM_SLACK {
        return Err(Error::InvalidParams(format!(
            "p + q must not exceed 1, got p={p}, q={q}"
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub enum BoundaryCondition {
    #[default]
    Free,
    /// The outermost frame of cells is forced occupied after sampling.
    OccupiedRing,
}

impl BoundaryCondition {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryCondition::Free => "free",
            BoundaryCondition::OccupiedRing => "ring",
        }
    }

    pub fn apply(self, g: &mut Grid) {
        if self == BoundaryCondition::OccupiedRing {
            let (w, h) = (g.width() as i64, g.height() as i64);
            g.fill_rect(Rect::new(0, 0, w, 1), CellState::Occupied);
            g.fill_rect(Rect::new(0, h - 1, w, 1), CellState::Occupied);
            g.fill_rect(Rect::new(0, 0, 1, h), CellState::Occupied);
            g.fill_rect(Rect::new(w - 1, 0, 1, h), CellState::Occupied);
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "free" => Ok(BoundaryCondition::Free),
            "ring" | "occupied-ring" | "occupiedring" => Ok(BoundaryCondition::OccupiedRing),
            other => Err(Error::Argument(format!("unknown boundary condition {other:?}"))),
        }
    }
}

#[inline]
fn classify(u: f64, p: f64, q: f64) -> CellState {
    if u < q {
        CellState::Closed
    } else if u >= 1.0 - p {
        CellState::Occupied
    } else {
        CellState::Open
    }
}

pub fn sample(width: usize, height: usize, params: PollutionParams, bc: BoundaryCondition) -> Result<Grid> {
    params.validate()?;
    let mut grids = sample_coupled(width, height, params.p, &[params.q], params.seed, bc)?;
    Ok(grids.pop().expect("one grid per q"))
}

/// One grid per entry of `qs`, all driven by the same per-cell uniforms.
pub fn sample_coupled(
    width: usize,
    height: usize,
    p: f64,
    qs: &[f64],
    seed: u64,
    bc: BoundaryCondition,
) -> Result<Vec<Grid>> {
    for &q in qs {
        validate_pq(p, q)?;
    }
    let mut grids = qs
        .iter()
        .map(|_| Grid::new(width, height))
        .collect::<Result<Vec<_>>>()?;
    for y in 0..height {
        for x in 0..width {
            let u = counter_uniform(seed, (y * width + x) as u64);
            for (g, &q) in grids.iter_mut().zip(qs) {
                match classify(u, p, q) {
                    CellState::Open => {}
                    s => g.put(x, y, s),
                }
            }
        }
    }
    for g in &mut grids {
        bc.apply(g);
    }
    Ok(grids)
}
