//! Monte Carlo measurements: occupation of a target cell, coupled scans in
//! `q`, threshold bisection, rule comparison and good-box windows.
//!
//! Trial `t` of every occupation estimate draws its grid from
//! `derive_seed(master, OCCUPATION_EXPERIMENT, t)`, whatever `p`, `q` and the
//! rule are. Estimates at different `q` therefore share their uniforms and
//! are monotone sample by sample. Trials run in parallel; only hit counts
//! are aggregated, so results do not depend on scheduling.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crate::certificates::counter::RectCounter;
use crate::certificates::good::{good_report_with, GoodBoxParams};
use crate::dynamics::{closure, Rule};
use crate::error::{Error, Result};
use crate::lattice::{Rect, UnionFind};
use crate::random::{derive_seed, sample, sample_coupled, validate_pq, BoundaryCondition, PollutionParams};
use crate::stats::Proportion;

pub const OCCUPATION_EXPERIMENT: u64 = 0x0CC0;
pub const GOOD_WINDOW_EXPERIMENT: u64 = 0x600E;

/// Environment variable overriding the memory budget, in bytes.
pub const MEMORY_BUDGET_ENV: &str = "BOOTPERC_MEMORY_BUDGET";
pub const DEFAULT_MEMORY_BUDGET: u64 = 4 << 30;

/// Working-set estimate per cell: bit-planes, closure scratch and the
/// summed-area tables used by the certificate checks.
const BYTES_PER_CELL: u64 = 6;

pub fn memory_budget() -> Result<u64> {
    match std::env::var(MEMORY_BUDGET_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParams(format!("{MEMORY_BUDGET_ENV}={v:?} is not a byte count"))),
        Err(_) => Ok(DEFAULT_MEMORY_BUDGET),
    }
}

/// Refuses grids whose working set would exceed the memory budget.
pub fn check_memory(cells: u64) -> Result<()> {
    let budget = memory_budget()?;
    let needed = cells.saturating_mul(BYTES_PER_CELL);
    if needed > budget {
        return Err(Error::MemoryBudget { needed, budget });
    }
    Ok(())
}

/// `ceil(8/p * ln(1/p))`, the default box side for threshold work.
pub fn default_side(p: f64) -> Result<usize> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParams(format!("default L needs 0 < p < 1, got {p}")));
    }
    Ok((8.0 / p * (1.0 / p).ln()).ceil() as usize)
}

/// `p^2 / ln(1/p)^beta`, the unit of the `q` axis.
pub fn q_unit(p: f64, beta: f64) -> f64 {
    p * p / (1.0 / p).ln().powf(beta)
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct TrialSpec {
    pub rule: Rule,
    pub side: usize,
    pub p: f64,
    pub q: f64,
    pub bc: BoundaryCondition,
    pub trials: usize,
    pub master_seed: u64,
    /// Defaults to the centre cell `(side/2, side/2)`.
    pub target: Option<(usize, usize)>,
}

impl TrialSpec {
    pub fn target(&self) -> (usize, usize) {
        self.target.unwrap_or((self.side / 2, self.side / 2))
    }

    pub fn validate(&self) -> Result<()> {
        validate_pq(self.p, self.q)?;
        if self.trials == 0 {
            return Err(Error::InvalidParams("trials must be at least 1".into()));
        }
        if self.side == 0 {
            return Err(Error::InvalidParams("L must be at least 1".into()));
        }
        let (x, y) = self.target();
        if x >= self.side || y >= self.side {
            return Err(Error::InvalidParams(format!("target ({x}, {y}) is outside the {0}x{0} box", self.side)));
        }
        check_memory((self.side * self.side) as u64)
    }

    /// The target's fate is certain: everything starts occupied, or nothing
    /// ever can be.
    fn degenerate(&self) -> bool {
        self.p == 1.0 || (self.p == 0.0 && self.bc == BoundaryCondition::Free)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub beta_label: String,
    pub rule: Rule,
    pub side: usize,
    pub bc: BoundaryCondition,
    pub trials: u64,
    pub hits: u64,
    pub fraction: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Wall-clock time; left out of CSV output unless timing is requested.
    pub seconds: Option<f64>,
}

pub const SCAN_HEADER: &str = "p,q,alpha,beta,rule,L,bc,trials,hits,fraction,ci_low,ci_high,seconds";

impl ScanRow {
    fn new(spec: &TrialSpec, alpha: f64, beta_label: &str, est: Proportion, seconds: f64) -> Self {
        ScanRow {
            p: spec.p,
            q: spec.q,
            alpha,
            beta_label: beta_label.to_string(),
            rule: spec.rule,
            side: spec.side,
            bc: spec.bc,
            trials: est.trials,
            hits: est.hits,
            fraction: est.fraction,
            ci_low: est.ci_low,
            ci_high: est.ci_high,
            seconds: Some(seconds),
        }
    }

    pub fn estimate(&self) -> Proportion {
        Proportion {
            hits: self.hits,
            trials: self.trials,
            fraction: self.fraction,
            ci_low: self.ci_low,
            ci_high: self.ci_high,
        }
    }

    pub fn csv_line(&self, timing: bool) -> String {
        let seconds = match (timing, self.seconds) {
            (true, Some(s)) => s.to_string(),
            _ => String::new(),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.p,
            self.q,
            self.alpha,
            self.beta_label,
            self.rule,
            self.side,
            self.bc,
            self.trials,
            self.hits,
            self.fraction,
            self.ci_low,
            self.ci_high,
            seconds
        )
    }
}

/// Header plus one line per row, `\n`-terminated. Without `timing` the
/// seconds column is left empty so reruns are byte-identical.
pub fn scan_csv(rows: &[ScanRow], timing: bool) -> String {
    let mut out = format!("{SCAN_HEADER}\n");
    for r in rows {
        out.push_str(&r.csv_line(timing));
        out.push('\n');
    }
    out
}

fn proportion(hits: u64, trials: u64, degenerate: bool) -> Proportion {
    if degenerate {
        Proportion::exact(hits, trials)
    } else {
        Proportion::wilson(hits, trials)
    }
}

/// Per-`q` hit counts over trials `0..trials`, one coupled grid family per trial.
fn coupled_hits(spec: &TrialSpec, qs: &[f64]) -> Result<Vec<u64>> {
    let (tx, ty) = spec.target();
    (0..spec.trials as u64)
        .into_par_iter()
        .map(|t| -> Result<Vec<u64>> {
            let seed = derive_seed(spec.master_seed, OCCUPATION_EXPERIMENT, t);
            let grids = sample_coupled(spec.side, spec.side, spec.p, qs, seed, spec.bc)?;
            Ok(grids
                .iter()
                .map(|g| closure(g, spec.rule).grid.is_occupied(tx, ty) as u64)
                .collect())
        })
        .try_reduce(
            || vec![0; qs.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )
}

/// Fraction of trials in which the target ends occupied.
pub fn estimate_occupation(spec: &TrialSpec) -> Result<ScanRow> {
    spec.validate()?;
    let start = Instant::now();
    let hits = coupled_hits(spec, &[spec.q])?[0];
    let est = proportion(hits, spec.trials as u64, spec.degenerate());
    let alpha = spec.q / q_unit(spec.p, 1.0);
    Ok(ScanRow::new(spec, alpha, "1", est, start.elapsed().as_secs_f64()))
}

/// One row per `alpha`, at `q = alpha * p^2 / ln(1/p)^beta`, all rows coupled.
#[allow(clippy::too_many_arguments)]
pub fn scan_q(
    p: f64,
    alphas: &[f64],
    beta: f64,
    rule: Rule,
    side: usize,
    bc: BoundaryCondition,
    trials: usize,
    master_seed: u64,
) -> Result<Vec<ScanRow>> {
    if alphas.is_empty() {
        return Err(Error::InvalidParams("no alpha values to scan".into()));
    }
    let unit = q_unit(p, beta);
    let qs: Vec<f64> = alphas.iter().map(|a| a * unit).collect();
    let mut base = TrialSpec {
        rule,
        side,
        p,
        q: 0.0,
        bc,
        trials,
        master_seed,
        target: None,
    };
    for &q in &qs {
        if !q.is_finite() {
            return Err(Error::InvalidParams(format!("q is not finite for p={p}, beta={beta}")));
        }
        TrialSpec { q, ..base }.validate()?;
    }
    let start = Instant::now();
    let hits = coupled_hits(&base, &qs)?;
    let seconds = start.elapsed().as_secs_f64();
    let label = beta.to_string();
    Ok(alphas
        .iter()
        .zip(qs)
        .zip(hits)
        .map(|((&alpha, q), h)| {
            base.q = q;
            let est = proportion(h, trials as u64, base.degenerate());
            ScanRow::new(&base, alpha, &label, est, seconds)
        })
        .collect())
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub enum QcOutcome {
    Threshold {
        q_hat: f64,
        lo: f64,
        hi: f64,
        /// Fraction evaluations spent, counting escalations.
        evaluations: usize,
    },
    /// The fraction never crosses 1/2 inside `[0, 1 - p]`.
    NoThreshold { fraction_at_zero: f64, fraction_at_max: Option<f64> },
}

impl QcOutcome {
    pub fn q_hat(&self) -> Option<f64> {
        match *self {
            QcOutcome::Threshold { q_hat, .. } => Some(q_hat),
            QcOutcome::NoThreshold { .. } => None,
        }
    }

    pub fn bracket(&self) -> Option<(f64, f64)> {
        match *self {
            QcOutcome::Threshold { lo, hi, .. } => Some((lo, hi)),
            QcOutcome::NoThreshold { .. } => None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct BisectionConfig {
    pub p: f64,
    pub trials: usize,
    /// Escalation stops once this many trials have been used at one `q`.
    pub max_trials: usize,
    pub tol: f64,
}

/// Bisection for the `q` where `fraction(q, trials)` crosses 1/2.
///
/// The upper end starts at `p^2/ln(1/p)` and doubles up to `1 - p`. A
/// point counts as above 1/2 when its interval midpoint is; while the
/// interval straddles 1/2 the trial count doubles up to `max_trials`.
pub fn bisect_threshold<F>(cfg: BisectionConfig, mut fraction: F) -> Result<QcOutcome>
where
    F: FnMut(f64, usize) -> Result<Proportion>,
{
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidParams(format!("tol must be positive, got {}", cfg.tol)));
    }
    if !(cfg.p > 0.0 && cfg.p < 1.0) {
        return Err(Error::InvalidParams(format!("bisection needs 0 < p < 1, got {}", cfg.p)));
    }
    if cfg.trials == 0 {
        return Err(Error::InvalidParams("trials must be at least 1".into()));
    }
    let mut evaluations = 0;
    let mut above = |q: f64, fraction: &mut F| -> Result<(bool, f64)> {
        let mut t = cfg.trials;
        let mut est = fraction(q, t)?;
        evaluations += 1;
        while est.straddles(0.5) && t * 2 <= cfg.max_trials {
            t *= 2;
            est = fraction(q, t)?;
            evaluations += 1;
        }
        Ok((est.midpoint() >= 0.5, est.fraction))
    };

    let (at_zero_above, at_zero) = above(0.0, &mut fraction)?;
    if !at_zero_above {
        return Ok(QcOutcome::NoThreshold {
            fraction_at_zero: at_zero,
            fraction_at_max: None,
        });
    }
    let q_max = 1.0 - cfg.p;
    let mut lo = 0.0;
    let mut hi = q_unit(cfg.p, 1.0).min(q_max);
    loop {
        let (is_above, f) = above(hi, &mut fraction)?;
        if !is_above {
            break;
        }
        if hi >= q_max {
            return Ok(QcOutcome::NoThreshold {
                fraction_at_zero: at_zero,
                fraction_at_max: Some(f),
            });
        }
        lo = hi;
        hi = (2.0 * hi).min(q_max);
    }
    while hi - lo > cfg.tol * 0.5 * (lo + hi) {
        let mid = 0.5 * (lo + hi);
        if above(mid, &mut fraction)?.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(QcOutcome::Threshold {
        q_hat: 0.5 * (lo + hi),
        lo,
        hi,
        evaluations,
    })
}

/// Threshold in `q` for the target of an `L x L` box, by coupled Monte Carlo.
#[allow(clippy::too_many_arguments)]
pub fn estimate_qc(
    p: f64,
    rule: Rule,
    side: usize,
    bc: BoundaryCondition,
    trials: usize,
    max_trials: usize,
    master_seed: u64,
    tol: f64,
) -> Result<QcOutcome> {
    let base = TrialSpec {
        rule,
        side,
        p,
        q: 0.0,
        bc,
        trials,
        master_seed,
        target: None,
    };
    base.validate()?;
    let cfg = BisectionConfig {
        p,
        trials,
        max_trials: max_trials.max(trials),
        tol,
    };
    bisect_threshold(cfg, |q, t| {
        Ok(estimate_occupation(&TrialSpec { q, trials: t, ..base })?.estimate())
    })
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct CompareRow {
    pub p: f64,
    pub side: usize,
    pub standard: QcOutcome,
    pub modified: QcOutcome,
}

impl CompareRow {
    /// `q_hat(Standard) / q_hat(Modified)` when both thresholds exist.
    pub fn ratio(&self) -> Option<f64> {
        Some(self.standard.q_hat()? / self.modified.q_hat()?)
    }

    /// The Standard bracket lies entirely at or above the Modified one.
    pub fn ordered_by_interval(&self) -> bool {
        match (self.standard.bracket(), self.modified.bracket()) {
            (Some((s_lo, _)), Some((_, m_hi))) => s_lo >= m_hi,
            // no Modified crossing while Standard has one: Modified never reaches 1/2
            (Some(_), None) => matches!(self.modified, QcOutcome::NoThreshold { fraction_at_max: None, .. }),
            _ => false,
        }
    }
}

pub const COMPARE_HEADER: &str = "p,L,q_hat_standard,lo_standard,hi_standard,q_hat_modified,lo_modified,hi_modified,ratio";

pub fn compare_csv(rows: &[CompareRow]) -> String {
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = format!("{COMPARE_HEADER}\n");
    for r in rows {
        let (s, m) = (r.standard.bracket(), r.modified.bracket());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.p,
            r.side,
            cell(r.standard.q_hat()),
            cell(s.map(|b| b.0)),
            cell(s.map(|b| b.1)),
            cell(r.modified.q_hat()),
            cell(m.map(|b| b.0)),
            cell(m.map(|b| b.1)),
            cell(r.ratio())
        );
    }
    out
}

/// Thresholds for both rules at each `p`, with identical seeds and box sides.
pub fn compare_rules<S>(
    ps: &[f64],
    side_for: S,
    bc: BoundaryCondition,
    trials: usize,
    max_trials: usize,
    master_seed: u64,
    tol: f64,
) -> Result<Vec<CompareRow>>
where
    S: Fn(f64) -> Result<usize>,
{
    ps.iter()
        .map(|&p| {
            let side = side_for(p)?;
            let run = |rule| estimate_qc(p, rule, side, bc, trials, max_trials, master_seed, tol);
            Ok(CompareRow {
                p,
                side,
                standard: run(Rule::Standard)?,
                modified: run(Rule::Modified)?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GoodWindow {
    pub params: GoodBoxParams,
    /// Good boxes among all boxes of all trials.
    pub density: Proportion,
    /// Mean over trials of the largest 4-connected good component,
    /// as a fraction of the window's boxes.
    pub largest_component: f64,
}

fn largest_component(good: &[bool], w: usize, h: usize) -> usize {
    let mut uf = UnionFind::new(w * h);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !good[i] {
                continue;
            }
            if x + 1 < w && good[i + 1] {
                uf.union(i, i + 1);
            }
            if y + 1 < h && good[i + w] {
                uf.union(i, i + w);
            }
        }
    }
    (0..w * h).filter(|&i| good[i]).map(|i| uf.set_size(i)).max().unwrap_or(0)
}

/// Samples `trials` grids tiled by `window.0 x window.1` boxes of the
/// derived side and reports how many are good and how well they connect.
pub fn good_box_window(
    gp: &GoodBoxParams,
    params: PollutionParams,
    window: (usize, usize),
    trials: usize,
) -> Result<GoodWindow> {
    gp.check()?;
    params.validate()?;
    let (bw, bh) = window;
    if bw == 0 || bh == 0 || trials == 0 {
        return Err(Error::InvalidParams("window and trials must be non-empty".into()));
    }
    let (w, h) = (bw * gp.side, bh * gp.side);
    check_memory((w as u64).saturating_mul(h as u64))?;
    let boxes = bw * bh;
    let (good, largest) = (0..trials as u64)
        .into_par_iter()
        .map(|t| -> Result<(u64, u64)> {
            let seed = derive_seed(params.seed, GOOD_WINDOW_EXPERIMENT, t);
            let g = sample(w, h, PollutionParams { seed, ..params }, BoundaryCondition::Free)?;
            let closed = RectCounter::new(g.closed());
            let s = gp.side as i64;
            let flags: Vec<bool> = (0..boxes)
                .map(|i| {
                    let b = Rect::new((i % bw) as i64 * s, (i / bw) as i64 * s, s, s);
                    good_report_with(&g, &closed, b, gp).good()
                })
                .collect();
            let count = flags.iter().filter(|&&f| f).count() as u64;
            Ok((count, largest_component(&flags, bw, bh) as u64))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    Ok(GoodWindow {
        params: *gp,
        density: Proportion::wilson(good, (boxes * trials) as u64),
        largest_component: largest as f64 / (boxes * trials) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(p: f64, q: f64) -> TrialSpec {
        TrialSpec {
            rule: Rule::Modified,
            side: 31,
            p,
            q,
            bc: BoundaryCondition::Free,
            trials: 40,
            master_seed: 5,
            target: None,
        }
    }

    #[test]
    fn degenerate_laws_are_exact() {
        let one = estimate_occupation(&spec(1.0, 0.0)).unwrap();
        assert_eq!((one.fraction, one.ci_low, one.ci_high), (1.0, 1.0, 1.0));
        let zero = estimate_occupation(&spec(0.0, 0.3)).unwrap();
        assert_eq!((zero.fraction, zero.ci_low, zero.ci_high), (0.0, 0.0, 0.0));
    }

    #[test]
    fn invalid_specs() {
        assert!(estimate_occupation(&TrialSpec { trials: 0, ..spec(0.1, 0.0) }).is_err());
        assert!(estimate_occupation(&TrialSpec { target: Some((31, 0)), ..spec(0.1, 0.0) }).is_err());
        assert!(estimate_occupation(&spec(0.7, 0.4)).is_err());
        assert!(scan_q(0.5, &[1.0, 100.0], 1.0, Rule::Modified, 10, BoundaryCondition::Free, 5, 1).is_err());
    }

    #[test]
    fn default_side_matches_formula() {
        assert_eq!(default_side(0.1).unwrap(), 185);
        assert!(default_side(0.0).is_err());
    }

    #[test]
    fn scan_is_monotone_and_deterministic() {
        let run = || {
            scan_q(0.2, &[0.0, 1.0, 4.0, 16.0], 1.0, Rule::Modified, 25, BoundaryCondition::OccupiedRing, 30, 9)
                .unwrap()
        };
        let rows = run();
        for w in rows.windows(2) {
            assert!(w[0].hits >= w[1].hits);
        }
        assert_eq!(rows[0].fraction, 1.0);
        assert_eq!(scan_csv(&rows, false), scan_csv(&run(), false));
        let csv = scan_csv(&rows, false);
        assert!(csv.starts_with(SCAN_HEADER));
        assert!(csv.lines().nth(1).unwrap().starts_with("0.2,0,0,1,modified,25,ring,30,30,1,"));
        assert!(csv.lines().nth(1).unwrap().ends_with(','));
    }

    #[test]
    fn bisection_finds_step() {
        let q_star = 0.003;
        let cfg = BisectionConfig {
            p: 0.1,
            trials: 10,
            max_trials: 80,
            tol: 0.05,
        };
        let out = bisect_threshold(cfg, |q, t| Ok(Proportion::exact((q < q_star) as u64 * t as u64, t as u64))).unwrap();
        let QcOutcome::Threshold { q_hat, lo, hi, .. } = out else {
            panic!("{out:?}")
        };
        assert!(lo <= q_hat && q_hat <= hi);
        assert!(hi - lo <= 0.05 * q_hat);
        assert!((q_hat - q_star).abs() <= 0.05 * q_star);
    }

    #[test]
    fn bisection_reports_missing_threshold() {
        let cfg = BisectionConfig {
            p: 0.1,
            trials: 10,
            max_trials: 10,
            tol: 0.1,
        };
        let low = bisect_threshold(cfg, |_, t| Ok(Proportion::exact(0, t as u64))).unwrap();
        assert!(matches!(low, QcOutcome::NoThreshold { fraction_at_max: None, .. }));
        let high = bisect_threshold(cfg, |_, t| Ok(Proportion::exact(t as u64, t as u64))).unwrap();
        assert!(matches!(high, QcOutcome::NoThreshold { fraction_at_max: Some(_), .. }));
        assert!(bisect_threshold(BisectionConfig { tol: 0.0, ..cfg }, |_, t| Ok(Proportion::exact(0, t as u64))).is_err());
    }

    #[test]
    fn escalation_doubles_trials() {
        let cfg = BisectionConfig {
            p: 0.1,
            trials: 10,
            max_trials: 40,
            tol: 0.5,
        };
        let mut seen = Vec::new();
        let _ = bisect_threshold(cfg, |q, t| {
            seen.push(t);
            // a fair coin everywhere except q = 0
            Ok(if q == 0.0 { Proportion::exact(t as u64, t as u64) } else { Proportion::wilson(t as u64 / 2, t as u64) })
        });
        assert_eq!(&seen[..4], &[10, 10, 20, 40]);
    }

    #[test]
    fn good_window_without_closed_sites() {
        let gp = GoodBoxParams::from_params(3, 0.15).unwrap();
        let out = good_box_window(&gp, PollutionParams::new(0.6, 0.0, 2).unwrap(), (3, 2), 4).unwrap();
        assert_eq!(out.density.fraction, 1.0);
        assert_eq!(out.largest_component, 1.0);
        let one = good_box_window(&gp, PollutionParams::new(0.15, 0.001, 2).unwrap(), (1, 1), 30).unwrap();
        assert_eq!(one.density.fraction, one.largest_component);
    }

    #[test]
    fn components() {
        let g = [true, false, true, true, true, false, false, false, true];
        assert_eq!(largest_component(&g, 3, 3), 3);
        assert_eq!(largest_component(&[false; 4], 2, 2), 0);
    }
}
