//! Command-line front end. Exit codes: 0 success, 1 verification failure,
//! 2 usage or parameter error.
//!
//! Any subcommand accepts `--config FILE`: `key=value` lines (`#` starts a
//! comment) are expanded to `--key value` flags placed before the command
//! line's own flags, which therefore take precedence. `key=true` becomes a
//! bare `--key`; `key=false` is dropped.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::certificates::blocking::{build_blocking_structure, find_blocking_path, verify_blocking, BlockingVerdict};
use crate::certificates::fixtures::{good_box_fixture, good_fixture_params, staircase_fixture};
use crate::certificates::good::{
    estimate_good_prob, is_good_box, spread_fills_box, verify_spread, GoodBoxParams,
};
use crate::certificates::safe::{
    estimate_safe_prob, format_certificates, is_safe_block, parse_certificates, safe_block_field, BlockGeometry,
};
use crate::dynamics::{closure, Rule};
use crate::error::{Error, Result};
use crate::experiments::{
    check_memory, compare_csv, compare_rules, default_side, estimate_qc, good_box_window, scan_csv, scan_q,
    QcOutcome,
};
use crate::lattice::{occupied_clusters, Direction, Grid, Rect};
use crate::random::{sample, BoundaryCondition, PollutionParams};
use crate::render::{render_ppm, Palette, Rgb};
use crate::selftest::run_all;

#[derive(Parser, Debug)]
#[command(name = "bootperc", version, about = "Polluted bootstrap percolation laboratory", args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a configuration, run the dynamics and print statistics.
    Simulate(SimulateArgs),
    /// Sample, run the dynamics and write a P6 image.
    Render(RenderArgs),
    /// Coupled occupation scan along q = alpha p^2 / ln(1/p)^beta.
    Scan(ScanArgs),
    /// Bisect for the q where the target's occupation probability crosses 1/2.
    Qc(QcArgs),
    /// Thresholds of the Standard and Modified rules side by side.
    Compare(CompareArgs),
    /// Safe-block probability, or a single block's certificate.
    Safe(SafeArgs),
    /// Good-box probability, a good-box window, or a single box report.
    Good(GoodArgs),
    /// Blocking-structure verification on seeded staircases or a grid file.
    Block(BlockArgs),
    /// Spreading through seeded good boxes.
    Spread(SpreadArgs),
    /// Run the invariant suites.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[arg(long, default_value_t = 0.1)]
    p: f64,
    #[arg(long, default_value_t = 0.01)]
    q: f64,
    /// Box side; defaults to ceil(8/p ln(1/p)).
    #[arg(long = "L", visible_alias = "side")]
    side: Option<usize>,
    #[arg(long, default_value = "modified")]
    rule: Rule,
    #[arg(long, default_value = "free")]
    bc: BoundaryCondition,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Read the initial configuration from a text grid instead of sampling.
    #[arg(long)]
    grid: Option<PathBuf>,
}

impl ModelArgs {
    fn side(&self) -> Result<usize> {
        self.side.map_or_else(|| default_side(self.p), Ok)
    }

    fn initial(&self) -> Result<Grid> {
        if let Some(path) = &self.grid {
            return read_grid(path);
        }
        let side = self.side()?;
        check_memory((side as u64).saturating_mul(side as u64))?;
        sample(side, side, PollutionParams::new(self.p, self.q, self.seed)?, self.bc)
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Write the final configuration as a text grid.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "0,0,0")]
    initial_color: Rgb,
    #[arg(long, default_value = "128,128,128")]
    eventual_color: Rgb,
    #[arg(long, default_value = "255,0,0")]
    closed_color: Rgb,
    #[arg(long, default_value = "255,255,255")]
    open_color: Rgb,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[arg(long)]
    p: f64,
    #[arg(long, value_delimiter = ',', default_value = "0,0.05,0.25,1,5,20")]
    alphas: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value = "modified")]
    rule: Rule,
    #[arg(long = "L", visible_alias = "side")]
    side: Option<usize>,
    #[arg(long, default_value = "free")]
    bc: BoundaryCondition,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fill the seconds column (makes output run-dependent).
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct QcArgs {
    #[arg(long)]
    p: f64,
    #[arg(long, default_value = "modified")]
    rule: Rule,
    #[arg(long = "L", visible_alias = "side")]
    side: Option<usize>,
    #[arg(long, default_value = "free")]
    bc: BoundaryCondition,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 800)]
    max_trials: usize,
    #[arg(long, default_value_t = 0.2)]
    tol: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.12,0.1,0.08")]
    ps: Vec<f64>,
    #[arg(long = "L", visible_alias = "side")]
    side: Option<usize>,
    #[arg(long, default_value = "free")]
    bc: BoundaryCondition,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 800)]
    max_trials: usize,
    #[arg(long, default_value_t = 0.25)]
    tol: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GeometryArgs {
    #[arg(long, default_value_t = 5)]
    m: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 0.2)]
    eps: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Explicit block width; with the other three explicit sizes, replaces
    /// the p-derived geometry.
    #[arg(long)]
    block_w: Option<usize>,
    #[arg(long)]
    block_h: Option<usize>,
    #[arg(long)]
    chimney_h: Option<usize>,
    #[arg(long)]
    bar_w: Option<usize>,
}

impl GeometryArgs {
    fn geometry(&self, p: f64) -> Result<BlockGeometry> {
        match (self.block_w, self.block_h, self.chimney_h, self.bar_w) {
            (Some(w), Some(h), Some(c), Some(b)) => BlockGeometry::desk(self.m, w, h, c, b),
            (None, None, None, None) => BlockGeometry::from_params(self.m, self.k, self.eps, self.delta, p),
            _ => Err(Error::Argument(
                "give all of --block-w, --block-h, --chimney-h, --bar-w or none of them".into(),
            )),
        }
    }
}

#[derive(Args, Debug)]
struct SafeArgs {
    #[arg(long, default_value_t = 0.05)]
    p: f64,
    /// Defaults to 5 p^2 / ln(1/p).
    #[arg(long)]
    q: Option<f64>,
    #[command(flatten)]
    geometry: GeometryArgs,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Check one block of this text grid instead of estimating.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Block index `zx,zy` to check in `--grid`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    block: Option<Vec<usize>>,
    /// Validate every certificate of this file against `--grid`.
    #[arg(long)]
    certs: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GoodArgs {
    #[arg(long, default_value_t = 0.15)]
    p: f64,
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Defaults to p^2 / (ln(1/p) n^4).
    #[arg(long)]
    q: Option<f64>,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Box window `WxH` for the percolation check.
    #[arg(long)]
    window: Option<String>,
    /// Report on one box `x0,y0,w,h` of this text grid.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long = "box", value_delimiter = ',', num_args = 4)]
    boxed: Option<Vec<i64>>,
    /// Use the fixed desk thresholds instead of the (p, n)-derived ones.
    #[arg(long)]
    desk: bool,
}

#[derive(Args, Debug)]
struct BlockArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of consecutive fixture seeds to check.
    #[arg(long, default_value_t = 1)]
    count: u64,
    /// Put an occupied cell just below a pivot, on the vertical core.
    #[arg(long)]
    sabotage: bool,
    /// Write the certificates of the first fixture (or grid) here.
    #[arg(long)]
    certs_out: Option<PathBuf>,
    /// Verify a text grid instead of seeded fixtures; needs explicit geometry.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[command(flatten)]
    geometry: GeometryArgs,
}

#[derive(Args, Debug)]
struct SpreadArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long, default_value = "south")]
    side: Direction,
    /// Remove the northern guard of one closed cell first (skips the
    /// goodness precondition).
    #[arg(long)]
    broken: bool,
}

#[derive(Args, Debug)]
struct SelftestArgs {
    /// Run the suites at full size.
    #[arg(long)]
    full: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn read_grid(path: &Path) -> Result<Grid> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))?.parse()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Expands `--config FILE` into flags placed right after the subcommand.
pub fn expand_config(args: Vec<String>) -> Result<Vec<String>> {
    let mut rest = Vec::new();
    let mut configs = Vec::new();
    let mut it = args.into_iter();
    let mut head: Vec<String> = it.by_ref().take(2).collect();
    while let Some(a) = it.next() {
        if a == "--config" {
            configs.push(it.next().ok_or_else(|| Error::Argument("--config needs a file".into()))?);
        } else if let Some(path) = a.strip_prefix("--config=") {
            configs.push(path.to_string());
        } else {
            rest.push(a);
        }
    }
    for path in configs {
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        head.extend(config_flags(&text)?);
    }
    head.extend(rest);
    Ok(head)
}

fn config_flags(text: &str) -> Result<Vec<String>> {
    let mut flags = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            msg: format!("expected key=value, got {line:?}"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        match v {
            "true" => flags.push(format!("--{k}")),
            "false" => {}
            _ => {
                flags.push(format!("--{k}"));
                flags.push(v.to_string());
            }
        }
    }
    Ok(flags)
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run(args: Vec<String>) -> i32 {
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// `Ok(false)` means a verification ran and failed.
fn dispatch(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Simulate(a) => simulate(a),
        Command::Render(a) => render(a),
        Command::Scan(a) => scan(a),
        Command::Qc(a) => qc(a),
        Command::Compare(a) => compare(a),
        Command::Safe(a) => safe(a),
        Command::Good(a) => good(a),
        Command::Block(a) => block(a),
        Command::Spread(a) => spread(a),
        Command::Selftest(a) => selftest(a),
    }
}

fn simulate(a: SimulateArgs) -> Result<bool> {
    let g = a.model.initial()?;
    let f = closure(&g, a.model.rule);
    let clusters = occupied_clusters(&f.grid);
    let (tx, ty) = (g.width() / 2, g.height() / 2);
    println!("width={} height={}", g.width(), g.height());
    println!("rule={} bc={} p={} q={} seed={}", a.model.rule, a.model.bc, a.model.p, a.model.q, a.model.seed);
    println!("initial_occupied={} closed={}", g.occupied_count(), g.closed_count());
    println!("final_occupied={} steps={}", f.grid.occupied_count(), f.steps_to_fixpoint);
    println!("target=({tx},{ty}) target_occupied={}", f.grid.is_occupied(tx, ty));
    println!("clusters={} max_cluster_diameter={}", clusters.cluster_count, clusters.max_linf_diameter);
    if let Some(out) = a.out {
        write_file(&out, f.grid.to_text().as_bytes())?;
    }
    Ok(true)
}

fn render(a: RenderArgs) -> Result<bool> {
    let g = a.model.initial()?;
    let f = closure(&g, a.model.rule).grid;
    let palette = Palette {
        initial_occupied: a.initial_color,
        eventually_occupied: a.eventual_color,
        closed: a.closed_color,
        never_occupied: a.open_color,
    };
    write_file(&a.out, &render_ppm(&g, &f, &palette)?)?;
    println!("wrote {} ({}x{})", a.out.display(), g.width(), g.height());
    Ok(true)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn scan(a: ScanArgs) -> Result<bool> {
    let side = a.side.map_or_else(|| default_side(a.p), Ok)?;
    let rows = scan_q(a.p, &a.alphas, a.beta, a.rule, side, a.bc, a.trials, a.seed)?;
    emit(a.out.as_deref(), &scan_csv(&rows, a.timing))?;
    Ok(true)
}

fn qc(a: QcArgs) -> Result<bool> {
    let side = a.side.map_or_else(|| default_side(a.p), Ok)?;
    let out = estimate_qc(a.p, a.rule, side, a.bc, a.trials, a.max_trials, a.seed, a.tol)?;
    println!("p={} rule={} L={} bc={} trials={} seed={}", a.p, a.rule, side, a.bc, a.trials, a.seed);
    match out {
        QcOutcome::Threshold { q_hat, lo, hi, evaluations } => {
            println!("q_hat={q_hat} bracket=[{lo},{hi}] evaluations={evaluations}");
        }
        QcOutcome::NoThreshold { fraction_at_zero, fraction_at_max } => {
            let at_max = fraction_at_max.map(|f| f.to_string()).unwrap_or_else(|| "-".into());
            println!("no threshold: fraction at q=0 is {fraction_at_zero}, at q=1-p is {at_max}");
        }
    }
    Ok(true)
}

fn compare(a: CompareArgs) -> Result<bool> {
    let fixed = a.side;
    let rows = compare_rules(
        &a.ps,
        |p| fixed.map_or_else(|| default_side(p), Ok),
        a.bc,
        a.trials,
        a.max_trials,
        a.seed,
        a.tol,
    )?;
    emit(a.out.as_deref(), &compare_csv(&rows))?;
    Ok(true)
}

fn safe(a: SafeArgs) -> Result<bool> {
    let geom = a.geometry.geometry(a.p)?;
    if let Some(path) = &a.grid {
        let g = read_grid(path)?;
        if let Some(certs) = &a.certs {
            let text = fs::read_to_string(certs).map_err(|e| Error::io(certs, e))?;
            let mut ok = true;
            for c in parse_certificates(&text)? {
                match c.validate(&g, &geom) {
                    Ok(()) => println!("valid {c}"),
                    Err(e) => {
                        println!("invalid {c}: {e}");
                        ok = false;
                    }
                }
            }
            return Ok(ok);
        }
        let z = a.block.as_deref().unwrap_or(&[0, 0]);
        match is_safe_block(&g, (z[0], z[1]), &geom)? {
            Some(c) => println!("{c}"),
            None => println!("block {},{} is not safe", z[0], z[1]),
        }
        return Ok(true);
    }
    let q = a.q.unwrap_or(5.0 * a.p * a.p / (1.0 / a.p).ln());
    let est = estimate_safe_prob(&geom, PollutionParams::new(a.p, q, a.seed)?, a.trials)?;
    println!(
        "m={} M={} N={} v_h={} h_w={}",
        geom.m, geom.block_w, geom.block_h, geom.chimney_h, geom.bar_w
    );
    println!(
        "p={} q={} trials={} safe={} fraction={} ci_low={} ci_high={}",
        a.p, q, est.trials, est.hits, est.fraction, est.ci_low, est.ci_high
    );
    Ok(true)
}

fn parse_window(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Argument(format!("window must look like WxH, got {s:?}"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((w.trim().parse().map_err(|_| bad())?, h.trim().parse().map_err(|_| bad())?))
}

fn good(a: GoodArgs) -> Result<bool> {
    let gp: GoodBoxParams = if a.desk {
        good_fixture_params()
    } else {
        GoodBoxParams::from_params(a.n, a.p)?
    };
    if let Some(path) = &a.grid {
        let g = read_grid(path)?;
        let b = match a.boxed.as_deref() {
            Some(v) => Rect::new(v[0], v[1], v[2], v[3]),
            None => g.bounds(),
        };
        let r = is_good_box(&g, b, &gp)?;
        println!("box {b} good={} conditions={:?}", r.good(), r.conditions);
        for w in &r.witnesses {
            println!("  {w}");
        }
        return Ok(true);
    }
    let n4 = (a.n as f64).powi(4);
    let q = a.q.unwrap_or(a.p * a.p / ((1.0 / a.p).ln() * n4));
    let params = PollutionParams::new(a.p, q, a.seed)?;
    println!("side={} reach={} interval={} strip={}x{} cap={} margin={}", gp.side, gp.reach, gp.interval, gp.strip_w, gp.strip_h, gp.closed_cap, gp.margin);
    if let Some(w) = &a.window {
        let out = good_box_window(&gp, params, parse_window(w)?, a.trials)?;
        println!(
            "p={} q={} density={} ci_low={} ci_high={} largest_component={}",
            a.p, q, out.density.fraction, out.density.ci_low, out.density.ci_high, out.largest_component
        );
        return Ok(true);
    }
    let est = estimate_good_prob(&gp, params, a.trials)?;
    println!(
        "p={} q={} trials={} good={} fraction={} ci_low={} ci_high={}",
        a.p, q, est.good.trials, est.good.hits, est.good.fraction, est.good.ci_low, est.good.ci_high
    );
    let f = est.failure_fractions;
    println!("failure G1={} G2={} G3={} G4={} G5={} G6={}", f[0], f[1], f[2], f[3], f[4], f[5]);
    Ok(true)
}

fn block(a: BlockArgs) -> Result<bool> {
    if let Some(path) = &a.grid {
        let g = read_grid(path)?;
        let geom = a.geometry.geometry(0.05)?;
        let window = Rect::new(0, 0, (g.width() / geom.block_w) as i64, (g.height() / geom.block_h) as i64);
        let field = safe_block_field(&g, &geom, window)?;
        let certs: Vec<_> = field.certificates().copied().collect();
        if let Some(out) = &a.certs_out {
            write_file(out, format_certificates(&certs).as_bytes())?;
        }
        let Some(path) = find_blocking_path(&field, window)? else {
            println!("no blocking path among {} safe blocks", certs.len());
            return Ok(false);
        };
        let s = build_blocking_structure(&path, &certs, g.bounds())?;
        let v = verify_blocking(&g, &s, geom.m)?;
        println!("path of {} blocks: {v}", path.len());
        return Ok(v == BlockingVerdict::Holds);
    }
    let mut all = true;
    for seed in a.seed..a.seed + a.count {
        let fix = staircase_fixture(seed)?;
        if seed == a.seed {
            if let Some(out) = &a.certs_out {
                let certs: Vec<_> = fix.field.certificates().copied().collect();
                write_file(out, format_certificates(&certs).as_bytes())?;
            }
        }
        let g = if a.sabotage { fix.sabotaged(seed)? } else { fix.grid.clone() };
        let v = verify_blocking(&g, &fix.structure, fix.geom.m)?;
        println!(
            "seed={seed} blocks={} region_a={} segments={} verdict: {v}",
            fix.path.len(),
            fix.structure.region_a_size(),
            fix.structure.segments.len()
        );
        all &= v == BlockingVerdict::Holds;
    }
    Ok(all)
}

fn spread(a: SpreadArgs) -> Result<bool> {
    let mut all = true;
    for seed in a.seed..a.seed + a.count {
        let fix = good_box_fixture(seed)?;
        let ok = if a.broken {
            spread_fills_box(&fix.without_north_guard(), fix.boxed, a.side)?
        } else {
            verify_spread(&fix.grid, fix.boxed, &fix.params, a.side)?
        };
        println!("seed={seed} closed={} side={} spread={ok}", fix.closed.len(), a.side.name());
        all &= ok;
    }
    Ok(all)
}

fn selftest(a: SelftestArgs) -> Result<bool> {
    let reports = run_all(if a.full { 1 } else { 20 }, a.seed)?;
    for r in &reports {
        println!("{r}");
    }
    Ok(reports.iter().all(|r| r.passed()))
}
