use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use afs_core::alpha::sample_alpha;
use afs_core::calibration::{
    self, BootstrapConfig, BootstrapMethod, BootstrapSummary, LogLogConfig, MarketScale,
    SynthConfig,
};
use afs_core::io;
use afs_core::model::{AfsParams, TimeGrid};
use afs_core::policy::{self, PolicySpec};
use afs_core::sensitivity::{self, GCurve};
use afs_core::simulate::{simulate_pnl, Accounting, SimConfig};
use anyhow::Context as _;
use clap::{Args, ValueEnum};
use serde::Serialize;

use crate::args::{
    config_path, sibling, AlphaArgs, Format, GridArgs, ImpactArgs, Lattice, OutputArgs, Usage,
};

pub struct Context {
    pub seed: u64,
    pub echo: serde_json::Value,
}

impl Context {
    fn echo_config(&self, output: &Path) -> anyhow::Result<()> {
        save(&config_path(output), |w| io::write_json(w, &self.echo))
    }
}

fn save(
    path: &Path,
    write: impl FnOnce(&mut BufWriter<File>) -> afs_core::Result<()>,
) -> anyhow::Result<()> {
    let mut w = io::create(path).with_context(|| format!("creating {}", path.display()))?;
    write(&mut w).with_context(|| format!("writing {}", path.display()))?;
    w.flush()?;
    Ok(())
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

#[derive(Debug, Args, Serialize)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub impact: ImpactArgs,
    #[command(flatten)]
    pub alpha: AlphaArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

pub fn optimize(ctx: &Context, a: &OptimizeArgs) -> anyhow::Result<String> {
    let believed = a.impact.params()?;
    let spec = PolicySpec::new(believed, a.grid.horizon)?;
    let grid = TimeGrid::horizon(a.grid.horizon, a.grid.steps)?;
    let alpha = sample_alpha(&a.alpha.model(believed.sigma), &grid, ctx.seed)?;
    let plan = policy::optimal_impact(&spec, &alpha)?;
    save(&a.out.output, |w| match a.out.format {
        Format::Csv => io::write_plan(w, &plan),
        Format::Json => io::write_json(w, &plan),
    })?;
    ctx.echo_config(&a.out.output)?;
    let n = grid.n;
    Ok(format!(
        "I*_0/alpha_0 = {:.6}; initial block {:.6} ADV; final position {:.6} ADV; terminal block {:.6} ADV",
        plan.i_star[0] / alpha.alpha[0],
        plan.initial_jump / believed.adv,
        plan.q_star[n] / believed.adv,
        plan.terminal_jump / believed.adv,
    ))
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AccountingArg {
    AlphaCapture,
    PriceDiffusion,
}

#[derive(Debug, Args, Serialize)]
pub struct BacktestArgs {
    /// Actual impact parameters.
    #[command(flatten)]
    pub impact: ImpactArgs,
    /// Believed concavity (default: actual).
    #[arg(long)]
    pub c_hat: Option<f64>,
    /// Believed decay (default: actual).
    #[arg(long)]
    pub tau_hat: Option<f64>,
    /// Believed prefactor (default: actual).
    #[arg(long)]
    pub g_hat: Option<f64>,
    #[command(flatten)]
    pub alpha: AlphaArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 10_000)]
    pub paths: usize,
    #[arg(long, value_enum, default_value_t = AccountingArg::AlphaCapture)]
    pub accounting: AccountingArg,
    /// Output JSON report.
    #[arg(long, short)]
    pub output: PathBuf,
}

pub fn backtest(ctx: &Context, a: &BacktestArgs) -> anyhow::Result<String> {
    let actual = a.impact.params()?;
    let believed = AfsParams::new(
        a.c_hat.unwrap_or(actual.c),
        a.tau_hat.unwrap_or(actual.tau),
        actual.sigma,
        actual.adv,
        a.g_hat.unwrap_or(actual.g),
    )?;
    let spec = PolicySpec::new(believed, a.grid.horizon)?;
    let cfg = SimConfig {
        n_paths: a.paths,
        n_steps: a.grid.steps,
        seed: ctx.seed,
        accounting: match a.accounting {
            AccountingArg::AlphaCapture => Accounting::AlphaCapture,
            AccountingArg::PriceDiffusion => Accounting::PriceDiffusion,
        },
    };
    let report = simulate_pnl(&actual, &spec, &a.alpha.model(actual.sigma), &cfg)?;
    save(&a.output, |w| io::write_json(w, &report))?;
    ctx.echo_config(&a.output)?;
    let unit = actual.sigma * actual.adv;
    Ok(format!(
        "expected P&L {:.6} +/- {:.6} sigma*ADV (capture {:.6}, impact {:.6}) over {} paths",
        report.raw / unit,
        report.stderr / unit,
        report.alpha_capture / unit,
        report.impact_paid / unit,
        report.n_paths
    ))
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 0.48)]
    pub c: f64,
    #[arg(long, default_value_t = 0.2)]
    pub tau: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1e6)]
    pub adv: f64,
    #[arg(long, default_value_t = 1.0)]
    pub g: f64,
    /// Number of meta-orders.
    #[arg(long = "n", visible_alias = "orders", default_value_t = 100_000)]
    pub n_orders: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub size_min: f64,
    #[arg(long, default_value_t = 1e-1)]
    pub size_max: f64,
    /// Shortest execution time (days).
    #[arg(long, default_value_t = 1.0 / 48.0)]
    pub duration_min: f64,
    #[arg(long, default_value_t = 0.1875)]
    pub duration_max: f64,
    #[arg(long, default_value_t = 3)]
    pub fills_min: usize,
    #[arg(long, default_value_t = 50)]
    pub fills_max: usize,
    /// Price noise in units of sigma.
    #[arg(long, default_value_t = 1.0)]
    pub noise_vol: f64,
    /// Drift in the trade direction, in sigma per day.
    #[arg(long, default_value_t = 0.0)]
    pub alpha_leak: f64,
    /// Output meta-order CSV.
    #[arg(long, short)]
    pub output: PathBuf,
}

pub fn synth(ctx: &Context, a: &SynthArgs) -> anyhow::Result<String> {
    let p = AfsParams::new(a.c, a.tau, a.sigma, a.adv, a.g)?;
    let cfg = SynthConfig {
        n_orders: a.n_orders,
        size_bounds: (a.size_min, a.size_max),
        duration_bounds: (a.duration_min, a.duration_max),
        fill_bounds: (a.fills_min, a.fills_max),
        noise_vol: a.noise_vol,
        alpha_leak: a.alpha_leak,
        seed: ctx.seed,
    };
    let orders = calibration::synth_metaorders(&p, &cfg)?;
    save(&a.output, |w| io::write_metaorders(w, &orders))?;
    ctx.echo_config(&a.output)?;
    let fills: usize = orders.iter().map(|o| o.fills.len()).sum();
    Ok(format!(
        "{} meta-orders, {fills} fills, mean |Q|/V {:.3e}",
        orders.len(),
        orders.iter().map(|o| o.signed_frac.abs()).sum::<f64>() / orders.len() as f64
    ))
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BootMethodArg {
    Loglog,
    Profile,
}

#[derive(Debug, Args, Serialize)]
pub struct CalibrateArgs {
    /// Meta-order CSV (order_id, t, dt, dQ, dP).
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1e6)]
    pub adv: f64,
    #[arg(long, default_value = "0.30:1.00:0.02")]
    pub c_grid: Lattice,
    #[arg(long, default_value = "0.02,0.05,0.1,0.2,0.5,1,2,5")]
    pub tau_grid: Lattice,
    /// Bootstrap resamples (0 to skip).
    #[arg(long, default_value_t = 200)]
    pub bootstrap: usize,
    #[arg(long, value_enum, default_value_t = BootMethodArg::Loglog)]
    pub boot_method: BootMethodArg,
    /// Log-log size bins.
    #[arg(long, default_value_t = 12)]
    pub bins: usize,
    /// Smallest |Q|/V entering the log-log line.
    #[arg(long, default_value_t = 1e-3)]
    pub size_floor: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Serialize)]
struct CalibSummary {
    argmax_c: f64,
    argmax_tau: f64,
    argmax_r2: f64,
    argmax_g: f64,
    loglog_slope: f64,
    loglog_intercept: f64,
    bootstrap: Option<BootstrapSummary>,
}

pub fn calibrate(ctx: &Context, a: &CalibrateArgs) -> anyhow::Result<String> {
    let orders = io::read_metaorders(open(&a.input)?, a.adv)?;
    let scale = MarketScale {
        sigma: a.sigma,
        adv: a.adv,
    };
    let grid = calibration::grid_fit(&orders, &scale, &a.c_grid.0, &a.tau_grid.0)?;
    let (ci, ti) = grid
        .argmax()
        .ok_or_else(|| afs_core::Error::InsufficientData("no valid lattice cell".into()))?;
    let ll_cfg = LogLogConfig {
        n_bins: a.bins,
        size_floor: a.size_floor,
    };
    let loglog = calibration::fit_loglog(&orders, &ll_cfg)?;
    let bootstrap = if a.bootstrap == 0 {
        None
    } else {
        let method = match a.boot_method {
            BootMethodArg::Loglog => BootstrapMethod::LogLog(ll_cfg),
            BootMethodArg::Profile => BootstrapMethod::Profile {
                scale,
                tau: grid.tau_values[ti],
                c_values: a.c_grid.0.clone(),
            },
        };
        let cfg = BootstrapConfig {
            n_resamples: a.bootstrap,
            seed: ctx.seed,
            method,
        };
        Some(calibration::bootstrap_c(&orders, &cfg)?)
    };
    let summary = CalibSummary {
        argmax_c: grid.c_values[ci],
        argmax_tau: grid.tau_values[ti],
        argmax_r2: grid.r2[ci][ti],
        argmax_g: grid.g[ci][ti],
        loglog_slope: loglog.slope,
        loglog_intercept: loglog.intercept,
        bootstrap,
    };
    save(&a.out.output, |w| match a.out.format {
        Format::Csv => io::write_calib_grid(w, &grid),
        Format::Json => io::write_json(w, &grid),
    })?;
    save(&sibling(&a.out.output, "loglog", "csv"), |w| {
        io::write_loglog_bins(w, &loglog)
    })?;
    save(&sibling(&a.out.output, "summary", "json"), |w| {
        io::write_json(w, &summary)
    })?;
    ctx.echo_config(&a.out.output)?;
    let boot = summary
        .bootstrap
        .as_ref()
        .map_or(String::new(), |b| format!("; bootstrap std(c) {:.3e}", b.std));
    Ok(format!(
        "argmax c = {}, tau = {} (R^2 {:.4e}, g {:.4}); log-log slope {:.4}{boot}",
        summary.argmax_c, summary.argmax_tau, summary.argmax_r2, summary.argmax_g, summary.loglog_slope
    ))
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GModeArg {
    /// The same g for every believed value.
    Constant,
    /// g(c_hat) = g * size_ref^(c - c_hat): same impact at a reference size.
    PowerLaw,
    /// Calibrated g from a grid CSV.
    Calib,
}

#[derive(Debug, Args, Serialize)]
pub struct ScanConcavityArgs {
    /// Actual concavity.
    #[arg(long, default_value_t = 0.48)]
    pub c: f64,
    #[arg(long, default_value = "0.25,0.5,1,2,4")]
    pub sharpe: Lattice,
    #[arg(long, default_value = "0.30:1.00:0.01")]
    pub chat: Lattice,
    #[arg(long = "horizon", visible_alias = "T", default_value_t = 1.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0.2)]
    pub tau: f64,
    /// Prefactor curve (default: calib with --calib, else power-law).
    #[arg(long, value_enum)]
    pub g_mode: Option<GModeArg>,
    /// Prefactor at the actual concavity (constant and power-law modes).
    #[arg(long, default_value_t = 1.0)]
    pub g: f64,
    /// Reference order size (ADV fraction) for the power-law mode.
    #[arg(long, default_value_t = SynthConfig::default().mean_size())]
    pub size_ref: f64,
    /// Calibration grid CSV for the calib mode; read at decay --tau.
    #[arg(long)]
    pub calib: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

fn read_calib(path: &Option<PathBuf>) -> anyhow::Result<calibration::CalibGrid> {
    let path = path
        .as_ref()
        .ok_or_else(|| Usage("--g-mode calib needs --calib <grid.csv>".into()))?;
    Ok(io::read_calib_grid(open(path)?)?)
}

fn write_scan(out: &OutputArgs, scan: &sensitivity::ScanResult) -> anyhow::Result<()> {
    save(&out.output, |w| match out.format {
        Format::Csv => io::write_scan(w, scan),
        Format::Json => io::write_json(w, scan),
    })?;
    save(&sibling(&out.output, "criticals", "csv"), |w| {
        io::write_criticals(w, scan)
    })
}

pub fn scan_concavity(ctx: &Context, a: &ScanConcavityArgs) -> anyhow::Result<String> {
    let mode = a.g_mode.unwrap_or(if a.calib.is_some() {
        GModeArg::Calib
    } else {
        GModeArg::PowerLaw
    });
    let g_curve = match mode {
        GModeArg::Constant => GCurve::constant(a.g),
        GModeArg::PowerLaw => GCurve::PowerLaw {
            g_ref: a.g,
            c_ref: a.c,
            size_ref: a.size_ref,
        },
        GModeArg::Calib => {
            let calib = read_calib(&a.calib)?;
            let ti = calib.tau_index(a.tau).ok_or_else(|| {
                afs_core::Error::GridMismatch(format!("calibration grid has no tau = {}", a.tau))
            })?;
            GCurve::concavity_from_calib(&calib, ti)?
        }
    };
    let scan = sensitivity::scan_concavity(a.c, &g_curve, &a.sharpe.0, &a.chat.0, a.horizon, a.tau)?;
    write_scan(&a.out, &scan)?;
    ctx.echo_config(&a.out.output)?;
    for flag in &scan.flags {
        eprintln!("warning: {flag}");
    }
    Ok(format!("c_min by sharpe: {}", criticals_text(&scan)))
}

fn criticals_text(scan: &sensitivity::ScanResult) -> String {
    scan.axis2
        .iter()
        .zip(&scan.critical)
        .map(|(a, c)| match c {
            Some(c) => format!("{a} -> {c:.4}"),
            None => format!("{a} -> none in range"),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Args, Serialize)]
pub struct ScanDecayArgs {
    /// Actual impact decay.
    #[arg(long, default_value_t = 0.2)]
    pub tau: f64,
    #[arg(long, default_value = "0.1,0.2,0.5,1,2,5")]
    pub theta: Lattice,
    #[arg(long, default_value = "0.02:2.00:0.02")]
    pub tau_hat: Lattice,
    #[arg(long, default_value_t = 0.48)]
    pub c: f64,
    /// Prefactor curve (default: calib with --calib, else constant).
    #[arg(long, value_enum)]
    pub g_mode: Option<GModeArg>,
    #[arg(long, default_value_t = 1.0)]
    pub g: f64,
    /// Calibration grid CSV for the calib mode; read at concavity --c.
    #[arg(long)]
    pub calib: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

pub fn scan_decay(ctx: &Context, a: &ScanDecayArgs) -> anyhow::Result<String> {
    let mode = a.g_mode.unwrap_or(if a.calib.is_some() {
        GModeArg::Calib
    } else {
        GModeArg::Constant
    });
    let g_curve = match mode {
        GModeArg::Constant => GCurve::constant(a.g),
        GModeArg::PowerLaw => {
            return Err(Usage("--g-mode power-law applies to concavity scans only".into()).into())
        }
        GModeArg::Calib => {
            let calib = read_calib(&a.calib)?;
            let ci = calib.c_index(a.c).ok_or_else(|| {
                afs_core::Error::GridMismatch(format!("calibration grid has no c = {}", a.c))
            })?;
            GCurve::decay_from_calib(&calib, ci)?
        }
    };
    let scan = sensitivity::scan_decay(a.tau, &a.theta.0, &a.tau_hat.0, a.c, &g_curve)?;
    write_scan(&a.out, &scan)?;
    ctx.echo_config(&a.out.output)?;
    Ok(format!("zero-profit tau_hat by theta: {}", criticals_text(&scan)))
}

#[derive(Debug, Args, Serialize)]
pub struct CompareFig1Args {
    /// Calibration grid CSV.
    #[arg(long)]
    pub calib: PathBuf,
    #[arg(long, default_value_t = 0.48)]
    pub c: f64,
    #[arg(long, default_value_t = 0.2)]
    pub tau: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sharpe: f64,
    #[arg(long = "horizon", visible_alias = "T", default_value_t = 1.0)]
    pub horizon: f64,
    /// Bootstrap std(c) for the confidence band.
    #[arg(long)]
    pub c_std: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

pub fn compare_fig1(ctx: &Context, a: &CompareFig1Args) -> anyhow::Result<String> {
    let calib = io::read_calib_grid(open(&a.calib)?)?;
    let curves =
        sensitivity::statistical_vs_pnl(&calib, a.c, a.tau, a.sharpe, a.horizon, a.c_std)?;
    save(&a.out.output, |w| match a.out.format {
        Format::Csv => io::write_fig1(w, &curves),
        Format::Json => io::write_json(w, &curves),
    })?;
    ctx.echo_config(&a.out.output)?;
    let min_u = curves
        .u_ratio
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let min_r2 = curves
        .r2_ratio
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(format!(
        "over c_hat in [{}, {}]: min R^2 ratio {min_r2:.4}, min P&L ratio {min_u:.4}",
        curves.c_hat[0],
        curves.c_hat[curves.c_hat.len() - 1]
    ))
}

#[derive(Debug, Args, Serialize)]
pub struct TcaArgs {
    /// Impact concavity; sizing requires 0.5.
    #[arg(long, default_value_t = 0.5)]
    pub c: f64,
    #[arg(long, default_value_t = 0.2)]
    pub tau: f64,
    #[arg(long, default_value_t = 1.0)]
    pub g: f64,
    #[arg(long = "horizon", visible_alias = "T", default_value_t = 1.0)]
    pub horizon: f64,
    /// Executed order as a signed ADV fraction: report the implied alpha.
    #[arg(long)]
    pub order_frac: Option<f64>,
    /// Alpha in sigma units: report the optimal order size.
    #[arg(long)]
    pub sharpe: Option<f64>,
    /// Alpha relaxation time for the best-execution check (omit for constant).
    #[arg(long)]
    pub theta: Option<f64>,
    /// Observed impact in sigma units, compared with the optimal impact of
    /// --sharpe.
    #[arg(long)]
    pub observed_impact: Option<f64>,
    /// Optional JSON report.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Serialize, Default)]
struct TcaReport {
    implied_sharpe: Option<f64>,
    order_frac: Option<f64>,
    turnover_factor: Option<f64>,
    check: Option<policy::TcaCheck>,
}

pub fn tca(ctx: &Context, a: &TcaArgs) -> anyhow::Result<String> {
    if a.order_frac.is_none() && a.sharpe.is_none() {
        return Err(Usage("tca needs --order-frac or --sharpe".into()).into());
    }
    let believed = AfsParams::new(a.c, a.tau, 1.0, 1.0, a.g)?;
    let spec = PolicySpec::new(believed, a.horizon)?;
    let mut report = TcaReport::default();
    let mut lines = Vec::new();
    if let Some(q) = a.order_frac {
        let s = policy::implied_alpha(&spec, q)?;
        report.implied_sharpe = Some(s);
        lines.push(format!("implied alpha/sigma = {s:.4}"));
    }
    if let Some(s) = a.sharpe {
        let q = policy::order_size_from_alpha(&spec, s)?;
        report.order_frac = Some(q);
        lines.push(format!("optimal order = {q:.4} ADV"));
        if let Some(observed) = a.observed_impact {
            let check = policy::tca_check(a.c, a.tau, a.theta, s, observed)?;
            lines.push(format!(
                "observed/optimal impact = {:.4} (optimal {:.4} sigma)",
                check.ratio, check.expected_impact
            ));
            report.check = Some(check);
        }
    }
    if let Some(theta) = a.theta {
        if !(theta > 0.0) {
            return Err(Usage("--theta must be positive".into()).into());
        }
        let f = policy::turnover_factor(a.c, a.tau, theta);
        report.turnover_factor = Some(f);
        lines.push(format!("turnover factor = {f:.4}"));
    }
    if let Some(path) = &a.output {
        save(path, |w| io::write_json(w, &report))?;
        ctx.echo_config(path)?;
    }
    Ok(lines.join("; "))
}
