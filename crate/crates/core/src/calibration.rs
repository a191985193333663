//! Calibration of concavity, decay and prefactor from meta-order data.
//!
//! Meta-orders are assumed to trade at a constant (TWAP) rate over their
//! execution window, starting from a zero impact state. For each candidate
//! `(c_hat, tau_hat)` the price impact implied by that assumption is computed
//! at every fill boundary, and fill-interval price changes are regressed on
//! impact increments through the origin. The slope is the prefactor
//! `g(c_hat, tau_hat)`; the fit quality is `R^2(c_hat, tau_hat)`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::model::{evolve_impact, AfsParams, TimeGrid, TradeSchedule};
use crate::par::map_range;
use crate::stats::{mean_stderr, ols_line, quantile_sorted, std_dev, stream_rng};

/// One child-order interval: trade `dq` shares over `[t, t + dt]` with mid
/// price change `dp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fill {
    pub t: f64,
    pub dt: f64,
    pub dq: f64,
    pub dp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaOrder {
    pub order_id: u64,
    pub start: f64,
    pub duration: f64,
    /// Signed size as a fraction of ADV.
    pub signed_frac: f64,
    pub fills: Vec<Fill>,
}

impl MetaOrder {
    pub const MIN_FILLS: usize = 3;

    pub fn validate(&self) -> Result<()> {
        if self.fills.len() < Self::MIN_FILLS {
            return Err(Error::InvalidInput(format!(
                "meta-order {} has {} fills, need at least {}",
                self.order_id,
                self.fills.len(),
                Self::MIN_FILLS
            )));
        }
        if !(self.duration > 0.0 && self.duration <= 1.0 + 1e-9) {
            return Err(Error::InvalidInput(format!(
                "meta-order {} lasts {} days, must be in (0, 1]",
                self.order_id, self.duration
            )));
        }
        let mut t = self.start;
        for f in &self.fills {
            if !(f.t.is_finite() && f.dt > 0.0 && f.dq.is_finite() && f.dp.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "meta-order {} has a malformed fill",
                    self.order_id
                )));
            }
            if (f.t - t).abs() > 1e-9 * self.duration.max(1.0) {
                return Err(Error::InvalidInput(format!(
                    "meta-order {} fills are not contiguous",
                    self.order_id
                )));
            }
            t = f.t + f.dt;
        }
        Ok(())
    }

    /// Total price change over the execution times the order's sign.
    pub fn signed_return(&self) -> f64 {
        self.signed_frac.signum() * self.fills.iter().map(|f| f.dp).sum::<f64>()
    }
}

/// Price and volume scales used to express impact regressors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketScale {
    pub sigma: f64,
    pub adv: f64,
}

impl From<&AfsParams> for MarketScale {
    fn from(p: &AfsParams) -> Self {
        Self {
            sigma: p.sigma,
            adv: p.adv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_orders: usize,
    /// Bounds of `|Q|/V`, sampled log-uniformly.
    pub size_bounds: (f64, f64),
    /// Bounds of the execution time (days), sampled uniformly.
    pub duration_bounds: (f64, f64),
    /// Inclusive bounds on the number of child orders.
    pub fill_bounds: (usize, usize),
    /// Diffusive price noise in units of `sigma`.
    pub noise_vol: f64,
    /// Optional drift in the order's direction, in `sigma` per day.
    pub alpha_leak: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_orders: 100_000,
            size_bounds: (1e-4, 1e-1),
            // 30 minutes to 4.5 hours of a 24h day: mean 2.5h
            duration_bounds: (1.0 / 48.0, 0.1875),
            fill_bounds: (3, 50),
            noise_vol: 1.0,
            alpha_leak: 0.0,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_orders == 0 {
            return Err(Error::InvalidParam {
                name: "n_orders",
                value: 0.0,
                reason: "need at least one order",
            });
        }
        let (a, b) = self.size_bounds;
        check_positive("size lower bound", a)?;
        if !(b > a && b.is_finite()) {
            return Err(Error::InvalidParam {
                name: "size upper bound",
                value: b,
                reason: "must exceed the lower bound",
            });
        }
        let (lo, hi) = self.duration_bounds;
        check_positive("duration lower bound", lo)?;
        if !(hi >= lo && hi <= 1.0) {
            return Err(Error::InvalidParam {
                name: "duration upper bound",
                value: hi,
                reason: "must lie in [lower bound, 1 day]",
            });
        }
        let (fmin, fmax) = self.fill_bounds;
        if fmin < MetaOrder::MIN_FILLS || fmax < fmin {
            return Err(Error::InvalidParam {
                name: "fill bounds",
                value: fmin as f64,
                reason: "need 3 <= min fills <= max fills",
            });
        }
        if !(self.noise_vol >= 0.0 && self.noise_vol.is_finite()) {
            return Err(Error::InvalidParam {
                name: "noise_vol",
                value: self.noise_vol,
                reason: "must be finite and non-negative",
            });
        }
        if !self.alpha_leak.is_finite() {
            return Err(Error::NonFinite("alpha_leak"));
        }
        Ok(())
    }

    /// Expected `|Q|/V` under the log-uniform size law.
    pub fn mean_size(&self) -> f64 {
        let (a, b) = self.size_bounds;
        (b - a) / (b / a).ln()
    }
}

/// Synthetic meta-orders executed at a TWAP rate under `actual`. Order `i`
/// starts on day `i` and uses random stream `(seed, i)`.
pub fn synth_metaorders(actual: &AfsParams, cfg: &SynthConfig) -> Result<Vec<MetaOrder>> {
    actual.validate()?;
    cfg.validate()?;
    map_range(cfg.n_orders, |i| synth_one(actual, cfg, i)).into_iter().collect()
}

fn synth_one(actual: &AfsParams, cfg: &SynthConfig, index: usize) -> Result<MetaOrder> {
    let mut rng = stream_rng(cfg.seed, index as u64);
    let (a, b) = cfg.size_bounds;
    let size = rng.random_range(a.ln()..=b.ln()).exp();
    let side = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let (lo, hi) = cfg.duration_bounds;
    let duration = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    let m = rng.random_range(cfg.fill_bounds.0..=cfg.fill_bounds.1);
    let start = index as f64;
    let signed_frac = side * size;
    let shares = signed_frac * actual.adv;

    let grid = TimeGrid::new(start, start + duration, m)?;
    let schedule = TradeSchedule {
        rates: vec![shares / duration; m],
        blocks: Vec::new(),
    };
    let path = evolve_impact(actual, &grid, &schedule)?;
    let dt = grid.dt();
    let noise_sd = cfg.noise_vol * actual.sigma * dt.sqrt();
    let leak = cfg.alpha_leak * actual.sigma * side * dt;
    let fills = (0..m)
        .map(|k| {
            let z: f64 = rng.sample(StandardNormal);
            Fill {
                t: grid.time(k),
                dt,
                dq: shares / m as f64,
                dp: path.i[k + 1] - path.i[k] + noise_sd * z + leak,
            }
        })
        .collect();
    Ok(MetaOrder {
        order_id: index as u64,
        start,
        duration,
        signed_frac,
        fills,
    })
}

/// `(c_hat, tau_hat)` lattice with fitted prefactor and `R^2` per cell.
/// Matrices are indexed `[c index][tau index]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibGrid {
    pub c_values: Vec<f64>,
    pub tau_values: Vec<f64>,
    pub r2: Vec<Vec<f64>>,
    pub g: Vec<Vec<f64>>,
    pub valid: Vec<Vec<bool>>,
}

fn lattice_index(values: &[f64], x: f64) -> Option<usize> {
    values
        .iter()
        .position(|v| (v - x).abs() <= 1e-9 * x.abs().max(1.0))
}

impl CalibGrid {
    /// Cell with the highest `R^2` among valid cells.
    pub fn argmax(&self) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for (ci, row) in self.r2.iter().enumerate() {
            for (ti, &r) in row.iter().enumerate() {
                if self.valid[ci][ti] && best.is_none_or(|(_, _, b)| r > b) {
                    best = Some((ci, ti, r));
                }
            }
        }
        best.map(|(ci, ti, _)| (ci, ti))
    }

    pub fn c_index(&self, c: f64) -> Option<usize> {
        lattice_index(&self.c_values, c)
    }

    pub fn tau_index(&self, tau: f64) -> Option<usize> {
        lattice_index(&self.tau_values, tau)
    }

    /// `R^2(c_hat, tau)` along the concavity axis.
    pub fn r2_column(&self, ti: usize) -> Vec<f64> {
        self.r2.iter().map(|row| row[ti]).collect()
    }

    /// `g(c_hat, tau)` along the concavity axis.
    pub fn g_column(&self, ti: usize) -> Vec<f64> {
        self.g.iter().map(|row| row[ti]).collect()
    }
}

/// Fill boundaries of all orders flattened into contiguous arrays.
struct Prepared {
    /// Offset of each boundary from its order's start.
    offset: Vec<f64>,
    /// TWAP rate of the order owning each boundary (shares/day).
    rate: Vec<f64>,
    /// First boundary index of each order; order `o` owns
    /// `first[o]..first[o + 1]`.
    first: Vec<usize>,
    /// Price change of each interval, aligned with its left boundary.
    dp: Vec<f64>,
    /// Per-order `sum dp^2`.
    syy: Vec<f64>,
}

impl Prepared {
    fn new(orders: &[MetaOrder], adv: f64) -> Result<Self> {
        let total: usize = orders.iter().map(|o| o.fills.len() + 1).sum();
        let mut offset = Vec::with_capacity(total);
        let mut rate = Vec::with_capacity(total);
        let mut dp = Vec::with_capacity(total);
        let mut first = Vec::with_capacity(orders.len() + 1);
        let mut syy = Vec::with_capacity(orders.len());
        for o in orders {
            o.validate()?;
            first.push(offset.len());
            let r = o.signed_frac * adv / o.duration;
            offset.push(0.0);
            rate.push(r);
            let mut s = 0.0;
            for f in &o.fills {
                offset.push(f.t + f.dt - o.start);
                rate.push(r);
                dp.push(f.dp);
                s += f.dp * f.dp;
            }
            // the last boundary of an order has no interval to its right
            dp.push(0.0);
            syy.push(s);
        }
        first.push(offset.len());
        Ok(Self {
            offset,
            rate,
            first,
            dp,
            syy,
        })
    }

    /// `ln(|J| / V)` and `sign(J)` at every boundary for decay `tau`.
    fn log_state(&self, tau: f64, adv: f64) -> (Vec<f64>, Vec<f64>) {
        self.offset
            .iter()
            .zip(&self.rate)
            .map(|(&u, &r)| {
                let j = r * tau * -(-u / tau).exp_m1();
                if j == 0.0 {
                    (f64::NEG_INFINITY, 0.0)
                } else {
                    ((j.abs() / adv).ln(), j.signum())
                }
            })
            .unzip()
    }

    /// Per-order `(sum x y, sum x x)` for the regressor with concavity `c`.
    fn order_stats(&self, log_j: &[f64], sign: &[f64], c: f64, sigma: f64) -> Vec<(f64, f64)> {
        let n_orders = self.first.len() - 1;
        let mut out = Vec::with_capacity(n_orders);
        for o in 0..n_orders {
            let (a, b) = (self.first[o], self.first[o + 1]);
            let (mut sxy, mut sxx) = (0.0, 0.0);
            let mut prev = sigma * sign[a] * (c * log_j[a]).exp();
            for k in a + 1..b {
                let cur = sigma * sign[k] * (c * log_j[k]).exp();
                let x = cur - prev;
                sxy += x * self.dp[k - 1];
                sxx += x * x;
                prev = cur;
            }
            out.push((sxy, sxx));
        }
        out
    }
}

fn fit_cell(sxy: f64, sxx: f64, syy: f64) -> (f64, f64, bool) {
    if !(sxx > 0.0 && syy > 0.0) {
        return (f64::NAN, f64::NAN, false);
    }
    let g = sxy / sxx;
    let r2 = (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0);
    (r2, g, g > 0.0 && g.is_finite())
}

fn check_lattice(name: &'static str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InsufficientData(format!("empty {name} lattice")));
    }
    for &v in values {
        check_positive(name, v)?;
    }
    Ok(())
}

/// Regress fill-interval price changes on TWAP impact increments for every
/// `(c_hat, tau_hat)` pair. Cells whose regressor has no variance are flagged
/// invalid.
pub fn grid_fit(
    orders: &[MetaOrder],
    scale: &MarketScale,
    c_values: &[f64],
    tau_values: &[f64],
) -> Result<CalibGrid> {
    check_lattice("c_hat", c_values)?;
    check_lattice("tau_hat", tau_values)?;
    check_positive("sigma", scale.sigma)?;
    check_positive("adv", scale.adv)?;
    let total_fills: usize = orders.iter().map(|o| o.fills.len()).sum();
    if total_fills < 2 {
        return Err(Error::InsufficientData("need at least two fills".into()));
    }
    let prep = Prepared::new(orders, scale.adv)?;
    let syy: f64 = prep.syy.iter().sum();
    let nc = c_values.len();
    let mut r2 = vec![vec![f64::NAN; tau_values.len()]; nc];
    let mut g = r2.clone();
    let mut valid = vec![vec![false; tau_values.len()]; nc];
    for (ti, &tau) in tau_values.iter().enumerate() {
        let (log_j, sign) = prep.log_state(tau, scale.adv);
        let cells = map_range(nc, |ci| {
            let stats = prep.order_stats(&log_j, &sign, c_values[ci], scale.sigma);
            let (sxy, sxx) = stats
                .iter()
                .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
            fit_cell(sxy, sxx, syy)
        });
        for (ci, (r, gg, ok)) in cells.into_iter().enumerate() {
            r2[ci][ti] = r;
            g[ci][ti] = gg;
            valid[ci][ti] = ok;
        }
    }
    Ok(CalibGrid {
        c_values: c_values.to_vec(),
        tau_values: tau_values.to_vec(),
        r2,
        g,
        valid,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLogConfig {
    pub n_bins: usize,
    /// Only bins centred at or above this `|Q|/V` enter the line fit.
    pub size_floor: f64,
}

impl Default for LogLogConfig {
    fn default() -> Self {
        Self {
            n_bins: 12,
            size_floor: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogBin {
    /// Mean of `ln |Q|/V` over the bin.
    pub log_size: f64,
    /// Mean signed return (price units).
    pub mean_return: f64,
    pub count: usize,
    pub used: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    /// Concavity estimate.
    pub slope: f64,
    pub intercept: f64,
    pub bins: Vec<LogBin>,
}

/// Log-log fit of mean signed return against order size.
pub fn fit_loglog(orders: &[MetaOrder], cfg: &LogLogConfig) -> Result<LogLogFit> {
    let sizes: Vec<f64> = orders.iter().map(|o| o.signed_frac.abs()).collect();
    let returns: Vec<f64> = orders.iter().map(MetaOrder::signed_return).collect();
    fit_loglog_points(&sizes, &returns, cfg)
}

fn fit_loglog_points(sizes: &[f64], returns: &[f64], cfg: &LogLogConfig) -> Result<LogLogFit> {
    if cfg.n_bins < 2 {
        return Err(Error::InvalidParam {
            name: "n_bins",
            value: cfg.n_bins as f64,
            reason: "need at least two bins",
        });
    }
    let logs: Vec<f64> = sizes
        .iter()
        .filter(|s| **s > 0.0)
        .map(|s| s.ln())
        .collect();
    if logs.len() != sizes.len() {
        return Err(Error::InsufficientData("zero-size orders".into()));
    }
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi - lo >= std::f64::consts::LN_10 * (1.0 - 1e-9)) {
        return Err(Error::InsufficientData(
            "order sizes span less than one decade".into(),
        ));
    }
    let width = (hi - lo) / cfg.n_bins as f64;
    let mut sum_log = vec![0.0; cfg.n_bins];
    let mut sum_ret = vec![0.0; cfg.n_bins];
    let mut count = vec![0usize; cfg.n_bins];
    for (l, r) in logs.iter().zip(returns) {
        let b = (((l - lo) / width) as usize).min(cfg.n_bins - 1);
        sum_log[b] += l;
        sum_ret[b] += r;
        count[b] += 1;
    }
    let floor = cfg.size_floor.ln();
    let mut bins = Vec::with_capacity(cfg.n_bins);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for b in 0..cfg.n_bins {
        if count[b] == 0 {
            continue;
        }
        let n = count[b] as f64;
        let log_size = sum_log[b] / n;
        let mean_return = sum_ret[b] / n;
        let centre = lo + (b as f64 + 0.5) * width;
        let used = centre >= floor && mean_return > 0.0;
        if used {
            xs.push(log_size);
            ys.push(mean_return.ln());
        }
        bins.push(LogBin {
            log_size,
            mean_return,
            count: count[b],
            used,
        });
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData(
            "fewer than two usable bins above the size floor".into(),
        ));
    }
    let (intercept, slope) = ols_line(&xs, &ys);
    Ok(LogLogFit {
        slope,
        intercept,
        bins,
    })
}

/// Concavity maximising `R^2` along `c_values` at fixed `tau`, refined by a
/// parabola through the best lattice point and its neighbours.
pub fn profile_c(
    orders: &[MetaOrder],
    scale: &MarketScale,
    tau: f64,
    c_values: &[f64],
) -> Result<f64> {
    let grid = grid_fit(orders, scale, c_values, &[tau])?;
    let r2 = grid.r2_column(0);
    refine_argmax(c_values, &r2)
        .ok_or_else(|| Error::InsufficientData("no valid profile cell".into()))
}

fn refine_argmax(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let (best, _) = ys
        .iter()
        .enumerate()
        .filter(|(_, y)| y.is_finite())
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if best == 0 || best + 1 == xs.len() {
        return Some(xs[best]);
    }
    let (x0, x1, x2) = (xs[best - 1], xs[best], xs[best + 1]);
    let (y0, y1, y2) = (ys[best - 1], ys[best], ys[best + 1]);
    let denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
    let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
    if !(a < 0.0) {
        return Some(x1);
    }
    Some((-b / (2.0 * a)).clamp(x0, x2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum BootstrapMethod {
    LogLog(LogLogConfig),
    /// `R^2` profile over `c_values` at fixed `tau`.
    Profile {
        scale: MarketScale,
        tau: f64,
        c_values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub n_resamples: usize,
    pub seed: u64,
    pub method: BootstrapMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    /// Estimate on the original sample.
    pub point: f64,
    pub mean: f64,
    pub std: f64,
    pub q025: f64,
    pub q16: f64,
    pub q84: f64,
    pub q975: f64,
    pub n_resamples: usize,
}

/// Bootstrap the concavity estimate by resampling meta-orders with
/// replacement. Resample `r` draws from random stream `(seed, r)`.
pub fn bootstrap_c(orders: &[MetaOrder], cfg: &BootstrapConfig) -> Result<BootstrapSummary> {
    if cfg.n_resamples < 100 {
        return Err(Error::InvalidParam {
            name: "n_resamples",
            value: cfg.n_resamples as f64,
            reason: "need at least 100 resamples",
        });
    }
    let n = orders.len();
    if n == 0 {
        return Err(Error::InsufficientData("no meta-orders".into()));
    }
    let draw = |r: usize| -> Vec<u32> {
        let mut rng = stream_rng(cfg.seed, r as u64);
        let mut counts = vec![0u32; n];
        for _ in 0..n {
            counts[rng.random_range(0..n)] += 1;
        }
        counts
    };

    let (point, estimates): (f64, Vec<Result<f64>>) = match &cfg.method {
        BootstrapMethod::LogLog(ll) => {
            let sizes: Vec<f64> = orders.iter().map(|o| o.signed_frac.abs()).collect();
            let returns: Vec<f64> = orders.iter().map(MetaOrder::signed_return).collect();
            let point = fit_loglog_points(&sizes, &returns, ll)?.slope;
            let est = map_range(cfg.n_resamples, |r| {
                let counts = draw(r);
                let mut s = Vec::with_capacity(n);
                let mut y = Vec::with_capacity(n);
                for (i, &k) in counts.iter().enumerate() {
                    for _ in 0..k {
                        s.push(sizes[i]);
                        y.push(returns[i]);
                    }
                }
                fit_loglog_points(&s, &y, ll).map(|f| f.slope)
            });
            (point, est)
        }
        BootstrapMethod::Profile {
            scale,
            tau,
            c_values,
        } => {
            check_lattice("c_hat", c_values)?;
            let prep = Prepared::new(orders, scale.adv)?;
            let (log_j, sign) = prep.log_state(*tau, scale.adv);
            let stats: Vec<Vec<(f64, f64)>> = c_values
                .iter()
                .map(|&c| prep.order_stats(&log_j, &sign, c, scale.sigma))
                .collect();
            let profile = |weights: Option<&[u32]>| -> Result<f64> {
                let w = |i: usize| weights.map_or(1.0, |w| w[i] as f64);
                let syy: f64 = prep.syy.iter().enumerate().map(|(i, s)| w(i) * s).sum();
                let r2: Vec<f64> = stats
                    .iter()
                    .map(|cell| {
                        let (sxy, sxx) = cell.iter().enumerate().fold((0.0, 0.0), |(a, b), (i, (x, y))| {
                            (a + w(i) * x, b + w(i) * y)
                        });
                        fit_cell(sxy, sxx, syy).0
                    })
                    .collect();
                refine_argmax(c_values, &r2)
                    .ok_or_else(|| Error::InsufficientData("no valid profile cell".into()))
            };
            let point = profile(None)?;
            let est = map_range(cfg.n_resamples, |r| profile(Some(&draw(r))));
            (point, est)
        }
    };

    let mut values = estimates.into_iter().collect::<Result<Vec<f64>>>()?;
    let (mean, _) = mean_stderr(&values);
    let std = std_dev(&values);
    values.sort_by(f64::total_cmp);
    Ok(BootstrapSummary {
        point,
        mean,
        std,
        q025: quantile_sorted(&values, 0.025),
        q16: quantile_sorted(&values, 0.16),
        q84: quantile_sorted(&values, 0.84),
        q975: quantile_sorted(&values, 0.975),
        n_resamples: cfg.n_resamples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> AfsParams {
        AfsParams::new(0.48, 0.2, 1.0, 1e6, 1.0).unwrap()
    }

    fn quiet(n: usize) -> SynthConfig {
        SynthConfig {
            n_orders: n,
            noise_vol: 0.0,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn noiseless_fills_sum_to_terminal_impact() {
        let p = params();
        let orders = synth_metaorders(&p, &quiet(5)).unwrap();
        for o in &orders {
            let total: f64 = o.fills.iter().map(|f| f.dp).sum();
            let r = o.signed_frac * p.adv / o.duration;
            let j_end = r * p.tau * (1.0 - (-o.duration / p.tau).exp());
            let i_end = crate::model::impact_of_state(&p, j_end);
            assert_relative_eq!(total, i_end, max_relative = 1e-10);
            let shares: f64 = o.fills.iter().map(|f| f.dq).sum();
            assert_relative_eq!(shares, o.signed_frac * p.adv, max_relative = 1e-12);
            assert!(o.fills.len() >= 3 && o.duration <= 1.0);
            o.validate().unwrap();
        }
    }

    #[test]
    fn synthetic_data_is_seeded() {
        let p = params();
        let cfg = SynthConfig {
            n_orders: 20,
            ..SynthConfig::default()
        };
        let a = synth_metaorders(&p, &cfg).unwrap();
        assert_eq!(a, synth_metaorders(&p, &cfg).unwrap());
        let b = synth_metaorders(&p, &SynthConfig { seed: 7, ..cfg }).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn invalid_synth_bounds() {
        let p = params();
        let bad = [
            SynthConfig {
                size_bounds: (1e-2, 1e-3),
                ..quiet(1)
            },
            SynthConfig {
                duration_bounds: (0.1, 2.0),
                ..quiet(1)
            },
            SynthConfig {
                fill_bounds: (2, 5),
                ..quiet(1)
            },
            SynthConfig {
                noise_vol: -1.0,
                ..quiet(1)
            },
        ];
        for cfg in bad {
            assert!(synth_metaorders(&p, &cfg).is_err());
        }
    }

    #[test]
    fn noiseless_self_fit_is_exact() {
        let p = params();
        let orders = synth_metaorders(&p, &quiet(200)).unwrap();
        let grid = grid_fit(&orders, &MarketScale::from(&p), &[0.3, 0.48, 0.7], &[0.05, 0.2, 1.0]).unwrap();
        assert_relative_eq!(grid.r2[1][1], 1.0, max_relative = 1e-10);
        assert_relative_eq!(grid.g[1][1], 1.0, max_relative = 1e-10);
        assert_eq!(grid.argmax(), Some((1, 1)));
        for row in &grid.r2 {
            assert!(row.iter().all(|r| (0.0..=1.0).contains(r)));
        }
    }

    #[test]
    fn zero_signal_cells_are_flagged() {
        let p = params();
        let mut orders = synth_metaorders(&p, &quiet(3)).unwrap();
        for o in &mut orders {
            for f in &mut o.fills {
                f.dp = 0.0;
            }
        }
        let grid = grid_fit(&orders, &MarketScale::from(&p), &[0.5], &[0.2]).unwrap();
        assert!(!grid.valid[0][0]);
        assert!(grid.argmax().is_none());
    }

    #[test]
    fn grid_fit_rejects_empty_lattice() {
        let p = params();
        let orders = synth_metaorders(&p, &quiet(3)).unwrap();
        assert!(grid_fit(&orders, &MarketScale::from(&p), &[], &[0.2]).is_err());
    }

    #[test]
    fn loglog_pure_power_law() {
        let p = AfsParams::new(0.5, 1e12, 1.0, 1e6, 1.0).unwrap();
        let orders = synth_metaorders(&p, &quiet(20_000)).unwrap();
        let fit = fit_loglog(&orders, &LogLogConfig::default()).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-3, "slope {}", fit.slope);
        // doubling g shifts the intercept by ln 2
        let orders2 = synth_metaorders(&p.with_g(2.0), &quiet(20_000)).unwrap();
        let fit2 = fit_loglog(&orders2, &LogLogConfig::default()).unwrap();
        assert_relative_eq!(fit2.slope, fit.slope, max_relative = 1e-9);
        assert_relative_eq!(fit2.intercept - fit.intercept, 2f64.ln(), max_relative = 1e-9);
    }

    #[test]
    fn loglog_needs_a_decade() {
        let p = params();
        let cfg = SynthConfig {
            size_bounds: (1e-3, 5e-3),
            ..quiet(500)
        };
        let orders = synth_metaorders(&p, &cfg).unwrap();
        assert!(matches!(
            fit_loglog(&orders, &LogLogConfig::default()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn refine_argmax_finds_vertex() {
        let xs = [0.1, 0.2, 0.3, 0.4];
        let ys: Vec<f64> = xs.iter().map(|x| -(x - 0.27f64).powi(2)).collect();
        assert_relative_eq!(refine_argmax(&xs, &ys).unwrap(), 0.27, max_relative = 1e-12);
    }

    #[test]
    fn bootstrap_needs_resamples() {
        let p = params();
        let orders = synth_metaorders(&p, &quiet(50)).unwrap();
        let cfg = BootstrapConfig {
            n_resamples: 10,
            seed: 1,
            method: BootstrapMethod::LogLog(LogLogConfig::default()),
        };
        assert!(bootstrap_c(&orders, &cfg).is_err());
    }
}
