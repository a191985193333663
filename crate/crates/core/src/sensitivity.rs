//! Misspecification scans: profit-ratio surfaces over concavity and decay,
//! their zero-profit boundaries, and the statistical-vs-P&L comparison.
//!
//! Profit ratios are `U(J(believed); actual) / U(J(actual); actual)` from the
//! closed forms in [`crate::pnl`]. The prefactor a trader uses alongside a
//! believed parameter comes from a [`GCurve`], typically the calibrated
//! `g(c_hat, tau_hat)` surface: a mis-calibrated exponent comes with the
//! prefactor that best fits the data under that exponent.

use serde::{Deserialize, Serialize};

use crate::alpha::normal_abs_moment;
use crate::calibration::CalibGrid;
use crate::error::{check_finite, check_positive, Error, Result};
use crate::par::map_range;
use crate::pnl::{
    misspec_constant_alpha, misspec_value_decay_ou, optimal_constant_alpha, ConcavityCase,
    DecayCase,
};

/// Prefactor as a function of a believed parameter (`c_hat` or `tau_hat`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GCurve {
    Constant { g: f64 },
    /// Piecewise log-linear in `g`, optionally in `ln x`; flat beyond the ends.
    Table { x: Vec<f64>, g: Vec<f64>, log_x: bool },
    /// `g(c_hat) = g_ref * size_ref^(c_ref - c_hat)`: the prefactor that keeps
    /// the impact of an order of `size_ref` ADV unchanged.
    PowerLaw { g_ref: f64, c_ref: f64, size_ref: f64 },
}

impl GCurve {
    pub fn constant(g: f64) -> Self {
        Self::Constant { g }
    }

    /// `g(c_hat)` at the `ti`-th decay of a calibration grid, over valid cells.
    pub fn concavity_from_calib(calib: &CalibGrid, ti: usize) -> Result<Self> {
        let (x, g) = calib
            .c_values
            .iter()
            .zip(&calib.g)
            .zip(&calib.valid)
            .filter(|(_, v)| v[ti])
            .map(|((c, g), _)| (*c, g[ti]))
            .unzip();
        Self::table(x, g, false)
    }

    /// `g(tau_hat)` at the `ci`-th concavity of a calibration grid.
    pub fn decay_from_calib(calib: &CalibGrid, ci: usize) -> Result<Self> {
        let (x, g) = calib
            .tau_values
            .iter()
            .zip(&calib.g[ci])
            .zip(&calib.valid[ci])
            .filter(|(_, v)| **v)
            .map(|((t, g), _)| (*t, *g))
            .unzip();
        Self::table(x, g, true)
    }

    pub fn table(x: Vec<f64>, g: Vec<f64>, log_x: bool) -> Result<Self> {
        let curve = Self::Table { x, g, log_x };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Constant { g } => check_positive("g", *g),
            Self::Table { x, g, log_x } => {
                if x.is_empty() || x.len() != g.len() {
                    return Err(Error::InvalidInput(
                        "g table needs matching, non-empty columns".into(),
                    ));
                }
                check_finite("g table abscissa", x)?;
                if x.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidInput(
                        "g table abscissa must be strictly increasing".into(),
                    ));
                }
                if *log_x {
                    check_positive("g table abscissa", x[0])?;
                }
                g.iter().try_for_each(|&v| check_positive("g", v))
            }
            Self::PowerLaw {
                g_ref,
                c_ref,
                size_ref,
            } => {
                check_positive("g_ref", *g_ref)?;
                check_positive("c_ref", *c_ref)?;
                check_positive("size_ref", *size_ref)
            }
        }
    }

    pub fn eval(&self, at: f64) -> f64 {
        match self {
            Self::Constant { g } => *g,
            Self::PowerLaw {
                g_ref,
                c_ref,
                size_ref,
            } => g_ref * size_ref.powf(c_ref - at),
            Self::Table { x, g, log_x } => {
                let n = x.len();
                if n == 1 || at <= x[0] {
                    return g[0];
                }
                if at >= x[n - 1] {
                    return g[n - 1];
                }
                let k = x.partition_point(|v| *v <= at) - 1;
                let f = |v: f64| if *log_x { v.ln() } else { v };
                let w = (f(at) - f(x[k])) / (f(x[k + 1]) - f(x[k]));
                (g[k].ln() * (1.0 - w) + g[k + 1].ln() * w).exp()
            }
        }
    }
}

/// Profit-ratio surface. Matrices are indexed `[axis2][axis1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    /// Believed parameter lattice.
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    pub ratio: Vec<Vec<f64>>,
    pub u_misspec: Vec<Vec<f64>>,
    /// Correctly specified value per `axis2` entry.
    pub u_opt: Vec<f64>,
    /// Zero-profit believed parameter per `axis2` entry; `None` when no
    /// crossing lies in the scanned range.
    pub critical: Vec<Option<f64>>,
    /// Monotonicity violations on the loss side, one message per entry.
    pub flags: Vec<String>,
}

impl ScanResult {
    pub fn ratio_at(&self, i2: usize, i1: usize) -> f64 {
        self.ratio[i2][i1]
    }
}

/// Bisection for a sign change of `f` on `[a, b]`.
fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a.min(b) || m >= a.max(b) {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Walk `points` (starting at the correctly specified value, where `u > 0`)
/// to the first non-positive value and bisect `u` there. Also reports whether
/// `u` decreased monotonically along the walk.
fn first_crossing<F: Fn(f64) -> f64>(u: F, points: &[f64]) -> (Option<f64>, bool) {
    let mut prev_x = points[0];
    let mut prev_u = u(prev_x);
    let mut monotone = true;
    for &x in &points[1..] {
        let ux = u(x);
        if ux > prev_u {
            monotone = false;
        }
        if ux <= 0.0 {
            let root = if ux == 0.0 { x } else { bisect(&u, prev_x, x) };
            return (Some(root), monotone);
        }
        prev_x = x;
        prev_u = ux;
    }
    (None, monotone)
}

/// Lattice points within rounding of the actual parameter count as correct.
fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1.0)
}

fn check_lattice(name: &'static str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidInput(format!("empty {name} lattice")));
    }
    check_finite(name, values)
}

/// Sharpe ratios at or above this are expected to show a monotone loss side.
pub const MONOTONE_SHARPE: f64 = 0.25;

/// Constant-alpha profit ratio over believed concavity (`axis1`) and Sharpe
/// ratio (`axis2`). The critical value per Sharpe is the largest `c_hat < c`
/// at which the misspecified P&L vanishes.
pub fn scan_concavity(
    actual_c: f64,
    g_curve: &GCurve,
    sharpe_values: &[f64],
    c_hat_values: &[f64],
    horizon: f64,
    tau: f64,
) -> Result<ScanResult> {
    check_lattice("sharpe", sharpe_values)?;
    check_lattice("c_hat", c_hat_values)?;
    g_curve.validate()?;
    let g_actual = g_curve.eval(actual_c);
    let case = |sharpe: f64, c_hat: f64| ConcavityCase {
        actual_c,
        believed_c: c_hat,
        g_actual,
        g_believed: g_curve.eval(c_hat),
        sharpe,
        horizon,
        tau,
    };
    // validates every believed value once up front so the walk cannot fail
    for &c_hat in c_hat_values {
        misspec_constant_alpha(&case(1.0, c_hat))?;
    }
    let mut below: Vec<f64> = c_hat_values.iter().copied().filter(|&x| x < actual_c && !same(x, actual_c)).collect();
    below.sort_by(|a, b| b.total_cmp(a));
    below.insert(0, actual_c);

    let rows = map_range(sharpe_values.len(), |i2| -> Result<_> {
        let sharpe = sharpe_values[i2];
        let u_opt = optimal_constant_alpha(actual_c, g_actual, sharpe, horizon, tau)?;
        let u_mis = c_hat_values
            .iter()
            .map(|&c_hat| {
                if same(c_hat, actual_c) {
                    Ok(u_opt)
                } else {
                    misspec_constant_alpha(&case(sharpe, c_hat))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        let u = |x: f64| misspec_constant_alpha(&case(sharpe, x)).unwrap_or(f64::NAN);
        let (critical, monotone) = if u_opt > 0.0 {
            first_crossing(u, &below)
        } else {
            (None, true)
        };
        Ok((u_opt, u_mis, critical, monotone))
    });

    let mut result = ScanResult {
        axis1: c_hat_values.to_vec(),
        axis2: sharpe_values.to_vec(),
        ratio: Vec::new(),
        u_misspec: Vec::new(),
        u_opt: Vec::new(),
        critical: Vec::new(),
        flags: Vec::new(),
    };
    for (row, &sharpe) in rows.into_iter().zip(sharpe_values) {
        let (u_opt, u_mis, critical, monotone) = row?;
        if !monotone && sharpe.abs() >= MONOTONE_SHARPE {
            result.flags.push(format!(
                "sharpe {sharpe}: P&L not monotone for c_hat decreasing below {actual_c}"
            ));
        }
        result.ratio.push(u_mis.iter().map(|u| u / u_opt).collect());
        result.u_misspec.push(u_mis);
        result.u_opt.push(u_opt);
        result.critical.push(critical);
    }
    Ok(result)
}

/// OU-alpha steady-state profit ratio over believed decay (`axis1`) and alpha
/// relaxation time (`axis2`). Values are per `sigma V` per day for a
/// unit-Sharpe signal. The critical value per `theta` is the smallest
/// `tau_hat > tau` at which the misspecified P&L vanishes.
pub fn scan_decay(
    actual_tau: f64,
    theta_values: &[f64],
    tau_hat_values: &[f64],
    c: f64,
    g_curve: &GCurve,
) -> Result<ScanResult> {
    check_lattice("theta", theta_values)?;
    check_lattice("tau_hat", tau_hat_values)?;
    check_positive("tau", actual_tau)?;
    check_positive("c", c)?;
    for &v in theta_values.iter().chain(tau_hat_values) {
        check_positive("decay lattice", v)?;
    }
    g_curve.validate()?;
    let g_actual = g_curve.eval(actual_tau);
    let moment = normal_abs_moment(1.0, 1.0 + 1.0 / c);
    let case = |theta: f64, tau_hat: f64| DecayCase {
        actual_tau,
        believed_tau: tau_hat,
        theta,
        c,
        g_actual,
        g_believed: g_curve.eval(tau_hat),
        moment,
    };
    let mut above: Vec<f64> = tau_hat_values
        .iter()
        .copied()
        .filter(|&x| x > actual_tau && !same(x, actual_tau))
        .collect();
    above.sort_by(f64::total_cmp);
    above.insert(0, actual_tau);

    let rows = map_range(theta_values.len(), |i2| -> Result<_> {
        let theta = theta_values[i2];
        let u_opt = misspec_value_decay_ou(&case(theta, actual_tau))?.optimal;
        let u_mis = tau_hat_values
            .iter()
            .map(|&tau_hat| {
                if same(tau_hat, actual_tau) {
                    Ok(u_opt)
                } else {
                    misspec_value_decay_ou(&case(theta, tau_hat)).map(|v| v.misspecified)
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        let u = |x: f64| {
            misspec_value_decay_ou(&case(theta, x)).map_or(f64::NAN, |v| v.misspecified)
        };
        let (critical, _) = first_crossing(u, &above);
        Ok((u_opt, u_mis, critical))
    });

    let mut result = ScanResult {
        axis1: tau_hat_values.to_vec(),
        axis2: theta_values.to_vec(),
        ratio: Vec::new(),
        u_misspec: Vec::new(),
        u_opt: Vec::new(),
        critical: Vec::new(),
        flags: Vec::new(),
    };
    for row in rows {
        let (u_opt, u_mis, critical) = row?;
        result.ratio.push(u_mis.iter().map(|u| u / u_opt).collect());
        result.u_misspec.push(u_mis);
        result.u_opt.push(u_opt);
        result.critical.push(critical);
    }
    Ok(result)
}

/// Paired statistical and P&L sensitivity curves on a shared `c_hat` axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig1Curves {
    pub c_hat: Vec<f64>,
    /// `R^2(c_hat) / R^2(c)`.
    pub r2_ratio: Vec<f64>,
    /// `U(c_hat) / U(c)`.
    pub u_ratio: Vec<f64>,
    /// `c -/+ std(c)` when a bootstrap dispersion is supplied.
    pub band: Option<(f64, f64)>,
}

/// Compare how much a concavity error costs in fit quality and in P&L, using
/// the calibrated prefactors at decay `tau`.
pub fn statistical_vs_pnl(
    calib: &CalibGrid,
    actual_c: f64,
    tau: f64,
    sharpe: f64,
    horizon: f64,
    c_std: Option<f64>,
) -> Result<Fig1Curves> {
    let ti = calib.tau_index(tau).ok_or_else(|| {
        Error::GridMismatch(format!("calibration grid has no tau = {tau} column"))
    })?;
    let ci = calib.c_index(actual_c).ok_or_else(|| {
        Error::GridMismatch(format!("calibration grid has no c = {actual_c} row"))
    })?;
    if !calib.valid[ci][ti] {
        return Err(Error::InsufficientData(
            "calibration cell at the actual parameters is invalid".into(),
        ));
    }
    let g_curve = GCurve::concavity_from_calib(calib, ti)?;
    let scan = scan_concavity(actual_c, &g_curve, &[sharpe], &calib.c_values, horizon, tau)?;
    let r2_ref = calib.r2[ci][ti];
    Ok(Fig1Curves {
        c_hat: calib.c_values.clone(),
        r2_ratio: calib.r2.iter().map(|row| row[ti] / r2_ref).collect(),
        u_ratio: scan.ratio.into_iter().next().unwrap_or_default(),
        band: c_std.map(|s| (actual_c - s, actual_c + s)),
    })
}

/// True when `values` rise (weakly) to a single maximum and then fall.
pub fn is_unimodal(values: &[f64]) -> bool {
    let Some(peak) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
    else {
        return true;
    };
    values[..=peak].windows(2).all(|w| w[0] <= w[1])
        && values[peak..].windows(2).all(|w| w[0] >= w[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pnl::decay_zero_profit;
    use approx::assert_relative_eq;

    fn lattice(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n).map(|k| lo + k as f64 * step).collect()
    }

    fn fitted_g() -> GCurve {
        GCurve::PowerLaw {
            g_ref: 1.0,
            c_ref: 0.48,
            size_ref: 0.01,
        }
    }

    #[test]
    fn table_interpolates_in_log_g() {
        let t = GCurve::table(vec![0.1, 1.0], vec![1.0, 100.0], true).unwrap();
        assert_relative_eq!(t.eval(10f64.sqrt() / 10.0), 10.0, max_relative = 1e-12);
        assert_eq!(t.eval(0.01), 1.0);
        assert_eq!(t.eval(5.0), 100.0);
        assert!(GCurve::table(vec![1.0, 0.5], vec![1.0, 1.0], false).is_err());
    }

    #[test]
    fn correct_column_is_one() {
        let chat = [0.3, 0.4, 0.48, 0.7, 1.0];
        let s = scan_concavity(0.48, &fitted_g(), &[0.5, 1.0, 2.0], &chat, 1.0, 0.2).unwrap();
        for row in &s.ratio {
            assert_eq!(row[2], 1.0);
        }
    }

    #[test]
    fn loss_side_is_aggressive() {
        let chat = lattice(0.3, 1.0, 0.01);
        let s = scan_concavity(0.48, &fitted_g(), &[1.0], &chat, 1.0, 0.2).unwrap();
        for (c, r) in chat.iter().zip(&s.ratio[0]) {
            if *c >= 0.48 - 1e-12 {
                assert!(*r > 0.0 && *r <= 1.0 + 1e-12, "c_hat {c}: {r}");
            }
        }
        let c_min = s.critical[0].unwrap();
        assert!(c_min < 0.48 && c_min >= 0.3);
        let case = ConcavityCase {
            actual_c: 0.48,
            believed_c: c_min,
            g_actual: 1.0,
            g_believed: fitted_g().eval(c_min),
            sharpe: 1.0,
            horizon: 1.0,
            tau: 0.2,
        };
        assert!(misspec_constant_alpha(&case).unwrap().abs() < 1e-9);
    }

    #[test]
    fn decay_root_matches_closed_form() {
        let tau_hat = lattice(0.05, 3.0, 0.05);
        let thetas = [0.5, 1.0, 2.0];
        let s = scan_decay(0.2, &thetas, &tau_hat, 0.48, &GCurve::constant(1.0)).unwrap();
        for (theta, root) in thetas.iter().zip(&s.critical) {
            let exact = decay_zero_profit(0.2, *theta, 0.48);
            assert!((root.unwrap() - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn decay_root_absent_when_out_of_range() {
        let s = scan_decay(0.2, &[1.0], &[0.1, 0.2, 0.3], 0.48, &GCurve::constant(1.0)).unwrap();
        assert_eq!(s.critical, vec![None]);
    }

    #[test]
    fn empty_lattice_is_rejected() {
        assert!(scan_concavity(0.5, &GCurve::constant(1.0), &[], &[0.5], 1.0, 0.2).is_err());
        assert!(scan_decay(0.2, &[1.0], &[], 0.5, &GCurve::constant(1.0)).is_err());
    }

    #[test]
    fn unimodality() {
        assert!(is_unimodal(&[0.1, 0.5, 1.0, 0.7, 0.7, 0.2]));
        assert!(!is_unimodal(&[0.1, 0.5, 0.3, 1.0, 0.2]));
        assert!(is_unimodal(&[]));
    }
}
