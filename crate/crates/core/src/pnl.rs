//! Expected P&L of impact-state policies.
//!
//! For any impact-state trajectory `J` evaluated under the actual parameters
//! `(c, tau, lambda)`:
//!
//! ```text
//! E[Y_T] = (1/tau) int_0^T ((alpha_t - tau mu_t) J_t - lambda |J_t|^(1+c)) dt
//!          + alpha_T J_T - lambda/(1+c) |J_T|^(1+c)
//! ```
//!
//! The closed forms for constant and OU alphas below are coded separately
//! from this functional so that each can check the other.

use serde::{Deserialize, Serialize};

use crate::alpha::{sample_alpha, AlphaModel, AlphaPath};
use crate::error::{check_positive, Error, Result};
use crate::model::{AfsParams, TimeGrid};
use crate::policy::{optimal_impact, ImpactTrajectory, PolicySpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PnlReport {
    /// Expected P&L `E[Y_T]` (price x shares).
    pub raw: f64,
    /// `raw / lambda_actual`.
    pub normalized: f64,
    /// Alpha captured, `E int alpha dQ`.
    pub alpha_capture: f64,
    /// Impact paid, `E int I dQ`.
    pub impact_paid: f64,
    /// Monte Carlo paths (0 for closed forms).
    pub n_paths: usize,
    /// Monte Carlo standard error of `raw` (0 for closed forms).
    pub stderr: f64,
}

impl PnlReport {
    pub(crate) fn new(
        actual: &AfsParams,
        alpha_capture: f64,
        impact_paid: f64,
        n_paths: usize,
        stderr: f64,
    ) -> Self {
        let raw = alpha_capture - impact_paid;
        Self {
            raw,
            normalized: raw / actual.lambda(),
            alpha_capture,
            impact_paid,
            n_paths,
            stderr,
        }
    }

    /// `raw` in units of `sigma * adv`.
    pub fn per_sigma_adv(&self, actual: &AfsParams) -> f64 {
        self.raw / (actual.sigma * actual.adv)
    }
}

/// Trapezoid rule on a uniform grid.
fn trapezoid(dt: f64, f: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = f.collect();
    let n = v.len();
    if n < 2 {
        return 0.0;
    }
    let inner: f64 = v[1..n - 1].iter().sum();
    dt * (inner + 0.5 * (v[0] + v[n - 1]))
}

/// Expected P&L of the impact-state trajectory `traj` under `actual`.
pub fn value_impact_space(
    actual: &AfsParams,
    traj: &ImpactTrajectory,
    alpha: &AlphaPath,
) -> Result<PnlReport> {
    actual.validate()?;
    if !traj.grid.matches(&alpha.grid) {
        return Err(Error::GridMismatch(
            "impact trajectory and alpha use different grids".into(),
        ));
    }
    let len = traj.grid.len();
    if traj.running.len() != len || alpha.alpha.len() != len || alpha.drift.len() != len {
        return Err(Error::GridMismatch("trajectory arrays misaligned".into()));
    }
    let dt = traj.grid.dt();
    let lambda = actual.lambda();
    let (c, tau) = (actual.c, actual.tau);
    let capture_rate = alpha.adjusted(tau).zip(&traj.running).map(|(a, j)| a * j);
    let cost_rate = traj.running.iter().map(|j| lambda * j.abs().powf(1.0 + c));
    let n = traj.grid.n;
    let capture = trapezoid(dt, capture_rate) / tau + alpha.alpha[n] * traj.terminal;
    let paid = trapezoid(dt, cost_rate) / tau + actual.impact_antiderivative(traj.terminal);
    Ok(PnlReport::new(actual, capture, paid, 0, 0.0))
}

/// Expected P&L of the policy optimal for `spec` under `actual`, for a
/// deterministic alpha model. The grid is doubled from `n_start` until two
/// successive values differ by less than `rel_tol`, up to `2^20` steps.
pub fn value_policy_refined(
    actual: &AfsParams,
    spec: &PolicySpec,
    model: &AlphaModel,
    n_start: usize,
    rel_tol: f64,
) -> Result<PnlReport> {
    if !model.is_deterministic() {
        return Err(Error::UnsupportedSpecialization("deterministic alpha models"));
    }
    if matches!(model.kind, crate::alpha::AlphaKind::Sampled(_)) {
        return Err(Error::UnsupportedSpecialization(
            "analytic alpha models (sampled paths have a fixed grid)",
        ));
    }
    const MAX_STEPS: usize = 1 << 20;
    let eval = |n: usize| -> Result<PnlReport> {
        let grid = TimeGrid::horizon(spec.horizon, n)?;
        let alpha = sample_alpha(model, &grid, 0)?;
        let plan = optimal_impact(spec, &alpha)?;
        value_impact_space(actual, &plan.trajectory(), &alpha)
    };
    let mut n = n_start.max(1);
    let mut prev = eval(n)?;
    while n < MAX_STEPS {
        n *= 2;
        let next = eval(n)?;
        let scale = next.raw.abs().max(f64::MIN_POSITIVE);
        if (next.raw - prev.raw).abs() <= rel_tol * scale {
            return Ok(next);
        }
        prev = next;
    }
    Ok(prev)
}

/// Inputs of the constant-alpha concavity misspecification formulas. The
/// trader believes `believed_c` with prefactor `g_believed`; the market has
/// `actual_c` and `g_actual`. Decay is correctly specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcavityCase {
    pub actual_c: f64,
    pub believed_c: f64,
    pub g_actual: f64,
    pub g_believed: f64,
    /// Sharpe ratio `alpha / sigma`.
    pub sharpe: f64,
    /// Trading horizon `T` (days).
    pub horizon: f64,
    pub tau: f64,
}

/// Misspecified and optimal P&L, in units of `sigma * adv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MisspecValue {
    pub misspecified: f64,
    pub optimal: f64,
}

impl MisspecValue {
    pub fn ratio(&self) -> f64 {
        self.misspecified / self.optimal
    }
}

fn validate_concavity(case: &ConcavityCase) -> Result<()> {
    for (name, c) in [("actual_c", case.actual_c), ("believed_c", case.believed_c)] {
        check_positive(name, c)?;
        if c > 1.0 {
            return Err(Error::InvalidParam {
                name,
                value: c,
                reason: "concavity must lie in (0, 1]",
            });
        }
    }
    check_positive("g_actual", case.g_actual)?;
    check_positive("g_believed", case.g_believed)?;
    check_positive("horizon", case.horizon)?;
    check_positive("tau", case.tau)?;
    if !case.sharpe.is_finite() {
        return Err(Error::NonFinite("sharpe"));
    }
    Ok(())
}

/// `U(J(c_hat); c)`: expected P&L per `sigma V` of the policy optimal for
/// `believed_c` when impact actually has concavity `actual_c`, constant alpha.
pub fn misspec_constant_alpha(case: &ConcavityCase) -> Result<f64> {
    validate_concavity(case)?;
    let (c, ch) = (case.actual_c, case.believed_c);
    let s = case.sharpe.abs();
    let x = case.horizon / case.tau;
    let capture = s.powf(1.0 + 1.0 / ch) * (x / (1.0 + ch).powf(1.0 / ch) + 1.0);
    let cost = case.g_actual / case.g_believed.powf(c / ch)
        * s.powf((1.0 + c) / ch)
        * (x / (1.0 + ch).powf((1.0 + c) / ch) + 1.0 / (1.0 + c));
    Ok((capture - cost) / case.g_believed.powf(1.0 / ch))
}

/// `U(J(c); c)`: the optimal constant-alpha P&L per `sigma V`.
pub fn optimal_constant_alpha(c: f64, g: f64, sharpe: f64, horizon: f64, tau: f64) -> Result<f64> {
    validate_concavity(&ConcavityCase {
        actual_c: c,
        believed_c: c,
        g_actual: g,
        g_believed: g,
        sharpe,
        horizon,
        tau,
    })?;
    let s = sharpe.abs();
    Ok(s.powf(1.0 + 1.0 / c) / g.powf(1.0 / c) * c / (1.0 + c)
        * (horizon / (tau * (1.0 + c).powf(1.0 / c)) + 1.0))
}

/// Both constant-alpha values for a concavity misspecification.
pub fn misspec_value_constant_alpha(case: &ConcavityCase) -> Result<MisspecValue> {
    Ok(MisspecValue {
        misspecified: misspec_constant_alpha(case)?,
        optimal: optimal_constant_alpha(
            case.actual_c,
            case.g_actual,
            case.sharpe,
            case.horizon,
            case.tau,
        )?,
    })
}

/// Inputs of the OU-alpha decay misspecification formulas (steady state).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayCase {
    pub actual_tau: f64,
    pub believed_tau: f64,
    /// Alpha relaxation time.
    pub theta: f64,
    pub c: f64,
    pub g_actual: f64,
    pub g_believed: f64,
    /// Stationary moment `E|alpha/sigma|^(1 + 1/c)`.
    pub moment: f64,
}

fn validate_decay(case: &DecayCase) -> Result<()> {
    check_positive("actual_tau", case.actual_tau)?;
    check_positive("believed_tau", case.believed_tau)?;
    check_positive("theta", case.theta)?;
    check_positive("c", case.c)?;
    check_positive("g_actual", case.g_actual)?;
    check_positive("g_believed", case.g_believed)?;
    check_positive("moment", case.moment)
}

/// Steady-state P&L rate per `sigma V` (per day) of the misspecified
/// (`U(J(tau_hat); tau)`) and optimal (`U(J(tau); tau)`) policies for an OU alpha.
pub fn misspec_value_decay_ou(case: &DecayCase) -> Result<MisspecValue> {
    validate_decay(case)?;
    let c = case.c;
    let tau = case.actual_tau;
    let a_hat = 1.0 + case.believed_tau / case.theta;
    let a = 1.0 + tau / case.theta;
    let misspecified = (a_hat / (case.g_believed * (1.0 + c))).powf(1.0 / c)
        * (a - case.g_actual * a_hat / (case.g_believed * (1.0 + c)))
        * case.moment
        / tau;
    let optimal = c * a.powf(1.0 + 1.0 / c)
        / (case.g_actual.powf(1.0 / c) * (1.0 + c).powf(1.0 + 1.0 / c))
        * case.moment
        / tau;
    Ok(MisspecValue {
        misspecified,
        optimal,
    })
}

/// Profit ratio of a decay misspecification when `g(tau) = g(tau_hat)`:
/// `(1/c) rho^(1/c) (1 + c - rho)` with `rho = (1 + tau_hat/theta) / (1 + tau/theta)`.
pub fn decay_ratio_equal_g(actual_tau: f64, believed_tau: f64, theta: f64, c: f64) -> f64 {
    let rho = (1.0 + believed_tau / theta) / (1.0 + actual_tau / theta);
    rho.powf(1.0 / c) * (1.0 + c - rho) / c
}

/// Believed decay at which the P&L changes sign when `g(tau) = g(tau_hat)`:
/// `1 + tau_hat/theta = (1 + c)(1 + tau/theta)`.
pub fn decay_zero_profit(actual_tau: f64, theta: f64, c: f64) -> f64 {
    theta * ((1.0 + c) * (1.0 + actual_tau / theta) - 1.0)
}
