//! Closed-form optimal trading in impact space.
//!
//! On the open interval the optimal impact is a fixed fraction of the
//! decay-adjusted alpha,
//!
//! ```text
//! I*_t = (alpha_t - tau mu_t) / (1 + c),   t in (0, T)
//! I*_T = alpha_T
//! ```
//!
//! and positions follow from the state by `Q_t = J_t + (1/tau) int_0^t J_s ds`.

use serde::{Deserialize, Serialize};

use crate::alpha::AlphaPath;
use crate::error::{check_positive, Error, Result};
use crate::model::{AfsParams, BlockTrade, TimeGrid, TradeSchedule};

/// A policy is always generated from the parameters the trader believes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub believed: AfsParams,
    /// Trading horizon `T` (days).
    pub horizon: f64,
}

impl PolicySpec {
    pub fn new(believed: AfsParams, horizon: f64) -> Result<Self> {
        let s = Self { believed, horizon };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.believed.validate()?;
        check_positive("horizon", self.horizon)
    }
}

/// An impact-state trajectory on a grid: the running state at every node
/// (node `n` holds the left limit at `T`) and the state after the terminal
/// trade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactTrajectory {
    pub grid: TimeGrid,
    pub running: Vec<f64>,
    pub terminal: f64,
}

impl ImpactTrajectory {
    pub fn zero(grid: TimeGrid) -> Self {
        Self {
            grid,
            running: vec![0.0; grid.n + 1],
            terminal: 0.0,
        }
    }

    /// Trades that keep the actual impact state on this trajectory under
    /// decay `tau`: a block at each node brings the state to target, then the
    /// rate `J / tau` holds it constant until the next node. The final block
    /// moves the state to `terminal`.
    pub fn tracking_schedule(&self, tau: f64) -> TradeSchedule {
        let n = self.grid.n;
        let mut blocks = Vec::with_capacity(n + 1);
        let mut prev = 0.0;
        for k in 0..n {
            let target = self.running[k];
            blocks.push(BlockTrade {
                time: self.grid.time(k),
                size: target - prev,
            });
            prev = target;
        }
        blocks.push(BlockTrade {
            time: self.grid.t1,
            size: self.terminal - prev,
        });
        TradeSchedule {
            rates: self.running[..n].iter().map(|j| j / tau).collect(),
            blocks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalPlan {
    pub grid: TimeGrid,
    pub alpha: Vec<f64>,
    pub drift: Vec<f64>,
    /// Target impact; node `n` carries the terminal condition `I*_T = alpha_T`.
    pub i_star: Vec<f64>,
    /// Target state; node `n` is the state after the terminal trade.
    pub j_star: Vec<f64>,
    /// Positions, including both block trades.
    pub q_star: Vec<f64>,
    /// Running target state just before `T`.
    pub j_before_terminal: f64,
    pub initial_jump: f64,
    pub terminal_jump: f64,
}

impl OptimalPlan {
    /// The plan as an impact-state trajectory.
    pub fn trajectory(&self) -> ImpactTrajectory {
        let mut running = self.j_star.clone();
        let n = self.grid.n;
        running[n] = self.j_before_terminal;
        ImpactTrajectory {
            grid: self.grid,
            running,
            terminal: self.j_star[n],
        }
    }
}

/// Optimal impact, state and positions for the believed parameters.
///
/// The open-interval branch is applied at every node from `t = 0` on (using
/// `alpha_0`, the right limit at the start); the last node carries the
/// terminal condition. `initial_jump` is the block that takes the state from
/// zero to `J*_0`.
pub fn optimal_impact(spec: &PolicySpec, alpha: &AlphaPath) -> Result<OptimalPlan> {
    spec.validate()?;
    let grid = alpha.grid;
    grid.validate()?;
    let tol = 1e-9 * spec.horizon.max(1.0);
    if grid.t0.abs() > tol || (grid.t1 - spec.horizon).abs() > tol {
        return Err(Error::GridMismatch(format!(
            "alpha grid [{}, {}] does not cover [0, {}]",
            grid.t0, grid.t1, spec.horizon
        )));
    }
    if alpha.alpha.len() != grid.len() || alpha.drift.len() != grid.len() {
        return Err(Error::GridMismatch("alpha arrays misaligned".into()));
    }
    let believed = &spec.believed;
    let lambda = believed.lambda();
    if !(lambda > 0.0) {
        return Err(Error::InvalidParam {
            name: "lambda",
            value: lambda,
            reason: "believed impact scale must be positive",
        });
    }
    let n = grid.n;
    let fraction = 1.0 / (1.0 + believed.c);
    let mut i_star: Vec<f64> = alpha.adjusted(believed.tau).map(|a| a * fraction).collect();
    let mut j_star: Vec<f64> = i_star.iter().map(|&i| believed.state_of_impact(i)).collect();
    let j_before_terminal = j_star[n];
    i_star[n] = alpha.alpha[n];
    j_star[n] = believed.state_of_impact(alpha.alpha[n]);

    let dt = grid.dt();
    let mut q_star = Vec::with_capacity(n + 1);
    let mut integral = 0.0;
    q_star.push(j_star[0]);
    for k in 1..=n {
        let right = if k == n { j_before_terminal } else { j_star[k] };
        integral += 0.5 * dt * (j_star[k - 1] + right);
        q_star.push(j_star[k] + integral / believed.tau);
    }

    Ok(OptimalPlan {
        grid,
        alpha: alpha.alpha.clone(),
        drift: alpha.drift.clone(),
        initial_jump: j_star[0],
        terminal_jump: j_star[n] - j_before_terminal,
        i_star,
        j_star,
        q_star,
        j_before_terminal,
    })
}

fn require_square_root(spec: &PolicySpec) -> Result<()> {
    spec.validate()?;
    if (spec.believed.c - 0.5).abs() > 1e-12 {
        return Err(Error::UnsupportedSpecialization("square-root impact (c = 0.5)"));
    }
    Ok(())
}

/// `Lambda = g / sqrt(1 + 4/9 T / tau)` of the square-root sizing rule.
pub fn sizing_scale(spec: &PolicySpec) -> Result<f64> {
    require_square_root(spec)?;
    let b = &spec.believed;
    Ok(b.g / (1.0 + 4.0 / 9.0 * spec.horizon / b.tau).sqrt())
}

/// Optimal order size (signed fraction of ADV) for a constant alpha with
/// Sharpe `alpha / sigma`, square-root impact only.
pub fn order_size_from_alpha(spec: &PolicySpec, sharpe: f64) -> Result<f64> {
    let scale = sizing_scale(spec)?;
    Ok(sharpe * sharpe.abs() / (scale * scale))
}

/// Constant alpha (in units of `sigma`) implied by a long-term order of
/// `q_frac` ADV; the inverse of [`order_size_from_alpha`].
pub fn implied_alpha(spec: &PolicySpec, q_frac: f64) -> Result<f64> {
    let scale = sizing_scale(spec)?;
    Ok(scale * q_frac.signum() * q_frac.abs().sqrt())
}

/// Speed-up of the optimal portfolio's trading for an OU alpha with
/// relaxation time `theta`, relative to a constant alpha: `(1 + tau/theta)^(1/c)`.
pub fn turnover_factor(c: f64, tau: f64, theta: f64) -> f64 {
    (1.0 + tau / theta).powf(1.0 / c)
}

/// Best-execution check for transaction cost analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcaCheck {
    /// Optimal impact as a fraction of alpha, `(1 + tau/theta) / (1 + c)`.
    pub optimal_fraction: f64,
    pub expected_impact: f64,
    pub observed_impact: f64,
    /// `observed / expected`; 1 means the trading was optimal.
    pub ratio: f64,
}

/// Compare an observed impact level with the optimal one for an alpha of
/// level `alpha` decaying on timescale `theta` (`None` for a constant alpha).
pub fn tca_check(
    c: f64,
    tau: f64,
    theta: Option<f64>,
    alpha: f64,
    observed_impact: f64,
) -> Result<TcaCheck> {
    check_positive("c", c)?;
    check_positive("tau", tau)?;
    if let Some(t) = theta {
        check_positive("theta", t)?;
    }
    let optimal_fraction = (1.0 + theta.map_or(0.0, |t| tau / t)) / (1.0 + c);
    let expected_impact = optimal_fraction * alpha;
    Ok(TcaCheck {
        optimal_fraction,
        expected_impact,
        observed_impact,
        ratio: observed_impact / expected_impact,
    })
}
