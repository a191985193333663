//! Impact model parameters and forward dynamics.
//!
//! Price impact is a power of an exponentially decaying moving average of
//! signed order flow:
//!
//! ```text
//! I_t = lambda * sign(J_t) * |J_t|^c,     dJ_t = -J_t / tau dt + dQ_t,  J_0 = 0
//! lambda = sigma * g / V^c
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_positive, Error, Result};
use crate::stats::signed_pow;

/// Impact model parameters in trader units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AfsParams {
    /// Concavity exponent, in (0, 1].
    pub c: f64,
    /// Impact decay timescale (days).
    pub tau: f64,
    /// Daily price volatility (price units per sqrt(day)).
    pub sigma: f64,
    /// Average daily volume (shares per day).
    pub adv: f64,
    /// Dimensionless impact prefactor.
    pub g: f64,
}

impl AfsParams {
    pub fn new(c: f64, tau: f64, sigma: f64, adv: f64, g: f64) -> Result<Self> {
        let p = Self {
            c,
            tau,
            sigma,
            adv,
            g,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("c", self.c)?;
        if self.c > 1.0 {
            return Err(Error::InvalidParam {
                name: "c",
                value: self.c,
                reason: "concavity must lie in (0, 1]",
            });
        }
        check_positive("tau", self.tau)?;
        check_positive("sigma", self.sigma)?;
        check_positive("adv", self.adv)?;
        check_positive("g", self.g)?;
        Ok(())
    }

    /// `lambda = sigma * g / adv^c`. Always derived, never stored.
    #[inline]
    pub fn lambda(&self) -> f64 {
        self.sigma * self.g / self.adv.powf(self.c)
    }

    pub fn with_c(self, c: f64) -> Self {
        Self { c, ..self }
    }

    pub fn with_tau(self, tau: f64) -> Self {
        Self { tau, ..self }
    }

    pub fn with_g(self, g: f64) -> Self {
        Self { g, ..self }
    }

    /// Impact state that produces price impact `impact`; inverse of
    /// [`impact_of_state`].
    #[inline]
    pub fn state_of_impact(&self, impact: f64) -> f64 {
        signed_pow(impact / self.lambda(), 1.0 / self.c)
    }

    /// Antiderivative of the impact function, `lambda |x|^(1+c) / (1+c)`.
    /// The cost of a block trade moving the state from `a` to `b` is
    /// `block_cost(b) - block_cost(a)`.
    #[inline]
    pub fn impact_antiderivative(&self, x: f64) -> f64 {
        self.lambda() * x.abs().powf(1.0 + self.c) / (1.0 + self.c)
    }
}

/// Price impact of impact state `j`: `lambda sign(j) |j|^c`.
#[inline]
pub fn impact_of_state(params: &AfsParams, j: f64) -> f64 {
    params.lambda() * signed_pow(j, params.c)
}

/// Uniform time grid with `n` steps on `[t0, t1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, n: usize) -> Result<Self> {
        let g = Self { t0, t1, n };
        g.validate()?;
        Ok(g)
    }

    /// Grid on `[0, horizon]`.
    pub fn horizon(horizon: f64, n: usize) -> Result<Self> {
        Self::new(0.0, horizon, n)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0.is_finite() && self.t1.is_finite()) {
            return Err(Error::NonFinite("time grid bounds"));
        }
        if self.t1 <= self.t0 {
            return Err(Error::InvalidParam {
                name: "t1",
                value: self.t1,
                reason: "grid end must exceed grid start",
            });
        }
        if self.n == 0 {
            return Err(Error::InvalidParam {
                name: "n",
                value: 0.0,
                reason: "grid needs at least one step",
            });
        }
        Ok(())
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.n as f64
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        if k == self.n {
            self.t1
        } else {
            self.t0 + k as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n).map(|k| self.time(k)).collect()
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node index for time `t`, if `t` sits on a node.
    pub fn node_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.t0) / self.dt();
        let k = x.round();
        if k < 0.0 || k > self.n as f64 || (x - k).abs() > 1e-9 {
            None
        } else {
            Some(k as usize)
        }
    }

    /// Same grid up to floating tolerance.
    pub fn matches(&self, other: &TimeGrid) -> bool {
        let tol = 1e-12 * (self.t1 - self.t0).abs().max(1.0);
        self.n == other.n && (self.t0 - other.t0).abs() <= tol && (self.t1 - other.t1).abs() <= tol
    }
}

/// A block trade of `size` shares executed instantaneously at `time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockTrade {
    pub time: f64,
    pub size: f64,
}

/// Trading instructions on a grid: a constant rate over each step plus
/// block trades at grid nodes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TradeSchedule {
    /// Trade rate (shares/day) over step `k`, `len == grid.n`.
    pub rates: Vec<f64>,
    pub blocks: Vec<BlockTrade>,
}

impl TradeSchedule {
    pub fn idle(grid: &TimeGrid) -> Self {
        Self {
            rates: vec![0.0; grid.n],
            blocks: Vec::new(),
        }
    }

    /// Negated trades, used for sign-symmetry checks.
    pub fn negated(&self) -> Self {
        Self {
            rates: self.rates.iter().map(|r| -r).collect(),
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockTrade {
                    time: b.time,
                    size: -b.size,
                })
                .collect(),
        }
    }
}

/// Time-indexed position, impact state and price impact. Node values are
/// right-continuous: they include any block trade executed at that node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactPath {
    pub grid: TimeGrid,
    pub rates: Vec<f64>,
    pub q: Vec<f64>,
    pub j: Vec<f64>,
    pub i: Vec<f64>,
    /// Block trades merged per node, sorted by time.
    pub jumps: Vec<BlockTrade>,
    /// Block size per node (`len == grid.n + 1`), zero where none.
    pub node_blocks: Vec<f64>,
}

impl ImpactPath {
    /// Impact state immediately before the block trade at node `k`.
    pub fn state_before(&self, k: usize) -> f64 {
        self.j[k] - self.node_blocks[k]
    }
}

/// Forward dynamics with exact exponential stepping.
///
/// For a constant rate `r` over a step of length `dt`:
/// `J <- e^{-dt/tau} J + r tau (1 - e^{-dt/tau})`. Block trades are applied
/// at the node before the step starts.
pub fn evolve_impact(
    params: &AfsParams,
    grid: &TimeGrid,
    trades: &TradeSchedule,
) -> Result<ImpactPath> {
    params.validate()?;
    grid.validate()?;
    if trades.rates.len() != grid.n {
        return Err(Error::GridMismatch(format!(
            "{} trade rates for a grid with {} steps",
            trades.rates.len(),
            grid.n
        )));
    }
    check_finite("trade rates", &trades.rates)?;
    let mut node_blocks = vec![0.0; grid.n + 1];
    for b in &trades.blocks {
        if !(b.time.is_finite() && b.size.is_finite()) {
            return Err(Error::NonFinite("block trades"));
        }
        let k = grid.node_of(b.time).ok_or(Error::JumpOffGrid(b.time))?;
        node_blocks[k] += b.size;
    }

    let dt = grid.dt();
    let decay = (-dt / params.tau).exp();
    let gain = params.tau * (-(dt / params.tau)).exp_m1().abs();
    let n = grid.n;
    let mut q = Vec::with_capacity(n + 1);
    let mut j = Vec::with_capacity(n + 1);
    let (mut qk, mut jk) = (node_blocks[0], node_blocks[0]);
    q.push(qk);
    j.push(jk);
    for k in 0..n {
        let r = trades.rates[k];
        jk = decay * jk + r * gain + node_blocks[k + 1];
        qk += r * dt + node_blocks[k + 1];
        q.push(qk);
        j.push(jk);
    }
    let i = j.iter().map(|&x| impact_of_state(params, x)).collect();
    let jumps = node_blocks
        .iter()
        .enumerate()
        .filter(|(_, &s)| s != 0.0)
        .map(|(k, &size)| BlockTrade {
            time: grid.time(k),
            size,
        })
        .collect();
    Ok(ImpactPath {
        grid: *grid,
        rates: trades.rates.clone(),
        q,
        j,
        i,
        jumps,
        node_blocks,
    })
}

/// Total impact cost `int I dQ` of a path.
///
/// Smooth segments use the midpoint rule with the exact state at the step
/// midpoint. A block moving the state from `J-` to `J-+dQ` costs
/// `H(J- + dQ) - H(J-)` with `H` the impact antiderivative.
pub fn execution_cost(params: &AfsParams, path: &ImpactPath) -> Result<f64> {
    params.validate()?;
    let n = path.grid.n;
    if path.j.len() != n + 1 || path.rates.len() != n || path.node_blocks.len() != n + 1 {
        return Err(Error::GridMismatch("impact path arrays misaligned".into()));
    }
    let dt = path.grid.dt();
    let half = dt / 2.0;
    let decay_half = (-half / params.tau).exp();
    let gain_half = params.tau * (-(half / params.tau)).exp_m1().abs();
    let mut cost = 0.0;
    for k in 0..=n {
        let block = path.node_blocks[k];
        if block != 0.0 {
            let after = path.j[k];
            cost += params.impact_antiderivative(after) - params.impact_antiderivative(after - block);
        }
        if k < n {
            let r = path.rates[k];
            if r != 0.0 {
                let mid = decay_half * path.j[k] + r * gain_half;
                cost += r * dt * impact_of_state(params, mid);
            }
        }
    }
    Ok(cost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit(c: f64) -> AfsParams {
        AfsParams::new(c, 0.2, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn impact_of_state_examples() {
        assert_eq!(impact_of_state(&unit(0.5), 0.0), 0.0);
        assert_relative_eq!(impact_of_state(&unit(0.5), 4.0), 2.0, max_relative = 1e-15);
        assert_relative_eq!(impact_of_state(&unit(0.48), -1.0), -1.0, max_relative = 1e-15);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(AfsParams::new(0.0, 0.2, 1.0, 1.0, 1.0).is_err());
        assert!(AfsParams::new(1.2, 0.2, 1.0, 1.0, 1.0).is_err());
        assert!(AfsParams::new(0.5, -1.0, 1.0, 1.0, 1.0).is_err());
        assert!(AfsParams::new(0.5, 0.2, 1.0, f64::NAN, 1.0).is_err());
        assert!(AfsParams::new(1.0, 0.2, 1.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn lambda_normalisation() {
        let p = AfsParams::new(0.5, 0.2, 2.0, 1e6, 0.7).unwrap();
        assert_relative_eq!(p.lambda(), 2.0 * 0.7 / 1e3, max_relative = 1e-14);
    }

    #[test]
    fn zero_trades_give_zero_path() {
        let grid = TimeGrid::horizon(1.0, 10).unwrap();
        let path = evolve_impact(&unit(0.5), &grid, &TradeSchedule::idle(&grid)).unwrap();
        assert!(path.j.iter().chain(&path.i).chain(&path.q).all(|&v| v == 0.0));
        assert_eq!(execution_cost(&unit(0.5), &path).unwrap(), 0.0);
    }

    #[test]
    fn single_block_decays_exponentially() {
        let grid = TimeGrid::horizon(1.0, 50).unwrap();
        let trades = TradeSchedule {
            rates: vec![0.0; 50],
            blocks: vec![BlockTrade {
                time: 0.0,
                size: 1.0,
            }],
        };
        let path = evolve_impact(&unit(0.5), &grid, &trades).unwrap();
        let k = grid.node_of(0.2).unwrap();
        assert_relative_eq!(path.j[k], (-1.0f64).exp(), max_relative = 1e-13);
        for (k, &j) in path.j.iter().enumerate() {
            assert_relative_eq!(j, (-grid.time(k) / 0.2).exp(), max_relative = 1e-12);
        }
    }

    #[test]
    fn single_block_cost() {
        let grid = TimeGrid::horizon(1.0, 4).unwrap();
        let trades = TradeSchedule {
            rates: vec![0.0; 4],
            blocks: vec![BlockTrade {
                time: 0.0,
                size: 1.0,
            }],
        };
        let path = evolve_impact(&unit(0.5), &grid, &trades).unwrap();
        assert_relative_eq!(execution_cost(&unit(0.5), &path).unwrap(), 1.0 / 1.5, max_relative = 1e-14);
    }

    #[test]
    fn off_grid_block_rejected() {
        let grid = TimeGrid::horizon(1.0, 4).unwrap();
        let trades = TradeSchedule {
            rates: vec![0.0; 4],
            blocks: vec![BlockTrade {
                time: 0.1,
                size: 1.0,
            }],
        };
        assert!(matches!(
            evolve_impact(&unit(0.5), &grid, &trades),
            Err(Error::JumpOffGrid(_))
        ));
    }

    #[test]
    fn non_finite_rates_rejected() {
        let grid = TimeGrid::horizon(1.0, 2).unwrap();
        let trades = TradeSchedule {
            rates: vec![0.0, f64::INFINITY],
            blocks: vec![],
        };
        assert!(matches!(
            evolve_impact(&unit(0.5), &grid, &trades),
            Err(Error::NonFinite(_))
        ));
        assert!(TimeGrid::horizon(1.0, 0).is_err());
    }

    #[test]
    fn crossing_zero_block_costs_nothing_by_symmetry() {
        let p = unit(0.5);
        // from +1 to -1: the integral of an odd function over a symmetric range
        assert_relative_eq!(
            p.impact_antiderivative(-1.0) - p.impact_antiderivative(1.0),
            0.0
        );
    }
}
