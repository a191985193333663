//! Monte Carlo execution of a (possibly misspecified) policy.
//!
//! Each path samples an alpha, rebuilds the policy the trader believes is
//! optimal, and executes it under the actual parameters. The trader tracks the
//! believed target impact state: a block at each node brings the actual state
//! to target and a steady rate holds it there until the next node
//! ([`ImpactTrajectory::tracking_schedule`]). Impact costs come from
//! [`execution_cost`] on the realised path.
//!
//! [`ImpactTrajectory::tracking_schedule`]: crate::policy::ImpactTrajectory::tracking_schedule

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::alpha::{sample_alpha_with, AlphaModel, AlphaPath};
use crate::error::{Error, Result};
use crate::model::{evolve_impact, execution_cost, AfsParams, ImpactPath, TimeGrid};
use crate::par::map_range;
use crate::pnl::PnlReport;
use crate::policy::{optimal_impact, PolicySpec};
use crate::stats::{mean_stderr, pairwise_sum, stream_rng};

/// How trading gains are booked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Accounting {
    /// Each trade earns the alpha prevailing when it is made, `sum alpha dQ`.
    #[default]
    AlphaCapture,
    /// Mark to an unperturbed price `dS = -mu dt + sigma dW`, which realises
    /// the alpha as drift, and hold the terminal position over the alpha
    /// horizon `h` (gain `Q_T (alpha_T + sigma sqrt(h) Z)`).
    PriceDiffusion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub accounting: Accounting,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_paths: 10_000,
            n_steps: 200,
            seed: 42,
            accounting: Accounting::AlphaCapture,
        }
    }
}

struct Execution {
    alpha: AlphaPath,
    path: ImpactPath,
    cost: f64,
}

fn execute(actual: &AfsParams, spec: &PolicySpec, alpha: AlphaPath) -> Result<Execution> {
    let plan = optimal_impact(spec, &alpha)?;
    let schedule = plan.trajectory().tracking_schedule(actual.tau);
    let path = evolve_impact(actual, &alpha.grid, &schedule)?;
    let cost = execution_cost(actual, &path)?;
    Ok(Execution { alpha, path, cost })
}

fn alpha_capture(ex: &Execution) -> f64 {
    let dt = ex.path.grid.dt();
    let n = ex.path.grid.n;
    let mut total = 0.0;
    for k in 0..=n {
        total += ex.alpha.alpha[k] * ex.path.node_blocks[k];
        if k < n {
            total += ex.alpha.alpha[k] * ex.path.rates[k] * dt;
        }
    }
    total
}

fn diffusion_gain<R: Rng>(ex: &Execution, sigma: f64, horizon: f64, rng: &mut R) -> f64 {
    let dt = ex.path.grid.dt();
    let sd = sigma * dt.sqrt();
    let n = ex.path.grid.n;
    let mut total = 0.0;
    for k in 0..n {
        let z: f64 = rng.sample(StandardNormal);
        let ds = -ex.alpha.drift[k] * dt + sd * z;
        let q_mid = ex.path.q[k] + 0.5 * ex.path.rates[k] * dt;
        total += q_mid * ds;
    }
    let z: f64 = rng.sample(StandardNormal);
    total + ex.path.q[n] * (ex.alpha.alpha[n] + sigma * horizon.sqrt() * z)
}

/// Expected P&L of the policy optimal under `spec`, executed under `actual`,
/// estimated over `cfg.n_paths` paths. Path `i` draws from random stream
/// `(cfg.seed, i)`, so results do not depend on scheduling.
pub fn simulate_pnl(
    actual: &AfsParams,
    spec: &PolicySpec,
    alpha_model: &AlphaModel,
    cfg: &SimConfig,
) -> Result<PnlReport> {
    actual.validate()?;
    spec.validate()?;
    alpha_model.validate()?;
    if cfg.n_paths == 0 {
        return Err(Error::InvalidParam {
            name: "n_paths",
            value: 0.0,
            reason: "need at least one path",
        });
    }
    let grid = TimeGrid::horizon(spec.horizon, cfg.n_steps)?;
    let fixed = if alpha_model.is_deterministic() {
        let mut rng = stream_rng(cfg.seed, u64::MAX);
        let alpha = sample_alpha_with(alpha_model, &grid, cfg.seed, &mut rng)?;
        Some(execute(actual, spec, alpha)?)
    } else {
        None
    };
    let fixed_capture = fixed.as_ref().map(alpha_capture);

    let outcomes: Vec<Result<(f64, f64)>> = map_range(cfg.n_paths, |i| {
        let mut rng = stream_rng(cfg.seed, i as u64);
        let owned;
        let (ex, capture_det) = match &fixed {
            Some(ex) => (ex, fixed_capture.unwrap()),
            None => {
                let alpha = sample_alpha_with(alpha_model, &grid, cfg.seed, &mut rng)?;
                owned = execute(actual, spec, alpha)?;
                let cap = alpha_capture(&owned);
                (&owned, cap)
            }
        };
        let capture = match cfg.accounting {
            Accounting::AlphaCapture => capture_det,
            Accounting::PriceDiffusion => {
                diffusion_gain(ex, actual.sigma, alpha_model.horizon, &mut rng)
            }
        };
        Ok((capture, ex.cost))
    });

    let mut captures = Vec::with_capacity(cfg.n_paths);
    let mut costs = Vec::with_capacity(cfg.n_paths);
    for o in outcomes {
        let (a, b) = o?;
        captures.push(a);
        costs.push(b);
    }
    let pnl: Vec<f64> = captures.iter().zip(&costs).map(|(a, b)| a - b).collect();
    let (_, stderr) = mean_stderr(&pnl);
    let n = cfg.n_paths as f64;
    let capture = pairwise_sum(&captures) / n;
    let paid = pairwise_sum(&costs) / n;
    Ok(PnlReport::new(actual, capture, paid, cfg.n_paths, stderr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pnl::value_impact_space;
    use crate::alpha::sample_alpha;
    use approx::assert_relative_eq;

    fn params(c: f64) -> AfsParams {
        AfsParams::new(c, 0.2, 1.0, 1e6, 1.0).unwrap()
    }

    #[test]
    fn zero_alpha_gives_zero() {
        let p = params(0.5);
        let spec = PolicySpec::new(p, 1.0).unwrap();
        for accounting in [Accounting::AlphaCapture, Accounting::PriceDiffusion] {
            let cfg = SimConfig {
                n_paths: 16,
                n_steps: 20,
                seed: 1,
                accounting,
            };
            let r = simulate_pnl(&p, &spec, &AlphaModel::constant(0.0), &cfg).unwrap();
            assert_eq!(r.raw, 0.0);
        }
    }

    #[test]
    fn constant_alpha_capture_is_exact() {
        let p = params(0.5);
        let spec = PolicySpec::new(p, 1.0).unwrap();
        let model = AlphaModel::constant(0.8);
        let cfg = SimConfig {
            n_paths: 4,
            n_steps: 50,
            seed: 3,
            accounting: Accounting::AlphaCapture,
        };
        let mc = simulate_pnl(&p, &spec, &model, &cfg).unwrap();
        let grid = TimeGrid::horizon(1.0, 50).unwrap();
        let alpha = sample_alpha(&model, &grid, 0).unwrap();
        let plan = optimal_impact(&spec, &alpha).unwrap();
        let exact = value_impact_space(&p, &plan.trajectory(), &alpha).unwrap();
        assert_relative_eq!(mc.raw, exact.raw, max_relative = 1e-10);
        assert_eq!(mc.stderr, 0.0);
    }

    #[test]
    fn deterministic_per_seed() {
        let p = params(0.48);
        let spec = PolicySpec::new(p, 2.0).unwrap();
        let model = AlphaModel::ou_unit_sharpe(1.0, 1.0);
        let cfg = SimConfig {
            n_paths: 64,
            n_steps: 100,
            seed: 11,
            accounting: Accounting::PriceDiffusion,
        };
        let a = simulate_pnl(&p, &spec, &model, &cfg).unwrap();
        let b = simulate_pnl(&p, &spec, &model, &cfg).unwrap();
        assert_eq!(a, b);
        let c = simulate_pnl(&p, &spec, &model, &SimConfig { seed: 12, ..cfg }).unwrap();
        assert_ne!(a.raw, c.raw);
    }

    #[test]
    fn rejects_zero_paths() {
        let p = params(0.5);
        let spec = PolicySpec::new(p, 1.0).unwrap();
        let cfg = SimConfig {
            n_paths: 0,
            ..SimConfig::default()
        };
        assert!(simulate_pnl(&p, &spec, &AlphaModel::constant(1.0), &cfg).is_err());
    }
}
