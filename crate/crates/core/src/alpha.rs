//! Alpha signals: the level `alpha_t` (expected future price change) and its
//! drift `mu_t`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_positive, Error, Result};
use crate::model::TimeGrid;
use crate::stats::stream_rng;

/// Externally supplied alpha samples aligned to a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSamples {
    pub grid: TimeGrid,
    pub alpha: Vec<f64>,
    pub drift: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaKind {
    /// Constant level; zero drift.
    Constant { alpha0: f64 },
    /// `d alpha = -alpha / theta dt + vol dW`.
    Ou {
        alpha0: f64,
        theta: f64,
        vol: f64,
        /// Draw `alpha_0` from the stationary law instead of using `alpha0`.
        #[serde(default)]
        stationary_start: bool,
    },
    Sampled(AlphaSamples),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaModel {
    #[serde(flatten)]
    pub kind: AlphaKind,
    /// Prediction horizon `h` (days). Metadata, except as the terminal
    /// holding period in price-diffusion Monte Carlo accounting.
    pub horizon: f64,
}

impl AlphaModel {
    pub fn constant(alpha0: f64) -> Self {
        Self {
            kind: AlphaKind::Constant { alpha0 },
            horizon: 1.0,
        }
    }

    pub fn ou(alpha0: f64, theta: f64, vol: f64) -> Self {
        Self {
            kind: AlphaKind::Ou {
                alpha0,
                theta,
                vol,
                stationary_start: false,
            },
            horizon: 1.0,
        }
    }

    /// OU signal whose stationary standard deviation of `alpha / sigma` is one.
    pub fn ou_unit_sharpe(theta: f64, sigma: f64) -> Self {
        Self {
            kind: AlphaKind::Ou {
                alpha0: 0.0,
                theta,
                vol: sigma * (2.0 / theta).sqrt(),
                stationary_start: true,
            },
            horizon: 1.0,
        }
    }

    pub fn sampled(samples: AlphaSamples) -> Self {
        Self {
            kind: AlphaKind::Sampled(samples),
            horizon: 1.0,
        }
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_stationary_start(mut self, on: bool) -> Self {
        if let AlphaKind::Ou {
            stationary_start, ..
        } = &mut self.kind
        {
            *stationary_start = on;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("horizon", self.horizon)?;
        match &self.kind {
            AlphaKind::Constant { alpha0 } => check_finite("alpha0", &[*alpha0]),
            AlphaKind::Ou {
                alpha0, theta, vol, ..
            } => {
                check_finite("alpha0", &[*alpha0])?;
                check_positive("theta", *theta)?;
                if !(vol.is_finite() && *vol >= 0.0) {
                    return Err(Error::InvalidParam {
                        name: "sigma_alpha",
                        value: *vol,
                        reason: "must be finite and non-negative",
                    });
                }
                Ok(())
            }
            AlphaKind::Sampled(s) => {
                s.grid.validate()?;
                if s.alpha.len() != s.grid.len() || s.drift.len() != s.grid.len() {
                    return Err(Error::GridMismatch(
                        "sampled alpha arrays do not match their grid".into(),
                    ));
                }
                check_finite("sampled alpha", &s.alpha)?;
                check_finite("sampled drift", &s.drift)
            }
        }
    }

    /// True when every draw yields the same path.
    pub fn is_deterministic(&self) -> bool {
        match &self.kind {
            AlphaKind::Constant { .. } | AlphaKind::Sampled(_) => true,
            AlphaKind::Ou {
                vol,
                stationary_start,
                ..
            } => *vol == 0.0 && !*stationary_start,
        }
    }

    /// Relaxation time, for OU signals.
    pub fn theta(&self) -> Option<f64> {
        match &self.kind {
            AlphaKind::Ou { theta, .. } => Some(*theta),
            _ => None,
        }
    }
}

/// Alpha level and drift sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaPath {
    pub grid: TimeGrid,
    pub alpha: Vec<f64>,
    pub drift: Vec<f64>,
    pub seed: u64,
}

impl AlphaPath {
    /// `alpha - tau * drift`, the decay-adjusted alpha at each node.
    pub fn adjusted(&self, tau: f64) -> impl Iterator<Item = f64> + '_ {
        self.alpha.iter().zip(&self.drift).map(move |(a, m)| a - tau * m)
    }
}

/// Sample an alpha path on `grid`, deterministically for a given `seed`.
pub fn sample_alpha(model: &AlphaModel, grid: &TimeGrid, seed: u64) -> Result<AlphaPath> {
    let mut rng = stream_rng(seed, 0);
    sample_alpha_with(model, grid, seed, &mut rng)
}

pub(crate) fn sample_alpha_with<R: Rng>(
    model: &AlphaModel,
    grid: &TimeGrid,
    seed: u64,
    rng: &mut R,
) -> Result<AlphaPath> {
    model.validate()?;
    grid.validate()?;
    let n = grid.n;
    match &model.kind {
        AlphaKind::Constant { alpha0 } => Ok(AlphaPath {
            grid: *grid,
            alpha: vec![*alpha0; n + 1],
            drift: vec![0.0; n + 1],
            seed: 0,
        }),
        AlphaKind::Ou {
            alpha0,
            theta,
            vol,
            stationary_start,
        } => {
            let dt = grid.dt();
            let phi = (-dt / theta).exp();
            // exact transition variance of the OU step
            let step_sd = vol * (theta / 2.0 * -(-2.0 * dt / theta).exp_m1()).sqrt();
            let mut alpha = Vec::with_capacity(n + 1);
            let mut a = if *stationary_start {
                let z: f64 = rng.sample(StandardNormal);
                vol * (theta / 2.0).sqrt() * z
            } else {
                *alpha0
            };
            alpha.push(a);
            for _ in 0..n {
                let z: f64 = if step_sd > 0.0 {
                    rng.sample(StandardNormal)
                } else {
                    0.0
                };
                a = phi * a + step_sd * z;
                alpha.push(a);
            }
            let drift = alpha.iter().map(|a| -a / theta).collect();
            Ok(AlphaPath {
                grid: *grid,
                alpha,
                drift,
                seed: if model.is_deterministic() { 0 } else { seed },
            })
        }
        AlphaKind::Sampled(s) => {
            if !s.grid.matches(grid) {
                return Err(Error::GridMismatch(
                    "sampled alpha grid differs from the requested grid".into(),
                ));
            }
            Ok(AlphaPath {
                grid: *grid,
                alpha: s.alpha.clone(),
                drift: s.drift.clone(),
                seed: 0,
            })
        }
    }
}

/// Stationary absolute moment `E|alpha / sigma|^p` of an OU signal, with
/// `sigma` the price volatility.
pub fn stationary_abs_moment(model: &AlphaModel, sigma: f64, p: f64) -> Result<f64> {
    let AlphaKind::Ou { theta, vol, .. } = &model.kind else {
        return Err(Error::UnsupportedSpecialization(
            "Ornstein-Uhlenbeck alpha models",
        ));
    };
    check_positive("sigma", sigma)?;
    check_positive("p", p)?;
    let s = vol / sigma * (theta / 2.0).sqrt();
    Ok(normal_abs_moment(s, p))
}

/// `E|X|^p` for `X ~ N(0, s^2)`.
pub fn normal_abs_moment(s: f64, p: f64) -> f64 {
    s.powf(p) * 2f64.powf(p / 2.0) * libm::tgamma((p + 1.0) / 2.0) / std::f64::consts::PI.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_alpha_is_flat() {
        let grid = TimeGrid::horizon(2.0, 7).unwrap();
        let p = sample_alpha(&AlphaModel::constant(0.5), &grid, 9).unwrap();
        assert!(p.alpha.iter().all(|&a| a == 0.5));
        assert!(p.drift.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn noiseless_ou_decays() {
        let grid = TimeGrid::horizon(1.0, 100).unwrap();
        let p = sample_alpha(&AlphaModel::ou(1.0, 1.0, 0.0), &grid, 1).unwrap();
        assert_relative_eq!(p.alpha[100], (-1.0f64).exp(), max_relative = 1e-12);
        assert_eq!(p.seed, 0);
    }

    #[test]
    fn ou_drift_is_consistent() {
        let grid = TimeGrid::horizon(5.0, 500).unwrap();
        let model = AlphaModel::ou(0.3, 0.7, 0.4);
        let p = sample_alpha(&model, &grid, 3).unwrap();
        for (a, m) in p.alpha.iter().zip(&p.drift) {
            assert_eq!(*m, -a / 0.7);
        }
        assert_eq!(p, sample_alpha(&model, &grid, 3).unwrap());
        assert_ne!(p.alpha, sample_alpha(&model, &grid, 4).unwrap().alpha);
    }

    #[test]
    fn sampled_grid_mismatch_is_an_error() {
        let grid = TimeGrid::horizon(1.0, 4).unwrap();
        let samples = AlphaSamples {
            grid,
            alpha: vec![0.0; 5],
            drift: vec![0.0; 5],
        };
        let other = TimeGrid::horizon(1.0, 8).unwrap();
        let model = AlphaModel::sampled(samples);
        assert!(sample_alpha(&model, &grid, 0).is_ok());
        assert!(matches!(
            sample_alpha(&model, &other, 0),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn stationary_moment_closed_form() {
        // s = 1 when vol = sigma * sqrt(2 / theta)
        let m = AlphaModel::ou_unit_sharpe(2.0, 1.5);
        assert_relative_eq!(stationary_abs_moment(&m, 1.5, 2.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(
            stationary_abs_moment(&m, 1.5, 1.0).unwrap(),
            (2.0 / std::f64::consts::PI).sqrt(),
            max_relative = 1e-14
        );
        assert!(stationary_abs_moment(&AlphaModel::constant(1.0), 1.0, 2.0).is_err());
    }
}
