//! Browser bindings for the interactive demo page in `www/`.
//!
//! Each export takes plain numbers and returns a JSON string for the page to
//! draw; errors come back as JavaScript exceptions carrying the message.

use afs_core::alpha::{sample_alpha, AlphaModel};
use afs_core::calibration::SynthConfig;
use afs_core::model::{AfsParams, TimeGrid};
use afs_core::pnl::decay_zero_profit;
use afs_core::policy::{optimal_impact, PolicySpec};
use afs_core::sensitivity::{scan_concavity, scan_decay, GCurve};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const ADV: f64 = 1e6;

#[derive(Serialize)]
struct PlanCurves {
    t: Vec<f64>,
    alpha: Vec<f64>,
    i_star: Vec<f64>,
    /// Positions as ADV fractions.
    q_star: Vec<f64>,
}

/// Optimal impact and position path for a constant (`theta <= 0`) or
/// noiseless mean-reverting alpha in units of sigma.
pub fn plan_json(c: f64, tau: f64, horizon: f64, alpha0: f64, theta: f64) -> Result<String, String> {
    let run = || -> afs_core::Result<PlanCurves> {
        let params = AfsParams::new(c, tau, 1.0, ADV, 1.0)?;
        let spec = PolicySpec::new(params, horizon)?;
        let grid = TimeGrid::horizon(horizon, 400)?;
        let model = if theta > 0.0 {
            AlphaModel::ou(alpha0, theta, 0.0)
        } else {
            AlphaModel::constant(alpha0)
        };
        let alpha = sample_alpha(&model, &grid, 0)?;
        let plan = optimal_impact(&spec, &alpha)?;
        Ok(PlanCurves {
            t: grid.times(),
            alpha: alpha.alpha,
            i_star: plan.i_star,
            q_star: plan.q_star.iter().map(|q| q / ADV).collect(),
        })
    };
    let curves = run().map_err(|e| e.to_string())?;
    serde_json::to_string(&curves).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct ConcavityCurve {
    c_hat: Vec<f64>,
    ratio: Vec<f64>,
    c_min: Option<f64>,
}

/// Profit ratio against believed concavity, with prefactors matched at the
/// typical order size.
pub fn concavity_json(c: f64, sharpe: f64, horizon: f64, tau: f64) -> Result<String, String> {
    let c_hat: Vec<f64> = (20..=100).map(|k| k as f64 / 100.0).collect();
    let g = GCurve::PowerLaw {
        g_ref: 1.0,
        c_ref: c,
        size_ref: SynthConfig::default().mean_size(),
    };
    let scan = scan_concavity(c, &g, &[sharpe], &c_hat, horizon, tau).map_err(|e| e.to_string())?;
    let curve = ConcavityCurve {
        c_hat,
        ratio: scan.ratio[0].clone(),
        c_min: scan.critical[0],
    };
    serde_json::to_string(&curve).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct DecayHeatmap {
    tau_hat: Vec<f64>,
    theta: Vec<f64>,
    /// `[theta][tau_hat]`.
    ratio: Vec<Vec<f64>>,
    boundary: Vec<f64>,
}

/// Steady-state profit ratio over log-spaced believed decay and alpha decay.
pub fn decay_json(tau: f64, c: f64) -> Result<String, String> {
    let logspace = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
        (0..n)
            .map(|k| (lo.ln() + (hi / lo).ln() * k as f64 / (n - 1) as f64).exp())
            .collect()
    };
    let tau_hat = logspace(tau / 10.0, tau * 20.0, 60);
    let theta = logspace(tau / 5.0, tau * 50.0, 40);
    let scan = scan_decay(tau, &theta, &tau_hat, c, &GCurve::constant(1.0)).map_err(|e| e.to_string())?;
    let map = DecayHeatmap {
        boundary: theta.iter().map(|&th| decay_zero_profit(tau, th, c)).collect(),
        tau_hat,
        theta,
        ratio: scan.ratio,
    };
    serde_json::to_string(&map).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn optimal_plan(c: f64, tau: f64, horizon: f64, alpha0: f64, theta: f64) -> Result<String, JsValue> {
    plan_json(c, tau, horizon, alpha0, theta).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn concavity_ratio(c: f64, sharpe: f64, horizon: f64, tau: f64) -> Result<String, JsValue> {
    concavity_json(c, sharpe, horizon, tau).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn decay_ratio(tau: f64, c: f64) -> Result<String, JsValue> {
    decay_json(tau, c).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn plan_fraction_is_two_thirds() {
        let v: Value = serde_json::from_str(&plan_json(0.5, 0.2, 1.0, 1.0, 0.0).unwrap()).unwrap();
        let i0 = v["i_star"][0].as_f64().unwrap();
        assert!((i0 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(v["t"].as_array().unwrap().len(), 401);
    }

    #[test]
    fn concavity_curve_has_unit_point_and_cmin() {
        let v: Value = serde_json::from_str(&concavity_json(0.48, 1.0, 1.0, 0.2).unwrap()).unwrap();
        let c_hat = v["c_hat"].as_array().unwrap();
        let k = c_hat.iter().position(|x| x.as_f64() == Some(0.48)).unwrap();
        assert_eq!(v["ratio"][k].as_f64(), Some(1.0));
        assert!(v["c_min"].as_f64().unwrap() < 0.48);
    }

    #[test]
    fn decay_map_shape() {
        let v: Value = serde_json::from_str(&decay_json(0.2, 0.48).unwrap()).unwrap();
        assert_eq!(v["ratio"].as_array().unwrap().len(), 40);
        assert_eq!(v["ratio"][0].as_array().unwrap().len(), 60);
    }

    #[test]
    fn bad_input_is_an_error() {
        assert!(plan_json(1.5, 0.2, 1.0, 1.0, 0.0).is_err());
        assert!(decay_json(-1.0, 0.5).is_err());
    }
}
