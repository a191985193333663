use std::path::{Path, PathBuf};

use afs_core::alpha::AlphaModel;
use afs_core::model::AfsParams;
use clap::{Args, ValueEnum};
use serde::Serialize;

/// Input the user got wrong; maps to exit status 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// A lattice given as `min:max:step`, a comma list, or a single value.
#[derive(Debug, Clone, Serialize)]
#[serde(transparent)]
pub struct Lattice(pub Vec<f64>);

/// Snap to 12 decimals so that `0.30:1.00:0.02` contains exactly `0.48`.
fn snap(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

impl std::str::FromStr for Lattice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{t}` is not a number"))
        };
        let parts: Vec<&str> = s.split(':').collect();
        let values = match parts.as_slice() {
            [lo, hi, step] => {
                let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
                if !(step > 0.0 && hi >= lo) {
                    return Err(format!("`{s}`: need min <= max and step > 0"));
                }
                let n = ((hi - lo) / step + 1e-9).floor() as usize;
                (0..=n).map(|k| snap(lo + k as f64 * step)).collect()
            }
            [_] => s.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
            _ => return Err(format!("`{s}`: expected min:max:step or a comma list")),
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(format!("`{s}` contains non-finite values"));
        }
        Ok(Lattice(values))
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ImpactArgs {
    /// Impact concavity c.
    #[arg(long, default_value_t = 0.5)]
    pub c: f64,
    /// Impact decay time tau (days).
    #[arg(long, default_value_t = 0.2)]
    pub tau: f64,
    /// Daily price volatility sigma.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Average daily volume V (shares).
    #[arg(long, default_value_t = 1e6)]
    pub adv: f64,
    /// Impact prefactor g.
    #[arg(long, default_value_t = 1.0)]
    pub g: f64,
}

impl ImpactArgs {
    pub fn params(&self) -> afs_core::Result<AfsParams> {
        AfsParams::new(self.c, self.tau, self.sigma, self.adv, self.g)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaKindArg {
    Constant,
    Ou,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AlphaArgs {
    #[arg(long = "alpha", value_enum, default_value_t = AlphaKindArg::Constant)]
    pub kind: AlphaKindArg,
    /// Initial (or constant) alpha in units of sigma.
    #[arg(long, default_value_t = 1.0)]
    pub alpha0: f64,
    /// OU relaxation time (days).
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    /// OU innovation volatility in units of sigma; defaults to a unit
    /// stationary Sharpe ratio, sqrt(2 / theta).
    #[arg(long)]
    pub sigma_alpha: Option<f64>,
    /// Draw the initial OU alpha from its stationary law.
    #[arg(long)]
    pub stationary: bool,
    /// Alpha prediction horizon h (days).
    #[arg(long, default_value_t = 1.0)]
    pub alpha_horizon: f64,
}

impl AlphaArgs {
    /// Alpha model in price units.
    pub fn model(&self, sigma: f64) -> AlphaModel {
        let model = match self.kind {
            AlphaKindArg::Constant => AlphaModel::constant(self.alpha0 * sigma),
            AlphaKindArg::Ou => {
                let vol = self
                    .sigma_alpha
                    .map_or(sigma * (2.0 / self.theta).sqrt(), |s| s * sigma);
                AlphaModel::ou(self.alpha0 * sigma, self.theta, vol)
                    .with_stationary_start(self.stationary)
            }
        };
        model.with_horizon(self.alpha_horizon)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    /// Trading horizon T (days).
    #[arg(long = "horizon", visible_alias = "T", default_value_t = 1.0)]
    pub horizon: f64,
    /// Time steps on [0, T].
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Output file.
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

/// `dir/name.csv` -> `dir/name.<tag>.<ext>`.
pub fn sibling(path: &Path, tag: &str, ext: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{tag}.{ext}"))
}

/// `<output>.config.json`.
pub fn config_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_contains_exact_endpoints() {
        let l: Lattice = "0.30:1.00:0.02".parse().unwrap();
        assert_eq!(l.0.len(), 36);
        assert!(l.0.contains(&0.48));
        assert_eq!(*l.0.last().unwrap(), 1.0);
    }

    #[test]
    fn lists_and_singletons() {
        let l: Lattice = "0.02,0.05, 0.1".parse().unwrap();
        assert_eq!(l.0, vec![0.02, 0.05, 0.1]);
        assert_eq!("1".parse::<Lattice>().unwrap().0, vec![1.0]);
        assert!("1:0:0.1".parse::<Lattice>().is_err());
        assert!("a,b".parse::<Lattice>().is_err());
        assert!("0:1:0".parse::<Lattice>().is_err());
    }

    #[test]
    fn derived_paths() {
        let p = Path::new("out/grid.csv");
        assert_eq!(sibling(p, "loglog", "csv"), Path::new("out/grid.loglog.csv"));
        assert_eq!(config_path(p), Path::new("out/grid.csv.config.json"));
    }
}
