//! Optimal statistical-arbitrage trading under the AFS nonlinear transient
//! price-impact model.
//!
//! The crate is organised around the life cycle of an impact model:
//!
//! * [`model`]: impact parameters and the forward dynamics `Q -> J -> I`.
//! * [`alpha`]: alpha signals (constant, Ornstein-Uhlenbeck, sampled).
//! * [`policy`]: the closed-form optimal impact state and position recovery,
//!   plus the square-root order sizing and implied-alpha helpers.
//! * [`pnl`]: expected P&L of any impact-state trajectory under any actual
//!   parameter set, and the closed-form misspecification costs.
//! * [`simulate`]: a Monte Carlo execution of a policy, used as an
//!   independent check on the closed forms.
//! * [`calibration`]: synthetic meta-orders, `(c, tau)` grid regression,
//!   log-log concavity fits and bootstrap errors.
//! * [`sensitivity`]: profit-ratio scans and critical-parameter search.
//! * [`io`]: CSV readers and writers for the exchanged file formats.

pub mod alpha;
pub mod calibration;
pub mod error;
pub mod io;
pub mod model;
mod par;
pub mod pnl;
pub mod policy;
pub mod sensitivity;
pub mod simulate;
pub mod stats;

pub use alpha::{AlphaKind, AlphaModel, AlphaPath};
pub use calibration::{CalibGrid, MetaOrder};
pub use error::{Error, Result};
pub use model::{AfsParams, ImpactPath, TimeGrid, TradeSchedule};
pub use pnl::PnlReport;
pub use policy::{OptimalPlan, PolicySpec};
pub use sensitivity::{GCurve, ScanResult};
