//! CSV and JSON formats shared by the CLI and the plotting scripts.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::alpha::AlphaPath;
use crate::calibration::{CalibGrid, Fill, LogLogFit, MetaOrder};
use crate::error::{Error, Result};
use crate::policy::OptimalPlan;
use crate::sensitivity::{Fig1Curves, ScanResult};

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(true).from_writer(w)
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct AlphaRow {
    t: f64,
    alpha: f64,
    drift: f64,
}

pub fn write_alpha<W: Write>(w: W, path: &AlphaPath) -> Result<()> {
    let mut out = writer(w);
    for (k, t) in path.grid.times().into_iter().enumerate() {
        out.serialize(AlphaRow {
            t,
            alpha: path.alpha[k],
            drift: path.drift[k],
        })?;
    }
    finish(out)
}

#[derive(Serialize)]
struct PlanRow {
    t: f64,
    alpha: f64,
    drift: f64,
    i_star: f64,
    j_star: f64,
    q_star: f64,
}

/// One row per grid node; the last row holds the post-terminal state.
pub fn write_plan<W: Write>(w: W, plan: &OptimalPlan) -> Result<()> {
    let mut out = writer(w);
    for (k, t) in plan.grid.times().into_iter().enumerate() {
        out.serialize(PlanRow {
            t,
            alpha: plan.alpha[k],
            drift: plan.drift[k],
            i_star: plan.i_star[k],
            j_star: plan.j_star[k],
            q_star: plan.q_star[k],
        })?;
    }
    finish(out)
}

#[derive(Serialize, Deserialize)]
struct FillRow {
    order_id: u64,
    t: f64,
    dt: f64,
    #[serde(rename = "dQ")]
    dq: f64,
    #[serde(rename = "dP")]
    dp: f64,
}

pub fn write_metaorders<W: Write>(w: W, orders: &[MetaOrder]) -> Result<()> {
    let mut out = writer(w);
    for o in orders {
        for f in &o.fills {
            out.serialize(FillRow {
                order_id: o.order_id,
                t: f.t,
                dt: f.dt,
                dq: f.dq,
                dp: f.dp,
            })?;
        }
    }
    finish(out)
}

/// Read long-form meta-order fills. Orders are reassembled by id (sorted);
/// fills within an order are sorted by time. `adv` converts share totals to
/// ADV fractions.
pub fn read_metaorders<R: Read>(r: R, adv: f64) -> Result<Vec<MetaOrder>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let mut by_id: BTreeMap<u64, Vec<Fill>> = BTreeMap::new();
    for row in reader.deserialize() {
        let row: FillRow = row?;
        by_id.entry(row.order_id).or_default().push(Fill {
            t: row.t,
            dt: row.dt,
            dq: row.dq,
            dp: row.dp,
        });
    }
    if by_id.is_empty() {
        return Err(Error::InsufficientData("meta-order file has no rows".into()));
    }
    by_id
        .into_iter()
        .map(|(order_id, mut fills)| {
            fills.sort_by(|a, b| a.t.total_cmp(&b.t));
            let start = fills[0].t;
            let duration = fills.iter().map(|f| f.dt).sum();
            let shares: f64 = fills.iter().map(|f| f.dq).sum();
            let order = MetaOrder {
                order_id,
                start,
                duration,
                signed_frac: shares / adv,
                fills,
            };
            order.validate()?;
            Ok(order)
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct CalibRow {
    c: f64,
    tau: f64,
    r2: f64,
    g: f64,
}

/// One row per cell, concavity-major. Invalid cells carry `NaN`.
pub fn write_calib_grid<W: Write>(w: W, grid: &CalibGrid) -> Result<()> {
    let mut out = writer(w);
    for (ci, &c) in grid.c_values.iter().enumerate() {
        for (ti, &tau) in grid.tau_values.iter().enumerate() {
            let ok = grid.valid[ci][ti];
            out.serialize(CalibRow {
                c,
                tau,
                r2: if ok { grid.r2[ci][ti] } else { f64::NAN },
                g: if ok { grid.g[ci][ti] } else { f64::NAN },
            })?;
        }
    }
    finish(out)
}

pub fn read_calib_grid<R: Read>(r: R) -> Result<CalibGrid> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let rows: Vec<CalibRow> = reader.deserialize().collect::<Result<_, _>>()?;
    let mut c_values: Vec<f64> = Vec::new();
    let mut tau_values: Vec<f64> = Vec::new();
    for row in &rows {
        if !c_values.contains(&row.c) {
            c_values.push(row.c);
        }
        if !tau_values.contains(&row.tau) {
            tau_values.push(row.tau);
        }
    }
    c_values.sort_by(f64::total_cmp);
    tau_values.sort_by(f64::total_cmp);
    if rows.len() != c_values.len() * tau_values.len() || rows.is_empty() {
        return Err(Error::InvalidInput(
            "calibration grid file is not a full lattice".into(),
        ));
    }
    let mut grid = CalibGrid {
        r2: vec![vec![f64::NAN; tau_values.len()]; c_values.len()],
        g: vec![vec![f64::NAN; tau_values.len()]; c_values.len()],
        valid: vec![vec![false; tau_values.len()]; c_values.len()],
        c_values,
        tau_values,
    };
    for row in rows {
        let ci = grid.c_index(row.c).expect("collected above");
        let ti = grid.tau_index(row.tau).expect("collected above");
        grid.r2[ci][ti] = row.r2;
        grid.g[ci][ti] = row.g;
        grid.valid[ci][ti] = row.r2.is_finite() && row.g.is_finite() && row.g > 0.0;
    }
    Ok(grid)
}

#[derive(Serialize)]
struct ScanRow {
    axis1: f64,
    axis2: f64,
    ratio: f64,
    u_misspec: f64,
    u_opt: f64,
}

/// One row per cell, `axis2`-major.
pub fn write_scan<W: Write>(w: W, scan: &ScanResult) -> Result<()> {
    let mut out = writer(w);
    for (i2, &a2) in scan.axis2.iter().enumerate() {
        for (i1, &a1) in scan.axis1.iter().enumerate() {
            out.serialize(ScanRow {
                axis1: a1,
                axis2: a2,
                ratio: scan.ratio[i2][i1],
                u_misspec: scan.u_misspec[i2][i1],
                u_opt: scan.u_opt[i2],
            })?;
        }
    }
    finish(out)
}

#[derive(Serialize)]
struct CriticalRow {
    axis2: f64,
    /// Empty when no crossing lies in the scanned range.
    critical_value: Option<f64>,
}

pub fn write_criticals<W: Write>(w: W, scan: &ScanResult) -> Result<()> {
    let mut out = writer(w);
    for (&axis2, &critical_value) in scan.axis2.iter().zip(&scan.critical) {
        out.serialize(CriticalRow {
            axis2,
            critical_value,
        })?;
    }
    finish(out)
}

#[derive(Serialize)]
struct Fig1Row {
    c_hat: f64,
    r2_ratio: f64,
    u_ratio: f64,
    band_lo: Option<f64>,
    band_hi: Option<f64>,
}

pub fn write_fig1<W: Write>(w: W, curves: &Fig1Curves) -> Result<()> {
    let mut out = writer(w);
    for (k, &c_hat) in curves.c_hat.iter().enumerate() {
        out.serialize(Fig1Row {
            c_hat,
            r2_ratio: curves.r2_ratio[k],
            u_ratio: curves.u_ratio[k],
            band_lo: curves.band.map(|b| b.0),
            band_hi: curves.band.map(|b| b.1),
        })?;
    }
    finish(out)
}

#[derive(Serialize)]
struct LogLogRow {
    log_size: f64,
    mean_return: f64,
    count: usize,
    used: bool,
}

pub fn write_loglog_bins<W: Write>(w: W, fit: &LogLogFit) -> Result<()> {
    let mut out = writer(w);
    for b in &fit.bins {
        out.serialize(LogLogRow {
            log_size: b.log_size,
            mean_return: b.mean_return,
            count: b.count,
            used: b.used,
        })?;
    }
    finish(out)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<W: Write, T: Serialize + ?Sized>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<R: Read, T: for<'de> Deserialize<'de>>(r: R) -> Result<T> {
    Ok(serde_json::from_reader(r)?)
}

/// Create `path` (and its parent directories) for writing.
pub fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{grid_fit, synth_metaorders, MarketScale, SynthConfig};
    use crate::model::AfsParams;

    #[test]
    fn metaorders_round_trip() {
        let p = AfsParams::new(0.5, 0.2, 1.0, 1e6, 1.0).unwrap();
        let cfg = SynthConfig {
            n_orders: 10,
            ..SynthConfig::default()
        };
        let orders = synth_metaorders(&p, &cfg).unwrap();
        let mut buf = Vec::new();
        write_metaorders(&mut buf, &orders).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("order_id,t,dt,dQ,dP\n"));
        let back = read_metaorders(buf.as_slice(), p.adv).unwrap();
        assert_eq!(back.len(), orders.len());
        for (a, b) in orders.iter().zip(&back) {
            assert_eq!(a.fills, b.fills);
            assert!((a.signed_frac - b.signed_frac).abs() < 1e-12 * a.signed_frac.abs());
            assert!((a.duration - b.duration).abs() < 1e-12);
        }
    }

    #[test]
    fn calib_grid_round_trip() {
        let p = AfsParams::new(0.5, 0.2, 1.0, 1e6, 1.0).unwrap();
        let cfg = SynthConfig {
            n_orders: 30,
            ..SynthConfig::default()
        };
        let orders = synth_metaorders(&p, &cfg).unwrap();
        let grid = grid_fit(&orders, &MarketScale::from(&p), &[0.4, 0.5], &[0.1, 0.2, 0.5]).unwrap();
        let mut buf = Vec::new();
        write_calib_grid(&mut buf, &grid).unwrap();
        assert!(buf.starts_with(b"c,tau,r2,g\n"));
        let back = read_calib_grid(buf.as_slice()).unwrap();
        assert_eq!(back, grid);
    }

    #[test]
    fn short_orders_are_rejected() {
        let csv = "order_id,t,dt,dQ,dP\n0,0,0.1,10,0.1\n0,0.1,0.1,10,0.1\n";
        assert!(read_metaorders(csv.as_bytes(), 1e6).is_err());
    }
}
