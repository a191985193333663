use afs_core::sensitivity::{scan_concavity, scan_decay, GCurve};

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
fn critical_concavity_tightens_with_sharpe() {
    let sharpe = [0.5, 1.0, 2.0, 4.0];
    let s = scan_concavity(0.48, &fitted_g(), &sharpe, &lattice(0.05, 1.0, 0.01), 1.0, 0.2).unwrap();
    let c_min: Vec<f64> = s.critical.iter().map(|c| c.expect("loss region in range")).collect();
    for w in c_min.windows(2) {
        assert!(w[1] >= w[0] - 1e-9, "{c_min:?}");
    }
    assert!(c_min[3] > c_min[0], "{c_min:?}");
    assert!(s.flags.is_empty(), "{:?}", s.flags);
}

#[test]
fn overestimated_concavity_never_loses() {
    let s = scan_concavity(0.48, &fitted_g(), &[0.5, 1.0, 4.0], &lattice(0.48, 1.0, 0.02), 1.0, 0.2).unwrap();
    for row in &s.ratio {
        assert!(row.iter().all(|r| *r > 0.0), "{row:?}");
    }
}

#[test]
fn decay_boundary_widens_with_slower_alpha() {
    let s = scan_decay(0.2, &[0.5, 1.0, 2.0, 5.0], &lattice(0.21, 10.0, 0.01), 0.48, &GCurve::constant(1.0)).unwrap();
    let roots: Vec<f64> = s.critical.iter().map(|c| c.unwrap()).collect();
    for w in roots.windows(2) {
        assert!(w[1] > w[0], "{roots:?}");
    }
}
