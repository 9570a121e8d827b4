use dgbo::diagnostics::{analytic_data, normal_form_residual, smoothing_table, NormalFormOptions};
use dgbo::multipliers::PolynomialSpec;
use dgbo::resonance::PartitionConstants;
use dgbo::solver::{gauge_transform, integrate, load_trajectory, save_trajectory, Dealias, GaugeDirection, SimConfig};
use dgbo::spectral::{DispersionSymbol, Grid};

fn config(gauged: bool) -> SimConfig {
    SimConfig {
        grid: Grid::new(12, 0.5).unwrap(),
        sym: DispersionSymbol::fractional(1.75).unwrap(),
        poly: PolynomialSpec::new(vec![0.0, 1.0, 0.5]).unwrap(),
        gauged,
        dt: 2.5e-4,
        t_end: 0.05,
        snapshot_stride: 4,
        dealias: Dealias::Auto,
    }
}

fn max_gap(a: &dgbo::solver::Trajectory, b: &dgbo::solver::Trajectory) -> f64 {
    a.states
        .iter()
        .zip(&b.states)
        .flat_map(|(x, y)| x.positive_modes().iter().zip(y.positive_modes()).map(|(p, q)| (p - q).norm()))
        .fold(0.0, f64::max)
}

#[test]
fn gauged_run_matches_transformed_ungauged_run_after_reload() {
    let g = analytic_data(Grid::new(12, 0.5).unwrap(), 0.4, 0.6);
    let plain = integrate(&config(false), &g).unwrap();
    let gauged = integrate(&config(true), &g).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let consts = PartitionConstants::default();
    save_trajectory(&plain, dir.path(), &consts, &[0.5]).unwrap();
    let (reloaded, c) = load_trajectory(dir.path()).unwrap();
    assert_eq!(c, consts);
    assert_eq!(reloaded.states, plain.states);

    let moved = gauge_transform(&reloaded, GaugeDirection::Forward);
    assert!(max_gap(&moved, &gauged) < 1e-9, "{}", max_gap(&moved, &gauged));
    let back = gauge_transform(&gauged, GaugeDirection::Inverse);
    assert!(max_gap(&back, &plain) < 1e-9);
}

#[test]
fn diagnostics_accept_either_gauge() {
    let g = analytic_data(Grid::new(12, 0.5).unwrap(), 0.4, 0.6);
    let plain = integrate(&config(false), &g).unwrap();
    let gauged = integrate(&config(true), &g).unwrap();

    let a = smoothing_table(&plain, &g, 0.5, &[0.0, 0.5]);
    let b = smoothing_table(&gauged, &g, 0.5, &[0.0, 0.5]);
    for (x, y) in a.rows.iter().zip(&b.rows) {
        for (p, q) in x.diff_norms.iter().zip(&y.diff_norms) {
            assert!((p - q).abs() < 1e-8 * (1.0 + q.abs()));
        }
    }

    let opts = NormalFormOptions {
        truncation_check: false,
        ..NormalFormOptions::default()
    };
    let ra = normal_form_residual(&plain, &opts).unwrap();
    let rb = normal_form_residual(&gauged, &opts).unwrap();
    assert!(ra.max_identity_residual < 1e-4 && rb.max_identity_residual < 1e-4);
    assert!((ra.max_identity_residual - rb.max_identity_residual).abs() < 1e-6);
}
