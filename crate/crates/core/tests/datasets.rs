use rase_core::experiments::{defaults, log_depths, ExperimentResult};
use rase_core::table::format_value;
use rase_core::{Experiments, SolverSettings};

fn experiments() -> Experiments {
    Experiments::new(SolverSettings {
        n_z: 41,
        n_delta: 61,
        dt: 1e-2,
        sample_interval: 1e-1,
        ..SolverSettings::default()
    })
    .unwrap()
}

fn column(r: &ExperimentResult, name: &str) -> Vec<f64> {
    r.table.column(name).unwrap().into_iter().map(Option::unwrap).collect()
}

#[test]
fn shape_snapshots_layout_and_normalization() {
    let ex = experiments();
    let r = ex.run_shape_snapshots(&[0.75, 7.5]).unwrap();
    assert_eq!(r.table.columns(), ["alpha_l", "z", "delta", "weight"]);
    let g = ex.grid();
    assert_eq!(r.table.len(), 2 * g.len());
    let w = column(&r, "weight");
    for chunk in w.chunks(g.len()) {
        assert!((g.integrate(chunk) - 1.0).abs() < 1e-12);
        assert!(chunk.iter().all(|v| *v >= 0.0));
    }
}

#[test]
fn separation_surface_columns_and_limits() {
    let ex = experiments();
    let r = ex.run_separation_surface(&[1e-6, 0.2, 1.0], 8.0).unwrap();
    assert_eq!(r.table.columns(), ["alpha_l", "t", "p_no_jump"]);
    assert!(r.failures.is_empty());
    let a = column(&r, "alpha_l");
    let t = column(&r, "t");
    let p = column(&r, "p_no_jump");
    assert_eq!(a.len(), 3 * 81);
    for i in 0..a.len() {
        if a[i] == 1e-6 {
            assert!((p[i] - 1.0).abs() < 1e-4);
        }
        if i > 0 && a[i] == a[i - 1] {
            assert!(t[i] > t[i - 1] && p[i] <= p[i - 1] + 1e-12);
        }
    }
}

#[test]
fn tradeoff_runs_between_its_limits() {
    let ex = experiments();
    let depths = [0.01, 0.1, 1.0, 10.0];
    let r = ex.run_tradeoff_curve(&depths).unwrap();
    assert_eq!(r.table.columns(), ["alpha_l", "p_separated", "efficiency"]);
    let p = column(&r, "p_separated");
    let e = column(&r, "efficiency");
    assert!(p[0] > 0.9 && e[0] < 0.05, "{p:?} {e:?}");
    assert!(p[3] < 1e-6 && e[3] > 0.85, "{p:?} {e:?}");
    for i in 1..4 {
        assert!(p[i] < p[i - 1] && e[i] > e[i - 1]);
    }
    let mm = ex.run_mode_matched_rase(&depths).unwrap();
    assert_eq!(mm.table.columns(), ["alpha_l", "efficiency"]);
    assert_eq!(column(&mm, "efficiency"), e);
}

#[test]
fn flat_scan_peaks_then_declines() {
    let ex = experiments();
    let depths = log_depths(-40, 20);
    let r = ex.run_flat_rase_scan(&depths).unwrap();
    let e = column(&r, "efficiency");
    assert!(e[0] < 0.05);
    let peak = e.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    for i in peak + 1..e.len() {
        assert!(e[i] < e[i - 1]);
    }
    for i in 1..=peak {
        assert!(e[i] > e[i - 1]);
    }
}

#[test]
fn highdepth_heatmap_shows_reabsorption() {
    let ex = experiments();
    let r = ex.run_highdepth_heatmap(defaults::HIGHDEPTH_ALPHA_L).unwrap();
    assert_eq!(r.table.columns(), ["t", "z", "excitation"]);
    let t = column(&r, "t");
    let z = column(&r, "z");
    let x = column(&r, "excitation");
    assert!(x.iter().all(|v| *v >= 0.0));
    let n_z = ex.grid().n_z();
    assert_eq!(t.len(), 121 * n_z);
    // t = 0 slice is the z-marginal of a uniform-in-z ensemble
    for v in &x[..n_z] {
        assert!((v - 1.0).abs() < 1e-9);
    }
    let last = &x[x.len() - n_z..];
    let back = z
        .iter()
        .zip(last)
        .filter(|(z, _)| **z > 0.0 && **z <= 0.2)
        .map(|(_, v)| *v)
        .fold(f64::INFINITY, f64::min);
    let front = last[n_z - 1];
    assert!(back < 0.2, "{back}");
    assert!(front > 0.5, "{front}");

    let peak = r.metadata["peak_time"].as_f64().unwrap();
    assert!((peak - 4.0).abs() < 1.0, "{peak}");
    let emitted = r.metadata["emission_probability"].as_f64().unwrap();
    let residual = r.metadata["residual_norm"].as_f64().unwrap();
    assert!((emitted + residual - 1.0).abs() < 1e-3);
    let total_last = ex.grid().z_weights().iter().zip(last).map(|(w, v)| w * v).sum::<f64>();
    assert!((total_last - residual).abs() < 1e-9);
}

#[test]
fn tailored_and_mode_matched_vanish_at_low_depth() {
    let ex = experiments();
    let t = ex.run_tailored_pipeline(&[1e-4]).unwrap();
    assert!(column(&t, "efficiency")[0] < 1e-3);
    let m = ex.run_mode_matched_rase(&[1e-4]).unwrap();
    assert!(column(&m, "efficiency")[0] < 1e-3);
    let f = ex.run_flat_rase_scan(&[1e-4]).unwrap();
    assert!(column(&f, "efficiency")[0] < 1e-3);
}

#[test]
fn scans_are_sorted_and_deterministic() {
    let ex = experiments();
    let a = ex.run_flat_rase_scan(&[2.0, 0.5, 1.0]).unwrap();
    let b = ex.run_flat_rase_scan(&[1.0, 2.0, 0.5]).unwrap();
    assert_eq!(column(&a, "alpha_l"), [0.5, 1.0, 2.0]);
    assert_eq!(a.table.to_csv_string(), b.table.to_csv_string());
}

#[test]
fn tradeoff_separation_matches_surface_row_exactly() {
    let ex = experiments();
    let depths = [0.05, 0.2, 1.0];
    let surface = ex.run_separation_surface(&depths, defaults::SEPARATION_T_MAX).unwrap();
    let tradeoff = ex.run_tradeoff_curve(&depths).unwrap();
    let t_s = ex.settings().t_s;
    let (a, t, p) = (column(&surface, "alpha_l"), column(&surface, "t"), column(&surface, "p_no_jump"));
    let sep = column(&tradeoff, "p_separated");
    for (k, alpha_l) in depths.iter().enumerate() {
        let i = (0..a.len()).find(|&i| a[i] == *alpha_l && (t[i] - t_s).abs() < 1e-9).unwrap();
        assert_eq!(format_value(p[i]), format_value(sep[k]));
    }
}
