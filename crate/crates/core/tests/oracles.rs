use std::f64::consts::PI;
use std::fs;

use rddi_core::markov::{rddi_from_spectrum, rddi_pv_numeric, PvOptions};
use rddi_core::scenario::{self, Model, PRESET_NAMES};
use rddi_core::spectra::BathSpectrum;

#[test]
fn pv_agrees_with_closed_form_within_its_error_bound() {
    for &r in &[0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99] {
        for &zl in &[0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0] {
            let wa = r * 500.0;
            let spec = BathSpectrum::tm_single_mode(1.0, 500.0, 1.0, [0.0, zl * 2.0 * PI / wa]);
            let pv = rddi_pv_numeric(&spec, wa, PvOptions::default()).unwrap();
            let cf = rddi_from_spectrum(&spec, wa, 0, 1).unwrap();
            assert!((pv.value - cf).abs() <= pv.error, "r={r} z={zl}: {} vs {cf} (±{})", pv.value, pv.error);
        }
    }
}

#[test]
fn presets_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    for name in PRESET_NAMES {
        let cfg = scenario::preset(name).unwrap();
        let path = dir.path().join(format!("{name}.cfg"));
        fs::write(&path, scenario::serialize(&cfg)).unwrap();
        assert_eq!(scenario::parse(&fs::read_to_string(&path).unwrap()).unwrap(), cfg);
    }
}

#[test]
fn identical_configs_give_identical_files() {
    let mut cfg = scenario::preset("fig2a").unwrap();
    cfg.grid.t_max = 2.0;
    cfg.grid.n_steps = 200;
    cfg.grid.n_modes = 400;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = scenario::run(&cfg, a.path()).unwrap();
    let rb = scenario::run(&cfg, b.path()).unwrap();
    assert_eq!(ra.files.len(), 4);
    for (fa, fb) in ra.files.iter().zip(&rb.files) {
        assert_eq!(fs::read(fa).unwrap(), fs::read(fb).unwrap(), "{}", fa.display());
    }
}

#[test]
fn analytic_trace_leaves_second_atom_empty() {
    let mut cfg = scenario::preset("fig2c_fbg").unwrap();
    cfg.grid.n_steps = 3000;
    cfg.output.plot = true;
    let dir = tempfile::tempdir().unwrap();
    let report = scenario::run(&cfg, dir.path()).unwrap();
    let csv = fs::read_to_string(dir.path().join("fig2c_fbg_nonmarkov.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,re_a1,im_a1,re_a2,im_a2,p1,p2,p_field,concurrence,norm");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 10);
    assert!(first[3].is_empty() && first[4].is_empty() && first[6].is_empty() && first[9].is_empty());
    // stride 10 over 3001 samples
    assert_eq!(csv.lines().count(), 1 + 301);
    assert!(dir.path().join("fig2c_fbg_nonmarkov.dat").exists());
    let summary = fs::read_to_string(dir.path().join("fig2c_fbg_summary.txt")).unwrap();
    assert!(summary.contains("root_4 = ") && summary.contains("c_max = "));
    assert!(report.run(Model::NonMarkov).is_some());
}

#[test]
fn realization_warnings() {
    let rb = scenario::execute(&scenario::preset("rb_d2_fbg").unwrap()).unwrap();
    assert!(rb.warnings.iter().any(|w| w.contains("SI inputs")), "{:?}", rb.warnings);
    let ryd = scenario::execute(&scenario::preset("rydberg_mwg").unwrap()).unwrap();
    assert!(!ryd.warnings.iter().any(|w| w.contains("SI inputs")));
    let get = |k: &str| ryd.record.iter().find(|(key, _)| key == k).map(|(_, v)| v.clone()).unwrap();
    assert_eq!(get("loss_viable"), "true");
    let product: f64 = get("gamma_loss_times_t").parse().unwrap();
    assert!(product > 0.0 && product < 0.1);
}

#[test]
fn refinement_leaves_concurrence_maximum_stable() {
    let mut cfg = scenario::preset("fig2a").unwrap();
    cfg.model = Model::Simulate;
    let coarse = scenario::execute(&cfg).unwrap().run(Model::Simulate).unwrap().summary.unwrap();
    cfg.grid.n_modes *= 2;
    cfg.grid.n_steps *= 2;
    let fine = scenario::execute(&cfg).unwrap().run(Model::Simulate).unwrap().summary.unwrap();
    assert!((coarse.c_max - fine.c_max).abs() < 0.005, "{} vs {}", coarse.c_max, fine.c_max);
}

#[test]
fn far_below_cutoff_a_lone_atom_does_not_decay() {
    use rddi_core::simulator::{discretize, evolve, EvolveOptions, Window};
    let (wc, wa) = (5000.0, 2500.0);
    // κ z ≈ 4300, so the second atom is decoupled.
    let spec = BathSpectrum::tm_single_mode(1.0, wc, 1.0, [0.0, 1.0]);
    let bath = discretize(&spec, Window::around(&spec, wa, 4.0), 1500).unwrap();
    let t: Vec<f64> = (0..=200).map(|k| k as f64 * 0.05).collect();
    let trace = evolve(&bath, wa, &t, EvolveOptions::default()).unwrap();
    let late = trace.t.iter().zip(&trace.a1).filter(|(&x, _)| x >= 1.0).map(|(_, a)| a.norm_sqr());
    let lowest = late.fold(1.0f64, f64::min);
    assert!(lowest >= 0.999, "{lowest}");
}
