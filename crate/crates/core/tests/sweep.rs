use std::collections::HashSet;

use hybrid_mimo::heuristic::{hybrid_detect, Problem};
use hybrid_mimo::linear::ml_detect;
use hybrid_mimo::ofdm::Constellation;
use hybrid_mimo::real::realify;
use hybrid_mimo::rng::draw_standard_complex_gaussian;
use hybrid_mimo::sim::{calibrate, calibrated_params, Arm, CalibrationPlan, ParamGrid, Point, StopRule};
use hybrid_mimo::{ComplexMatrix, DetectorConfig, DetectorKind, RngStream, SimulationConfig, Simulator};
use num_complex::Complex;

fn small(detectors: &[&str]) -> SimulationConfig {
    SimulationConfig {
        n_subcarriers: 32,
        max_trials: 4096,
        target_bit_errors: 150,
        rho_list: vec![0.0, 0.9],
        ebn0_db_list: vec![0.0, 6.0, 12.0],
        detectors: detectors.iter().map(|d| DetectorConfig::new(d.parse().unwrap())).collect(),
        master_seed: 11,
        ..SimulationConfig::default()
    }
}

#[test]
fn sweep_has_one_row_per_triple_and_physical_trends() {
    let cfg = small(&["MF", "ZF", "MMSE"]);
    let records = Simulator::<f64>::new(cfg.clone(), 1).unwrap().run_sweep().unwrap();
    assert_eq!(records.len(), 3 * 2 * 3);
    let keys: HashSet<_> = records.iter().map(|r| (r.detector.clone(), r.ebn0_db.to_bits(), r.rho.to_bits())).collect();
    assert_eq!(keys.len(), records.len());
    let find =
        |d: &str, e: f64, rho: f64| records.iter().find(|r| r.detector == d && r.ebn0_db == e && r.rho == rho).unwrap();
    for d in ["MF", "ZF", "MMSE"] {
        for rho in [0.0, 0.9] {
            for w in cfg.ebn0_db_list.windows(2) {
                let (a, b) = (find(d, w[0], rho), find(d, w[1], rho));
                assert!(b.ber <= a.ber + a.ci95 + b.ci95, "{d} rho {rho}: {} -> {}", a.ber, b.ber);
            }
        }
        for &e in &cfg.ebn0_db_list {
            let (lo, hi) = (find(d, e, 0.0), find(d, e, 0.9));
            assert!(hi.ber + hi.ci95 + lo.ci95 >= lo.ber, "{d} at {e} dB");
        }
    }
    for r in &records {
        assert!((0.0..=1.0).contains(&r.ber));
        assert_eq!(r.ber, r.bit_errors as f64 / (r.trials * cfg.bits_per_trial()) as f64);
        assert!(r.trials <= cfg.max_trials);
        assert!(r.bit_errors >= cfg.target_bit_errors || r.trials == cfg.max_trials);
    }
}

#[test]
fn empty_detector_list_is_a_validation_error() {
    let cfg = small(&[]);
    assert!(cfg.validate().is_err());
    assert!(Simulator::<f64>::new(cfg, 1).is_err());
    assert!(SimulationConfig::from_json(r#"{"detectors": []}"#).is_err());
    assert!(SimulationConfig::from_json(r#"{"rho_list": [1.5]}"#).is_err());
}

#[test]
fn ber_point_is_reproducible() {
    let sim = Simulator::<f64>::new(small(&["PSO-MMSE"]), 1).unwrap();
    let det = DetectorConfig::new(DetectorKind::PsoMmse).with_iterations(4);
    let p = Point::new(1, 6.0, 0, 0.0);
    let a = sim.run_ber_point(&det, p).unwrap();
    let b = sim.run_ber_point(&det, p).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.mean_iterations, 4.0);
}

#[test]
fn single_precision_runs_the_same_pipeline() {
    let cfg = SimulationConfig { max_trials: 2048, ..small(&["MMSE", "ML"]) };
    let p = Point::new(1, 6.0, 0, 0.0);
    let arms = [Arm::new(DetectorConfig::new(DetectorKind::Mmse)), Arm::new(DetectorConfig::new(DetectorKind::Ml))];
    let wide = Simulator::<f64>::new(cfg.clone(), 1).unwrap().evaluate(&arms, p, StopRule::fixed(2048)).unwrap();
    let narrow = Simulator::<f32>::new(cfg, 1).unwrap().evaluate(&arms, p, StopRule::fixed(2048)).unwrap();
    for c in 0..2 {
        let (a, b) = (wide.columns[c].bit_errors as f64, narrow.columns[c].bit_errors as f64);
        assert!((a - b).abs() <= 0.02 * a.max(50.0), "column {c}: {a} vs {b}");
    }
}

#[test]
fn single_precision_ml_agrees_on_clean_instances() {
    let c64 = Constellation::<f64>::qam(4).unwrap();
    let c32 = Constellation::<f32>::qam(4).unwrap();
    let mut rng = RngStream::new(12);
    for _ in 0..200 {
        let h: ComplexMatrix<f64> = draw_standard_complex_gaussian(&mut rng, 4, 4);
        let x: Vec<_> = (0..4).map(|_| c64.points()[rng.index(4)]).collect();
        let y = h.matvec(&x).unwrap();
        let h32 = h.map(|v| Complex::new(v.re as f32, v.im as f32));
        let y32: Vec<_> = y.iter().map(|v| Complex::new(v.re as f32, v.im as f32)).collect();
        let wide = ml_detect(&h, &y, &c64).unwrap();
        let narrow = ml_detect(&h32, &y32, &c32).unwrap();
        assert_eq!(wide, x);
        assert!(narrow.iter().zip(&x).all(|(a, b)| (f64::from(a.re) - b.re).abs() < 1e-6));
    }
}

#[test]
fn hybrid_output_never_leaves_the_constellation() {
    let c = Constellation::<f64>::qam(4).unwrap();
    let mut rng = RngStream::new(13);
    for kind in [DetectorKind::PsoMf, DetectorKind::DeMf] {
        let params = calibrated_params(kind, 0.5).unwrap();
        for _ in 0..50 {
            let h: ComplexMatrix<f64> = draw_standard_complex_gaussian(&mut rng, 4, 4);
            let y: Vec<_> = (0..4).map(|_| rng.complex_gaussian::<f64>()).collect();
            let problem = Problem::new(realify(&h, &y).unwrap(), &c);
            let d = hybrid_detect(&mut rng, &problem, &h, &y, kind, &params, 0.1).unwrap();
            assert!(d.symbols.iter().all(|s| c.points().contains(s)));
            assert_eq!(d.trace.len(), params.iterations() + 1);
            assert!(d.trace.windows(2).all(|w| w[1] <= w[0]));
        }
    }
}

#[test]
fn calibration_log_is_complete_and_backed() {
    let cfg = SimulationConfig { max_trials: 512, n_subcarriers: 32, master_seed: 3, ..SimulationConfig::default() };
    let sim = Simulator::<f64>::new(cfg, 1).unwrap();
    let plan = CalibrationPlan {
        detector: DetectorKind::PsoMmse,
        parameters: vec![ParamGrid::rational("w", 2, 4, 2, 1.0), ParamGrid::rational("c1", 2, 6, 2, 2.0)],
        ebn0_db: 8.0,
        rho: 0.5,
        iterations: 3,
        min_errors: 20,
    };
    let out = calibrate(&sim, &plan).unwrap();
    assert_eq!(out.log.len(), 3 + 5);
    assert!(out.final_ber <= out.start_ber);
    for e in &out.log {
        assert_eq!(e.backed, e.bit_errors >= 20);
    }
    assert_eq!(out.values.len(), 2);
}
