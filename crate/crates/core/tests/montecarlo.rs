mod common;

use common::system;
use hetspec_core::heterodyne::sideband_shape;
use hetspec_core::montecarlo::{
    estimate_psd, extract_sidebands, synthesize_photocurrent, Detector, PsdEstimate, Propagator,
    Scenario, Simulation, TimeTrace, Window,
};
use hetspec_core::params::{DetectorModel, FieldNoise};
use hetspec_core::response::{autocorrelation_x, MechMoments, Oscillator};
use hetspec_core::Error;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn quick() -> Scenario {
    Scenario {
        segments: 16,
        ..Scenario::default()
    }
}

#[test]
fn free_oscillator_variance() {
    let p = system(0.0, 1.0, 0.0, FieldNoise::quantum(), DetectorModel::Scl);
    let prop = Propagator::new(&p, 0.01, 100_000).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x2: Vec<f64> = (0..16).map(|_| prop.integrate(&mut rng, false, "free").x2_mean).collect();
    let mean = x2.iter().sum::<f64>() / 16.0;
    let sd = (x2.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 15.0).sqrt();
    assert!((mean - 1.0).abs() < 3.0 * sd / 4.0, "{mean} ± {}", sd / 4.0);
}

#[test]
fn backaction_heating() {
    let p = system(0.0, 1.0, 0.1, FieldNoise::classical(1.0), DetectorModel::Scl);
    let prop = Propagator::new(&p, 0.01, 100_000).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let v: Vec<f64> = (0..16)
        .map(|_| prop.integrate(&mut rng, false, "heat").x2_mean / 2.0 - p.beta / 2.0)
        .collect();
    let mean = v.iter().sum::<f64>() / 16.0;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 15.0).sqrt();
    assert!((mean - 0.1).abs() < 3.0 * sd / 4.0, "{mean} ± {}", sd / 4.0);
    // The closed form drops terms of order (γ_m/ω_m)^2.
    assert!((prop.stationary_x2() / 2.0 - 0.5 - 0.1).abs() < 1e-4);
}

#[test]
fn classical_autocorrelation() {
    let mut p = system(2.0, 0.0, 0.1, FieldNoise::classical(1.0), DetectorModel::Scl);
    p.beta = 0.0;
    let dt = 0.01;
    let steps = 20_000;
    let prop = Propagator::new(&p, dt, steps).unwrap();
    let osc = Oscillator::new(p.omega_m, p.gamma_m);
    let n = p.effective_occupancy();
    let moments = MechMoments {
        x2: 2.0 * n,
        xp_anti: 0.0,
        xp_comm: 0.0,
    };
    let lags = [0usize, 3, 10, 50, 100, 200];
    let taus: Vec<f64> = lags.iter().map(|&k| k as f64 * dt).collect();
    let expected = autocorrelation_x(&taus, &osc, &moments);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let segments = 32;
    let est: Vec<Vec<f64>> = (0..segments)
        .map(|_| {
            let x = prop.integrate(&mut rng, true, "acf").x.unwrap();
            lags.iter()
                .map(|&k| {
                    let m = steps - k;
                    (0..m).map(|i| x[i + k] * x[i]).sum::<f64>() / m as f64
                })
                .collect()
        })
        .collect();
    for (j, e) in expected.iter().enumerate() {
        let vals: Vec<f64> = est.iter().map(|r| r[j]).collect();
        let mean = vals.iter().sum::<f64>() / segments as f64;
        let se = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
            / (segments - 1) as f64
            / segments as f64)
            .sqrt();
        assert!(e.im.abs() < 1e-15);
        assert!((mean - e.re).abs() < 3.0 * se, "lag {}: {mean} ± {se} vs {}", taus[j], e.re);
    }
}

#[test]
fn seeded_traces_are_reproducible() {
    let p = system(0.4, 1.0, 0.1, FieldNoise::quantum(), DetectorModel::Scl);
    let sim = Simulation::new(&p, &quick()).unwrap();
    let a = sim.trace(99, 3, 7, true);
    let b = sim.trace(99, 3, 7, true);
    assert_eq!(a, b);
    assert_ne!(a.d_out, sim.trace(99, 3, 8, false).d_out);
    assert_ne!(a.d_out, sim.trace(100, 3, 7, false).d_out);
    assert_eq!(sim.photocurrent(99, 3, 7).unwrap(), sim.photocurrent(99, 3, 7).unwrap());
    let r1 = sim.run(4, 0).unwrap();
    let r2 = sim.run(4, 0).unwrap();
    assert_eq!(r1.psd.mean, r2.psd.mean);
}

#[test]
fn parseval_and_symmetry_of_simulated_psd() {
    let p = system(0.4, 1.0, 0.1, FieldNoise::quantum(), DetectorModel::Scl);
    let sim = Simulation::new(&p, &quick()).unwrap();
    let out = sim.run(8, 0).unwrap();
    assert!((out.psd.parseval_ratio() - 1.0).abs() < 0.01);
    let n = out.psd.mean.len();
    for j in 1..n {
        let k = n - j;
        assert!((out.psd.mean[j] - out.psd.mean[k]).abs() <= 1e-9 * out.psd.mean[j]);
    }
    assert!(out.psd.mean.iter().all(|v| *v >= 0.0));
}

#[test]
fn uncoupled_system_gives_flat_windows() {
    let p = system(0.4, 1.0, 0.0, FieldNoise::classical(2.0), DetectorModel::Scl);
    let sim = Simulation::new(&p, &quick()).unwrap();
    let out = sim.run(2, 0).unwrap();
    let s = &out.sidebands;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    for v in [&s.red, &s.blue] {
        let m = mean(v);
        let se = s.red_err[0] / (v.len() as f64).sqrt();
        assert!((m - 2.0).abs() < 4.0 * se, "{m}");
    }
    assert!(out.fit.h_r.abs() < 3.0 * out.fit.h_r_err);
    assert!(out.fit.h_b.abs() < 3.0 * out.fit.h_b_err);
}

#[test]
fn heights_converge_over_twenty_seeds() {
    let p = system(0.4, 1.0, 0.1, FieldNoise::quantum(), DetectorModel::Scl);
    let shape = sideband_shape(&p).unwrap();
    let sim = Simulation::new(&p, &quick()).unwrap();
    let s = sim.run_trials(2024, 20).unwrap();
    let f = &s.pooled_fit;
    assert!((f.h_r - shape.c_red).abs() < 3.0 * f.h_r_err, "{} ± {}", f.h_r, f.h_r_err);
    assert!((f.h_b - shape.c_blue).abs() < 3.0 * f.h_b_err, "{} ± {}", f.h_b, f.h_b_err);
    assert!((f.floor - shape.a).abs() < 3.0 * f.floor_err);
}

fn silent(n: usize, dt: f64) -> TimeTrace {
    TimeTrace {
        dt,
        steps: n,
        d_out: vec![Complex64::default(); n],
        x: None,
        d: None,
        x2_mean: 0.0,
        tag: "silent".into(),
    }
}

#[test]
fn photomultiplier_floor_without_signal() {
    let p = system(0.0, 1.0, 0.0, FieldNoise::classical(1.0), DetectorModel::Qua);
    let det = Detector::for_params(&p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let dt = 1e-3;
    let i: Vec<f64> = (0..32)
        .flat_map(|_| synthesize_photocurrent(&silent(4000, dt), &det, &mut rng).unwrap())
        .collect();
    let psd = estimate_psd(&i, dt, 32, Window::Rectangular).unwrap();
    let m = psd.mean.iter().sum::<f64>() / psd.mean.len() as f64;
    assert!((m - p.detector.z2 * p.detector.i0_ratio).abs() < 0.01);
}

#[test]
fn vacuum_photomultiplier_needs_unit_noise() {
    let mut p = system(0.0, 0.5, 0.1, FieldNoise::quantum(), DetectorModel::Qua);
    assert!(matches!(Detector::for_params(&p), Err(Error::UnsupportedCombo(_))));
    p.beta = 1.0;
    assert!(Detector::for_params(&p).is_ok());
}

#[test]
fn mirrored_psd_gives_equal_windows() {
    let n = 2000;
    let dt = 0.002;
    let dw = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    let omega: Vec<f64> = (0..n).map(|j| (j as f64 - (n / 2) as f64) * dw).collect();
    let w_if = 255.0 * dw;
    let mean: Vec<f64> = omega.iter().map(|w| 1.0 + (-((w.abs() - w_if) / 30.0).powi(2)).exp()).collect();
    let psd = PsdEstimate {
        omega,
        stderr: vec![0.0; n],
        mean,
        segments: 16,
        dt,
        segment_len: n,
        variance: 1.0,
        window: Window::Rectangular,
    };
    let s = extract_sidebands(&psd, w_if, 50.0, 10.0).unwrap();
    for (r, b) in s.red.iter().zip(&s.blue) {
        assert!((r - b).abs() < 1e-12);
    }
    assert!(matches!(
        extract_sidebands(&psd, w_if, 50.0, 2000.0),
        Err(Error::WindowOutOfRange { .. })
    ));
}

#[test]
fn rejects_coarse_steps_and_short_runs() {
    let p = system(0.4, 1.0, 0.1, FieldNoise::quantum(), DetectorModel::Scl);
    let coarse = Scenario {
        dt: Some(0.01),
        ..quick()
    };
    assert!(matches!(Simulation::new(&p, &coarse), Err(Error::StepTooLarge { .. })));
    let few = Scenario {
        segments: 4,
        ..quick()
    };
    assert!(matches!(Simulation::new(&p, &few), Err(Error::TooFewSamples { .. })));
}
