mod common;

use common::{nearest, sideband_windows, system, transform};
use hetspec_core::params::{DetectorModel, FieldNoise};
use hetspec_core::response::{
    spectrum_from_moments, sxx_thermal, sxx_with_backaction, symmetric_grid, MechMoments,
    Oscillator,
};

#[test]
fn fourier_transform_of_autocorrelation() {
    let osc = Oscillator::new(50.0, 1.0);
    let grid = sideband_windows(&osc);
    let squeezed = MechMoments {
        x2: 3.0,
        xp_anti: 0.4,
        xp_comm: 2.0,
    };
    for m in [
        MechMoments::thermal_quantum(0.7),
        MechMoments::thermal_classical(2.0),
        squeezed,
    ] {
        let numeric = transform(&osc, &m, &grid);
        let closed = spectrum_from_moments(&grid, &osc, &m);
        for (a, b) in numeric.iter().zip(&closed.values) {
            assert!((a - b).abs() <= 1e-6 * b.abs(), "{m:?}: {a} vs {b}");
        }
    }
}

#[test]
fn moments_match_thermal_spectrum() {
    let osc = Oscillator::new(50.0, 1.0);
    let grid = symmetric_grid(75.0, 4001);
    for n in [0.0, 0.3, 12.0] {
        let a = spectrum_from_moments(&grid, &osc, &MechMoments::thermal_quantum(n));
        let b = sxx_thermal(&grid, &osc, n, 1.0);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() <= 1e-12 * y);
        }
    }
}

#[test]
fn integrated_weight_is_position_variance() {
    let osc = Oscillator::new(50.0, 1.0);
    let grid = symmetric_grid(osc.omega_m + 500.0 * osc.gamma_m, 200_001);
    for (n, beta) in [(0.0, 1.0), (0.5, 1.0), (3.0, 0.0), (10.0, 1.0)] {
        let s = sxx_thermal(&grid, &osc, n, beta);
        let x2 = 2.0 * n + beta;
        assert!((s.integrated_weight() / x2 - 1.0).abs() < 1e-3, "n = {n}");
    }
    let p = system(0.4, 1.0, 0.1, FieldNoise::quantum(), DetectorModel::Scl);
    let s = sxx_with_backaction(&grid, &p).unwrap();
    let x2 = 2.0 * p.effective_occupancy() + 1.0;
    assert!((s.integrated_weight() / x2 - 1.0).abs() < 1e-3);
}

#[test]
fn backaction_asymmetry_identity() {
    let grid = symmetric_grid(75.0, 6001);
    for (n_th, p) in [(0.0, 0.1), (2.0, 0.5), (30.0, 0.05)] {
        let params = system(n_th, 1.0, p, FieldNoise::quantum(), DetectorModel::Scl);
        let s = sxx_with_backaction(&grid, &params).unwrap();
        let plus = s.values[nearest(&grid, 50.0)];
        let minus = s.values[nearest(&grid, -50.0)];
        let expected = 4.0 * params.beta / params.gamma_m;
        assert!(((plus - minus) / expected - 1.0).abs() < 1e-3);
    }
}
