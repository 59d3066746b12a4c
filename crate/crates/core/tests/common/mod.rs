#![allow(dead_code)]

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use hetspec_core::params::{
    validate, CavityParams, Coupling, DetectorModel, DetectorParams, FieldNoise, Limits,
    MechParams, SystemParams, Topology, Units,
};
use hetspec_core::response::{autocorrelation_x, linspace, MechMoments, Oscillator};
use hetspec_core::ValidatedParams;

/// ω_m = 50, κ = 500, κ_ext = 400, ω_if = 400, all in units of γ_m.
pub fn system(
    n_th: f64,
    beta: f64,
    p: f64,
    field: FieldNoise,
    model: DetectorModel,
) -> ValidatedParams {
    let s = SystemParams {
        units: Units::GammaM,
        mech: MechParams {
            omega_m: 50.0,
            gamma_m: 1.0,
            n_th,
            beta,
            temperature: None,
        },
        cavity: CavityParams {
            kappa: 500.0,
            kappa_ext: 400.0,
            detuning: 0.0,
            coupling: Coupling::Backaction(p),
            topology: Topology::Transmission,
        },
        field,
        detector: DetectorParams::new(model, 400.0),
    };
    validate(&s, &Limits::default()).unwrap()
}

pub fn nearest(grid: &[f64], w: f64) -> usize {
    grid.iter()
        .enumerate()
        .min_by(|a, b| (a.1 - w).abs().total_cmp(&(b.1 - w).abs()))
        .unwrap()
        .0
}

/// `∫ e^{iωτ} C(τ) dτ` by composite Gauss-Legendre on `[0, 80/γ]`, folding in negative lags.
pub fn transform(osc: &Oscillator, m: &MechMoments, omegas: &[f64]) -> Vec<f64> {
    let quad = GaussLegendre::new(NonZeroUsize::new(24).unwrap());
    let h = 0.25;
    let panels = (80.0 / osc.gamma_m / h) as usize;
    omegas
        .iter()
        .map(|&w| {
            (0..panels)
                .map(|k| {
                    let a = k as f64 * h;
                    quad.integrate(a, a + h, |t| {
                        let c = autocorrelation_x(&[t, -t], osc, m);
                        let (s, co) = (w * t).sin_cos();
                        let e = num_complex::Complex64::new(co, s);
                        (e * c[0] + e.conj() * c[1]).re
                    })
                })
                .sum()
        })
        .collect()
}

/// `ω_m ± 10 γ_m` on both sides of zero frequency.
pub fn sideband_windows(osc: &Oscillator) -> Vec<f64> {
    let red = linspace(osc.omega_m - 10.0, osc.omega_m + 10.0, 81);
    red.iter().map(|w| -w).chain(red.iter().copied()).collect()
}
