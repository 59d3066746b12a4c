//! Mechanical and cavity susceptibilities and position noise spectra.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{cavity_susceptibility, ValidatedParams};

/// Damped harmonic oscillator response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Oscillator {
    pub omega_m: f64,
    pub gamma_m: f64,
}

impl Oscillator {
    pub fn new(omega_m: f64, gamma_m: f64) -> Self {
        Oscillator { omega_m, gamma_m }
    }

    pub fn of(params: &ValidatedParams) -> Self {
        Oscillator::new(params.omega_m, params.gamma_m)
    }

    /// `chi_m[omega] = 1/(gamma_m/2 - i(omega - omega_m))`.
    pub fn chi_m(&self, omega: f64) -> Complex64 {
        Complex64::new(self.gamma_m / 2.0, -(omega - self.omega_m)).inv()
    }

    /// `|chi_m[omega]|^2` without forming the complex value.
    pub fn chi_m_sqr(&self, omega: f64) -> f64 {
        let h = self.gamma_m / 2.0;
        let d = omega - self.omega_m;
        1.0 / (h * h + d * d)
    }

    /// Unit-height Lorentzian of full width `gamma_m` centred at `omega_m`.
    pub fn lorentzian(&self, omega_tilde: f64) -> f64 {
        lorentzian(omega_tilde, self.omega_m, self.gamma_m)
    }
}

/// `(gamma/2)^2 / ((gamma/2)^2 + (omega - center)^2)`.
pub fn lorentzian(omega: f64, center: f64, gamma: f64) -> f64 {
    let h = gamma / 2.0;
    let d = omega - center;
    h * h / (h * h + d * d)
}

/// Cavity susceptibility of a validated record.
pub fn chi_c(params: &ValidatedParams, omega: f64) -> Complex64 {
    cavity_susceptibility(params.kappa, params.detuning, omega)
}

/// Evenly spaced grid on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n).map(|i| lo + step * i as f64).collect()
        }
    }
}

/// Symmetric grid spanning `±(omega_m + 25 gamma_m)` with 4001 points.
pub fn default_grid(osc: &Oscillator) -> Vec<f64> {
    symmetric_grid(osc.omega_m + 25.0 * osc.gamma_m, 4001)
}

/// Grid on `[-half_span, half_span]`, mirrored exactly about zero.
pub fn symmetric_grid(half_span: f64, n: usize) -> Vec<f64> {
    let mut g = linspace(-half_span, half_span, n);
    for i in 0..n / 2 {
        g[n - 1 - i] = -g[i];
    }
    if n % 2 == 1 {
        g[n / 2] = 0.0;
    }
    g
}

fn is_symmetric(grid: &[f64]) -> bool {
    let scale = grid.iter().fold(0.0f64, |m, w| m.max(w.abs())).max(1.0);
    let n = grid.len();
    (0..n).all(|i| (grid[i] + grid[n - 1 - i]).abs() <= 1e-12 * scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SxxKind {
    Thermal,
    WithBackaction,
    Symmetrized,
    FromMoments,
}

/// Position noise spectrum on a frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SxxCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: SxxKind,
    /// Occupancy the curve was evaluated at (including backaction where applicable).
    pub occupancy: Option<f64>,
    pub beta: Option<f64>,
}

impl SxxCurve {
    /// `∫ S dω / 2π` by the trapezoid rule.
    pub fn integrated_weight(&self) -> f64 {
        let s: f64 = self
            .grid
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(w, v)| (w[1] - w[0]) * (v[0] + v[1]) / 2.0)
            .sum();
        s / (2.0 * std::f64::consts::PI)
    }
}

fn thermal_values(grid: &[f64], osc: &Oscillator, n: f64, beta: f64) -> Vec<f64> {
    grid.iter()
        .map(|&w| osc.gamma_m * ((n + beta) * osc.chi_m_sqr(w) + n * osc.chi_m_sqr(-w)))
        .collect()
}

/// `gamma_m [(n + beta)|chi_m[ω]|^2 + n |chi_m[-ω]|^2]`.
pub fn sxx_thermal(grid: &[f64], osc: &Oscillator, n_th: f64, beta: f64) -> SxxCurve {
    SxxCurve {
        grid: grid.to_vec(),
        values: thermal_values(grid, osc, n_th, beta),
        kind: SxxKind::Thermal,
        occupancy: Some(n_th),
        beta: Some(beta),
    }
}

/// Thermal spectrum at the backaction-heated occupancy `n_th + p(alpha + r^2 C_xx)`.
pub fn sxx_with_backaction(grid: &[f64], params: &ValidatedParams) -> Result<SxxCurve> {
    if params.detuning != 0.0 {
        return Err(Error::DetuningNotZeroForClosedForm(params.detuning * params.rate_unit));
    }
    let osc = Oscillator::of(params);
    let n = params.effective_occupancy();
    Ok(SxxCurve {
        grid: grid.to_vec(),
        values: thermal_values(grid, &osc, n, params.beta),
        kind: SxxKind::WithBackaction,
        occupancy: Some(n),
        beta: Some(params.beta),
    })
}

/// `(S[ω] + S[-ω]) / 2`; the grid must be mirror symmetric about zero.
pub fn sxx_symmetrized(curve: &SxxCurve) -> Result<SxxCurve> {
    if !is_symmetric(&curve.grid) {
        return Err(Error::AsymmetricGrid);
    }
    let n = curve.values.len();
    let values = (0..n)
        .map(|i| (curve.values[i] + curve.values[n - 1 - i]) / 2.0)
        .collect();
    Ok(SxxCurve {
        grid: curve.grid.clone(),
        values,
        kind: SxxKind::Symmetrized,
        occupancy: curve.occupancy,
        beta: curve.beta,
    })
}

/// `gamma_m (n + beta/2)(|chi_m[ω]|^2 + |chi_m[-ω]|^2)` evaluated directly.
pub fn sxx_symmetrized_closed(grid: &[f64], osc: &Oscillator, n: f64, beta: f64) -> Vec<f64> {
    grid.iter()
        .map(|&w| osc.gamma_m * (n + beta / 2.0) * (osc.chi_m_sqr(w) + osc.chi_m_sqr(-w)))
        .collect()
}

/// Equal-time moments of the dimensionless position and momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MechMoments {
    /// `<x^2>`.
    pub x2: f64,
    /// `<{x, p}>`.
    pub xp_anti: f64,
    /// Imaginary part of `<[x, p]>`; the commutator is `i * xp_comm`.
    pub xp_comm: f64,
}

impl MechMoments {
    /// Thermal state in quantum theory: `<x^2> = 2n + 1`, `[x, p] = 2i`.
    pub fn thermal_quantum(n: f64) -> Self {
        MechMoments {
            x2: 2.0 * n + 1.0,
            xp_anti: 0.0,
            xp_comm: 2.0,
        }
    }

    /// Classical thermal state with the same second moment and no commutator.
    pub fn thermal_classical(n: f64) -> Self {
        MechMoments {
            x2: 2.0 * n + 1.0,
            xp_anti: 0.0,
            xp_comm: 0.0,
        }
    }

    pub fn commutator(&self) -> Complex64 {
        Complex64::new(0.0, self.xp_comm)
    }

    /// `<p x> = (<{x,p}> - <[x,p]>)/2`.
    pub fn px(&self) -> Complex64 {
        (Complex64::from(self.xp_anti) - self.commutator()) / 2.0
    }

    /// `<x p> = (<{x,p}> + <[x,p]>)/2`.
    pub fn xp(&self) -> Complex64 {
        (Complex64::from(self.xp_anti) + self.commutator()) / 2.0
    }
}

/// Two-Lorentzian spectrum built from equal-time moments.
pub fn spectrum_from_moments(grid: &[f64], osc: &Oscillator, m: &MechMoments) -> SxxCurve {
    let g = osc.gamma_m;
    let wm = osc.omega_m;
    let values = grid
        .iter()
        .map(|&w| {
            let pos = g * (m.x2 + m.xp_comm / 2.0) - (w - wm) * m.xp_anti;
            let neg = g * (m.x2 - m.xp_comm / 2.0) + (w + wm) * m.xp_anti;
            (osc.chi_m_sqr(w) * pos + osc.chi_m_sqr(-w) * neg) / 2.0
        })
        .collect();
    SxxCurve {
        grid: grid.to_vec(),
        values,
        kind: SxxKind::FromMoments,
        occupancy: None,
        beta: None,
    }
}

/// `<x(τ) x(0)>` of the damped oscillator started from the given moments.
pub fn autocorrelation_x(taus: &[f64], osc: &Oscillator, m: &MechMoments) -> Vec<Complex64> {
    let px = m.px();
    let xp = m.xp();
    taus.iter()
        .map(|&t| {
            let decay = (-osc.gamma_m * t.abs() / 2.0).exp();
            let (s, c) = (osc.omega_m * t).sin_cos();
            let cross = if t >= 0.0 { px } else { -xp };
            (Complex64::from(c * m.x2) + cross * s) * decay
        })
        .collect()
}
