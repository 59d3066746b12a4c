//! Cavity cooling of the mechanical mode by a second, red-detuned optical mode.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heterodyne::Theory;
use crate::params::{cavity_susceptibility, Limits};

const MAX_ITERATIONS: usize = 100;
const REL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoolingParams {
    /// Cooling-beam detuning `Δ_2`.
    pub delta2: f64,
    /// Cooling-beam many-photon coupling `G_2`.
    pub g2: f64,
    /// Linewidth of the cooling mode.
    pub kappa: f64,
    pub gamma_m0: f64,
    pub omega_m0: f64,
    /// Support occupancy.
    pub n_th0: f64,
    /// Intrinsic noise of the cooling mode in the classical model.
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub beta: f64,
    /// Backaction number of the measurement beam, entering only the inferred occupancy.
    #[serde(default)]
    pub p: f64,
}

fn one() -> f64 {
    1.0
}

impl CoolingParams {
    fn chi(&self, omega: f64) -> Complex64 {
        cavity_susceptibility(self.kappa, self.delta2, omega)
    }

    fn check(&self) -> Result<()> {
        for (name, v) in [
            ("gamma_m0", self.gamma_m0),
            ("omega_m0", self.omega_m0),
            ("kappa", self.kappa),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::NonPositiveRate { name, value: v });
            }
        }
        for (name, v) in [("n_th0", self.n_th0), ("alpha", self.alpha), ("p", self.p)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be a finite non-negative number, got {v}"),
                });
            }
        }
        Ok(())
    }

    fn damping_at(&self, omega: f64) -> f64 {
        let g2 = self.g2 * self.g2;
        self.gamma_m0 + 2.0 * g2 * (self.chi(omega).re - self.chi(-omega).re)
    }

    fn frequency_at(&self, omega: f64) -> f64 {
        let g2 = self.g2 * self.g2;
        self.omega_m0 + g2 * (self.chi(omega).im + self.chi(-omega).im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dynamics {
    pub gamma_m: f64,
    pub omega_m: f64,
    pub iterations: usize,
}

/// Optically damped linewidth and spring-shifted frequency.
///
/// The frequency appears inside the cavity response, so it is found by fixed-point
/// iteration from `omega_m0`.
pub fn effective_dynamics(cp: &CoolingParams) -> Result<Dynamics> {
    cp.check()?;
    let mut omega = cp.omega_m0;
    let tol = REL_TOLERANCE * cp.omega_m0;
    for it in 1..=MAX_ITERATIONS {
        let next = cp.frequency_at(omega);
        if !next.is_finite() {
            break;
        }
        let done = (next - omega).abs() <= tol;
        omega = next;
        if done {
            let gamma = cp.damping_at(omega);
            if gamma <= 0.0 {
                return Err(Error::AntiDamping(gamma));
            }
            return Ok(Dynamics {
                gamma_m: gamma,
                omega_m: omega,
                iterations: it,
            });
        }
    }
    Err(Error::NoConvergence {
        what: "optical spring fixed point",
        iterations: MAX_ITERATIONS,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoolingReport {
    pub gamma_m_eff: f64,
    pub omega_m_eff: f64,
    pub n_th_eff: f64,
    /// Occupancy a quantum analysis of the measured sidebands would report.
    pub n_inf: f64,
    /// `n_th_eff > α/2`, the classical cooling floor.
    pub limit_ok: bool,
}

/// Occupancy of the cooled mode with the full cavity response.
pub fn cooled_occupancy(cp: &CoolingParams, theory: Theory) -> Result<CoolingReport> {
    cooled_occupancy_with(cp, theory, &Limits::default())
}

pub fn cooled_occupancy_with(
    cp: &CoolingParams,
    theory: Theory,
    limits: &Limits,
) -> Result<CoolingReport> {
    let d = effective_dynamics(cp)?;
    check_regime(cp, &d, limits)?;
    let g2 = cp.g2 * cp.g2;
    let plus = cp.chi(d.omega_m).norm_sqr();
    let minus = cp.chi(-d.omega_m).norm_sqr();
    let support = cp.gamma_m0 * cp.n_th0;
    let n = match theory {
        Theory::Classical { alpha } => {
            support / d.gamma_m + alpha * cp.kappa * g2 * (plus + minus) / (2.0 * d.gamma_m)
        }
        Theory::Quantum => (support + cp.kappa * g2 * minus) / d.gamma_m,
    };
    Ok(report(cp, &d, n, theory))
}

fn report(cp: &CoolingParams, d: &Dynamics, n: f64, theory: Theory) -> CoolingReport {
    let (n_inf, alpha) = match theory {
        Theory::Classical { alpha } => (n / alpha + cp.p - 0.5, alpha),
        Theory::Quantum => (n + cp.p, cp.alpha),
    };
    CoolingReport {
        gamma_m_eff: d.gamma_m,
        omega_m_eff: d.omega_m,
        n_th_eff: n,
        n_inf,
        limit_ok: n > alpha / 2.0,
    }
}

fn check_regime(cp: &CoolingParams, d: &Dynamics, limits: &Limits) -> Result<()> {
    if limits.force {
        return Ok(());
    }
    let bound = limits.max_coupling * cp.kappa.min(d.omega_m);
    if d.gamma_m > bound {
        return Err(Error::RegimeViolation {
            name: "gamma_m_eff",
            value: d.gamma_m,
            bound,
        });
    }
    Ok(())
}

/// Resolved-sideband approximation, `γ_m0 n_th0/γ_m + α(1/2 + (κ/4ω_m)^2)` classically
/// and `γ_m0 n_th0/γ_m + (κ/4ω_m)^2` in quantum theory.
pub fn resolved_sideband_occupancy(cp: &CoolingParams, theory: Theory) -> Result<CoolingReport> {
    let d = effective_dynamics(cp)?;
    let r = (cp.kappa / (4.0 * d.omega_m)).powi(2);
    let support = cp.gamma_m0 * cp.n_th0 / d.gamma_m;
    let n = match theory {
        Theory::Classical { alpha } => support + alpha * (0.5 + r),
        Theory::Quantum => support + r,
    };
    Ok(report(cp, &d, n, theory))
}

/// Coupling `G_2` that damps the mode to `ratio * gamma_m0`, ignoring the spring shift.
pub fn coupling_for_damping(cp: &CoolingParams, ratio: f64) -> Result<f64> {
    let per_g2 = 2.0 * (cp.chi(cp.omega_m0).re - cp.chi(-cp.omega_m0).re);
    if !(per_g2 > 0.0) {
        return Err(Error::InvalidParameter {
            name: "delta2",
            reason: "detuning does not cool (needs Delta_2 < 0)".into(),
        });
    }
    Ok(((ratio - 1.0) * cp.gamma_m0 / per_g2).max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub delta2: f64,
    pub g2: f64,
    pub damping_ratio: f64,
    pub gamma_m_eff: f64,
    pub omega_m_eff: f64,
    pub n_classical: f64,
    pub n_quantum: f64,
    pub n_inf_classical: f64,
    pub classical_limit_ok: bool,
}

/// Cooling over a grid of detunings and target damping ratios `γ_m/γ_m0`.
pub fn sweep(base: &CoolingParams, deltas: &[f64], ratios: &[f64], limits: &Limits) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(deltas.len() * ratios.len());
    for &delta2 in deltas {
        for &ratio in ratios {
            let mut cp = *base;
            cp.delta2 = delta2;
            cp.g2 = coupling_for_damping(&cp, ratio)?;
            let c = cooled_occupancy_with(&cp, Theory::Classical { alpha: cp.alpha }, limits)?;
            let q = cooled_occupancy_with(&cp, Theory::Quantum, limits)?;
            rows.push(SweepRow {
                delta2,
                g2: cp.g2,
                damping_ratio: c.gamma_m_eff / cp.gamma_m0,
                gamma_m_eff: c.gamma_m_eff,
                omega_m_eff: c.omega_m_eff,
                n_classical: c.n_th_eff,
                n_quantum: q.n_th_eff,
                n_inf_classical: c.n_inf,
                classical_limit_ok: c.limit_ok,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> CoolingParams {
        CoolingParams {
            delta2: -10.0,
            g2: 0.0,
            kappa: 1.0,
            gamma_m0: 1e-6,
            omega_m0: 10.0,
            n_th0: 100.0,
            alpha: 1.0,
            beta: 1.0,
            p: 0.0,
        }
    }

    #[test]
    fn no_coupling_leaves_oscillator_alone() {
        let d = effective_dynamics(&base()).unwrap();
        assert_eq!((d.gamma_m, d.omega_m), (1e-6, 10.0));
    }

    #[test]
    fn resolved_sideband_damping() {
        let mut cp = base();
        cp.omega_m0 = 100.0;
        cp.delta2 = -100.0;
        cp.g2 = 1e-3;
        let d = effective_dynamics(&cp).unwrap();
        let approx = cp.gamma_m0 + 4.0 * cp.g2 * cp.g2 / cp.kappa;
        // Exact Re χ at the counter-rotating term: (κ/2)/((κ/2)^2 + (2ω_m)^2).
        let counter = 0.5 / (0.25 + 200.0 * 200.0);
        assert!((d.gamma_m - approx).abs() <= 2.0 * cp.g2 * cp.g2 * counter * 1.01 + 1e-15);
        assert!((d.gamma_m - approx).abs() / approx < 1e-4);
    }

    #[test]
    fn blue_detuning_heats() {
        let mut cp = base();
        cp.delta2 = 10.0;
        cp.g2 = 1e-4;
        let d = effective_dynamics(&cp).unwrap();
        assert!(d.gamma_m < cp.gamma_m0);
        cp.g2 = 1e-2;
        assert!(matches!(effective_dynamics(&cp), Err(Error::AntiDamping(_))));
    }

    #[test]
    fn spring_shift_is_self_consistent() {
        let mut cp = base();
        cp.delta2 = -5.0;
        cp.g2 = 0.05;
        let d = effective_dynamics(&cp).unwrap();
        assert!((cp.frequency_at(d.omega_m) - d.omega_m).abs() < 1e-9);
        assert!(d.omega_m != cp.omega_m0);
    }

    #[test]
    fn quantum_resolved_limit() {
        let mut cp = base();
        cp.omega_m0 = 100.0;
        cp.delta2 = -100.0;
        cp.n_th0 = 0.0;
        cp.gamma_m0 = 1e-9;
        cp.g2 = coupling_for_damping(&cp, 1e6).unwrap();
        let q = cooled_occupancy(&cp, Theory::Quantum).unwrap();
        assert!((q.n_th_eff - 6.25e-6).abs() < 1e-8, "{}", q.n_th_eff);
        let r = resolved_sideband_occupancy(&cp, Theory::Quantum).unwrap();
        assert!((r.n_th_eff - 6.25e-6).abs() < 1e-12);
    }

    #[test]
    fn classical_resolved_limit() {
        let mut cp = base();
        cp.omega_m0 = 100.0;
        cp.delta2 = -100.0;
        cp.n_th0 = 0.0;
        cp.gamma_m0 = 1e-9;
        cp.g2 = coupling_for_damping(&cp, 1e6).unwrap();
        let c = cooled_occupancy(&cp, Theory::Classical { alpha: 1.0 }).unwrap();
        // Corrections of order alpha/(2 * damping ratio) remain.
        assert!((c.n_th_eff - (0.5 + 6.25e-6)).abs() < 1e-6, "{}", c.n_th_eff);
        assert!(c.limit_ok);
    }

    #[test]
    fn classical_inference_matches_quantum_in_resolved_form() {
        let mut cp = base();
        cp.omega_m0 = 30.0;
        cp.delta2 = -30.0;
        cp.p = 0.1;
        cp.g2 = coupling_for_damping(&cp, 500.0).unwrap();
        let c = resolved_sideband_occupancy(&cp, Theory::Classical { alpha: 1.0 }).unwrap();
        let q = resolved_sideband_occupancy(&cp, Theory::Quantum).unwrap();
        assert!((c.n_inf - q.n_inf).abs() < 1e-12);
    }

    #[test]
    fn regime_guard() {
        let mut cp = base();
        cp.g2 = 0.5;
        assert!(matches!(
            cooled_occupancy(&cp, Theory::Quantum),
            Err(Error::RegimeViolation { .. })
        ));
        let force = Limits {
            force: true,
            ..Limits::default()
        };
        assert!(cooled_occupancy_with(&cp, Theory::Quantum, &force).is_ok());
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut cp = base();
        cp.gamma_m0 = 0.0;
        assert!(matches!(effective_dynamics(&cp), Err(Error::NonPositiveRate { .. })));
    }
}
