//! Time-domain Monte Carlo: Langevin integration, photocurrent synthesis
//! and spectral estimation.
//!
//! Quantum noise is represented by its symmetric-ordered c-number
//! equivalent, so a simulated record reproduces the symmetrized detector
//! model directly. The photomultiplier model follows by adding its shot-noise
//! floor where the two models coincide.

mod integrator;
mod photocurrent;
mod psd;
mod sidebands;

pub use integrator::{LinearSystem, Propagator, TimeTrace};
pub use photocurrent::{synthesize_photocurrent, Detector};
pub use psd::{estimate_psd, PsdAccumulator, PsdEstimate, Window, MIN_SEGMENTS};
pub use sidebands::{extract_sidebands, MeasuredSidebands};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heterodyne::{fit_sidebands, FitOptions, ThermometryReport};
use crate::params::ValidatedParams;

/// Shortest segment, in units of `1/gamma_m`.
pub const MIN_SEGMENT_DURATION: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub segments: usize,
    /// Requested segment length in units of `1/gamma_m`.
    pub segment_duration: f64,
    /// Requested step; defaults to sixteen samples per period of `ω_if + ω_m`.
    pub dt: Option<f64>,
    pub window: Window,
    /// Half-width of the fitted sideband windows around `ω_m`.
    pub fit_halfwidth: f64,
    /// Round the segment length so that `ω_if` falls on a frequency bin.
    pub align_to_if: bool,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            segments: 64,
            segment_duration: 100.0,
            dt: None,
            window: Window::Rectangular,
            fit_halfwidth: 10.0,
            align_to_if: true,
        }
    }
}

/// Largest step that still samples `ω_if + ω_m` eight times per period.
pub fn max_step(omega_if: f64, omega_m: f64) -> f64 {
    2.0 * std::f64::consts::PI / (8.0 * (omega_if + omega_m))
}

pub fn default_step(omega_if: f64, omega_m: f64) -> f64 {
    max_step(omega_if, omega_m) / 2.0
}

/// Smallest integer `>= n` with no prime factors other than 2, 3 and 5.
pub fn next_smooth(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Mean with standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            f64::NAN
        };
        Stat {
            mean,
            stderr: (var / n as f64).sqrt(),
            count: n,
        }
    }
}

/// Output of one simulated run of `segments` segments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutput {
    pub psd: PsdEstimate,
    pub sidebands: MeasuredSidebands,
    pub fit: ThermometryReport,
    /// `<x^2>` averaged over segments.
    pub x2: Stat,
}

/// Results pooled over independent runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSummary {
    pub trials: usize,
    pub h_r: Stat,
    pub h_b: Stat,
    pub floor: Stat,
    pub gamma: Stat,
    pub x2: Stat,
    /// PSD averaged over runs.
    pub psd: PsdEstimate,
    /// Fit of the trial-averaged sideband windows.
    pub pooled_fit: ThermometryReport,
    pub pooled: MeasuredSidebands,
    /// Fits of the runs whose own fit converged.
    pub fits: Vec<ThermometryReport>,
    /// Runs whose individual fit failed; their spectra still enter the pooled fit.
    pub failed_fits: usize,
}

/// A configured simulation: validated parameters, discretization and detector.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub params: ValidatedParams,
    pub scenario: Scenario,
    pub detector: Detector,
    pub propagator: Propagator,
    /// Segment length after alignment.
    pub segment_duration: f64,
}

impl Simulation {
    pub fn new(params: &ValidatedParams, scenario: &Scenario) -> Result<Self> {
        let detector = Detector::for_params(params)?;
        let (w_if, w_m) = (params.detector.omega_if, params.omega_m);
        if scenario.segments < MIN_SEGMENTS {
            return Err(Error::TooFewSamples {
                needed: MIN_SEGMENTS,
                got: scenario.segments,
            });
        }
        let max = max_step(w_if, w_m);
        let dt_target = scenario.dt.unwrap_or_else(|| default_step(w_if, w_m));
        if !(dt_target > 0.0) {
            return Err(Error::NonPositiveRate {
                name: "dt",
                value: dt_target,
            });
        }
        if dt_target > max {
            return Err(Error::StepTooLarge { dt: dt_target, max });
        }
        let mut duration = scenario.segment_duration / params.gamma_m;
        if scenario.align_to_if {
            let period = 2.0 * std::f64::consts::PI / w_if;
            duration = (duration / period).round().max(1.0) * period;
        }
        if duration < MIN_SEGMENT_DURATION / params.gamma_m {
            return Err(Error::InvalidParameter {
                name: "segment_duration",
                reason: format!(
                    "segments must span at least {MIN_SEGMENT_DURATION}/gamma_m, got {duration}"
                ),
            });
        }
        let steps = next_smooth((duration / dt_target).ceil() as usize);
        let propagator = Propagator::new(params, duration / steps as f64, steps)?;
        Ok(Simulation {
            params: *params,
            scenario: *scenario,
            detector,
            propagator,
            segment_duration: duration,
        })
    }

    pub fn dt(&self) -> f64 {
        self.propagator.dt
    }

    fn rng(seed: u64, trial: u64, segment: u64, detector: bool) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream((trial << 32) | (segment << 1) | u64::from(detector));
        rng
    }

    /// Time trace of one segment; identical inputs give bit-identical output.
    pub fn trace(&self, seed: u64, trial: u64, segment: u64, record: bool) -> TimeTrace {
        let mut rng = Self::rng(seed, trial, segment, false);
        self.propagator.integrate(&mut rng, record, "segment")
    }

    /// Photocurrent of one segment.
    pub fn photocurrent(&self, seed: u64, trial: u64, segment: u64) -> Result<Vec<f64>> {
        let trace = self.trace(seed, trial, segment, false);
        let mut rng = Self::rng(seed, trial, segment, true);
        synthesize_photocurrent(&trace, &self.detector, &mut rng)
    }

    pub fn fit_options(&self) -> FitOptions {
        let d = self.params.derived();
        FitOptions {
            segment_duration: (self.scenario.window == Window::Rectangular)
                .then_some(self.segment_duration),
            backaction_scale: Some(4.0 * d.p * d.kappa_bar_ext),
        }
    }

    /// Runs every segment of one trial and estimates the PSD.
    pub fn run(&self, seed: u64, trial: u64) -> Result<RunOutput> {
        let (psd, sidebands, x2) = self.spectra(seed, trial)?;
        let fit = fit_sidebands(&sidebands.omega_tilde, &sidebands.red, &sidebands.blue, &self.fit_options())?;
        Ok(RunOutput { psd, sidebands, fit, x2 })
    }

    fn spectra(&self, seed: u64, trial: u64) -> Result<(PsdEstimate, MeasuredSidebands, Stat)> {
        let n = self.propagator.steps;
        let mut acc = PsdAccumulator::new(n, self.dt(), self.scenario.window);
        let parts: Vec<Result<(Vec<f64>, f64, f64)>> = (0..self.scenario.segments as u64)
            .into_par_iter()
            .map(|s| {
                let trace = self.trace(seed, trial, s, false);
                let mut rng = Self::rng(seed, trial, s, true);
                let i = synthesize_photocurrent(&trace, &self.detector, &mut rng)?;
                let (p, v) = acc.periodogram(&i);
                Ok((p, v, trace.x2_mean))
            })
            .collect();
        let mut x2 = Vec::with_capacity(parts.len());
        for part in parts {
            let (p, v, x) = part?;
            acc.add_periodogram(&p, v);
            x2.push(x);
        }
        let psd = acc.finish()?;
        let sidebands = extract_sidebands(
            &psd,
            self.params.detector.omega_if,
            self.params.omega_m,
            self.scenario.fit_halfwidth * self.params.gamma_m,
        )?;
        Ok((psd, sidebands, Stat::of(&x2)))
    }

    /// Independent runs `0..trials`, each fitted separately, plus a fit of their average.
    pub fn run_trials(&self, seed: u64, trials: usize) -> Result<TrialSummary> {
        if trials < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: trials });
        }
        let mut fits = Vec::with_capacity(trials);
        let mut x2 = Vec::with_capacity(trials);
        let mut pooled: Option<MeasuredSidebands> = None;
        let mut psd: Option<PsdEstimate> = None;
        let mut failed_fits = 0;
        for t in 0..trials as u64 {
            let (run_psd, sides, run_x2) = self.spectra(seed, t)?;
            x2.push(run_x2.mean);
            match fit_sidebands(&sides.omega_tilde, &sides.red, &sides.blue, &self.fit_options()) {
                Ok(fit) => fits.push(fit),
                // Single low-SNR windows can defeat the fit; the pooled fit below is what counts.
                Err(Error::DegenerateFit(_) | Error::NoConvergence { .. }) => failed_fits += 1,
                Err(e) => return Err(e),
            }
            match psd.as_mut() {
                None => {
                    let mut first = run_psd;
                    first.stderr.iter_mut().for_each(|e| *e *= *e);
                    psd = Some(first);
                }
                Some(acc) => {
                    for (a, b) in acc.mean.iter_mut().zip(&run_psd.mean) {
                        *a += b;
                    }
                    for (a, b) in acc.stderr.iter_mut().zip(&run_psd.stderr) {
                        *a += b * b;
                    }
                    acc.variance += run_psd.variance;
                    acc.segments += run_psd.segments;
                }
            }
            match pooled.as_mut() {
                None => pooled = Some(sides),
                Some(acc) => {
                    for (a, b) in acc.red.iter_mut().zip(&sides.red) {
                        *a += b;
                    }
                    for (a, b) in acc.blue.iter_mut().zip(&sides.blue) {
                        *a += b;
                    }
                }
            }
        }
        let mut pooled = pooled.expect("at least one trial");
        let k = trials as f64;
        let mut psd = psd.expect("at least one trial");
        psd.mean.iter_mut().for_each(|v| *v /= k);
        psd.stderr.iter_mut().for_each(|v| *v = v.sqrt() / k);
        psd.variance /= k;
        pooled.red.iter_mut().chain(pooled.blue.iter_mut()).for_each(|v| *v /= k);
        let col = |f: fn(&ThermometryReport) -> f64| -> Vec<f64> { fits.iter().map(f).collect() };
        let h_r = Stat::of(&col(|r| r.h_r));
        let h_b = Stat::of(&col(|r| r.h_b));
        let floor = Stat::of(&col(|r| r.floor));
        let gamma = Stat::of(&col(|r| r.gamma_fit));
        let pooled_fit = fit_sidebands(&pooled.omega_tilde, &pooled.red, &pooled.blue, &self.fit_options())?;
        // Errors of the average of k equally noisy runs.
        pooled.red_err.iter_mut().chain(pooled.blue_err.iter_mut()).for_each(|e| *e /= k.sqrt());
        Ok(TrialSummary {
            trials,
            h_r,
            h_b,
            floor,
            gamma,
            x2: Stat::of(&x2),
            psd,
            pooled_fit,
            pooled,
            fits,
            failed_fits,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_sizes() {
        assert_eq!(next_smooth(1), 1);
        assert_eq!(next_smooth(7), 8);
        assert_eq!(next_smooth(121), 125);
        assert_eq!(next_smooth(114_592), 115_200);
    }

    #[test]
    fn stat_of_values() {
        let s = Stat::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
