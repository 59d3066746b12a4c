//! Averaged two-sided periodogram.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of segments for error bars.
pub const MIN_SEGMENTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

impl Window {
    fn weights(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann => (0..n)
                .map(|i| {
                    let s = (std::f64::consts::PI * i as f64 / n as f64).sin();
                    s * s
                })
                .collect(),
        }
    }
}

/// Two-sided PSD on an ascending frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsdEstimate {
    pub omega: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub segments: usize,
    pub dt: f64,
    pub segment_len: usize,
    /// Mean per-segment variance of the (mean-removed) signal.
    pub variance: f64,
    pub window: Window,
}

impl PsdEstimate {
    pub fn resolution(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.segment_len as f64 * self.dt)
    }

    /// `Σ PSD Δω / 2π` over the full band.
    pub fn integrated_power(&self) -> f64 {
        self.mean.iter().sum::<f64>() * self.resolution() / (2.0 * std::f64::consts::PI)
    }

    /// Integrated power relative to the trace variance.
    pub fn parseval_ratio(&self) -> f64 {
        self.integrated_power() / self.variance
    }

    /// Linear interpolation of the mean PSD and its error at `omega`.
    pub fn at(&self, omega: f64) -> Option<(f64, f64)> {
        let h = self.resolution();
        let pos = (omega - self.omega[0]) / h;
        if pos < 0.0 || pos > (self.omega.len() - 1) as f64 {
            return None;
        }
        let i = (pos.floor() as usize).min(self.omega.len() - 2);
        let f = pos - i as f64;
        let lerp = |v: &[f64]| v[i] * (1.0 - f) + v[i + 1] * f;
        Some((lerp(&self.mean), lerp(&self.stderr)))
    }
}

/// Periodogram of equal-length segments, accumulated one segment at a time.
pub struct PsdAccumulator {
    n: usize,
    dt: f64,
    window: Window,
    weights: Vec<f64>,
    norm: f64,
    fft: Arc<dyn Fft<f64>>,
    sum: Vec<f64>,
    sumsq: Vec<f64>,
    variance: f64,
    count: usize,
}

impl PsdAccumulator {
    pub fn new(n: usize, dt: f64, window: Window) -> Self {
        let weights = window.weights(n);
        let norm = weights.iter().map(|w| w * w).sum::<f64>();
        PsdAccumulator {
            n,
            dt,
            window,
            weights,
            norm,
            fft: FftPlanner::new().plan_fft_forward(n),
            sum: vec![0.0; n],
            sumsq: vec![0.0; n],
            variance: 0.0,
            count: 0,
        }
    }

    /// Periodogram of one segment in FFT order, and the segment variance.
    pub fn periodogram(&self, segment: &[f64]) -> (Vec<f64>, f64) {
        assert_eq!(segment.len(), self.n, "segment length");
        let mean = segment.iter().sum::<f64>() / self.n as f64;
        let mut buf: Vec<Complex64> = segment
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| Complex64::from((x - mean) * w))
            .collect();
        let var = segment.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / self.n as f64;
        self.fft.process(&mut buf);
        let scale = self.dt / self.norm;
        (buf.iter().map(|z| z.norm_sqr() * scale).collect(), var)
    }

    pub fn add_periodogram(&mut self, p: &[f64], variance: f64) {
        for ((s, q), v) in self.sum.iter_mut().zip(self.sumsq.iter_mut()).zip(p) {
            *s += v;
            *q += v * v;
        }
        self.variance += variance;
        self.count += 1;
    }

    pub fn add(&mut self, segment: &[f64]) {
        let (p, v) = self.periodogram(segment);
        self.add_periodogram(&p, v);
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(&self) -> Result<PsdEstimate> {
        let m = self.count;
        if m < MIN_SEGMENTS {
            return Err(Error::TooFewSamples {
                needed: MIN_SEGMENTS,
                got: m,
            });
        }
        let n = self.n;
        let h = n / 2;
        let dw = 2.0 * std::f64::consts::PI / (n as f64 * self.dt);
        let mf = m as f64;
        let mut omega = Vec::with_capacity(n);
        let mut mean = Vec::with_capacity(n);
        let mut stderr = Vec::with_capacity(n);
        for j in 0..n {
            let k = (j + n - h) % n;
            let mu = self.sum[k] / mf;
            let var = ((self.sumsq[k] - mf * mu * mu) / (mf - 1.0)).max(0.0);
            omega.push((j as f64 - h as f64) * dw);
            mean.push(mu);
            stderr.push((var / mf).sqrt());
        }
        Ok(PsdEstimate {
            omega,
            mean,
            stderr,
            segments: m,
            dt: self.dt,
            segment_len: n,
            variance: self.variance / mf,
            window: self.window,
        })
    }
}

/// Welch estimate from non-overlapping segments of a single record.
pub fn estimate_psd(signal: &[f64], dt: f64, segments: usize, window: Window) -> Result<PsdEstimate> {
    if segments < MIN_SEGMENTS {
        return Err(Error::TooFewSamples {
            needed: MIN_SEGMENTS,
            got: segments,
        });
    }
    let n = signal.len() / segments;
    if n < 2 {
        return Err(Error::TooFewSamples {
            needed: 2 * segments,
            got: signal.len(),
        });
    }
    let mut acc = PsdAccumulator::new(n, dt, window);
    for seg in signal.chunks_exact(n).take(segments) {
        acc.add(seg);
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    #[test]
    fn white_noise_reads_its_intensity() {
        let dt: f64 = 0.01;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let sigma = (1.0 / dt).sqrt();
        let x: Vec<f64> = (0..64 * 1000).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect();
        for w in [Window::Rectangular, Window::Hann] {
            let p = estimate_psd(&x, dt, 64, w).unwrap();
            let mean = p.mean.iter().sum::<f64>() / p.mean.len() as f64;
            assert!((mean - 1.0).abs() < 0.01, "{w:?}: {mean}");
        }
        let p = estimate_psd(&x, dt, 64, Window::Rectangular).unwrap();
        assert!((p.parseval_ratio() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sinusoid_power_per_side() {
        let dt = 0.01;
        let n = 1000;
        let k = 37;
        let w0 = 2.0 * std::f64::consts::PI * k as f64 / (n as f64 * dt);
        let a = 1.7;
        let x: Vec<f64> = (0..16 * n).map(|i| a * (w0 * i as f64 * dt + 0.3).sin()).collect();
        let p = estimate_psd(&x, dt, 16, Window::Rectangular).unwrap();
        let h = p.resolution() / (2.0 * std::f64::consts::PI);
        let pos: f64 = p.omega.iter().zip(&p.mean).filter(|(w, _)| **w > 0.0).map(|(_, v)| v * h).sum();
        let j = p.omega.iter().position(|w| (w - w0).abs() < 1e-9).unwrap();
        assert!((p.mean[j] * h - a * a / 4.0).abs() < 1e-9);
        assert!((pos - a * a / 4.0).abs() < 1e-9);
        assert!((p.integrated_power() - a * a / 2.0).abs() < 1e-9);
    }

    #[test]
    fn symmetric_for_real_input() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..16 * 64).map(|_| rng.random::<f64>()).collect();
        let p = estimate_psd(&x, 1.0, 16, Window::Hann).unwrap();
        let n = p.mean.len();
        for j in 1..n {
            let mirror = n - j;
            assert!((p.mean[j] - p.mean[mirror]).abs() <= 1e-12 * p.mean[j].max(1e-300));
        }
    }

    #[test]
    fn needs_sixteen_segments() {
        let x = vec![0.0; 1000];
        assert_eq!(
            estimate_psd(&x, 1.0, 8, Window::Rectangular),
            Err(Error::TooFewSamples { needed: 16, got: 8 })
        );
    }
}
