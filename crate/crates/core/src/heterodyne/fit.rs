//! Joint Lorentzian fit of the red and blue sideband windows.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{DMatrix, DVector, Dyn, Owned};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct FitOptions {
    /// Length of the rectangular window the spectra were estimated with.
    /// When set, the line shape is the Lorentzian convolved with the window's Fejér kernel.
    pub segment_duration: Option<f64>,
    /// `4 p κ̄_ext`, needed for the floor-referenced occupancy.
    pub backaction_scale: Option<f64>,
}

/// Result of a sideband fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermometryReport {
    pub floor: f64,
    pub floor_red: f64,
    pub floor_blue: f64,
    pub h_r: f64,
    pub h_b: f64,
    pub gamma_fit: f64,
    pub omega_m_fit: f64,
    pub h_r_err: f64,
    pub h_b_err: f64,
    pub floor_err: f64,
    pub gamma_err: f64,
    pub omega_m_err: f64,
    /// `h_b / (h_r - h_b)`; `None` when `h_r <= h_b`.
    pub ratio_method_n: Option<f64>,
    /// `h_b / floor / (4 p κ̄_ext)`.
    pub floor_method_n: Option<f64>,
    /// `(h_r - h_b) / floor`.
    pub delta_ratio: f64,
    /// Blue sideband dips below the floor.
    pub squashing: bool,
    pub residual_rms: f64,
    pub evaluations: usize,
}

/// Line shape of unit peak height.
fn line(w: f64, w0: f64, gamma: f64, duration: Option<f64>) -> f64 {
    let h = gamma / 2.0;
    match duration {
        None => {
            let d = w - w0;
            h * h / (h * h + d * d)
        }
        Some(t) => {
            let s = Complex64::new(h, -(w - w0));
            let windowed = s.inv() - (Complex64::from(1.0) - (-s * t).exp()) / (s * s * t);
            h * windowed.re
        }
    }
}

struct Problem<'a> {
    grid: &'a [f64],
    red: &'a [f64],
    blue: &'a [f64],
    duration: Option<f64>,
    /// Bounds of the width, which is fitted through a logistic map onto `(lo, hi)`.
    width: (f64, f64),
    theta: DVector<f64>,
}

impl Problem<'_> {
    fn gamma(&self, u: f64) -> f64 {
        let (lo, hi) = self.width;
        lo + (hi - lo) / (1.0 + (-u).exp())
    }

    /// `dγ/du` of the logistic map.
    fn gamma_slope(&self, u: f64) -> f64 {
        let (lo, hi) = self.width;
        let s = 1.0 / (1.0 + (-u).exp());
        (hi - lo) * s * (1.0 - s)
    }

    fn shapes(&self, w0: f64, gamma: f64) -> Vec<(f64, f64)> {
        self.grid
            .iter()
            .map(|&w| (line(w, w0, gamma, self.duration), line(-w, w0, gamma, self.duration)))
            .collect()
    }
}

impl LeastSquaresProblem<f64, Dyn, Dyn> for Problem<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, x: &DVector<f64>) {
        self.theta.copy_from(x);
    }

    fn params(&self) -> DVector<f64> {
        self.theta.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let t = &self.theta;
        let (ar, hr, ab, hb) = (t[0], t[1], t[2], t[3]);
        let n = self.grid.len();
        let mut r = DVector::zeros(2 * n);
        for (i, (k, ki)) in self.shapes(t[4], self.gamma(t[5])).into_iter().enumerate() {
            r[i] = ar + hr * k + hb * ki - self.red[i];
            r[n + i] = ab + hb * k + hr * ki - self.blue[i];
        }
        Some(r)
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        Some(self.jacobian_with(self.gamma_slope(self.theta[5])))
    }
}

impl Problem<'_> {
    /// Jacobian with the last column scaled by `slope`; `slope = 1` differentiates by `γ` itself.
    fn jacobian_with(&self, slope: f64) -> DMatrix<f64> {
        let t = &self.theta;
        let (hr, hb, w0, gamma) = (t[1], t[3], t[4], self.gamma(t[5]));
        let n = self.grid.len();
        let base = self.shapes(w0, gamma);
        let dw = 1e-6 * gamma;
        let dg = 1e-6 * gamma;
        let wp = self.shapes(w0 + dw, gamma);
        let wm = self.shapes(w0 - dw, gamma);
        let gp = self.shapes(w0, gamma + dg);
        let gm = self.shapes(w0, gamma - dg);
        let mut j = DMatrix::zeros(2 * n, 6);
        for i in 0..n {
            let (k, ki) = base[i];
            let dk_w = (wp[i].0 - wm[i].0) / (2.0 * dw);
            let dki_w = (wp[i].1 - wm[i].1) / (2.0 * dw);
            let dk_g = slope * (gp[i].0 - gm[i].0) / (2.0 * dg);
            let dki_g = slope * (gp[i].1 - gm[i].1) / (2.0 * dg);
            j[(i, 0)] = 1.0;
            j[(i, 1)] = k;
            j[(i, 3)] = ki;
            j[(i, 4)] = hr * dk_w + hb * dki_w;
            j[(i, 5)] = hr * dk_g + hb * dki_g;
            j[(n + i, 2)] = 1.0;
            j[(n + i, 3)] = k;
            j[(n + i, 1)] = ki;
            j[(n + i, 4)] = hb * dk_w + hr * dki_w;
            j[(n + i, 5)] = hb * dk_g + hr * dki_g;
        }
        j
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

fn smooth(v: &[f64], half: usize) -> Vec<f64> {
    (0..v.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(v.len());
            v[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Floors and heights by linear least squares at fixed centre and width.
fn linear_amplitudes(grid: &[f64], red: &[f64], blue: &[f64], w0: f64, gamma: f64, duration: Option<f64>) -> [f64; 4] {
    let n = grid.len();
    let mut a = DMatrix::zeros(2 * n, 4);
    let mut b = DVector::zeros(2 * n);
    for (i, &w) in grid.iter().enumerate() {
        let (k, ki) = (line(w, w0, gamma, duration), line(-w, w0, gamma, duration));
        a[(i, 0)] = 1.0;
        a[(i, 1)] = k;
        a[(i, 3)] = ki;
        a[(n + i, 2)] = 1.0;
        a[(n + i, 3)] = k;
        a[(n + i, 1)] = ki;
        b[i] = red[i];
        b[n + i] = blue[i];
    }
    let ata = a.transpose() * &a;
    let atb = a.transpose() * b;
    match ata.lu().solve(&atb) {
        Some(x) => [x[0], x[1], x[2], x[3]],
        None => [median(red), 0.0, median(blue), 0.0],
    }
}

/// Centre and width from the red-minus-blue difference, which peaks at the
/// resonance in every model; floors and heights then follow linearly.
fn initial_guess(grid: &[f64], red: &[f64], blue: &[f64], duration: Option<f64>) -> DVector<f64> {
    let n = grid.len();
    let step = (grid[n - 1] - grid[0]) / (n - 1) as f64;
    let diff: Vec<f64> = red.iter().zip(blue).map(|(r, b)| r - b).collect();
    let diff = smooth(&diff, (n / 200).max(1));
    let (imax, &peak) = diff
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let base = median(&diff);
    let half = base + (peak - base) / 2.0;
    let left = (0..imax).rev().find(|&i| diff[i] < half).map(|i| grid[i]);
    let right = (imax..n).find(|&i| diff[i] < half).map(|i| grid[i]);
    let fwhm = match (left, right) {
        (Some(l), Some(r)) => r - l,
        (Some(l), None) => 2.0 * (grid[imax] - l),
        (None, Some(r)) => 2.0 * (r - grid[imax]),
        (None, None) => 10.0 * step,
    };
    let w0 = grid[imax];
    let gamma = fwhm.clamp(2.0 * step, (grid[n - 1] - grid[0]) / 4.0);
    let [ar, hr, ab, hb] = linear_amplitudes(grid, red, blue, w0, gamma, duration);
    DVector::from_vec(vec![ar, hr, ab, hb, w0, gamma])
}

/// Fits `a_r + h_r K[ω̃] + h_b K[-ω̃]` (red) and `a_b + h_b K[ω̃] + h_r K[-ω̃]` (blue)
/// with shared centre and width by damped least squares.
pub fn fit_sidebands(
    grid: &[f64],
    red: &[f64],
    blue: &[f64],
    opts: &FitOptions,
) -> Result<ThermometryReport> {
    let n = grid.len();
    if red.len() != n {
        return Err(Error::GridMismatch(n, red.len()));
    }
    if blue.len() != n {
        return Err(Error::GridMismatch(n, blue.len()));
    }
    if n < 8 {
        return Err(Error::TooFewSamples { needed: 8, got: n });
    }
    if red.iter().chain(blue).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateFit("non-finite spectrum values".into()));
    }

    let span = (grid[n - 1] - grid[0]).abs();
    let width = (span / (n - 1) as f64, span / 2.0);
    let mut theta = initial_guess(grid, red, blue, opts.segment_duration);
    let s = (theta[5] - width.0) / (width.1 - width.0);
    theta[5] = (s / (1.0 - s)).ln();
    let problem = Problem {
        grid,
        red,
        blue,
        duration: opts.segment_duration,
        width,
        theta,
    };
    let (problem, report) = LevenbergMarquardt::new()
        .with_tol(1e-15)
        .with_patience(200)
        .minimize(problem);
    if report.termination.was_usage_issue() {
        return Err(Error::DegenerateFit(format!("{:?}", report.termination)));
    }

    let theta = problem.theta.clone();
    let (lo, hi) = (grid[0].min(grid[n - 1]), grid[0].max(grid[n - 1]));
    let gamma = problem.gamma(theta[5]);
    if !(theta[4] >= lo && theta[4] <= hi && theta.iter().all(|v| v.is_finite())) {
        return Err(Error::DegenerateFit(format!(
            "line centre {} or width {gamma} outside the fitted window [{lo}, {hi}]",
            theta[4]
        )));
    }
    let r = problem.residuals().unwrap();
    // Covariance in (a_r, h_r, a_b, h_b, ω₀, γ): the logistic slope vanishes
    // when the width runs into a bound, which would make the matrix singular.
    let j = problem.jacobian_with(1.0);
    let dof = (2 * n).saturating_sub(6).max(1) as f64;
    let s2 = r.norm_squared() / dof;
    let jtj = j.transpose() * &j;
    let inv = match jtj.clone().try_inverse() {
        Some(inv) => inv,
        None => jtj
            .pseudo_inverse(1e-12)
            .map_err(|e| Error::DegenerateFit(format!("singular normal matrix: {e}")))?,
    };
    let cov = inv * s2;
    let err = |i: usize| cov[(i, i)].max(0.0).sqrt();

    let (ar, hr, ab, hb) = (theta[0], theta[1], theta[2], theta[3]);
    let floor = (ar + ab) / 2.0;
    let floor_err = 0.5 * (cov[(0, 0)] + cov[(2, 2)] + 2.0 * cov[(0, 2)]).max(0.0).sqrt();
    let ratio = (hr > hb).then(|| hb / (hr - hb));
    Ok(ThermometryReport {
        floor,
        floor_red: ar,
        floor_blue: ab,
        h_r: hr,
        h_b: hb,
        gamma_fit: gamma,
        omega_m_fit: theta[4],
        h_r_err: err(1),
        h_b_err: err(3),
        floor_err,
        gamma_err: err(5),
        omega_m_err: err(4),
        ratio_method_n: ratio,
        floor_method_n: opts.backaction_scale.map(|k| hb / floor / k),
        delta_ratio: (hr - hb) / floor,
        squashing: hb < 0.0,
        residual_rms: (r.norm_squared() / (2 * n) as f64).sqrt(),
        evaluations: report.number_of_evaluations,
    })
}
