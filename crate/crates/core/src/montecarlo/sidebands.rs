//! Red and blue sideband windows of an estimated photocurrent PSD.

use serde::Serialize;

use super::psd::PsdEstimate;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasuredSidebands {
    pub omega_tilde: Vec<f64>,
    pub red: Vec<f64>,
    pub blue: Vec<f64>,
    pub red_err: Vec<f64>,
    pub blue_err: Vec<f64>,
}

/// Reads `S[ω_if + ω̃]` (red) and `S[ω_if - ω̃]` (blue) for `ω̃` within
/// `halfwidth` of `omega_m`, on the PSD's own bin spacing.
pub fn extract_sidebands(
    psd: &PsdEstimate,
    omega_if: f64,
    omega_m: f64,
    halfwidth: f64,
) -> Result<MeasuredSidebands> {
    let h = psd.resolution();
    let (lo, hi) = (omega_m - halfwidth, omega_m + halfwidth);
    let top = psd.omega.last().copied().unwrap_or(0.0);
    if lo <= 0.0 || hi <= lo || omega_if + hi > top || omega_if - hi < 0.0 {
        return Err(Error::WindowOutOfRange {
            low: omega_if - hi,
            high: omega_if + hi,
            nyquist: top,
        });
    }
    let first = (lo / h).ceil() as i64;
    let last = (hi / h).floor() as i64;
    let mut out = MeasuredSidebands {
        omega_tilde: Vec::new(),
        red: Vec::new(),
        blue: Vec::new(),
        red_err: Vec::new(),
        blue_err: Vec::new(),
    };
    for j in first..=last {
        let w = j as f64 * h;
        let (r, re) = psd.at(omega_if + w).expect("inside band");
        let (b, be) = psd.at(omega_if - w).expect("inside band");
        out.omega_tilde.push(w);
        out.red.push(r);
        out.blue.push(b);
        out.red_err.push(re);
        out.blue_err.push(be);
    }
    Ok(out)
}
