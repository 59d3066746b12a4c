//! Heterodyne photocurrent from a simulated output field.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::TimeTrace;
use crate::error::{Error, Result};
use crate::params::{DetectorModel, FieldKind, ValidatedParams};

/// Detector settings for synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Detector {
    pub z: f64,
    pub omega_if: f64,
    pub carrier: f64,
    /// Constant photocurrent offset.
    pub i0: f64,
    /// Two-sided intensity of the added white detector noise.
    pub added_noise: f64,
}

impl Detector {
    /// Detector for a parameter record.
    ///
    /// The simulated field uses symmetric-ordered noise, so it represents the
    /// photomultiplier model for vacuum noise only when the two detector
    /// models coincide (`alpha = beta = 1`). The photomultiplier floor is
    /// then reached by adding `|Z|^2 (i0_ratio - 1)` of white noise.
    pub fn for_params(p: &ValidatedParams) -> Result<Self> {
        let det = &p.detector;
        let added = match (det.model, p.field.kind) {
            (DetectorModel::Scl, _) => 0.0,
            (DetectorModel::Qua, FieldKind::ClassicalIntrinsic { .. }) => det.z2 * det.i0_ratio,
            (DetectorModel::Qua, FieldKind::QuantumVacuum { alpha }) => {
                if alpha != 1.0 || p.beta != 1.0 {
                    return Err(Error::UnsupportedCombo(format!(
                        "photomultiplier with vacuum noise is simulated only for alpha = beta = 1 (alpha = {alpha}, beta = {})",
                        p.beta
                    )));
                }
                if det.i0_ratio < alpha {
                    return Err(Error::UnsupportedCombo(format!(
                        "photomultiplier floor i0_ratio = {} lies below the vacuum level",
                        det.i0_ratio
                    )));
                }
                det.z2 * (det.i0_ratio - alpha)
            }
        };
        Ok(Detector {
            z: det.z2.sqrt(),
            omega_if: det.omega_if,
            carrier: det.carrier,
            i0: det.z2 * det.i0_ratio,
            added_noise: added,
        })
    }

    pub fn scl(z2: f64, omega_if: f64) -> Self {
        Detector {
            z: z2.sqrt(),
            omega_if,
            carrier: 0.0,
            i0: 0.0,
            added_noise: 0.0,
        }
    }
}

/// `i(t) = i0 - 2|Z| Im(e^{i ω_if t}(a_out + d_out(t)))` plus detector noise, sampled at step midpoints.
pub fn synthesize_photocurrent<R: Rng + ?Sized>(
    trace: &TimeTrace,
    detector: &Detector,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if trace.d_out.is_empty() {
        return Err(Error::MissingOutputTrace);
    }
    let dt = trace.dt;
    let sigma = (detector.added_noise / dt).sqrt();
    let carrier = Complex64::from(detector.carrier);
    let out = trace
        .d_out
        .iter()
        .enumerate()
        .map(|(n, d)| {
            let t = (n as f64 + 0.5) * dt;
            let phase = Complex64::from_polar(1.0, detector.omega_if * t);
            let mut i = detector.i0 - 2.0 * detector.z * (phase * (carrier + d)).im;
            if sigma > 0.0 {
                i += sigma * rng.sample::<f64, _>(StandardNormal);
            }
            i
        })
        .collect();
    Ok(out)
}
