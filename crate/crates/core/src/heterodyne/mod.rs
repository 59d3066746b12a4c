//! Heterodyne photocurrent spectra near the two motional sidebands.
//!
//! With `f(ω̃) = S[ω_if + ω̃]` every supported model has the form
//! `red = a + h_r L[ω̃] + h_b L[-ω̃]` and `blue = a + h_b L[ω̃] + h_r L[-ω̃]`,
//! where `L` is the unit-height mechanical Lorentzian. Each component
//! (floor, optomechanical, mechanical) is carried as such a coefficient triple.

mod fit;

pub use fit::{fit_sidebands, FitOptions, ThermometryReport};

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{DetectorModel, FieldKind, ValidatedParams, HBAR, K_B};
use crate::response::Oscillator;

/// Field theory half of a [`ModelCombo`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldTheory {
    Classical,
    Quantum,
}

/// Field-noise model paired with a detector model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ModelCombo {
    pub field: FieldTheory,
    pub detector: DetectorModel,
}

impl ModelCombo {
    pub const ALL: [ModelCombo; 4] = [
        ModelCombo::new(FieldTheory::Classical, DetectorModel::Scl),
        ModelCombo::new(FieldTheory::Quantum, DetectorModel::Scl),
        ModelCombo::new(FieldTheory::Classical, DetectorModel::Qua),
        ModelCombo::new(FieldTheory::Quantum, DetectorModel::Qua),
    ];

    pub const fn new(field: FieldTheory, detector: DetectorModel) -> Self {
        ModelCombo { field, detector }
    }

    pub fn of(params: &ValidatedParams) -> Self {
        let field = match params.field.kind {
            FieldKind::ClassicalIntrinsic { .. } => FieldTheory::Classical,
            FieldKind::QuantumVacuum { .. } => FieldTheory::Quantum,
        };
        ModelCombo::new(field, params.detector.model)
    }

    pub fn tag(&self) -> String {
        format!("{self}")
    }

    /// `params` switched to this field theory (same `alpha`) and detector.
    pub fn apply(&self, params: &ValidatedParams) -> ValidatedParams {
        let alpha = params.field.alpha();
        let mut field = params.field;
        field.kind = match self.field {
            FieldTheory::Classical => FieldKind::ClassicalIntrinsic { alpha },
            FieldTheory::Quantum => FieldKind::QuantumVacuum { alpha },
        };
        params.with_field(field).with_detector(self.detector)
    }
}

impl fmt::Display for ModelCombo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let field = match self.field {
            FieldTheory::Classical => "classical",
            FieldTheory::Quantum => "quantum",
        };
        write!(f, "{field}_{}", self.detector.tag())
    }
}

impl FromStr for ModelCombo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        let mut parts = lower.split(['_', '/', '-', '+']);
        let (Some(f), Some(d), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::UnsupportedCombo(format!("cannot parse `{s}`")));
        };
        let field = match f {
            "classical" => FieldTheory::Classical,
            "quantum" => FieldTheory::Quantum,
            other => return Err(Error::UnsupportedCombo(format!("unknown field model `{other}`"))),
        };
        Ok(ModelCombo::new(field, d.parse()?))
    }
}

/// Coefficients of `a + c_red L[ω̃] + c_blue L[-ω̃]` on the red sideband.
/// The blue sideband swaps `c_red` and `c_blue`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Shape {
    pub a: f64,
    pub c_red: f64,
    pub c_blue: f64,
}

impl Shape {
    fn red(&self, l: f64, l_img: f64) -> f64 {
        self.a + self.c_red * l + self.c_blue * l_img
    }

    fn blue(&self, l: f64, l_img: f64) -> f64 {
        self.a + self.c_blue * l + self.c_red * l_img
    }

    fn add(self, o: Shape) -> Shape {
        Shape {
            a: self.a + o.a,
            c_red: self.c_red + o.c_red,
            c_blue: self.c_blue + o.c_blue,
        }
    }
}

fn closed_form(params: &ValidatedParams) -> Result<()> {
    if params.detuning != 0.0 {
        return Err(Error::DetuningNotZeroForClosedForm(params.detuning * params.rate_unit));
    }
    Ok(())
}

/// Laser-noise contribution to the floor, in units of `|Z|^2`.
fn laser_floor(params: &ValidatedParams) -> f64 {
    let Some(l) = params.field.laser else {
        return 0.0;
    };
    let filter = (params.chi_c(-params.omega_m) * params.kappa_ext
        - Complex64::from(params.topology.lambda()))
    .norm_sqr();
    l.r * l.r * params.kappa / (4.0 * params.kappa_ext) * filter * (l.cxx + l.cyy)
}

/// Broadband noise floor `S^(o)`.
pub fn noise_floor(params: &ValidatedParams) -> Result<f64> {
    closed_form(params)?;
    let det = &params.detector;
    let base = match (params.field.kind, det.model) {
        (FieldKind::ClassicalIntrinsic { alpha }, DetectorModel::Scl) => alpha,
        (FieldKind::QuantumVacuum { alpha }, DetectorModel::Scl) => alpha,
        (FieldKind::ClassicalIntrinsic { alpha }, DetectorModel::Qua) => det.i0_ratio + alpha,
        (FieldKind::QuantumVacuum { .. }, DetectorModel::Qua) => det.i0_ratio,
    };
    Ok(det.z2 * (base + laser_floor(params)))
}

fn om_shape(params: &ValidatedParams) -> Shape {
    let d = params.derived();
    let scale = params.detector.z2 * d.p * d.kappa_bar_ext;
    let alpha = match (params.field.kind, params.detector.model) {
        (FieldKind::QuantumVacuum { .. }, DetectorModel::Qua) => 0.0,
        (kind, _) => kind.alpha(),
    };
    Shape {
        a: 0.0,
        c_red: 2.0 * alpha * scale,
        c_blue: -2.0 * alpha * scale,
    }
}

fn m_shape(params: &ValidatedParams) -> Shape {
    let d = params.derived();
    let scale = 4.0 * params.detector.z2 * d.p * d.kappa_bar_ext;
    let n = params.effective_occupancy();
    let beta = params.beta;
    match params.detector.model {
        DetectorModel::Scl => Shape {
            a: 0.0,
            c_red: scale * (n + beta / 2.0),
            c_blue: scale * (n + beta / 2.0),
        },
        DetectorModel::Qua => Shape {
            a: 0.0,
            c_red: scale * (n + beta),
            c_blue: scale * n,
        },
    }
}

/// Total sideband shape: floor plus red/blue Lorentzian heights.
pub fn sideband_shape(params: &ValidatedParams) -> Result<Shape> {
    let floor = Shape {
        a: noise_floor(params)?,
        ..Shape::default()
    };
    Ok(floor.add(om_shape(params)).add(m_shape(params)))
}

/// One sideband window split into its components.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sideband {
    pub s_o: Vec<f64>,
    pub s_om: Vec<f64>,
    pub s_m: Vec<f64>,
    pub total: Vec<f64>,
}

/// Red (`S[ω_if + ω̃]`) and blue (`S[ω_if - ω̃]`) sideband windows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumCurve {
    pub combo: ModelCombo,
    pub omega_tilde: Vec<f64>,
    pub red: Sideband,
    pub blue: Sideband,
    pub floor: f64,
    /// Occupancy including backaction heating.
    pub occupancy: f64,
    pub p: f64,
    pub kappa_bar_ext: f64,
}

impl SpectrumCurve {
    pub fn asymmetry(&self) -> Result<Asymmetry> {
        asymmetry(&self.omega_tilde, &self.red.total, &self.blue.total, self.floor)
    }
}

fn lorentzians(grid: &[f64], osc: &Oscillator) -> Vec<(f64, f64)> {
    grid.iter()
        .map(|&w| (osc.lorentzian(w), osc.lorentzian(-w)))
        .collect()
}

fn eval(shape: &Shape, ls: &[(f64, f64)]) -> (Vec<f64>, Vec<f64>) {
    ls.iter()
        .map(|&(l, li)| (shape.red(l, li), shape.blue(l, li)))
        .unzip()
}

/// Optomechanical correlation component `S^(om)` on both sidebands.
pub fn s_om(params: &ValidatedParams, grid: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    closed_form(params)?;
    Ok(eval(&om_shape(params), &lorentzians(grid, &Oscillator::of(params))))
}

/// Mechanical component `S^(m)` on both sidebands.
pub fn s_m(params: &ValidatedParams, grid: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    closed_form(params)?;
    Ok(eval(&m_shape(params), &lorentzians(grid, &Oscillator::of(params))))
}

/// Full sideband spectra for the field/detector combination carried by `params`.
pub fn sidebands(params: &ValidatedParams, grid: &[f64]) -> Result<SpectrumCurve> {
    let floor = noise_floor(params)?;
    let (om_r, om_b) = s_om(params, grid)?;
    let (m_r, m_b) = s_m(params, grid)?;
    let n = grid.len();
    let total = |om: &[f64], m: &[f64]| -> Vec<f64> { (0..n).map(|i| floor + om[i] + m[i]).collect() };
    let red_total = total(&om_r, &m_r);
    let blue_total = total(&om_b, &m_b);
    if let Some(min) = red_total
        .iter()
        .chain(&blue_total)
        .copied()
        .filter(|v| *v < 0.0)
        .reduce(f64::min)
    {
        return Err(Error::NegativeSpectrum(min));
    }
    let d = params.derived();
    Ok(SpectrumCurve {
        combo: ModelCombo::of(params),
        omega_tilde: grid.to_vec(),
        red: Sideband {
            s_o: vec![floor; n],
            s_om: om_r,
            s_m: m_r,
            total: red_total,
        },
        blue: Sideband {
            s_o: vec![floor; n],
            s_om: om_b,
            s_m: m_b,
            total: blue_total,
        },
        floor,
        occupancy: params.effective_occupancy(),
        p: d.p,
        kappa_bar_ext: d.kappa_bar_ext,
    })
}

/// Default sideband window `ω_m ± 25 γ_m` with 4001 points.
pub fn sideband_grid(params: &ValidatedParams) -> Vec<f64> {
    let w = 25.0 * params.gamma_m;
    crate::response::linspace(params.omega_m - w, params.omega_m + w, 4001)
}

/// Floor-normalized sidebands `1 + 4pκ̄[(n+1)L + nL₋]` and `1 + 4pκ̄[nL + (n+1)L₋]` of quantum theory.
pub fn quantum_form_sidebands(
    grid: &[f64],
    osc: &Oscillator,
    n: f64,
    p: f64,
    kappa_bar_ext: f64,
) -> (Vec<f64>, Vec<f64>) {
    let k = 4.0 * p * kappa_bar_ext;
    let shape = Shape {
        a: 1.0,
        c_red: k * (n + 1.0),
        c_blue: k * n,
    };
    eval(&shape, &lorentzians(grid, osc))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Asymmetry {
    pub delta: Vec<f64>,
    /// `ΔS / S^(o)` at the grid point closest to the mechanical resonance peak.
    pub peak_ratio: f64,
    pub peak_omega: f64,
}

/// `ΔS[ω̃] = S_rr[ω̃] - S_bb[ω̃]` and its floor-normalized peak value.
pub fn asymmetry(grid: &[f64], red: &[f64], blue: &[f64], floor: f64) -> Result<Asymmetry> {
    if red.len() != blue.len() {
        return Err(Error::GridMismatch(red.len(), blue.len()));
    }
    if grid.len() != red.len() {
        return Err(Error::GridMismatch(grid.len(), red.len()));
    }
    let delta: Vec<f64> = red.iter().zip(blue).map(|(r, b)| r - b).collect();
    let (i, _) = delta
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v.abs() > bv {
                (i, v.abs())
            } else {
                (bi, bv)
            }
        });
    let peak_ratio = delta.get(i).map_or(0.0, |d| d / floor);
    Ok(Asymmetry {
        peak_omega: grid.get(i).copied().unwrap_or(f64::NAN),
        delta,
        peak_ratio,
    })
}

/// Asymmetry ratio `ΔS / S^(o)` at a given `ω̃`, evaluated in closed form.
pub fn asymmetry_ratio_at(params: &ValidatedParams, omega_tilde: f64) -> Result<f64> {
    let s = sideband_shape(params)?;
    let osc = Oscillator::of(params);
    let (l, li) = (osc.lorentzian(omega_tilde), osc.lorentzian(-omega_tilde));
    Ok((s.red(l, li) - s.blue(l, li)) / s.a)
}

/// Theory assumed when turning a sideband fit into an occupancy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "theory")]
pub enum Theory {
    Quantum,
    Classical { alpha: f64 },
}

/// Occupancy inferred from fitted heights.
///
/// Quantum theory reads `h_b / (h_r - h_b)`. Classical theory with field noise
/// `alpha` reads `alpha (h_b / (h_r - h_b) + 1/2)`, the phonon number that
/// produces the same heights there.
pub fn inferred_occupancy(report: &ThermometryReport, theory: Theory) -> Result<f64> {
    let diff = report.h_r - report.h_b;
    if !(diff > 0.0) {
        return Err(Error::DegenerateFit(format!(
            "red height {} does not exceed blue height {}",
            report.h_r, report.h_b
        )));
    }
    let ratio = report.h_b / diff;
    Ok(match theory {
        Theory::Quantum => ratio,
        Theory::Classical { alpha } => alpha * (ratio + 0.5),
    })
}

/// Occupancy a quantum analysis reports when the world is classical: `n_th/α + p - 1/2`.
pub fn classical_apparent_occupancy(n_th: f64, alpha: f64, p: f64) -> f64 {
    n_th / alpha + p - 0.5
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlueHeightCurves {
    pub q: Vec<f64>,
    /// `1/(e^Q - 1) + p`.
    pub quantum: Vec<f64>,
    /// `1/(αQ) + p - 1/2`.
    pub classical: Vec<f64>,
    pub quantum_slope: Vec<f64>,
    pub classical_slope: Vec<f64>,
    /// `|∂ñ_inf/∂Q| > α/4` at every grid point where `ñ_inf > p`.
    pub bound_holds: bool,
}

/// Blue sideband height (in units of `4pκ̄|Z|^2`) against inverse temperature `Q = ħω_m/k_BT`.
pub fn blue_height_vs_q(q: &[f64], alpha: f64, p: f64) -> BlueHeightCurves {
    let quantum = q.iter().map(|&q| 1.0 / q.exp_m1() + p).collect();
    let classical: Vec<f64> = q.iter().map(|&q| 1.0 / (alpha * q) + p - 0.5).collect();
    let quantum_slope = q
        .iter()
        .map(|&q| {
            let e = q.exp_m1();
            (e + 1.0) / (e * e)
        })
        .collect();
    let classical_slope: Vec<f64> = q.iter().map(|&q| 1.0 / (alpha * q * q)).collect();
    let bound_holds = classical
        .iter()
        .zip(&classical_slope)
        .filter(|(n, _)| **n > p)
        .all(|(_, s)| *s > alpha / 4.0);
    BlueHeightCurves {
        q: q.to_vec(),
        quantum,
        classical,
        quantum_slope,
        classical_slope,
        bound_holds,
    }
}

/// `Q` at which the classical blue height crosses zero, `1/(α(1/2 - p))`.
pub fn classical_zero_crossing(alpha: f64, p: f64) -> Result<f64> {
    if p >= 0.5 {
        return Err(Error::BackactionTooLarge(p));
    }
    Ok(1.0 / (alpha * (0.5 - p)))
}

/// Temperature [K] below which a classical blue sideband turns negative.
/// `omega_m` is an angular frequency in rad/s.
pub fn detectability_bound(alpha: f64, p: f64, omega_m: f64) -> Result<f64> {
    if p >= 0.5 {
        return Err(Error::BackactionTooLarge(p));
    }
    if !(omega_m > 0.0) {
        return Err(Error::NonPositiveRate {
            name: "omega_m",
            value: omega_m,
        });
    }
    Ok(HBAR * omega_m * alpha / K_B * (0.5 - p))
}

/// Classical prediction for the flat photocurrent noise with the lasers off.
pub fn dark_noise_floor(alpha: f64, bandwidth: f64, q: f64, v: f64) -> f64 {
    let k = q * v * v * alpha / 2.0;
    bandwidth * k * k
}

/// `|χ_c[-ω_m]|^2 - |χ_c[ω_m]|^2`, the cavity filtering that skews sidebands away from zero detuning.
pub fn cavity_filter_asymmetry(params: &ValidatedParams) -> f64 {
    params.chi_c(-params.omega_m).norm_sqr() - params.chi_c(params.omega_m).norm_sqr()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    /// `max |S^SCL - S^QUA| / S^(o)` over both sidebands.
    pub detector_residual: f64,
    /// `max |LHS - RHS| / max |RHS|` of the commutator relation; `None` without coupling.
    pub commutator_residual: Option<f64>,
}

/// Compares the symmetrized and photomultiplier detector models for a vacuum-noise field.
///
/// `grid` holds `ω̃` values for the sidebands; `omega_grid` holds mechanical
/// frequencies for the commutator relation.
pub fn detector_equivalence_check(
    params: &ValidatedParams,
    grid: &[f64],
    omega_grid: &[f64],
) -> Result<EquivalenceReport> {
    let alpha = params.field.alpha();
    let mut field = params.field;
    field.kind = FieldKind::QuantumVacuum { alpha };
    let base = params.with_field(field);
    let scl = sidebands(&base.with_detector(DetectorModel::Scl), grid)?;
    let qua = sidebands(&base.with_detector(DetectorModel::Qua), grid)?;
    let floor = scl.floor;
    let detector_residual = scl
        .red
        .total
        .iter()
        .zip(&qua.red.total)
        .chain(scl.blue.total.iter().zip(&qua.blue.total))
        .map(|(a, b)| (a - b).abs() / floor)
        .fold(0.0, f64::max);

    Ok(EquivalenceReport {
        detector_residual,
        commutator_residual: commutator_relation(&base, omega_grid),
    })
}

/// Cross-spectrum `S_{Γq x}[ω]` of the detected field quadrature with the position at zero detuning.
pub fn s_gamma_x(params: &ValidatedParams, omega: f64) -> Complex64 {
    let osc = Oscillator::of(params);
    let alpha = params.field.alpha();
    -Complex64::i()
        * alpha
        * params.coupling
        * params.kappa_ext.sqrt()
        * params.chi_c(omega)
        * (osc.chi_m(-omega) - osc.chi_m(omega).conj())
}

fn commutator_relation(params: &ValidatedParams, omega_grid: &[f64]) -> Option<f64> {
    let g = params.coupling;
    if g == 0.0 {
        return None;
    }
    let osc = Oscillator::of(params);
    let n = params.effective_occupancy();
    let sxx = |w: f64| osc.gamma_m * ((n + params.beta) * osc.chi_m_sqr(w) + n * osc.chi_m_sqr(-w));
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &w in omega_grid {
        let chi = params.chi_c(w);
        let lhs = 2.0 * (g * chi.conj() * s_gamma_x(params, w)).im
            / (params.kappa_ext.sqrt() * g * g * chi.norm_sqr());
        let rhs = sxx(w) - sxx(-w);
        worst = worst.max((lhs - rhs).abs());
        scale = scale.max(rhs.abs());
    }
    Some(if scale > 0.0 { worst / scale } else { worst })
}
