//! Parameter records for the linearized optomechanical system.
//!
//! Everything downstream works in units where the mechanical damping rate is
//! one. [`validate`] checks the input record, resolves the optomechanical
//! coupling and rescales every rate by `gamma_m`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant [J s].
pub const HBAR: f64 = 6.626_070_15e-34 / (2.0 * std::f64::consts::PI);
/// Boltzmann constant [J/K].
pub const K_B: f64 = 1.380_649e-23;

/// Unit system of the rates in a [`SystemParams`] record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    /// Angular frequencies in rad/s.
    Si,
    /// Rates already expressed in units of `gamma_m`.
    #[default]
    GammaM,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechParams {
    pub omega_m: f64,
    pub gamma_m: f64,
    /// Bath occupancy. Ignored when `temperature` is set.
    #[serde(default)]
    pub n_th: f64,
    /// Weight of the quantum (zero-point) part of the bath noise: 1 quantum, 0 classical.
    #[serde(default = "one")]
    pub beta: f64,
    /// Bath temperature [K]; needs SI units so that `omega_m` is absolute.
    #[serde(default)]
    pub temperature: Option<f64>,
}

fn one() -> f64 {
    1.0
}

/// Measurement topology: which port the output is collected from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Driven and measured through different ports (lambda = 0).
    #[default]
    Transmission,
    /// Driven and measured through the same port (lambda = 1).
    Reflection,
}

impl Topology {
    pub fn lambda(self) -> f64 {
        match self {
            Topology::Transmission => 0.0,
            Topology::Reflection => 1.0,
        }
    }
}

/// How the many-photon coupling `G` is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// `G` directly.
    Enhanced(f64),
    /// Single-photon coupling and drive amplitude; `G = g0 |a|`, `a = Omega / (kappa/2 - i Delta)`.
    SinglePhoton { g0: f64, drive: f64 },
    /// Cooperativity `C = 4 G^2 / (kappa gamma_m)`.
    Cooperativity(f64),
    /// Dimensionless backaction number `p`.
    Backaction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityParams {
    pub kappa: f64,
    pub kappa_ext: f64,
    #[serde(default)]
    pub detuning: f64,
    pub coupling: Coupling,
    #[serde(default)]
    pub topology: Topology,
}

/// Intrinsic electromagnetic field noise model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum FieldKind {
    /// Classical c-number noise, symmetric in both orderings with strength `alpha`.
    ClassicalIntrinsic { alpha: f64 },
    /// Vacuum noise, anti-normally ordered. `alpha = 1` is standard quantum theory.
    QuantumVacuum { alpha: f64 },
}

impl FieldKind {
    pub fn alpha(self) -> f64 {
        match self {
            FieldKind::ClassicalIntrinsic { alpha } | FieldKind::QuantumVacuum { alpha } => alpha,
        }
    }

    pub fn is_quantum(self) -> bool {
        matches!(self, FieldKind::QuantumVacuum { .. })
    }

    pub fn tag(self) -> &'static str {
        match self {
            FieldKind::ClassicalIntrinsic { .. } => "classical",
            FieldKind::QuantumVacuum { .. } => "quantum",
        }
    }
}

/// White laser amplitude/phase noise carried by the probe drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserNoise {
    pub cxx: f64,
    #[serde(default)]
    pub cxy: f64,
    pub cyy: f64,
    /// Drive strength relative to the reference power.
    pub r: f64,
}

impl LaserNoise {
    /// Amplitude-quadrature heating strength entering the phonon number.
    pub fn amplitude_heating(&self) -> f64 {
        self.r * self.r * self.cxx
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldNoise {
    pub kind: FieldKind,
    #[serde(default)]
    pub laser: Option<LaserNoise>,
}

impl FieldNoise {
    pub fn quantum() -> Self {
        FieldNoise {
            kind: FieldKind::QuantumVacuum { alpha: 1.0 },
            laser: None,
        }
    }

    pub fn classical(alpha: f64) -> Self {
        FieldNoise {
            kind: FieldKind::ClassicalIntrinsic { alpha },
            laser: None,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.kind.alpha()
    }

    /// Field noise that heats the oscillator: `alpha + r^2 C_xx`.
    pub fn heating(&self) -> f64 {
        self.alpha() + self.laser.map_or(0.0, |l| l.amplitude_heating())
    }
}

/// Photodetector model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DetectorModel {
    /// Symmetrized (semiclassical) detector.
    #[serde(rename = "scl")]
    Scl,
    /// Photomultiplier: normal and time ordered correlators plus shot noise.
    #[serde(rename = "qua")]
    Qua,
}

impl DetectorModel {
    pub fn tag(self) -> &'static str {
        match self {
            DetectorModel::Scl => "scl",
            DetectorModel::Qua => "qua",
        }
    }
}

impl std::str::FromStr for DetectorModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "scl" => Ok(DetectorModel::Scl),
            "qua" => Ok(DetectorModel::Qua),
            other => Err(Error::UnsupportedCombo(format!("unknown detector model `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorParams {
    pub model: DetectorModel,
    /// Photocurrent scale `|Z|^2`.
    #[serde(default = "one")]
    pub z2: f64,
    pub omega_if: f64,
    /// Shot-noise floor of the photomultiplier in units of `|Z|^2`.
    #[serde(default = "one")]
    pub i0_ratio: f64,
    /// Cavity output carrier `a_out` beating with the local oscillator (a pure tone at `omega_if`).
    #[serde(default)]
    pub carrier: f64,
    #[serde(default)]
    pub beamsplitter_t: Option<f64>,
    #[serde(default)]
    pub lo_amplitude: Option<f64>,
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default)]
    pub v: Option<f64>,
    #[serde(default)]
    pub bandwidth: Option<f64>,
}

impl DetectorParams {
    pub fn new(model: DetectorModel, omega_if: f64) -> Self {
        DetectorParams {
            model,
            z2: 1.0,
            omega_if,
            i0_ratio: 1.0,
            carrier: 0.0,
            beamsplitter_t: None,
            lo_amplitude: None,
            q: None,
            v: None,
            bandwidth: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    #[serde(default)]
    pub units: Units,
    pub mech: MechParams,
    pub cavity: CavityParams,
    pub field: FieldNoise,
    pub detector: DetectorParams,
}

/// Thresholds for the regime guards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    /// Minimum `omega_m / gamma_m`.
    pub min_quality: f64,
    /// Maximum `|G| / kappa`.
    pub max_coupling: f64,
    /// Minimum `(omega_if - omega_m) / gamma_m`.
    pub min_if_offset: f64,
    /// Maximum `1 - T` of the beamsplitter.
    pub max_bs_loss: f64,
    /// Skip regime guards (hard errors still apply).
    pub force: bool,
    /// Require `Delta = 0` for closed-form evaluation.
    pub closed_form: bool,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            min_quality: 10.0,
            max_coupling: 0.1,
            min_if_offset: 10.0,
            max_bs_loss: 0.1,
            force: false,
            closed_form: true,
        }
    }
}

/// Parameters normalized to `gamma_m = 1` with the coupling resolved to `G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidatedParams {
    pub omega_m: f64,
    pub gamma_m: f64,
    pub n_th: f64,
    pub beta: f64,
    pub kappa: f64,
    pub kappa_ext: f64,
    pub detuning: f64,
    /// Many-photon coupling, real by choice of drive phase.
    pub coupling: f64,
    pub topology: Topology,
    pub field: FieldNoise,
    pub detector: DetectorParams,
    /// `gamma_m` in the input units, for converting results back.
    pub rate_unit: f64,
    pub units: Units,
}

/// Backaction number, cooperativity and output-port fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedCoupling {
    pub p: f64,
    pub cooperativity: f64,
    pub kappa_bar_ext: f64,
}

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonPositiveRate { name, value })
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be a finite non-negative number, got {value}"),
        })
    }
}

fn guard(limits: &Limits, name: &'static str, ok: bool, value: f64, bound: f64) -> Result<()> {
    if ok || limits.force {
        Ok(())
    } else {
        Err(Error::RegimeViolation { name, value, bound })
    }
}

/// Cavity susceptibility `1/(kappa/2 - i(omega + Delta))`.
pub fn cavity_susceptibility(kappa: f64, detuning: f64, omega: f64) -> Complex64 {
    Complex64::new(kappa / 2.0, -(omega + detuning)).inv()
}

/// Checks a parameter record and normalizes it to `gamma_m = 1`.
pub fn validate(params: &SystemParams, limits: &Limits) -> Result<ValidatedParams> {
    let mech = &params.mech;
    let cav = &params.cavity;
    let det = &params.detector;

    let gamma = positive("gamma_m", mech.gamma_m)?;
    let omega_m = positive("omega_m", mech.omega_m)? / gamma;
    let kappa = positive("kappa", cav.kappa)? / gamma;
    let kappa_ext = positive("kappa_ext", cav.kappa_ext)? / gamma;
    if kappa_ext > kappa * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter {
            name: "kappa_ext",
            reason: format!("must not exceed kappa ({} > {})", cav.kappa_ext, cav.kappa),
        });
    }
    let kappa_ext = kappa_ext.min(kappa);
    let detuning = cav.detuning / gamma;
    if !detuning.is_finite() {
        return Err(Error::InvalidParameter {
            name: "detuning",
            reason: "must be finite".into(),
        });
    }
    if limits.closed_form && detuning != 0.0 {
        return Err(Error::DetuningNotZeroForClosedForm(cav.detuning));
    }

    let n_th = match mech.temperature {
        Some(t) => {
            if params.units != Units::Si {
                return Err(Error::InvalidParameter {
                    name: "temperature",
                    reason: "a bath temperature needs SI units for omega_m".into(),
                });
            }
            occupancy_from_temperature(t, mech.omega_m, mech.beta == 0.0)?
        }
        None => non_negative("n_th", mech.n_th)?,
    };
    let beta = non_negative("beta", mech.beta)?;

    let chi = cavity_susceptibility(kappa, detuning, omega_m);
    let coupling = match cav.coupling {
        Coupling::Enhanced(g) => g / gamma,
        Coupling::SinglePhoton { g0, drive } => {
            let a_bar = Complex64::new(drive / gamma, 0.0) / Complex64::new(kappa / 2.0, -detuning);
            g0 / gamma * a_bar.norm()
        }
        Coupling::Cooperativity(c) => (non_negative("cooperativity", c)? * kappa / 4.0).sqrt(),
        Coupling::Backaction(p) => {
            let c = 4.0 * non_negative("p", p)? / (kappa * kappa * chi.norm_sqr());
            (c * kappa / 4.0).sqrt()
        }
    };
    if !coupling.is_finite() {
        return Err(Error::InvalidParameter {
            name: "coupling",
            reason: "must be finite".into(),
        });
    }

    non_negative("alpha", params.field.alpha())?;
    if let Some(l) = params.field.laser {
        non_negative("cxx", l.cxx)?;
        non_negative("cyy", l.cyy)?;
        non_negative("r", l.r)?;
        if l.cxy * l.cxy > l.cxx * l.cyy * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter {
                name: "cxy",
                reason: format!(
                    "|C_xy|^2 = {} exceeds C_xx C_yy = {}",
                    l.cxy * l.cxy,
                    l.cxx * l.cyy
                ),
            });
        }
    }

    positive("z2", det.z2)?;
    non_negative("i0_ratio", det.i0_ratio)?;
    let omega_if = positive("omega_if", det.omega_if)? / gamma;

    guard(
        limits,
        "omega_m/gamma_m",
        omega_m >= limits.min_quality,
        omega_m,
        limits.min_quality,
    )?;
    guard(
        limits,
        "|G|/kappa",
        coupling.abs() / kappa <= limits.max_coupling,
        coupling.abs() / kappa,
        limits.max_coupling,
    )?;
    guard(
        limits,
        "(omega_if - omega_m)/gamma_m",
        omega_if - omega_m >= limits.min_if_offset,
        omega_if - omega_m,
        limits.min_if_offset,
    )?;
    if let Some(t) = det.beamsplitter_t {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidParameter {
                name: "beamsplitter_t",
                reason: format!("transmission must lie in [0, 1], got {t}"),
            });
        }
        guard(limits, "1 - T", 1.0 - t <= limits.max_bs_loss, 1.0 - t, limits.max_bs_loss)?;
    }

    let mut detector = *det;
    detector.omega_if = omega_if;
    detector.bandwidth = det.bandwidth.map(|b| b / gamma);

    Ok(ValidatedParams {
        omega_m,
        gamma_m: 1.0,
        n_th,
        beta,
        kappa,
        kappa_ext,
        detuning,
        coupling,
        topology: cav.topology,
        field: params.field,
        detector,
        rate_unit: gamma,
        units: params.units,
    })
}

impl ValidatedParams {
    pub fn kappa_int(&self) -> f64 {
        (self.kappa - self.kappa_ext).max(0.0)
    }

    pub fn kappa_bar_ext(&self) -> f64 {
        self.kappa_ext / self.kappa
    }

    pub fn chi_c(&self, omega: f64) -> Complex64 {
        cavity_susceptibility(self.kappa, self.detuning, omega)
    }

    pub fn derived(&self) -> DerivedCoupling {
        derive_coupling(self)
    }

    /// Effective occupancy including probe backaction.
    pub fn effective_occupancy(&self) -> f64 {
        backaction_occupancy(self.n_th, self.derived().p, &self.field)
    }

    pub fn with_field(mut self, field: FieldNoise) -> Self {
        self.field = field;
        self
    }

    pub fn with_detector(mut self, model: DetectorModel) -> Self {
        self.detector.model = model;
        self
    }

    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_occupancy(mut self, n_th: f64, beta: f64) -> Self {
        self.n_th = n_th;
        self.beta = beta;
        self
    }
}

/// Cooperativity and backaction number of the probe.
pub fn derive_coupling(params: &ValidatedParams) -> DerivedCoupling {
    let kappa = params.kappa;
    let g = params.coupling;
    let cooperativity = 4.0 * g * g / (kappa * params.gamma_m);
    let chi = params.chi_c(params.omega_m);
    DerivedCoupling {
        p: kappa * kappa * chi.norm_sqr() / 4.0 * cooperativity,
        cooperativity,
        kappa_bar_ext: params.kappa_bar_ext(),
    }
}

/// Coupling `G` that yields a given backaction number at zero detuning (rates in `gamma_m` units).
pub fn coupling_for_backaction(p: f64, kappa: f64, omega_m: f64) -> f64 {
    let c = p * ((kappa / 2.0).powi(2) + omega_m * omega_m) / (kappa / 2.0).powi(2);
    (c * kappa / 4.0).sqrt()
}

/// `n_th + p (alpha + r^2 C_xx)`.
pub fn backaction_occupancy(n_th: f64, p: f64, field: &FieldNoise) -> f64 {
    n_th + p * field.heating()
}

/// Bath occupancy at temperature `temperature` [K] for angular frequency `omega_m` [rad/s].
///
/// The classical identification is `k_B T / (hbar omega_m)`; the quantum one is Bose-Einstein.
pub fn occupancy_from_temperature(temperature: f64, omega_m: f64, classical: bool) -> Result<f64> {
    if !(temperature > 0.0) {
        return Err(Error::NonPositiveTemperature(temperature));
    }
    positive("omega_m", omega_m)?;
    let q = HBAR * omega_m / (K_B * temperature);
    Ok(occupancy_from_inverse_temperature(q, classical))
}

/// Occupancy as a function of `Q = hbar omega_m / (k_B T)`.
pub fn occupancy_from_inverse_temperature(q: f64, classical: bool) -> f64 {
    if classical {
        1.0 / q
    } else {
        1.0 / q.exp_m1()
    }
}
