//! Run configuration: a strict JSON document.

use std::path::PathBuf;

use hetspec_core::cooling::CoolingParams;
use hetspec_core::montecarlo::{Scenario, Window};
use hetspec_core::params::{CavityParams, MechParams, Units};
use hetspec_core::{DetectorParams, FieldNoise, Limits, SystemParams};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: Option<ParamsSection>,
    pub noise: Option<FieldNoise>,
    pub detector: Option<DetectorParams>,
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub grids: GridsSection,
    #[serde(default)]
    pub montecarlo: MonteCarloSection,
    #[serde(default)]
    pub outputs: OutputsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    /// Unit system of every rate in `mech`, `cavity` and `detector`.
    pub units: Units,
    pub mech: MechParams,
    pub cavity: CavityParams,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: Option<String>,
    /// Skip the regime guards.
    pub force: bool,
    /// Field/detector combinations for `spectrum`, e.g. `quantum_scl`, or `all`.
    pub combos: Option<Vec<String>>,
    pub limits: LimitsSection,
    pub cooling: Option<CoolingSection>,
    pub bluecurve: Option<BlueCurveSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitsSection {
    pub min_quality: f64,
    pub max_coupling: f64,
    pub min_if_offset: f64,
    pub max_bs_loss: f64,
}

impl Default for LimitsSection {
    fn default() -> Self {
        let l = Limits::default();
        LimitsSection {
            min_quality: l.min_quality,
            max_coupling: l.max_coupling,
            min_if_offset: l.min_if_offset,
            max_bs_loss: l.max_bs_loss,
        }
    }
}

/// Cooling-mode parameters; detuning and coupling come from the sweep grids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoolingSection {
    /// Unit system of `kappa`, `gamma_m0` and `omega_m0`.
    pub units: Units,
    pub kappa: f64,
    pub gamma_m0: f64,
    pub omega_m0: f64,
    pub n_th0: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default)]
    pub p: f64,
}

impl CoolingSection {
    /// Parameters in units of `gamma_m0`, whatever the input units.
    pub fn base(&self) -> Result<CoolingParams> {
        if !(self.gamma_m0 > 0.0 && self.gamma_m0.is_finite()) {
            return Err(hetspec_core::Error::NonPositiveRate {
                name: "gamma_m0",
                value: self.gamma_m0,
            }
            .into());
        }
        let g = self.gamma_m0;
        Ok(CoolingParams {
            delta2: -self.omega_m0 / g,
            g2: 0.0,
            kappa: self.kappa / g,
            gamma_m0: 1.0,
            omega_m0: self.omega_m0 / g,
            n_th0: self.n_th0,
            alpha: self.alpha,
            beta: self.beta,
            p: self.p,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlueCurveSection {
    pub alpha: f64,
    pub p: f64,
}

impl Default for BlueCurveSection {
    fn default() -> Self {
        BlueCurveSection { alpha: 1.0, p: 0.1 }
    }
}

/// Inclusive range sampled at `points` values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default)]
    pub log: bool,
}

impl Range {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.points < 2 || !(self.max > self.min) {
            return Err(CliError::Config(format!(
                "range needs min < max and at least 2 points, got {self:?}"
            )));
        }
        if self.log {
            if self.min <= 0.0 {
                return Err(CliError::Config(format!("log range must be positive, got {self:?}")));
            }
            let (a, b) = (self.min.ln(), self.max.ln());
            Ok(hetspec_core::response::linspace(a, b, self.points)
                .into_iter()
                .map(f64::exp)
                .collect())
        } else {
            Ok(hetspec_core::response::linspace(self.min, self.max, self.points))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridsSection {
    /// Half-width of the sideband windows around `omega_m`, in units of `gamma_m`.
    pub sideband_halfwidth: f64,
    pub sideband_points: usize,
    /// Inverse temperature `Q` for `bluecurve`.
    pub q: Range,
    /// Cooling-beam detuning in units of the cooling-mode linewidth.
    pub delta2: Range,
    /// Target damping ratios `gamma_m / gamma_m0`.
    pub damping_ratio: Range,
}

impl Default for GridsSection {
    fn default() -> Self {
        GridsSection {
            sideband_halfwidth: 25.0,
            sideband_points: 4001,
            q: Range {
                min: 0.05,
                max: 20.0,
                points: 4000,
                log: false,
            },
            delta2: Range {
                min: -5.0,
                max: -0.01,
                points: 100,
                log: false,
            },
            damping_ratio: Range {
                min: 10.0,
                max: 1e4,
                points: 61,
                log: true,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSection {
    pub seed: u64,
    /// Independent runs of `segments` segments each.
    pub trials: usize,
    pub segments: usize,
    /// Segment length in units of `1/gamma_m`.
    pub segment_duration: f64,
    /// Step in units of `1/gamma_m`; defaults to sixteen samples per period of `omega_if + omega_m`.
    pub dt: Option<f64>,
    pub window: Window,
    /// Half-width of the fitted windows, in units of `gamma_m`.
    pub fit_halfwidth: f64,
    pub align_to_if: bool,
    /// Write the output field of the first segment to `trace.csv`.
    pub export_trace: bool,
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        let s = Scenario::default();
        MonteCarloSection {
            seed: 1,
            trials: 1,
            segments: s.segments,
            segment_duration: s.segment_duration,
            dt: s.dt,
            window: s.window,
            fit_halfwidth: s.fit_halfwidth,
            align_to_if: s.align_to_if,
            export_trace: false,
        }
    }
}

impl MonteCarloSection {
    pub fn scenario(&self) -> Scenario {
        Scenario {
            segments: self.segments,
            segment_duration: self.segment_duration,
            dt: self.dt,
            window: self.window,
            fit_halfwidth: self.fit_halfwidth,
            align_to_if: self.align_to_if,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputsSection {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputsSection {
    fn default() -> Self {
        OutputsSection {
            directory: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json, Format::Svg],
        }
    }
}

impl OutputsSection {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

fn one() -> f64 {
    1.0
}

/// Command-line overrides; flags win over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub force: bool,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.outputs.directory = out.clone();
        }
        if let Some(seed) = o.seed {
            self.montecarlo.seed = seed;
        }
        if o.force {
            self.scenario.force = true;
        }
    }

    /// Regime guards; `closed_form` also demands zero detuning.
    pub fn limits(&self, closed_form: bool) -> Limits {
        let l = self.scenario.limits;
        Limits {
            min_quality: l.min_quality,
            max_coupling: l.max_coupling,
            min_if_offset: l.min_if_offset,
            max_bs_loss: l.max_bs_loss,
            force: self.scenario.force,
            closed_form,
        }
    }

    /// The system record, if the config has `params`, `noise` and `detector`.
    pub fn system(&self) -> Result<SystemParams> {
        let params = self.params.as_ref().ok_or_else(|| missing("params"))?;
        let noise = self.noise.ok_or_else(|| missing("noise"))?;
        let detector = self.detector.ok_or_else(|| missing("detector"))?;
        Ok(SystemParams {
            units: params.units,
            mech: params.mech,
            cavity: params.cavity,
            field: noise,
            detector,
        })
    }
}

pub fn missing(section: &str) -> CliError {
    CliError::Config(format!("missing section `{section}`"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "params": {
            "units": "gamma_m",
            "mech": {"omega_m": 50, "gamma_m": 1, "n_th": 0.4},
            "cavity": {"kappa": 500, "kappa_ext": 400, "coupling": {"backaction": 0.1}}
        },
        "noise": {"kind": {"kind": "quantum_vacuum", "alpha": 1}},
        "detector": {"model": "scl", "omega_if": 400}
    }"#;

    #[test]
    fn minimal_config() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        let s = c.system().unwrap();
        assert_eq!(s.mech.beta, 1.0);
        assert_eq!(c.montecarlo.segments, 64);
        assert_eq!(c.grids.sideband_points, 4001);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = MINIMAL.replace("\"n_th\": 0.4", "\"n_th\": 0.4, \"nth\": 1");
        assert!(matches!(RunConfig::parse(&bad), Err(CliError::Config(_))));
        let bad = MINIMAL.replacen('{', "{\"extra\": 1, ", 1);
        assert!(RunConfig::parse(&bad).is_err());
        let bad = MINIMAL.replace("\"alpha\": 1}", "\"alpha\": 1, \"beta\": 2}");
        assert!(RunConfig::parse(&bad).is_err());
    }

    #[test]
    fn units_required() {
        let bad = MINIMAL.replace("\"units\": \"gamma_m\",", "");
        assert!(RunConfig::parse(&bad).is_err());
        let si = MINIMAL.replace("gamma_m\",", "si\",");
        assert_eq!(RunConfig::parse(&si).unwrap().params.unwrap().units, Units::Si);
    }

    #[test]
    fn flags_win() {
        let mut c = RunConfig::parse(MINIMAL).unwrap();
        c.montecarlo.seed = 5;
        c.apply(&Overrides {
            out: Some("x".into()),
            seed: Some(9),
            force: true,
        });
        assert_eq!(c.montecarlo.seed, 9);
        assert_eq!(c.outputs.directory, PathBuf::from("x"));
        assert!(c.limits(true).force);
    }

    #[test]
    fn missing_detector() {
        let mut c = RunConfig::parse(MINIMAL).unwrap();
        c.detector = None;
        assert!(matches!(c.system(), Err(CliError::Config(m)) if m.contains("detector")));
    }

    #[test]
    fn log_range() {
        let r = Range {
            min: 10.0,
            max: 1000.0,
            points: 3,
            log: true,
        };
        let v = r.values().unwrap();
        assert!((v[1] - 100.0).abs() < 1e-9);
    }
}
