//! The four subcommands. Each returns summary lines for stdout.

use hetspec_core::cooling::{sweep, SweepRow};
use hetspec_core::heterodyne::{
    asymmetry_ratio_at, blue_height_vs_q, classical_apparent_occupancy, classical_zero_crossing,
    inferred_occupancy, sideband_shape, sidebands, ModelCombo, Shape, SpectrumCurve, Theory,
    ThermometryReport,
};
use hetspec_core::montecarlo::{MeasuredSidebands, PsdEstimate, Simulation, Stat};
use hetspec_core::params::validate;
use hetspec_core::response::linspace;
use hetspec_core::{FieldKind, ValidatedParams};
use serde::Serialize;

use crate::config::{missing, Format, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{num, Cell, Manifest, Sink};
use crate::plot::{figure, Chart, Series, PALETTE};

/// Writes the manifest last so it lists every other file.
fn finish(name: &str, cfg: &RunConfig, mut sink: Sink, mut lines: Vec<String>) -> Result<Vec<String>> {
    let files = sink.written.clone();
    sink.json("manifest.json", &Manifest::new(name, cfg, &files))?;
    lines.push(format!(
        "wrote {} files to {}",
        sink.written.len(),
        cfg.outputs.directory.display()
    ));
    Ok(lines)
}

fn theory_of(p: &ValidatedParams) -> Theory {
    match p.field.kind {
        FieldKind::QuantumVacuum { .. } => Theory::Quantum,
        FieldKind::ClassicalIntrinsic { alpha } => Theory::Classical { alpha },
    }
}

fn combos(cfg: &RunConfig, p: &ValidatedParams) -> Result<Vec<ModelCombo>> {
    match &cfg.scenario.combos {
        None => Ok(vec![ModelCombo::of(p)]),
        Some(list) if list.is_empty() => Err(CliError::Config("`scenario.combos` is empty".into())),
        Some(list) if list.iter().any(|c| c == "all") => Ok(ModelCombo::ALL.to_vec()),
        Some(list) => Ok(list.iter().map(|c| c.parse()).collect::<hetspec_core::Result<_>>()?),
    }
}

fn nearest(grid: &[f64], w: f64) -> usize {
    grid.iter()
        .enumerate()
        .min_by(|a, b| (a.1 - w).abs().total_cmp(&(b.1 - w).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

#[derive(Serialize)]
struct SpectrumSummary {
    combo: String,
    shape: Shape,
    floor: f64,
    occupancy: f64,
    p: f64,
    kappa_bar_ext: f64,
    asymmetry_ratio_at_omega_m: f64,
    blue_minus_floor_at_omega_m: f64,
    squashing: bool,
}

fn spectrum_panels(c: &SpectrumCurve, tag: &str) -> Vec<Chart> {
    [("red", &c.red), ("blue", &c.blue)]
        .into_iter()
        .map(|(side, s)| Chart {
            title: format!("{tag}: {side} sideband"),
            xlabel: "omega_tilde / gamma_m".into(),
            ylabel: "S / |Z|^2".into(),
            series: vec![
                Series::new("S_o", &c.omega_tilde, &s.s_o, PALETTE[5]).dashed(),
                Series::new("S_om", &c.omega_tilde, &s.s_om, PALETTE[2]),
                Series::new("S_m", &c.omega_tilde, &s.s_m, PALETTE[3]),
                Series::new("S_total", &c.omega_tilde, &s.total, PALETTE[0]),
            ],
            hline: Some(c.floor),
        })
        .collect()
}

pub fn spectrum(cfg: &RunConfig) -> Result<Vec<String>> {
    let p = validate(&cfg.system()?, &cfg.limits(true))?;
    let combos = combos(cfg, &p)?;
    let hw = cfg.grids.sideband_halfwidth * p.gamma_m;
    if !(hw > 0.0) || cfg.grids.sideband_points < 3 {
        return Err(CliError::Config(
            "sideband grid needs a positive half-width and at least 3 points".into(),
        ));
    }
    let grid = linspace(p.omega_m - hw, p.omega_m + hw, cfg.grids.sideband_points);
    let centre = nearest(&grid, p.omega_m);
    let mut sink = Sink::new(&cfg.outputs.directory)?;
    let mut lines = Vec::new();
    let mut summaries = Vec::new();
    for combo in combos {
        let q = combo.apply(&p);
        let c = sidebands(&q, &grid)?;
        let shape = sideband_shape(&q)?;
        let tag = combo.tag();
        let ratio = asymmetry_ratio_at(&q, p.omega_m)?;
        let blue_excess = c.blue.total[centre] - c.floor;
        let summary = SpectrumSummary {
            combo: tag.clone(),
            shape,
            floor: c.floor,
            occupancy: c.occupancy,
            p: c.p,
            kappa_bar_ext: c.kappa_bar_ext,
            asymmetry_ratio_at_omega_m: ratio,
            blue_minus_floor_at_omega_m: blue_excess,
            squashing: blue_excess < 0.0,
        };
        if cfg.outputs.wants(Format::Csv) {
            let meta = [
                ("combo", tag.clone()),
                ("units", "rates in gamma_m, spectra in |Z|^2".to_string()),
                ("omega_m", num(p.omega_m)),
                ("omega_if", num(p.detector.omega_if)),
                ("alpha", num(q.field.alpha())),
                ("floor", num(c.floor)),
                ("occupancy", num(c.occupancy)),
                ("p", num(c.p)),
                ("kappa_bar_ext", num(c.kappa_bar_ext)),
                ("shape_a", num(shape.a)),
                ("shape_c_red", num(shape.c_red)),
                ("shape_c_blue", num(shape.c_blue)),
                ("asymmetry_ratio_at_omega_m", num(ratio)),
            ];
            let header = [
                "omega_tilde",
                "red_S_o",
                "red_S_om",
                "red_S_m",
                "red_S_total",
                "blue_S_o",
                "blue_S_om",
                "blue_S_m",
                "blue_S_total",
            ];
            let rows = (0..grid.len()).map(|i| {
                vec![
                    Cell::from(c.omega_tilde[i]),
                    c.red.s_o[i].into(),
                    c.red.s_om[i].into(),
                    c.red.s_m[i].into(),
                    c.red.total[i].into(),
                    c.blue.s_o[i].into(),
                    c.blue.s_om[i].into(),
                    c.blue.s_m[i].into(),
                    c.blue.total[i].into(),
                ]
            });
            sink.csv(&format!("spectrum_{tag}.csv"), "spectrum", &meta, &header, rows)?;
        }
        if cfg.outputs.wants(Format::Svg) {
            sink.text(&format!("spectrum_{tag}.svg"), &figure(&spectrum_panels(&c, &tag)))?;
        }
        lines.push(format!(
            "{tag}: floor {:.6}, red peak {:.6}, blue peak {:.6}, asymmetry at omega_m {:.6}{}",
            c.floor,
            c.red.total[centre],
            c.blue.total[centre],
            ratio,
            if blue_excess < 0.0 { ", blue sideband below floor" } else { "" }
        ));
        summaries.push(summary);
    }
    if cfg.outputs.wants(Format::Json) {
        sink.json("spectrum.json", &summaries)?;
    }
    finish("spectrum", cfg, sink, lines)
}

#[derive(Serialize)]
struct Inference {
    theory: Theory,
    occupancy: Option<f64>,
    occupancy_err: Option<f64>,
    /// Closed-form value this inference should reproduce.
    target: f64,
    deviation_sigma: Option<f64>,
}

/// No occupancy is inferred without coupling: the sidebands vanish.
fn infer(report: &ThermometryReport, theory: Theory, target: f64, coupled: bool) -> Inference {
    let occupancy = coupled.then(|| inferred_occupancy(report, theory).ok()).flatten();
    // First-order propagation of the height errors through h_b / (h_r - h_b).
    let d = report.h_r - report.h_b;
    let scale = match theory {
        Theory::Quantum => 1.0,
        Theory::Classical { alpha } => alpha,
    };
    let occupancy_err = occupancy.map(|_| {
        scale * (report.h_b.powi(2) * report.h_r_err.powi(2) + report.h_r.powi(2) * report.h_b_err.powi(2)).sqrt()
            / (d * d)
    });
    let deviation_sigma = occupancy.zip(occupancy_err).map(|(n, e)| (n - target) / e);
    Inference {
        theory,
        occupancy,
        occupancy_err,
        target,
        deviation_sigma,
    }
}

#[derive(Serialize)]
struct Thermometry {
    seed: u64,
    trials: usize,
    segments: usize,
    segment_duration: f64,
    dt: f64,
    /// Fit of the (trial-averaged) sideband windows.
    report: ThermometryReport,
    /// Closed-form sideband coefficients, absent for non-zero detuning.
    closed_form: Option<Shape>,
    /// Reading under the theory of the simulated field.
    own_theory: Inference,
    /// Reading a quantum analysis would give.
    quantum_reading: Inference,
    x2: Stat,
    per_trial: Option<PerTrial>,
}

#[derive(Serialize)]
struct PerTrial {
    /// Runs whose own fit failed; they still enter the pooled spectrum.
    failed_fits: usize,
    h_r: Stat,
    h_b: Stat,
    floor: Stat,
    gamma: Stat,
}

fn psd_chart(psd: &PsdEstimate, p: &ValidatedParams, hw: f64) -> Chart {
    let w_if = p.detector.omega_if;
    let (lo, hi) = (w_if - p.omega_m - 3.0 * hw, w_if + p.omega_m + 3.0 * hw);
    let idx: Vec<usize> = (0..psd.omega.len()).filter(|&i| psd.omega[i] >= lo && psd.omega[i] <= hi).collect();
    let x: Vec<f64> = idx.iter().map(|&i| psd.omega[i]).collect();
    let y: Vec<f64> = idx.iter().map(|&i| psd.mean[i]).collect();
    Chart {
        title: "photocurrent PSD near the sidebands".into(),
        xlabel: "omega / gamma_m".into(),
        ylabel: "PSD".into(),
        series: vec![Series::new("mean", &x, &y, PALETTE[0])],
        hline: None,
    }
}

fn sideband_chart(s: &MeasuredSidebands, closed: Option<&SpectrumCurve>) -> Chart {
    let mut series = vec![
        Series::new("red", &s.omega_tilde, &s.red, PALETTE[1]),
        Series::new("blue", &s.omega_tilde, &s.blue, PALETTE[0]),
    ];
    if let Some(c) = closed {
        series.push(Series::new("red closed form", &c.omega_tilde, &c.red.total, PALETTE[4]).dashed());
        series.push(Series::new("blue closed form", &c.omega_tilde, &c.blue.total, PALETTE[3]).dashed());
    }
    Chart {
        title: "sideband windows".into(),
        xlabel: "omega_tilde / gamma_m".into(),
        ylabel: "PSD".into(),
        series,
        hline: closed.map(|c| c.floor),
    }
}

pub fn simulate(cfg: &RunConfig) -> Result<Vec<String>> {
    let p = validate(&cfg.system()?, &cfg.limits(false))?;
    let mc = &cfg.montecarlo;
    if mc.trials == 0 {
        return Err(CliError::Config("`montecarlo.trials` must be at least 1".into()));
    }
    let sim = Simulation::new(&p, &mc.scenario())?;
    let (psd, sides, report, x2, per_trial) = if mc.trials == 1 {
        let r = sim.run(mc.seed, 0)?;
        (r.psd, r.sidebands, r.fit, r.x2, None)
    } else {
        let s = sim.run_trials(mc.seed, mc.trials)?;
        let per = PerTrial {
            failed_fits: s.failed_fits,
            h_r: s.h_r,
            h_b: s.h_b,
            floor: s.floor,
            gamma: s.gamma,
        };
        (s.psd, s.pooled, s.pooled_fit, s.x2, Some(per))
    };

    let closed = if p.detuning == 0.0 {
        Some(sidebands(&p, &sides.omega_tilde)?)
    } else {
        None
    };
    let shape = if p.detuning == 0.0 { Some(sideband_shape(&p)?) } else { None };
    let d = p.derived();
    let theory = theory_of(&p);
    let own_theory = infer(&report, theory, p.effective_occupancy(), d.p > 0.0);
    let quantum_target = match theory {
        Theory::Quantum => p.effective_occupancy(),
        Theory::Classical { alpha } => classical_apparent_occupancy(p.n_th, alpha, d.p),
    };
    let quantum_reading = infer(&report, Theory::Quantum, quantum_target, d.p > 0.0);

    let mut sink = Sink::new(&cfg.outputs.directory)?;
    if cfg.outputs.wants(Format::Csv) {
        let meta = [
            ("units", "omega in gamma_m".to_string()),
            ("seed", mc.seed.to_string()),
            ("trials", mc.trials.to_string()),
            ("segments", psd.segments.to_string()),
            ("segment_len", psd.segment_len.to_string()),
            ("dt", num(psd.dt)),
            ("window", format!("{:?}", psd.window).to_lowercase()),
            ("variance", num(psd.variance)),
        ];
        let rows = (0..psd.omega.len()).map(|i| vec![psd.omega[i].into(), psd.mean[i].into(), psd.stderr[i].into()]);
        sink.csv("psd.csv", "psd", &meta, &["omega", "mean", "stderr"], rows)?;

        let mut header = vec!["omega_tilde", "red", "red_err", "blue", "blue_err"];
        if closed.is_some() {
            header.extend(["red_closed_form", "blue_closed_form"]);
        }
        let rows = (0..sides.omega_tilde.len()).map(|i| {
            let mut row = vec![
                Cell::from(sides.omega_tilde[i]),
                sides.red[i].into(),
                sides.red_err[i].into(),
                sides.blue[i].into(),
                sides.blue_err[i].into(),
            ];
            if let Some(c) = &closed {
                row.extend([Cell::from(c.red.total[i]), c.blue.total[i].into()]);
            }
            row
        });
        let meta = [
            ("seed", mc.seed.to_string()),
            ("trials", mc.trials.to_string()),
            ("omega_if", num(p.detector.omega_if)),
            ("fit_floor", num(report.floor)),
            ("fit_h_r", num(report.h_r)),
            ("fit_h_b", num(report.h_b)),
            ("fit_gamma", num(report.gamma_fit)),
            ("fit_omega_m", num(report.omega_m_fit)),
        ];
        sink.csv("sidebands.csv", "sidebands", &meta, &header, rows)?;
    }
    if mc.export_trace {
        let t = sim.trace(mc.seed, 0, 0, true);
        let (x, dv) = t.x.as_ref().zip(t.d.as_ref()).ok_or(hetspec_core::Error::MissingOutputTrace)?;
        let rows = (0..t.steps).map(|k| {
            vec![
                Cell::from((k + 1) as f64 * t.dt),
                x[k].into(),
                dv[k].re.into(),
                dv[k].im.into(),
                t.d_out[k].re.into(),
                t.d_out[k].im.into(),
            ]
        });
        let meta = [("seed", mc.seed.to_string()), ("trial", "0".into()), ("segment", "0".into()), ("dt", num(t.dt))];
        sink.csv(
            "trace.csv",
            "trace",
            &meta,
            &["t", "x", "d_re", "d_im", "d_out_re", "d_out_im"],
            rows,
        )?;
    }
    let n_line = match (own_theory.occupancy, own_theory.occupancy_err) {
        (Some(n), Some(e)) => format!("inferred occupancy {n:.4} +- {e:.4} (closed form {:.4})", own_theory.target),
        _ if d.p == 0.0 => "no coupling: flat windows, no occupancy inferred".to_string(),
        _ => "occupancy not inferable: red height does not exceed blue".to_string(),
    };
    let lines = vec![
        format!(
            "{} runs x {} segments: h_r {:.4} +- {:.4}, h_b {:.4} +- {:.4}, floor {:.4}",
            mc.trials, psd.segments / mc.trials, report.h_r, report.h_r_err, report.h_b, report.h_b_err, report.floor
        ),
        n_line,
    ];
    let therm = Thermometry {
        seed: mc.seed,
        trials: mc.trials,
        segments: mc.segments,
        segment_duration: sim.segment_duration,
        dt: sim.dt(),
        report,
        closed_form: shape,
        own_theory,
        quantum_reading,
        x2,
        per_trial,
    };
    if cfg.outputs.wants(Format::Json) {
        sink.json("thermometry.json", &therm)?;
    }
    if cfg.outputs.wants(Format::Svg) {
        let hw = mc.fit_halfwidth * p.gamma_m;
        sink.text("simulate.svg", &figure(&[psd_chart(&psd, &p, hw), sideband_chart(&sides, closed.as_ref())]))?;
    }
    finish("simulate", cfg, sink, lines)
}

#[derive(Serialize)]
struct CoolingSummary {
    units: &'static str,
    alpha: f64,
    rows: usize,
    min_n_classical: f64,
    min_n_quantum: f64,
    min_n_inf_classical: f64,
    /// Strict classical floor `min n_classical > alpha/2`.
    classical_floor_holds: bool,
    quantum_below_half: bool,
    all_limit_flags_ok: bool,
}

pub fn cooling(cfg: &RunConfig) -> Result<Vec<String>> {
    let cs = cfg.scenario.cooling.ok_or_else(|| missing("scenario.cooling"))?;
    let base = cs.base()?;
    let deltas: Vec<f64> = cfg.grids.delta2.values()?.into_iter().map(|d| d * base.kappa).collect();
    let ratios = cfg.grids.damping_ratio.values()?;
    let rows = sweep(&base, &deltas, &ratios, &cfg.limits(false))?;
    let min = |f: fn(&SweepRow) -> f64| rows.iter().map(f).fold(f64::INFINITY, f64::min);
    let summary = CoolingSummary {
        units: "gamma_m0",
        alpha: base.alpha,
        rows: rows.len(),
        min_n_classical: min(|r| r.n_classical),
        min_n_quantum: min(|r| r.n_quantum),
        min_n_inf_classical: min(|r| r.n_inf_classical),
        classical_floor_holds: min(|r| r.n_classical) > base.alpha / 2.0,
        quantum_below_half: min(|r| r.n_quantum) < 0.5,
        all_limit_flags_ok: rows.iter().all(|r| r.classical_limit_ok),
    };

    let mut sink = Sink::new(&cfg.outputs.directory)?;
    if cfg.outputs.wants(Format::Csv) {
        let meta = [
            ("units", "rates in gamma_m0".to_string()),
            ("kappa", num(base.kappa)),
            ("omega_m0", num(base.omega_m0)),
            ("n_th0", num(base.n_th0)),
            ("alpha", num(base.alpha)),
            ("beta", num(base.beta)),
            ("p", num(base.p)),
            ("min_n_classical", num(summary.min_n_classical)),
            ("min_n_quantum", num(summary.min_n_quantum)),
            ("classical_floor_holds", summary.classical_floor_holds.to_string()),
        ];
        let header = [
            "delta2",
            "g2",
            "damping_ratio",
            "gamma_m_eff",
            "omega_m_eff",
            "n_classical",
            "n_quantum",
            "n_inf_classical",
            "classical_limit_ok",
        ];
        let body = rows.iter().map(|r| {
            vec![
                Cell::from(r.delta2),
                r.g2.into(),
                r.damping_ratio.into(),
                r.gamma_m_eff.into(),
                r.omega_m_eff.into(),
                r.n_classical.into(),
                r.n_quantum.into(),
                r.n_inf_classical.into(),
                r.classical_limit_ok.into(),
            ]
        });
        sink.csv("cooling_sweep.csv", "cooling", &meta, &header, body)?;
    }
    if cfg.outputs.wants(Format::Json) {
        sink.json("cooling.json", &summary)?;
    }
    if cfg.outputs.wants(Format::Svg) {
        // Occupancy against damping ratio at the detuning closest to -omega_m0.
        let best = deltas
            .iter()
            .copied()
            .min_by(|a, b| (a + base.omega_m0).abs().total_cmp(&(b + base.omega_m0).abs()))
            .unwrap_or(-base.omega_m0);
        let sel: Vec<&SweepRow> = rows.iter().filter(|r| r.delta2 == best).collect();
        let x: Vec<f64> = sel.iter().map(|r| r.damping_ratio.log10()).collect();
        let nc: Vec<f64> = sel.iter().map(|r| r.n_classical).collect();
        let nq: Vec<f64> = sel.iter().map(|r| r.n_quantum).collect();
        let chart = Chart {
            title: format!("cooled occupancy at Delta_2 = {best:.3} gamma_m0"),
            xlabel: "log10 gamma_m / gamma_m0".into(),
            ylabel: "n_th".into(),
            series: vec![
                Series::new("classical", &x, &nc, PALETTE[1]),
                Series::new("quantum", &x, &nq, PALETTE[0]),
            ],
            hline: Some(base.alpha / 2.0),
        };
        sink.text("cooling.svg", &figure(&[chart]))?;
    }
    let lines = vec![
        format!(
            "{} sweep points: min classical n {:.6} ({} alpha/2 = {}), min quantum n {:.3e}",
            rows.len(),
            summary.min_n_classical,
            if summary.classical_floor_holds { ">" } else { "<=" },
            base.alpha / 2.0,
            summary.min_n_quantum
        ),
    ];
    finish("cooling", cfg, sink, lines)
}

pub fn bluecurve(cfg: &RunConfig) -> Result<Vec<String>> {
    let b = cfg.scenario.bluecurve.unwrap_or_default();
    let q = cfg.grids.q.values()?;
    if q.iter().any(|&v| v <= 0.0) {
        return Err(CliError::Config("the `q` grid must be positive".into()));
    }
    let zero = classical_zero_crossing(b.alpha, b.p)?;
    let c = blue_height_vs_q(&q, b.alpha, b.p);
    let mut sink = Sink::new(&cfg.outputs.directory)?;
    if cfg.outputs.wants(Format::Csv) {
        let meta = [
            ("units", "heights in 4 p kappa_bar_ext |Z|^2".to_string()),
            ("alpha", num(b.alpha)),
            ("p", num(b.p)),
            ("classical_zero_crossing", num(zero)),
            ("bound_holds", c.bound_holds.to_string()),
        ];
        let rows = (0..q.len()).map(|i| {
            vec![
                Cell::from(c.q[i]),
                c.quantum[i].into(),
                c.classical[i].into(),
                c.quantum_slope[i].into(),
                c.classical_slope[i].into(),
            ]
        });
        sink.csv(
            "bluecurve.csv",
            "bluecurve",
            &meta,
            &["Q", "quantum", "classical", "quantum_slope", "classical_slope"],
            rows,
        )?;
    }
    if cfg.outputs.wants(Format::Json) {
        #[derive(Serialize)]
        struct Summary {
            alpha: f64,
            p: f64,
            classical_zero_crossing: f64,
            bound_holds: bool,
        }
        sink.json(
            "bluecurve.json",
            &Summary {
                alpha: b.alpha,
                p: b.p,
                classical_zero_crossing: zero,
                bound_holds: c.bound_holds,
            },
        )?;
    }
    if cfg.outputs.wants(Format::Svg) {
        let chart = Chart {
            title: format!("blue height, alpha = {}, p = {}", b.alpha, b.p),
            xlabel: "Q".into(),
            ylabel: "height / 4 p kappa_bar_ext |Z|^2".into(),
            series: vec![
                Series::new("quantum", &c.q, &c.quantum, PALETTE[0]),
                Series::new("classical", &c.q, &c.classical, PALETTE[1]),
            ],
            hline: Some(0.0),
        };
        sink.text("bluecurve.svg", &figure(&[chart]))?;
    }
    let lines = vec![format!(
        "classical curve crosses zero at Q = {zero:.9}; slope bound {}",
        if c.bound_holds { "holds" } else { "fails" }
    )];
    finish("bluecurve", cfg, sink, lines)
}
