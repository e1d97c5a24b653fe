//! Executes a scenario and writes its trace, summary and plot files.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;

use super::config::{BathConfig, Model, ModeSelection, ScenarioConfig};
use super::presets::derived_ratio;
use super::realization::ohmic_loss_rate;
use crate::entanglement::{concurrence_estimate_curve, entanglement_summary, EntanglementSummary};
use crate::error::{Error, Result};
use crate::markov::{
    decay_rates, evolve_exchange, interaction_range, markov_validity, rddi_from_spectrum, rddi_pv_numeric, PvOptions,
};
use crate::nonmarkov::{solve, QuinticProblem};
use crate::simulator::{convergence_report, discretize, evolve, DynamicsTrace, EvolveOptions, Window};
use crate::spectra::{bath_spectrum, truncated_modes, BathSpectrum, WaveguideGeometry};

/// Relative disagreement between SI-derived and quoted dimensionless values
/// above which a run warns.
pub const SI_MISMATCH_WARN: f64 = 0.02;

/// Allowed excess of the analytic `|a1|²` over 1 before the trace is rejected.
const AMPLITUDE_SLACK: f64 = 1e-6;

/// Ordered `key = value` record.
pub type Record = Vec<(String, String)>;

fn put(rec: &mut Record, key: &str, value: impl ToString) {
    rec.push((key.to_string(), value.to_string()));
}

/// Output of one model on one parameter set.
#[derive(Debug, Clone)]
pub struct ModelRun {
    pub model: Model,
    pub trace: DynamicsTrace,
    pub summary: Option<EntanglementSummary>,
    pub record: Record,
}

/// One point of a detuning sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub detuning: f64,
    pub markov_delta12: f64,
    pub fitted_delta12: f64,
    pub c_max: f64,
    pub t_at_c_max: f64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub name: String,
    pub runs: Vec<ModelRun>,
    pub sweep: Vec<SweepPoint>,
    pub warnings: Vec<String>,
    pub record: Record,
    pub files: Vec<PathBuf>,
}

impl RunReport {
    pub fn run(&self, model: Model) -> Option<&ModelRun> {
        self.runs.iter().find(|r| r.model == model)
    }
}

fn spectrum_of(cfg: &ScenarioConfig) -> Result<BathSpectrum> {
    let z = [cfg.atoms[0].position[2], cfg.atoms[1].position[2]];
    match &cfg.bath {
        BathConfig::TmMode { gamma, cutoff, light_speed } => Ok(BathSpectrum::tm_single_mode(*gamma, *cutoff, *light_speed, z)),
        BathConfig::NearCutoff { gamma, cutoff, light_speed } => Ok(BathSpectrum::near_cutoff(*gamma, *cutoff, *light_speed, z)),
        BathConfig::Waveguide { a, b, modes } => {
            let geom = WaveguideGeometry::new(*a, *b)?;
            for atom in &cfg.atoms {
                atom.validate(&geom)?;
            }
            let list = match modes {
                ModeSelection::Auto { with_te } => truncated_modes(&geom, cfg.omega_a(), cfg.z12(), *with_te)?,
                ModeSelection::List(l) => l.clone(),
            };
            bath_spectrum(&geom, &cfg.atoms[0], &cfg.atoms[1], &list)
        }
    }
}

fn light_speed(cfg: &ScenarioConfig) -> f64 {
    match cfg.bath {
        BathConfig::TmMode { light_speed, .. } | BathConfig::NearCutoff { light_speed, .. } => light_speed,
        BathConfig::Waveguide { .. } => crate::constants::SPEED_OF_LIGHT,
    }
}

fn time_grid(t_max: f64, n_steps: usize) -> Vec<f64> {
    (0..=n_steps).map(|k| t_max * k as f64 / n_steps as f64).collect()
}

/// Markov `Δ12`: closed form for exact modes, principal value otherwise.
fn markov_delta(cfg: &ScenarioConfig, spec: &BathSpectrum) -> Result<f64> {
    match cfg.bath {
        BathConfig::NearCutoff { .. } => Ok(rddi_pv_numeric(spec, cfg.omega_a(), PvOptions::default())?.value),
        _ => rddi_from_spectrum(spec, cfg.omega_a(), 0, 1),
    }
}

fn run_markov(cfg: &ScenarioConfig, spec: &BathSpectrum) -> Result<ModelRun> {
    let wa = cfg.omega_a();
    let mut rec = Record::new();
    let rates = decay_rates(spec, wa);
    put(&mut rec, "gamma_11", rates[0][0]);
    put(&mut rec, "gamma_12", rates[0][1]);
    let delta = markov_delta(cfg, spec)?;
    put(&mut rec, "delta12_markov", delta);
    put(&mut rec, "xi", interaction_range(spec.lowest_cutoff(), wa, light_speed(cfg))?);
    if !matches!(cfg.bath, BathConfig::NearCutoff { .. }) {
        put(&mut rec, "markov_validity", markov_validity(spec, wa)?);
    }
    let t = time_grid(cfg.grid.t_max, cfg.grid.n_steps);
    let states = evolve_exchange(delta, &t)?;
    let trace = DynamicsTrace {
        t: t.clone(),
        a1: states.iter().map(|s| s.amp1).collect(),
        a2: Some(states.iter().map(|s| s.amp2).collect()),
        p_field: Some(vec![0.0; t.len()]),
        norm: Some(states.iter().map(|s| s.amp1.norm_sqr() + s.amp2.norm_sqr()).collect()),
        concurrence: states
            .iter()
            .map(|s| Some(crate::entanglement::concurrence_single_excitation(s.amp1, s.amp2)))
            .collect(),
    };
    let summary = entanglement_summary(&trace).ok();
    Ok(ModelRun { model: Model::Markov, trace, summary, record: rec })
}

fn quintic_problem(cfg: &ScenarioConfig) -> Result<QuinticProblem> {
    match cfg.bath {
        BathConfig::TmMode { gamma, cutoff, light_speed } | BathConfig::NearCutoff { gamma, cutoff, light_speed } => {
            Ok(QuinticProblem { gamma, omega_c: cutoff, detuning: cfg.omega_a() - cutoff, z12: cfg.z12(), light_speed })
        }
        BathConfig::Waveguide { .. } => Err(Error::domain("the non-Markovian solver needs a single-mode bath")),
    }
}

fn run_nonmarkov(cfg: &ScenarioConfig, warnings: &mut Vec<String>) -> Result<ModelRun> {
    let problem = quintic_problem(cfg)?;
    let sol = solve(&problem)?;
    let mut rec = Record::new();
    put(&mut rec, "margin_spectrum", sol.margins.spectrum);
    put(&mut rec, "margin_separation", sol.margins.separation);
    if sol.margins.exceeds(cfg.grid.validity_threshold) {
        warnings.push(format!(
            "non-Markovian validity margin {:.3} exceeds {} (spectrum {:.3}, separation {:.3})",
            sol.margins.worst(),
            cfg.grid.validity_threshold,
            sol.margins.spectrum,
            sol.margins.separation
        ));
    }
    for (j, (u, c)) in sol.poles().enumerate() {
        put(&mut rec, &format!("root_{j}"), format_complex(u));
        put(&mut rec, &format!("residue_{j}"), format_complex(c));
    }
    put(&mut rec, "sum_residues", sol.sum_c.norm());
    put(&mut rec, "sum_residues_roots_plus_i", (sol.sum_cu + Complex64::i()).norm());
    let t = time_grid(cfg.grid.t_max, cfg.grid.n_steps);
    let a1 = t.iter().map(|&x| sol.amplitude_a1_rotating(x)).collect::<Result<Vec<_>>>()?;
    if let Some(i) = a1.iter().position(|a| a.norm_sqr() > 1.0 + AMPLITUDE_SLACK) {
        return Err(Error::domain(format!(
            "non-Markovian |a1|² = {:.3e} > 1 at t = {}: the expansion does not hold here (separation margin {:.3})",
            a1[i].norm_sqr(),
            t[i],
            sol.margins.separation
        )));
    }
    let concurrence = concurrence_estimate_curve(&t, &a1)?;
    let trace = DynamicsTrace { t, a1, a2: None, p_field: None, norm: None, concurrence };
    let summary = entanglement_summary(&trace).ok();
    Ok(ModelRun { model: Model::NonMarkov, trace, summary, record: rec })
}

fn run_simulation(cfg: &ScenarioConfig, spec: &BathSpectrum, with_report: bool) -> Result<ModelRun> {
    let wa = cfg.omega_a();
    let window = Window::around(spec, wa, cfg.grid.window_factor);
    let bath = discretize(spec, window, cfg.grid.n_modes)?;
    let opts = EvolveOptions { tol: cfg.grid.tol, ..Default::default() };
    let t = time_grid(cfg.grid.t_max, cfg.grid.n_steps);
    let trace = evolve(&bath, wa, &t, opts)?;
    let mut rec = Record::new();
    put(&mut rec, "modes", bath.len());
    put(&mut rec, "window_upper", window.upper);
    put(&mut rec, "norm_drift", trace.norm_drift());
    if with_report {
        let rep = convergence_report(&bath, wa, &trace, opts)?;
        put(&mut rec, "d_omega_t", rep.d_omega_t);
        put(&mut rec, "coverage", rep.coverage);
        put(&mut rec, "refinement_delta", rep.refinement_delta);
        put(&mut rec, "converged", rep.all_green());
    }
    let summary = entanglement_summary(&trace).ok();
    Ok(ModelRun { model: Model::Simulate, trace, summary, record: rec })
}

fn sweep_point(base: &ScenarioConfig, detuning: f64, z_over_lambda: f64, periods: f64) -> Result<(SweepPoint, ModelRun)> {
    let cutoff = base.cutoff().ok_or_else(|| Error::domain("sweeps need a single-mode bath"))?;
    let mut cfg = base.clone();
    let wa = cutoff + detuning;
    let z = z_over_lambda * 2.0 * PI * light_speed(base) / wa;
    for (atom, pos) in cfg.atoms.iter_mut().zip([0.0, z]) {
        atom.omega_a = wa;
        atom.position = [0.0, 0.0, pos];
    }
    let spec = spectrum_of(&cfg)?;
    let markov = markov_delta(&cfg, &spec)?;
    cfg.grid.t_max = periods * PI / markov.abs();
    let run = if base.model == Model::NonMarkov { run_nonmarkov(&cfg, &mut Vec::new())? } else { run_simulation(&cfg, &spec, false)? };
    let s = run
        .summary
        .ok_or_else(|| Error::Convergence(format!("no exchange fit at detuning {detuning}")))?;
    Ok((
        SweepPoint { detuning, markov_delta12: markov, fitted_delta12: s.fitted_delta12, c_max: s.c_max, t_at_c_max: s.t_at_c_max },
        run,
    ))
}

/// Runs every requested model without touching the file system.
pub fn execute(cfg: &ScenarioConfig) -> Result<RunReport> {
    let mut report = RunReport {
        name: cfg.name.clone(),
        runs: Vec::new(),
        sweep: Vec::new(),
        warnings: Vec::new(),
        record: Record::new(),
        files: Vec::new(),
    };
    put(&mut report.record, "scenario", &cfg.name);
    put(&mut report.record, "model", cfg.model.as_str());

    if let Some(r) = &cfg.realization {
        let (ratio, formula) = derived_ratio(r)?;
        let quoted = r.quoted_cutoff + r.quoted_detuning;
        let mismatch = (ratio - quoted).abs() / quoted;
        put(&mut report.record, "si_omega_a_over_gamma", ratio);
        put(&mut report.record, "quoted_omega_a_over_gamma", quoted);
        if mismatch > SI_MISMATCH_WARN {
            report.warnings.push(format!(
                "SI inputs give ω_a/Γ = {ratio:.4e} but the quoted value is {quoted:.4e} ({:.1}% apart); using the quoted dimensionless values",
                100.0 * mismatch
            ));
        }
        if let Some(f) = formula {
            put(&mut report.record, "free_space_rate", f);
            let off = (f - r.gamma).abs() / r.gamma;
            if off > SI_MISMATCH_WARN {
                report.warnings.push(format!(
                    "free-space formula gives Γ = {f:.4} s⁻¹, {:.1}% from the reference rate {} s⁻¹",
                    100.0 * off,
                    r.gamma
                ));
            }
        }
    }

    if let Some(sw) = &cfg.sweep {
        let results: Vec<Result<(SweepPoint, ModelRun)>> =
            sw.detunings.par_iter().map(|&w| sweep_point(cfg, w, sw.z_over_lambda, sw.periods)).collect();
        for r in results {
            let (point, run) = r?;
            report.sweep.push(point);
            report.runs.push(run);
        }
        return Ok(report);
    }

    let spec = spectrum_of(cfg)?;
    if cfg.model.includes(Model::Markov) {
        report.runs.push(run_markov(cfg, &spec)?);
    }
    if cfg.model.includes(Model::NonMarkov) {
        let mut w = Vec::new();
        match run_nonmarkov(cfg, &mut w) {
            Ok(r) => report.runs.push(r),
            // With several models requested, an inapplicable expansion should
            // not hide the others.
            Err(e @ Error::Domain(_)) if cfg.model == Model::All => w.push(format!("nonmarkov skipped: {e}")),
            Err(e) => return Err(e),
        }
        report.warnings.extend(w);
    }
    if cfg.model.includes(Model::Simulate) {
        report.runs.push(run_simulation(cfg, &spec, true)?);
    }

    if let (Some(loss), Some(r)) = (&cfg.loss, &cfg.realization) {
        let geom = WaveguideGeometry::new(loss.a, loss.b)?;
        let gamma_loss = ohmic_loss_rate(&geom, loss.m, loss.n, loss.surface_resistance)?;
        put(&mut report.record, "gamma_loss", gamma_loss);
        if let Some(s) = report.runs.iter().find_map(|r| r.summary) {
            let t_entangle = s.t_at_c_max / r.gamma;
            let product = gamma_loss * t_entangle;
            put(&mut report.record, "t_entangle_seconds", t_entangle);
            put(&mut report.record, "gamma_loss_times_t", product);
            put(&mut report.record, "loss_viable", product < 0.1);
        }
    }
    Ok(report)
}

fn format_complex(z: Complex64) -> String {
    format!("{} {}", z.re, z.im)
}

/// CSV with columns `t, re_a1, im_a1, re_a2, im_a2, p1, p2, p_field,
/// concurrence, norm`; absent quantities are empty fields.
pub fn trace_csv(trace: &DynamicsTrace, stride: usize) -> String {
    let mut s = String::from("t,re_a1,im_a1,re_a2,im_a2,p1,p2,p_field,concurrence,norm\n");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for i in (0..trace.len()).step_by(stride.max(1)) {
        let a1 = trace.a1[i];
        let a2 = trace.a2.as_ref().map(|v| v[i]);
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            trace.t[i],
            a1.re,
            a1.im,
            opt(a2.map(|a| a.re)),
            opt(a2.map(|a| a.im)),
            a1.norm_sqr(),
            opt(a2.map(|a| a.norm_sqr())),
            opt(trace.p_field.as_ref().map(|v| v[i])),
            opt(trace.concurrence[i]),
            opt(trace.norm.as_ref().map(|v| v[i])),
        );
    }
    s
}

/// gnuplot-ready blocks, one per curve, separated by two blank lines.
pub fn trace_plot(trace: &DynamicsTrace, stride: usize) -> String {
    let mut s = String::new();
    let mut block = |title: &str, values: Vec<Option<f64>>| {
        if values.iter().all(Option::is_none) {
            return;
        }
        let _ = writeln!(s, "# {title}");
        for (i, v) in values.iter().enumerate().step_by(stride.max(1)) {
            if let Some(v) = v {
                let _ = writeln!(s, "{} {}", trace.t[i], v);
            }
        }
        s.push_str("\n\n");
    };
    block("p1", trace.a1.iter().map(|a| Some(a.norm_sqr())).collect());
    block("p2", trace.a2.as_ref().map_or(vec![None; trace.len()], |v| v.iter().map(|a| Some(a.norm_sqr())).collect()));
    block("concurrence", trace.concurrence.clone());
    s
}

fn summary_text(report: &RunReport) -> String {
    let mut s = String::new();
    let mut section = |name: &str, rec: &Record| {
        let _ = writeln!(s, "[{name}]");
        for (k, v) in rec {
            let _ = writeln!(s, "{k} = {v}");
        }
        s.push('\n');
    };
    section("run", &report.record);
    for r in &report.runs {
        if !report.sweep.is_empty() {
            break;
        }
        let mut rec = r.record.clone();
        if let Some(sm) = r.summary {
            put(&mut rec, "c_max", sm.c_max);
            put(&mut rec, "t_at_c_max", sm.t_at_c_max);
            put(&mut rec, "fitted_delta12", sm.fitted_delta12);
            put(&mut rec, "fit_rms", sm.fit_rms);
        }
        section(r.model.as_str(), &rec);
    }
    for (i, p) in report.sweep.iter().enumerate() {
        let mut rec = Record::new();
        put(&mut rec, "detuning", p.detuning);
        put(&mut rec, "delta12_markov", p.markov_delta12);
        put(&mut rec, "fitted_delta12", p.fitted_delta12);
        put(&mut rec, "c_max", p.c_max);
        put(&mut rec, "t_at_c_max", p.t_at_c_max);
        section(&format!("point_{i}"), &rec);
    }
    if !report.warnings.is_empty() {
        let _ = writeln!(s, "[warnings]");
        for (i, w) in report.warnings.iter().enumerate() {
            let _ = writeln!(s, "warning_{i} = {w}");
        }
    }
    s
}

/// Writes `contents` next to `path` and renames it into place.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes trace CSVs, the summary and (optionally) plot blocks into `dir`.
pub fn write_outputs(report: &mut RunReport, cfg: &ScenarioConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let stride = cfg.grid.output_stride;
    let mut files = Vec::new();
    for (i, r) in report.runs.iter().enumerate() {
        let stem = if report.sweep.is_empty() {
            format!("{}_{}", cfg.name, r.model.as_str())
        } else {
            format!("{}_point{i}", cfg.name)
        };
        let csv = dir.join(format!("{stem}.csv"));
        write_atomic(&csv, &trace_csv(&r.trace, stride))?;
        files.push(csv);
        if cfg.output.plot {
            let dat = dir.join(format!("{stem}.dat"));
            write_atomic(&dat, &trace_plot(&r.trace, stride))?;
            files.push(dat);
        }
    }
    let summary = dir.join(format!("{}_summary.txt", cfg.name));
    write_atomic(&summary, &summary_text(report))?;
    files.push(summary);
    report.files = files;
    Ok(())
}

/// [`execute`] followed by [`write_outputs`].
pub fn run(cfg: &ScenarioConfig, dir: &Path) -> Result<RunReport> {
    let mut report = execute(cfg)?;
    write_outputs(&mut report, cfg, dir)?;
    Ok(report)
}
