//! Command-line front end. Each subcommand loads and validates the whole
//! configuration before computing anything, then writes plot-ready CSV and
//! JSON files into the output directory.

use crate::analytic::{driven_levels, epsilon_zero, jzz_sw, qcq_regime, SwParams};
use crate::chain::{run_chain, time_grid, CorrelatorSeries};
use crate::config::RunConfig;
use crate::gates::run_suite;
use crate::io::{chi_entries, chi_magnitudes, num, write_atomic, write_json, Csv};
use crate::spectral::{exchange_variation, qcq_map, truncation_check, zz_sweep, CouplingLabels};
use crate::{validate, Error, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "mathieu", version, about = "Two-photon parametric control of coupled transmons")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for the parallel parts (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Repeat key extractions with every truncation raised by one.
    #[arg(long, global = true)]
    pub truncation_check: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// ZZ coupling of the driven pair versus drive amplitude.
    ZzSweep,
    /// Coupling map of the driven coupler circuit over amplitude and frequency.
    QcqMap,
    /// Calibrate and simulate the XI, IX, XX and CZ gates.
    Gates,
    /// Programmed chain dynamics against the exact spin-chain reference.
    Chain,
    /// Evaluate the perturbative formulas.
    Analytic,
    /// Run the invariant self-checks.
    Validate,
}

/// What a finished command produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
    /// A check or target was not met; maps to exit code 1.
    pub failed: bool,
}

impl Outcome {
    fn csv(&mut self, dir: &Path, name: &str, csv: &Csv) -> Result<()> {
        let path = dir.join(name);
        csv.write(&path)?;
        self.files.push(path);
        Ok(())
    }

    fn json(&mut self, dir: &Path, name: &str, value: &Value) -> Result<()> {
        let path = dir.join(name);
        write_json(&path, value)?;
        self.files.push(path);
        Ok(())
    }

    fn text(&mut self, dir: &Path, name: &str, text: &str) -> Result<()> {
        let path = dir.join(name);
        write_atomic(&path, text.as_bytes())?;
        self.files.push(path);
        Ok(())
    }
}

/// Exit status for a command result.
pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(o) if o.failed => 1,
        Ok(_) => 0,
        Err(e) if e.is_usage() => 2,
        Err(_) => 1,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = run(&cli);
    match &result {
        Ok(o) => {
            for line in &o.summary {
                println!("{line}");
            }
            for f in &o.files {
                println!("wrote {}", f.display());
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    exit_code(&result)
}

pub fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => {
            let cfg = RunConfig::default();
            cfg.validate()?;
            Ok(cfg)
        }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = load_config(cli.config.as_deref())?;
    let threads = match cli.threads {
        Some(0) => return Err(Error::Config("--threads must be at least 1".into())),
        Some(n) => n,
        None => 0,
    };
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", cli.out.display())))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| dispatch(cli.command, &cfg, &cli.out, cli.truncation_check))
}

pub fn dispatch(command: Command, cfg: &RunConfig, out: &Path, truncation: bool) -> Result<Outcome> {
    match command {
        Command::ZzSweep => cmd_zz_sweep(cfg, out, truncation),
        Command::QcqMap => cmd_qcq_map(cfg, out, truncation),
        Command::Gates => cmd_gates(cfg, out),
        Command::Chain => cmd_chain(cfg, out),
        Command::Analytic => cmd_analytic(cfg, out),
        Command::Validate => cmd_validate(out),
    }
}

fn sw_params(cfg: &RunConfig) -> Option<SwParams> {
    SwParams::from_pair(&cfg.pair_system().ok()?, &cfg.pair_drive()).ok()
}

fn mhz(x: f64) -> String {
    format!("{:.4} MHz", x * 1e3)
}

pub fn cmd_zz_sweep(cfg: &RunConfig, out: &Path, truncation: bool) -> Result<Outcome> {
    let system = cfg.pair_system()?;
    let drive = cfg.pair_drive();
    let grid = cfg.zz_sweep.grid.values()?;
    let labels = CouplingLabels::pair();
    let sweep = zz_sweep(&system, &drive, &grid, &labels)?;
    let sw = sw_params(cfg);

    let mut csv = Csv::new(&["epsilon_ghz", "jzz_numeric_ghz", "jzz_analytic_ghz", "min_overlap", "flags"]);
    for s in &sweep.samples {
        let analytic = sw.and_then(|p| jzz_sw(&p.with_epsilon(s.epsilon)).ok()).unwrap_or(f64::NAN);
        csv.row(vec![
            num(s.epsilon),
            num(s.j_zz),
            num(analytic),
            num(s.min_overlap),
            s.flags.describe(),
        ]);
    }
    let analytic_root = sw.map(|p| epsilon_zero(&p));
    let mut report = json!({
        "epsilon_zero_numeric_ghz": sweep.root,
        "epsilon_zero_analytic_ghz": analytic_root.as_ref().and_then(|r| r.as_ref().ok().copied()),
        "sign_changes": sweep.sign_changes,
        "flagged_samples": sweep.samples.iter().filter(|s| s.flags.any()).count(),
        "jzz_first_sample_ghz": sweep.samples[0].j_zz,
        "validity_warnings": sw.map(|p| p.validity().warnings()).unwrap_or_default(),
    });
    if let Some(Err(e)) = &analytic_root {
        report["epsilon_zero_analytic_error"] = json!(e.to_string());
    }
    let mut summary = vec![
        format!("J_zz at eps = {}: {}", grid[0], mhz(sweep.samples[0].j_zz)),
        format!("sign changes: {}", sweep.sign_changes),
        format!("eps0 numeric: {:?} GHz", sweep.root),
    ];
    if truncation {
        let at = sweep.root.unwrap_or(grid[0]);
        let t = truncation_check(&system, &drive.with_epsilon(at), &labels)?;
        report["truncation_check"] = json!({
            "epsilon_ghz": at, "jzz_ghz": t.value, "jzz_refined_ghz": t.refined, "abs_change_ghz": t.abs_change(),
        });
        summary.push(format!("truncation check at eps = {at:.6}: change {}", mhz(t.abs_change())));
    }
    let mut o = Outcome { summary, ..Outcome::default() };
    o.csv(out, "zz_sweep.csv", &csv)?;
    o.json(out, "zz_sweep.json", &report)?;
    Ok(o)
}

pub fn cmd_qcq_map(cfg: &RunConfig, out: &Path, truncation: bool) -> Result<Outcome> {
    let spec = cfg.qcq_map.spec();
    let system = spec.system()?;
    let eps = cfg.qcq_map.epsilon.values()?;
    let wds = cfg.qcq_map.omega_d.values()?;
    let mode = spec.drive(0.0, 0.0).mode;
    let points = qcq_map(&system, mode, &wds, &eps)?;

    let regime = |wd: f64| qcq_regime(spec.omega_c, wd, spec.omega_q1, spec.omega_q2, spec.alpha_c);
    let mut csv = Csv::new(&[
        "omega_d_ghz", "epsilon_ghz", "jzz_ghz", "jxx_ghz", "anisotropy", "min_overlap", "flagged", "regime", "epsilon_c_ghz",
    ]);
    csv.comment("contour-spacing: 0.002 GHz");
    for p in &points {
        let r = regime(p.omega_d).ok();
        csv.row(vec![
            num(p.omega_d),
            num(p.epsilon),
            num(p.j_zz),
            num(p.j_xx),
            num(p.anisotropy()),
            num(p.min_overlap),
            (p.flagged as u8).to_string(),
            r.map(|r| r.case.to_string()).unwrap_or_default(),
            num(r.and_then(|r| r.epsilon_c).unwrap_or(f64::NAN)),
        ]);
    }
    let regimes: Vec<Value> = wds
        .iter()
        .map(|&wd| match regime(wd) {
            Ok(r) => json!({
                "omega_d_ghz": wd, "case": r.case.to_string(), "static_sign": r.static_sign,
                "epsilon_c_ghz": r.epsilon_c, "on_boundary": r.on_boundary,
            }),
            Err(e) => json!({ "omega_d_ghz": wd, "error": e.to_string() }),
        })
        .collect();
    // The resonant single-excitation doublet is always an equal mixture of
    // the two bare labels, so assignment flags are expected here; J_zz only
    // uses the doublet's summed energy.
    let lo = points.iter().map(|p| p.j_zz).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.j_zz).fold(f64::NEG_INFINITY, f64::max);
    let variation = exchange_variation(&points);
    let mut report = json!({
        "omega_c_ghz": spec.omega_c,
        "jzz_min_ghz": lo,
        "jzz_max_ghz": hi,
        "exchange_variation": variation,
        "flagged_points": points.iter().filter(|p| p.flagged).count(),
        "regimes": regimes,
    });
    let mut summary = vec![
        format!("J_zz range: {} .. {}", mhz(lo), mhz(hi)),
        format!("J_xx relative variation: {:.3}%", 100.0 * variation),
    ];
    if truncation {
        let drive = spec.drive(eps[0], wds[0]);
        let t = truncation_check(&system, &drive, &CouplingLabels::qcq())?;
        report["truncation_check"] = json!({
            "epsilon_ghz": eps[0], "omega_d_ghz": wds[0], "jzz_ghz": t.value,
            "jzz_refined_ghz": t.refined, "abs_change_ghz": t.abs_change(),
        });
        summary.push(format!("truncation check: change {}", mhz(t.abs_change())));
    }
    let mut o = Outcome { summary, ..Outcome::default() };
    o.csv(out, "qcq_map.csv", &csv)?;
    o.json(out, "qcq_map.json", &report)?;
    Ok(o)
}

pub fn cmd_gates(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let suite = run_suite(&cfg.pair_system()?, &cfg.pair_drive(), &cfg.gates)?;
    let mut o = Outcome::default();
    let mut metrics = Csv::new(&["gate", "fidelity", "purity", "leakage", "duration_ns", "conditional_phase"]);
    let mut records = Vec::new();
    for g in &suite.gates {
        let stem = g.name.to_lowercase();
        o.csv(out, &format!("chi_{stem}.csv"), &chi_entries(&g.chi))?;
        o.csv(out, &format!("chi_{stem}_abs.csv"), &chi_magnitudes(&g.chi))?;
        o.csv(out, &format!("chi_{stem}_ideal_abs.csv"), &chi_magnitudes(&g.ideal_chi))?;
        o.text(out, &format!("schedule_{stem}.txt"), &g.schedule.to_text())?;
        let m = &g.metrics;
        let phase = g.conditional_phase();
        metrics.row(vec![
            g.name.clone(),
            num(m.fidelity),
            num(m.purity),
            num(m.leakage),
            num(g.map.duration),
            num(phase),
        ]);
        records.push(json!({
            "gate": g.name, "fidelity": m.fidelity, "purity": m.purity, "leakage": m.leakage,
            "unitarity_deficit": m.unitarity_deficit(), "duration_ns": g.map.duration,
            "conditional_phase": phase, "virtual_z": [g.map.virtual_z.0, g.map.virtual_z.1],
            "max_norm_drift": g.map.max_norm_drift,
        }));
        o.summary.push(format!(
            "{:<3} F = {:.7}  Tr chi^2 = {:.7}  leakage = {:.2e}",
            g.name, m.fidelity, m.purity, m.leakage
        ));
    }
    let cal = &suite.calibration;
    let report = json!({
        "calibration": {
            "epsilon_zero_ghz": cal.epsilon_zero,
            "carriers_ghz": cal.carriers,
            "matrix_elements": cal.matrix_elements,
            "amplitude_scale": cal.amplitude_scale,
        },
        "cz": { "plateau_ghz": suite.cz_plateau, "hold_ns": suite.cz_hold },
        "gates": records,
    });
    o.csv(out, "metrics.csv", &metrics)?;
    o.json(out, "gates.json", &report)?;
    Ok(o)
}

fn series_csv(series: &CorrelatorSeries, note: &str) -> Csv {
    let mut csv = Csv::new(&["t_ns", "C_raw", "C_norm"]);
    csv.comment(note);
    if series.normalized.is_none() {
        csv.comment("normalization undefined: C(0) = 0");
    }
    for (i, (&t, &c)) in series.times.iter().zip(&series.raw).enumerate() {
        let n = series.normalized.as_ref().map_or(f64::NAN, |v| v[i]);
        csv.numbers(&[t, c, n]);
    }
    csv
}

fn fit_json(fit: &std::result::Result<crate::fit::StretchedExp, String>) -> Value {
    match fit {
        Ok(f) => json!({ "t0_ns": f.t0, "n": f.n, "residual": f.residual, "residual_full": f.residual_full, "window_points": f.window }),
        Err(e) => json!({ "error": e }),
    }
}

pub fn cmd_chain(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let section = &cfg.chain;
    let times = time_grid(section.horizon, section.dt)?;
    let base = section.chain();
    let mut o = Outcome::default();
    let mut runs = Vec::new();
    for (i, &target) in section.deltas.iter().enumerate() {
        let run = run_chain(&base, target, &section.program, &times, cfg.seed)?;
        let p = run.programmed;
        if !p.reachable {
            log::warn!("anisotropy {target} is not reachable; nearest {:.4}", p.delta);
        }
        let note = format!("target anisotropy {target}, programmed {:.6}", p.delta);
        o.csv(out, &format!("chain_{i}_mathieu.csv"), &series_csv(&run.mathieu.series, &note))?;
        o.csv(out, &format!("chain_{i}_reference.csv"), &series_csv(&run.reference, &note))?;
        let ratio = match (&run.fit_mathieu, &run.fit_reference) {
            (Ok(a), Ok(b)) => Some(a.t0 / b.t0),
            _ => None,
        };
        o.summary.push(format!(
            "delta {target:+.2}: eps = {:.4} GHz, omega_d = {:.3} GHz, t0 ratio {}",
            p.epsilon,
            p.omega_d,
            ratio.map_or("n/a".into(), |r| format!("{r:.3}"))
        ));
        runs.push(json!({
            "index": i,
            "programmed": p,
            "dimension": run.mathieu.dim,
            "neel_overlap": run.mathieu.neel_overlap,
            "max_norm_drift": run.mathieu.max_norm_drift,
            "fit_mathieu": fit_json(&run.fit_mathieu),
            "fit_reference": fit_json(&run.fit_reference),
            "t0_ratio": ratio,
        }));
    }
    o.json(out, "fits.json", &json!({ "seed": cfg.seed, "runs": runs }))?;
    Ok(o)
}

pub fn cmd_analytic(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let system = cfg.pair_system()?;
    let p = SwParams::from_pair(&system, &cfg.pair_drive())?;
    let grid = cfg.zz_sweep.grid.values()?;
    let mut csv = Csv::new(&["epsilon_ghz", "jzz_ghz", "e0_ghz", "e1_ghz", "e2_ghz", "e3_ghz"]);
    for &e in &grid {
        let j = jzz_sw(&p.with_epsilon(e)).unwrap_or(f64::NAN);
        let l = driven_levels(p.alpha2, p.delta_d, e).ok();
        let lv = |f: fn(&crate::analytic::DressedQubitLevels) -> f64| l.as_ref().map_or(f64::NAN, f);
        csv.numbers(&[e, j, lv(|l| l.e0), lv(|l| l.e1), lv(|l| l.e2), lv(|l| l.e3)]);
    }
    let root = epsilon_zero(&p);
    let spec = cfg.qcq_map.spec();
    let regimes: Vec<Value> = cfg
        .qcq_map
        .omega_d
        .values()?
        .iter()
        .map(|&wd| match qcq_regime(spec.omega_c, wd, spec.omega_q1, spec.omega_q2, spec.alpha_c) {
            Ok(r) => json!({ "omega_d_ghz": wd, "case": r.case.to_string(), "epsilon_c_ghz": r.epsilon_c }),
            Err(e) => json!({ "omega_d_ghz": wd, "error": e.to_string() }),
        })
        .collect();
    let report = json!({
        "parameters": { "g": p.g, "delta": p.delta, "alpha1": p.alpha1, "alpha2": p.alpha2, "delta_d": p.delta_d },
        "jzz_static_ghz": jzz_sw(&p.with_epsilon(0.0)).ok(),
        "epsilon_zero_ghz": root.as_ref().ok(),
        "epsilon_zero_error": root.as_ref().err().map(|e| e.to_string()),
        "validity_warnings": p.validity().warnings(),
        "qcq_regimes": regimes,
    });
    let mut o = Outcome::default();
    o.summary.push(match &root {
        Ok(r) => format!("eps0 = {r:.6} GHz"),
        Err(e) => format!("eps0 unavailable: {e}"),
    });
    o.csv(out, "analytic.csv", &csv)?;
    o.json(out, "analytic.json", &report)?;
    Ok(o)
}

pub fn cmd_validate(out: &Path) -> Result<Outcome> {
    let checks = validate::run_all()?;
    let mut o = Outcome::default();
    for c in &checks {
        o.summary.push(format!(
            "{} {:<40} {:.3e} (tolerance {:.1e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance
        ));
    }
    o.failed = checks.iter().any(|c| !c.passed);
    o.json(out, "validate.json", &json!({ "checks": checks, "passed": !o.failed }))?;
    Ok(o)
}
