use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use wavestab::action::StepMode;
use wavestab::cases::{find_case, CaseDefinition, CASES};
use wavestab::config::{Family, RunConfig, Wave};
use wavestab::evans::{evans_scan_ekl, evans_scan_qkdv, scan_profile, sturm_discriminant, EklOperator, EvansScan};
use wavestab::linalg;
use wavestab::output::{evans_csv, evans_gnuplot, num, sweep_csv, sweep_fields, sweep_gnuplot, sweep_header};
use wavestab::sweep::{analyze_point, build_model, run_sweep, summarize, with_workers, SweepError, SweepOutput};
use wavestab::validate::{validate as run_validate, ValidateOptions};

use crate::{EXIT_INFEASIBLE, EXIT_USAGE, EXIT_VALIDATION};

pub struct Context {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: u64,
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub msg: String,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError { code: EXIT_USAGE, msg: msg.into() }
}

fn infeasible(msg: impl Into<String>) -> CliError {
    CliError { code: EXIT_INFEASIBLE, msg: msg.into() }
}

fn sweep_err(e: SweepError) -> CliError {
    match e {
        SweepError::Model(_) | SweepError::Pool(_) => usage(e.to_string()),
        _ => infeasible(e.to_string()),
    }
}

fn load_config(ctx: &Context) -> Result<RunConfig, CliError> {
    let path = ctx.config.as_ref().ok_or_else(|| usage("--config <path> is required"))?;
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    RunConfig::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn out_dir(ctx: &Context, fallback: &str) -> Result<PathBuf, CliError> {
    let dir = ctx.out.clone().unwrap_or_else(|| PathBuf::from(fallback));
    fs::create_dir_all(&dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn write(dir: &Path, file: &str, content: &str) -> Result<(), CliError> {
    let p = dir.join(file);
    fs::write(&p, content).map_err(|e| usage(format!("{}: {e}", p.display())))
}

fn write_json<T: Serialize>(dir: &Path, file: &str, v: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| usage(e.to_string()))?;
    s.push('\n');
    write(dir, file, &s)
}

fn wave_json(w: &Wave) -> Value {
    let mut m = Map::new();
    for v in w.vars() {
        let x = w.get(v).unwrap_or(f64::NAN);
        m.insert((*v).to_string(), if x.is_finite() { json!(x) } else { Value::Null });
    }
    Value::Object(m)
}

fn model_json(cfg: &RunConfig) -> Value {
    json!({ "name": cfg.model.name, "gamma": cfg.model.gamma, "sign": cfg.model.sign })
}

fn family_name(f: Family) -> &'static str {
    match f {
        Family::Qkdv => "qkdv",
        Family::Ek => "ek",
    }
}

fn numerics_json(cfg: &RunConfig) -> Value {
    let n = &cfg.numerics;
    json!({
        "newton_tol": n.newton_tol,
        "delta_omega": n.quad.delta_omega,
        "delta_nu": n.delta_nu,
        "step_mode": match n.step_mode { StepMode::Relative => "relative", StepMode::Absolute => "absolute" },
        "rk4_steps": n.rk4_steps,
        "evans_steps": n.evans_steps,
        "sign_tol": n.sign_tol,
    })
}

fn single_point(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.sweep.is_some() {
        return Err(usage("this command takes a single point; remove the [sweep] section"));
    }
    if cfg.wave.vars().iter().any(|v| !cfg.wave.get(v).is_some_and(f64::is_finite)) {
        return Err(usage("every wave parameter must be set"));
    }
    Ok(())
}

pub fn analyze(ctx: &Context) -> Result<(), CliError> {
    let cfg = load_config(ctx)?;
    single_point(&cfg)?;
    let model = build_model(&cfg).map_err(|e| usage(e.to_string()))?;
    let p = analyze_point(&model, &cfg.wave, &cfg.numerics, cfg.center_hint, true).map_err(sweep_err)?;
    let dir = out_dir(ctx, &cfg.output.dir)?;
    let family = cfg.wave.family();
    let var = cfg.wave.energy_var();
    let mut csv = sweep_header(family, var, true).join(",");
    csv.push('\n');
    csv.push_str(&sweep_fields(0, &p, family, true).join(","));
    csv.push('\n');
    write(&dir, &format!("{}.csv", cfg.output.name), &csv)?;
    let doc = json!({
        "command": "analyze",
        "model": model_json(&cfg),
        "family": family_name(family),
        "params": wave_json(&cfg.wave),
        "numerics": numerics_json(&cfg),
        "result": p,
        "sideband_advisory": p.sideband_advisory(),
    });
    write_json(&dir, &format!("{}.json", cfg.output.name), &doc)?;
    let r = &p.report;
    println!("period {}  theta {}", num(p.period), num(p.theta));
    println!("minors {:?}  n(Hess) = {}  det = {}", r.minors, r.n_hess, num(r.det));
    println!("spectral: {}", r.verdict_spectral.as_str());
    for (k, v) in [("qkdv", r.verdict_orbital_qkdv), ("ekl", r.verdict_orbital_ekl), ("eke", r.verdict_orbital_eke)] {
        if let Some(v) = v {
            println!("orbital ({k}): {}", v.as_str());
        }
    }
    if p.sideband_advisory() {
        println!("advisory: nonreal modulation eigenvalue (sideband instability)");
    }
    Ok(())
}

fn run_logged(cfg: &RunConfig, workers: Option<usize>) -> Result<SweepOutput, CliError> {
    let out = run_sweep(cfg, workers).map_err(sweep_err)?;
    for s in &out.skipped {
        eprintln!("skipped point {} ({} = {}): {}", s.index, out.variable, num(s.value), s.reason);
    }
    Ok(out)
}

fn nonempty(out: &SweepOutput) -> Result<(), CliError> {
    if out.rows.is_empty() {
        Err(infeasible(SweepError::Empty.to_string()))
    } else {
        Ok(())
    }
}

fn sweep_title(cfg: &RunConfig) -> String {
    let fixed: Vec<String> = cfg
        .wave
        .vars()
        .iter()
        .filter(|v| cfg.sweep.as_ref().is_none_or(|s| s.variable != **v))
        .map(|v| format!("{v}={}", cfg.wave.get(v).unwrap_or(f64::NAN)))
        .collect();
    format!("{} ({})", cfg.model.name, fixed.join(", "))
}

fn write_sweep(dir: &Path, name: &str, cfg: &RunConfig, out: &SweepOutput, extra: Value) -> Result<(), CliError> {
    let family = cfg.wave.family();
    write(dir, &format!("{name}.csv"), &sweep_csv(out, family, cfg.output.modulation))?;
    let dim = if family == Family::Qkdv { 3 } else { 4 };
    write(dir, &format!("{name}.gp"), &sweep_gnuplot(name, &sweep_title(cfg), dim))?;
    let summary = summarize(out);
    let doc = json!({
        "model": model_json(cfg),
        "family": family_name(family),
        "params": wave_json(&cfg.wave),
        "numerics": numerics_json(cfg),
        "summary": summary,
        "extra": extra,
    });
    write_json(dir, &format!("{name}.json"), &doc)
}

pub fn sweep(ctx: &Context) -> Result<(), CliError> {
    let cfg = load_config(ctx)?;
    if cfg.sweep.is_none() {
        return Err(usage("sweep needs a [sweep] section"));
    }
    let out = run_logged(&cfg, ctx.workers)?;
    let dir = out_dir(ctx, &cfg.output.dir)?;
    write_sweep(&dir, &cfg.output.name, &cfg, &out, Value::Null)?;
    nonempty(&out)?;
    println!("{} rows, {} skipped -> {}", out.rows.len(), out.skipped.len(), dir.join(format!("{}.csv", cfg.output.name)).display());
    Ok(())
}

pub fn modulate(ctx: &Context) -> Result<(), CliError> {
    let mut cfg = load_config(ctx)?;
    cfg.output.modulation = true;
    let dir = out_dir(ctx, &cfg.output.dir)?;
    let out = if cfg.sweep.is_some() {
        let out = run_logged(&cfg, ctx.workers)?;
        nonempty(&out)?;
        out
    } else {
        single_point(&cfg)?;
        let model = build_model(&cfg).map_err(|e| usage(e.to_string()))?;
        let p = analyze_point(&model, &cfg.wave, &cfg.numerics, cfg.center_hint, true).map_err(sweep_err)?;
        SweepOutput { variable: cfg.wave.energy_var().to_string(), rows: vec![(0, p)], skipped: Vec::new() }
    };
    let dim = if cfg.wave.family() == Family::Qkdv { 3 } else { 4 };
    let mut csv = format!("index,{},period", out.variable);
    for k in 1..=dim {
        csv.push_str(&format!(",ev{k}_re,ev{k}_im"));
    }
    csv.push_str(",hyperbolic,residual\n");
    let mut advisory = Vec::new();
    for (i, p) in &out.rows {
        let mut f = vec![i.to_string(), num(p.value), num(p.period)];
        match &p.modulation {
            Some(m) => {
                for &(re, im) in &m.eigenvalues {
                    f.push(num(re));
                    f.push(num(im));
                }
                f.push(m.hyperbolic.to_string());
                f.push(num(m.residual));
                if !m.hyperbolic {
                    advisory.push(*i);
                }
            }
            None => f.extend(std::iter::repeat_n(String::new(), 2 * dim + 2)),
        }
        csv.push_str(&f.join(","));
        csv.push('\n');
    }
    let name = &cfg.output.name;
    write(&dir, &format!("{name}.csv"), &csv)?;
    let mut gp = format!(
        "set datafile separator ','\nset terminal pngcairo size 900,500\nset output '{name}.png'\nset xlabel 'period'\nset ylabel 'Re(eigenvalue)'\nset key outside\nplot"
    );
    for k in 1..=dim {
        gp.push_str(&format!("{} '{name}.csv' using (column('period')):(column('ev{k}_re')) with linespoints title 'ev{k}'", if k > 1 { "," } else { "" }));
    }
    gp.push('\n');
    write(&dir, &format!("{name}.gp"), &gp)?;
    let doc = json!({
        "command": "modulate",
        "model": model_json(&cfg),
        "family": family_name(cfg.wave.family()),
        "rows": out.rows.len(),
        "skipped": out.skipped,
        "hyperbolic_rows": out.rows.len() - advisory.len(),
        "sideband_advisory_rows": advisory,
    });
    write_json(&dir, &format!("{name}.json"), &doc)?;
    println!("{} of {} rows hyperbolic", out.rows.len() - advisory.len(), out.rows.len());
    Ok(())
}

#[derive(Serialize)]
struct EvansSummary {
    family: &'static str,
    operator: Option<&'static str>,
    steps: usize,
    det_hessian: f64,
    fit_coeff: Option<f64>,
    fit_relative_error: Option<f64>,
    fit_slope: Option<f64>,
    fit_window: Option<(f64, f64)>,
    tail_sign: i8,
    expected_tail_sign: i8,
    sign_changes: usize,
    r_max: f64,
    max_det_drift: f64,
    discriminant_t0_residual: f64,
    discriminant_slope: f64,
    period_derivative: f64,
    sturm_sign_agrees: bool,
}

pub fn evans(ctx: &Context, shifted: bool) -> Result<(), CliError> {
    let cfg = load_config(ctx)?;
    single_point(&cfg)?;
    let model = build_model(&cfg).map_err(|e| usage(e.to_string()))?;
    let p = analyze_point(&model, &cfg.wave, &cfg.numerics, cfg.center_hint, false).map_err(sweep_err)?;
    let n = &cfg.numerics;
    let jet3 = &p.jet3;
    let (prof, steps) = scan_profile(&model, &jet3.params, &jet3.point.tp, jet3.grad[0], n).map_err(|e| infeasible(e.to_string()))?;
    let (scan, det, family, operator, expected): (EvansScan, f64, _, _, i8) = match &cfg.wave {
        Wave::Qkdv(_) => {
            let s = evans_scan_qkdv(&prof, &model, n.r_max, n.n_grid, steps).map_err(|e| infeasible(e.to_string()))?;
            (s, linalg::det(&jet3.hess), "qkdv", None, -1)
        }
        Wave::Ek(ek) => {
            let op = if shifted { EklOperator::Shifted } else { EklOperator::Bare };
            let s = evans_scan_ekl(&prof, &model, ek.j, op, n.r_max, n.n_grid, steps).map_err(|e| infeasible(e.to_string()))?;
            let h = &p.jet4.as_ref().expect("ek point has a 4-jet").hess;
            (s, linalg::det(h), "ek", Some(if shifted { "shifted" } else { "bare" }), 1)
        }
    };
    let st = sturm_discriminant(&prof, &model, &[], steps).map_err(|e| infeasible(e.to_string()))?;
    let ymu = jet3.hess[0][0];
    let summary = EvansSummary {
        family,
        operator,
        steps,
        det_hessian: det,
        fit_coeff: scan.fit_coeff,
        fit_relative_error: scan.fit_coeff.map(|f| (f - det).abs() / det.abs()),
        fit_slope: scan.fit_slope,
        fit_window: scan.fit_window,
        tail_sign: scan.tail_sign,
        expected_tail_sign: expected,
        sign_changes: scan.sign_changes,
        r_max: scan.r_max,
        max_det_drift: scan.max_det_drift,
        discriminant_t0_residual: st.t0_residual,
        discriminant_slope: st.slope_at_zero,
        period_derivative: ymu,
        sturm_sign_agrees: st.slope_at_zero.signum() == ymu.signum(),
    };
    let dir = out_dir(ctx, &cfg.output.dir)?;
    let name = &cfg.output.name;
    write(&dir, &format!("{name}.csv"), &evans_csv(&scan))?;
    write(&dir, &format!("{name}.gp"), &evans_gnuplot(name, scan.power))?;
    write_json(&dir, &format!("{name}.json"), &json!({ "command": "evans", "model": model_json(&cfg), "params": wave_json(&cfg.wave), "evans": summary }))?;
    println!(
        "det Hess = {}  fit = {}  slope = {}  tail sign = {}  sign changes = {}",
        num(det),
        scan.fit_coeff.map_or("none".into(), num),
        scan.fit_slope.map_or("none".into(), num),
        scan.tail_sign,
        scan.sign_changes
    );
    Ok(())
}

pub fn validate(ctx: &Context, points: usize, evans: bool, models: Vec<String>) -> Result<(), CliError> {
    if points == 0 {
        return Err(usage("--points must be positive"));
    }
    let known: Vec<&str> = wavestab::validate::SAMPLERS.iter().map(|s| s.label).collect();
    if let Some(bad) = models.iter().find(|m| !known.contains(&m.as_str())) {
        return Err(usage(format!("unknown model `{bad}`; expected one of {}", known.join(", "))));
    }
    let opts = ValidateOptions {
        seed: ctx.seed,
        n_points: points,
        evans,
        only: if models.is_empty() { None } else { Some(models) },
        ..ValidateOptions::default()
    };
    let report = with_workers(ctx.workers, || run_validate(&opts)).map_err(usage)?;
    let dir = out_dir(ctx, "out")?;
    let mut csv = String::from("model,check,passed,failed,skipped,worst\n");
    for m in &report.models {
        for c in &m.checks {
            csv.push_str(&format!("{},{},{},{},{},{}\n", m.label, c.name, c.passed, c.failed, c.skipped, num(c.worst)));
        }
        let failed: Vec<&str> = m.checks.iter().filter(|c| c.failed > 0).map(|c| c.name).collect();
        println!(
            "{:<22} {} points  {}{}",
            m.label,
            m.points,
            if m.ok() { "pass" } else { "FAIL" },
            if failed.is_empty() { String::new() } else { format!(" ({})", failed.join(", ")) }
        );
        for e in &m.errors {
            eprintln!("  {}: {e}", m.label);
        }
    }
    write(&dir, "validate.csv", &csv)?;
    write_json(&dir, "validate.json", &report)?;
    if report.ok {
        Ok(())
    } else {
        Err(CliError { code: EXIT_VALIDATION, msg: "validation failed".into() })
    }
}

fn case_expectations(case: &CaseDefinition) -> Value {
    json!({
        "expected": case.expected,
        "note": case.note,
        "sweep_variable": case.variable,
        "well_range": case.well_range,
        "delta_nu": case.delta_nu,
        "step_mode": "absolute",
    })
}

pub fn reproduce(ctx: &Context, name: &str) -> Result<(), CliError> {
    let case = find_case(name).ok_or_else(|| {
        let names: Vec<&str> = CASES.iter().map(|c| c.name).collect();
        usage(format!("unknown case `{name}`; expected one of {}", names.join(", ")))
    })?;
    let cfg = case.config();
    let out = run_logged(&cfg, ctx.workers)?;
    let dir = out_dir(ctx, "out")?;
    write_sweep(&dir, case.name, &cfg, &out, case_expectations(case))?;
    nonempty(&out)?;
    let s = summarize(&out);
    println!("{}: {} rows, period {:.4}..{:.4}", case.name, s.rows, s.period_range.0, s.period_range.1);
    println!("  n(Hess) values {:?}, minor signs {:?}", s.n_hess_values, s.minor_sign_patterns);
    for c in &s.det_crossings {
        println!("  det Hess changes sign near period {:.4}", c.period);
    }
    Ok(())
}
