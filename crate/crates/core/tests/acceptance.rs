//! End-to-end acceptance criteria. Each test writes one PASS/FAIL line to the
//! real stderr (bypassing libtest capture) and then asserts.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::OnceLock;
use std::time::Instant;

use wavestab::action::{action_jet_qkdv, Numerics};
use wavestab::cases::find_case;
use wavestab::config::RunConfig;
use wavestab::evans::{evans_scan_ekl, evans_scan_qkdv, scan_profile, EklOperator};
use wavestab::linalg;
use wavestab::models::{make_builtin, ModelOptions};
use wavestab::profile::{reconstruct_profile, LimitZone, WaveParamsQ};
use wavestab::stability::{Condition, Orbital, Spectral};
use wavestab::sweep::{analyze_point, build_model, plan, run_sweep, summarize, PointResult, SweepOutput};
use wavestab::validate::{validate, ValidateOptions, ValidationReport};

fn report(n: u32, title: &str, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {n:>2} {verdict}  {title}: {detail}");
    assert!(ok, "criterion {n} ({title}) failed: {detail}");
}

fn sweep(case: &str) -> (RunConfig, SweepOutput, f64) {
    let cfg = find_case(case).expect("known case").config();
    let t = Instant::now();
    let out = run_sweep(&cfg, Some(1)).expect("case sweep runs");
    (cfg, out, t.elapsed().as_secs_f64())
}

fn clean(p: &PointResult) -> bool {
    p.report.limit_zone == LimitZone::None
}

fn has(p: &PointResult, c: Condition) -> bool {
    p.report.conditions.contains(&c)
}

fn validation() -> &'static ValidationReport {
    static REPORT: OnceLock<ValidationReport> = OnceLock::new();
    REPORT.get_or_init(|| validate(&ValidateOptions { seed: 1, n_points: 20, ..ValidateOptions::default() }))
}

#[test]
fn criterion_01_kdv_signs_and_verdict() {
    let (_, out, secs) = sweep("kdv");
    let rows: Vec<_> = out.rows.iter().map(|(_, p)| p).filter(|p| clean(p)).collect();
    let bad = rows
        .iter()
        .filter(|p| {
            let m = &p.report.minors;
            !(m[0] > 0.0 && m[1] < 0.0 && m[2] < 0.0)
                || p.report.verdict_orbital_qkdv != Some(Orbital::Stable)
                || !has(p, Condition::S1)
                || !has(p, Condition::Johnson)
        })
        .count();
    let ok = bad == 0 && rows.len() >= 30 && secs < 60.0;
    report(1, "kdv sweep", ok, &format!("{} clean rows, {bad} off-pattern, {secs:.1} s on one thread", rows.len()));
}

#[test]
fn criterion_02_boussinesq_transition() {
    let (_, out, secs) = sweep("boussinesq");
    let s = summarize(&out);
    let detail;
    let ok = match (s.det_crossings.as_slice(), s.n_hess_changes.as_slice()) {
        ([x], [n]) => {
            let before_ok = out.rows.iter().filter(|(i, _)| *i <= x.after_index).all(|(_, p)| p.report.verdict_spectral != Spectral::Unstable);
            let after_ok = out.rows.iter().filter(|(i, _)| *i > x.after_index).all(|(_, p)| p.report.verdict_spectral == Spectral::Unstable);
            detail = format!(
                "det crosses at period {:.4}, n {}->{} at {:.4}, verdict flip {}, {secs:.1} s",
                x.period,
                n.from,
                n.to,
                n.period,
                before_ok && after_ok
            );
            (x.period - 3.68).abs() <= 0.10 && n.from == 2 && n.to == 3 && n.after_index == x.after_index && before_ok && after_ok
        }
        (x, n) => {
            detail = format!("{} det crossings and {} signature changes", x.len(), n.len());
            false
        }
    };
    report(2, "boussinesq transition", ok && secs < 120.0, &detail);
}

#[test]
fn criterion_03_nls_minors_and_verdicts() {
    let (_, out, secs) = sweep("nls");
    let n = out.rows.len();
    // middle half of the sweep by position
    let mid: Vec<_> = out.rows[n / 4..n - n / 4].iter().map(|(_, p)| p).collect();
    let bad = mid
        .iter()
        .filter(|p| {
            let m = &p.report.minors;
            !(m[0] > 0.0 && m[1] < 0.0 && m[2] > 0.0 && m[3] > 0.0)
                || p.report.n_hess != 2
                || p.report.verdict_orbital_ekl != Some(Orbital::Stable)
                || p.report.verdict_orbital_eke != Some(Orbital::Stable)
                || !has(p, Condition::SL)
                || !has(p, Condition::SE)
        })
        .count();
    let all_bad = out.rows.iter().filter(|(_, p)| p.report.n_hess != 2 || !has(p, Condition::SL) || !has(p, Condition::SE)).count();
    let ok = bad == 0 && mid.len() >= 15 && secs < 120.0;
    report(
        3,
        "nls minors",
        ok,
        &format!("{} mid rows, {bad} off-pattern ({all_bad} over the whole sweep), {secs:.1} s", mid.len()),
    );
}

#[test]
fn criterion_04_mkdv_pair() {
    let (_, foc, _) = sweep("mkdv-focusing");
    let (_, def, _) = sweep("mkdv-defocusing");
    let m2_sign = |o: &SweepOutput| -> Option<f64> {
        let rows: Vec<_> = o.rows.iter().map(|(_, p)| p).filter(|p| clean(p)).collect();
        let s = rows.first()?.report.minors[1].signum();
        rows.iter().all(|p| p.report.n_hess == 1 && p.report.minors[1].signum() == s).then_some(s)
    };
    let (a, b) = (m2_sign(&foc), m2_sign(&def));
    let ok = matches!((a, b), (Some(x), Some(y)) if x == -y);
    report(4, "mkdv pair", ok, &format!("n = 1 throughout with m2 sign {a:?} (focusing) and {b:?} (defocusing)"));
}

#[test]
fn criterion_05_identity_suite() {
    const IDENTITIES: [&str; 4] = ["det_action_c", "const_eke", "const_ekl", "det_action_action"];
    // θ_μμ vanishes identically for the harmonic potential, so the identities
    // that divide by that pivot are undefined there and are skipped.
    const PIVOT_FREE: &str = "synthetic-quadratic";
    let rep = validation();
    let mut problems = Vec::new();
    let mut worst: f64 = 0.0;
    let mut evaluated = 0;
    for m in &rep.models {
        if m.points < 20 || !m.errors.is_empty() {
            problems.push(format!("{}: {} points, errors {:?}", m.label, m.points, m.errors));
        }
        for name in IDENTITIES.iter().copied().chain(["integer_identity", "cauchy_schwarz"]) {
            let c = m.check(name).expect("check exists");
            let pivot_skip = m.label == PIVOT_FREE && (name == "det_action_c" || name == "const_ekl");
            let enough = if pivot_skip { c.passed + c.skipped >= 20 } else { c.passed >= 20 };
            if c.failed > 0 || !enough {
                problems.push(format!("{}: {name} passed {} failed {} skipped {}", m.label, c.passed, c.failed, c.skipped));
            }
            if IDENTITIES.contains(&name) {
                worst = worst.max(c.worst);
                evaluated += c.passed;
            }
        }
    }
    let ok = problems.is_empty() && rep.models.len() == wavestab::validate::SAMPLERS.len();
    let detail = if ok {
        format!("{} models, {evaluated} identity evaluations, worst residual {worst:.2e}", rep.models.len())
    } else {
        problems.join("; ")
    };
    report(5, "identity suite", ok, &detail);
}

#[test]
fn criterion_06_evans_cross_validation() {
    let mid_point = |case: &str| {
        let mut cfg = find_case(case).expect("known case").config();
        let s = cfg.sweep.as_mut().expect("case sweeps");
        s.range = wavestab::config::Range::WellFraction(0.5, 0.5);
        s.count = 1;
        let model = build_model(&cfg).expect("model");
        let p = plan(&cfg, &model).expect("plan");
        let wave = cfg.wave.with(&p.variable, p.values[0]);
        let point = analyze_point(&model, &wave, &cfg.numerics, p.center, false).expect("mid point is feasible");
        (cfg, model, wave, point)
    };

    let (cfg, model, _, p) = mid_point("kdv");
    let n = &cfg.numerics;
    let t = Instant::now();
    let (prof, steps) = scan_profile(&model, &p.jet3.params, &p.jet3.point.tp, p.period, n).expect("profile");
    let sq = evans_scan_qkdv(&prof, &model, n.r_max, n.n_grid, steps).expect("kdv scan");
    let tq = t.elapsed().as_secs_f64();
    let dq = linalg::det(&p.jet3.hess);
    let eq = sq.fit_coeff.map_or(f64::INFINITY, |f| (f - dq).abs() / dq.abs());

    let (cfg, model, wave, p) = mid_point("nls");
    let n = &cfg.numerics;
    let j = wave.get("j").expect("ek wave");
    let t = Instant::now();
    let (prof, steps) = scan_profile(&model, &p.jet3.params, &p.jet3.point.tp, p.period, n).expect("profile");
    let se = evans_scan_ekl(&prof, &model, j, EklOperator::Bare, n.r_max, n.n_grid, steps).expect("nls scan");
    let te = t.elapsed().as_secs_f64();
    let de = linalg::det(&p.jet4.as_ref().expect("ek jet").hess);
    let ee = se.fit_coeff.map_or(f64::INFINITY, |f| (f - de).abs() / de.abs());

    let ok = eq <= 0.02 && sq.tail_sign < 0 && ee <= 0.05 && se.tail_sign > 0 && tq < 120.0 && te < 120.0;
    report(
        6,
        "evans cross-validation",
        ok,
        &format!(
            "kdv r^3 fit off by {eq:.2e}, tail {} ({tq:.1} s); nls r^4 fit off by {ee:.2e}, tail {} ({te:.1} s)",
            sq.tail_sign, se.tail_sign
        ),
    );
}

#[test]
fn criterion_07_sturm_rule() {
    let rep = validation();
    let (mut passed, mut failed, mut pos, mut neg, mut worst) = (0, 0, 0, 0, 0.0_f64);
    let mut neg_from = Vec::new();
    for m in &rep.models {
        let c = m.check("sturm_rule").expect("check exists");
        passed += c.passed;
        failed += c.failed;
        worst = worst.max(c.worst);
        pos += m.period_derivative_signs.0;
        neg += m.period_derivative_signs.1;
        if m.period_derivative_signs.1 > 0 {
            neg_from.push(format!("{} ({})", m.label, m.period_derivative_signs.1));
        }
    }
    let ok = failed == 0 && passed >= 10 && pos > 0 && neg > 0 && worst <= 1e-6;
    report(
        7,
        "sturm rule",
        ok,
        &format!(
            "{passed} points, {failed} failures, |T(0)-2| <= {worst:.1e}, {pos} with positive and {neg} with negative period derivative [negative from {}]",
            neg_from.join(", ")
        ),
    );
}

#[test]
fn criterion_08_harmonic_oracles() {
    let model = make_builtin("synthetic-quadratic", ModelOptions::default()).expect("model");
    let n = Numerics::default();
    let mut worst_period: f64 = 0.0;
    let mut worst_action: f64 = 0.0;
    let mut worst_profile: f64 = 0.0;
    for mu in [0.1, 0.5, 1.0, 2.0, 7.5] {
        let q = WaveParamsQ { mu, lambda: 0.0, c: -2.0 };
        let jet = action_jet_qkdv(&model, &q, &n, None).expect("harmonic wave");
        let exact = PI * 2f64.sqrt();
        worst_period = worst_period.max((jet.grad[0] - exact).abs() / exact);
        worst_action = worst_action.max((jet.value - exact * mu).abs() / (exact * mu));
        let prof = reconstruct_profile(&model, &q, &jet.point.tp, jet.grad[0], 4096).expect("profile");
        let amp = mu.sqrt();
        let err = prof.x.iter().zip(&prof.v).map(|(x, v)| (v + amp * (2f64.sqrt() * x).cos()).abs() / amp).fold(0.0, f64::max);
        worst_profile = worst_profile.max(err);
    }
    let ok = worst_period <= 1e-8 && worst_action <= 1e-8 && worst_profile <= 1e-6;
    report(
        8,
        "harmonic oracles",
        ok,
        &format!("period {worst_period:.1e}, action {worst_action:.1e}, profile sup {worst_profile:.1e} (relative to amplitude)"),
    );
}

#[test]
fn criterion_09_gradient_check() {
    let rep = validation();
    let (mut passed, mut failed, mut worst) = (0, 0, 0.0_f64);
    for m in &rep.models {
        let c = m.check("gradient").expect("check exists");
        passed += c.passed;
        failed += c.failed;
        worst = worst.max(c.worst);
    }
    let ok = failed == 0 && passed > 0 && worst <= 1e-5;
    report(9, "gradient check", ok, &format!("{passed} points, {failed} failures, worst {worst:.2e}"));
}

#[test]
fn criterion_10_step_halving() {
    let cfg = find_case("kdv").expect("known case").config();
    let mut half = cfg.clone();
    half.numerics.delta_nu *= 0.5;
    let a = run_sweep(&cfg, None).expect("sweep");
    let b = run_sweep(&half, None).expect("sweep");
    let mut compared = 0;
    let mut worst: f64 = 0.0;
    for ((i, p), (k, q)) in a.rows.iter().zip(&b.rows) {
        assert_eq!(i, k);
        if clean(p) && clean(q) {
            compared += 1;
            worst = worst.max((p.report.det - q.report.det).abs() / q.report.det.abs());
        }
    }
    let ok = compared >= 30 && worst <= 5e-3;
    report(10, "step halving", ok, &format!("{compared} clean rows, worst relative change of det {worst:.2e}"));
}
