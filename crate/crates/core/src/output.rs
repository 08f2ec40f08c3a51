//! CSV rows and gnuplot scripts for sweeps and scans.

use std::fmt::Write;

use crate::config::Family;
use crate::evans::EvansScan;
use crate::sweep::{PointResult, SweepOutput};

/// 17 significant digits.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn sweep_header(family: Family, variable: &str, modulation: bool) -> Vec<String> {
    let dim = match family {
        Family::Qkdv => 3,
        Family::Ek => 4,
    };
    let mut h: Vec<String> = ["index", variable, "period", "theta"].iter().map(|s| s.to_string()).collect();
    for k in 1..=dim {
        h.push(format!("m{k}"));
    }
    h.extend(["n_hess", "det", "condition_number", "spectral"].map(String::from));
    match family {
        Family::Qkdv => h.extend(["orbital_qkdv", "sign_pattern"].map(String::from)),
        Family::Ek => h.extend(["orbital_ekl", "orbital_eke", "n_hess_qkdv"].map(String::from)),
    }
    h.extend(["conditions", "stability_index", "limit_zone", "asym_residual", "fd_grad_residual", "res_det_action_c", "cauchy_schwarz_margin"].map(String::from));
    if family == Family::Ek {
        h.extend(["res_const_eke", "res_const_ekl", "res_det_action_action", "eta", "integer_identity"].map(String::from));
    }
    if modulation {
        for k in 1..=dim {
            h.push(format!("ev{k}_re"));
            h.push(format!("ev{k}_im"));
        }
        h.extend(["hyperbolic", "modulation_residual"].map(String::from));
    }
    h
}

pub fn sweep_fields(index: usize, p: &PointResult, family: Family, modulation: bool) -> Vec<String> {
    let r = &p.report;
    let mut f = vec![index.to_string(), num(p.value), num(p.period), num(p.theta)];
    f.extend(r.minors.iter().map(|&m| num(m)));
    f.extend([r.n_hess.to_string(), num(r.det), num(r.condition_number), r.verdict_spectral.as_str().into()]);
    let orb = |o: Option<crate::stability::Orbital>| o.map_or(String::new(), |o| o.as_str().into());
    match family {
        Family::Qkdv => f.extend([orb(r.verdict_orbital_qkdv), r.sign_pattern.map_or(String::new(), |x| x.to_string())]),
        Family::Ek => {
            let nq = crate::stability::signature(&p.jet3.hess, 1e-6).map(|s| s.n_neg.to_string()).unwrap_or_default();
            f.extend([orb(r.verdict_orbital_ekl), orb(r.verdict_orbital_eke), nq]);
        }
    }
    let conds: Vec<&str> = r.conditions.iter().map(|c| c.as_str()).collect();
    let res = &r.residuals;
    f.extend([
        conds.join(";"),
        r.stability_index.to_string(),
        r.limit_zone.as_str().into(),
        num(p.jet3.asym_residual),
        num(p.jet3.fd_grad_residual),
        opt(res.det_action_c),
        num(res.cauchy_schwarz_margin),
    ]);
    if family == Family::Ek {
        f.extend([
            opt(res.const_eke),
            opt(res.const_ekl),
            opt(res.det_action_action),
            opt(res.eta),
            res.integer_identity.map_or(String::new(), |b| b.to_string()),
        ]);
    }
    if modulation {
        let dim = r.minors.len();
        match &p.modulation {
            Some(m) => {
                for &(re, im) in &m.eigenvalues {
                    f.push(num(re));
                    f.push(num(im));
                }
                f.push(m.hyperbolic.to_string());
                f.push(num(m.residual));
            }
            None => f.extend(std::iter::repeat(String::new()).take(2 * dim + 2)),
        }
    }
    f
}

pub fn sweep_csv(out: &SweepOutput, family: Family, modulation: bool) -> String {
    let mut s = sweep_header(family, &out.variable, modulation).join(",");
    s.push('\n');
    for (i, p) in &out.rows {
        s.push_str(&sweep_fields(*i, p, family, modulation).join(","));
        s.push('\n');
    }
    s
}

pub fn evans_csv(scan: &EvansScan) -> String {
    let mut s = String::from("r,value,scaled,cumulative_sign_changes\n");
    for ((r, d), n) in scan.r.iter().zip(&scan.values).zip(&scan.cumulative_sign_changes) {
        let _ = writeln!(s, "{},{},{},{}", num(*r), num(*d), num(d / r.powi(scan.power as i32)), n);
    }
    s
}

/// Condition number and leading minors against the period, one panel each.
pub fn sweep_gnuplot(name: &str, title: &str, dim: usize) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set terminal pngcairo size 900,{}", 220 * (dim + 1));
    let _ = writeln!(s, "set output '{name}.png'");
    let _ = writeln!(s, "set multiplot layout {},1 title '{title}'", dim + 1);
    let _ = writeln!(s, "set xlabel 'period'");
    let _ = writeln!(s, "set key off");
    let _ = writeln!(s, "set logscale y");
    let _ = writeln!(s, "set ylabel 'condition number'");
    let _ = writeln!(s, "plot '{name}.csv' using (column('period')):(column('condition_number')) with linespoints pt 7 ps 0.5");
    let _ = writeln!(s, "unset logscale y");
    let _ = writeln!(s, "set xzeroaxis");
    for k in 1..=dim {
        let _ = writeln!(s, "set ylabel 'm{k}'");
        let _ = writeln!(s, "plot '{name}.csv' using (column('period')):(column('m{k}')) with linespoints pt 7 ps 0.5");
    }
    let _ = writeln!(s, "unset multiplot");
    s
}

pub fn evans_gnuplot(name: &str, power: u32) -> String {
    format!(
        "set datafile separator ','\nset terminal pngcairo size 900,600\nset output '{name}.png'\nset multiplot layout 2,1\nset logscale x\nset xlabel 'r'\nset key off\nset xzeroaxis\nset ylabel 'sign(d) log10(1+|d|)'\nplot '{name}.csv' using (column('r')):(sgn(column('value'))*log10(1+abs(column('value')))) with lines\nset ylabel 'd / r^{power}'\nplot '{name}.csv' using (column('r')):(column('scaled')) with lines\nunset multiplot\n"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(-2.0), "-2.0000000000000000e0");
        assert_eq!(num(f64::NAN), "nan");
        let x: f64 = num(std::f64::consts::PI).parse().unwrap();
        assert_eq!(x, std::f64::consts::PI);
    }

    #[test]
    fn header_widths() {
        assert_eq!(sweep_header(Family::Qkdv, "mu", false).len(), 20);
        assert_eq!(sweep_header(Family::Ek, "lambda", true).len(), 37);
    }
}
