//! Run configuration: `key = value` lines grouped under `[section]` headers,
//! with `#` comments.

use std::str::FromStr;

use thiserror::Error;

use crate::action::{EkSource, HessianMethod, Numerics, StepMode};
use crate::profile::{Quadrature, Rule, WaveParamsEK, WaveParamsQ};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing `{key}` in [{section}]")]
    Missing { section: String, key: String },
    #[error("{0}")]
    Invalid(String),
}

fn syntax(line: usize, msg: impl Into<String>) -> ConfigError {
    ConfigError::Syntax { line, msg: msg.into() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ini {
    pub sections: Vec<(String, Vec<Entry>)>,
}

impl Ini {
    pub fn parse(text: &str) -> Result<Ini, ConfigError> {
        let mut ini = Ini::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.split('#').next().unwrap_or("").trim();
            if s.is_empty() {
                continue;
            }
            if let Some(rest) = s.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| syntax(line, "unterminated section header"))?.trim();
                if name.is_empty() {
                    return Err(syntax(line, "empty section name"));
                }
                if ini.sections.iter().any(|(n, _)| n == name) {
                    return Err(syntax(line, format!("duplicate section [{name}]")));
                }
                ini.sections.push((name.to_string(), Vec::new()));
                continue;
            }
            let (k, v) = s.split_once('=').ok_or_else(|| syntax(line, "expected `key = value`"))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(syntax(line, "empty key"));
            }
            let Some((_, entries)) = ini.sections.last_mut() else {
                return Err(syntax(line, "key outside of any section"));
            };
            if entries.iter().any(|e| e.key == k) {
                return Err(syntax(line, format!("duplicate key `{k}`")));
            }
            entries.push(Entry { key: k.to_string(), value: v.to_string(), line });
        }
        Ok(ini)
    }

    pub fn section(&self, name: &str) -> Option<&[Entry]> {
        self.sections.iter().find(|(n, _)| n == name).map(|(_, e)| e.as_slice())
    }
}

/// Typed view of one section; every key must be consumed.
struct Section<'a> {
    name: &'a str,
    entries: &'a [Entry],
    used: Vec<bool>,
}

impl<'a> Section<'a> {
    fn new(ini: &'a Ini, name: &'a str) -> Self {
        let entries = ini.section(name).unwrap_or(&[]);
        Section { name, entries, used: vec![false; entries.len()] }
    }

    fn raw(&mut self, key: &str) -> Option<&'a Entry> {
        let i = self.entries.iter().position(|e| e.key == key)?;
        self.used[i] = true;
        Some(&self.entries[i])
    }

    fn get<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(Some)
                .map_err(|_| syntax(e.line, format!("cannot parse `{}` for `{key}`", e.value))),
        }
    }

    fn positive(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        let line = self.entries.iter().find(|e| e.key == key).map(|e| e.line);
        let v: Option<f64> = self.get(key)?;
        match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(syntax(line.unwrap_or(0), format!("`{key}` must be positive"))),
            _ => Ok(v),
        }
    }

    fn require<T: FromStr>(&mut self, key: &str) -> Result<T, ConfigError> {
        self.get(key)?.ok_or_else(|| ConfigError::Missing { section: self.name.to_string(), key: key.to_string() })
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.used.iter().position(|u| !u) {
            Some(i) => Err(syntax(self.entries[i].line, format!("unknown key `{}` in [{}]", self.entries[i].key, self.name))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub name: String,
    pub gamma: Option<f64>,
    pub sign: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Qkdv,
    Ek,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Wave {
    Qkdv(WaveParamsQ),
    Ek(WaveParamsEK),
}

impl Wave {
    pub fn family(&self) -> Family {
        match self {
            Wave::Qkdv(_) => Family::Qkdv,
            Wave::Ek(_) => Family::Ek,
        }
    }

    pub fn vars(&self) -> &'static [&'static str] {
        match self {
            Wave::Qkdv(_) => &crate::action::QKDV_VARS,
            Wave::Ek(_) => &crate::action::EK_VARS,
        }
    }

    pub fn get(&self, var: &str) -> Option<f64> {
        match self {
            Wave::Qkdv(q) => match var {
                "mu" => Some(q.mu),
                "lambda" => Some(q.lambda),
                "c" => Some(q.c),
                _ => None,
            },
            Wave::Ek(p) => match var {
                "mu" => Some(p.mu),
                "lambda" => Some(p.lambda),
                "j" => Some(p.j),
                "sigma" => Some(p.sigma),
                _ => None,
            },
        }
    }

    pub fn with(&self, var: &str, x: f64) -> Wave {
        let mut w = *self;
        match &mut w {
            Wave::Qkdv(q) => match var {
                "mu" => q.mu = x,
                "lambda" => q.lambda = x,
                _ => q.c = x,
            },
            Wave::Ek(p) => match var {
                "mu" => p.mu = x,
                "lambda" => p.lambda = x,
                "j" => p.j = x,
                _ => p.sigma = x,
            },
        }
        w
    }

    /// The variable playing the role of the energy level of the profile equation.
    pub fn energy_var(&self) -> &'static str {
        match self {
            Wave::Qkdv(_) => "mu",
            Wave::Ek(_) => "lambda",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Range {
    Absolute(f64, f64),
    /// Fractions of the well depth between bottom (0) and barrier (1).
    WellFraction(f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: String,
    pub range: Range,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub dir: String,
    pub name: String,
    pub modulation: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub wave: Wave,
    pub sweep: Option<SweepSpec>,
    pub numerics: Numerics,
    pub output: OutputSpec,
    /// Hint for the well center when the potential has several.
    pub center_hint: Option<f64>,
}

fn parse_enum<T>(sec: &mut Section, key: &str, table: &[(&str, T)]) -> Result<Option<T>, ConfigError>
where
    T: Copy,
{
    match sec.raw(key) {
        None => Ok(None),
        Some(e) => table
            .iter()
            .find(|(n, _)| *n == e.value)
            .map(|(_, v)| Some(*v))
            .ok_or_else(|| {
                let names: Vec<&str> = table.iter().map(|(n, _)| *n).collect();
                syntax(e.line, format!("`{key}` must be one of {}", names.join(", ")))
            }),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let ini = Ini::parse(text)?;
        for (name, _) in &ini.sections {
            if !["model", "wave", "sweep", "numerics", "output"].contains(&name.as_str()) {
                let line = ini.section(name).and_then(|e| e.first()).map_or(0, |e| e.line.saturating_sub(1));
                return Err(syntax(line, format!("unknown section [{name}]")));
            }
        }

        let mut m = Section::new(&ini, "model");
        let model = ModelSpec { name: m.require("name")?, gamma: m.get("gamma")?, sign: m.get("sign")? };
        m.finish()?;

        let has_sweep = ini.section("sweep").is_some();
        let mut s = Section::new(&ini, "sweep");
        let sweep_var: Option<String> = if has_sweep { Some(s.require("variable")?) } else { None };

        let mut w = Section::new(&ini, "wave");
        let family = parse_enum(&mut w, "family", &[("qkdv", Family::Qkdv), ("ek", Family::Ek)])?.unwrap_or(Family::Qkdv);
        let swept = |k: &str| sweep_var.as_deref() == Some(k);
        let val = |w: &mut Section, k: &str| -> Result<f64, ConfigError> {
            if swept(k) {
                Ok(w.get(k)?.unwrap_or(f64::NAN))
            } else {
                w.require(k)
            }
        };
        let wave = match family {
            Family::Qkdv => Wave::Qkdv(WaveParamsQ { mu: val(&mut w, "mu")?, lambda: val(&mut w, "lambda")?, c: val(&mut w, "c")? }),
            Family::Ek => Wave::Ek(WaveParamsEK {
                mu: val(&mut w, "mu")?,
                lambda: val(&mut w, "lambda")?,
                j: val(&mut w, "j")?,
                sigma: val(&mut w, "sigma")?,
            }),
        };
        let center_hint = w.get("center")?;
        w.finish()?;

        let sweep = match sweep_var {
            None => None,
            Some(variable) => {
                if !wave.vars().contains(&variable.as_str()) {
                    let line = ini.section("sweep").unwrap().iter().find(|e| e.key == "variable").unwrap().line;
                    return Err(syntax(line, format!("cannot sweep `{variable}` for this family")));
                }
                let abs = (s.get::<f64>("from")?, s.get::<f64>("to")?);
                let frac = (s.get::<f64>("well_from")?, s.get::<f64>("well_to")?);
                let count: usize = s.require("count")?;
                let range = match (abs, frac) {
                    ((Some(a), Some(b)), (None, None)) => Range::Absolute(a, b),
                    ((None, None), (Some(a), Some(b))) => {
                        if variable != wave.energy_var() {
                            return Err(ConfigError::Invalid(format!("well fractions apply only to `{}`", wave.energy_var())));
                        }
                        Range::WellFraction(a, b)
                    }
                    _ => return Err(ConfigError::Invalid("[sweep] needs either from/to or well_from/well_to".into())),
                };
                if count == 0 {
                    return Err(ConfigError::Invalid("[sweep] count must be positive".into()));
                }
                Some(SweepSpec { variable, range, count })
            }
        };
        s.finish()?;

        let mut n = Section::new(&ini, "numerics");
        let d = Numerics::default();
        let numerics = Numerics {
            newton_tol: n.positive("newton_tol")?.unwrap_or(d.newton_tol),
            quad: Quadrature {
                delta_omega: n.positive("delta_omega")?.unwrap_or(d.quad.delta_omega),
                rule: parse_enum(&mut n, "quadrature", &[("midpoint", Rule::Midpoint), ("trapezoid", Rule::Trapezoid)])?
                    .unwrap_or(d.quad.rule),
            },
            delta_nu: n.positive("delta_nu")?.unwrap_or(d.delta_nu),
            step_mode: parse_enum(&mut n, "step_mode", &[("relative", StepMode::Relative), ("absolute", StepMode::Absolute)])?
                .unwrap_or(d.step_mode),
            hessian: parse_enum(
                &mut n,
                "hessian",
                &[("gradient", HessianMethod::GradientFd), ("second-difference", HessianMethod::SecondDifference)],
            )?
            .unwrap_or(d.hessian),
            ek_source: parse_enum(&mut n, "ek_source", &[("chain-rule", EkSource::ChainRule), ("direct", EkSource::DirectFd)])?
                .unwrap_or(d.ek_source),
            rk4_steps: n.get("rk4_steps")?.unwrap_or(d.rk4_steps),
            evans_steps: n.get("evans_steps")?.unwrap_or(d.evans_steps),
            r_max: n.positive("r_max")?,
            n_grid: n.get("n_grid")?.unwrap_or(d.n_grid),
            sign_tol: n.positive("sign_tol")?.unwrap_or(d.sign_tol),
        };
        n.finish()?;
        if numerics.rk4_steps < 64 || numerics.evans_steps < 64 || numerics.n_grid < 10 {
            return Err(ConfigError::Invalid("rk4_steps and evans_steps must be ≥ 64, n_grid ≥ 10".into()));
        }

        let mut o = Section::new(&ini, "output");
        let output = OutputSpec {
            dir: o.get("dir")?.unwrap_or_else(|| "out".to_string()),
            name: o.get("name")?.unwrap_or_else(|| "run".to_string()),
            modulation: o.get("modulation")?.unwrap_or(false),
        };
        o.finish()?;

        Ok(RunConfig { model, wave, sweep, numerics, output, center_hint })
    }
}
