//! The seven reproduction cases.

use serde::Serialize;

use crate::action::{Numerics, StepMode};
use crate::config::{ModelSpec, OutputSpec, Range, RunConfig, SweepSpec, Wave};
use crate::profile::{WaveParamsEK, WaveParamsQ};

#[derive(Debug, Clone, Serialize)]
pub struct CaseDefinition {
    pub name: &'static str,
    pub model: &'static str,
    pub gamma: Option<f64>,
    pub sign: Option<f64>,
    /// Fixed parameters as (name, value); the energy variable is swept.
    pub fixed: &'static [(&'static str, f64)],
    pub family: &'static str,
    pub variable: &'static str,
    /// Sweep range as fractions of the well depth.
    pub well_range: (f64, f64),
    pub count: usize,
    pub delta_nu: f64,
    pub expected: &'static [&'static str],
    pub note: &'static str,
}

pub const CASES: [CaseDefinition; 7] = [
    CaseDefinition {
        name: "kdv",
        model: "kdv3",
        gamma: None,
        sign: None,
        fixed: &[("c", 60.0), ("lambda", -60.0)],
        family: "qkdv",
        variable: "mu",
        well_range: (0.005, 0.995),
        count: 40,
        delta_nu: 0.005,
        expected: &["m1>0", "m2<0", "m3<0", "n=1", "(s1)", "johnson"],
        note: "",
    },
    CaseDefinition {
        name: "mkdv-focusing",
        model: "power-law",
        gamma: Some(3.0),
        sign: Some(1.0),
        fixed: &[("c", 1000.0), ("lambda", -500.0)],
        family: "qkdv",
        variable: "mu",
        well_range: (0.005, 0.995),
        count: 40,
        delta_nu: 0.05,
        expected: &["n=1", "m2 opposite to defocusing"],
        note: "deepest of the two wells",
    },
    CaseDefinition {
        name: "mkdv-defocusing",
        model: "power-law",
        gamma: Some(3.0),
        sign: Some(-1.0),
        fixed: &[("c", -100.0), ("lambda", -60.0)],
        family: "qkdv",
        variable: "mu",
        well_range: (0.005, 0.995),
        count: 40,
        delta_nu: 0.005,
        expected: &["n=1", "m2 opposite to focusing"],
        note: "",
    },
    CaseDefinition {
        name: "gkdv4",
        model: "power-law",
        gamma: Some(4.0),
        sign: Some(1.0),
        fixed: &[("c", 1000.0), ("lambda", -500.0)],
        family: "qkdv",
        variable: "mu",
        well_range: (0.005, 0.995),
        count: 40,
        delta_nu: 0.005,
        expected: &["n=1", "johnson"],
        note: "",
    },
    CaseDefinition {
        name: "nls",
        model: "nls-capillarity",
        gamma: None,
        sign: None,
        fixed: &[("j", 1.0), ("sigma", 0.0), ("mu", 2.5)],
        family: "ek",
        variable: "lambda",
        well_range: (0.02, 0.98),
        count: 40,
        delta_nu: 1e-5,
        expected: &["M2<0", "M1,M3,M4>0", "n=2", "(S_L)", "(S_E)"],
        note: "mu = +2.5: no oscillating profile exists for mu = -2.5",
    },
    CaseDefinition {
        name: "boussinesq",
        model: "boussinesq",
        gamma: Some(2.0),
        sign: None,
        fixed: &[("j", -0.1), ("sigma", 0.0), ("mu", -2.0)],
        family: "ek",
        variable: "lambda",
        well_range: (0.001, 0.5),
        count: 60,
        delta_nu: 0.5e-4,
        expected: &["det crosses zero near period 3.68", "n: 2 -> 3"],
        note: "",
    },
    CaseDefinition {
        name: "perfect-gas",
        model: "perfect-gas",
        gamma: None,
        sign: None,
        fixed: &[("j", -1.0), ("sigma", 0.0), ("mu", 2.5)],
        family: "ek",
        variable: "lambda",
        well_range: (0.02, 0.95),
        count: 40,
        delta_nu: 0.5e-4,
        expected: &["n=2", "(S_L)", "(S_E)"],
        note: "mu = +2.5: no oscillating profile exists for mu = -2.5",
    },
];

pub fn find_case(name: &str) -> Option<&'static CaseDefinition> {
    CASES.iter().find(|c| c.name == name)
}

impl CaseDefinition {
    fn fixed(&self, k: &str) -> f64 {
        self.fixed.iter().find(|(n, _)| *n == k).map_or(f64::NAN, |(_, v)| *v)
    }

    /// Run configuration with absolute finite-difference steps.
    pub fn config(&self) -> RunConfig {
        let wave = if self.family == "ek" {
            Wave::Ek(WaveParamsEK { mu: self.fixed("mu"), lambda: f64::NAN, j: self.fixed("j"), sigma: self.fixed("sigma") })
        } else {
            Wave::Qkdv(WaveParamsQ { mu: f64::NAN, lambda: self.fixed("lambda"), c: self.fixed("c") })
        };
        RunConfig {
            model: ModelSpec { name: self.model.to_string(), gamma: self.gamma, sign: self.sign },
            wave,
            sweep: Some(SweepSpec {
                variable: self.variable.to_string(),
                range: Range::WellFraction(self.well_range.0, self.well_range.1),
                count: self.count,
            }),
            numerics: Numerics { delta_nu: self.delta_nu, step_mode: StepMode::Absolute, ..Numerics::default() },
            output: OutputSpec { dir: "out".into(), name: self.name.into(), modulation: true },
            center_hint: None,
        }
    }
}
