//! Nonlinearities: bulk energy f, capillarity ∩, and the reduced potential
//! W(v; λ, c) = −f(v) − ½cv² + λv.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown model `{0}`")]
    UnknownName(String),
    #[error("invalid exponent {0} (need gamma >= 2)")]
    InvalidExponent(f64),
    #[error("invalid sign {0} (need +1 or -1)")]
    InvalidSign(f64),
    #[error("v = {v} lies outside the domain ({lo}, {hi}) of `{model}`")]
    OutsideDomain { model: String, v: f64, lo: f64, hi: f64 },
    #[error("density must be positive, got {0}")]
    NonPositiveDensity(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Kind {
    /// p = e(γ+1)v^γ.
    PowerLaw { gamma: f64, e: f64 },
    /// p = v − v^γ, ∩ ≡ 1.
    Boussinesq { gamma: f64 },
    /// p = 1/(2v), ∩ = v⁻⁵.
    PerfectGas,
    /// f = 1/(2v), ∩ = 1/(4v⁴).
    NlsCapillarity,
    /// f = 1/(2v), ∩ ≡ 1.
    ConstantCapillarity,
    /// f ≡ 0, ∩ ≡ 1.
    SyntheticQuadratic,
}

/// Options read from a model block; only some models use them.
#[derive(Debug, Clone, Copy, Default)]
pub struct ModelOptions {
    pub gamma: Option<f64>,
    pub sign: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonlinearModel {
    pub name: String,
    pub kind: Kind,
    /// Open interval (lo, hi) of admissible v.
    pub domain: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialEval {
    pub w: f64,
    pub dw: f64,
    pub d2w: f64,
}

pub const CATALOG: [&str; 7] = [
    "power-law",
    "kdv3",
    "boussinesq",
    "perfect-gas",
    "nls-capillarity",
    "constant-capillarity",
    "synthetic-quadratic",
];

fn is_integer(x: f64) -> bool {
    x.fract() == 0.0 && x.abs() < 1e6
}

/// v^a, using integer powers when possible so negative v stays valid.
fn pw(v: f64, a: f64) -> f64 {
    if is_integer(a) {
        v.powi(a as i32)
    } else {
        v.powf(a)
    }
}

pub fn make_builtin(name: &str, opts: ModelOptions) -> Result<NonlinearModel, ModelError> {
    const LINE: (f64, f64) = (f64::NEG_INFINITY, f64::INFINITY);
    const HALF: (f64, f64) = (0.0, f64::INFINITY);
    let gamma = |default: f64| -> Result<f64, ModelError> {
        let g = opts.gamma.unwrap_or(default);
        if !(g >= 2.0) || !g.is_finite() {
            return Err(ModelError::InvalidExponent(g));
        }
        Ok(g)
    };
    let power_domain = |g: f64| if is_integer(g) { LINE } else { HALF };
    let (kind, domain) = match name {
        "power-law" => {
            let g = gamma(2.0)?;
            let e = opts.sign.unwrap_or(1.0);
            if e != 1.0 && e != -1.0 {
                return Err(ModelError::InvalidSign(e));
            }
            (Kind::PowerLaw { gamma: g, e }, power_domain(g))
        }
        "kdv3" => (Kind::PowerLaw { gamma: 2.0, e: 1.0 }, LINE),
        "boussinesq" => {
            let g = gamma(2.0)?;
            (Kind::Boussinesq { gamma: g }, power_domain(g))
        }
        "perfect-gas" => (Kind::PerfectGas, HALF),
        "nls-capillarity" => (Kind::NlsCapillarity, HALF),
        "constant-capillarity" => (Kind::ConstantCapillarity, HALF),
        "synthetic-quadratic" => (Kind::SyntheticQuadratic, LINE),
        other => return Err(ModelError::UnknownName(other.to_string())),
    };
    Ok(NonlinearModel { name: name.to_string(), kind, domain })
}

impl NonlinearModel {
    pub fn contains(&self, v: f64) -> bool {
        v > self.domain.0 && v < self.domain.1
    }

    pub fn check(&self, v: f64) -> Result<(), ModelError> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(ModelError::OutsideDomain {
                model: self.name.clone(),
                v,
                lo: self.domain.0,
                hi: self.domain.1,
            })
        }
    }

    /// (f, f′, f″) at v; the caller guarantees v is in the domain.
    pub fn f3(&self, v: f64) -> [f64; 3] {
        match self.kind {
            Kind::PowerLaw { gamma: g, e } => [
                -e * pw(v, g + 1.0),
                -e * (g + 1.0) * pw(v, g),
                -e * (g + 1.0) * g * pw(v, g - 1.0),
            ],
            Kind::Boussinesq { gamma: g } => [
                -0.5 * v * v + pw(v, g + 1.0) / (g + 1.0),
                -v + pw(v, g),
                -1.0 + g * pw(v, g - 1.0),
            ],
            Kind::PerfectGas => [-0.5 * v.ln(), -0.5 / v, 0.5 / (v * v)],
            Kind::NlsCapillarity | Kind::ConstantCapillarity => {
                [0.5 / v, -0.5 / (v * v), 1.0 / (v * v * v)]
            }
            Kind::SyntheticQuadratic => [0.0, 0.0, 0.0],
        }
    }

    /// (∩, ∩′, ∩″) at v.
    pub fn cap3(&self, v: f64) -> [f64; 3] {
        match self.kind {
            Kind::PerfectGas => {
                let u = 1.0 / v;
                let u5 = u.powi(5);
                [u5, -5.0 * u5 * u, 30.0 * u5 * u * u]
            }
            Kind::NlsCapillarity => {
                let u = 1.0 / v;
                let u4 = u.powi(4);
                [0.25 * u4, -u4 * u, 5.0 * u4 * u * u]
            }
            _ => [1.0, 0.0, 0.0],
        }
    }

    pub fn f(&self, v: f64) -> f64 {
        self.f3(v)[0]
    }

    /// Pressure p = −f′.
    pub fn p(&self, v: f64) -> f64 {
        -self.f3(v)[1]
    }

    pub fn cap(&self, v: f64) -> f64 {
        self.cap3(v)[0]
    }

    /// W, W′, W″ without domain checks (hot loops).
    #[inline]
    pub fn potential_unchecked(&self, v: f64, lambda: f64, c: f64) -> PotentialEval {
        let [f, df, d2f] = self.f3(v);
        PotentialEval {
            w: -f - 0.5 * c * v * v + lambda * v,
            dw: -df - c * v + lambda,
            d2w: -d2f - c,
        }
    }

    pub fn potential(&self, v: f64, lambda: f64, c: f64) -> Result<PotentialEval, ModelError> {
        self.check(v)?;
        Ok(self.potential_unchecked(v, lambda, c))
    }

    pub fn eulerian_view(&self) -> EulerianModel<'_> {
        EulerianModel { model: self }
    }
}

/// The Eulerian pair F(ρ) = ρ f(1/ρ), Cap(ρ) = ρ⁻⁵ ∩(1/ρ).
#[derive(Debug, Clone, Copy)]
pub struct EulerianModel<'a> {
    model: &'a NonlinearModel,
}

impl EulerianModel<'_> {
    fn volume(&self, rho: f64) -> Result<f64, ModelError> {
        if !(rho > 0.0) {
            return Err(ModelError::NonPositiveDensity(rho));
        }
        let v = 1.0 / rho;
        self.model.check(v)?;
        Ok(v)
    }

    pub fn energy(&self, rho: f64) -> Result<f64, ModelError> {
        Ok(rho * self.model.f(self.volume(rho)?))
    }

    pub fn capillarity(&self, rho: f64) -> Result<f64, ModelError> {
        Ok(rho.powi(-5) * self.model.cap(self.volume(rho)?))
    }

    /// Inverse substitution back to the Lagrangian pair: (v F(1/v), v⁻⁵ Cap(1/v)).
    pub fn lagrangian_at(&self, v: f64) -> Result<(f64, f64), ModelError> {
        let rho = 1.0 / v;
        Ok((v * self.energy(rho)?, v.powi(-5) * self.capillarity(rho)?))
    }
}
