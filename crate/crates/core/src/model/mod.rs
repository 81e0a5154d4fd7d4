//! Parametric catalog of variable exponents, weights, potentials and
//! nonlinearities, with eager rejection of parameters that break the
//! structural hypotheses on the exponents.
//!
//! Exponents have the form
//!
//! ```text
//! p(x, t) = base + x_amp · m(x) + t_amp · g(t)
//! m(x)    = 1 / (1 + |x|)                       (Lipschitz constant 1, values in (0, 1])
//! g(t)    = ln(max(t,1)) / (1 + ln(max(t,1)))   (0 on [0, 1], nondecreasing, < 1)
//! ```
//!
//! so bounds, Lipschitz constants and limits at infinity are exact by construction.

mod nonlinearity;
mod validate;

pub use nonlinearity::{sigma_window, Nonlinearity, NonlinearityConfig, NonlinearityKind};
pub use validate::{
    validate_hypotheses, Check, SamplingSpec, ValidationReport, Verdict,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Spatial modulation `1 / (1 + |x|)`.
pub fn modulation(x: &[f64]) -> f64 {
    1.0 / (1.0 + norm(x))
}

/// Saturating t-profile, identically zero on `[0, 1]`.
pub fn saturation(t: f64) -> f64 {
    if t <= 1.0 {
        0.0
    } else {
        let l = t.ln();
        l / (1.0 + l)
    }
}

/// Derivative of [`saturation`] (right derivative at `t = 1`).
pub fn saturation_derivative(t: f64) -> f64 {
    if t < 1.0 {
        0.0
    } else {
        let l = t.ln();
        1.0 / (t * (1.0 + l) * (1.0 + l))
    }
}

/// A variable exponent `p(x,t)` from the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentField {
    pub base: f64,
    #[serde(default)]
    pub x_amp: f64,
    #[serde(default)]
    pub t_amp: f64,
}

impl ExponentField {
    pub fn constant(value: f64) -> Self {
        ExponentField { base: value, x_amp: 0.0, t_amp: 0.0 }
    }

    #[inline]
    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        let mut e = self.base;
        if self.x_amp != 0.0 {
            e += self.x_amp * modulation(x);
        }
        if self.t_amp != 0.0 {
            e += self.t_amp * saturation(t);
        }
        e
    }

    /// ∂p/∂t.
    #[inline]
    pub fn t_derivative(&self, t: f64) -> f64 {
        if self.t_amp == 0.0 {
            0.0
        } else {
            self.t_amp * saturation_derivative(t)
        }
    }

    pub fn lower_bound(&self) -> f64 {
        self.base
    }

    pub fn upper_bound(&self) -> f64 {
        self.base + self.x_amp + self.t_amp
    }

    pub fn lipschitz_x(&self) -> f64 {
        self.x_amp
    }

    /// `limsup_{|x|→∞} p(x, 1)`.
    pub fn limit_at_infinity(&self) -> f64 {
        self.base
    }

    pub fn is_t_independent(&self) -> bool {
        self.t_amp == 0.0
    }
}

/// Nonnegative Lipschitz weight μ(x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Weight {
    Constant { value: f64 },
    /// `value · |x|² / (1 + |x|²)`: vanishes at the origin.
    Ring { value: f64 },
}

impl Default for Weight {
    fn default() -> Self {
        Weight::Constant { value: 1.0 }
    }
}

impl Weight {
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Weight::Constant { value } => value,
            Weight::Ring { value } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                value * r2 / (1.0 + r2)
            }
        }
    }

    pub fn sup(&self) -> f64 {
        match *self {
            Weight::Constant { value } | Weight::Ring { value } => value,
        }
    }

    pub fn limit_at_infinity(&self) -> f64 {
        self.sup()
    }

    pub fn lipschitz(&self) -> f64 {
        match *self {
            Weight::Constant { .. } => 0.0,
            // max of 2r/(1+r²)² is attained at r = 1/√3
            Weight::Ring { value } => value * 9.0 / (8.0 * 3f64.sqrt()),
        }
    }
}

/// Continuous potential V(x) with floor `v0 > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    Constant { v0: f64 },
    /// `v0 + c |x|²`, coercive for `c > 0`.
    Quadratic { v0: f64, c: f64 },
    /// `v0 + c |x|² / (1 + |x|²)`, bounded.
    BoundedWell { v0: f64, c: f64 },
}

impl Default for Potential {
    fn default() -> Self {
        Potential::Quadratic { v0: 1.0, c: 1.0 }
    }
}

impl Potential {
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        match *self {
            Potential::Constant { v0 } => v0,
            Potential::Quadratic { v0, c } => v0 + c * r2,
            Potential::BoundedWell { v0, c } => v0 + c * r2 / (1.0 + r2),
        }
    }

    pub fn floor(&self) -> f64 {
        match *self {
            Potential::Constant { v0 } | Potential::Quadratic { v0, .. } | Potential::BoundedWell { v0, .. } => v0,
        }
    }

    /// `liminf_{|x|→∞} V(x)`; `None` when V is coercive.
    pub fn limit_at_infinity(&self) -> Option<f64> {
        match *self {
            Potential::Constant { v0 } => Some(v0),
            Potential::Quadratic { v0, c } => {
                if c > 0.0 {
                    None
                } else {
                    Some(v0)
                }
            }
            Potential::BoundedWell { v0, c } => Some(v0 + c),
        }
    }

    /// Closed-form measure of the sublevel set `{V < level}` when it is bounded.
    pub(crate) fn sublevel_radius(&self, level: f64) -> Option<f64> {
        match *self {
            Potential::Constant { v0 } => (level <= v0).then_some(0.0),
            Potential::Quadratic { v0, c } => {
                if level <= v0 {
                    Some(0.0)
                } else if c > 0.0 {
                    Some(((level - v0) / c).sqrt())
                } else {
                    None
                }
            }
            Potential::BoundedWell { v0, c } => {
                if level <= v0 {
                    Some(0.0)
                } else if level >= v0 + c {
                    None
                } else {
                    let s = (level - v0) / c;
                    Some((s / (1.0 - s)).sqrt())
                }
            }
        }
    }
}

/// Limits at infinity declared by the catalog family (never estimated).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Asymptotics {
    pub p_inf: f64,
    pub q_inf: f64,
    pub mu_inf: f64,
}

/// The catalog families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Catalog {
    Constant,
    LogSaturating,
    LipschitzModulated,
    LogSaturatingModulated,
}

impl Catalog {
    pub fn parse(id: &str) -> Result<Self> {
        match id {
            "constant" => Ok(Catalog::Constant),
            "log_saturating" => Ok(Catalog::LogSaturating),
            "lipschitz_modulated" => Ok(Catalog::LipschitzModulated),
            "log_saturating_modulated" => Ok(Catalog::LogSaturatingModulated),
            other => Err(Error::UnknownCatalog(other.to_string())),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Catalog::Constant => "constant",
            Catalog::LogSaturating => "log_saturating",
            Catalog::LipschitzModulated => "lipschitz_modulated",
            Catalog::LogSaturatingModulated => "log_saturating_modulated",
        }
    }

    fn allows_t(&self) -> bool {
        matches!(self, Catalog::LogSaturating | Catalog::LogSaturatingModulated)
    }

    fn allows_x(&self) -> bool {
        matches!(self, Catalog::LipschitzModulated | Catalog::LogSaturatingModulated)
    }
}

/// An exponent given either as a plain number or with its modulation amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExponentSpec {
    Value(f64),
    Field(ExponentField),
}

impl From<ExponentSpec> for ExponentField {
    fn from(s: ExponentSpec) -> Self {
        match s {
            ExponentSpec::Value(v) => ExponentField::constant(v),
            ExponentSpec::Field(f) => f,
        }
    }
}

/// JSON model configuration: `{catalog, d, p, q, mu, potential, asymptotics?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub catalog: String,
    pub d: usize,
    pub p: ExponentSpec,
    pub q: ExponentSpec,
    #[serde(default)]
    pub mu: Weight,
    #[serde(default)]
    pub potential: Potential,
    /// Optional; when present it must agree with the family's declared limits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asymptotics: Option<Asymptotics>,
    /// Relaxes `p < q` to `p ≤ q` for cross-checks against classical p-Laplacian
    /// behaviour. Certificates are never issued for diagnostic models.
    #[serde(default)]
    pub diagnostic: bool,
}

/// The bundle `(p, q, μ, V, d)` defining `h`, `H` and `H_V`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoublePhaseModel {
    pub catalog: Catalog,
    pub d: usize,
    pub p: ExponentField,
    pub q: ExponentField,
    pub mu: Weight,
    pub potential: Potential,
    pub diagnostic: bool,
}

impl DoublePhaseModel {
    pub fn from_config(cfg: &ModelConfig) -> Result<Self> {
        let model = Self::from_config_unchecked(cfg)?;
        model.check_admissible()?;
        if let Some(decl) = cfg.asymptotics {
            let own = model.asymptotics();
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + b.abs());
            if !(close(decl.p_inf, own.p_inf) && close(decl.q_inf, own.q_inf) && close(decl.mu_inf, own.mu_inf)) {
                return Err(Error::Inadmissible(format!(
                    "declared asymptotics {decl:?} disagree with the family's limits {own:?}"
                )));
            }
        }
        Ok(model)
    }

    /// Builds the model without the admissibility gate, so that a validator can
    /// report which hypothesis fails instead of refusing the input.
    pub fn from_config_unchecked(cfg: &ModelConfig) -> Result<Self> {
        Ok(DoublePhaseModel {
            catalog: Catalog::parse(&cfg.catalog)?,
            d: cfg.d,
            p: cfg.p.into(),
            q: cfg.q.into(),
            mu: cfg.mu,
            potential: cfg.potential,
            diagnostic: cfg.diagnostic,
        })
    }

    /// Runs the eager admissibility checks again.
    pub fn admissible(&self) -> Result<()> {
        self.check_admissible()
    }

    pub fn to_config(&self) -> ModelConfig {
        ModelConfig {
            catalog: self.catalog.id().to_string(),
            d: self.d,
            p: ExponentSpec::Field(self.p),
            q: ExponentSpec::Field(self.q),
            mu: self.mu,
            potential: self.potential,
            asymptotics: Some(self.asymptotics()),
            diagnostic: self.diagnostic,
        }
    }

    /// Shorthand for the constant family with `V = v0 + c|x|²`.
    pub fn constant(d: usize, p: f64, q: f64, mu: f64, potential: Potential) -> Result<Self> {
        Self::from_config(&ModelConfig {
            catalog: "constant".into(),
            d,
            p: ExponentSpec::Value(p),
            q: ExponentSpec::Value(q),
            mu: Weight::Constant { value: mu },
            potential,
            asymptotics: None,
            diagnostic: false,
        })
    }

    fn check_admissible(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Inadmissible(m));
        if self.d < 3 {
            return bad(format!("dimension d = {} must be at least 3", self.d));
        }
        for (name, e) in [("p", &self.p), ("q", &self.q)] {
            if !(e.base.is_finite() && e.x_amp.is_finite() && e.t_amp.is_finite()) {
                return bad(format!("{name} has non-finite parameters"));
            }
            if e.x_amp < 0.0 || e.t_amp < 0.0 {
                return bad(format!("{name} modulation amplitudes must be nonnegative"));
            }
            if e.t_amp > 0.0 && !self.catalog.allows_t() {
                return bad(format!("catalog `{}` has no t-dependence ({name}.t_amp > 0)", self.catalog.id()));
            }
            if e.x_amp > 0.0 && !self.catalog.allows_x() {
                return bad(format!("catalog `{}` has no x-modulation ({name}.x_amp > 0)", self.catalog.id()));
            }
        }
        let d = self.d as f64;
        let (pm, pp, qm, qp) = (self.p_minus(), self.p_plus(), self.q_minus(), self.q_plus());
        if pm < 2.0 {
            return bad(format!("p⁻ = {pm} must be at least 2"));
        }
        if pp >= d {
            return bad(format!("p⁺ = {pp} must be below d = {d}"));
        }
        if qm < 2.0 {
            return bad(format!("q⁻ = {qm} must be at least 2"));
        }
        // pointwise p(x,t) < q(x,t): worst case over m(x) ∈ (0,1], g(t) ∈ [0,1)
        let gap = (self.q.base - self.p.base)
            + (self.q.x_amp - self.p.x_amp).min(0.0)
            + (self.q.t_amp - self.p.t_amp).min(0.0);
        if self.diagnostic {
            if gap < 0.0 {
                return bad("requires p(x,t) ≤ q(x,t)".into());
            }
        } else if gap <= 0.0 {
            return bad("requires p(x,t) < q(x,t) strictly".into());
        }
        let pstar = self.p_star_minus();
        if qp >= pstar {
            return bad(format!("q⁺ = {qp} must be below p⁻_* = {pstar}"));
        }
        if qp / pm >= 1.0 + 1.0 / d {
            return bad(format!(
                "q⁺/p⁻ = {} violates q⁺/p⁻ < 1 + 1/d = {}",
                qp / pm,
                1.0 + 1.0 / d
            ));
        }
        match self.mu {
            Weight::Constant { value } | Weight::Ring { value } if !(value >= 0.0 && value.is_finite()) => {
                return bad(format!("μ must be nonnegative and finite, got {value}"));
            }
            _ => {}
        }
        let v0 = self.potential.floor();
        if !(v0 > 0.0 && v0.is_finite()) {
            return bad(format!("potential floor V₀ = {v0} must be positive"));
        }
        match self.potential {
            Potential::Quadratic { c, .. } | Potential::BoundedWell { c, .. } if !(c >= 0.0 && c.is_finite()) => {
                return bad(format!("potential coefficient c = {c} must be nonnegative"));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn p_minus(&self) -> f64 {
        self.p.lower_bound()
    }
    pub fn p_plus(&self) -> f64 {
        self.p.upper_bound()
    }
    pub fn q_minus(&self) -> f64 {
        self.q.lower_bound()
    }
    pub fn q_plus(&self) -> f64 {
        self.q.upper_bound()
    }
    pub fn mu_sup(&self) -> f64 {
        self.mu.sup()
    }

    /// `d p⁻ / (d − p⁻)`.
    pub fn p_star_minus(&self) -> f64 {
        let d = self.d as f64;
        d * self.p_minus() / (d - self.p_minus())
    }

    /// `d q⁺ / (d − q⁺)`; infinite when `q⁺ ≥ d`.
    pub fn q_star_plus(&self) -> f64 {
        let d = self.d as f64;
        if self.q_plus() >= d {
            f64::INFINITY
        } else {
            d * self.q_plus() / (d - self.q_plus())
        }
    }

    pub fn asymptotics(&self) -> Asymptotics {
        Asymptotics {
            p_inf: self.p.limit_at_infinity(),
            q_inf: self.q.limit_at_infinity(),
            mu_inf: self.mu.limit_at_infinity(),
        }
    }

    /// True when neither exponent depends on t, so `H` has a closed form.
    pub fn is_t_independent(&self) -> bool {
        self.p.is_t_independent() && self.q.is_t_independent()
    }

    /// True when every coefficient is independent of x.
    pub fn is_x_independent(&self) -> bool {
        self.p.x_amp == 0.0 && self.q.x_amp == 0.0 && matches!(self.mu, Weight::Constant { .. })
    }

    pub fn v(&self, x: &[f64]) -> f64 {
        self.potential.eval(x)
    }

    pub fn mu_at(&self, x: &[f64]) -> f64 {
        self.mu.eval(x)
    }
}

/// Instantiates a catalog family from a positional parameter list.
///
/// Layouts (the potential is always `V = v0 + vc·|x|²`, μ constant):
/// - `constant`: `[d, p, q, mu, v0, vc]`
/// - `log_saturating`: `[d, p0, a_p, q0, a_q, mu, v0, vc]`
/// - `lipschitz_modulated`: `[d, p0, c_p, q0, c_q, mu, v0, vc]`
/// - `log_saturating_modulated`: `[d, p0, c_p, a_p, q0, c_q, a_q, mu, v0, vc]`
pub fn make_model(catalog_id: &str, params: &[f64]) -> Result<DoublePhaseModel> {
    let catalog = Catalog::parse(catalog_id)?;
    let need = match catalog {
        Catalog::Constant => 6,
        Catalog::LogSaturating | Catalog::LipschitzModulated => 8,
        Catalog::LogSaturatingModulated => 10,
    };
    if params.len() != need {
        return Err(Error::Inadmissible(format!(
            "catalog `{catalog_id}` expects {need} parameters, got {}",
            params.len()
        )));
    }
    let d = params[0];
    if d.fract() != 0.0 || d < 1.0 {
        return Err(Error::Inadmissible(format!("dimension {d} is not a positive integer")));
    }
    let f = |base, x_amp, t_amp| ExponentField { base, x_amp, t_amp };
    let (p, q, rest) = match catalog {
        Catalog::Constant => (f(params[1], 0.0, 0.0), f(params[2], 0.0, 0.0), &params[3..]),
        Catalog::LogSaturating => (f(params[1], 0.0, params[2]), f(params[3], 0.0, params[4]), &params[5..]),
        Catalog::LipschitzModulated => (f(params[1], params[2], 0.0), f(params[3], params[4], 0.0), &params[5..]),
        Catalog::LogSaturatingModulated => (
            f(params[1], params[2], params[3]),
            f(params[4], params[5], params[6]),
            &params[7..],
        ),
    };
    DoublePhaseModel::from_config(&ModelConfig {
        catalog: catalog_id.to_string(),
        d: d as usize,
        p: ExponentSpec::Field(p),
        q: ExponentSpec::Field(q),
        mu: Weight::Constant { value: rest[0] },
        potential: Potential::Quadratic { v0: rest[1], c: rest[2] },
        asymptotics: None,
        diagnostic: false,
    })
}

impl Weight {
    /// Same family with a new amplitude.
    pub fn with_value(&self, value: f64) -> Weight {
        match self {
            Weight::Constant { .. } => Weight::Constant { value },
            Weight::Ring { .. } => Weight::Ring { value },
        }
    }
}
