//! Catalog nonlinearities `f(t)` with primitive `F`, power majorant `b`, and the
//! constants used by the superlinearity and growth conditions.
//!
//! Catalog members do not depend on x; every method takes only `t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{geometric_ladder, golden_max};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonlinearityKind {
    /// `f = |t|^{q-2} t ln(1+|t|) + (1/q)|t|^{q-1} t/(1+|t|)`, `F = (1/q)|t|^q ln(1+|t|)`.
    PowerLog,
    /// `F = κ|t|^m/(1+|t|^m) + ε·F_{power_log}`. The bump term creates a negative-energy
    /// well for moderate λ; the ε term keeps F superlinear at infinity.
    SaturatingBump { kappa: f64, m: f64, eps: f64 },
    Zero,
}

/// JSON nonlinearity configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearityConfig {
    #[serde(flatten)]
    pub kind: NonlinearityKind,
    /// Exponent used inside the formulas; normally the model's `q⁺`.
    pub q: f64,
    /// Majorant exponent: `b(t) = c_b t^{b-1}`. Defaults to `q + 0.5`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// Majorant constant; computed from a sup over a t-ladder when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_b: Option<f64>,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_r0")]
    pub r0: f64,
    /// Growth constant; computed against the model when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_tilde: Option<f64>,
}

fn default_sigma() -> f64 {
    2.0
}

fn default_r0() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nonlinearity {
    pub kind: NonlinearityKind,
    pub q: f64,
    pub b_exp: f64,
    pub c_b: f64,
    pub sigma: f64,
    pub r0: f64,
    c_tilde: Option<f64>,
}

/// Upper end of the t-ladders used for sups and trend checks.
pub(crate) const LADDER_TOP: f64 = 1e6;

impl Nonlinearity {
    pub fn from_config(cfg: &NonlinearityConfig) -> Result<Self> {
        if !(cfg.q > 1.0 && cfg.q.is_finite()) {
            return Err(Error::InvalidInput(format!("nonlinearity exponent q = {} must exceed 1", cfg.q)));
        }
        if let NonlinearityKind::SaturatingBump { kappa, m, eps } = cfg.kind {
            if !(kappa >= 0.0 && m > 1.0 && eps >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "saturating bump needs κ ≥ 0, m > 1, ε ≥ 0 (got {kappa}, {m}, {eps})"
                )));
            }
        }
        let b_exp = cfg.b.unwrap_or(cfg.q + 0.5);
        if !(b_exp > 1.0) {
            return Err(Error::InvalidInput(format!("majorant exponent b = {b_exp} must exceed 1")));
        }
        if !(cfg.sigma > 1.0 && cfg.r0 > 0.0) {
            return Err(Error::InvalidInput("σ must exceed 1 and r₀ must be positive".into()));
        }
        let mut nl = Nonlinearity {
            kind: cfg.kind,
            q: cfg.q,
            b_exp,
            c_b: 1.0,
            sigma: cfg.sigma,
            r0: cfg.r0,
            c_tilde: cfg.c_tilde,
        };
        nl.c_b = match cfg.c_b {
            Some(c) => c,
            None => nl.majorant_constant(),
        };
        Ok(nl)
    }

    /// The example nonlinearity with exponent `q_plus` and default constants.
    pub fn power_log(q_plus: f64) -> Self {
        Self::from_config(&NonlinearityConfig {
            kind: NonlinearityKind::PowerLog,
            q: q_plus,
            b: None,
            c_b: None,
            sigma: default_sigma(),
            r0: default_r0(),
            c_tilde: None,
        })
        .expect("valid example")
    }

    pub fn saturating_bump(q_plus: f64, kappa: f64, m: f64, eps: f64) -> Self {
        Self::from_config(&NonlinearityConfig {
            kind: NonlinearityKind::SaturatingBump { kappa, m, eps },
            q: q_plus,
            b: None,
            c_b: None,
            sigma: default_sigma(),
            r0: default_r0(),
            c_tilde: None,
        })
        .expect("valid bump")
    }

    pub fn zero(q_plus: f64) -> Self {
        Self::from_config(&NonlinearityConfig {
            kind: NonlinearityKind::Zero,
            q: q_plus,
            b: None,
            c_b: Some(1.0),
            sigma: default_sigma(),
            r0: default_r0(),
            c_tilde: None,
        })
        .expect("valid zero")
    }

    pub fn to_config(&self) -> NonlinearityConfig {
        NonlinearityConfig {
            kind: self.kind,
            q: self.q,
            b: Some(self.b_exp),
            c_b: Some(self.c_b),
            sigma: self.sigma,
            r0: self.r0,
            c_tilde: self.c_tilde,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self.kind {
            NonlinearityKind::Zero => true,
            NonlinearityKind::SaturatingBump { kappa, eps, .. } => kappa == 0.0 && eps == 0.0,
            NonlinearityKind::PowerLog => false,
        }
    }

    fn power_log_f(q: f64, a: f64) -> f64 {
        if a == 0.0 {
            return 0.0;
        }
        a.powf(q - 1.0) * (a.ln_1p() + a / (q * (1.0 + a)))
    }

    fn power_log_big_f(q: f64, a: f64) -> f64 {
        a.powf(q) * a.ln_1p() / q
    }

    /// `f(t)`, odd in t.
    pub fn f(&self, t: f64) -> f64 {
        let a = t.abs();
        let mag = match self.kind {
            NonlinearityKind::PowerLog => Self::power_log_f(self.q, a),
            NonlinearityKind::SaturatingBump { kappa, m, eps } => {
                let am = a.powf(m);
                let bump = if a == 0.0 { 0.0 } else { kappa * m * am / a / ((1.0 + am) * (1.0 + am)) };
                bump + eps * Self::power_log_f(self.q, a)
            }
            NonlinearityKind::Zero => 0.0,
        };
        mag.copysign(t)
    }

    /// Primitive `F(t) = ∫₀ᵗ f`, even in t.
    pub fn big_f(&self, t: f64) -> f64 {
        let a = t.abs();
        match self.kind {
            NonlinearityKind::PowerLog => Self::power_log_big_f(self.q, a),
            NonlinearityKind::SaturatingBump { kappa, m, eps } => {
                let am = a.powf(m);
                kappa * am / (1.0 + am) + eps * Self::power_log_big_f(self.q, a)
            }
            NonlinearityKind::Zero => 0.0,
        }
    }

    /// `f'(t)` by central differences.
    pub fn df(&self, t: f64) -> f64 {
        let h = 1e-6 * (1.0 + t.abs());
        (self.f(t + h) - self.f(t - h)) / (2.0 * h)
    }

    /// `F̃(t) = f(t)t/q⁺ − F(t)` for a given `q⁺`.
    pub fn f_tilde_with(&self, q_plus: f64, t: f64) -> f64 {
        self.f(t) * t / q_plus - self.big_f(t)
    }

    pub fn f_tilde(&self, t: f64) -> f64 {
        self.f_tilde_with(self.q, t)
    }

    /// Majorant `b(t) = c_b t^{b-1}`.
    pub fn b(&self, t: f64) -> f64 {
        self.c_b * t.abs().powf(self.b_exp - 1.0)
    }

    /// `B(t) = c_b t^b / b`.
    pub fn big_b(&self, t: f64) -> f64 {
        self.c_b * t.abs().powf(self.b_exp) / self.b_exp
    }

    /// `b⁻ = inf b t/B`; equal to `b⁺` for a power majorant.
    pub fn b_minus(&self) -> f64 {
        self.b_exp
    }

    pub fn b_plus(&self) -> f64 {
        self.b_exp
    }

    fn majorant_constant(&self) -> f64 {
        if self.is_zero() {
            return 1.0;
        }
        let ratio = |t: f64| self.f(t).abs() / t.powf(self.b_exp - 1.0);
        let sup = ladder_sup(ratio, 1e-6, LADDER_TOP);
        if sup > 0.0 {
            sup * (1.0 + 1e-6)
        } else {
            1.0
        }
    }

    /// `c̃ = sup_{t ≥ r₀} |f|^σ / (t^{(p⁻-1)σ} F̃)` on a ladder, or the configured value.
    /// `None` when F̃ is not positive on the ladder.
    pub fn c_tilde(&self, p_minus: f64, q_plus: f64) -> Option<f64> {
        if let Some(c) = self.c_tilde {
            return Some(c);
        }
        let top = LADDER_TOP.max(self.r0 * 10.0);
        if geometric_ladder(self.r0, top, 400).into_iter().any(|t| !(self.f_tilde_with(q_plus, t) > 0.0)) {
            return None;
        }
        let ratio = |t: f64| {
            self.f(t).abs().powf(self.sigma) / (t.powf((p_minus - 1.0) * self.sigma) * self.f_tilde_with(q_plus, t))
        };
        let sup = ladder_sup(ratio, self.r0, top);
        Some(sup * (1.0 + 1e-6))
    }
}

/// `[d/p⁻, q⁺/(q⁺ − p⁻ + 1)]`, the σ range quoted for the example nonlinearity.
pub fn sigma_window(d: usize, p_minus: f64, q_plus: f64) -> (f64, f64) {
    (d as f64 / p_minus, q_plus / (q_plus - p_minus + 1.0))
}

/// Sup of a positive function over a geometric ladder, refined by golden section
/// around the best rung.
pub(crate) fn ladder_sup<G: Fn(f64) -> f64>(g: G, lo: f64, hi: f64) -> f64 {
    let lad = geometric_ladder(lo, hi, 1200);
    let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
    for (i, &t) in lad.iter().enumerate() {
        let v = g(t);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let a = lad[best_i.saturating_sub(1)].ln();
    let b = lad[(best_i + 1).min(lad.len() - 1)].ln();
    let (_, refined) = golden_max(|s| g(s.exp()), a, b, 1e-12);
    best.max(refined)
}
