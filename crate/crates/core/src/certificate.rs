//! Explicit constants of the two-solution theorem and admissibility of `(λ, η, r)`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{orlicz_norm, weighted_sobolev_norm};
use crate::error::{Error, Result};
use crate::model::{DoublePhaseModel, Nonlinearity};
use crate::nfunction::{Grid, NFunctionHandle, SampledField};
use crate::numerics::{ball_volume, cube_to_ball, geometric_ladder, halton};
use crate::record::Provenance;

/// Points used to sample `F ≥ 0` on `[0, η]`.
pub const H1_SAMPLES: usize = 256;
/// Quasi-random samples for the sup of `V` over the ball.
pub const V_SAMPLES: u64 = 10_000;

/// The embedding constant `γ` of `W^{1,H}_V ↪ L^B` and where it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gamma {
    pub value: f64,
    pub provenance: Provenance,
}

impl Gamma {
    pub fn user(value: f64) -> Self {
        Gamma { value, provenance: Provenance::UserSupplied }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub x0: Vec<f64>,
    pub radius: f64,
    pub eta: f64,
    pub r: f64,
    pub p_minus: f64,
    pub q_plus: f64,
    pub b_minus: f64,
    pub b_plus: f64,
    pub mu_sup: f64,
    pub omega_r: f64,
    pub v_inf: f64,
    pub delta: f64,
    /// `∫_{B(x₀,R/2)} F(x,η) dx`.
    pub half_ball_integral: f64,
    pub alpha_r: f64,
    pub beta_eta: f64,
    pub gamma: Gamma,
    pub gamma_bar: f64,
    pub cond_318: bool,
    pub cond_h1: bool,
    pub cond_h2: bool,
    /// `[1/β(η), 1/α(r)]` when it is a nonempty interval.
    pub lambda: Option<[f64; 2]>,
    /// All of (318), (H₁) and (H₂) hold.
    pub admissible: bool,
}

impl Certificate {
    /// `max{η^{p⁻}, η^{q⁺}}`.
    pub fn eta_power(&self) -> f64 {
        self.eta.powf(self.p_minus).max(self.eta.powf(self.q_plus))
    }

    /// Upper bound `(1/δ)·max{η^{p⁻}, η^{q⁺}}` on the modular of the cone profile.
    pub fn rho_bound(&self) -> f64 {
        self.eta_power() / self.delta
    }

    /// Human-readable table.
    pub fn table(&self) -> String {
        let interval = match self.lambda {
            Some([a, b]) => format!("[{a:.6e}, {b:.6e}]"),
            None => "empty".into(),
        };
        let rows = [
            ("omega_R", format!("{:.10}", self.omega_r)),
            ("V_inf", format!("{:.10}", self.v_inf)),
            ("delta", format!("{:.10}", self.delta)),
            ("alpha(r)", format!("{:.10}", self.alpha_r)),
            ("beta(eta)", format!("{:.10}", self.beta_eta)),
            ("gamma_bar", format!("{:.6} ({:?})", self.gamma_bar, self.gamma.provenance)),
            ("(318)", self.cond_318.to_string()),
            ("(H1)", self.cond_h1.to_string()),
            ("(H2)", self.cond_h2.to_string()),
            ("Lambda", interval),
            ("admissible", self.admissible.to_string()),
        ];
        rows.iter().map(|(k, v)| format!("{k:<12}{v}\n")).collect()
    }
}

/// Quantities of a certificate that do not depend on `(η, r)`.
#[derive(Debug, Clone)]
pub struct CertificateContext {
    pub model: DoublePhaseModel,
    pub nl: Nonlinearity,
    pub x0: Vec<f64>,
    pub radius: f64,
    pub gamma: Gamma,
    pub omega_r: f64,
    pub v_inf: f64,
    pub delta: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be positive and finite, got {v}")))
    }
}

/// `sup_{B(x₀,R)} V` from Halton samples refined by coordinate ascent from the best ten.
pub fn sup_potential(model: &DoublePhaseModel, x0: &[f64], radius: f64) -> f64 {
    let d = model.d;
    let inside = |x: &[f64]| x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= radius * radius;
    let mut samples: Vec<(f64, Vec<f64>)> = (0..V_SAMPLES)
        .map(|i| {
            let x: Vec<f64> = cube_to_ball(&halton(i, d), radius).iter().zip(x0).map(|(a, b)| a + b).collect();
            (model.v(&x), x)
        })
        .collect();
    samples.push((model.v(x0), x0.to_vec()));
    samples.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = samples[0].0;
    for (mut val, mut x) in samples.into_iter().take(10) {
        let mut step = radius / 10.0;
        while step > 1e-12 * radius {
            let mut moved = false;
            for k in 0..d {
                for sign in [1.0, -1.0] {
                    let mut y = x.clone();
                    y[k] += sign * step;
                    if inside(&y) {
                        let vy = model.v(&y);
                        if vy > val {
                            val = vy;
                            x = y;
                            moved = true;
                        }
                    }
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        best = best.max(val);
    }
    best
}

impl CertificateContext {
    pub fn new(model: &DoublePhaseModel, nl: &Nonlinearity, x0: &[f64], radius: f64, gamma: Gamma) -> Result<Self> {
        model.admissible()?;
        positive("R", radius)?;
        positive("gamma", gamma.value)?;
        if x0.len() != model.d {
            return Err(Error::DimensionMismatch { grid: x0.len(), model: model.d });
        }
        if !(nl.b_exp > 1.0) || !(nl.c_b > 0.0) {
            return Err(Error::Inadmissible(format!("nonlinearity majorant b = {}, c_b = {}", nl.b_exp, nl.c_b)));
        }
        let omega_r = ball_volume(model.d, radius);
        let v_inf = sup_potential(model, x0, radius);
        let (pm, qp) = (model.p_minus(), model.q_plus());
        let d = model.d as f64;
        let rmin = radius.powf(pm).min(radius.powf(qp));
        let delta = pm * rmin
            / (1f64.max(model.mu_sup()) * omega_r * (v_inf * rmin + 2f64.powf(qp + 1.0 - d) * (2f64.powf(d) - 1.0)));
        Ok(CertificateContext { model: model.clone(), nl: nl.clone(), x0: x0.to_vec(), radius, gamma, omega_r, v_inf, delta })
    }

    pub fn gamma_bar(&self) -> f64 {
        let g = self.gamma.value;
        g.powf(self.nl.b_plus()).max(g.powf(self.nl.b_minus()))
    }

    /// `α(r) = γ̄ max{(q⁺r)^{b⁺/p⁻}, (q⁺r)^{b⁻/q⁺}} / r`.
    pub fn alpha(&self, r: f64) -> f64 {
        let (pm, qp) = (self.model.p_minus(), self.model.q_plus());
        let base = qp * r;
        self.gamma_bar() * base.powf(self.nl.b_plus() / pm).max(base.powf(self.nl.b_minus() / qp)) / r
    }

    /// `∫_{B(x₀,R/2)} F(x,η)`; catalog nonlinearities do not depend on x.
    pub fn half_ball_integral(&self, eta: f64) -> f64 {
        self.nl.big_f(eta) * ball_volume(self.model.d, 0.5 * self.radius)
    }

    /// `β(η) = δ ∫_{B(x₀,R/2)} F(x,η) / max{η^{p⁻}, η^{q⁺}}`.
    pub fn beta(&self, eta: f64) -> f64 {
        let (pm, qp) = (self.model.p_minus(), self.model.q_plus());
        self.delta * self.half_ball_integral(eta) / eta.powf(pm).max(eta.powf(qp))
    }

    /// `F(t) ≥ 0` on 256 points of `[0, η]`.
    pub fn h1(&self, eta: f64) -> bool {
        (0..H1_SAMPLES).all(|i| self.nl.big_f(eta * i as f64 / (H1_SAMPLES - 1) as f64) >= 0.0)
    }

    pub fn at(&self, eta: f64, r: f64) -> Result<Certificate> {
        positive("eta", eta)?;
        positive("r", r)?;
        let (pm, qp) = (self.model.p_minus(), self.model.q_plus());
        let alpha_r = self.alpha(r);
        let beta_eta = self.beta(eta);
        let cond_318 = eta.powf(pm).max(eta.powf(qp)) < self.delta * r;
        let cond_h1 = self.h1(eta);
        let cond_h2 = alpha_r < beta_eta;
        let lambda = (cond_h2 && alpha_r > 0.0).then(|| [1.0 / beta_eta, 1.0 / alpha_r]);
        Ok(Certificate {
            x0: self.x0.clone(),
            radius: self.radius,
            eta,
            r,
            p_minus: pm,
            q_plus: qp,
            b_minus: self.nl.b_minus(),
            b_plus: self.nl.b_plus(),
            mu_sup: self.model.mu_sup(),
            omega_r: self.omega_r,
            v_inf: self.v_inf,
            delta: self.delta,
            half_ball_integral: self.half_ball_integral(eta),
            alpha_r,
            beta_eta,
            gamma: self.gamma,
            gamma_bar: self.gamma_bar(),
            cond_318,
            cond_h1,
            cond_h2,
            lambda,
            admissible: cond_318 && cond_h1 && cond_h2,
        })
    }
}

pub fn compute_certificate(
    model: &DoublePhaseModel,
    nl: &Nonlinearity,
    x0: &[f64],
    radius: f64,
    eta: f64,
    r: f64,
    gamma: Gamma,
) -> Result<Certificate> {
    CertificateContext::new(model, nl, x0, radius, gamma)?.at(eta, r)
}

/// Logarithmic search box over `(η, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchBox {
    pub eta: (f64, f64),
    pub r: (f64, f64),
    pub n_eta: usize,
    pub n_r: usize,
}

impl Default for SearchBox {
    fn default() -> Self {
        SearchBox { eta: (1e-2, 1e2), r: (1e-1, 1e4), n_eta: 64, n_r: 64 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum SearchOutcome {
    /// The cell maximizing `β(η) − α(r)` among cells where every hypothesis holds.
    Feasible { best: Certificate },
    /// `min_gap` is the least `α(r) − β(η)` over cells satisfying (318) and (H₁)
    /// (`None` when no cell does); `least_violated` is the cell attaining it, or the
    /// cell closest to satisfying (318).
    Infeasible { least_violated: Certificate, min_gap: Option<f64> },
}

/// Grid search over the box. Cells are evaluated in parallel and reduced in index order.
pub fn feasibility_search(
    model: &DoublePhaseModel,
    nl: &Nonlinearity,
    x0: &[f64],
    radius: f64,
    gamma: Gamma,
    bx: &SearchBox,
) -> Result<SearchOutcome> {
    for v in [bx.eta.0, bx.eta.1, bx.r.0, bx.r.1] {
        positive("search bound", v)?;
    }
    if bx.n_eta == 0 || bx.n_r == 0 {
        return Err(Error::InvalidInput("search grid needs at least one cell per axis".into()));
    }
    let ctx = CertificateContext::new(model, nl, x0, radius, gamma)?;
    let etas = geometric_ladder(bx.eta.0, bx.eta.1, bx.n_eta);
    let rs = geometric_ladder(bx.r.0, bx.r.1, bx.n_r);
    let cells: Vec<Certificate> = (0..etas.len() * rs.len())
        .into_par_iter()
        .map(|k| ctx.at(etas[k / rs.len()], rs[k % rs.len()]))
        .collect::<Result<_>>()?;
    let margin = |c: &Certificate| c.beta_eta - c.alpha_r;
    let pick = |it: &mut dyn Iterator<Item = &Certificate>, key: &dyn Fn(&Certificate) -> f64| -> Option<Certificate> {
        let mut best: Option<&Certificate> = None;
        for c in it {
            if best.is_none_or(|b| key(c) > key(b)) {
                best = Some(c);
            }
        }
        best.cloned()
    };
    if let Some(best) = pick(&mut cells.iter().filter(|c| c.admissible), &margin) {
        return Ok(SearchOutcome::Feasible { best });
    }
    if let Some(c) = pick(&mut cells.iter().filter(|c| c.cond_318 && c.cond_h1), &margin) {
        let gap = c.alpha_r - c.beta_eta;
        return Ok(SearchOutcome::Infeasible { least_violated: c, min_gap: Some(gap) });
    }
    let slack = |c: &Certificate| c.delta * c.r - c.eta_power();
    let c = pick(&mut cells.iter(), &slack).expect("nonempty grid");
    Ok(SearchOutcome::Infeasible { least_violated: c, min_gap: None })
}

/// Largest `‖u‖_{L^B} / ‖u‖_{W^{1,H}_V}` over the given fields: a lower bound on `γ`.
pub fn gamma_lower_bound(handle: &NFunctionHandle, nl: &Nonlinearity, members: &[SampledField]) -> Result<Gamma> {
    if members.is_empty() {
        return Err(Error::InvalidInput("family is empty".into()));
    }
    let ratios: Vec<f64> = members
        .par_iter()
        .map(|u| {
            let w = weighted_sobolev_norm(handle, u)?;
            if w == 0.0 {
                return Ok(0.0);
            }
            Ok(orlicz_norm(u, |_, t| Ok(nl.big_b(t)))? / w)
        })
        .collect::<Result<_>>()?;
    let value = ratios.into_iter().fold(0.0, f64::max);
    Ok(Gamma { value, provenance: Provenance::EstimatedLowerBound })
}

/// Cells per axis of the box grid used for off-origin centres.
fn box_cells(d: usize) -> usize {
    (2e5f64.powf(1.0 / d as f64).floor() as usize).max(8)
}

/// The cone `ũ`: `η` on `B(x₀,R/2)`, `(2η/R)(R − |x−x₀|)` on the annulus, 0 outside,
/// with gradient magnitude `2η/R` on the annulus. Sampled on 1024 shells when `x₀ = 0`
/// and on a cell-centred box over `B(x₀,R)` otherwise.
pub fn tilde_u_profile(d: usize, eta: f64, radius: f64, x0: &[f64]) -> Result<SampledField> {
    positive("eta", eta)?;
    positive("R", radius)?;
    if x0.len() != d {
        return Err(Error::DimensionMismatch { grid: x0.len(), model: d });
    }
    let grid = if x0.iter().all(|v| *v == 0.0) {
        Grid::radial(d, radius, 1024)
    } else {
        let lo: Vec<f64> = x0.iter().map(|c| c - radius).collect();
        let hi: Vec<f64> = x0.iter().map(|c| c + radius).collect();
        Grid::box_grid(&lo, &hi, 2.0 * radius / box_cells(d) as f64)?
    };
    let c = x0.to_vec();
    let c2 = c.clone();
    let dist = |x: &[f64], c: &[f64]| x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    Ok(SampledField::from_fn(
        Arc::new(grid),
        move |x| {
            let s = dist(x, &c);
            if s <= 0.5 * radius {
                eta
            } else if s < radius {
                2.0 * eta / radius * (radius - s)
            } else {
                0.0
            }
        },
        Some(move |x: &[f64]| {
            let s = dist(x, &c2);
            if s > 0.5 * radius && s <= radius {
                2.0 * eta / radius
            } else {
                0.0
            }
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::combined_modular;
    use crate::model::{make_model, Potential};

    fn worked() -> DoublePhaseModel {
        make_model("constant", &[3.0, 2.0, 2.5, 1.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn worked_constants() {
        let nl = Nonlinearity::power_log(2.5);
        let c = compute_certificate(&worked(), &nl, &[0.0; 3], 1.0, 1.0, 25.0, Gamma::user(1.0)).unwrap();
        let pi = std::f64::consts::PI;
        assert!((c.omega_r - 4.0 * pi / 3.0).abs() < 1e-13);
        assert!((c.v_inf - 2.0).abs() < 1e-10);
        let delta = 2.0 / (4.0 * pi / 3.0 * (2.0 + 7.0 * 2f64.sqrt()));
        assert!((c.delta - delta).abs() < 1e-12 * delta);
        assert!((c.delta - 0.04012479788588761).abs() < 1e-15);
        assert!((c.alpha_r - 62.5f64.powf(1.5) / 25.0).abs() < 1e-10);
        assert!((c.alpha_r - 19.76).abs() < 5e-3);
        assert!((c.beta_eta - delta * 0.4 * 2f64.ln() * pi / 6.0).abs() < 1e-12);
        assert!((c.beta_eta - 0.00583).abs() < 5e-6);
        assert!(!c.cond_h2 && c.lambda.is_none() && !c.admissible);
    }

    #[test]
    fn condition_318_fails_for_large_eta() {
        let nl = Nonlinearity::power_log(2.5);
        let ctx = CertificateContext::new(&worked(), &nl, &[0.0; 3], 1.0, Gamma::user(1.0)).unwrap();
        let r = 2.0;
        // δr < 1, so the binding power is η^{p⁻}
        let edge = (ctx.delta * r).sqrt();
        assert!(!ctx.at(edge * 1.01, r).unwrap().cond_318);
        assert!(ctx.at(edge * 0.99, r).unwrap().cond_318);
    }

    #[test]
    fn worked_search_is_infeasible() {
        let nl = Nonlinearity::power_log(2.5);
        let out = feasibility_search(&worked(), &nl, &[0.0; 3], 1.0, Gamma::user(1.0), &SearchBox::default()).unwrap();
        match out {
            SearchOutcome::Infeasible { min_gap, .. } => assert!(min_gap.unwrap() > 0.0),
            SearchOutcome::Feasible { .. } => panic!("expected infeasible"),
        }
        let zero = feasibility_search(&worked(), &Nonlinearity::zero(2.5), &[0.0; 3], 1.0, Gamma::user(1.0), &SearchBox::default()).unwrap();
        assert!(matches!(zero, SearchOutcome::Infeasible { .. }));
    }

    #[test]
    fn alpha_is_linear_in_gamma_bar() {
        let nl = Nonlinearity::power_log(2.5);
        let a = compute_certificate(&worked(), &nl, &[0.0; 3], 1.0, 1.0, 25.0, Gamma::user(1.0)).unwrap();
        let g = 0.1f64.powf(1.0 / 3.0);
        let b = compute_certificate(&worked(), &nl, &[0.0; 3], 1.0, 1.0, 25.0, Gamma::user(g)).unwrap();
        assert!((a.alpha_r / b.alpha_r - 10.0).abs() < 1e-10);
        assert_eq!(a.beta_eta, b.beta_eta);
    }

    #[test]
    fn cone_profile_shape() {
        let u = tilde_u_profile(3, 0.7, 2.0, &[0.0; 3]).unwrap();
        let at = |r: f64| u.values[(r / 2.0 * 1024.0).round() as usize];
        assert!((at(1.0) - 0.7).abs() < 1e-15);
        assert_eq!(at(2.0), 0.0);
        assert!((at(1.5) - 0.35).abs() < 1e-12);
    }

    #[test]
    fn cone_modular_respects_bound() {
        let model = worked();
        let nl = Nonlinearity::power_log(2.5);
        let h = NFunctionHandle::new(model.clone());
        for (eta, x0) in [(0.05, vec![0.0; 3]), (0.9, vec![0.0; 3]), (0.3, vec![0.5, -0.2, 0.1])] {
            let c = compute_certificate(&model, &nl, &x0, 1.0, eta, 1.0, Gamma::user(1.0)).unwrap();
            let u = tilde_u_profile(3, eta, 1.0, &x0).unwrap();
            let rho = combined_modular(&h, &u).unwrap();
            assert!(rho > 0.0 && rho <= c.rho_bound(), "{rho} {}", c.rho_bound());
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let nl = Nonlinearity::power_log(2.5);
        assert!(compute_certificate(&worked(), &nl, &[0.0; 3], -1.0, 1.0, 1.0, Gamma::user(1.0)).is_err());
        assert!(compute_certificate(&worked(), &nl, &[0.0; 2], 1.0, 1.0, 1.0, Gamma::user(1.0)).is_err());
        let bad = DoublePhaseModel::constant(3, 2.0, 3.0, 1.0, Potential::Constant { v0: 1.0 });
        assert!(bad.is_err());
    }

    #[test]
    fn gamma_bound_of_singleton_and_scaling() {
        let h = NFunctionHandle::new(worked());
        let nl = Nonlinearity::power_log(2.5);
        let g = Arc::new(Grid::radial(3, 2.0, 128));
        let u = SampledField::from_fn(g, |x| crate::embedding::bump(x[0]), Some(|x: &[f64]| crate::embedding::bump_slope(x[0])));
        let one = gamma_lower_bound(&h, &nl, std::slice::from_ref(&u)).unwrap();
        assert!(one.value > 0.0);
        assert_eq!(one.provenance, Provenance::EstimatedLowerBound);
        let two = gamma_lower_bound(&h, &nl, &[u.clone(), u.scaled(3.0)]).unwrap();
        assert!((two.value - one.value).abs() < 1e-8 * one.value);
    }
}
