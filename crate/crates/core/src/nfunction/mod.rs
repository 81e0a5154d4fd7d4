//! Evaluation of `h`, `H`, modulars, Luxemburg norms and the convex conjugate.

mod field;
mod norms;

pub use field::{Grid, SampledField};
pub use norms::{luxemburg_by, luxemburg_norm, modular, modular_values, LUX_MAX_ITER};

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::model::DoublePhaseModel;
use crate::numerics::{adaptive_simpson, bisect_increasing, expand_upper, golden_max, SimpsonOptions};

/// How `H` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalMode {
    /// Closed forms wherever the exponents are frozen (always on `[0,1]`,
    /// everywhere for t-independent models), quadrature elsewhere.
    #[default]
    Auto,
    /// Adaptive quadrature of `∫₀ᵗ h` on every call, split at `s = 1`.
    Quadrature,
}

/// Anchored cumulative table of `H(x, 2^k)` for one frozen x.
#[derive(Debug)]
struct HTable {
    anchors: Vec<f64>,
}

const TABLE_DOUBLINGS: usize = 48;

type TableKey = Vec<u64>;

/// The model together with evaluation settings. Immutable once built; the
/// optional cache is shared between clones and safe for concurrent readers.
#[derive(Debug, Clone)]
pub struct NFunctionHandle {
    pub model: DoublePhaseModel,
    pub quad_tol: f64,
    pub mode: EvalMode,
    cache: Option<Arc<RwLock<HashMap<TableKey, Arc<HTable>>>>>,
}

/// A conjugate value and the point where the sup is attained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conjugate {
    pub value: f64,
    pub tau: f64,
}

impl NFunctionHandle {
    pub fn new(model: DoublePhaseModel) -> Self {
        NFunctionHandle { model, quad_tol: 1e-12, mode: EvalMode::Auto, cache: None }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.quad_tol = tol;
        self
    }

    pub fn with_mode(mut self, mode: EvalMode) -> Self {
        self.mode = mode;
        self
    }

    /// Enables per-x tabulation of `H` at the anchors `2^k`.
    pub fn with_cache(mut self) -> Self {
        self.cache = Some(Arc::new(RwLock::new(HashMap::new())));
        self
    }

    pub fn is_cached(&self) -> bool {
        self.cache.is_some()
    }

    pub fn d(&self) -> usize {
        self.model.d
    }

    fn simpson(&self) -> SimpsonOptions {
        SimpsonOptions { rel_tol: self.quad_tol, ..SimpsonOptions::default() }
    }

    /// `h(x,t) = t^{p(x,t)-1} + μ(x) t^{q(x,t)-1}` for `t ≥ 0`.
    #[inline]
    pub fn h(&self, x: &[f64], t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let m = &self.model;
        let mu = m.mu_at(x);
        let p = m.p.eval(x, t);
        let mut v = t.powf(p - 1.0);
        if mu != 0.0 {
            v += mu * t.powf(m.q.eval(x, t) - 1.0);
        }
        v
    }

    /// `∂h/∂t`, exact including the t-dependence of the exponents.
    pub fn h_prime(&self, x: &[f64], t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let m = &self.model;
        let term = |e: &crate::model::ExponentField| {
            let p = e.eval(x, t);
            t.powf(p - 1.0) * ((p - 1.0) / t + e.t_derivative(t) * t.ln())
        };
        let mut v = term(&m.p);
        let mu = m.mu_at(x);
        if mu != 0.0 {
            v += mu * term(&m.q);
        }
        v
    }

    /// Closed form valid where both exponents are frozen at their t = 1 values.
    #[inline]
    fn frozen(&self, x: &[f64], t: f64) -> f64 {
        let m = &self.model;
        let p = m.p.eval(x, 1.0);
        let q = m.q.eval(x, 1.0);
        let mu = m.mu_at(x);
        let mut v = t.powf(p) / p;
        if mu != 0.0 {
            v += mu * t.powf(q) / q;
        }
        v
    }

    fn integrate(&self, x: &[f64], a: f64, b: f64) -> Result<f64> {
        let q = adaptive_simpson(|s| self.h(x, s), a, b, self.simpson())?;
        Ok(q.value)
    }

    /// `H(x,t) = ∫₀ᵗ h(x,s) ds`.
    pub fn big_h(&self, x: &[f64], t: f64) -> Result<f64> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeArgument(t));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        match self.mode {
            EvalMode::Quadrature => {
                let lo = self.integrate(x, 0.0, t.min(1.0))?;
                if t <= 1.0 {
                    Ok(lo)
                } else {
                    Ok(lo + self.integrate(x, 1.0, t)?)
                }
            }
            EvalMode::Auto => {
                if t <= 1.0 || self.model.is_t_independent() {
                    return Ok(self.frozen(x, t));
                }
                match &self.cache {
                    Some(_) => self.cached(x, t),
                    None => Ok(self.frozen(x, 1.0) + self.integrate(x, 1.0, t)?),
                }
            }
        }
    }

    fn key(&self, x: &[f64]) -> TableKey {
        if self.model.is_x_independent() {
            Vec::new()
        } else {
            x.iter().map(|v| v.to_bits()).collect()
        }
    }

    fn table(&self, x: &[f64]) -> Result<Arc<HTable>> {
        let cache = self.cache.as_ref().expect("cache enabled");
        let key = self.key(x);
        if let Some(t) = cache.read().expect("cache lock").get(&key) {
            return Ok(t.clone());
        }
        let mut anchors = Vec::with_capacity(TABLE_DOUBLINGS + 1);
        let mut acc = self.frozen(x, 1.0);
        anchors.push(acc);
        let mut a = 1.0;
        for _ in 0..TABLE_DOUBLINGS {
            acc += self.integrate(x, a, 2.0 * a)?;
            anchors.push(acc);
            a *= 2.0;
        }
        let table = Arc::new(HTable { anchors });
        cache.write().expect("cache lock").entry(key).or_insert_with(|| table.clone());
        Ok(table)
    }

    fn cached(&self, x: &[f64], t: f64) -> Result<f64> {
        let table = self.table(x)?;
        let k = (t.log2().floor() as usize).min(TABLE_DOUBLINGS);
        let a = 2f64.powi(k as i32);
        Ok(table.anchors[k] + self.integrate(x, a, t)?)
    }

    /// `τ` with `h(x,τ) = s`.
    pub fn h_inverse(&self, x: &[f64], s: f64) -> Result<f64> {
        if s <= 0.0 {
            return Ok(0.0);
        }
        let hi = expand_upper(|t| self.h(x, t), s, 1.0, 1100)?;
        let lo = if hi > 1.0 { hi / 2.0 } else { 0.0 };
        Ok(bisect_increasing(|t| self.h(x, t), s, lo, hi, 1e-16, 200))
    }

    /// `H̃(x,s) = sup_τ (sτ − H(x,τ))` through the slope equation `h(x,τ) = s`.
    pub fn conjugate(&self, x: &[f64], s: f64) -> Result<Conjugate> {
        if s < 0.0 || s.is_nan() {
            return Err(Error::NegativeArgument(s));
        }
        if s == 0.0 {
            return Ok(Conjugate { value: 0.0, tau: 0.0 });
        }
        let tau = self.h_inverse(x, s)?;
        let value = s * tau - self.big_h(x, tau)?;
        Ok(Conjugate { value: value.max(0.0), tau })
    }

    /// `H(x,τ) + H̃(x,σ) − τσ`, nonnegative by Young's inequality.
    pub fn young_gap(&self, x: &[f64], tau: f64, sigma: f64) -> Result<f64> {
        Ok(self.big_h(x, tau)? + self.conjugate(x, sigma)?.value - tau * sigma)
    }

    /// `sup_s (s t − H̃(x,s))` by golden section; reproduces `H` for convex `H`.
    pub fn double_conjugate(&self, x: &[f64], t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        let upper = 2.0 * self.h(x, 2.0 * t) + 1.0;
        let failure = std::cell::RefCell::new(None);
        let (_, best) = golden_max(
            |s| match self.conjugate(x, s) {
                Ok(c) => s * t - c.value,
                Err(e) => {
                    *failure.borrow_mut() = Some(e);
                    f64::NEG_INFINITY
                }
            },
            0.0,
            upper,
            1e-13,
        );
        match failure.into_inner() {
            Some(e) => Err(e),
            None => Ok(best),
        }
    }

    /// `h̃(x,s)` by central differences of the conjugate.
    pub fn conjugate_derivative(&self, x: &[f64], s: f64) -> Result<f64> {
        let step = 1e-5 * s.max(1e-8);
        let up = self.conjugate(x, s + step)?.value;
        let down = self.conjugate(x, (s - step).max(0.0))?.value;
        Ok((up - down) / (s + step - (s - step).max(0.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_model, Potential};

    fn worked() -> NFunctionHandle {
        NFunctionHandle::new(make_model("constant", &[3.0, 2.0, 2.5, 1.0, 1.0, 1.0]).unwrap())
    }

    fn pure_p2() -> NFunctionHandle {
        NFunctionHandle::new(DoublePhaseModel::constant(3, 2.0, 2.5, 0.0, Potential::Constant { v0: 1.0 }).unwrap())
    }

    const X: [f64; 3] = [0.0, 0.0, 0.0];

    #[test]
    fn closed_form_values() {
        for hd in [worked(), worked().with_mode(EvalMode::Quadrature)] {
            assert!((hd.big_h(&X, 1.0).unwrap() - 0.9).abs() < 1e-12);
            assert!((hd.big_h(&X, 2.0).unwrap() - (2.0 + 4.0 * 2f64.sqrt() / 2.5)).abs() < 1e-11);
            assert_eq!(hd.big_h(&X, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn negative_argument_rejected() {
        assert_eq!(worked().big_h(&X, -1.0), Err(Error::NegativeArgument(-1.0)));
    }

    #[test]
    fn conjugate_examples() {
        let c = pure_p2().conjugate(&X, 1.0).unwrap();
        assert!((c.value - 0.5).abs() < 1e-12);
        let w = worked();
        let c = w.conjugate(&X, 2.0).unwrap();
        assert!((c.tau - 1.0).abs() < 1e-12);
        assert!((c.value - 1.1).abs() < 1e-12);
        assert_eq!(w.conjugate(&X, 0.0).unwrap().value, 0.0);
    }

    #[test]
    fn young_gap_examples() {
        let w = worked();
        assert!(w.young_gap(&X, 1.0, w.h(&X, 1.0)).unwrap().abs() < 1e-12);
        assert_eq!(w.young_gap(&X, 0.0, 0.0).unwrap(), 0.0);
        assert!((pure_p2().young_gap(&X, 1.0, 2.0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cached_and_direct_paths_agree() {
        let m = make_model("log_saturating_modulated", &[3.0, 2.0, 0.05, 0.1, 2.3, 0.05, 0.1, 1.0, 1.0, 1.0]).unwrap();
        let direct = NFunctionHandle::new(m.clone());
        let cached = NFunctionHandle::new(m).with_cache();
        let x = [0.4, -1.0, 0.2];
        for t in [0.3, 1.0, 1.5, 3.7, 17.0, 250.0, 1e5] {
            let a = direct.big_h(&x, t).unwrap();
            let b = cached.big_h(&x, t).unwrap();
            assert!((a - b).abs() <= 1e-10 * a, "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn h_prime_matches_differences() {
        let m = make_model("log_saturating", &[3.0, 2.0, 0.2, 2.3, 0.2, 1.0, 1.0, 1.0]).unwrap();
        let hd = NFunctionHandle::new(m);
        for t in [0.5, 2.0, 9.0] {
            let e = 1e-6 * t;
            let fd = (hd.h(&X, t + e) - hd.h(&X, t - e)) / (2.0 * e);
            assert!((fd - hd.h_prime(&X, t)).abs() < 1e-6 * fd.abs());
        }
    }
}
