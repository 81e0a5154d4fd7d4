//! The Sobolev conjugate `H_*(x,t) = H°(x, N⁻¹(x,t))` with
//! `N(x,t) = (∫₀ᵗ (τ/H°(x,τ))^{1/(d-1)} dτ)^{(d-1)/d}`, where `H°` equals `H`
//! for `t ≥ 1` and the limit profile `H_∞(t) = t^{p_∞}/p_∞ + μ_∞ t^{q_∞}/q_∞` below 1.

mod companion;

pub use companion::{companion_check, CompanionFunction, CompanionGrid, CompanionKind, CompanionReport};

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::model::Asymptotics;
use crate::nfunction::NFunctionHandle;
use crate::numerics::{adaptive_simpson, MonotoneCubic, SimpsonOptions};

/// Nodes per decade of the N tabulation.
pub const NODES_PER_DECADE: usize = 512;
const TABLE_LO_EXP: i32 = -6;
const TABLE_HI_EXP: i32 = 6;
const MAX_HI_EXP: i32 = 300;

#[derive(Debug)]
struct NTable {
    t: Vec<f64>,
    /// `∫₀ᵗ (τ/H°)^{1/(d-1)}` at the nodes.
    integral: Vec<f64>,
    /// `ln N` as a monotone cubic in `ln t` with exact end slopes.
    interp: MonotoneCubic,
}

impl NTable {
    fn t_lo(&self) -> f64 {
        self.t[0]
    }
    fn t_hi(&self) -> f64 {
        *self.t.last().unwrap()
    }
}

/// Builds `N`, `N⁻¹` and `H_*` on top of an N-function handle.
#[derive(Debug, Clone)]
pub struct SobolevConjugateHandle {
    pub base: NFunctionHandle,
    /// Relative tolerance of inversion round trips.
    pub tol: f64,
    asym: Asymptotics,
    tables: Arc<RwLock<HashMap<Vec<u64>, Arc<NTable>>>>,
}

impl SobolevConjugateHandle {
    pub fn new(base: NFunctionHandle) -> Self {
        let asym = base.model.asymptotics();
        SobolevConjugateHandle { base, tol: 1e-7, asym, tables: Arc::new(RwLock::new(HashMap::new())) }
    }

    fn d(&self) -> f64 {
        self.base.d() as f64
    }

    pub fn asymptotics(&self) -> Asymptotics {
        self.asym
    }

    /// `H_∞(t)`.
    pub fn h_infinity(&self, t: f64) -> f64 {
        let a = &self.asym;
        t.powf(a.p_inf) / a.p_inf + a.mu_inf * t.powf(a.q_inf) / a.q_inf
    }

    /// `H°(x,t)`.
    pub fn h_circ(&self, x: &[f64], t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeArgument(t));
        }
        if t >= 1.0 {
            self.base.big_h(x, t)
        } else {
            Ok(self.h_infinity(t))
        }
    }

    /// `h°(x,t)`, the t-derivative of `H°`.
    pub fn h_circ_density(&self, x: &[f64], t: f64) -> f64 {
        if t >= 1.0 {
            self.base.h(x, t)
        } else if t <= 0.0 {
            0.0
        } else {
            let a = &self.asym;
            t.powf(a.p_inf - 1.0) + a.mu_inf * t.powf(a.q_inf - 1.0)
        }
    }

    /// Exponent `β = 1/(1 − α)`, `α = (p_∞ − 1)/(d − 1)`, of the substitution
    /// `τ = s^β` that removes the integrable singularity at 0.
    fn beta(&self) -> f64 {
        let alpha = (self.asym.p_inf - 1.0) / (self.d() - 1.0);
        1.0 / (1.0 - alpha)
    }

    /// `(τ/H°)^{1/(d-1)}` for `τ ≥ 1`.
    fn integrand_upper(&self, x: &[f64], tau: f64) -> f64 {
        let hv = self.base.big_h(x, tau).expect("H converges");
        (tau / hv).powf(1.0 / (self.d() - 1.0))
    }

    /// Substituted integrand on `[0,1]`: `β (τ^{p_∞}/H_∞(τ))^{1/(d-1)}` at `τ = s^β`.
    fn integrand_lower(&self, s: f64) -> f64 {
        let beta = self.beta();
        let a = &self.asym;
        let tau = s.powf(beta);
        let scaled = 1.0 / a.p_inf + a.mu_inf * tau.powf(a.q_inf - a.p_inf) / a.q_inf;
        beta * (1.0 / scaled).powf(1.0 / (self.d() - 1.0))
    }

    fn opts(&self) -> SimpsonOptions {
        SimpsonOptions { rel_tol: 1e-13, abs_floor: 1e-300, ..SimpsonOptions::default() }
    }

    /// `∫_a^b (τ/H°)^{1/(d-1)} dτ` for `0 ≤ a ≤ b`, split at 1.
    fn integral_between(&self, x: &[f64], a: f64, b: f64) -> Result<f64> {
        let mut total = 0.0;
        if a < 1.0 {
            let hi = b.min(1.0);
            let beta = self.beta();
            let q = adaptive_simpson(|s| self.integrand_lower(s), a.powf(1.0 / beta), hi.powf(1.0 / beta), self.opts())?;
            total += q.value;
        }
        if b > 1.0 {
            let lo = a.max(1.0);
            let q = adaptive_simpson(|t| self.integrand_upper(x, t), lo, b, self.opts())?;
            total += q.value;
        }
        Ok(total)
    }

    fn n_from_integral(&self, i: f64) -> f64 {
        i.powf((self.d() - 1.0) / self.d())
    }

    /// `N(x,t)` by direct quadrature, without the table.
    pub fn eval_n_direct(&self, x: &[f64], t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeArgument(t));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        Ok(self.n_from_integral(self.integral_between(x, 0.0, t)?))
    }

    fn key(&self, x: &[f64]) -> Vec<u64> {
        if self.base.model.is_x_independent() {
            Vec::new()
        } else {
            x.iter().map(|v| v.to_bits()).collect()
        }
    }

    fn node(k: usize) -> f64 {
        10f64.powf(TABLE_LO_EXP as f64 + k as f64 / NODES_PER_DECADE as f64)
    }

    fn build(&self, x: &[f64], prev: Option<&NTable>, hi_exp: i32) -> Result<NTable> {
        let n_nodes = ((hi_exp - TABLE_LO_EXP) as usize) * NODES_PER_DECADE + 1;
        let (mut t, mut integral) = match prev {
            Some(p) => (p.t.clone(), p.integral.clone()),
            None => {
                let t0 = Self::node(0);
                (vec![t0], vec![self.integral_between(x, 0.0, t0)?])
            }
        };
        for k in t.len()..n_nodes {
            let tk = Self::node(k);
            let inc = self.integral_between(x, t[k - 1], tk)?;
            integral.push(integral[k - 1] + inc);
            t.push(tk);
        }
        let d = self.d();
        let log_t: Vec<f64> = t.iter().map(|v| v.ln()).collect();
        let log_n: Vec<f64> = integral.iter().map(|i| self.n_from_integral(*i).ln()).collect();
        let slopes: Vec<f64> = t
            .iter()
            .zip(&integral)
            .map(|(&tk, &ik)| {
                let g = (tk / self.h_circ(x, tk).expect("H converges")).powf(1.0 / (d - 1.0));
                (d - 1.0) / d * tk * g / ik
            })
            .collect();
        let interp = MonotoneCubic::with_slopes(log_t, log_n, slopes)?;
        Ok(NTable { t, integral, interp })
    }

    fn table_covering(&self, x: &[f64], t: f64) -> Result<Arc<NTable>> {
        let key = self.key(x);
        if let Some(tab) = self.tables.read().expect("table lock").get(&key) {
            if t <= tab.t_hi() {
                return Ok(tab.clone());
            }
        }
        let mut guard = self.tables.write().expect("table lock");
        let current = guard.get(&key).cloned();
        if let Some(tab) = &current {
            if t <= tab.t_hi() {
                return Ok(tab.clone());
            }
        }
        let mut hi_exp = TABLE_HI_EXP;
        while 10f64.powi(hi_exp) < t {
            hi_exp += 3;
            if hi_exp > MAX_HI_EXP {
                return Err(Error::BracketFailure { lo: 0.0, hi: t });
            }
        }
        let table = Arc::new(self.build(x, current.as_deref(), hi_exp)?);
        guard.insert(key, table.clone());
        Ok(table)
    }

    /// `N(x,t)` from the tabulation (extended on demand above 10⁶; direct below 10⁻⁶).
    pub fn eval_n(&self, x: &[f64], t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeArgument(t));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        if t < Self::node(0) {
            return self.eval_n_direct(x, t);
        }
        let tab = self.table_covering(x, t)?;
        Ok(tab.interp.eval(t.ln()).exp())
    }

    /// `N⁻¹(x,y)`.
    pub fn eval_n_inverse(&self, x: &[f64], y: f64) -> Result<f64> {
        if y < 0.0 {
            return Err(Error::NegativeArgument(y));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        let mut tab = self.table_covering(x, Self::node(0))?;
        let (lo, hi) = if y < tab.interp.eval(tab.t_lo().ln()).exp() {
            (f64::MIN_POSITIVE.ln(), tab.t_lo().ln())
        } else {
            while tab.interp.eval(tab.t_hi().ln()).exp() < y {
                let want = tab.t_hi() * 1e3;
                tab = self.table_covering(x, want)?;
            }
            (tab.t_lo().ln(), tab.t_hi().ln())
        };
        let eval = |s: f64| -> Result<f64> { self.eval_n(x, s.exp()) };
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if eval(m)? < y {
                a = m;
            } else {
                b = m;
            }
            if b - a < 1e-15 {
                break;
            }
        }
        let s = (0.5 * (a + b)).exp();
        let residual = (self.eval_n(x, s)? - y) / y;
        if residual.abs() > self.tol {
            return Err(Error::InversionFailure { t: y, residual });
        }
        Ok(s)
    }

    /// `H_*(x,t) = H°(x, N⁻¹(x,t))`.
    pub fn eval_h_star(&self, x: &[f64], t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeArgument(t));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let s = self.eval_n_inverse(x, t)?;
        self.h_circ(x, s)
    }

    /// `h_*(x,t)` by central differences with step `1e-5·t`.
    pub fn eval_h_star_density(&self, x: &[f64], t: f64) -> Result<f64> {
        let step = 1e-5 * t;
        Ok((self.eval_h_star(x, t + step)? - self.eval_h_star(x, t - step)?) / (2.0 * step))
    }

    /// `p⁻_* = d p⁻/(d − p⁻)` and `q⁺_* = d q⁺/(d − q⁺)`.
    pub fn star_exponents(&self) -> (f64, f64) {
        (self.base.model.p_star_minus(), self.base.model.q_star_plus())
    }

    /// CSV `t, N, H_*` at the given t-values.
    pub fn write_table_csv(&self, x: &[f64], ts: &[f64], path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "t,N,H_star")?;
        for &t in ts {
            writeln!(f, "{:e},{:e},{:e}", t, self.eval_n(x, t)?, self.eval_h_star(x, t)?)?;
        }
        Ok(())
    }

    /// Nodes currently tabulated for `x` (after the first lookup).
    pub fn table_len(&self, x: &[f64]) -> Option<usize> {
        self.tables.read().expect("table lock").get(&self.key(x)).map(|t| t.integral.len())
    }
}
