//! Radial discretization of `J_λ = ρ − λK` on a truncated ball, with searches
//! for a negative-energy local minimizer and a positive-energy mountain-pass point.
//!
//! Values live on nodes `r_i = iΔr` (`u_N = 0` at the truncation radius), differences
//! on the edges between them. Node weights are dual-shell volumes and edge weights
//! are the volumes of the shells `[r_i, r_{i+1}]`, so both sum to the ball volume.

mod search;

pub use search::{
    cone_profile, find_mountain_pass_solution, find_negative_solution, minimize, reference_configuration, Outcome, ReferenceConfig, SolverOptions,
    SolverState, TraceRow,
};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::Nonlinearity;
use crate::nfunction::{luxemburg_by, Grid, NFunctionHandle};
use crate::numerics::{ball_volume, neumaier_sum, solve_tridiagonal};

/// Number of radial test functions in the weak residual.
pub const RESIDUAL_TESTS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub d: usize,
    pub r_max: f64,
    pub n: usize,
    pub dr: f64,
    pub r: Vec<f64>,
    pub w: Vec<f64>,
    pub edge_r: Vec<f64>,
    pub edge_w: Vec<f64>,
}

impl RadialGrid {
    pub fn new(d: usize, r_max: f64, n: usize) -> Self {
        let base = Grid::radial(d, r_max, n);
        let dr = r_max / n as f64;
        let r: Vec<f64> = (0..=n).map(|i| i as f64 * dr).collect();
        let unit = ball_volume(d, 1.0);
        let edge_w = (0..n).map(|e| unit * (r[e + 1].powi(d as i32) - r[e].powi(d as i32))).collect();
        let edge_r = (0..n).map(|e| 0.5 * (r[e] + r[e + 1])).collect();
        RadialGrid { d, r_max, n, dr, r, w: base.weights, edge_r, edge_w }
    }

    /// The node grid as a general quadrature grid.
    pub fn grid(&self) -> Arc<Grid> {
        Arc::new(Grid::radial(self.d, self.r_max, self.n))
    }

    fn point(&self, r: f64) -> Vec<f64> {
        let mut x = vec![0.0; self.d];
        x[0] = r;
        x
    }

    /// Samples a radial profile at the nodes, forcing `u_N = 0`.
    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        let mut u: Vec<f64> = self.r.iter().map(|&r| f(r)).collect();
        u[self.n] = 0.0;
        u
    }
}

/// `J_λ` on a radial grid.
#[derive(Debug, Clone)]
pub struct RadialProblem {
    pub handle: NFunctionHandle,
    pub nl: Nonlinearity,
    pub lambda: f64,
    pub grid: RadialGrid,
    node_x: Vec<Vec<f64>>,
    edge_x: Vec<Vec<f64>>,
    v: Vec<f64>,
    tests: Vec<(Vec<f64>, f64)>,
}

fn check_finite(u: &[f64]) -> Result<()> {
    if u.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("radial state".into()))
    }
}

fn sgn(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl RadialProblem {
    pub fn new(handle: NFunctionHandle, nl: Nonlinearity, lambda: f64, grid: RadialGrid) -> Result<Self> {
        if handle.d() != grid.d {
            return Err(Error::DimensionMismatch { grid: grid.d, model: handle.d() });
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidInput(format!("lambda must be nonnegative, got {lambda}")));
        }
        let node_x: Vec<Vec<f64>> = grid.r.iter().map(|&r| grid.point(r)).collect();
        let edge_x: Vec<Vec<f64>> = grid.edge_r.iter().map(|&r| grid.point(r)).collect();
        let v = node_x.iter().map(|x| handle.model.v(x)).collect();
        let mut p = RadialProblem { handle, nl, lambda, grid, node_x, edge_x, v, tests: Vec::new() };
        let spacing = p.grid.r_max / (RESIDUAL_TESTS + 2) as f64;
        let tests: Vec<Vec<f64>> = (0..RESIDUAL_TESTS)
            .map(|k| {
                let c = (k + 1) as f64 * spacing;
                p.grid.sample(|r| crate::embedding::bump((r - c).abs() / (1.5 * spacing)))
            })
            .collect();
        p.tests = tests.into_iter().map(|t| Ok((p.norm(&t)?, t)).map(|(n, t)| (t, n))).collect::<Result<_>>()?;
        Ok(p)
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        RadialProblem { lambda, ..self.clone() }
    }

    fn diff(&self, u: &[f64], e: usize) -> f64 {
        (u[e + 1] - u[e]) / self.grid.dr
    }

    /// `ρ(u) = Σ_e W_e H(|Du_e|) + Σ_i w_i V_i H(|u_i|)`.
    pub fn rho(&self, u: &[f64]) -> Result<f64> {
        self.rho_scaled(u, 1.0)
    }

    fn rho_scaled(&self, u: &[f64], scale: f64) -> Result<f64> {
        check_finite(u)?;
        let n = self.grid.n;
        let h = &self.handle;
        let mut terms = Vec::with_capacity(2 * n + 1);
        for e in 0..n {
            terms.push(self.grid.edge_w[e] * h.big_h(&self.edge_x[e], self.diff(u, e).abs() / scale)?);
        }
        for i in 0..n {
            terms.push(self.grid.w[i] * self.v[i] * h.big_h(&self.node_x[i], u[i].abs() / scale)?);
        }
        Ok(neumaier_sum(terms))
    }

    /// `K(u) = Σ_i w_i F(u_i)`.
    pub fn k(&self, u: &[f64]) -> f64 {
        neumaier_sum((0..self.grid.n).map(|i| self.grid.w[i] * self.nl.big_f(u[i])))
    }

    /// `J_λ(u) = ρ(u) − λK(u)`; the last node is treated as 0.
    pub fn energy(&self, u: &[f64]) -> Result<f64> {
        self.check_len(u)?;
        let e = self.rho(u)? - self.lambda * self.k(u);
        if e.is_finite() {
            Ok(e)
        } else {
            Err(Error::NonFinite("energy".into()))
        }
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.grid.n + 1 {
            return Err(Error::InvalidInput(format!("state has {} values, grid has {} nodes", u.len(), self.grid.n + 1)));
        }
        Ok(())
    }

    /// Nodal gradient of `ρ` (`λ = 0`).
    pub fn rho_gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u)?;
        check_finite(u)?;
        let n = self.grid.n;
        let dr = self.grid.dr;
        let h = &self.handle;
        let mut g = vec![0.0; n + 1];
        for e in 0..n {
            let du = self.diff(u, e);
            let flux = self.grid.edge_w[e] * h.h(&self.edge_x[e], du.abs()) * sgn(du) / dr;
            g[e] -= flux;
            g[e + 1] += flux;
        }
        for i in 0..n {
            g[i] += self.grid.w[i] * self.v[i] * h.h(&self.node_x[i], u[i].abs()) * sgn(u[i]);
        }
        g[n] = 0.0;
        Ok(g)
    }

    /// Nodal gradient of `J_λ`; the boundary entry is 0.
    pub fn gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut g = self.rho_gradient(u)?;
        for i in 0..self.grid.n {
            g[i] -= self.lambda * self.grid.w[i] * self.nl.f(u[i]);
        }
        Ok(g)
    }

    /// Tridiagonal Hessian of `J_λ` over the free nodes `0..N`.
    pub fn hessian(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.grid.n;
        let dr = self.grid.dr;
        let h = &self.handle;
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n.saturating_sub(1)];
        for e in 0..n {
            let t = self.diff(u, e).abs().max(1e-12);
            let c = self.grid.edge_w[e] * h.h_prime(&self.edge_x[e], t) / (dr * dr);
            diag[e] += c;
            if e + 1 < n {
                diag[e + 1] += c;
                off[e] -= c;
            }
        }
        for i in 0..n {
            let t = u[i].abs().max(1e-12);
            diag[i] += self.grid.w[i] * (self.v[i] * h.h_prime(&self.node_x[i], t) - self.lambda * self.nl.df(u[i]));
        }
        (off.clone(), diag, off)
    }

    /// `P = K + M_V`: the discrete weighted `H¹` form used as preconditioner and metric.
    fn metric(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.grid.n;
        let dr2 = self.grid.dr * self.grid.dr;
        let mut diag: Vec<f64> = (0..n).map(|i| self.grid.w[i] * self.v[i]).collect();
        let mut off = vec![0.0; n.saturating_sub(1)];
        for e in 0..n {
            let c = self.grid.edge_w[e] / dr2;
            diag[e] += c;
            if e + 1 < n {
                diag[e + 1] += c;
                off[e] -= c;
            }
        }
        (off.clone(), diag, off)
    }

    /// `P⁻¹ g`, extended by 0 at the boundary node.
    pub fn precondition(&self, g: &[f64]) -> Vec<f64> {
        let n = self.grid.n;
        let (lo, di, up) = self.metric();
        let mut x = solve_tridiagonal(&lo, &di, &up, &g[..n]).expect("metric is positive definite");
        x.push(0.0);
        x
    }

    /// `(uᵀ P v)`.
    pub fn metric_dot(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.grid.n;
        let (lo, di, _) = self.metric();
        let mut s = 0.0;
        for i in 0..n {
            s += di[i] * u[i] * v[i];
            if i + 1 < n {
                s += lo[i] * (u[i] * v[i + 1] + u[i + 1] * v[i]);
            }
        }
        s
    }

    /// Dual norm `sqrt(gᵀP⁻¹g)` of a nodal gradient.
    pub fn dual_norm(&self, g: &[f64]) -> f64 {
        let pg = self.precondition(g);
        g.iter().zip(&pg).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
    }

    /// Luxemburg norm of the discrete `ρ` (gradient and potential parts together).
    pub fn norm(&self, u: &[f64]) -> Result<f64> {
        self.check_len(u)?;
        let n = self.grid.n;
        let sup = (0..n).map(|e| self.diff(u, e).abs().max(u[e].abs())).fold(0.0, f64::max);
        if sup == 0.0 {
            return Ok(0.0);
        }
        luxemburg_by(|lam| self.rho_scaled(u, lam), sup)
    }

    /// `max_k |⟨J'(u), v_k⟩| / (1 + ‖v_k‖)` over 16 fixed radial bumps.
    pub fn weak_residual(&self, u: &[f64]) -> Result<f64> {
        let g = self.gradient(u)?;
        Ok(self
            .tests
            .iter()
            .map(|(v, nv)| g.iter().zip(v).map(|(a, b)| a * b).sum::<f64>().abs() / (1.0 + nv))
            .fold(0.0, f64::max))
    }

    /// Number of negative pivots of the Hessian's LDLᵀ factorization.
    pub fn morse_index(&self, u: &[f64]) -> usize {
        let (lo, di, _) = self.hessian(u);
        let mut count = 0;
        let mut prev = 0.0;
        for i in 0..di.len() {
            let d = if i == 0 { di[0] } else { di[i] - lo[i - 1] * lo[i - 1] / prev };
            let d = if d == 0.0 { -f64::MIN_POSITIVE } else { d };
            if d < 0.0 {
                count += 1;
            }
            prev = d;
        }
        count
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::certificate::tilde_u_profile;
    use crate::embedding::combined_modular;
    use crate::model::{DoublePhaseModel, Potential};

    fn problem(n: usize, lambda: f64) -> RadialProblem {
        let m = DoublePhaseModel::constant(3, 2.0, 2.5, 1.0, Potential::Quadratic { v0: 1.0, c: 1.0 }).unwrap();
        RadialProblem::new(NFunctionHandle::new(m), Nonlinearity::power_log(2.5), lambda, RadialGrid::new(3, 4.0, n)).unwrap()
    }

    fn random_state(p: &RadialProblem, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: f64 = rng.gen_range(0.2..2.0);
        let w: f64 = rng.gen_range(0.5..3.0);
        p.grid.sample(|r| a * (-(r / w).powi(2)).exp() * (1.0 + 0.3 * (3.0 * r).sin()) * (1.0 - r / 4.0))
    }

    #[test]
    fn weights_sum_to_ball_volume() {
        let g = RadialGrid::new(3, 4.0, 128);
        let vol = ball_volume(3, 4.0);
        assert!((neumaier_sum(g.w.iter().copied()) - vol).abs() < 1e-12 * vol);
        assert!((neumaier_sum(g.edge_w.iter().copied()) - vol).abs() < 1e-12 * vol);
    }

    #[test]
    fn zero_state() {
        let p = problem(64, 3.0);
        let z = vec![0.0; 65];
        assert_eq!(p.energy(&z).unwrap(), 0.0);
        assert!(p.gradient(&z).unwrap().iter().all(|g| *g == 0.0));
        assert_eq!(p.weak_residual(&z).unwrap(), 0.0);
    }

    #[test]
    fn gradient_matches_differences() {
        let p = problem(64, 2.0);
        for seed in 0..3 {
            let u = random_state(&p, seed);
            let g = p.gradient(&u).unwrap();
            let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for i in 0..64 {
                let step = 1e-6 * (1.0 + u[i].abs());
                let (mut a, mut b) = (u.clone(), u.clone());
                a[i] += step;
                b[i] -= step;
                let fd = (p.energy(&a).unwrap() - p.energy(&b).unwrap()) / (2.0 * step);
                assert!((fd - g[i]).abs() < 1e-5 * scale, "node {i}: {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn energy_is_affine_in_lambda() {
        let p = problem(64, 0.0);
        let u = random_state(&p, 9);
        let d = (p.with_lambda(1.5).energy(&u).unwrap() - p.with_lambda(0.5).energy(&u).unwrap()) / 1.0;
        assert!((d + p.k(&u)).abs() < 1e-10 * (1.0 + p.k(&u)));
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let p = problem(32, 2.0);
        let u = random_state(&p, 4);
        let (lo, di, up) = p.hessian(&u);
        for i in [0usize, 4, 8, 12] {
            let step = 1e-6;
            let (mut a, mut b) = (u.clone(), u.clone());
            a[i] += step;
            b[i] -= step;
            let (ga, gb) = (p.gradient(&a).unwrap(), p.gradient(&b).unwrap());
            let col = |j: usize| (ga[j] - gb[j]) / (2.0 * step);
            assert!((col(i) - di[i]).abs() < 1e-4 * di[i].abs().max(1e-3), "{i}: {} vs {}", col(i), di[i]);
            if i + 1 < 32 {
                assert!((col(i + 1) - lo[i]).abs() < 1e-4 * lo[i].abs().max(1e-3));
                assert!((lo[i] - up[i]).abs() == 0.0);
            }
        }
    }

    #[test]
    fn cone_energy_matches_fine_quadrature() {
        let m = DoublePhaseModel::constant(3, 2.0, 2.5, 1.0, Potential::Constant { v0: 1.0 }).unwrap();
        let h = NFunctionHandle::new(m);
        let p = RadialProblem::new(h.clone(), Nonlinearity::zero(2.5), 0.0, RadialGrid::new(3, 4.0, 256)).unwrap();
        let u = p.grid.sample(|r| if r <= 0.5 { 1.0 } else { (2.0 * (1.0 - r)).max(0.0) });
        let fine = combined_modular(&h, &tilde_u_profile(3, 1.0, 1.0, &[0.0; 3]).unwrap()).unwrap();
        let e = p.energy(&u).unwrap();
        assert!(e > 0.0 && (e - fine).abs() < 0.02 * fine, "{e} vs {fine}");
    }

    #[test]
    fn weak_residual_positive_off_critical() {
        let p = problem(64, 1.0);
        assert!(p.weak_residual(&random_state(&p, 2)).unwrap() > 0.0);
    }

    #[test]
    fn morse_index_of_convex_energy_is_zero() {
        let p = problem(64, 0.0);
        assert_eq!(p.morse_index(&random_state(&p, 1)), 0);
    }
}
