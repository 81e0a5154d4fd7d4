use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{RadialGrid, RadialProblem};
use crate::certificate::Certificate;
use crate::error::{Error, Result};
use crate::model::{DoublePhaseModel, Nonlinearity, Potential};
use crate::nfunction::NFunctionHandle;
use crate::numerics::{geometric_ladder, solve_tridiagonal};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Stop when `‖J'(u)‖_* ≤ tol·(1 + |J(u)|)`.
    pub tol: f64,
    pub max_iter: usize,
    pub beads: usize,
    pub reparam_every: usize,
    pub max_sweeps: usize,
    pub seed_range: (f64, f64),
    pub seed_points: usize,
    /// Keep every k-th iterate of the descent.
    pub snapshot_every: Option<usize>,
    /// Newton steps when the Hessian is positive definite.
    pub newton: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iter: 2000,
            beads: 32,
            reparam_every: 10,
            max_sweeps: 3000,
            seed_range: (1e-3, 1e3),
            seed_points: 121,
            snapshot_every: None,
            newton: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub energy: f64,
    pub grad_norm: f64,
    /// `(1 + ‖u‖)·‖J'(u)‖_*`.
    pub cerami: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverState {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub energy: f64,
    pub grad_norm: f64,
    pub weak_residual: f64,
    pub norm: f64,
    pub sup: f64,
    pub morse_index: usize,
    pub iterations: usize,
    pub trace: Vec<TraceRow>,
    #[serde(skip)]
    pub snapshots: Vec<(usize, Vec<f64>)>,
}

impl SolverState {
    fn assemble(p: &RadialProblem, u: Vec<f64>, iterations: usize, trace: Vec<TraceRow>, snapshots: Vec<(usize, Vec<f64>)>) -> Result<Self> {
        let energy = p.energy(&u)?;
        let grad_norm = p.dual_norm(&p.gradient(&u)?);
        Ok(SolverState {
            r: p.grid.r.clone(),
            energy,
            grad_norm,
            weak_residual: p.weak_residual(&u)?,
            norm: p.norm(&u)?,
            sup: u.iter().fold(0.0, |m, v| m.max(v.abs())),
            morse_index: p.morse_index(&u),
            iterations,
            trace,
            snapshots,
            u,
        })
    }

    /// `r,u` rows.
    pub fn write_state_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["r", "u"])?;
        for (r, u) in self.r.iter().zip(&self.u) {
            w.write_record([r.to_string(), u.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_trace_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for row in &self.trace {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Converged { state: SolverState },
    MaxIterations { state: SolverState },
    /// No dilation `tũ` of the seed profile has negative energy.
    NotFound { t_min: f64, t_max: f64, least_energy: f64 },
    Unbounded { iter: usize, energy: f64, sup: f64 },
    /// The straight path from 0 to the minimizer does not rise above both ends.
    GeometryViolated { path_max: f64, endpoint_energy: f64 },
}

impl Outcome {
    pub fn state(&self) -> Option<&SolverState> {
        match self {
            Outcome::Converged { state } | Outcome::MaxIterations { state } => Some(state),
            _ => None,
        }
    }

    pub fn converged(&self) -> Option<&SolverState> {
        match self {
            Outcome::Converged { state } => Some(state),
            _ => None,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(u: &[f64], s: f64, d: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = u.iter().zip(d).map(|(a, b)| a + s * b).collect();
    *v.last_mut().unwrap() = 0.0;
    v
}

fn sup(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |m, v| m.max(v.abs()))
}

const UNBOUNDED_ENERGY: f64 = -1e12;
const UNBOUNDED_SUP: f64 = 1e8;
const STRAIGHT_SAMPLES: usize = 400;

fn newton_direction(p: &RadialProblem, u: &[f64], g: &[f64]) -> Option<Vec<f64>> {
    let n = p.grid.n;
    let (lo, di, up) = p.hessian(u);
    let rhs: Vec<f64> = g[..n].iter().map(|v| -v).collect();
    let mut d = solve_tridiagonal(&lo, &di, &up, &rhs).ok()?;
    d.push(0.0);
    d.iter().all(|v| v.is_finite()).then_some(d)
}

/// Preconditioned descent from `u0`: Barzilai–Borwein steps with Armijo
/// backtracking, switching to Newton steps where the Hessian is positive definite.
pub fn minimize(p: &RadialProblem, u0: Vec<f64>, opts: &SolverOptions) -> Result<Outcome> {
    let mut u = u0;
    *u.last_mut().unwrap() = 0.0;
    let mut trace = Vec::new();
    let mut snapshots = Vec::new();
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut alpha = 1.0;
    for it in 0..opts.max_iter {
        let j = p.energy(&u)?;
        let g = p.gradient(&u)?;
        let pg = p.precondition(&g);
        let gn = dot(&g, &pg).max(0.0).sqrt();
        trace.push(TraceRow { iter: it, energy: j, grad_norm: gn, cerami: (1.0 + p.norm(&u)?) * gn });
        if let Some(k) = opts.snapshot_every {
            if k > 0 && it % k == 0 {
                snapshots.push((it, u.clone()));
            }
        }
        if j < UNBOUNDED_ENERGY || sup(&u) > UNBOUNDED_SUP {
            return Ok(Outcome::Unbounded { iter: it, energy: j, sup: sup(&u) });
        }
        if gn <= opts.tol * (1.0 + j.abs()) {
            return Ok(Outcome::Converged { state: SolverState::assemble(p, u, it, trace, snapshots)? });
        }
        if let Some((du, dg)) = prev.take() {
            let sy = dot(&du, &g.iter().zip(&dg).map(|(a, b)| a - b).collect::<Vec<_>>());
            let sps = p.metric_dot(&du, &du);
            alpha = if sy > 0.0 { (sps / sy).clamp(1e-6, 1e6) } else { 1.0 };
        }
        let newton = if opts.newton && p.morse_index(&u) == 0 { newton_direction(p, &u, &g) } else { None };
        let (d, mut step) = match newton {
            Some(d) if dot(&g, &d) < 0.0 => (d, 1.0),
            _ => (pg.iter().map(|v| -v).collect::<Vec<_>>(), alpha),
        };
        let slope = dot(&g, &d);
        let slack = 1e-13 * (1.0 + j.abs());
        let mut accepted = None;
        for _ in 0..60 {
            let trial = axpy(&u, step, &d);
            if let Ok(jt) = p.energy(&trial) {
                if jt <= j + 1e-4 * step * slope + slack {
                    accepted = Some(trial);
                    break;
                }
            }
            step *= 0.5;
        }
        let Some(next) = accepted else {
            return Ok(Outcome::MaxIterations { state: SolverState::assemble(p, u, it, trace, snapshots)? });
        };
        let du: Vec<f64> = next.iter().zip(&u).map(|(a, b)| a - b).collect();
        prev = Some((du, g));
        u = next;
    }
    Ok(Outcome::MaxIterations { state: SolverState::assemble(p, u, opts.max_iter, trace, snapshots)? })
}

/// The cone profile: `η` on `B(R/2)`, linear down to 0 at `R`.
pub fn cone_profile(grid: &RadialGrid, eta: f64, radius: f64) -> Vec<f64> {
    grid.sample(|r| if r <= 0.5 * radius { eta } else { (2.0 * eta * (1.0 - r / radius)).max(0.0) })
}

/// Local minimizer with negative energy, seeded from the least-energy dilation
/// `tũ` of the certificate's cone profile over the seed range.
pub fn find_negative_solution(p: &RadialProblem, cert: &Certificate, opts: &SolverOptions) -> Result<Outcome> {
    if cert.x0.iter().any(|v| *v != 0.0) {
        return Err(Error::InvalidInput("the radial solver needs a certificate centred at the origin".into()));
    }
    if cert.radius > p.grid.r_max {
        return Err(Error::InvalidInput(format!("certificate radius {} exceeds R_max {}", cert.radius, p.grid.r_max)));
    }
    let cone = cone_profile(&p.grid, cert.eta, cert.radius);
    let (t_min, t_max) = opts.seed_range;
    let mut best = (f64::INFINITY, 0.0);
    for t in geometric_ladder(t_min, t_max, opts.seed_points) {
        let u: Vec<f64> = cone.iter().map(|v| t * v).collect();
        let j = p.energy(&u)?;
        if j < best.0 {
            best = (j, t);
        }
    }
    if best.0 >= 0.0 {
        return Ok(Outcome::NotFound { t_min, t_max, least_energy: best.0 });
    }
    minimize(p, cone.iter().map(|v| best.1 * v).collect(), opts)
}

fn reparametrize(p: &RadialProblem, beads: &mut [Vec<f64>]) {
    let m = beads.len();
    let mut arc = vec![0.0; m];
    for j in 1..m {
        let d: Vec<f64> = beads[j].iter().zip(&beads[j - 1]).map(|(a, b)| a - b).collect();
        arc[j] = arc[j - 1] + p.metric_dot(&d, &d).max(0.0).sqrt();
    }
    let total = arc[m - 1];
    if total == 0.0 {
        return;
    }
    let old = beads.to_vec();
    let mut k = 0;
    for (j, bead) in beads.iter_mut().enumerate().take(m - 1).skip(1) {
        let s = total * j as f64 / (m - 1) as f64;
        while k + 1 < m - 1 && arc[k + 1] < s {
            k += 1;
        }
        let span = arc[k + 1] - arc[k];
        let w = if span > 0.0 { (s - arc[k]) / span } else { 0.0 };
        *bead = old[k].iter().zip(&old[k + 1]).map(|(a, b)| (1.0 - w) * a + w * b).collect();
    }
}

/// Newton iteration on `J' = 0` with backtracking on the dual gradient norm.
fn newton_polish(p: &RadialProblem, mut u: Vec<f64>, opts: &SolverOptions, trace: &mut Vec<TraceRow>, iter0: usize) -> Result<(Vec<f64>, bool)> {
    let mut g = p.gradient(&u)?;
    let mut gn = p.dual_norm(&g);
    for it in 0..100 {
        let j = p.energy(&u)?;
        trace.push(TraceRow { iter: iter0 + it, energy: j, grad_norm: gn, cerami: (1.0 + p.norm(&u)?) * gn });
        if gn <= opts.tol * (1.0 + j.abs()) {
            return Ok((u, true));
        }
        let Some(d) = newton_direction(p, &u, &g) else {
            return Ok((u, false));
        };
        let mut step = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let trial = axpy(&u, step, &d);
            if let Ok(gt) = p.gradient(&trial) {
                let nt = p.dual_norm(&gt);
                if nt < gn {
                    u = trial;
                    g = gt;
                    gn = nt;
                    moved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !moved {
            return Ok((u, false));
        }
    }
    Ok((u, false))
}

/// Mountain-pass critical point separating 0 from the minimizer `low`: the
/// highest bead of a piecewise-linear path descends perpendicular to the path
/// until the path maximum settles, then Newton on `J' = 0` finishes.
pub fn find_mountain_pass_solution(p: &RadialProblem, low: &SolverState, opts: &SolverOptions) -> Result<Outcome> {
    if !(low.energy < 0.0) {
        return Err(Error::InvalidInput(format!("mountain pass needs a negative-energy endpoint, got J = {}", low.energy)));
    }
    if low.u.len() != p.grid.n + 1 {
        return Err(Error::InvalidInput("endpoint lives on a different grid".into()));
    }
    // The ridge usually sits close to 0, so the string ends at the first dilation
    // past the straight-path maximum that lies at least as far below 0 as the maximum is above it.
    let scale = |t: f64| -> Vec<f64> { low.u.iter().map(|v| v * t).collect() };
    let ts: Vec<f64> = (1..=STRAIGHT_SAMPLES).map(|k| k as f64 / STRAIGHT_SAMPLES as f64).collect();
    let straight: Vec<f64> = ts.iter().map(|&t| p.energy(&scale(t))).collect::<Result<_>>()?;
    let (imax, path_max) = straight.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |b, (i, v)| if v > b.1 { (i, v) } else { b });
    if !(path_max > 0.0) {
        return Ok(Outcome::GeometryViolated { path_max, endpoint_energy: low.energy });
    }
    let t_end = (imax..STRAIGHT_SAMPLES).find(|&i| straight[i] < -path_max).map_or(1.0, |i| ts[i]);
    let m = opts.beads.max(3);
    let mut beads: Vec<Vec<f64>> = (0..m).map(|j| scale(t_end * j as f64 / (m - 1) as f64)).collect();
    let mut energies: Vec<f64> = beads.iter().map(|b| p.energy(b)).collect::<Result<_>>()?;
    let mut step: f64 = 1.0;
    let mut trace = Vec::new();
    let mut history: Vec<f64> = Vec::new();
    let mut sweeps = 0;
    for sweep in 0..opts.max_sweeps {
        sweeps = sweep + 1;
        let top = (1..m - 1).max_by(|a, b| energies[*a].total_cmp(&energies[*b])).unwrap();
        let jmax = energies[top];
        if !(jmax > 0.0) {
            return Ok(Outcome::GeometryViolated { path_max: jmax, endpoint_energy: low.energy });
        }
        let g = p.gradient(&beads[top])?;
        let pg = p.precondition(&g);
        let mut tau: Vec<f64> = beads[top + 1].iter().zip(&beads[top - 1]).map(|(a, b)| a - b).collect();
        let tn = p.metric_dot(&tau, &tau).max(0.0).sqrt();
        if tn > 0.0 {
            tau.iter_mut().for_each(|v| *v /= tn);
        }
        let comp = dot(&g, &tau);
        let d: Vec<f64> = pg.iter().zip(&tau).map(|(a, t)| -a + comp * t).collect();
        let dn = dot(&g, &pg).max(0.0).sqrt();
        trace.push(TraceRow { iter: sweep, energy: jmax, grad_norm: dn, cerami: (1.0 + p.norm(&beads[top])?) * dn });
        let slope = dot(&g, &d);
        // a move of at most half the local bead spacing keeps the path resolving the ridge
        let cap = 0.25 * tn / p.metric_dot(&d, &d).max(f64::MIN_POSITIVE).sqrt();
        step = (step * 2.0).min(1.0).min(cap);
        while step > 1e-12 {
            let trial = axpy(&beads[top], step, &d);
            match p.energy(&trial) {
                Ok(jt) if jt <= jmax + 1e-4 * step * slope => {
                    beads[top] = trial;
                    energies[top] = jt;
                    break;
                }
                _ => step *= 0.5,
            }
        }
        if (sweep + 1) % opts.reparam_every.max(1) == 0 {
            reparametrize(p, &mut beads);
            energies = beads.iter().map(|b| p.energy(b)).collect::<Result<_>>()?;
        }
        history.push(jmax);
        let k = history.len();
        let window = 4 * opts.reparam_every.max(1);
        if k > window && (history[k - 1 - window] - jmax).abs() <= 1e-6 * (1.0 + jmax.abs()) {
            break;
        }
    }
    let energies: Vec<f64> = beads.iter().map(|b| p.energy(b)).collect::<Result<_>>()?;
    let top = (1..m - 1).max_by(|a, b| energies[*a].total_cmp(&energies[*b])).unwrap();
    let (u, ok) = newton_polish(p, beads[top].clone(), opts, &mut trace, sweeps)?;
    let state = SolverState::assemble(p, u, sweeps, trace, Vec::new())?;
    if ok && state.energy > 0.0 {
        Ok(Outcome::Converged { state })
    } else {
        Ok(Outcome::MaxIterations { state })
    }
}

/// A configuration with two nontrivial radial solutions.
#[derive(Debug, Clone)]
pub struct ReferenceConfig {
    pub model: DoublePhaseModel,
    pub nl: Nonlinearity,
    pub lambda: f64,
    pub grid: RadialGrid,
    pub eta: f64,
    pub radius: f64,
}

impl ReferenceConfig {
    pub fn problem(&self) -> Result<RadialProblem> {
        RadialProblem::new(NFunctionHandle::new(self.model.clone()), self.nl.clone(), self.lambda, self.grid.clone())
    }
}

/// `p = 2`, `q = 2.5`, `μ = 1`, `V = 1 + |x|²` in `d = 3` on `B(0,4)` with 128 shells,
/// and the saturating bump `f` (κ = 1, m = 4, ε = 10⁻³) at `λ = 20`.
pub fn reference_configuration() -> ReferenceConfig {
    ReferenceConfig {
        model: DoublePhaseModel::constant(3, 2.0, 2.5, 1.0, Potential::Quadratic { v0: 1.0, c: 1.0 }).expect("valid model"),
        nl: Nonlinearity::saturating_bump(2.5, 1.0, 4.0, 1e-3),
        lambda: 20.0,
        grid: RadialGrid::new(3, 4.0, 128),
        eta: 1.0,
        radius: 2.0,
    }
}
