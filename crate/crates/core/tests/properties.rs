use std::sync::{Arc, OnceLock};

use approx::assert_relative_eq;
use proptest::prelude::*;

use dphase::embedding::{combined_modular, combined_norm};
use dphase::model::{make_model, DoublePhaseModel, Nonlinearity, Potential};
use dphase::nfunction::{Grid, NFunctionHandle, SampledField};
use dphase::sobolev::SobolevConjugateHandle;
use dphase::solver::{cone_profile, minimize, RadialGrid, RadialProblem, SolverOptions};

fn handle() -> NFunctionHandle {
    NFunctionHandle::new(make_model("log_saturating", &[3.0, 2.0, 0.3, 2.4, 0.2, 1.0, 1.0, 1.0]).unwrap())
}

fn conjugate() -> &'static SobolevConjugateHandle {
    static S: OnceLock<SobolevConjugateHandle> = OnceLock::new();
    S.get_or_init(|| {
        let m = DoublePhaseModel::constant(3, 2.0, 2.5, 1.0, Potential::Quadratic { v0: 1.0, c: 1.0 }).unwrap();
        SobolevConjugateHandle::new(NFunctionHandle::new(m))
    })
}

fn problem() -> RadialProblem {
    let m = DoublePhaseModel::constant(3, 2.0, 2.5, 1.0, Potential::Quadratic { v0: 1.0, c: 1.0 }).unwrap();
    RadialProblem::new(NFunctionHandle::new(m), Nonlinearity::saturating_bump(2.5, 1.0, 4.0, 1e-3), 20.0, RadialGrid::new(3, 4.0, 48)).unwrap()
}

fn profile(grid: &RadialGrid, a: f64, w: f64, k: f64) -> Vec<f64> {
    let mut u = grid.sample(|r| a * (-(r / w).powi(2)).exp() * (1.0 + 0.4 * (k * r).sin()));
    *u.last_mut().unwrap() = 0.0;
    u
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn modular_sandwiched_by_norm_powers(a in 1e-3f64..1e3, w in 0.3f64..2.0, c in -2.0f64..2.0) {
        let h = handle();
        let grid = Arc::new(Grid::radial(3, 4.0, 64));
        let u = SampledField::from_fn(
            grid,
            move |x| a * (-(x[0] / w).powi(2)).exp() + c.abs() * 1e-3,
            Some(move |x: &[f64]| 2.0 * a * x[0] / (w * w) * (-(x[0] / w).powi(2)).exp()),
        );
        let n = combined_norm(&h, &u).unwrap();
        let rho = combined_modular(&h, &u).unwrap();
        let (p, q) = (h.model.p_minus(), h.model.q_plus());
        let slack = 1e-9 * rho;
        prop_assert!(n.powf(p).min(n.powf(q)) <= rho + slack);
        prop_assert!(rho <= n.powf(p).max(n.powf(q)) + slack);
        prop_assert_eq!(n < 1.0, rho < 1.0);
    }

    #[test]
    fn sobolev_conjugate_dilation(t in 0.05f64..20.0, xi in 1e-2f64..1e2, y in -3.0f64..3.0) {
        let s = conjugate();
        let x = [y, 0.0, 0.0];
        let (ps, qs) = s.star_exponents();
        let base = s.eval_h_star(&x, xi).unwrap();
        let v = s.eval_h_star(&x, t * xi).unwrap();
        let (lo, hi) = (t.powf(ps).min(t.powf(qs)), t.powf(ps).max(t.powf(qs)));
        prop_assert!(v >= lo * base * (1.0 - 1e-6));
        prop_assert!(v <= hi * base * (1.0 + 1e-6));
    }

    #[test]
    fn modular_derivative_monotone_and_coercive(
        a in 0.05f64..3.0, w in 0.5f64..3.0, k in 0.5f64..4.0,
        b in 0.05f64..3.0, z in 0.5f64..3.0, j in 0.5f64..4.0,
    ) {
        let p = problem();
        let u = profile(&p.grid, a, w, k);
        let v = profile(&p.grid, b, z, j);
        let (gu, gv) = (p.rho_gradient(&u).unwrap(), p.rho_gradient(&v).unwrap());
        let pair: f64 = (0..u.len()).map(|i| (gu[i] - gv[i]) * (u[i] - v[i])).sum();
        prop_assert!(pair > 0.0);
        // ⟨ρ'(u), u⟩ ≥ p⁻ ρ(u), which makes ⟨ρ'(u), u⟩/‖u‖ blow up with ‖u‖
        let lhs: f64 = gu.iter().zip(&u).map(|(g, x)| g * x).sum();
        let rho = p.rho(&u).unwrap();
        prop_assert!(lhs >= 2.0 * rho * (1.0 - 1e-10));
        prop_assert!(lhs <= 2.5 * rho * (1.0 + 1e-10));
    }
}

#[test]
fn descent_snapshots_converge_strongly() {
    let p = problem();
    let opts = SolverOptions { snapshot_every: Some(1), ..SolverOptions::default() };
    let out = minimize(&p, cone_profile(&p.grid, 1.0, 2.0), &opts).unwrap();
    let state = out.converged().expect("minimizer converges");
    let g_star = p.rho_gradient(&state.u).unwrap();
    let mut rows = Vec::new();
    for (_, u) in &state.snapshots {
        let g = p.rho_gradient(u).unwrap();
        let pair: f64 = (0..u.len()).map(|i| (g[i] - g_star[i]) * (u[i] - state.u[i])).sum();
        let diff: Vec<f64> = u.iter().zip(&state.u).map(|(a, b)| a - b).collect();
        rows.push((pair, p.norm(&diff).unwrap()));
    }
    assert!(rows.len() >= 3);
    // the pairing going to zero forces the distance to zero
    let (first, last) = (rows[0], rows[rows.len() - 1]);
    assert!(last.0 < 1e-3 * first.0.max(1e-300) || last.0 < 1e-12);
    assert!(last.1 < 1e-2 * first.1);
    for (pair, dist) in &rows {
        assert!(*pair >= -1e-12);
        if *pair < 1e-10 {
            assert!(*dist < 1e-3);
        }
    }
}

#[test]
fn classical_conjugate_matches_closed_form() {
    let m = DoublePhaseModel::constant(3, 2.0, 2.5, 0.0, Potential::Constant { v0: 1.0 }).unwrap();
    let s = SobolevConjugateHandle::new(NFunctionHandle::new(m));
    for t in [0.01, 0.5, 1.0, 3.0, 50.0] {
        assert_relative_eq!(s.eval_n(&[0.0; 3], t).unwrap(), 2.0 * t.cbrt(), max_relative = 1e-8);
        assert_relative_eq!(s.eval_h_star(&[0.0; 3], t).unwrap(), t.powi(6) / 128.0, max_relative = 1e-8);
    }
}
