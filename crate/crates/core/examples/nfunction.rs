//! Evaluating `h`, `H`, the conjugate and Luxemburg norms for a model with
//! solution-dependent exponents.
//!
//! cargo run --example nfunction

use std::sync::Arc;

use dphase::model::make_model;
use dphase::nfunction::{luxemburg_norm, modular, Grid, NFunctionHandle, SampledField};
use dphase::{EvalMode, Result};

fn main() -> Result<()> {
    // d = 3, p(t) = 2 + 0.3·s(t), q(t) = 2.4 + 0.2·s(t), μ = 1, V = 1 + |x|²
    let model = make_model("log_saturating", &[3.0, 2.0, 0.3, 2.4, 0.2, 1.0, 1.0, 1.0])?;
    let h = NFunctionHandle::new(model.clone());
    let x = [0.5, 0.0, 0.0];

    println!("p⁻ = {}, q⁺ = {}", model.p_minus(), model.q_plus());
    println!("{:>8} {:>14} {:>14} {:>10}", "t", "h(x,t)", "H(x,t)", "th/H");
    for t in [0.1, 1.0, 3.0, 10.0, 100.0] {
        let big = h.big_h(&x, t)?;
        println!("{t:>8} {:>14.8} {:>14.8} {:>10.6}", h.h(&x, t), big, h.h(&x, t) * t / big);
    }

    // quadrature on every call agrees with the closed-form path
    let quad = h.clone().with_mode(EvalMode::Quadrature);
    println!("H(x,7) auto {:.15} quadrature {:.15}", h.big_h(&x, 7.0)?, quad.big_h(&x, 7.0)?);

    let c = h.conjugate(&x, 2.0)?;
    println!("H̃(x,2) = {:.10} attained at τ = {:.10}", c.value, c.tau);
    println!("H̃̃(x,1.5) = {:.10}, H(x,1.5) = {:.10}", h.double_conjugate(&x, 1.5)?, h.big_h(&x, 1.5)?);

    let grid = Arc::new(Grid::radial(3, 2.0, 256));
    let u = SampledField::from_fn(grid, |y| 3.0 * (1.0 - y[0] / 2.0), Some(|_: &[f64]| 1.5));
    let n = luxemburg_norm(&h, &u, false)?;
    println!("‖u‖_H = {n:.10}, ρ_H(u/‖u‖) = {:.12}", modular(&h, &u.scaled(1.0 / n), false)?);
    println!("‖u‖_(H,V) = {:.10}", luxemburg_norm(&h, &u, true)?);

    Ok(())
}
