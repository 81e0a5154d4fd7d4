//! Two radial critical points of opposite energy sign: a local minimizer below 0
//! and a mountain-pass point above 0.
//!
//! cargo run --release --example radial_solver

use dphase::certificate::{compute_certificate, Gamma};
use dphase::solver::{find_mountain_pass_solution, find_negative_solution, reference_configuration, Outcome, SolverOptions};
use dphase::Result;

fn main() -> Result<()> {
    let cfg = reference_configuration();
    let p = cfg.problem()?;
    let cert = compute_certificate(&cfg.model, &cfg.nl, &[0.0; 3], cfg.radius, cfg.eta, 1.0, Gamma::user(1.0))?;
    let opts = SolverOptions::default();

    let low = find_negative_solution(&p, &cert, &opts)?;
    let Outcome::Converged { state: u1 } = low else {
        println!("no minimizer: {low:?}");
        return Ok(());
    };
    println!("u₁: J = {:.8}, ‖J'‖ = {:.2e}, residual {:.2e}, max u = {:.6}, {} iterations", u1.energy, u1.grad_norm, u1.weak_residual, u1.sup, u1.iterations);

    let pass = find_mountain_pass_solution(&p, &u1, &opts)?;
    match pass.state() {
        Some(u2) => println!(
            "u₂: J = {:.8}, ‖J'‖ = {:.2e}, residual {:.2e}, max u = {:.6}, Morse index {}",
            u2.energy, u2.grad_norm, u2.weak_residual, u2.sup, u2.morse_index
        ),
        None => println!("mountain pass: {pass:?}"),
    }

    for lambda in [5.0, 10.0, 15.0, 20.0, 40.0] {
        let o = find_negative_solution(&p.with_lambda(lambda), &cert, &opts)?;
        match o.converged() {
            Some(s) => println!("λ = {lambda:>4}: J₁ = {:.6}", s.energy),
            None => println!("λ = {lambda:>4}: {}", serde_json::to_string(&o)?),
        }
    }
    Ok(())
}
