//! Constants of the two-solution theorem for a concrete configuration and a
//! search for an admissible `(η, r)`.
//!
//! cargo run --example certificate

use dphase::certificate::{compute_certificate, feasibility_search, Gamma, SearchBox, SearchOutcome};
use dphase::model::{make_model, Nonlinearity};
use dphase::Result;

fn main() -> Result<()> {
    let model = make_model("constant", &[3.0, 2.0, 2.5, 1.0, 1.0, 1.0])?;
    let nl = Nonlinearity::power_log(2.5);
    let c = compute_certificate(&model, &nl, &[0.0; 3], 1.0, 1.0, 25.0, Gamma::user(1.0))?;
    print!("{}", c.table());

    match feasibility_search(&model, &nl, &[0.0; 3], 1.0, Gamma::user(1.0), &SearchBox::default())? {
        SearchOutcome::Feasible { best } => println!("feasible: Λ = {:?}", best.lambda),
        SearchOutcome::Infeasible { least_violated, min_gap } => {
            println!("infeasible over the box; closest cell η = {:.4}, r = {:.4}, α − β = {min_gap:?}", least_violated.eta, least_violated.r)
        }
    }
    Ok(())
}
