//! Checking the structural hypotheses on sampled points and t-ladders.
//!
//! cargo run --example validate

use dphase::model::{make_model, validate_hypotheses, Nonlinearity, SamplingSpec};
use dphase::Result;

fn main() -> Result<()> {
    let spec = SamplingSpec::default();
    let model = make_model("constant", &[3.0, 2.0, 2.5, 1.0, 1.0, 1.0])?;
    let nl = Nonlinearity::power_log(2.5);
    let report = validate_hypotheses(&model, Some(&nl), &spec);
    for c in &report.checks {
        println!("{:<8} {:?}", c.id, c.verdict);
    }
    println!("σ window {:?}, σ inside: {:?}", report.sigma_window, report.sigma_in_window);

    // q⁺/p⁻ = 1.5 is not below 1 + 1/d
    let mut cfg = model.to_config();
    cfg.q = dphase::model::ExponentSpec::Value(3.0);
    let bad = dphase::model::DoublePhaseModel::from_config_unchecked(&cfg)?;
    let r = validate_hypotheses(&bad, None, &spec);
    println!("q = 3: H.iv {:?}", r.verdict("H.iv"));

    let flat = make_model("constant", &[3.0, 2.0, 2.5, 1.0, 1.0, 0.0])?;
    println!("V ≡ 1: V0.ii {:?}", validate_hypotheses(&flat, None, &spec).verdict("V0.ii"));
    Ok(())
}
