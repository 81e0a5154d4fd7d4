//! The Sobolev conjugate: `N`, its inverse and `H* = H°∘N⁻¹`, with the
//! classical `p = 2`, `d = 3` case as a closed-form check.
//!
//! cargo run --example sobolev

use dphase::model::{DoublePhaseModel, Potential};
use dphase::nfunction::NFunctionHandle;
use dphase::sobolev::SobolevConjugateHandle;
use dphase::Result;

fn main() -> Result<()> {
    let x = [0.0; 3];
    let classical = DoublePhaseModel::constant(3, 2.0, 2.5, 0.0, Potential::Constant { v0: 1.0 })?;
    let s = SobolevConjugateHandle::new(NFunctionHandle::new(classical));
    println!("{:>8} {:>16} {:>16} {:>16} {:>16}", "t", "N", "2t^(1/3)", "H*", "t^6/128");
    for t in [0.01, 0.5, 1.0, 4.0, 100.0] {
        println!(
            "{t:>8} {:>16.10} {:>16.10} {:>16.10e} {:>16.10e}",
            s.eval_n(&x, t)?,
            2.0 * t.cbrt(),
            s.eval_h_star(&x, t)?,
            t.powi(6) / 128.0
        );
    }

    let double = DoublePhaseModel::constant(3, 2.0, 2.5, 1.0, Potential::Constant { v0: 1.0 })?;
    let s = SobolevConjugateHandle::new(NFunctionHandle::new(double));
    let (lo, hi) = s.star_exponents();
    println!("double phase: p*⁻ = {lo}, q*⁺ = {hi}");
    for t in [1e-3, 1.0, 1e3] {
        let n = s.eval_n(&x, t)?;
        println!("t = {t:e}: N = {n:.10e}, N⁻¹(N) = {:.10e}, H* = {:.10e}", s.eval_n_inverse(&x, n)?, s.eval_h_star(&x, t)?);
    }
    let path = std::env::temp_dir().join("dphase_sobolev_table.csv");
    let ts: Vec<f64> = (0..=40).map(|k| 10f64.powf(-2.0 + k as f64 * 0.1)).collect();
    s.write_table_csv(&x, &ts, &path)?;
    println!("table written to {}", path.display());
    Ok(())
}
