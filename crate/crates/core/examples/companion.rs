//! Which functions qualify as companions of `H*`, and the auxiliary function
//! interpolating between `H` and `H*`.
//!
//! cargo run --example companion

use dphase::model::{DoublePhaseModel, Potential};
use dphase::nfunction::NFunctionHandle;
use dphase::sobolev::{companion_check, CompanionFunction, CompanionGrid, CompanionKind, SobolevConjugateHandle};
use dphase::Result;

fn main() -> Result<()> {
    let m = DoublePhaseModel::constant(3, 2.0, 2.5, 1.0, Potential::Constant { v0: 1.0 })?;
    let s = SobolevConjugateHandle::new(NFunctionHandle::new(m));
    let grid = CompanionGrid::default();
    let candidates = [
        ("t^3", CompanionFunction::power(3.0)),
        ("H", CompanionFunction::new(CompanionKind::SameAsH)),
        ("H*", CompanionFunction::new(CompanionKind::SobolevConjugate)),
    ];
    for (name, comp) in candidates {
        let r = companion_check(&s, &comp, &grid)?;
        println!("{name}: ratio range {:?}", r.observed_ratio);
        for c in r.checks.iter().chain(&r.aux_checks) {
            println!("  {:<11} {:?}", c.id, c.verdict);
        }
        if let Some(a) = r.aux_exponent {
            println!("  auxiliary exponent {a}");
        }
    }
    Ok(())
}
