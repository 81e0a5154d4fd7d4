//! Embedding ratios, the Lions vanishing probe, the Brezis–Lieb gap and the
//! compactness probe on explicit function families.
//!
//! cargo run --release --example embedding

use std::sync::Arc;

use dphase::embedding::{
    brezis_lieb_gap, compactness_probe, embedding_ratio_scan, lions_vanishing_probe, FamilyKind, Target, TestFamily,
};
use dphase::model::{DoublePhaseModel, Potential};
use dphase::nfunction::{Grid, NFunctionHandle};
use dphase::sobolev::{CompanionFunction, SobolevConjugateHandle};
use dphase::Result;

fn main() -> Result<()> {
    let m = DoublePhaseModel::constant(3, 2.0, 2.5, 1.0, Potential::Constant { v0: 1.0 })?;
    let s = SobolevConjugateHandle::new(NFunctionHandle::new(m));

    // bounded ratios into L^H* along dilated bumps
    let radial = Arc::new(Grid::radial(3, 4.0, 256));
    let fam = TestFamily::new(FamilyKind::RadialBump { radius: 0.5, growth: 1.2 }, radial);
    let scan = embedding_ratio_scan(&s, &Target::HStar, &fam, 8)?;
    println!("H* ratios {:?}\n  trend {:?}", scan.ratios, scan.trend);

    // translates keep their ball suprema: no vanishing
    let slab = Arc::new(Grid::box_grid(&[-20.0, -3.0, -3.0], &[20.0, 3.0, 3.0], 0.5)?);
    let moving = TestFamily::new(FamilyKind::TranslatingBump { radius: 2.0, shift: 2.0, start: -18.0 }, slab.clone());
    let lions = lions_vanishing_probe(&s, &moving, &CompanionFunction::power(3.0), 2.0, 16)?;
    println!("translating bumps: {:?} (spread of s_n {:.2e})", lions.label, lions.s_spread);

    let cube = Arc::new(Grid::box_grid(&[-6.0; 3], &[6.0; 3], 0.4)?);
    let spreading = TestFamily::new(FamilyKind::SpreadingBump { radius: 1.2, amp_exp: 1.5, scale_exp: 0.5 }, cube);
    let lions = lions_vanishing_probe(&s, &spreading, &CompanionFunction::power(3.0), 1.0, 16)?;
    println!("spreading bumps: {:?}", lions.label);

    let members = moving.members(6);
    let gaps = brezis_lieb_gap(&s.base, &members[0], &members[1..])?;
    println!("Brezis–Lieb gaps against translates {gaps:?}");

    // coercive V: unit-normalized spreading bumps go to 0 in L^H
    let coercive = DoublePhaseModel::constant(3, 2.0, 2.5, 1.0, Potential::Quadratic { v0: 1.0, c: 1.0 })?;
    let big = Arc::new(Grid::radial(3, 320.0, 16384));
    let wide = TestFamily::new(FamilyKind::SpreadingBump { radius: 1.0, amp_exp: 0.0, scale_exp: 2.0 }, big);
    let rep = compactness_probe(&NFunctionHandle::new(coercive), &wide, 16)?;
    println!("compactness with V = 1 + |x|²: {:?}", rep.verdict);
    Ok(())
}
