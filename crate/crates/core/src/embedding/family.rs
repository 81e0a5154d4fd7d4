use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::nfunction::{Grid, NFunctionHandle, SampledField};
use crate::error::Result;

/// Smooth compactly supported profile `w(s) = (1 − s²)³` on `s < 1`.
pub fn bump(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        (1.0 - s * s).powi(3)
    }
}

/// `|w'(s)|`.
pub fn bump_slope(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        6.0 * s * (1.0 - s * s).powi(2)
    }
}

/// Member `n ≥ 1` of each family is described in the variant docs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FamilyKind {
    /// `w(|x − (start + n·shift) e₁| / radius)`.
    TranslatingBump { radius: f64, shift: f64, start: f64 },
    /// `n^{-amp_exp} w(|x|/(radius·n^{scale_exp}))`.
    SpreadingBump { radius: f64, amp_exp: f64, scale_exp: f64 },
    /// `w(n|x|/radius)`.
    ConcentratingBump { radius: f64 },
    /// `w(|x|/(radius·growth^{n-1}))`.
    RadialBump { radius: f64, growth: f64 },
    /// `max(0, 1 − |x|/(radius·n^{scale_exp}))`.
    Tent { radius: f64, scale_exp: f64 },
    /// `exp(−|x|²/(2σ_n²))`, `σ_n = width·n^{scale_exp}`.
    GaussianLike { width: f64, scale_exp: f64 },
}

/// A sequence of sampled fields (with gradient magnitudes) on one grid.
#[derive(Debug, Clone)]
pub struct TestFamily {
    pub kind: FamilyKind,
    pub grid: Arc<Grid>,
    pub center: Vec<f64>,
}

impl TestFamily {
    pub fn new(kind: FamilyKind, grid: Arc<Grid>) -> Self {
        let center = vec![0.0; grid.dim];
        TestFamily { kind, grid, center }
    }

    /// Member `n` (counted from 1).
    pub fn member(&self, n: usize) -> SampledField {
        let nf = n as f64;
        let c = self.center.clone();
        let dist = move |x: &[f64], shift: f64| -> f64 {
            x.iter()
                .zip(&c)
                .enumerate()
                .map(|(k, (a, b))| {
                    let d = a - b - if k == 0 { shift } else { 0.0 };
                    d * d
                })
                .sum::<f64>()
                .sqrt()
        };
        // (amplitude, scale, e₁-shift, profile, slope)
        type Profile = fn(f64) -> f64;
        let (amp, scale, shift, w, dw): (f64, f64, f64, Profile, Profile) = match self.kind {
            FamilyKind::TranslatingBump { radius, shift, start } => (1.0, radius, start + nf * shift, bump, bump_slope),
            FamilyKind::SpreadingBump { radius, amp_exp, scale_exp } => {
                (nf.powf(-amp_exp), radius * nf.powf(scale_exp), 0.0, bump, bump_slope)
            }
            FamilyKind::ConcentratingBump { radius } => (1.0, radius / nf, 0.0, bump, bump_slope),
            FamilyKind::RadialBump { radius, growth } => (1.0, radius * growth.powi(n as i32 - 1), 0.0, bump, bump_slope),
            FamilyKind::Tent { radius, scale_exp } => (
                1.0,
                radius * nf.powf(scale_exp),
                0.0,
                |s| (1.0 - s).max(0.0),
                |s| if s < 1.0 { 1.0 } else { 0.0 },
            ),
            FamilyKind::GaussianLike { width, scale_exp } => {
                (1.0, width * nf.powf(scale_exp), 0.0, |s| (-0.5 * s * s).exp(), |s| s * (-0.5 * s * s).exp())
            }
        };
        let d2 = dist.clone();
        SampledField::from_fn(
            self.grid.clone(),
            move |x| amp * w(dist(x, shift) / scale),
            Some(move |x: &[f64]| amp * dw(d2(x, shift) / scale) / scale),
        )
    }

    pub fn members(&self, count: usize) -> Vec<SampledField> {
        (1..=count).map(|n| self.member(n)).collect()
    }

    /// Member `n` rescaled to unit `W^{1,H}_V` norm.
    pub fn normalized_member(&self, handle: &NFunctionHandle, n: usize) -> Result<SampledField> {
        let u = self.member(n);
        let norm = super::weighted_sobolev_norm(handle, &u)?;
        Ok(if norm > 0.0 { u.scaled(1.0 / norm) } else { u })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_is_smooth_at_the_edge() {
        assert_eq!(bump(1.0), 0.0);
        assert!(bump(0.999) < 1e-7 && bump_slope(0.999) < 1e-4);
        let s = 0.4;
        assert!(((bump(s + 1e-6) - bump(s - 1e-6)) / 2e-6 + bump_slope(s)).abs() < 1e-8);
    }

    #[test]
    fn translating_members_shift() {
        let g = Arc::new(Grid::box_grid(&[-4.0, -1.0], &[4.0, 1.0], 0.5).unwrap());
        let fam = TestFamily::new(FamilyKind::TranslatingBump { radius: 1.0, shift: 1.0, start: -2.0 }, g.clone());
        let (a, b) = (fam.member(1), fam.member(3));
        let sa: f64 = a.values.iter().sum();
        let sb: f64 = b.values.iter().sum();
        assert!((sa - sb).abs() < 1e-12);
        let argmax = |u: &SampledField| u.values.iter().enumerate().max_by(|x, y| x.1.total_cmp(y.1)).unwrap().0;
        assert!((g.point(argmax(&b))[0] - g.point(argmax(&a))[0] - 2.0).abs() < 0.5);
    }

    #[test]
    fn tent_gradient_is_inverse_radius() {
        let g = Arc::new(Grid::radial(3, 2.0, 20));
        let u = TestFamily::new(FamilyKind::Tent { radius: 1.0, scale_exp: 1.0 }, g).member(2);
        assert!((u.gradient.as_ref().unwrap()[5] - 0.5).abs() < 1e-15);
        assert!((u.values[5] - 0.75).abs() < 1e-15);
    }
}
