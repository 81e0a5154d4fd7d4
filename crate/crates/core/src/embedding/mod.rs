//! Numerical probes of the embedding theorems on explicit function families.

mod family;
mod probes;

pub use family::{bump, bump_slope, FamilyKind, TestFamily};
pub use probes::{
    brezis_lieb_gap, compactness_probe, lions_vanishing_probe, test_fields, weak_nullity, write_series_csv, CompactnessReport,
    LionsLabel, LionsReport, ProbeRow,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Verdict;
use crate::nfunction::{luxemburg_by, luxemburg_norm, modular_values, NFunctionHandle, SampledField};
use crate::numerics::{kendall_tau, loglog_slope, neumaier_sum};
use crate::sobolev::{CompanionFunction, SobolevConjugateHandle};

/// `‖∇u‖_{L^H} + ‖u‖_{L^H_V}`.
pub fn weighted_sobolev_norm(handle: &NFunctionHandle, u: &SampledField) -> Result<f64> {
    let g = u.gradient_field()?;
    Ok(luxemburg_norm(handle, &g, false)? + luxemburg_norm(handle, u, true)?)
}

/// `ρ(u) = ∫ H(x,|∇u|) + ∫ V H(x,|u|)`.
pub fn combined_modular(handle: &NFunctionHandle, u: &SampledField) -> Result<f64> {
    let g = u.gradient.as_ref().ok_or(Error::MissingGradient)?;
    Ok(modular_values(handle, &u.grid, g, false, 1.0)? + modular_values(handle, &u.grid, &u.values, true, 1.0)?)
}

/// Luxemburg norm of the combined modular `ρ`.
pub fn combined_norm(handle: &NFunctionHandle, u: &SampledField) -> Result<f64> {
    let g = u.gradient.as_ref().ok_or(Error::MissingGradient)?;
    let sup = u.sup_abs().max(g.iter().fold(0.0, |m, v| m.max(v.abs())));
    if sup == 0.0 {
        return Ok(0.0);
    }
    luxemburg_by(
        |lam| Ok(modular_values(handle, &u.grid, g, false, lam)? + modular_values(handle, &u.grid, &u.values, true, lam)?),
        sup,
    )
}

/// Luxemburg norm of `u` for an arbitrary Young-type function `phi(x, t)`.
pub fn orlicz_norm<P>(u: &SampledField, phi: P) -> Result<f64>
where
    P: Fn(&[f64], f64) -> Result<f64> + Sync,
{
    if u.is_zero() {
        return Ok(0.0);
    }
    let grid = &u.grid;
    let rho = |lam: f64| -> Result<f64> {
        let terms: Vec<f64> = (0..u.len())
            .into_par_iter()
            .map(|i| {
                let v = u.values[i].abs();
                if v == 0.0 {
                    Ok(0.0)
                } else {
                    Ok(grid.weights[i] * phi(grid.point(i), v / lam)?)
                }
            })
            .collect::<Result<_>>()?;
        Ok(neumaier_sum(terms))
    };
    luxemburg_by(rho, u.sup_abs())
}

/// `‖u‖_{L^r}`.
pub fn lebesgue_norm(u: &SampledField, r: f64) -> f64 {
    neumaier_sum(u.grid.weights.iter().zip(&u.values).map(|(w, v)| w * v.abs().powf(r))).powf(1.0 / r)
}

/// Target space of an embedding scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "target", rename_all = "kebab-case")]
pub enum Target {
    H,
    HStar,
    Companion { companion: CompanionFunction },
    Lebesgue { r: f64 },
}

impl Target {
    pub fn norm(&self, s: &SobolevConjugateHandle, u: &SampledField) -> Result<f64> {
        match self {
            Target::H => luxemburg_norm(&s.base, u, false),
            Target::HStar => orlicz_norm(u, |x, t| s.eval_h_star(x, t)),
            Target::Companion { companion } => orlicz_norm(u, |x, t| companion.value(s, x, t)),
            Target::Lebesgue { r } => Ok(lebesgue_norm(u, *r)),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanReport {
    pub target: Target,
    /// `‖u_n‖_target / ‖u_n‖_{W^{1,H}_V}` for `n = 1..=count`; `None` for skipped zero members.
    pub ratios: Vec<Option<f64>>,
    pub max_ratio: f64,
    pub argmax: usize,
    pub skipped: Vec<usize>,
    /// Growth trend of the ratios along the family.
    pub trend: Verdict,
}

/// Embedding ratios along a family. Zero members are skipped and listed.
pub fn embedding_ratio_scan(s: &SobolevConjugateHandle, target: &Target, family: &TestFamily, count: usize) -> Result<ScanReport> {
    if count == 0 {
        return Err(Error::InvalidInput("count must be at least 1".into()));
    }
    let ratios: Vec<Option<f64>> = (1..=count)
        .into_par_iter()
        .map(|n| {
            let u = family.member(n);
            let w = weighted_sobolev_norm(&s.base, &u)?;
            if w == 0.0 {
                return Ok(None);
            }
            Ok(Some(target.norm(s, &u)? / w))
        })
        .collect::<Result<_>>()?;
    let skipped: Vec<usize> = ratios.iter().enumerate().filter(|(_, r)| r.is_none()).map(|(i, _)| i + 1).collect();
    let present: Vec<(usize, f64)> = ratios.iter().enumerate().filter_map(|(i, r)| r.map(|v| (i + 1, v))).collect();
    let (argmax, max_ratio) = present.iter().copied().fold((0, 0.0), |best, (n, r)| if r > best.1 { (n, r) } else { best });
    let values: Vec<f64> = present.iter().map(|p| p.1).collect();
    Ok(ScanReport { target: target.clone(), ratios, max_ratio, argmax, skipped, trend: growth_trend(&values, 8) })
}

/// `Inconsistent` (with a divergence witness) when the tail grows strictly and either
/// the last value exceeds ten times the first, or the log-log slope in `n` over the
/// second half stays above 0.05 and above 0.4 times the first-half slope (a bounded
/// increasing sequence flattens out).
pub(crate) fn growth_trend(values: &[f64], tail: usize) -> Verdict {
    if values.len() < 4 {
        return Verdict::Unverifiable { reason: "fewer than four members".into() };
    }
    let t = kendall_tau(&values[values.len().saturating_sub(tail)..]);
    let (first, last) = (values[0], *values.last().unwrap());
    let ns: Vec<f64> = (1..=values.len()).map(|n| n as f64).collect();
    let half = values.len() / 2;
    let head = loglog_slope(&ns[..half], &values[..half]);
    let rear = loglog_slope(&ns[half..], &values[half..]);
    if t > 0.99 && (last > 10.0 * first || (rear > 0.05 && rear >= 0.4 * head)) {
        Verdict::Inconsistent {
            witness: format!("ratio grows from {first:.4e} to {last:.4e} with log-log slope {rear:.4} (first half {head:.4}): divergence trend"),
        }
    } else {
        Verdict::Consistent { evidence: format!("tail tau {t:.3}, log-log slope {rear:.4}, ratios between {first:.4e} and {last:.4e}") }
    }
}

/// Strictly decreasing (or identically zero) tail ending below 10% of the sequence maximum.
pub(crate) fn vanishes(values: &[f64], tail: usize) -> bool {
    let max = values.iter().copied().fold(0.0, f64::max);
    let tail = &values[values.len().saturating_sub(tail)..];
    let last = *tail.last().unwrap_or(&0.0);
    (tail.iter().all(|v| *v == 0.0) || kendall_tau(tail) < -0.99) && last < 0.1 * max
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::{make_model, DoublePhaseModel, Potential};
    use crate::nfunction::Grid;

    fn worked_unit_v() -> NFunctionHandle {
        NFunctionHandle::new(DoublePhaseModel::constant(3, 2.0, 2.5, 1.0, Potential::Constant { v0: 1.0 }).unwrap())
    }

    fn tent(n: usize) -> SampledField {
        let g = Arc::new(Grid::radial(3, 1.0, n));
        SampledField::from_fn(g, |x| (1.0 - x[0]).max(0.0), Some(|_: &[f64]| 1.0))
    }

    #[test]
    fn zero_and_scaling() {
        let h = worked_unit_v();
        let u = tent(128);
        assert_eq!(weighted_sobolev_norm(&h, &u.scaled(0.0)).unwrap(), 0.0);
        let a = weighted_sobolev_norm(&h, &u).unwrap();
        let b = weighted_sobolev_norm(&h, &u.scaled(2.0)).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-8 * b);
    }

    #[test]
    fn tent_norm_golden() {
        // continuum value 1.826013 + 0.599444 = 2.425457; 128 shells land within 2e-5
        let v = weighted_sobolev_norm(&worked_unit_v(), &tent(128)).unwrap();
        assert!(v > 0.0);
        assert!((v - weighted_sobolev_norm(&worked_unit_v(), &tent(128)).unwrap()).abs() < 1e-14);
        assert!((v - TENT_GOLDEN).abs() < 1e-8, "{v}");
        assert!((v - 2.425457).abs() < 2e-5);
    }

    const TENT_GOLDEN: f64 = 2.4254720171362885;

    #[test]
    fn missing_gradient() {
        let g = Arc::new(Grid::radial(3, 1.0, 8));
        let u = SampledField::new(g, vec![1.0; 9], None).unwrap();
        assert_eq!(weighted_sobolev_norm(&worked_unit_v(), &u).unwrap_err(), Error::MissingGradient);
    }

    #[test]
    fn combined_norm_sandwich() {
        let h = NFunctionHandle::new(make_model("constant", &[3.0, 2.0, 2.5, 1.0, 1.0, 1.0]).unwrap());
        let u = tent(64);
        for c in [0.05, 0.3, 3.0, 20.0] {
            let v = u.scaled(c);
            let n = combined_norm(&h, &v).unwrap();
            let rho = combined_modular(&h, &v).unwrap();
            let (lo, hi) = if n < 1.0 { (n.powf(2.5), n.powf(2.0)) } else { (n.powf(2.0), n.powf(2.5)) };
            assert!(lo <= rho * (1.0 + 1e-6) && rho <= hi * (1.0 + 1e-6), "c={c}: {lo} {rho} {hi}");
        }
    }

    #[test]
    fn lebesgue_of_constant() {
        let g = Arc::new(Grid::box_grid(&[0.0, 0.0], &[2.0, 2.0], 0.5).unwrap());
        let u = SampledField::constant(g, 3.0);
        assert!((lebesgue_norm(&u, 2.0) - 6.0).abs() < 1e-12);
    }
}
