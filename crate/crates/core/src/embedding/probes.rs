use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{growth_trend, orlicz_norm, vanishes, weighted_sobolev_norm, TestFamily};
use crate::error::{Error, Result};
use crate::model::Verdict;
use crate::nfunction::{luxemburg_norm, Grid, NFunctionHandle, SampledField};
use crate::numerics::{kendall_tau, neumaier_sum};
use crate::sobolev::{CompanionFunction, SobolevConjugateHandle};

/// One line of a probe time series.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub n: usize,
    pub s_n: Option<f64>,
    pub v_n: Option<f64>,
    pub g_n: Option<f64>,
    pub ratio_n: Option<f64>,
}

pub fn write_series_csv(rows: &[ProbeRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LionsLabel {
    NonVanishing,
    LionsConsistent,
    LionsInconsistent,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LionsReport {
    pub radius: f64,
    /// `s_n` is the lattice sup of `∫_{B_r(y)} H(x,|u_n|)`, `v_n = ‖u_n‖_{L^V}`, `ratio_n = ‖u_n‖_{W^{1,H}_V}`.
    pub rows: Vec<ProbeRow>,
    pub label: LionsLabel,
    /// Relative spread `(max − min)/max` of `s_n`.
    pub s_spread: f64,
    pub s_tau: f64,
    pub v_tau: f64,
}

fn axis_bounds(grid: &Grid) -> (Vec<f64>, Vec<f64>) {
    let d = grid.dim;
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for i in 0..grid.len() {
        for (k, &c) in grid.point(i).iter().enumerate() {
            lo[k] = lo[k].min(c);
            hi[k] = hi[k].max(c);
        }
    }
    (lo, hi)
}

/// Node indices bucketed in cubes of side `r`.
struct CellIndex {
    r: f64,
    cells: HashMap<Vec<i64>, Vec<usize>>,
}

impl CellIndex {
    fn new(grid: &Grid, r: f64) -> Self {
        let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for i in 0..grid.len() {
            cells.entry(Self::cell(grid.point(i), r)).or_default().push(i);
        }
        CellIndex { r, cells }
    }

    fn cell(x: &[f64], r: f64) -> Vec<i64> {
        x.iter().map(|v| (v / r).floor() as i64).collect()
    }

    /// `Σ_{|x_i − y| < r} terms_i`.
    fn ball_sum(&self, grid: &Grid, terms: &[f64], y: &[f64]) -> f64 {
        let base = Self::cell(y, self.r);
        let d = base.len();
        let mut acc = Vec::new();
        let mut offset = vec![-1i64; d];
        loop {
            let key: Vec<i64> = base.iter().zip(&offset).map(|(b, o)| b + o).collect();
            if let Some(ids) = self.cells.get(&key) {
                for &i in ids {
                    if terms[i] == 0.0 {
                        continue;
                    }
                    let dist2: f64 = grid.point(i).iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                    if dist2 < self.r * self.r {
                        acc.push(terms[i]);
                    }
                }
            }
            let mut k = d;
            loop {
                if k == 0 {
                    return neumaier_sum(acc);
                }
                k -= 1;
                offset[k] += 1;
                if offset[k] <= 1 {
                    break;
                }
                offset[k] = -1;
            }
        }
    }
}

/// `sup_y ∫_{B_r(y)} H(x,|u|)` over the cubic lattice `(r/2)ℤ^d` inside the grid's bounding box.
pub fn lions_sup(handle: &NFunctionHandle, u: &SampledField, r: f64) -> Result<f64> {
    let grid = &u.grid;
    if grid.radial_step.is_some() {
        return Err(Error::InvalidInput("ball suprema need a box or point grid, not radial shells".into()));
    }
    let terms: Vec<f64> = (0..u.len())
        .map(|i| if u.values[i] == 0.0 { Ok(0.0) } else { Ok(grid.weights[i] * handle.big_h(grid.point(i), u.values[i].abs())?) })
        .collect::<Result<_>>()?;
    let index = CellIndex::new(grid, r);
    let (lo, hi) = axis_bounds(grid);
    let step = 0.5 * r;
    let ranges: Vec<(i64, i64)> = lo.iter().zip(&hi).map(|(a, b)| ((a / step).ceil() as i64, (b / step).floor() as i64)).collect();
    let total: usize = ranges.iter().map(|(a, b)| (b - a + 1).max(0) as usize).product();
    let best = (0..total)
        .into_par_iter()
        .map(|mut flat| {
            let y: Vec<f64> = ranges
                .iter()
                .rev()
                .map(|(a, b)| {
                    let len = (b - a + 1) as usize;
                    let k = flat % len;
                    flat /= len;
                    (a + k as i64) as f64 * step
                })
                .collect::<Vec<_>>()
                .into_iter()
                .rev()
                .collect();
            index.ball_sum(grid, &terms, &y)
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

/// Lions-type probe: does vanishing of the ball suprema come with `‖u_n‖_{L^V} → 0`?
pub fn lions_vanishing_probe(
    s: &SobolevConjugateHandle,
    family: &TestFamily,
    comp: &CompanionFunction,
    r: f64,
    count: usize,
) -> Result<LionsReport> {
    let rows: Vec<ProbeRow> = (1..=count)
        .map(|n| {
            let u = family.member(n);
            Ok(ProbeRow {
                n,
                s_n: Some(lions_sup(&s.base, &u, r)?),
                v_n: Some(orlicz_norm(&u, |x, t| comp.value(s, x, t))?),
                g_n: None,
                ratio_n: Some(weighted_sobolev_norm(&s.base, &u)?),
            })
        })
        .collect::<Result<_>>()?;
    let w: Vec<f64> = rows.iter().map(|r| r.ratio_n.unwrap()).collect();
    if let Verdict::Inconsistent { witness } = growth_trend(&w, 8) {
        return Err(Error::InvalidInput(format!("family is not norm-bounded: {witness}")));
    }
    let sv: Vec<f64> = rows.iter().map(|r| r.s_n.unwrap()).collect();
    let vv: Vec<f64> = rows.iter().map(|r| r.v_n.unwrap()).collect();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let label = if !vanishes(&sv, 8) {
        LionsLabel::NonVanishing
    } else if vanishes(&vv, 8) {
        LionsLabel::LionsConsistent
    } else {
        LionsLabel::LionsInconsistent
    };
    let tail = |v: &[f64]| kendall_tau(&v[v.len().saturating_sub(8)..]);
    Ok(LionsReport {
        radius: r,
        s_spread: if smax > 0.0 { (smax - smin) / smax } else { 0.0 },
        s_tau: tail(&sv),
        v_tau: tail(&vv),
        rows,
        label,
    })
}

/// `g_n = ρ_H(u + v_n) − ρ_H(v_n) − ρ_H(u)`, summed node by node.
pub fn brezis_lieb_gap(handle: &NFunctionHandle, u: &SampledField, shifts: &[SampledField]) -> Result<Vec<f64>> {
    let grid = &u.grid;
    shifts
        .iter()
        .map(|v| {
            if v.grid.len() != grid.len() {
                return Err(Error::InvalidInput("fields live on different grids".into()));
            }
            let terms: Vec<f64> = (0..grid.len())
                .map(|i| {
                    let (a, b) = (u.values[i], v.values[i]);
                    if a == 0.0 || b == 0.0 {
                        return Ok(0.0);
                    }
                    let x = grid.point(i);
                    Ok(grid.weights[i] * (handle.big_h(x, (a + b).abs())? - handle.big_h(x, b.abs())? - handle.big_h(x, a.abs())?))
                })
                .collect::<Result<_>>()?;
            Ok(neumaier_sum(terms))
        })
        .collect()
}

/// Five fixed bumps of radius 1.5 centred at `0, ±e₁, e₂, (e₁+e₂)/2` (with `e₂ = e₁` when `d = 1`).
/// Radial grids only carry radial fields, whose pairings see spherical averages, so there
/// the five fields are centred bumps of radii 0.75, 1.5, 2.25, 3 and 4.
pub fn test_fields(grid: &Arc<Grid>) -> Vec<SampledField> {
    let d = grid.dim;
    let dist = |x: &[f64], c: &[f64]| x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    if grid.radial_step.is_some() {
        return [0.75, 1.5, 2.25, 3.0, 4.0]
            .into_iter()
            .map(|r| SampledField::from_fn(grid.clone(), move |x| super::bump(x[0] / r), None::<fn(&[f64]) -> f64>))
            .collect();
    }
    let unit = |k: usize| {
        let mut e = vec![0.0; d];
        e[k.min(d - 1)] = 1.0;
        e
    };
    let mut centers = vec![vec![0.0; d], unit(0), unit(0).iter().map(|v| -v).collect(), unit(1)];
    centers.push(unit(0).iter().zip(unit(1)).map(|(a, b)| 0.5 * (a + b)).collect());
    centers
        .into_iter()
        .map(|c| SampledField::from_fn(grid.clone(), move |x| super::bump(dist(x, &c) / 1.5), None::<fn(&[f64]) -> f64>))
        .collect()
}

/// Emulated weak convergence to 0: every pairing with the fixed test fields vanishes along the family.
pub fn weak_nullity(members: &[SampledField]) -> Verdict {
    let Some(first) = members.first() else {
        return Verdict::Unverifiable { reason: "empty family".into() };
    };
    let phis = test_fields(&first.grid);
    for (k, phi) in phis.iter().enumerate() {
        let p: Vec<f64> = members.iter().map(|u| u.pairing(phi).abs()).collect();
        if !vanishes(&p, 8) {
            return Verdict::Inconsistent { witness: format!("pairing with test field {k} stays at {:.3e}", p.last().unwrap()) };
        }
    }
    Verdict::Consistent { evidence: "pairings with 5 fixed test fields decrease to below 10% of their maximum".into() }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompactnessReport {
    /// `ratio_n = ‖u_n‖_{L^H}` of the unit-normalized members.
    pub rows: Vec<ProbeRow>,
    pub weak_nullity: Verdict,
    pub verdict: Verdict,
}

/// Unit-normalized members should lose their `L^H` mass when `V` is coercive.
/// Runs with non-coercive `V` are not labelled.
pub fn compactness_probe(handle: &NFunctionHandle, family: &TestFamily, count: usize) -> Result<CompactnessReport> {
    if let Some(limit) = handle.model.potential.limit_at_infinity() {
        return Ok(CompactnessReport {
            rows: Vec::new(),
            weak_nullity: Verdict::Unverifiable { reason: "not evaluated".into() },
            verdict: Verdict::Unverifiable {
                reason: format!("V tends to {limit} at infinity, so its sublevel sets have infinite measure; the probe is not labelled"),
            },
        });
    }
    let members: Vec<SampledField> = (1..=count).map(|n| family.normalized_member(handle, n)).collect::<Result<_>>()?;
    let rows: Vec<ProbeRow> = members
        .iter()
        .enumerate()
        .map(|(i, u)| Ok(ProbeRow { n: i + 1, ratio_n: Some(luxemburg_norm(handle, u, false)?), ..Default::default() }))
        .collect::<Result<_>>()?;
    let weak = weak_nullity(&members);
    let norms: Vec<f64> = rows.iter().map(|r| r.ratio_n.unwrap()).collect();
    let verdict = if !matches!(weak, Verdict::Consistent { .. }) {
        Verdict::Unverifiable { reason: "weak nullity not emulated by this family".into() }
    } else if vanishes(&norms, 8) {
        Verdict::Consistent { evidence: format!("L^H norm falls from {:.4e} to {:.4e}", norms[0], norms.last().unwrap()) }
    } else {
        Verdict::Inconsistent { witness: format!("L^H norm stays at {:.4e}", norms.last().unwrap()) }
    };
    Ok(CompactnessReport { rows, weak_nullity: weak, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::FamilyKind;
    use crate::model::{DoublePhaseModel, Potential};

    fn model(potential: Potential) -> NFunctionHandle {
        NFunctionHandle::new(DoublePhaseModel::constant(3, 2.0, 2.5, 1.0, potential).unwrap())
    }

    #[test]
    fn disjoint_supports_give_zero_gap() {
        let h = model(Potential::Constant { v0: 1.0 });
        let g = Arc::new(Grid::box_grid(&[-6.0, -2.0, -2.0], &[6.0, 2.0, 2.0], 0.5).unwrap());
        let fam = TestFamily::new(FamilyKind::TranslatingBump { radius: 1.5, shift: 1.0, start: -3.0 }, g.clone());
        let u = TestFamily::new(FamilyKind::TranslatingBump { radius: 1.5, shift: 0.0, start: -3.0 }, g).member(1);
        let gaps = brezis_lieb_gap(&h, &u, &fam.members(8)).unwrap();
        assert!(gaps[0] > 0.0);
        assert_eq!(gaps[7], 0.0);
        assert_eq!(brezis_lieb_gap(&h, &u, &[u.scaled(0.0)]).unwrap(), vec![0.0]);
    }

    #[test]
    fn lions_sup_rejects_radial_grids() {
        let h = model(Potential::Constant { v0: 1.0 });
        let u = SampledField::constant(Arc::new(Grid::radial(3, 1.0, 4)), 1.0);
        assert!(lions_sup(&h, &u, 1.0).is_err());
    }

    #[test]
    fn constant_potential_is_not_labelled() {
        let h = model(Potential::Constant { v0: 1.0 });
        let g = Arc::new(Grid::box_grid(&[-1.0; 3], &[1.0; 3], 0.5).unwrap());
        let fam = TestFamily::new(FamilyKind::SpreadingBump { radius: 1.0, amp_exp: 0.0, scale_exp: 0.5 }, g);
        let r = compactness_probe(&h, &fam, 4).unwrap();
        assert!(matches!(r.verdict, Verdict::Unverifiable { .. }));
        assert!(r.rows.is_empty());
    }

    #[test]
    fn series_csv_has_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_series_csv(&[ProbeRow { n: 1, s_n: Some(0.5), ..Default::default() }], &p).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        assert!(text.starts_with("n,s_n,v_n,g_n,ratio_n\n1,0.5,,,"));
    }
}
