use serde::{Deserialize, Serialize};

use super::SobolevConjugateHandle;
use crate::error::Result;
use crate::model::{Check, Verdict};
use crate::numerics::{geometric_ladder, kendall_tau};

/// Shape of a companion N-function `V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CompanionKind {
    /// `t^r`.
    Power { r: f64 },
    /// `H` itself.
    SameAsH,
    /// `H_*` itself.
    SobolevConjugate,
    /// `H(x,t)^r`.
    PowerOfH { r: f64 },
}

/// A companion N-function with optional declared ratio bounds `v⁻ ≤ vt/V ≤ v⁺`
/// and declared `C₁ ≤ V(x,1) ≤ C₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompanionFunction {
    #[serde(flatten)]
    pub kind: CompanionKind,
    #[serde(default)]
    pub ratio_bounds: Option<(f64, f64)>,
    #[serde(default)]
    pub unit_bounds: Option<(f64, f64)>,
}

impl CompanionFunction {
    pub fn new(kind: CompanionKind) -> Self {
        CompanionFunction { kind, ratio_bounds: None, unit_bounds: None }
    }

    pub fn power(r: f64) -> Self {
        CompanionFunction { kind: CompanionKind::Power { r }, ratio_bounds: Some((r, r)), unit_bounds: Some((1.0, 1.0)) }
    }

    pub fn value(&self, s: &SobolevConjugateHandle, x: &[f64], t: f64) -> Result<f64> {
        match self.kind {
            CompanionKind::Power { r } => Ok(t.powf(r)),
            CompanionKind::SameAsH => s.base.big_h(x, t),
            CompanionKind::SobolevConjugate => s.eval_h_star(x, t),
            CompanionKind::PowerOfH { r } => Ok(s.base.big_h(x, t)?.powf(r)),
        }
    }

    /// `v(x,t)`, the t-derivative.
    pub fn density(&self, s: &SobolevConjugateHandle, x: &[f64], t: f64) -> Result<f64> {
        match self.kind {
            CompanionKind::Power { r } => Ok(r * t.powf(r - 1.0)),
            CompanionKind::SameAsH => Ok(s.base.h(x, t)),
            CompanionKind::SobolevConjugate => s.eval_h_star_density(x, t),
            CompanionKind::PowerOfH { r } => Ok(r * s.base.big_h(x, t)?.powf(r - 1.0) * s.base.h(x, t)),
        }
    }
}

/// Sampling for [`companion_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompanionGrid {
    pub t_min: f64,
    pub t_max: f64,
    /// Ladder rungs per decade.
    pub per_decade: usize,
    pub ks: Vec<f64>,
    /// Sample points; empty means the origin alone.
    pub points: Vec<Vec<f64>>,
    /// Trailing rungs used for trend verdicts.
    pub tail: usize,
}

impl Default for CompanionGrid {
    fn default() -> Self {
        CompanionGrid { t_min: 1e-4, t_max: 1e4, per_decade: 4, ks: vec![0.5, 1.0, 2.0, 10.0], points: Vec::new(), tail: 8 }
    }
}

impl CompanionGrid {
    fn ladder(&self, lo: f64, hi: f64) -> Vec<f64> {
        let n = ((hi / lo).log10() * self.per_decade as f64).round().max(1.0) as usize + 1;
        geometric_ladder(lo, hi, n)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompanionReport {
    pub companion: CompanionFunction,
    pub checks: Vec<Check>,
    /// Observed range of `vt/V`.
    pub observed_ratio: (f64, f64),
    /// Observed range of `V(x,1)`.
    pub observed_unit: (f64, f64),
    /// Exponent of the Lemma-Aux candidate `R(t) = t^r`.
    pub aux_exponent: Option<f64>,
    pub aux_checks: Vec<Check>,
}

impl CompanionReport {
    pub fn verdict(&self, id: &str) -> Option<&Verdict> {
        self.checks.iter().chain(&self.aux_checks).find(|c| c.id == id).map(|c| &c.verdict)
    }
}

fn check(id: &str, statement: &str, verdict: Verdict, detail: Option<String>) -> Check {
    Check { id: id.into(), statement: statement.into(), verdict, detail }
}

/// Tail of a ratio ladder heading to zero: strictly decreasing and well below its start.
fn vanishing_tail(ratios: &[f64], tail: usize) -> (bool, f64) {
    let tail_vals = &ratios[ratios.len().saturating_sub(tail)..];
    let tau = kendall_tau(tail_vals);
    let first = ratios[0];
    let last = *ratios.last().unwrap();
    (tau < -0.99 && last < 1e-2 * first, tau)
}

type Sampler<'a> = dyn Fn(&[f64], f64) -> Result<f64> + 'a;

/// `V(x,kt)/H_*(x,t) → 0` along `[1, t_max]`, for every k.
fn essentially_slower(s: &SobolevConjugateHandle, v: &Sampler, grid: &CompanionGrid, pts: &[Vec<f64>]) -> Result<Verdict> {
    let ladder = grid.ladder(1.0, grid.t_max);
    let mut notes = Vec::new();
    for x in pts {
        for &k in &grid.ks {
            let ratios: Vec<f64> = ladder.iter().map(|&t| Ok(v(x, k * t)? / s.eval_h_star(x, t)?)).collect::<Result<_>>()?;
            let (ok, tau) = vanishing_tail(&ratios, grid.tail);
            if !ok {
                return Ok(Verdict::Inconsistent {
                    witness: format!("k = {k}, |x| = {:.3}: tail tau {tau:.3}, ratio {:.3e} at t = {:.1e}", norm(x), ratios.last().unwrap(), grid.t_max),
                });
            }
            notes.push(format!("k={k}: {:.2e}", ratios.last().unwrap()));
        }
    }
    Ok(Verdict::Consistent { evidence: format!("ladder heuristic, final ratios {}", notes.join(", ")) })
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Checks (bf), (cA), `V ≪ H_*` and the small-t conditions for `comp`, plus a
/// power-law candidate `R` for the auxiliary lemma.
pub fn companion_check(s: &SobolevConjugateHandle, comp: &CompanionFunction, grid: &CompanionGrid) -> Result<CompanionReport> {
    let model = &s.base.model;
    let pts: Vec<Vec<f64>> = if grid.points.is_empty() { vec![vec![0.0; model.d]] } else { grid.points.clone() };
    let all_t = grid.ladder(grid.t_min, grid.t_max);
    let small_t = grid.ladder(grid.t_min, 1.0);
    let mut checks = Vec::new();

    // (bf)
    let units: Vec<f64> = pts.iter().map(|x| comp.value(s, x, 1.0)).collect::<Result<_>>()?;
    let c1 = units.iter().copied().fold(f64::INFINITY, f64::min);
    let c2 = units.iter().copied().fold(0.0, f64::max);
    let bf = if !(c1 > 0.0 && c2.is_finite()) {
        Verdict::Fail { witness: format!("V(x,1) ranges over [{c1:e}, {c2:e}]") }
    } else {
        match comp.unit_bounds {
            Some((a, b)) if c1 < a * (1.0 - 1e-9) || c2 > b * (1.0 + 1e-9) => {
                Verdict::Fail { witness: format!("V(x,1) in [{c1}, {c2}] leaves declared [{a}, {b}]") }
            }
            _ => Verdict::Pass,
        }
    };
    checks.push(check("bf", "C1 <= V(x,1) <= C2", bf, Some(format!("observed [{c1:.6}, {c2:.6}]"))));

    // (cA)
    let (mut rmin, mut rmax) = (f64::INFINITY, 0.0f64);
    for x in &pts {
        for &t in &all_t {
            let r = comp.density(s, x, t)? * t / comp.value(s, x, t)?;
            rmin = rmin.min(r);
            rmax = rmax.max(r);
        }
    }
    let ca = if !(rmin > 1.0 && rmax.is_finite()) {
        Verdict::Fail { witness: format!("vt/V reaches {rmin:.6}") }
    } else {
        match comp.ratio_bounds {
            Some((a, b)) if rmin < a - 1e-3 || rmax > b + 1e-3 => {
                Verdict::Fail { witness: format!("vt/V in [{rmin:.6}, {rmax:.6}] leaves declared [{a}, {b}]") }
            }
            _ => Verdict::Pass,
        }
    };
    checks.push(check("cA", "1 < v- <= v t / V <= v+", ca, Some(format!("observed [{rmin:.6}, {rmax:.6}]"))));

    // ≪
    let v = |x: &[f64], t: f64| comp.value(s, x, t);
    let slower = essentially_slower(s, &v, grid, &pts)?;
    checks.push(check("slower", "V(x,kt)/H_*(x,t) -> 0 as t -> infinity (ladder heuristic)", slower, None));

    // small-t ladders of V/H, from t = 1 down to t_min
    let mut descending = small_t.clone();
    descending.reverse();
    let mut mla1b = Verdict::Pass;
    let mut mla1 = Verdict::Pass;
    for x in &pts {
        let ratios: Vec<f64> = descending.iter().map(|&t| Ok(v(x, t)? / s.base.big_h(x, t)?)).collect::<Result<_>>()?;
        let (vanish, tau) = vanishing_tail(&ratios, grid.tail);
        if !vanish && !mla1b.is_failure() {
            mla1b = Verdict::Fail { witness: format!("|x| = {:.3}: V/H = {:.6} at t = {:.0e} (tail tau {tau:.3})", norm(x), ratios.last().unwrap(), grid.t_min) };
        }
        let tail = &ratios[ratios.len().saturating_sub(grid.tail)..];
        if kendall_tau(tail) > 0.99 && *ratios.last().unwrap() > 10.0 * ratios[0] && !mla1.is_failure() {
            mla1 = Verdict::Fail { witness: format!("|x| = {:.3}: V/H grows to {:.3e} at t = {:.0e}", norm(x), ratios.last().unwrap(), grid.t_min) };
        }
    }
    checks.push(check("mla1b", "V(x,t)/H(x,t) -> 0 as t -> 0", mla1b, None));
    checks.push(check("mla1", "limsup_{t->0} V(x,t)/H(x,t) < infinity", mla1, None));

    // (mla2): some a in (0,1) with V <= H^a H_*^{1-a} on (0,1]
    let mut rows = Vec::new();
    for x in &pts {
        for &t in &small_t {
            rows.push((v(x, t)?, s.base.big_h(x, t)?, s.eval_h_star(x, t)?));
        }
    }
    let witness_a = (1..100).map(|i| i as f64 / 100.0).find(|&a| {
        rows.iter().all(|&(vv, h, hs)| vv.ln() <= a * h.ln() + (1.0 - a) * hs.ln() + 1e-9)
    });
    let mla2 = match witness_a {
        Some(a) => check("mla2", "V <= H^a H_*^(1-a) for t <= 1", Verdict::Pass, Some(format!("a = {a:.2}"))),
        None => check(
            "mla2",
            "V <= H^a H_*^(1-a) for t <= 1",
            Verdict::Fail { witness: "no a in {0.01, ..., 0.99} works on the ladder".into() },
            None,
        ),
    };
    checks.push(mla2);

    // auxiliary candidate R(t) = t^r, r in (1, p*-/q+)
    let upper = model.p_star_minus() / model.q_plus();
    let (aux_exponent, aux_checks) = if upper > 1.0 {
        let r = 0.5 * (1.0 + upper);
        let rc = CompanionFunction::power(r);
        let ratio = Verdict::Pass;
        let unit = if (rc.value(s, &pts[0], 1.0)? - 1.0).abs() < 1e-12 { Verdict::Pass } else { Verdict::Fail { witness: "R(1) != 1".into() } };
        let composed = |x: &[f64], t: f64| Ok(s.base.big_h(x, t)?.powf(r));
        let slow = essentially_slower(s, &composed, grid, &pts)?;
        (
            Some(r),
            vec![
                check("aux.ratio", "1 < r- <= R'(t)t/R(t) <= r+ < p*-/q+", ratio, Some(format!("r = {r:.6} < {upper:.6}"))),
                check("aux.unit", "R(x,1) is bounded above and below", unit, None),
                check("aux.slower", "R(H(x,t)) << H_*(x,t) (ladder heuristic)", slow, None),
            ],
        )
    } else {
        (
            None,
            vec![check(
                "aux.ratio",
                "1 < r- <= R'(t)t/R(t) <= r+ < p*-/q+",
                Verdict::Unverifiable { reason: format!("p*-/q+ = {upper:.6} <= 1 leaves no exponent") },
                None,
            )],
        )
    };

    Ok(CompanionReport {
        companion: comp.clone(),
        checks,
        observed_ratio: (rmin, rmax),
        observed_unit: (c1, c2),
        aux_exponent,
        aux_checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DoublePhaseModel, Potential};
    use crate::nfunction::NFunctionHandle;

    fn classical() -> SobolevConjugateHandle {
        let m = DoublePhaseModel::constant(3, 2.0, 2.5, 0.0, Potential::Constant { v0: 1.0 }).unwrap();
        SobolevConjugateHandle::new(NFunctionHandle::new(m))
    }

    #[test]
    fn h_as_companion() {
        let s = classical();
        let r = companion_check(&s, &CompanionFunction::new(CompanionKind::SameAsH), &CompanionGrid::default()).unwrap();
        assert_eq!(r.verdict("bf"), Some(&Verdict::Pass));
        assert_eq!(r.verdict("cA"), Some(&Verdict::Pass));
        assert!((r.observed_ratio.0 - 2.0).abs() < 1e-9 && (r.observed_ratio.1 - 2.0).abs() < 1e-9);
        assert!(matches!(r.verdict("slower"), Some(Verdict::Consistent { .. })));
        assert!(matches!(r.verdict("mla1b"), Some(Verdict::Fail { .. })));
        assert_eq!(r.verdict("mla1"), Some(&Verdict::Pass));
    }

    #[test]
    fn cubic_companion() {
        let s = classical();
        let r = companion_check(&s, &CompanionFunction::power(3.0), &CompanionGrid::default()).unwrap();
        assert_eq!(r.verdict("cA"), Some(&Verdict::Pass));
        assert!((r.observed_ratio.0 - 3.0).abs() < 1e-12);
        assert_eq!(r.verdict("mla1b"), Some(&Verdict::Pass));
        // at t = 1 the bound asks 1 <= 2^(6a-7), so no a works
        assert!(matches!(r.verdict("mla2"), Some(Verdict::Fail { .. })));
        assert!(matches!(r.verdict("slower"), Some(Verdict::Consistent { .. })));
    }

    #[test]
    fn h_star_is_not_slower_than_itself() {
        let s = classical();
        let r = companion_check(&s, &CompanionFunction::new(CompanionKind::SobolevConjugate), &CompanionGrid::default()).unwrap();
        assert!(matches!(r.verdict("slower"), Some(Verdict::Inconsistent { .. })));
    }

    #[test]
    fn aux_candidate_for_worked_model() {
        let m = DoublePhaseModel::constant(3, 2.0, 2.5, 1.0, Potential::Constant { v0: 1.0 }).unwrap();
        let s = SobolevConjugateHandle::new(NFunctionHandle::new(m));
        let r = companion_check(&s, &CompanionFunction::power(3.0), &CompanionGrid::default()).unwrap();
        assert!((r.aux_exponent.unwrap() - 1.7).abs() < 1e-12);
        assert!(r.aux_checks.iter().all(|c| !c.verdict.is_failure()));
    }
}
