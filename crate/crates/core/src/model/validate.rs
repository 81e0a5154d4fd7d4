//! Sampled verdicts for the structural hypotheses on exponents, potential and
//! nonlinearity. Failures are verdicts with a witness, never errors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::nonlinearity::{ladder_sup, sigma_window, LADDER_TOP};
use super::{norm, DoublePhaseModel, Nonlinearity};
use crate::numerics::{ball_volume, cube_to_ball, cube_to_sphere, geometric_ladder, halton, kendall_tau};

/// Where and how densely hypotheses are sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingSpec {
    /// Radius of the sampled ball in x.
    pub radius: f64,
    /// Upper end of the sampled t-range `[0, t_max]`.
    pub t_max: f64,
    pub n_radii: usize,
    pub n_directions: usize,
    pub n_t: usize,
    pub seed: u64,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        SamplingSpec { radius: 10.0, t_max: 100.0, n_radii: 64, n_directions: 32, n_t: 64, seed: 0 }
    }
}

impl SamplingSpec {
    /// Points `r_i · ω_j` with radii spread over `[0, radius]` and seeded
    /// quasi-random directions.
    pub fn points(&self, d: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let shift: Vec<f64> = (0..d.saturating_sub(1).max(1)).map(|_| rng.gen::<f64>()).collect();
        let dirs: Vec<Vec<f64>> = (0..self.n_directions)
            .map(|j| {
                let u: Vec<f64> = halton(j as u64, shift.len())
                    .iter()
                    .zip(&shift)
                    .map(|(a, s)| (a + s).fract())
                    .collect();
                cube_to_sphere(&u, d)
            })
            .collect();
        let mut pts = Vec::with_capacity(self.n_radii * self.n_directions);
        for i in 0..self.n_radii {
            let r = self.radius * i as f64 / (self.n_radii.max(2) - 1) as f64;
            for dir in &dirs {
                pts.push(dir.iter().map(|c| c * r).collect());
            }
        }
        pts
    }

    /// Half the t-samples on `[0, 1]` (uniform, including both ends), half geometric on `(1, t_max]`.
    pub fn t_values(&self) -> Vec<f64> {
        let n_lo = (self.n_t / 2).max(2);
        let n_hi = self.n_t.saturating_sub(n_lo).max(1);
        let mut ts: Vec<f64> = (0..n_lo).map(|i| i as f64 / (n_lo - 1) as f64).collect();
        if self.t_max > 1.0 {
            let lad = geometric_ladder(1.0, self.t_max, n_hi + 1);
            ts.extend(lad.into_iter().skip(1));
        }
        ts
    }
}

/// Outcome of one sub-hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail { witness: String },
    /// The sampled region is too small to decide.
    Unverifiable { reason: String },
    /// Ladder evidence for a limit statement agrees with it; not a proof.
    Consistent { evidence: String },
    Inconsistent { witness: String },
}

impl Verdict {
    pub fn is_failure(&self) -> bool {
        matches!(self, Verdict::Fail { .. } | Verdict::Inconsistent { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    pub statement: String,
    #[serde(flatten)]
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    /// `[d/p⁻, q⁺/(q⁺−p⁻+1)]` when a nonlinearity is present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_window: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_in_window: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_tilde: Option<f64>,
    pub sampling: SamplingSpec,
}

impl ValidationReport {
    pub fn get(&self, id: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn verdict(&self, id: &str) -> Option<&Verdict> {
        self.get(id).map(|c| &c.verdict)
    }

    pub fn any_failure(&self) -> bool {
        self.checks.iter().any(|c| c.verdict.is_failure())
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.verdict.is_failure())
    }
}

fn check(id: &str, statement: &str, verdict: Verdict) -> Check {
    Check { id: id.into(), statement: statement.into(), verdict, detail: None }
}

fn fmt_x(x: &[f64]) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v:.4}")).collect();
    format!("({})", parts.join(", "))
}

const SLACK: f64 = 1e-12;

/// Checks (H)(i)–(iv), (V0)(i)–(ii), (V1)(ii) and, when given, (F)(i)–(iv).
pub fn validate_hypotheses(model: &DoublePhaseModel, nl: Option<&Nonlinearity>, spec: &SamplingSpec) -> ValidationReport {
    let pts = spec.points(model.d);
    let ts = spec.t_values();
    let mut checks = vec![
        check_bounds(model, &pts, &ts),
        check_t_profile(model, &pts, &ts),
        check_lipschitz(model, &pts, &ts, spec.seed),
        check_ratio(model),
        check_potential_floor(model, &pts),
        check_sublevel_measure(model, spec),
        check_inverse_potential(model),
    ];
    let (mut window, mut in_window, mut c_tilde) = (None, None, None);
    if let Some(nl) = nl {
        checks.push(check_majorant(model, nl, &ts));
        checks.push(check_superlinear(model, nl));
        checks.push(check_small_t(model, nl));
        let (c, w, ct) = check_growth(model, nl);
        checks.push(c);
        window = Some(w);
        in_window = Some(nl.sigma >= w.0 && nl.sigma <= w.1);
        c_tilde = ct;
    }
    ValidationReport { checks, sigma_window: window, sigma_in_window: in_window, c_tilde, sampling: *spec }
}

fn check_bounds(m: &DoublePhaseModel, pts: &[Vec<f64>], ts: &[f64]) -> Check {
    let stmt = "2 ≤ p⁻ ≤ p ≤ p⁺ < d, 2 ≤ q⁻ ≤ q ≤ q⁺, p < q < p⁻_*";
    let d = m.d as f64;
    let (pm, pp, qm, qp) = (m.p_minus(), m.p_plus(), m.q_minus(), m.q_plus());
    let pstar = m.p_star_minus();
    if pm < 2.0 || pp >= d || qm < 2.0 {
        return check(
            "H.i",
            stmt,
            Verdict::Fail { witness: format!("bounds p⁻ = {pm}, p⁺ = {pp}, q⁻ = {qm}, d = {d}") },
        );
    }
    for x in pts {
        for &t in ts {
            let p = m.p.eval(x, t);
            let q = m.q.eval(x, t);
            let in_p = p >= pm - SLACK && p <= pp + SLACK;
            let in_q = q >= qm - SLACK && q <= qp + SLACK;
            let ordered = if m.diagnostic { p <= q } else { p < q } && q < pstar;
            if !(in_p && in_q && ordered) {
                return check(
                    "H.i",
                    stmt,
                    Verdict::Fail { witness: format!("x = {}, t = {t}: p = {p}, q = {q}, p⁻_* = {pstar}", fmt_x(x)) },
                );
            }
        }
    }
    check("H.i", stmt, Verdict::Pass)
}

fn check_t_profile(m: &DoublePhaseModel, pts: &[Vec<f64>], ts: &[f64]) -> Check {
    let stmt = "p, q constant in t on [0,1] and nondecreasing for t ≥ 1";
    for x in pts {
        for (name, e) in [("p", &m.p), ("q", &m.q)] {
            let at_one = e.eval(x, 1.0);
            let mut prev = at_one;
            for &t in ts {
                let v = e.eval(x, t);
                if t <= 1.0 && v != at_one {
                    return check(
                        "H.ii",
                        stmt,
                        Verdict::Fail { witness: format!("{name}(x,{t}) = {v} ≠ {name}(x,1) = {at_one} at x = {}", fmt_x(x)) },
                    );
                }
                if t > 1.0 {
                    if v < prev - SLACK {
                        return check(
                            "H.ii",
                            stmt,
                            Verdict::Fail { witness: format!("{name} decreases at t = {t}, x = {}", fmt_x(x)) },
                        );
                    }
                    prev = v;
                }
            }
        }
    }
    check("H.ii", stmt, Verdict::Pass)
}

fn check_lipschitz(m: &DoublePhaseModel, pts: &[Vec<f64>], ts: &[f64], seed: u64) -> Check {
    let stmt = "|p(x,t) − p(y,t)| ≤ c_p|x − y| and likewise for q";
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let pairs = 4 * pts.len();
    for _ in 0..pairs {
        let x = &pts[rng.gen_range(0..pts.len())];
        let y = &pts[rng.gen_range(0..pts.len())];
        let t = ts[rng.gen_range(0..ts.len())];
        let dist = norm(&x.iter().zip(y).map(|(a, b)| a - b).collect::<Vec<_>>());
        for (name, e) in [("p", &m.p), ("q", &m.q)] {
            let diff = (e.eval(x, t) - e.eval(y, t)).abs();
            if diff > e.lipschitz_x() * dist * (1.0 + 1e-12) + SLACK {
                return check(
                    "H.iii",
                    stmt,
                    Verdict::Fail {
                        witness: format!(
                            "{name}: |Δ| = {diff} > {}·{dist} between {} and {}",
                            e.lipschitz_x(),
                            fmt_x(x),
                            fmt_x(y)
                        ),
                    },
                );
            }
        }
    }
    check("H.iii", stmt, Verdict::Pass)
}

fn check_ratio(m: &DoublePhaseModel) -> Check {
    let stmt = "q⁺/p⁻ < 1 + 1/d";
    let ratio = m.q_plus() / m.p_minus();
    let bound = 1.0 + 1.0 / m.d as f64;
    if ratio < bound {
        check("H.iv", stmt, Verdict::Pass)
    } else {
        check("H.iv", stmt, Verdict::Fail { witness: format!("q⁺/p⁻ = {ratio} ≥ 1 + 1/d = {bound}") })
    }
}

fn check_potential_floor(m: &DoublePhaseModel, pts: &[Vec<f64>]) -> Check {
    let stmt = "V continuous with V(x) ≥ V₀ > 0";
    let v0 = m.potential.floor();
    if !(v0 > 0.0) {
        return check("V0.i", stmt, Verdict::Fail { witness: format!("V₀ = {v0}") });
    }
    for x in pts {
        let v = m.v(x);
        if !(v >= v0 - SLACK) {
            return check("V0.i", stmt, Verdict::Fail { witness: format!("V({}) = {v} < V₀ = {v0}", fmt_x(x)) });
        }
    }
    check("V0.i", stmt, Verdict::Pass)
}

/// `|{V < L}|` for `L = 2^k V₀`: Monte Carlo inside the sampled ball, tail from the
/// potential's declared behaviour at infinity.
fn check_sublevel_measure(m: &DoublePhaseModel, spec: &SamplingSpec) -> Check {
    let stmt = "|{V < L}| < ∞ for every L > 0";
    let d = m.d;
    let v0 = m.potential.floor();
    let n_mc = 20_000;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0xb0b);
    let shift: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
    let samples: Vec<Vec<f64>> = (0..n_mc)
        .map(|i| {
            let u: Vec<f64> = halton(i as u64, d).iter().zip(&shift).map(|(a, s)| (a + s).fract()).collect();
            cube_to_ball(&u, spec.radius)
        })
        .collect();
    let ball = ball_volume(d, spec.radius);
    let mut measures = Vec::new();
    for k in 1..=8 {
        let level = 2f64.powi(k) * v0;
        let inside: Vec<&Vec<f64>> = samples.iter().filter(|x| m.v(x) < level).collect();
        measures.push(format!("|{{V < {level}}} ∩ B| ≈ {:.4}", ball * inside.len() as f64 / n_mc as f64));
        let reach = inside.iter().map(|x| norm(x)).fold(0.0, f64::max);
        match m.potential.limit_at_infinity() {
            Some(v_inf) if level > v_inf => {
                return check(
                    "V0.ii",
                    stmt,
                    Verdict::Fail {
                        witness: format!(
                            "L = {level}: V → {v_inf} < L at infinity, so {{V < L}} contains the exterior of a ball (measure ∞)"
                        ),
                    },
                );
            }
            _ => {}
        }
        if reach > 0.98 * spec.radius {
            if m.potential.limit_at_infinity().is_none() {
                // coercive: every higher rung is bounded as well
                measures.push(format!("L ≥ {level}: bounded by coercivity"));
                break;
            }
            return check(
                "V0.ii",
                stmt,
                Verdict::Unverifiable {
                    reason: format!(
                        "{{V < {level}}} reaches the sampled radius {} (closed-form radius {:?})",
                        spec.radius,
                        m.potential.sublevel_radius(level)
                    ),
                },
            );
        }
    }
    Check { detail: Some(measures.join("; ")), ..check("V0.ii", stmt, Verdict::Pass) }
}

/// `∫_{B₁(x)} 1/V` along `|x| = 2^k`.
fn check_inverse_potential(m: &DoublePhaseModel) -> Check {
    let stmt = "∫_{B₁(x)} 1/V → 0 as |x| → ∞";
    let d = m.d;
    let unit = ball_volume(d, 1.0);
    let nodes: Vec<Vec<f64>> = (0..4000).map(|i| cube_to_ball(&halton(i, d), 1.0)).collect();
    let mut values = Vec::new();
    for k in 0..12 {
        let mut centre = vec![0.0; d];
        centre[0] = 2f64.powi(k);
        let mean: f64 = nodes
            .iter()
            .map(|y| {
                let z: Vec<f64> = y.iter().zip(&centre).map(|(a, b)| a + b).collect();
                1.0 / m.v(&z)
            })
            .sum::<f64>()
            / nodes.len() as f64;
        values.push(unit * mean);
    }
    if let Some(v_inf) = m.potential.limit_at_infinity() {
        return check(
            "V1.ii",
            stmt,
            Verdict::Fail { witness: format!("V → {v_inf} at infinity, so the integral tends to |B₁|/{v_inf} > 0") },
        );
    }
    let tau = kendall_tau(&values);
    let last = *values.last().unwrap();
    if tau < -0.99 && last < 1e-3 * values[0] {
        check(
            "V1.ii",
            stmt,
            Verdict::Consistent { evidence: format!("decreasing over |x| = 1..2048, last value {last:.3e}") },
        )
    } else {
        check("V1.ii", stmt, Verdict::Inconsistent { witness: format!("ladder values {values:?}") })
    }
}

fn check_majorant(m: &DoublePhaseModel, nl: &Nonlinearity, ts: &[f64]) -> Check {
    let stmt = "|f(t)| ≤ b(|t|) with q⁺ ≤ b⁻ ≤ b⁺ < p⁻_*";
    let (bm, bp) = (nl.b_minus(), nl.b_plus());
    if !(m.q_plus() <= bm && bm <= bp && bp < m.p_star_minus()) {
        return check(
            "F.i",
            stmt,
            Verdict::Fail {
                witness: format!("b⁻ = {bm}, b⁺ = {bp}, q⁺ = {}, p⁻_* = {}", m.q_plus(), m.p_star_minus()),
            },
        );
    }
    let lad = geometric_ladder(1e-6, LADDER_TOP, 600);
    for &t in ts.iter().chain(&lad) {
        for s in [t, -t] {
            if nl.f(s).abs() > nl.b(s.abs()) * (1.0 + 1e-12) {
                return check(
                    "F.i",
                    stmt,
                    Verdict::Fail { witness: format!("|f({s})| = {} > b = {}", nl.f(s).abs(), nl.b(s.abs())) },
                );
            }
        }
    }
    check("F.i", stmt, Verdict::Pass)
}

fn check_superlinear(m: &DoublePhaseModel, nl: &Nonlinearity) -> Check {
    let stmt = "F(t)/|t|^{q⁺} → +∞ as |t| → ∞";
    let qp = m.q_plus();
    let lad = geometric_ladder(1.0, LADDER_TOP, 64);
    let ratios: Vec<f64> = lad.iter().map(|&t| nl.big_f(t) / t.powf(qp)).collect();
    let tail = &ratios[ratios.len() - 8..];
    let tau = kendall_tau(tail);
    let growth = tail[7] / tail[0];
    let symmetric = lad.iter().all(|&t| nl.big_f(-t) == nl.big_f(t));
    if tau > 0.99 && growth > 1.0 && tail[7] > ratios[0] && symmetric {
        check(
            "F.ii",
            stmt,
            Verdict::Consistent {
                evidence: format!("F/|t|^q⁺ strictly increasing on the tail of a ladder to 1e6, reaching {:.4}", tail[7]),
            },
        )
    } else {
        check(
            "F.ii",
            stmt,
            Verdict::Inconsistent { witness: format!("tail ratios {tail:?} (Kendall τ = {tau:.3})") },
        )
    }
}

fn check_small_t(m: &DoublePhaseModel, nl: &Nonlinearity) -> Check {
    let stmt = "f(t) = o(|t|^{p⁻−1}) as t → 0";
    let pm = m.p_minus();
    // descending ladder 1 → 1e-6
    let lad: Vec<f64> = geometric_ladder(1e-6, 1.0, 64).into_iter().rev().collect();
    let ratios: Vec<f64> = lad.iter().map(|&t| nl.f(t).abs() / t.powf(pm - 1.0)).collect();
    let tail = &ratios[ratios.len() - 8..];
    let last = tail[7];
    let head = ratios.iter().cloned().fold(0.0, f64::max);
    if last == 0.0 || (kendall_tau(tail) < -0.99 && last < 1e-3 * head.max(f64::MIN_POSITIVE)) {
        check(
            "F.iii",
            stmt,
            Verdict::Consistent { evidence: format!("|f(t)|/t^(p⁻−1) = {last:.3e} at t = 1e-6") },
        )
    } else {
        check("F.iii", stmt, Verdict::Inconsistent { witness: format!("small-t ratios {tail:?}") })
    }
}

fn check_growth(m: &DoublePhaseModel, nl: &Nonlinearity) -> (Check, (f64, f64), Option<f64>) {
    let stmt = "F̃ > 0 for large |t|, σ > d/p⁻, |f|^σ ≤ c̃|t|^{(p⁻−1)σ}F̃ for |t| ≥ r₀";
    let (pm, qp) = (m.p_minus(), m.q_plus());
    let window = sigma_window(m.d, pm, qp);
    if !(nl.sigma > window.0) {
        let c = check(
            "F.iv",
            stmt,
            Verdict::Fail { witness: format!("σ = {} ≤ d/p⁻ = {}", nl.sigma, window.0) },
        );
        return (c, window, None);
    }
    let Some(ct) = nl.c_tilde(pm, qp) else {
        let c = check(
            "F.iv",
            stmt,
            Verdict::Fail { witness: format!("F̃ not positive on [r₀, 1e6] with r₀ = {}", nl.r0) },
        );
        return (c, window, None);
    };
    let lad = geometric_ladder(nl.r0, LADDER_TOP.max(10.0 * nl.r0), 257);
    for &t in &lad {
        for s in [t, -t] {
            let lhs = nl.f(s).abs().powf(nl.sigma);
            let rhs = ct * s.abs().powf((pm - 1.0) * nl.sigma) * nl.f_tilde_with(qp, s);
            if lhs > rhs {
                let c = check("F.iv", stmt, Verdict::Fail { witness: format!("t = {s}: {lhs} > {rhs}") });
                return (c, window, Some(ct));
            }
        }
    }
    // the growth ratio must not be increasing at the end of the ladder
    let ratio = |t: f64| nl.f(t).abs().powf(nl.sigma) / (t.powf((pm - 1.0) * nl.sigma) * nl.f_tilde_with(qp, t));
    let tail: Vec<f64> = lad[lad.len() - 8..].iter().map(|&t| ratio(t)).collect();
    if kendall_tau(&tail) > 0.5 && ladder_sup(ratio, nl.r0, LADDER_TOP) >= ct {
        let c = check(
            "F.iv",
            stmt,
            Verdict::Unverifiable { reason: "growth ratio still increasing at t = 1e6".into() },
        );
        return (c, window, Some(ct));
    }
    (check("F.iv", stmt, Verdict::Pass), window, Some(ct))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_model, ModelConfig};

    fn worked() -> DoublePhaseModel {
        make_model("constant", &[3.0, 2.0, 2.5, 1.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn worked_model_passes_structure_and_potential() {
        let r = validate_hypotheses(&worked(), None, &SamplingSpec::default());
        for id in ["H.i", "H.ii", "H.iii", "H.iv", "V0.i", "V0.ii"] {
            assert_eq!(r.verdict(id), Some(&Verdict::Pass), "{id}: {:?}", r.get(id));
        }
        assert!(matches!(r.verdict("V1.ii"), Some(Verdict::Consistent { .. })));
    }

    #[test]
    fn constant_potential_fails_sublevel_with_witness_two() {
        let m = make_model("constant", &[3.0, 2.0, 2.5, 1.0, 1.0, 0.0]).unwrap();
        let r = validate_hypotheses(&m, None, &SamplingSpec::default());
        match r.verdict("V0.ii") {
            Some(Verdict::Fail { witness }) => assert!(witness.starts_with("L = 2:"), "{witness}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ratio_violation_is_a_verdict() {
        let mut cfg: ModelConfig = worked().to_config();
        cfg.q = super::super::ExponentSpec::Value(3.0);
        cfg.asymptotics = None;
        let m = DoublePhaseModel::from_config_unchecked(&cfg).unwrap();
        let r = validate_hypotheses(&m, None, &SamplingSpec::default());
        assert!(matches!(r.verdict("H.iv"), Some(Verdict::Fail { .. })));
    }

    #[test]
    fn example_nonlinearity_passes_growth_conditions() {
        let m = worked();
        let nl = Nonlinearity::power_log(2.5);
        let r = validate_hypotheses(&m, Some(&nl), &SamplingSpec::default());
        assert_eq!(r.verdict("F.i"), Some(&Verdict::Pass));
        assert!(matches!(r.verdict("F.ii"), Some(Verdict::Consistent { .. })));
        assert!(matches!(r.verdict("F.iii"), Some(Verdict::Consistent { .. })));
        assert_eq!(r.verdict("F.iv"), Some(&Verdict::Pass), "{:?}", r.get("F.iv"));
        let (lo, hi) = r.sigma_window.unwrap();
        assert_eq!(lo, 1.5);
        assert!((hi - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.sigma_in_window, Some(false));
    }

    #[test]
    fn zero_nonlinearity_is_not_superlinear() {
        let r = validate_hypotheses(&worked(), Some(&Nonlinearity::zero(2.5)), &SamplingSpec::default());
        assert!(matches!(r.verdict("F.ii"), Some(Verdict::Inconsistent { .. })));
    }

    #[test]
    fn verdicts_are_deterministic() {
        let m = make_model("log_saturating_modulated", &[3.0, 2.0, 0.05, 0.05, 2.3, 0.05, 0.05, 1.0, 1.0, 1.0]).unwrap();
        let s = SamplingSpec { seed: 7, ..Default::default() };
        assert_eq!(validate_hypotheses(&m, None, &s), validate_hypotheses(&m, None, &s));
    }
}
