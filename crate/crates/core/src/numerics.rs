//! Scalar numerical building blocks shared by every module: adaptive Simpson
//! quadrature, monotone root bracketing, golden-section search, monotone cubic
//! interpolation, a tridiagonal solver, low-discrepancy points and a rank
//! correlation used for trend verdicts.

use crate::error::{Error, Result};

/// Outcome of a quadrature: the value and the accumulated Richardson error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SimpsonOptions {
    pub rel_tol: f64,
    pub abs_floor: f64,
    pub max_depth: u32,
}

impl Default for SimpsonOptions {
    fn default() -> Self {
        SimpsonOptions {
            rel_tol: 1e-12,
            abs_floor: 1e-14,
            max_depth: 48,
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
///
/// The tolerance is relative to a coarse estimate of the integral, floored by
/// `abs_floor`, and is distributed over sub-panels in proportion to their length.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    opts: SimpsonOptions,
) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature { value: 0.0, error: 0.0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    // Coarse composite estimate over 8 panels fixes the absolute target.
    let n0 = 8;
    let h0 = (hi - lo) / n0 as f64;
    let mut coarse = 0.0;
    let mut panels = Vec::with_capacity(64);
    let mut fx = f(lo);
    for i in 0..n0 {
        let pa = lo + h0 * i as f64;
        let pb = if i + 1 == n0 { hi } else { lo + h0 * (i + 1) as f64 };
        let pm = 0.5 * (pa + pb);
        let fm = f(pm);
        let fb = f(pb);
        let whole = (pb - pa) / 6.0 * (fx + 4.0 * fm + fb);
        coarse += whole;
        panels.push(Panel {
            a: pa,
            b: pb,
            fa: fx,
            fm,
            fb,
            whole,
            tol: 0.0,
            depth: 0,
        });
        fx = fb;
    }
    if !coarse.is_finite() {
        return Err(Error::QuadratureFailure { a: lo, b: hi, error: f64::INFINITY });
    }
    let target = (opts.rel_tol * coarse.abs()).max(opts.abs_floor);
    for p in panels.iter_mut() {
        p.tol = target * (p.b - p.a) / (hi - lo);
    }

    let mut value = 0.0;
    let mut error = 0.0;
    let mut stack = panels;
    stack.reverse();
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm);
        let right = (p.b - m) / 6.0 * (p.fm + 4.0 * frm + p.fb);
        let delta = left + right - p.whole;
        if !delta.is_finite() {
            return Err(Error::QuadratureFailure { a: lo, b: hi, error: f64::INFINITY });
        }
        if delta.abs() <= 15.0 * p.tol || p.depth >= opts.max_depth || (p.b - p.a) <= f64::EPSILON * m.abs().max(1e-300) * 8.0 {
            if p.depth >= opts.max_depth && delta.abs() > 15.0 * p.tol {
                return Err(Error::QuadratureFailure { a: lo, b: hi, error: error + delta.abs() / 15.0 });
            }
            value += left + right + delta / 15.0;
            error += delta.abs() / 15.0;
        } else {
            let half = 0.5 * p.tol;
            stack.push(Panel {
                a: m,
                b: p.b,
                fa: p.fm,
                fm: frm,
                fb: p.fb,
                whole: right,
                tol: half,
                depth: p.depth + 1,
            });
            stack.push(Panel {
                a: p.a,
                b: m,
                fa: p.fa,
                fm: flm,
                fb: p.fm,
                whole: left,
                tol: half,
                depth: p.depth + 1,
            });
        }
    }
    Ok(Quadrature { value: sign * value, error })
}

/// Finds `x` in `[lo, hi]` with `g(x) = target` for nondecreasing `g` by bisection,
/// stopping when the bracket width is below `rel_tol * hi` (or after `max_iter`).
pub fn bisect_increasing<G: Fn(f64) -> f64>(
    g: G,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
    max_iter: usize,
) -> f64 {
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= rel_tol * hi.abs() {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Expands `hi` by doubling until `g(hi) >= target`, for nondecreasing `g` on `[0, ∞)`.
pub fn expand_upper<G: Fn(f64) -> f64>(g: G, target: f64, start: f64, max_doublings: usize) -> Result<f64> {
    let mut hi = start.max(f64::MIN_POSITIVE);
    for _ in 0..max_doublings {
        if g(hi) >= target {
            return Ok(hi);
        }
        hi *= 2.0;
    }
    Err(Error::BracketFailure { lo: 0.0, hi })
}

/// Golden-section maximization of a unimodal function on `[a, b]`.
/// Returns `(argmax, max)`.
pub fn golden_max<G: Fn(f64) -> f64>(g: G, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = g(c);
    let mut fd = g(d);
    while (b - a).abs() > tol * (1.0 + a.abs().max(b.abs())) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = g(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = g(x);
    let mut best = (x, fx);
    for (xx, ff) in [(c, fc), (d, fd)] {
        if ff > best.1 {
            best = (xx, ff);
        }
    }
    best
}

/// Piecewise-cubic Hermite interpolant with Fritsch–Carlson slope limiting:
/// monotone data yields a monotone interpolant.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::InvalidInput("interpolation needs at least two matching nodes".into()));
        }
        let secants: Vec<f64> = (0..n - 1)
            .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
            .collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            let (a, b) = (secants[i - 1], secants[i]);
            slopes[i] = if a * b <= 0.0 {
                0.0
            } else {
                // weighted harmonic mean (Fritsch–Butland) keeps monotonicity
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                (w1 + w2) / (w1 / a + w2 / b)
            };
        }
        Ok(MonotoneCubic { xs, ys, slopes })
    }

    /// Builds from values and exact derivatives (plain cubic Hermite).
    pub fn with_slopes(xs: Vec<f64>, ys: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || ys.len() != xs.len() || slopes.len() != xs.len() {
            return Err(Error::InvalidInput("interpolation needs matching nodes and slopes".into()));
        }
        Ok(MonotoneCubic { xs, ys, slopes })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    pub fn nodes(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let i = match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => return self.ys[i],
            Err(0) => 0,
            Err(i) if i >= n => n - 2,
            Err(i) => i - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let s = (x - self.xs[i]) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * self.ys[i] + h10 * h * self.slopes[i] + h01 * self.ys[i + 1] + h11 * h * self.slopes[i + 1]
    }
}

/// Solves a tridiagonal system (Thomas algorithm). `lower[i]` couples rows
/// `i+1` and `i`, `upper[i]` couples rows `i` and `i+1`.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::NonFinite("singular tridiagonal pivot".into()));
    }
    if n > 1 {
        c[0] = upper[0] / denom;
    }
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - lower[i - 1] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::NonFinite("singular tridiagonal pivot".into()));
        }
        if i < n - 1 {
            c[i] = upper[i] / denom;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Ok(x)
}

/// Radical inverse of `index` in `base` (van der Corput / Halton coordinate).
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// `dim`-dimensional Halton point in the unit cube (index starts at 1 to skip the origin).
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    (0..dim).map(|k| radical_inverse(index + 1, PRIMES[k % PRIMES.len()])).collect()
}

/// Maps a unit-cube point to the ball of radius `radius` (radial CDF inversion
/// plus a Gaussian-free direction from the remaining coordinates).
pub fn cube_to_ball(u: &[f64], radius: f64) -> Vec<f64> {
    let d = u.len();
    let dir = cube_to_sphere(&u[1..], d);
    let r = radius * u[0].powf(1.0 / d as f64);
    dir.into_iter().map(|c| c * r).collect()
}

/// Deterministic direction on the unit sphere of ℝ^d from `d-1` unit-interval
/// coordinates (hyperspherical angles with area-preserving inversion for d = 3).
pub fn cube_to_sphere(u: &[f64], d: usize) -> Vec<f64> {
    match d {
        1 => vec![if u.first().copied().unwrap_or(0.0) < 0.5 { -1.0 } else { 1.0 }],
        2 => {
            let th = 2.0 * std::f64::consts::PI * u[0];
            vec![th.cos(), th.sin()]
        }
        3 => {
            let z = 1.0 - 2.0 * u[0];
            let s = (1.0 - z * z).max(0.0).sqrt();
            let ph = 2.0 * std::f64::consts::PI * u[1];
            vec![s * ph.cos(), s * ph.sin(), z]
        }
        _ => {
            // Box–Muller on paired coordinates, then normalize.
            let mut g = Vec::with_capacity(d);
            let mut k = 0;
            while g.len() < d {
                let a = u[k % u.len()].clamp(1e-12, 1.0 - 1e-12);
                let b = u[(k + 1) % u.len()];
                let rad = (-2.0 * a.ln()).sqrt();
                g.push(rad * (2.0 * std::f64::consts::PI * b).cos());
                if g.len() < d {
                    g.push(rad * (2.0 * std::f64::consts::PI * b).sin());
                }
                k += 2;
            }
            let n = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
            g.into_iter().map(|v| v / n).collect()
        }
    }
}

/// Kendall rank correlation τ_b of `ys` against their index order.
pub fn kendall_tau(ys: &[f64]) -> f64 {
    let n = ys.len();
    if n < 2 {
        return 0.0;
    }
    let (mut concordant, mut discordant, mut ties) = (0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let s = ys[j] - ys[i];
            if s > 0.0 {
                concordant += 1;
            } else if s < 0.0 {
                discordant += 1;
            } else {
                ties += 1;
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    let denom = (pairs * (pairs - ties as f64)).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        (concordant - discordant) as f64 / denom
    }
}

/// Least-squares slope of `ln y` against `ln x` (points with nonpositive values skipped).
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    if n < 2.0 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Geometric ladder of `n` points from `lo` to `hi` inclusive.
pub fn geometric_ladder(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let r = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|i| lo * (r * i as f64).exp()).collect()
}

/// Volume of the ball of radius `r` in ℝ^d: `π^{d/2} r^d / Γ(1 + d/2)`.
pub fn ball_volume(d: usize, r: f64) -> f64 {
    let h = d as f64 / 2.0;
    std::f64::consts::PI.powf(h) * r.powi(d as i32) / statrs::function::gamma::gamma(1.0 + h)
}

/// Surface area of the unit sphere in ℝ^d.
pub fn sphere_area(d: usize) -> f64 {
    d as f64 * ball_volume(d, 1.0)
}

/// Compensated (Neumaier) summation.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in it {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_power_with_singular_curvature() {
        // ∫₀¹ s^{1.5} ds = 0.4; second derivative blows up at 0.
        let q = adaptive_simpson(|s: f64| s.powf(1.5), 0.0, 1.0, SimpsonOptions::default()).unwrap();
        assert!((q.value - 0.4).abs() < 1e-12);
    }

    #[test]
    fn simpson_reversed_limits_flip_sign() {
        let q = adaptive_simpson(|s: f64| s * s, 2.0, 0.0, SimpsonOptions::default()).unwrap();
        assert!((q.value + 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_reports_non_finite() {
        let r = adaptive_simpson(|s: f64| 1.0 / s, 0.0, 1.0, SimpsonOptions::default());
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }

    #[test]
    fn bisection_finds_square_root() {
        let x = bisect_increasing(|x| x * x, 2.0, 0.0, 2.0, 1e-15, 200);
        assert!((x - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (x, fx) = golden_max(|x| -(x - 0.3) * (x - 0.3) + 1.0, -1.0, 2.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((fx - 1.0).abs() < 1e-12);
    }

    #[test]
    fn monotone_cubic_preserves_monotonicity() {
        let xs = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = vec![0.0, 0.1, 0.1, 5.0, 5.2];
        let c = MonotoneCubic::new(xs, ys).unwrap();
        let mut prev = -1.0;
        for i in 0..=400 {
            let v = c.eval(i as f64 * 0.01);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn tridiagonal_matches_dense_solution() {
        let lower = [1.0, 1.0];
        let diag = [4.0, 4.0, 4.0];
        let upper = [1.0, 1.0];
        let rhs = [5.0, 6.0, 5.0];
        let x = solve_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn kendall_tau_extremes() {
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0, 4.0]), 1.0);
        assert_eq!(kendall_tau(&[4.0, 3.0, 2.0, 1.0]), -1.0);
    }

    #[test]
    fn halton_points_land_in_ball() {
        for i in 0..500 {
            let p = cube_to_ball(&halton(i, 3), 2.0);
            let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(r <= 2.0 + 1e-12);
        }
    }
}
