use rayon::prelude::*;

use super::{Grid, NFunctionHandle, SampledField};
use crate::error::{Error, Result};
use crate::numerics::neumaier_sum;

/// Bisection cap for the Luxemburg root.
pub const LUX_MAX_ITER: usize = 200;

const PAR_THRESHOLD: usize = 4096;

fn check_dim(handle: &NFunctionHandle, grid: &Grid) -> Result<()> {
    if grid.dim != handle.d() {
        return Err(Error::DimensionMismatch { grid: grid.dim, model: handle.d() });
    }
    Ok(())
}

/// `Σ w_i [V(x_i)] H(x_i, |values_i|/scale)`.
pub fn modular_values(handle: &NFunctionHandle, grid: &Grid, values: &[f64], weight_by_v: bool, scale: f64) -> Result<f64> {
    check_dim(handle, grid)?;
    let term = |i: usize| -> Result<f64> {
        let v = values[i];
        if v == 0.0 {
            return Ok(0.0);
        }
        let x = grid.point(i);
        let mut t = grid.weights[i] * handle.big_h(x, v.abs() / scale)?;
        if weight_by_v {
            t *= handle.model.v(x);
        }
        Ok(t)
    };
    let terms: Vec<f64> = if values.len() >= PAR_THRESHOLD {
        (0..values.len()).into_par_iter().map(term).collect::<Result<_>>()?
    } else {
        (0..values.len()).map(term).collect::<Result<_>>()?
    };
    Ok(neumaier_sum(terms))
}

/// `ρ(u) = ∫ H(x,|u|)`, or `∫ V H(x,|u|)` when `weight_by_v`.
pub fn modular(handle: &NFunctionHandle, u: &SampledField, weight_by_v: bool) -> Result<f64> {
    modular_values(handle, &u.grid, &u.values, weight_by_v, 1.0)
}

/// The unique `λ > 0` with `rho(λ) = 1` for a strictly decreasing modular map
/// `rho(λ) = ρ(u/λ)`. `sup` seeds the bracket `[sup/10, 10·sup]`.
pub fn luxemburg_by<M: Fn(f64) -> Result<f64>>(rho: M, sup: f64) -> Result<f64> {
    if sup == 0.0 {
        return Ok(0.0);
    }
    let mut lo = sup / 10.0;
    let mut hi = sup * 10.0;
    let mut expand = 0;
    while rho(hi)? > 1.0 {
        hi *= 2.0;
        expand += 1;
        if expand > LUX_MAX_ITER {
            return Err(Error::BracketFailure { lo, hi });
        }
    }
    while rho(lo)? < 1.0 {
        lo /= 2.0;
        expand += 1;
        if expand > LUX_MAX_ITER || lo == 0.0 {
            return Err(Error::BracketFailure { lo, hi });
        }
    }
    for _ in 0..LUX_MAX_ITER {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi || hi / lo - 1.0 < 1e-14 {
            break;
        }
        if rho(mid)? > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = (lo * hi).sqrt();
    let residual = rho(lambda)? - 1.0;
    if residual.abs() > 1e-6 {
        return Err(Error::InversionFailure { t: lambda, residual });
    }
    Ok(lambda)
}

/// Luxemburg norm `inf{λ > 0 : ρ(u/λ) ≤ 1}`.
pub fn luxemburg_norm(handle: &NFunctionHandle, u: &SampledField, weight_by_v: bool) -> Result<f64> {
    check_dim(handle, &u.grid)?;
    if u.is_zero() {
        return Ok(0.0);
    }
    luxemburg_by(|lam| modular_values(handle, &u.grid, &u.values, weight_by_v, lam), u.sup_abs())
}
