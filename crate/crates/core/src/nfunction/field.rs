use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{ball_volume, neumaier_sum};

/// Quadrature nodes and positive weights over a truncated domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub dim: usize,
    /// Node-major flat coordinates, `dim` entries per node.
    pub coords: Vec<f64>,
    pub weights: Vec<f64>,
    pub truncation_radius: f64,
    /// Radial grids store node `i` at `(r_i, 0, …, 0)` with uniform spacing.
    pub radial_step: Option<f64>,
}

impl Grid {
    /// Shells `r_i = iΔr`, `i = 0..=n`, `Δr = r_max/n`, each weighted by the exact
    /// volume of its dual shell `[r_i − Δr/2, r_i + Δr/2] ∩ [0, r_max]`.
    pub fn radial(d: usize, r_max: f64, n: usize) -> Self {
        let dr = r_max / n as f64;
        let unit = ball_volume(d, 1.0);
        let mut coords = vec![0.0; (n + 1) * d];
        let mut weights = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let r = i as f64 * dr;
            coords[i * d] = r;
            let a = (r - 0.5 * dr).max(0.0);
            let b = (r + 0.5 * dr).min(r_max);
            weights.push(unit * (b.powi(d as i32) - a.powi(d as i32)));
        }
        Grid { dim: d, coords, weights, truncation_radius: r_max, radial_step: Some(dr) }
    }

    /// Cell-centred box grid with spacing `h` on `[lo, hi]` (per axis).
    pub fn box_grid(lo: &[f64], hi: &[f64], h: f64) -> Result<Self> {
        let d = lo.len();
        if hi.len() != d || d == 0 || !(h > 0.0) {
            return Err(Error::InvalidInput("box grid needs matching corners and h > 0".into()));
        }
        let counts: Vec<usize> = lo
            .iter()
            .zip(hi)
            .map(|(a, b)| ((b - a) / h).round().max(1.0) as usize)
            .collect();
        let total: usize = counts.iter().product();
        let mut coords = Vec::with_capacity(total * d);
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            for k in 0..d {
                coords.push(lo[k] + (idx[k] as f64 + 0.5) * h);
            }
            for k in (0..d).rev() {
                idx[k] += 1;
                if idx[k] < counts[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        let trunc = lo.iter().zip(hi).map(|(a, b)| a.abs().max(b.abs()).powi(2)).sum::<f64>().sqrt();
        Ok(Grid {
            dim: d,
            coords,
            weights: vec![h.powi(d as i32); total],
            truncation_radius: trunc,
            radial_step: None,
        })
    }

    /// Arbitrary nodes and weights.
    pub fn from_nodes(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.len() != dim * weights.len() {
            return Err(Error::InvalidInput("coordinates do not match the weight count".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidInput("weights must be positive".into()));
        }
        let trunc = coords.chunks(dim).map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
        Ok(Grid { dim, coords, weights, truncation_radius: trunc, radial_step: None })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn measure(&self) -> f64 {
        neumaier_sum(self.weights.iter().copied())
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.point(i).iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Function values (and optionally `|∇u|`) on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
    pub gradient: Option<Vec<f64>>,
}

impl SampledField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>, gradient: Option<Vec<f64>>) -> Result<Self> {
        if values.len() != grid.len() || gradient.as_ref().is_some_and(|g| g.len() != grid.len()) {
            return Err(Error::InvalidInput("field length does not match its grid".into()));
        }
        if values.iter().chain(gradient.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field values".into()));
        }
        Ok(SampledField { grid, values, gradient })
    }

    /// Samples `u` and `|∇u|` from closures of the node coordinates.
    pub fn from_fn<U, G>(grid: Arc<Grid>, u: U, grad: Option<G>) -> Self
    where
        U: Fn(&[f64]) -> f64,
        G: Fn(&[f64]) -> f64,
    {
        let values = (0..grid.len()).map(|i| u(grid.point(i))).collect();
        let gradient = grad.map(|g| (0..grid.len()).map(|i| g(grid.point(i))).collect());
        SampledField { grid, values, gradient }
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let n = grid.len();
        SampledField { grid, values: vec![c; n], gradient: Some(vec![0.0; n]) }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// `c·u` (the gradient magnitude scales by `|c|`).
    pub fn scaled(&self, c: f64) -> Self {
        SampledField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
            gradient: self.gradient.as_ref().map(|g| g.iter().map(|v| c.abs() * v).collect()),
        }
    }

    /// The gradient magnitudes as a field of their own.
    pub fn gradient_field(&self) -> Result<Self> {
        let g = self.gradient.clone().ok_or(Error::MissingGradient)?;
        Ok(SampledField { grid: self.grid.clone(), values: g, gradient: None })
    }

    /// Pointwise `u + v` on the same grid (gradient dropped: magnitudes do not add).
    pub fn plus(&self, other: &SampledField) -> Result<Self> {
        if !Arc::ptr_eq(&self.grid, &other.grid) && *self.grid != *other.grid {
            return Err(Error::InvalidInput("fields live on different grids".into()));
        }
        Ok(SampledField {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
            gradient: None,
        })
    }

    /// `∫ u v` by the shared quadrature.
    pub fn pairing(&self, other: &SampledField) -> f64 {
        neumaier_sum(
            self.grid
                .weights
                .iter()
                .zip(self.values.iter().zip(&other.values))
                .map(|(w, (a, b))| w * a * b),
        )
    }

    /// CSV with columns `x0..x{d-1}, weight, value[, gradient]`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let d = self.dim();
        let mut header: Vec<String> = (0..d).map(|k| format!("x{k}")).collect();
        header.push("weight".into());
        header.push("value".into());
        if self.gradient.is_some() {
            header.push("gradient".into());
        }
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut row: Vec<String> = self.grid.point(i).iter().map(|v| format!("{v:e}")).collect();
            row.push(format!("{:e}", self.grid.weights[i]));
            row.push(format!("{:e}", self.values[i]));
            if let Some(g) = &self.gradient {
                row.push(format!("{:e}", g[i]));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.clone();
        let d = header.iter().filter(|h| h.starts_with('x')).count();
        let has_grad = header.iter().any(|h| h == "gradient");
        if d == 0 || header.len() != d + 2 + has_grad as usize {
            return Err(Error::InvalidInput(format!("unexpected CSV header {header:?}")));
        }
        let (mut coords, mut weights, mut values, mut grad) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for rec in r.records() {
            let rec = rec?;
            let nums: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::InvalidInput(format!("{s}: {e}"))))
                .collect::<Result<_>>()?;
            coords.extend_from_slice(&nums[..d]);
            weights.push(nums[d]);
            values.push(nums[d + 1]);
            if has_grad {
                grad.push(nums[d + 2]);
            }
        }
        let grid = Arc::new(Grid::from_nodes(d, coords, weights)?);
        SampledField::new(grid, values, has_grad.then_some(grad))
    }
}
