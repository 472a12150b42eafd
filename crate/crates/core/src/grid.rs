//! Rectangular `(q1, p1)` lattices carrying masked scalar fields.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn uniform_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Resolution and extent of a phase-space grid over the atomic disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub res: usize,
    /// Half-width of the square; defaults to the disk radius `√(4j)`.
    pub half_width: Option<f64>,
}

impl GridSpec {
    pub fn new(res: usize) -> Self {
        GridSpec {
            res,
            half_width: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.res < 2 {
            return Err(Error::InvalidParams(format!(
                "grid resolution must be at least 2, got {}",
                self.res
            )));
        }
        if let Some(w) = self.half_width {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "grid half-width must be positive, got {w}"
                )));
            }
        }
        Ok(())
    }

    pub fn axes(&self, params: &ModelParams) -> (Vec<f64>, Vec<f64>) {
        let w = self.half_width.unwrap_or_else(|| (4.0 * params.j()).sqrt());
        let axis = uniform_axis(-w, w, self.res);
        (axis.clone(), axis)
    }

    /// Grid with every point strictly inside the disk `q1² + p1² < 4j` unmasked.
    pub fn disk_grid(&self, params: &ModelParams) -> Result<PhaseGrid> {
        self.validate()?;
        let (q1_axis, p1_axis) = self.axes(params);
        let limit = 4.0 * params.j();
        let mask = Array2::from_shape_fn((p1_axis.len(), q1_axis.len()), |(r, c)| {
            q1_axis[c] * q1_axis[c] + p1_axis[r] * p1_axis[r] < limit
        });
        let values = Array2::zeros(mask.dim());
        Ok(PhaseGrid {
            q1_axis,
            p1_axis,
            values,
            mask,
        })
    }
}

/// Scalar field on a `(q1, p1)` lattice. Rows index `p1`, columns index `q1`;
/// `mask[r, c]` is true where the value is defined.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    pub q1_axis: Vec<f64>,
    pub p1_axis: Vec<f64>,
    pub values: Array2<f64>,
    pub mask: Array2<bool>,
}

impl PhaseGrid {
    pub fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }

    /// Unmasked points as `(row, col, q1, p1)` in row-major order.
    pub fn active_points(&self) -> Vec<(usize, usize, f64, f64)> {
        let (rows, cols) = self.dim();
        let mut out = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if self.mask[[r, c]] {
                    out.push((r, c, self.q1_axis[c], self.p1_axis[r]));
                }
            }
        }
        out
    }

    pub fn active_values(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(self.mask.iter())
            .filter(|(_, &m)| m)
            .map(|(&v, _)| v)
            .collect()
    }

    pub fn active_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Mean and population variance over unmasked points.
    pub fn mean_and_variance(&self) -> (f64, f64) {
        population_stats(&self.active_values())
    }

    /// Axes divided by `√j`.
    pub fn rescaled(&self, params: &ModelParams) -> PhaseGrid {
        let s = params.j().sqrt();
        PhaseGrid {
            q1_axis: self.q1_axis.iter().map(|x| x / s).collect(),
            p1_axis: self.p1_axis.iter().map(|x| x / s).collect(),
            ..self.clone()
        }
    }
}

/// Mean and population variance `mean(x²) − mean(x)²` (computed two-pass).
pub fn population_stats(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}
