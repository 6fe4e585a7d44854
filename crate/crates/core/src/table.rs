use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampled density on a strictly increasing grid, with a declared support
/// window `[a, b]`. Values outside the grid are taken to be zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityTable {
    grid: Vec<f64>,
    values: Vec<f64>,
    support: (f64, f64),
}

impl DensityTable {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, support: (f64, f64)) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::InvalidSpec(format!(
                "density table needs at least two samples with matching lengths (grid {}, values {})",
                grid.len(),
                values.len()
            )));
        }
        if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidSpec(
                "density table grid must be finite and strictly increasing".into(),
            ));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidSpec(format!(
                "density table values must be finite and nonnegative (found {v})"
            )));
        }
        let (a, b) = support;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidSpec(format!(
                "density table support [{a}, {b}] is not an interval"
            )));
        }
        Ok(Self {
            grid,
            values,
            support,
        })
    }

    /// Table whose support window is the grid's own range.
    pub fn from_samples(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let support = match (grid.first(), grid.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => (0.0, 0.0),
        };
        Self::new(grid, values, support)
    }

    pub fn from_pairs(pairs: &[[f64; 2]]) -> Result<Self> {
        let (grid, values) = pairs.iter().map(|p| (p[0], p[1])).unzip();
        Self::from_samples(grid, values)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn with_support(mut self, support: (f64, f64)) -> Result<Self> {
        let (a, b) = support;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidSpec(format!(
                "density table support [{a}, {b}] is not an interval"
            )));
        }
        self.support = support;
        Ok(self)
    }

    /// Trapezoidal mass of the samples lying in the support window.
    pub fn trapezoid_mass(&self) -> f64 {
        let (a, b) = self.support;
        self.grid
            .windows(2)
            .zip(self.values.windows(2))
            .filter(|(x, _)| x[0] >= a && x[1] <= b)
            .map(|(x, p)| 0.5 * (x[1] - x[0]) * (p[0] + p[1]))
            .sum()
    }

    pub fn check_mass(&self, tol: f64) -> Result<()> {
        let mass = self.trapezoid_mass();
        if (mass - 1.0).abs() > tol {
            return Err(Error::InvalidSpec(format!(
                "density table mass {mass} deviates from 1 by more than {tol:e}"
            )));
        }
        Ok(())
    }

    fn locate(&self, x: f64) -> Option<usize> {
        let n = self.grid.len();
        if x < self.grid[0] || x > self.grid[n - 1] {
            return None;
        }
        let i = self.grid.partition_point(|g| *g <= x);
        Some(i.clamp(1, n - 1) - 1)
    }

    /// Piecewise-linear interpolant, zero outside the grid.
    pub fn linear(&self, x: f64) -> f64 {
        let Some(i) = self.locate(x) else {
            return 0.0;
        };
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let s = (x - x0) / (x1 - x0);
        self.values[i] * (1.0 - s) + self.values[i + 1] * s
    }

    /// Local cubic (four-point Lagrange) interpolant, clamped at zero and
    /// zero outside the grid.
    pub fn cubic(&self, x: f64) -> f64 {
        let Some(i) = self.locate(x) else {
            return 0.0;
        };
        let n = self.grid.len();
        if n < 4 {
            return self.linear(x);
        }
        let start = i.saturating_sub(1).min(n - 4);
        let xs = &self.grid[start..start + 4];
        let ys = &self.values[start..start + 4];
        let mut acc = 0.0;
        for j in 0..4 {
            let mut basis = 1.0;
            for k in 0..4 {
                if k != j {
                    basis *= (x - xs[k]) / (xs[j] - xs[k]);
                }
            }
            acc += ys[j] * basis;
        }
        acc.max(0.0)
    }

    /// Table of `D_a`: grid and support scaled by `a`, values by `1/a`.
    pub fn dilate(&self, a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "dilation factor must be positive, got {a}"
            )));
        }
        Self::new(
            self.grid.iter().map(|x| a * x).collect(),
            self.values.iter().map(|p| p / a).collect(),
            (a * self.support.0, a * self.support.1),
        )
    }

    /// Uniform spacing of the grid, if it has one (relative tolerance 1e-9).
    pub fn uniform_step(&self) -> Option<f64> {
        let n = self.grid.len();
        let h = (self.grid[n - 1] - self.grid[0]) / (n - 1) as f64;
        self.grid
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h)
            .then_some(h)
    }
}
