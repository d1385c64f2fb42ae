use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform partition of `[0, 1]` including both endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    pub fn uniform(n_points: usize) -> Result<Self> {
        if n_points < 3 {
            return Err(Error::InvalidArgument(format!("grid needs at least 3 points, got {n_points}")));
        }
        let last = (n_points - 1) as f64;
        let mut points: Vec<f64> = (0..n_points).map(|i| i as f64 / last).collect();
        points[n_points - 1] = 1.0;
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.points.len() - 1) as f64
    }

    /// Index of the grid point closest to `x` (clamped to `[0, 1]`).
    pub fn nearest_index(&self, x: f64) -> usize {
        let last = self.points.len() - 1;
        let i = (x.clamp(0.0, 1.0) * last as f64).round() as usize;
        i.min(last)
    }

    /// Piecewise-linear interpolation of `values` (one per grid point) at `x`.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        debug_assert_eq!(values.len(), self.points.len());
        let last = self.points.len() - 1;
        let s = x.clamp(0.0, 1.0) * last as f64;
        let i = (s.floor() as usize).min(last - 1);
        let t = s - i as f64;
        if t == 0.0 {
            return values[i];
        }
        values[i] * (1.0 - t) + values[i + 1] * t
    }

    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.points.iter().map(|&x| f(x)).collect()
    }
}
