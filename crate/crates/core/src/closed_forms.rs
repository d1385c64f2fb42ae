//! Closed-form value functions for the three built-in mappings.
//!
//! * linear: the smallest concave majorant of `g`;
//! * worst-case: `min(max g on [0, x], max g on [x, 1])`;
//! * entropic: `-ln` of the greatest convex minorant of `exp(-g)`.
//!
//! All three work on grid samples and serve as independent references for
//! the geometric search in [`crate::majorant`] and the tangency solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gain::GainSpec;
use crate::grid::Grid;
use crate::risk_mapping::{RiskKind, RiskMapping};

/// Tolerance for `V = g` when deciding membership of the stopping set.
pub const TOL_STOP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueTable {
    pub grid: Grid,
    pub g_values: Vec<f64>,
    pub values: Vec<f64>,
    pub stopping_mask: Vec<bool>,
}

impl ValueTable {
    /// Builds a table, marking grid points with `V - g <= TOL_STOP` as stopping.
    pub fn from_values(grid: Grid, g_values: Vec<f64>, values: Vec<f64>) -> Self {
        let stopping_mask = values.iter().zip(&g_values).map(|(v, g)| v - g <= TOL_STOP).collect();
        Self { grid, g_values, values, stopping_mask }
    }

    /// Continuation intervals `(x-, x+)`: each maximal run of non-stopping grid
    /// points, bounded by the neighbouring stopping points (or the ends of `[0, 1]`).
    pub fn components(&self) -> Vec<(f64, f64)> {
        let xs = self.grid.points();
        let n = xs.len();
        let mut out = Vec::new();
        let mut i = 0;
        while i < n {
            if self.stopping_mask[i] {
                i += 1;
                continue;
            }
            let start = i;
            while i < n && !self.stopping_mask[i] {
                i += 1;
            }
            let lo = if start == 0 { 0.0 } else { xs[start - 1] };
            let hi = if i == n { 1.0 } else { xs[i] };
            out.push((lo, hi));
        }
        out
    }

    pub fn value_at(&self, x: f64) -> f64 {
        self.grid.interpolate(&self.values, x)
    }
}

/// Upper concave envelope of `(x_i, y_i)` (x strictly increasing), evaluated
/// at every `x_i`. Monotone-chain scan of the upper hull, linear in between.
pub fn upper_envelope(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 3 {
        return ys.to_vec();
    }
    let mut hull: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (xs[a] - xs[o]) * (ys[i] - ys[o]) - (ys[a] - ys[o]) * (xs[i] - xs[o]);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let mut out = vec![0.0; n];
    for seg in hull.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        out[a] = ys[a];
        for (k, slot) in out.iter_mut().enumerate().take(b).skip(a + 1) {
            let t = (xs[k] - xs[a]) / (xs[b] - xs[a]);
            *slot = (ys[a] * (1.0 - t) + ys[b] * t).max(ys[k]);
        }
    }
    out[n - 1] = ys[n - 1];
    out
}

/// Lower convex envelope, the mirror of [`upper_envelope`].
pub fn lower_envelope(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let neg: Vec<f64> = ys.iter().map(|v| -v).collect();
    upper_envelope(xs, &neg).into_iter().map(|v| -v).collect()
}

/// Smallest concave majorant of samples on a uniform grid.
pub fn concave_majorant(grid: &Grid, samples: &[f64]) -> Result<Vec<f64>> {
    if samples.len() != grid.len() {
        return Err(Error::InvalidArgument(format!("{} samples for a {}-point grid", samples.len(), grid.len())));
    }
    Ok(upper_envelope(grid.points(), samples))
}

/// Value function of the linear problem.
pub fn linear_value(g: &GainSpec, grid: &Grid) -> ValueTable {
    let gs = g.sample(grid);
    let vs = upper_envelope(grid.points(), &gs);
    ValueTable::from_values(grid.clone(), gs, vs)
}

/// Value function under the worst-case mapping: pointwise minimum of the
/// forward and backward running maxima of `g`.
pub fn worst_case_value(g: &GainSpec, grid: &Grid) -> ValueTable {
    let gs = g.sample(grid);
    let n = gs.len();
    let mut forward = gs.clone();
    for i in 1..n {
        forward[i] = forward[i].max(forward[i - 1]);
    }
    let mut backward = gs.clone();
    for i in (0..n - 1).rev() {
        backward[i] = backward[i].max(backward[i + 1]);
    }
    let vs = forward.iter().zip(&backward).map(|(f, b)| f.min(*b)).collect();
    ValueTable::from_values(grid.clone(), gs, vs)
}

/// Value function under the entropic mapping: `-ln` of the greatest convex
/// minorant of `exp(-g)`.
pub fn entropic_value(g: &GainSpec, grid: &Grid) -> ValueTable {
    let gs = g.sample(grid);
    let f: Vec<f64> = gs.iter().map(|v| (-v).exp()).collect();
    let minorant = lower_envelope(grid.points(), &f);
    let vs = minorant.iter().zip(&gs).map(|(m, gv)| (-m.ln()).max(*gv)).collect();
    ValueTable::from_values(grid.clone(), gs, vs)
}

/// Dispatches to the closed form for a built-in mapping.
pub fn oracle_value(rm: &RiskMapping, g: &GainSpec, grid: &Grid) -> Result<ValueTable> {
    match rm.kind() {
        RiskKind::Linear => Ok(linear_value(g, grid)),
        RiskKind::Entropic => Ok(entropic_value(g, grid)),
        RiskKind::WorstCase => Ok(worst_case_value(g, grid)),
        RiskKind::Custom => Err(Error::Unsupported(format!("no closed form for custom mapping `{}`", rm.name()))),
    }
}
