//! The two-point exit functions `h^{y,z}_{beta,gamma}` and the admissible set.
//!
//! For `y < x < z`, `h(x)` is the risk value, for Brownian motion started at
//! `x`, of receiving `beta` if `y` is hit before `z` and `gamma` otherwise.
//! It equals `beta` at `y`, `gamma` at `z`, and `+inf` off `[y, z]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gain::GainSpec;
use crate::grid::Grid;
use crate::risk_mapping::RiskMapping;

/// Default slack for `h >= g` checks.
pub const TOL_DOM: f64 = 1e-9;

/// Finite-difference step for mappings without a closed-form derivative.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HParams {
    pub y: f64,
    pub z: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl HParams {
    pub fn new(y: f64, z: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&y) || !(0.0..=1.0).contains(&z) || y >= z {
            return Err(Error::InvalidArgument(format!("need 0 <= y < z <= 1, got y = {y}, z = {z}")));
        }
        if !(beta.is_finite() && gamma.is_finite() && beta >= 0.0 && gamma >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "payoff levels must be finite and nonnegative, got beta = {beta}, gamma = {gamma}"
            )));
        }
        Ok(Self { y, z, beta, gamma })
    }

    /// Payoffs within the `[0, g_bar + 2]` cap.
    pub fn within_caps(&self, g_bar: f64) -> bool {
        let cap = g_bar + 2.0;
        (0.0..=cap).contains(&self.beta) && (0.0..=cap).contains(&self.gamma)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.y, self.z)
    }

    fn lexicographic_key(&self) -> [f64; 4] {
        [self.y, self.z, self.beta, self.gamma]
    }

    /// `true` if `self` precedes `other` in `(y, z, beta, gamma)` order.
    pub fn lex_less(&self, other: &HParams) -> bool {
        self.lexicographic_key()
            .iter()
            .zip(other.lexicographic_key().iter())
            .find(|(a, b)| a != b)
            .is_some_and(|(a, b)| a < b)
    }
}

/// Probability that Brownian motion started at `x` hits `y` before `z`.
pub fn exit_prob(x: f64, y: f64, z: f64) -> Result<f64> {
    if y >= z || y.is_nan() || z.is_nan() {
        return Err(Error::InvalidArgument(format!("exit_prob needs y < z, got y = {y}, z = {z}")));
    }
    if !(y..=z).contains(&x) {
        return Err(Error::InvalidArgument(format!("x = {x} outside [{y}, {z}]")));
    }
    Ok(exit_prob_unchecked(x, y, z))
}

#[inline]
pub(crate) fn exit_prob_unchecked(x: f64, y: f64, z: f64) -> f64 {
    ((z - x) / (z - y)).clamp(0.0, 1.0)
}

/// `h^{y,z}_{beta,gamma}(x)`, `+inf` outside `[y, z]`.
#[inline]
pub fn h_eval(rm: &RiskMapping, hp: &HParams, x: f64) -> f64 {
    if x < hp.y || x > hp.z {
        f64::INFINITY
    } else if x == hp.y {
        hp.beta
    } else if x == hp.z {
        hp.gamma
    } else {
        rm.value(exit_prob_unchecked(x, hp.y, hp.z), hp.beta, hp.gamma)
    }
}

/// Derivative of `h` at `x` in `[y, z]`, one-sided at the endpoints.
pub fn h_deriv(rm: &RiskMapping, hp: &HParams, x: f64) -> Result<f64> {
    if !rm.is_differentiable() {
        return Err(Error::Unsupported(format!("h is not differentiable under the {} mapping", rm.name())));
    }
    if x < hp.y || x > hp.z {
        return Err(Error::InvalidArgument(format!("x = {x} outside [{}, {}]", hp.y, hp.z)));
    }
    let width = hp.z - hp.y;
    let p = exit_prob_unchecked(x, hp.y, hp.z);
    if let Some(dp) = rm.value_dp(p, hp.beta, hp.gamma) {
        return Ok(-dp / width);
    }
    let step = FD_STEP.min(0.25 * width);
    let f = |u: f64| rm.value(exit_prob_unchecked(u, hp.y, hp.z), hp.beta, hp.gamma);
    let d = if x - step < hp.y {
        (-3.0 * f(x) + 4.0 * f(x + step) - f(x + 2.0 * step)) / (2.0 * step)
    } else if x + step > hp.z {
        (3.0 * f(x) - 4.0 * f(x - step) + f(x - 2.0 * step)) / (2.0 * step)
    } else {
        (f(x + step) - f(x - step)) / (2.0 * step)
    };
    Ok(d)
}

/// Membership in the admissible set: full-interval functions, or one-sided
/// functions whose interior endpoint value exceeds `g_bar + 1`, all with
/// payoffs in `[0, g_bar + 2]`.
pub fn in_h(hp: &HParams, g_bar: f64) -> bool {
    if !hp.within_caps(g_bar) {
        return false;
    }
    let full = hp.y == 0.0 && hp.z == 1.0;
    let right_open = hp.y > 0.0 && hp.y < 1.0 && hp.z == 1.0 && hp.beta > g_bar + 1.0;
    let left_open = hp.y == 0.0 && hp.z > 0.0 && hp.z < 1.0 && hp.gamma > g_bar + 1.0;
    full || right_open || left_open
}

/// `h >= g - tol` at every sample `(x, g(x))`.
pub fn dominates_samples(rm: &RiskMapping, hp: &HParams, xs: &[f64], gs: &[f64], tol: f64) -> bool {
    xs.iter().zip(gs).all(|(&x, &g)| x < hp.y || x > hp.z || h_eval(rm, hp, x) >= g - tol)
}

/// `h >= g` on the grid, with slack [`TOL_DOM`].
pub fn dominates(rm: &RiskMapping, hp: &HParams, g: &GainSpec, grid: &Grid) -> bool {
    let gs = g.sample(grid);
    dominates_samples(rm, hp, grid.points(), &gs, TOL_DOM)
}
