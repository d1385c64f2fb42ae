//! Monte Carlo estimates of `rho(g(X_tau))` for hitting-type stopping rules.
//!
//! Paths are Euler walks `X += sqrt(dt) N(0, 1)` killed at the rule's exit
//! thresholds (which always include the absorbing ends 0 and 1). Each path
//! draws from its own ChaCha8 stream, so results do not depend on the rayon
//! schedule. The risk mapping is applied to the empirical law of the payoffs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gain::GainSpec;
use crate::grid::Grid;
use crate::risk_mapping::{DiscreteLaw, RiskMapping};
use crate::solver::Solution;

/// `C` in the discretisation allowance `C sqrt(dt)`; see [`bias_allowance`].
pub const BIAS_CONSTANT: f64 = 1.0;

/// Fraction of capped paths above which an estimate carries a horizon warning.
const HORIZON_WARN_FRACTION: f64 = 0.01;

pub fn bias_allowance(dt: f64) -> f64 {
    BIAS_CONSTANT * dt.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCConfig {
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub t_max: f64,
    /// Detect threshold crossings between steps via the Brownian-bridge
    /// hitting probability.
    pub brownian_bridge: bool,
    pub bootstrap_resamples: usize,
}

impl Default for MCConfig {
    fn default() -> Self {
        Self { dt: 1e-4, n_paths: 100_000, seed: 42, t_max: 50.0, brownian_bridge: true, bootstrap_resamples: 200 }
    }
}

impl MCConfig {
    fn validate(&self) -> Result<u64> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidArgument("n_paths must be at least 1".into()));
        }
        let steps = (self.t_max / self.dt).ceil();
        if !(self.t_max > 0.0 && steps < u64::MAX as f64) {
            return Err(Error::InvalidArgument(format!(
                "t_max = {} with dt = {} is out of range",
                self.t_max, self.dt
            )));
        }
        Ok(steps as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StoppingRule {
    /// Stop on first entry to the grid points flagged in `stopping_mask`.
    FirstEntryToSet {
        grid: Grid,
        stopping_mask: Vec<bool>,
    },
    /// Stop on leaving `(a, b)`.
    ExitInterval {
        a: f64,
        b: f64,
    },
    Immediate,
}

impl StoppingRule {
    pub fn exit_interval(a: f64, b: f64) -> Result<Self> {
        if !(0.0 <= a && a < b && b <= 1.0) {
            return Err(Error::InvalidArgument(format!("exit interval needs 0 <= a < b <= 1, got ({a}, {b})")));
        }
        Ok(Self::ExitInterval { a, b })
    }

    /// The interval whose exit realises the rule from `x0`, or `None` for
    /// stopping at once.
    fn interval_from(&self, x0: f64) -> Result<Option<(f64, f64)>> {
        match self {
            Self::Immediate => Ok(None),
            Self::ExitInterval { a, b } => Ok((*a < x0 && x0 < *b).then_some((*a, *b))),
            Self::FirstEntryToSet { grid, stopping_mask } => {
                if stopping_mask.len() != grid.len() {
                    return Err(Error::InvalidArgument(format!(
                        "stopping mask has {} entries for a {}-point grid",
                        stopping_mask.len(),
                        grid.len()
                    )));
                }
                let xs = grid.points();
                // nearest stopping points on either side of x0
                let lo = xs.iter().zip(stopping_mask).rev().find(|(&x, &s)| s && x <= x0).map(|(&x, _)| x);
                let hi = xs.iter().zip(stopping_mask).find(|(&x, &s)| s && x >= x0).map(|(&x, _)| x);
                let (lo, hi) = (lo.unwrap_or(0.0), hi.unwrap_or(1.0));
                Ok((lo < x0 && x0 < hi).then_some((lo, hi)))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_absorbed_by_cap: usize,
    /// More than 1% of paths hit the horizon cap.
    pub horizon_warning: bool,
}

/// Risk value of the empirical law of `outcomes`. Outcomes are sorted first,
/// so the result does not depend on their order.
pub fn empirical_value(rm: &RiskMapping, outcomes: &[f64]) -> Result<f64> {
    let mut sorted = outcomes.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(rm.eval_discrete(&DiscreteLaw::empirical(sorted)?))
}

/// Exit point of one path from `(a, b)`, and whether the horizon was hit.
fn run_path(x0: f64, a: f64, b: f64, max_steps: u64, cfg: &MCConfig, rng: &mut ChaCha8Rng) -> (f64, bool) {
    let sd = cfg.dt.sqrt();
    let mut x = x0;
    for _ in 0..max_steps {
        let z: f64 = rng.sample(StandardNormal);
        let next = x + sd * z;
        if next <= a {
            return (a, false);
        }
        if next >= b {
            return (b, false);
        }
        if cfg.brownian_bridge {
            let p_a = (-2.0 * (x - a) * (next - a) / cfg.dt).exp();
            let p_b = (-2.0 * (b - x) * (b - next) / cfg.dt).exp();
            let u: f64 = rng.random();
            if u < p_a {
                return (a, false);
            }
            if u < p_a + (1.0 - p_a) * p_b {
                return (b, false);
            }
        }
        x = next;
    }
    (x, true)
}

pub fn simulate_rule(
    rm: &RiskMapping,
    g: &GainSpec,
    rule: &StoppingRule,
    x0: f64,
    cfg: &MCConfig,
) -> Result<MCEstimate> {
    if !(0.0..=1.0).contains(&x0) {
        return Err(Error::InvalidArgument(format!("x0 = {x0} outside [0, 1]")));
    }
    let max_steps = cfg.validate()?;
    let Some((a, b)) = rule.interval_from(x0)? else {
        return Ok(MCEstimate { value: g.value(x0), std_error: 0.0, n_absorbed_by_cap: 0, horizon_warning: false });
    };

    let runs: Vec<(f64, bool)> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            run_path(x0, a, b, max_steps, cfg, &mut rng)
        })
        .collect();
    let outcomes: Vec<f64> = runs.iter().map(|(x, _)| g.value(*x)).collect();
    let n_absorbed_by_cap = runs.iter().filter(|r| r.1).count();
    let value = empirical_value(rm, &outcomes)?;
    let std_error = bootstrap_std_error(rm, &outcomes, cfg)?;
    Ok(MCEstimate {
        value,
        std_error,
        n_absorbed_by_cap,
        horizon_warning: n_absorbed_by_cap as f64 > HORIZON_WARN_FRACTION * cfg.n_paths as f64,
    })
}

fn bootstrap_std_error(rm: &RiskMapping, outcomes: &[f64], cfg: &MCConfig) -> Result<f64> {
    let n = outcomes.len();
    if n < 2 || cfg.bootstrap_resamples < 2 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(u64::MAX);
    let mut estimates = Vec::with_capacity(cfg.bootstrap_resamples);
    let mut resample = vec![0.0; n];
    for _ in 0..cfg.bootstrap_resamples {
        for slot in resample.iter_mut() {
            *slot = outcomes[rng.random_range(0..n)];
        }
        estimates.push(empirical_value(rm, &resample)?);
    }
    let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (estimates.len() - 1) as f64;
    Ok(var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckKind {
    /// `|estimate - V(x0)| <= 3 se + allowance`
    Optimal,
    /// `estimate <= V(x0) + 3 se + allowance`
    Suboptimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleCheck {
    pub name: String,
    pub kind: CheckKind,
    pub rule: StoppingRule,
    pub estimate: MCEstimate,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub x0: f64,
    pub value: f64,
    pub allowance: f64,
    pub checks: Vec<RuleCheck>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Checks that the solution's rule attains `V(x0)` and that three
/// perturbed rules do not beat it.
pub fn verify_solution(
    rm: &RiskMapping,
    g: &GainSpec,
    sol: &Solution,
    x0: f64,
    cfg: &MCConfig,
) -> Result<VerificationReport> {
    let value = sol.value_at(x0);
    let allowance = bias_allowance(cfg.dt);
    let component = sol.component_containing(x0);

    let optimal = match component {
        Some(c) => StoppingRule::exit_interval(c.x_minus, c.x_plus)?,
        None => StoppingRule::Immediate,
    };
    let shrunk = match component {
        Some(c) => StoppingRule::exit_interval(c.x_minus + 0.25 * (x0 - c.x_minus), c.x_plus - 0.25 * (c.x_plus - x0))?,
        None => StoppingRule::exit_interval((x0 - 0.1).max(0.0), (x0 + 0.1).min(1.0))?,
    };
    let rules = [
        ("optimal", CheckKind::Optimal, optimal),
        ("immediate", CheckKind::Suboptimal, StoppingRule::Immediate),
        ("shrunken", CheckKind::Suboptimal, shrunk),
        ("midpoints", CheckKind::Suboptimal, StoppingRule::exit_interval(0.5 * x0, 0.5 * (1.0 + x0))?),
    ];

    let mut checks = Vec::with_capacity(rules.len());
    for (name, kind, rule) in rules {
        let estimate = simulate_rule(rm, g, &rule, x0, cfg)?;
        let slack = 3.0 * estimate.std_error + allowance;
        let passed = match kind {
            CheckKind::Optimal => (estimate.value - value).abs() <= slack,
            CheckKind::Suboptimal => estimate.value <= value + slack,
        };
        checks.push(RuleCheck { name: name.to_string(), kind, rule, estimate, passed });
    }
    Ok(VerificationReport { x0, value, allowance, checks })
}
