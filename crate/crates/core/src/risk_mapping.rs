//! Law-invariant risk mappings evaluated on finitely supported laws.
//!
//! A risk mapping here is the reference mapping `law -> real` of a Markov
//! dynamic risk mapping. It must be normalised (`rho(0) = 0`), monotone and
//! translation invariant; [`check_axioms`] probes those three properties on
//! random laws. Time consistency is a property of the whole dynamic family
//! and is not checked: results of the solver are only meaningful for
//! time-consistent mappings.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities below this are treated as zero by the worst-case mapping.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteLaw {
    outcomes: Vec<f64>,
    probabilities: Vec<f64>,
}

impl DiscreteLaw {
    pub fn new(outcomes: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidArgument("law has no outcomes".into()));
        }
        if outcomes.len() != probabilities.len() {
            return Err(Error::InvalidArgument(format!(
                "{} outcomes but {} probabilities",
                outcomes.len(),
                probabilities.len()
            )));
        }
        if outcomes.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("outcomes must be finite".into()));
        }
        if probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidArgument("probabilities must be nonnegative".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidArgument(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { outcomes, probabilities })
    }

    pub fn point_mass(v: f64) -> Self {
        Self { outcomes: vec![v], probabilities: vec![1.0] }
    }

    /// Empirical law putting mass `1/n` on each sample.
    pub fn empirical(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("empirical law of zero samples".into()));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("samples must be finite".into()));
        }
        let w = 1.0 / samples.len() as f64;
        let probabilities = vec![w; samples.len()];
        Ok(Self { outcomes: samples, probabilities })
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.outcomes
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self { outcomes: self.outcomes.iter().map(|v| v + c).collect(), probabilities: self.probabilities.clone() }
    }
}

impl From<TwoPointLaw> for DiscreteLaw {
    fn from(law: TwoPointLaw) -> Self {
        Self { outcomes: vec![law.v_first, law.v_second], probabilities: vec![law.p_first, 1.0 - law.p_first] }
    }
}

/// Law of `v_first` with probability `p_first`, `v_second` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPointLaw {
    pub p_first: f64,
    pub v_first: f64,
    pub v_second: f64,
}

impl TwoPointLaw {
    pub fn new(p_first: f64, v_first: f64, v_second: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_first) {
            return Err(Error::InvalidArgument(format!("p_first = {p_first} outside [0, 1]")));
        }
        if !v_first.is_finite() || !v_second.is_finite() {
            return Err(Error::InvalidArgument("two-point outcomes must be finite".into()));
        }
        Ok(Self { p_first, v_first, v_second })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RiskKind {
    Linear,
    Entropic,
    WorstCase,
    Custom,
}

type LawFn = dyn Fn(&DiscreteLaw) -> f64 + Send + Sync;
type TwoPointFn = dyn Fn(f64, f64, f64) -> f64 + Send + Sync;

/// A law-invariant risk mapping. Immutable and cheap to clone.
#[derive(Clone)]
pub struct RiskMapping {
    kind: RiskKind,
    name: String,
    law_fn: Option<Arc<LawFn>>,
    dp_fn: Option<Arc<TwoPointFn>>,
}

impl fmt::Debug for RiskMapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RiskMapping")
            .field("kind", &self.kind)
            .field("name", &self.name)
            .field("two_point_derivative", &self.dp_fn.is_some())
            .finish()
    }
}

impl RiskMapping {
    /// `Z -> E[Z]`.
    pub fn linear() -> Self {
        Self { kind: RiskKind::Linear, name: "linear".into(), law_fn: None, dp_fn: None }
    }

    /// `Z -> -ln E[exp(-Z)]`.
    pub fn entropic() -> Self {
        Self { kind: RiskKind::Entropic, name: "entropic".into(), law_fn: None, dp_fn: None }
    }

    /// `Z -> ess inf Z`.
    pub fn worst_case() -> Self {
        Self { kind: RiskKind::WorstCase, name: "worst-case".into(), law_fn: None, dp_fn: None }
    }

    /// A user-supplied reference mapping. The solver treats it as continuous
    /// and differentiates it numerically unless [`Self::with_two_point_derivative`]
    /// is used.
    pub fn custom<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&DiscreteLaw) -> f64 + Send + Sync + 'static,
    {
        Self { kind: RiskKind::Custom, name: name.into(), law_fn: Some(Arc::new(f)), dp_fn: None }
    }

    /// Attach `d/dp rho(p, a, b)` for a custom mapping, where `p` is the
    /// probability of the first outcome `a`.
    pub fn with_two_point_derivative<F>(mut self, dp: F) -> Self
    where
        F: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        self.dp_fn = Some(Arc::new(dp));
        self
    }

    pub fn kind(&self) -> RiskKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Whether `x -> h(x)` is differentiable for this mapping.
    pub fn is_differentiable(&self) -> bool {
        self.kind != RiskKind::WorstCase
    }

    pub fn eval_two_point(&self, law: &TwoPointLaw) -> f64 {
        self.value(law.p_first, law.v_first, law.v_second)
    }

    /// Unchecked two-point evaluation used on hot paths; `p` in `[0, 1]`.
    #[inline]
    pub fn value(&self, p: f64, a: f64, b: f64) -> f64 {
        match self.kind {
            RiskKind::Linear => p * a + (1.0 - p) * b,
            RiskKind::Entropic => {
                let m = a.min(b);
                m - (p * (-(a - m)).exp() + (1.0 - p) * (-(b - m)).exp()).ln()
            }
            RiskKind::WorstCase => {
                let q = 1.0 - p;
                if p > SUPPORT_THRESHOLD && q > SUPPORT_THRESHOLD {
                    a.min(b)
                } else if p > SUPPORT_THRESHOLD {
                    a
                } else {
                    b
                }
            }
            RiskKind::Custom => {
                let law = DiscreteLaw { outcomes: vec![a, b], probabilities: vec![p, 1.0 - p] };
                (self.law_fn.as_ref().expect("custom mapping has a law function"))(&law)
            }
        }
    }

    pub fn eval_discrete(&self, law: &DiscreteLaw) -> f64 {
        let (vs, ps) = (&law.outcomes, &law.probabilities);
        match self.kind {
            RiskKind::Linear => vs.iter().zip(ps).map(|(v, p)| p * v).sum(),
            RiskKind::Entropic => {
                let m = vs.iter().copied().fold(f64::INFINITY, f64::min);
                let s: f64 = vs.iter().zip(ps).map(|(v, p)| p * (-(v - m)).exp()).sum();
                m - s.ln()
            }
            RiskKind::WorstCase => vs
                .iter()
                .zip(ps)
                .filter(|(_, p)| **p > SUPPORT_THRESHOLD)
                .map(|(v, _)| *v)
                .fold(f64::INFINITY, f64::min),
            RiskKind::Custom => (self.law_fn.as_ref().expect("custom mapping has a law function"))(law),
        }
    }

    /// `d/dp rho(p, a, b)` in closed form, when known.
    pub fn value_dp(&self, p: f64, a: f64, b: f64) -> Option<f64> {
        match self.kind {
            RiskKind::Linear => Some(a - b),
            RiskKind::Entropic => {
                let m = a.min(b);
                let (ea, eb) = ((-(a - m)).exp(), (-(b - m)).exp());
                Some(-(ea - eb) / (p * ea + (1.0 - p) * eb))
            }
            RiskKind::WorstCase => None,
            RiskKind::Custom => self.dp_fn.as_ref().map(|f| f(p, a, b)),
        }
    }

    /// Smallest `a` in `[0, cap]` with `rho(p, a, b) >= target`, or `None` if
    /// even `a = cap` falls short. Relies on monotonicity in `a`.
    pub fn min_first(&self, p: f64, b: f64, target: f64, cap: f64) -> Option<f64> {
        let a = match self.kind {
            RiskKind::Linear => {
                if p <= 0.0 {
                    return (b >= target).then_some(0.0);
                }
                (target - (1.0 - p) * b) / p
            }
            RiskKind::Entropic => {
                if p <= 0.0 {
                    return (b >= target).then_some(0.0);
                }
                let rest = 1.0 - (1.0 - p) * (target - b).exp();
                if rest <= 0.0 {
                    return None;
                }
                target - (rest / p).ln()
            }
            RiskKind::WorstCase => {
                let q = 1.0 - p;
                if p > SUPPORT_THRESHOLD && q > SUPPORT_THRESHOLD {
                    if b < target {
                        return None;
                    }
                    target
                } else if p > SUPPORT_THRESHOLD {
                    target
                } else {
                    return (b >= target).then_some(0.0);
                }
            }
            RiskKind::Custom => return self.bisect_first(p, b, target, cap),
        };
        if a > cap {
            None
        } else {
            Some(a.max(0.0))
        }
    }

    /// Mirror of [`Self::min_first`] for the second outcome.
    pub fn min_second(&self, p: f64, a: f64, target: f64, cap: f64) -> Option<f64> {
        self.min_first(1.0 - p, a, target, cap)
    }

    fn bisect_first(&self, p: f64, b: f64, target: f64, cap: f64) -> Option<f64> {
        if self.value(p, cap, b) < target {
            return None;
        }
        if self.value(p, 0.0, b) >= target {
            return Some(0.0);
        }
        let (mut lo, mut hi) = (0.0, cap);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.value(p, mid, b) >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axiom {
    Normalisation,
    Monotonicity,
    TranslationInvariance,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axiom::Normalisation => "normalisation",
            Axiom::Monotonicity => "monotonicity",
            Axiom::TranslationInvariance => "translation invariance",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomCheck {
    pub axiom: Axiom,
    pub passed: bool,
    pub trials: usize,
    /// First law on which the axiom failed.
    pub witness: Option<DiscreteLaw>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub mapping: String,
    pub checks: Vec<AxiomCheck>,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, axiom: Axiom) -> &AxiomCheck {
        self.checks.iter().find(|c| c.axiom == axiom).expect("every axiom is checked")
    }
}

fn random_law(rng: &mut ChaCha8Rng) -> DiscreteLaw {
    let n = rng.random_range(1..=6);
    let outcomes: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut probabilities: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let head: f64 = probabilities[..n - 1].iter().sum();
    probabilities[n - 1] = 1.0 - head;
    DiscreteLaw { outcomes, probabilities }
}

/// Randomised check of normalisation, monotonicity and translation invariance
/// over `trials` sampled laws. Deterministic for a given seed.
pub fn check_axioms(rm: &RiskMapping, trials: usize, seed: u64) -> Result<AxiomReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("check_axioms needs at least one trial".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = |scale: f64| 1e-10 * (1.0 + scale.abs());

    let mut normalisation = (None, String::new());
    let mut monotonicity = (None, String::new());
    let mut translation = (None, String::new());

    let v0 = rm.eval_discrete(&DiscreteLaw::point_mass(0.0));
    if v0.abs() > tol(0.0) {
        normalisation = (Some(DiscreteLaw::point_mass(0.0)), format!("rho(point mass at 0) = {v0}"));
    }

    for _ in 0..trials {
        let law = random_law(&mut rng);

        if normalisation.0.is_none() {
            // the same point mass at 0, split over several atoms
            let zero =
                DiscreteLaw { outcomes: vec![0.0; law.outcomes.len()], probabilities: law.probabilities.clone() };
            let v = rm.eval_discrete(&zero);
            if v.abs() > tol(0.0) {
                normalisation = (Some(zero), format!("rho(0) = {v}"));
            }
        }

        if monotonicity.0.is_none() {
            let upper = DiscreteLaw {
                outcomes: law
                    .outcomes
                    .iter()
                    .map(|v| if rng.random_bool(0.3) { *v } else { v + rng.random_range(0.0..2.0) })
                    .collect(),
                probabilities: law.probabilities.clone(),
            };
            let (lo, hi) = (rm.eval_discrete(&law), rm.eval_discrete(&upper));
            if lo.is_nan() || hi.is_nan() || lo > hi + tol(hi) {
                monotonicity = (
                    Some(law.clone()),
                    format!("rho(Y) = {lo} > rho(Z) = {hi} although Y <= Z outcome-wise (Z = {upper:?})"),
                );
            }
        }

        if translation.0.is_none() {
            let c = rng.random_range(-3.0..3.0);
            let (base, moved) = (rm.eval_discrete(&law), rm.eval_discrete(&law.shifted(c)));
            if (moved - base - c).abs() > tol(base) {
                translation = (Some(law.clone()), format!("rho(Z + {c}) = {moved} but rho(Z) + c = {}", base + c));
            }
        }
    }

    let to_check = |axiom, (witness, detail): (Option<DiscreteLaw>, String)| AxiomCheck {
        axiom,
        passed: witness.is_none(),
        trials,
        witness,
        detail,
    };
    Ok(AxiomReport {
        mapping: rm.name().to_string(),
        checks: vec![
            to_check(Axiom::Normalisation, normalisation),
            to_check(Axiom::Monotonicity, monotonicity),
            to_check(Axiom::TranslationInvariance, translation),
        ],
    })
}

/// Randomised probe of strong monotonicity on two-point laws: raising one
/// outcome that carries positive mass must strictly raise the value.
/// Returns the first counterexample found.
pub fn probe_strict_monotonicity(rm: &RiskMapping, trials: usize, seed: u64) -> Option<TwoPointLaw> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let p = rng.random_range(0.01..0.99);
        let a = rng.random_range(0.0..4.0);
        let b = rng.random_range(0.0..4.0);
        let bump = rng.random_range(0.01..1.0);
        let base = rm.value(p, a, b);
        if !(rm.value(p, a + bump, b) > base && rm.value(p, a, b + bump) > base) {
            return Some(TwoPointLaw { p_first: p, v_first: a, v_second: b });
        }
    }
    None
}
